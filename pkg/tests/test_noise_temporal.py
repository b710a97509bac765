"""Tests for the time-bin noise model: derived rates, visibility, throughput."""

import math
import warnings

import numpy as np
import pytest

from subspace_qkd.keyrate import critical_visibility
from subspace_qkd.noise_temporal import (
    MultiphotonCheck,
    TemporalDerived,
    TemporalParams,
    coincidence_probability,
    derive_constants,
    frame_rate,
    noise_to_signal,
    optimal_frame_duration,
    pair_success_probability,
    secret_bits_per_second,
    single_pair_coincidence_probability,
    single_pair_success_probability,
    single_pair_visibility,
    validate_multiphoton_assumption,
    visibility,
)

BIN = 1e-9

LOW_NOISE = TemporalParams.symmetric(
    pair_rate=2e6, env_rate=2.4e6, dark_rate=1e3, loss=0.2, efficiency=0.8, bin_width=BIN
)
MEDIUM_NOISE = TemporalParams.symmetric(
    pair_rate=8e5, env_rate=3.5e6, dark_rate=1e3, loss=0.5, efficiency=0.6, bin_width=BIN
)
HIGH_NOISE = TemporalParams.symmetric(
    pair_rate=3e5, env_rate=6.0e6, dark_rate=1e3, loss=0.5, efficiency=0.6, bin_width=BIN
)
ASYMMETRIC = TemporalParams(
    pair_rate=5e5,
    env_rate_a=1e6,
    env_rate_b=2e6,
    dark_rate_a=500.0,
    dark_rate_b=1500.0,
    loss_a=0.1,
    loss_b=0.3,
    efficiency_a=0.9,
    efficiency_b=0.7,
    bin_width=BIN,
)
NOISELESS = TemporalParams.symmetric(
    pair_rate=1e5, env_rate=0.0, dark_rate=0.0, loss=0.0, efficiency=1.0, bin_width=BIN
)


class TestTemporalParams:
    def test_symmetric_mirrors_both_sides(self):
        p = LOW_NOISE
        assert p.env_rate_a == p.env_rate_b == 2.4e6
        assert p.loss_a == p.loss_b == 0.2
        assert p.efficiency_a == p.efficiency_b == 0.8

    @pytest.mark.parametrize(
        "field,value",
        [("pair_rate", -1.0), ("env_rate_b", -0.5), ("dark_rate_a", -1e-9)],
    )
    def test_negative_rate_rejected(self, field, value):
        kwargs = dict(
            pair_rate=1e5,
            env_rate_a=0.0,
            env_rate_b=0.0,
            dark_rate_a=0.0,
            dark_rate_b=0.0,
            loss_a=0.0,
            loss_b=0.0,
            efficiency_a=1.0,
            efficiency_b=1.0,
            bin_width=BIN,
        )
        kwargs[field] = value
        with pytest.raises(ValueError):
            TemporalParams(**kwargs)

    @pytest.mark.parametrize("field,value", [("loss_a", 1.2), ("efficiency_b", -0.1)])
    def test_probability_out_of_range_rejected(self, field, value):
        kwargs = dict(
            pair_rate=1e5,
            env_rate_a=0.0,
            env_rate_b=0.0,
            dark_rate_a=0.0,
            dark_rate_b=0.0,
            loss_a=0.0,
            loss_b=0.0,
            efficiency_a=1.0,
            efficiency_b=1.0,
            bin_width=BIN,
        )
        kwargs[field] = value
        with pytest.raises(ValueError):
            TemporalParams(**kwargs)

    def test_nonpositive_bin_width_rejected(self):
        with pytest.raises(ValueError):
            TemporalParams.symmetric(1e5, 0.0, 0.0, 0.0, 1.0, bin_width=0.0)


class TestDeriveConstants:
    def test_perfect_detection_no_loss(self):
        params = TemporalParams.symmetric(
            pair_rate=1e5, env_rate=2e3, dark_rate=50.0, loss=0.0, efficiency=1.0, bin_width=BIN
        )
        derived = derive_constants(params)
        assert derived.fail_a == 0.0
        assert derived.fail_b == 0.0
        assert derived.background_rate_a == 2050.0
        assert derived.single_rate_a == 2050.0
        assert derived.pair_click_rate == 1e5

    def test_dead_detectors_kill_pair_rate(self):
        params = TemporalParams.symmetric(
            pair_rate=1e5, env_rate=2e3, dark_rate=50.0, loss=0.0, efficiency=0.0, bin_width=BIN
        )
        derived = derive_constants(params)
        assert derived.pair_click_rate == 0.0
        assert derived.fail_a == 1.0

    def test_failure_probability_known_value(self):
        params = TemporalParams.symmetric(
            pair_rate=1e5, env_rate=0.0, dark_rate=0.0, loss=0.984, efficiency=0.6, bin_width=BIN
        )
        derived = derive_constants(params)
        assert derived.fail_a == pytest.approx(0.9904, abs=1e-12)

    def test_low_noise_rates(self):
        derived = derive_constants(LOW_NOISE)
        assert derived.single_rate_a == pytest.approx(2381800.0, rel=1e-12)
        assert derived.single_rate_b == pytest.approx(2381800.0, rel=1e-12)
        assert derived.pair_click_rate == pytest.approx(819200.0, rel=1e-12)

    def test_asymmetric_rates(self):
        derived = derive_constants(ASYMMETRIC)
        assert derived.fail_a == pytest.approx(0.19, rel=1e-12)
        assert derived.fail_b == pytest.approx(0.51, rel=1e-12)
        assert derived.background_rate_a == pytest.approx(900500.0, rel=1e-12)
        assert derived.background_rate_b == pytest.approx(1401500.0, rel=1e-12)
        assert derived.single_rate_a == pytest.approx(1107050.0, rel=1e-12)
        assert derived.single_rate_b == pytest.approx(1448050.0, rel=1e-12)
        assert derived.pair_click_rate == pytest.approx(198450.0, rel=1e-12)

    def test_derived_validation(self):
        with pytest.raises(ValueError):
            TemporalDerived(
                fail_a=1.5,
                fail_b=0.0,
                background_rate_a=0.0,
                background_rate_b=0.0,
                single_rate_a=0.0,
                single_rate_b=0.0,
                pair_click_rate=0.0,
            )
        with pytest.raises(ValueError):
            TemporalDerived(
                fail_a=0.0,
                fail_b=0.0,
                background_rate_a=0.0,
                background_rate_b=0.0,
                single_rate_a=-1.0,
                single_rate_b=0.0,
                pair_click_rate=0.0,
            )


class TestVisibility:
    def test_no_uncorrelated_clicks(self):
        derived = derive_constants(NOISELESS)
        assert visibility(8, derived, BIN) == 1.0

    def test_algebraic_midpoint(self):
        derived = TemporalDerived(
            fail_a=0.5,
            fail_b=0.5,
            background_rate_a=1.0,
            background_rate_b=1.0,
            single_rate_a=1.0,
            single_rate_b=1.0,
            pair_click_rate=1.0,
        )
        assert visibility(1, derived, 1.0) == 0.5

    @pytest.mark.parametrize(
        "params,d,expected",
        [
            (LOW_NOISE, 2, 0.9863391753548021),
            (LOW_NOISE, 8, 0.9475079552740167),
            (LOW_NOISE, 32, 0.818598265049279),
            (MEDIUM_NOISE, 8, 0.6361160844001648),
            (HIGH_NOISE, 32, 0.059133151106278765),
            (ASYMMETRIC, 8, 0.9392993029836586),
        ],
    )
    def test_known_values(self, params, d, expected):
        derived = derive_constants(params)
        assert visibility(d, derived, BIN) == pytest.approx(expected, rel=1e-12)

    def test_zero_pair_rate_raises(self):
        params = TemporalParams.symmetric(
            pair_rate=0.0, env_rate=1e6, dark_rate=1e3, loss=0.2, efficiency=0.8, bin_width=BIN
        )
        with pytest.raises(ValueError):
            visibility(4, derive_constants(params), BIN)

    def test_strictly_decreasing_in_dimension(self):
        derived = derive_constants(LOW_NOISE)
        values = [visibility(d, derived, BIN) for d in (1, 2, 4, 8, 16, 32, 64)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_invalid_dimension(self):
        with pytest.raises(ValueError):
            visibility(0, derive_constants(LOW_NOISE), BIN)


class TestFrameRate:
    def test_silent_link_never_coincides(self):
        derived = TemporalDerived(
            fail_a=1.0,
            fail_b=1.0,
            background_rate_a=0.0,
            background_rate_b=0.0,
            single_rate_a=0.0,
            single_rate_b=0.0,
            pair_click_rate=0.0,
        )
        assert frame_rate(8, derived, BIN) == 0.0

    @pytest.mark.parametrize(
        "params,d,expected",
        [
            (LOW_NOISE, 2, 821323.9788917628),
            (LOW_NOISE, 32, 837013.7420909),
            (MEDIUM_NOISE, 8, 109088.59264573718),
            (HIGH_NOISE, 2, 53063.45921641147),
            (ASYMMETRIC, 8, 206671.3567924139),
        ],
    )
    def test_known_values(self, params, d, expected):
        derived = derive_constants(params)
        assert frame_rate(d, derived, BIN) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize(
        "params,d,expected",
        [
            (LOW_NOISE, 2, 0.0016426479577835258),
            (LOW_NOISE, 8, 0.006614551950856655),
            (MEDIUM_NOISE, 32, 0.0065368475012733684),
            (HIGH_NOISE, 8, 0.0010137542312430952),
            (ASYMMETRIC, 8, 0.0016533708543393112),
        ],
    )
    def test_coincidence_probability_known_values(self, params, d, expected):
        derived = derive_constants(params)
        assert coincidence_probability(d, derived, BIN) == pytest.approx(
            expected, rel=1e-12
        )

    def test_coincidence_is_rate_times_frame(self):
        derived = derive_constants(MEDIUM_NOISE)
        for d in (1, 2, 8, 32):
            assert coincidence_probability(d, derived, BIN) == pytest.approx(
                frame_rate(d, derived, BIN) * d * BIN, rel=1e-14
            )

    def test_rate_vanishes_for_huge_frames(self):
        derived = derive_constants(LOW_NOISE)
        assert frame_rate(1024, derived, BIN) > 0.0
        assert frame_rate(100_000, derived, BIN) < 1e-200

    def test_success_probability_peaks_at_inverse_total_rate(self):
        derived = derive_constants(LOW_NOISE)
        best = optimal_frame_duration(derived)
        assert best == pytest.approx(1.7912158773375366e-07, rel=1e-12)
        peak = pair_success_probability(1, derived, best)
        assert peak == pytest.approx(0.05398130655005475, rel=1e-12)
        for wobble in (0.99, 1.01):
            assert pair_success_probability(1, derived, best * wobble) < peak

    def test_optimal_frame_requires_clicks(self):
        derived = TemporalDerived(
            fail_a=1.0,
            fail_b=1.0,
            background_rate_a=0.0,
            background_rate_b=0.0,
            single_rate_a=0.0,
            single_rate_b=0.0,
            pair_click_rate=0.0,
        )
        with pytest.raises(ValueError):
            optimal_frame_duration(derived)


class TestSecretBitsPerSecond:
    def test_noiseless_throughput(self):
        expected = 1e5 * math.exp(-8 * BIN * 1e5)
        assert secret_bits_per_second(8, 2, NOISELESS) == pytest.approx(
            expected, rel=1e-12
        )

    def test_noiseless_scales_with_log_block_size(self):
        base = secret_bits_per_second(8, 2, NOISELESS)
        assert secret_bits_per_second(8, 8, NOISELESS) == pytest.approx(
            3.0 * base, rel=1e-12
        )

    def test_below_critical_visibility_clamps_to_zero(self):
        derived = derive_constants(HIGH_NOISE)
        assert visibility(2, derived, BIN) < critical_visibility(2, 2)
        assert secret_bits_per_second(2, 2, HIGH_NOISE) == 0.0

    def test_unclamped_rate_goes_negative_below_critical(self):
        assert secret_bits_per_second(2, 2, HIGH_NOISE, clamp=False) < 0.0

    def test_positive_above_critical(self):
        assert secret_bits_per_second(2, 2, LOW_NOISE) > 0.0


class TestNoiseToSignal:
    def test_zero_noise(self):
        derived = derive_constants(NOISELESS)
        assert noise_to_signal(derived) == 0.0

    def test_equal_rates_give_half(self):
        derived = TemporalDerived(
            fail_a=0.5,
            fail_b=0.5,
            background_rate_a=1e3,
            background_rate_b=1e3,
            single_rate_a=1e3,
            single_rate_b=1e3,
            pair_click_rate=1e3,
        )
        assert noise_to_signal(derived) == 0.5

    def test_symmetric_input_does_not_warn(self):
        derived = derive_constants(LOW_NOISE)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            ratio = noise_to_signal(derived)
        assert 0.0 < ratio < 1.0

    def test_asymmetric_input_warns_and_uses_larger_rate(self):
        derived = derive_constants(ASYMMETRIC)
        with pytest.warns(UserWarning):
            ratio = noise_to_signal(derived)
        assert ratio == pytest.approx(0.8794716064378986, rel=1e-12)

    def test_monotone_in_environment_rate(self):
        ratios = []
        for env in np.linspace(0.0, 5e6, 12):
            params = TemporalParams.symmetric(
                pair_rate=1e5, env_rate=env, dark_rate=0.0, loss=0.0, efficiency=1.0, bin_width=BIN
            )
            ratios.append(noise_to_signal(derive_constants(params)))
        assert all(a < b for a, b in zip(ratios, ratios[1:]))


class TestMultiphotonAssumption:
    def test_boundary_mean_fails(self):
        params = TemporalParams.symmetric(
            pair_rate=2e8, env_rate=0.0, dark_rate=0.0, loss=0.0, efficiency=1.0, bin_width=BIN
        )
        check = validate_multiphoton_assumption(params, 1)
        assert isinstance(check, MultiphotonCheck)
        assert check.mean_pairs == pytest.approx(0.2, rel=1e-15)
        assert check.multi_pair_probability == pytest.approx(
            0.017523096306421904, rel=1e-12
        )
        assert not check.passed

    def test_half_boundary_passes(self):
        params = TemporalParams.symmetric(
            pair_rate=1e8, env_rate=0.0, dark_rate=0.0, loss=0.0, efficiency=1.0, bin_width=BIN
        )
        check = validate_multiphoton_assumption(params, 1)
        assert check.multi_pair_probability == pytest.approx(
            0.004678840160444397, rel=1e-12
        )
        assert check.passed

    def test_zero_rate(self):
        params = TemporalParams.symmetric(
            pair_rate=0.0, env_rate=0.0, dark_rate=0.0, loss=0.0, efficiency=1.0, bin_width=BIN
        )
        check = validate_multiphoton_assumption(params, 32)
        assert check.mean_pairs == 0.0
        assert check.multi_pair_probability == 0.0
        assert check.passed

    def test_validation_sets_pass(self):
        for params in (LOW_NOISE, MEDIUM_NOISE, HIGH_NOISE):
            assert validate_multiphoton_assumption(params, 32).passed


class TestSinglePairApproximation:
    def test_matches_exact_with_no_pairs(self):
        params = TemporalParams.symmetric(
            pair_rate=0.0, env_rate=2.4e6, dark_rate=1e3, loss=0.2, efficiency=0.8, bin_width=BIN
        )
        derived = derive_constants(params)
        assert single_pair_coincidence_probability(8, params) == pytest.approx(
            coincidence_probability(8, derived, BIN), rel=1e-14
        )

    def test_close_to_exact_when_pairs_are_rare(self):
        derived = derive_constants(LOW_NOISE)
        exact = coincidence_probability(2, derived, BIN)
        approx = single_pair_coincidence_probability(2, LOW_NOISE)
        assert abs(approx - exact) / exact < 2e-3
        exact_v = visibility(2, derived, BIN)
        approx_v = single_pair_visibility(2, LOW_NOISE)
        assert abs(approx_v - exact_v) / exact_v < 1e-3

    def test_error_grows_with_pairs_per_frame(self):
        derived = derive_constants(LOW_NOISE)

        def rel_err(d):
            exact = coincidence_probability(d, derived, BIN)
            return abs(single_pair_coincidence_probability(d, LOW_NOISE) - exact) / exact

        assert rel_err(2) < rel_err(32)

    def test_visibility_is_success_over_coincidence(self):
        ratio = single_pair_success_probability(8, LOW_NOISE) / (
            single_pair_coincidence_probability(8, LOW_NOISE)
        )
        assert single_pair_visibility(8, LOW_NOISE) == pytest.approx(ratio, rel=1e-12)

    def test_no_click_sources_raises(self):
        params = TemporalParams.symmetric(
            pair_rate=0.0, env_rate=0.0, dark_rate=0.0, loss=0.0, efficiency=1.0, bin_width=BIN
        )
        with pytest.raises(ValueError):
            single_pair_visibility(4, params)


class TestLargeFrameScaling:
    def test_visibility_quarters_when_dimension_doubles(self):
        # keep pairs per frame fixed by scaling the pair rate with 1/d
        def coupled_visibility(d):
            params = TemporalParams.symmetric(
                pair_rate=1e5 * 2.0 / d,
                env_rate=2e6,
                dark_rate=1e3,
                loss=0.2,
                efficiency=0.8,
                bin_width=BIN,
            )
            return visibility(d, derive_constants(params), BIN)

        for d in (256, 512):
            ratio = coupled_visibility(2 * d) / coupled_visibility(d)
            assert abs(ratio - 0.25) / 0.25 < 0.05
