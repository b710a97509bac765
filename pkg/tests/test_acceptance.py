"""End-to-end acceptance gate for the package.

Ten numbered tests, each printing one [PASS]/[FAIL] scoreboard line even
under captured output, so a plain ``pytest`` run shows the verdict per
criterion. Tolerances, grids, and runtime budgets are pinned here and are
not to be loosened; random seeds are frozen values that were checked to
leave a comfortable statistical margin before being committed.
"""

import math
import time
from contextlib import contextmanager

import numpy as np

from subspace_qkd import (
    ProtocolConfig,
    SpatialParams,
    SubspaceLayout,
    TemporalParams,
    asymptotic_rate_estimate,
    closed_form_guessing,
    compare_to_analytic,
    critical_visibility,
    dual_certificate,
    estimate_parameters,
    iso_keyrate_closed_form,
    isotropic_state,
    keyrate_from_state,
    noise_spatial,
    noise_temporal,
    primal_search,
    run_protocol,
    simulate_spatial,
    simulate_temporal,
)

# Frozen seeds: checked to give worst |z| = 1.97 (Monte Carlo) and 0.76
# (protocol) on their grids before committing, well inside the bounds.
MC_SEED = 2026
PROTOCOL_SEED = 1

# Three temporal regimes: visibilities at d=8 near 0.95 / 0.64 / 0.20.
TEMPORAL_NOISE_SETS = {
    "low": TemporalParams.symmetric(
        pair_rate=2e6, env_rate=2.4e6, dark_rate=1e3,
        loss=0.2, efficiency=0.8, bin_width=1e-9,
    ),
    "medium": TemporalParams.symmetric(
        pair_rate=8e5, env_rate=3.5e6, dark_rate=1e3,
        loss=0.5, efficiency=0.6, bin_width=1e-9,
    ),
    "high": TemporalParams.symmetric(
        pair_rate=3e5, env_rate=6e6, dark_rate=1e3,
        loss=0.5, efficiency=0.6, bin_width=1e-9,
    ),
}

# Reference spatial operating point: lossless arm A, 98.4% loss on arm B.
SPATIAL_REFERENCE = SpatialParams(
    pair_rate=2e5,
    env_rate_a=21000.0,
    env_rate_b=21000.0,
    dark_rate_a=600.0,
    dark_rate_b=600.0,
    loss_a=0.0,
    loss_b=0.984,
    efficiency_a=0.6,
    efficiency_b=0.6,
    window_width=1e-7,
)


def divisors(d):
    return [k for k in range(1, d + 1) if d % k == 0]


@contextmanager
def criterion(capsys, number, label):
    """Prints one scoreboard line for the enclosed checks."""
    try:
        yield
    except Exception:
        with capsys.disabled():
            print(f"[FAIL] acceptance {number:02d}: {label}", flush=True)
        raise
    with capsys.disabled():
        print(f"[PASS] acceptance {number:02d}: {label}", flush=True)


def test_01_dual_certificate_is_tight_and_primal_closes_gap(capsys):
    with criterion(capsys, 1, "dual certificate tight, primal gap <= 1e-3"):
        start = time.perf_counter()
        for k in (2, 3, 4, 5):
            for witness in np.linspace(0.55, 0.99, 12):
                witness = float(witness)
                closed = closed_form_guessing(witness, k)
                cert = dual_certificate(witness, k)
                assert cert.feasible
                assert cert.min_eigenvalue >= -1e-9
                assert abs(cert.dual_value - closed) <= 1e-9
                attack = primal_search(witness, k, restarts=2, seed=0)
                gap = cert.dual_value - attack.value
                assert -1e-9 <= gap <= 1e-3, (k, witness, gap)
        assert time.perf_counter() - start <= 120.0


def test_02_generic_path_matches_closed_form(capsys):
    with criterion(capsys, 2, "generic key-rate path matches closed form"):
        for d in range(1, 13):
            for k in divisors(d):
                layout = SubspaceLayout(d=d, k=k)
                for v in np.linspace(0.0, 1.0, 21):
                    v = float(v)
                    closed = iso_keyrate_closed_form(d, v, k)
                    report = keyrate_from_state(isotropic_state(d, v), layout)
                    assert abs(closed - report.total) <= 1e-9, (d, k, v)


def test_03_noiseless_rate_is_log2_of_block_size(capsys):
    with criterion(capsys, 3, "noiseless key rate equals log2(k)"):
        for d in range(1, 13):
            for k in divisors(d):
                rate = iso_keyrate_closed_form(d, 1.0, k)
                assert abs(rate - math.log2(k)) <= 1e-12, (d, k, rate)


def test_04_critical_visibility_matches_linear_fit(capsys):
    with criterion(capsys, 4, "pair-block visibility threshold ~ 1/(1+0.0893 d)"):
        for d in (2, 4, 8, 16):
            root = critical_visibility(d, 2)
            fit = 1.0 / (1.0 + 0.0893 * d)
            assert abs(root - fit) / fit <= 0.01, (d, root, fit)


def test_05_temporal_monte_carlo_matches_analytics(capsys):
    with criterion(capsys, 5, "temporal Monte Carlo within 4 sigma"):
        start = time.perf_counter()
        for params in TEMPORAL_NOISE_SETS.values():
            derived = noise_temporal.derive_constants(params)
            for d in (2, 8, 32):
                analytic_p = noise_temporal.coincidence_probability(
                    d, derived, params.bin_width
                )
                analytic_v = noise_temporal.visibility(
                    d, derived, params.bin_width
                )
                post, matched = simulate_temporal(params, d, 1_000_000, MC_SEED)
                assert compare_to_analytic(analytic_p, post, 4.0).passed
                assert compare_to_analytic(analytic_v, matched, 4.0).passed
        assert time.perf_counter() - start <= 300.0


def test_06_spatial_monte_carlo_matches_analytics(capsys):
    with criterion(capsys, 6, "spatial Monte Carlo within 4 sigma"):
        start = time.perf_counter()
        derived = noise_spatial.derive_constants(SPATIAL_REFERENCE)
        for d in (4, 16):
            analytic_p = noise_spatial.coincidence_probability(d, derived)
            analytic_v = noise_spatial.visibility(
                d, derived, SPATIAL_REFERENCE.window_width
            )
            post, matched = simulate_spatial(
                SPATIAL_REFERENCE, d, 10_000_000, MC_SEED
            )
            assert compare_to_analytic(analytic_p, post, 4.0).passed
            assert compare_to_analytic(analytic_v, matched, 4.0).passed
        assert time.perf_counter() - start <= 600.0


def test_07_nested_sums_match_closed_form_click_statistics(capsys):
    with criterion(capsys, 7, "nested click sums match closed forms"):
        rng = np.random.default_rng(7)
        for _ in range(100):
            loss_a, loss_b = rng.uniform(0.0, 0.95, size=2)
            eff_a, eff_b = rng.uniform(0.05, 1.0, size=2)
            params = SpatialParams(
                pair_rate=2e5,
                env_rate_a=1e4,
                env_rate_b=1e4,
                dark_rate_a=500.0,
                dark_rate_b=500.0,
                loss_a=float(loss_a),
                loss_b=float(loss_b),
                efficiency_a=float(eff_a),
                efficiency_b=float(eff_b),
                window_width=1e-7,
            )
            for j in range(7):
                for d in range(1, 9):
                    ev = noise_spatial.event_probabilities(j, d, params)
                    pairs = (
                        (ev.no_click_a,
                         noise_spatial.nested_no_click(j, loss_a, eff_a)),
                        (ev.no_click_b,
                         noise_spatial.nested_no_click(j, loss_b, eff_b)),
                        (ev.single_click_a,
                         noise_spatial.nested_single_click(
                             j, d, loss_a, eff_a)),
                        (ev.single_click_b,
                         noise_spatial.nested_single_click(
                             j, d, loss_b, eff_b)),
                        (ev.same_detector,
                         noise_spatial.nested_same_detector(
                             j, d, loss_a, loss_b, eff_a, eff_b)),
                        (ev.different_detector,
                         noise_spatial.nested_different_detector(
                             j, d, loss_a, loss_b, eff_a, eff_b)),
                    )
                    for closed, nested in pairs:
                        assert abs(closed - nested) <= 1e-10, (j, d)


def test_08_subspace_encoding_beats_full_encoding_at_high_dimension(capsys):
    with criterion(capsys, 8, "intermediate block size wins at high dimension"):
        def rate(d, k):
            return noise_spatial.secret_bits_per_second(d, k, SPATIAL_REFERENCE)

        # full encoding decays with dimension once loss bites
        full = {d: rate(d, d) for d in (4, 8, 16, 32, 64)}
        assert full[4] > full[8] > full[16]
        assert full[16] >= full[32] >= full[64]

        # a strictly interior block size is optimal at d = 8
        by_block = {k: rate(8, k) for k in divisors(8)}
        best = max(by_block, key=by_block.get)
        assert 2 < best < 8, by_block
        assert by_block[best] > by_block[2] and by_block[best] > by_block[8]

        # splitting strictly beats full encoding for every large dimension
        for d in (16, 32, 64):
            interior = max(rate(d, k) for k in divisors(d) if k < d)
            assert interior > rate(d, d), d


def _zero_rate_noise_endpoint(d, k):
    """Noise-to-signal ratio where the clamped rate first hits zero.

    Bisects on the uncorrelated-click rate with the correlated-pair rate
    held fixed, which sweeps the noise-to-signal ratio monotonically.
    """
    pair_rate = 1e5
    bin_width = 1e-9

    def signed_rate(env_rate):
        params = TemporalParams.symmetric(
            pair_rate=pair_rate, env_rate=env_rate, dark_rate=0.0,
            loss=0.0, efficiency=1.0, bin_width=bin_width,
        )
        derived = noise_temporal.derive_constants(params)
        v = noise_temporal.visibility(d, derived, bin_width)
        return iso_keyrate_closed_form(d, v, k), derived

    low, high = 0.0, 1e12
    assert signed_rate(low)[0] > 0.0 and signed_rate(high)[0] <= 0.0
    for _ in range(100):
        mid = 0.5 * (low + high)
        if signed_rate(mid)[0] > 0.0:
            low = mid
        else:
            high = mid
    _, derived = signed_rate(0.5 * (low + high))
    return noise_temporal.noise_to_signal(derived)


def test_09_pair_blocks_tolerate_the_most_noise(capsys):
    with criterion(capsys, 9, "pair blocks give the best, d-independent endpoint"):
        endpoints = {
            d: {k: _zero_rate_noise_endpoint(d, k)
                for k in divisors(d) if k >= 2}
            for d in (2, 4, 8)
        }
        for d, table in endpoints.items():
            for k, endpoint in table.items():
                if k > 2:
                    assert table[2] > endpoint + 1e-4, (d, k)
        pair_endpoints = [table[2] for table in endpoints.values()]
        assert max(pair_endpoints) - min(pair_endpoints) <= 1e-3
        # frozen from an independent bisection run
        assert abs(pair_endpoints[0] - 0.9676229478140623) <= 1e-5


def test_10_protocol_estimates_converge_on_the_analytic_rate(capsys):
    with criterion(capsys, 10, "finite-round estimates bracket the true rate"):
        d, k, v = 8, 2, 0.6
        layout = SubspaceLayout(d=d, k=k)
        config = ProtocolConfig(
            layout=layout, epsilon=0.1, n_rounds=1_000_000, seed=PROTOCOL_SEED
        )
        records = run_protocol(isotropic_state(d, v), config)
        estimates = estimate_parameters(records, layout)

        expected_witness = (v * d + 1.0 - v) / (v * d + k - v * k)
        for block in estimates.blocks:
            assert block.defined
            deviation = abs(block.witness - expected_witness)
            assert deviation <= 3.0 * block.witness_stderr, block.block

        band = asymptotic_rate_estimate(estimates)
        closed = iso_keyrate_closed_form(d, v, k)
        assert band.lower <= closed <= band.upper
