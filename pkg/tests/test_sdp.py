"""Tests for the guessing-probability certification: witness, dual, primal."""

import math

import numpy as np
import pytest

from subspace_qkd.quantum import maximally_entangled_state
from subspace_qkd.sdp import (
    DualCertificate,
    PrimalAttack,
    WitnessOperator,
    build_witness_operator,
    closed_form_guessing,
    dual_certificate,
    eigenvalue_formula_check,
    primal_search,
    slack_eigenvalue_pair,
)

GRID_WITNESS = np.linspace(0.55, 0.99, 12)
GRID_K = (2, 3, 4, 5)


class TestBuildWitnessOperator:
    def test_one_dimensional_block(self):
        op = build_witness_operator(1)
        assert op.matrix.shape == (1, 1)
        assert op.matrix[0, 0] == pytest.approx(1.0, abs=1e-15)

    def test_rank_two_projector(self):
        op = build_witness_operator(2)
        eigenvalues = np.linalg.eigvalsh(op.matrix)
        assert np.allclose(eigenvalues, [0.0, 0.0, 1.0, 1.0], atol=1e-12)
        assert np.trace(op.matrix).real == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("k", GRID_K)
    def test_entangled_state_saturates(self, k):
        op = build_witness_operator(k)
        psi = maximally_entangled_state(k)
        assert psi.conj() @ op.matrix @ psi == pytest.approx(1.0, abs=1e-12)

    def test_invalid_dimension_rejected(self):
        with pytest.raises(ValueError):
            build_witness_operator(0)

    def test_non_projector_matrix_rejected(self):
        with pytest.raises(ValueError):
            WitnessOperator(k=2, matrix=np.eye(4) * 0.5)

    def test_non_hermitian_matrix_rejected(self):
        matrix = np.zeros((4, 4), dtype=complex)
        matrix[0, 1] = 1.0
        with pytest.raises(ValueError):
            WitnessOperator(k=2, matrix=matrix)


class TestClosedFormGuessing:
    @pytest.mark.parametrize("k", (1, 2, 3, 4, 5, 6))
    def test_perfect_witness_gives_uniform_guessing(self, k):
        assert closed_form_guessing(1.0, k) == pytest.approx(1.0 / k, abs=1e-15)

    @pytest.mark.parametrize("k", (2, 3, 4, 5))
    def test_trivial_witness_gives_certain_guessing(self, k):
        assert closed_form_guessing(1.0 / k, k) == pytest.approx(1.0, abs=1e-14)

    def test_known_value(self):
        assert closed_form_guessing(0.9, 2) == pytest.approx(0.8, abs=1e-14)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            closed_form_guessing(-0.1, 2)
        with pytest.raises(ValueError):
            closed_form_guessing(1.1, 2)
        with pytest.raises(ValueError):
            closed_form_guessing(0.5, 0)

    def test_continuous_at_endpoints(self):
        for k in (2, 3):
            low = 1.0 / k
            assert closed_form_guessing(low + 1e-8, k) == pytest.approx(
                1.0, abs=1e-3
            )
            assert closed_form_guessing(1.0 - 1e-8, k) == pytest.approx(
                1.0 / k, abs=1e-3
            )


class TestDualCertificate:
    def test_known_point(self):
        cert = dual_certificate(0.9, 2)
        assert cert.slope == pytest.approx(-4.0 / 3.0, abs=1e-12)
        assert cert.offset == pytest.approx(2.0, abs=1e-12)
        assert cert.dual_value == pytest.approx(0.8, abs=1e-12)
        assert cert.min_eigenvalue >= -1e-9
        assert cert.feasible
        assert not cert.endpoint_limit

    def test_perfect_witness_endpoint(self):
        cert = dual_certificate(1.0, 3)
        assert cert.endpoint_limit
        assert cert.dual_value == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert math.isnan(cert.slope)
        assert cert.feasible

    def test_trivial_witness_endpoint(self):
        cert = dual_certificate(1.0 / 3.0, 3)
        assert cert.endpoint_limit
        assert cert.dual_value == 1.0

    def test_one_dimensional_block(self):
        cert = dual_certificate(1.0, 1)
        assert cert.endpoint_limit
        assert cert.dual_value == 1.0

    def test_near_endpoint_matches_closed_form(self):
        # the closed form has a square-root cusp at witness 1, so 1e-6 away
        # it sits ~9.4e-4 above the endpoint value; the certificate must
        # match the closed form, not the endpoint
        cert = dual_certificate(1.0 - 1e-6, 3)
        assert not cert.endpoint_limit
        assert cert.dual_value == pytest.approx(
            closed_form_guessing(1.0 - 1e-6, 3), abs=1e-12
        )
        assert cert.dual_value == pytest.approx(1.0 / 3.0, abs=1e-3)
        assert cert.feasible

    @pytest.mark.parametrize("k", GRID_K)
    def test_feasible_on_grid(self, k):
        for witness in GRID_WITNESS:
            cert = dual_certificate(float(witness), k)
            assert cert.min_eigenvalue >= -1e-9, (k, witness, cert.min_eigenvalue)
            assert cert.dual_value == pytest.approx(
                closed_form_guessing(float(witness), k), abs=1e-9
            )

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            dual_certificate(0.4, 2)
        with pytest.raises(ValueError):
            dual_certificate(1.0 + 1e-9, 2)

    def test_float_dust_snaps_to_endpoint(self):
        assert dual_certificate(1.0 / 3.0 - 1e-13, 3).endpoint_limit
        assert dual_certificate(1.0 + 1e-13, 2).endpoint_limit


class TestSlackSpectrum:
    def test_zero_slope_spectrum(self):
        lam_minus, lam_plus = slack_eigenvalue_pair(0.0, 3)
        assert lam_minus == -1.0
        assert lam_plus == 0.0
        assert eigenvalue_formula_check(0.0, 3) < 1e-12

    def test_unit_slope_pair(self):
        lam_minus, lam_plus = slack_eigenvalue_pair(1.0, 2)
        assert lam_plus == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)
        assert lam_minus == pytest.approx(-1.0 / math.sqrt(2.0), abs=1e-15)
        assert eigenvalue_formula_check(1.0, 2) < 1e-12

    def test_random_slopes_match_numerics(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            slope = float(rng.uniform(-3.0, 3.0))
            k = int(rng.integers(2, 6))
            assert eigenvalue_formula_check(slope, k) <= 1e-9

    def test_dual_offset_neutralizes_lowest_eigenvalue(self):
        # the certificate's offset is exactly -lambda_minus, pinning the
        # slack operator's smallest eigenvalue at zero
        cert = dual_certificate(0.7, 4)
        lam_minus, _ = slack_eigenvalue_pair(cert.slope, 4)
        assert cert.offset == pytest.approx(-lam_minus, abs=1e-12)

    def test_single_mode_rejected(self):
        with pytest.raises(ValueError):
            slack_eigenvalue_pair(1.0, 1)
        with pytest.raises(ValueError):
            eigenvalue_formula_check(1.0, 1)


class TestPrimalSearch:
    @pytest.mark.parametrize("k", (2, 3))
    def test_perfect_witness_attack(self, k):
        attack = primal_search(1.0, k, restarts=0, seed=0)
        assert attack.value == pytest.approx(1.0 / k, abs=1e-12)
        assert attack.achieved_witness == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("k", (2, 3))
    def test_trivial_witness_attack(self, k):
        attack = primal_search(1.0 / k, k, restarts=0, seed=0)
        assert attack.value == pytest.approx(1.0, abs=1e-12)

    def test_known_point_meets_dual_bound(self):
        attack = primal_search(0.9, 2, restarts=2, seed=1)
        cert = dual_certificate(0.9, 2)
        assert attack.value >= 0.8 - 1e-3
        assert attack.value <= cert.dual_value + 1e-9
        assert abs(attack.achieved_witness - 0.9) <= 1e-6

    @pytest.mark.parametrize("k", GRID_K)
    def test_tight_on_grid_sample(self, k):
        for witness in (0.62, 0.85):
            attack = primal_search(witness, k, restarts=1, seed=3)
            cert = dual_certificate(witness, k)
            gap = cert.dual_value - attack.value
            assert -1e-9 <= gap <= 1e-3, (k, witness, gap)

    def test_deterministic_given_seed(self):
        first = primal_search(0.8, 3, restarts=2, seed=5)
        second = primal_search(0.8, 3, restarts=2, seed=5)
        assert first.value == second.value
        assert np.array_equal(first.states, second.states)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            primal_search(0.3, 2, restarts=1, seed=0)
        with pytest.raises(ValueError):
            primal_search(0.9, 2, restarts=-1, seed=0)
        with pytest.raises(ValueError):
            primal_search(0.9, 0, restarts=1, seed=0)


class TestPrimalAttackValidation:
    def test_trace_must_sum_to_one(self):
        states = np.stack([np.eye(4, dtype=complex)] * 2)
        with pytest.raises(ValueError):
            PrimalAttack(
                k=2, states=states, value=0.5, achieved_witness=0.9, target_witness=0.9
            )

    def test_states_must_be_positive(self):
        bad = -np.eye(4, dtype=complex) / 4.0
        good = 3.0 * np.eye(4, dtype=complex) / 8.0
        with pytest.raises(ValueError):
            PrimalAttack(
                k=2,
                states=np.stack([bad, good]),
                value=0.5,
                achieved_witness=0.9,
                target_witness=0.9,
            )

    def test_witness_constraint_enforced(self):
        states = np.stack([np.eye(4, dtype=complex) / 8.0] * 2)
        with pytest.raises(ValueError):
            PrimalAttack(
                k=2, states=states, value=0.5, achieved_witness=0.5, target_witness=0.9
            )

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError):
            PrimalAttack(
                k=2,
                states=np.zeros((2, 3, 3), dtype=complex),
                value=0.0,
                achieved_witness=0.9,
                target_witness=0.9,
            )


class TestWeakDuality:
    def test_primal_never_exceeds_dual(self):
        rng = np.random.default_rng(29)
        for _ in range(6):
            k = int(rng.integers(2, 5))
            witness = float(rng.uniform(1.0 / k + 0.05, 0.99))
            attack = primal_search(witness, k, restarts=1, seed=7)
            cert = dual_certificate(witness, k)
            assert attack.value <= cert.dual_value + 1e-9
