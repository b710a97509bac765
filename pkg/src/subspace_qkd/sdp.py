"""Two-sided certification of the guessing-probability bound for one block.

The closed form used by the key-rate module is validated from both
directions. A dual certificate (explicit slope/offset pair plus a full
eigendecomposition feasibility check) proves the closed form is an upper
bound on any eavesdropping attack; a primal search (local ascent over
positive-semidefinite attack states, seeded from the certificate's null
space and the analytic endpoint attacks) produces explicit attacks that
meet the bound, proving tightness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quantum import SubspaceLayout, build_measurements, maximally_entangled_state

HERMITIAN_TOL = 1e-12
IDEMPOTENT_TOL = 1e-10
TRACE_TOL = 1e-10

# dual certificate counts as feasible down to this eigenvalue
FEASIBILITY_TOL = 1e-9

# primal attack validation
ATTACK_PSD_TOL = 1e-10
ATTACK_TRACE_TOL = 1e-8
ATTACK_WITNESS_TOL = 1e-6

# witness values this close to an endpoint snap onto the analytic branch
ENDPOINT_BAND = 1e-12


@dataclass(frozen=True)
class WitnessOperator:
    """Correlation witness of the second-basis measurements on one block.

    Attributes:
        k: Block dimension.
        matrix: k^2 x k^2 Hermitian projector, the sum over outcomes of
            (A second-basis projector) tensor (B second-basis projector).
    """

    k: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        n = self.k * self.k
        if mat.shape != (n, n):
            raise ValueError(f"witness matrix must be {n}x{n}, got {mat.shape}")
        if np.abs(mat - mat.conj().T).max() > HERMITIAN_TOL:
            raise ValueError("witness matrix is not Hermitian")
        if np.abs(mat @ mat - mat).max() > IDEMPOTENT_TOL:
            raise ValueError("witness matrix is not a projector")
        if abs(np.trace(mat).real - self.k) > TRACE_TOL:
            raise ValueError(
                f"witness trace {np.trace(mat).real} differs from rank {self.k}"
            )
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class DualCertificate:
    """Feasible dual point whose value equals the closed-form guessing bound.

    Attributes:
        witness: Constrained witness expectation.
        k: Block dimension.
        slope: Coefficient multiplying the witness operator in the dual
            matrix inequality.
        offset: Coefficient multiplying the identity; NaN on the analytic
            endpoint branches, where the finite-slope certificate degenerates.
        dual_value: offset + slope * witness, the certified upper bound on
            the guessing probability.
        min_eigenvalue: Smallest eigenvalue of the dual slack operator over
            all guesses; NaN on the endpoint branches.
        endpoint_limit: True when the value comes from the analytic limit at
            witness = 1 or witness = 1/k instead of the finite formulas.
    """

    witness: float
    k: int
    slope: float
    offset: float
    dual_value: float
    min_eigenvalue: float
    endpoint_limit: bool = field(default=False)

    @property
    def feasible(self) -> bool:
        """Whether the certificate proves its bound.

        Endpoint limits are exact analytic statements; finite certificates
        must have a (numerically) positive-semidefinite slack operator.
        """
        return self.endpoint_limit or self.min_eigenvalue >= -FEASIBILITY_TOL


@dataclass(frozen=True)
class PrimalAttack:
    """Explicit eavesdropping attack achieving a given witness expectation.

    Attributes:
        k: Block dimension.
        states: Array of shape (k, k^2, k^2); entry e is the unnormalized
            attack state conditioned on the eavesdropper guessing e. The
            traces sum to 1 over e.
        value: Guessing probability of the attack, the sum over e of the
            state-e expectation of (first-basis projector e) tensor identity.
        achieved_witness: Witness expectation of the summed states.
        target_witness: Witness value the attack was asked to achieve.
    """

    k: int
    states: np.ndarray
    value: float
    achieved_witness: float
    target_witness: float

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=complex)
        n = self.k * self.k
        if states.shape != (self.k, n, n):
            raise ValueError(
                f"attack needs {self.k} states of size {n}x{n}, got {states.shape}"
            )
        total = 0.0
        for state in states:
            eigenvalues = np.linalg.eigvalsh(state)
            if eigenvalues[0] < -ATTACK_PSD_TOL:
                raise ValueError(
                    f"attack state has negative eigenvalue {eigenvalues[0]}"
                )
            total += float(np.trace(state).real)
        if abs(total - 1.0) > ATTACK_TRACE_TOL:
            raise ValueError(f"attack state traces sum to {total}, not 1")
        if abs(self.achieved_witness - self.target_witness) > ATTACK_WITNESS_TOL:
            raise ValueError(
                f"attack misses the witness constraint: achieved "
                f"{self.achieved_witness}, target {self.target_witness}"
            )
        object.__setattr__(self, "states", states)


def build_witness_operator(k: int) -> WitnessOperator:
    """Builds the second-basis correlation witness on a single block.

    Args:
        k: Block dimension, >= 1.

    Returns:
        WitnessOperator; its matrix is a rank-k projector, and the maximally
        entangled state lies inside its range (expectation 1).
    """
    if k < 1:
        raise ValueError(f"block dimension must be positive, got k={k}")
    measurements = build_measurements(SubspaceLayout(d=k, k=k))
    a2 = measurements.a2.projectors()
    b2 = measurements.b2.projectors()
    matrix = sum(np.kron(a2[x], b2[x]) for x in range(k))
    return WitnessOperator(k=k, matrix=matrix)


def closed_form_guessing(witness: float, k: int) -> float:
    """Closed-form guessing probability at a given witness expectation.

    Args:
        witness: Witness expectation, in [0, 1].
        k: Block dimension, >= 1.

    Returns:
        (sqrt(witness) + sqrt((k-1)(1-witness)))^2 / k.
    """
    if k < 1:
        raise ValueError(f"block dimension must be positive, got k={k}")
    if not 0.0 <= witness <= 1.0:
        raise ValueError(f"witness expectation {witness} outside [0, 1]")
    root = math.sqrt(witness) + math.sqrt((k - 1) * (1.0 - witness))
    return root * root / k


def _guess_projectors(k: int) -> np.ndarray:
    """Stack of (first-basis projector e) tensor identity, shape (k, n, n)."""
    eye = np.eye(k)
    return np.stack([np.kron(np.diag(eye[e]), eye) for e in range(k)]).astype(complex)


def _snap_to_range(witness: float, k: int) -> float:
    """Validates witness in [1/k, 1], snapping float dust onto the endpoints."""
    lo = 1.0 / k
    if witness < lo - ENDPOINT_BAND or witness > 1.0 + ENDPOINT_BAND:
        raise ValueError(
            f"witness expectation {witness} outside [{lo}, 1] for k={k}"
        )
    return min(max(witness, lo), 1.0)


def dual_certificate(witness: float, k: int) -> DualCertificate:
    """Constructs and feasibility-checks the dual point at one witness value.

    In the interior of [1/k, 1] the slope and offset follow the explicit
    formulas and the slack operator offset*I + slope*witness_matrix -
    guess_projector is eigendecomposed for every guess; at the endpoints the
    formulas degenerate and the exact limits (1 at witness=1/k, 1/k at
    witness=1) are returned with `endpoint_limit` set.

    Args:
        witness: Witness expectation, in [1/k, 1].
        k: Block dimension, >= 1.

    Returns:
        DualCertificate; `feasible` is the headline verdict.
    """
    if k < 1:
        raise ValueError(f"block dimension must be positive, got k={k}")
    witness = _snap_to_range(witness, k)
    if witness == 1.0:
        return DualCertificate(
            witness=witness,
            k=k,
            slope=math.nan,
            offset=math.nan,
            dual_value=1.0 / k,
            min_eigenvalue=math.nan,
            endpoint_limit=True,
        )
    if witness == 1.0 / k:
        return DualCertificate(
            witness=witness,
            k=k,
            slope=math.nan,
            offset=math.nan,
            dual_value=1.0,
            min_eigenvalue=math.nan,
            endpoint_limit=True,
        )
    slope, offset = _dual_point(witness, k)
    what = build_witness_operator(k).matrix
    n = k * k
    min_eigenvalue = math.inf
    for projector in _guess_projectors(k):
        slack = offset * np.eye(n) + slope * what - projector
        min_eigenvalue = min(min_eigenvalue, float(np.linalg.eigvalsh(slack)[0]))
    return DualCertificate(
        witness=witness,
        k=k,
        slope=slope,
        offset=offset,
        dual_value=offset + slope * witness,
        min_eigenvalue=min_eigenvalue,
    )


def _dual_point(witness: float, k: int) -> tuple[float, float]:
    """Slope and offset of the dual certificate, interior witness values only."""
    ratio = math.sqrt((k - 1) / (witness * (1.0 - witness)))
    slope = 2.0 / k - 1.0 + (1.0 - 2.0 * witness) / k * ratio
    # offset = -lambda_minus of the slack spectrum, in explicitly
    # nonnegative form
    offset = (k - 1) / k + (witness / k) * ratio
    return slope, offset


def slack_eigenvalue_pair(slope: float, k: int) -> tuple[float, float]:
    """The two nonzero eigenvalues of slope*witness_matrix - guess_projector.

    Args:
        slope: Any real coefficient.
        k: Block dimension, >= 2.

    Returns:
        (lambda_minus, lambda_plus), each with degeneracy k in the spectrum.
    """
    if k < 2:
        raise ValueError(f"spectrum formula needs k >= 2, got k={k}")
    half_sum = (slope - 1.0) / 2.0
    discriminant = (slope - 1.0) ** 2 + 4.0 * slope * (k - 1) / k
    half_gap = math.sqrt(discriminant) / 2.0
    return half_sum - half_gap, half_sum + half_gap


def eigenvalue_formula_check(slope: float, k: int) -> float:
    """Compares the printed slack spectrum against eigendecomposition.

    The claim: for every guess e, slope*witness_matrix - guess_projector has
    eigenvalues lambda_minus and lambda_plus with degeneracy k each, plus
    k^2 - 2k zeros.

    Args:
        slope: Any real coefficient.
        k: Block dimension, >= 2.

    Returns:
        Maximum absolute deviation between the predicted and the numerical
        spectrum, over all guesses.
    """
    lam_minus, lam_plus = slack_eigenvalue_pair(slope, k)
    predicted = np.sort(
        np.concatenate(
            [
                np.full(k, lam_minus),
                np.full(k, lam_plus),
                np.zeros(k * k - 2 * k),
            ]
        )
    )
    what = build_witness_operator(k).matrix
    worst = 0.0
    for projector in _guess_projectors(k):
        numerical = np.linalg.eigvalsh(slope * what - projector)
        worst = max(worst, float(np.abs(numerical - predicted).max()))
    return worst


def _attack_metrics(
    states: np.ndarray, guess_projectors: np.ndarray, what: np.ndarray
) -> tuple[float, float, float]:
    """(value, witness expectation, total trace) of a stack of attack states."""
    value = float(np.einsum("eij,eji->", states, guess_projectors).real)
    achieved = float(np.einsum("eij,ji->", states, what).real)
    total = float(np.einsum("eii->", states).real)
    return value, achieved, total


def _endpoint_attacks(k: int, guess_projectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The analytic attacks at witness 1 (value 1/k) and 1/k (value 1)."""
    psi = maximally_entangled_state(k)
    entangled = np.outer(psi, psi.conj()) / k
    high = np.stack([entangled] * k)
    low = guess_projectors / (k * k)
    return high, low


def _kernel_attack(
    witness: float, k: int, guess_projectors: np.ndarray, what: np.ndarray
) -> np.ndarray:
    """Attack states supported on the dual slack operator's null space.

    At the optimum, complementary slackness forces every attack state into
    the kernel of its guess's slack operator; the kernel projectors
    themselves, equally weighted, already satisfy both constraints and
    achieve the closed-form value to machine precision.
    """
    slope, offset = _dual_point(witness, k)
    n = k * k
    states = []
    for projector in guess_projectors:
        slack = offset * np.eye(n) + slope * what - projector
        eigenvalues, vectors = np.linalg.eigh(slack)
        cut = FEASIBILITY_TOL * max(1.0, float(eigenvalues[-1]))
        kernel = vectors[:, eigenvalues < cut]
        states.append((kernel @ kernel.conj().T) / (k * k))
    return np.stack(states)


def _ascent(
    witness: float,
    k: int,
    rng: np.random.Generator,
    guess_projectors: np.ndarray,
    what: np.ndarray,
    iterations: int,
) -> np.ndarray:
    """Penalty-method gradient ascent over square-factor attack states.

    States are parametrized as G_e G_e^dagger, which keeps them positive; the
    normalization is divided out and the witness constraint enters as a
    quadratic penalty whose weight escalates during the climb.
    """
    n = k * k
    factors = 0.1 * (
        rng.normal(size=(k, n, n)) + 1j * rng.normal(size=(k, n, n))
    )
    penalty = 10.0
    step = 0.05

    def objective(g: np.ndarray) -> tuple[float, float, float]:
        states = np.einsum("eij,ekj->eik", g, g.conj())
        value, achieved, total = _attack_metrics(states, guess_projectors, what)
        lagrangian = value / total - penalty * (achieved / total - witness) ** 2
        return lagrangian, value, achieved

    current, value, achieved = objective(factors)
    for iteration in range(iterations):
        total = float(np.einsum("eij,eij->", factors, factors.conj()).real)
        grad_value = np.einsum("eij,ejl->eil", guess_projectors, factors)
        grad_witness = np.einsum("ij,ejl->eil", what, factors)
        mismatch = achieved / total - witness
        gradient = (grad_value * total - value * factors) / total**2
        gradient -= (
            2.0
            * penalty
            * mismatch
            * (grad_witness * total - achieved * factors)
            / total**2
        )
        candidate = factors + step * gradient
        lagrangian, cand_value, cand_achieved = objective(candidate)
        if lagrangian > current:
            factors = candidate
            current, value, achieved = lagrangian, cand_value, cand_achieved
            step *= 1.05
        else:
            step *= 0.5
        if iteration % 50 == 49:
            penalty *= 4.0
            current, value, achieved = objective(factors)
    states = np.einsum("eij,ekj->eik", factors, factors.conj())
    return states / float(np.einsum("eii->", states).real)


def primal_search(
    witness: float, k: int, restarts: int = 8, seed: int = 0
) -> PrimalAttack:
    """Searches for the best explicit attack at a fixed witness expectation.

    Candidates come from the analytic endpoint attacks, the dual slack
    operator's null space (interior witness values), and `restarts`
    independent gradient ascents from random starts. Every candidate is
    projected onto the exact witness value by mixing with an endpoint
    attack, and the best feasible value wins.

    Args:
        witness: Target witness expectation, in [1/k, 1].
        k: Block dimension, >= 1.
        restarts: Number of random-start ascents, >= 0.
        seed: Seed for the ascent starts; results are deterministic given
            (seed, restart index).

    Returns:
        PrimalAttack with value within weak duality of the dual certificate.
    """
    if k < 1:
        raise ValueError(f"block dimension must be positive, got k={k}")
    if restarts < 0:
        raise ValueError(f"restarts must be nonnegative, got {restarts}")
    witness = _snap_to_range(witness, k)
    what = build_witness_operator(k).matrix
    guess_projectors = _guess_projectors(k)
    high, low = _endpoint_attacks(k, guess_projectors)

    candidates = [high, low]
    if 1.0 / k < witness < 1.0 and k >= 2:
        candidates.append(_kernel_attack(witness, k, guess_projectors, what))
    for restart in range(restarts):
        rng = np.random.default_rng((seed, restart))
        candidates.append(
            _ascent(witness, k, rng, guess_projectors, what, iterations=250)
        )

    best: tuple[float, np.ndarray, float] | None = None
    for candidate in candidates:
        states = _project_to_witness(
            candidate, witness, k, guess_projectors, what, high, low
        )
        value, achieved, _ = _attack_metrics(states, guess_projectors, what)
        if best is None or value > best[0]:
            best = (value, states, achieved)
    value, states, achieved = best
    return PrimalAttack(
        k=k,
        states=states,
        value=value,
        achieved_witness=achieved,
        target_witness=witness,
    )


def _project_to_witness(
    states: np.ndarray,
    witness: float,
    k: int,
    guess_projectors: np.ndarray,
    what: np.ndarray,
    high: np.ndarray,
    low: np.ndarray,
) -> np.ndarray:
    """Mixes an attack with an endpoint attack to hit the witness exactly.

    Mixing is the one feasibility-restoring move that keeps positivity and
    normalization for free; overshooting attacks mix toward the low-witness
    endpoint (which maximizes the value), undershooting ones toward the
    entangled endpoint.
    """
    _, achieved, total = _attack_metrics(states, guess_projectors, what)
    states = states / total
    achieved = achieved / total
    if achieved == witness:
        return states
    if achieved > witness:
        endpoint, endpoint_witness = low, 1.0 / k
    else:
        endpoint, endpoint_witness = high, 1.0
    fraction = (achieved - witness) / (achieved - endpoint_witness)
    fraction = min(max(fraction, 0.0), 1.0)
    return (1.0 - fraction) * states + fraction * endpoint
