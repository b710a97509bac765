"""Finite-round protocol simulation: basis choice, sifting, estimation.

Rounds are sampled from the exact Born joint distributions of the four
basis-pair combinations, sifted on matching basis and block, and folded into
per-block estimates (witness from test rounds, outcome distribution from key
rounds, block weight from all same-basis rounds). The plug-in asymptotic key
rate built from those estimates converges to the closed-form rate at the
1/sqrt(N) sampling rate.

Randomness is the package's counter-based hash (three draws per round keyed
by round index), so runs are reproducible and order-independent for any
round count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .keyrate import SubspaceStats, keyrate_subspace, min_entropy_bound
from .mc_rng import U64_MASK, hash_uniform_array
from .quantum import (
    DensityMatrix,
    SubspaceLayout,
    born_joint_distribution,
    build_measurements,
)

# draws per round: basis bit A, basis bit B, joint outcome
ROUND_STRIDE = 4

# confidence band width in propagated standard errors
BAND_SIGMAS = 3.0


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters of the finite-round simulation.

    Attributes:
        layout: Dimension and block split measured by both parties.
        epsilon: Per-party probability of choosing the test basis, in (0, 1).
        n_rounds: Number of source rounds, >= 1.
        seed: Randomness seed; runs are deterministic given the seed.
    """

    layout: SubspaceLayout
    epsilon: float
    n_rounds: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"test-basis probability {self.epsilon} outside (0, 1)")
        if self.n_rounds < 1:
            raise ValueError(f"need at least one round, got {self.n_rounds}")


@dataclass(slots=True)
class RoundRecord:
    """One source round after local measurement and sifting.

    Attributes:
        test_a: Whether side A measured in the test (second) basis.
        test_b: Same for side B.
        outcome_a: Side-A outcome in 0..d-1.
        outcome_b: Side-B outcome in 0..d-1.
        block_a: Block containing outcome_a.
        block_b: Block containing outcome_b.
        agreed_block: Common block when both bases and both blocks match,
            else None (the round is discarded by sifting).
        reduced_a: Within-block outcome (outcome_a - agreed_block * k) for
            kept rounds, else None.
        reduced_b: Same for side B.
    """

    test_a: bool
    test_b: bool
    outcome_a: int
    outcome_b: int
    block_a: int
    block_b: int
    agreed_block: int | None
    reduced_a: int | None
    reduced_b: int | None


@dataclass(frozen=True)
class BlockEstimate:
    """Estimated quantities for one block of the layout.

    Attributes:
        block: Block label.
        test_rounds: Kept rounds where both sides measured the test basis.
        key_rounds: Kept rounds where both sides measured the key basis.
        witness: Fraction of test rounds with equal within-block outcomes;
            NaN when the block saw no test rounds.
        witness_stderr: Binomial standard error of `witness`; NaN likewise.
        probability: Fraction of all same-basis rounds that landed in this
            block on both sides; NaN when there were no same-basis rounds.
        conditional_dist: (k, k) empirical joint distribution of the key-basis
            within-block outcomes; None when the block saw no key rounds.
    """

    block: int
    test_rounds: int
    key_rounds: int
    witness: float
    witness_stderr: float
    probability: float
    conditional_dist: np.ndarray | None

    @property
    def defined(self) -> bool:
        """Whether the block has enough data to enter the total rate."""
        return self.test_rounds > 0 and self.key_rounds > 0


@dataclass(frozen=True)
class ProtocolEstimates:
    """Per-block estimates plus the plug-in total rate.

    Attributes:
        layout: The layout the records were estimated against.
        blocks: One BlockEstimate per block label, in order.
        total_rate: Plug-in asymptotic rate, the probability-weighted sum of
            per-block rates floored at 0, over defined blocks only; NaN when
            no block is defined.
    """

    layout: SubspaceLayout
    blocks: tuple[BlockEstimate, ...]
    total_rate: float


@dataclass(frozen=True)
class AsymptoticRate:
    """Plug-in rate with a crude sampling-error band.

    Attributes:
        rate: Plug-in asymptotic rate (clamped).
        lower: rate minus the propagated band (may be negative).
        upper: rate plus the propagated band.
    """

    rate: float
    lower: float
    upper: float


def run_protocol(state: DensityMatrix, config: ProtocolConfig) -> list[RoundRecord]:
    """Simulates measurement rounds on a fixed source state.

    Per round, each side picks the test basis with probability epsilon,
    outcomes are drawn from the exact joint Born distribution of the chosen
    basis pair, and sifting marks the round kept when bases and blocks both
    match.

    Args:
        state: Bipartite source state of dimension layout.d squared.
        config: Round count, test bias, layout, seed.

    Returns:
        One RoundRecord per round, in round order.
    """
    layout = config.layout
    d = layout.d
    if state.dim != d * d:
        raise ValueError(
            f"state dimension {state.dim} does not match layout d={d} (need d^2)"
        )
    measurements = build_measurements(layout)
    bases_a = (measurements.a1, measurements.a2)
    bases_b = (measurements.b1, measurements.b2)
    cdfs = {}
    for wa in (0, 1):
        for wb in (0, 1):
            joint = born_joint_distribution(state, bases_a[wa], bases_b[wb])
            cdf = np.cumsum(joint.probs.reshape(-1))
            cdf /= cdf[-1]
            cdf[-1] = 1.0
            cdfs[wa, wb] = cdf

    seed = int(config.seed) & U64_MASK
    n = config.n_rounds
    counters = np.arange(n, dtype=np.uint64) * np.uint64(ROUND_STRIDE)
    test_a = hash_uniform_array(seed, counters) < config.epsilon
    test_b = hash_uniform_array(seed, counters + np.uint64(1)) < config.epsilon
    u_outcome = hash_uniform_array(seed, counters + np.uint64(2))

    flat = np.empty(n, dtype=np.int64)
    for (wa, wb), cdf in cdfs.items():
        mask = (test_a == bool(wa)) & (test_b == bool(wb))
        flat[mask] = np.searchsorted(cdf, u_outcome[mask], side="right")
    outcome_a = flat // d
    outcome_b = flat % d

    k = layout.k
    block_a = outcome_a // k
    block_b = outcome_b // k
    kept = (test_a == test_b) & (block_a == block_b)
    reduced_a = outcome_a - block_a * k
    reduced_b = outcome_b - block_b * k

    records = []
    for ta, tb, xa, xb, ba, bb, keep, ra, rb in zip(
        test_a.tolist(),
        test_b.tolist(),
        outcome_a.tolist(),
        outcome_b.tolist(),
        block_a.tolist(),
        block_b.tolist(),
        kept.tolist(),
        reduced_a.tolist(),
        reduced_b.tolist(),
    ):
        records.append(
            RoundRecord(
                test_a=ta,
                test_b=tb,
                outcome_a=xa,
                outcome_b=xb,
                block_a=ba,
                block_b=bb,
                agreed_block=ba if keep else None,
                reduced_a=ra if keep else None,
                reduced_b=rb if keep else None,
            )
        )
    return records


def estimate_parameters(
    records: list[RoundRecord], layout: SubspaceLayout
) -> ProtocolEstimates:
    """Folds round records into per-block estimates and a plug-in rate.

    The witness of each block is the equal-outcome fraction of its test
    rounds; the key-basis distribution comes from its key rounds; the block
    weight is its share of all same-basis rounds. Blocks with no test or no
    key rounds are left undefined and excluded from the total with a warning.

    Args:
        records: Output of run_protocol, nonempty.
        layout: The layout the rounds were measured with.

    Returns:
        ProtocolEstimates; total_rate is NaN when every block is undefined.
    """
    if not records:
        raise ValueError("cannot estimate from zero records")
    k = layout.k
    n_blocks = layout.num_blocks

    same_basis = 0
    block_rounds = np.zeros(n_blocks, dtype=np.int64)
    test_rounds = np.zeros(n_blocks, dtype=np.int64)
    test_equal = np.zeros(n_blocks, dtype=np.int64)
    key_counts = np.zeros((n_blocks, k, k), dtype=np.int64)
    for record in records:
        if record.test_a != record.test_b:
            continue
        same_basis += 1
        block = record.agreed_block
        if block is None:
            continue
        block_rounds[block] += 1
        if record.test_a:
            test_rounds[block] += 1
            if record.reduced_a == record.reduced_b:
                test_equal[block] += 1
        else:
            key_counts[block, record.reduced_a, record.reduced_b] += 1

    blocks = []
    stats = []
    for m in range(n_blocks):
        n_test = int(test_rounds[m])
        n_key = int(key_counts[m].sum())
        if n_test > 0:
            witness = test_equal[m] / n_test
            stderr = math.sqrt(witness * (1.0 - witness) / n_test)
        else:
            witness = math.nan
            stderr = math.nan
        probability = block_rounds[m] / same_basis if same_basis else math.nan
        dist = key_counts[m] / n_key if n_key > 0 else None
        estimate = BlockEstimate(
            block=m,
            test_rounds=n_test,
            key_rounds=n_key,
            witness=witness,
            witness_stderr=stderr,
            probability=probability,
            conditional_dist=dist,
        )
        blocks.append(estimate)
        if estimate.defined:
            stats.append(
                SubspaceStats(
                    block=m,
                    witness=witness,
                    probability=probability,
                    conditional_dist=dist,
                )
            )
        else:
            warnings.warn(
                f"block {m} has no {'test' if n_test == 0 else 'key'} rounds; "
                "excluded from the total rate",
                stacklevel=2,
            )

    if stats:
        total = sum(s.probability * max(keyrate_subspace(s), 0.0) for s in stats)
    else:
        total = math.nan
    return ProtocolEstimates(layout=layout, blocks=tuple(blocks), total_rate=total)


def asymptotic_rate_estimate(estimates: ProtocolEstimates) -> AsymptoticRate:
    """Wraps the plug-in rate in a propagated sampling-error band.

    The band is BAND_SIGMAS times the probability-weighted sum of each
    defined block's witness standard error scaled by the local slope of the
    min-entropy bound (finite difference). Sampling error of the measured
    outcome distributions is not propagated; the band is a witness-driven
    leading-order estimate.

    Args:
        estimates: Output of estimate_parameters with >= 1 defined block.

    Returns:
        AsymptoticRate centered on estimates.total_rate.
    """
    defined = [b for b in estimates.blocks if b.defined]
    if not defined:
        raise ValueError("no block has both test and key rounds")
    k = estimates.layout.k
    spread = 0.0
    for block in defined:
        if block.witness_stderr == 0.0:
            continue
        slope = _bound_slope(block.witness, k)
        spread += block.probability * abs(slope) * block.witness_stderr
    band = BAND_SIGMAS * spread
    rate = estimates.total_rate
    return AsymptoticRate(rate=rate, lower=rate - band, upper=rate + band)


def _bound_slope(witness: float, k: int, step: float = 1e-6) -> float:
    """Finite-difference slope of the min-entropy bound at a witness value."""
    hi = min(witness + step, 1.0)
    lo = max(witness - step, 0.0)
    if hi == lo:
        return 0.0
    return (min_entropy_bound(hi, k) - min_entropy_bound(lo, k)) / (hi - lo)
