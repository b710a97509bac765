"""Asymptotic key rates for simultaneous block coding on qudit pairs.

Each matched block pair contributes an independent key channel: a min-entropy
lower bound certified by the block's equal-outcome witness, minus the Shannon
cost of reconciling the raw outcomes. Closed forms for isotropic states and
the critical-visibility solver live here too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum import (
    DensityMatrix,
    SubspaceLayout,
    born_joint_distribution,
    build_measurements,
    project_subspace,
)

WITNESS_BAND = 1e-9
CRITICAL_V_LO = 1e-6
CRITICAL_V_HI = 1.0 - 1e-6


def min_entropy_bound(witness: float, k: int) -> float:
    """Certified min-entropy of one side's outcome within a size-k block.

    Args:
        witness: Equal-outcome witness value W in [0, 1]. Values within 1e-9
            outside the interval are clamped; anything further out raises.
        k: Block size, at least 1.

    Returns:
        Lower bound -log2[(sqrt(W) + sqrt((k-1)(1-W)))^2 / k] in bits,
        floored at 0 (the bound is vacuous for W <= 1/k, and k=1 carries
        no key).
    """
    if k < 1:
        raise ValueError(f"block size must be positive, got k={k}")
    if witness < -WITNESS_BAND or witness > 1.0 + WITNESS_BAND:
        raise ValueError(f"witness {witness} outside [0, 1]")
    w = min(max(witness, 0.0), 1.0)
    # the bound's slope diverges at w = 1, so snap the numerical band to 1
    if w > 1.0 - WITNESS_BAND:
        w = 1.0
    if w <= 1.0 / k:
        return 0.0
    guess = (np.sqrt(w) + np.sqrt((k - 1) * (1.0 - w))) ** 2 / k
    return float(-np.log2(guess))


def conditional_entropy(joint: np.ndarray) -> float:
    """Conditional Shannon entropy H(X|Y) of a joint distribution in bits.

    Args:
        joint: Array with joint[x, y] = P(x, y), nonnegative, summing to 1.

    Returns:
        H(X|Y) = H(XY) - H(Y), with 0 log 0 = 0.
    """
    p = np.asarray(joint, dtype=float)
    if p.min() < -1e-12:
        raise ValueError(f"negative probability {p.min():.3e}")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"joint distribution sums to {total}, not 1")
    p = np.clip(p, 0.0, None)
    nz = p > 0.0
    h_xy = float(-np.sum(p[nz] * np.log2(p[nz])))
    py = p.sum(axis=0)
    nzy = py > 0.0
    h_y = float(-np.sum(py[nzy] * np.log2(py[nzy])))
    return h_xy - h_y


@dataclass(frozen=True)
class SubspaceStats:
    """Estimated quantities for one matched block pair.

    Attributes:
        block: Block label m.
        witness: Equal-outcome witness value W of the second basis.
        probability: Probability that both outcomes land in this block.
        conditional_dist: Joint (k, k) distribution of the first-basis
            outcomes within the block.
    """

    block: int
    witness: float
    probability: float
    conditional_dist: np.ndarray

    def __post_init__(self) -> None:
        if not -WITNESS_BAND <= self.witness <= 1.0 + WITNESS_BAND:
            raise ValueError(f"witness {self.witness} outside [0, 1]")
        if not 0.0 <= self.probability <= 1.0 + 1e-12:
            raise ValueError(f"block probability {self.probability} outside [0, 1]")

    @property
    def k(self) -> int:
        return np.asarray(self.conditional_dist).shape[0]


@dataclass(frozen=True)
class KeyRateReport:
    """Total key rate and its per-block decomposition.

    Attributes:
        total: Sum over blocks of probability * rate, per-block rates floored
            at 0 when `clamped` is set.
        block_rates: Per-block key rates (bits per post-selected round), in
            block order, unweighted and unclamped.
        block_probabilities: Matching block weights.
        clamped: Whether negative per-block rates were floored at 0.
        bits_per_second: Physical throughput (rate of usable rounds times
            `total`) when the caller supplies one; None for bare-state rates.
    """

    total: float
    block_rates: np.ndarray
    block_probabilities: np.ndarray
    clamped: bool
    bits_per_second: float | None = field(default=None)


def keyrate_subspace(stats: SubspaceStats) -> float:
    """Key rate of one block: certified min-entropy minus reconciliation cost.

    May be negative when the witness certifies less entropy than the raw
    outcomes cost to reconcile.
    """
    return min_entropy_bound(stats.witness, stats.k) - conditional_entropy(
        stats.conditional_dist
    )


def keyrate_total(blocks: list[SubspaceStats], clamp: bool = True) -> KeyRateReport:
    """Probability-weighted total key rate over all blocks.

    Args:
        blocks: Per-block statistics covering every block label exactly once
            (labels 0..len(blocks)-1).
        clamp: Floor negative per-block rates at 0 (a block that cannot
            distill key is discarded, not charged against the others).

    Returns:
        KeyRateReport with the weighted total and per-block breakdown.
    """
    labels = sorted(s.block for s in blocks)
    if labels != list(range(len(blocks))):
        raise ValueError(
            f"block labels {labels} do not cover 0..{len(blocks) - 1} exactly once"
        )
    ordered = sorted(blocks, key=lambda s: s.block)
    rates = np.array([keyrate_subspace(s) for s in ordered])
    probs = np.array([s.probability for s in ordered])
    effective = np.maximum(rates, 0.0) if clamp else rates
    return KeyRateReport(
        total=float(np.dot(probs, effective)),
        block_rates=rates,
        block_probabilities=probs,
        clamped=clamp,
    )


def iso_effective_visibility(d: int, v: float, k: int) -> float:
    """Visibility of one block of an isotropic state after projection.

    Projecting the d-dimensional isotropic state with visibility v onto a
    matched block pair leaves a k-dimensional isotropic state with
    visibility v d / (v d + k - v k).
    """
    SubspaceLayout(d, k)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility {v} outside [0, 1]")
    return v * d / (v * d + k - v * k)


def iso_subspace_witness(d: int, v: float, k: int) -> float:
    """Equal-outcome witness of one isotropic block: (v d + 1 - v) / (v d + k - v k)."""
    SubspaceLayout(d, k)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility {v} outside [0, 1]")
    return (v * d + 1.0 - v) / (v * d + k - v * k)


def iso_block_probability(d: int, v: float, k: int) -> float:
    """Probability that both isotropic-state outcomes land in the same given block."""
    SubspaceLayout(d, k)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility {v} outside [0, 1]")
    return k * (v * d + k - v * k) / (d * d)


def iso_keyrate_closed_form(d: int, v: float, k: int, clamp: bool = True) -> float:
    """Total key rate of the isotropic state in closed form.

    Args:
        d: Local dimension.
        v: Isotropic visibility in [0, 1].
        k: Block size dividing d.
        clamp: Floor the rate at 0; with clamp=False the signed value is
            returned (negative below the critical visibility), which is what
            the critical-visibility root finder needs.

    Returns:
        Key rate in bits per post-selected round. Exactly log2(k) at v = 1.
    """
    SubspaceLayout(d, k)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility {v} outside [0, 1]")
    if k == 1:
        # a size-1 block never yields key; the terms cancel identically
        return 0.0
    if v == 1.0:
        return float(np.log2(k))
    a = v * d + 1.0 - v
    b = 1.0 - v
    mass = (np.sqrt(a) + (k - 1) * np.sqrt(b)) ** 2
    rate = (v * d + k - v * k) / d * np.log2(k / mass) + a / d * np.log2(a)
    if k > 1 and b > 0.0:
        rate += (k - 1) * b / d * np.log2(b)
    return float(max(rate, 0.0)) if clamp else float(rate)


def keyrate_from_state(
    state: DensityMatrix, layout: SubspaceLayout, clamp: bool = True
) -> KeyRateReport:
    """Total key rate of an arbitrary bipartite state via block statistics.

    Projects the state onto each matched block pair, reads the witness off
    the second-basis statistics and the reconciliation cost off the
    first-basis statistics of the conditional block state, and combines the
    blocks with their weights.

    Args:
        state: Bipartite density matrix on a layout.d ** 2 dimensional space.
        layout: Block structure.
        clamp: Floor negative per-block rates at 0.

    Returns:
        KeyRateReport. Blocks with degenerate (below-floor) weight are
        assigned rate 0.
    """
    bases = build_measurements(SubspaceLayout(layout.k, layout.k))
    blocks = []
    for m in range(layout.num_blocks):
        proj = project_subspace(state, m, layout)
        if proj.state is None:
            blocks.append(
                SubspaceStats(
                    block=m,
                    witness=1.0 / layout.k,
                    probability=proj.probability,
                    conditional_dist=np.eye(layout.k) / layout.k,
                )
            )
            continue
        j2 = born_joint_distribution(proj.state, bases.a2, bases.b2)
        j1 = born_joint_distribution(proj.state, bases.a1, bases.b1)
        blocks.append(
            SubspaceStats(
                block=m,
                witness=float(np.trace(j2.probs)),
                probability=proj.probability,
                conditional_dist=j1.probs,
            )
        )
    return keyrate_total(blocks, clamp=clamp)


def critical_visibility(d: int, k: int, tol: float = 1e-8) -> float:
    """Smallest isotropic visibility with positive key rate, by bisection.

    Args:
        d: Local dimension.
        k: Block size dividing d.
        tol: Bracket width at which bisection stops.

    Returns:
        Root of the signed closed-form rate in [1e-6, 1 - 1e-6]. Returns 1.0
        when the rate is still nonpositive at the upper bracket edge and 0.0
        when it is already positive at the lower edge.
    """
    SubspaceLayout(d, k)
    lo, hi = CRITICAL_V_LO, CRITICAL_V_HI
    if iso_keyrate_closed_form(d, hi, k, clamp=False) <= 0.0:
        return 1.0
    if iso_keyrate_closed_form(d, lo, k, clamp=False) > 0.0:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if iso_keyrate_closed_form(d, mid, k, clamp=False) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
