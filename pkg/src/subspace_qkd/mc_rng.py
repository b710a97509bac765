"""Deterministic counter-based randomness for the event simulators.

Every random draw is addressed by a 64-bit counter built from (trial index,
region, slot) and hashed together with the run seed through the splitmix64
finalizer. Both simulator backends consume the same addresses, so their
outputs agree bit for bit, and trials can be evaluated in any order or in
parallel without changing the result.

Counter layout: counter = trial * 2^20 + region * 2^16 + slot. Regions
separate independent sampling stages within one trial (counts, per-pair
coin flips, environment photons, dark counts); slots index draws within a
region. Poisson sampling is by inversion against a truncated cdf table, so
any sampled count is bounded by the table length, which in turn keeps slot
indices inside their region.
"""

from __future__ import annotations

import math

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULT_1 = 0xBF58476D1CE4E5B9
MIX_MULT_2 = 0x94D049BB133111EB
U64_MASK = (1 << 64) - 1
UNIFORM_SCALE = 2.0**-53

TRIAL_STRIDE = 1 << 20
REGION_STRIDE = 1 << 16

# truncation bound for Poisson cdf tables; also bounds any sampled count
POISSON_TABLE_MAX = 1024
POISSON_TAIL_EPS = 1e-18


def hash_uniform_scalar(seed: int, counter: int) -> float:
    """One uniform in [0, 1) from (seed, counter), in pure integer arithmetic.

    Reference implementation; the array and compiled paths must reproduce it
    exactly.
    """
    z = (seed + GOLDEN_GAMMA * counter) & U64_MASK
    z = ((z ^ (z >> 30)) * MIX_MULT_1) & U64_MASK
    z = ((z ^ (z >> 27)) * MIX_MULT_2) & U64_MASK
    z = z ^ (z >> 31)
    return (z >> 11) * UNIFORM_SCALE


def hash_uniform_array(seed: int, counters: np.ndarray) -> np.ndarray:
    """Uniforms in [0, 1) for an array of counters, matching the scalar path.

    Args:
        seed: Run seed, any Python int (wrapped to 64 bits).
        counters: Integer array of counter values.

    Returns:
        Float array of the same shape.
    """
    z = np.uint64(seed & U64_MASK) + np.uint64(GOLDEN_GAMMA) * counters.astype(
        np.uint64
    )
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MULT_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MULT_2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * UNIFORM_SCALE


def trial_counters(
    start_trial: int, n_trials: int, region: int, slot: int
) -> np.ndarray:
    """Counters of one (region, slot) across a contiguous trial range."""
    trials = np.arange(start_trial, start_trial + n_trials, dtype=np.uint64)
    return trials * np.uint64(TRIAL_STRIDE) + np.uint64(
        region * REGION_STRIDE + slot
    )


def poisson_cdf_table(mean: float) -> np.ndarray:
    """Cumulative Poisson probabilities, truncated once the tail is negligible.

    Args:
        mean: Poisson mean, >= 0.

    Returns:
        Array cdf with cdf[j] = P(X <= j), extended until the remaining tail
        is provably below 1e-18. A uniform searched into this table can never
        produce a count above the table length (hard cap 1024), which bounds
        the simulators' slot usage.

    Raises:
        ValueError: On a negative mean, or a mean so large that the capped
            table cannot hold all but a negligible tail (roughly mean > 700).
    """
    if mean < 0.0:
        raise ValueError(f"Poisson mean must be nonnegative, got {mean}")
    if mean == 0.0:
        return np.ones(1)
    log_mean = math.log(mean)
    cdf = []
    total = 0.0
    for j in range(POISSON_TABLE_MAX):
        # pmf in log space: exp(-mean) alone underflows for mean > ~745
        term = math.exp(j * log_mean - mean - math.lgamma(j + 1))
        total += term
        cdf.append(total)
        if j + 1 <= mean:
            continue
        # past the mode the pmf decays at least geometrically with ratio
        # mean / (j + 2), so the dropped tail is below term * r / (1 - r)
        ratio = mean / (j + 2)
        if term * ratio < POISSON_TAIL_EPS * (1.0 - ratio):
            return np.array(cdf)
    raise ValueError(
        f"Poisson mean {mean} needs more than {POISSON_TABLE_MAX} cdf entries"
    )


def poisson_from_uniform(cdf: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Poisson counts by cdf inversion: count = #{j : cdf[j] <= u}."""
    return np.searchsorted(cdf, uniforms, side="right").astype(np.int64)
