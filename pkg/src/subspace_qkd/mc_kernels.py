"""Event-sampling kernels for the Monte Carlo validators, in two backends.

The compiled backend walks trials one at a time under numba; the numpy
backend evaluates the same trials as padded array batches. Both consume
uniforms at identical counter addresses (see mc_rng), so for any (seed,
trial range, parameters) they return identical counts, and tests can pin one
set of expected statistics for both.

Trial address map (regions within one trial):

  temporal frame        spatial window
  0: counts             0: counts
     slot 0 pair count     slot 0 pair count
     slot 1 env A count    slot 1 env A count
     slot 2 env B count    slot 2 env B count
     slot 3 dark A count
     slot 4 dark B count
  1: pairs, stride 4    1: pairs, stride 8
     +0 A survival         +0 encoding-space membership
     +1 A detection        +1 mode choice
     +2 B survival         +2 A survival
     +3 B detection        +3 A detection
                           +4 B survival
                           +5 B detection
  2: env A, stride 1    2: env A, stride 2
     +0 detection          +0 mode choice, +1 detection
  3: env B, stride 1    3: env B, stride 2
                        4: dark A, slot = detector index
                        5: dark B, slot = detector index

Poisson tables cap sampled counts at 1024 (mc_rng.POISSON_TABLE_MAX), which
keeps every slot index inside its region.
"""

from __future__ import annotations

import numpy as np

from .mc_rng import (
    REGION_STRIDE,
    TRIAL_STRIDE,
    hash_uniform_array,
    poisson_from_uniform,
    trial_counters,
)

try:
    import numba as nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    nb = None
    HAS_NUMBA = False

REGION_COUNTS = 0
REGION_PAIRS = 1
REGION_ENV_A = 2
REGION_ENV_B = 3
REGION_DARK_A = 4
REGION_DARK_B = 5

TEMPORAL_PAIR_STRIDE = 4
SPATIAL_PAIR_STRIDE = 8
SPATIAL_ENV_STRIDE = 2


def _batch_uniforms(
    seed: int, start: int, n: int, region: int, offset: int, stride: int, width: int
) -> np.ndarray:
    """Uniforms of shape (n, width) at slots offset + stride * [0..width)."""
    base = trial_counters(start, n, region, offset)
    slots = np.arange(width, dtype=np.uint64) * np.uint64(stride)
    return hash_uniform_array(seed, base[:, None] + slots[None, :])


def temporal_counts_numpy(
    seed: int,
    start: int,
    n: int,
    cdf_pairs: np.ndarray,
    cdf_env_a: np.ndarray,
    cdf_env_b: np.ndarray,
    cdf_dark_a: np.ndarray,
    cdf_dark_b: np.ndarray,
    survive_a: float,
    survive_b: float,
    detect_a: float,
    detect_b: float,
) -> tuple[int, int]:
    """Count post-selected and entangled frames in trials [start, start + n).

    Returns:
        (n_postselected, n_entangled): frames with exactly one click per
        side, and those among them whose clicks share a source pair.
    """
    if n == 0:
        return 0, 0
    u_counts = _batch_uniforms(seed, start, n, REGION_COUNTS, 0, 1, 5)
    n_pairs = poisson_from_uniform(cdf_pairs, u_counts[:, 0])
    n_env_a = poisson_from_uniform(cdf_env_a, u_counts[:, 1])
    n_env_b = poisson_from_uniform(cdf_env_b, u_counts[:, 2])
    n_dark_a = poisson_from_uniform(cdf_dark_a, u_counts[:, 3])
    n_dark_b = poisson_from_uniform(cdf_dark_b, u_counts[:, 4])

    clicks_a = n_dark_a.copy()
    clicks_b = n_dark_b.copy()
    n_both = np.zeros(n, dtype=np.int64)

    width = int(n_pairs.max())
    if width > 0:
        idx = np.arange(width)
        live = idx[None, :] < n_pairs[:, None]
        u_sa = _batch_uniforms(seed, start, n, REGION_PAIRS, 0, TEMPORAL_PAIR_STRIDE, width)
        u_da = _batch_uniforms(seed, start, n, REGION_PAIRS, 1, TEMPORAL_PAIR_STRIDE, width)
        u_sb = _batch_uniforms(seed, start, n, REGION_PAIRS, 2, TEMPORAL_PAIR_STRIDE, width)
        u_db = _batch_uniforms(seed, start, n, REGION_PAIRS, 3, TEMPORAL_PAIR_STRIDE, width)
        a_click = live & (u_sa < survive_a) & (u_da < detect_a)
        b_click = live & (u_sb < survive_b) & (u_db < detect_b)
        clicks_a += a_click.sum(axis=1)
        clicks_b += b_click.sum(axis=1)
        n_both += (a_click & b_click).sum(axis=1)

    for region, counts, detect, clicks in (
        (REGION_ENV_A, n_env_a, detect_a, clicks_a),
        (REGION_ENV_B, n_env_b, detect_b, clicks_b),
    ):
        width = int(counts.max())
        if width > 0:
            u_env = _batch_uniforms(seed, start, n, region, 0, 1, width)
            live = np.arange(width)[None, :] < counts[:, None]
            clicks += (live & (u_env < detect)).sum(axis=1)

    post = (clicks_a == 1) & (clicks_b == 1)
    entangled = post & (n_both >= 1)
    return int(post.sum()), int(entangled.sum())


def spatial_counts_numpy(
    seed: int,
    start: int,
    n: int,
    d: int,
    cdf_pairs: np.ndarray,
    cdf_env_a: np.ndarray,
    cdf_env_b: np.ndarray,
    encode_prob: float,
    survive_a: float,
    survive_b: float,
    detect_a: float,
    detect_b: float,
    dark_prob_a: float,
    dark_prob_b: float,
) -> tuple[int, int]:
    """Count post-selected and correlated windows in trials [start, start + n).

    Detectors are mode-resolved: clicks land in per-side d-bit masks, repeat
    clicks on one detector collapse, and a window passes post-selection when
    each side has exactly one lit detector.
    """
    if n == 0:
        return 0, 0
    one = np.uint64(1)
    u_counts = _batch_uniforms(seed, start, n, REGION_COUNTS, 0, 1, 3)
    n_pairs = poisson_from_uniform(cdf_pairs, u_counts[:, 0])
    n_env_a = poisson_from_uniform(cdf_env_a, u_counts[:, 1])
    n_env_b = poisson_from_uniform(cdf_env_b, u_counts[:, 2])

    mask_a = np.zeros(n, dtype=np.uint64)
    mask_b = np.zeros(n, dtype=np.uint64)
    n_both = np.zeros(n, dtype=np.int64)

    width = int(n_pairs.max())
    if width > 0:
        live = np.arange(width)[None, :] < n_pairs[:, None]
        u_pp = _batch_uniforms(seed, start, n, REGION_PAIRS, 0, SPATIAL_PAIR_STRIDE, width)
        u_md = _batch_uniforms(seed, start, n, REGION_PAIRS, 1, SPATIAL_PAIR_STRIDE, width)
        u_sa = _batch_uniforms(seed, start, n, REGION_PAIRS, 2, SPATIAL_PAIR_STRIDE, width)
        u_da = _batch_uniforms(seed, start, n, REGION_PAIRS, 3, SPATIAL_PAIR_STRIDE, width)
        u_sb = _batch_uniforms(seed, start, n, REGION_PAIRS, 4, SPATIAL_PAIR_STRIDE, width)
        u_db = _batch_uniforms(seed, start, n, REGION_PAIRS, 5, SPATIAL_PAIR_STRIDE, width)
        encoded = live & (u_pp < encode_prob)
        mode = np.minimum((u_md * d).astype(np.int64), d - 1).astype(np.uint64)
        a_click = encoded & (u_sa < survive_a) & (u_da < detect_a)
        b_click = encoded & (u_sb < survive_b) & (u_db < detect_b)
        bits = one << mode
        mask_a |= np.bitwise_or.reduce(np.where(a_click, bits, 0), axis=1)
        mask_b |= np.bitwise_or.reduce(np.where(b_click, bits, 0), axis=1)
        n_both += (a_click & b_click).sum(axis=1)

    for region, counts, detect, mask in (
        (REGION_ENV_A, n_env_a, detect_a, mask_a),
        (REGION_ENV_B, n_env_b, detect_b, mask_b),
    ):
        width = int(counts.max())
        if width > 0:
            live = np.arange(width)[None, :] < counts[:, None]
            u_md = _batch_uniforms(seed, start, n, region, 0, SPATIAL_ENV_STRIDE, width)
            u_cl = _batch_uniforms(seed, start, n, region, 1, SPATIAL_ENV_STRIDE, width)
            clicked = live & (u_cl < detect)
            mode = np.minimum((u_md * d).astype(np.int64), d - 1).astype(np.uint64)
            mask |= np.bitwise_or.reduce(np.where(clicked, one << mode, 0), axis=1)

    for region, dark_prob, mask in (
        (REGION_DARK_A, dark_prob_a, mask_a),
        (REGION_DARK_B, dark_prob_b, mask_b),
    ):
        u_dark = _batch_uniforms(seed, start, n, region, 0, 1, d)
        bits = np.uint64(1) << np.arange(d, dtype=np.uint64)
        mask |= np.bitwise_or.reduce(
            np.where(u_dark < dark_prob, bits[None, :], 0), axis=1
        )

    post = (np.bitwise_count(mask_a) == 1) & (np.bitwise_count(mask_b) == 1)
    correlated = post & (n_both >= 1)
    return int(post.sum()), int(correlated.sum())


if HAS_NUMBA:

    @nb.njit(cache=True, inline="always")
    def _uniform(seed: np.uint64, counter: np.uint64) -> float:
        z = seed + np.uint64(0x9E3779B97F4A7C15) * counter
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)) * 2.0**-53

    @nb.njit(cache=True, inline="always")
    def _poisson(cdf: np.ndarray, u: float) -> int:
        j = 0
        while j < cdf.shape[0] and u >= cdf[j]:
            j += 1
        return j

    @nb.njit(cache=True, inline="always")
    def _popcount(x: np.uint64) -> int:
        x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
        x = (x & np.uint64(0x3333333333333333)) + (
            (x >> np.uint64(2)) & np.uint64(0x3333333333333333)
        )
        x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return int((x * np.uint64(0x0101010101010101)) >> np.uint64(56))

    @nb.njit(cache=True, parallel=True)
    def temporal_counts_numba(
        seed: np.uint64,
        start: int,
        n: int,
        cdf_pairs: np.ndarray,
        cdf_env_a: np.ndarray,
        cdf_env_b: np.ndarray,
        cdf_dark_a: np.ndarray,
        cdf_dark_b: np.ndarray,
        survive_a: float,
        survive_b: float,
        detect_a: float,
        detect_b: float,
    ):
        trial_stride = np.uint64(TRIAL_STRIDE)
        region_stride = np.uint64(REGION_STRIDE)
        n_post = 0
        n_ent = 0
        for t in nb.prange(n):
            base = np.uint64(start + t) * trial_stride
            c0 = base + np.uint64(REGION_COUNTS) * region_stride
            n_pairs = _poisson(cdf_pairs, _uniform(seed, c0))
            n_env_a = _poisson(cdf_env_a, _uniform(seed, c0 + np.uint64(1)))
            n_env_b = _poisson(cdf_env_b, _uniform(seed, c0 + np.uint64(2)))
            clicks_a = _poisson(cdf_dark_a, _uniform(seed, c0 + np.uint64(3)))
            clicks_b = _poisson(cdf_dark_b, _uniform(seed, c0 + np.uint64(4)))

            pair_base = base + np.uint64(REGION_PAIRS) * region_stride
            n_both = 0
            for i in range(n_pairs):
                slot = pair_base + np.uint64(TEMPORAL_PAIR_STRIDE * i)
                a_click = (
                    _uniform(seed, slot) < survive_a
                    and _uniform(seed, slot + np.uint64(1)) < detect_a
                )
                b_click = (
                    _uniform(seed, slot + np.uint64(2)) < survive_b
                    and _uniform(seed, slot + np.uint64(3)) < detect_b
                )
                if a_click:
                    clicks_a += 1
                if b_click:
                    clicks_b += 1
                if a_click and b_click:
                    n_both += 1

            env_a_base = base + np.uint64(REGION_ENV_A) * region_stride
            for i in range(n_env_a):
                if _uniform(seed, env_a_base + np.uint64(i)) < detect_a:
                    clicks_a += 1
            env_b_base = base + np.uint64(REGION_ENV_B) * region_stride
            for i in range(n_env_b):
                if _uniform(seed, env_b_base + np.uint64(i)) < detect_b:
                    clicks_b += 1

            if clicks_a == 1 and clicks_b == 1:
                n_post += 1
                if n_both >= 1:
                    n_ent += 1
        return n_post, n_ent

    @nb.njit(cache=True, parallel=True)
    def spatial_counts_numba(
        seed: np.uint64,
        start: int,
        n: int,
        d: int,
        cdf_pairs: np.ndarray,
        cdf_env_a: np.ndarray,
        cdf_env_b: np.ndarray,
        encode_prob: float,
        survive_a: float,
        survive_b: float,
        detect_a: float,
        detect_b: float,
        dark_prob_a: float,
        dark_prob_b: float,
    ):
        trial_stride = np.uint64(TRIAL_STRIDE)
        region_stride = np.uint64(REGION_STRIDE)
        one = np.uint64(1)
        n_post = 0
        n_corr = 0
        for t in nb.prange(n):
            base = np.uint64(start + t) * trial_stride
            c0 = base + np.uint64(REGION_COUNTS) * region_stride
            n_pairs = _poisson(cdf_pairs, _uniform(seed, c0))
            n_env_a = _poisson(cdf_env_a, _uniform(seed, c0 + np.uint64(1)))
            n_env_b = _poisson(cdf_env_b, _uniform(seed, c0 + np.uint64(2)))

            mask_a = np.uint64(0)
            mask_b = np.uint64(0)
            n_both = 0

            pair_base = base + np.uint64(REGION_PAIRS) * region_stride
            for i in range(n_pairs):
                slot = pair_base + np.uint64(SPATIAL_PAIR_STRIDE * i)
                if _uniform(seed, slot) >= encode_prob:
                    continue
                u_mode = _uniform(seed, slot + np.uint64(1))
                mode = int(u_mode * d)
                if mode > d - 1:
                    mode = d - 1
                a_click = (
                    _uniform(seed, slot + np.uint64(2)) < survive_a
                    and _uniform(seed, slot + np.uint64(3)) < detect_a
                )
                b_click = (
                    _uniform(seed, slot + np.uint64(4)) < survive_b
                    and _uniform(seed, slot + np.uint64(5)) < detect_b
                )
                if a_click:
                    mask_a |= one << np.uint64(mode)
                if b_click:
                    mask_b |= one << np.uint64(mode)
                if a_click and b_click:
                    n_both += 1

            env_a_base = base + np.uint64(REGION_ENV_A) * region_stride
            for i in range(n_env_a):
                slot = env_a_base + np.uint64(SPATIAL_ENV_STRIDE * i)
                if _uniform(seed, slot + np.uint64(1)) < detect_a:
                    mode = int(_uniform(seed, slot) * d)
                    if mode > d - 1:
                        mode = d - 1
                    mask_a |= one << np.uint64(mode)
            env_b_base = base + np.uint64(REGION_ENV_B) * region_stride
            for i in range(n_env_b):
                slot = env_b_base + np.uint64(SPATIAL_ENV_STRIDE * i)
                if _uniform(seed, slot + np.uint64(1)) < detect_b:
                    mode = int(_uniform(seed, slot) * d)
                    if mode > d - 1:
                        mode = d - 1
                    mask_b |= one << np.uint64(mode)

            dark_a_base = base + np.uint64(REGION_DARK_A) * region_stride
            dark_b_base = base + np.uint64(REGION_DARK_B) * region_stride
            for det in range(d):
                if _uniform(seed, dark_a_base + np.uint64(det)) < dark_prob_a:
                    mask_a |= one << np.uint64(det)
                if _uniform(seed, dark_b_base + np.uint64(det)) < dark_prob_b:
                    mask_b |= one << np.uint64(det)

            if _popcount(mask_a) == 1 and _popcount(mask_b) == 1:
                n_post += 1
                if n_both >= 1:
                    n_corr += 1
        return n_post, n_corr

else:  # pragma: no cover - exercised only without numba
    temporal_counts_numba = None
    spatial_counts_numba = None
