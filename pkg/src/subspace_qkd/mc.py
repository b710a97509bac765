"""Monte Carlo validation of the analytic noise models by event sampling.

Frames (temporal) or coincidence windows (spatial) are simulated one event at
a time: Poisson pair and background arrivals, per-photon loss and detection
coin flips, per-detector dark counts. Post-selected trials are those with
exactly one click per side; among them, trials whose clicks share a source
pair estimate the visibility. Estimates come with binomial standard errors
so the analytic formulas can be checked by z-score.

Two backends produce bit-identical counts: a compiled per-trial walk (numba)
and a chunked array evaluation (numpy). Selection order: per-call override,
then the SUBSPACE_QKD_BACKEND environment variable, then "auto" (numba when
importable, numpy otherwise).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .mc_kernels import (
    HAS_NUMBA,
    spatial_counts_numba,
    spatial_counts_numpy,
    temporal_counts_numba,
    temporal_counts_numpy,
)
from .mc_rng import U64_MASK, poisson_cdf_table
from .noise_spatial import SpatialParams
from .noise_temporal import TemporalParams

BACKEND_ENV_VAR = "SUBSPACE_QKD_BACKEND"
BACKEND_CHOICES = ("auto", "numba", "numpy")

# detector masks are single 64-bit words
MAX_SPATIAL_MODES = 64

# numpy-path batch size; counts are chunk-invariant because every draw is
# addressed by its absolute trial index
NUMPY_CHUNK = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    """Binomial estimate of one event probability.

    Attributes:
        trials: Number of trials the estimate is built from.
        successes: Number of trials where the event occurred.
        mean: successes / trials; NaN when there are no trials.
        stderr: Binomial standard error sqrt(mean(1-mean)/trials); NaN when
            there are no trials.
    """

    trials: int
    successes: int
    mean: float
    stderr: float

    def __post_init__(self) -> None:
        if self.trials < 0:
            raise ValueError(f"trials must be nonnegative, got {self.trials}")
        if not 0 <= self.successes <= max(self.trials, 0):
            raise ValueError(
                f"successes {self.successes} outside [0, {self.trials}]"
            )

    @classmethod
    def from_counts(cls, trials: int, successes: int) -> "McEstimate":
        """Builds the estimate from raw counts.

        Zero trials yield NaN mean and stderr: the estimate carries no
        information, and `compare_to_analytic` rejects it explicitly rather
        than letting a dead channel pass silently.
        """
        if trials == 0:
            return cls(trials=0, successes=0, mean=math.nan, stderr=math.nan)
        mean = successes / trials
        stderr = math.sqrt(mean * (1.0 - mean) / trials)
        return cls(trials=trials, successes=successes, mean=mean, stderr=stderr)


@dataclass(frozen=True)
class McComparison:
    """Outcome of checking an empirical estimate against an analytic value.

    Attributes:
        analytic: The predicted probability.
        empirical: The sampled estimate.
        z_score: (empirical.mean - analytic) / empirical.stderr; +-inf when
            the standard error is zero but the means disagree.
        passed: Whether |z_score| is within the threshold it was built with.
    """

    analytic: float
    empirical: McEstimate
    z_score: float
    passed: bool


def compare_to_analytic(
    analytic: float, empirical: McEstimate, z_threshold: float
) -> McComparison:
    """Z-tests an empirical estimate against an analytic prediction.

    Args:
        analytic: Predicted probability.
        empirical: Sampled estimate with at least one trial.
        z_threshold: Maximum |z| that counts as agreement.

    Returns:
        McComparison with the signed z-score.

    Raises:
        ValueError: If the estimate has zero trials (no information), or the
            threshold is not positive.
    """
    if empirical.trials == 0:
        raise ValueError(
            "empirical estimate has zero trials; the sampled channel is dead"
        )
    if not z_threshold > 0.0:
        raise ValueError(f"z_threshold must be positive, got {z_threshold}")
    diff = empirical.mean - analytic
    if empirical.stderr == 0.0:
        # degenerate estimate (all trials agree): only an exact match passes
        z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    else:
        z = diff / empirical.stderr
    return McComparison(
        analytic=analytic, empirical=empirical, z_score=z, passed=abs(z) <= z_threshold
    )


def active_backend(override: str | None = None) -> str:
    """Resolves which simulation backend will run.

    Args:
        override: Per-call choice; None defers to the SUBSPACE_QKD_BACKEND
            environment variable, and "auto" (the default) picks numba when
            it is importable.

    Returns:
        "numba" or "numpy".

    Raises:
        ValueError: On a name outside {auto, numba, numpy}.
        RuntimeError: If numba is requested explicitly but not importable.
    """
    choice = override if override is not None else os.environ.get(BACKEND_ENV_VAR, "auto")
    if choice not in BACKEND_CHOICES:
        raise ValueError(
            f"backend must be one of {BACKEND_CHOICES}, got {choice!r}"
        )
    if choice == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return choice


def _run_chunked(batch, n_trials: int) -> tuple[int, int]:
    """Accumulates counts from batch(start, span) over trial chunks."""
    n_post = 0
    n_hit = 0
    start = 0
    while start < n_trials:
        span = min(NUMPY_CHUNK, n_trials - start)
        post, hit = batch(start, span)
        n_post += post
        n_hit += hit
        start += span
    return n_post, n_hit


def simulate_temporal(
    params: TemporalParams,
    d: int,
    n_frames: int,
    seed: int,
    backend: str | None = None,
) -> tuple[McEstimate, McEstimate]:
    """Samples time-bin frames and counts coincidences.

    Per frame of duration d * bin_width: pair, environment, and dark counts
    are Poisson; each pair photon survives its side's loss and then clicks
    with the detector efficiency; environment photons click with the
    efficiency. A frame passes post-selection when each side records exactly
    one click; it counts as entangled when those clicks share a source pair.

    Args:
        params: Physical rates of the time-bin link.
        d: Number of time bins per frame, >= 1.
        n_frames: Number of frames to sample, >= 1.
        seed: RNG seed; identical inputs reproduce identical counts on
            either backend.
        backend: Optional per-call backend override.

    Returns:
        (rate_estimate, visibility_estimate): the post-selected fraction of
        all frames, and the entangled fraction of post-selected frames.
    """
    if d < 1:
        raise ValueError(f"frame needs at least one bin, got d={d}")
    if n_frames < 1:
        raise ValueError(f"need at least one frame, got {n_frames}")
    seed = int(seed) & U64_MASK
    frame = d * params.bin_width
    tables = (
        poisson_cdf_table(params.pair_rate * frame),
        poisson_cdf_table(params.env_rate_a * frame),
        poisson_cdf_table(params.env_rate_b * frame),
        poisson_cdf_table(params.dark_rate_a * frame),
        poisson_cdf_table(params.dark_rate_b * frame),
    )
    rates = (
        1.0 - params.loss_a,
        1.0 - params.loss_b,
        params.efficiency_a,
        params.efficiency_b,
    )
    if active_backend(backend) == "numba":
        n_post, n_ent = temporal_counts_numba(
            np.uint64(seed), 0, n_frames, *tables, *rates
        )
    else:
        n_post, n_ent = _run_chunked(
            lambda start, span: temporal_counts_numpy(
                seed, start, span, *tables, *rates
            ),
            n_frames,
        )
    return (
        McEstimate.from_counts(n_frames, n_post),
        McEstimate.from_counts(n_post, n_ent),
    )


def simulate_spatial(
    params: SpatialParams,
    d: int,
    n_windows: int,
    seed: int,
    backend: str | None = None,
) -> tuple[McEstimate, McEstimate]:
    """Samples spatial-mode coincidence windows and counts coincidences.

    Per window: pair and environment counts are Poisson; each pair enters
    the encoded mode set with probability encode_prob and lands in one of d
    matched mode pairs uniformly; each photon survives loss and clicks with
    the detector efficiency; environment photons pick a mode uniformly and
    click with the efficiency; every detector fires a dark count with
    probability 1 - exp(-dark_rate * window). Repeat clicks on one detector
    collapse to one event. A window passes post-selection when each side has
    exactly one lit detector; it counts as correlated when some source pair
    produced clicks on both sides (necessarily on matching detectors).

    Args:
        params: Physical rates of the spatial-mode link.
        d: Number of modes per side, 1 <= d <= 64 (detector masks are one
            64-bit word).
        n_windows: Number of windows to sample, >= 1.
        seed: RNG seed; identical inputs reproduce identical counts on
            either backend.
        backend: Optional per-call backend override.

    Returns:
        (rate_estimate, visibility_estimate): the post-selected fraction of
        all windows, and the correlated fraction of post-selected windows.
    """
    if not 1 <= d <= MAX_SPATIAL_MODES:
        raise ValueError(
            f"mode count must be in [1, {MAX_SPATIAL_MODES}], got d={d}"
        )
    if n_windows < 1:
        raise ValueError(f"need at least one window, got {n_windows}")
    seed = int(seed) & U64_MASK
    window = params.window_width
    tables = (
        poisson_cdf_table(params.pair_rate * window),
        poisson_cdf_table(params.env_rate_a * window),
        poisson_cdf_table(params.env_rate_b * window),
    )
    rates = (
        params.encode_prob,
        1.0 - params.loss_a,
        1.0 - params.loss_b,
        params.efficiency_a,
        params.efficiency_b,
        -math.expm1(-params.dark_rate_a * window),
        -math.expm1(-params.dark_rate_b * window),
    )
    if active_backend(backend) == "numba":
        n_post, n_corr = spatial_counts_numba(
            np.uint64(seed), 0, n_windows, d, *tables, *rates
        )
    else:
        n_post, n_corr = _run_chunked(
            lambda start, span: spatial_counts_numpy(
                seed, start, span, d, *tables, *rates
            ),
            n_windows,
        )
    return (
        McEstimate.from_counts(n_windows, n_post),
        McEstimate.from_counts(n_post, n_corr),
    )
