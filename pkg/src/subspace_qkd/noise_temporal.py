"""Analytic rate model for time-bin entanglement distribution.

One detector per party watches a frame of d consecutive time bins. A pulsed
source emits photon pairs at a fixed rate; environment photons and dark
counts add uncorrelated clicks on each side. Frames with exactly one click
per side are kept, and the fraction caused by a detected pair sets the
effective isotropic visibility. Combined with the block-coding key rates
this yields secret bits per second as a function of dimension.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .keyrate import iso_keyrate_closed_form

MULTI_PAIR_LIMIT = 0.2

_RATE_FIELDS = ("pair_rate", "env_rate_a", "env_rate_b", "dark_rate_a", "dark_rate_b")
_PROB_FIELDS = ("loss_a", "loss_b", "efficiency_a", "efficiency_b")


@dataclass(frozen=True)
class TemporalParams:
    """Physical parameters of a time-bin link.

    Attributes:
        pair_rate: Pair production rate of the source (1/s).
        env_rate_a: Environment photon rate reaching side A (1/s).
        env_rate_b: Environment photon rate reaching side B (1/s).
        dark_rate_a: Dark-count rate of A's detector (1/s).
        dark_rate_b: Dark-count rate of B's detector (1/s).
        loss_a: Probability that a pair photon headed to A is lost in transit.
        loss_b: Probability that a pair photon headed to B is lost in transit.
        efficiency_a: Click probability of A's detector per arriving photon.
        efficiency_b: Click probability of B's detector per arriving photon.
        bin_width: Duration of one time bin (s); a frame spans d bins.
    """

    pair_rate: float
    env_rate_a: float
    env_rate_b: float
    dark_rate_a: float
    dark_rate_b: float
    loss_a: float
    loss_b: float
    efficiency_a: float
    efficiency_b: float
    bin_width: float

    def __post_init__(self) -> None:
        for name in _RATE_FIELDS:
            value = getattr(self, name)
            if value < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
        for name in _PROB_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.bin_width <= 0.0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")

    @classmethod
    def symmetric(
        cls,
        pair_rate: float,
        env_rate: float,
        dark_rate: float,
        loss: float,
        efficiency: float,
        bin_width: float,
    ) -> "TemporalParams":
        """Build parameters with identical values for both sides."""
        return cls(
            pair_rate=pair_rate,
            env_rate_a=env_rate,
            env_rate_b=env_rate,
            dark_rate_a=dark_rate,
            dark_rate_b=dark_rate,
            loss_a=loss,
            loss_b=loss,
            efficiency_a=efficiency,
            efficiency_b=efficiency,
            bin_width=bin_width,
        )


@dataclass(frozen=True)
class TemporalDerived:
    """Click-rate constants derived from TemporalParams.

    Attributes:
        fail_a: Probability that a pair photon produces no click on side A
            (lost in transit, or arrived and missed).
        fail_b: Same for side B.
        background_rate_a: Rate of clicks on side A not caused by the pair
            source: dark counts plus detected environment photons (1/s).
        background_rate_b: Same for side B.
        single_rate_a: Total uncorrelated click rate on side A: background
            plus pairs whose partner photon went undetected (1/s).
        single_rate_b: Same for side B.
        pair_click_rate: Rate of pairs detected on both sides (1/s).
    """

    fail_a: float
    fail_b: float
    background_rate_a: float
    background_rate_b: float
    single_rate_a: float
    single_rate_b: float
    pair_click_rate: float

    def __post_init__(self) -> None:
        for name in ("fail_a", "fail_b"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        for name in (
            "background_rate_a",
            "background_rate_b",
            "single_rate_a",
            "single_rate_b",
            "pair_click_rate",
        ):
            value = getattr(self, name)
            if value < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {value}")


@dataclass(frozen=True)
class MultiphotonCheck:
    """Outcome of the rare-multi-pair sanity check for a frame length.

    Attributes:
        mean_pairs: Expected pairs per frame, pair_rate * d * bin_width.
        multi_pair_probability: Probability of two or more pairs in one
            frame, 1 - (1 + m) exp(-m) at mean m.
        passed: True when mean_pairs < 0.2, the regime where frames with
            several pairs are a negligible correction.
    """

    mean_pairs: float
    multi_pair_probability: float
    passed: bool


def _frame_duration(d: int, bin_width: float) -> float:
    if d < 1:
        raise ValueError(f"dimension must be positive, got d={d}")
    if bin_width <= 0.0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    return d * bin_width


def derive_constants(params: TemporalParams) -> TemporalDerived:
    """Reduce link parameters to the click rates that set all frame statistics.

    A pair photon clicks on its side with probability efficiency * (1 - loss);
    uncorrelated clicks on one side combine the background with pairs whose
    partner photon went undetected on the other side.
    """
    fail_a = 1.0 - params.efficiency_a * (1.0 - params.loss_a)
    fail_b = 1.0 - params.efficiency_b * (1.0 - params.loss_b)
    background_a = params.dark_rate_a + params.env_rate_a * params.efficiency_a
    background_b = params.dark_rate_b + params.env_rate_b * params.efficiency_b
    return TemporalDerived(
        fail_a=fail_a,
        fail_b=fail_b,
        background_rate_a=background_a,
        background_rate_b=background_b,
        single_rate_a=background_a + params.pair_rate * fail_b * (1.0 - fail_a),
        single_rate_b=background_b + params.pair_rate * fail_a * (1.0 - fail_b),
        pair_click_rate=params.pair_rate * (1.0 - fail_a) * (1.0 - fail_b),
    )


def visibility(d: int, derived: TemporalDerived, bin_width: float) -> float:
    """Probability that a kept frame's coincidence came from a detected pair.

    Args:
        d: Local dimension; the frame spans d bins of bin_width.
        derived: Click-rate constants from derive_constants.
        bin_width: Duration of one time bin (s).

    Returns:
        1 / (1 + F * single_rate_a * single_rate_b / pair_click_rate) with
        F = d * bin_width; lies in (0, 1].

    Raises:
        ValueError: If the pair-click rate is zero (no signal to compare
            against) or the frame is degenerate.
    """
    frame = _frame_duration(d, bin_width)
    if derived.pair_click_rate <= 0.0:
        raise ValueError("pair click rate is zero; visibility is undefined")
    uncorr = derived.single_rate_a * derived.single_rate_b
    return 1.0 / (1.0 + frame * uncorr / derived.pair_click_rate)


def frame_rate(d: int, derived: TemporalDerived, bin_width: float) -> float:
    """Post-selected frames per second: frames with one click on each side.

    Returns:
        exp(-F * (single_rate_a + single_rate_b + pair_click_rate)) *
        (F * single_rate_a * single_rate_b + pair_click_rate) with
        F = d * bin_width.
    """
    frame = _frame_duration(d, bin_width)
    rate_a = derived.single_rate_a
    rate_b = derived.single_rate_b
    pair = derived.pair_click_rate
    damping = math.exp(-frame * (rate_a + rate_b + pair))
    return damping * (frame * rate_a * rate_b + pair)


def coincidence_probability(d: int, derived: TemporalDerived, bin_width: float) -> float:
    """Probability that a single frame ends with exactly one click per side."""
    return frame_rate(d, derived, bin_width) * _frame_duration(d, bin_width)


def pair_success_probability(d: int, derived: TemporalDerived, bin_width: float) -> float:
    """Probability that a frame is kept and its clicks came from one pair."""
    frame = _frame_duration(d, bin_width)
    total = derived.single_rate_a + derived.single_rate_b + derived.pair_click_rate
    return math.exp(-frame * total) * derived.pair_click_rate * frame


def optimal_frame_duration(derived: TemporalDerived) -> float:
    """Frame duration maximizing the pair success probability.

    The success probability is F * pair_click_rate * exp(-F * total), so the
    maximum sits at F = 1 / total, the inverse of the summed click rates.
    """
    total = derived.single_rate_a + derived.single_rate_b + derived.pair_click_rate
    if total <= 0.0:
        raise ValueError("all click rates are zero; any frame duration is optimal")
    return 1.0 / total


def secret_bits_per_second(
    d: int, k: int, params: TemporalParams, clamp: bool = True
) -> float:
    """Secret key throughput of the time-bin link with size-k block coding.

    Args:
        d: Local dimension (frame length in bins).
        k: Block size dividing d.
        params: Physical link parameters.
        clamp: Floor negative block rates at 0 (see iso_keyrate_closed_form).

    Returns:
        Post-selected frames per second times the key rate of the isotropic
        state at the link's effective visibility.
    """
    derived = derive_constants(params)
    v = visibility(d, derived, params.bin_width)
    rate = frame_rate(d, derived, params.bin_width)
    return rate * iso_keyrate_closed_form(d, v, k, clamp=clamp)


def noise_to_signal(derived: TemporalDerived) -> float:
    """Uncorrelated clicks as a fraction of all clicks on one side.

    Args:
        derived: Click-rate constants; the two sides are expected to match.
            With asymmetric sides the larger single rate is used and a
            warning is emitted.

    Returns:
        single_rate / (single_rate + pair_click_rate), or 0.0 when there are
        no uncorrelated clicks at all.
    """
    if derived.single_rate_a != derived.single_rate_b:
        warnings.warn(
            "uncorrelated click rates differ between sides; "
            "using the larger one for the noise-to-signal ratio",
            stacklevel=2,
        )
    rate = max(derived.single_rate_a, derived.single_rate_b)
    if rate == 0.0:
        return 0.0
    return rate / (rate + derived.pair_click_rate)


def validate_multiphoton_assumption(params: TemporalParams, d: int) -> MultiphotonCheck:
    """Check that frames with two or more pairs are rare enough to neglect.

    Args:
        params: Physical link parameters.
        d: Local dimension (frame length in bins).

    Returns:
        MultiphotonCheck with the mean pairs per frame, the exact
        probability of seeing at least two, and the pass flag.
    """
    mean = params.pair_rate * _frame_duration(d, params.bin_width)
    # 1 - (1 + m) e^{-m}, written to stay accurate for small m
    prob = -math.expm1(-mean) - mean * math.exp(-mean)
    return MultiphotonCheck(
        mean_pairs=mean,
        multi_pair_probability=prob,
        passed=mean < MULTI_PAIR_LIMIT,
    )


def _single_pair_bracket(frame: float, params: TemporalParams) -> float:
    """Coincidence weight keeping at most one pair per frame.

    Sums the one-pair term (pair present, each side clicks from the pair
    photon or a background event) and the zero-pair term (both clicks from
    background).
    """
    click_a = params.efficiency_a * (1.0 - params.loss_a)
    click_b = params.efficiency_b * (1.0 - params.loss_b)
    background_a = params.dark_rate_a + params.env_rate_a * params.efficiency_a
    background_b = params.dark_rate_b + params.env_rate_b * params.efficiency_b
    alpha_a = click_a + frame * background_a * (1.0 - click_a)
    alpha_b = click_b + frame * background_b * (1.0 - click_b)
    return params.pair_rate * alpha_a * alpha_b + frame * background_a * background_b


def single_pair_coincidence_probability(d: int, params: TemporalParams) -> float:
    """Coincidence probability of a frame, ignoring multi-pair frames.

    Secondary regime-comparison variant of coincidence_probability: it keeps
    only frames with at most one pair, so it is accurate when
    validate_multiphoton_assumption passes with a wide margin. The canonical
    functions resum all pair numbers and stay exact.
    """
    frame = _frame_duration(d, params.bin_width)
    background_a = params.dark_rate_a + params.env_rate_a * params.efficiency_a
    background_b = params.dark_rate_b + params.env_rate_b * params.efficiency_b
    damping = math.exp(-frame * (background_a + background_b + params.pair_rate))
    return damping * frame * _single_pair_bracket(frame, params)


def single_pair_success_probability(d: int, params: TemporalParams) -> float:
    """Probability that one pair was emitted, clicked on both sides, alone.

    Secondary regime-comparison variant of pair_success_probability: exactly
    one pair in the frame, both photons detected, background silent.
    """
    frame = _frame_duration(d, params.bin_width)
    mean = params.pair_rate * frame
    click_a = params.efficiency_a * (1.0 - params.loss_a)
    click_b = params.efficiency_b * (1.0 - params.loss_b)
    background_a = params.dark_rate_a + params.env_rate_a * params.efficiency_a
    background_b = params.dark_rate_b + params.env_rate_b * params.efficiency_b
    return (
        mean
        * math.exp(-mean)
        * click_a
        * click_b
        * math.exp(-frame * (background_a + background_b))
    )


def single_pair_visibility(d: int, params: TemporalParams) -> float:
    """Visibility ignoring multi-pair frames: success over coincidence weight.

    Secondary regime-comparison variant of visibility; the frame damping
    cancels in the ratio, leaving
    pair_rate * click_a * click_b / bracket.
    """
    frame = _frame_duration(d, params.bin_width)
    bracket = _single_pair_bracket(frame, params)
    if bracket <= 0.0:
        raise ValueError("no click sources; visibility is undefined")
    click_a = params.efficiency_a * (1.0 - params.loss_a)
    click_b = params.efficiency_b * (1.0 - params.loss_b)
    return params.pair_rate * click_a * click_b / bracket
