"""Analytic rate model for spatial-mode entanglement distribution.

Each party watches d mode-resolved detectors within a shared coincidence
window. Pairs land in anti-correlated modes (relabeled here so matched modes
share an index); environment photons and dark counts click independently
across detectors. Windows with exactly one click per side are kept, and the
fraction with both clicks in matched modes beyond the accidental background
sets the effective isotropic visibility. Closed forms for the window
statistics are canonical; the brute-force nested sums are retained as slow
cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .keyrate import iso_keyrate_closed_form

_RATE_FIELDS = ("pair_rate", "env_rate_a", "env_rate_b", "dark_rate_a", "dark_rate_b")
_PROB_FIELDS = ("loss_a", "loss_b", "efficiency_a", "efficiency_b", "encode_prob")


@dataclass(frozen=True)
class SpatialParams:
    """Physical parameters of a spatial-mode link.

    Attributes:
        pair_rate: Pair production rate of the source (1/s).
        env_rate_a: Environment photon rate reaching side A (1/s), losses
            already absorbed.
        env_rate_b: Same for side B.
        dark_rate_a: Dark-count rate per detector on side A (1/s).
        dark_rate_b: Same for side B.
        loss_a: Probability that a pair photon headed to A is lost in transit.
        loss_b: Same for side B.
        efficiency_a: Click probability of each A detector per arriving photon.
        efficiency_b: Same for side B.
        window_width: Coincidence window duration (s).
        encode_prob: Probability that an emitted pair falls within the d
            measured modes; treated as dimension-independent.
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
    window_width: float
    encode_prob: float = 1.0

    def __post_init__(self) -> None:
        for name in _RATE_FIELDS:
            value = getattr(self, name)
            if value < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
        for name in _PROB_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.window_width <= 0.0:
            raise ValueError(f"window_width must be positive, got {self.window_width}")

    @classmethod
    def symmetric(
        cls,
        pair_rate: float,
        env_rate: float,
        dark_rate: float,
        loss: float,
        efficiency: float,
        window_width: float,
        encode_prob: float = 1.0,
    ) -> "SpatialParams":
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
            window_width=window_width,
            encode_prob=encode_prob,
        )


@dataclass(frozen=True)
class SpatialDerived:
    """Click-rate constants derived from SpatialParams.

    Attributes:
        stray_rate_a: Uncorrelated photon click rate on side A, spread over
            the d modes: detected environment photons plus the pair singles
            cross-term (1/s).
        stray_rate_b: Same for side B.
        pair_click_rate: Rate of encoded pairs detected on both sides (1/s).
        rate_prefactor: Leading factor of the valid-round rate (1/s).
        dark_rate_a: Dark-count rate per detector on side A, carried along
            because the round rate needs it per detector (1/s).
        dark_rate_b: Same for side B.
        window_width: Coincidence window duration (s), carried along.
    """

    stray_rate_a: float
    stray_rate_b: float
    pair_click_rate: float
    rate_prefactor: float
    dark_rate_a: float
    dark_rate_b: float
    window_width: float

    def __post_init__(self) -> None:
        for name in (
            "stray_rate_a",
            "stray_rate_b",
            "pair_click_rate",
            "rate_prefactor",
            "dark_rate_a",
            "dark_rate_b",
        ):
            value = getattr(self, name)
            if value < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
        if self.window_width <= 0.0:
            raise ValueError(f"window_width must be positive, got {self.window_width}")


@dataclass(frozen=True)
class EventProbabilities:
    """Window-event probabilities given j encoded pairs, per closed form.

    Attributes:
        photons: Number of encoded pairs j the record conditions on.
        no_click_a: No pair-photon click anywhere on side A.
        no_click_b: Same for side B.
        single_click_a: Pair photons click in exactly one A detector.
        single_click_b: Same for side B.
        same_detector: Both sides see exactly one pair-photon click, in
            matched modes.
        different_detector: Both sides see exactly one pair-photon click, in
            unmatched modes.
        dark_counts_a: Tuple over n = 0..d of the probability that exactly n
            of side A's d detectors register a dark count.
        dark_counts_b: Same for side B.
        dark_none_elsewhere_a: No dark count in the d - 1 other detectors,
            given one already clicked.
        dark_none_elsewhere_b: Same for side B.
        env_single_a: Environment photons click in exactly one A detector.
        env_single_b: Same for side B.
        env_none_elsewhere_a: No environment click in the d - 1 other
            detectors, given one already clicked.
        env_none_elsewhere_b: Same for side B.
    """

    photons: int
    no_click_a: float
    no_click_b: float
    single_click_a: float
    single_click_b: float
    same_detector: float
    different_detector: float
    dark_counts_a: tuple[float, ...]
    dark_counts_b: tuple[float, ...]
    dark_none_elsewhere_a: float
    dark_none_elsewhere_b: float
    env_single_a: float
    env_single_b: float
    env_none_elsewhere_a: float
    env_none_elsewhere_b: float


def _check_dimension(d: int) -> None:
    if d < 1:
        raise ValueError(f"dimension must be positive, got d={d}")


def derive_constants(params: SpatialParams) -> SpatialDerived:
    """Reduce link parameters to the click rates that set all window statistics.

    A pair photon clicks on its side with probability efficiency * (1 - loss);
    each stray rate combines that side's detected environment photons with
    pairs detected on one side only.
    """
    click_a = params.efficiency_a * (1.0 - params.loss_a)
    click_b = params.efficiency_b * (1.0 - params.loss_b)
    encoded_rate = params.encode_prob * params.pair_rate
    stray_a = params.efficiency_a * params.env_rate_a + encoded_rate * click_b * (
        1.0 - click_a
    )
    stray_b = params.efficiency_b * params.env_rate_b + encoded_rate * click_a * (
        1.0 - click_b
    )
    gamma = encoded_rate * click_a * click_b
    dt = params.window_width
    prefactor = (
        math.exp(dt * (params.dark_rate_a + params.dark_rate_b - stray_a - stray_b - gamma))
        / dt
    )
    return SpatialDerived(
        stray_rate_a=stray_a,
        stray_rate_b=stray_b,
        pair_click_rate=gamma,
        rate_prefactor=prefactor,
        dark_rate_a=params.dark_rate_a,
        dark_rate_b=params.dark_rate_b,
        window_width=dt,
    )


def _uncorrelated_click_probs(
    d: int, derived: SpatialDerived, window_width: float
) -> tuple[float, float]:
    """Per-detector probability of an uncorrelated click within one window."""
    u_a = -math.expm1(-window_width * (derived.dark_rate_a + derived.stray_rate_a / d))
    u_b = -math.expm1(-window_width * (derived.dark_rate_b + derived.stray_rate_b / d))
    return u_a, u_b


def visibility(d: int, derived: SpatialDerived, window_width: float) -> float:
    """Probability that a kept window's coincidence came from a detected pair.

    Args:
        d: Number of modes per side.
        derived: Click-rate constants from derive_constants.
        window_width: Coincidence window duration (s).

    Returns:
        matched / (matched + d * u_a * u_b), where matched is the
        probability expm1(window_width * pair_click_rate / d) of a pair
        click in one matched mode and u_a, u_b are the per-detector
        uncorrelated click probabilities; lies in (0, 1].

    Raises:
        ValueError: If the pair-click rate is zero (no signal to compare
            against) or the window is degenerate.
    """
    _check_dimension(d)
    if window_width <= 0.0:
        raise ValueError(f"window_width must be positive, got {window_width}")
    if derived.pair_click_rate <= 0.0:
        raise ValueError("pair click rate is zero; visibility is undefined")
    matched = math.expm1(window_width * derived.pair_click_rate / d)
    u_a, u_b = _uncorrelated_click_probs(d, derived, window_width)
    return matched / (matched + d * u_a * u_b)


def coincidence_probability(d: int, derived: SpatialDerived) -> float:
    """Probability that a single window ends with exactly one click per side."""
    _check_dimension(d)
    dt = derived.window_width
    singles = (
        derived.dark_rate_a
        + derived.stray_rate_a / d
        + derived.dark_rate_b
        + derived.stray_rate_b / d
    )
    damping = d * math.exp(-dt * (d - 1) * singles) * math.exp(-dt * derived.pair_click_rate)
    matched = math.expm1(dt * derived.pair_click_rate / d)
    u_a, u_b = _uncorrelated_click_probs(d, derived, dt)
    return damping * (d * u_a * u_b + matched)


def pair_success_probability(d: int, derived: SpatialDerived) -> float:
    """Probability that a window is kept with both clicks in matched modes."""
    _check_dimension(d)
    dt = derived.window_width
    singles = (
        derived.dark_rate_a
        + derived.stray_rate_a / d
        + derived.dark_rate_b
        + derived.stray_rate_b / d
    )
    damping = d * math.exp(-dt * (d - 1) * singles) * math.exp(-dt * derived.pair_click_rate)
    return damping * math.expm1(dt * derived.pair_click_rate / d)


def round_rate(d: int, derived: SpatialDerived) -> float:
    """Post-selected rounds per second: windows with one click on each side.

    Equals coincidence_probability(d, derived) / window_width exactly; the
    factored form keeps the dimension-independent prefactor explicit.
    """
    _check_dimension(d)
    dt = derived.window_width
    u_a, u_b = _uncorrelated_click_probs(d, derived, dt)
    matched = math.expm1(dt * derived.pair_click_rate / d)
    return (
        derived.rate_prefactor
        * math.exp(-d * dt * (derived.dark_rate_a + derived.dark_rate_b))
        * math.exp(dt * (derived.stray_rate_a + derived.stray_rate_b) / d)
        * (d * d * u_a * u_b + d * matched)
    )


def secret_bits_per_second(
    d: int, k: int, params: SpatialParams, clamp: bool = True
) -> float:
    """Secret key throughput of the spatial-mode link with size-k block coding.

    Args:
        d: Number of modes per side.
        k: Block size dividing d.
        params: Physical link parameters.
        clamp: Floor negative block rates at 0 (see iso_keyrate_closed_form).

    Returns:
        Post-selected rounds per second times the key rate of the isotropic
        state at the link's effective visibility.
    """
    derived = derive_constants(params)
    v = visibility(d, derived, params.window_width)
    rate = round_rate(d, derived)
    return rate * iso_keyrate_closed_form(d, v, k, clamp=clamp)


def event_probabilities(j: int, d: int, params: SpatialParams) -> EventProbabilities:
    """Closed-form window-event probabilities given j encoded pairs.

    Args:
        j: Number of pairs that landed in the measured modes.
        d: Number of modes per side.
        params: Physical link parameters.

    Returns:
        EventProbabilities record; the pair-photon entries condition on j,
        the dark-count and environment entries depend only on the window.
    """
    if j < 0:
        raise ValueError(f"photon count must be nonnegative, got j={j}")
    _check_dimension(d)
    click_a = params.efficiency_a * (1.0 - params.loss_a)
    click_b = params.efficiency_b * (1.0 - params.loss_b)
    dt = params.window_width

    both_miss = (1.0 - click_a) * (1.0 - click_b)
    one_side = click_a * (1.0 - click_b) + click_b * (1.0 - click_a)
    # inclusion-exclusion terms: one half confined to the clicking mode
    # (click there or nowhere) while the other half stays silent
    confine_a = (1.0 - click_a + click_a / d) * (1.0 - click_b)
    confine_b = (1.0 - click_a) * (1.0 - click_b + click_b / d)
    same = d * (
        both_miss**j
        + (both_miss + (one_side + click_a * click_b) / d) ** j
        - confine_a**j
        - confine_b**j
    )
    diff = d * (d - 1) * (
        both_miss**j + (both_miss + one_side / d) ** j - confine_a**j - confine_b**j
    )

    def dark_distribution(rate: float) -> tuple[float, ...]:
        quiet = math.exp(-dt * rate)
        return tuple(
            math.comb(d, n) * quiet ** (d - n) * (1.0 - quiet) ** n
            for n in range(d + 1)
        )

    env_a = params.efficiency_a * params.env_rate_a * dt
    env_b = params.efficiency_b * params.env_rate_b * dt
    return EventProbabilities(
        photons=j,
        no_click_a=(1.0 - click_a) ** j,
        no_click_b=(1.0 - click_b) ** j,
        single_click_a=d * ((1.0 - click_a + click_a / d) ** j - (1.0 - click_a) ** j),
        single_click_b=d * ((1.0 - click_b + click_b / d) ** j - (1.0 - click_b) ** j),
        same_detector=same,
        different_detector=diff,
        dark_counts_a=dark_distribution(params.dark_rate_a),
        dark_counts_b=dark_distribution(params.dark_rate_b),
        dark_none_elsewhere_a=math.exp(-(d - 1) * dt * params.dark_rate_a),
        dark_none_elsewhere_b=math.exp(-(d - 1) * dt * params.dark_rate_b),
        env_single_a=d * math.exp(-env_a * (d - 1) / d) * -math.expm1(-env_a / d),
        env_single_b=d * math.exp(-env_b * (d - 1) / d) * -math.expm1(-env_b / d),
        env_none_elsewhere_a=math.exp(-env_a * (d - 1) / d),
        env_none_elsewhere_b=math.exp(-env_b * (d - 1) / d),
    )


def nested_no_click(j: int, loss: float, efficiency: float) -> float:
    """Brute-force sum over surviving photons for the no-click probability.

    Cross-check for the closed form in event_probabilities; sums over the
    number of photons that survive transit, none of which may click.
    """
    return sum(
        math.comb(j, r)
        * (1.0 - loss) ** r
        * loss ** (j - r)
        * (1.0 - efficiency) ** r
        for r in range(j + 1)
    )


def nested_single_click(j: int, d: int, loss: float, efficiency: float) -> float:
    """Brute-force sum for the single-detector click probability.

    Cross-check for the closed form in event_probabilities; sums over the
    survivors and over how many of them land in the clicking mode.
    """
    total = 0.0
    for survivors in range(j + 1):
        arrive = math.comb(j, survivors) * (1.0 - loss) ** survivors * loss ** (
            j - survivors
        )
        inner = 0.0
        for in_mode in range(survivors + 1):
            inner += (
                math.comb(survivors, in_mode)
                * ((d - 1) / d * (1.0 - efficiency)) ** (survivors - in_mode)
                * (1.0 / d) ** in_mode
                * (1.0 - (1.0 - efficiency) ** in_mode)
            )
        total += arrive * inner
    return d * total


def _survival_split(
    j: int, loss_a: float, loss_b: float
) -> list[tuple[int, int, int, float]]:
    """Multinomial split of j pairs by which halves survive transit.

    Yields (only_a, only_b, both, weight): counts of pairs whose A half
    alone arrived, whose B half alone arrived, and whose halves both
    arrived, with the multinomial probability of that split.
    """
    split = []
    for only_a in range(j + 1):
        for only_b in range(j - only_a + 1):
            for both in range(j - only_a - only_b + 1):
                lost = j - only_a - only_b - both
                weight = (
                    math.comb(j, only_a)
                    * math.comb(j - only_a, only_b)
                    * math.comb(j - only_a - only_b, both)
                    * (loss_b * (1.0 - loss_a)) ** only_a
                    * (loss_a * (1.0 - loss_b)) ** only_b
                    * ((1.0 - loss_a) * (1.0 - loss_b)) ** both
                    * (loss_a * loss_b) ** lost
                )
                split.append((only_a, only_b, both, weight))
    return split


def nested_same_detector(
    j: int,
    d: int,
    loss_a: float,
    loss_b: float,
    efficiency_a: float,
    efficiency_b: float,
) -> float:
    """Brute-force sum for one pair-photon click per side in matched modes.

    Cross-check for the closed form in event_probabilities; sums over the
    survival split of the pairs and over how many of each class land in the
    clicking matched mode.
    """
    miss_a = 1.0 - efficiency_a
    miss_b = 1.0 - efficiency_b
    total = 0.0
    for only_a, only_b, both, weight in _survival_split(j, loss_a, loss_b):
        for l1 in range(only_a + 1):
            w1 = (
                math.comb(only_a, l1)
                * ((d - 1) / d * miss_a) ** (only_a - l1)
                * (1.0 / d) ** l1
            )
            for l2 in range(only_b + 1):
                w2 = (
                    math.comb(only_b, l2)
                    * ((d - 1) / d * miss_b) ** (only_b - l2)
                    * (1.0 / d) ** l2
                )
                for l3 in range(both + 1):
                    w3 = (
                        math.comb(both, l3)
                        * ((d - 1) / d * miss_a * miss_b) ** (both - l3)
                        * (1.0 / d) ** l3
                    )
                    total += (
                        weight
                        * w1
                        * w2
                        * w3
                        * (1.0 - miss_a ** (l1 + l3))
                        * (1.0 - miss_b ** (l2 + l3))
                    )
    return d * total


def nested_different_detector(
    j: int,
    d: int,
    loss_a: float,
    loss_b: float,
    efficiency_a: float,
    efficiency_b: float,
) -> float:
    """Brute-force sum for one pair-photon click per side in unmatched modes.

    Cross-check for the closed form in event_probabilities; like
    nested_same_detector but the surviving pairs split three ways between
    A's clicking mode, B's clicking mode, and the rest.
    """
    if d < 2:
        return 0.0
    miss_a = 1.0 - efficiency_a
    miss_b = 1.0 - efficiency_b
    total = 0.0
    for only_a, only_b, both, weight in _survival_split(j, loss_a, loss_b):
        for l1 in range(only_a + 1):
            w1 = (
                math.comb(only_a, l1)
                * ((d - 1) / d * miss_a) ** (only_a - l1)
                * (1.0 / d) ** l1
            )
            for l2 in range(only_b + 1):
                w2 = (
                    math.comb(only_b, l2)
                    * ((d - 1) / d * miss_b) ** (only_b - l2)
                    * (1.0 / d) ** l2
                )
                for at_a in range(both + 1):
                    for at_b in range(both - at_a + 1):
                        elsewhere = both - at_a - at_b
                        w3 = (
                            math.comb(both, at_a)
                            * math.comb(both - at_a, at_b)
                            * (1.0 / d) ** (at_a + at_b)
                            * ((d - 2) / d) ** elsewhere
                            * miss_b ** (at_a + elsewhere)
                            * miss_a ** (at_b + elsewhere)
                        )
                        total += (
                            weight
                            * w1
                            * w2
                            * w3
                            * (1.0 - miss_a ** (l1 + at_a))
                            * (1.0 - miss_b ** (l2 + at_b))
                        )
    return d * (d - 1) * total
