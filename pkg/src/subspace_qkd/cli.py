"""Command-line interface: sweeps, figure data, and validation reports.

Eight subcommands expose the library over a uniform plumbing layer: values
come from command-line flags or a key=value config file (flags win), every
command emits one flat record per grid point, and records are written as CSV
(12 significant digits, byte-stable for identical inputs) or JSON (same field
names, non-finite floats become null). Exit codes: 0 success, 1 a validation
or certification check failed, 2 bad usage or configuration.

Physical quantities are SI throughout: rates in 1/s, durations in seconds.
The model-parameter flags are terse on purpose (--lambda pair rate, --nu
environment rate, --mu dark-count rate, --pl transit loss, --pc detector or
coupling efficiency, --tb time-bin width, --dt coincidence window, --pp
encoding probability); each maps onto the long field names of the parameter
types in the noise modules.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import keyrate, mc, noise_spatial, noise_temporal, protocol, quantum, sdp

PROG = "subspace-qkd"
CSV_DIGITS = 12
MIN_MC_TRIALS = 10_000
DEFAULT_Z_THRESHOLD = 5.0
SDP_GAP_LIMIT = 1e-3
SDP_DEFAULT_BLOCKS = "2,3,4,5"
SDP_DEFAULT_WITNESS_GRID = 12
SDP_DEFAULT_WITNESS_SPAN = (0.55, 0.99)

FIG1_DIMENSIONS = "2,4,8,16"
FIG2_DIMENSIONS = "2:64"
# spatial-link operating point of the dimension sweep; the transit loss sits
# on the B arm only (source colocated with A)
FIG2_DEFAULTS = {
    "lambda": "2e5",
    "nu": "21000",
    "mu": "600",
    "pl": "0.984",
    "pc": "0.6",
    "dt": "1e-7",
    "pp": "1.0",
}

# every key a config file may define (flag names with dashes as underscores)
KNOWN_CONFIG_KEYS = frozenset(
    {
        "out",
        "format",
        "seed",
        "d",
        "k",
        "v",
        "w",
        "lambda",
        "nu",
        "mu",
        "pl",
        "pc",
        "tb",
        "dt",
        "pp",
        "model",
        "n",
        "rounds",
        "epsilon",
        "restarts",
        "z_threshold",
        "clamp",
    }
)


class UsageError(Exception):
    """Bad flag or config-file input; mapped to exit code 2."""


class ResultRow(dict):
    """One output record: grid-point inputs echoed plus computed outputs.

    Key insertion order fixes the column order; every row of a command
    carries the same keys.
    """


def to_int(text: str) -> int:
    """Parses an integer, accepting scientific notation for round values."""
    try:
        return int(text, 10)
    except ValueError:
        pass
    value = float(text)
    result = int(round(value))
    if not math.isfinite(value) or abs(value - result) > 1e-9 * max(1.0, abs(value)):
        raise ValueError(f"{text!r} is not an integer")
    return result


def to_float(text: str) -> float:
    return float(text)


def to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def to_format(text: str) -> str:
    lowered = text.strip().lower()
    if lowered not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {text!r}")
    return lowered


def to_model(text: str) -> str:
    lowered = text.strip().lower()
    if lowered not in ("temporal", "spatial"):
        raise ValueError(f"model must be temporal or spatial, got {text!r}")
    return lowered


def _split_items(text: str) -> list[str]:
    items = [part.strip() for part in text.split(",")]
    if not items or any(not part for part in items):
        raise ValueError(f"malformed list {text!r}")
    return items


def to_int_list(text: str) -> list[int]:
    """Parses '2,4,8' or an inclusive range 'start:stop[:step]'."""
    text = text.strip()
    if ":" in text:
        parts = [to_int(part) for part in text.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValueError(f"range needs start:stop[:step], got {text!r}")
        if step < 1 or stop < start:
            raise ValueError(f"bad range {text!r}")
        return list(range(start, stop + 1, step))
    return [to_int(part) for part in _split_items(text)]


def to_float_list(text: str) -> list[float]:
    """Parses '0.5,0.7' or an inclusive range 'start:stop:step'."""
    text = text.strip()
    if ":" in text:
        parts = [to_float(part) for part in text.split(":")]
        if len(parts) != 3:
            raise ValueError(f"range needs start:stop:step, got {text!r}")
        start, stop, step = parts
        if step <= 0.0 or stop < start:
            raise ValueError(f"bad range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    return [to_float(part) for part in _split_items(text)]


def load_config_file(path: str) -> dict[str, str]:
    """Reads a key = value settings file; # starts a comment line."""
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if not sep or not key or not value:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key not in KNOWN_CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value
    return values


class RunConfig:
    """Merged option values for one command; flags override the config file."""

    def __init__(self, command: str, cli: dict, file_values: dict[str, str]):
        self.command = command
        self._cli = cli
        self._file = file_values

    def get(self, name: str, convert, default=None, required: bool = False):
        raw = self._cli.get(name)
        if raw is None:
            raw = self._file.get(name)
        if raw is None:
            if required:
                raise UsageError(
                    f"--{name.replace('_', '-')} is required for {self.command}"
                )
            return default
        if not isinstance(raw, str):
            return raw
        try:
            return convert(raw)
        except ValueError as exc:
            raise UsageError(
                f"invalid value for --{name.replace('_', '-')}: {exc}"
            ) from exc

    def seed(self) -> int:
        seed = self.get("seed", to_int, default=0)
        if not 0 <= seed < 2**64:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {seed}")
        return seed

    def clamp(self) -> bool:
        return self.get("clamp", to_bool, default=True)


def divisors(d: int) -> list[int]:
    return [k for k in range(1, d + 1) if d % k == 0]


def dimension_block_pairs(
    d_list: list[int], k_list: list[int] | None
) -> list[tuple[int, int]]:
    """All (d, k) grid points; defaults k to the divisors of each d.

    An explicit k list is checked strictly: every k must divide every d.
    """
    if k_list is None:
        return [(d, k) for d in d_list for k in divisors(d)]
    for d in d_list:
        for k in k_list:
            if d % k != 0:
                raise UsageError(f"block size k={k} does not divide dimension d={d}")
    return [(d, k) for d in d_list for k in k_list]


def _csv_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{CSV_DIGITS}g}"
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def render_rows(rows: list[ResultRow], fmt: str) -> str:
    """Serializes rows to CSV or JSON text with a trailing newline."""
    if not rows:
        return "" if fmt == "csv" else "[]\n"
    columns = list(rows[0].keys())
    for row in rows:
        if list(row.keys()) != columns:
            raise AssertionError("rows disagree on the column schema")
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_csv_value(row[name]) for name in columns))
        return "\n".join(lines) + "\n"
    payload = [{name: _json_value(row[name]) for name in columns} for row in rows]
    return json.dumps(payload, indent=2) + "\n"


def write_output(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out_path}: {exc}") from exc


def _temporal_params(cfg: RunConfig) -> noise_temporal.TemporalParams:
    return noise_temporal.TemporalParams.symmetric(
        pair_rate=cfg.get("lambda", to_float, required=True),
        env_rate=cfg.get("nu", to_float, default=0.0),
        dark_rate=cfg.get("mu", to_float, default=0.0),
        loss=cfg.get("pl", to_float, default=0.0),
        efficiency=cfg.get("pc", to_float, default=1.0),
        bin_width=cfg.get("tb", to_float, required=True),
    )


def _spatial_params(cfg: RunConfig) -> noise_spatial.SpatialParams:
    return noise_spatial.SpatialParams.symmetric(
        pair_rate=cfg.get("lambda", to_float, required=True),
        env_rate=cfg.get("nu", to_float, default=0.0),
        dark_rate=cfg.get("mu", to_float, default=0.0),
        loss=cfg.get("pl", to_float, default=0.0),
        efficiency=cfg.get("pc", to_float, default=1.0),
        window_width=cfg.get("dt", to_float, required=True),
        encode_prob=cfg.get("pp", to_float, default=1.0),
    )


def cmd_keyrate_iso(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Closed-form rates of the isotropic state for one (d, v) point."""
    d = cfg.get("d", to_int, required=True)
    v = cfg.get("v", to_float, required=True)
    k_list = cfg.get("k", to_int_list)
    pairs = dimension_block_pairs([d], k_list)
    rows = []
    for _, k in pairs:
        rows.append(
            ResultRow(
                d=d,
                k=k,
                visibility=v,
                effective_visibility=keyrate.iso_effective_visibility(d, v, k),
                witness=keyrate.iso_subspace_witness(d, v, k),
                keyrate_signed=keyrate.iso_keyrate_closed_form(d, v, k, clamp=False),
                keyrate_clamped=keyrate.iso_keyrate_closed_form(d, v, k, clamp=True),
            )
        )
    return rows, False


def cmd_sweep(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Isotropic-state rate over a (d, k, v) grid."""
    d_list = cfg.get("d", to_int_list, required=True)
    v_list = cfg.get("v", to_float_list, required=True)
    k_list = cfg.get("k", to_int_list)
    clamp = cfg.clamp()
    rows = []
    for d, k in dimension_block_pairs(d_list, k_list):
        for v in v_list:
            rows.append(
                ResultRow(
                    d=d,
                    k=k,
                    visibility=v,
                    effective_visibility=keyrate.iso_effective_visibility(d, v, k),
                    witness=keyrate.iso_subspace_witness(d, v, k),
                    keyrate=keyrate.iso_keyrate_closed_form(d, v, k, clamp=clamp),
                )
            )
    return rows, False


def cmd_keyrate_temporal(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Time-bin link rates over a (d, k) grid at one operating point."""
    d_list = cfg.get("d", to_int_list, required=True)
    k_list = cfg.get("k", to_int_list)
    clamp = cfg.clamp()
    params = _temporal_params(cfg)
    derived = noise_temporal.derive_constants(params)
    nsr = noise_temporal.noise_to_signal(derived)
    rows = []
    for d, k in dimension_block_pairs(d_list, k_list):
        v = noise_temporal.visibility(d, derived, params.bin_width)
        rate = noise_temporal.frame_rate(d, derived, params.bin_width)
        bits = keyrate.iso_keyrate_closed_form(d, v, k, clamp=clamp)
        check = noise_temporal.validate_multiphoton_assumption(params, d)
        rows.append(
            ResultRow(
                d=d,
                k=k,
                pair_rate=params.pair_rate,
                env_rate=params.env_rate_a,
                dark_rate=params.dark_rate_a,
                loss=params.loss_a,
                efficiency=params.efficiency_a,
                bin_width=params.bin_width,
                visibility=v,
                nsr=nsr,
                round_rate=rate,
                keyrate=bits,
                bits_per_second=rate * bits,
                multiphoton_ok=check.passed,
            )
        )
    return rows, False


def cmd_keyrate_spatial(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Spatial-mode link rates over a (d, k) grid at one operating point."""
    d_list = cfg.get("d", to_int_list, required=True)
    k_list = cfg.get("k", to_int_list)
    clamp = cfg.clamp()
    params = _spatial_params(cfg)
    derived = noise_spatial.derive_constants(params)
    rows = []
    for d, k in dimension_block_pairs(d_list, k_list):
        v = noise_spatial.visibility(d, derived, params.window_width)
        rate = noise_spatial.round_rate(d, derived)
        bits = keyrate.iso_keyrate_closed_form(d, v, k, clamp=clamp)
        rows.append(
            ResultRow(
                d=d,
                k=k,
                pair_rate=params.pair_rate,
                env_rate=params.env_rate_a,
                dark_rate=params.dark_rate_a,
                loss=params.loss_a,
                efficiency=params.efficiency_a,
                window_width=params.window_width,
                encode_prob=params.encode_prob,
                visibility=v,
                round_rate=rate,
                keyrate=bits,
                bits_per_second=rate * bits,
            )
        )
    return rows, False


def cmd_figure(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Data series behind the two reference plots."""
    if args.which == "fig1":
        return _figure_noise_sweep(cfg)
    return _figure_dimension_sweep(cfg)


def _figure_noise_sweep(cfg: RunConfig) -> tuple[list[ResultRow], bool]:
    """Per-round key rate of the time-bin link versus noise-to-signal ratio.

    The environment rate is swept while the correlated-pair rate stays
    fixed, so the default loss-free unit-efficiency settings make the
    noise-to-signal ratio track the swept rate directly.
    """
    pair_rate = cfg.get("lambda", to_float, required=True)
    bin_width = cfg.get("tb", to_float, required=True)
    nu_grid = cfg.get("nu", to_float_list, required=True)
    dark_rate = cfg.get("mu", to_float, default=0.0)
    loss = cfg.get("pl", to_float, default=0.0)
    efficiency = cfg.get("pc", to_float, default=1.0)
    d_list = cfg.get("d", to_int_list, default=to_int_list(FIG1_DIMENSIONS))
    k_list = cfg.get("k", to_int_list, default=[2])
    clamp = cfg.clamp()
    probe = noise_temporal.derive_constants(
        noise_temporal.TemporalParams.symmetric(
            pair_rate, nu_grid[0], dark_rate, loss, efficiency, bin_width
        )
    )
    if probe.pair_click_rate <= 0.0:
        raise UsageError(
            "the correlated-pair click rate is zero; "
            "check --lambda, --pc and --pl"
        )
    pairs = dimension_block_pairs(d_list, k_list)
    rows = []
    for d, k in pairs:
        for nu in nu_grid:
            params = noise_temporal.TemporalParams.symmetric(
                pair_rate, nu, dark_rate, loss, efficiency, bin_width
            )
            derived = noise_temporal.derive_constants(params)
            v = noise_temporal.visibility(d, derived, bin_width)
            rows.append(
                ResultRow(
                    d=d,
                    k=k,
                    env_rate=nu,
                    nsr=noise_temporal.noise_to_signal(derived),
                    visibility=v,
                    keyrate=keyrate.iso_keyrate_closed_form(d, v, k, clamp=clamp),
                )
            )
    return rows, False


def _figure_dimension_sweep(cfg: RunConfig) -> tuple[list[ResultRow], bool]:
    """Spatial-link throughput versus dimension at the reference noise point."""

    def get(name: str, fallback: str) -> float:
        return cfg.get(name, to_float, default=to_float(fallback))

    params = noise_spatial.SpatialParams(
        pair_rate=get("lambda", FIG2_DEFAULTS["lambda"]),
        env_rate_a=get("nu", FIG2_DEFAULTS["nu"]),
        env_rate_b=get("nu", FIG2_DEFAULTS["nu"]),
        dark_rate_a=get("mu", FIG2_DEFAULTS["mu"]),
        dark_rate_b=get("mu", FIG2_DEFAULTS["mu"]),
        loss_a=0.0,
        loss_b=get("pl", FIG2_DEFAULTS["pl"]),
        efficiency_a=get("pc", FIG2_DEFAULTS["pc"]),
        efficiency_b=get("pc", FIG2_DEFAULTS["pc"]),
        window_width=get("dt", FIG2_DEFAULTS["dt"]),
        encode_prob=get("pp", FIG2_DEFAULTS["pp"]),
    )
    d_list = cfg.get("d", to_int_list, default=to_int_list(FIG2_DIMENSIONS))
    k_list = cfg.get("k", to_int_list)
    clamp = cfg.clamp()
    derived = noise_spatial.derive_constants(params)
    rows = []
    for d, k in dimension_block_pairs(d_list, k_list):
        v = noise_spatial.visibility(d, derived, params.window_width)
        rate = noise_spatial.round_rate(d, derived)
        bits = keyrate.iso_keyrate_closed_form(d, v, k, clamp=clamp)
        rows.append(
            ResultRow(
                d=d,
                k=k,
                visibility=v,
                round_rate=rate,
                keyrate=bits,
                bits_per_second=rate * bits,
            )
        )
    return rows, False


def cmd_mc_validate(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Z-tests the event-sampling simulators against the analytic models."""
    model = cfg.get("model", to_model, required=True)
    n_trials = cfg.get("n", to_int, default=100_000)
    if n_trials < MIN_MC_TRIALS:
        raise UsageError(f"need at least {MIN_MC_TRIALS} trials, got {n_trials}")
    d_list = cfg.get("d", to_int_list, default=[2, 8])
    seed = cfg.seed()
    threshold = cfg.get("z_threshold", to_float, default=DEFAULT_Z_THRESHOLD)
    backend = mc.active_backend()

    if model == "temporal":
        params = _temporal_params(cfg)
        derived = noise_temporal.derive_constants(params)
    else:
        params = _spatial_params(cfg)
        derived = noise_spatial.derive_constants(params)

    rows = []
    any_failed = False
    for d in d_list:
        if model == "temporal":
            analytic_v = noise_temporal.visibility(d, derived, params.bin_width)
            analytic_p = noise_temporal.coincidence_probability(
                d, derived, params.bin_width
            )
            per_second = 1.0 / (d * params.bin_width)
            post, matched = mc.simulate_temporal(
                params, d, n_trials, seed, backend=backend
            )
        else:
            analytic_v = noise_spatial.visibility(d, derived, params.window_width)
            analytic_p = noise_spatial.coincidence_probability(d, derived)
            per_second = 1.0 / params.window_width
            post, matched = mc.simulate_spatial(
                params, d, n_trials, seed, backend=backend
            )
        rate_cmp = mc.compare_to_analytic(analytic_p, post, threshold)
        if matched.trials > 0:
            vis_cmp = mc.compare_to_analytic(analytic_v, matched, threshold)
            empirical_v, vis_z, vis_ok = matched.mean, vis_cmp.z_score, vis_cmp.passed
        else:
            # no post-selected rounds at all: nothing to compare against
            empirical_v, vis_z, vis_ok = math.nan, math.nan, False
        rows.append(
            ResultRow(
                model=model,
                d=d,
                n_trials=n_trials,
                seed=seed,
                backend=backend,
                analytic_visibility=analytic_v,
                empirical_visibility=empirical_v,
                visibility_z=vis_z,
                visibility_pass=vis_ok,
                analytic_rate=analytic_p * per_second,
                empirical_rate=post.mean * per_second,
                rate_z=rate_cmp.z_score,
                rate_pass=rate_cmp.passed,
            )
        )
        any_failed = any_failed or not (vis_ok and rate_cmp.passed)
    return rows, any_failed


def cmd_sdp_verify(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Certifies the guessing-probability bound on a (k, witness) grid."""
    k_list = cfg.get("k", to_int_list, default=to_int_list(SDP_DEFAULT_BLOCKS))
    low, high = SDP_DEFAULT_WITNESS_SPAN
    default_grid = np.linspace(low, high, SDP_DEFAULT_WITNESS_GRID).tolist()
    w_list = cfg.get("w", to_float_list, default=default_grid)
    restarts = cfg.get("restarts", to_int, default=2)
    if restarts < 1:
        raise UsageError(f"need at least one restart, got {restarts}")
    seed = cfg.seed()
    rows = []
    any_failed = False
    for k in k_list:
        for w in w_list:
            closed = sdp.closed_form_guessing(w, k)
            cert = sdp.dual_certificate(w, k)
            attack = sdp.primal_search(w, k, restarts=restarts, seed=seed)
            gap = cert.dual_value - attack.value
            passed = cert.feasible and -1e-9 <= gap <= SDP_GAP_LIMIT
            rows.append(
                ResultRow(
                    k=k,
                    witness=w,
                    closed_form=closed,
                    dual_value=cert.dual_value,
                    dual_min_eigenvalue=cert.min_eigenvalue,
                    dual_feasible=cert.feasible,
                    primal_value=attack.value,
                    gap=gap,
                    passed=passed,
                )
            )
            any_failed = any_failed or not passed
    return rows, any_failed


def cmd_protocol_sim(cfg: RunConfig, args) -> tuple[list[ResultRow], bool]:
    """Finite-round simulation on an isotropic state, next to its targets."""
    d = cfg.get("d", to_int, required=True)
    k = cfg.get("k", to_int, required=True)
    v = cfg.get("v", to_float, default=1.0)
    epsilon = cfg.get("epsilon", to_float, default=0.1)
    n_rounds = cfg.get("rounds", to_int, default=100_000)
    seed = cfg.seed()
    if d % k != 0:
        raise UsageError(f"block size k={k} does not divide dimension d={d}")
    layout = quantum.SubspaceLayout(d=d, k=k)
    config = protocol.ProtocolConfig(
        layout=layout, epsilon=epsilon, n_rounds=n_rounds, seed=seed
    )
    records = protocol.run_protocol(quantum.isotropic_state(d, v), config)
    estimates = protocol.estimate_parameters(records, layout)
    band = protocol.asymptotic_rate_estimate(estimates)
    witness_target = keyrate.iso_subspace_witness(d, v, k)
    probability_target = keyrate.iso_block_probability(d, v, k)
    rate_target = keyrate.iso_keyrate_closed_form(d, v, k)
    rows = []
    for block in estimates.blocks:
        rows.append(
            ResultRow(
                d=d,
                k=k,
                visibility=v,
                epsilon=epsilon,
                n_rounds=n_rounds,
                seed=seed,
                block=block.block,
                test_rounds=block.test_rounds,
                key_rounds=block.key_rounds,
                witness_estimate=block.witness,
                witness_stderr=block.witness_stderr,
                witness_analytic=witness_target,
                probability_estimate=block.probability,
                probability_analytic=probability_target,
                block_defined=block.defined,
                total_rate_estimate=estimates.total_rate,
                band_lower=band.lower,
                band_upper=band.upper,
                total_rate_analytic=rate_target,
            )
        )
    return rows, False


COMMANDS = {
    "keyrate-iso": cmd_keyrate_iso,
    "keyrate-temporal": cmd_keyrate_temporal,
    "keyrate-spatial": cmd_keyrate_spatial,
    "sweep": cmd_sweep,
    "figure": cmd_figure,
    "mc-validate": cmd_mc_validate,
    "sdp-verify": cmd_sdp_verify,
    "protocol-sim": cmd_protocol_sim,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value settings file")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", metavar="csv|json", help="output format")
    common.add_argument("--seed", metavar="U64", help="randomness seed")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--d", metavar="LIST", help="dimensions, e.g. 2,4,8 or 2:64")
    grid.add_argument("--k", metavar="LIST", help="block sizes (default: divisors)")

    clamp = argparse.ArgumentParser(add_help=False)
    clamp.add_argument(
        "--clamp",
        dest="clamp",
        action="store_const",
        const="true",
        help="floor negative block rates at zero (default)",
    )
    clamp.add_argument(
        "--allow-negative",
        dest="clamp",
        action="store_const",
        const="false",
        help="report signed block rates",
    )

    link = argparse.ArgumentParser(add_help=False)
    link.add_argument("--lambda", metavar="RATE", help="pair production rate (1/s)")
    link.add_argument("--nu", metavar="RATE", help="environment photon rate (1/s)")
    link.add_argument("--mu", metavar="RATE", help="dark-count rate (1/s)")
    link.add_argument("--pl", metavar="PROB", help="transit loss probability")
    link.add_argument("--pc", metavar="PROB", help="detector/coupling efficiency")
    link.add_argument("--tb", metavar="SEC", help="time-bin width (temporal model)")
    link.add_argument("--dt", metavar="SEC", help="coincidence window (spatial model)")
    link.add_argument("--pp", metavar="PROB", help="encoding probability (spatial)")

    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Key rates for qudit QKD with simultaneous block coding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "keyrate-iso",
        parents=[common, grid],
        help="closed-form rates of the isotropic state at one (d, v) point",
    ).add_argument("--v", metavar="VIS", help="state visibility")
    p = sub.add_parser(
        "sweep",
        parents=[common, grid, clamp],
        help="isotropic-state rates over a (d, k, v) grid",
    )
    p.add_argument("--v", metavar="LIST", help="visibility grid, e.g. 0.3:1:0.005")
    sub.add_parser(
        "keyrate-temporal",
        parents=[common, grid, clamp, link],
        help="time-bin link rates over a (d, k) grid",
    )
    sub.add_parser(
        "keyrate-spatial",
        parents=[common, grid, clamp, link],
        help="spatial-mode link rates over a (d, k) grid",
    )
    p = sub.add_parser(
        "figure",
        parents=[common, grid, clamp, link],
        help="data series behind the reference plots",
    )
    p.add_argument("which", choices=("fig1", "fig2"), help="which series to emit")
    p = sub.add_parser(
        "mc-validate",
        parents=[common, grid, link],
        help="z-test the event-sampling simulators against the analytic models",
    )
    p.add_argument("--model", metavar="NAME", help="temporal or spatial")
    p.add_argument("--n", metavar="COUNT", help="trials per dimension")
    p.add_argument("--z-threshold", metavar="Z", help="hard-failure threshold")
    p = sub.add_parser(
        "sdp-verify",
        parents=[common, grid],
        help="certify the guessing-probability bound on a (k, witness) grid",
    )
    p.add_argument("--w", metavar="LIST", help="witness grid, e.g. 0.55:0.99:0.04")
    p.add_argument("--restarts", metavar="COUNT", help="attack-search restarts")
    p = sub.add_parser(
        "protocol-sim",
        parents=[common, grid],
        help="finite-round protocol simulation on an isotropic state",
    )
    p.add_argument("--v", metavar="VIS", help="state visibility")
    p.add_argument("--epsilon", metavar="PROB", help="test-basis probability")
    p.add_argument("--rounds", metavar="COUNT", help="number of source rounds")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cli_values = {
            name: value
            for name, value in vars(args).items()
            if name not in ("command", "config", "which")
        }
        cfg = RunConfig(args.command, cli_values, file_values)
        rows, failed = COMMANDS[args.command](cfg, args)
        fmt = cfg.get("format", to_format, default="csv")
        out_path = cfg.get("out", str)
        write_output(render_rows(rows, fmt), out_path)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
