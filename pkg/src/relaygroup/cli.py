"""Parameter sweeps from a ``key = value`` configuration file to CSV.

Example configuration::

    # group-size sweep
    M = 24
    K = 2
    preset = fig2_split
    snr_db = 10
    trials = 20000
    seed = 1
    sweep = group_size
    values = divisors     # or an explicit list "6, 8, 12, 24", or "all"

Run with ``relaygroup sweep.cfg --out results.csv``.
"""

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .channel import profile_for
from .config import PRESETS, SystemConfig, apply_snr
from .errors import ConditioningError, ConfigError, RelayError, SimulationFailed
from .simulate import ergodic_sumrate

CSV_VERSION = "# relay-grouping-sim v1"
COLUMNS = (
    "M",
    "N",
    "L",
    "K",
    "sim_mean",
    "sim_stderr",
    "trials",
    "rejected",
    "epsilon",
    "general_bound",
    "fair_bound",
    "asymptotic_gain",
    "efficiency",
    "relative_efficiency",
    "error",
)
SWEEP_VARIABLES = ("group_size", "snr_db", "user_pairs", "spread")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


_KEYS = {
    "M": _int,
    "N": _int,
    "K": _int,
    "P_U": float,
    "P_T": float,
    "N0_R": float,
    "N0_U": float,
    "trials": _int,
    "seed": _int,
    "snr_db": float,
    "snr_u_db": float,
    "preset": str,
    "spread": float,
    "sweep": str,
    "values": str,
    "output": str,
    "emit_efficiency": _bool,
    "c_BW": float,
    "bound_only": _bool,
    "relax_divisors": _bool,
    "relay_noise": _bool,
}


@dataclass(frozen=True)
class SweepSpec:
    """A validated sweep.

    `base` carries the parameters shared by all points; the swept field is
    overwritten per point. `snr_db` and `preset` are reapplied for every
    point so that derived powers follow the point's K and L.
    """

    base: SystemConfig
    sweep_variable: str
    values: tuple
    output: str = None
    emit_efficiency: bool = True
    c_BW: float = 1.0
    spread: float = 0.0
    snr_db: float = None
    snr_u_db: float = None
    preset: str = None
    bound_only: bool = False
    relax_divisors: bool = False
    relay_noise: bool = True
    where: dict = field(default_factory=dict, repr=False, compare=False)

    def point(self, value):
        """`SystemConfig`, spread and SNR of one sweep point.

        For a relaxed (non-divisor) group size the returned config is None.
        """
        base, spread, snr = self.base, self.spread, self.snr_db
        if self.sweep_variable == "group_size":
            if base.M % int(value):
                return None, spread, snr
            base = base.replace(N=int(value))
        elif self.sweep_variable == "user_pairs":
            base = base.replace(K=int(value))
        elif self.sweep_variable == "spread":
            spread = float(value)
        elif self.sweep_variable == "snr_db":
            snr = float(value)
        if snr is not None:
            base = apply_snr(base, snr, self.preset, self.snr_u_db)
        return base, spread, snr


def divisors_above(M, floor):
    """Divisors of `M` in ``(floor, M]``, ascending."""
    return [d for d in range(floor + 1, M + 1) if M % d == 0]


def parse_config(text):
    """Parse and validate a sweep configuration.

    Raises
    ------
    ConfigError
        With the line and column of the offending entry.
    """
    raw, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno, len(body) - len(body.lstrip()) + 1)
        key_part, value_part = body.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, key_col)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno, key_col)
        value = value_part.strip()
        where[key] = (lineno, value_col)
        if key == "values":
            raw[key] = value
            continue
        try:
            raw[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"malformed value for {key}: {exc}", lineno, value_col) from None

    def fail(message, key):
        line, col = where.get(key, (None, None))
        raise ConfigError(message, line, col)

    for key in ("M", "K"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    if "sweep" not in raw:
        raise ConfigError("missing required key 'sweep'")
    sweep = raw["sweep"]
    if sweep not in SWEEP_VARIABLES:
        fail(f"sweep must be one of {', '.join(SWEEP_VARIABLES)}", "sweep")
    if "values" not in raw:
        raise ConfigError("missing required key 'values'")

    preset = raw.get("preset")
    if preset is not None and preset not in PRESETS:
        fail(f"unknown preset {preset!r}", "preset")
    if preset is not None:
        for key in ("P_U", "P_T"):
            if key in raw:
                fail(f"{key} is derived from snr_db under preset {preset}", key)
        if "snr_db" not in raw and sweep != "snr_db":
            fail("preset needs snr_db", "preset")

    M, K = raw["M"], raw["K"]
    text_values = raw["values"]
    if sweep == "group_size" and text_values.strip() == "divisors":
        values = tuple(float(v) for v in divisors_above(M, 2 * K))
    elif sweep == "group_size" and text_values.strip() == "all":
        # every integer group size; needs relax_divisors
        values = tuple(float(v) for v in range(2 * K + 1, M + 1))
    else:
        try:
            values = _float_list(text_values)
        except ValueError as exc:
            fail(f"malformed value list: {exc}", "values")
    if not values:
        fail("values list is empty", "values")
    if len(set(values)) != len(values):
        fail("values list contains duplicates", "values")

    bound_only = raw.get("bound_only", False)
    relax = raw.get("relax_divisors", False)
    if relax and not bound_only:
        fail("relax_divisors is only allowed for bound_only sweeps", "relax_divisors")
    spread = raw.get("spread", 0.0)
    if spread < 0:
        fail("spread must be nonnegative", "spread")

    if sweep in ("group_size", "user_pairs"):
        if any(not float(v).is_integer() or v < 1 for v in values):
            fail(f"{sweep} values must be positive integers", "values")
        values = tuple(int(v) for v in values)
    if sweep == "group_size":
        for n in values:
            if n <= 2 * K:
                fail(f"N must exceed 2K (N={n}, 2K={2 * K})", "values")
            if M % n and not relax:
                fail(f"N must divide M (M={M}, N={n})", "values")
            if M % n and spread:
                fail("relaxed group sizes need spread = 0", "values")
    if sweep == "spread" and any(v < 0 for v in values):
        fail("spread values must be nonnegative", "values")

    N = raw.get("N", M if sweep == "group_size" else None)
    if N is None:
        raise ConfigError("missing required key 'N'")
    params = {k: raw[k] for k in ("P_U", "P_T", "N0_R", "N0_U", "trials", "seed") if k in raw}
    try:
        base = SystemConfig(M=M, N=N, K=K, **params)
    except ConfigError as exc:
        culprit = next((k for k in ("N", "M", "K", "trials", "seed") if k in exc.message), "N")
        fail(exc.message, culprit if culprit in where else "N")
    if sweep != "group_size":
        try:
            base.require_zf()
        except ConfigError as exc:
            fail(exc.message, "N")
    if sweep == "user_pairs":
        for k in values:
            if base.N <= 2 * k:
                fail(f"N must exceed 2K (N={base.N}, 2K={2 * k})", "values")
    if "c_BW" in raw and not raw["c_BW"] > 0:
        fail("c_BW must be positive", "c_BW")

    return SweepSpec(
        base=base,
        sweep_variable=sweep,
        values=values,
        output=raw.get("output"),
        emit_efficiency=raw.get("emit_efficiency", True),
        c_BW=raw.get("c_BW", 1.0),
        spread=spread,
        snr_db=raw.get("snr_db"),
        snr_u_db=raw.get("snr_u_db"),
        preset=preset,
        bound_only=bound_only,
        relax_divisors=relax,
        relay_noise=raw.get("relay_noise", True),
        where=where,
    )


def _relaxed_row(spec, N):
    """Bound-only row for a group size that does not divide M."""
    base = spec.base
    cfg = base if spec.snr_db is None else apply_snr(base, spec.snr_db, spec.preset, spec.snr_u_db)
    fair = bounds.fair_bound_value(cfg.P_T / cfg.N0_U, cfg.M, N, cfg.K, 1.0)
    return {
        "M": cfg.M,
        "N": N,
        "L": cfg.M / N,
        "K": cfg.K,
        "epsilon": 1.0,
        # with P_R = P_T N / M and delta = L^2 / 2K both bounds coincide
        "general_bound": fair,
        "fair_bound": fair,
        "asymptotic_gain": bounds.asymptotic_gain(cfg, 1.0),
    }


def _evaluate(spec, value, workers):
    cfg, spread, _ = spec.point(value)
    if cfg is None:
        return _relaxed_row(spec, int(value))
    profile = profile_for(cfg, spread)
    report = bounds.bound_report(cfg, profile, spec.c_BW)
    row = {
        "M": cfg.M,
        "N": cfg.N,
        "L": cfg.L,
        "K": cfg.K,
        "epsilon": report.epsilon,
        "general_bound": report.general_bound,
        "fair_bound": report.fair_bound,
        "asymptotic_gain": report.asymptotic_gain,
    }
    if not spec.bound_only:
        try:
            est = ergodic_sumrate(cfg, profile, relay_noise=spec.relay_noise, workers=workers)
        except (SimulationFailed, ConditioningError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        else:
            row.update(
                sim_mean=est.mean,
                sim_stderr=est.std_error,
                trials=est.trials,
                rejected=est.rejected,
            )
    return row


def run_sweep(spec, workers=1):
    """Evaluate every sweep point.

    Returns
    -------
    rows : list of dict
        One row per value, in sweep order; keys are the CSV columns plus the
        swept value under ``spec.sweep_variable``.
    ok : bool
        False if any point failed.
    """
    def one(value):
        row = _evaluate(spec, value, 1 if workers > 1 else workers)
        row[spec.sweep_variable] = value
        return row

    if workers > 1 and len(spec.values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, spec.values))
    else:
        rows = [one(v) for v in spec.values]

    if spec.emit_efficiency:
        etas = [bounds.cooperation_efficiency(r["fair_bound"], r["N"], spec.c_BW) for r in rows]
        rel = (
            bounds.relative_efficiency(etas)
            if max(etas) > 0
            else np.full(len(etas), math.nan)
        )
        for row, eta, r in zip(rows, etas, rel):
            row["efficiency"] = eta
            row["relative_efficiency"] = float(r)
    return rows, not any(row.get("error") for row in rows)


def format_number(x):
    """Fixed-point text with 9 significant digits; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    if x == 0 or not math.isfinite(x):
        return repr(x) if x else "0"
    # round to 9 significant digits, then print without an exponent
    mantissa, exponent = f"{x:.8e}".split("e")
    return f"{float(mantissa + 'e' + exponent):.{max(0, 8 - int(exponent))}f}"


def write_csv(rows, sweep_variable, stream):
    stream.write(CSV_VERSION + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow((sweep_variable,) + COLUMNS)
    for row in rows:
        cells = [format_number(row[sweep_variable])]
        for col in COLUMNS:
            if col == "error":
                cells.append(row.get(col) or "")
            else:
                cells.append(format_number(row.get(col)))
        writer.writerow(cells)


def render_csv(rows, sweep_variable):
    buf = io.StringIO()
    write_csv(rows, sweep_variable, buf)
    return buf.getvalue()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="relaygroup",
        description="Sumrate sweeps for grouped zero-forcing two-way relay networks.",
    )
    parser.add_argument("config", help="sweep configuration file (key = value lines)")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--trials", type=int, help="override the Monte Carlo trial count")
    parser.add_argument("--out", help="CSV output path (default: configured output or stdout)")
    parser.add_argument("--bound-only", action="store_true", help="skip simulation, emit bounds only")
    parser.add_argument("--preset", choices=PRESETS, help="power split preset")
    parser.add_argument("--workers", type=int, default=1, help="worker threads")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"relaygroup: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = []
    if args.seed is not None:
        overrides.append(f"seed = {args.seed}")
    if args.trials is not None:
        overrides.append(f"trials = {args.trials}")
    if args.bound_only:
        overrides.append("bound_only = true")
    if args.preset:
        overrides.append(f"preset = {args.preset}")
    try:
        text = _override(text, overrides)
        spec = parse_config(text)
    except ConfigError as exc:
        print(f"relaygroup: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        rows, ok = run_sweep(spec, workers=max(1, args.workers))
    except RelayError as exc:
        print(f"relaygroup: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    out = args.out or spec.output
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, spec.sweep_variable, fh)
    else:
        write_csv(rows, spec.sweep_variable, sys.stdout)
    if not ok:
        for row in rows:
            if row.get("error"):
                print(f"relaygroup: point {row[spec.sweep_variable]} failed: {row['error']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _override(text, lines):
    """Replace or append ``key = value`` entries, keeping line numbers."""
    if not lines:
        return text
    keys = {line.split("=", 1)[0].strip(): line for line in lines}
    out = []
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        key = body.split("=", 1)[0].strip() if "=" in body else None
        if key in keys:
            out.append(keys.pop(key))
        else:
            out.append(line)
    out.extend(keys.values())
    return "\n".join(out) + "\n"


if __name__ == "__main__":
    sys.exit(main())
