"""Command-line front end: design, enrollment, and experiment sweeps.

Every stochastic command requires an explicit --seed.  Outputs are CSV
with a header row, data rows, and footer comment lines echoing the full
resolved configuration, so identical invocations produce byte-identical
files.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .codes import load_code_file, save_code_file
from .decoding import FrozenSchedule, quantize_with_schedule
from .design import (
    BracketingError,
    DesignError,
    DesignParams,
    design_nested,
    measure_bler,
    measure_distortion,
)
from .gf2 import inverse_star, star
from .keyagreement import (
    boundary_sweep,
    code_rate_point,
    enroll_batch,
    load_records,
    rate_point_from_counts,
    reconstruct,
    save_records,
)
from .reliability import density_evolution_minsum

# Fixed reference operating points (n, key bits, helper bits) used
# by the rates command for comparison rows.
REFERENCE_POINTS = (
    (1024, 128, 553),
    (1024, 128, 492),
    (1024, 128, 474),
    (2048, 128, 578),
    (2048, 128, 505),
    (2048, 128, 490),
)


class UsageError(Exception):
    """Invalid parameters; maps to exit status 2."""


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def _write_csv(path, header, rows, config: dict) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    for key in sorted(config):
        lines.append(f"# {key}={_fmt(config[key])}")
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(spec: str, name: str) -> np.ndarray:
    try:
        lo_s, hi_s, steps_s = spec.split(":")
        lo, hi, steps = float(lo_s), float(hi_s), int(steps_s)
    except ValueError as exc:
        raise UsageError(f"--{name} expects lo:hi:steps, got {spec!r}") from exc
    if steps < 1 or hi < lo:
        raise UsageError(f"--{name} needs hi >= lo and steps >= 1")
    return np.linspace(lo, hi, steps)


def _parse_list_sizes(spec: str) -> list[int]:
    try:
        values = [int(part) for part in str(spec).split(",")]
    except ValueError as exc:
        raise UsageError(f"--list-size expects an integer or a comma "
                         f"list, got {spec!r}") from exc
    if not values or any(v < 1 for v in values):
        raise UsageError("--list-size entries must be positive")
    return values


def _load_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"config line without '=': {line!r}")
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return values


_CONVERTERS = {
    "pa": float, "p_eff": float, "target_pb": float,
    "n": int, "k": int, "trials": int, "seed": int, "queue_size": int,
    "quant_trials": int, "count": int, "ta": int, "tb": int,
    "code": str, "record": str, "out": str, "report": str,
    "grid": str, "pc_grid": str, "decoder": str, "list_size": str,
}


def _merge_config(args: argparse.Namespace) -> dict:
    """Fill unset options from the --config file, then apply defaults."""
    merged = dict(vars(args))
    config = _load_config_file(args.config) if args.config else {}
    for key, raw in config.items():
        if key not in merged:
            raise UsageError(f"unknown config key {key!r}")
        if merged[key] is None:
            conv = _CONVERTERS.get(key, str)
            try:
                merged[key] = conv(raw)
            except ValueError as exc:
                raise UsageError(f"bad config value {key}={raw!r}") from exc
    for key, value in merged.pop("_defaults").items():
        if merged[key] is None:
            merged[key] = value
    for key in merged.pop("_required"):
        if merged[key] is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")
    return merged


def _config_echo(command: str, merged: dict) -> dict:
    echo = {"command": command}
    for key, value in merged.items():
        if key in ("config", "func"):
            continue
        echo[key] = value
    return echo


def _require_positive(merged, *names):
    for name in names:
        value = merged.get(name)
        if value is not None and value < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


def _single_list_size(merged) -> int:
    values = _parse_list_sizes(merged["list_size"])
    if len(values) != 1:
        raise UsageError("--list-size takes a single value here")
    return values[0]


def _load_pair(path: str):
    try:
        return load_code_file(path)
    except OSError as exc:
        raise RuntimeError(f"cannot read code file {path}: {exc}") from exc


def _quantizer_crossover(pair) -> float:
    # Both fields are persisted in the code file, so this never falls
    # back for file-loaded pairs.
    if pair.code.design_p is None or pair.p_a is None:
        return 0.25
    return inverse_star(pair.code.design_p, pair.p_a)


def cmd_design(merged: dict) -> int:
    _require_positive(merged, "trials", "quant_trials", "queue_size")
    list_size = _single_list_size(merged)
    try:
        params = DesignParams(
            p_a=merged["pa"], n=merged["n"], key_len=merged["k"],
            target_pb=merged["target_pb"],
            list_size=list_size,
            queue_size=merged["queue_size"],
            p_grid=None if merged["grid"] is None
            else tuple(_parse_grid(merged["grid"], "grid")),
            pc_grid=None if merged["pc_grid"] is None
            else tuple(_parse_grid(merged["pc_grid"], "pc-grid")),
            trials=merged["trials"], quant_trials=merged["quant_trials"],
            seed=merged["seed"], t_a=merged["ta"], t_b=merged["tb"],
            decoder=merged["decoder"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    pair, report = design_nested(params)
    save_code_file(pair, merged["out"])
    rows = []
    for name in ("n", "key_len", "p_a", "target_pb", "list_size",
                 "design_p", "p_c", "expected_q", "p1", "m1", "m2", "qbar"):
        rows.append(("param", name, getattr(report, name), ""))
    for cand in report.candidates:
        rows.append(("candidate", cand.design_p,
                     "" if cand.p_c is None else cand.p_c, cand.note))
    for m1, qbar in report.trace:
        rows.append(("trace", report.n - m1, qbar, ""))
    _write_csv(merged["report"], ("kind", "x", "y", "note"), rows,
               _config_echo("design", merged))
    return 0


def cmd_enroll(merged: dict) -> int:
    _require_positive(merged, "trials")
    list_size = _single_list_size(merged)
    pair = _load_pair(merged["code"])
    rng = np.random.Generator(np.random.Philox(key=[merged["seed"], 0]))
    x = rng.integers(0, 2, size=(merged["trials"], pair.n), dtype=np.uint8)
    records = enroll_batch(x, pair, _quantizer_crossover(pair), list_size)
    save_records(records, merged["out"])
    return 0


def cmd_reconstruct(merged: dict) -> int:
    _require_positive(merged, "queue_size")
    list_size = _single_list_size(merged)
    if not 0.0 <= merged["pa"] < 0.5:
        raise UsageError("--pa must lie in [0, 0.5)")
    pair = _load_pair(merged["code"])
    records = load_records(merged["record"], pair)
    rows = []
    for index, rec in enumerate(records):
        rng = np.random.Generator(np.random.Philox(key=[merged["seed"],
                                                        index]))
        noise = (rng.random(pair.n) < merged["pa"]).astype(np.uint8)
        y = rec.x ^ noise
        p_eff = merged["p_eff"]
        if p_eff is None:
            p_eff = star(rec.distortion / pair.n, merged["pa"])
            p_eff = min(max(p_eff, 0.01), 0.49)
        res = reconstruct(y, rec.helper, pair, p_eff,
                          decoder=merged["decoder"],
                          list_size=list_size,
                          queue_size=merged["queue_size"])
        rows.append((index, int(np.array_equal(res.key, rec.key)),
                     int(res.degraded), float(res.outcome.metric),
                     res.outcome.sum_count, res.outcome.comp_count))
    _write_csv(merged["out"],
               ("index", "match", "degraded", "metric", "sum_count",
                "comp_count"),
               rows, _config_echo("reconstruct", merged))
    return 0


def cmd_bler(merged: dict) -> int:
    _require_positive(merged, "trials", "queue_size")
    list_size = _single_list_size(merged)
    pair = _load_pair(merged["code"])
    grid = _parse_grid(merged["grid"], "grid")
    if any(not 0.0 < p < 0.5 for p in grid):
        raise UsageError("--grid crossovers must lie in (0, 0.5)")
    rows = []
    for p in grid:
        pt = measure_bler(pair.code, float(p), merged["trials"],
                          merged["seed"], decoder=merged["decoder"],
                          list_size=list_size,
                          queue_size=merged["queue_size"])
        rows.append((pt.crossover, pt.trials, pt.errors, pt.bler,
                     pt.ci_low, pt.ci_high, pt.sum_avg, pt.comp_avg))
    _write_csv(merged["out"],
               ("crossover", "trials", "errors", "bler", "ci_low",
                "ci_high", "sum_avg", "comp_avg"),
               rows, _config_echo("bler", merged))
    return 0


def cmd_distortion(merged: dict) -> int:
    _require_positive(merged, "trials")
    list_size = _single_list_size(merged)
    pair = _load_pair(merged["code"])
    n = pair.n
    spec = merged["grid"] if merged["grid"] is not None else f"0:{n}:9"
    raw = _parse_grid(spec, "grid")
    removed = sorted({int(round(v)) for v in raw if 0 <= round(v) <= n})
    if not removed:
        raise UsageError("--grid leaves no points in [0, n]")
    profile = density_evolution_minsum(_quantizer_crossover(pair),
                                       pair.code.m)
    rng = np.random.Generator(np.random.Philox(key=[merged["seed"], 0]))
    x = rng.integers(0, 2, size=(merged["trials"], n), dtype=np.uint8)
    best = np.full(len(x), n, dtype=np.int64)
    rows = []
    # Ascending n - m1 shrinks the frozen set, so each quantizer
    # codebook contains the previous one and incumbents stay valid.
    for n_minus_m1 in removed:
        m1 = n - n_minus_m1
        pivots = profile.least_reliable(m1)
        schedule = FrozenSchedule(n, pivots,
                                  np.zeros((m1, n), dtype=np.uint8),
                                  np.zeros(m1, dtype=np.uint8))
        _, _, dist, _, _ = quantize_with_schedule(
            x, schedule, profile.design_p, list_size)
        best = np.minimum(best, dist)
        rows.append((n_minus_m1, float(best.mean()) / n))
    _write_csv(merged["out"], ("n_minus_m1", "qbar"), rows,
               _config_echo("distortion", merged))
    return 0


def cmd_rates(merged: dict) -> int:
    if not 0.0 <= merged["pa"] <= 0.5:
        raise UsageError("--pa must lie in [0, 0.5]")
    if merged["count"] < 2:
        raise UsageError("--count must be at least 2")
    rows = []
    for pt in boundary_sweep(merged["pa"], merged["count"]):
        ratio = pt.r_s / pt.r_w if pt.r_w > 1e-12 else None
        rows.append(("boundary", None, None, None, pt.q, pt.r_s,
                     pt.r_ell, pt.r_w, ratio))
    for n, key_len, m2 in REFERENCE_POINTS:
        pt, ratio = rate_point_from_counts(n, key_len, m2,
                                           p_a=merged["pa"])
        rows.append(("paper", n, key_len, m2, None, pt.r_s, pt.r_ell,
                     pt.r_w, ratio))
    if merged["code"] is not None:
        pair = _load_pair(merged["code"])
        pt, ratio = code_rate_point(pair)
        rows.append(("code", pair.n, pair.code.k, pair.m2, None,
                     pt.r_s, pt.r_ell, pt.r_w, ratio))
    _write_csv(merged["out"],
               ("source", "n", "key_len", "m2", "q", "r_s", "r_ell",
                "r_w", "ratio"),
               rows, _config_echo("rates", merged))
    return 0


def cmd_complexity(merged: dict) -> int:
    _require_positive(merged, "trials", "queue_size")
    pair = _load_pair(merged["code"])
    p = merged["p_eff"] if merged["p_eff"] is not None else merged["pa"]
    if p is None:
        raise UsageError("--p-eff or --pa is required")
    if not 0.0 < p < 0.5:
        raise UsageError("the decode crossover must lie in (0, 0.5)")
    rows = []
    for L in _parse_list_sizes(merged["list_size"]):
        dec = measure_bler(pair.code, p, merged["trials"], merged["seed"],
                           decoder=merged["decoder"], list_size=L,
                           queue_size=merged["queue_size"])
        rows.append(("reconstruct", merged["decoder"], pair.n, L,
                     merged["queue_size"], dec.trials, dec.sum_avg,
                     dec.comp_avg))
        quant = measure_distortion(pair, merged["trials"], merged["seed"],
                                   list_size=L)
        rows.append(("quantize", "scl", pair.n, L, None, quant.trials,
                     quant.sum_avg, quant.comp_avg))
    _write_csv(merged["out"],
               ("component", "decoder", "n", "list_size", "queue_size",
                "trials", "sum_avg", "comp_avg"),
               rows, _config_echo("complexity", merged))
    return 0


def _add_common(sub, *names, defaults: dict, required: tuple):
    flags = {
        "code": dict(metavar="FILE", help="code file"),
        "record": dict(metavar="FILE", help="enrollment records file"),
        "pa": dict(type=float, help="measurement-channel crossover"),
        "p_eff": dict(type=float, help="effective decode crossover"),
        "n": dict(type=int, help="block length"),
        "k": dict(type=int, help="key length in bits"),
        "target_pb": dict(type=float, help="block-error target"),
        "list_size": dict(help="list size (complexity: comma list)"),
        "queue_size": dict(type=int, help="sequential queue capacity"),
        "trials": dict(type=int, help="Monte Carlo trials"),
        "seed": dict(type=int, help="master seed"),
        "grid": dict(metavar="LO:HI:STEPS", help="evaluation grid"),
        "pc_grid": dict(metavar="LO:HI:STEPS",
                        help="crossover measurement grid"),
        "quant_trials": dict(type=int, help="distortion sources per step"),
        "ta": dict(type=int, help="low-weight dynamic rows"),
        "tb": dict(type=int, help="reliability dynamic rows"),
        "decoder": dict(choices=("scl", "seq"), help="decoder kind"),
        "count": dict(type=int, help="boundary sample count"),
        "out": dict(metavar="PATH", help="output path (default stdout)"),
        "report": dict(metavar="PATH", help="design report CSV path"),
    }
    for name in names:
        sub.add_argument(f"--{name.replace('_', '-')}", default=None,
                         dest=name, **flags[name])
    sub.add_argument("--config", metavar="FILE", default=None,
                     help="key=value file supplying unset options")
    sub.set_defaults(_defaults=defaults, _required=required)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nestedpsc",
        description="Nested polar-subcode design and key-agreement "
                    "experiments")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("design", help="design a nested pair")
    _add_common(sub, "pa", "n", "k", "target_pb", "list_size",
                "queue_size", "trials", "quant_trials", "seed", "grid",
                "pc_grid", "ta", "tb", "decoder", "out", "report",
                defaults={"list_size": "8", "queue_size": 1024,
                          "decoder": "scl", "quant_trials": 2000,
                          "trials": None, "grid": None, "pc_grid": None,
                          "ta": None, "tb": None, "report": None},
                required=("pa", "n", "k", "target_pb", "seed", "out"))
    sub.set_defaults(func=cmd_design)

    sub = subs.add_parser("enroll", help="enroll random sources")
    _add_common(sub, "code", "trials", "seed", "list_size", "out",
                defaults={"trials": 1, "list_size": "8"},
                required=("code", "seed", "out"))
    sub.set_defaults(func=cmd_enroll)

    sub = subs.add_parser("reconstruct",
                          help="reconstruct keys from noisy measurements")
    _add_common(sub, "code", "record", "pa", "p_eff", "seed", "decoder",
                "list_size", "queue_size", "out",
                defaults={"decoder": "scl", "list_size": "8",
                          "queue_size": 1024, "p_eff": None, "out": None},
                required=("code", "record", "pa", "seed"))
    sub.set_defaults(func=cmd_reconstruct)

    sub = subs.add_parser("bler", help="block-error rate sweep")
    _add_common(sub, "code", "grid", "trials", "seed", "decoder",
                "list_size", "queue_size", "out",
                defaults={"decoder": "scl", "list_size": "8",
                          "queue_size": 1024, "out": None},
                required=("code", "grid", "trials", "seed"))
    sub.set_defaults(func=cmd_bler)

    sub = subs.add_parser("distortion",
                          help="quantizer distortion vs frozen-set size")
    _add_common(sub, "code", "grid", "trials", "seed", "list_size", "out",
                defaults={"list_size": "8", "grid": None, "out": None},
                required=("code", "trials", "seed"))
    sub.set_defaults(func=cmd_distortion)

    sub = subs.add_parser("rates", help="rate-region boundary and points")
    _add_common(sub, "pa", "count", "code", "out",
                defaults={"count": 101, "code": None, "out": None},
                required=("pa",))
    sub.set_defaults(func=cmd_rates)

    sub = subs.add_parser("complexity", help="decode and quantize counters")
    _add_common(sub, "code", "pa", "p_eff", "trials", "seed", "decoder",
                "list_size", "queue_size", "out",
                defaults={"decoder": "seq", "list_size": "8,32",
                          "queue_size": 1024, "pa": None, "p_eff": None,
                          "out": None},
                required=("code", "trials", "seed"))
    sub.set_defaults(func=cmd_complexity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        merged = _merge_config(args)
        return args.func(merged)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DesignError, BracketingError, ValueError, OSError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
