"""Command-line front end: ``gtconverse {bound,sweep,figure,simulate}``.

Exit codes: 0 success, 2 usage error (bad flags, unwritable output),
3 numeric/validity error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

from . import channels, figures, sources
from .bounds import FAMILY_PARAMS, evaluate_bound
from .simulator import (
    AdaptiveBinarySplit,
    NonAdaptiveBernoulliCOMP,
    SimConfig,
    monte_carlo,
)

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def format_value(value: Any) -> str:
    """12 significant digits, lowercase scientific notation for floats."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.11e}"
    if value is None:
        return ""
    return str(value)


def render(header: list[str], rows: list[list[Any]], fmt: str) -> str:
    if fmt == "json":
        records = [
            {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v)) for k, v in zip(header, row)}
            for row in rows
        ]
        return json.dumps(records if len(records) != 1 else records[0], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from exc


def _read_p_file(path: str) -> list[float]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    values = [float(tok) for line in text.splitlines() for tok in line.split("#", 1)[0].split()]
    return sorted(values, reverse=True)


def _bound_params(args) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for name in FAMILY_PARAMS[args.family]:
        if name == "p_list":
            if not args.p_file:
                raise UsageError("the nonidentical bound needs --p-file")
            params["p_list"] = _read_p_file(args.p_file)
            continue
        value = getattr(args, name)
        if value is None and name == "K" and args.log2_M is not None:
            continue
        if value is None and name == "N" and args.log2_M is not None and args.family.startswith("bsc"):
            continue
        if value is None:
            raise UsageError(f"bound {args.family} needs --{name}")
        params[name] = value
    if args.log2_M is not None:
        if not args.family.startswith("bsc"):
            raise UsageError("--log2-M only applies to the bsc families")
        params["log2_M"] = args.log2_M
    return params


def _record(family: str, T: int, params: dict[str, Any]) -> tuple[list[str], list[Any]]:
    res = evaluate_bound(family, T, **params)
    shown = {k: v for k, v in params.items() if k != "p_list"}
    if "p_list" in params:
        shown["N"] = len(params["p_list"])
    header = ["bound", "T", *shown, "raw", "clamped", "valid", "reason"]
    row = [family, T, *shown.values(), res.raw, res.clamped, res.valid, res.reason or ""]
    return header, row


def cmd_bound(args) -> int:
    params = _bound_params(args)
    if args.T is None:
        raise UsageError("bound needs --T")
    header, row = _record(args.family, args.T, params)
    emit(render(header, [row], args.format), args.out)
    return 0


def _frange(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("--step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(max(n, 0))]


def cmd_sweep(args) -> int:
    integer = args.vary in ("T", "N", "K")
    step = args.step if args.step is not None else 1
    grid = _frange(args.start, args.stop, step)
    if integer:
        grid = [int(round(v)) for v in grid]
    if not grid:
        raise UsageError("empty sweep range")
    header, rows = None, []
    for value in grid:
        setattr(args, args.vary, value)
        params = _bound_params(args)
        if args.T is None:
            raise UsageError("sweep needs --T unless varying T")
        h, row = _record(args.family, args.T, params)
        header = header or h
        rows.append(row)
    emit(render(header, rows, args.format), args.out)
    return 0


def _parse_override(fid: str, key: str, raw: str) -> Any:
    default = figures.DEFAULTS[fid].get(key)
    if key == "configs":
        pairs = []
        for item in raw.split(","):
            k, n = item.split(":")
            pairs.append((int(k), int(n)))
        return tuple(pairs)
    if key == "n_grid":
        return tuple(int(x) for x in raw.split(","))
    if key in ("t_min", "t_max", "N", "K", "trials", "seed"):
        return int(raw)
    if isinstance(default, int) and not isinstance(default, bool):
        return int(raw)
    return float(raw)


def cmd_figure(args) -> int:
    try:
        fid = figures.resolve_figure_id(args.figure)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    overrides: dict[str, Any] = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        if key not in figures.DEFAULTS[fid]:
            raise UsageError(f"{fid} has no parameter {key!r}; known: {sorted(figures.DEFAULTS[fid])}")
        overrides[key] = _parse_override(fid, key, raw)
    if fid == "fig3-noiseless-adaptive":
        overrides.setdefault("seed", args.seed)
        overrides.setdefault("trials", args.trials)
    header, rows = figures.build_figure(fid, **overrides)
    emit(render(header, rows, args.format), args.out)
    return 0


def _build_source(args) -> sources.SourceModel:
    kind = args.source
    if kind == "comb":
        return sources.CombinatorialUniform(args.N, args.K)
    if kind == "iid":
        return sources.IIDBernoulli(args.N, args.p)
    if kind == "nonidentical":
        return sources.NonIdenticalBernoulli(tuple(_read_p_file(args.p_file)))
    if kind == "enumerated":
        return sources.load_enumerated(args.source_file)
    raise UsageError(f"unknown source {kind!r}")


def _build_channel(spec: str) -> channels.Channel:
    name, _, value = spec.partition(":")
    if name == "noiseless":
        return channels.Noiseless()
    if name == "bsc":
        return channels.BSC(float(value))
    if name == "dilution":
        return channels.Dilution(float(value))
    if name == "table":
        return channels.load_channel_table(value)
    raise UsageError(f"unknown channel {spec!r}; use noiseless, bsc:P, dilution:U or table:PATH")


def cmd_simulate(args) -> int:
    src = _build_source(args)
    ch = _build_channel(args.channel)
    if args.algorithm == "split":
        algo = AdaptiveBinarySplit()
    else:
        algo = NonAdaptiveBernoulliCOMP(args.density)
    if args.T is None:
        raise UsageError("simulate needs --T")
    cfg = SimConfig(src, ch, algo, args.T, args.trials, args.seed)
    out = monte_carlo(cfg, workers=args.workers)
    header = ["algorithm", "T", "trials", "successes", "empirical_p", "wilson_halfwidth", "seed"]
    row = [args.algorithm, args.T, out.trials, out.successes, out.empirical_p, out.wilson_halfwidth, args.seed]
    emit(render(header, [row], args.format), args.out)
    return 0


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", metavar="PATH", help="write here instead of stdout")
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--trials", type=_positive, default=1000)

    bound_params = argparse.ArgumentParser(add_help=False)
    bound_params.add_argument("family", choices=sorted(FAMILY_PARAMS))
    bound_params.add_argument("--T", type=int)
    bound_params.add_argument("--N", type=int)
    bound_params.add_argument("--K", type=int)
    bound_params.add_argument("--p", type=float)
    bound_params.add_argument("--log2-M", dest="log2_M", type=float)
    bound_params.add_argument("--p-file", help="defect probabilities, whitespace separated")

    parser = argparse.ArgumentParser(
        prog="gtconverse", description="Finite-blocklength converse bounds for group testing."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common, bound_params], help="evaluate one bound")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", parents=[common, bound_params], help="evaluate a bound over a grid")
    p.add_argument("--vary", choices=("T", "N", "K", "p"), default="T")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", parents=[common], help="write the data behind a figure")
    p.add_argument("figure", help=f"one of {', '.join(figures.FIGURE_IDS)} (or fig1..fig5)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a figure parameter")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo success rate")
    p.add_argument("--source", choices=("comb", "iid", "nonidentical", "enumerated"), default="comb")
    p.add_argument("--N", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--p-file")
    p.add_argument("--source-file")
    p.add_argument("--channel", default="noiseless")
    p.add_argument("--algorithm", choices=("split", "comp"), default="split")
    p.add_argument("--density", type=float, default=0.1)
    p.add_argument("--T", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gtconverse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        print(f"gtconverse: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
