"""Command-line front end.

Exit codes: 0 success, 1 invalid input (bad config, missing file, bad
parameter, unknown command), 2 ``verify`` found a disagreement.

The seed defaults to ``simulate.DEFAULT_SEED``; ``RUINLAB_SEED`` in the
environment replaces that default, and ``--seed`` beats both.
"""

from __future__ import annotations

import argparse
import os
import sys

from .model import ConfigError, ModelValidationError, drift, load_model
from .pricing import GSQuery, PutContract, gerber_shiu, make_put_penalty, price_perpetual_put, unit_penalty
from .report import estimate_row, render_report, write_report
from .simulate import (
    DEFAULT_SEED,
    estimate_exit_low,
    estimate_modified_ruin,
    estimate_overjump,
    estimate_recovery_red,
    estimate_ruin,
    estimate_total_deficit,
)
from .verify import run_verify


COMMANDS = ("validate", "ruin", "overjump", "deficit", "red-period", "two-boundary", "modified-ruin",
            "gerber-shiu", "price-put", "verify")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(v):
    i = int(v)
    if i < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return i


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ruinlab", description="Ruin, overshoot and two-regime analytics with Monte Carlo checks.")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--model", help="model config (INI)")
    common.add_argument("--model-star", help="reduced-premium model config")
    for name in ("u", "a", "b", "s", "K", "beta", "horizon", "barrier"):
        common.add_argument(f"--{name}", type=float)
    common.add_argument("--x", help="comma-separated deficit grid (deficit)")
    common.add_argument("--n", type=_positive_int, default=1_000_000)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=_positive_int, default=1)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default stdout)")
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    return p


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RUINLAB_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"RUINLAB_SEED is not an integer: {env!r}") from None
    return DEFAULT_SEED


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) " + ", ".join(f"--{m}" for m in missing))


def _load(path, flag):
    if not os.path.exists(path):
        raise FileNotFoundError(f"{flag}: no such file: {path}")
    return load_model(path)


def _run(args) -> tuple[list, int]:
    cmd = args.command
    seed = _seed(args)
    mc = dict(seed=seed, horizon=args.horizon, barrier=args.barrier, workers=args.workers)
    if cmd == "verify":
        model = _load(args.model, "--model") if args.model else None
        star = _load(args.model_star, "--model-star") if args.model_star else None
        rep = run_verify(model, star, n=args.n, seed=seed, workers=args.workers)
        return rep.rows, 0 if rep.passed else 2
    _need(args, "model")
    model = _load(args.model, "--model")
    if cmd == "validate":
        d = drift(model)
        return [{"m": model.m, "drift": d.stationary, "valid": True}], 0
    if cmd in ("modified-ruin", "gerber-shiu", "price-put"):
        _need(args, "model-star")
        star = _load(args.model_star, "--model-star")
    if cmd == "ruin":
        _need(args, "u")
        est = estimate_ruin(model, args.u, args.n, **mc)
        return [estimate_row("ruin", est, u=args.u)], 0
    if cmd == "overjump":
        _need(args, "u")
        s = args.s or 0.0
        est = estimate_overjump(model, args.u, s, args.n, **mc).mass()
        return [estimate_row("overjump_mass", est, u=args.u, s=s)], 0
    if cmd == "deficit":
        _need(args, "u", "x")
        try:
            grid = [float(v) for v in args.x.replace(",", " ").split()]
        except ValueError:
            raise UsageError(f"--x: not a list of numbers: {args.x!r}") from None
        ests = estimate_total_deficit(model, args.u, grid, args.n, **mc)
        return [estimate_row(f"total_deficit_lt[x={x!r}]", e, u=args.u) for x, e in zip(grid, ests)], 0
    if cmd == "red-period":
        _need(args, "u", "s")
        r = estimate_recovery_red(model, args.u, args.s, args.n, **mc)
        return [estimate_row("recovery_time_lt", r.recovery, u=args.u, s=args.s),
                estimate_row("red_period_lt", r.red, u=args.u, s=args.s)], 0
    if cmd == "two-boundary":
        _need(args, "u", "b")
        mc.pop("barrier")
        est = estimate_exit_low(model, args.u, args.b, args.n, **mc)
        return [estimate_row("exit_low", est, u=args.u, b=args.b)], 0
    if cmd == "modified-ruin":
        _need(args, "u", "a", "b")
        est = estimate_modified_ruin(model, star, args.u, args.a, args.b, args.n, **mc)
        return [estimate_row("modified_ruin", est, u=args.u, a=args.a, b=args.b)], 0
    if cmd == "gerber-shiu":
        _need(args, "u", "a", "b")
        s = args.s or 0.0
        w = make_put_penalty(args.K, args.beta or 0.0) if args.K is not None else unit_penalty()
        est = gerber_shiu(model, star, GSQuery(args.u, args.a, args.b, s, w, args.n), **mc)
        return [estimate_row(f"gerber_shiu[{w.tag}]", est, u=args.u, a=args.a, b=args.b, s=s)], 0
    if cmd == "price-put":
        _need(args, "u", "a", "b", "K", "beta", "s")
        est = price_perpetual_put(model, star, PutContract(args.K, args.beta, args.s, args.u), args.a, args.b,
                                  args.n, **mc)
        return [estimate_row(f"put[K={args.K!r},beta={args.beta!r}]", est, u=args.u, a=args.a, b=args.b,
                             s=args.s)], 0
    raise UsageError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given; choose one of " + ", ".join(COMMANDS))
        rows, code = _run(args)
        if args.out:
            write_report(rows, args.format, args.out)
        else:
            sys.stdout.write(render_report(rows, args.format))
        return code
    except UsageError as e:
        print(f"ruinlab: usage error: {e}", file=sys.stderr)
    except FileNotFoundError as e:
        print(f"ruinlab: {e}", file=sys.stderr)
    except ModelValidationError as e:
        print(f"ruinlab: invalid model:\n{e}", file=sys.stderr)
    except ConfigError as e:
        print(f"ruinlab: config error: {e}", file=sys.stderr)
    except (ValueError, OSError) as e:
        print(f"ruinlab: bad parameter: {e}", file=sys.stderr)
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
