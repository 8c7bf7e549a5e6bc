"""Command-line entry point ``fidmin``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import channels as ch
from .experiment import (
    CLASSES,
    SCHEMES,
    ConfigError,
    RunConfig,
    calibrate,
    default_grid,
    fit_exponents,
    load_config,
    make_channel,
    read_records,
    run_batch,
    summarize,
)
from .io import FormatError, load_channel, save_channel
from .oracle import exact_fmin, fmin_bound_check

EXIT_USAGE = 1
EXIT_NUMERICAL = 2
MAX_QUBITS_SINGLE = 4
MAX_QUBITS_BATCH = 3
SMALL_BATCH = 10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def cmd_run(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    if not args.force:
        if args.qubits > MAX_QUBITS_SINGLE:
            raise UsageError(f"more than {MAX_QUBITS_SINGLE} qubits needs --force")
        if args.count > SMALL_BATCH and args.qubits > MAX_QUBITS_BATCH:
            raise UsageError(f"batches above {SMALL_BATCH} channels are limited to "
                             f"{MAX_QUBITS_BATCH} qubits without --force")
    cfg = _load_run_config(args)
    trace_fh = open(args.trace, "a" if args.resume else "w", encoding="utf-8") if args.trace else None
    trace = (lambda rec: trace_fh.write(json.dumps(rec) + "\n")) if trace_fh is not None else None
    try:
        records = run_batch(args.scheme, args.cls, args.qubits, args.count, cfg, out=args.out,
                            jobs=args.jobs, resume=args.resume, timing=args.timing, trace=trace)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    if args.out is None:
        for r in records:
            print(r.to_json())
    else:
        ok = sum(r.success for r in records)
        print(f"{len(records)} records, {ok} within epsilon -> {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    if args.trials < 20:
        raise UsageError("--trials must be at least 20")
    cfg = _load_run_config(args) if args.config else RunConfig()
    grid = default_grid(args.scheme) if args.grid is None else [float(v) for v in args.grid.split(",")]
    seed = args.seed if args.seed is not None else cfg.seed()
    res = calibrate(args.scheme, args.cls, args.qubits, args.epsilon, args.trials, seed, cfg, grid=grid)
    for g, ok, n in res.table:
        print(f"{res.parameter} {_fmt(g)}\tsuccess {ok}/{n}")
    if not res.reached:
        print(f"warning: no grid value reached 0.95; best success rate {res.success_rate:.3f}", file=sys.stderr)
    fragment = f"{res.parameter} = {_fmt(res.value)}\n"
    print(fragment, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(fragment)
    return 0


def cmd_scaling(args) -> int:
    records = [r for path in args.inputs for r in read_records(path)]
    rows = summarize(records)
    exps = fit_exponents(rows)
    print("scheme\tclass\tn\tchannels\tsuccess_rate\tmedian_uses")
    for r in rows:
        print(f"{r.scheme}\t{r.channel_class}\t{r.n_qubits}\t{r.count}\t{r.success_rate:.3f}\t{_fmt(r.median_uses)}")
    print()
    print("scheme\tclass\texponent")
    for (scheme, cls), e in exps.items():
        print(f"{scheme}\t{cls}\t{e:.2f}")
    return 0


def cmd_oracle(args) -> int:
    channel = load_channel(args.channel)
    res = exact_fmin(channel, restarts=args.restarts, rng=args.seed)
    print(f"f_min {_fmt(res.f_min)}")
    print("argmin " + " ".join(f"{_fmt(z.real)}{z.imag:+.12g}j" for z in res.argmin))
    if res.uncertain:
        print("warning: distinct local minima found; global minimum uncertain", file=sys.stderr)
    return 0


def cmd_bound(args) -> int:
    a, b = load_channel(args.channel_a), load_channel(args.channel_b)
    if a.dim != b.dim:
        raise UsageError("channels act on different dimensions")
    lhs, rhs = fmin_bound_check(a, b, restarts=args.restarts, rng=args.seed)
    print(f"lhs {_fmt(lhs)}")
    print(f"rhs {_fmt(rhs)}")
    print("ratio " + (_fmt(lhs / rhs) if rhs > 0 else "undefined"))
    return 0


def cmd_channel(args) -> int:
    d = 2**args.qubits
    if args.kind == "identity":
        c = ch.identity_channel(d)
    elif args.kind == "erasure":
        c = ch.erasure_channel(d)
    elif args.kind == "depolarizing":
        c = ch.depolarizing_channel(d, args.p)
    elif args.kind in CLASSES:
        c = make_channel(args.kind, args.qubits, args.seed)
    else:
        J, J_prime = ch.erasure_family(d, args.p, args.eta_z)
        c = ch.QuantumChannel.from_choi(J if args.which == "a" else J_prime)
    save_channel(c, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fidmin", description="Minimum gate fidelity estimation experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="estimate F_min on a batch of random channels")
    r.add_argument("--scheme", choices=SCHEMES, required=True)
    r.add_argument("--class", dest="cls", choices=CLASSES, required=True)
    r.add_argument("--qubits", type=int, required=True)
    r.add_argument("--count", type=int, default=1)
    r.add_argument("--config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--resume", action="store_true", help="keep finished records in --out")
    r.add_argument("--force", action="store_true", help="lift the qubit-number guard")
    r.add_argument("--timing", action="store_true", help="fill wall_ms (breaks byte-identical output)")
    r.add_argument("--trace", help="write per-descent GFM summaries to this file")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("calibrate", help="choose the stopping threshold for a channel class")
    c.add_argument("--scheme", choices=SCHEMES, required=True)
    c.add_argument("--class", dest="cls", choices=CLASSES, required=True)
    c.add_argument("--qubits", type=int, required=True)
    c.add_argument("--epsilon", type=float, default=0.01)
    c.add_argument("--trials", type=int, default=50)
    c.add_argument("--seed", type=int)
    c.add_argument("--config")
    c.add_argument("--grid", help="comma-separated threshold values")
    c.add_argument("--out", help="write the chosen value as a config fragment")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("scaling", help="median uses, success rates and fitted exponents")
    s.add_argument("--in", dest="inputs", nargs="+", required=True)
    s.set_defaults(func=cmd_scaling)

    o = sub.add_parser("oracle", help="exact F_min of a channel file")
    o.add_argument("--channel", required=True)
    o.add_argument("--restarts", type=int, default=20)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bound", help="both sides of the F_min perturbation bound")
    b.add_argument("--channel-a", required=True)
    b.add_argument("--channel-b", required=True)
    b.add_argument("--restarts", type=int, default=20)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bound)

    w = sub.add_parser("channel", help="write a channel file")
    w.add_argument("--kind", required=True,
                   choices=["identity", "erasure", "depolarizing", "hs", "pa", "erasure-family"])
    w.add_argument("--qubits", type=int, default=1)
    w.add_argument("--p", type=float, default=0.1)
    w.add_argument("--eta-z", type=float, default=0.1)
    w.add_argument("--which", choices=["a", "b"], default="a", help="member of the erasure-family pair")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_channel)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, FormatError, OSError) as exc:
        print(f"fidmin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"fidmin: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"fidmin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
