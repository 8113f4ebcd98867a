"""Command line front end.

Subcommands: ``solve`` (fixed-gamma solution), ``path`` (event log and
segments), ``gen`` (instance files), ``events`` (scaling experiments over
instance families, CSV plus rendered figure), ``verify`` (path
self-checks against both independent solvers), ``convert``
(penalized <-> TV-budget parameter conversion).

Exit codes: 0 success, 1 invalid input, 2 numerical or verification
failure.  All commands are deterministic given their arguments.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .backends import Backend, F64, RATIONAL, get_backend
from .core import Instance, InvalidInstanceError, SolutionPath
from .generators import gen_1fl, gen_random, gen_worst_case
from .oracle import OracleError, solve_fixed_gamma_dp, solve_fixed_gamma_qp
from .path import PathNumericalError, initial_signs, solve_path, verify_path
from .serialize import (dump_instance, load_instance, read_events_csv,
                        write_events_csv)
from .transform import from_dual, gamma_for_budget, to_dual, tv_budget_of

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_NUMERIC = 2

FAMILIES = ("worst-case", "random", "1fl")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_INPUT)


def _backend_arg(parser):
    parser.add_argument("--backend", choices=("f64", "rational"), default=None,
                        help="scalar backend (default: rational when the "
                             "instance file holds fraction strings, else f64)")


def _load(args) -> Instance:
    backend = get_backend(args.backend) if args.backend else None
    return load_instance(args.instance, backend)


def _format_vector(backend: Backend, values) -> str:
    if backend.exact:
        return json.dumps([backend.format(v) for v in values])
    return json.dumps([float(v) for v in values])


def _diff(w):
    return [w[i + 1] - w[i] for i in range(len(w) - 1)]


def parse_sizes(text: str) -> list:
    """Sizes given as '40', '10,100,1000' or 'start:stop[:step]' (inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValueError(f"bad size range {text!r}")
        if step <= 0 or stop < start:
            raise ValueError(f"bad size range {text!r}")
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",")]


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    inst = _load(args)
    gamma = inst.backend.parse(args.gamma)
    if gamma < 0:
        raise InvalidInstanceError("gamma must be nonnegative")
    if args.method == "dp":
        x = solve_fixed_gamma_dp(inst, gamma)
    elif args.method == "qp":
        x = _diff(solve_fixed_gamma_qp(to_dual(inst), gamma))
    else:
        x = solve_path(to_dual(inst)).solution_at(gamma)
    print(_format_vector(inst.backend, x))
    return EXIT_OK


def cmd_path(args) -> int:
    inst = _load(args)
    dual = to_dual(inst)
    path = solve_path(dual)
    fuse, unfuse = path.event_counts()
    summary = {"events": len(path.events), "fuse": fuse, "unfuse": unfuse,
               "segments": path.segment_count()}
    if path.tables is not None:
        summary["distinct_slope_segments"] = path.segment_count(distinct_slopes=True)
    if args.format == "json":
        doc = {
            "events": [{"gamma": _scalar_json(dual.backend, ev.gamma),
                        "index": ev.index, "kind": ev.kind.value,
                        "sign": ev.sign} for ev in path.events],
            "summary": summary,
        }
        if path.tables is not None:
            doc["segments"] = [
                [[_scalar_json(dual.backend, a), _scalar_json(dual.backend, b)]
                 for a, b in table]
                for table in path.tables]
        text = json.dumps(doc, indent=2) + "\n"
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    else:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                write_events_csv(path.events, dual.backend, fh)
        else:
            write_events_csv(path.events, dual.backend, sys.stdout)
    print("summary " + " ".join(f"{k}={v}" for k, v in summary.items()),
          file=sys.stderr)
    return EXIT_OK


def _scalar_json(backend: Backend, value):
    return backend.format(value) if backend.exact else float(value)


def cmd_gen(args) -> int:
    if args.kind == "worst-case":
        if args.n < 3:
            raise InvalidInstanceError("worst-case generator needs n >= 3")
        inst = from_dual(gen_worst_case(args.n, args.variant))
    elif args.kind == "random":
        backend = get_backend(args.backend) if args.backend else F64
        inst = gen_random(args.n, args.seed, backend)
    else:
        backend = get_backend(args.backend) if args.backend else F64
        inst = gen_1fl(gen_random(args.n, args.seed).y, backend)
    if args.output:
        dump_instance(inst, args.output)
    else:
        dump_instance(inst, sys.stdout)
    return EXIT_OK


def _events_run(task) -> dict:
    family, n, seed = task
    if family == "worst-case":
        dual = gen_worst_case(n)
    elif family == "random":
        dual = to_dual(gen_random(n, seed))
    else:
        dual = to_dual(gen_1fl(gen_random(n, seed).y))
    path = solve_path(dual, segments="events")
    report = verify_path(dual, path, samples=1, max_intervals=64)
    if not report.passed:
        raise PathNumericalError(
            f"path verification failed for {family} n={n} seed={seed}: "
            f"worst violation {report.worst:.3e}")
    fuse, unfuse = path.event_counts()
    return {"n": n, "seed": seed, "fuse": fuse, "unfuse": unfuse,
            "total": fuse + unfuse, "segments": len(path.events) + 1}


def cmd_events(args) -> int:
    sizes = parse_sizes(args.n)
    if any(n < 1 for n in sizes):
        raise InvalidInstanceError("sizes must be >= 1")
    if args.family == "worst-case":
        if any(n < 3 for n in sizes):
            raise InvalidInstanceError("worst-case family needs n >= 3")
        tasks = [(args.family, n, 0) for n in sizes]
    else:
        tasks = [(args.family, n, seed) for n in sizes
                 for seed in range(args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_events_run, tasks, chunksize=1))
    else:
        rows = [_events_run(t) for t in tasks]

    fields = ("n", "seed", "fuse", "unfuse", "total", "segments")
    lines = [",".join(fields)]
    lines += [",".join(str(r[f]) for f in fields) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.output:
        out = Path(args.output)
        if out.suffix != ".csv" and (out.is_dir() or not out.suffix):
            out.mkdir(parents=True, exist_ok=True)
            out = out / "events.csv"
        out.write_text(text, encoding="utf-8")
        if not args.no_plot:
            from .figures import render_event_scaling
            render_event_scaling(rows, args.family, out.with_suffix(".png"))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load(args)
    dual = to_dual(inst)
    if args.events_csv:
        with open(args.events_csv, "r", encoding="utf-8") as fh:
            events = read_events_csv(fh, dual.backend)
        path = SolutionPath(dual, events, initial_signs(dual))
    else:
        path = solve_path(dual)
    oracles = {
        "dp": lambda g: solve_fixed_gamma_dp(inst, g),
        "qp": lambda g: _diff(solve_fixed_gamma_qp(dual, g)),
    }
    try:
        report = verify_path(dual, path, samples=args.samples, oracle=oracles)
    except (ValueError, IndexError, KeyError) as exc:
        print(f"verification failed: inconsistent event log ({exc})",
              file=sys.stderr)
        return EXIT_NUMERIC
    print(report)
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_convert(args) -> int:
    inst = _load(args)
    value = inst.backend.parse(args.value)
    if value < 0:
        raise InvalidInstanceError("value must be nonnegative")
    path = solve_path(to_dual(inst))
    if args.direction == "to-constrained":
        result = tv_budget_of(path, value)
    else:
        result = gamma_for_budget(path, value)
    print(inst.backend.format(result))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wflpath",
                     description="Exact solution paths for the weighted "
                                 "1-D fused lasso")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[], help="solve at a fixed gamma")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--gamma", required=True, help="regularization parameter")
    p.add_argument("--method", choices=("dp", "qp", "path"), default="dp")
    _backend_arg(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("path", help="trace the full solution path")
    p.add_argument("instance")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write events to this file (default stdout)")
    _backend_arg(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--kind", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=("cascade", "doubling"),
                   default="cascade",
                   help="worst-case family flavor (cascade reaches the "
                        "full n(n-1)/2 event count)")
    p.add_argument("--output", help="instance file (default stdout)")
    _backend_arg(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("events",
                       help="solve whole families, tabulate event counts")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", required=True,
                   help="sizes: '40', '10,100,1000' or 'start:stop[:step]'")
    p.add_argument("--seeds", type=int, default=1,
                   help="seeds 0..k-1 per size (ignored for worst-case)")
    p.add_argument("--output",
                   help="CSV file or directory; a PNG figure is rendered "
                        "alongside unless --no-plot")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers (results merge in task order)")
    p.set_defaults(func=cmd_events)

    p = sub.add_parser("verify", help="self-check a path against oracles")
    p.add_argument("instance")
    p.add_argument("--samples", type=int, default=4,
                   help="checked gammas per path interval")
    p.add_argument("--events-csv",
                   help="verify this previously emitted event log instead "
                        "of re-solving")
    _backend_arg(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convert",
                       help="convert between penalty gamma and TV budget")
    p.add_argument("instance")
    p.add_argument("--direction", choices=("to-constrained", "to-penalized"),
                   required=True)
    p.add_argument("--value", required=True,
                   help="gamma (to-constrained) or TV budget (to-penalized)")
    _backend_arg(p)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInstanceError, FileNotFoundError, IsADirectoryError,
            NotADirectoryError, PermissionError, json.JSONDecodeError,
            ValueError, OverflowError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (PathNumericalError, OracleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
