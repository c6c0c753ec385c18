"""Command line: ``iqnet run|verify|fluid|dump-driving|dump-schedule``.

Exit codes: 0 when every verdict passes, 1 on any failed verdict, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .config import int_list, parse_config
from .errors import ConfigError, IqnetError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _site(text: str) -> tuple[int, ...]:
    return tuple(int(c) for c in text.split(","))


def _report(rep) -> int:
    for v in rep.verdicts:
        line = f"[{'PASS' if v.passed else 'FAIL'}] {v.name}: {v.detail}"
        if not v.passed:
            line += f"\n       seed {v.seed}; replay: {v.replay}"
        print(line)
    print(f"{rep.kind}: {'PASS' if rep.passed else 'FAIL'} in {rep.wall_clock:.1f}s", file=sys.stderr)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _load(args):
    cfg = parse_config(args.config)
    if getattr(args, "seeds", None):
        cfg.seeds = int_list(args.seeds)
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    return cfg


def cmd_run(args) -> int:
    from .experiments import run_experiment

    return _report(run_experiment(_load(args)))


def cmd_fluid(args) -> int:
    from .experiments import run_experiment

    cfg = _load(args)
    if cfg.kind != "fluid-transience":
        raise ConfigError(f"fluid needs kind = fluid-transience, got {cfg.kind}")
    return _report(run_experiment(cfg))


def cmd_verify(args) -> int:
    from .acceptance import CRITERIA, run_all

    numbers = set(int_list(args.only)) if args.only else None
    unknown = sorted((numbers or set()) - {num for num, _, _ in CRITERIA})
    if unknown:
        print(f"no such criteria: {', '.join(map(str, unknown))} (valid: 1-{len(CRITERIA)})",
              file=sys.stderr)
        return EXIT_CONFIG
    results = run_all(numbers)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_PASS


def cmd_dump_driving(args) -> int:
    from .driving import DrivingStream

    stream = DrivingStream(args.seed, args.lam, args.block_length)
    sites = [_site(s) for s in args.sites.split(";")]
    t0 = args.block * args.block_length if args.t0 is None else args.t0
    t1 = t0 + args.block_length if args.t1 is None else args.t1
    print("time,queue,kind,mark")
    for ev in stream.events_in(sites, t0, t1):
        queue = " ".join(str(c) for c in ev.site)
        kind = "arrival" if ev.kind == 0 else "departure"
        mark = "" if ev.mark is None else repr(float(ev.mark))
        print(f"{float(ev.time)!r},{queue},{kind},{mark}")
    return EXIT_PASS


def cmd_dump_schedule(args) -> int:
    from .driving import DrivingStream
    from .local_construction import block_length, dependency_schedule

    site = _site(args.site)
    params = block_length(args.lam, args.L, len(site), args.safety)
    sched = dependency_schedule(DrivingStream(args.seed, args.lam), site, args.T, params)
    sys.stdout.write(sched.to_csv())
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iqnet", description="Interference queueing networks on lattices.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--seeds", help="override seeds, e.g. 3 or 0-9")
    r.add_argument("--output-dir")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fluid", help="run the fluid suite from a fluid-transience config")
    f.add_argument("config")
    f.add_argument("--seeds")
    f.add_argument("--output-dir")
    f.set_defaults(func=cmd_fluid)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--only", help="criterion numbers, e.g. 1,3 or 5-7")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("dump-driving", help="print driving events as CSV")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--lam", type=float, default=0.25)
    d.add_argument("--sites", default="0", help="sites separated by ';', coordinates by ','")
    d.add_argument("--block", type=int, default=0)
    d.add_argument("--block-length", type=float, default=1.0)
    d.add_argument("--t0", type=float)
    d.add_argument("--t1", type=float)
    d.set_defaults(func=cmd_dump_driving)

    s = sub.add_parser("dump-schedule", help="print dependency-set sizes per block as CSV")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lam", type=float, default=0.3)
    s.add_argument("--L", type=int, default=1)
    s.add_argument("--site", default="0")
    s.add_argument("--T", type=float, default=5.0)
    s.add_argument("--safety", type=float, default=0.9)
    s.set_defaults(func=cmd_dump_schedule)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        where = ""
        line, key = getattr(exc, "line", None), getattr(exc, "key", None)
        if line is not None:
            where += f" line {line}"
        if key is not None:
            where += f" key {key!r}"
        print(f"{exc.code}{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IqnetError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
