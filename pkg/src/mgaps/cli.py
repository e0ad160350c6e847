"""Command line entry point: ``mgaps run|sweep|check|tune-expert``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from mgaps import emit, expert, kernels, runner, scenario

log = logging.getLogger("mgaps")


def _load(args) -> scenario.Scenario:
    s = scenario.load(args.scenario)
    if args.seed is not None:
        s = s.with_seed(args.seed)
    if getattr(args, "duration", None) is not None:
        s = s.with_duration(args.duration)
    return s


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.6g}"


def cmd_run(args) -> int:
    s = _load(args)
    result = runner.run_scenario(s, jobs=args.jobs, backend=args.backend)
    doc = emit.summary(result)
    paths = emit.write_result(result, args.out_dir, args.format, args.stride)
    print(f"scenario {s.name}: {s.n_steps} steps, backend {kernels.name_of(kernels.load(args.backend))}")
    if result.sweep is not None:
        for row in result.sweep.rows():
            print(f"  sweep H={row['horizon']:>6} ({row['laps']:.3f} laps): total {_fmt(row['total_cost'])}")
    for name, m in doc["members"].items():
        state = f"DIVERGED {m['diverged']}" if m["diverged"] else "ok"
        print(f"  {name:<12} total {_fmt(m['total_cost'])}  quasi-regret {_fmt(m['quasi_regret_final'])}  {state}")
    print(f"wrote {len(paths)} files under {Path(args.out_dir) / emit.safe_name(s.name)}")
    return 1 if result.diverged else 0


def cmd_sweep(args) -> int:
    s = _load(args)
    lengths = args.lengths or (s.sweep.lengths if s.sweep else None)
    if not lengths:
        raise scenario.ScenarioError("no episode lengths: pass --lengths or add a sweep section")
    res = runner.episode_sweep(s, lengths, jobs=args.jobs, backend=args.backend)
    rows = list(res.rows())
    out = Path(args.out_dir) / emit.safe_name(s.name)
    doc = {"schema_version": emit.SCHEMA_VERSION, "scenario": scenario.echo(s), "sweep": rows}
    emit.write_text(out / "sweep.yaml", emit.summary_text(doc))
    if args.format == "csv":
        lines = ["horizon[steps],laps[1],total_cost,diverged"]
        lines += [f"{r['horizon']},{r['laps']:.17g},{r['total_cost']:.17g},{int(bool(r['diverged']))}" for r in rows]
        emit.write_text(out / "sweep.csv", "\n".join(lines) + "\n")
    for r in rows:
        flag = "  DIVERGED" if r["diverged"] else ""
        print(f"H={r['horizon']:>6} ({r['laps']:.3f} laps): total {_fmt(r['total_cost'])}{flag}")
    return 1 if any(r["diverged"] for r in rows) else 0


def cmd_check(args) -> int:
    from mgaps.checks import run_all

    ok = True
    for line, passed in run_all(points=args.points, seed=args.seed or 0):
        print(line, flush=True)
        ok &= passed
    return 0 if ok else 1


def cmd_tune_expert(args) -> int:
    def progress(lap, c):
        if lap % max(1, args.laps // 10) == 0:
            log.info("lap %d: cost %.4e", lap, c)

    res = expert.tune_quad_expert(args.laps, args.eta, backend=args.backend, progress=progress)
    out = Path(args.out_dir) / "expert.json"
    emit.write_text(out, json.dumps(res.to_json(), indent=2) + "\n")
    gains = ", ".join(f"{k}={v:.4g}" for k, v in res.to_json()["gains"].items())
    print(f"final-lap cost {res.lap_costs[-1]:.6e}\n{gains}\nwrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mgaps", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_arg=True):
        if scenario_arg:
            sp.add_argument("scenario", help="scenario YAML file")
            sp.add_argument("--duration", type=float, help="override duration in seconds")
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", default="out")
        sp.add_argument("--format", choices=("csv", "summary"), default="csv")
        sp.add_argument("--backend", choices=("cython", "python"), help="kernel backend")

    sp = sub.add_parser("run", help="run every roster member of a scenario")
    common(sp)
    sp.add_argument("--stride", type=int, default=0, help="also write series every N steps")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("sweep", help="DiffTune episode-length sweep")
    common(sp)
    sp.add_argument("--lengths", type=int, nargs="+", help="episode lengths in steps")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("check", help="run the derivative and sensitivity oracles")
    common(sp, scenario_arg=False)
    sp.add_argument("--points", type=int, default=50)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("tune-expert", help="reproduce the frozen simulation expert")
    common(sp, scenario_arg=False)
    sp.add_argument("--laps", type=int, default=expert.TUNE_LAPS)
    sp.add_argument("--eta", type=float, default=expert.TUNE_ETA)
    sp.set_defaults(fn=cmd_tune_expert)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.fn(args)
    except (scenario.ScenarioError, emit.EmitError, kernels.BackendError) as exc:
        print(f"mgaps: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
