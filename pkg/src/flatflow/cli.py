"""Command-line driver: run / compare / convergence / bench."""
from __future__ import annotations

import argparse
import os
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .analysis import FrontReport, l1_distance, linf_distance, timing_report
from .brinkman import run_btp, run_bve
from .multiscale import run_multiscale
from .results import RunResult
from .scenario import Scenario, load_scenario, write_field
from .tp import run_tp
from .ve import run_ve, run_vi

RUNNERS = {
    "TP": run_tp,
    "VE": run_ve,
    "VI": run_vi,
    "MS": run_multiscale,
    "BTP": run_btp,
    "BVE": run_bve,
}

REDUCED_OF = {"TP": "VE", "BTP": "BVE"}


def run_scenario(scenario: Scenario) -> RunResult:
    return RUNNERS[scenario.model](scenario)


def _write_outputs(result: RunResult, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, (t, fld) in enumerate(result.snapshots):
        write_field(fld, out_dir / f"snapshot_{k:03d}.txt", time=t)
    led = result.ledger
    lines = [
        f"model = {result.scenario.model}",
        f"grid = {result.scenario.nx}x{result.scenario.nz}",
        f"end_time = {result.scenario.end_time!r}",
        f"steps = {result.stats.get('steps', 0)}",
        f"cg_iterations = {result.stats.get('cg_iterations', 0)}",
        f"mass_initial = {led.initial_mass!r}",
        f"mass_injected = {led.injected!r}",
        f"mass_escaped = {led.escaped!r}",
        f"mass_final = {led.current_mass!r}",
        f"mass_residual = {led.residual()!r}",
        f"pressure_seconds = {result.timings.pressure:.6f}",
        f"transport_seconds = {result.timings.transport:.6f}",
        f"total_seconds = {result.timings.total:.6f}",
    ]
    front = FrontReport.measure(result.final, result.snapshots[-1][0])
    lines.append(f"front_position = {front.position!r}")
    lines.append(f"front_speed = {front.speed!r}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    result = run_scenario(scenario)
    out_dir = Path(args.out) if args.out else Path(args.scenario).with_suffix("")
    _write_outputs(result, out_dir)
    print(f"{scenario.model} {scenario.nx}x{scenario.nz}: "
          f"{result.stats.get('steps', 0)} steps, "
          f"{result.timings.total:.3f}s, outputs in {out_dir}")
    return 0


def cmd_compare(args) -> int:
    sa = load_scenario(args.scenario_a)
    sb = load_scenario(args.scenario_b)
    if (sa.nx, sa.nz) != (sb.nx, sb.nz):
        print("error: scenarios use different grids", file=sys.stderr)
        return 2
    ra = run_scenario(sa)
    rb = run_scenario(sb)
    metric = l1_distance if args.metric == "l1" else linf_distance
    dist = metric(ra.final, rb.final)
    print(f"{args.metric}({sa.model}, {sb.model}) at t={sa.end_time!r}: {dist:.10e}")
    return 0


def cmd_convergence(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.model not in REDUCED_OF:
        print(f"error: convergence needs a TP or BTP scenario, got {scenario.model}",
              file=sys.stderr)
        return 2
    gammas = [float(g) for g in args.gammas.split(",") if g]
    if not gammas:
        print("error: empty gamma list", file=sys.stderr)
        return 2
    from dataclasses import replace
    reduced = replace(scenario, model=REDUCED_OF[scenario.model], gamma=None)
    ref = run_scenario(reduced)
    print(f"reference {reduced.model} on {reduced.nx}x{reduced.nz}: "
          f"{ref.timings.total:.2f}s")
    distances = []
    for g in gammas:
        res = run_scenario(scenario.with_gamma(g))
        d = l1_distance(res.final, ref.final)
        distances.append(d)
        print(f"gamma = {g:<12g} L1 distance = {d:.8e}   ({res.timings.total:.2f}s)")
    monotone = all(b < a for a, b in zip(distances, distances[1:]))
    print(f"monotone decreasing: {'yes' if monotone else 'NO'}")
    return 0 if monotone else 1


def _parse_grids(text: str) -> list[tuple[int, int]]:
    grids = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        nx, _, nz = item.partition("x")
        grids.append((int(nx), int(nz)))
    return grids


def _bench_one(scenario: Scenario, repeats: int) -> RunResult:
    runs = [run_scenario(scenario) for _ in range(repeats)]
    runs.sort(key=lambda r: r.timings.total)
    return runs[len(runs) // 2]


def cmd_bench(args) -> int:
    scenario = load_scenario(args.scenario)
    grids = _parse_grids(args.grids)
    models = [m.strip().upper() for m in args.models.split(",") if m.strip()]
    for m in models:
        if m not in RUNNERS:
            print(f"error: unknown model {m}", file=sys.stderr)
            return 2
    from dataclasses import replace
    jobs = []
    for nx, nz in grids:
        for model in models:
            gamma = scenario.gamma if model in ("TP", "BTP") else None
            jobs.append(replace(scenario, model=model, nx=nx, nz=nz, gamma=gamma))
    # warm the kernels so compilation time stays out of the measurements
    warm = replace(scenario, model=models[0], nx=8, nz=4,
                   end_time=min(scenario.end_time, 1e-3), snapshot_times=(),
                   gamma=scenario.gamma if models[0] in ("TP", "BTP") else None)
    run_scenario(warm)
    threads = int(os.environ.get("FLATFLOW_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda sc: _bench_one(sc, args.repeats), jobs))
    else:
        results = [_bench_one(sc, args.repeats) for sc in jobs]
    table = timing_report(results)
    print(table.text())
    if args.out:
        Path(args.out).write_text(table.machine_rows() + "\n", encoding="utf-8")
        print(f"machine-readable table written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flatflow",
        description="Two-phase flow in flat domains: full, reduced, and Brinkman models")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and dump fields")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="output directory (default: scenario name)")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="distance between two runs' final fields")
    p_cmp.add_argument("scenario_a")
    p_cmp.add_argument("scenario_b")
    p_cmp.add_argument("--metric", choices=("l1", "linf"), default="l1")
    p_cmp.set_defaults(func=cmd_compare)

    p_conv = sub.add_parser("convergence",
                            help="aspect-ratio sweep of TP/BTP against the reduced model")
    p_conv.add_argument("scenario")
    p_conv.add_argument("--gammas", required=True, help="comma-separated gamma values")
    p_conv.set_defaults(func=cmd_convergence)

    p_bench = sub.add_parser("bench", help="timing sweep over grid sizes and models")
    p_bench.add_argument("scenario")
    p_bench.add_argument("--grids", required=True, help="comma-separated NXxNZ items")
    p_bench.add_argument("--models", default="TP,VE")
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.add_argument("--out", help="write machine-readable rows to this file")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
