"""Acceptance suite: one test per contract criterion, desk-scale experiment sizes.

Each test registers a PASS/FAIL line that conftest prints in the terminal
summary. Expensive runs are shared through module-scoped fixtures.
"""
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import oracles
from flatflow.analysis import (front_position, l1_distance, linf_distance,
                               overshoot)
from flatflow.brinkman import BrinkmanParams, BveProblem, BveState, bve_step
from flatflow.cli import run_scenario
from flatflow.grid import ScalarField, build_grid
from flatflow.physics import FluidModel
from flatflow.scenario import load_scenario
from flatflow.tp import cell_divergence
from flatflow.ve import VeProblem, VeState, reconstruct_velocity, run_ve, run_vi

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

RESULTS: list[tuple[str, bool, str]] = []


def record(name: str, passed: bool, detail: str):
    RESULTS.append((name, passed, detail))
    assert passed, f"{name}: {detail}"


def load(name):
    return load_scenario(SCENARIOS / name)


pytestmark = pytest.mark.slow


# --- shared runs -----------------------------------------------------------

@pytest.fixture(scope="module")
def darcy_sweep():
    """Aspect-ratio sweep of the full Darcy model against the reduced one."""
    started = time.perf_counter()
    sc = load("spreading_tp.cfg").with_grid(100, 40)
    ve = run_scenario(replace(sc, model="VE", gamma=None))
    gammas = (1.0, 0.25, 0.125, 1 / 16, 1 / 32)
    tp = {g: run_scenario(sc.with_gamma(g)) for g in gammas}
    return {"ve": ve, "tp": tp, "gammas": gammas,
            "elapsed": time.perf_counter() - started}


@pytest.fixture(scope="module")
def layered_runs():
    vi = run_scenario(load("layered_vi.cfg"))
    ve = run_scenario(load("layered_ve.cfg"))
    return {"vi": vi, "ve": ve}


@pytest.fixture(scope="module")
def partial_runs():
    vi = run_scenario(load("partial_injection_vi.cfg"))
    ve5 = run_scenario(load("partial_injection_ve.cfg").with_grid(1000, 5))
    ve100 = run_scenario(load("partial_injection_ve.cfg"))
    return {"vi": vi, "ve5": ve5, "ve100": ve100}


@pytest.fixture(scope="module")
def equivalence_runs():
    ms = run_scenario(load("multiscale_equivalence.cfg").with_grid(200, 100))
    ve = run_scenario(replace(load("multiscale_equivalence.cfg").with_grid(200, 100),
                              model="VE"))
    return {"ms": ms, "ve": ve}


@pytest.fixture(scope="module")
def brinkman_sweep():
    bve = run_scenario(load("brinkman_convergence_bve.cfg"))
    btp_base = load("brinkman_convergence_btp.cfg")
    gammas = (1.0, 0.25, 1 / 16)
    btp = {g: run_scenario(btp_base.with_gamma(g)) for g in gammas}
    return {"bve": bve, "btp": btp, "gammas": gammas}


@pytest.fixture(scope="module")
def overshoot_runs():
    bve = run_scenario(load("overshoot_bve_desk.cfg"))
    ve = run_scenario(load("overshoot_ve_desk.cfg"))
    return {"bve": bve, "ve": ve}


@pytest.fixture(scope="module")
def bench_rows():
    import statistics
    sc = load("runtime_sweep_tp.cfg")
    run_scenario(replace(sc, nx=8, nz=4))  # warm the kernels
    rows = {}
    for nx in (100, 200, 400, 800):
        entry = {}
        for model in ("TP", "VE", "MS"):
            gamma = sc.gamma if model == "TP" else None
            job = replace(sc, model=model, nx=nx, nz=100, gamma=gamma)
            times = sorted(run_scenario(job).timings.total for _ in range(3))
            entry[model] = times[1]
        rows[nx] = entry
    return rows


# --- criteria ---------------------------------------------------------------

def test_criterion_1_gamma_convergence_darcy(darcy_sweep):
    ve = darcy_sweep["ve"]
    dists = [l1_distance(darcy_sweep["tp"][g].final, ve.final)
             for g in darcy_sweep["gammas"]]
    monotone = all(b < a for a, b in zip(dists, dists[1:]))
    halved = dists[-1] <= 0.5 * dists[0]
    in_budget = darcy_sweep["elapsed"] < 300.0
    record("1 gamma-convergence (Darcy)",
           monotone and halved and in_budget,
           f"L1={['%.5f' % d for d in dists]}, "
           f"elapsed={darcy_sweep['elapsed']:.0f}s")


def test_criterion_2_vi_overestimation(layered_runs, partial_runs):
    thr = 0.1
    vi_front = front_position(layered_runs["vi"].final, layer=0, threshold=thr)
    ve_front = front_position(layered_runs["ve"].final, layer=0, threshold=thr)
    layered_ok = vi_front > ve_front

    ref = front_position(partial_runs["ve100"].final, layer=0, threshold=thr)
    ve5 = front_position(partial_runs["ve5"].final, layer=0, threshold=thr)
    vi = front_position(partial_runs["vi"].final, layer=0, threshold=thr)
    ve5_dev = abs(ve5 - ref) / ref
    vi_dev = abs(vi - ref) / ref
    partial_ok = ve5_dev <= 0.05 and vi_dev > ve5_dev
    record("2 vertically-integrated front misjudgment",
           layered_ok and partial_ok,
           f"layered: VI={vi_front:.4f} > VE={ve_front:.4f}; "
           f"partial: dev(nz=5)={ve5_dev:.3%} <= 5% < dev(VI)={vi_dev:.3%}")


def test_criterion_3_multiscale_equivalence(equivalence_runs):
    diff = linf_distance(equivalence_runs["ms"].final, equivalence_runs["ve"].final)
    record("3 multiscale/reduced-model equivalence", diff <= 1e-6,
           f"Linf = {diff:.3e} <= 1e-6")


def test_criterion_4_vi_is_single_layer_ve():
    identical = True
    details = []
    for name in ("layered_vi.cfg", "partial_injection_vi.cfg"):
        sc = load(name)
        via_vi = run_vi(sc)
        via_ve = run_ve(replace(sc, model="VE", nz=1))
        same = all(
            ta == tb and np.array_equal(fa.values, fb.values)
            for (ta, fa), (tb, fb) in zip(via_vi.snapshots, via_ve.snapshots))
        identical &= same
        details.append(f"{name}:{'=' if same else '!='}")
    record("4 VI bitwise-identical to one-layer VE", identical, " ".join(details))


def test_criterion_5_conservation_and_incompressibility(
        darcy_sweep, layered_runs, equivalence_runs, brinkman_sweep, overshoot_runs):
    worst_exact = 0.0
    worst_solver = 0.0
    for res in (layered_runs["vi"], layered_runs["ve"], equivalence_runs["ms"],
                equivalence_runs["ve"]):
        worst_exact = max(worst_exact, res.ledger.relative_residual())
    for res in (darcy_sweep["tp"][1.0], darcy_sweep["tp"][1 / 32],
                brinkman_sweep["btp"][1.0], brinkman_sweep["bve"],
                overshoot_runs["bve"]):
        worst_solver = max(worst_solver, res.ledger.relative_residual())

    # sampled discrete incompressibility of the nonlocal velocity
    worst_div = 0.0
    model = FluidModel(2.0)
    for res in (layered_runs["ve"], overshoot_runs["bve"]):
        s = res.final
        clamped = ScalarField(s.grid, np.clip(s.values, 0.0, 1.0))
        kappa = res.scenario.kappa_field(s.grid)
        vel = reconstruct_velocity(clamped, kappa, model)
        worst_div = max(worst_div, float(np.abs(cell_divergence(vel.edges)).max()))

    ok = worst_exact <= 1e-12 and worst_solver <= 1e-9 and worst_div <= 1e-13
    record("5 conservation and incompressibility", ok,
           f"ledger exact={worst_exact:.2e} (<=1e-12), "
           f"solver-backed={worst_solver:.2e} (<=1e-9), div={worst_div:.2e} (<=1e-13)")


def test_criterion_6_buckley_leverett_oracle():
    speed_ref = oracles.welge_front_speed(2.0)
    details = []
    ok = True
    for nx, tol in ((1000, 0.02), (200, 0.05)):
        sc = replace(load("layered_vi.cfg"),
                     permeability=load("layered_vi.cfg").permeability.constant(1.0),
                     nx=nx)
        res = run_vi(sc)
        speed = front_position(res.final, layer=0, threshold=0.1) / sc.end_time
        err = abs(speed - speed_ref) / speed_ref
        ok &= err <= tol
        details.append(f"nx={nx}: {speed:.4f} vs {speed_ref:.4f} ({err:.2%} <= {tol:.0%})")
    record("6 analytic front-speed oracle", ok, "; ".join(details))


def test_criterion_7_gamma_convergence_brinkman(brinkman_sweep):
    bve = brinkman_sweep["bve"]
    dists = [l1_distance(brinkman_sweep["btp"][g].final, bve.final)
             for g in brinkman_sweep["gammas"]]
    monotone = all(b < a for a, b in zip(dists, dists[1:]))
    record("7 gamma-convergence (Brinkman)", monotone,
           f"L1={['%.5f' % d for d in dists]}")


def test_criterion_8_overshoot_and_speed(overshoot_runs):
    bve, ve = overshoot_runs["bve"], overshoot_runs["ve"]
    over_bve = overshoot(bve.final, 0.9)
    over_ve = overshoot(ve.final, 0.9)
    T = bve.scenario.end_time
    mid = bve.final.grid.nz // 2
    speed_bve = front_position(bve.final, layer=mid, threshold=0.1) / T
    speed_ve = front_position(ve.final, layer=mid, threshold=0.1) / T
    ratio = speed_bve / speed_ve
    ok = (over_bve > 0.005 and over_ve <= 1e-12
          and speed_bve < speed_ve and abs(ratio - 1.27 / 1.33) <= 0.05)
    record("8 saturation overshoot slows the front", ok,
           f"overshoot={over_bve:.4f} (>0.005), reference={over_ve:.1e}, "
           f"speeds {speed_bve:.4f} < {speed_ve:.4f}, ratio={ratio:.4f} "
           f"(target 0.955 +/- 0.05)")


def test_criterion_9_runtime_trend(bench_rows):
    ratios = {nx: row["TP"] / row["VE"] for nx, row in bench_rows.items()}
    seq = [ratios[nx] for nx in (100, 200, 400, 800)]
    increasing = all(b > a for a, b in zip(seq, seq[1:]))
    floor = ratios[800] >= 3.0
    ms_slower = bench_rows[800]["MS"] > bench_rows[800]["VE"]
    record("9 runtime scaling trend", increasing and floor and ms_slower,
           f"TP/VE ratios={['%.1f' % r for r in seq]} (>=3 at 800), "
           f"MS {bench_rows[800]['MS']:.2f}s > VE {bench_rows[800]['VE']:.2f}s at 800")


def test_criterion_10_brute_force_transcriptions(each_backend):
    rng = np.random.default_rng(99)
    worst_ve = 0.0
    worst_bve = 0.0
    for nx, nz in ((4, 2), (8, 4)):
        g = build_grid(nx, nz)
        s0 = rng.uniform(0, 0.9, (nz, nx))
        kap = rng.uniform(0.4, 1.6, (nz, nx))
        inflow = rng.uniform(0, 1, nz)
        model = FluidModel(2.0)
        problem = VeProblem(g, model, ScalarField.from_matrix(g, kap), inflow)
        state = VeState(ScalarField.from_matrix(g, s0))
        ref = s0.copy()
        dt = 0.1 * g.dx / problem.derivative_bound
        for _ in range(3):
            state = problem.step(state, problem.velocity(state), dt)
            ref = oracles.dense_ve_step(ref, kap, 2.0, inflow, dt, g.dx, g.dz)
        worst_ve = max(worst_ve, float(np.abs(state.saturation.matrix - ref).max()))

        beta, eps = 1e-6, 1e-3
        params = BrinkmanParams(beta, beta, eps, eps)
        bproblem = BveProblem(g, model, ScalarField.from_matrix(g, kap), inflow,
                              params, helmholtz_tol=1e-13)
        bstate = BveState(ScalarField.from_matrix(g, s0))
        bref = s0.copy()
        for _ in range(3):
            bstate = bve_step(bproblem, bstate, dt)
            bref = oracles.dense_bve_step(bref, kap, 2.0, inflow, dt, g.dx, g.dz,
                                          beta, beta, eps, eps)
        worst_bve = max(worst_bve, float(np.abs(bstate.saturation.matrix - bref).max()))
    ok = worst_ve <= 1e-12 and worst_bve <= 1e-12
    record("10 dense-transcription equivalence", ok,
           f"explicit path {worst_ve:.2e}, pseudo-parabolic path {worst_bve:.2e} "
           f"(<= 1e-12)")
