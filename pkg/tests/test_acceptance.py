"""Acceptance criteria 1-11, one pass/fail line each.

Run ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or ``python tests/test_acceptance.py`` to print them directly.
Criteria that the simulation does not reach are left failing; see the
project notes for the analysis.
"""

from __future__ import annotations

import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from mgaps import checks, emit, lie, oracles, runner, scenario
from mgaps import quad_policy as qp

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
LINES: dict[int, str] = {}

ALIGNED = (2000, 4000)  # one and two laps of 2000 steps
MISALIGNED = (740, 1370, 2740, 3300)


def report(n: int, passed: bool, detail: str) -> bool:
    LINES[n] = f"[{'PASS' if passed else 'FAIL'}] criterion {n}: {detail}"
    print(LINES[n], flush=True)
    return passed


@lru_cache(maxsize=None)
def run(name: str) -> runner.ScenarioResult:
    return runner.run_scenario(scenario.load(SCENARIOS / f"{name}.yaml"))


def final_mean_shift(log: runner.RunLog, theta0, seconds: float = 10.0) -> np.ndarray:
    k = int(round(seconds / log.dt))
    return log.theta[-k:].mean(axis=0) - theta0


# --- criteria --------------------------------------------------------------------


def criterion_1() -> bool:
    results = oracles.jacobian_suite(points=50, seed=0, tol=1e-4)
    bad = [r.name for r in results if not r.passed]
    worst = max(results, key=lambda r: r.error)
    return report(1, not bad, f"{len(results)} Jacobians at 50 points, worst {worst.name} "
                              f"rel err {worst.error:.2e} (< 1e-4)" + (f"; failing {bad}" if bad else ""))


def criterion_2() -> bool:
    t0 = time.perf_counter()
    err = checks.sensitivity_equivalence(T=1000)
    secs = time.perf_counter() - t0
    return report(2, err < 1e-3 and secs < 30.0,
                  f"y_T vs re-simulation T=1000 rel err {err:.2e} (< 1e-3) in {secs:.1f} s (< 30 s)")


def criterion_3() -> bool:
    errs = {}
    toy = oracles.ScalarToyPlant()
    plant, theta, x = checks.quad_episode_start()
    for H in (1, 10, 250):
        errs[f"toy H={H}"] = checks.difftune_gradient_error(toy, np.array([0.5]), toy.initial_state(), 0, H)
        errs[f"quad H={H}"] = checks.difftune_gradient_error(plant, theta, x, 1500, H)
    worst = max(errs, key=errs.get)
    return report(3, max(errs.values()) < 1e-4,
                  f"G_pg vs episode-cost FD, worst {worst} rel err {errs[worst]:.2e} (< 1e-4)")


def criterion_4() -> bool:
    res = run("detune_figure8")
    logs = res.logs
    qr = res.quasi_regret("M-GAPS")
    q = len(qr) // 4
    first = (qr[q - 1] - qr[0]) / (q - 1)
    last = (qr[-1] - qr[-q]) / (q - 1)
    # signed slopes: a flat or falling tail counts as flattened
    a = last < 0.1 * first
    tot = {n: logs[n].total_cost for n in ("M-GAPS", "DiffTune*", "DiffTune", "OPRF")}
    b = tot["M-GAPS"] <= tot["DiffTune*"] <= tot["DiffTune"] <= tot["OPRF"]
    laps = logs["M-GAPS"].lap_costs()
    expert_lap = logs["Expert"].lap_costs()
    c = abs(laps[7] - expert_lap[7]) <= 0.1 * expert_lap[7]
    detail = (
        f"(a) slope first/last quarter {first:.3e}/{last:.3e} {'ok' if a else 'NO'}; "
        f"(b) totals M-GAPS {tot['M-GAPS']:.4e} DiffTune* {tot['DiffTune*']:.4e} "
        f"DiffTune {tot['DiffTune']:.4e} OPRF {tot['OPRF']:.4e} {'ok' if b else 'NO'}; "
        f"(c) lap 8 M-GAPS/Expert {laps[7] / expert_lap[7]:.3f} (within 10%) {'ok' if c else 'NO'}"
    )
    return report(4, a and b and c, detail)


def criterion_5() -> bool:
    sweep = run("detune_figure8").sweep
    totals = {h: c for h, c, dv in zip(sweep.lengths, sweep.totals, sweep.diverged) if dv is None}
    aligned = [totals[h] for h in ALIGNED]
    misaligned = [totals[h] for h in MISALIGNED]
    ok = max(aligned) <= min(misaligned)
    table = ", ".join(f"{h}:{totals[h]:.4e}" for h in sorted(totals))
    return report(5, ok, f"max aligned {max(aligned):.4e} <= min misaligned {min(misaligned):.4e}; sweep {table}")


def criterion_6() -> bool:
    logs = run("wind_line").logs
    m, e, d = (logs[n].total_cost for n in ("M-GAPS", "Expert", "Detune"))
    return report(6, m < e and m < d, f"wind 60 s totals M-GAPS {m:.4e} < Expert {e:.4e} and < Detune {d:.4e}")


def criterion_7() -> bool:
    logs = run("payload_circle").logs
    m, e = logs["M-GAPS"].tracking_cost(), logs["Expert"].tracking_cost()
    return report(7, m <= 0.5 * e, f"payload tracking M-GAPS {m:.4e} <= 0.5 x Expert {e:.4e} (ratio {m / e:.3f})")


def criterion_8() -> bool:
    expert = scenario.resolve_theta("expert", "quad")
    dw = final_mean_shift(run("wind_line").logs["M-GAPS"], expert)
    dp = final_mean_shift(run("payload_circle").logs["M-GAPS"], expert)
    i = qp.GAIN_NAMES.index("kp_z")
    ok = abs(dp[i]) > abs(dw[i])
    top = qp.GAIN_NAMES[int(np.argmax(np.abs(dp)))]
    return report(8, ok, f"|d kp_z| payload {abs(dp[i]):.3f} > wind {abs(dw[i]):.3f}; "
                         f"largest payload shift {top}")


def criterion_9() -> bool:
    s = scenario.load(SCENARIOS / "car_circle.yaml")
    log = run("car_circle").logs["M-GAPS"]
    L = s.lap_steps
    k_on = int(round(s.member("M-GAPS").start_after / s.dt))
    before = log.rms_error(k_on - L, k_on)
    after = [log.rms_error(k_on + i * L, k_on + (i + 1) * L) for i in range(3)]
    ratio = before / after[2]
    return report(9, ratio >= 2.0, f"car RMS lap before {before:.3f} m, laps 1-3 after "
                                   f"{', '.join(f'{a:.3f}' for a in after)} m; reduction {ratio:.2f}x (>= 2)")


def criterion_10() -> bool:
    ang, _ = checks.oprf_mean_direction(episodes=100_000, seed=0)
    return report(10, ang < 5.0, f"OPRF mean step vs -gradient over 1e5 episodes {ang:.2f} deg (< 5)")


def criterion_11() -> bool:
    rng = np.random.default_rng(11)
    r = rng.normal(size=(20_000, 3))
    r *= (rng.uniform(0, 3.0, size=20_000) / np.linalg.norm(r, axis=1))[:, None]
    rt = max(float(np.max(np.abs(lie.log_so3(lie.exp_so3(v)) - v))) for v in r)
    xs = np.concatenate([rng.normal(size=10_000) * 10.0 ** rng.integers(-3, 300, 10_000), [1e308, -1e308]])
    b = np.array([200.0, 50.0])
    clamp = all(np.all(np.abs(qp.softclamp(xs, bb)) < bb) for bb in b)
    first = run("wind_line")
    again = runner.run_scenario(scenario.load(SCENARIOS / "wind_line.yaml"))
    same = all(emit.csv_text(first.logs[n]) == emit.csv_text(again.logs[n]) for n in first.logs)
    return report(11, rt < 1e-10 and clamp and same,
                  f"exp/log roundtrip {rt:.1e} (< 1e-10) over |r|<=3; softclamp strict {clamp}; "
                  f"bitwise-identical logs across two runs {same}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.acceptance
@pytest.mark.parametrize("fn", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(fn):
    assert fn(), LINES[int(fn.__name__.split("_")[1])]


if __name__ == "__main__":
    for fn in CRITERIA:
        fn()
    print(f"{sum(line.startswith('[PASS]') for line in LINES.values())}/{len(LINES)} criteria pass")
