"""Single-trajectory runner: every roster member replays the same scenario.

Per step the protocol is: observe ``x_t``, choose ``theta_t``, act, incur
``c_t``, advance to ``x_{t+1}`` and only then reveal derivatives to the
optimizer. Nothing is reset between episodes.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from mgaps import reference as rf
from mgaps.errors import MgapsError
from mgaps.optimizers import (
    DiffTune,
    EpisodeRecord,
    EpisodicConfig,
    Fixed,
    Mgaps,
    MgapsConfig,
    Oprf,
    OprfConfig,
    StepDerivs,
)
from mgaps.plant import CarPlant, QuadPlant
from mgaps.scenario import Member, Scenario, ScenarioError, resolve_theta


@dataclass
class RunLog:
    name: str
    platform: str
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    cost: np.ndarray
    y_norm: np.ndarray
    wind: np.ndarray
    tracking: np.ndarray  # |p - p_d|^2 at each step, unweighted
    episodes: list[EpisodeRecord] = field(default_factory=list)
    diverged: str | None = None
    lap_steps: int = 0
    dt: float = 0.0

    def __len__(self) -> int:
        return len(self.t)

    @property
    def total_cost(self) -> float:
        return float(self.cost.sum())

    def lap_costs(self) -> np.ndarray:
        L = self.lap_steps
        full = len(self.cost) // L if L else 0
        return self.cost[: full * L].reshape(full, L).sum(axis=1)

    def tracking_cost(self) -> float:
        """Cumulative ``dt * |p - p_d|^2`` over the run."""
        return float(self.dt * self.tracking.sum())

    def rms_error(self, k0: int, k1: int) -> float:
        return float(np.sqrt(np.mean(self.tracking[k0:k1])))


def build_plant(s: Scenario, backend: str | None = None):
    table = rf.sample_grid(s.trajectory, s.n_steps, s.dt, getattr(s.env, "gravity", rf.GRAVITY))
    if s.platform == "quad":
        return QuadPlant(s.env, table, s.policy, s.weights, backend=backend)
    return CarPlant(s.env, table, s.weights)


def member_seed(scenario_seed: int, name: str) -> int:
    """Per-member seed depending only on the scenario seed and member name."""
    ss = np.random.SeedSequence([int(scenario_seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


def make_optimizer(m: Member, s: Scenario, n_state: int):
    theta0 = resolve_theta(m.theta0, s.platform)
    if isinstance(m.horizon, str):
        raise ScenarioError(f"member {m.name!r}: hindsight horizon {m.horizon!r} must be resolved first")
    if m.method == "fixed":
        return Fixed(theta0)
    if m.method == "mgaps":
        return Mgaps(theta0, n_state, MgapsConfig(eta=m.eta, clip=m.clip))
    if m.method == "difftune":
        # the episode update sums H step gradients
        H = int(m.horizon)
        return DiffTune(theta0, n_state, EpisodicConfig(eta=m.eta / H, horizon=H, clip=m.clip))
    return Oprf(theta0, OprfConfig(eta=m.eta, horizon=int(m.horizon), epsilon=m.epsilon,
                                   rng_seed=member_seed(s.seed, m.name)))


def run_member(s: Scenario, m: Member, backend: str | None = None) -> RunLog:
    plant = build_plant(s, backend)
    opt = make_optimizer(m, s, plant.n)
    N = s.n_steps
    start = int(round(m.start_after / s.dt))
    n, mm, d = plant.n, plant.m, plant.d
    xs = np.empty((N, n))
    us = np.empty((N, mm))
    ths = np.empty((N, d))
    cs = np.empty(N)
    ys = np.zeros(N)
    trk = np.empty(N)
    derivs = StepDerivs.zeros(n, mm, d)
    hold = Fixed(opt.current().copy())
    x = plant.initial_state()
    diverged = None
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            for k in range(N):
                active = opt if k >= start else hold
                xs[k] = x
                theta = active.current()
                ths[k] = theta
                want = derivs if active.needs_derivs else None
                x_next, us[k], cs[k] = plant.step(k, x, theta, want)
                trk[k] = plant.tracking_error(x, k)
                active.observe(cs[k], want)
                ys[k] = active.sensitivity_norm
                x = x_next
            k = N
        except (MgapsError, FloatingPointError) as exc:
            diverged = f"step {k} (t={k * s.dt:.3f} s): {type(exc).__name__}: {exc}"
    return RunLog(
        name=m.name,
        platform=s.platform,
        t=np.arange(k) * s.dt,
        x=xs[:k],
        u=us[:k],
        theta=ths[:k],
        cost=cs[:k],
        y_norm=ys[:k],
        wind=plant.wind_flags[:k].copy(),
        tracking=trk[:k],
        episodes=list(opt.episodes),
        diverged=diverged,
        lap_steps=s.lap_steps,
        dt=s.dt,
    )


def _run_one(args):
    s, m, backend = args
    return run_member(s, m, backend)


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass
class SweepResult:
    lengths: list[int]
    totals: list[float]
    diverged: list[str | None]
    lap_steps: int

    def best(self) -> int:
        return self._pick(min)

    def worst(self) -> int:
        return self._pick(max)

    def _pick(self, fn) -> int:
        ok = [(c, h) for h, c, dv in zip(self.lengths, self.totals, self.diverged) if dv is None]
        if not ok:
            raise ScenarioError("every sweep point diverged")
        return fn(ok)[1]

    def rows(self):
        for h, c, dv in zip(self.lengths, self.totals, self.diverged):
            yield {"horizon": h, "laps": h / self.lap_steps, "total_cost": c, "diverged": dv}


def episode_sweep(s: Scenario, lengths=None, jobs: int = 1, backend: str | None = None) -> SweepResult:
    """DiffTune at each episode length on identical copies of ``s``."""
    if s.sweep is None and lengths is None:
        raise ScenarioError(f"scenario {s.name!r} has no sweep section and no lengths were given")
    lengths = [int(h) for h in (lengths if lengths is not None else s.sweep.lengths)]
    if any(h < 1 for h in lengths):
        raise ScenarioError("episode lengths must be >= 1")
    eta = s.sweep.eta if s.sweep else next(m.eta for m in s.roster if m.method == "difftune")
    theta0 = s.sweep.theta0 if s.sweep else "detune"
    clip = s.sweep.clip if s.sweep else None
    members = [Member(name=f"DiffTune[H={h}]", method="difftune", theta0=theta0, eta=eta,
                      horizon=h, clip=clip) for h in lengths]
    logs = _map(_run_one, [(s, m, backend) for m in members], jobs)
    return SweepResult(lengths, [lg.total_cost for lg in logs], [lg.diverged for lg in logs], s.lap_steps)


def resolve_roster(s: Scenario, jobs: int = 1, backend: str | None = None):
    """Replace hindsight horizons (``best``/``worst``) by concrete sweep choices."""
    if not any(isinstance(m.horizon, str) for m in s.roster):
        return list(s.roster), None
    sweep = episode_sweep(s, jobs=jobs, backend=backend)
    pick = {"best": sweep.best(), "worst": sweep.worst()}
    roster = [replace(m, horizon=pick[m.horizon]) if isinstance(m.horizon, str) else m for m in s.roster]
    return roster, sweep


@dataclass
class ScenarioResult:
    scenario: Scenario
    logs: dict[str, RunLog]
    roster: list[Member]
    sweep: SweepResult | None = None

    @property
    def diverged(self) -> list[str]:
        return [name for name, lg in self.logs.items() if lg.diverged]

    def quasi_regret(self, name: str) -> np.ndarray | None:
        base = self.logs.get(self.scenario.baseline) if self.scenario.baseline else None
        lg = self.logs[name]
        if base is None or base.diverged or lg.diverged:
            return None
        return np.cumsum(lg.cost - base.cost)


def run_scenario(s: Scenario, jobs: int = 1, backend: str | None = None, only=None) -> ScenarioResult:
    roster, sweep = resolve_roster(s, jobs, backend)
    if only is not None:
        roster = [m for m in roster if m.name in set(only)]
    logs = _map(_run_one, [(s, m, backend) for m in roster], jobs)
    return ScenarioResult(s, {lg.name: lg for lg in logs}, roster, sweep)
