"""Writers for run logs: per-step CSV, summary document, downsampled series."""

from __future__ import annotations

import io
import math
import re
from pathlib import Path

import numpy as np
import yaml

from mgaps import car_env as ce
from mgaps import quad_env as qe
from mgaps import quad_policy as qp
from mgaps.runner import RunLog, ScenarioResult
from mgaps.scenario import echo

SCHEMA_VERSION = 1

_LAYOUT = {
    "quad": (qe.STATE_NAMES, qe.STATE_UNITS, qe.ACTION_NAMES, qe.ACTION_UNITS, qp.GAIN_NAMES, "m^2*s"),
    "car": (ce.STATE_NAMES, ce.STATE_UNITS, ce.ACTION_NAMES, ce.ACTION_UNITS, ce.GAIN_NAMES, "m^2"),
}


class EmitError(OSError):
    pass


def columns(platform: str) -> list[str]:
    """CSV header cells, each ``name[unit]``."""
    xs, xu, us, uu, gains, cost_unit = _LAYOUT[platform]
    cols = ["t[s]"]
    cols += [f"{n}[{u}]" for n, u in zip(xs, xu)]
    cols += [f"{n}[{u}]" for n, u in zip(us, uu)]
    cols += [f"theta_{g}[ln]" for g in gains]
    cols += [f"cost[{cost_unit}]", "y_norm[1]", "wind_active[bool]"]
    return cols


def log_matrix(log: RunLog) -> np.ndarray:
    return np.column_stack(
        [log.t, log.x, log.u, log.theta, log.cost, log.y_norm, log.wind.astype(float)]
    ) if len(log) else np.empty((0, len(columns(log.platform))))


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name.replace("*", "_star")).strip("_")


def csv_text(log: RunLog) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns(log.platform)) + "\n")
    mat = log_matrix(log)
    if len(mat):
        np.savetxt(buf, mat, fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_csv(log: RunLog, path) -> Path:
    return write_text(Path(path), csv_text(log))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().rstrip("\n").split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise EmitError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return header, data.reshape(-1, len(header))


def _f(v) -> float | None:
    v = float(v)
    return v if math.isfinite(v) else None


def summary(result: ScenarioResult) -> dict:
    s = result.scenario
    members = {}
    for m in result.roster:
        log = result.logs[m.name]
        qr = result.quasi_regret(m.name)
        gains = qp.GAIN_NAMES if s.platform == "quad" else ce.GAIN_NAMES
        final = log.theta[-1] if len(log) else np.full(len(gains), np.nan)
        entry = {
            "method": m.method,
            "eta": m.eta,
            "horizon": m.horizon if m.method in ("difftune", "oprf") else None,
            "steps": len(log),
            "diverged": log.diverged,
            "total_cost": _f(log.total_cost),
            "tracking_cost": _f(log.tracking_cost()),
            "quasi_regret_final": None if qr is None or not len(qr) else _f(qr[-1]),
            "lap_costs": [_f(c) for c in log.lap_costs()],
            "final_gains": {g: _f(math.exp(v)) if math.isfinite(v) else None for g, v in zip(gains, final)},
            "episodes": len(log.episodes),
        }
        if s.platform == "quad":
            entry["thrust_clamped_steps"] = int(np.sum(log.u[:, 0] < 0.0)) if len(log) else 0
        members[m.name] = entry
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": echo(s),
        "steps": s.n_steps,
        "lap_steps": s.lap_steps,
        "baseline": s.baseline,
        "members": members,
        "diverged": result.diverged,
    }
    if result.sweep is not None:
        doc["sweep"] = [
            {**row, "total_cost": _f(row["total_cost"])} for row in result.sweep.rows()
        ]
    return doc


def summary_text(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)


def downsample(log: RunLog, stride: int, baseline: RunLog | None = None) -> tuple[list[str], np.ndarray]:
    """Every ``stride``-th step: time, cumulative cost, quasi-regret, error, gains."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    gains = qp.GAIN_NAMES if log.platform == "quad" else ce.GAIN_NAMES
    cum = np.cumsum(log.cost)
    if baseline is not None and not baseline.diverged and len(baseline) >= len(log):
        qr = np.cumsum(log.cost - baseline.cost[: len(log)])
    else:
        qr = np.full(len(log), np.nan)
    idx = np.arange(0, len(log), stride)
    header = ["t[s]", "cum_cost", "quasi_regret", "pos_err[m]"] + [f"gain_{g}" for g in gains]
    mat = np.column_stack([log.t, cum, qr, np.sqrt(log.tracking), np.exp(log.theta)])[idx] if len(log) \
        else np.empty((0, len(header)))
    return header, mat


def write_result(result: ScenarioResult, out_dir, fmt: str = "csv", stride: int = 0) -> list[Path]:
    """Write a scenario result below ``out_dir/<scenario name>/``."""
    if fmt not in ("csv", "summary"):
        raise ValueError(f"unknown format {fmt!r}")
    root = Path(out_dir) / safe_name(result.scenario.name)
    written = [write_text(root / "summary.yaml", summary_text(summary(result)))]
    if fmt == "csv":
        for name, log in result.logs.items():
            written.append(write_csv(log, root / f"{safe_name(name)}.csv"))
    if stride:
        base = result.logs.get(result.scenario.baseline) if result.scenario.baseline else None
        for name, log in result.logs.items():
            header, mat = downsample(log, stride, base)
            buf = io.StringIO()
            buf.write(",".join(header) + "\n")
            if len(mat):
                np.savetxt(buf, mat, fmt="%.10g", delimiter=",", newline="\n")
            written.append(write_text(root / f"{safe_name(name)}_series.csv", buf.getvalue()))
    return written
