"""Seeded, parallel parameter sweeps over grid cells.

A sweep is a grid over one or two named parameter axes; every cell is a
fully-determined single run (fixed-step integrators, no hidden state), so
re-running any cell reproduces its scalars bit for bit regardless of the
worker count.  Per-cell failures are recorded in the row status and never
abort the sweep.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import Config, ConfigError, SWEEP_TASKS
from .csvio import write_csv
from .dephasing import run_ame
from .lindblad import effective_gap, run_continuous
from .nonmarkov import blp_measure

# parameter paths assignable by an axis, in application order
AXIS_PATHS = (
    "lz.g", "lz.eps", "lz.g2_over_eps",
    "meter.omega_c", "meter.kappa", "meter.kappa_over_omega_c",
    "meter.x0", "meter.n", "meter.beta",
    "model.gamma0", "model.gamma0_over_g",
)


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: parameter path, grid scale, range, point count."""

    path: str
    scale: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.path not in AXIS_PATHS:
            raise ConfigError(f"unknown axis parameter {self.path!r}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis scale must be linear or log, got {self.scale!r}")
        if self.n < 1:
            raise ConfigError("axis needs at least one point")
        if self.scale == "log" and (self.lo <= 0 or self.hi <= 0):
            raise ConfigError("log axis needs positive bounds")

    @classmethod
    def parse(cls, text: str) -> "AxisSpec":
        parts = text.split()
        if len(parts) != 5:
            raise ConfigError(
                f"axis spec must be '<path> <linear|log> <lo> <hi> <n>', got {text!r}"
            )
        return cls(parts[0], parts[1], float(parts[2]), float(parts[3]), int(parts[4]))

    def values(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.lo])
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.n)
        return np.linspace(self.lo, self.hi, self.n)


@dataclass
class SweepSpec:
    task: str
    axes: list[AxisSpec]
    base: dict                 # config data snapshot (lz/meter/model sections)
    seed: int
    window_gu: float
    dt: float | None
    n_store: int
    budget: int = 2000

    def __post_init__(self):
        if self.task not in SWEEP_TASKS:
            raise ConfigError(f"unknown sweep task {self.task!r}; one of {SWEEP_TASKS}")
        n_cells = int(np.prod([a.n for a in self.axes])) if self.axes else 1
        if n_cells > self.budget:
            raise ConfigError(f"sweep has {n_cells} cells, over the budget {self.budget}")

    @classmethod
    def from_config(cls, cfg: Config) -> "SweepSpec":
        s = cfg.data["sweep"]
        if s["task"] is None:
            raise ConfigError("[sweep] task is required")
        axes = []
        for key in ("axis1", "axis2"):
            if s[key] is not None:
                axes.append(AxisSpec.parse(s[key]))
        if not axes:
            raise ConfigError("[sweep] needs at least axis1")
        base = {sec: dict(cfg.data[sec]) for sec in ("lz", "meter", "model")}
        return cls(
            task=s["task"],
            axes=axes,
            base=base,
            seed=cfg.get("run", "seed"),
            window_gu=cfg.get("run", "t_half_gu"),
            dt=cfg.dt_or_none(),
            n_store=cfg.get("run", "n_store"),
            budget=s["budget"],
        )

    def cells(self):
        grids = [a.values() for a in self.axes]
        paths = [a.path for a in self.axes]
        shape = [len(g) for g in grids]
        for index in range(int(np.prod(shape))):
            idx = np.unravel_index(index, shape)
            yield index, {p: float(g[i]) for p, g, i in zip(paths, grids, idx)}


@dataclass
class ResultRecord:
    cell_index: int
    coords: dict
    values: dict
    status: str
    wall_time_s: float = 0.0
    config_hash: str = ""
    engine_version: str = field(default=__version__)


def _cell_config(base: dict, coords: dict) -> Config:
    cfg = Config.defaults()
    for sec, keys in base.items():
        for k, v in keys.items():
            cfg.data[sec][k] = v
    for path, value in coords.items():
        sec, key = path.split(".")
        cfg.data[sec][key] = value
        # direct and derived forms of the same parameter are exclusive
        if key == "g":
            cfg.data[sec]["g2_over_eps"] = None
        elif key == "g2_over_eps":
            pass
        elif key == "kappa":
            cfg.data[sec]["kappa_over_omega_c"] = None
        elif key == "n":
            cfg.data[sec]["beta"] = None
        elif key == "beta":
            cfg.data[sec]["n"] = None
        elif key == "gamma0":
            cfg.data[sec]["gamma0_over_g"] = None
    return cfg


def run_cell(task: str, base: dict, coords: dict, window_gu: float,
             dt: float | None, n_store: int) -> dict:
    """Execute one cell and return its scalar outputs."""
    cfg = _cell_config(base, coords)
    lz = cfg.build_lz()
    if task == "continuous_T":
        m = cfg.build_meter()
        res = run_continuous(lz, m, window_gu, dt, n_store=n_store or 401)
        out = {"T": res.t_final}
        out.update(res.trajectory.diagnostics_summary())
        return out
    if task == "ame_T":
        model = cfg.build_model(lz)
        res = run_ame(lz, model, window_gu, dt)
        return {"T": res.t_final, "gamma0": model.gamma0}
    if task == "delta_T":
        from .dephasing import DephasingModel, ame_dt_bound

        model = cfg.build_model(lz)
        step = dt if dt is not None else ame_dt_bound(lz, model, window_gu * lz.time_unit())
        t_deph = run_ame(lz, model, window_gu, step).t_final
        zero = DephasingModel(gamma0=0.0, g0_spectral=0.0)
        t_coh = run_ame(lz, zero, window_gu, step).t_final
        return {"delta_T": t_deph - t_coh, "T": t_deph, "T_LZ": t_coh, "gamma0": model.gamma0}
    if task == "nm_measure":
        m = cfg.build_meter()
        res = blp_measure(lz, m, window_gu, dt, n_store=n_store or 2001)
        return {
            "N": res.n_value,
            "best_theta": res.best_pair.theta,
            "best_phi": res.best_pair.phi,
        }
    if task == "effective_gap":
        m = cfg.build_meter()
        return {"gap": effective_gap(lz, m, window_gu, dt)}
    raise ConfigError(f"unknown task {task!r}")


def _cell_job(args):
    index, coords, task, base, window_gu, dt, n_store = args
    t0 = time.perf_counter()
    try:
        values = run_cell(task, base, coords, window_gu, dt, n_store)
        status = "ok"
    except Exception as e:  # recorded in-row; the sweep must go on
        values = {}
        status = f"error:{type(e).__name__}: {e}"
    return ResultRecord(
        cell_index=index,
        coords=coords,
        values=values,
        status=status,
        wall_time_s=time.perf_counter() - t0,
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[ResultRecord]:
    jobs = [
        (i, coords, spec.task, spec.base, spec.window_gu, spec.dt, spec.n_store)
        for i, coords in spec.cells()
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_cell_job, jobs))
    else:
        records = [_cell_job(j) for j in jobs]
    return records


def sweep_to_csv(path, spec: SweepSpec, records: list[ResultRecord], metadata: dict,
                 volatile: dict | None = None):
    """One row per cell, ordered by cell index, stable column set."""
    value_keys: list[str] = []
    for r in records:
        for k in r.values:
            if k not in value_keys:
                value_keys.append(k)
    axis_paths = [a.path for a in spec.axes]
    cols = [("cell_index", [r.cell_index for r in records])]
    for p in axis_paths:
        cols.append((p, [r.coords[p] for r in records]))
    for k in value_keys:
        cols.append((k, [r.values.get(k, float("nan")) for r in records]))
    cols.append(("status", [r.status for r in records]))
    vol = dict(volatile or {})
    vol["total_wall_time_s"] = sum(r.wall_time_s for r in records)
    write_csv(path, cols, metadata=metadata, volatile=vol)
