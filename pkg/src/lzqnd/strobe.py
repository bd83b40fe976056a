"""Pulsed (stroboscopic) qubit-meter coupling and timing-error Monte Carlo.

The continuous coupling is replaced by a train of short rectangular pulses
centered on j*delta_t.  Two amplitude conventions are supported for a
pulse of duration T_P:

  "unit_area"  the pulse stands in for a delta spike of the coupling
               switch: amplitude x0/T_P while active (so with T_P = 1/x0
               the active coupling is x0^2);
  "x0"         the continuous coupling amplitude x0, gated on and off.

The meter keeps damping between pulses.  Timing errors shift the qubit
Hamiltonian inside the coupling term of pulse j to H_S(t + t_j), with t_j
drawn uniformly from [-sqrt(3) tau, +sqrt(3) tau] (variance tau^2) from a
per-sample substream of a seeded generator, so runs are reproducible and
sample order is irrelevant.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .lz import LZParams
from .lindblad import JointPropagator, MeterParams, dt_bound, initial_joint_state
from .trajectory import Trajectory

AMPLITUDE_MODES = ("unit_area", "x0")


@dataclass(frozen=True)
class PulseSchedule:
    """Pulse centers, common duration, and per-pulse time-shift errors."""

    centers: np.ndarray
    duration: float
    shifts: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        shifts = np.asarray(self.shifts, dtype=float)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "shifts", shifts)
        if self.duration <= 0:
            raise ValueError("pulse duration must be > 0")
        if len(shifts) != len(centers):
            raise ValueError("need one shift per pulse")
        if len(centers) > 1:
            gap = np.min(np.diff(np.sort(centers)))
            if gap <= self.duration:
                raise ValueError(
                    f"pulses overlap: spacing {gap:.4g} <= duration {self.duration:.4g}"
                )

    @property
    def n_pulses(self) -> int:
        return len(self.centers)

    def with_shifts(self, shifts: np.ndarray) -> "PulseSchedule":
        return replace(self, shifts=np.asarray(shifts, dtype=float))


def build_schedule(window: tuple[float, float], delta_t: float, t_p: float) -> PulseSchedule:
    """Pulses centered on every multiple of delta_t inside the window.

    Edge pulses may be clipped by the window during propagation; centers on
    the boundary are kept.  Raises when pulses would overlap (delta_t <= t_p).
    """
    t1, t2 = window
    if t2 <= t1:
        raise ValueError("empty window")
    if delta_t <= t_p:
        raise ValueError(f"pulses overlap: delta_t={delta_t:.4g} <= t_p={t_p:.4g}")
    tiny = 1e-12 * delta_t
    j1 = int(np.ceil((t1 - tiny) / delta_t))
    j2 = int(np.floor((t2 + tiny) / delta_t))
    centers = np.arange(j1, j2 + 1, dtype=float) * delta_t
    return PulseSchedule(centers=centers, duration=t_p, shifts=np.zeros(len(centers)))


def _segments(schedule: PulseSchedule, window: tuple[float, float]):
    """Ordered (start, end, pulse_index_or_-1) covering the window."""
    t1, t2 = window
    segs = []
    t = t1
    order = np.argsort(schedule.centers)
    for idx in order:
        c = schedule.centers[idx]
        a = max(c - schedule.duration / 2, t1)
        b = min(c + schedule.duration / 2, t2)
        if b <= t1 or a >= t2:
            continue
        if a > t:
            segs.append((t, a, -1))
        segs.append((max(a, t), b, int(idx)))
        t = b
    if t < t2:
        segs.append((t, t2, -1))
    return segs


def pulse_amplitude(m: MeterParams, t_p: float, mode: str) -> float:
    if mode not in AMPLITUDE_MODES:
        raise ValueError(f"unknown amplitude mode {mode!r}; use one of {AMPLITUDE_MODES}")
    return m.x0 / t_p if mode == "unit_area" else m.x0


def run_stroboscopic(
    lz: LZParams,
    m: MeterParams,
    schedule: PulseSchedule,
    window: tuple[float, float],
    dt: float | None = None,
    amplitude_mode: str = "unit_area",
    n_store: int = 801,
    check: bool = True,
    rho0: np.ndarray | None = None,
) -> Trajectory:
    """Joint evolution with the coupling active only inside the pulses.

    ``dt`` caps the sub-step everywhere and must resolve each pulse with at
    least 20 steps; segment-local steps are further refined to the active
    coupling's own bound.  Segment boundaries are always sampled, so the
    cusps the pulses imprint on P(t) are visible in the stored trajectory.
    """
    t1, t2 = window
    x_pulse = pulse_amplitude(m, schedule.duration, amplitude_mode)
    t_max = max(abs(t1), abs(t2))
    bound_gap = dt_bound(lz, m, t_max, x_eff=0.0)
    bound_pulse = min(dt_bound(lz, m, t_max, x_eff=x_pulse), schedule.duration / 20)
    if dt is None:
        dt = schedule.duration / 20
    if dt > schedule.duration / 20 * (1 + 1e-12):
        raise ValueError(
            f"dt={dt:.3e} does not resolve the pulse: need <= t_p/20 = "
            f"{schedule.duration / 20:.3e}"
        )
    if rho0 is None:
        rho0 = initial_joint_state(lz, m, t1)
    prop = JointPropagator(rho0, lz, m, check=check)
    spacing = (t2 - t1) / max(2, n_store - 1)
    rows = [prop.sample(t1)]
    for a, b, idx in _segments(schedule, window):
        if idx < 0:
            x_eff, shift, step = 0.0, 0.0, min(dt, bound_gap)
        else:
            x_eff, shift, step = x_pulse, float(schedule.shifts[idx]), min(dt, bound_pulse)
        n_sub = max(1, int(np.ceil((b - a) / spacing)))
        edges = np.linspace(a, b, n_sub + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            prop.advance(lo, hi, step, x_eff, shift)
            rows.append(prop.sample(hi))
    traj_rows = _dedupe(rows)
    traj = Trajectory(
        times=np.array([r["t"] for r in traj_rows]),
        p_values=np.array([r["p"] for r in traj_rows]),
        trace_dev=np.array([r["trace_dev"] for r in traj_rows]),
        herm_dev=np.array([r["herm_dev"] for r in traj_rows]),
        min_eig=np.array([r["min_eig"] for r in traj_rows]),
        quad=np.array([r["quad"] for r in traj_rows]),
        tail=np.array([r["tail"] for r in traj_rows]),
        meta={
            "window": (t1, t2), "amplitude_mode": amplitude_mode,
            "x_pulse": x_pulse, "t_p": schedule.duration,
            "centers": schedule.centers.tolist(), "shifts": schedule.shifts.tolist(),
            "dt_cap": dt, "g": lz.g, "eps": lz.eps, "omega_c": m.omega_c,
            "kappa": m.kappa, "nbar": m.nbar, "x0": m.x0, "n_max": m.n_max,
        },
    )
    return traj


def _dedupe(rows):
    out = [rows[0]]
    for r in rows[1:]:
        if r["t"] > out[-1]["t"]:
            out.append(r)
    return out


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform timing jitter of standard deviation tau, sample count, seed."""

    tau: float
    n_it: int
    seed: int

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.n_it < 2:
            raise ValueError("need at least 2 samples")


def sample_shifts(noise: NoiseSpec, sample_index: int, n_pulses: int) -> np.ndarray:
    """Per-pulse time shifts for one Monte Carlo sample.

    Substreams are derived from (seed, sample_index), so any subset of
    samples can be generated independently and in any order.  The unit
    draws do not depend on tau: shrinking tau shrinks the same noise
    realization, which makes tau-convergence studies smooth.
    """
    rng = np.random.default_rng(np.random.SeedSequence(noise.seed, spawn_key=(sample_index,)))
    unit = 2.0 * rng.random(n_pulses) - 1.0
    return np.sqrt(3.0) * noise.tau * unit


@dataclass
class MCSummary:
    """Sample-averaged transfer probability with its standard error."""

    times: np.ndarray
    mean_p: np.ndarray
    stderr: np.ndarray
    final_t: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)


def _mc_sample(args):
    (lz, m, schedule, window, dt, amplitude_mode, n_store, noise, idx) = args
    shifts = sample_shifts(noise, idx, schedule.n_pulses)
    traj = run_stroboscopic(
        lz, m, schedule.with_shifts(shifts), window, dt,
        amplitude_mode=amplitude_mode, n_store=n_store,
    )
    return traj.times, traj.p_values, traj.diagnostics_summary()


def run_noisy_mc(
    lz: LZParams,
    m: MeterParams,
    delta_t: float,
    noise: NoiseSpec,
    window: tuple[float, float],
    dt: float | None = None,
    t_p: float | None = None,
    amplitude_mode: str = "unit_area",
    n_store: int = 801,
    workers: int = 1,
) -> MCSummary:
    """Monte Carlo over pulse-timing errors.

    Every sample shares the pulse placement (shifts enter only the coupling
    term), hence a common time grid; the mean and standard error are plain
    per-time-point sample statistics in sample-index order.
    """
    if t_p is None:
        if m.x0 <= 0:
            raise ValueError("t_p = 1/x0 needs x0 > 0")
        t_p = 1.0 / m.x0
    schedule = build_schedule(window, delta_t, t_p)
    jobs = [
        (lz, m, schedule, window, dt, amplitude_mode, n_store, noise, i)
        for i in range(noise.n_it)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_sample, jobs))
    else:
        results = [_mc_sample(j) for j in jobs]
    times = results[0][0]
    pmat = np.stack([r[1] for r in results])
    diag = {
        "max_trace_dev": max(r[2]["max_trace_dev"] for r in results),
        "max_herm_dev": max(r[2]["max_herm_dev"] for r in results),
        "min_eig": min(r[2]["min_eig"] for r in results),
        "max_tail": max(r[2]["max_tail"] for r in results),
    }
    if np.all(pmat == pmat[0]):
        # identical samples (e.g. tau = 0): exact mean, exactly zero error
        mean_p = pmat[0].copy()
        stderr = np.zeros_like(mean_p)
    else:
        mean_p = pmat.mean(axis=0)
        stderr = pmat.std(axis=0, ddof=1) / np.sqrt(noise.n_it)
    return MCSummary(
        times=times,
        mean_p=mean_p,
        stderr=stderr,
        final_t=pmat[:, -1].copy(),
        seed=noise.seed,
        meta={
            "tau": noise.tau, "n_it": noise.n_it, "delta_t": delta_t, "t_p": t_p,
            "amplitude_mode": amplitude_mode, "window": window,
            "n_pulses": schedule.n_pulses, "diagnostics": diag,
        },
    )
