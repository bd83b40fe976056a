"""Verification suite: every release gate as an executable check.

Each group returns machine-readable :class:`CheckResult` rows; the CLI and
the test suite both run them.  Groups prefixed ``analytic`` evaluate
closed-form identities only and finish in well under a second; numbered
groups propagate the actual dynamics at pinned parameters and tolerances.
State-validity extremes of every propagated run are pooled and gated at
the end (group 12).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import kernels
from .dephasing import (
    DephasingModel,
    analytic_autocorrelation,
    asymptotic_infidelity,
    avron_q,
    run_ame,
    relative_infidelity,
    spectral_g0,
)
from .lz import (
    LZParams,
    coherent_p_at_times,
    coherent_transfer_trajectory,
    lz_infidelity_asymptotic,
    lz_infidelity_finite,
    trailing_averaged_p,
)
from .lindblad import MeterParams, regression_autocorrelation, run_continuous
from .nonmarkov import blp_measure, blp_measure_dephasing
from .strobe import NoiseSpec, build_schedule, run_noisy_mc, run_stroboscopic

MC_SEED = 20260810


@dataclass
class CheckResult:
    name: str
    value: float
    bound: float | tuple
    op: str  # "<=", ">=", "range", "bool"
    passed: bool
    runtime_s: float = 0.0
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.op == "range":
            lo, hi = self.bound
            btxt = f"in [{lo:.4g}, {hi:.4g}]"
        elif self.op == "bool":
            btxt = "expected true"
        else:
            btxt = f"{self.op} {self.bound:.6g}"
        return f"{status}  {self.name}: measured {self.value:.6g} {btxt}  {self.detail}"


def _res(name, value, bound, op, runtime=0.0, detail="") -> CheckResult:
    if op == "<=":
        ok = value <= bound
    elif op == ">=":
        ok = value >= bound
    elif op == "range":
        ok = bound[0] <= value <= bound[1]
    elif op == "bool":
        ok = bool(value)
        value = 1.0 if ok else 0.0
        bound = 1.0
    else:
        raise ValueError(f"unknown op {op}")
    return CheckResult(name, float(value), bound, op, ok, runtime, detail)


@dataclass
class DiagPool:
    """Worst-case state invariants across every run of the suite."""

    max_trace_dev: float = 0.0
    max_herm_dev: float = 0.0
    min_eig: float = 0.0
    max_tail: float = 0.0
    n_runs: int = 0

    def add(self, summary: dict):
        self.max_trace_dev = max(self.max_trace_dev, summary["max_trace_dev"])
        self.max_herm_dev = max(self.max_herm_dev, summary["max_herm_dev"])
        self.min_eig = min(self.min_eig, summary["min_eig"])
        self.max_tail = max(self.max_tail, summary["max_tail"])
        self.n_runs += 1


# ---------------------------------------------------------------- analytic


def check_analytic(pool: DiagPool) -> list[CheckResult]:
    out = []
    p1 = LZParams(g=1.0, eps=1.0)
    out.append(_res(
        "analytic.lz_asymptote", lz_infidelity_asymptotic(p1), np.exp(-np.pi / 2), "<=",
        detail="(exact identity; equality expected)",
    ))
    out.append(_res(
        "analytic.finite_window_point",
        abs(lz_infidelity_finite(-5, 5, p1) - 1.0 / 140608.0), 1e-18, "<=",
    ))
    out.append(_res("analytic.avron_q0", avron_q(0.0), 0.0, "<="))
    out.append(_res(
        "analytic.avron_q1", abs(avron_q(1.0) - 0.6506451422842865), 1e-12, "<=",
    ))
    out.append(_res(
        "analytic.avron_strong", abs(1e3 * avron_q(1e3) / (np.pi / 2) - 1.0), 0.005, "<=",
        detail="x Q(x) -> pi/2",
    ))
    xg = np.linspace(0.0, 12.0, 481)
    qv = np.array([avron_q(x) for x in xg])
    imax = int(np.argmax(qv))
    unimodal = (
        0 < imax < len(xg) - 1
        and np.all(np.diff(qv[: imax + 1]) > 0)
        and np.all(np.diff(qv[imax:]) < 0)
    )
    out.append(_res(
        "analytic.avron_unimodal", unimodal, 1.0, "bool",
        detail=f"max at x={xg[imax]:.3f}",
    ))
    m = MeterParams(omega_c=1.0, kappa=2.0, x0=1.0, n_max=10, nbar=0.0)
    out.append(_res(
        "analytic.spectral_g0", abs(spectral_g0(m) - 1.0), 1e-15, "<=",
        detail="kappa=2 wc, x0=1, n=0 gives 1/wc",
    ))
    m2 = MeterParams(omega_c=1.0, kappa=1.5, x0=0.8, n_max=10, nbar=0.7)
    tau = np.linspace(0.0, 80.0 / m2.kappa, 160001)
    integral = simpson(np.real(analytic_autocorrelation(m2, tau)), x=tau)
    out.append(_res(
        "analytic.autocorr_integral",
        abs(integral / (spectral_g0(m2) / 2) - 1.0), 1e-8, "<=",
        detail="quadrature of Re C equals G(0)/2",
    ))
    nb = 1.0 / np.expm1(10.0)
    out.append(_res(
        "analytic.thermal_occupancy", abs(nb / 4.5401991009687765e-5 - 1.0), 1e-6, "<=",
        detail="beta = 10/wc, in the 4e-5 range",
    ))
    return out


# ------------------------------------------------------------- criterion 1


def check_1_lz_asymptotic(pool: DiagPool) -> list[CheckResult]:
    out = []
    t0 = time.perf_counter()
    for g2e in (0.5, 1.0, 2.0):
        p = LZParams(g=np.sqrt(g2e), eps=1.0)
        traj = coherent_transfer_trajectory(p, window_gu=20.0)
        got = trailing_averaged_p(traj.times, traj.p_values, frac=0.1)
        want = lz_infidelity_asymptotic(p)
        out.append(_res(
            f"1.asymptote[g2/eps={g2e}]", abs(got / want - 1.0), 0.02, "<=",
            detail=f"trailing-averaged P {got:.6f} vs {want:.6f}",
        ))
    out.append(_res("1.runtime_s", time.perf_counter() - t0, 5.0, "<="))
    return out


# ------------------------------------------------------------- criterion 2


def finite_window_residual(p: LZParams, s: float, frac: float = 0.1) -> float:
    """Squared envelope of the trailing oscillations of P about its
    asymptote: mean[(P - T_inf)^2] / (4 T_inf).

    The leading window-edge contribution appears in P(t) through its
    interference with the asymptotic transfer amplitude, as an oscillation
    of amplitude 2 sqrt(T_inf * envelope); this statistic inverts that
    relation.  A direct trailing mean of P - T_inf cannot see the envelope
    at moderate g^2/eps: the partially-cancelled oscillation leaves a
    remnant orders of magnitude above it.
    """
    traj = coherent_transfer_trajectory(p, window_gu=s)
    tinf = lz_infidelity_asymptotic(p)
    t0 = traj.times[-1] - frac * (traj.times[-1] - traj.times[0])
    mask = traj.times >= t0
    return float(np.mean((traj.p_values[mask] - tinf) ** 2) / (4 * tinf))


def check_2_finite_window(pool: DiagPool) -> list[CheckResult]:
    out = []
    p = LZParams(g=1.0, eps=1.0)
    svals = (5.0, 8.0, 10.0)
    res = {}
    for s in svals:
        res[s] = finite_window_residual(p, s)
        env = lz_infidelity_finite(-s, s, p)
        out.append(_res(
            f"2.envelope_ratio[s={s:g}]", res[s] / env, (1.0 / 3.0, 3.0), "range",
            detail=f"residual {res[s]:.3e}, envelope {env:.3e}",
        ))
    out.append(_res(
        "2.residual_monotone",
        res[5.0] > res[8.0] > res[10.0], 1.0, "bool",
        detail="smaller windows leave larger residuals",
    ))
    law = ((1 + 10.0**2) / (1 + 5.0**2)) ** 3
    ratio = res[5.0] / res[10.0]
    out.append(_res(
        "2.scaling_vs_cubic_law", ratio / law, (1.0 / 3.0, 3.0), "range",
        detail=f"r(5)/r(10) = {ratio:.1f} vs (X10/X5)^3 = {law:.1f}",
    ))
    return out


# ------------------------------------------------------------- criterion 3


def check_3_decoupling(pool: DiagPool) -> list[CheckResult]:
    t0 = time.perf_counter()
    p = LZParams(g=1.0, eps=1.0)
    m = MeterParams(omega_c=1.0, kappa=1.0, x0=0.0, n_max=50, nbar=0.5)
    res = run_continuous(p, m, window_gu=5.0, n_store=301)
    pool.add(res.trajectory.diagnostics_summary())
    pc = coherent_p_at_times(res.trajectory.times, p)
    dev = float(np.max(np.abs(pc - res.trajectory.p_values)))
    rt = time.perf_counter() - t0
    return [
        _res("3.decoupling_max_dev", dev, 1e-6, "<=",
             detail="x0=0 joint run vs coherent sweep, n_max=50"),
        _res("3.runtime_s", rt, 30.0, "<="),
    ]


# ------------------------------------------------------------- criterion 4


def check_4_regression(pool: DiagPool) -> list[CheckResult]:
    out = []
    for nbar, kow in ((0.0, 1.0), (0.5, 2.0)):
        m = MeterParams(omega_c=1.0, kappa=kow * 1.0, x0=1.0, n_max=40, nbar=nbar)
        tau = np.linspace(0.0, 10.0 / m.kappa, 201)
        cn = regression_autocorrelation(m, tau)
        ca = analytic_autocorrelation(m, tau)
        out.append(_res(
            f"4.autocorr_max_err[n={nbar:g},k/wc={kow:g}]",
            float(np.max(np.abs(cn - ca))), 1e-6, "<=",
        ))
    m = MeterParams(omega_c=1.0, kappa=2.0, x0=1.0, n_max=40, nbar=0.5)
    tau = np.linspace(0.0, 40.0 / m.kappa, 4001)
    cn = regression_autocorrelation(m, tau)
    integral = float(simpson(np.real(cn), x=tau))
    out.append(_res(
        "4.g0_integral_rel", abs(integral / (spectral_g0(m) / 2) - 1.0), 1e-4, "<=",
        detail="integral of Re C from the regression run vs G(0)/2",
    ))
    return out


# ------------------------------------------------------------- criterion 5


def _unimodal_interior_max(y: np.ndarray) -> bool:
    i = int(np.argmax(y))
    return (
        0 < i < len(y) - 1
        and np.all(np.diff(y[: i + 1]) > 0)
        and np.all(np.diff(y[i:]) < 0)
    )


def check_5_ame_vs_lindblad(pool: DiagPool) -> list[CheckResult]:
    """Overdamped-meter regime: the reduced dephasing equation must track
    the full model across a dephasing-strength scan driven by the bath
    occupancy, and both curves rise to a single interior maximum."""
    t0 = time.perf_counter()
    lz = LZParams(g=1.0, eps=1.0)
    nvals = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0)
    t_full, t_red, g0s = [], [], []
    for nbar in nvals:
        m = MeterParams(omega_c=1.0, kappa=12.0, x0=1.0, n_max=60, nbar=nbar)
        res = run_continuous(lz, m, window_gu=5.0, n_store=201)
        pool.add(res.trajectory.diagnostics_summary())
        t_full.append(res.t_final)
        model = DephasingModel.from_meter(m, lz)
        ares = run_ame(lz, model, window_gu=5.0)
        pool.add(ares.trajectory.diagnostics_summary())
        t_red.append(ares.t_final)
        g0s.append(model.gamma0)
    t_full = np.array(t_full)
    t_red = np.array(t_red)
    rel = float(np.max(np.abs(t_red - t_full) / t_full))
    out = [
        _res("5.shape_full_single_max", _unimodal_interior_max(t_full), 1.0, "bool",
             detail=f"T over gamma0 in [{g0s[0]:.2f}, {g0s[-1]:.2f}]"),
        _res("5.shape_reduced_single_max", _unimodal_interior_max(t_red), 1.0, "bool"),
        _res("5.agreement_max_rel", rel, 0.15, "<=",
             detail=f"T_full={np.array2string(t_full, precision=4)} "
                    f"T_red={np.array2string(t_red, precision=4)}"),
        _res("5.runtime_s", time.perf_counter() - t0, 600.0, "<="),
    ]
    return out


# ------------------------------------------------------------- criterion 6


def check_6_avron(pool: DiagPool) -> list[CheckResult]:
    """Frozen-rate dephasing against its closed-form asymptotics."""
    out = []
    lz = LZParams(g=np.sqrt(20.0), eps=1.0)
    for g0g in (0.5, 1.0, 2.0):
        model = DephasingModel.from_rate(g0g * lz.g, lz, constant_rate=True)
        res = run_ame(lz, model, window_gu=20.0)
        pool.add(res.trajectory.diagnostics_summary())
        want = asymptotic_infidelity(lz, model)
        out.append(_res(
            f"6.avron_rel[gamma0/g={g0g:g}]", abs(res.t_final / want - 1.0), 0.10, "<=",
            detail=f"T={res.t_final:.5e} vs (eps/2g^2)Q = {want:.5e}",
        ))
    model = DephasingModel.from_rate(50.0 * lz.g, lz, constant_rate=True)
    res = run_ame(lz, model, window_gu=20.0)
    pool.add(res.trajectory.diagnostics_summary())
    want = np.pi * lz.eps / (4 * model.gamma0 * lz.g)
    out.append(_res(
        "6.strong_dephasing_rel", abs(res.t_final / want - 1.0), 0.10, "<=",
        detail=f"T={res.t_final:.5e} vs pi eps/(4 gamma0 g) = {want:.5e}",
    ))
    return out


# ------------------------------------------------------------- criterion 7


def check_7_dephasing_helps(pool: DiagPool) -> list[CheckResult]:
    lz = LZParams(g=1.0, eps=1.0)
    grid = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0)
    deltas = []
    for g0g in grid:
        model = DephasingModel.from_rate(g0g * lz.g, lz)
        deltas.append(relative_infidelity(lz, model, window_gu=5.0))
    deltas = np.array(deltas)
    has_pos = bool(np.any(deltas > 0))
    has_neg_after = bool(np.any(deltas < 0) and np.argmax(deltas > 0) < np.argmax(deltas < 0))
    sign_change = has_pos and has_neg_after
    out = [_res(
        "7.delta_t_sign_change", sign_change, 1.0, "bool",
        detail=f"deltaT over gamma0/g {grid}: {np.array2string(deltas, precision=4)}",
    )]
    lz2 = LZParams(g=np.sqrt(0.9), eps=1.0)
    model = DephasingModel.from_rate(15.0 * lz2.g, lz2)
    res = run_ame(lz2, model, window_gu=5.0)
    pool.add(res.trajectory.diagnostics_summary())
    out.append(_res(
        "7.level_anchor_T", res.t_final, 0.05, "<=",
        detail="g^2/eps=0.9, gamma0=15g, window 5 g/eps",
    ))
    return out


# ------------------------------------------------------------- criterion 8


def check_8_continuous_structure(pool: DiagPool) -> list[CheckResult]:
    t0 = time.perf_counter()
    out = []
    lz = LZParams(g=1.0, eps=1.0)
    tlz = lz_infidelity_asymptotic(lz)

    kappas = (0.05, 0.2, 1.0, 5.0, 20.0)
    t_k = []
    for ka in kappas:
        m = MeterParams(omega_c=1.0, kappa=ka, x0=1.0, n_max=50, beta=10.0)
        res = run_continuous(lz, m, window_gu=5.0, n_store=201)
        pool.add(res.trajectory.diagnostics_summary())
        t_k.append(res.t_final)
    t_k = np.array(t_k)
    imin = int(np.argmin(t_k))
    out.append(_res(
        "8a.min_below_lz", float(np.min(t_k)), tlz, "<=",
        detail=f"T(kappa) = {np.array2string(t_k, precision=4)} over {kappas}",
    ))
    out.append(_res(
        "8a.interior_min_then_rise",
        0 < imin < len(t_k) - 1 and t_k[-1] > np.min(t_k), 1.0, "bool",
    ))

    x0s = (0.0, 0.5, 1.0, 1.5, 2.0)
    t_x = []
    for x0 in x0s:
        m = MeterParams(omega_c=1.0, kappa=1.0, x0=x0, n_max=50, beta=10.0)
        res = run_continuous(lz, m, window_gu=5.0, n_store=201)
        pool.add(res.trajectory.diagnostics_summary())
        t_x.append(res.t_final)
    t_x = np.array(t_x)
    out.append(_res(
        "8b.monotone_decreasing_in_x0", bool(np.all(np.diff(t_x) < 0)), 1.0, "bool",
        detail=f"T(x0) = {np.array2string(t_x, precision=4)} over {x0s}",
    ))
    out.append(_res("8b.plateau_nonzero", float(t_x[-1]), 1e-3, ">="))

    # Heat helps at strong damping: the derived dephasing rate grows with
    # the occupancy, so past the small-n heating bump (which tops out near
    # n ~ 1 at every kappa; the cold point is additionally lowered by
    # ground-state cooling) the infidelity falls with n.
    nvals = (1.0, 1.6, 2.2, 2.8, 3.5)
    t_n = []
    for nbar in nvals:
        m = MeterParams(omega_c=1.0, kappa=5.0, x0=1.0, n_max=75, nbar=nbar)
        res = run_continuous(lz, m, window_gu=5.0, n_store=201)
        pool.add(res.trajectory.diagnostics_summary())
        t_n.append(res.t_final)
    t_n = np.array(t_n)
    out.append(_res(
        "8c.monotone_decreasing_in_n_large_kappa",
        bool(np.all(np.diff(t_n) < 0)), 1.0, "bool",
        detail=f"T(n) = {np.array2string(t_n, precision=4)} over {nvals} at kappa=5wc",
    ))
    out.append(_res("8.runtime_s", time.perf_counter() - t0, 1800.0, "<="))
    return out


# ------------------------------------------------------------- criterion 9


def check_9_blp(pool: DiagPool) -> list[CheckResult]:
    out = []
    lz = LZParams(g=1.0, eps=1.0)
    model = DephasingModel.from_rate(0.5, lz, constant_rate=True)
    res = blp_measure_dephasing(lz, model, window_gu=5.0)
    out.append(_res(
        "9.surrogate_nm", res.n_value, 1e-4, "<=",
        detail="constant-rate dephasing is backflow-free",
    ))
    m0 = MeterParams(omega_c=1.0, kappa=1.0, x0=0.0, n_max=30, nbar=0.5)
    res0 = blp_measure(lz, m0, window_gu=5.0)
    out.append(_res(
        "9.decoupled_nm", res0.n_value, 1e-10, "<=",
        detail="x0=0 leaves the reduced dynamics unitary",
    ))
    ma = MeterParams(omega_c=1.0, kappa=0.05, x0=1.0, n_max=50, beta=10.0)
    mb = MeterParams(omega_c=1.0, kappa=1.0, x0=0.2, n_max=50, beta=10.0)
    na = blp_measure(lz, ma, window_gu=5.0)
    nb = blp_measure(lz, mb, window_gu=5.0)
    out.append(_res(
        "9.corner_ordering", na.n_value > nb.n_value, 1.0, "bool",
        detail=f"N(kappa=0.05wc, x0=1)={na.n_value:.4f} vs "
               f"N(kappa=wc, x0=0.2)={nb.n_value:.4f}",
    ))
    # pool the state validity of an actual pair evolution in the backflow
    # corner (the measure itself propagates traceless generators)
    from .linalg import kron
    from .lindblad import evolve

    th = 5.0 * lz.time_unit()
    for rho_q in na.best_pair.states():
        traj = evolve(kron(rho_q, ma.thermal()), -th, th, None, lz, ma, n_store=101)
        pool.add(traj.diagnostics_summary())
    return out


# ------------------------------------------------------------ criterion 10


STROBE_LZ = LZParams(g=1.0, eps=1.0)
STROBE_METER = MeterParams(omega_c=1.0, kappa=2.0, x0=10.0, n_max=75, nbar=0.0)
STROBE_MODE = "x0"   # gated coupling; the delta-spike normalization needs
                     # far more Fock headroom than this truncation allows


def cusp_ratio(traj, centers, t_p) -> float:
    """Kink strength at the pulses: min over the dynamically active pulses
    of (peak slope change near the pulse) / (smooth-gap slope change).

    P(t) is continuous but its derivative jumps when a pulse switches the
    coupling, so the discrete second difference of P spikes at the pulse
    edges while staying at the curvature floor inside the gaps.
    """
    slopes = np.diff(traj.p_values) / np.diff(traj.times)
    d2 = np.abs(np.diff(slopes))
    tk = traj.times[1:-1]  # second-difference nodes
    near_any_pulse = np.zeros(len(tk), dtype=bool)
    for c in centers:
        near_any_pulse |= np.abs(tk - c) <= 1.5 * t_p
    if not np.any(~near_any_pulse):
        return 0.0
    baseline = max(float(np.median(d2[~near_any_pulse])), 1e-30)
    span = traj.times[-1] - traj.times[0]
    ratios = []
    for c in centers:
        if abs(c - 0.5 * (traj.times[0] + traj.times[-1])) > 0.2 * span:
            continue  # quiet outer pulses carry no visible kink
        sel = np.abs(tk - c) <= 1.5 * t_p
        if np.any(sel):
            ratios.append(float(np.max(d2[sel])) / baseline)
    return min(ratios) if ratios else 0.0


def check_10_strobe(pool: DiagPool) -> list[CheckResult]:
    lz, m = STROBE_LZ, STROBE_METER
    th = 5.0 * lz.time_unit()
    window = (-th, th)
    t_p = 1.0 / m.x0
    bare = coherent_transfer_trajectory(lz, window_gu=5.0).final_p
    finals = []
    cusp = None
    for dl in (2.0, 1.0, 0.5):
        sched = build_schedule(window, dl * lz.time_unit(), t_p)
        traj = run_stroboscopic(lz, m, sched, window, amplitude_mode=STROBE_MODE)
        pool.add(traj.diagnostics_summary())
        finals.append(traj.final_p)
        if dl == 1.0:
            cusp = cusp_ratio(traj, sched.centers, t_p)
    out = [
        _res("10.monotone_in_delta_t", bool(np.all(np.diff(finals) < 0)), 1.0, "bool",
             detail=f"T over delta_t (2,1,0.5) g/eps: {np.array2string(np.array(finals), precision=4)}"),
        _res("10.densest_below_bare", finals[-1], bare, "<=",
             detail=f"bare finite-window T = {bare:.4f}"),
        _res("10.cusp_ratio", cusp, 2.0, ">=",
             detail="peak |dP/dt| at pulses vs between-pulse baseline"),
    ]
    return out


# ------------------------------------------------------------ criterion 11


def check_11_noise_mc(pool: DiagPool) -> list[CheckResult]:
    lz, m = STROBE_LZ, STROBE_METER
    th = 5.0 * lz.time_unit()
    window = (-th, th)
    t_p = 1.0 / m.x0
    delta_t = 1.0 * lz.time_unit()
    sched = build_schedule(window, delta_t, t_p)
    perfect = run_stroboscopic(lz, m, sched, window, amplitude_mode=STROBE_MODE)
    pool.add(perfect.diagnostics_summary())

    mc = run_noisy_mc(
        lz, m, delta_t, NoiseSpec(tau=0.1, n_it=50, seed=MC_SEED), window,
        amplitude_mode=STROBE_MODE,
    )
    pool.add(mc.meta["diagnostics"])
    mean_final = float(mc.mean_p[-1])
    out = [
        _res("11.mean_final_rel", abs(mean_final / perfect.final_p - 1.0), 0.25, "<=",
             detail=f"mean T = {mean_final:.4f} +- {mc.stderr[-1]:.4f} vs perfect "
                    f"{perfect.final_p:.4f} (n_it=50, tau=0.1 g/eps)"),
        _res("11.stderr_reported", bool(np.all(np.isfinite(mc.stderr)) and mc.stderr[-1] > 0),
             1.0, "bool"),
    ]
    devs = []
    for tau in (0.2, 0.1, 0.05):
        mc_t = run_noisy_mc(
            lz, m, delta_t, NoiseSpec(tau=tau, n_it=12, seed=MC_SEED), window,
            amplitude_mode=STROBE_MODE,
        )
        pool.add(mc_t.meta["diagnostics"])
        devs.append(float(np.max(np.abs(mc_t.mean_p - np.interp(mc_t.times, perfect.times, perfect.p_values)))))
    out.append(_res(
        "11.tau_convergence", bool(devs[0] > devs[1] > devs[2]), 1.0, "bool",
        detail=f"max |mean P - perfect P| over tau (0.2, 0.1, 0.05): "
               f"{np.array2string(np.array(devs), precision=5)}",
    ))
    return out


# ------------------------------------------------------------ criterion 12


def check_12_validity(pool: DiagPool) -> list[CheckResult]:
    return [
        _res("12.max_trace_dev", pool.max_trace_dev, 1e-8, "<=",
             detail=f"over {pool.n_runs} pooled runs"),
        _res("12.max_herm_dev", pool.max_herm_dev, 1e-10, "<="),
        _res("12.min_eigenvalue", pool.min_eig, -1e-7, ">="),
        _res("12.max_meter_tail", pool.max_tail, 1e-6, "<="),
    ]


REGISTRY = [
    ("analytic", check_analytic),
    ("1", check_1_lz_asymptotic),
    ("2", check_2_finite_window),
    ("3", check_3_decoupling),
    ("4", check_4_regression),
    ("5", check_5_ame_vs_lindblad),
    ("6", check_6_avron),
    ("7", check_7_dephasing_helps),
    ("8", check_8_continuous_structure),
    ("9", check_9_blp),
    ("10", check_10_strobe),
    ("11", check_11_noise_mc),
    ("12", check_12_validity),
]


def run_checks(only: str | None = None, echo=None) -> tuple[list[CheckResult], bool]:
    """Run the (filtered) suite; returns all rows and the overall verdict.

    ``only`` is a comma-separated list of group names (e.g. "analytic" or
    "1,2,6").  Group 12 aggregates state diagnostics of whatever ran
    before it, so a filtered run gates only the runs it actually executed.
    """
    wanted = None if only is None else {tok.strip() for tok in only.split(",")}
    selected = [(n, f) for n, f in REGISTRY if wanted is None or n in wanted]
    if any(name != "analytic" for name, _ in selected):
        kernels.warmup()  # the formula-only group needs no compiled kernels
    pool = DiagPool()
    results: list[CheckResult] = []
    for name, fn in selected:
        t0 = time.perf_counter()
        rows = fn(pool)
        elapsed = time.perf_counter() - t0
        for r in rows:
            if r.runtime_s == 0.0:
                r.runtime_s = elapsed / max(1, len(rows))
            if echo is not None:
                echo(r.line())
            results.append(r)
    return results, all(r.passed for r in results)
