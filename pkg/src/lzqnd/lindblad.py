"""Joint qubit-meter dynamics.

The meter is a damped oscillator (frequency omega_c, damping kappa, bath
occupancy n) coupled to the qubit through the energy-diagonal interaction
x0 * H_S(t) (x) (a + a^dag).  The joint state evolves under

    drho/dt = -i[H(t), rho] + kappa(n+1) D[a] rho + kappa n D[a^dag] rho

integrated with fixed-step RK4 on the dense density matrix (no
superoperator matrices are ever built).  ``lindblad_rhs`` is a dense
reference evaluation; the propagators run the banded kernels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .linalg import (
    ID2,
    HilbertLayout,
    annihilation,
    kron,
    meter_tail_population,
    number_op,
    partial_trace_meter,
    position_quadrature,
    thermal_occupancy,
    thermal_state,
    validate_density_matrix,
)
from .lz import LZParams, adiabatic_frame, hamiltonian, transfer_probability
from .trajectory import RunResult, Trajectory

TAIL_WARN = 1e-6


@dataclass(frozen=True)
class MeterParams:
    """Damped-oscillator meter: frequency, damping, occupancy, coupling,
    Fock truncation.  Give exactly one of ``nbar`` or ``beta``; ``beta``
    is converted to the mean bath occupancy and kept for metadata."""

    omega_c: float
    kappa: float
    x0: float
    n_max: int
    nbar: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if (self.nbar is None) == (self.beta is None):
            raise ValueError("provide exactly one of nbar or beta")
        if self.nbar is None:
            object.__setattr__(self, "nbar", thermal_occupancy(self.beta, self.omega_c))
        if self.nbar < 0:
            raise ValueError(f"occupancy must be >= 0, got {self.nbar}")

    @property
    def layout(self) -> HilbertLayout:
        return HilbertLayout.for_n_max(self.n_max)

    def thermal(self) -> np.ndarray:
        return thermal_state(self.n_max, nbar=self.nbar)


def joint_hamiltonian(
    t: float,
    lz: LZParams,
    m: MeterParams,
    layout: HilbertLayout | None = None,
    x_eff: float | None = None,
    tshift: float = 0.0,
) -> np.ndarray:
    """Dense joint Hamiltonian H_S(t) (x) (1 + x (a+a^dag)) + wc 1 (x) n.

    ``x_eff`` overrides the coupling amplitude (used by pulsed protocols,
    where the qubit part of the coupling may also be evaluated at a
    shifted time t + tshift)."""
    layout = layout or m.layout
    if layout.meter_dim != m.n_max + 1:
        raise ValueError("layout inconsistent with n_max")
    x = m.x0 if x_eff is None else x_eff
    im = np.eye(layout.meter_dim, dtype=complex)
    h = kron(hamiltonian(t, lz), im)
    h += m.omega_c * kron(ID2, number_op(m.n_max))
    if x != 0.0:
        h += x * kron(hamiltonian(t + tshift, lz), position_quadrature(m.n_max))
    return h


def lindblad_rhs(rho: np.ndarray, t: float, lz: LZParams, m: MeterParams) -> np.ndarray:
    """Dense reference evaluation of the joint Lindblad right-hand side."""
    layout = m.layout
    d = layout.joint_dim
    if rho.shape != (d, d):
        raise ValueError(f"expected state of shape ({d}, {d}), got {rho.shape}")
    h = joint_hamiltonian(t, lz, m)
    a = kron(ID2, annihilation(m.n_max))
    ad = a.conj().T
    out = -1j * (h @ rho - rho @ h)
    n_op = ad @ a
    out += m.kappa * (m.nbar + 1) * (a @ rho @ ad - 0.5 * (n_op @ rho + rho @ n_op))
    if m.nbar > 0:
        aad = a @ ad
        out += m.kappa * m.nbar * (ad @ rho @ a - 0.5 * (aad @ rho + rho @ aad))
    return out


def dt_bound(lz: LZParams, m: MeterParams, t_max: float, x_eff: float | None = None) -> float:
    """Coarsest RK4 step resolving every coherent and dissipative scale,
    including the sqrt(n_max) growth of the coupling ladder.

    Besides the accuracy scales (resolved with a 0.02 prefactor), the top
    of the truncated Fock ladder damps at up to kappa(2n+1)n_max; those
    levels carry no population but an explicit RK4 must stay inside its
    stability region for them, which caps the step at 1/rate.
    """
    x = m.x0 if x_eff is None else x_eff
    scales = [1.0 / m.omega_c, 1.0 / np.sqrt(lz.g**2 + (lz.eps * t_max) ** 2)]
    if m.kappa > 0:
        scales.append(1.0 / (m.kappa * (m.nbar + 1)))
    if x > 0 and lz.g > 0:
        scales.append(1.0 / (x * lz.g * np.sqrt(m.n_max)))
    dt = 0.02 * min(scales)
    if m.kappa > 0:
        dt = min(dt, 1.0 / (m.kappa * (2 * m.nbar + 1) * (m.n_max + 1)))
    return dt


class JointPropagator:
    """Owns one evolving joint state; used by the continuous and pulsed
    front ends.  Not thread-shared: every run builds its own instance."""

    def __init__(self, rho0: np.ndarray, lz: LZParams, m: MeterParams, check: bool = True):
        layout = m.layout
        d = layout.joint_dim
        rho0 = np.asarray(rho0, dtype=complex)
        if rho0.shape != (d, d):
            raise ValueError(f"expected initial state of shape ({d}, {d}), got {rho0.shape}")
        self.lz = lz
        self.m = m
        self.layout = layout
        self.check = check
        self.R = rho0.reshape(2, layout.meter_dim, 2, layout.meter_dim).copy()
        self.sq = kernels.sqrt_table(layout.meter_dim)
        self._tail_warned = False

    def advance(self, t0: float, t1: float, dt: float, x_eff: float, tshift: float = 0.0) -> float:
        """Advance from t0 to t1 with steps of at most dt; returns t1."""
        if t1 <= t0:
            return t0
        n = max(1, int(np.ceil((t1 - t0) / dt)))
        kernels.joint_advance(
            self.R, t0, (t1 - t0) / n, n,
            self.lz.g, self.lz.eps, x_eff, tshift,
            self.m.omega_c, self.m.kappa, self.m.nbar, self.sq,
        )
        return t1

    def sample(self, t: float) -> dict:
        """Diagnostics of the current state; raises on invariant violation
        when checking is enabled."""
        md = self.layout.meter_dim
        rho = self.R.reshape(2 * md, 2 * md)
        red = np.einsum("qkpk->qp", self.R)
        if self.check:
            trace_dev, herm_dev, min_eig = validate_density_matrix(
                rho, where=f"t={t:.6g}"
            )
        else:
            trace_dev = abs(np.trace(rho) - 1.0)
            herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
            min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        rho_m = np.einsum("qkql->kl", self.R)
        quad = 2.0 * float(np.real(np.sum(self.sq[1 : md] * np.diag(rho_m, 1))))
        tail = meter_tail_population(rho, self.layout)
        if self.check and tail > TAIL_WARN and not self._tail_warned:
            warnings.warn(
                f"meter tail population {tail:.2e} > {TAIL_WARN:.0e} at t={t:.4g}; "
                "increase n_max",
                stacklevel=3,
            )
            self._tail_warned = True
        p = transfer_probability(red, t, self.lz)
        return {
            "t": t,
            "p": p,
            "trace_dev": float(trace_dev),
            "herm_dev": herm_dev,
            "min_eig": min_eig,
            "quad": quad,
            "tail": tail,
            "reduced": red,
        }


def _rows_to_trajectory(rows: list[dict], meta: dict, record_reduced: bool) -> Trajectory:
    return Trajectory(
        times=np.array([r["t"] for r in rows]),
        p_values=np.array([r["p"] for r in rows]),
        trace_dev=np.array([r["trace_dev"] for r in rows]),
        herm_dev=np.array([r["herm_dev"] for r in rows]),
        min_eig=np.array([r["min_eig"] for r in rows]),
        quad=np.array([r["quad"] for r in rows]),
        tail=np.array([r["tail"] for r in rows]),
        reduced=np.array([r["reduced"] for r in rows]) if record_reduced else None,
        meta=meta,
    )


def evolve(
    rho0: np.ndarray,
    t1: float,
    t2: float,
    dt: float | None,
    lz: LZParams,
    m: MeterParams,
    n_store: int = 401,
    check: bool = True,
    x_eff: float | None = None,
    tshift: float = 0.0,
    record_reduced: bool = False,
) -> Trajectory:
    """Propagate a joint state from t1 to t2, sampling diagnostics.

    ``dt`` must satisfy the step bound for the active coupling (pass None
    to use it); the step count is rounded up to an even number so that
    symmetric windows sample t = 0 exactly.
    """
    if t2 <= t1:
        raise ValueError("need t1 < t2")
    x = m.x0 if x_eff is None else x_eff
    bound = dt_bound(lz, m, max(abs(t1), abs(t2)), x_eff=x)
    if dt is None:
        dt = bound
    elif dt > bound * (1 + 1e-12):
        raise ValueError(
            f"dt={dt:.3e} exceeds the step bound {bound:.3e} for these parameters"
        )
    n_steps = max(2, 2 * int(np.ceil((t2 - t1) / (2 * dt))))
    dt_act = (t2 - t1) / n_steps
    stride = max(1, int(np.ceil(n_steps / max(1, n_store - 1))))

    prop = JointPropagator(rho0, lz, m, check=check)
    rows = [prop.sample(t1)]
    done = 0
    while done < n_steps:
        chunk = min(stride, n_steps - done)
        kernels.joint_advance(
            prop.R, t1 + done * dt_act, dt_act, chunk,
            lz.g, lz.eps, x, tshift, m.omega_c, m.kappa, m.nbar, prop.sq,
        )
        done += chunk
        rows.append(prop.sample(t1 + done * dt_act))
    meta = {
        "t1": t1, "t2": t2, "dt": dt_act, "n_steps": n_steps,
        "g": lz.g, "eps": lz.eps, "omega_c": m.omega_c, "kappa": m.kappa,
        "nbar": m.nbar, "x0": m.x0, "x_eff": x, "n_max": m.n_max,
    }
    return _rows_to_trajectory(rows, meta, record_reduced)


def initial_joint_state(lz: LZParams, m: MeterParams, t1: float) -> np.ndarray:
    """Factorized start: lower instantaneous branch (x) thermal meter."""
    v = adiabatic_frame(t1, lz).minus_state.astype(complex)
    return kron(np.outer(v, v.conj()), m.thermal())


def run_continuous(
    lz: LZParams,
    m: MeterParams,
    window_gu: float = 5.0,
    dt: float | None = None,
    n_store: int = 401,
    check: bool = True,
) -> RunResult:
    """Full continuous-coupling run over [-w, w], w = window_gu * g/eps."""
    th = window_gu * lz.time_unit()
    traj = evolve(
        initial_joint_state(lz, m, -th), -th, th, dt, lz, m,
        n_store=n_store, check=check,
    )
    traj.meta["window_gu"] = window_gu
    traj.meta["initial_state"] = "minus(t1) x thermal(nbar)"
    return RunResult(trajectory=traj, t_final=traj.final_p)


def effective_gap(
    lz: LZParams, m: MeterParams, window_gu: float = 5.0, dt: float | None = None
) -> float:
    """Meter-dressed gap at the crossing, g * (1 + 2 x0 <a + a^dag>)
    with the quadrature read off the joint state exactly at t = 0."""
    if window_gu <= 0:
        raise ValueError("window must straddle t = 0")
    th = window_gu * lz.time_unit()
    traj = evolve(initial_joint_state(lz, m, -th), -th, 0.0, dt, lz, m, n_store=9)
    quad = float(traj.quad[-1])
    return lz.g * (1.0 + 2.0 * m.x0 * quad)


def regression_autocorrelation(m: MeterParams, tau_grid: np.ndarray) -> np.ndarray:
    """Meter-quadrature autocorrelation from the bare-oscillator Liouvillian.

    Propagates the operator initial conditions a R0 and a^dag R0 (R0 the
    thermal state) under the damped-oscillator generator and assembles

        C(tau) = x0^2 * ( Tr[a^dag M1(tau)] + Tr[a M2(tau)] ).

    This is the quantum-regression evaluation the analytic expression in
    ``dephasing.analytic_autocorrelation`` is checked against.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.ndim != 1 or len(tau_grid) == 0:
        raise ValueError("tau_grid must be a non-empty 1-d array")
    if tau_grid[0] < 0 or np.any(np.diff(tau_grid) <= 0):
        raise ValueError("tau_grid must be increasing and nonnegative")
    md = m.n_max + 1
    if m.nbar > 0:
        q = m.nbar / (m.nbar + 1.0)
        tail = q**md
        if tail > TAIL_WARN:
            warnings.warn(
                f"thermal truncation tail {tail:.2e} > {TAIL_WARN:.0e}; increase n_max",
                stacklevel=2,
            )
    a = annihilation(m.n_max)
    ad = a.conj().T
    r0 = m.thermal()
    m1 = a @ r0         # carries Tr[a^dag e^{L tau} (a R0)]
    m2 = ad @ r0        # carries Tr[a e^{L tau} (a^dag R0)]
    sq = kernels.sqrt_table(md)
    accuracy = [1.0 / m.omega_c]
    if m.kappa > 0:
        accuracy.append(1.0 / (m.kappa * (m.nbar + 1)))
    # the top Fock sectors rotate/damp ~ n_max times faster; keep RK4 stable
    stability = 1.0 / (m.n_max * (m.omega_c + m.kappa * (2 * m.nbar + 1)))
    dt = min(0.02 * min(accuracy), stability)
    out = np.empty(len(tau_grid), dtype=complex)
    t = 0.0
    propagate_m1 = m.nbar > 0  # a R0 vanishes identically on the vacuum
    for i, tau in enumerate(tau_grid):
        if tau > t:
            n = max(1, int(np.ceil((tau - t) / dt)))
            h = (tau - t) / n
            if propagate_m1:
                kernels.meter_advance(m1, h, n, m.omega_c, m.kappa, m.nbar, sq)
            kernels.meter_advance(m2, h, n, m.omega_c, m.kappa, m.nbar, sq)
            t = tau
        c1 = np.trace(ad @ m1) if propagate_m1 else 0.0
        c2 = np.trace(a @ m2)
        out[i] = m.x0**2 * (c1 + c2)
    return out
