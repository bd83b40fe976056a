"""Reduced qubit dynamics in the overdamped-meter regime.

When the meter relaxes much faster than the sweep, tracing it out leaves a
dephasing generator in the instantaneous basis,

    drho/dt = -i[H_S(t), rho] - gamma(t) (P- rho P+ + P+ rho P-),

with gamma(t) = G0 * (E+ - E-)^2 / 2 set by the zero-frequency spectral
weight G0 of the meter autocorrelation.  The module also carries the
closed-form autocorrelation of the damped oscillator, the asymptotic
infidelity of the frozen-rate model (Q function), and the relative
infidelity against the coherent sweep.

The imaginary part of the half-range spectral integral (a Lamb-type
energy shift) is deliberately not part of the generator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .linalg import InvariantViolation
from .lz import LZParams, adiabatic_frame, hamiltonian, transfer_probability
from .lindblad import MeterParams
from .trajectory import RunResult, Trajectory


def spectral_g0(m: MeterParams) -> float:
    """Zero-frequency spectral weight of the meter quadrature noise:
    x0^2 (2n+1) kappa / ((kappa/2)^2 + omega_c^2)."""
    return float(
        m.x0**2 * (2 * m.nbar + 1) * m.kappa / ((m.kappa / 2) ** 2 + m.omega_c**2)
    )


def analytic_autocorrelation(m: MeterParams, tau) -> np.ndarray | complex:
    """Closed-form quadrature autocorrelation of the damped thermal
    oscillator, x0^2 e^{-kappa tau/2} [(n+1) e^{-i wc tau} + n e^{i wc tau}]."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    c = m.x0**2 * np.exp(-m.kappa * tau / 2) * (
        (m.nbar + 1) * np.exp(-1j * m.omega_c * tau)
        + m.nbar * np.exp(1j * m.omega_c * tau)
    )
    return complex(c) if c.ndim == 0 else c


@dataclass(frozen=True)
class DephasingModel:
    """Dephasing strength, either given directly or derived from a meter.

    ``gamma0`` is the rate at the anticrossing; ``g0_spectral`` the
    spectral weight it derives from (gamma0 = g0_spectral * g^2 / 2).
    ``constant_rate`` freezes gamma(t) at gamma0 for the whole sweep (the
    variant whose asymptotic infidelity the Q function describes).
    """

    gamma0: float
    g0_spectral: float
    source: str = "explicit"
    constant_rate: bool = False

    def __post_init__(self):
        if self.g0_spectral < 0 or self.gamma0 < 0:
            raise ValueError("dephasing strength must be >= 0")

    @classmethod
    def from_rate(cls, gamma0: float, lz: LZParams, constant_rate: bool = False):
        if lz.g <= 0:
            raise ValueError("a finite gap is needed to anchor gamma0")
        return cls(
            gamma0=gamma0,
            g0_spectral=2 * gamma0 / lz.g**2,
            source="explicit",
            constant_rate=constant_rate,
        )

    @classmethod
    def from_meter(cls, m: MeterParams, lz: LZParams, constant_rate: bool = False):
        g0 = spectral_g0(m)
        return cls(
            gamma0=g0 * lz.g**2 / 2,
            g0_spectral=g0,
            source="meter",
            constant_rate=constant_rate,
        )


def dephasing_rate(t: float, lz: LZParams, model: DephasingModel) -> float:
    """gamma(t) = G0 (g^2 + eps^2 t^2)/2, minimal at the crossing."""
    if model.constant_rate:
        return model.gamma0
    return 0.5 * model.g0_spectral * (lz.g**2 + (lz.eps * t) ** 2)


def ame_rhs(rho: np.ndarray, t: float, lz: LZParams, model: DephasingModel) -> np.ndarray:
    """Dense reference for the dephasing generator (kernels do the real work)."""
    frame = adiabatic_frame(t, lz)
    pp = frame.projector("+")
    pm = frame.projector("-")
    h = hamiltonian(t, lz)
    gam = dephasing_rate(t, lz, model)
    return -1j * (h @ rho - rho @ h) - gam * (pm @ rho @ pp + pp @ rho @ pm)


def ame_dt_bound(lz: LZParams, model: DephasingModel, t_max: float) -> float:
    """Step bound: resolve the gap everywhere and keep the stiff dephasing
    contraction inside the RK4 stability region."""
    e_max = np.sqrt(lz.g**2 + (lz.eps * t_max) ** 2)
    gam_max = max(
        dephasing_rate(0.0, lz, model), dephasing_rate(t_max, lz, model)
    )
    dt = 0.02 / e_max
    if gam_max > 0:
        dt = min(dt, 0.5 / gam_max)
    return dt


def evolve_ame(
    rho0: np.ndarray,
    window_gu: float,
    dt: float | None,
    lz: LZParams,
    model: DephasingModel,
    n_store: int = 1201,
    check: bool = True,
) -> RunResult:
    """Integrate the dephasing master equation over [-w, w], w = window_gu*g/eps.

    Checks trace (1e-10), Hermiticity and positivity (1e-8) at every stored
    sample.  With gamma0 = 0 this reduces exactly to coherent propagation
    by the same integrator, which makes it the natural baseline for the
    relative infidelity.
    """
    th = window_gu * lz.time_unit()
    t1, t2 = -th, th
    bound = ame_dt_bound(lz, model, th)
    if dt is None:
        dt = bound
    elif dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt:.3e} exceeds the step bound {bound:.3e}")
    n_steps = max(2, 2 * int(np.ceil((t2 - t1) / (2 * dt))))
    dt_act = (t2 - t1) / n_steps
    stride = max(1, int(np.ceil(n_steps / max(1, n_store - 1))))

    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ValueError(f"expected 2x2 qubit state, got {rho0.shape}")
    r = rho0.copy()
    rows = [_ame_sample(r, t1, lz, check)]
    done = 0
    while done < n_steps:
        chunk = min(stride, n_steps - done)
        kernels.ame_advance(
            r, t1 + done * dt_act, dt_act, chunk,
            lz.g, lz.eps, model.g0_spectral, model.constant_rate, model.gamma0,
        )
        done += chunk
        rows.append(_ame_sample(r, t1 + done * dt_act, lz, check))
    traj = Trajectory(
        times=np.array([x["t"] for x in rows]),
        p_values=np.array([x["p"] for x in rows]),
        trace_dev=np.array([x["trace_dev"] for x in rows]),
        herm_dev=np.array([x["herm_dev"] for x in rows]),
        min_eig=np.array([x["min_eig"] for x in rows]),
        quad=np.zeros(len(rows)),
        tail=np.zeros(len(rows)),
        meta={
            "window_gu": window_gu, "dt": dt_act, "n_steps": n_steps,
            "g": lz.g, "eps": lz.eps, "gamma0": model.gamma0,
            "g0_spectral": model.g0_spectral, "gamma0_source": model.source,
            "constant_rate": model.constant_rate,
        },
    )
    return RunResult(trajectory=traj, t_final=traj.final_p)


def _ame_sample(r: np.ndarray, t: float, lz: LZParams, check: bool) -> dict:
    trace_dev = abs(np.trace(r) - 1.0)
    herm_dev = float(np.max(np.abs(r - r.conj().T)))
    ev_min = float(np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0])
    if check:
        if trace_dev > 1e-10:
            raise InvariantViolation(f"trace deviation {trace_dev:.3e} at t={t:.4g}")
        if herm_dev > 1e-10 or ev_min < -1e-8:
            raise InvariantViolation(
                f"state invariants broken at t={t:.4g}: herm {herm_dev:.2e}, "
                f"min eig {ev_min:.2e}; reduce dt"
            )
    return {
        "t": t,
        "p": transfer_probability(r, t, lz),
        "trace_dev": float(trace_dev),
        "herm_dev": herm_dev,
        "min_eig": ev_min,
    }


def lower_branch_state(lz: LZParams, t: float) -> np.ndarray:
    v = adiabatic_frame(t, lz).minus_state.astype(complex)
    return np.outer(v, v.conj())


def run_ame(
    lz: LZParams,
    model: DephasingModel,
    window_gu: float = 5.0,
    dt: float | None = None,
    n_store: int = 1201,
) -> RunResult:
    """Dephasing run from the lower branch over the symmetric window."""
    th = window_gu * lz.time_unit()
    return evolve_ame(lower_branch_state(lz, -th), window_gu, dt, lz, model, n_store=n_store)


def avron_q(x: float) -> float:
    """Closed-form shape function of the frozen-rate asymptotic infidelity:
    Q(x) = (pi/2) x (2 + sqrt(1+x^2)) / (sqrt(1+x^2) (sqrt(1+x^2)+1)^2)."""
    if x < 0:
        raise ValueError("x must be >= 0")
    s = np.sqrt(1.0 + x * x)
    return float((np.pi / 2) * x * (2.0 + s) / (s * (s + 1.0) ** 2))


def asymptotic_infidelity(lz: LZParams, model: DephasingModel) -> float:
    """Leading-order infinite-window infidelity (eps/2g^2) Q(gamma0/g).

    Derived in the slow-sweep, frozen-rate regime sqrt(eps) << g, gamma0;
    calls outside that regime get an advisory warning, not an error.
    """
    if lz.g <= 0:
        raise ValueError("needs a finite gap")
    se = np.sqrt(lz.eps)
    if se > 0.5 * lz.g or se > 0.5 * model.gamma0:
        warnings.warn(
            "outside the validity regime sqrt(eps) << g, gamma0; treat the "
            "asymptotic value as an estimate",
            stacklevel=2,
        )
    return float(lz.eps / (2 * lz.g**2) * avron_q(model.gamma0 / lz.g))


def relative_infidelity(
    lz: LZParams,
    model: DephasingModel,
    window_gu: float = 5.0,
    dt: float | None = None,
) -> float:
    """delta T = T(dephasing) - T(coherent) on identical windows and steps.

    Negative values flag parameter regions where dephasing assists the
    transfer relative to the bare sweep.
    """
    if dt is None:
        # shared step: the coherent baseline must use the same grid
        dt = ame_dt_bound(lz, model, window_gu * lz.time_unit())
    t_deph = run_ame(lz, model, window_gu, dt).t_final
    zero = DephasingModel(gamma0=0.0, g0_spectral=0.0, source="explicit")
    t_coh = run_ame(lz, zero, window_gu, dt).t_final
    return t_deph - t_coh
