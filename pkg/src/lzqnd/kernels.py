"""Compiled fixed-step RK4 propagation kernels.

All hot loops live here as numba kernels.  The joint-space kernel applies
the Hamiltonian and the dissipators through their band structure (the
coupling quadrature is tridiagonal, the number operator diagonal), so one
right-hand-side evaluation costs O(d^2) instead of the O(d^3) of dense
matrix products.  Dense reference implementations used by the tests live
in the module that owns each equation, not here.

Conventions baked into the kernels:
  qubit Hamiltonian     H_S(t) = (eps*t/2) sz + (g/2) sx
  joint Hamiltonian     H_S(t) (x) 1 + x_eff * H_S(t + tshift) (x) (a + a^dag)
                        + wc 1 (x) a^dag a
  damping               kappa(n+1) D[a] + kappa n D[a^dag], with the
                        truncated a a^dag = diag(1..m-1, 0) so the generator
                        is exactly trace-preserving on the truncated space
  dephasing generator   -i[H_S, rho] - gamma(t) (P- rho P+ + P+ rho P-)
                        with gamma(t) = g0_spectral*(g^2+eps^2 t^2)/2, or a
                        constant rate in the frozen-rate variant
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def schrodinger_advance(psi, t0, dt, nsteps, g, eps):
    """Advance a 2-component state under i dpsi/dt = H_S(t) psi, in place."""
    c0 = psi[0]
    c1 = psi[1]
    t = t0
    for _ in range(nsteps):
        a0, a1 = c0, c1
        acc0 = 0.0 + 0.0j
        acc1 = 0.0 + 0.0j
        for stage in range(4):
            if stage == 0:
                ts = t
                w = dt / 6.0
            elif stage == 3:
                ts = t + dt
                w = dt / 6.0
            else:
                ts = t + 0.5 * dt
                w = dt / 3.0
            hz = 0.5 * eps * ts
            hx = 0.5 * g
            k0 = -1j * (hz * a0 + hx * a1)
            k1 = -1j * (hx * a0 - hz * a1)
            acc0 += w * k0
            acc1 += w * k1
            if stage == 0 or stage == 1:
                a0 = c0 + 0.5 * dt * k0
                a1 = c1 + 0.5 * dt * k1
            elif stage == 2:
                a0 = c0 + dt * k0
                a1 = c1 + dt * k1
        c0 = c0 + acc0
        c1 = c1 + acc1
        t = t + dt
    psi[0] = c0
    psi[1] = c1


@njit(cache=True)
def ame_advance(r, t0, dt, nsteps, g, eps, g0_spectral, const_rate, gamma_const):
    """Advance a 2x2 matrix under the instantaneous-basis dephasing generator.

    ``r`` is mutated in place.  With ``const_rate`` the rate is frozen at
    ``gamma_const``; otherwise gamma(t) = g0_spectral*(g^2 + eps^2 t^2)/2.
    """
    r00, r01, r10, r11 = r[0, 0], r[0, 1], r[1, 0], r[1, 1]
    t = t0
    for _ in range(nsteps):
        a00, a01, a10, a11 = r00, r01, r10, r11
        acc00 = 0.0 + 0.0j
        acc01 = 0.0 + 0.0j
        acc10 = 0.0 + 0.0j
        acc11 = 0.0 + 0.0j
        for stage in range(4):
            if stage == 0:
                ts = t
                w = dt / 6.0
            elif stage == 3:
                ts = t + dt
                w = dt / 6.0
            else:
                ts = t + 0.5 * dt
                w = dt / 3.0
            hz = 0.5 * eps * ts
            hx = 0.5 * g
            # -i [H, rho]
            k00 = -1j * (hx * (a10 - a01))
            k01 = -1j * (2.0 * hz * a01 + hx * (a11 - a00))
            k10 = -1j * (hx * (a00 - a11) - 2.0 * hz * a10)
            k11 = -1j * (hx * (a01 - a10))
            # dephasing in the instantaneous basis
            if const_rate:
                gam = gamma_const
            else:
                gam = 0.5 * g0_spectral * (g * g + eps * eps * ts * ts)
            if gam != 0.0:
                th = np.arctan2(g, eps * ts)
                cu = np.cos(0.5 * th)
                su = np.sin(0.5 * th)
                # plus = (cu, su), minus = (-su, cu)
                p = cu * (-su * a00 + cu * a01) + su * (-su * a10 + cu * a11)
                q = -su * (cu * a00 + su * a01) + cu * (cu * a10 + su * a11)
                k00 += -gam * (-cu * su * p - su * cu * q)
                k01 += -gam * (cu * cu * p - su * su * q)
                k10 += -gam * (-su * su * p + cu * cu * q)
                k11 += -gam * (su * cu * p + cu * su * q)
            acc00 += w * k00
            acc01 += w * k01
            acc10 += w * k10
            acc11 += w * k11
            if stage == 0 or stage == 1:
                a00 = r00 + 0.5 * dt * k00
                a01 = r01 + 0.5 * dt * k01
                a10 = r10 + 0.5 * dt * k10
                a11 = r11 + 0.5 * dt * k11
            elif stage == 2:
                a00 = r00 + dt * k00
                a01 = r01 + dt * k01
                a10 = r10 + dt * k10
                a11 = r11 + dt * k11
        r00 = r00 + acc00
        r01 = r01 + acc01
        r10 = r10 + acc10
        r11 = r11 + acc11
        t = t + dt
    r[0, 0] = r00
    r[0, 1] = r01
    r[1, 0] = r10
    r[1, 1] = r11


@njit(cache=True)
def joint_rhs(R, out, hz, hx, cz, cx, wc, ka_down, ka_up, sq):
    """Lindblad right-hand side on the joint space, banded application.

    R and out have shape (2, m, 2, m).  The Hamiltonian coefficients are
    H = sz (x) (hz 1 + cz X) + sx (x) (hx 1 + cx X) + wc 1 (x) n with
    X = a + a^dag; ka_down = kappa(n+1), ka_up = kappa n; sq[k] = sqrt(k).
    """
    m = R.shape[1]
    for q in range(2):
        zq = 1.0 if q == 0 else -1.0
        for k in range(m):
            for q2 in range(2):
                zq2 = 1.0 if q2 == 0 else -1.0
                for k2 in range(m):
                    # H rho
                    acc = (zq * hz + wc * k) * R[q, k, q2, k2] + hx * R[1 - q, k, q2, k2]
                    if k + 1 < m:
                        acc += sq[k + 1] * (
                            zq * cz * R[q, k + 1, q2, k2] + cx * R[1 - q, k + 1, q2, k2]
                        )
                    if k > 0:
                        acc += sq[k] * (
                            zq * cz * R[q, k - 1, q2, k2] + cx * R[1 - q, k - 1, q2, k2]
                        )
                    # rho H
                    acc2 = (zq2 * hz + wc * k2) * R[q, k, q2, k2] + hx * R[q, k, 1 - q2, k2]
                    if k2 + 1 < m:
                        acc2 += sq[k2 + 1] * (
                            zq2 * cz * R[q, k, q2, k2 + 1] + cx * R[q, k, 1 - q2, k2 + 1]
                        )
                    if k2 > 0:
                        acc2 += sq[k2] * (
                            zq2 * cz * R[q, k, q2, k2 - 1] + cx * R[q, k, 1 - q2, k2 - 1]
                        )
                    val = -1j * (acc - acc2)
                    if ka_down != 0.0:
                        # a rho a^dag - {a^dag a, rho}/2
                        if k + 1 < m and k2 + 1 < m:
                            val += ka_down * sq[k + 1] * sq[k2 + 1] * R[q, k + 1, q2, k2 + 1]
                        val -= 0.5 * ka_down * (k + k2) * R[q, k, q2, k2]
                    if ka_up != 0.0:
                        # a^dag rho a - {a a^dag, rho}/2 with the truncated
                        # a a^dag = diag(1..m-1, 0)
                        if k > 0 and k2 > 0:
                            val += ka_up * sq[k] * sq[k2] * R[q, k - 1, q2, k2 - 1]
                        fk = k + 1.0 if k < m - 1 else 0.0
                        fk2 = k2 + 1.0 if k2 < m - 1 else 0.0
                        val -= 0.5 * ka_up * (fk + fk2) * R[q, k, q2, k2]
                    out[q, k, q2, k2] = val


@njit(cache=True)
def joint_advance(R, t0, dt, nsteps, g, eps, x_eff, tshift, wc, kappa, nbar, sq):
    """RK4-advance a joint-space matrix in place by nsteps steps of dt."""
    m = R.shape[1]
    kbuf = np.empty((2, m, 2, m), dtype=np.complex128)
    acc = np.empty((2, m, 2, m), dtype=np.complex128)
    Rt = np.empty((2, m, 2, m), dtype=np.complex128)
    ka_down = kappa * (nbar + 1.0)
    ka_up = kappa * nbar
    t = t0
    for _ in range(nsteps):
        for stage in range(4):
            if stage == 0:
                ts = t
            elif stage == 3:
                ts = t + dt
            else:
                ts = t + 0.5 * dt
            hz = 0.5 * eps * ts
            hx = 0.5 * g
            cz = x_eff * 0.5 * eps * (ts + tshift)
            cx = x_eff * 0.5 * g
            src = R if stage == 0 else Rt
            joint_rhs(src, kbuf, hz, hx, cz, cx, wc, ka_down, ka_up, sq)
            if stage == 0:
                for i in range(2):
                    for j in range(m):
                        for i2 in range(2):
                            for j2 in range(m):
                                acc[i, j, i2, j2] = R[i, j, i2, j2] + (dt / 6.0) * kbuf[i, j, i2, j2]
                                Rt[i, j, i2, j2] = R[i, j, i2, j2] + 0.5 * dt * kbuf[i, j, i2, j2]
            elif stage == 1:
                for i in range(2):
                    for j in range(m):
                        for i2 in range(2):
                            for j2 in range(m):
                                acc[i, j, i2, j2] += (dt / 3.0) * kbuf[i, j, i2, j2]
                                Rt[i, j, i2, j2] = R[i, j, i2, j2] + 0.5 * dt * kbuf[i, j, i2, j2]
            elif stage == 2:
                for i in range(2):
                    for j in range(m):
                        for i2 in range(2):
                            for j2 in range(m):
                                acc[i, j, i2, j2] += (dt / 3.0) * kbuf[i, j, i2, j2]
                                Rt[i, j, i2, j2] = R[i, j, i2, j2] + dt * kbuf[i, j, i2, j2]
            else:
                for i in range(2):
                    for j in range(m):
                        for i2 in range(2):
                            for j2 in range(m):
                                R[i, j, i2, j2] = acc[i, j, i2, j2] + (dt / 6.0) * kbuf[i, j, i2, j2]
        t = t + dt


@njit(cache=True)
def meter_rhs(M, out, wc, ka_down, ka_up, sq):
    """Damped-oscillator Liouvillian applied to an arbitrary m x m matrix."""
    m = M.shape[0]
    for k in range(m):
        for k2 in range(m):
            val = -1j * wc * (k - k2) * M[k, k2]
            if ka_down != 0.0:
                if k + 1 < m and k2 + 1 < m:
                    val += ka_down * sq[k + 1] * sq[k2 + 1] * M[k + 1, k2 + 1]
                val -= 0.5 * ka_down * (k + k2) * M[k, k2]
            if ka_up != 0.0:
                if k > 0 and k2 > 0:
                    val += ka_up * sq[k] * sq[k2] * M[k - 1, k2 - 1]
                fk = k + 1.0 if k < m - 1 else 0.0
                fk2 = k2 + 1.0 if k2 < m - 1 else 0.0
                val -= 0.5 * ka_up * (fk + fk2) * M[k, k2]
            out[k, k2] = val


@njit(cache=True)
def meter_advance(M, dt, nsteps, wc, kappa, nbar, sq):
    """RK4-advance an m x m matrix under the autonomous meter Liouvillian."""
    m = M.shape[0]
    kbuf = np.empty((m, m), dtype=np.complex128)
    acc = np.empty((m, m), dtype=np.complex128)
    Mt = np.empty((m, m), dtype=np.complex128)
    ka_down = kappa * (nbar + 1.0)
    ka_up = kappa * nbar
    for _ in range(nsteps):
        for stage in range(4):
            src = M if stage == 0 else Mt
            meter_rhs(src, kbuf, wc, ka_down, ka_up, sq)
            if stage == 0:
                for i in range(m):
                    for j in range(m):
                        acc[i, j] = M[i, j] + (dt / 6.0) * kbuf[i, j]
                        Mt[i, j] = M[i, j] + 0.5 * dt * kbuf[i, j]
            elif stage == 1:
                for i in range(m):
                    for j in range(m):
                        acc[i, j] += (dt / 3.0) * kbuf[i, j]
                        Mt[i, j] = M[i, j] + 0.5 * dt * kbuf[i, j]
            elif stage == 2:
                for i in range(m):
                    for j in range(m):
                        acc[i, j] += (dt / 3.0) * kbuf[i, j]
                        Mt[i, j] = M[i, j] + dt * kbuf[i, j]
            else:
                for i in range(m):
                    for j in range(m):
                        M[i, j] = acc[i, j] + (dt / 6.0) * kbuf[i, j]


def sqrt_table(meter_dim: int) -> np.ndarray:
    """sqrt(k) lookup passed to the joint/meter kernels."""
    return np.sqrt(np.arange(meter_dim + 1, dtype=np.float64))


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    psi = np.array([1.0 + 0j, 0.0 + 0j])
    schrodinger_advance(psi, 0.0, 1e-3, 2, 1.0, 1.0)
    r = np.eye(2, dtype=complex) / 2
    ame_advance(r, 0.0, 1e-3, 2, 1.0, 1.0, 0.1, False, 0.0)
    ame_advance(r, 0.0, 1e-3, 2, 1.0, 1.0, 0.0, True, 0.1)
    m = 3
    sq = sqrt_table(m)
    R = np.zeros((2, m, 2, m), dtype=complex)
    R[0, 0, 0, 0] = 1.0
    joint_advance(R, 0.0, 1e-3, 2, 1.0, 1.0, 0.5, 0.0, 1.0, 1.0, 0.1, sq)
    M = np.eye(m, dtype=complex) / m
    meter_advance(M, 1e-3, 2, 1.0, 1.0, 0.1, sq)
