import numpy as np
import pytest

from lzqnd import kernels
from lzqnd.linalg import ID2, kron, thermal_state
from lzqnd.lindblad import (
    JointPropagator,
    MeterParams,
    dt_bound,
    effective_gap,
    evolve,
    initial_joint_state,
    joint_hamiltonian,
    lindblad_rhs,
    regression_autocorrelation,
    run_continuous,
)
from lzqnd.lz import LZParams, adiabatic_frame, coherent_p_at_times
from lzqnd.dephasing import analytic_autocorrelation, spectral_g0

P1 = LZParams(g=1.0, eps=1.0)


def small_meter(**kw):
    base = dict(omega_c=1.0, kappa=1.0, x0=1.0, n_max=12, nbar=0.0)
    base.update(kw)
    return MeterParams(**base)


def random_joint(rng, m):
    d = 2 * (m.n_max + 1)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestMeterParams:
    def test_occupancy_exclusive(self):
        with pytest.raises(ValueError):
            MeterParams(omega_c=1.0, kappa=1.0, x0=1.0, n_max=5)
        with pytest.raises(ValueError):
            MeterParams(omega_c=1.0, kappa=1.0, x0=1.0, n_max=5, nbar=0.1, beta=1.0)

    def test_beta_conversion(self):
        m = MeterParams(omega_c=2.0, kappa=1.0, x0=1.0, n_max=5, beta=5.0)
        assert m.nbar == pytest.approx(1.0 / np.expm1(10.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            MeterParams(omega_c=-1.0, kappa=1.0, x0=1.0, n_max=5, nbar=0.0)
        with pytest.raises(ValueError):
            MeterParams(omega_c=1.0, kappa=-1.0, x0=1.0, n_max=5, nbar=0.0)


class TestJointHamiltonian:
    def test_decoupled_form(self):
        m = small_meter(x0=0.0)
        from lzqnd.linalg import number_op
        from lzqnd.lz import hamiltonian

        h = joint_hamiltonian(0.7, P1, m)
        expected = kron(hamiltonian(0.7, P1), np.eye(m.n_max + 1)) + m.omega_c * kron(
            ID2, number_op(m.n_max)
        )
        assert np.allclose(h, expected)

    def test_hermitian(self):
        rng = np.random.default_rng(7)
        m = small_meter()
        for _ in range(5):
            h = joint_hamiltonian(rng.uniform(-5, 5), P1, m)
            assert np.max(np.abs(h - h.conj().T)) < 1e-14

    def test_coupling_commutes_with_bare_hamiltonian(self):
        from lzqnd.linalg import position_quadrature
        from lzqnd.lz import hamiltonian

        m = small_meter()
        for t in (-3.0, 0.0, 1.2):
            hq = m.x0 * kron(hamiltonian(t, P1), position_quadrature(m.n_max))
            hs = kron(hamiltonian(t, P1), np.eye(m.n_max + 1))
            comm = hq @ hs - hs @ hq
            assert np.max(np.abs(comm)) < 1e-12

    def test_block_structure_in_instantaneous_basis(self):
        # rotating the qubit factor to the instantaneous basis block-
        # diagonalizes H with blocks E_pm (1 + x0 X) + wc n
        from lzqnd.linalg import number_op, position_quadrature

        m = small_meter()
        t = 0.9
        fr = adiabatic_frame(t, P1)
        u = np.column_stack([fr.plus_state, fr.minus_state]).astype(complex)
        rot = kron(u, np.eye(m.n_max + 1))
        hb = rot.conj().T @ joint_hamiltonian(t, P1, m) @ rot
        md = m.n_max + 1
        x = position_quadrature(m.n_max)
        n_op = number_op(m.n_max)
        for i, e in enumerate([fr.e_plus, fr.e_minus]):
            blk = hb[i * md:(i + 1) * md, i * md:(i + 1) * md]
            assert np.allclose(blk, e * (np.eye(md) + m.x0 * x) + m.omega_c * n_op, atol=1e-12)
        off = hb[:md, md:]
        assert np.max(np.abs(off)) < 1e-12


class TestLindbladRHS:
    def test_thermal_fixed_point(self):
        # H_S(0) = 0 at g = 0: decoupled damped oscillator holds its thermal state
        p = LZParams(g=0.0, eps=1.0)
        m = small_meter(x0=0.0, nbar=0.4, n_max=30)
        rho = kron(np.diag([0.3, 0.7]).astype(complex), thermal_state(m.n_max, nbar=m.nbar))
        rhs = lindblad_rhs(rho, 0.0, p, m)
        assert np.max(np.abs(rhs)) < 1e-14

    def test_traceless_and_hermitian(self):
        rng = np.random.default_rng(8)
        m = small_meter()
        for _ in range(5):
            rho = random_joint(rng, m)
            rhs = lindblad_rhs(rho, rng.uniform(-2, 2), P1, m)
            assert abs(np.trace(rhs)) < 1e-12
            assert np.max(np.abs(rhs - rhs.conj().T)) < 1e-12

    def test_unitary_limit_conserves_energy(self):
        rng = np.random.default_rng(9)
        m = small_meter(kappa=0.0)
        rho = random_joint(rng, m)
        t = 0.3
        h = joint_hamiltonian(t, P1, m)
        rhs = lindblad_rhs(rho, t, P1, m)
        assert abs(np.trace(h @ rhs)) < 1e-11

    def test_kernel_matches_dense_reference(self):
        rng = np.random.default_rng(10)
        m = small_meter(nbar=0.4, n_max=8)
        md = m.n_max + 1
        rho = random_joint(rng, m)
        for t in (-1.3, 0.0, 2.1):
            ref = lindblad_rhs(rho, t, P1, m)
            R = rho.reshape(2, md, 2, md)
            out = np.empty_like(R)
            sq = kernels.sqrt_table(md)
            kernels.joint_rhs(
                R, out,
                0.5 * P1.eps * t, 0.5 * P1.g,
                m.x0 * 0.5 * P1.eps * t, m.x0 * 0.5 * P1.g,
                m.omega_c, m.kappa * (m.nbar + 1), m.kappa * m.nbar, sq,
            )
            assert np.max(np.abs(out.reshape(2 * md, 2 * md) - ref)) < 1e-12

    def test_kernel_with_time_shift(self):
        rng = np.random.default_rng(11)
        m = small_meter(nbar=0.0)
        md = m.n_max + 1
        rho = random_joint(rng, m)
        t, shift, x_eff = 0.8, 0.35, 2.5
        h = joint_hamiltonian(t, P1, m, x_eff=x_eff, tshift=shift)
        from lzqnd.linalg import annihilation

        a = kron(ID2, annihilation(m.n_max))
        ref = -1j * (h @ rho - rho @ h)
        n_op = a.conj().T @ a
        ref += m.kappa * (a @ rho @ a.conj().T - 0.5 * (n_op @ rho + rho @ n_op))
        R = rho.reshape(2, md, 2, md)
        out = np.empty_like(R)
        kernels.joint_rhs(
            R, out,
            0.5 * P1.eps * t, 0.5 * P1.g,
            x_eff * 0.5 * P1.eps * (t + shift), x_eff * 0.5 * P1.g,
            m.omega_c, m.kappa, 0.0, kernels.sqrt_table(md),
        )
        assert np.max(np.abs(out.reshape(2 * md, 2 * md) - ref)) < 1e-12


class TestEvolve:
    def test_decoupling_identity(self):
        m = MeterParams(omega_c=1.0, kappa=0.7, x0=0.0, n_max=20, nbar=0.3)
        res = run_continuous(P1, m, window_gu=4.0, n_store=101)
        pc = coherent_p_at_times(res.trajectory.times, P1)
        assert np.max(np.abs(pc - res.trajectory.p_values)) < 1e-6

    def test_initial_transfer_zero(self):
        m = small_meter()
        th = 4.0
        traj = evolve(initial_joint_state(P1, m, -th), -th, -th + 0.2, None, P1, m, n_store=5)
        assert traj.p_values[0] == pytest.approx(0.0, abs=1e-12)

    def test_rejects_coarse_dt(self):
        m = small_meter()
        with pytest.raises(ValueError, match="step bound"):
            evolve(initial_joint_state(P1, m, -2.0), -2.0, 2.0, 0.5, P1, m)

    def test_oscillation_damping_monotone_in_x0(self):
        # stronger coupling damps the post-crossing oscillations of P
        amp = []
        for x0 in (0.0, 0.5, 1.0):
            m = MeterParams(omega_c=1.0, kappa=1.0, x0=x0, n_max=40, beta=10.0)
            res = run_continuous(P1, m, window_gu=5.0, n_store=401)
            tr = res.trajectory
            late = tr.p_values[tr.times > 1.0]
            amp.append(float(late.max() - late.min()))
        assert amp[0] > amp[1] > amp[2]

    def test_trajectory_diagnostics_clean(self):
        m = small_meter(n_max=16, nbar=0.1)
        res = run_continuous(P1, m, window_gu=3.0, n_store=51)
        d = res.trajectory.diagnostics_summary()
        assert d["max_trace_dev"] < 1e-10
        assert d["max_herm_dev"] < 1e-11
        assert d["min_eig"] > -1e-9


class TestEffectiveGap:
    def test_decoupled_is_bare_gap(self):
        m = MeterParams(omega_c=1.0, kappa=0.5, x0=0.0, n_max=10, nbar=0.0)
        assert effective_gap(P1, m, window_gu=3.0) == pytest.approx(P1.g, abs=1e-9)

    def test_requires_straddling_window(self):
        m = small_meter()
        with pytest.raises(ValueError):
            effective_gap(P1, m, window_gu=0.0)

    def test_coupling_shifts_gap(self):
        m = MeterParams(omega_c=1.0, kappa=0.5, x0=1.0, n_max=30, nbar=0.0)
        gap = effective_gap(P1, m, window_gu=4.0)
        assert gap != pytest.approx(P1.g, abs=1e-3)


class TestRegressionAutocorrelation:
    def test_equal_time_variance(self):
        m = MeterParams(omega_c=1.0, kappa=1.0, x0=0.7, n_max=25, nbar=0.5)
        c0 = regression_autocorrelation(m, np.array([0.0]))[0]
        assert c0 == pytest.approx(m.x0**2 * (2 * m.nbar + 1), rel=1e-10)

    def test_matches_analytic(self):
        m = MeterParams(omega_c=1.0, kappa=1.0, x0=1.0, n_max=30, nbar=0.5)
        tau = np.linspace(0.0, 10.0 / m.kappa, 101)
        cn = regression_autocorrelation(m, tau)
        ca = analytic_autocorrelation(m, tau)
        assert np.max(np.abs(cn - ca)) < 1e-6

    def test_vacuum_single_frequency(self):
        m = MeterParams(omega_c=2.0, kappa=0.5, x0=1.0, n_max=15, nbar=0.0)
        tau = np.linspace(0.0, 5.0, 41)
        cn = regression_autocorrelation(m, tau)
        expected = m.x0**2 * np.exp((-m.kappa / 2 - 1j * m.omega_c) * tau)
        assert np.max(np.abs(cn - expected)) < 1e-7

    def test_spectral_weight_from_quadrature(self):
        from scipy.integrate import simpson

        m = MeterParams(omega_c=1.0, kappa=2.0, x0=1.0, n_max=30, nbar=0.25)
        tau = np.linspace(0.0, 40.0 / m.kappa, 2001)
        cn = regression_autocorrelation(m, tau)
        integral = float(simpson(np.real(cn), x=tau))
        assert integral == pytest.approx(spectral_g0(m) / 2, rel=1e-4)

    def test_rejects_bad_grid(self):
        m = small_meter()
        with pytest.raises(ValueError):
            regression_autocorrelation(m, np.array([1.0, 0.5]))


class TestDtBound:
    def test_tightens_with_coupling(self):
        m0 = small_meter(x0=0.0)
        m1 = small_meter(x0=5.0)
        assert dt_bound(P1, m1, 5.0) < dt_bound(P1, m0, 5.0)

    def test_kappa_scale(self):
        m = small_meter(x0=0.0, kappa=100.0, nbar=0.0)
        assert dt_bound(P1, m, 5.0) == pytest.approx(0.02 / 100.0)
