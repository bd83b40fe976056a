import numpy as np
import pytest

from lzqnd.linalg import (
    SIGMA_Z,
    HilbertLayout,
    InvariantViolation,
    annihilation,
    creation,
    hermitian_eig,
    kron,
    meter_tail_population,
    number_op,
    partial_trace_meter,
    thermal_occupancy,
    thermal_state,
    trace_distance,
    validate_density_matrix,
)
from lzqnd.lz import LZParams, hamiltonian


def random_complex(rng, n, m=None):
    m = m or n
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def random_density(rng, n):
    a = random_complex(rng, n)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestKron:
    def test_identity(self):
        assert np.allclose(kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_sigma_z_structure(self):
        assert np.allclose(kron(SIGMA_Z, np.eye(2)), np.diag([1, 1, -1, -1]))

    def test_mixed_product_property(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a, c = random_complex(rng, 2), random_complex(rng, 2)
            b, d = random_complex(rng, 3), random_complex(rng, 3)
            lhs = kron(a, b) @ kron(c, d)
            rhs = kron(a @ c, b @ d)
            assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1, np.max(np.abs(rhs)))


class TestPartialTrace:
    def test_product_state(self):
        rng = np.random.default_rng(2)
        layout = HilbertLayout(meter_dim=4)
        rq = random_density(rng, 2)
        rm = random_density(rng, 4)
        assert np.allclose(partial_trace_meter(kron(rq, rm), layout), rq, atol=1e-14)

    def test_bell_like_state(self):
        # (|up,0> + |down,1>)/sqrt(2) on a 2-level meter reduces to I/2
        layout = HilbertLayout(meter_dim=2)
        psi = np.zeros(4, dtype=complex)
        psi[0] = 1 / np.sqrt(2)   # q=0, k=0
        psi[3] = 1 / np.sqrt(2)   # q=1, k=1
        rho = np.outer(psi, psi.conj())
        assert np.allclose(partial_trace_meter(rho, layout), np.eye(2) / 2, atol=1e-14)

    def test_maximally_mixed(self):
        layout = HilbertLayout(meter_dim=2)
        assert np.allclose(
            partial_trace_meter(np.eye(4, dtype=complex) / 4, layout), np.eye(2) / 2
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            partial_trace_meter(np.eye(6, dtype=complex) / 6, HilbertLayout(meter_dim=4))


class TestHermitianEig:
    def test_sigma_z(self):
        w, _ = hermitian_eig(SIGMA_Z)
        assert np.allclose(w, [-1.0, 1.0])

    def test_lz_crossing_energies(self):
        w, _ = hermitian_eig(hamiltonian(0.0, LZParams(g=1.0, eps=1.0)))
        assert np.allclose(w, [-0.5, 0.5])

    def test_reconstruction_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = random_complex(rng, 6)
            h = a + a.conj().T
            w, v = hermitian_eig(h)
            scale = np.max(np.abs(h))
            assert np.max(np.abs(h @ v - v @ np.diag(w))) <= 1e-9 * scale
            assert np.max(np.abs(v.conj().T @ v - np.eye(6))) <= 1e-9
            assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) <= 1e-9 * scale

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestTraceDistance:
    def test_equal_states(self):
        rho = np.diag([0.5, 0.5]).astype(complex)
        assert trace_distance(rho, rho) == 0.0

    def test_orthogonal_pure(self):
        up = np.diag([1.0, 0.0]).astype(complex)
        dn = np.diag([0.0, 1.0]).astype(complex)
        assert trace_distance(up, dn) == pytest.approx(1.0)

    def test_diagonal_example(self):
        r1 = np.diag([0.7, 0.3]).astype(complex)
        r2 = np.diag([0.4, 0.6]).astype(complex)
        assert trace_distance(r1, r2) == pytest.approx(0.3)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            a, b, c = (random_density(rng, 3) for _ in range(3))
            assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            trace_distance(np.eye(2) / 2, np.eye(3) / 3)


class TestBosonicOperators:
    def test_number_diagonal(self):
        n_max = 7
        a = annihilation(n_max)
        assert np.allclose(a.conj().T @ a, number_op(n_max))
        assert np.allclose(np.diag(number_op(n_max)).real, np.arange(n_max + 1))

    def test_truncated_commutator(self):
        n_max = 5
        a = annihilation(n_max)
        comm = a @ creation(n_max) - creation(n_max) @ a
        expected = np.eye(n_max + 1, dtype=complex)
        expected[n_max, n_max] = -n_max
        assert np.allclose(comm, expected)

    def test_annihilates_vacuum(self):
        vac = np.zeros(6)
        vac[0] = 1.0
        assert np.allclose(annihilation(5) @ vac, 0.0)

    def test_requires_min_dim(self):
        with pytest.raises(ValueError):
            annihilation(0)


class TestThermalState:
    def test_vacuum(self):
        rho = thermal_state(5, nbar=0.0)
        expected = np.zeros((6, 6))
        expected[0, 0] = 1.0
        assert np.allclose(rho, expected)

    def test_cold_cavity_occupancy(self):
        n = thermal_occupancy(beta=10.0, omega_c=1.0)
        assert n == pytest.approx(4.5401991e-05, rel=1e-6)

    def test_boltzmann_ratio(self):
        rho = thermal_state(30, beta=10.0, omega_c=1.0)
        p = np.diag(rho).real
        assert p[1] / p[0] == pytest.approx(np.exp(-10.0), rel=1e-12)

    def test_mean_occupancy(self):
        nbar = 0.8
        rho = thermal_state(60, nbar=nbar)
        got = float(np.real(np.trace(number_op(60) @ rho)))
        assert got == pytest.approx(nbar, rel=1e-6)

    def test_truncation_warning(self):
        with pytest.warns(UserWarning, match="thermal tail"):
            thermal_state(5, nbar=2.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            thermal_state(5, nbar=-0.1)
        with pytest.raises(ValueError):
            thermal_state(5, beta=-1.0, omega_c=1.0)


class TestValidation:
    def test_accepts_valid(self):
        rng = np.random.default_rng(5)
        td, hd, me = validate_density_matrix(random_density(rng, 4))
        assert td < 1e-12 and hd < 1e-12 and me > -1e-12

    def test_rejects_bad_trace(self):
        with pytest.raises(InvariantViolation, match="trace"):
            validate_density_matrix(np.eye(2, dtype=complex))

    def test_rejects_negative(self):
        rho = np.diag([1.1, -0.1]).astype(complex)
        with pytest.raises(InvariantViolation, match="eigenvalue"):
            validate_density_matrix(rho)

    def test_tail_population(self):
        layout = HilbertLayout(meter_dim=5)
        rho = kron(np.diag([1.0, 0.0]), np.diag([0.0, 0.0, 0.5, 0.25, 0.25])).astype(complex)
        assert meter_tail_population(rho, layout) == pytest.approx(0.5)
