"""Dense complex linear algebra and operator construction.

Everything downstream works on plain ``numpy`` arrays: qubit operators are
2x2, meter operators live on a truncated Fock space of dimension
``n_max + 1``, and joint operators use the fixed qubit-major ordering
provided by :class:`HilbertLayout` (joint index = q * meter_dim + k).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

# State-validity tolerances used after propagation steps.  The positivity
# slack absorbs the eigenvalue drift of fixed-step RK4 at the default step
# sizes; tightening it false-alarms on long windows.
TRACE_TOL = 1e-8
HERM_TOL = 1e-10
POS_TOL = 1e-7

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


class InvariantViolation(RuntimeError):
    """A propagated state broke a physical invariant (trace, Hermiticity,
    positivity).  Usually means the step size is too coarse or the Fock
    truncation too small."""


@dataclass(frozen=True)
class HilbertLayout:
    """Qubit (x) meter tensor ordering, qubit factor first."""

    meter_dim: int
    qubit_dim: int = 2

    def __post_init__(self):
        if self.meter_dim < 2:
            raise ValueError(f"meter_dim must be >= 2, got {self.meter_dim}")

    @property
    def joint_dim(self) -> int:
        return self.qubit_dim * self.meter_dim

    @classmethod
    def for_n_max(cls, n_max: int) -> "HilbertLayout":
        return cls(meter_dim=n_max + 1)


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product with the package-wide (left-factor-major) ordering."""
    return np.kron(a, b)


def partial_trace_meter(rho: np.ndarray, layout: HilbertLayout) -> np.ndarray:
    """Trace out the meter factor of a joint operator, returning a 2x2 matrix."""
    d = layout.joint_dim
    if rho.shape != (d, d):
        raise ValueError(f"expected joint operator of shape ({d}, {d}), got {rho.shape}")
    m = layout.meter_dim
    return np.einsum("qkpk->qp", rho.reshape(2, m, 2, m))


def hermitian_eig(h: np.ndarray, herm_tol: float = HERM_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns).  Raises if the
    input is not Hermitian within ``herm_tol`` relative to its magnitude.
    """
    if h.shape[0] != h.shape[1]:
        raise ValueError(f"matrix must be square, got {h.shape}")
    scale = max(np.max(np.abs(h)), 1.0)
    dev = np.max(np.abs(h - h.conj().T))
    if dev > herm_tol * scale:
        raise ValueError(f"matrix is not Hermitian: max |h - h^dag| = {dev:.3e}")
    w, v = np.linalg.eigh(h)
    return w, v


def trace_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """Trace distance (1/2) tr|r1 - r2|, in [0, 1] for density matrices."""
    if r1.shape != r2.shape:
        raise ValueError(f"shape mismatch: {r1.shape} vs {r2.shape}")
    diff = r1 - r2
    ev = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(ev)))


def annihilation(n_max: int) -> np.ndarray:
    """Bosonic annihilation operator on the truncated Fock space {0..n_max}."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1).astype(complex)


def creation(n_max: int) -> np.ndarray:
    return annihilation(n_max).conj().T


def number_op(n_max: int) -> np.ndarray:
    return np.diag(np.arange(0.0, n_max + 1)).astype(complex)


def position_quadrature(n_max: int) -> np.ndarray:
    """a + a^dag on the truncated Fock space."""
    a = annihilation(n_max)
    return a + a.conj().T


def thermal_occupancy(beta: float, omega_c: float) -> float:
    """Bose occupancy 1/(exp(beta*omega_c) - 1)."""
    if beta <= 0 or omega_c <= 0:
        raise ValueError("beta and omega_c must be positive")
    return 1.0 / np.expm1(beta * omega_c)


def thermal_populations(nbar: float, dim: int) -> np.ndarray:
    """Geometric Fock populations of mean ``nbar``, renormalized on ``dim`` levels."""
    if nbar < 0:
        raise ValueError(f"occupancy must be >= 0, got {nbar}")
    if nbar == 0.0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    q = nbar / (nbar + 1.0)
    p = (1.0 - q) * q ** np.arange(dim)
    return p / p.sum()


def thermal_state(
    n_max: int,
    nbar: float | None = None,
    beta: float | None = None,
    omega_c: float | None = None,
) -> np.ndarray:
    """Thermal density matrix of the truncated oscillator.

    Provide either ``nbar`` (mean occupancy) or ``beta`` together with
    ``omega_c``.  Warns when the truncated tail exceeds 1e-9, i.e. when
    n_max is too small for the requested temperature.
    """
    if (nbar is None) == (beta is None):
        raise ValueError("provide exactly one of nbar or beta")
    if nbar is None:
        if omega_c is None:
            raise ValueError("beta requires omega_c")
        nbar = thermal_occupancy(beta, omega_c)
    dim = n_max + 1
    p = thermal_populations(nbar, dim)
    if nbar > 0:
        q = nbar / (nbar + 1.0)
        tail = q ** dim  # untruncated weight beyond n_max
        if tail > 1e-9:
            warnings.warn(
                f"thermal tail beyond n_max={n_max} is {tail:.2e} (> 1e-9); "
                "increase n_max",
                stacklevel=2,
            )
    return np.diag(p).astype(complex)


def meter_tail_population(rho: np.ndarray, layout: HilbertLayout, levels: int = 2) -> float:
    """Total population in the top ``levels`` Fock levels of the meter."""
    m = layout.meter_dim
    R = rho.reshape(2, m, 2, m)
    pk = np.real(np.einsum("qkqk->k", R))
    return float(pk[-levels:].sum())


def validate_density_matrix(
    rho: np.ndarray,
    trace_tol: float = TRACE_TOL,
    herm_tol: float = HERM_TOL,
    pos_tol: float = POS_TOL,
    where: str = "",
    suggestion: str = "reduce dt or increase n_max",
):
    """Check trace, Hermiticity and approximate positivity of a state.

    Returns (trace_dev, herm_dev, min_eig); raises InvariantViolation with a
    diagnostic message on the first violated bound.
    """
    tr = np.trace(rho)
    trace_dev = abs(tr - 1.0)
    herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    ctx = f" at {where}" if where else ""
    if trace_dev > trace_tol:
        raise InvariantViolation(
            f"trace deviation {trace_dev:.3e} > {trace_tol:.1e}{ctx}; {suggestion}"
        )
    if herm_dev > herm_tol:
        raise InvariantViolation(
            f"Hermiticity deviation {herm_dev:.3e} > {herm_tol:.1e}{ctx}; {suggestion}"
        )
    if min_eig < -pos_tol:
        raise InvariantViolation(
            f"negative eigenvalue {min_eig:.3e} < -{pos_tol:.1e}{ctx}; {suggestion}"
        )
    return float(trace_dev), herm_dev, min_eig
