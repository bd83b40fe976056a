"""Landau-Zener qubit coupled to a damped-oscillator meter.

Simulation engine for adiabatic transfer assisted by an engineered
reservoir: full joint Lindblad dynamics, the reduced dephasing master
equation in the instantaneous basis, information-backflow diagnostics,
and pulsed (stroboscopic) coupling protocols with timing noise.
"""

__version__ = "0.1.0"

from .linalg import (
    HilbertLayout,
    InvariantViolation,
    annihilation,
    creation,
    hermitian_eig,
    kron,
    number_op,
    partial_trace_meter,
    position_quadrature,
    thermal_occupancy,
    thermal_state,
    trace_distance,
    validate_density_matrix,
)
from .lz import (
    AdiabaticFrame,
    LZParams,
    accumulated_phase,
    adiabatic_frame,
    apt_alpha,
    hamiltonian,
    lz_infidelity_asymptotic,
    lz_infidelity_finite,
    mixing_angle,
    propagate_schrodinger,
    transfer_probability,
)
from .trajectory import RunResult, Trajectory
from .lindblad import (
    MeterParams,
    effective_gap,
    evolve,
    joint_hamiltonian,
    lindblad_rhs,
    regression_autocorrelation,
    run_continuous,
)
from .dephasing import (
    DephasingModel,
    ame_rhs,
    analytic_autocorrelation,
    asymptotic_infidelity,
    avron_q,
    dephasing_rate,
    evolve_ame,
    relative_infidelity,
    spectral_g0,
)
from .nonmarkov import (
    NMResult,
    StatePair,
    blp_measure,
    blp_measure_dephasing,
    distinguishability_trajectory,
)
from .strobe import (
    MCSummary,
    NoiseSpec,
    PulseSchedule,
    build_schedule,
    run_noisy_mc,
    run_stroboscopic,
)
