"""Shared time-series containers for all propagators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Trajectory:
    """Sampled transfer probability plus per-sample state diagnostics.

    All arrays share the length of ``times``.  ``quad`` is the meter field
    quadrature <a + a^dag> (zero for reduced-qubit propagators), ``tail``
    the population of the top two Fock levels.  ``reduced`` optionally
    holds the 2x2 reduced qubit matrices when recording was requested.
    """

    times: np.ndarray
    p_values: np.ndarray
    trace_dev: np.ndarray
    herm_dev: np.ndarray
    min_eig: np.ndarray
    quad: np.ndarray
    tail: np.ndarray
    reduced: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def final_p(self) -> float:
        return float(self.p_values[-1])

    def diagnostics_summary(self) -> dict:
        """Worst-case invariants over the stored samples."""
        return {
            "max_trace_dev": float(np.max(self.trace_dev)),
            "max_herm_dev": float(np.max(self.herm_dev)),
            "min_eig": float(np.min(self.min_eig)),
            "max_tail": float(np.max(self.tail)),
        }


@dataclass
class RunResult:
    """A finished run: the trajectory and the final transfer probability."""

    trajectory: Trajectory
    t_final: float
