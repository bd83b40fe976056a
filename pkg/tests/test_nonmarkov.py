import numpy as np
import pytest

from lzqnd.dephasing import DephasingModel
from lzqnd.linalg import SIGMA_X, SIGMA_Y, SIGMA_Z
from lzqnd.lindblad import MeterParams
from lzqnd.lz import LZParams
from lzqnd.nonmarkov import (
    StatePair,
    blp_measure,
    blp_measure_dephasing,
    default_pair_grid,
    distinguishability_trajectory,
    positive_increment_sum,
)

P1 = LZParams(g=1.0, eps=1.0)


class TestStatePair:
    def test_orthogonal(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            pair = StatePair(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            r1, r2 = pair.states()
            assert abs(np.trace(r1 @ r2)) < 1e-14
            assert np.trace(r1).real == pytest.approx(1.0)

    def test_difference_is_bloch_vector(self):
        pair = StatePair(0.7, 1.9)
        n = pair.bloch_vector()
        r1, r2 = pair.states()
        expected = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
        assert np.allclose(r1 - r2, expected)

    def test_poles(self):
        r1, r2 = StatePair(0.0, 0.0).states()
        assert np.allclose(r1, np.diag([1.0, 0.0]))
        assert np.allclose(r2, np.diag([0.0, 1.0]))


class TestPositiveIncrements:
    def test_monotone_decay_gives_zero(self):
        d = np.linspace(1.0, 0.2, 50)
        assert positive_increment_sum(d) == 0.0

    def test_single_revival(self):
        d = np.concatenate([np.linspace(1, 0.4, 20), np.linspace(0.4, 0.6, 10)])
        assert positive_increment_sum(d) == pytest.approx(0.2, rel=1e-10)

    def test_noise_floor(self):
        d = 0.5 + 1e-14 * np.sin(np.arange(100))
        assert positive_increment_sum(d) == 0.0


class TestDistinguishability:
    def test_identical_pair_zero(self):
        m = MeterParams(omega_c=1.0, kappa=0.5, x0=1.0, n_max=10, nbar=0.0)
        pair = StatePair(0.3, 0.4)
        th = 2.0
        from lzqnd.lindblad import evolve
        from lzqnd.linalg import kron, trace_distance

        r1, _ = pair.states()
        rth = m.thermal()
        t1 = evolve(kron(r1, rth), -th, th, None, P1, m, n_store=51, record_reduced=True)
        d = [trace_distance(a, a) for a in t1.reduced]
        assert max(d) == 0.0

    def test_decoupled_unitary_keeps_d_one(self):
        m = MeterParams(omega_c=1.0, kappa=0.8, x0=0.0, n_max=8, nbar=0.2)
        times, d = distinguishability_trajectory(
            StatePair(1.1, 0.3), P1, m, window_gu=3.0, n_store=101
        )
        assert d[0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(d - 1.0)) < 1e-8

    def test_generator_method_matches_direct(self):
        m = MeterParams(omega_c=1.0, kappa=0.4, x0=1.0, n_max=14, nbar=0.1)
        pair = StatePair(0.9, 2.2)
        times, d_direct = distinguishability_trajectory(
            pair, P1, m, window_gu=3.0, n_store=201
        )
        res = blp_measure(P1, m, window_gu=3.0, pair_grid=[(pair.theta, pair.phi)],
                          refine=False, n_store=201)
        assert np.max(np.abs(res.d_trajectory - d_direct)) < 1e-9

    def test_surrogate_monotone_decay(self):
        model = DephasingModel.from_rate(1.0, P1, constant_rate=True)
        res = blp_measure_dephasing(P1, model, window_gu=4.0,
                                    pair_grid=[(np.pi / 2, 0.0)], refine=False)
        # instantaneous-basis dephasing contracts distinguishability
        assert np.all(np.diff(res.d_trajectory) < 1e-10)


class TestBlpMeasure:
    def test_surrogate_is_markovian(self):
        model = DephasingModel.from_rate(0.5, P1, constant_rate=True)
        res = blp_measure_dephasing(P1, model, window_gu=5.0)
        assert res.n_value <= 1e-4

    def test_decoupled_zero(self):
        m = MeterParams(omega_c=1.0, kappa=1.0, x0=0.0, n_max=8, nbar=0.3)
        res = blp_measure(P1, m, window_gu=3.0)
        assert res.n_value <= 1e-10

    def test_nonnegative_and_antipodal_symmetric(self):
        m = MeterParams(omega_c=1.0, kappa=0.3, x0=1.0, n_max=16, nbar=0.0)
        res = blp_measure(P1, m, window_gu=3.0,
                          pair_grid=[(0.4, 1.0)], refine=False)
        flipped = blp_measure(P1, m, window_gu=3.0,
                              pair_grid=[(np.pi - 0.4, 1.0 + np.pi)], refine=False)
        assert res.n_value >= 0
        assert flipped.n_value == pytest.approx(res.n_value, rel=1e-9, abs=1e-12)

    def test_backflow_detected_at_weak_damping(self):
        m = MeterParams(omega_c=1.0, kappa=0.1, x0=1.0, n_max=20, nbar=0.0)
        res = blp_measure(P1, m, window_gu=3.0)
        assert res.n_value > 1e-3
        assert res.meta["grid_size"] == len(default_pair_grid())

    def test_dt_refinement_stable(self):
        m = MeterParams(omega_c=1.0, kappa=0.2, x0=1.0, n_max=16, nbar=0.0)
        from lzqnd.lindblad import dt_bound

        base = dt_bound(P1, m, 3.0)
        r1 = blp_measure(P1, m, window_gu=3.0, dt=base, n_store=1501)
        r2 = blp_measure(P1, m, window_gu=3.0, dt=base / 2, n_store=1501)
        assert r2.n_value == pytest.approx(r1.n_value, rel=0.02)
