import math

import numpy as np
import pytest

from rapidpurify.bloch import ModelParams
from rapidpurify.closedform import time_to_L_feedback, z_deterministic
from rapidpurify.engine import (
    IntegrationFault,
    SimConfig,
    Trajectory,
    check_resolution,
    ensemble_entropy_samples,
    ensemble_passage_samples,
    euler_maruyama_step,
    first_passage_time,
    passage_times_from_history,
    simulate_trajectory,
    trajectory_rng,
    wiener_increment,
)
from rapidpurify.protocols import FixedPhase, RapidPhase


class TestSimConfig:
    def test_rejects_dt_above_horizon(self):
        with pytest.raises(ValueError):
            SimConfig(dt=1.0, horizon=0.5)

    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            SimConfig(dt=-1e-3, horizon=1.0)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, horizon=1.0, n_traj=0)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, horizon=1.0, record_stride=0)
        with pytest.raises(ValueError):
            SimConfig(dt=1e-3, horizon=1.0, seed=-1)

    def test_step_grid(self):
        cfg = SimConfig(dt=0.25, horizon=1.0)
        assert cfg.n_steps == 4
        assert np.allclose(cfg.step_times(), [0.0, 0.25, 0.5, 0.75, 1.0])


class TestResolutionGuard:
    def test_refuses_coarse_steps(self):
        with pytest.raises(ValueError):
            check_resolution(gamma=2.0, dt=1e-2)

    def test_warns_between_bounds(self):
        with pytest.warns(RuntimeWarning):
            check_resolution(gamma=5.0, dt=1e-3)

    def test_silent_at_default_scale(self):
        check_resolution(gamma=1.0, dt=1e-3)


class TestWienerStream:
    def test_reproducible_across_instantiations(self):
        a = [wiener_increment(trajectory_rng(42, 7), 0.01) for _ in range(3)]
        b = [wiener_increment(trajectory_rng(42, 7), 0.01) for _ in range(3)]
        assert a == b

    def test_consecutive_draws_differ(self):
        rng = trajectory_rng(42, 7)
        assert wiener_increment(rng, 0.01) != wiener_increment(rng, 0.01)

    def test_streams_keyed_by_trajectory(self):
        assert wiener_increment(trajectory_rng(42, 0), 0.01) != wiener_increment(
            trajectory_rng(42, 1), 0.01
        )

    def test_moments(self):
        # same stream the ensemble engine consumes, drawn in bulk
        dt = 0.01
        draws = trajectory_rng(0, 0).standard_normal(10**6) * math.sqrt(dt)
        assert abs(draws.mean()) <= 4e-3 * math.sqrt(dt)
        assert abs(draws.var() - dt) <= 0.01 * dt

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            wiener_increment(trajectory_rng(0, 0), 0.0)

    def test_chunked_draws_continue_the_stream(self):
        # the engine draws noise in time chunks; that must reproduce a
        # single bulk draw exactly
        bulk = trajectory_rng(3, 9).standard_normal(1000)
        gen = trajectory_rng(3, 9)
        parts = np.concatenate([gen.standard_normal(640), gen.standard_normal(360)])
        assert np.array_equal(bulk, parts)


class TestEulerStep:
    def test_zero_fields_leave_state_unchanged(self):
        out = euler_maruyama_step(
            np.array([0.3, -0.1, 0.2]), lambda s: 0.0 * s, lambda s: 0.0 * s, 0.1, 0.5
        )
        assert np.all(out == [0.3, -0.1, 0.2])

    def test_explicit_decay(self):
        out = euler_maruyama_step(1.0, lambda s: -s, lambda s: 0.0, 0.1, 0.0)
        assert out == pytest.approx(0.9)

    def test_projection_hook(self):
        out = euler_maruyama_step(
            1.0, lambda s: 0.0, lambda s: 1.0, 1.0, 5.0, project=lambda v: np.minimum(v, 2.0)
        )
        assert out == 2.0

    def test_nonfinite_raises(self):
        with pytest.raises(IntegrationFault):
            euler_maruyama_step(1.0, lambda s: math.inf, lambda s: 0.0, 0.1, 0.0)


class TestSimulateTrajectory:
    def test_ground_state_is_absorbing(self):
        params = ModelParams(gamma=1.0, eta=1.0)
        cfg = SimConfig(dt=1e-3, horizon=0.5, n_traj=1, seed=0, record_stride=25)
        tr = simulate_trajectory(params, RapidPhase(), cfg, initial=(0.0, 0.0, -1.0))
        assert np.all(tr.states[:, 0] == 0.0)
        assert np.all(tr.states[:, 1] == 0.0)
        assert np.all(tr.states[:, 2] == -1.0)

    def test_zero_efficiency_is_deterministic_decay(self):
        params = ModelParams(gamma=1.0, eta=0.0)
        cfg = SimConfig(dt=1e-3, horizon=2.0, n_traj=1, seed=5, record_stride=100)
        tr = simulate_trajectory(params, FixedPhase(0.0), cfg)
        assert np.all(tr.states[:, 0] == 0.0)
        assert np.all(tr.states[:, 1] == 0.0)
        assert np.max(np.abs(tr.states[:, 2] - z_deterministic(tr.times, 1.0))) < 2e-3

    def test_bit_identical_reruns(self):
        params = ModelParams(gamma=1.0, eta=0.9)
        cfg = SimConfig(dt=1e-3, horizon=1.0, n_traj=1, seed=123, record_stride=7)
        a = simulate_trajectory(params, RapidPhase(), cfg, traj_id=5)
        b = simulate_trajectory(params, RapidPhase(), cfg, traj_id=5)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.record, b.record)
        assert np.array_equal(a.thetas, b.thetas)

    def test_matches_ensemble_column(self):
        # same noise stream; arithmetic may differ by an ulp across array widths
        params = ModelParams(gamma=1.0, eta=1.0)
        cfg = SimConfig(dt=1e-3, horizon=1.0, n_traj=64, seed=7, record_stride=10)
        _, ent = ensemble_entropy_samples(params, RapidPhase(), cfg)
        tr = simulate_trajectory(params, RapidPhase(), cfg, traj_id=13)
        assert np.max(np.abs(ent[13] - tr.entropies())) < 1e-14


class TestTrajectoryType:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 0.1]), states=np.zeros((3, 3)),
                       record=None, thetas=None, traj_id=0)
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.1, 0.2]), states=np.zeros((2, 3)),
                       record=None, thetas=None, traj_id=0)
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 0.0]), states=np.zeros((2, 3)),
                       record=None, thetas=None, traj_id=0)


class TestThreadInvariance:
    def test_entropy_samples_bitwise_equal(self):
        params = ModelParams(gamma=1.0, eta=0.8)
        cfg = SimConfig(dt=1e-3, horizon=0.5, n_traj=2500, seed=11)
        _, a = ensemble_entropy_samples(params, RapidPhase(), cfg, threads=1)
        _, b = ensemble_entropy_samples(params, RapidPhase(), cfg, threads=8)
        assert np.array_equal(a, b)

    def test_passage_samples_bitwise_equal(self):
        params = ModelParams(gamma=1.0, eta=1.0)
        cfg = SimConfig(dt=1e-3, horizon=2.0, n_traj=2048, seed=2)
        ta, ca = ensemble_passage_samples(params, FixedPhase(0.0), [0.2, 0.05], cfg, threads=1)
        tb, cb = ensemble_passage_samples(params, FixedPhase(0.0), [0.2, 0.05], cfg, threads=8)
        assert np.array_equal(ta, tb, equal_nan=True)
        assert np.array_equal(ca, cb)


class TestFirstPassage:
    def test_immediate_crossing(self):
        tr = Trajectory(times=np.array([0.0, 0.1]),
                        states=np.array([[0.8, 0.0, 0.0], [0.9, 0.0, 0.0]]),
                        record=None, thetas=None, traj_id=0)
        fp = first_passage_time(tr, 0.3)
        assert fp.time == 0.0 and not fp.censored

    def test_censored_when_never_reached(self):
        tr = Trajectory(times=np.array([0.0, 0.1]),
                        states=np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]),
                        record=None, thetas=None, traj_id=4)
        fp = first_passage_time(tr, 0.1)
        assert fp.censored and fp.time is None and fp.trajectory_id == 4

    def test_rejects_bad_target(self):
        tr = Trajectory(times=np.array([0.0]), states=np.zeros((1, 3)),
                        record=None, thetas=None, traj_id=0)
        with pytest.raises(ValueError):
            first_passage_time(tr, 0.5)

    def test_deterministic_feedback_path_matches_inverse_law(self):
        # exact deterministic rapid-feedback path at eta=1, sampled at dt:
        # the interpolated crossing matches the closed-form inversion to O(dt^2)
        gamma, dt = 1.0, 1e-3
        times = np.arange(0, 1201) * dt
        z = z_deterministic(times, gamma)
        r_xy = np.sqrt(np.exp(-2 * gamma * times) - np.exp(-4 * gamma * times))
        states = np.stack([r_xy, np.zeros_like(times), z], axis=1)
        tr = Trajectory(times=times, states=states, record=None, thetas=None, traj_id=0)
        for target in (0.3, 0.1):
            fp = first_passage_time(tr, target)
            assert abs(fp.time - time_to_L_feedback(target, gamma, 1.0)) <= 2.0 * dt

    def test_censoring_soundness_horizon_extension(self):
        params = ModelParams(gamma=1.0, eta=1.0)
        short = SimConfig(dt=1e-3, horizon=1.0, n_traj=500, seed=5)
        long = SimConfig(dt=1e-3, horizon=2.0, n_traj=500, seed=5)
        ts, cs = ensemble_passage_samples(params, FixedPhase(0.0), [0.2], short)
        tl, cl = ensemble_passage_samples(params, FixedPhase(0.0), [0.2], long)
        ok = ~cs[:, 0]
        assert cs.sum() > 0  # the short horizon actually censors some
        assert np.array_equal(ts[ok, 0], tl[ok, 0])

    def test_history_interpolation(self):
        hist = np.array([[0.5, 0.4, 0.2]])
        t, cen = passage_times_from_history(hist, 0.1, 0.3)
        assert not cen[0]
        # crossing between samples 1 and 2: frac = (0.4-0.3)/(0.4-0.2) = 0.5
        assert t[0] == pytest.approx(0.15)


class TestSelfConvergence:
    def test_strong_error_scales_as_sqrt_dt(self):
        # one Brownian path family, coarse steps aggregate the fine increments
        gamma, eta = 1.0, 1.0
        dt_fine = 2.5e-4
        horizon = 1.024
        n_fine = int(round(horizon / dt_fine))
        n_traj = 128
        dw_fine = np.stack([
            trajectory_rng(33, i).standard_normal(n_fine) for i in range(n_traj)
        ]) * math.sqrt(dt_fine)

        def integrate(dt):
            ratio = int(round(dt / dt_fine))
            dw = dw_fine.reshape(n_traj, -1, ratio).sum(axis=2)
            x = np.zeros(n_traj)
            y = np.zeros(n_traj)
            z = np.zeros(n_traj)
            amp = math.sqrt(2.0 * eta * gamma)
            for k in range(dw.shape[1]):
                q = x  # fixed phase 0
                opz = 1.0 + z
                w = dw[:, k]
                nx = x + (-gamma * dt) * x + amp * w * (opz - x * q)
                ny = y + (-gamma * dt) * y + amp * w * (-y * q)
                nz = z + (-2.0 * gamma * dt) * opz - amp * w * opz * q
                n2 = nx * nx + ny * ny + nz * nz
                over = n2 > 1.0
                if over.any():
                    sc = 1.0 / np.sqrt(n2[over])
                    nx[over] *= sc
                    ny[over] *= sc
                    nz[over] *= sc
                x, y, z = nx, ny, nz
            return np.stack([x, y, z], axis=1)

        ref = integrate(dt_fine)
        errors = []
        for dt in (1e-3, 4e-3, 1.6e-2):
            sol = integrate(dt)
            errors.append(float(np.sqrt(np.mean(np.sum((sol - ref) ** 2, axis=1)))))
        # quadrupling dt should roughly double the strong error
        for coarse, fine in zip(errors[1:], errors[:-1]):
            assert 1.3 < coarse / fine < 3.2
