"""Euler-Maruyama ensemble engine with reproducible per-trajectory noise.

Every trajectory owns a counter-based Philox stream keyed by
(seed, trajectory_id); the k-th standard-normal draw of that stream drives
integration step k.  Trajectories are integrated in fixed blocks of
``BLOCK_SIZE`` and a thread pool only ever distributes whole blocks, so
ensemble outputs are bit-identical for any worker count.

The integrator is plain Euler-Maruyama followed by the model's domain
projection (ball projection for the Bloch dynamics, clipping to [-1, 1] for
the reduced axis dynamics).  Distribution-level observables are all that the
package compares, so weak first-order convergence is sufficient.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bloch import entropy_of
from .protocols import AlignedReduced, Protocol

__all__ = [
    "BLOCK_SIZE",
    "BRIDGE_BETA",
    "MAX_GAMMA_DT",
    "WARN_GAMMA_DT",
    "SimConfig",
    "Trajectory",
    "FirstPassage",
    "IntegrationFault",
    "check_resolution",
    "trajectory_rng",
    "wiener_increment",
    "euler_maruyama_step",
    "simulate_trajectory",
    "ensemble_entropy_samples",
    "ensemble_passage_samples",
    "first_passage_time",
    "passage_times_from_history",
]

BLOCK_SIZE = 1024

# Noise is generated TIME_CHUNK steps at a time from each trajectory's
# stream (sequential draws, so chunking cannot change the numbers); this
# bounds block memory independently of the horizon.
TIME_CHUNK = 4096

# gamma*dt above the first bound is refused outright; above the second it is
# allowed but draws a RuntimeWarning (the fastest rate in the model is 2*gamma).
MAX_GAMMA_DT = 1e-2
WARN_GAMMA_DT = 1e-3

# Continuity correction for first-passage detection on a discrete grid: a
# diffusion observed every dt behaves like one crossing a barrier shifted by
# beta * sigma * sqrt(dt), beta = -zeta(1/2)/sqrt(2 pi) (Broadie-Glasserman).
# Plain step-wise detection would bias noise-dominated passage times upward
# by O(sqrt(dt)), which is visible at gamma*dt = 1e-3 with 5000 trajectories.
BRIDGE_BETA = 0.5825971579390107


class IntegrationFault(RuntimeError):
    """A step produced a non-finite state."""

    def __init__(self, message: str, trajectory_id: int | None = None, step_index: int | None = None):
        super().__init__(message)
        self.trajectory_id = trajectory_id
        self.step_index = step_index


@dataclass(frozen=True)
class SimConfig:
    """Integration grid and ensemble bookkeeping.

    ``record_stride`` is the number of integration steps between recorded
    samples for state/entropy traces (first-passage detection always works at
    full step resolution).
    """

    dt: float
    horizon: float
    n_traj: int = 5000
    seed: int = 0
    record_stride: int = 10

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError("dt must be a finite positive duration")
        if not (math.isfinite(self.horizon) and self.horizon >= self.dt):
            raise ValueError("dt must not exceed horizon")
        if self.n_traj < 1:
            raise ValueError("n_traj must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))

    def step_times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


def check_resolution(gamma: float, dt: float) -> None:
    """Refuse gamma*dt > 1e-2; warn above 1e-3."""
    g = gamma * dt
    if g > MAX_GAMMA_DT:
        raise ValueError(f"gamma*dt = {g:.3g} exceeds {MAX_GAMMA_DT}; refine the step")
    if g > WARN_GAMMA_DT:
        warnings.warn(
            f"gamma*dt = {g:.3g} is above {WARN_GAMMA_DT}; discretization bias may be visible",
            RuntimeWarning,
            stacklevel=2,
        )


def trajectory_rng(seed: int, traj_id: int) -> np.random.Generator:
    """Counter-based stream for one trajectory, a pure function of (seed, id)."""
    key = np.array([seed, traj_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def wiener_increment(rng: np.random.Generator, dt: float) -> float:
    """One Wiener increment ~ Normal(0, dt) drawn from ``rng``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return math.sqrt(dt) * float(rng.standard_normal())


def euler_maruyama_step(state, drift_fn, diffusion_fn, dt, dW, project=None):
    """One explicit step: state + drift(state) dt + diffusion(state) dW.

    ``project`` is the model's domain projection (applied after the update).
    Raises IntegrationFault on a non-finite result; the ensemble drivers
    re-raise it with trajectory and step context attached.
    """
    arr = np.asarray(state, dtype=float)
    new = arr + np.asarray(drift_fn(state)) * dt + np.asarray(diffusion_fn(state)) * dW
    if project is not None:
        new = project(new)
    if not np.all(np.isfinite(new)):
        raise IntegrationFault("non-finite state after Euler step")
    if np.ndim(state) == 0:
        return float(new)
    return new


@dataclass(frozen=True)
class Trajectory:
    """A recorded path: times, states, and windowed record increments.

    ``states`` has shape (n_rec, 3) for Bloch dynamics or (n_rec,) for the
    reduced axis dynamics.  ``record`` holds the homodyne-record increment
    integrated over each recording window (0 for the first sample).
    ``thetas`` is the LO phase the feedback rule chose at the recorded state.
    """

    times: np.ndarray
    states: np.ndarray
    record: np.ndarray | None
    thetas: np.ndarray | None
    traj_id: int

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have matching lengths")
        if len(self.times) and self.times[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def entropies(self) -> np.ndarray:
        s = np.asarray(self.states)
        if s.ndim == 1:
            return entropy_of(s, 0.0, 0.0)
        return entropy_of(s[:, 0], s[:, 1], s[:, 2])


@dataclass(frozen=True)
class FirstPassage:
    """First time a trajectory's linear entropy reached ``target_L``.

    ``time`` is None when the trajectory never crossed before the horizon.
    """

    target_L: float
    time: float | None
    trajectory_id: int

    @property
    def censored(self) -> bool:
        return self.time is None


class _NoiseChunks:
    """Per-trajectory Wiener increments, delivered TIME_CHUNK steps at a time.

    Each row continues its own Philox stream across chunks, so the numbers
    are identical to a single bulk draw while memory stays bounded.
    """

    def __init__(self, seed: int, ids: np.ndarray, dt: float):
        self._gens = [trajectory_rng(seed, int(tid)) for tid in ids]
        self._sqrt_dt = math.sqrt(dt)

    def draw(self, n_steps: int) -> np.ndarray:
        out = np.empty((len(self._gens), n_steps))
        for row, gen in enumerate(self._gens):
            out[row] = gen.standard_normal(n_steps)
        out *= self._sqrt_dt
        return out


class _PassageDetector:
    """Online first-crossing detection of L through each target.

    Implements, sample by sample, the same rule as
    ``passage_times_from_history``: the first sample k where L_k falls below
    the (optionally continuity-corrected) barrier, with linear interpolation
    in L across the bracketing step.  Targets every trajectory has crossed
    drop out of the scan.
    """

    def __init__(self, n: int, targets: np.ndarray, dt: float, bridge: bool):
        self.targets = targets
        self.dt = dt
        self.shift = BRIDGE_BETA * math.sqrt(dt) if bridge else 0.0
        self.times = np.full((n, len(targets)), np.nan)
        self.pending = np.ones((n, len(targets)), dtype=bool)
        self._active = list(range(len(targets)))

    def observe(self, k: int, entropy: np.ndarray, sigma: np.ndarray,
                prev_entropy: np.ndarray | None) -> None:
        for j in list(self._active):
            barrier = self.targets[j] + self.shift * sigma
            mask = self.pending[:, j] & (entropy <= barrier)
            if not mask.any():
                continue
            if k == 0:
                self.times[mask, j] = 0.0
            else:
                prev = prev_entropy[mask]
                cur = entropy[mask]
                level = barrier[mask]
                denom = prev - cur
                frac = np.where(denom > 0.0,
                                (prev - level) / np.where(denom > 0.0, denom, 1.0), 1.0)
                np.clip(frac, 0.0, 1.0, out=frac)
                self.times[mask, j] = (k - 1 + frac) * self.dt
            self.pending[mask, j] = False
            if not self.pending[:, j].any():
                self._active.remove(j)


def _locate_fault(values: np.ndarray, ids: np.ndarray, step: int) -> IntegrationFault:
    bad = int(np.argmin(np.isfinite(values)))
    return IntegrationFault(
        f"non-finite state in trajectory {int(ids[bad])} at step {step}",
        trajectory_id=int(ids[bad]),
        step_index=step,
    )


def _run_bloch_block(params, protocol, config, ids, initial, *, strided_entropy=False,
                     want_traj=False, passage_targets=None, bridge_correction=True):
    """Integrate one block of Bloch trajectories; return requested traces."""
    n = len(ids)
    n_steps = config.n_steps
    dt = config.dt
    stride = config.record_stride
    gamma, eta = params.gamma, params.eta
    amp = math.sqrt(2.0 * eta * gamma)
    ent_amp = math.sqrt(8.0 * eta * gamma)
    rec_noise = 1.0 / math.sqrt(8.0 * gamma)
    noise = _NoiseChunks(config.seed, ids, dt)

    x = np.full(n, float(initial[0]))
    y = np.full(n, float(initial[1]))
    z = np.full(n, float(initial[2]))
    theta = np.zeros(n)  # held phase before the first update
    cur_l = entropy_of(x, y, z)
    prev_l = None

    n_rec = n_steps // stride + 1
    out: dict[str, np.ndarray] = {}
    detector = None
    if passage_targets is not None:
        detector = _PassageDetector(n, passage_targets, dt, bridge_correction)
    if strided_entropy:
        ent_rec = np.empty((n, n_rec))
        ent_rec[:, 0] = cur_l
        out["entropy_rec"] = ent_rec
    if want_traj:
        states = np.empty((n, n_rec, 3))
        thetas = np.empty((n, n_rec))
        records = np.zeros((n, n_rec))
        states[:, 0, 0], states[:, 0, 1], states[:, 0, 2] = x, y, z
        thetas[:, 0] = protocol.phases(x, y, theta)
        out["states"] = states
        out["thetas"] = thetas
        out["records"] = records
        rec_acc = np.zeros(n)

    k = 0
    while k < n_steps:
        dw = noise.draw(min(TIME_CHUNK, n_steps - k))
        for col in range(dw.shape[1]):
            theta = protocol.phases(x, y, theta)
            c = np.cos(theta)
            s = np.sin(theta)
            q = x * c + y * s
            opz = 1.0 + z
            if detector is not None:
                detector.observe(k, cur_l, ent_amp * np.abs(cur_l * q), prev_l)
            g = amp * dw[:, col]
            nx = x + (-gamma * dt) * x + g * (opz * c - x * q)
            ny = y + (-gamma * dt) * y + g * (opz * s - y * q)
            nz = z + (-2.0 * gamma * dt) * opz - g * opz * q
            n2 = nx * nx + ny * ny + nz * nz
            if not np.all(np.isfinite(n2)):
                raise _locate_fault(n2, ids, k)
            over = n2 > 1.0
            if over.any():
                scale = 1.0 / np.sqrt(n2[over])
                nx[over] *= scale
                ny[over] *= scale
                nz[over] *= scale
                n2[over] = 1.0
            x, y, z = nx, ny, nz
            prev_l, cur_l = cur_l, 0.5 * (1.0 - n2)
            if want_traj:
                rec_acc += q * dt + rec_noise * dw[:, col]
            k += 1
            if k % stride == 0:
                r = k // stride
                if strided_entropy:
                    ent_rec[:, r] = cur_l
                if want_traj:
                    states[:, r, 0], states[:, r, 1], states[:, r, 2] = x, y, z
                    thetas[:, r] = protocol.phases(x, y, theta)
                    records[:, r] = rec_acc
                    rec_acc = np.zeros(n)
    if detector is not None:
        theta_last = protocol.phases(x, y, theta)
        q_last = x * np.cos(theta_last) + y * np.sin(theta_last)
        detector.observe(n_steps, cur_l, ent_amp * np.abs(cur_l * q_last), prev_l)
        out["passage_times"] = detector.times
        out["passage_censored"] = detector.pending.copy()
    out["final"] = np.stack([x, y, z], axis=1)
    return out


def _run_reduced_block(params, config, ids, initial_x, *, strided_entropy=False,
                       want_traj=False, passage_targets=None, bridge_correction=True):
    """Integrate one block of reduced aligned-axis trajectories."""
    n = len(ids)
    n_steps = config.n_steps
    dt = config.dt
    stride = config.record_stride
    gamma, eta = params.gamma, params.eta
    amp = math.sqrt(2.0 * eta * gamma)
    ent_amp = math.sqrt(8.0 * eta * gamma)
    rec_noise = 1.0 / math.sqrt(8.0 * gamma)
    noise = _NoiseChunks(config.seed, ids, dt)

    x = np.full(n, float(initial_x))
    cur_l = 0.5 * (1.0 - x * x)
    prev_l = None
    n_rec = n_steps // stride + 1
    out: dict[str, np.ndarray] = {}
    detector = None
    if passage_targets is not None:
        detector = _PassageDetector(n, passage_targets, dt, bridge_correction)
    if strided_entropy:
        ent_rec = np.empty((n, n_rec))
        ent_rec[:, 0] = cur_l
        out["entropy_rec"] = ent_rec
    if want_traj:
        states = np.empty((n, n_rec))
        records = np.zeros((n, n_rec))
        states[:, 0] = x
        out["states"] = states
        out["records"] = records
        rec_acc = np.zeros(n)

    drift_rate = -(1.0 - eta) * gamma
    k = 0
    while k < n_steps:
        dw = noise.draw(min(TIME_CHUNK, n_steps - k))
        for col in range(dw.shape[1]):
            if detector is not None:
                detector.observe(k, cur_l, ent_amp * np.abs(cur_l * x), prev_l)
            nx = x + (drift_rate * dt) * x + (amp * dw[:, col]) * (1.0 - x * x)
            if not np.all(np.isfinite(nx)):
                raise _locate_fault(nx, ids, k)
            np.clip(nx, -1.0, 1.0, out=nx)
            if want_traj:
                rec_acc += x * dt + rec_noise * dw[:, col]
            x = nx
            prev_l, cur_l = cur_l, 0.5 * (1.0 - x * x)
            k += 1
            if k % stride == 0:
                r = k // stride
                if strided_entropy:
                    ent_rec[:, r] = cur_l
                if want_traj:
                    states[:, r] = x
                    records[:, r] = rec_acc
                    rec_acc = np.zeros(n)
    if detector is not None:
        detector.observe(n_steps, cur_l, ent_amp * np.abs(cur_l * x), prev_l)
        out["passage_times"] = detector.times
        out["passage_censored"] = detector.pending.copy()
    out["final"] = x
    return out


def _run_block(params, protocol, config, ids, initial, **want):
    if isinstance(protocol, AlignedReduced):
        x0 = initial[0] if np.ndim(initial) else initial
        return _run_reduced_block(params, config, ids, x0, **want)
    return _run_bloch_block(params, protocol, config, ids, initial, **want)


def _block_ranges(n_traj: int):
    return [
        (start, np.arange(start, min(start + BLOCK_SIZE, n_traj), dtype=np.int64))
        for start in range(0, n_traj, BLOCK_SIZE)
    ]


def _map_blocks(worker, n_traj: int, threads: int) -> None:
    blocks = _block_ranges(n_traj)
    if threads <= 1 or len(blocks) <= 1:
        for blk in blocks:
            worker(blk)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # list() re-raises worker exceptions (e.g. IntegrationFault)
        list(pool.map(worker, blocks))


def ensemble_entropy_samples(params, protocol: Protocol, config: SimConfig,
                             *, initial=(0.0, 0.0, 0.0), threads: int = 1):
    """Linear-entropy samples on the recording grid for every trajectory.

    Returns (times, L) with L of shape (n_traj, n_rec).  Bit-identical for
    any ``threads``.
    """
    check_resolution(params.gamma, config.dt)
    n_rec = config.n_steps // config.record_stride + 1
    times = np.arange(n_rec) * (config.dt * config.record_stride)
    ent = np.empty((config.n_traj, n_rec))

    def worker(blk):
        start, ids = blk
        res = _run_block(params, protocol, config, ids, initial, strided_entropy=True)
        ent[start:start + len(ids)] = res["entropy_rec"]

    _map_blocks(worker, config.n_traj, threads)
    return times, ent


def ensemble_passage_samples(params, protocol: Protocol, targets, config: SimConfig,
                             *, initial=(0.0, 0.0, 0.0), threads: int = 1,
                             bridge_correction: bool = True):
    """First-passage times of L through each target, per trajectory.

    Returns (times, censored): arrays of shape (n_traj, n_targets); censored
    entries hold time = nan.  Detection runs at full step resolution with
    linear interpolation in L across the bracketing step; by default the
    detection barrier carries the BRIDGE_BETA * sigma_L * sqrt(dt) continuity
    correction (else noise-dominated passage times are biased late by
    O(sqrt(dt)), several standard errors at default scale).
    """
    check_resolution(params.gamma, config.dt)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    if np.any((targets <= 0.0) | (targets >= 0.5)):
        raise ValueError("passage targets must lie in (0, 1/2)")
    times = np.empty((config.n_traj, len(targets)))
    censored = np.empty((config.n_traj, len(targets)), dtype=bool)

    def worker(blk):
        start, ids = blk
        res = _run_block(params, protocol, config, ids, initial,
                         passage_targets=targets, bridge_correction=bridge_correction)
        times[start:start + len(ids)] = res["passage_times"]
        censored[start:start + len(ids)] = res["passage_censored"]

    _map_blocks(worker, config.n_traj, threads)
    return times, censored


def passage_times_from_history(entropy_history: np.ndarray, dt: float, target: float,
                               *, sigma_history: np.ndarray | None = None):
    """Vectorized first crossing of L <= target on a uniform step grid.

    ``entropy_history`` has shape (n, n_steps+1).  Returns (times, censored)
    with nan times for censored rows.  The crossing time interpolates
    linearly in L over the bracketing step.  When ``sigma_history`` (the
    local |diffusion coefficient| of L, same shape) is given, detection uses
    the continuity-corrected barrier target + BRIDGE_BETA * sigma * sqrt(dt),
    removing the O(sqrt(dt)) late bias of step-wise monitoring; the corrected
    rule reduces to the plain one wherever the entropy noise vanishes.
    """
    hist = np.asarray(entropy_history)
    if sigma_history is None:
        barrier = np.full_like(hist, target)
    else:
        barrier = target + (BRIDGE_BETA * math.sqrt(dt)) * np.asarray(sigma_history)
    below = hist <= barrier
    hit = below.any(axis=1)
    k = below.argmax(axis=1)
    t = np.full(hist.shape[0], np.nan)
    immediate = hit & (k == 0)
    t[immediate] = 0.0
    rows = np.flatnonzero(hit & (k > 0))
    if rows.size:
        kr = k[rows]
        prev = hist[rows, kr - 1]
        cur = hist[rows, kr]
        level = barrier[rows, kr]
        denom = prev - cur
        frac = np.where(denom > 0.0, (prev - level) / np.where(denom > 0.0, denom, 1.0), 1.0)
        np.clip(frac, 0.0, 1.0, out=frac)
        t[rows] = (kr - 1 + frac) * dt
    return t, ~hit


def first_passage_time(trajectory: Trajectory, target_L: float) -> FirstPassage:
    """First time the recorded path's entropy reaches ``target_L``.

    Works on any recorded grid; ensemble first-passage estimation uses the
    full-resolution path internally instead.
    """
    if not 0.0 < target_L < 0.5:
        raise ValueError("target_L must lie in (0, 1/2)")
    ent = np.asarray(trajectory.entropies())
    below = ent <= target_L
    if not below.any():
        return FirstPassage(target_L, None, trajectory.traj_id)
    k = int(below.argmax())
    if k == 0:
        return FirstPassage(target_L, 0.0, trajectory.traj_id)
    t0, t1 = trajectory.times[k - 1], trajectory.times[k]
    l0, l1 = ent[k - 1], ent[k]
    frac = 1.0 if l0 <= l1 else (l0 - target_L) / (l0 - l1)
    return FirstPassage(target_L, float(t0 + frac * (t1 - t0)), trajectory.traj_id)


def simulate_trajectory(params, protocol: Protocol, config: SimConfig, traj_id: int = 0,
                        *, initial=(0.0, 0.0, 0.0)) -> Trajectory:
    """Integrate and record a single trajectory (pure in (seed, traj_id))."""
    check_resolution(params.gamma, config.dt)
    ids = np.array([traj_id], dtype=np.int64)
    res = _run_block(params, protocol, config, ids, initial, want_traj=True)
    n_rec = config.n_steps // config.record_stride + 1
    times = np.arange(n_rec) * (config.dt * config.record_stride)
    if isinstance(protocol, AlignedReduced):
        states = res["states"][0]
        thetas = np.zeros(n_rec)
    else:
        states = res["states"][0]
        thetas = res["thetas"][0]
    return Trajectory(times=times, states=states, record=res["records"][0],
                      thetas=thetas, traj_id=traj_id)
