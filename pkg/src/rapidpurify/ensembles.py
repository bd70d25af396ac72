"""Monte-Carlo ensemble statistics and the three speed-up curves.

A speed-up curve compares, target by target, the time two strategies need to
reach the same final linear entropy L:

* ``speedup_fig1`` -- time for the no-feedback ensemble *average* entropy to
  reach L (root of the quadrature curve) over the deterministic feedback
  time; fully analytic, no sampling error.
* ``speedup_fig2`` -- deterministic feedback time over the Monte-Carlo mean
  first-passage time without feedback (fixed LO phase 0).
* ``speedup_fig3`` -- deterministic feedback time over the mean first-passage
  time of the aligned-axis protocol; closed form at eta = 1, Monte Carlo
  below.

Sampling errors propagate to s by the first-order delta method.  Censored
trajectories (never reaching the target before the horizon) are counted and
excluded from means; an all-censored target carries mean None.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bloch import ModelParams
from .closedform import (
    mean_linear_entropy_nofeedback,
    time_to_L_feedback,
    wr_mean_time,
)
from .engine import SimConfig, ensemble_entropy_samples, ensemble_passage_samples
from .protocols import AlignedReduced, FixedPhase, Protocol

__all__ = [
    "EnsembleStats",
    "PassageStats",
    "SpeedupCurve",
    "default_l_grid",
    "ensemble_mean_entropy",
    "mean_first_passage",
    "speedup_fig1",
    "speedup_fig2",
    "speedup_fig3",
]


@dataclass(frozen=True)
class EnsembleStats:
    """Time-gridded ensemble mean of L with standard errors."""

    times: np.ndarray
    mean_L: np.ndarray
    stderr_L: np.ndarray
    n_traj: int


@dataclass(frozen=True)
class PassageStats:
    """Mean first-passage time to one entropy target.

    ``mean_T`` / ``stderr_T`` are None when every trajectory was censored.
    """

    target_L: float
    mean_T: float | None
    stderr_T: float | None
    n_censored: int
    n_traj: int

    @property
    def all_censored(self) -> bool:
        return self.mean_T is None


@dataclass(frozen=True)
class SpeedupCurve:
    """Speed-up s = t_numerator / t_denominator on a decreasing L grid."""

    eta: float
    L: np.ndarray
    t_numerator: np.ndarray
    t_denominator: np.ndarray
    s: np.ndarray
    stderr_s: np.ndarray | None
    numerator: str
    denominator: str
    censored: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.L) >= 0):
            raise ValueError("L grid must be strictly decreasing")


def default_l_grid(n: int = 40, lo: float = 1e-4, hi: float = 0.49) -> np.ndarray:
    """Log-spaced entropy targets, descending from hi to lo."""
    return np.geomspace(hi, lo, n)


def ensemble_mean_entropy(params: ModelParams, protocol: Protocol, config: SimConfig,
                          *, initial=(0.0, 0.0, 0.0), threads: int = 1) -> EnsembleStats:
    """Pointwise mean and standard error of L over the recording grid."""
    times, ent = ensemble_entropy_samples(params, protocol, config,
                                          initial=initial, threads=threads)
    mean = ent.mean(axis=0)
    if config.n_traj > 1:
        stderr = ent.std(axis=0, ddof=1) / math.sqrt(config.n_traj)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleStats(times=times, mean_L=mean, stderr_L=stderr, n_traj=config.n_traj)


def mean_first_passage(params: ModelParams, protocol: Protocol, targets, config: SimConfig,
                       *, initial=(0.0, 0.0, 0.0), threads: int = 1) -> list[PassageStats]:
    """Per-target mean, standard error and censored count of passage times."""
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    times, censored = ensemble_passage_samples(params, protocol, targets, config,
                                               initial=initial, threads=threads)
    out = []
    for j, tgt in enumerate(targets):
        ok = ~censored[:, j]
        n_ok = int(ok.sum())
        if n_ok == 0:
            out.append(PassageStats(float(tgt), None, None, int(censored[:, j].sum()),
                                    config.n_traj))
            continue
        sample = times[ok, j]
        mean = float(sample.mean())
        stderr = float(sample.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else 0.0
        out.append(PassageStats(float(tgt), mean, stderr,
                                int(censored[:, j].sum()), config.n_traj))
    return out


def _require_monotone_mean_entropy(gamma: float, eta: float, t_upper: float, *,
                                   n_check: int = 200) -> None:
    ts = np.linspace(0.0, t_upper, n_check)
    vals = np.array([mean_linear_entropy_nofeedback(t, gamma, eta) for t in ts])
    if np.any(np.diff(vals) > 1e-12):
        raise RuntimeError("no-feedback mean entropy is not monotone on the bisection range")


def _invert_mean_entropy(gamma: float, eta: float, target: float, t_upper: float,
                         tol: float) -> float:
    """Bisection for the time at which <L(t)> = target (robust over fast)."""
    lo, hi = 0.0, t_upper
    f_hi = mean_linear_entropy_nofeedback(hi, gamma, eta) - target
    if f_hi > 0.0:
        raise RuntimeError(f"mean entropy never reaches {target} before t = {t_upper}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mean_linear_entropy_nofeedback(mid, gamma, eta) - target > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def speedup_fig1(gamma: float, eta: float, l_grid=None, *, t_upper: float | None = None,
                 tol_t: float | None = None) -> SpeedupCurve:
    """Average-entropy speed-up: s = t_m / t_fb, all analytic.

    t_m solves <L(t_m)> = L for the no-feedback ensemble average (quadrature
    plus bisection) and t_fb inverts the deterministic feedback decay.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1] for the no-feedback average")
    grid = default_l_grid() if l_grid is None else np.asarray(l_grid, dtype=float)
    t_upper = 20.0 / gamma if t_upper is None else t_upper
    tol_t = 1e-9 / gamma if tol_t is None else tol_t
    _require_monotone_mean_entropy(gamma, eta, t_upper)
    t_m = np.array([_invert_mean_entropy(gamma, eta, L, t_upper, tol_t) for L in grid])
    t_fb = time_to_L_feedback(grid, gamma, eta)
    return SpeedupCurve(eta=eta, L=grid, t_numerator=t_m, t_denominator=t_fb,
                        s=t_m / t_fb, stderr_s=None,
                        numerator="t_mean_entropy_nofeedback", denominator="t_feedback")


def _passage_speedup(params: ModelParams, protocol: Protocol, grid, config: SimConfig,
                     threads: int) -> tuple:
    stats = mean_first_passage(params, protocol, grid, config, threads=threads)
    t_det = time_to_L_feedback(grid, params.gamma, params.eta)
    mean = np.array([s.mean_T if s.mean_T is not None else np.nan for s in stats])
    err = np.array([s.stderr_T if s.stderr_T is not None else np.nan for s in stats])
    censored = np.array([s.n_censored for s in stats])
    s_vals = t_det / mean
    stderr_s = t_det * err / (mean * mean)
    return t_det, mean, s_vals, stderr_s, censored


def speedup_fig2(gamma: float, eta: float, l_grid=None, config: SimConfig | None = None,
                 *, threads: int = 1) -> SpeedupCurve:
    """Mean-first-passage speed-up of no feedback over deterministic feedback.

    s = T_det(L) / <T_nofeedback(L)> with the numerator closed-form and the
    denominator a Monte-Carlo mean over fixed-phase trajectories.
    """
    grid = default_l_grid() if l_grid is None else np.asarray(l_grid, dtype=float)
    config = SimConfig(dt=1e-3 / gamma, horizon=8.0 / gamma) if config is None else config
    params = ModelParams(gamma=gamma, eta=eta)
    t_det, mean, s_vals, stderr_s, censored = _passage_speedup(
        params, FixedPhase(0.0), grid, config, threads)
    return SpeedupCurve(eta=eta, L=grid, t_numerator=t_det, t_denominator=mean,
                        s=s_vals, stderr_s=stderr_s,
                        numerator="t_feedback", denominator="mean_T_nofeedback",
                        censored=censored)


def speedup_fig3(gamma: float, eta: float, l_grid=None, config: SimConfig | None = None,
                 *, threads: int = 1) -> SpeedupCurve:
    """Aligned-axis protocol speed-up over deterministic feedback.

    At eta = 1 both times are closed-form (no Monte Carlo); below, the
    aligned-axis mean first-passage time comes from the reduced ensemble.
    """
    grid = default_l_grid() if l_grid is None else np.asarray(l_grid, dtype=float)
    t_det = time_to_L_feedback(grid, gamma, eta)
    if eta == 1.0:
        t_wr = wr_mean_time(grid, gamma)
        return SpeedupCurve(eta=eta, L=grid, t_numerator=t_det, t_denominator=t_wr,
                            s=t_det / t_wr, stderr_s=None,
                            numerator="t_feedback", denominator="mean_T_aligned_axis")
    config = SimConfig(dt=1e-3 / gamma, horizon=60.0 / gamma) if config is None else config
    params = ModelParams(gamma=gamma, eta=eta)
    _, mean, s_vals, stderr_s, censored = _passage_speedup(
        params, AlignedReduced(), grid, config, threads)
    return SpeedupCurve(eta=eta, L=grid, t_numerator=t_det, t_denominator=mean,
                        s=s_vals, stderr_s=stderr_s,
                        numerator="t_feedback", denominator="mean_T_aligned_axis",
                        censored=censored)
