"""Cross-check suite behind the ``validate`` CLI command.

Quick checks exercise the closed forms, normalizations and round trips (a
few seconds); the full set adds seeded Monte-Carlo cross-validations of the
quadrature curve, the deterministic feedback law and the aligned-axis mean
passage time.  Every check is deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .bloch import GROUND, BlochState, ModelParams, diffusion, drift, linear_entropy
from .closedform import (
    L_feedback,
    conditional_state,
    conditional_state_two_noise,
    evolution_operator,
    is_state_matrix,
    maximally_mixed,
    mean_linear_entropy_nofeedback,
    r_density,
    time_to_L_feedback,
    wr_mean_time,
    wr_mean_time_asymptote,
    z_deterministic,
)
from .engine import SimConfig, ensemble_entropy_samples, ensemble_passage_samples
from .protocols import AlignedReduced, FixedPhase, RapidPhase, theta_rapid

__all__ = ["CheckResult", "quick_checks", "full_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(results, name, passed, detail=""):
    results.append(CheckResult(name, bool(passed), detail))


def quick_checks() -> list[CheckResult]:
    res: list[CheckResult] = []

    # Ground state is a fixed point of drift and diffusion for any phase.
    worst = 0.0
    for theta in np.linspace(-np.pi, np.pi, 9):
        p = ModelParams(gamma=1.7, eta=0.6, theta=float(theta))
        worst = max(worst, *(abs(v) for v in (*drift(GROUND, p).as_array(),
                                              *diffusion(GROUND, p).as_array())))
    _check(res, "ground-state-stationary", worst == 0.0, f"max |field| = {worst:g}")

    # Rapid phase rule cancels the monitored quadrature mean.
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        x, y = rng.uniform(-0.7, 0.7, size=2)
        th = theta_rapid(x, y, 0.0)
        worst = max(worst, abs(x * math.cos(th) + y * math.sin(th)))
    _check(res, "rapid-phase-cancels-q", worst < 1e-15, f"max |q| = {worst:.2e}")

    # Deterministic feedback decay and its inverse round-trip.
    worst = 0.0
    for eta in (0.0, 0.5, 0.8, 0.95, 1.0):
        ts = np.geomspace(0.01, 6.0, 25)
        back = time_to_L_feedback(L_feedback(ts, 1.0, eta), 1.0, eta)
        worst = max(worst, float(np.max(np.abs(back - ts) / ts)))
    _check(res, "feedback-time-round-trip", worst < 1e-10, f"max rel err = {worst:.2e}")

    # Entropy decay at eta = 1 is a pure exponential from 1/2.
    ok = math.isclose(L_feedback(math.log(2.0) / 2.0, 1.0, 1.0), 0.25, rel_tol=1e-12)
    _check(res, "feedback-decay-eta1", ok and math.isclose(z_deterministic(0.0, 1.0), 0.0))

    # R-density normalizes to one.
    worst = 0.0
    for gt in (0.2, 1.0, 3.0):
        for eta in (1.0, 0.8, 0.5):
            val, _ = integrate.quad(lambda r: r_density(gt, r, 1.0, eta), -np.inf, np.inf)
            worst = max(worst, abs(val - 1.0))
    _check(res, "r-density-normalization", worst < 1e-8, f"max |I-1| = {worst:.2e}")

    # Conditioned states are valid density matrices everywhere probed.
    ok = True
    for gt in (0.0, 0.3, 1.0, 4.0):
        for eta in (1.0, 0.8, 0.5, 0.0):
            for R in (0.0, -0.4, 1.3, 5.0):
                ok = ok and is_state_matrix(conditional_state(gt, R, 1.0, eta))
    _check(res, "conditional-state-validity", ok)

    # Identity at t = 0 and the pure-ground limit.
    ok = np.allclose(conditional_state(0.0, 0.0, 1.0, 1.0), maximally_mixed(), atol=1e-14)
    late = conditional_state(40.0, 0.0, 1.0, 1.0)
    ok = ok and abs(late[1, 1] - 1.0) < 1e-12
    _check(res, "conditional-state-limits", ok)

    # Two-noise construction agrees with the direct conditioned state.
    worst = 0.0
    for gt in (0.2, 0.5, 1.5):
        for R in (0.0, 0.4, 1.2):
            for eta in (1.0, 0.8, 0.5):
                a = conditional_state(gt, R, 1.0, eta)
                b = conditional_state_two_noise(maximally_mixed(), R, gt, 1.0, eta,
                                                method="quadrature")
                worst = max(worst, float(np.max(np.abs(a - b))))
    _check(res, "two-noise-route-consistency", worst < 1e-10, f"max |diff| = {worst:.2e}")

    # Quadrature mean entropy: endpoints and monotone decay.
    vals = [mean_linear_entropy_nofeedback(t, 1.0, 1.0) for t in np.linspace(0.0, 8.0, 81)]
    ok = math.isclose(vals[0], 0.5, abs_tol=1e-12) and vals[-1] < 1e-4
    ok = ok and bool(np.all(np.diff(vals) < 1e-12))
    _check(res, "mean-entropy-quadrature-shape", ok, f"L(0)={vals[0]:.3g}, L(8)={vals[-1]:.3g}")

    # Aligned-axis mean time: boundary value and small-L asymptote.
    a = wr_mean_time(1e-8, 1.0)
    rel = abs(a - wr_mean_time_asymptote(1e-8, 1.0)) / a
    _check(res, "aligned-axis-time-asymptote",
           wr_mean_time(0.5, 1.0) == 0.0 and rel < 1e-3, f"rel dev = {rel:.2e}")

    # Closed-form fig3 ratio: monotone toward its limit of 2 from below.
    grid = np.geomspace(0.4, 1e-8, 60)
    s = time_to_L_feedback(grid, 1.0, 1.0) / wr_mean_time(grid, 1.0)
    mono = bool(np.all(np.diff(s) > 0.0))
    _check(res, "fig3-ratio-monotone-limit", mono and 1.8 < s[-1] < 2.0,
           f"s(1e-8) = {s[-1]:.4f} (limit 2 approached logarithmically)")

    # Evolution operator shape.
    v = evolution_operator(1.0, 0.3, 1.0)
    ok = np.allclose(v, [[math.exp(-1.0), 0.0], [0.3, 1.0]])
    _check(res, "evolution-operator-entries", ok)

    # Entropy functional extremes.
    ok = linear_entropy(BlochState(0, 0, 0)) == 0.5 and linear_entropy(BlochState(1, 0, 0)) == 0.0
    _check(res, "linear-entropy-extremes", ok)
    return res


def full_checks(threads: int = 1) -> list[CheckResult]:
    res = quick_checks()
    gamma = 1.0

    # Rapid feedback: ensemble mean of L follows the deterministic law.
    p = ModelParams(gamma=gamma, eta=1.0)
    cfg = SimConfig(dt=1e-3, horizon=2.0, n_traj=2000, seed=0)
    times, ent = ensemble_entropy_samples(p, RapidPhase(), cfg, threads=threads)
    mean = ent.mean(axis=0)
    stderr = ent.std(axis=0, ddof=1) / math.sqrt(cfg.n_traj)
    tol = np.maximum(3.0 * stderr, 5.0 * cfg.dt)
    dev = np.abs(mean - L_feedback(times, gamma, 1.0))
    _check(res, "mc-rapid-matches-deterministic-law", bool(np.all(dev <= tol)),
           f"max dev {dev.max():.2e}")

    # No-feedback MC mean entropy against the quadrature curve.
    for eta in (1.0, 0.8):
        p = ModelParams(gamma=gamma, eta=eta)
        times, ent = ensemble_entropy_samples(p, FixedPhase(0.0), cfg, threads=threads)
        worst_z = 0.0
        for gt in (0.25, 0.5, 1.0, 2.0):
            i = int(np.argmin(np.abs(times - gt)))
            se = ent[:, i].std(ddof=1) / math.sqrt(cfg.n_traj)
            z = abs(ent[:, i].mean() - mean_linear_entropy_nofeedback(gt, gamma, eta)) / se
            worst_z = max(worst_z, z)
        _check(res, f"mc-vs-quadrature-eta{eta:g}", worst_z <= 3.0, f"max |z| = {worst_z:.2f}")

    # Aligned-axis passage times against the closed form.
    p = ModelParams(gamma=gamma, eta=1.0)
    cfg_fp = SimConfig(dt=1e-3, horizon=8.0, n_traj=2000, seed=0)
    tt, cen = ensemble_passage_samples(p, AlignedReduced(), [0.3, 0.1, 0.05], cfg_fp,
                                       threads=threads)
    worst_z = 0.0
    for j, L in enumerate((0.3, 0.1, 0.05)):
        sample = tt[~cen[:, j], j]
        se = sample.std(ddof=1) / math.sqrt(len(sample))
        worst_z = max(worst_z, abs(sample.mean() - wr_mean_time(L, gamma)) / se)
    _check(res, "mc-aligned-axis-vs-closed-form",
           worst_z <= 3.0 and int(cen.sum()) == 0,
           f"max |z| = {worst_z:.2f}, censored = {int(cen.sum())}")

    # Rapid-protocol mean passage time against the inverse decay law.
    tt, cen = ensemble_passage_samples(p, RapidPhase(), [0.3, 0.1], cfg_fp, threads=threads)
    worst = 0.0
    for j, L in enumerate((0.3, 0.1)):
        worst = max(worst, abs(tt[:, j].mean() - time_to_L_feedback(L, gamma, 1.0)))
    _check(res, "mc-rapid-passage-vs-inverse-law",
           worst <= 5.0 * cfg_fp.dt and int(cen.sum()) == 0, f"max dev = {worst:.2e}")

    # Worker count must not change ensemble bits.
    p = ModelParams(gamma=gamma, eta=0.8)
    small = SimConfig(dt=1e-3, horizon=0.5, n_traj=2500, seed=9)
    _, a = ensemble_entropy_samples(p, FixedPhase(0.0), small, threads=1)
    _, b = ensemble_entropy_samples(p, FixedPhase(0.0), small, threads=8)
    _check(res, "thread-count-invariance", bool(np.array_equal(a, b)))
    return res
