"""Closed-form results for the monitored, decaying qubit.

Everything here is a pure function of time and the model parameters.  The
random variable R is the Gaussian weight accumulated by the measurement
record up to time t; conditioning on R gives the solvable family of states
produced by the linear-trajectory method:

* ``evolution_operator``      V(t, R) = [[exp(-g t), 0], [R, 1]] in the
                              (excited, ground) basis,
* ``conditional_state``       the normalized state V (I/2) V^dag, averaged
                              over the unobserved channel when eta < 1,
* ``r_density``               the density of R at time t,
* ``mean_linear_entropy_nofeedback``  the R-average of the linear entropy,
                              evaluated by Gaussian quadrature,
* ``L_feedback`` / ``time_to_L_feedback``  the deterministic entropy decay
                              under rapid-purification feedback and its
                              inverse,
* ``wr_mean_time``            the mean first-passage time of the aligned-axis
                              protocol at unit efficiency.

Throughout, kappa = 1 - exp(-2 gamma t); R has variance eta * kappa and the
unobserved channel's weight Q has variance (1 - eta) * kappa (they sum to
kappa).  Degenerate cases (t = 0 or eta = 0) collapse the R-density to a
point mass at R = 0 and are treated as distinct cases rather than evaluated
pointwise.

Note on conventions: the coherence of ``conditional_state`` scales with R
(off-diagonal R exp(-gamma t) / trace).  An alternative form with the R
factor dropped circulates; it fails the t = 0 identity (it does not return
I/2) and is available via ``r_scaled_coherence=False`` for comparison only.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

__all__ = [
    "DegenerateDensityError",
    "QuadratureError",
    "RDensity",
    "RecordNoiseSplit",
    "kappa",
    "z_deterministic",
    "L_feedback",
    "time_to_L_feedback",
    "evolution_operator",
    "conditional_state",
    "conditional_entropy",
    "conditional_state_two_noise",
    "r_density",
    "r_variance",
    "mean_linear_entropy_nofeedback",
    "wr_mean_time",
    "wr_mean_time_asymptote",
    "maximally_mixed",
    "ground_state_matrix",
    "is_state_matrix",
    "gauss_hermite_nodes",
]


class DegenerateDensityError(ValueError):
    """The R-density is a point mass at R = 0 (t = 0 or eta = 0)."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = achieved


def _as_float(out):
    return float(out) if np.ndim(out) == 0 else out


def kappa(t, gamma):
    """kappa = 1 - exp(-2 gamma t), the accumulated record variance scale."""
    return _as_float(-np.expm1(-2.0 * gamma * np.asarray(t, dtype=float)))


def z_deterministic(t, gamma):
    """z(t) = exp(-2 gamma t) - 1 under feedback that keeps q = 0."""
    return _as_float(np.expm1(-2.0 * gamma * np.asarray(t, dtype=float)))


def L_feedback(t, gamma, eta):
    """Deterministic entropy decay under rapid-purification feedback.

    L(t) = exp(-2 g t) [ 1/2 + (1 - eta)(1 - exp(-2 g t))/2 ], starting from
    the maximally mixed state.
    """
    t = np.asarray(t, dtype=float)
    u = np.exp(-2.0 * gamma * t)
    return _as_float(u * (0.5 + 0.5 * (1.0 - eta) * -np.expm1(-2.0 * gamma * t)))


def time_to_L_feedback(L, gamma, eta):
    """Invert ``L_feedback``: the time at which the entropy reaches L.

    Solves the quadratic in u = exp(-2 g t); the root is evaluated in the
    conjugate form u = 4 L / (2 - eta + sqrt(eta^2 + 8 (1/2 - L)(1 - eta))),
    which is exact at eta = 1 and stable as eta -> 1.
    """
    L = np.asarray(L, dtype=float)
    if np.any((L <= 0.0) | (L > 0.5)):
        raise ValueError("L must lie in (0, 1/2]")
    disc = eta * eta + 8.0 * (0.5 - L) * (1.0 - eta)
    u = 4.0 * L / ((2.0 - eta) + np.sqrt(disc))
    return _as_float(-np.log(u) / (2.0 * gamma))


def evolution_operator(t, R, gamma) -> np.ndarray:
    """Record-conditioned evolution operator, in the (excited, ground) basis.

    V(t, R) = exp(-g t) |e><e| + |g><g| + R |g><e|; lower triangular.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    return np.array([[math.exp(-gamma * t), 0.0], [R, 1.0]], dtype=complex)


def _conditional_entries(t, R, gamma, eta):
    """Unnormalized entries (ee, off, gg) of the R-conditioned state from I/2."""
    f2 = np.exp(-2.0 * gamma * t)
    k = -np.expm1(-2.0 * gamma * t)
    R = np.asarray(R, dtype=float)
    ee = f2 * np.ones_like(R)
    off = R * np.exp(-gamma * t)
    gg = 1.0 + R * R + (1.0 - eta) * k
    return ee, off, gg


def conditional_state(t, R, gamma, eta=1.0, *, r_scaled_coherence: bool = True) -> np.ndarray:
    """State at time t given record weight R, from the maximally mixed state.

    Constructed as the Q-average of V(t, R+Q) (I/2) V(t, R+Q)^dag with Q the
    unobserved channel's Gaussian weight (variance (1-eta) kappa), then
    normalized.  ``r_scaled_coherence=False`` drops the R factor from the
    off-diagonal term; that variant is kept for comparison only and is not a
    valid state at t = 0.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    ee, off, gg = _conditional_entries(t, float(R), gamma, eta)
    if not r_scaled_coherence:
        off = np.exp(-gamma * t)
    trace = ee + gg
    return np.array([[ee, off], [off, gg]], dtype=complex) / trace


def conditional_entropy(t, R, gamma, eta=1.0):
    """Linear entropy 1 - Tr[rho^2] of ``conditional_state`` (array in R)."""
    ee, off, gg = _conditional_entries(t, R, gamma, eta)
    trace = ee + gg
    purity = (ee * ee + gg * gg + 2.0 * off * off) / (trace * trace)
    return 1.0 - purity


def conditional_state_two_noise(rho0: np.ndarray, R, t, gamma, eta,
                                *, method: str = "closed", quad_nodes: int = 41) -> np.ndarray:
    """Average V(t, R+Q) rho0 V^dag over the unobserved weight Q, normalized.

    Q is Gaussian with mean 0 and variance (1 - eta) kappa.  The closed route
    uses E[Q] = 0 and E[Q^2] exactly; ``method="quadrature"`` evaluates the
    same Gaussian average numerically for cross-validation.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ValueError("rho0 must be a 2x2 matrix")
    if t < 0:
        raise ValueError("t must be nonnegative")
    v_q = (1.0 - eta) * float(kappa(t, gamma))
    if method == "closed":
        f = math.exp(-gamma * t)
        ee, eg = rho0[0, 0], rho0[0, 1]
        ge, gg = rho0[1, 0], rho0[1, 1]
        num = np.array(
            [
                [f * f * ee, f * (R * ee + eg)],
                [f * (R * ee + ge), (R * R + v_q) * ee + R * (ge + eg) + gg],
            ],
            dtype=complex,
        )
    elif method == "quadrature":
        if v_q == 0.0:
            qs, ws = np.array([0.0]), np.array([1.0])
        else:
            qs, ws = gauss_hermite_nodes(quad_nodes, v_q)
        num = np.zeros((2, 2), dtype=complex)
        for qv, w in zip(qs, ws):
            v = evolution_operator(t, R + qv, gamma)
            num += w * (v @ rho0 @ v.conj().T)
    else:
        raise ValueError(f"unknown method {method!r}")
    trace = num[0, 0] + num[1, 1]
    return num / trace


def r_variance(t, gamma, eta):
    """Variance eta * kappa of the record weight R at time t."""
    return eta * kappa(t, gamma)


class RecordNoiseSplit:
    """Split of the accumulated noise weight between observed and unobserved
    channels: Var[R] = eta kappa, Var[Q] = (1 - eta) kappa; they sum to kappa."""

    def __init__(self, t: float, gamma: float, eta: float):
        self.t = t
        self.gamma = gamma
        self.eta = eta
        self.kappa = float(kappa(t, gamma))

    @property
    def v_r(self) -> float:
        return self.eta * self.kappa

    @property
    def v_q(self) -> float:
        return (1.0 - self.eta) * self.kappa


class RDensity:
    """Probability density of the record weight R at time t.

    P(R, t) = (2 + R^2 - eta kappa) exp(-R^2 / (2 eta kappa)) /
    sqrt(8 pi eta kappa); it integrates to one because E[R^2] = eta kappa.
    Degenerate when eta kappa = 0.
    """

    def __init__(self, t: float, gamma: float, eta: float = 1.0):
        if t < 0:
            raise ValueError("t must be nonnegative")
        self.t = t
        self.gamma = gamma
        self.eta = eta
        self.kappa = float(kappa(t, gamma))
        if self.variance == 0.0:
            raise DegenerateDensityError(
                "R-density is a point mass at R = 0 when t = 0 or eta = 0"
            )

    @property
    def variance(self) -> float:
        return self.eta * self.kappa

    def pdf(self, R):
        R = np.asarray(R, dtype=float)
        v = self.variance
        weight = (2.0 + R * R - v) / np.sqrt(8.0 * np.pi * v)
        out = weight * np.exp(-R * R / (2.0 * v))
        return float(out) if out.ndim == 0 else out


def r_density(t, R, gamma, eta=1.0):
    """P(R, t); raises DegenerateDensityError when t = 0 or eta = 0."""
    return RDensity(t, gamma, eta).pdf(R)


def gauss_hermite_nodes(n: int, var: float):
    """Nodes and weights for E[f(X)] with X ~ Normal(0, var)."""
    h, w = np.polynomial.hermite.hermgauss(n)
    return h * math.sqrt(2.0 * var), w / math.sqrt(math.pi)


def _mean_entropy_point(t, gamma, eta):
    """Degenerate (point-mass) value: the entropy of the R = 0 state."""
    return float(conditional_entropy(t, 0.0, gamma, eta))


def mean_linear_entropy_nofeedback(t, gamma, eta=1.0, *, abs_tol: float = 1e-9,
                                   nodes: int = 96):
    """R-average of the linear entropy without feedback, <L(t)>.

    Evaluates int (1 - Tr[rho(t,R)^2]) P(R, t) dR by Gauss-Hermite quadrature
    matched to the Gaussian factor of P, doubling the node count as an error
    check, with an adaptive fallback over +-10 standard deviations.  The
    integral has no closed form in elementary terms; t = 0 and eta = 0 are
    point-mass cases returned directly.
    """
    t = float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    v = eta * float(kappa(t, gamma))
    if v < 1e-12:
        # Gaussian width sqrt(v) <= 1e-6: point evaluation is exact to O(v).
        return _mean_entropy_point(t, gamma, eta)

    def gaussian_factor(R):
        # P(R, t) divided by the Normal(0, v) density.
        return 0.5 * (2.0 + R * R - v)

    def entropy_weighted(R):
        return conditional_entropy(t, R, gamma, eta) * gaussian_factor(R)

    xs, ws = gauss_hermite_nodes(nodes, v)
    coarse = float(ws @ entropy_weighted(xs))
    xs2, ws2 = gauss_hermite_nodes(2 * nodes, v)
    fine = float(ws2 @ entropy_weighted(xs2))
    if abs(fine - coarse) <= abs_tol:
        return fine

    def full_integrand(R):
        norm = math.exp(-R * R / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
        return entropy_weighted(R) * norm

    lim = 10.0 * math.sqrt(v)
    value, err = integrate.quad(full_integrand, -lim, lim, epsabs=abs_tol, epsrel=0.0, limit=200)
    if err > 10.0 * abs_tol:
        raise QuadratureError("mean linear entropy quadrature did not converge", achieved=err)
    return value


def wr_mean_time(L, gamma):
    """Mean first-passage time of the aligned-axis protocol at eta = 1.

    <T>(L) = (b / 4 gamma) ln[(1 + b) / (1 - b)] with b = sqrt(1 - 2L),
    evaluated via 1 - b = 2L / (1 + b) so that small L stays accurate.
    """
    L = np.asarray(L, dtype=float)
    if np.any((L <= 0.0) | (L > 0.5)):
        raise ValueError("L must lie in (0, 1/2]")
    b = np.sqrt(1.0 - 2.0 * L)
    out = (b / (4.0 * gamma)) * (2.0 * np.log1p(b) - np.log(2.0 * L))
    return float(out) if out.ndim == 0 else out


def wr_mean_time_asymptote(L, gamma):
    """Small-L limit of ``wr_mean_time``: -ln(L/2) / (4 gamma)."""
    L = np.asarray(L, dtype=float)
    out = -np.log(L / 2.0) / (4.0 * gamma)
    return float(out) if out.ndim == 0 else out


def maximally_mixed() -> np.ndarray:
    return np.eye(2, dtype=complex) / 2.0


def ground_state_matrix() -> np.ndarray:
    return np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def is_state_matrix(m: np.ndarray, tol: float = 1e-12) -> bool:
    """Hermitian, unit trace, positive semidefinite (eigenvalues >= -tol)."""
    m = np.asarray(m)
    if m.shape != (2, 2):
        return False
    if not np.allclose(m, m.conj().T, atol=tol):
        return False
    if abs(m[0, 0].real + m[1, 1].real - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(m).min() >= -tol)
