"""Bloch-vector state and stochastic fields for a homodyne-monitored qubit.

The conditional state of a decaying optical qubit under continuous homodyne
detection is the Bloch vector a = (x, y, z), rho = (I + a.sigma)/2, with the
ground state at (0, 0, -1).  For decay rate gamma, detector efficiency eta
and local-oscillator phase theta, one unit of Wiener noise dW drives

    dx = -gamma x dt + sqrt(2 eta gamma) [(1+z) cos(theta) - x q] dW
    dy = -gamma y dt + sqrt(2 eta gamma) [(1+z) sin(theta) - y q] dW
    dz = -2 gamma (1+z) dt - sqrt(2 eta gamma) (1+z) q dW

with q = x cos(theta) + y sin(theta) the mean of the monitored quadrature.
(The lowering operator behind these fields carries no factor 1/2; the three
equations above are the primitive dynamics of this package and everything
else is kept consistent with them.)

The linear entropy L = (1 - x^2 - y^2 - z^2)/2 measures mixedness (0 for
pure states, 1/2 for I/2).  Ito expansion of L along the fields above gives

    dL = -gamma { 2 L [1 - eta q^2] + (eta - 1) (1+z)^2 } dt
         - sqrt(8 eta gamma) L q dW

which is what ``entropy_increment`` returns.  Choosing theta so that q = 0
cancels the noise in dz and dL simultaneously; that cancellation is the
algebraic core of the rapid-purification feedback rule.

All field functions are pure and accept floats or equal-shaped numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TOL_BALL",
    "ModelParams",
    "BlochState",
    "BlochVelocity",
    "GROUND",
    "MIXED",
    "quadrature_mean",
    "drift_fields",
    "diffusion_fields",
    "drift",
    "diffusion",
    "linear_entropy",
    "entropy_of",
    "entropy_increment",
    "entropy_increment_fields",
    "record_increment",
    "project_to_ball",
    "in_ball",
]

# Bloch vectors may exceed unit norm by at most this much after projection.
TOL_BALL = 1e-9


def in_ball(x, y, z, tol: float = TOL_BALL) -> bool:
    return bool(np.all(x * x + y * y + z * z <= 1.0 + tol))


@dataclass(frozen=True)
class ModelParams:
    """Measurement parameters: decay rate, detector efficiency, LO phase."""

    gamma: float
    eta: float = 1.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError("gamma must be a finite positive rate")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must be in [0,1]")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")


@dataclass(frozen=True)
class BlochState:
    """A qubit state as a real 3-vector inside the unit ball."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not in_ball(self.x, self.y, self.z):
            raise ValueError(
                f"Bloch vector ({self.x}, {self.y}, {self.z}) lies outside "
                f"the unit ball beyond tolerance {TOL_BALL}"
            )

    def norm2(self) -> float:
        return self.x * self.x + self.y * self.y + self.z * self.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class BlochVelocity:
    """Per-unit-dt (drift) or per-unit-dW (diffusion) rates of (x, y, z)."""

    dx: float
    dy: float
    dz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz])


GROUND = BlochState(0.0, 0.0, -1.0)
MIXED = BlochState(0.0, 0.0, 0.0)


def quadrature_mean(x, y, cos_theta, sin_theta):
    """Mean q of the monitored quadrature, q = x cos(theta) + y sin(theta)."""
    return x * cos_theta + y * sin_theta


def drift_fields(x, y, z, gamma):
    """Deterministic (dt) parts of the Bloch equations: (-gx, -gy, -2g(1+z))."""
    return -gamma * x, -gamma * y, -2.0 * gamma * (1.0 + z)


def diffusion_fields(x, y, z, cos_theta, sin_theta, gamma, eta):
    """Noise (dW) parts of the Bloch equations for LO phase theta."""
    amp = math.sqrt(2.0 * eta * gamma)
    q = x * cos_theta + y * sin_theta
    opz = 1.0 + z
    return (
        amp * (opz * cos_theta - x * q),
        amp * (opz * sin_theta - y * q),
        -amp * opz * q,
    )


def drift(state: BlochState, p: ModelParams) -> BlochVelocity:
    """dt-coefficients of the Bloch equations at ``state``."""
    dx, dy, dz = drift_fields(state.x, state.y, state.z, p.gamma)
    return BlochVelocity(dx, dy, dz)


def diffusion(state: BlochState, p: ModelParams) -> BlochVelocity:
    """dW-coefficients of the Bloch equations at ``state`` for phase p.theta."""
    dx, dy, dz = diffusion_fields(
        state.x, state.y, state.z, math.cos(p.theta), math.sin(p.theta), p.gamma, p.eta
    )
    return BlochVelocity(dx, dy, dz)


def entropy_of(x, y, z):
    """Linear entropy (1 - |a|^2)/2 of Bloch components (array friendly)."""
    return 0.5 * (1.0 - x * x - y * y - z * z)


def linear_entropy(state: BlochState) -> float:
    """Linear entropy L = 1 - Tr[rho^2] = (1 - x^2 - y^2 - z^2)/2."""
    return float(entropy_of(state.x, state.y, state.z))


def entropy_increment_fields(x, y, z, cos_theta, sin_theta, gamma, eta):
    """Ito coefficients (drift_L, diff_L) of dL (array friendly).

    These are the exact second-order Ito expansion of L along the Bloch
    fields; see the module docstring for the closed expression.
    """
    q = x * cos_theta + y * sin_theta
    big_l = entropy_of(x, y, z)
    opz = 1.0 + z
    drift_l = -gamma * (2.0 * big_l * (1.0 - eta * q * q) + (eta - 1.0) * opz * opz)
    diff_l = -math.sqrt(8.0 * eta * gamma) * big_l * q
    return drift_l, diff_l


def entropy_increment(state: BlochState, p: ModelParams) -> tuple[float, float]:
    """(drift_L, diff_L) such that dL = drift_L dt + diff_L dW at ``state``."""
    drift_l, diff_l = entropy_increment_fields(
        state.x, state.y, state.z, math.cos(p.theta), math.sin(p.theta), p.gamma, p.eta
    )
    return float(drift_l), float(diff_l)


def record_increment(state: BlochState, p: ModelParams, dW: float, dt: float) -> float:
    """Homodyne record increment dr = q dt + dW / sqrt(8 gamma)."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    q = quadrature_mean(state.x, state.y, math.cos(p.theta), math.sin(p.theta))
    return float(q * dt + dW / math.sqrt(8.0 * p.gamma))


def project_to_ball(x, y, z):
    """Rescale (x, y, z) onto the unit sphere wherever |a| > 1.

    Euler steps can overshoot the ball by O(dt); rescaling preserves the
    direction, which is all any feedback rule keys on.
    """
    n2 = x * x + y * y + z * z
    scale = np.where(n2 > 1.0, 1.0 / np.sqrt(np.maximum(n2, 1.0)), 1.0)
    return x * scale, y * scale, z * scale
