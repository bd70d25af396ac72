"""Feedback strategies for the monitored qubit.

Three per-step rules are provided:

* ``RapidPhase`` -- steer the local-oscillator phase to theta = arg(y - i x)
  so the monitored quadrature mean q vanishes; entropy then decays
  deterministically.
* ``FixedPhase`` -- hold theta constant (no feedback baseline).
* ``AlignedReduced`` -- the unitary-feedback analogue that keeps the Bloch
  vector on the measurement axis; its dynamics collapse to one equation for
  the axis coordinate x, dx = -(1-eta) gamma x dt + sqrt(2 eta gamma)
  (1 - x^2) dW, which the engine integrates directly in reduced form.

Phase rules are stateless: the per-trajectory "previous theta" memory needed
at the degenerate point x = y = 0 is passed in and returned by value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bloch import ModelParams

__all__ = [
    "RapidPhase",
    "FixedPhase",
    "AlignedReduced",
    "Protocol",
    "theta_rapid",
    "theta_fixed",
    "wr_reduced_fields",
    "parse_protocol",
]


def theta_rapid(x, y, previous_theta):
    """LO phase theta = arg(y - i x), which enforces x cos + y sin = 0.

    At the degenerate point x = y = 0 every phase satisfies the constraint;
    the previous phase is held to avoid discontinuous actuator commands.
    """
    th = np.arctan2(-np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    degenerate = (np.asarray(x) == 0.0) & (np.asarray(y) == 0.0)
    out = np.where(degenerate, previous_theta, th)
    return float(out) if out.ndim == 0 else out


def theta_fixed(theta0: float) -> float:
    """The no-feedback rule: the phase never moves."""
    return theta0


def wr_reduced_fields(x, p: ModelParams):
    """(drift, diffusion) of the aligned-axis reduced equation at x."""
    drift = -(1.0 - p.eta) * p.gamma * x
    diff = math.sqrt(2.0 * p.eta * p.gamma) * (1.0 - x * x)
    return drift, diff


@dataclass(frozen=True)
class RapidPhase:
    kind = "rapid"

    def phases(self, x, y, previous):
        return theta_rapid(x, y, previous)


@dataclass(frozen=True)
class FixedPhase:
    theta0: float = 0.0
    kind = "fixed"

    def phases(self, x, y, previous):
        return np.broadcast_to(np.float64(self.theta0), np.shape(x)).copy() if np.ndim(x) else self.theta0


@dataclass(frozen=True)
class AlignedReduced:
    """Marker for the reduced 1-D aligned-axis dynamics (no phase to steer)."""

    kind = "wr"


Protocol = RapidPhase | FixedPhase | AlignedReduced


def parse_protocol(text: str) -> Protocol:
    """Parse "rapid", "fixed:<theta0>" (or bare "fixed"), or "wr"."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "rapid":
        return RapidPhase()
    if name == "fixed":
        theta0 = 0.0
        if arg:
            try:
                theta0 = float(arg)
            except ValueError:
                raise ValueError(f"invalid fixed-phase angle {arg!r}") from None
        if not math.isfinite(theta0):
            raise ValueError("fixed-phase angle must be finite")
        return FixedPhase(theta0)
    if name == "wr":
        return AlignedReduced()
    raise ValueError(f"unknown protocol {text!r}; expected rapid, fixed:<theta0> or wr")
