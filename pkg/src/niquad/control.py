"""Two-loop velocity-free horizontal position controller.

Inner loop: proportional position feedback U = -Kp (xi_h - xi_d),
absorbed into the plant as an acceleration term. Outer loop: first-order
integral resonant controller

    zdot = -Gamma * delta * z + Gamma * xi_h,    u_c = z,

connected in positive feedback (F_h = +z). The controller transfer
matrix (sI + Gamma*Delta)^-1 Gamma is strictly negative imaginary for
any Gamma, delta > 0 with dc gain 1/delta per channel. Stability of the
interconnection requires the sector-bound condition

    delta >= 1 / (gamma * m * min(kp)),    gamma in (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ni_analysis import StateSpace
from .quadmodel import QuadParams

__all__ = [
    "ControllerParams",
    "ControllerState",
    "ValidationResult",
    "ParameterConstraintError",
    "inner_loop_command",
    "sni_controller_derivative",
    "delta_min",
    "validate_params",
    "steady_state_position",
    "closed_loop_axis_matrix",
    "controller_state_space",
    "horizontal_axis_state_space",
    "axis_storage_matrix",
]


class ParameterConstraintError(ValueError):
    """Controller parameters violate the stability constraint."""


@dataclass(frozen=True)
class ControllerParams:
    """Inner-loop gains plus outer-loop (Gamma, delta) and sector constant gamma."""

    kp: tuple[float, float] = (5.0, 5.0)
    gamma_ir: float = 160.0
    delta: float = 0.6
    gamma_sector: float = 0.8

    def __post_init__(self):
        kp = (float(self.kp[0]), float(self.kp[1]))
        if len(tuple(self.kp)) != 2:
            raise ValueError("kp must have exactly two components")
        if not all(math.isfinite(k) and k > 0 for k in kp):
            raise ValueError(f"kp components must be positive, got {kp}")
        if not (math.isfinite(self.gamma_ir) and self.gamma_ir > 0):
            raise ValueError(f"gamma_ir must be positive, got {self.gamma_ir!r}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if not (0.0 < self.gamma_sector < 1.0):
            raise ValueError(f"gamma_sector must lie in (0, 1), got {self.gamma_sector!r}")
        object.__setattr__(self, "kp", kp)


@dataclass(frozen=True)
class ControllerState:
    """Integral resonant controller state (z1, z2)."""

    z1: float = 0.0
    z2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.z1) and math.isfinite(self.z2)):
            raise ValueError("controller state must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2])


@dataclass(frozen=True)
class ValidationResult:
    passed: bool
    delta_min: float
    margin: float


def inner_loop_command(xi_h, xi_d, kp) -> np.ndarray:
    """Proportional acceleration command -Kp (xi_h - xi_d)."""
    xi_h = np.asarray(xi_h, dtype=float)
    xi_d = np.asarray(xi_d, dtype=float)
    kp = np.asarray(kp, dtype=float)
    return -kp * (xi_h - xi_d)


def sni_controller_derivative(cs: ControllerState, xi_h, p: ControllerParams) -> np.ndarray:
    """zdot = -Gamma*delta*z + Gamma*xi_h (output is u_c = z)."""
    xi_h = np.asarray(xi_h, dtype=float)
    gd = p.gamma_ir * p.delta
    return np.array([
        -gd * cs.z1 + p.gamma_ir * xi_h[0],
        -gd * cs.z2 + p.gamma_ir * xi_h[1],
    ])


def delta_min(m: float, kp, gamma_sector: float) -> float:
    """Smallest admissible delta: 1 / (gamma * m * min(kp))."""
    kpmin = min(float(kp[0]), float(kp[1]))
    if not (m > 0 and kpmin > 0 and gamma_sector > 0):
        raise ValueError("delta_min requires positive m, kp and gamma")
    return 1.0 / (gamma_sector * (m * kpmin))


def validate_params(qp: QuadParams, cp: ControllerParams) -> ValidationResult:
    """Check delta >= delta_min (non-strict); margin = delta - delta_min."""
    dmin = delta_min(qp.m, cp.kp, cp.gamma_sector)
    return ValidationResult(passed=cp.delta >= dmin, delta_min=dmin,
                            margin=cp.delta - dmin)


def steady_state_position(f_bar, qp: QuadParams, kp) -> np.ndarray:
    """Equilibrium position under constant horizontal force: F / (m * kp)."""
    f_bar = np.asarray(f_bar, dtype=float)
    kp = np.asarray(kp, dtype=float)
    if np.any(kp <= 0):
        raise ValueError("kp must be positive")
    return f_bar / (qp.m * kp)


def closed_loop_axis_matrix(qp: QuadParams, cp: ControllerParams,
                            axis: str = "x") -> np.ndarray:
    """Per-axis closed-loop matrix over (position, velocity, z).

    Characteristic polynomial:
        s^3 + Gamma*delta*s^2 + kp*s + (kp*Gamma*delta - Gamma/m).
    """
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    kp_axis = cp.kp[0] if axis == "x" else cp.kp[1]
    return np.array([
        [0.0, 1.0, 0.0],
        [-kp_axis, 0.0, 1.0 / qp.m],
        [cp.gamma_ir, 0.0, -cp.gamma_ir * cp.delta],
    ])


def controller_state_space(cp: ControllerParams) -> StateSpace:
    """Two-channel realization of the integral resonant controller."""
    gd = cp.gamma_ir * cp.delta
    return StateSpace(a=-gd * np.eye(2), b=cp.gamma_ir * np.eye(2),
                      c=np.eye(2), d=np.zeros((2, 2)))


def horizontal_axis_state_space(qp: QuadParams, kp_axis: float) -> StateSpace:
    """Single-axis realization of the reshaped subsystem, force in, position out."""
    if kp_axis <= 0:
        raise ValueError("kp_axis must be positive")
    return StateSpace(a=np.array([[0.0, 1.0], [-kp_axis, 0.0]]),
                      b=np.array([[0.0], [1.0 / qp.m]]),
                      c=np.array([[1.0, 0.0]]),
                      d=np.zeros((1, 1)))


def axis_storage_matrix(qp: QuadParams, kp_axis: float) -> np.ndarray:
    """Storage matrix P = diag(m*kp, m) of V = 1/2 x^T P x for one axis."""
    if kp_axis <= 0:
        raise ValueError("kp_axis must be positive")
    return np.diag([qp.m * kp_axis, qp.m])
