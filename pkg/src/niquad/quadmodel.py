"""Quadrotor rigid-body model and the reshaped horizontal subsystem.

State vector layout (length 12, SI units):

  x[ 0] = x      inertial x position      (m)
  x[ 1] = xdot   x velocity               (m/s)
  x[ 2] = y      inertial y position      (m)
  x[ 3] = ydot   y velocity               (m/s)
  x[ 4] = z      inertial z position      (m)
  x[ 5] = zdot   z velocity               (m/s)
  x[ 6] = phi    roll                     (rad)
  x[ 7] = phidot roll rate                (rad/s)
  x[ 8] = theta  pitch                    (rad)
  x[ 9] = thetadot pitch rate             (rad/s)
  x[10] = psi    yaw                      (rad)
  x[11] = psidot yaw rate                 (rad/s)

Inputs are total thrust u1 (N) and three torque-channel commands u2..u4
that enter the angular accelerations through the arm/inertia scalings.
The vertical acceleration row is ``g - (u1/m) cos(phi) cos(theta)``; the
sign convention of that row is kept verbatim throughout.

The horizontal subsystem with an inner proportional position loop
absorbed as an acceleration term is

    m * xi_h'' + m * Kp * xi_h = F_h,    xi_h = (x, y),

with storage V = 1/2 m ||xi_h'||^2 + 1/2 m xi_h' Kp xi_h (mass-weighted
position term, so dV/dt = xi_h'^T F_h holds exactly along trajectories).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadParams",
    "EulerAngles",
    "State12",
    "ControlInput4",
    "HorizState",
    "rotation_body_to_inertial",
    "euler_rate_map",
    "full_dynamics",
    "reshaped_horizontal_dynamics",
    "storage_value",
]

_HALF_PI = math.pi / 2.0

# |cos(theta)| below this flags the Euler-rate map as near-singular
EULER_RATE_SINGULAR_TOL = 1e-6


@dataclass(frozen=True)
class QuadParams:
    """Physical constants of the vehicle. All strictly positive.

    Defaults describe the small benchtop platform used throughout the
    test suite (0.5 kg, symmetric roll/pitch inertia).
    """

    m: float = 0.5          # mass (kg)
    g: float = 9.81         # gravitational acceleration (m/s^2)
    l: float = 0.23         # arm length (m)
    b: float = 2.92e-6      # thrust coefficient (N s^2)
    d: float = 1.12e-7      # drag coefficient (N m s^2)
    jx: float = 4.85e-3     # roll moment of inertia (kg m^2)
    jy: float = 4.85e-3     # pitch moment of inertia (kg m^2)
    jz: float = 8.81e-3     # yaw moment of inertia (kg m^2)
    jr: float = 3.4e-5      # rotor inertia (kg m^2)

    def __post_init__(self):
        for name in ("m", "g", "l", "b", "d", "jx", "jy", "jz", "jr"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"QuadParams.{name} must be a finite positive number, got {value!r}")

    # inertia couplings of the angular-acceleration rows
    @property
    def a1(self) -> float:
        return (self.jy - self.jz) / self.jx

    @property
    def a2(self) -> float:
        return self.jr / self.jx

    @property
    def a3(self) -> float:
        return (self.jz - self.jx) / self.jy

    @property
    def a4(self) -> float:
        return self.jr / self.jy

    @property
    def a5(self) -> float:
        return (self.jx - self.jy) / self.jz

    # input scalings of the torque channels
    @property
    def b1(self) -> float:
        return self.l / self.jx

    @property
    def b2(self) -> float:
        return self.l / self.jy

    @property
    def b3(self) -> float:
        return 1.0 / self.jz


def _check_angle_bounds(phi: float, theta: float, psi: float, where: str) -> None:
    if not abs(phi) < _HALF_PI:
        raise ValueError(f"{where}: |phi| must be < pi/2, got {phi!r}")
    if not abs(theta) < _HALF_PI:
        raise ValueError(f"{where}: |theta| must be < pi/2, got {theta!r}")
    if not (-math.pi < psi <= math.pi):
        raise ValueError(f"{where}: psi must lie in (-pi, pi], got {psi!r}")


@dataclass(frozen=True)
class EulerAngles:
    """Roll/pitch/yaw with the hard domain restriction enforced at construction."""

    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        _check_angle_bounds(self.phi, self.theta, self.psi, "EulerAngles")


@dataclass(frozen=True)
class State12:
    """Full 12-dimensional state; angle entries must satisfy the Euler bounds."""

    x: float = 0.0
    xdot: float = 0.0
    y: float = 0.0
    ydot: float = 0.0
    z: float = 0.0
    zdot: float = 0.0
    phi: float = 0.0
    phidot: float = 0.0
    theta: float = 0.0
    thetadot: float = 0.0
    psi: float = 0.0
    psidot: float = 0.0

    def __post_init__(self):
        _check_angle_bounds(self.phi, self.theta, self.psi, "State12")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.xdot, self.y, self.ydot, self.z, self.zdot,
                         self.phi, self.phidot, self.theta, self.thetadot,
                         self.psi, self.psidot])

    @classmethod
    def from_array(cls, arr) -> "State12":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (12,):
            raise ValueError(f"State12 expects a length-12 vector, got shape {arr.shape}")
        return cls(*arr.tolist())

    def angles(self) -> EulerAngles:
        return EulerAngles(self.phi, self.theta, self.psi)


@dataclass(frozen=True)
class ControlInput4:
    """Thrust plus three torque-channel commands; thrust is nonnegative."""

    u1: float = 0.0
    u2: float = 0.0
    u3: float = 0.0
    u4: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.u1) and self.u1 >= 0.0):
            raise ValueError(f"ControlInput4.u1 (total thrust) must be >= 0, got {self.u1!r}")


@dataclass(frozen=True)
class HorizState:
    """Horizontal subsystem state (x, xdot, y, ydot)."""

    x1: float = 0.0
    x2: float = 0.0
    x3: float = 0.0
    x4: float = 0.0

    def __post_init__(self):
        for name in ("x1", "x2", "x3", "x4"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"HorizState.{name} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4])

    @classmethod
    def from_array(cls, arr) -> "HorizState":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (4,):
            raise ValueError(f"HorizState expects a length-4 vector, got shape {arr.shape}")
        return cls(*arr.tolist())

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x1, self.x3])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.x2, self.x4])


def rotation_body_to_inertial(eta: EulerAngles) -> np.ndarray:
    """Body-to-inertial rotation matrix (Z-Y-X convention), a member of SO(3)."""
    sphi, cphi = math.sin(eta.phi), math.cos(eta.phi)
    sth, cth = math.sin(eta.theta), math.cos(eta.theta)
    spsi, cpsi = math.sin(eta.psi), math.cos(eta.psi)
    return np.array([
        [cth * cpsi, cpsi * sth * sphi - cphi * spsi, cphi * cpsi * sth + sphi * spsi],
        [cth * spsi, sth * sphi * spsi + cphi * cpsi, cphi * sth * spsi - cpsi * sphi],
        [-sth,       cth * sphi,                      cth * cphi],
    ])


def euler_rate_map(eta: EulerAngles) -> np.ndarray:
    """Map W(eta) from Euler-angle rates to body angular velocity, omega = W @ etadot.

    det W = cos(theta); a RuntimeWarning is emitted when |cos(theta)| drops
    below ``EULER_RATE_SINGULAR_TOL`` (map close to singular).
    """
    sphi, cphi = math.sin(eta.phi), math.cos(eta.phi)
    sth, cth = math.sin(eta.theta), math.cos(eta.theta)
    if abs(cth) < EULER_RATE_SINGULAR_TOL:
        warnings.warn(
            f"euler_rate_map near-singular: |cos(theta)| = {abs(cth):.3e} "
            f"< {EULER_RATE_SINGULAR_TOL:g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return np.array([
        [1.0, 0.0, -sth],
        [0.0, cphi, sphi * cth],
        [0.0, -sphi, cphi * cth],
    ])


def full_dynamics(x: State12, u: ControlInput4, p: QuadParams,
                  omega_bar: float = 0.0) -> np.ndarray:
    """Twelve-row nonlinear vector field of the rigid body.

    ``omega_bar`` is the aggregate rotor speed entering the gyroscopic
    coupling of the roll/pitch rows; it is supplied by the caller (no
    rotor mixer is modelled) and defaults to zero.
    """
    sphi, cphi = math.sin(x.phi), math.cos(x.phi)
    sth, cth = math.sin(x.theta), math.cos(x.theta)
    spsi, cpsi = math.sin(x.psi), math.cos(x.psi)
    u1_over_m = u.u1 / p.m
    return np.array([
        x.xdot,
        -u1_over_m * (sphi * spsi + cphi * sth * cpsi),
        x.ydot,
        u1_over_m * (sphi * cpsi - cphi * sth * spsi),
        x.zdot,
        p.g - u1_over_m * cphi * cth,
        x.phidot,
        x.thetadot * x.psidot * p.a1 - x.thetadot * p.a2 * omega_bar + p.b1 * u.u2,
        x.thetadot,
        x.phidot * x.psidot * p.a3 + x.phidot * p.a4 * omega_bar + p.b2 * u.u3,
        x.psidot,
        x.thetadot * x.phidot * p.a5 + p.b3 * u.u4,
    ])


def _kp_pair(kp) -> tuple[float, float]:
    kpx, kpy = (float(kp[0]), float(kp[1]))
    if not (kpx > 0 and kpy > 0):
        raise ValueError(f"inner-loop gains must be positive, got {(kpx, kpy)}")
    return kpx, kpy


def reshaped_horizontal_dynamics(s: HorizState, f_h, kp, p: QuadParams) -> np.ndarray:
    """Horizontal subsystem with the proportional loop absorbed:
    xdd = Fx/m - kp_x * x,  ydd = Fy/m - kp_y * y."""
    kpx, kpy = _kp_pair(kp)
    fx, fy = float(f_h[0]), float(f_h[1])
    return np.array([
        s.x2,
        fx / p.m - kpx * s.x1,
        s.x4,
        fy / p.m - kpy * s.x3,
    ])


def storage_value(s: HorizState, kp, p: QuadParams, *,
                  mass_weighted: bool = True) -> float:
    """Energy-like storage of the reshaped horizontal subsystem.

    Default (mass_weighted=True):
        V = 1/2 m (x2^2 + x4^2) + 1/2 m (kp_x x1^2 + kp_y x3^2),
    which satisfies dV/dt = velocity . F_h exactly along trajectories of
    ``reshaped_horizontal_dynamics``. With mass_weighted=False the
    position term drops the mass factor (kept for comparison; the exact
    dissipation identity then fails unless m == 1).
    """
    kpx, kpy = _kp_pair(kp)
    kinetic = 0.5 * p.m * (s.x2 * s.x2 + s.x4 * s.x4)
    potential = 0.5 * (kpx * s.x1 * s.x1 + kpy * s.x3 * s.x3)
    if mass_weighted:
        potential *= p.m
    return kinetic + potential
