"""Deterministic fixed-step simulation of the closed-loop position system.

Two modes:

* ``horizontal_pointmass`` integrates the 6-state interconnection of the
  reshaped horizontal subsystem and the integral resonant controller,

      xi_h'' = -Kp xi_h + (z + w) / m,      z' = -Gamma delta z + Gamma xi_h,

  with optional constant disturbance force w.

* ``full_quadrotor`` integrates the translational rows of the full
  rigid-body vector field. The commanded horizontal force (controller
  output plus disturbance) is realized by an idealized attitude: at every
  vector-field evaluation the thrust/roll/pitch triple solving the force
  rows is recomputed (``thrust_attitude_inversion``) and applied
  instantaneously, with total thrust chosen to balance gravity exactly.

Integration is classical fixed-step RK4. Identical configurations produce
bit-identical trajectory logs.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ni_analysis
from .control import ControllerParams, ControllerState, ParameterConstraintError, validate_params
from .ni_analysis import DissipationReport
from .quadmodel import ControlInput4, HorizState, QuadParams, State12, full_dynamics, storage_value

__all__ = [
    "SimConfig",
    "TrajectoryLog",
    "NonFiniteError",
    "AttitudeBoundError",
    "SimConfigError",
    "rk4_step",
    "simulate_closed_loop",
    "simulate_full_quadrotor",
    "thrust_attitude_inversion",
    "audit_dissipation",
    "regulation_sim_config",
    "CSV_HEADER",
    "MODES",
]

CSV_HEADER = "t,x,xdot,y,ydot,z1,z2,Fx,Fy,V"
MODES = ("horizontal_pointmass", "full_quadrotor")

# commanded roll/pitch must stay this far inside the +-pi/2 box
ATTITUDE_MARGIN = 0.01


class NonFiniteError(ArithmeticError):
    """An integrator stage produced a non-finite value."""


class AttitudeBoundError(ValueError):
    """Commanded horizontal force is not realizable by a small-tilt attitude."""


class SimConfigError(ValueError):
    """Simulation configuration violates its invariants."""


@dataclass(frozen=True)
class SimConfig:
    """Run description: horizon, step, initial state, disturbance, mode."""

    t_final: float = 30.0
    dt: float = 1e-3
    initial_horiz: HorizState = field(default_factory=HorizState)
    initial_ctrl: ControllerState = field(default_factory=ControllerState)
    disturbance: Optional[tuple[float, float]] = None
    mode: str = "horizontal_pointmass"
    log_decimation: int = 1

    def __post_init__(self):
        if not (0.0 < self.dt <= self.t_final):
            raise SimConfigError(f"need 0 < dt <= t_final, got dt={self.dt!r}, t_final={self.t_final!r}")
        if self.mode not in MODES:
            raise SimConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (isinstance(self.log_decimation, int) and self.log_decimation >= 1):
            raise SimConfigError(f"log_decimation must be an integer >= 1, got {self.log_decimation!r}")
        if self.disturbance is not None:
            w = tuple(float(v) for v in self.disturbance)
            if len(w) != 2 or not all(math.isfinite(v) for v in w):
                raise SimConfigError(f"disturbance must be a finite 2-vector, got {self.disturbance!r}")
            object.__setattr__(self, "disturbance", w)

    def disturbance_vector(self) -> np.ndarray:
        if self.disturbance is None:
            return np.zeros(2)
        return np.array(self.disturbance, dtype=float)


def regulation_sim_config(**overrides) -> SimConfig:
    """Default regulation run: 30 s at 1 ms from xi_h(0) = (2, -1.5) m at rest."""
    base = dict(t_final=30.0, dt=1e-3,
                initial_horiz=HorizState(2.0, 0.0, -1.5, 0.0),
                initial_ctrl=ControllerState(0.0, 0.0),
                disturbance=None, mode="horizontal_pointmass", log_decimation=1)
    base.update(overrides)
    return SimConfig(**base)


@dataclass
class TrajectoryLog:
    """Decimated time series of states, forces and storage values.

    ``residuals`` stays None until a dissipation audit fills it in.
    """

    times: np.ndarray
    horiz_states: np.ndarray   # (n, 4): x, xdot, y, ydot
    ctrl_states: np.ndarray    # (n, 2): z1, z2
    forces: np.ndarray         # (n, 2): applied horizontal force
    storage: np.ndarray        # (n,): V along the trajectory
    residuals: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.horiz_states) == len(self.ctrl_states)
                == len(self.forces) == len(self.storage) == n):
            raise ValueError("all trajectory series must have equal length")

    def __len__(self) -> int:
        return len(self.times)

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.times,
            "x": self.horiz_states[:, 0],
            "xdot": self.horiz_states[:, 1],
            "y": self.horiz_states[:, 2],
            "ydot": self.horiz_states[:, 3],
            "z1": self.ctrl_states[:, 0],
            "z2": self.ctrl_states[:, 1],
            "Fx": self.forces[:, 0],
            "Fy": self.forces[:, 1],
            "V": self.storage,
        }

    def to_csv(self) -> str:
        cols = self.columns()
        lines = [CSV_HEADER]
        for k in range(len(self)):
            lines.append(",".join(repr(float(cols[name][k])) for name in CSV_HEADER.split(",")))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())

    def to_json(self) -> str:
        cols = self.columns()
        payload = {name: [float(v) for v in series] for name, series in cols.items()}
        return json.dumps(payload)

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray],
             state: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of size dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = np.asarray(f(t, state), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise NonFiniteError(f"stage 1 non-finite at t = {t:g}")
    k2 = np.asarray(f(t + 0.5 * dt, state + 0.5 * dt * k1), dtype=float)
    if not np.all(np.isfinite(k2)):
        raise NonFiniteError(f"stage 2 non-finite at t = {t:g}")
    k3 = np.asarray(f(t + 0.5 * dt, state + 0.5 * dt * k2), dtype=float)
    if not np.all(np.isfinite(k3)):
        raise NonFiniteError(f"stage 3 non-finite at t = {t:g}")
    k4 = np.asarray(f(t + dt, state + dt * k3), dtype=float)
    if not np.all(np.isfinite(k4)):
        raise NonFiniteError(f"stage 4 non-finite at t = {t:g}")
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _gate_params(qp: QuadParams, cp: ControllerParams, allow_invalid: bool) -> None:
    result = validate_params(qp, cp)
    if result.passed:
        return
    message = (f"delta = {cp.delta:g} violates the stability constraint "
               f"delta >= {result.delta_min:g} (margin {result.margin:g})")
    if allow_invalid:
        warnings.warn(message + "; proceeding because allow_invalid is set",
                      RuntimeWarning, stacklevel=3)
    else:
        raise ParameterConstraintError(message)


def _run_fixed_step(f, s0: np.ndarray, sc: SimConfig,
                    kp, qp: QuadParams, w: np.ndarray) -> TrajectoryLog:
    n_steps = int(round(sc.t_final / sc.dt))
    dec = sc.log_decimation
    times, horiz, ctrl, forces, storages = [], [], [], [], []

    def log(k: int, s: np.ndarray) -> None:
        times.append(k * sc.dt)
        horiz.append(s[0:4].copy())
        ctrl.append(s[-2:].copy())
        forces.append(s[-2:] + w)
        storages.append(storage_value(HorizState(*s[0:4]), kp, qp))

    s = s0
    log(0, s)
    for k in range(n_steps):
        s = rk4_step(f, s, k * sc.dt, sc.dt)
        if (k + 1) % dec == 0:
            log(k + 1, s)
    return TrajectoryLog(times=np.array(times),
                         horiz_states=np.array(horiz),
                         ctrl_states=np.array(ctrl),
                         forces=np.array(forces),
                         storage=np.array(storages))


def simulate_closed_loop(qp: QuadParams, cp: ControllerParams, sc: SimConfig,
                         allow_invalid: bool = False) -> TrajectoryLog:
    """Integrate the 6-state point-mass closed loop and log decimated samples.

    Refuses to run when the parameters violate the stability constraint
    unless ``allow_invalid`` is set (then a RuntimeWarning is emitted;
    useful for instability demonstrations).
    """
    if sc.mode != "horizontal_pointmass":
        raise SimConfigError(f"simulate_closed_loop requires horizontal_pointmass mode, got {sc.mode!r}")
    _gate_params(qp, cp, allow_invalid)

    kpx, kpy = cp.kp
    gam, gd = cp.gamma_ir, cp.gamma_ir * cp.delta
    inv_m = 1.0 / qp.m
    a = np.array([
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [-kpx, 0.0, 0.0, 0.0, inv_m, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, -kpy, 0.0, 0.0, inv_m],
        [gam, 0.0, 0.0, 0.0, -gd, 0.0],
        [0.0, 0.0, gam, 0.0, 0.0, -gd],
    ])
    w = sc.disturbance_vector()
    b = np.array([0.0, w[0] * inv_m, 0.0, w[1] * inv_m, 0.0, 0.0])

    def f(_t: float, s: np.ndarray) -> np.ndarray:
        return a @ s + b

    s0 = np.concatenate([sc.initial_horiz.as_array(), sc.initial_ctrl.as_array()])
    return _run_fixed_step(f, s0, sc, cp.kp, qp, w)


def thrust_attitude_inversion(f_h, qp: QuadParams,
                              u1_guess: Optional[float] = None) -> tuple[float, float, float]:
    """Solve for (u1, phi, theta) realizing a horizontal force at constant altitude.

    Solves the force rows -u1 cos(phi) sin(theta) = Fx, u1 sin(phi) = Fy
    together with the vertical balance u1 cos(phi) cos(theta) = m g by a
    fixed-point chain seeded at hover thrust (or at ``u1_guess``). The
    chain converges exactly when the demanded tilt stays below 45 degrees;
    beyond that it leaves the arcsin domain (or fails to contract) and
    AttitudeBoundError is raised. At convergence the returned triple
    reproduces (Fx, Fy) through the force rows to ~1e-12 and balances
    gravity exactly.
    """
    fx, fy = float(f_h[0]), float(f_h[1])
    mg = qp.m * qp.g
    u1 = mg if u1_guess is None else float(u1_guess)
    if u1 <= 0:
        u1 = mg
    phi = theta = 0.0
    converged = False
    for _ in range(500):
        s_phi = fy / u1
        if abs(s_phi) >= 1.0:
            raise AttitudeBoundError(
                f"force ({fx:g}, {fy:g}) N demands sin(phi) = {s_phi:g} outside [-1, 1]")
        phi = math.asin(s_phi)
        s_theta = -fx / (u1 * math.cos(phi))
        if abs(s_theta) >= 1.0:
            raise AttitudeBoundError(
                f"force ({fx:g}, {fy:g}) N demands sin(theta) = {s_theta:g} outside [-1, 1]")
        theta = math.asin(s_theta)
        u1_new = mg / (math.cos(phi) * math.cos(theta))
        if abs(u1_new - u1) <= 1e-13 * u1_new:
            u1 = u1_new
            converged = True
            break
        u1 = u1_new
    if not converged:
        raise AttitudeBoundError(
            f"force ({fx:g}, {fy:g}) N demands a tilt outside the 45-degree validity region")
    # one consistency pass so the returned triple balances gravity exactly
    phi = math.asin(fy / u1)
    theta = math.asin(-fx / (u1 * math.cos(phi)))
    u1 = mg / (math.cos(phi) * math.cos(theta))
    bound = math.pi / 2.0 - ATTITUDE_MARGIN
    if abs(phi) >= bound or abs(theta) >= bound:
        raise AttitudeBoundError(
            f"commanded attitude phi={phi:g}, theta={theta:g} outside +-(pi/2 - {ATTITUDE_MARGIN})")
    return u1, phi, theta


def simulate_full_quadrotor(qp: QuadParams, cp: ControllerParams, sc: SimConfig,
                            allow_invalid: bool = False) -> TrajectoryLog:
    """Integrate the translational rigid-body rows under idealized attitude.

    State: (x, xdot, y, ydot, z, zdot, z1, z2) with yaw fixed at zero. At
    every stage evaluation the controller output plus disturbance is
    converted to (u1, phi, theta) and the full vector field's
    translational rows are evaluated at that attitude, with the inner
    proportional loop added as an acceleration. Altitude stays constant
    by thrust balance. Raises AttitudeBoundError if the commanded force
    ever leaves the attitude validity region.
    """
    if sc.mode != "full_quadrotor":
        raise SimConfigError(f"simulate_full_quadrotor requires full_quadrotor mode, got {sc.mode!r}")
    _gate_params(qp, cp, allow_invalid)

    kpx, kpy = cp.kp
    gam, gd = cp.gamma_ir, cp.gamma_ir * cp.delta
    w = sc.disturbance_vector()
    u1_last = qp.m * qp.g  # warm start for the inversion chain

    def f(_t: float, s: np.ndarray) -> np.ndarray:
        nonlocal u1_last
        fx, fy = s[6] + w[0], s[7] + w[1]
        u1, phi, theta = thrust_attitude_inversion((fx, fy), qp, u1_guess=u1_last)
        u1_last = u1
        st = State12(x=s[0], xdot=s[1], y=s[2], ydot=s[3], z=s[4], zdot=s[5],
                     phi=phi, phidot=0.0, theta=theta, thetadot=0.0,
                     psi=0.0, psidot=0.0)
        deriv = full_dynamics(st, ControlInput4(u1=u1), qp, omega_bar=0.0)
        out = np.empty(8)
        out[0:6] = deriv[0:6]
        out[1] -= kpx * s[0]
        out[3] -= kpy * s[2]
        out[6] = gam * s[0] - gd * s[6]
        out[7] = gam * s[2] - gd * s[7]
        return out

    h0 = sc.initial_horiz
    s0 = np.array([h0.x1, h0.x2, h0.x3, h0.x4, 0.0, 0.0,
                   sc.initial_ctrl.z1, sc.initial_ctrl.z2])
    return _run_fixed_step(f, s0, sc, cp.kp, qp, w)


def audit_dissipation(log: TrajectoryLog, qp: QuadParams, cp: ControllerParams,
                      tol: float, *, mass_weighted: bool = True) -> DissipationReport:
    """Run the NNI dissipation audit on a trajectory log and attach residuals.

    The audited output is the horizontal position and the audited input is
    the logged applied force, so on an exact trajectory the rate residual
    is pure discretization error (O(h^2)).
    """
    positions = log.horiz_states[:, [0, 2]]

    def storage(state: np.ndarray) -> float:
        return storage_value(HorizState(*state), cp.kp, qp, mass_weighted=mass_weighted)

    report = ni_analysis.nni_trajectory_audit(
        times=log.times, states=log.horiz_states, inputs=log.forces,
        outputs=positions, storage=storage, tol=tol)
    log.residuals = report.residual_series
    return report
