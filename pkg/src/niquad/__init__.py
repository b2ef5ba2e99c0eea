"""Velocity-free quadrotor horizontal position control toolkit.

Subpackages: ``quadmodel`` (rigid-body model and reshaped horizontal
subsystem), ``ni_analysis`` (negative-imaginary frequency tests, matrix
certificates, dissipation audits), ``control`` (two-loop controller and
parameter validation), ``simulator`` (fixed-step RK4 closed-loop runs),
``cli`` (command-line front end).
"""

from .control import (ControllerParams, ControllerState, ParameterConstraintError,
                      ValidationResult, closed_loop_axis_matrix, controller_state_space,
                      delta_min, horizontal_axis_state_space, inner_loop_command,
                      sni_controller_derivative, steady_state_position, validate_params)
from .ni_analysis import (FrequencyGrid, NiVerdict, StateSpace, default_grid,
                          ni_frequency_test, nni_trajectory_audit, residue_check,
                          sector_bound_check, storage_certificate_check, transfer_eval)
from .quadmodel import (ControlInput4, EulerAngles, HorizState, QuadParams, State12,
                        euler_rate_map, full_dynamics, reshaped_horizontal_dynamics,
                        rotation_body_to_inertial, storage_value)
from .simulator import (AttitudeBoundError, NonFiniteError, SimConfig, SimConfigError,
                        TrajectoryLog, audit_dissipation, regulation_sim_config, rk4_step,
                        simulate_closed_loop, simulate_full_quadrotor,
                        thrust_attitude_inversion)

__version__ = "0.1.0"
