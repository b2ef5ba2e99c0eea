"""Command-line front end: JSON config ingestion, subcommands, result emission.

Subcommands
    simulate <config> [--override]      run the configured simulation, write CSV/JSON (+SVG)
    validate-params <config>            print delta_min and margin, exit 0 pass / 1 fail
    check-ni <config>                   classify the controller and certify the plant
    sweep <config> --param P --from A --to B --steps N
                                        grid of runs with a settling-time summary table

Exit status contract: 0 success, 1 constraint/verdict failure, 2 usage or
config error, 3 I/O error. The environment variable NIQUAD_OUTPUT_DIR
redirects relative output paths.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from .control import (ControllerParams, ParameterConstraintError, axis_storage_matrix,
                      controller_state_space, horizontal_axis_state_space,
                      steady_state_position, validate_params)
from .ni_analysis import (SNI, default_grid, ni_frequency_test, sector_bound_check,
                          storage_certificate_check)
from .quadmodel import HorizState, QuadParams
from .simulator import (AttitudeBoundError, NonFiniteError, SimConfig, SimConfigError,
                        TrajectoryLog, simulate_closed_loop, simulate_full_quadrotor)
from .control import ControllerState

__all__ = [
    "RunConfig",
    "ConfigParseError",
    "ConfigValidationError",
    "parse_config",
    "serialize_config",
    "dispatch",
    "main",
]

OUTPUT_DIR_ENV = "NIQUAD_OUTPUT_DIR"
SETTLING_FRACTION = 0.02  # settled once the norm stays below 2% of its initial value


class ConfigParseError(ValueError):
    """Malformed JSON or a key outside the closed schema."""


class ConfigValidationError(ValueError):
    """Schema-valid JSON whose values violate a field invariant."""


@dataclass(frozen=True)
class RunConfig:
    quad: QuadParams = field(default_factory=QuadParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    sim: SimConfig = field(default_factory=SimConfig)
    output_path: str = "trajectory.csv"
    output_format: str = "csv"
    emit_plot: bool = False

    def __post_init__(self):
        if self.output_format not in ("csv", "json"):
            raise ConfigValidationError(
                f"output_format must be 'csv' or 'json', got {self.output_format!r}")
        if not isinstance(self.emit_plot, bool):
            raise ConfigValidationError(f"emit_plot must be a boolean, got {self.emit_plot!r}")


_QUAD_KEYS = ("m", "g", "l", "b", "d", "jx", "jy", "jz", "jr")
_CTRL_KEYS = ("kp", "gamma_ir", "delta", "gamma_sector")
_SIM_KEYS = ("t_final", "dt", "initial_horiz", "initial_ctrl",
             "disturbance", "mode", "log_decimation")
_TOP_KEYS = ("quad", "controller", "sim", "output_path", "output_format", "emit_plot")


def _reject_unknown(mapping: dict, allowed, where: str) -> None:
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigParseError(
            f"unknown key{'s' if len(unknown) > 1 else ''} "
            f"{', '.join(map(repr, unknown))} in {where}; allowed: {', '.join(allowed)}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(f"{where}: expected an integer, got {value!r}")
    return value


def _vector(value, n: int, where: str) -> tuple[float, ...]:
    if not isinstance(value, list) or len(value) != n:
        raise ConfigValidationError(f"{where}: expected a list of {n} numbers, got {value!r}")
    return tuple(_number(v, where) for v in value)


def _section(doc: dict, name: str) -> dict:
    sub = doc.get(name, {})
    if not isinstance(sub, dict):
        raise ConfigValidationError(f"{name}: expected an object, got {sub!r}")
    return sub


def parse_config(text: str) -> RunConfig:
    """Build a RunConfig from a JSON document; missing fields take defaults.

    The schema is closed: any key outside it is rejected. Parse failures
    raise ConfigParseError (with line/column for syntax errors); value
    failures raise ConfigValidationError naming the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigParseError(f"config root must be a JSON object, got {type(doc).__name__}")
    _reject_unknown(doc, _TOP_KEYS, "config root")

    quad_doc = _section(doc, "quad")
    _reject_unknown(quad_doc, _QUAD_KEYS, "quad")
    quad_kwargs = {key: _number(quad_doc[key], f"quad.{key}") for key in quad_doc}
    try:
        quad = QuadParams(**quad_kwargs)
    except ValueError as exc:
        raise ConfigValidationError(f"quad: {exc}") from exc

    ctrl_doc = _section(doc, "controller")
    _reject_unknown(ctrl_doc, _CTRL_KEYS, "controller")
    ctrl_kwargs = {}
    if "kp" in ctrl_doc:
        ctrl_kwargs["kp"] = _vector(ctrl_doc["kp"], 2, "controller.kp")
    for key in ("gamma_ir", "delta", "gamma_sector"):
        if key in ctrl_doc:
            ctrl_kwargs[key] = _number(ctrl_doc[key], f"controller.{key}")
    try:
        controller = ControllerParams(**ctrl_kwargs)
    except ValueError as exc:
        raise ConfigValidationError(f"controller: {exc}") from exc

    sim_doc = _section(doc, "sim")
    _reject_unknown(sim_doc, _SIM_KEYS, "sim")
    sim_kwargs = {}
    for key in ("t_final", "dt"):
        if key in sim_doc:
            sim_kwargs[key] = _number(sim_doc[key], f"sim.{key}")
    if "initial_horiz" in sim_doc:
        sim_kwargs["initial_horiz"] = HorizState(
            *_vector(sim_doc["initial_horiz"], 4, "sim.initial_horiz"))
    if "initial_ctrl" in sim_doc:
        sim_kwargs["initial_ctrl"] = ControllerState(
            *_vector(sim_doc["initial_ctrl"], 2, "sim.initial_ctrl"))
    if "disturbance" in sim_doc and sim_doc["disturbance"] is not None:
        sim_kwargs["disturbance"] = _vector(sim_doc["disturbance"], 2, "sim.disturbance")
    if "mode" in sim_doc:
        mode = sim_doc["mode"]
        if not isinstance(mode, str):
            raise ConfigValidationError(f"sim.mode: expected a string, got {mode!r}")
        sim_kwargs["mode"] = mode
    if "log_decimation" in sim_doc:
        sim_kwargs["log_decimation"] = _integer(sim_doc["log_decimation"], "sim.log_decimation")
    try:
        sim = SimConfig(**sim_kwargs)
    except (SimConfigError, ValueError) as exc:
        raise ConfigValidationError(f"sim: {exc}") from exc

    kwargs = {"quad": quad, "controller": controller, "sim": sim}
    if "output_path" in doc:
        if not isinstance(doc["output_path"], str) or not doc["output_path"]:
            raise ConfigValidationError(
                f"output_path: expected a nonempty string, got {doc['output_path']!r}")
        kwargs["output_path"] = doc["output_path"]
    if "output_format" in doc:
        kwargs["output_format"] = doc["output_format"]
    if "emit_plot" in doc:
        kwargs["emit_plot"] = doc["emit_plot"]
    return RunConfig(**kwargs)


def serialize_config(cfg: RunConfig) -> str:
    """Emit the full explicit JSON document; parse_config round-trips it."""
    doc = {
        "quad": {key: getattr(cfg.quad, key) for key in _QUAD_KEYS},
        "controller": {
            "kp": list(cfg.controller.kp),
            "gamma_ir": cfg.controller.gamma_ir,
            "delta": cfg.controller.delta,
            "gamma_sector": cfg.controller.gamma_sector,
        },
        "sim": {
            "t_final": cfg.sim.t_final,
            "dt": cfg.sim.dt,
            "initial_horiz": list(cfg.sim.initial_horiz.as_array()),
            "initial_ctrl": [cfg.sim.initial_ctrl.z1, cfg.sim.initial_ctrl.z2],
            "disturbance": None if cfg.sim.disturbance is None else list(cfg.sim.disturbance),
            "mode": cfg.sim.mode,
            "log_decimation": cfg.sim.log_decimation,
        },
        "output_path": cfg.output_path,
        "output_format": cfg.output_format,
        "emit_plot": cfg.emit_plot,
    }
    return json.dumps(doc, indent=2)


def _load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _resolve_output(path: str) -> str:
    out_dir = os.environ.get(OUTPUT_DIR_ENV)
    if out_dir and not os.path.isabs(path):
        return os.path.join(out_dir, path)
    return path


def _write_svg_plot(log: TrajectoryLog, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(log.times, log.horiz_states[:, 0], label="x (m)")
    ax.plot(log.times, log.horiz_states[:, 2], label="y (m)")
    ax.axhline(0.0, color="k", linewidth=0.6, alpha=0.4)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("horizontal position (m)")
    ax.set_title("Horizontal position regulation")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _run_simulation(cfg: RunConfig, allow_invalid: bool) -> TrajectoryLog:
    if cfg.sim.mode == "full_quadrotor":
        return simulate_full_quadrotor(cfg.quad, cfg.controller, cfg.sim,
                                       allow_invalid=allow_invalid)
    return simulate_closed_loop(cfg.quad, cfg.controller, cfg.sim,
                                allow_invalid=allow_invalid)


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    log = _run_simulation(cfg, allow_invalid=args.override)
    out_path = _resolve_output(cfg.output_path)
    if cfg.output_format == "json":
        log.write_json(out_path)
    else:
        log.write_csv(out_path)
    print(f"wrote {len(log)} samples to {out_path}")
    if cfg.emit_plot:
        svg_path = os.path.splitext(out_path)[0] + ".svg"
        _write_svg_plot(log, svg_path)
        print(f"wrote plot to {svg_path}")
    final = log.horiz_states[-1]
    print(f"final position ({final[0]:.6g}, {final[2]:.6g}) m, "
          f"|xi_h| = {math.hypot(final[0], final[2]):.6g} m")
    return 0


def _cmd_validate_params(args) -> int:
    cfg = _load_config(args.config)
    result = validate_params(cfg.quad, cfg.controller)
    print(f"delta_min = {result.delta_min:.6g}")
    print(f"delta     = {cfg.controller.delta:.6g}")
    print(f"margin    = {result.margin:.6g}")
    print("PASS" if result.passed else "FAIL")
    return 0 if result.passed else 1


def _cmd_check_ni(args) -> int:
    cfg = _load_config(args.config)
    qp, cp = cfg.quad, cfg.controller

    verdict = ni_frequency_test(controller_state_space(cp), default_grid())
    print(f"controller classification: {verdict.classification}"
          + (f" (min eig over grid = {verdict.min_eig_over_grid:.3e})"
             if verdict.min_eig_over_grid is not None else ""))

    cert_ok = True
    for axis, kp_axis in zip(("x", "y"), cp.kp):
        report = storage_certificate_check(
            horizontal_axis_state_space(qp, kp_axis),
            axis_storage_matrix(qp, kp_axis), coupling="derivative")
        cert_ok &= report.passed
        print(f"plant certificate ({axis} axis): "
              f"{'pass' if report.passed else 'FAIL'} "
              f"(min eig P = {report.min_eig_p:.3e}, "
              f"max eig lyap = {report.max_eig_lyapunov:.3e}, "
              f"coupling residual = {report.coupling_residual:.3e})")

    samples = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.6, 0.8])]
    sector = sector_bound_check(
        cp.gamma_sector, samples,
        lambda u: steady_state_position(u, qp, cp.kp),
        lambda y: y / cp.delta)
    print(f"sector bound: worst ratio {sector.worst_ratio:.4g} "
          f"{'<=' if sector.passed else '>'} gamma = {cp.gamma_sector:g} "
          f"-> {'pass' if sector.passed else 'FAIL'}")

    ok = verdict.classification == SNI and cert_ok
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def _settling_time(log: TrajectoryLog) -> float | None:
    norms = np.hypot(log.horiz_states[:, 0], log.horiz_states[:, 2])
    threshold = SETTLING_FRACTION * norms[0]
    if norms[0] == 0.0:
        return 0.0
    above = np.nonzero(norms > threshold)[0]
    if len(above) == 0:
        return float(log.times[0])
    if above[-1] == len(norms) - 1:
        return None  # never settles within the horizon
    return float(log.times[above[-1] + 1])


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    if args.steps < 1:
        raise ConfigValidationError("--steps must be >= 1")
    values = np.linspace(args.start, args.stop, args.steps)

    print(f"{'value':>12}  {'valid':>5}  {'settling (s)':>12}  {'final |xi_h| (m)':>16}")
    for value in values:
        try:
            controller = _controller_with(cfg.controller, args.param, float(value))
        except ValueError as exc:
            raise ConfigValidationError(str(exc)) from exc
        valid = validate_params(cfg.quad, controller).passed
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            try:
                log = _run_simulation(
                    RunConfig(quad=cfg.quad, controller=controller, sim=cfg.sim,
                              output_path=cfg.output_path,
                              output_format=cfg.output_format, emit_plot=False),
                    allow_invalid=True)
            except (NonFiniteError, AttitudeBoundError):
                print(f"{value:12.6g}  {'yes' if valid else 'no':>5}  {'diverged':>12}  {'-':>16}")
                continue
        settle = _settling_time(log)
        final = log.horiz_states[-1]
        norm = math.hypot(final[0], final[2])
        settle_str = f"{settle:.3f}" if settle is not None else "-"
        print(f"{value:12.6g}  {'yes' if valid else 'no':>5}  {settle_str:>12}  {norm:16.6g}")
    return 0


def _controller_with(cp: ControllerParams, param: str, value: float) -> ControllerParams:
    if param == "delta":
        return ControllerParams(kp=cp.kp, gamma_ir=cp.gamma_ir, delta=value,
                                gamma_sector=cp.gamma_sector)
    if param == "gamma_ir":
        return ControllerParams(kp=cp.kp, gamma_ir=value, delta=cp.delta,
                                gamma_sector=cp.gamma_sector)
    if param == "gamma_sector":
        return ControllerParams(kp=cp.kp, gamma_ir=cp.gamma_ir, delta=cp.delta,
                                gamma_sector=value)
    if param == "kp":
        return ControllerParams(kp=(value, value), gamma_ir=cp.gamma_ir,
                                delta=cp.delta, gamma_sector=cp.gamma_sector)
    raise ValueError(f"unknown sweep parameter {param!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="niquad",
        description="Velocity-free quadrotor horizontal position control toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run the configured simulation and write the log")
    p_sim.add_argument("config", help="path to a JSON config file")
    p_sim.add_argument("--override", action="store_true",
                       help="run even if the stability constraint fails (warning only)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_val = sub.add_parser("validate-params", help="check the stability constraint")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate_params)

    p_ni = sub.add_parser("check-ni", help="classify the controller and certify the plant")
    p_ni.add_argument("config")
    p_ni.set_defaults(func=_cmd_check_ni)

    p_sweep = sub.add_parser("sweep", help="grid of runs over one controller parameter")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True,
                         choices=("delta", "gamma_ir", "gamma_sector", "kp"))
    p_sweep.add_argument("--from", dest="start", type=float, required=True)
    p_sweep.add_argument("--to", dest="stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def dispatch(argv) -> int:
    """Parse arguments, run the subcommand, map failures to exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0
    try:
        return args.func(args)
    except (ConfigParseError, ConfigValidationError, SimConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ParameterConstraintError as exc:
        print(f"constraint violated: {exc}", file=sys.stderr)
        return 1
    except (NonFiniteError, AttitudeBoundError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
