"""Executable negative-imaginary (NI) systems analysis.

Frequency-domain classification
    A square LTI system G(s) = C (sI - A)^-1 B + D is negative imaginary
    when j(G(jw) - G*(jw)) >= 0 for all w > 0 (with no pole at the origin
    or in the open right half-plane, and PSD residues at any simple
    imaginary-axis poles), and strictly negative imaginary (SNI) when the
    inequality is strict for all w in (0, inf) and A is Hurwitz. The "for
    all w" quantifier is discretized on a frequency grid; verdicts record
    the grid so failures are reproducible.

Time-domain certificate
    For D = 0, a symmetric P > 0 with P A + A^T P <= 0 certifies the NI
    property. Two couplings between P, B and C are checked:
      * "derivative" (default): P B = A^T C^T, which makes the rate
        dissipation inequality Vdot <= ydot^T u derivable (with V =
        1/2 x^T P x and C B = 0), and which the mass-weighted storage of
        the horizontal subsystem satisfies exactly;
      * "direct": P B = C^T, the classic passivity-style coupling.

Trajectory audit
    A sampled trajectory with storage function V is audited against the
    nonlinear negative imaginary (NNI) inequality Vdot(t) <= ydot(t)^T u(t)
    using second-order finite differences; the integral form
    V(t) <= V(0) + int ydot^T u is accumulated alongside.

All operations are pure functions of their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np

__all__ = [
    "StateSpace",
    "FrequencyGrid",
    "NiVerdict",
    "DissipationReport",
    "ResidueResult",
    "CertificateReport",
    "SectorBoundResult",
    "SingularFrequencyError",
    "NotSimplePoleError",
    "NonuniformSamplingError",
    "default_grid",
    "transfer_eval",
    "dc_gain",
    "ni_frequency_matrix",
    "ni_frequency_test",
    "residue_check",
    "storage_certificate_check",
    "nni_trajectory_audit",
    "sector_bound_check",
    "SNI",
    "NI",
    "NOT_NI",
    "POLE_AT_ORIGIN",
    "UNSTABLE",
]

# classification labels
SNI = "SNI"
NI = "NI"
NOT_NI = "NOT_NI"
POLE_AT_ORIGIN = "POLE_AT_ORIGIN"
UNSTABLE = "UNSTABLE"

# proximity of an eigenvalue of A to the evaluation point / origin / RHP
POLE_TOL = 1e-10
# default eigenvalue tolerance of the frequency test
EIG_TOL = 1e-9


class SingularFrequencyError(ValueError):
    """Requested evaluation frequency collides with a pole of the system."""


class NotSimplePoleError(ValueError):
    """The requested frequency is not a simple imaginary-axis pole of A."""


class NonuniformSamplingError(ValueError):
    """Trajectory audit requires uniformly sampled time stamps."""


@dataclass(frozen=True)
class StateSpace:
    """Real (A, B, C, D) quadruple with a square transfer matrix."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        if c.ndim == 1:
            c = c.reshape(1, -1)
        d = np.atleast_2d(d)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"A must be square, got {a.shape}")
        if b.shape[0] != n:
            raise ValueError(f"B must have {n} rows, got {b.shape}")
        if c.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got {c.shape}")
        m_in, m_out = b.shape[1], c.shape[0]
        if m_in != m_out:
            raise ValueError(f"transfer matrix must be square: {m_in} inputs vs {m_out} outputs")
        if d.shape != (m_out, m_in):
            raise ValueError(f"D must be {m_out}x{m_in}, got {d.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_channels(self) -> int:
        return self.b.shape[1]

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.a)


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive frequencies plus an eigenvalue tolerance."""

    omegas: np.ndarray
    tol: float = EIG_TOL

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        if omegas.ndim != 1 or omegas.size == 0:
            raise ValueError("omegas must be a nonempty 1-d sequence")
        if not np.all(omegas > 0):
            raise ValueError("all grid frequencies must be > 0")
        if not np.all(np.diff(omegas) > 0):
            raise ValueError("grid frequencies must be strictly increasing")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        object.__setattr__(self, "omegas", omegas)


def default_grid(tol: float = EIG_TOL) -> FrequencyGrid:
    """1000 log-spaced points over [1e-3, 1e3] rad/s."""
    return FrequencyGrid(np.logspace(-3.0, 3.0, 1000), tol=tol)


@dataclass(frozen=True)
class NiVerdict:
    """Outcome of the frequency-domain classification.

    ``witness`` is the (frequency, eigenvalue) pair of the worst grid
    point and is present exactly when the classification is NOT_NI.
    ``skipped_omegas`` lists grid points dropped for colliding with
    imaginary-axis poles.
    """

    classification: str
    witness: Optional[tuple[float, float]] = None
    min_eig_over_grid: Optional[float] = None
    grid_omegas: Optional[np.ndarray] = None
    skipped_omegas: tuple[float, ...] = ()

    def __post_init__(self):
        if (self.witness is not None) != (self.classification == NOT_NI):
            raise ValueError("witness must be present iff classification is NOT_NI")

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "witness": None if self.witness is None else
                {"omega": self.witness[0], "min_eigenvalue": self.witness[1]},
            "min_eig_over_grid": self.min_eig_over_grid,
            "grid_omegas": None if self.grid_omegas is None else
                [float(w) for w in self.grid_omegas],
            "skipped_omegas": list(self.skipped_omegas),
        }


@dataclass
class DissipationReport:
    """Result of the NNI trajectory audit.

    ``violated`` is True exactly when the signed maximum of the rate
    residual Vdot - ydot^T u exceeds the audit tolerance.
    """

    max_residual: float
    residual_series: np.ndarray
    violated: bool
    tol: float
    max_abs_residual: float
    integral_residual_series: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_integral_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "max_abs_residual": self.max_abs_residual,
            "violated": self.violated,
            "tol": self.tol,
            "residual_series": [float(r) for r in self.residual_series],
            "integral_residual_series": [float(r) for r in self.integral_residual_series],
            "max_integral_residual": self.max_integral_residual,
        }


@dataclass(frozen=True)
class ResidueResult:
    """Residue matrix at a simple imaginary-axis pole plus its PSD verdict."""

    k0: np.ndarray
    min_eigenvalue: float
    psd: bool


@dataclass(frozen=True)
class CertificateReport:
    """Residuals of the matrix certificate P > 0, PA + A^T P <= 0, PB coupling."""

    passed: bool
    coupling: str
    min_eig_p: float
    max_eig_lyapunov: float
    coupling_residual: float
    tol: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "coupling": self.coupling,
            "min_eig_p": self.min_eig_p,
            "max_eig_lyapunov": self.max_eig_lyapunov,
            "coupling_residual": self.coupling_residual,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class SectorBoundResult:
    """Worst steady-state gain ratio over the sampled inputs."""

    passed: bool
    worst_ratio: float
    positivity_ok: bool


def transfer_eval(ss: StateSpace, omega: float) -> np.ndarray:
    """Evaluate G(j*omega) = C (j*omega*I - A)^-1 B + D by linear solve.

    Raises SingularFrequencyError when j*omega lies within POLE_TOL of an
    eigenvalue of A. ``omega = 0`` is allowed (dc evaluation) as long as A
    is nonsingular.
    """
    omega = float(omega)
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    poles = ss.poles()
    if np.min(np.abs(poles - 1j * omega)) < POLE_TOL:
        raise SingularFrequencyError(
            f"omega = {omega:g} is within {POLE_TOL:g} of a pole of the system")
    n = ss.n_states
    shifted = 1j * omega * np.eye(n) - ss.a
    return ss.c @ np.linalg.solve(shifted, ss.b) + ss.d


def dc_gain(ss: StateSpace) -> np.ndarray:
    """Steady-state gain D - C A^-1 B (A must be nonsingular)."""
    return ss.d - ss.c @ np.linalg.solve(ss.a, ss.b)


def ni_frequency_matrix(ss: StateSpace, omega: float) -> np.ndarray:
    """M(w) = j (G(jw) - G*(jw)); Hermitian for every real system."""
    g = transfer_eval(ss, omega)
    return 1j * (g - g.conj().T)


def ni_frequency_test(ss: StateSpace, grid: FrequencyGrid | None = None) -> NiVerdict:
    """Classify the system as SNI / NI / NOT_NI / POLE_AT_ORIGIN / UNSTABLE.

    The minimum eigenvalue of M(w) = j(G - G*) is scanned over the grid.
    SNI additionally requires A Hurwitz; NI tolerates imaginary-axis poles
    (whose residues are checked separately by ``residue_check``). Grid
    points within POLE_TOL of an imaginary-axis pole are skipped and
    recorded in the verdict.
    """
    if grid is None:
        grid = default_grid()
    poles = ss.poles()
    if np.min(np.abs(poles)) < POLE_TOL:
        return NiVerdict(POLE_AT_ORIGIN, grid_omegas=grid.omegas)
    if np.max(poles.real) > POLE_TOL:
        return NiVerdict(UNSTABLE, grid_omegas=grid.omegas)
    hurwitz = np.max(poles.real) < -POLE_TOL

    worst_eig = np.inf
    worst_omega = float(grid.omegas[0])
    skipped: list[float] = []
    n = ss.n_states
    eye = np.eye(n)
    for omega in grid.omegas:
        if np.min(np.abs(poles - 1j * omega)) < POLE_TOL:
            skipped.append(float(omega))
            continue
        g = ss.c @ np.linalg.solve(1j * omega * eye - ss.a, ss.b) + ss.d
        m = 1j * (g - g.conj().T)
        lam = float(np.linalg.eigvalsh(m)[0])
        if lam < worst_eig:
            worst_eig = lam
            worst_omega = float(omega)

    if worst_eig > grid.tol and hurwitz:
        return NiVerdict(SNI, min_eig_over_grid=worst_eig,
                         grid_omegas=grid.omegas, skipped_omegas=tuple(skipped))
    if worst_eig >= -grid.tol:
        return NiVerdict(NI, min_eig_over_grid=worst_eig,
                         grid_omegas=grid.omegas, skipped_omegas=tuple(skipped))
    return NiVerdict(NOT_NI, witness=(worst_omega, worst_eig),
                     min_eig_over_grid=worst_eig,
                     grid_omegas=grid.omegas, skipped_omegas=tuple(skipped))


def residue_check(ss: StateSpace, omega0: float, tol: float = EIG_TOL) -> ResidueResult:
    """Residue matrix K0 = lim_{s -> j w0} (s - j w0) s G(s) at a simple pole.

    The limit is taken numerically on a shrinking radial approach
    s = j w0 + eps with Richardson extrapolation of the O(eps) term.
    Raises NotSimplePoleError unless exactly one eigenvalue of A lies
    near j w0.
    """
    omega0 = float(omega0)
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    poles = ss.poles()
    proximity = max(1e-8, 1e-8 * omega0)
    n_close = int(np.sum(np.abs(poles - 1j * omega0) < proximity))
    if n_close == 0:
        raise NotSimplePoleError(f"no pole of A near j*{omega0:g}")
    if n_close > 1:
        raise NotSimplePoleError(
            f"pole at j*{omega0:g} has multiplicity {n_close} > 1")

    n = ss.n_states
    eye = np.eye(n)

    def f(eps: float) -> np.ndarray:
        s = 1j * omega0 + eps
        g = ss.c @ np.linalg.solve(s * eye - ss.a, ss.b) + ss.d
        return eps * s * g

    eps1, eps2 = 1e-5, 5e-6
    k0 = 2.0 * f(eps2) - f(eps1)  # eliminates the O(eps) term
    herm = 0.5 * (k0 + k0.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    return ResidueResult(k0=k0, min_eigenvalue=min_eig, psd=min_eig >= -tol)


def storage_certificate_check(ss: StateSpace, p: np.ndarray,
                              coupling: Literal["derivative", "direct"] = "derivative",
                              tol: float = 1e-9) -> CertificateReport:
    """Verify the matrix certificate for the NI property of (A, B, C) with D = 0.

    Checks (i) P symmetric with min eigenvalue > tol, (ii) max eigenvalue
    of P A + A^T P <= tol, and (iii) the input/output coupling
    ||P B - A^T C^T|| <= tol ("derivative" mode, default) or
    ||P B - C^T|| <= tol ("direct" mode). Frobenius norms throughout.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    n = ss.n_states
    if p.shape != (n, n):
        raise ValueError(f"P must be {n}x{n}, got {p.shape}")
    if np.any(ss.d != 0.0):
        raise ValueError("certificate requires D = 0")
    if coupling not in ("derivative", "direct"):
        raise ValueError(f"unknown coupling mode {coupling!r}")

    symmetric = np.allclose(p, p.T, rtol=0.0, atol=tol)
    p_sym = 0.5 * (p + p.T)
    min_eig_p = float(np.linalg.eigvalsh(p_sym)[0])
    lyap = p @ ss.a + ss.a.T @ p
    max_eig_lyap = float(np.linalg.eigvalsh(0.5 * (lyap + lyap.T))[-1])
    target = ss.a.T @ ss.c.T if coupling == "derivative" else ss.c.T
    coupling_residual = float(np.linalg.norm(p @ ss.b - target))

    passed = (symmetric and min_eig_p > tol and max_eig_lyap <= tol
              and coupling_residual <= tol)
    return CertificateReport(passed=passed, coupling=coupling,
                             min_eig_p=min_eig_p, max_eig_lyapunov=max_eig_lyap,
                             coupling_residual=coupling_residual, tol=tol)


def _uniform_step(times: np.ndarray) -> float:
    diffs = np.diff(times)
    h = float((times[-1] - times[0]) / (len(times) - 1))
    if h <= 0 or np.max(np.abs(diffs - h)) > 1e-9 * max(h, 1.0):
        raise NonuniformSamplingError("time stamps are not uniformly spaced")
    return h


def _ddt(series: np.ndarray, h: float) -> np.ndarray:
    """Second-order time derivative: central interior, one-sided endpoints."""
    out = np.empty_like(series, dtype=float)
    out[1:-1] = (series[2:] - series[:-2]) / (2.0 * h)
    out[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * h)
    out[-1] = (3.0 * series[-1] - 4.0 * series[-2] + series[-3]) / (2.0 * h)
    return out


def nni_trajectory_audit(times: Sequence[float], states: Sequence,
                         inputs: Sequence, outputs: Sequence,
                         storage: Callable[[np.ndarray], float],
                         tol: float) -> DissipationReport:
    """Audit a sampled trajectory against Vdot <= ydot^T u.

    V is evaluated from ``storage`` at every state sample; Vdot and ydot
    come from second-order finite differences, so on an exact-equality
    trajectory the residual shrinks at O(h^2). The integral form
    V(t) - V(0) - int ydot^T u (trapezoid rule) is reported alongside.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 3:
        raise ValueError("audit needs at least 3 uniformly spaced samples")
    h = _uniform_step(times)

    states = np.asarray(states, dtype=float)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
    n = len(times)
    if states.shape[0] != n or inputs.shape[0] != n or outputs.shape[0] != n:
        raise ValueError("times, states, inputs and outputs must have equal length")

    v = np.array([float(storage(states[k])) for k in range(n)])
    vdot = _ddt(v, h)
    ydot = np.column_stack([_ddt(outputs[:, j], h) for j in range(outputs.shape[1])])
    supply = np.einsum("ij,ij->i", ydot, inputs)
    residual = vdot - supply

    cumulative = np.concatenate(
        ([0.0], np.cumsum(0.5 * h * (supply[1:] + supply[:-1]))))
    integral_residual = v - v[0] - cumulative

    max_residual = float(np.max(residual))
    return DissipationReport(
        max_residual=max_residual,
        residual_series=residual,
        violated=max_residual > tol,
        tol=tol,
        max_abs_residual=float(np.max(np.abs(residual))),
        integral_residual_series=integral_residual,
        max_integral_residual=float(np.max(integral_residual)),
    )


def sector_bound_check(gamma: float, u1_samples: Sequence,
                       plant_ss_map: Callable[[np.ndarray], np.ndarray],
                       ctrl_ss_map: Callable[[np.ndarray], np.ndarray]) -> SectorBoundResult:
    """Steady-state sector bound of the open-loop chain u1 -> y1 -> y2.

    For each constant input sample u1, the plant steady-state map gives
    y1, the controller steady-state map gives y2 = ctrl(y1), and the
    check requires ||y2|| <= gamma ||u1|| together with the inner-product
    positivity y1 . y2 >= 0. Reports the worst ratio ||y2|| / ||u1||.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma!r}")
    worst = 0.0
    positivity_ok = True
    for u1 in u1_samples:
        u1 = np.asarray(u1, dtype=float)
        y1 = np.asarray(plant_ss_map(u1), dtype=float)
        y2 = np.asarray(ctrl_ss_map(y1), dtype=float)
        if float(y1 @ y2) < 0.0:
            positivity_ok = False
        nu = float(np.linalg.norm(u1))
        if nu > 0.0:
            worst = max(worst, float(np.linalg.norm(y2)) / nu)
    return SectorBoundResult(passed=(worst <= gamma) and positivity_ok,
                             worst_ratio=worst, positivity_ok=positivity_ok)
