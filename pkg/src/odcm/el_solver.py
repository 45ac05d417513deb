"""Energy-constrained optimal modulation by damped fixed-point iteration.

The optimal accumulated phase solves

    phi''(t) = -sqrt(E) Z[t, phi] / D,    D^2 = int_0^T |int_0^t1 Z dt2|^2 dt1
    Z[t, phi] = (1/T) int_0^T env(|t - t1|) sin(phi(t) - phi(t1) + Delta (t - t1)) dt1

with phi(0) = phi'(0) = 0.  Each sweep evaluates the right-hand side on the
current phase, integrates twice and mixes the result into the iterate.  The
first integral ``Omega* = -sqrt(E) I / D`` is kept as the amplitude, so every
undamped update carries exactly the energy E.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .control import (
    ControlField,
    TimeGrid,
    chirp_ansatz,
    dd_sequence,
    energy,
    linear_phase,
    phase_from_amplitude,
    scale_to_energy,
)
from .errors import DegenerateStationaryPointError, InvalidParameterError
from .rate import TimeDomainRate, kernel_matrix

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Numerical settings of :func:`solve_optimal`.

    ``initial_guess`` is a dict with a ``kind`` key (``chirp`` with optional
    ``a``, ``linear_phase`` with optional ``slope``, ``dd`` with ``nu_pulse``)
    or an explicit :class:`ControlField`.  Guesses without an explicit scale
    are rescaled to the target energy.
    """

    grid: TimeGrid
    damping: float = 0.5
    tol_phase: float = 1e-9
    max_iter: int = 3000
    initial_guess: object = dc_field(default_factory=lambda: {"kind": "chirp"})
    denom_floor: float = None
    min_damping: float = 2.0 ** -6
    damping_growth: float = 1.5
    patience: int = 5
    residual_tol: float = None
    single_carrier: bool = False

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise InvalidParameterError("damping must lie in (0, 1]")
        if not self.tol_phase > 0:
            raise InvalidParameterError("tol_phase must be positive")
        if int(self.max_iter) < 1:
            raise InvalidParameterError("max_iter must be >= 1")
        if not self.damping_growth >= 1:
            raise InvalidParameterError("damping_growth must be >= 1")
        if self.denom_floor is not None and not self.denom_floor > 0:
            raise InvalidParameterError("denom_floor must be positive")

    def to_dict(self):
        guess = self.initial_guess
        if isinstance(guess, ControlField):
            guess = {"kind": "explicit"}
        return {"T": self.grid.T, "N": self.grid.N, "damping": self.damping,
                "tol_phase": self.tol_phase, "max_iter": self.max_iter,
                "initial_guess": guess, "denom_floor": self.denom_floor,
                "min_damping": self.min_damping, "damping_growth": self.damping_growth,
                "patience": self.patience, "residual_tol": self.residual_tol,
                "single_carrier": self.single_carrier}


@dataclass
class ELSolution:
    """Result of :func:`solve_optimal`.

    ``converged`` requires both the phase-update tolerance
    (``iteration_converged``) and the residual bound ``residual_tol``; a run
    that settles on a grid too coarse for its solution reports
    ``iteration_converged`` without ``converged``.
    """

    field: ControlField
    iterations: int
    residual: float
    energy_realized: float
    converged: bool
    iteration_converged: bool = None
    residual_tol: float = None
    damping: float = None
    branch: str = "primary"
    last_update: float = None
    rate: float = None
    rate_initial: float = None

    def to_dict(self):
        return {"converged": self.converged, "iterations": self.iterations,
                "residual": self.residual, "energy": self.energy_realized,
                "iteration_converged": self.iteration_converged,
                "residual_tol": self.residual_tol,
                "damping": self.damping, "branch": self.branch,
                "last_update": self.last_update, "R": self.rate,
                "R_initial": self.rate_initial}


def default_denom_floor(c, T):
    return 1e-12 * abs(c.variance()) * T ** 2


def default_residual_tol(c, E, T):
    return 1e-4 * math.sqrt(E) * abs(c.variance()) * T


def _z(kernel, grid, phase):
    e = np.exp(-1j * phase)
    return np.imag(np.conj(e) * (kernel @ (grid.weights * e))) / grid.T


def z_functional(c, phase, grid, single_carrier=False, kernel=None):
    """``Z[t_i, phi]``: time average over t1 of ``env(|t_i - t1|) sin(...)``.

    Uses the exact complex kernel ``Im[exp(1j phi(t)) Phi(t - t1) exp(-1j phi(t1))]``,
    which equals the sine form for a single carrier.
    """
    if kernel is None:
        kernel = kernel_matrix(c, grid, single_carrier)
    return _z(kernel, grid, np.asarray(phase, dtype=float))


def _rhs(kernel, grid, phase, E, floor):
    """Return (Omega*, phi*, D) for one fixed-point sweep."""
    z = _z(kernel, grid, phase)
    first = cumulative_trapezoid(z, dx=grid.h, initial=0.0)
    D = math.sqrt(float(grid.weights @ first ** 2))
    if D < floor:
        raise DegenerateStationaryPointError(
            f"denominator {D:.3e} below floor {floor:.1e}: the phase is a trivial "
            "critical point (Z vanishes, e.g. phi = 0 on resonance); start from a "
            "different initial guess")
    amp = -math.sqrt(E) * first / D
    return amp, cumulative_trapezoid(amp, dx=grid.h, initial=0.0), D


def build_initial_guess(guess, grid, E):
    """Materialize an initial-guess selector as a field."""
    if isinstance(guess, ControlField):
        return guess
    if isinstance(guess, np.ndarray):
        return phase_from_amplitude(guess, grid)
    kind = guess.get("kind", "chirp")
    if kind == "chirp":
        f = chirp_ansatz(guess.get("a", 1.0), grid)
        return f if "a" in guess else scale_to_energy(f, E)
    if kind == "linear_phase":
        f = linear_phase(guess.get("slope", 1.0), grid)
        return f if "slope" in guess else scale_to_energy(f, E)
    if kind == "dd":
        return dd_sequence(E, grid, guess["nu_pulse"])[0]
    if kind == "explicit":
        return phase_from_amplitude(np.asarray(guess["amplitude"], dtype=float), grid)
    raise InvalidParameterError(f"unknown initial guess kind {kind!r}")


def _iterate(kernel, grid, E, cfg, start, floor):
    amp, phase = start.amplitude.copy(), start.phase.copy()
    theta = cfg.damping
    prev = math.inf
    update = math.inf
    streak = 0
    for k in range(1, int(cfg.max_iter) + 1):
        amp_s, phase_s, _ = _rhs(kernel, grid, phase, E, floor)
        update = float(np.max(np.abs(phase_s - phase)))
        if update < cfg.tol_phase:
            return amp_s, phase_s, k, True, theta, update
        if update >= prev:
            theta = max(theta / 2.0, cfg.min_damping)
            streak = 0
        else:
            streak += 1
            if streak >= cfg.patience:
                theta = min(theta * cfg.damping_growth, cfg.damping)
                streak = 0
        amp = (1.0 - theta) * amp + theta * amp_s
        phase = (1.0 - theta) * phase + theta * phase_s
        prev = update
    return amp, phase, int(cfg.max_iter), False, theta, update


def solve_optimal(c, E, cfg):
    """Solve the nonlinear Euler-Lagrange equation for the optimal modulation.

    Parameters
    ----------
    c : CorrelationFunction
    E : float
        Energy budget ``int Omega^2 dt``.
    cfg : SolverConfig

    Returns
    -------
    ELSolution
        ``converged`` is False when ``max_iter`` was exhausted or the residual
        exceeds ``cfg.residual_tol`` (default ``1e-4 sqrt(E) env(0) T``); the
        last iterate and its diagnostics are still returned.

    Notes
    -----
    The damping factor is halved (down to ``cfg.min_damping``) whenever the
    max-norm phase update fails to shrink, and grows again by
    ``cfg.damping_growth`` (up to ``cfg.damping``) after ``cfg.patience``
    consecutive shrinking updates.  If the converged field has a larger
    rate than the initial guess the solve is repeated from the negated guess
    and the better branch is kept.
    """
    if not E > 0:
        raise InvalidParameterError("E must be positive")
    grid = cfg.grid
    kernel = kernel_matrix(c, grid, cfg.single_carrier)
    floor = cfg.denom_floor or default_denom_floor(c, grid.T)
    rate = TimeDomainRate(c, grid, kernel=kernel)
    start = build_initial_guess(cfg.initial_guess, grid, E)
    r_start = rate(start)
    res_tol = cfg.residual_tol or default_residual_tol(c, E, grid.T)

    best = None
    for branch, guess in (("primary", start),
                          ("flipped", ControlField(grid, -start.amplitude, -start.phase))):
        amp, phase, iters, ok, theta, update = _iterate(kernel, grid, E, cfg, guess, floor)
        fld = ControlField(grid, amp, phase)
        res = _residual(kernel, grid, phase, E, floor)
        sol = ELSolution(fld, iters, res, energy(fld), ok and res <= res_tol, ok, res_tol,
                         theta, branch, update, rate(fld), r_start)
        if best is None or (sol.iteration_converged, -sol.rate) > (
                best.iteration_converged, -best.rate):
            best = sol
        if sol.iteration_converged and sol.rate <= r_start * (1 + 1e-12):
            break
        log.info("branch %s: R %.6g vs initial %.6g (converged=%s)",
                 branch, sol.rate, r_start, sol.iteration_converged)
    return best


def _residual(kernel, grid, phase, E, floor):
    z = _z(kernel, grid, phase)
    first = cumulative_trapezoid(z, dx=grid.h, initial=0.0)
    D = math.sqrt(float(grid.weights @ first ** 2))
    if D < floor:
        raise DegenerateStationaryPointError(f"denominator {D:.3e} below floor {floor:.1e}")
    rhs = -math.sqrt(E) * z / D
    phi_dd = (phase[2:] - 2.0 * phase[1:-1] + phase[:-2]) / grid.h ** 2
    return float(np.max(np.abs(phi_dd - rhs[1:-1])))


def el_residual(c, field, E, single_carrier=False):
    """Max-norm residual ``|phi'' + sqrt(E) Z / D|`` over the interior grid points.

    ``phi''`` is the second difference of the phase samples and D is computed
    from the field's own Z.
    """
    grid = field.grid
    kernel = kernel_matrix(c, grid, single_carrier)
    return _residual(kernel, grid, field.phase, E, default_denom_floor(c, grid.T))
