"""Linearized Euler-Lagrange correction around a base modulation.

Writing ``phi = phi0 + nu`` with small ``nu`` and keeping first order gives

    lam nu''(t) + (1/T) int_0^T Q(t, t1) (nu(t) - nu(t1)) dt1 = -C(t)
    Q(t, t1) = env(|t - t1|) cos(phi0(t) - phi0(t1) + Delta (t - t1))
    C(t)     = lam phi0''(t) + Z[t, phi0]

with ``nu(0) = nu'(0) = 0``.  The multiplier ``lam`` is fixed afterwards by the
energy budget of the corrected field.
"""
from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .control import ControlField, energy, phase_from_amplitude
from .el_solver import z_functional
from .errors import (
    BracketFailureError,
    DegenerateFieldError,
    IllPosedError,
    InvalidParameterError,
)
from .rate import TimeDomainRate, kernel_matrix

VALIDITY_LIMIT = 0.3


class LinearizationWarning(UserWarning):
    """The deviation is too large for the first-order expansion to be trusted."""


@dataclass(frozen=True, eq=False)
class Deviation:
    nu: np.ndarray
    lam: float

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.nu)))


@dataclass
class LambdaScan:
    """Energy of the corrected field along a log-spaced scan of ``lam``."""

    lam: np.ndarray
    energy: np.ndarray
    max_nu: np.ndarray

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        buf.write("lambda,energy,max_nu\n")
        for row in zip(self.lam, self.energy, self.max_nu):
            buf.write(",".join(repr(float(x)) for x in row) + "\n")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text


def q_matrix(c, phase, grid, single_carrier=False, kernel=None):
    """``Q(t_i, t_j)`` on the grid as ``Re[exp(1j phi_i) Phi(t_i - t_j) exp(-1j phi_j)]``."""
    if kernel is None:
        kernel = kernel_matrix(c, grid, single_carrier)
    e = np.exp(1j * np.asarray(phase, dtype=float))
    return np.real(e[:, None] * kernel * np.conj(e)[None, :])


def kernel_q(c, phase, grid, i, j):
    """Pointwise ``Q(t_i, t_j) = env(|t_i - t_j|) cos(phi_i - phi_j + Delta (t_i - t_j))``."""
    t = grid.t
    s = t[i] - t[j]
    return float(np.real(np.exp(1j * (phase[i] - phase[j])) * c(np.asarray(s))))


def second_difference(phase, h):
    """Interior second differences, linearly extrapolated to the two ends."""
    phase = np.asarray(phase, dtype=float)
    d2 = np.empty_like(phase)
    d2[1:-1] = (phase[2:] - 2.0 * phase[1:-1] + phase[:-2]) / h ** 2
    d2[0] = 2.0 * d2[1] - d2[2]
    d2[-1] = 2.0 * d2[-2] - d2[-3]
    return d2


def _smooth(x):
    # [1, 2, 1] / 4 at interior points: what a double trapezoid integration
    # turns into when differenced twice
    return 0.25 * x[:-2] + 0.5 * x[1:-1] + 0.25 * x[2:]


def source_c(c, phase, lam, grid, smooth=False, kernel=None):
    """``C = lam phi0'' + Z[., phi0]`` on the grid.

    With ``smooth`` the Z term is averaged with weights [1, 2, 1]/4; this is the
    form that vanishes identically on a converged nonlinear solution, whose
    phase is a double trapezoid integral.  The smoothed variant is only defined
    at interior points; its end values are zero.
    """
    z = z_functional(c, phase, grid, kernel=kernel)
    if not smooth:
        return lam * second_difference(phase, grid.h) + z
    out = np.zeros(grid.N)
    phase = np.asarray(phase, dtype=float)
    out[1:-1] = lam * (phase[2:] - 2.0 * phase[1:-1] + phase[:-2]) / grid.h ** 2 + _smooth(z)
    return out


class LinearizedProblem:
    """Assembled discretization of the linearized equation around one base field.

    Rows 0 and 1 impose ``nu_0 = 0`` and ``nu_1 = -h Omega0(0)``, i.e. the
    corrected phase starts flat, ``phi(0) = phi'(0) = 0``; for a base that
    already starts flat this is ``nu(0) = nu'(0) = 0``.  Row ``i + 1`` for
    ``1 <= i <= N-2`` collocates the equation at ``t_i`` with the
    non-derivative terms averaged over ``i-1, i, i+1`` by [1, 2, 1]/4.
    """

    def __init__(self, c, base, single_carrier=False):
        grid = base.grid
        self.c = c
        self.base = base
        self.grid = grid
        kernel = kernel_matrix(c, grid, single_carrier)
        self._kernel = kernel
        Q = q_matrix(c, base.phase, grid, kernel=kernel)
        w = grid.weights
        B = -(Q * w[None, :]) / grid.T
        B[np.diag_indices(grid.N)] += (Q @ w) / grid.T
        N = grid.N
        self._B = np.zeros((N, N))
        self._D = np.zeros((N, N))
        self._B[0, 0] = 1.0
        self._B[1, 1] = 1.0
        self._B[2:] = 0.25 * B[:-2] + 0.5 * B[1:-1] + 0.25 * B[2:]
        h2 = grid.h ** 2
        rows = np.arange(2, N)
        self._D[rows, rows - 2] = 1.0 / h2
        self._D[rows, rows - 1] = -2.0 / h2
        self._D[rows, rows] = 1.0 / h2
        z = z_functional(c, base.phase, grid, kernel=kernel)
        ph = base.phase
        self._d2phi = np.zeros(N)
        self._d2phi[2:] = (ph[2:] - 2.0 * ph[1:-1] + ph[:-2]) / h2
        self._sz = np.zeros(N)
        self._sz[2:] = _smooth(z)
        self._bc = np.zeros(N)
        self._bc[1] = -grid.h * base.amplitude[0]

    def source(self, lam):
        """Consistent source, one entry per equation row (zeros on the boundary rows)."""
        return lam * self._d2phi + self._sz

    def matrix(self, lam):
        return lam * self._D + self._B

    def solve(self, lam, source=None):
        """Deviation for multiplier ``lam``; ``source`` overrides C on the equation rows."""
        if lam == 0:
            raise InvalidParameterError("lam must be non-zero")
        if source is None:
            rhs = -self.source(lam)
        else:
            rhs = np.zeros(self.grid.N)
            rhs[2:] = -np.asarray(source, dtype=float)[1:-1]
        rhs = rhs + self._bc
        A = self.matrix(lam)
        try:
            lu = scipy.linalg.lu_factor(A, check_finite=False)
        except (ValueError, scipy.linalg.LinAlgError) as exc:
            raise IllPosedError(f"linearized system could not be factorized: {exc}", math.inf)
        if np.any(np.diag(lu[0]) == 0):
            raise IllPosedError("linearized system is singular", math.inf)
        nu = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
        if not np.all(np.isfinite(nu)):
            cond = np.linalg.cond(A)
            raise IllPosedError(f"linearized system is singular (cond ~ {cond:.2e})", cond)
        return Deviation(nu, float(lam))

    def corrected(self, dev):
        """Field with amplitude ``Omega0 + nu'`` and its integrated phase."""
        amp = self.base.amplitude + np.gradient(dev.nu, self.grid.h, edge_order=2)
        return phase_from_amplitude(amp, self.grid)


def _warn_validity(dev):
    if dev.max_abs > VALIDITY_LIMIT:
        warnings.warn(f"max|nu| = {dev.max_abs:.3g} exceeds {VALIDITY_LIMIT}; "
                      "the first-order correction may be inaccurate",
                      LinearizationWarning, stacklevel=3)


def solve_linearized(c, base, lam, source=None, single_carrier=False):
    """Solve the linearized equation around ``base`` for a fixed multiplier.

    Parameters
    ----------
    c : CorrelationFunction
    base : ControlField
        The modulation ``phi0`` to correct.
    lam : float
        Lagrange multiplier (units of time^2); must be non-zero.
    source : ndarray, optional
        Explicit C samples.  By default the consistent source of
        :meth:`LinearizedProblem.source` is used.

    Raises
    ------
    IllPosedError
        If the discretized operator is singular.
    """
    dev = LinearizedProblem(c, base, single_carrier).solve(lam, source)
    _warn_validity(dev)
    return dev


def solve_with_energy(c, base, E, *, per_decade=2, span=1e6, single_carrier=False,
                      problem=None):
    """Correct ``base`` and fix the multiplier so the corrected field has energy E.

    ``lam`` is scanned on a log grid over ``[1/span, span] * env(0) T^2``; each
    sign change of ``energy - E`` is refined with Brent's method and the root
    with the smallest deviation is kept.

    Returns
    -------
    field : ControlField
    deviation : Deviation
    scan : LambdaScan

    Raises
    ------
    BracketFailureError
        If ``energy(lam) - E`` never changes sign; the scan table is attached.
    """
    if not E > 0:
        raise InvalidParameterError("E must be positive")
    prob = problem or LinearizedProblem(c, base, single_carrier)
    lam0 = abs(c.variance()) * base.grid.T ** 2
    if lam0 == 0:
        raise InvalidParameterError("zero correlation: the multiplier scale vanishes")
    decades = math.log10(span)
    lams = lam0 * np.logspace(-decades, decades, int(round(2 * decades * per_decade)) + 1)

    def evaluate(lam):
        dev = prob.solve(lam)
        return energy(prob.corrected(dev)), dev

    energies, max_nu = [], []
    for lam in lams:
        e, dev = evaluate(lam)
        energies.append(e)
        max_nu.append(dev.max_abs)
    scan = LambdaScan(lams, np.array(energies), np.array(max_nu))
    g = scan.energy - E
    brackets = [k for k in range(len(lams) - 1) if np.sign(g[k]) != np.sign(g[k + 1])]
    if not brackets:
        raise BracketFailureError(
            f"energy(lambda) - E has no sign change over lambda in "
            f"[{lams[0]:.3g}, {lams[-1]:.3g}]", scan)

    best = None
    for k in brackets:
        if g[k] == 0:
            lam = lams[k]
        else:
            lam = brentq(lambda x: evaluate(x)[0] - E, lams[k], lams[k + 1],
                         xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
        e, dev = evaluate(lam)
        if best is None or dev.max_abs < best[1].max_abs:
            best = (e, dev)
    dev = best[1]
    _warn_validity(dev)
    return prob.corrected(dev), dev, scan


def apply_positivity(field, E):
    """Clip negative amplitudes to zero and rescale to energy E.

    Non-negative fields that already carry energy E are returned as is.

    Raises
    ------
    DegenerateFieldError
        If nothing is left after clipping.
    """
    if not E > 0:
        raise InvalidParameterError("E must be positive")
    amp = field.amplitude
    if np.all(amp >= 0) and abs(energy(field) - E) <= 1e-12 * E:
        return field
    clipped = np.maximum(amp, 0.0)
    e0 = float(field.grid.weights @ clipped ** 2)
    if e0 == 0:
        raise DegenerateFieldError("amplitude is non-positive everywhere; nothing left after clipping")
    return phase_from_amplitude(clipped * math.sqrt(E / e0), field.grid)


@dataclass
class Refinement:
    field: ControlField
    rate: float
    rate_base: float
    steps: int
    step_sizes: list
    stopped: str

    def to_dict(self):
        return {"R": self.rate, "R_base": self.rate_base, "steps": self.steps,
                "step_sizes": list(self.step_sizes), "stopped": self.stopped}


def refine_linearized(c, base, E, *, positivity=False, max_steps=8, min_step=2.0 ** -7,
                      rate=None, single_carrier=False):
    """Improve ``base`` by repeated linearized corrections with backtracking.

    Each step solves :func:`solve_with_energy` around the current field, then
    tries ``Omega + s nu'`` for ``s = 1, 1/2, ...`` down to ``min_step``; a
    candidate is rescaled to energy E (clipped first when ``positivity``) and
    accepted if it lowers the rate.  The returned rate never exceeds the
    base's (after the base itself is made admissible).

    The backtracking guards against corrections far outside the first-order
    regime, which occur for pulsed bases such as bang-bang trains.
    """
    grid = base.grid
    rate = rate or TimeDomainRate(c, grid, single_carrier)
    cur = apply_positivity(base, E) if positivity else base
    r_cur = r_base = rate(cur)
    sizes = []
    stopped = "max_steps"
    for _ in range(int(max_steps)):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LinearizationWarning)
                _, dev, _ = solve_with_energy(c, cur, E, single_carrier=single_carrier)
        except (BracketFailureError, IllPosedError) as exc:
            stopped = type(exc).__name__
            break
        dnu = np.gradient(dev.nu, grid.h, edge_order=2)
        s, accepted = 1.0, False
        while s >= min_step:
            cand = phase_from_amplitude(cur.amplitude + s * dnu, grid)
            try:
                cand = apply_positivity(cand, E) if positivity else _rescale(cand, E)
            except DegenerateFieldError:
                s /= 2.0
                continue
            r = rate(cand)
            if r < r_cur * (1.0 - 1e-9):
                cur, r_cur, accepted = cand, r, True
                sizes.append(s)
                break
            s /= 2.0
        if not accepted:
            stopped = "no_descent"
            break
    return Refinement(cur, r_cur, r_base, len(sizes), sizes, stopped)


def _rescale(field, E):
    e0 = energy(field)
    if e0 == 0:
        raise DegenerateFieldError("zero field cannot be rescaled")
    return phase_from_amplitude(field.amplitude * math.sqrt(E / e0), field.grid)
