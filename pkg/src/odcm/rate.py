"""Average modified dephasing rate, evaluated in the time and frequency domains."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import toeplitz

from .control import energy, epsilon, field_spectrum, zero_field
from .errors import (
    CoverageError,
    DegenerateNormalizationError,
    InvalidInputError,
    InvalidParameterError,
)
from .spectra import check_uniform

TWO_PI = 2.0 * np.pi


def kernel_matrix(c, grid, single_carrier=False):
    """Hermitian matrix ``Phi(t_i - t_j)`` on the time grid.

    With ``single_carrier`` the kernel is rebuilt as ``env(|s|) exp(1j Delta s)``
    from the envelope and spectral center instead of the exact complex Phi.
    """
    t = grid.t
    if single_carrier:
        col = c.envelope(t) * np.exp(1j * c.spectral_center * t)
    else:
        col = np.asarray(c(t), dtype=complex)
    return toeplitz(col, np.conj(col))


def rate_floor(c, T):
    return 1e-12 * abs(c.variance()) * T


class TimeDomainRate:
    """Reusable evaluator of R(T) for one correlation function and grid.

    The triangle ``0 <= t1 <= t <= T`` is integrated with nested trapezoid
    rules; the inner upper limit sits on grid points.
    """

    def __init__(self, c, grid, single_carrier=False, kernel=None):
        self.grid = grid
        self.c = c
        M = kernel if kernel is not None else kernel_matrix(c, grid, single_carrier)
        L = np.tril(M) * grid.h
        L[:, 0] *= 0.5
        L[np.diag_indices(grid.N)] *= 0.5
        L[0, :] = 0.0
        self._inner = L

    def __call__(self, field):
        if field.grid != self.grid:
            raise InvalidInputError("field grid does not match the evaluator grid")
        e = epsilon(field)
        inner = self._inner @ e
        return float(2.0 / self.grid.T * np.real(self.grid.weights @ (np.conj(e) * inner)))


def rate_time_domain(c, field, single_carrier=False):
    """``R(T) = (2/T) Re int_0^T dt int_0^t dt1 Phi(t - t1) eps*(t) eps(t1)``.

    For a single carrier this is the familiar cosine form
    ``(2/T) int int env(t - t1) cos(phi(t) - phi(t1) + Delta (t - t1))``.
    """
    return TimeDomainRate(c, field.grid, single_carrier)(field)


def rate_freq_domain(s, F_T, omega, coverage_tol=1e-3):
    """``R = 2 pi int G(w) F_T(w) dw`` by the trapezoid rule on ``omega``.

    Spectra with hard cutoffs are integrated interval by interval, with the
    cutoffs inserted as nodes (F_T interpolated linearly there), so the jumps
    of G do not degrade the quadrature order.

    Raises
    ------
    CoverageError
        If ``omega`` misses part of a bounded support, or an unbounded
        spectrum is still above ``coverage_tol * max G`` at the grid edges.
    """
    omega = check_uniform(omega, "frequency grid", symmetric=True)
    F_T = np.asarray(F_T, dtype=float)
    if F_T.shape != omega.shape:
        raise InvalidInputError("F_T and omega differ in length")
    intervals = s.support_intervals()
    bounded = all(math.isfinite(lo) and math.isfinite(hi) for lo, hi in intervals)
    if bounded:
        lo = min(a for a, _ in intervals)
        hi = max(b for _, b in intervals)
        if lo < omega[0] - 1e-12 or hi > omega[-1] + 1e-12:
            raise CoverageError(
                f"support [{lo}, {hi}] exceeds grid [{omega[0]}, {omega[-1]}]")
        total = 0.0
        for a, b in intervals:
            inside = (omega > a) & (omega < b)
            w = np.concatenate(([a], omega[inside], [b]))
            f = np.concatenate(([np.interp(a, omega, F_T)], F_T[inside],
                                [np.interp(b, omega, F_T)]))
            total += np.trapezoid(_eval_inside(s, w, a, b) * f, w)
        return float(TWO_PI * total)
    G = s(omega)
    gmax = G.max() if G.size else 0.0
    if gmax > 0 and max(G[0], G[-1]) > coverage_tol * gmax:
        raise CoverageError(
            f"spectrum at grid edge is {max(G[0], G[-1]) / gmax:.2e} of its peak "
            f"(> {coverage_tol:g}); widen the frequency grid")
    return float(TWO_PI * np.trapezoid(G * F_T, omega))


def _eval_inside(s, w, a, b):
    # evaluate endpoints a hair inside so one-sided limits are used at jumps
    w = w.copy()
    span = b - a
    w[0] = a + 1e-12 * span
    w[-1] = b - 1e-12 * span
    return s(w)


def fidelity(R, T, alpha=1.0):
    """Average fidelity ``1 - alpha R T`` clamped to [0, 1].

    Returns ``(value, clamped)``; ``clamped`` flags that the linear formula left
    its range of validity.
    """
    if not 0 < alpha <= 1:
        raise InvalidParameterError("alpha must lie in (0, 1]")
    if T < 0:
        raise InvalidParameterError("T must be non-negative")
    raw = 1.0 - alpha * R * T
    value = min(1.0, max(0.0, raw))
    return value, value != raw


def normalized_rate(c, field, single_carrier=False):
    """R of ``field`` divided by R of the zero field on the same grid."""
    ev = TimeDomainRate(c, field.grid, single_carrier)
    r0 = ev(zero_field(field.grid))
    if abs(r0) <= rate_floor(c, field.grid.T):
        raise DegenerateNormalizationError(f"unmodulated rate {r0:.3e} below the floor")
    return ev(field) / r0


@dataclass
class RateReport:
    R_time: float
    R_freq: float
    T: float
    energy: float
    alpha: float
    fidelity: float
    fidelity_clamped: bool = False
    normalized: float = None

    @property
    def route_gap(self):
        return abs(self.R_time - self.R_freq) / max(abs(self.R_time), 1e-300)

    def to_dict(self):
        d = asdict(self)
        d.pop("fidelity_clamped")
        d["fidelity_clamped"] = self.fidelity_clamped
        return d


def rate_report(c, s, field, omega, alpha=1.0, R_unmodulated=None):
    """Evaluate both routes for ``field`` and collect them with the fidelity."""
    r_t = rate_time_domain(c, field)
    r_f = rate_freq_domain(s, field_spectrum(field, omega), omega)
    fid, clamped = fidelity(max(r_t, 0.0), field.grid.T, alpha)
    norm = None if R_unmodulated is None else r_t / R_unmodulated
    return RateReport(r_t, r_f, field.grid.T, energy(field), alpha, fid, clamped, norm)
