"""Noise correlation functions and dephasing spectra.

Conventions
-----------
The correlation function is the stationary second moment

    Phi(t) = <delta(t) delta(0)> = env(|t|) * exp(1j * Delta * t)

with real envelope ``env`` and spectral center ``Delta``.  It is Hermitian,
``Phi(-t) = conj(Phi(t))``.  The dephasing spectrum and its inverse are

    G(w)   = (2 pi)^-1 * int dt Phi(t) exp(+1j w t)
    Phi(t) = int dw G(w) exp(-1j w t)

With these signs a carrier ``exp(1j Delta t)`` puts the spectral peak at
``w = -Delta``.  Spectrum constructors therefore take the peak position
``center`` and the matching correlation carries ``spectral_center = -center``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (
    InconsistentInputError,
    InvalidInputError,
    InvalidParameterError,
    TruncationError,
)

TWO_PI = 2.0 * np.pi
UNIFORM_RTOL = 1e-9
DECAY_FLOOR = 1e-8


def check_uniform(grid, name="grid", symmetric=False):
    """Validate a strictly increasing uniform grid and return it as an array."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise InvalidInputError(f"{name} must be 1-d with at least two points")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise InvalidInputError(f"{name} must be strictly increasing")
    step = (grid[-1] - grid[0]) / (grid.size - 1)
    if np.max(np.abs(steps - step)) > UNIFORM_RTOL * step * max(1.0, grid.size / 1e3) + 1e-15:
        raise InvalidInputError(f"{name} is not uniform")
    if symmetric and abs(grid[0] + grid[-1]) > UNIFORM_RTOL * max(abs(grid[0]), abs(grid[-1])):
        raise InvalidInputError(f"{name} must be symmetric about 0")
    return grid


def trapezoid_weights(n, h):
    w = np.full(n, float(h))
    w[0] = w[-1] = 0.5 * h
    return w


def frequency_grid(omega_max, n=4096):
    """Uniform frequency grid on ``[-omega_max, omega_max]`` (default 4096 points)."""
    if omega_max <= 0:
        raise InvalidParameterError("omega_max must be positive")
    return np.linspace(-omega_max, omega_max, int(n))


# ----------------------------------------------------------------------------
# correlation functions
# ----------------------------------------------------------------------------

class CorrelationFunction:
    """Base class.  Subclasses implement ``__call__`` (complex Phi at signed lags)."""

    spectral_center = 0.0

    def __call__(self, lag):
        raise NotImplementedError

    def envelope(self, lag):
        """Real envelope evaluated at ``|lag|``."""
        return np.abs(self(np.abs(np.asarray(lag, dtype=float))))

    def variance(self):
        return float(self.envelope(0.0))

    def decay_time(self, rel_floor=DECAY_FLOOR):
        """Lag beyond which the envelope stays below ``rel_floor * env(0)``."""
        return math.inf

    @property
    def is_real(self):
        return self.spectral_center == 0.0

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class LorentzianCorrelation(CorrelationFunction):
    """``Phi(t) = (gamma / t_c) exp(-|t| / t_c) exp(1j * spectral_center * t)``."""

    gamma: float
    t_c: float
    spectral_center: float = 0.0

    def __call__(self, lag):
        lag = np.asarray(lag, dtype=float)
        env = (self.gamma / self.t_c) * np.exp(-np.abs(lag) / self.t_c)
        if self.spectral_center == 0.0:
            return env.astype(complex)
        return env * np.exp(1j * self.spectral_center * lag)

    def envelope(self, lag):
        lag = np.asarray(lag, dtype=float)
        return (self.gamma / self.t_c) * np.exp(-np.abs(lag) / self.t_c)

    def decay_time(self, rel_floor=DECAY_FLOOR):
        if self.gamma == 0.0:
            return 0.0
        return self.t_c * math.log(1.0 / rel_floor)

    def to_dict(self):
        return {"kind": "lorentzian",
                "params": {"gamma": self.gamma, "t_c": self.t_c,
                           "spectral_center": self.spectral_center}}


@dataclass(frozen=True)
class OneOverFCorrelation(CorrelationFunction):
    """Companion of :class:`OneOverFSpectrum`: ``2A [Ci(w_max t) - Ci(w_min t)]``."""

    A: float
    omega_min: float
    omega_max: float

    def __call__(self, lag):
        lag = np.abs(np.asarray(lag, dtype=float))
        out = np.empty_like(lag)
        zero = lag == 0.0
        out[zero] = 2.0 * self.A * math.log(self.omega_max / self.omega_min)
        nz = ~zero
        out[nz] = 2.0 * self.A * (special.sici(self.omega_max * lag[nz])[1]
                                  - special.sici(self.omega_min * lag[nz])[1])
        return out.astype(complex)

    def envelope(self, lag):
        return self(lag).real

    def to_dict(self):
        return {"kind": "one_over_f",
                "params": {"A": self.A, "omega_min": self.omega_min,
                           "omega_max": self.omega_max}}


@dataclass(frozen=True)
class CompositeCorrelation(CorrelationFunction):
    """Weighted sum of correlation functions, each with its own carrier."""

    terms: tuple
    weights: tuple

    def __call__(self, lag):
        lag = np.asarray(lag, dtype=float)
        out = np.zeros(lag.shape, dtype=complex)
        for w, term in zip(self.weights, self.terms):
            out += w * term(lag)
        return out

    @property
    def spectral_center(self):
        # spectral-mass-weighted carrier; mass of each term is its Phi(0)
        mass = np.array([w * term.variance() for w, term in zip(self.weights, self.terms)])
        centers = np.array([term.spectral_center for term in self.terms])
        return float(mass @ centers / mass.sum()) if mass.sum() > 0 else 0.0

    @property
    def is_real(self):
        return all(term.spectral_center == 0.0 for term in self.terms)

    def decay_time(self, rel_floor=DECAY_FLOOR):
        # |sum| <= sum of |terms|: wait until every term is below its share of the floor
        v0 = abs(self.variance())
        if v0 == 0.0:
            return 0.0
        share = rel_floor * v0 / len(self.terms)
        return max(term.decay_time(min(1.0, share / abs(w * term.variance())))
                   for w, term in zip(self.weights, self.terms) if w * term.variance() != 0)

    def to_dict(self):
        return {"kind": "composite",
                "params": {"terms": [t.to_dict() for t in self.terms],
                           "weights": list(self.weights)}}


@dataclass(frozen=True, eq=False)
class TabulatedCorrelation(CorrelationFunction):
    """Complex Phi tabulated on a uniform lag grid starting at 0.

    ``spectral_center`` is the single-carrier summary used by the single-carrier
    code path; the exact path evaluates the tabulated complex values.
    """

    lags: np.ndarray
    values: np.ndarray
    spectral_center: float = 0.0
    envelope_values: np.ndarray = None

    def __post_init__(self):
        lags = check_uniform(self.lags, "lag grid")
        if abs(lags[0]) > 1e-15:
            raise InvalidInputError("lag grid must start at 0")
        values = np.asarray(self.values, dtype=complex)
        if values.shape != lags.shape:
            raise InvalidInputError("lags and values differ in length")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "values", values)
        if self.envelope_values is None:
            object.__setattr__(self, "envelope_values", np.abs(values))
        else:
            object.__setattr__(self, "envelope_values",
                               np.asarray(self.envelope_values, dtype=float))

    def __call__(self, lag):
        lag = np.asarray(lag, dtype=float)
        a = np.abs(lag)
        if np.any(a > self.lags[-1] * (1 + 1e-12)):
            raise InvalidInputError("lag outside the tabulated range")
        out = (np.interp(a, self.lags, self.values.real)
               + 1j * np.interp(a, self.lags, self.values.imag))
        return np.where(lag < 0, np.conj(out), out)

    def envelope(self, lag):
        return np.interp(np.abs(np.asarray(lag, dtype=float)), self.lags, self.envelope_values)

    @property
    def is_real(self):
        return bool(np.all(self.values.imag == 0.0))

    def decay_time(self, rel_floor=DECAY_FLOOR):
        mag = np.abs(self.values)
        above = np.nonzero(mag >= rel_floor * mag[0])[0]
        if mag[0] == 0.0:
            return 0.0
        last = above[-1]
        if last == mag.size - 1:
            return math.inf
        return float(self.lags[last + 1])

    def to_dict(self):
        d = {"kind": "tabulated", "grid": self.lags.tolist(),
             "values": self.values.real.tolist(),
             "spectral_center": self.spectral_center}
        if not self.is_real:
            d["values_imag"] = self.values.imag.tolist()
            d["envelope"] = self.envelope_values.tolist()
        return d


@dataclass(frozen=True)
class ShiftedCorrelation(CorrelationFunction):
    """Envelope of ``base`` carried at frequency ``spectral_center``."""

    base: CorrelationFunction
    spectral_center: float = 0.0

    def __call__(self, lag):
        lag = np.asarray(lag, dtype=float)
        return self.base.envelope(lag) * np.exp(1j * self.spectral_center * lag)

    def envelope(self, lag):
        return self.base.envelope(lag)

    def decay_time(self, rel_floor=DECAY_FLOOR):
        return self.base.decay_time(rel_floor)

    def to_dict(self):
        return {"kind": "shifted",
                "params": {"base": self.base.to_dict(),
                           "spectral_center": self.spectral_center}}


def lorentzian_correlation(gamma, t_c):
    """Resonant single-peak correlation ``(gamma / t_c) exp(-t / t_c)``.

    ``gamma`` is the long-time dephasing rate scale and ``t_c`` the noise
    correlation time.  The spectral center is 0.
    """
    if not gamma > 0 or not t_c > 0:
        raise InvalidParameterError("gamma and t_c must be positive")
    return LorentzianCorrelation(float(gamma), float(t_c), 0.0)


def tabulated_correlation(lags, envelope, spectral_center=0.0):
    """Build a tabulated correlation from a real envelope and a single carrier."""
    lags = np.asarray(lags, dtype=float)
    env = np.asarray(envelope, dtype=float)
    if env.size and env[0] < 0:
        raise InvalidInputError("envelope(0) must be non-negative")
    return TabulatedCorrelation(lags, env * np.exp(1j * spectral_center * lags),
                                float(spectral_center), env)


def shift_center(c, delta):
    """Return ``c`` with its spectral center replaced by ``delta``.

    The envelope is unchanged.  Under the sign convention of this module the
    resulting spectrum peaks at ``-delta``.
    """
    delta = float(delta)
    if isinstance(c, LorentzianCorrelation):
        return LorentzianCorrelation(c.gamma, c.t_c, delta)
    if isinstance(c, ShiftedCorrelation):
        c = c.base
    if delta == 0.0 and c.is_real:
        return c
    return ShiftedCorrelation(c, delta)


# ----------------------------------------------------------------------------
# dephasing spectra
# ----------------------------------------------------------------------------

class DephasingSpectrum:
    """Base class.  ``__call__`` evaluates ``G(w)`` on an array of frequencies."""

    cutoffs = None

    def __call__(self, omega):
        raise NotImplementedError

    def support(self):
        """Closed interval containing the support; infinite ends allowed."""
        return (-math.inf, math.inf)

    def support_intervals(self):
        """Disjoint intervals where G may be nonzero (used for exact cutoffs)."""
        return [self.support()]

    def total_weight(self):
        """``int G dw``, which equals ``Phi(0)``."""
        return sum(integrate.quad(self._scalar, lo, hi, limit=400)[0]
                   for lo, hi in self.support_intervals())

    def centroid(self):
        return _numeric_centroid(self)

    def correlation(self):
        """Closed-form companion correlation, or ``None`` if there is none."""
        return None

    def _scalar(self, w):
        return float(self(np.array([w]))[0])

    def to_dict(self):
        raise NotImplementedError


def _numeric_centroid(s):
    num = den = 0.0
    for lo, hi in s.support_intervals():
        if math.isinf(lo) or math.isinf(hi):
            raise InvalidInputError("numeric centroid needs a bounded support")
        num += integrate.quad(lambda w: w * s._scalar(w), lo, hi, limit=400)[0]
        den += integrate.quad(s._scalar, lo, hi, limit=400)[0]
    if den <= 0:
        raise InvalidInputError("spectrum has empty support")
    return num / den


@dataclass(frozen=True)
class LorentzianSpectrum(DephasingSpectrum):
    """``G(w) = (gamma / pi) / (1 + (w - center)^2 t_c^2)``."""

    gamma: float
    t_c: float
    center: float = 0.0

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (self.gamma / np.pi) / (1.0 + ((omega - self.center) * self.t_c) ** 2)

    def total_weight(self):
        return self.gamma / self.t_c

    def centroid(self):
        return self.center

    def correlation(self):
        return LorentzianCorrelation(self.gamma, self.t_c, -self.center)

    def to_dict(self):
        return {"kind": "lorentzian",
                "params": {"gamma": self.gamma, "t_c": self.t_c, "center": self.center}}


@dataclass(frozen=True)
class OneOverFSpectrum(DephasingSpectrum):
    """``G(w) = A / |w|`` for ``omega_min <= |w| <= omega_max``, zero elsewhere."""

    A: float
    omega_min: float
    omega_max: float

    @property
    def cutoffs(self):
        return (self.omega_min, self.omega_max)

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        a = np.abs(omega)
        inside = (a >= self.omega_min) & (a <= self.omega_max)
        out = np.zeros_like(a)
        out[inside] = self.A / a[inside]
        return out

    def support(self):
        return (-self.omega_max, self.omega_max)

    def support_intervals(self):
        return [(-self.omega_max, -self.omega_min), (self.omega_min, self.omega_max)]

    def total_weight(self):
        return 2.0 * self.A * math.log(self.omega_max / self.omega_min)

    def centroid(self):
        return 0.0

    def correlation(self):
        return OneOverFCorrelation(self.A, self.omega_min, self.omega_max)

    def to_dict(self):
        return {"kind": "one_over_f",
                "params": {"A": self.A, "omega_min": self.omega_min,
                           "omega_max": self.omega_max}}


@dataclass(frozen=True)
class MultiPeakSpectrum(DephasingSpectrum):
    """Sum of Lorentzian peaks; ``peaks`` holds ``(gamma, center, t_c)`` triples."""

    peaks: tuple

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        out = np.zeros_like(omega)
        for gamma, center, t_c in self.peaks:
            out += (gamma / np.pi) / (1.0 + ((omega - center) * t_c) ** 2)
        return out

    def total_weight(self):
        return sum(g / tc for g, _, tc in self.peaks)

    def centroid(self):
        # principal-value centroid of each Lorentzian is its center
        return sum(g / tc * c for g, c, tc in self.peaks) / self.total_weight()

    def correlation(self):
        terms = tuple(LorentzianCorrelation(g, tc, -c) for g, c, tc in self.peaks)
        return CompositeCorrelation(terms, (1.0,) * len(terms))

    def to_dict(self):
        return {"kind": "multi_peak",
                "params": {"peaks": [{"gamma": g, "center": c, "width": 1.0 / tc}
                                     for g, c, tc in self.peaks]}}


@dataclass(frozen=True)
class ThermalSpectrum(DephasingSpectrum):
    """``(n(w) + 1) G0(w) + n(-w) G0(-w)`` with Bose occupation ``n``."""

    beta: float
    base: DephasingSpectrum

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        a = np.abs(omega)
        out = np.zeros_like(a)
        pos, neg = omega > 0, omega < 0
        with np.errstate(over="ignore"):
            n = 1.0 / np.expm1(self.beta * a[pos | neg])
        g0 = self.base(a[pos | neg])
        # n + 1 == e^{bw} n, so the ratio G(-w)/G(w) is exactly e^{-bw}
        vals = np.where(omega[pos | neg] > 0, (n + 1.0) * g0, n * g0)
        out[pos | neg] = vals
        return out

    @property
    def cutoffs(self):
        return self.base.cutoffs

    def support(self):
        hi = self.base.support()[1]
        return (-hi, hi)

    def support_intervals(self):
        out = []
        for lo, hi in self.base.support_intervals():
            out.append((-hi, -lo))
            out.append((lo, hi))
        return sorted(out)

    def correlation(self):
        return None

    def to_dict(self):
        return {"kind": "thermal",
                "params": {"beta": self.beta, "base": self.base.to_dict()}}


@dataclass(frozen=True, eq=False)
class TabulatedSpectrum(DephasingSpectrum):
    """G sampled on a uniform grid symmetric about 0; zero outside the grid."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        omega = check_uniform(self.omega, "frequency grid", symmetric=True)
        values = np.asarray(self.values, dtype=float)
        if values.shape != omega.shape:
            raise InvalidInputError("omega and values differ in length")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)

    def __call__(self, omega):
        return np.interp(np.asarray(omega, dtype=float), self.omega, self.values,
                         left=0.0, right=0.0)

    def support(self):
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return (0.0, 0.0)
        lo = self.omega[max(nz[0] - 1, 0)]
        hi = self.omega[min(nz[-1] + 1, self.omega.size - 1)]
        return (float(lo), float(hi))

    def total_weight(self):
        return float(np.trapezoid(self.values, self.omega))

    def centroid(self):
        den = self.total_weight()
        if den <= 0:
            raise InvalidInputError("spectrum has empty support")
        return float(np.trapezoid(self.omega * self.values, self.omega)) / den

    def to_dict(self):
        return {"kind": "tabulated", "grid": self.omega.tolist(),
                "values": self.values.tolist()}


def one_over_f_spectrum(A, omega_min, omega_max):
    """Symmetric ``1/|w|`` spectrum between the two cutoffs."""
    if not A > 0:
        raise InvalidParameterError("A must be positive")
    if not 0 < omega_min < omega_max:
        raise InvalidParameterError("need 0 < omega_min < omega_max")
    return OneOverFSpectrum(float(A), float(omega_min), float(omega_max))


def multi_peak_spectrum(peaks):
    """Sum of Lorentzian resonances.

    Parameters
    ----------
    peaks : sequence of (gamma, center, width)
        ``gamma`` is the weight, ``center`` the peak frequency and ``width`` the
        half width ``1 / t_c`` of each peak.
    """
    peaks = list(peaks)
    if not peaks:
        raise InvalidInputError("at least one peak is required")
    out = []
    for gamma, center, width in peaks:
        if not gamma > 0 or not width > 0:
            raise InvalidParameterError("peak weights and widths must be positive")
        out.append((float(gamma), float(center), 1.0 / float(width)))
    return MultiPeakSpectrum(tuple(out))


def lorentzian_spectrum(gamma, t_c, center=0.0):
    if not gamma > 0 or not t_c > 0:
        raise InvalidParameterError("gamma and t_c must be positive")
    return LorentzianSpectrum(float(gamma), float(t_c), float(center))


def thermal_spectrum(g0, beta):
    """Finite-temperature spectrum built from a zero-temperature bath spectrum.

    ``g0`` must vanish for ``w <= 0``.  At ``w = 0`` both terms are set to 0.
    """
    if not beta > 0:
        raise InvalidParameterError("beta must be positive")
    if isinstance(g0, TabulatedSpectrum):
        if np.any(g0.values[g0.omega <= 0] != 0):
            raise InvalidInputError("zero-temperature spectrum must vanish for w <= 0")
    elif g0.support_intervals()[0][0] < 0 or (
            g0.support_intervals()[0][0] == 0 and float(g0(np.array([0.0]))[0]) != 0):
        raise InvalidInputError("zero-temperature spectrum must vanish for w <= 0")
    return ThermalSpectrum(float(beta), g0)


@dataclass(frozen=True)
class PositiveBand(DephasingSpectrum):
    """A spectrum restricted to ``w_lo <= w <= w_hi`` with ``w_lo > 0``.

    Handy as a zero-temperature bath spectrum for :func:`thermal_spectrum`.
    """

    base: DephasingSpectrum
    omega_lo: float
    omega_hi: float

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        inside = (omega >= self.omega_lo) & (omega <= self.omega_hi)
        return np.where(inside, self.base(omega), 0.0)

    def support(self):
        return (self.omega_lo, self.omega_hi)

    def support_intervals(self):
        return [(self.omega_lo, self.omega_hi)]

    @property
    def cutoffs(self):
        return (self.omega_lo, self.omega_hi)

    def to_dict(self):
        return {"kind": "band",
                "params": {"base": self.base.to_dict(), "omega_lo": self.omega_lo,
                           "omega_hi": self.omega_hi}}


# ----------------------------------------------------------------------------
# transforms
# ----------------------------------------------------------------------------

def _lag_window(c, window, rel_floor):
    v0 = c.variance()
    decay = c.decay_time(rel_floor)
    if window is None:
        if math.isinf(decay):
            raise TruncationError("envelope does not decay; pass an explicit window")
        return decay
    if decay <= window:
        return decay
    edge = float(c.envelope(np.array([window]))[0])
    if edge > rel_floor * v0:
        raise TruncationError(
            f"envelope {edge:.3e} at window edge {window} exceeds "
            f"{rel_floor:g} * env(0) = {rel_floor * v0:.3e}")
    return float(window)


def spectrum_from_correlation(c, omega, *, window=None, n_lag=4096,
                              rel_floor=DECAY_FLOOR, chunk=512):
    """Tabulate ``G(w) = (2 pi)^-1 int Phi(t) exp(1j w t) dt`` on ``omega``.

    The lag integral runs over ``[-L, L]`` with ``L`` the smaller of ``window``
    and the envelope decay time, using the trapezoid rule on ``n_lag`` points
    per side and the Hermitian symmetry of Phi.

    Raises
    ------
    TruncationError
        If the envelope is still above ``rel_floor * env(0)`` at the window edge.
    InconsistentInputError
        If the result is negative beyond the quadrature tolerance.
    """
    omega = check_uniform(omega, "frequency grid", symmetric=True)
    v0 = c.variance()
    if v0 == 0.0:
        lags = np.linspace(0.0, 1.0, 8)
        if not np.any(c(lags) != 0):
            return TabulatedSpectrum(omega, np.zeros_like(omega))
    L = _lag_window(c, window, rel_floor)
    t = np.linspace(0.0, L, int(n_lag))
    w = trapezoid_weights(t.size, t[1] - t[0]) * c(t)
    G = np.empty_like(omega)
    for start in range(0, omega.size, chunk):
        sl = slice(start, start + chunk)
        one_sided = np.exp(1j * np.outer(omega[sl], t)) @ w
        # the t < 0 half is the complex conjugate of the t > 0 half
        G[sl] = (2.0 * one_sided.real) / TWO_PI
    tol = quadrature_tolerance(v0, L)
    if G.min() < -tol:
        raise InconsistentInputError(
            f"spectrum negative ({G.min():.3e}) beyond quadrature tolerance {tol:.1e}")
    G = np.where(G < 0, 0.0, G)
    return TabulatedSpectrum(omega, G)


def quadrature_tolerance(variance, window):
    """Absolute tolerance on tabulated G values from a lag window of length ``window``."""
    return 1e-6 * abs(variance) * window / np.pi + 1e-14


def correlation_from_spectrum(s, lags):
    """Invert a spectrum: ``Phi(t) = int G(w) exp(-1j w t) dw`` on ``lags``.

    Tabulated spectra use the trapezoid rule on their own grid; analytic
    spectra use adaptive Fourier quadrature on their support intervals.
    The returned correlation keeps the full complex Phi, with the single-carrier
    ``spectral_center`` set to minus the spectral centroid.
    """
    lags = check_uniform(lags, "lag grid")
    if abs(lags[0]) > 1e-15:
        raise InvalidInputError("lag grid must start at 0")
    weight = s.total_weight()
    if not weight > 0:
        raise InvalidInputError("spectrum has empty support")
    if isinstance(s, TabulatedSpectrum):
        wq = trapezoid_weights(s.omega.size, s.omega[1] - s.omega[0]) * s.values
        values = np.exp(-1j * np.outer(lags, s.omega)) @ wq
    else:
        values = np.array([_fourier_quad(s, t) for t in lags])
    return TabulatedCorrelation(lags, values, -float(s.centroid()))


def _fourier_quad(s, t):
    """``int G(w) exp(-1j w t) dw`` by QUADPACK, interval by interval."""
    re = im = 0.0
    for lo, hi in s.support_intervals():
        if t == 0.0:
            re += _quad_plain(s._scalar, lo, hi)
            continue
        if math.isinf(lo) and math.isinf(hi):
            # fold onto [0, inf) so the oscillatory QAWF rule applies
            even = lambda w: s._scalar(w) + s._scalar(-w)
            odd = lambda w: s._scalar(w) - s._scalar(-w)
            re += integrate.quad(even, 0, np.inf, weight="cos", wvar=t, limlst=200)[0]
            im -= integrate.quad(odd, 0, np.inf, weight="sin", wvar=t, limlst=200)[0]
        elif math.isinf(lo) or math.isinf(hi):
            raise InvalidInputError("half-infinite support is not supported")
        else:
            re += integrate.quad(s._scalar, lo, hi, weight="cos", wvar=t, limit=400)[0]
            im -= integrate.quad(s._scalar, lo, hi, weight="sin", wvar=t, limit=400)[0]
    return re + 1j * im


def _quad_plain(f, lo, hi):
    return integrate.quad(f, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-11)[0]


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------

def spectrum_to_dict(s):
    return s.to_dict()


def spectrum_from_dict(d):
    """Rebuild a spectrum from its JSON record."""
    kind = d.get("kind")
    if kind == "tabulated":
        return TabulatedSpectrum(check_uniform(d["grid"], "grid"), np.asarray(d["values"]))
    p = d.get("params", {})
    if kind == "lorentzian":
        return lorentzian_spectrum(p["gamma"], p["t_c"], p.get("center", 0.0))
    if kind == "one_over_f":
        return one_over_f_spectrum(p["A"], p["omega_min"], p["omega_max"])
    if kind == "multi_peak":
        return multi_peak_spectrum([(q["gamma"], q["center"], q["width"]) for q in p["peaks"]])
    if kind == "thermal":
        return thermal_spectrum(spectrum_from_dict(p["base"]), p["beta"])
    if kind == "band":
        return PositiveBand(spectrum_from_dict(p["base"]), float(p["omega_lo"]),
                            float(p["omega_hi"]))
    raise InvalidInputError(f"unknown spectrum kind {kind!r}")


def correlation_from_dict(d):
    """Rebuild a correlation function from its JSON record."""
    kind = d.get("kind")
    if kind == "tabulated":
        lags = check_uniform(d["grid"], "grid")
        values = np.asarray(d["values"], dtype=float)
        if "values_imag" in d:
            values = values + 1j * np.asarray(d["values_imag"], dtype=float)
        env = d.get("envelope")
        return TabulatedCorrelation(lags, values, float(d.get("spectral_center", 0.0)),
                                    None if env is None else np.asarray(env, dtype=float))
    p = d.get("params", {})
    if kind == "lorentzian":
        c = lorentzian_correlation(p["gamma"], p["t_c"])
        return shift_center(c, p.get("spectral_center", 0.0))
    if kind == "one_over_f":
        return OneOverFCorrelation(float(p["A"]), float(p["omega_min"]), float(p["omega_max"]))
    if kind == "shifted":
        return shift_center(correlation_from_dict(p["base"]), p["spectral_center"])
    if kind == "composite":
        return CompositeCorrelation(tuple(correlation_from_dict(t) for t in p["terms"]),
                                    tuple(float(w) for w in p["weights"]))
    raise InvalidInputError(f"unknown correlation kind {kind!r}")
