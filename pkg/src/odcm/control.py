"""Control fields on a uniform time grid, their phase factor and spectra.

A field is stored amplitude-first: ``amplitude`` holds Omega(t_i) and ``phase``
is its cumulative trapezoid integral, so the samples describe a piecewise
linear Omega(t).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (
    EnergyTooSmallError,
    InfeasibleParametersError,
    InvalidInputError,
    InvalidParameterError,
)
from .spectra import check_uniform, trapezoid_weights

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class TimeGrid:
    """``N`` samples ``t_i = i * T / (N - 1)`` covering ``[0, T]``."""

    T: float
    N: int = 2048

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidParameterError("T must be positive")
        if int(self.N) != self.N or self.N < 16:
            raise InvalidParameterError("N must be an integer >= 16")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self):
        return self.T / (self.N - 1)

    @cached_property
    def t(self):
        t = np.linspace(0.0, self.T, self.N)
        t.flags.writeable = False
        return t

    @cached_property
    def weights(self):
        w = trapezoid_weights(self.N, self.h)
        w.flags.writeable = False
        return w

    def refined(self, factor=2):
        """Grid with the same span and ``factor`` times as many intervals."""
        return TimeGrid(self.T, (self.N - 1) * factor + 1)


@dataclass(frozen=True, eq=False)
class ControlField:
    grid: TimeGrid
    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=float)
        phase = np.asarray(self.phase, dtype=float)
        if amp.shape != (self.grid.N,) or phase.shape != (self.grid.N,):
            raise InvalidInputError("amplitude/phase length does not match the grid")
        amp.flags.writeable = False
        phase.flags.writeable = False
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "phase", phase)

    @property
    def t(self):
        return self.grid.t

    def consistency_error(self):
        """Max deviation of the phase from the cumulative integral of the amplitude."""
        ref = cumulative_trapezoid(self.amplitude, dx=self.grid.h, initial=0.0)
        return float(np.max(np.abs(ref - self.phase)))

    def to_csv(self, path_or_buf=None):
        """Write ``t,omega,phi`` rows at full double precision."""
        buf = io.StringIO()
        buf.write("t,omega,phi\n")
        for row in zip(self.t, self.amplitude, self.phase):
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

    @classmethod
    def from_csv(cls, path_or_buf):
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf) as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["t", "omega", "phi"]:
            raise InvalidInputError("expected header t,omega,phi")
        data = np.array(rows[1:], dtype=float)
        t = check_uniform(data[:, 0], "time grid")
        if t[0] != 0.0:
            raise InvalidInputError("time grid must start at 0")
        return cls(TimeGrid(t[-1], t.size), data[:, 1], data[:, 2])


@dataclass(frozen=True)
class DDParams:
    """Realized bang-bang parameters: ``n`` pulses of width ``nu_pulse`` every ``tau``."""

    n: int
    nu_pulse: float
    tau: float
    energy_requested: float
    energy_realized: float

    def to_dict(self):
        return {"n": self.n, "nu_pulse": self.nu_pulse, "tau": self.tau,
                "energy_requested": self.energy_requested,
                "energy_realized": self.energy_realized}


def phase_from_amplitude(amplitude, grid):
    """Build a field whose phase is the cumulative trapezoid integral of ``amplitude``."""
    amplitude = np.asarray(amplitude, dtype=float)
    if amplitude.shape != (grid.N,):
        raise InvalidInputError(f"expected {grid.N} amplitude samples, got {amplitude.shape}")
    phase = cumulative_trapezoid(amplitude, dx=grid.h, initial=0.0)
    return ControlField(grid, amplitude, phase)


def field_from_phase(phase, grid):
    """Field from phase samples, amplitude by central differences (one-sided at the ends).

    The returned field keeps the given phase, so it satisfies the
    amplitude/phase consistency contract only to O(h^2).
    """
    phase = np.asarray(phase, dtype=float)
    if phase.shape != (grid.N,):
        raise InvalidInputError("phase length does not match the grid")
    return ControlField(grid, np.gradient(phase, grid.h), phase - phase[0])


def zero_field(grid):
    return ControlField(grid, np.zeros(grid.N), np.zeros(grid.N))


def epsilon(field):
    """Modulation phase factor ``exp(-1j * phi(t_i))``."""
    return np.exp(-1j * field.phase)


def finite_time_ft(eps, grid, omega, chunk=256):
    """``(2 pi)^-1/2 * int_0^T eps(t) exp(1j w t) dt`` by the trapezoid rule.

    Direct quadrature at each requested frequency; rows are computed in chunks
    to bound memory.
    """
    eps = np.asarray(eps, dtype=complex)
    omega = np.asarray(omega, dtype=float)
    weighted = grid.weights * eps
    t = grid.t
    out = np.empty(omega.shape, dtype=complex)
    flat = omega.ravel()
    res = out.ravel()
    for start in range(0, flat.size, chunk):
        sl = slice(start, start + chunk)
        res[sl] = np.exp(1j * np.outer(flat[sl], t)) @ weighted
    return res.reshape(omega.shape) / SQRT_2PI


def spectral_intensity(eps_T, T):
    """Normalized spectral modulation intensity ``|eps_T(w)|^2 / T``."""
    if not T > 0:
        raise InvalidParameterError("T must be positive")
    return np.abs(eps_T) ** 2 / T


def field_spectrum(field, omega):
    """Shortcut for ``spectral_intensity(finite_time_ft(epsilon(field), ...), T)``."""
    return spectral_intensity(finite_time_ft(epsilon(field), field.grid, omega), field.grid.T)


def energy(field):
    """Trapezoid integral of ``Omega(t)^2`` over ``[0, T]``."""
    return float(field.grid.weights @ (field.amplitude ** 2))


def dd_sequence(E, grid, nu_pulse):
    """Energy-matched periodic bang-bang train of pi pulses.

    The pulse count is ``n = round(nu_pulse * E / pi^2)`` and the spacing
    ``tau = (T - nu_pulse) / n``.  Pulse edges snap to the grid, so the
    width actually used is ``m * h``; the amplitude ``pi / (m h)`` keeps the
    phase step of every pulse at pi.  A run of ``m`` samples covers the
    half-open cells ``[(k - 1/2) h, (k + m - 1/2) h)`` under the trapezoid
    rule, so pulse ``j`` starts at the sample nearest ``j tau + h/2``; the
    first pulse therefore begins at ``t = h`` and phase and energy come out
    exactly ``n pi`` and ``n pi^2 / (m h)``.

    Returns
    -------
    field : ControlField
    params : DDParams
        Realized ``n``, width, spacing and the energy ``n pi^2 / width``.

    Raises
    ------
    EnergyTooSmallError
        If the rounded pulse count is zero.
    InfeasibleParametersError
        If pulses would overlap or the grid is coarser than ``nu_pulse / 8``.
    """
    if not E > 0 or not nu_pulse > 0:
        raise InvalidParameterError("E and nu_pulse must be positive")
    T, h = grid.T, grid.h
    if h > nu_pulse / 8.0:
        raise InfeasibleParametersError(
            f"grid spacing {h:.3g} too coarse for pulse width {nu_pulse} (need h <= nu/8)")
    n = int(round(nu_pulse * E / math.pi ** 2))
    if n < 1:
        raise EnergyTooSmallError(
            f"E = {E} buys no pi pulse of width {nu_pulse} (needs E >= {math.pi**2/(2*nu_pulse):.4g})")
    tau = (T - nu_pulse) / n
    if tau <= nu_pulse:
        raise InfeasibleParametersError(f"pulses overlap: tau = {tau:.4g} <= nu = {nu_pulse}")
    m = max(1, int(round(nu_pulse / h)))
    width = m * h
    height = math.pi / width
    amp = np.zeros(grid.N)
    for j in range(n):
        start = int(math.floor(j * tau / h + 1.0))
        amp[start:start + m] = height
    field = phase_from_amplitude(amp, grid)
    params = DDParams(n=n, nu_pulse=width, tau=tau, energy_requested=float(E),
                      energy_realized=n * math.pi ** 2 / width)
    return field, params


def chirp_ansatz(a, grid):
    """``Omega(t) = a [1 + exp(-t/T) (t/T - 1)]``: zero at 0, rising to ``a`` at T."""
    x = grid.t / grid.T
    return phase_from_amplitude(a * (1.0 + np.exp(-x) * (x - 1.0)), grid)


def linear_phase(slope, grid):
    """Constant amplitude ``slope``, i.e. a linearly growing phase."""
    return phase_from_amplitude(np.full(grid.N, float(slope)), grid)


def scale_to_energy(field, E):
    e0 = energy(field)
    if e0 <= 0:
        raise InvalidInputError("cannot rescale a zero field")
    return phase_from_amplitude(field.amplitude * math.sqrt(E / e0), field.grid)


def perturb(field, sigma_rel, seed):
    """Multiplicative white amplitude noise ``Omega * (1 + xi)``, xi ~ N(0, sigma_rel^2)."""
    if sigma_rel < 0:
        raise InvalidParameterError("sigma_rel must be non-negative")
    if sigma_rel == 0:
        return field
    xi = np.random.default_rng(seed).normal(0.0, sigma_rel, field.grid.N)
    return phase_from_amplitude(field.amplitude * (1.0 + xi), field.grid)
