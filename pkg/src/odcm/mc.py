"""Monte-Carlo estimate of the dephasing rate from sampled noise realizations.

Stationary Gaussian noise ``delta(t)`` with covariance ``env(|t - t'|)`` is
drawn on the time grid and the rate is estimated as the ensemble mean of

    r_k = (2/T) Re int_0^T dt int_0^t dt1 delta_k(t) delta_k(t1) eps*(t) eps(t1)

with the same nested trapezoid rules as the deterministic time-domain route,
so the estimator is exactly unbiased for that discretization.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import toeplitz

from .control import ControlField, epsilon
from .errors import InvalidCovarianceError, InvalidInputError, InvalidParameterError

CLAMP_RTOL = 1e-10


def covariance_matrix(c, grid):
    """Real covariance ``Re Phi(t_i - t_j)``; equals the envelope when ``Delta = 0``."""
    return toeplitz(np.real(np.asarray(c(grid.t), dtype=complex)))


def covariance_sqrt(cov, scale=None):
    """Symmetric square root of ``cov`` with small negative eigenvalues clamped to 0.

    Raises
    ------
    InvalidCovarianceError
        If an eigenvalue is below ``-1e-10 * scale`` (``scale`` defaults to
        the largest diagonal entry).
    """
    cov = np.asarray(cov, dtype=float)
    if scale is None:
        scale = float(np.max(np.abs(np.diag(cov)))) if cov.size else 0.0
    vals, vecs = np.linalg.eigh(cov)
    if vals.size and vals[0] < -CLAMP_RTOL * scale:
        raise InvalidCovarianceError(
            f"covariance has eigenvalue {vals[0]:.3e} < -{CLAMP_RTOL:g} * {scale:.3g}")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root) @ vecs.T


@dataclass(frozen=True, eq=False)
class NoiseBatch:
    """K noise realizations, generated on demand from (seed, realization index).

    Realization ``k`` uses a Philox stream keyed by ``seed`` with the counter
    offset by ``k``, so any subset is reproducible independently of the rest.
    """

    grid: object
    factor: np.ndarray
    K: int
    seed: int
    real_part_used: bool = False

    def realizations(self, start=0, stop=None):
        """Samples ``delta_k(t_i)`` for ``start <= k < stop`` as a (k, N) array."""
        stop = self.K if stop is None else min(stop, self.K)
        z = np.empty((max(stop - start, 0), self.grid.N))
        for row, k in enumerate(range(start, stop)):
            z[row] = _stream(self.seed, k).standard_normal(self.grid.N)
        return z @ self.factor.T

    @cached_property
    def samples(self):
        return self.realizations()

    def __len__(self):
        return self.K


def _stream(seed, k):
    bitgen = np.random.Philox(key=int(seed) & (2 ** 64 - 1), counter=[0, 0, 0, int(k)])
    return np.random.Generator(bitgen)


def sample_noise(c, grid, K, seed):
    """Draw a batch of stationary Gaussian noise realizations.

    Parameters
    ----------
    c : CorrelationFunction
        For ``Delta != 0`` the real part of Phi is used as covariance and the
        batch is flagged ``real_part_used``.
    grid : TimeGrid
    K : int
        Number of realizations.
    seed : int
        Unsigned 64-bit key.

    Raises
    ------
    InvalidCovarianceError
        If the covariance matrix is indefinite beyond the clamp tolerance.
    """
    if int(K) != K or K < 1:
        raise InvalidParameterError("K must be a positive integer")
    if int(seed) < 0:
        raise InvalidParameterError("seed must be non-negative")
    cov = covariance_matrix(c, grid)
    factor = covariance_sqrt(cov, scale=abs(c.variance()))
    return NoiseBatch(grid, factor, int(K), int(seed), real_part_used=not c.is_real)


@dataclass
class MCEstimate:
    R: float
    stderr: float
    K: int
    samples: np.ndarray = None

    def to_dict(self):
        return {"R": self.R, "stderr": self.stderr, "K": self.K}

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        buf.write("k,r_k\n")
        for k, r in enumerate(self.samples):
            buf.write(f"{k},{float(r)!r}\n")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text


def realization_rates(delta, field):
    """Per-realization rates ``r_k`` for noise samples ``delta`` of shape (K, N)."""
    grid = field.grid
    a = np.asarray(delta, dtype=float) * epsilon(field)[None, :]
    inner = cumulative_trapezoid(a, dx=grid.h, axis=1, initial=0.0)
    return 2.0 / grid.T * np.real((np.conj(a) * inner) @ grid.weights)


def mc_rate(batch, fields, chunk=256):
    """Monte-Carlo rate estimate and its standard error.

    ``fields`` may be a single :class:`ControlField` or a sequence; all fields
    are evaluated on the same realizations and a list is returned in the
    latter case.
    """
    single = isinstance(fields, ControlField)
    fields = [fields] if single else list(fields)
    for f in fields:
        if f.grid != batch.grid:
            raise InvalidInputError("field and noise batch live on different grids")
    r = np.empty((len(fields), batch.K))
    for start in range(0, batch.K, chunk):
        delta = batch.realizations(start, start + chunk)
        for i, f in enumerate(fields):
            r[i, start:start + delta.shape[0]] = realization_rates(delta, f)
    out = []
    for row in r:
        se = float(np.std(row, ddof=1) / math.sqrt(batch.K)) if batch.K > 1 else math.inf
        if not np.any(row):
            se = 0.0
        out.append(MCEstimate(float(np.mean(row)), se, batch.K, row))
    return out[0] if single else out
