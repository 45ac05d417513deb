"""Sampled noise against the deterministic rate.

Draws stationary Gaussian noise with the Lorentzian covariance, averages the
per-realization dephasing integral and compares with the quadrature value.
"""
from odcm.control import TimeGrid, dd_sequence, zero_field
from odcm.el_solver import SolverConfig, solve_optimal
from odcm.mc import mc_rate, sample_noise
from odcm.rate import TimeDomainRate
from odcm.spectra import lorentzian_correlation

grid = TimeGrid(10.0, 512)
c = lorentzian_correlation(1.0, 1.0)
rate = TimeDomainRate(c, grid)
fields = {
    "zero": zero_field(grid),
    "dd": dd_sequence(20.0, grid, 0.5)[0],
    "optimal": solve_optimal(c, 20.0, SolverConfig(grid)).field,
}
batch = sample_noise(c, grid, K=5000, seed=2024)
for (name, f), est in zip(fields.items(), mc_rate(batch, list(fields.values()))):
    r = rate(f)
    print(f"{name:8s} quadrature {r:.5f}  MC {est.R:.5f} +- {est.stderr:.5f}  "
          f"z = {(est.R - r) / est.stderr:+.2f}")
