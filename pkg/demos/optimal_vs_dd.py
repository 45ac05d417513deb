"""Optimal modulation against an energy-matched DD train on a Lorentzian bath.

Solves the nonlinear optimality equation at a handful of energies and prints
the normalized rates next to the bang-bang train that spends the same energy.
"""
import numpy as np

from odcm.control import TimeGrid, dd_sequence, zero_field
from odcm.el_solver import SolverConfig, solve_optimal
from odcm.rate import TimeDomainRate
from odcm.spectra import lorentzian_correlation

T, N, NU = 10.0, 1024, 0.5
grid = TimeGrid(T, N)
c = lorentzian_correlation(gamma=1.0, t_c=1.0)
rate = TimeDomainRate(c, grid)
r0 = rate(zero_field(grid))
print(f"unmodulated R = {r0:.5f}")

print(f"{'n':>2} {'E':>8} {'R_opt/R0':>9} {'R_dd/R0':>8} {'iters':>6}")
for n in range(1, 7):
    dd, p = dd_sequence(n * np.pi ** 2 / NU, grid, NU)
    sol = solve_optimal(c, p.energy_realized, SolverConfig(grid))
    print(f"{n:2d} {p.energy_realized:8.2f} {sol.rate / r0:9.4f} {rate(dd) / r0:8.4f} {sol.iterations:6d}")

# the optimum vanishes at both ends of the window
sol = solve_optimal(c, 20.0, SolverConfig(grid))
k = np.argmax(np.abs(sol.field.amplitude))
print(f"E = 20: Omega(0) = {sol.field.amplitude[0]:.1e}, peak {sol.field.amplitude[k]:.3f} "
      f"at t = {grid.t[k]:.2f}, Omega(T) = {sol.field.amplitude[-1]:.1e}")
