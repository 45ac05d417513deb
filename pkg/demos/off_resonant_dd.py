"""Off-resonant bath: DD can make things worse before it makes them better.

A Lorentzian peaked away from zero frequency is probed by DD trains of growing
energy; the rate rises while the train's filter passband sweeps onto the peak
and falls once it moves past.  One point is then refined with the linearized
equation under the positivity constraint.
"""
import numpy as np

from odcm.control import TimeGrid, dd_sequence, zero_field
from odcm.linearized import refine_linearized
from odcm.rate import TimeDomainRate
from odcm.spectra import lorentzian_spectrum

grid = TimeGrid(10.0, 1024)
NU = 0.2
c = lorentzian_spectrum(1.0, 1.0, center=5.0).correlation()
rate = TimeDomainRate(c, grid)
r0 = rate(zero_field(grid))

for n in (1, 4, 8, 12, 16, 20, 28, 40):
    dd, p = dd_sequence(n * np.pi ** 2 / NU, grid, NU)
    bar = "#" * int(round(4 * rate(dd) / r0))
    print(f"n = {n:2d}  tau = {p.tau:5.3f}  R/R0 = {rate(dd) / r0:6.3f}  {bar}")

dd, p = dd_sequence(16 * np.pi ** 2 / NU, grid, NU)
ref = refine_linearized(c, dd, p.energy_realized, positivity=True, rate=rate)
print(f"\nn = 16: DD {ref.rate_base / r0:.4f} -> refined {ref.rate / r0:.4f} "
      f"after {ref.steps} steps ({ref.stopped})")
