import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from odcm.control import TimeGrid, chirp_ansatz, dd_sequence, field_spectrum, zero_field
from odcm.errors import CoverageError, DegenerateNormalizationError, InvalidParameterError
from odcm.rate import (
    TimeDomainRate,
    fidelity,
    kernel_matrix,
    normalized_rate,
    rate_freq_domain,
    rate_report,
    rate_time_domain,
)
from odcm.spectra import (
    TabulatedSpectrum,
    frequency_grid,
    lorentzian_correlation,
    lorentzian_spectrum,
    multi_peak_spectrum,
    one_over_f_spectrum,
    shift_center,
    tabulated_correlation,
)

from conftest import closed_form_unmodulated


def _unmodulated_oracle(c, T):
    # (2/T) int_0^T (T - s) Re Phi(s) ds, i.e. the triangle integral for eps = 1
    f = lambda s: (T - s) * complex(c(np.array([s]))[0]).real
    return 2.0 / T * integrate.quad(f, 0, T, limit=400)[0]


@pytest.mark.parametrize("gamma,t_c,T", [(1.0, 1.0, 10.0), (0.5, 0.2, 3.0), (2.0, 3.0, 5.0)])
def test_unmodulated_lorentzian_closed_form(gamma, t_c, T):
    c = lorentzian_correlation(gamma, t_c)
    r = rate_time_domain(c, zero_field(TimeGrid(T, 2048)))
    assert r == pytest.approx(closed_form_unmodulated(gamma, t_c, T), rel=1e-4)


def test_zero_kernel_gives_zero_rate():
    c = tabulated_correlation(np.linspace(0, 10, 11), np.zeros(11))
    assert rate_time_domain(c, chirp_ansatz(2.0, TimeGrid(10.0, 64))) == 0.0


def test_detuned_lorentzian_against_quadrature():
    c = shift_center(lorentzian_correlation(1.0, 1.0), 2.0)
    T = 10.0
    r = rate_time_domain(c, zero_field(TimeGrid(T, 2048)))
    assert r == pytest.approx(_unmodulated_oracle(c, T), rel=1e-4)


def test_single_carrier_matches_exact_kernel_for_lorentzian():
    c = shift_center(lorentzian_correlation(1.0, 0.5), -3.0)
    g = TimeGrid(5.0, 256)
    np.testing.assert_allclose(kernel_matrix(c, g, True), kernel_matrix(c, g), atol=1e-15)


def test_kernel_is_hermitian():
    c = multi_peak_spectrum([(1.0, 0.0, 1.0), (0.5, 2.0, 0.3)]).correlation()
    M = kernel_matrix(c, TimeGrid(3.0, 40))
    np.testing.assert_allclose(M, M.conj().T, atol=1e-15)


def test_richardson_ratio_on_smooth_field():
    c = lorentzian_correlation(1.0, 1.0)
    rs = [rate_time_domain(c, chirp_ansatz(2.0, TimeGrid(10.0, n))) for n in (257, 513, 1025)]
    ratio = (rs[0] - rs[1]) / (rs[1] - rs[2])
    assert 3.5 <= ratio <= 4.5


def test_dd_with_long_spacing_suppresses_rate():
    c = lorentzian_correlation(1.0, 0.1)
    g = TimeGrid(10.0, 512)
    f, p = dd_sequence(4 * np.pi ** 2 / 0.25, g, 0.25)
    assert p.tau > 10 * 0.1
    n = normalized_rate(c, f)
    fine = TimeGrid(10.0, 5111)
    ref = normalized_rate(c, dd_sequence(4 * np.pi ** 2 / 0.25, fine, 0.25)[0])
    assert n < 1 and ref < 1
    assert n == pytest.approx(ref, rel=0.05)


def test_normalized_rate_of_zero_field_is_one():
    g = TimeGrid(10.0, 200)
    assert normalized_rate(lorentzian_correlation(1, 1), zero_field(g)) == 1.0


def test_normalized_rate_degenerate():
    c = tabulated_correlation(np.linspace(0, 10, 11), np.zeros(11))
    with pytest.raises(DegenerateNormalizationError):
        normalized_rate(c, zero_field(TimeGrid(10.0, 32)))


# --- frequency route -------------------------------------------------------

def test_freq_route_zero_spectrum():
    w = frequency_grid(5.0, 101)
    s = TabulatedSpectrum(w, np.zeros(w.size))
    assert rate_freq_domain(s, np.ones(w.size), w) == 0.0


@pytest.mark.parametrize("s,omega_max", [
    (lorentzian_spectrum(1.0, 1.0), 40.0),
    (lorentzian_spectrum(1.0, 1.0, 5.0), 60.0),
    (one_over_f_spectrum(1.0, 0.2, 10.0), 12.0),
    (multi_peak_spectrum([(1.0, 0.0, 1.0), (0.5, 2.0, 0.3), (0.5, -2.0, 0.3)]), 40.0),
])
def test_route_equivalence_unmodulated_and_chirp(s, omega_max):
    g = TimeGrid(10.0, 2048)
    w = frequency_grid(omega_max, 4096)
    c = s.correlation()
    for f in (zero_field(g), chirp_ansatz(3.0, g)):
        rt = rate_time_domain(c, f)
        rf = rate_freq_domain(s, field_spectrum(f, w), w)
        assert abs(rt - rf) / rt <= 1e-3


def test_narrow_tabulated_peak():
    w0, weight = 1.5, 0.7
    w = frequency_grid(4.0, 40001)
    sig = 2e-3
    vals = np.exp(-0.5 * ((w - w0) / sig) ** 2)
    s = TabulatedSpectrum(w, weight * vals / np.trapezoid(vals, w))
    g = TimeGrid(10.0, 512)
    f = chirp_ansatz(1.0, g)
    F = field_spectrum(f, w)
    r = rate_freq_domain(s, F, w)
    peak = field_spectrum(f, np.array([w0]))[0]
    assert r == pytest.approx(2 * np.pi * weight * peak, rel=1e-3)


def test_coverage_errors():
    w = frequency_grid(5.0, 101)
    with pytest.raises(CoverageError):
        rate_freq_domain(one_over_f_spectrum(1.0, 0.2, 10.0), np.ones(w.size), w)
    with pytest.raises(CoverageError):
        rate_freq_domain(lorentzian_spectrum(1.0, 0.1), np.ones(w.size), w)


# --- fidelity and report ---------------------------------------------------

def test_fidelity_examples():
    assert fidelity(0.0, 5.0) == (1.0, False)
    assert fidelity(0.1, 1.0)[0] == pytest.approx(0.9)
    assert fidelity(3.0, 1.0, 0.5) == (0.0, True)
    with pytest.raises(InvalidParameterError):
        fidelity(0.1, 1.0, 1.5)
    with pytest.raises(InvalidParameterError):
        fidelity(0.1, 1.0, 0.0)


def test_rate_report_json_keys():
    s = lorentzian_spectrum(1.0, 1.0)
    g = TimeGrid(10.0, 512)
    rep = rate_report(s.correlation(), s, chirp_ansatz(2.0, g), frequency_grid(60.0, 4096),
                      R_unmodulated=1.0)
    d = rep.to_dict()
    assert {"R_time", "R_freq", "T", "energy", "alpha", "fidelity", "normalized"} <= set(d)
    assert rep.route_gap < 1e-3


# --- properties ------------------------------------------------------------

@given(amp=st.lists(st.floats(-20, 20), min_size=16, max_size=48),
       t_c=st.floats(0.05, 5.0), center=st.floats(-5, 5))
def test_rate_is_nonnegative(amp, t_c, center):
    c = shift_center(lorentzian_correlation(1.0, t_c), center)
    g = TimeGrid(5.0, len(amp))
    from odcm.control import phase_from_amplitude
    assert rate_time_domain(c, phase_from_amplitude(np.array(amp), g)) >= -1e-9 * 5.0 / t_c


@given(shift=st.floats(-10, 10))
def test_rate_invariant_under_constant_phase(shift):
    from odcm.control import ControlField
    c = lorentzian_correlation(1.0, 1.0)
    g = TimeGrid(4.0, 64)
    f = chirp_ansatz(2.0, g)
    ev = TimeDomainRate(c, g)
    shifted = ControlField(g, f.amplitude, f.phase + shift)
    assert ev(shifted) == pytest.approx(ev(f), rel=1e-12)
