import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from odcm.control import (
    ControlField,
    TimeGrid,
    chirp_ansatz,
    dd_sequence,
    energy,
    epsilon,
    field_from_phase,
    field_spectrum,
    finite_time_ft,
    linear_phase,
    perturb,
    phase_from_amplitude,
    scale_to_energy,
    spectral_intensity,
    zero_field,
)
from odcm.errors import (
    EnergyTooSmallError,
    InfeasibleParametersError,
    InvalidInputError,
    InvalidParameterError,
)
from odcm.spectra import frequency_grid


def test_time_grid_basics():
    g = TimeGrid(2.0, 101)
    assert g.h == pytest.approx(0.02)
    assert g.t[0] == 0.0 and g.t[-1] == 2.0
    assert g.weights.sum() == pytest.approx(2.0)
    assert g.refined().N == 201
    for bad in [(0.0, 100), (1.0, 15), (1.0, 20.5)]:
        with pytest.raises(InvalidParameterError):
            TimeGrid(*bad)


# --- phase_from_amplitude --------------------------------------------------

def test_constant_amplitude_gives_linear_phase():
    g = TimeGrid(3.0, 64)
    f = phase_from_amplitude(np.full(g.N, 1.7), g)
    np.testing.assert_allclose(f.phase, 1.7 * g.t, rtol=1e-14, atol=1e-14)


def test_zero_amplitude_gives_zero_phase():
    f = zero_field(TimeGrid(1.0, 32))
    assert np.all(f.phase == 0) and energy(f) == 0


def test_linear_amplitude_integrates_exactly():
    g = TimeGrid(1.0, 2048)
    f = phase_from_amplitude(2 * g.t, g)
    assert f.phase[-1] == pytest.approx(1.0, abs=1e-6)


def test_phase_from_amplitude_length_mismatch():
    with pytest.raises(InvalidInputError):
        phase_from_amplitude(np.zeros(10), TimeGrid(1.0, 32))


def test_field_is_immutable_and_consistent():
    g = TimeGrid(1.0, 64)
    f = phase_from_amplitude(np.sin(g.t), g)
    assert f.phase[0] == 0.0
    assert f.consistency_error() <= 1e-10 * np.max(np.abs(f.phase))
    with pytest.raises(ValueError):
        f.amplitude[0] = 1.0


def test_field_from_phase_second_order():
    errs = []
    for N in (101, 201):
        g = TimeGrid(1.0, N)
        f = field_from_phase(np.sin(3 * g.t), g)
        errs.append(np.max(np.abs(f.amplitude[1:-1] - 3 * np.cos(3 * g.t[1:-1]))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


# --- epsilon and spectra ---------------------------------------------------

def test_epsilon_cases():
    g = TimeGrid(1.0, 33)
    assert np.all(epsilon(zero_field(g)) == 1)
    f = ControlField(g, np.zeros(g.N), np.where(np.arange(g.N) == 5, np.pi, 0.0))
    assert epsilon(f)[5] == pytest.approx(-1.0)


@given(st.lists(st.floats(-50, 50), min_size=16, max_size=64))
def test_epsilon_unit_modulus(amp):
    g = TimeGrid(1.0, len(amp))
    e = epsilon(phase_from_amplitude(np.array(amp), g))
    assert np.max(np.abs(np.abs(e) - 1)) < 1e-14


def test_ft_of_constant():
    g = TimeGrid(4.0, 257)
    e = np.ones(g.N)
    T = g.T
    w = np.array([0.0, 2 * np.pi / T, 1.3])
    ft = finite_time_ft(e, g, w)
    assert ft[0] == pytest.approx(T / math.sqrt(2 * math.pi), rel=1e-14)
    assert abs(ft[1]) < 1e-12
    exact = (np.exp(1j * 1.3 * T) - 1) / (1j * 1.3 * math.sqrt(2 * math.pi))
    assert abs(ft[2] - exact) < 1e-4
    F = spectral_intensity(ft, T)
    assert F[0] == pytest.approx(T / (2 * math.pi), rel=1e-14)


def test_ft_peak_at_carrier():
    g = TimeGrid(10.0, 1025)
    w0 = 2.5
    w = np.linspace(-5, 5, 1001)
    ft = finite_time_ft(np.exp(-1j * w0 * g.t), g, w)
    assert w[np.argmax(np.abs(ft))] == pytest.approx(w0, abs=0.011)


def test_ft_chunking_is_invisible():
    g = TimeGrid(2.0, 64)
    e = epsilon(chirp_ansatz(3.0, g))
    w = np.linspace(-10, 10, 77)
    np.testing.assert_allclose(finite_time_ft(e, g, w, chunk=5), finite_time_ft(e, g, w),
                               rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("make", [
    lambda g: zero_field(g),
    lambda g: chirp_ansatz(4.0, g),
    lambda g: dd_sequence(40 * np.pi ** 2 / 0.5 / 10, g, 0.5)[0],
])
def test_intensity_normalization(make):
    g = TimeGrid(10.0, 1025)
    f = make(g)
    w = frequency_grid(2 * np.pi * 40 / g.T * 4, 8193)
    F = field_spectrum(f, w)
    assert np.all(F >= 0)
    assert np.trapezoid(F, w) == pytest.approx(1.0, abs=1e-3)


def test_spectral_intensity_requires_positive_T():
    with pytest.raises(InvalidParameterError):
        spectral_intensity(np.ones(3), 0.0)


# --- energy ----------------------------------------------------------------

def test_energy_of_constant():
    g = TimeGrid(2.5, 100)
    assert energy(linear_phase(3.0, g)) == pytest.approx(9.0 * 2.5, rel=1e-14)


@given(st.lists(st.floats(-10, 10), min_size=16, max_size=40), st.floats(0.1, 10))
def test_energy_depends_on_amplitude_only(amp, T):
    g = TimeGrid(T, len(amp))
    a = np.array(amp)
    f1 = phase_from_amplitude(a, g)
    f2 = ControlField(g, a, np.zeros(g.N))
    assert energy(f1) == energy(f2)


def test_scale_to_energy():
    g = TimeGrid(1.0, 50)
    f = scale_to_energy(chirp_ansatz(1.0, g), 7.0)
    assert energy(f) == pytest.approx(7.0, rel=1e-13)
    with pytest.raises(InvalidInputError):
        scale_to_energy(zero_field(g), 1.0)


# --- DD --------------------------------------------------------------------

def test_dd_pulse_count_example():
    g = TimeGrid(10.0, 2048)
    f, p = dd_sequence(4 * np.pi ** 2 / 0.1, g, 0.1)
    assert p.n == 4
    assert p.n * p.tau + 0.1 == pytest.approx(g.T)
    assert 0 < p.nu_pulse < p.tau


def test_dd_single_pulse():
    g = TimeGrid(1.0, 2049)
    f, p = dd_sequence(np.pi ** 2 / 0.1, g, 0.1)
    assert p.n == 1
    on = f.amplitude > 0
    assert f.amplitude[0] == 0.0
    assert f.amplitude[1] == pytest.approx(np.pi / p.nu_pulse)
    assert g.t[on].min() == g.h and g.t[on].max() < 0.1 + g.h
    assert p.nu_pulse == pytest.approx(0.1, abs=g.h)
    assert p.energy_realized == pytest.approx(np.pi ** 2 / p.nu_pulse)
    assert abs(energy(f) - p.energy_realized) <= 2 * g.h * (np.pi / 0.1) ** 2
    assert energy(f) == pytest.approx(p.energy_realized, rel=1e-12)


@given(n=st.integers(1, 8), nu=st.sampled_from([0.1, 0.2, 0.5]))
def test_dd_phase_quantization(n, nu):
    g = TimeGrid(10.0, 2048)
    f, p = dd_sequence(n * np.pi ** 2 / nu, g, nu)
    assert p.n == n
    height = np.pi / p.nu_pulse
    assert f.phase[-1] == pytest.approx(n * np.pi, rel=1e-12)
    assert abs(energy(f) - p.energy_realized) <= 2 * g.h * height ** 2
    assert energy(f) == pytest.approx(p.energy_realized, rel=1e-12)
    steps = f.phase[np.searchsorted(g.t, np.arange(1, n + 1) * p.tau - 1e-9) - 1]
    np.testing.assert_allclose(steps, np.pi * np.arange(1, n + 1), rtol=1e-12)


def test_dd_errors():
    g = TimeGrid(1.0, 2049)
    with pytest.raises(EnergyTooSmallError):
        dd_sequence(1.0, g, 0.1)
    with pytest.raises(InfeasibleParametersError):
        dd_sequence(9 * np.pi ** 2 / 0.1, TimeGrid(1.0, 2049), 0.1)
    with pytest.raises(InfeasibleParametersError):
        dd_sequence(np.pi ** 2 / 0.1, TimeGrid(1.0, 40), 0.1)
    with pytest.raises(InvalidParameterError):
        dd_sequence(-1.0, g, 0.1)


# --- ansatz and perturbation -----------------------------------------------

def test_chirp_properties():
    g = TimeGrid(10.0, 2048)
    f = chirp_ansatz(2.0, g)
    assert f.amplitude[0] == 0.0
    assert f.amplitude[-1] == pytest.approx(2.0)
    assert np.all(np.diff(f.amplitude) >= 0)


def test_perturb_identity_and_determinism():
    g = TimeGrid(1.0, 2048)
    f = chirp_ansatz(1.0, g)
    assert perturb(f, 0.0, 1) is f
    a, b = perturb(f, 0.1, 7), perturb(f, 0.1, 7)
    np.testing.assert_array_equal(a.amplitude, b.amplitude)
    assert not np.array_equal(a.amplitude, perturb(f, 0.1, 8).amplitude)
    with pytest.raises(InvalidParameterError):
        perturb(f, -0.1, 1)


def test_perturb_noise_statistics():
    g = TimeGrid(1.0, 2048)
    f = linear_phase(1.0, g)
    xi = perturb(f, 0.1, 3).amplitude - 1.0
    assert abs(xi.mean()) <= 5 * 0.1 / math.sqrt(2048)
    assert xi.std() == pytest.approx(0.1, rel=0.1)


# --- CSV -------------------------------------------------------------------

def test_csv_round_trip_is_exact(tmp_path):
    g = TimeGrid(3.0, 40)
    f = chirp_ansatz(1.3, g)
    path = tmp_path / "f.csv"
    f.to_csv(path)
    text = path.read_text()
    assert text.startswith("t,omega,phi\n") and text.endswith("\n")
    back = ControlField.from_csv(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.amplitude, f.amplitude)
    np.testing.assert_array_equal(back.phase, f.phase)


def test_csv_rejects_bad_header():
    with pytest.raises(InvalidInputError):
        ControlField.from_csv(io.StringIO("a,b,c\n0,0,0\n"))
