from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fransonsim.spdc import (
    CalibrationError,
    SpdcSource,
    SpectralGrid,
    calibrate_poling_period,
    calibrated,
    default_grid,
    delta_k,
    fit_crystal_length,
    phase_matching,
    photons_per_mode,
    sinc,
    spectrum_bandwidth_fwhm,
    spectrum_crossings,
)


@pytest.fixture(scope="module")
def source():
    return calibrated(SpdcSource())


@pytest.fixture(scope="module")
def grid(source):
    return default_grid(source)


def test_poling_period_matches_coarse_scan(source):
    periods = np.linspace(6.0, 8.0, 2001)
    dk = np.array([delta_k(replace(source, poling_period=p), source.degenerate_frequency)
                   for p in periods])
    i = np.flatnonzero(np.diff(np.sign(dk)))[0]
    assert periods[i] <= source.poling_period <= periods[i + 1]
    assert source.poling_period == pytest.approx(6.93, abs=0.05)


def test_calibrated_source_is_phase_matched_at_degeneracy(source):
    dk = delta_k(source, source.degenerate_frequency)
    assert abs(dk * source.crystal_length * 1e-3) < 1e-6


def test_poling_period_depends_on_temperature(source):
    hot = calibrate_poling_period(source, temperature=150.0)
    assert hot != pytest.approx(source.poling_period, abs=1e-4)


def test_uncalibrated_and_bad_bracket():
    raw = SpdcSource()
    with pytest.raises(CalibrationError):
        delta_k(raw, raw.degenerate_frequency)
    with pytest.raises(CalibrationError):
        calibrate_poling_period(raw, bracket=(20.0, 30.0))


def test_source_validation():
    with pytest.raises(ValueError):
        SpdcSource(crystal_length=0.0)
    with pytest.raises(ValueError):
        SpdcSource(degenerate_frequency=1.0)
    assert SpdcSource().degenerate_wavelength == 1064.0


def test_grid_is_symmetric_and_excludes_zero():
    g = SpectralGrid(1.0e15, 2.0e14, 1024)
    x = g.delta_omega
    assert np.array_equal(x, -x[::-1])
    assert not np.any(x == 0)
    assert x[-1] == pytest.approx(2.0e14, rel=1e-12)
    assert np.allclose(np.diff(x), g.spacing)
    with pytest.raises(ValueError):
        SpectralGrid(1.0e15, 2.0e14, 1000)


def test_phase_matching_is_exchange_symmetric(source, grid):
    pmf = phase_matching(source, grid)
    assert np.max(np.abs(pmf.amplitude - pmf.amplitude[::-1])) < 1e-12
    assert np.max(pmf.squared) == pytest.approx(1.0, abs=1e-9)


def test_sinc_definition():
    x = np.array([-3.0, -0.5, 0.0, 1e-9, 2.0])
    ref = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
    assert np.allclose(sinc(x), ref, rtol=1e-14, atol=0)


def test_collinear_bandwidth_regression(source, grid):
    bw = spectrum_bandwidth_fwhm(phase_matching(source, grid))
    assert bw == pytest.approx(58.45, abs=0.1)


def test_bandwidth_scales_as_inverse_root_length(source, grid):
    # near degeneracy dk is quadratic in detuning, so the width goes as L^-1/2
    lo, hi = spectrum_crossings(phase_matching(replace(source, crystal_length=2.0), grid))
    lo4, hi4 = spectrum_crossings(phase_matching(replace(source, crystal_length=8.0), grid))
    assert (hi - lo) / (hi4 - lo4) == pytest.approx(2.0, rel=0.03)


def test_fit_crystal_length_hits_target(source, grid):
    length = fit_crystal_length(source, grid, 117.0)
    bw = spectrum_bandwidth_fwhm(phase_matching(replace(source, crystal_length=length), grid))
    assert bw == pytest.approx(117.0, abs=1e-6)
    assert length < source.crystal_length


@settings(max_examples=15, deadline=None)
@given(st.floats(0.7, 1.6))
def test_bandwidth_scale_stretches_detuning(scale):
    src = calibrated(SpdcSource())
    g = default_grid(src)
    lo, hi = spectrum_crossings(phase_matching(src, g))
    lo_s, hi_s = spectrum_crossings(phase_matching(src, g, bandwidth_scale=scale))
    assert (hi_s - lo_s) / (hi - lo) == pytest.approx(scale, rel=2e-3)


def test_photons_per_mode_golden():
    assert photons_per_mode(1.7e11, 1064.0, 117.0) == pytest.approx(0.0055, rel=0.1)
    with pytest.raises(ValueError):
        photons_per_mode(1.0, 1064.0, 0.0)
