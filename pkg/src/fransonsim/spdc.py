"""Quasi-phase-matched down-conversion source.

Type-0 collinear phase matching in periodically poled MgO:LN with a
monochromatic pump. The phase-matching function is the uniform-grating sinc,
Phi = sinc(dk L / 2).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.constants import c
from scipy.optimize import bisect, brentq

from .materials import MGO_LN, MaterialModel, nm_to_omega, omega_to_nm, wavenumber

MEASURED_BANDWIDTH_NM = 117.0


class CalibrationError(RuntimeError):
    pass


class GridTooNarrowError(ValueError):
    pass


@dataclass(frozen=True)
class SpdcSource:
    pump_wavelength: float = 532.0  # nm
    pump_power: float = 1.0  # W
    crystal_length: float = 5.0  # mm
    poling_period: Optional[float] = None  # um
    temperature: float = 50.0  # C
    crystal_material: MaterialModel = MGO_LN
    degenerate_frequency: float = field(default=None)

    def __post_init__(self):
        if self.crystal_length <= 0:
            raise ValueError("crystal_length must be positive")
        if self.poling_period is not None and self.poling_period <= 0:
            raise ValueError("poling_period must be positive")
        wd = nm_to_omega(self.pump_wavelength) / 2
        if self.degenerate_frequency is None:
            object.__setattr__(self, "degenerate_frequency", float(wd))
        elif self.degenerate_frequency != float(wd):
            raise ValueError("degenerate_frequency must equal omega_p / 2")

    @property
    def pump_frequency(self) -> float:
        return float(nm_to_omega(self.pump_wavelength))

    @property
    def degenerate_wavelength(self) -> float:
        return 2 * self.pump_wavelength


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform grid of detunings symmetric about *center* (rad/s).

    ``sample_count`` must be a power of two, so 0 is not itself a sample;
    samples sit at +-(j + 1/2) * spacing.
    """

    center: float
    half_span: float
    sample_count: int = 2**14

    def __post_init__(self):
        n = self.sample_count
        if n < 2 or n & (n - 1):
            raise ValueError(f"sample_count {n} is not a power of two")
        if self.half_span <= 0:
            raise ValueError("half_span must be positive")

    @property
    def spacing(self) -> float:
        return 2 * self.half_span / (self.sample_count - 1)

    @property
    def delta_omega(self) -> np.ndarray:
        # built from the half-integer index so +x and -x are exact negatives
        j = np.arange(self.sample_count) - (self.sample_count - 1) / 2
        return j * self.spacing

    @property
    def omega(self) -> np.ndarray:
        return self.center + self.delta_omega

    @classmethod
    def covering(cls, center: float, long_wavelength_nm: float = 1600.0,
                 sample_count: int = 2**14) -> "SpectralGrid":
        """Grid whose red edge reaches *long_wavelength_nm* (blue edge mirrors it)."""
        return cls(center, float(center - nm_to_omega(long_wavelength_nm)), sample_count)


def default_grid(source: SpdcSource, sample_count: int = 2**14) -> SpectralGrid:
    return SpectralGrid.covering(source.degenerate_frequency, 1600.0, sample_count)


def delta_k(source: SpdcSource, signal_frequency) -> np.ndarray | float:
    """k(wp) - k(ws) - k(wp - ws) - 2 pi / Lambda in rad/m."""
    if source.poling_period is None:
        raise CalibrationError("source has no poling period; calibrate first")
    m, t = source.crystal_material, source.temperature
    wp = source.pump_frequency
    ws = np.asarray(signal_frequency, dtype=float)
    grating = 2 * np.pi / (source.poling_period * 1e-6)
    return wavenumber(m, wp, t) - wavenumber(m, ws, t) - wavenumber(m, wp - ws, t) - grating


def calibrate_poling_period(source: SpdcSource, temperature: Optional[float] = None,
                            bracket: tuple[float, float] = (1.0, 50.0)) -> float:
    """Poling period (um) that phase-matches degenerate emission, by bisection."""
    if temperature is not None:
        source = replace(source, temperature=temperature)
    wd = source.degenerate_frequency

    def mismatch(period_um):
        return delta_k(replace(source, poling_period=period_um), wd)

    lo, hi = bracket
    if np.sign(mismatch(lo)) == np.sign(mismatch(hi)):
        raise CalibrationError(f"no sign change of delta_k in bracket {bracket} um")
    return bisect(mismatch, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=200)


def calibrated(source: SpdcSource) -> SpdcSource:
    return replace(source, poling_period=calibrate_poling_period(source))


@dataclass(frozen=True)
class PhaseMatchingFunction:
    grid: SpectralGrid
    amplitude: np.ndarray
    squared: np.ndarray = field(repr=False)
    source: SpdcSource = field(repr=False, default=None)


def sinc(x):
    """sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x) / np.pi)


def phase_matching(source: SpdcSource, grid: SpectralGrid,
                   bandwidth_scale: float = 1.0) -> PhaseMatchingFunction:
    """Phi on *grid*; ``bandwidth_scale`` stretches it in detuning, Phi(dw / scale)."""
    if bandwidth_scale <= 0:
        raise ValueError("bandwidth_scale must be positive")
    omega = grid.omega if bandwidth_scale == 1.0 else grid.center + grid.delta_omega / bandwidth_scale
    dk = delta_k(source, omega)
    phi = sinc(dk * source.crystal_length * 1e-3 / 2)
    return PhaseMatchingFunction(grid, phi, phi * phi, source)


def _half_crossings(x: np.ndarray, y: np.ndarray, peak: int, level: float) -> tuple[float, float]:
    """Linearly interpolated crossings of *level* on either side of index *peak*."""
    below = np.flatnonzero(y[:peak] < level)
    above = np.flatnonzero(y[peak:] < level)
    if below.size == 0 or above.size == 0:
        raise GridTooNarrowError("half-maximum not bracketed inside the grid")
    i = below[-1]
    left = x[i] + (level - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    k = peak + above[0]
    right = x[k - 1] + (level - y[k - 1]) * (x[k] - x[k - 1]) / (y[k] - y[k - 1])
    return left, right


def spectrum_crossings(pmf: PhaseMatchingFunction) -> tuple[float, float]:
    """Half-maximum detunings (rad/s) of |Phi|^2 around the central lobe."""
    y = pmf.squared
    peak = int(np.argmax(y))
    return _half_crossings(pmf.grid.delta_omega, y, peak, 0.5 * y[peak])


def spectrum_bandwidth_fwhm(pmf: PhaseMatchingFunction) -> float:
    """FWHM of |Phi|^2 expressed in signal wavelength (nm)."""
    lo, hi = spectrum_crossings(pmf)
    wd = pmf.grid.center
    return float(omega_to_nm(wd + lo) - omega_to_nm(wd + hi))


def fit_crystal_length(source: SpdcSource, grid: SpectralGrid,
                       target_nm: float = MEASURED_BANDWIDTH_NM) -> float:
    """Effective crystal length (mm) whose |Phi|^2 FWHM equals *target_nm*."""

    def err(length_mm):
        return spectrum_bandwidth_fwhm(phase_matching(replace(source, crystal_length=length_mm),
                                                      grid)) - target_nm

    return brentq(err, 0.05, 50.0, xtol=1e-12, rtol=1e-12)


def photons_per_mode(flux: float, center_wavelength: float, bandwidth_fwhm: float) -> float:
    """Mean photon number per spectral mode, flux / (c dlambda / lambda^2)."""
    if flux < 0 or center_wavelength <= 0 or bandwidth_fwhm <= 0:
        raise ValueError("flux must be >= 0, wavelength and bandwidth > 0")
    dnu = c * (bandwidth_fwhm * 1e-9) / (center_wavelength * 1e-9) ** 2
    return flux / dnu
