"""Upconversion correlation R(tau) of a dispersed biphoton and its peak metrics.

Phases are in rad, detunings in rad/s, delays in fs. R(tau) is the squared
modulus of sum_j a_j exp(i dw_j tau) dw with the common carrier removed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Optional

import numpy as np

from .spdc import PhaseMatchingFunction, SpectralGrid, _half_crossings

FS = 1e-15
OPTICAL_PERIOD_1064_FS = 1064e-9 / 299792458.0 / FS


class GridMismatchError(ValueError):
    pass


class AliasingError(ValueError):
    pass


class PeakError(ValueError):
    pass


@dataclass(frozen=True)
class ArmPhase:
    """Spectral phase of one arm, either a Taylor polynomial about omega_d or sampled.

    Polynomial coefficients are phi', phi'', phi''' in fs, fs^2, fs^3. A
    sampled phase carries its own grid and derivatives (see
    :func:`fransonsim.compressor.spectral_phase`).
    """

    coefficients: Optional[tuple[float, float, float]] = None
    sampled: Optional[object] = None

    def __post_init__(self):
        if (self.coefficients is None) == (self.sampled is None):
            raise ValueError("exactly one of coefficients / sampled must be given")

    @classmethod
    def polynomial(cls, phi1: float = 0.0, phi2: float = 0.0, phi3: float = 0.0) -> "ArmPhase":
        return cls(coefficients=(float(phi1), float(phi2), float(phi3)))

    @classmethod
    def raytraced(cls, spectral_phase) -> "ArmPhase":
        return cls(sampled=spectral_phase)

    @property
    def mode(self) -> str:
        return "polynomial" if self.coefficients is not None else "raytraced"

    @property
    def derivatives(self) -> tuple[float, float, float]:
        if self.coefficients is not None:
            return self.coefficients
        s = self.sampled
        return (s.phi1_fs, s.phi2_fs2, s.phi3_fs3)

    def evaluate(self, grid: SpectralGrid, mirrored: bool = False) -> np.ndarray:
        """phi(omega_d + dw) on the grid, or phi(omega_d - dw) if *mirrored*."""
        if self.coefficients is not None:
            x = grid.delta_omega * FS
            if mirrored:
                x = -x
            out = np.zeros_like(x)
            for n, cn in enumerate(self.coefficients, start=1):
                out += cn * x**n / factorial(n)
            return out
        s = self.sampled
        if s.grid != grid:
            raise GridMismatchError("sampled arm phase lives on a different grid")
        return s.phase[::-1].copy() if mirrored else np.asarray(s.phase, dtype=float)


def combined_phase(signal: ArmPhase, idler: ArmPhase, grid: SpectralGrid) -> np.ndarray:
    """theta(dw) = phi_s(omega_d + dw) + phi_i(omega_d - dw)."""
    return signal.evaluate(grid) + idler.evaluate(grid, mirrored=True)


def cancellation_residual(signal: ArmPhase, idler: ArmPhase) -> dict[int, float]:
    """phi_s^(n) + (-1)^n phi_i^(n) for n = 1..3."""
    s, i = signal.derivatives, idler.derivatives
    return {n: s[n - 1] + (-1) ** n * i[n - 1] for n in (1, 2, 3)}


@dataclass(frozen=True)
class BiphotonAmplitude:
    grid: SpectralGrid
    values: np.ndarray


def assemble_amplitude(pmf: PhaseMatchingFunction, theta: np.ndarray,
                       grid: Optional[SpectralGrid] = None) -> BiphotonAmplitude:
    if grid is not None and grid != pmf.grid:
        raise GridMismatchError("phase and phase-matching grids differ")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != pmf.squared.shape:
        raise GridMismatchError(f"phase has {theta.size} samples, grid has {pmf.squared.size}")
    return BiphotonAmplitude(pmf.grid, pmf.squared * np.exp(1j * theta))


@dataclass(frozen=True)
class CorrelationTrace:
    tau: np.ndarray  # fs
    rate: np.ndarray
    note: str = "arbitrary units"

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0])

    def normalized(self, reference_height: float) -> "CorrelationTrace":
        return CorrelationTrace(self.tau, self.rate / reference_height,
                                "normalized to zero-GDD reference peak")

    def shifted(self, delay: float) -> "CorrelationTrace":
        """Same samples with the tau axis moved by *delay* fs (stage compensation)."""
        return CorrelationTrace(self.tau + delay, self.rate, self.note)


def fft_size(grid: SpectralGrid, max_step_fs: float = 0.5) -> int:
    """Smallest power of two giving tau resolution <= *max_step_fs*."""
    need = 2 * np.pi / (grid.spacing * max_step_fs * FS)
    return int(max(grid.sample_count, 2 ** int(np.ceil(np.log2(need)))))


def correlation_trace(amplitude: BiphotonAmplitude, tau_span: Optional[float] = 400.0,
                      tau_samples: Optional[int] = None, max_step_fs: float = 0.5,
                      center: float = 0.0) -> CorrelationTrace:
    """R(tau) on a window of width *tau_span* fs about *center* via zero-padded FFT.

    The FFT delay step is fixed by the padding; ``tau_samples`` only caps the
    number of returned points (it must agree with the window at that step).
    ``tau_span=None`` returns one full alias period, on which sum(R) dtau is
    exactly 2 pi dw sum|a|^2.
    """
    grid = amplitude.grid
    dw = grid.spacing
    period = 2 * np.pi / dw / FS
    if tau_span is None:
        m = fft_size(grid, max_step_fs)
        spec = np.fft.ifft(amplitude.values, n=m) * m * dw
        k = np.arange(-(m // 2), m - m // 2)
        return CorrelationTrace(k * period / m, np.abs(spec[k % m]) ** 2)
    half = tau_span / 2
    if tau_span <= 0 or abs(center) + half >= period / 2:
        raise AliasingError(
            f"tau window +-{half} fs about {center} fs exceeds the alias-free range "
            f"+-{period / 2:.1f} fs of this grid"
        )
    m = fft_size(grid, max_step_fs)
    # sum_j a_j e^{i dw_j tau_k}, tau_k = k * 2 pi / (m dw); the e^{-i H tau} factor drops
    spec = np.fft.ifft(amplitude.values, n=m) * m * dw
    step = period / m
    k0 = int(np.ceil((center - half) / step))
    k1 = int(np.floor((center + half) / step))
    k = np.arange(k0, k1 + 1)
    if tau_samples is not None and k.size > tau_samples:
        raise ValueError(f"{tau_samples} samples cannot cover the window at step {step:.3f} fs")
    vals = spec[k % m]
    return CorrelationTrace(k * step, np.abs(vals) ** 2)


def direct_correlation(amplitude: BiphotonAmplitude, tau) -> np.ndarray:
    """Quadrature-sum oracle for :func:`correlation_trace` at arbitrary delays."""
    x = amplitude.grid.delta_omega
    tau = np.atleast_1d(np.asarray(tau, dtype=float)) * FS
    s = np.exp(1j * np.outer(tau, x)) @ amplitude.values * amplitude.grid.spacing
    return np.abs(s) ** 2


@dataclass(frozen=True)
class PeakMetrics:
    fwhm: float
    centroid: float
    height: float
    peak_tau: float
    half_points: tuple[float, float]
    secondary_maxima: list = field(default_factory=list)
    skewness: float = 0.0

    def to_dict(self) -> dict:
        return {
            "fwhm_fs": self.fwhm,
            "centroid_fs": self.centroid,
            "height": self.height,
            "peak_tau_fs": self.peak_tau,
            "half_points_fs": list(self.half_points),
            "secondary_maxima": [[t, r] for t, r in self.secondary_maxima],
            "skewness": self.skewness,
        }


def _support(r: np.ndarray, peak: int, level: float) -> tuple[int, int]:
    lo = peak
    while lo > 0 and r[lo - 1] >= level:
        lo -= 1
    hi = peak
    while hi < r.size - 1 and r[hi + 1] >= level:
        hi += 1
    return lo, hi


def peak_metrics(trace: CorrelationTrace, threshold_fraction: float = 0.1,
                 secondary_fraction: Optional[float] = None) -> PeakMetrics:
    """Height, FWHM, centroid, secondary maxima and skewness of the main peak.

    Centroid and skewness use the contiguous region around the maximum where
    R >= threshold_fraction * height. Secondary maxima are local maxima
    outside the half-height interval above ``secondary_fraction * height``
    (defaults to ``threshold_fraction``).
    """
    if secondary_fraction is None:
        secondary_fraction = threshold_fraction
    tau, r = trace.tau, trace.rate
    peak = int(np.argmax(r))
    if peak == 0 or peak == r.size - 1:
        raise PeakError("global maximum sits on the edge of the tau window")
    height = float(r[peak])
    try:
        left, right = _half_crossings(tau, r, peak, 0.5 * height)
    except ValueError as err:
        raise PeakError("no half-height crossing inside the tau window") from err
    lo, hi = _support(r, peak, threshold_fraction * height)
    t, w = tau[lo:hi + 1], r[lo:hi + 1]
    centroid = float(np.sum(t * w) / np.sum(w))
    var = np.sum((t - centroid) ** 2 * w) / np.sum(w)
    skew = float(np.sum((t - centroid) ** 3 * w) / np.sum(w) / var**1.5)
    inner = (r[1:-1] >= r[:-2]) & (r[1:-1] > r[2:])
    idx = np.flatnonzero(inner) + 1
    sec = [(float(tau[i]), float(r[i])) for i in idx
           if (tau[i] < left or tau[i] > right) and r[i] >= secondary_fraction * height]
    return PeakMetrics(float(right - left), centroid, height, float(tau[peak]),
                       (float(left), float(right)), sec, skew)
