"""Poisson count simulation and before/after background subtraction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..correlation import CorrelationTrace
from .config import NoiseModel

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class NoisyTrace:
    tau: np.ndarray
    expected: np.ndarray  # s^-1
    rate: np.ndarray  # counts / dwell
    error: np.ndarray  # sqrt(counts) / dwell
    counts: np.ndarray
    dwell: float


@dataclass(frozen=True)
class BackgroundMeasurement:
    """Beam-blocked rate plus the increase seen with the pump-pass filter in place."""

    blocked_rate: float
    stray_increment: float
    error: float = 0.0

    @property
    def total(self) -> float:
        return self.blocked_rate + self.stray_increment


@dataclass(frozen=True)
class CorrectedTrace:
    tau: np.ndarray
    rate: np.ndarray
    error: np.ndarray
    background: float
    negative: np.ndarray  # points below zero after subtraction; kept, not clamped


def expected_rate(trace: CorrelationTrace, noise: NoiseModel) -> np.ndarray:
    return noise.peak_rate * trace.rate + noise.dark_rate + noise.stray_rate


def simulate_counts(trace: CorrelationTrace, noise: NoiseModel,
                    rng: Optional[np.random.Generator] = None) -> NoisyTrace:
    """Sample counts ~ Poisson(rate * dwell) at every delay; *trace* must have peak 1."""
    if rng is None:
        rng = make_rng(noise.seed)
    lam = expected_rate(trace, noise)
    counts = rng.poisson(lam * noise.dwell)
    return NoisyTrace(trace.tau, lam, counts / noise.dwell, np.sqrt(counts) / noise.dwell,
                      counts, noise.dwell)


def simulate_background(noise: NoiseModel, rng: np.random.Generator) -> BackgroundMeasurement:
    """One blocked-path dwell and one filter-in-place dwell."""
    blocked = rng.poisson(noise.dark_rate * noise.dwell)
    filtered = rng.poisson((noise.dark_rate + noise.stray_rate) * noise.dwell)
    return BackgroundMeasurement(blocked / noise.dwell, (filtered - blocked) / noise.dwell,
                                 float(np.sqrt(filtered) / noise.dwell))


def subtract_background(noisy: NoisyTrace,
                        background_measurements: Sequence[BackgroundMeasurement]) -> CorrectedTrace:
    """Subtract the mean of the before/after backgrounds; errors add in quadrature."""
    if len(background_measurements) != 2:
        raise ValueError("expected exactly two background measurements (before, after)")
    before, after = background_measurements
    b = 0.5 * (before.total + after.total)
    b_err = 0.5 * np.hypot(before.error, after.error)
    corrected = noisy.rate - b
    return CorrectedTrace(noisy.tau, corrected, np.hypot(noisy.error, b_err), b, corrected < 0)
