"""Scenario and noise configuration (JSON-compatible)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

DELTA_FS2 = 367.0
GLASS_STEP_MM = 3.5


@dataclass(frozen=True)
class Case:
    """One scenario; GDD given in multiples of the step Delta."""

    label: str
    signal_steps: int
    idler_steps: int


FIG2_CASES = (
    Case("a", 0, 0),
    Case("b", -1, 0),
    Case("c", -2, 0),
    Case("d", -3, 0),
    Case("e", 0, 1),
    Case("f", 0, 2),
    Case("g", 0, 3),
)

FIG3_CASES = (
    Case("a", 0, 0),
    Case("b", -1, 1),
    Case("c", -2, 2),
    Case("d", -3, 3),
)


@dataclass(frozen=True)
class NoiseModel:
    peak_rate: float = 1500.0
    dark_rate: float = 165.0
    stray_rate: float = 10.0
    dwell: float = 6.0
    seed: int = 0

    def __post_init__(self):
        for name in ("peak_rate", "dark_rate", "stray_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.dwell <= 0:
            raise ValueError("dwell must be positive")

    @property
    def background(self) -> float:
        return self.dark_rate + self.stray_rate


@dataclass(frozen=True)
class CompressorConfig:
    tip_spacing: float
    depths: tuple[float, float, float, float]
    pair_gap: float = 100.0
    moved_prism: int = 3


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce a run.

    ``phase_mode`` is "polynomial" (exact GDD coefficients) or "raytraced"
    (GDD from moving P3 of each compressor by glass multiples of
    ``glass_step_mm``). The correlation grid spans the prism passband, from
    ``passband_blue_nm`` to its mirror frequency about omega_d.
    """

    cases: tuple[Case, ...] = FIG3_CASES
    delta_fs2: float = DELTA_FS2
    glass_step_mm: float = GLASS_STEP_MM
    phase_mode: str = "raytraced"
    bandwidth_scale: float = 1.0
    fit_bandwidth: bool = True
    target_bandwidth_nm: float = 117.0
    crystal_length_mm: float = 5.0
    temperature_c: float = 50.0
    pump_wavelength_nm: float = 532.0
    grid_samples: int = 2**14
    passband_blue_nm: float = 900.0
    tau_span_fs: float = 400.0
    max_tau_step_fs: float = 0.5
    threshold_fraction: float = 0.1
    secondary_fraction: float = 0.01
    signal: CompressorConfig = CompressorConfig(500.0, (2.0, 17.5, 17.5, 2.0))
    idler: CompressorConfig = CompressorConfig(352.0, (2.0, 10.0, 10.0, 2.0))
    noise: Optional[NoiseModel] = None
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.phase_mode not in ("polynomial", "raytraced"):
            raise ValueError(f"unknown phase_mode {self.phase_mode!r}")
        if self.bandwidth_scale <= 0:
            raise ValueError("bandwidth_scale must be positive")
        labels = [c.label for c in self.cases]
        if len(set(labels)) != len(labels):
            raise ValueError("case labels must be unique")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "cases" in d:
            d["cases"] = tuple(Case(**c) if isinstance(c, dict) else Case(*c) for c in d["cases"])
        for arm in ("signal", "idler"):
            if arm in d and isinstance(d[arm], dict):
                a = dict(d[arm])
                a["depths"] = tuple(a["depths"])
                d[arm] = CompressorConfig(**a)
        if d.get("noise") is not None and isinstance(d["noise"], dict):
            d["noise"] = NoiseModel(**d["noise"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
