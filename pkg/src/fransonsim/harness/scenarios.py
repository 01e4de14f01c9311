"""End-to-end reproduction of the dispersion-sensitivity and cancellation sweeps."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .. import compressor as comp
from ..correlation import (
    ArmPhase,
    CorrelationTrace,
    PeakMetrics,
    assemble_amplitude,
    cancellation_residual,
    combined_phase,
    correlation_trace,
    peak_metrics,
)
from ..materials import SF10, group_index, nm_to_omega, refractive_index
from ..spdc import (
    PhaseMatchingFunction,
    SpdcSource,
    SpectralGrid,
    calibrated,
    default_grid,
    fit_crystal_length,
    phase_matching,
)
from .config import FIG2_CASES, FIG3_CASES, Case, ScenarioConfig

log = logging.getLogger(__name__)

FS = 1e-15


class IllConditionedError(ValueError):
    pass


@dataclass(frozen=True)
class Model:
    """Source, grid and compressor baselines shared by every case of a run."""

    config: ScenarioConfig
    source: SpdcSource
    grid: SpectralGrid
    pmf: PhaseMatchingFunction
    signal_base: comp.CompressorLayout
    idler_base: comp.CompressorLayout
    signal_translator: float  # stage mm per mm of glass
    idler_translator: float
    group_index: float
    deflection: float

    def insertion_delay(self, glass_mm: float) -> float:
        return comp.insertion_delay(glass_mm, self.group_index, self.deflection)


def _layout(arm_cfg, design_wavelength, moved_mm=0.0):
    ins = [0.0, 0.0, 0.0, 0.0]
    ins[arm_cfg.moved_prism - 1] = moved_mm
    return comp.build_compressor(arm_cfg.tip_spacing, ins, design_wavelength,
                                 depths=arm_cfg.depths, pair_gap=arm_cfg.pair_gap)


@lru_cache(maxsize=16)
def prepare(config: ScenarioConfig) -> Model:
    source = calibrated(SpdcSource(pump_wavelength=config.pump_wavelength_nm,
                                   crystal_length=config.crystal_length_mm,
                                   temperature=config.temperature_c))
    if config.fit_bandwidth:
        length = fit_crystal_length(source, default_grid(source), config.target_bandwidth_nm)
        log.info("effective crystal length %.4f mm for %.1f nm bandwidth", length,
                 config.target_bandwidth_nm)
        source = replace(source, crystal_length=length)
    wd = source.degenerate_frequency
    grid = SpectralGrid(wd, float(nm_to_omega(config.passband_blue_nm) - wd), config.grid_samples)
    pmf = phase_matching(source, grid, bandwidth_scale=config.bandwidth_scale)
    lam_d = source.degenerate_wavelength
    s_base = _layout(config.signal, lam_d)
    i_base = _layout(config.idler, lam_d)
    n = refractive_index(SF10, lam_d)
    return Model(
        config=config,
        source=source,
        grid=grid,
        pmf=pmf,
        signal_base=s_base,
        idler_base=i_base,
        signal_translator=comp.glass_to_translator(s_base, 1.0, config.signal.moved_prism),
        idler_translator=comp.glass_to_translator(i_base, 1.0, config.idler.moved_prism),
        group_index=group_index(SF10, lam_d),
        deflection=comp.min_deviation_geometry(n, s_base.prisms[0].apex_angle)["deflection"],
    )


@dataclass
class CaseResult:
    case: Case
    phi2_s: float
    phi2_i: float
    glass_s: float  # mm of glass added to the signal arm (negative: withdrawn)
    glass_i: float
    stage_delay: float  # fs of tau compensation applied to the window
    residual: dict
    trace: CorrelationTrace  # compensated, normalized to the zero-GDD reference peak
    metrics: PeakMetrics
    raw_centroid: float
    signal_phase: ArmPhase = field(repr=False, default=None)
    idler_phase: ArmPhase = field(repr=False, default=None)

    def to_dict(self) -> dict:
        d = {
            "case": self.case.label,
            "phi2_s_fs2": self.phi2_s,
            "phi2_i_fs2": self.phi2_i,
            "glass_s_mm": self.glass_s,
            "glass_i_mm": self.glass_i,
            "stage_delay_fs": self.stage_delay,
            "raw_centroid_fs": self.raw_centroid,
            "residual1_fs": self.residual[1],
            "residual2_fs2": self.residual[2],
            "residual3_fs3": self.residual[3],
        }
        d.update(self.metrics.to_dict())
        return d


@dataclass
class RunResult:
    config: ScenarioConfig
    cases: dict[str, CaseResult]
    summary: dict
    name: str = "run"
    reference_height: float = 1.0
    group_indices: Optional[dict] = None

    def metrics(self) -> list[dict]:
        return [c.to_dict() for c in self.cases.values()]


def arm_phases(model: Model, case: Case) -> tuple[ArmPhase, ArmPhase, float, float]:
    """Signal/idler phases for *case* plus the glass changes (mm) that realise them."""
    cfg = model.config
    glass_s = case.signal_steps * cfg.glass_step_mm
    glass_i = case.idler_steps * cfg.glass_step_mm
    if cfg.phase_mode == "polynomial":
        s = ArmPhase.polynomial(model.insertion_delay(glass_s), case.signal_steps * cfg.delta_fs2)
        i = ArmPhase.polynomial(model.insertion_delay(glass_i), case.idler_steps * cfg.delta_fs2)
        return s, i, glass_s, glass_i
    phases = []
    for arm_cfg, base, ratio, glass in (
        (cfg.signal, model.signal_base, model.signal_translator, glass_s),
        (cfg.idler, model.idler_base, model.idler_translator, glass_i),
    ):
        layout = _layout(arm_cfg, base.design_wavelength, glass * ratio) if glass else base
        phases.append(ArmPhase.raytraced(_traced_phase(layout, base, model.grid)))
    return phases[0], phases[1], glass_s, glass_i


@lru_cache(maxsize=64)
def _traced_phase(layout, base, grid):
    return comp.spectral_phase(layout, grid, reference=base)


def run_case(model: Model, case: Case, reference_height: float = 1.0) -> CaseResult:
    cfg = model.config
    s, i, glass_s, glass_i = arm_phases(model, case)
    stage = model.insertion_delay(glass_i) - model.insertion_delay(glass_s)
    # R_comp(tau) = R(tau + stage)
    theta = combined_phase(s, i, model.grid) + stage * FS * model.grid.delta_omega
    amp = assemble_amplitude(model.pmf, theta)
    trace = correlation_trace(amp, cfg.tau_span_fs, max_step_fs=cfg.max_tau_step_fs)
    trace = trace.normalized(reference_height)
    m = peak_metrics(trace, cfg.threshold_fraction, cfg.secondary_fraction)
    return CaseResult(
        case=case,
        phi2_s=s.derivatives[1],
        phi2_i=i.derivatives[1],
        glass_s=glass_s,
        glass_i=glass_i,
        stage_delay=stage,
        residual=cancellation_residual(s, i),
        trace=trace,
        metrics=m,
        raw_centroid=m.centroid + stage,
        signal_phase=s,
        idler_phase=i,
    )


def reference_height(model: Model) -> float:
    """Peak of the zero-GDD trace, used as the unit of every normalized trace."""
    ref = run_case(model, Case("ref", 0, 0))
    return ref.metrics.height


def run_cases(config: ScenarioConfig, cases: Optional[Sequence[Case]] = None,
              name: str = "run") -> RunResult:
    model = prepare(config)
    cases = tuple(cases if cases is not None else config.cases)
    h0 = reference_height(model)
    out = {c.label: run_case(model, c, h0) for c in cases}
    widths = np.array([r.metrics.fwhm for r in out.values()])
    heights = {k: r.metrics.height for k, r in out.items()}
    summary = {
        "phase_mode": config.phase_mode,
        "effective_crystal_length_mm": model.source.crystal_length,
        "poling_period_um": model.source.poling_period,
        "mean_fwhm_fs": float(widths.mean()),
        "fwhm_spread_fs": float(widths.max() - widths.min()),
        "max_abs_fwhm_deviation_fs": float(np.max(np.abs(widths - widths.mean()))),
        "height_ratios": heights,
        "skewness": {k: r.metrics.skewness for k, r in out.items()},
    }
    return RunResult(config, out, summary, name=name, reference_height=h0)


def _monotone_heights(result: RunResult, labels: Sequence[str]) -> bool:
    h = [result.cases[k].metrics.height for k in labels if k in result.cases]
    return all(b < a for a, b in zip(h, h[1:]))


def run_fig2(config: ScenarioConfig) -> RunResult:
    """One-arm GDD sweep: {0,0}, {-D,0}..{-3D,0}, {0,D}..{0,3D}."""
    res = run_cases(replace(config, cases=FIG2_CASES), name="fig2")
    res.summary["heights_decrease_signal"] = _monotone_heights(res, "abcd")
    res.summary["heights_decrease_idler"] = _monotone_heights(res, "aefg")
    return res


def run_fig3(config: ScenarioConfig) -> RunResult:
    """Cancellation sweep {-kD, +kD}, k = 0..3."""
    res = run_cases(replace(config, cases=FIG3_CASES), name="fig3")
    res.summary["residual3_fs3"] = {k: r.residual[3] for k, r in res.cases.items()}
    res.group_indices = extract_group_index(res)
    res.summary["group_index"] = res.group_indices
    return res


def extract_group_index(results: RunResult, glass_steps: Optional[Sequence[float]] = None,
                        deflection: Optional[float] = None) -> dict:
    """Invert the insertion-delay formula on raw centroid shifts.

    Each case contributes N = c tau / (dL_i - dL_s) + 1/cos(deflection/2),
    where tau is its raw centroid relative to the zero-glass case.
    """
    model = prepare(results.config)
    theta = model.deflection if deflection is None else deflection
    sec = 1 / np.cos(np.radians(theta) / 2)
    items = list(results.cases.values())
    if glass_steps is not None:
        if len(glass_steps) != len(items):
            raise ValueError("one glass step per case required")
        dls = [(-g, g) for g in glass_steps]
    else:
        dls = [(r.glass_s, r.glass_i) for r in items]
    zero = [r.raw_centroid for r, (gs, gi) in zip(items, dls) if gs == 0 and gi == 0]
    origin = zero[0] if zero else 0.0
    per_case = {}
    for r, (gs, gi) in zip(items, dls):
        span = gi - gs
        if span == 0:
            continue
        tau = r.raw_centroid - origin
        per_case[r.case.label] = comp.C_MM_PER_FS * tau / span + sec
    if not per_case:
        raise IllConditionedError("no case has a nonzero glass change")
    return {"per_case": per_case, "mean": float(np.mean(list(per_case.values())))}


def bandwidth_scaling_study(config: ScenarioConfig, scale_list: Sequence[float] = (1.0, 1.25, 1.5),
                            case: Case = FIG3_CASES[-1]) -> list[dict]:
    """Re-run one cancellation case with |Phi|^2 stretched in frequency by each scale."""
    rows = []
    for s in scale_list:
        if s <= 0:
            raise ValueError("bandwidth scales must be positive")
        cfg = replace(config, bandwidth_scale=float(s))
        model = prepare(cfg)
        h0 = reference_height(model)
        r = run_case(model, case, h0)
        control = run_case(model, Case("control", 0, 0), h0)
        rows.append({
            "scale": float(s),
            "fwhm_fs": r.metrics.fwhm,
            "skewness": r.metrics.skewness,
            "residual3_fs3": r.residual[3],
            "height": r.metrics.height,
            "control_fwhm_fs": control.metrics.fwhm,
            "control_skewness": control.metrics.skewness,
        })
    return rows
