"""Four-prism compressor: 2D sequential ray trace and derived spectral phase.

Geometry lives in the dispersion plane, lengths in mm. The input design ray
starts at the origin travelling along +x. The layout is P1 (deviates
clockwise), P2 (restores), a straight gap, then P3/P4 as the mirror image of
P2/P1, so every wavelength leaves parallel to +x.

``tip_spacing`` is the design-ray length between P1's exit face and P2's
entry face (and between P3 and P4). Prism insertion is a translation along
the prism altitude; positive values push the apex further past the beam.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c

from .materials import (
    SF10,
    MaterialModel,
    group_index,
    nm_to_omega,
    omega_to_nm,
    refractive_index,
)

C_MM_PER_FS = c * 1e3 * 1e-15
# relative step in omega for phase derivatives; see derivatives()
PHASE_FD_STEP = 1e-3


class TraceError(RuntimeError):
    """A ray missed a prism face or was totally internally reflected."""

    def __init__(self, message: str, prism: int | None = None, miss_mm: float | None = None,
                 omega: float | None = None):
        self.prism = prism
        self.miss_mm = miss_mm
        self.omega = omega
        super().__init__(message)


class GeometryError(ValueError):
    pass


def _rot(v: np.ndarray, angle: float) -> np.ndarray:
    ca, sa = np.cos(angle), np.sin(angle)
    return np.array([ca * v[0] - sa * v[1], sa * v[0] + ca * v[1]])


def min_deviation_geometry(index: float, apex_angle: float) -> dict:
    """Incidence angle and total deflection (degrees) at minimum deviation."""
    s = index * np.sin(np.radians(apex_angle) / 2)
    if s > 1:
        raise GeometryError(
            f"n sin(apex/2) = {s:.6f} > 1: no propagation at minimum deviation"
        )
    inc = np.degrees(np.arcsin(s))
    return {"incidence_angle": float(inc), "deflection": float(2 * inc - apex_angle)}


@dataclass(frozen=True)
class PrismSpec:
    apex_angle: float = 60.0
    side_length: float = 30.0
    material: MaterialModel = SF10
    insertion: float = 0.0

    def __post_init__(self):
        if not 0 < self.apex_angle < 180:
            raise GeometryError(f"apex angle {self.apex_angle} outside (0, 180)")
        if self.side_length <= 0:
            raise GeometryError("side length must be positive")


@dataclass(frozen=True)
class _PlacedPrism:
    apex: np.ndarray
    entry_end: np.ndarray  # far vertex of the entry face
    exit_end: np.ndarray
    material: MaterialModel


@dataclass(frozen=True)
class CompressorLayout:
    """Placed four-prism compressor.

    ``depths`` are the design-ray depths below each apex (along the altitude)
    before insertion; ``prisms[j].insertion`` adds to them.
    """

    prisms: tuple[PrismSpec, PrismSpec, PrismSpec, PrismSpec]
    tip_spacing: float
    design_wavelength: float = 1064.0
    depths: tuple[float, float, float, float] = (2.0, 10.0, 10.0, 2.0)
    pair_gap: float = 100.0
    lead_in: float = 10.0
    temperature: float = 20.0
    arrangement: str = "symmetric minimum-deviation"
    placed: tuple = field(default=(), compare=False, repr=False)
    output_x: float = field(default=0.0, compare=False)
    closure_residual: float = field(default=0.0, compare=False)

    @property
    def insertions(self) -> tuple[float, ...]:
        return tuple(p.insertion for p in self.prisms)


# deviation sense of P1..P4 (+1 counter-clockwise)
_SENSES = (-1, +1, +1, -1)


def _place(prisms, tip_spacing, design_wavelength, depths, pair_gap, lead_in, temperature):
    """Place the nominal (zero-insertion) prisms around the design ray.

    Returns the placed prisms and the nominal exit point of P4.
    """
    p = np.array([0.0, 0.0])
    d = np.array([1.0, 0.0])
    gaps = (lead_in, tip_spacing, pair_gap, tip_spacing)
    placed = []
    for j, (spec, sense, depth, gap) in enumerate(zip(prisms, _SENSES, depths, gaps)):
        n = refractive_index(spec.material, design_wavelength, temperature)
        geo = min_deviation_geometry(n, spec.apex_angle)
        half = np.radians(spec.apex_angle) / 2
        d_int = _rot(d, sense * np.radians(geo["deflection"]) / 2)
        u = _rot(d_int, -sense * np.pi / 2)
        entry = p + gap * d
        chord = 2 * depth * np.tan(half)
        apex = entry + 0.5 * chord * d_int + depth * u
        exit_pt = entry + chord * d_int
        if depth <= 0 or depth / np.cos(half) >= spec.side_length:
            raise GeometryError(f"P{j + 1}: design ray misses the faces at depth {depth} mm")
        e_dir = (entry - apex) / np.linalg.norm(entry - apex)
        x_dir = (exit_pt - apex) / np.linalg.norm(exit_pt - apex)
        placed.append(
            _PlacedPrism(apex, apex + spec.side_length * e_dir, apex + spec.side_length * x_dir,
                         spec.material)
        )
        p = exit_pt
        d = _rot(d, sense * np.radians(geo["deflection"]))
    return placed, p


def build_compressor(
    tip_spacing: float,
    insertions: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
    design_wavelength: float = 1064.0,
    prism: PrismSpec = PrismSpec(),
    depths: Sequence[float] = (2.0, 10.0, 10.0, 2.0),
    pair_gap: float = 100.0,
    lead_in: float = 10.0,
    temperature: float = 20.0,
) -> CompressorLayout:
    """Build a symmetric four-prism layout and check that it closes.

    The nominal layout is placed at minimum deviation for *design_wavelength*;
    insertions then translate individual prisms along their altitude.
    """
    if len(insertions) != 4 or len(depths) != 4:
        raise GeometryError("need exactly four insertions and depths")
    prisms = tuple(replace(prism, insertion=float(x)) for x in insertions)
    nominal, exit_pt = _place(prisms, tip_spacing, design_wavelength, tuple(depths), pair_gap,
                              lead_in, temperature)
    placed = []
    for j, (pp, spec) in enumerate(zip(nominal, prisms)):
        # altitude direction: from base midpoint toward the apex
        mid_base = 0.5 * (pp.entry_end + pp.exit_end)
        u = (pp.apex - mid_base) / np.linalg.norm(pp.apex - mid_base)
        shift = spec.insertion * u
        placed.append(replace(pp, apex=pp.apex + shift, entry_end=pp.entry_end + shift,
                              exit_end=pp.exit_end + shift))
    layout = CompressorLayout(
        prisms=prisms,
        tip_spacing=float(tip_spacing),
        design_wavelength=float(design_wavelength),
        depths=tuple(float(x) for x in depths),
        pair_gap=float(pair_gap),
        lead_in=float(lead_in),
        temperature=float(temperature),
        placed=tuple(placed),
        output_x=float(exit_pt[0] + lead_in),
    )
    ray = _trace(layout, np.array([nm_to_omega(design_wavelength)]))
    if not np.all(ray["ok"]):
        raise GeometryError(f"design ray misses prism P{ray['fail_prism'] + 1}")
    residual = float(abs(np.arctan2(ray["dir"][0, 1], ray["dir"][0, 0])))
    if residual > 1e-9:
        raise GeometryError(f"layout does not close: exit angle {residual:.3e} rad")
    return replace(layout, closure_residual=residual)


def _intersect(o, d, a, b):
    """Ray-segment intersection: distance t along the ray and segment param s."""
    e = b - a
    denom = d[:, 0] * e[1] - d[:, 1] * e[0]
    w = a - o
    t = (w[:, 0] * e[1] - w[:, 1] * e[0]) / denom
    s = (w[:, 0] * d[:, 1] - w[:, 1] * d[:, 0]) / denom
    return t, s


def _refract(d, a, b, n1, n2):
    e = (b - a) / np.linalg.norm(b - a)
    nrm = np.array([-e[1], e[0]])
    cos_i = -(d @ nrm)
    flip = cos_i < 0
    nrm = np.where(flip[:, None], -nrm, nrm)
    cos_i = np.abs(cos_i)
    eta = n1 / n2
    k = 1 - eta**2 * (1 - cos_i**2)
    tir = k < 0
    cos_t = np.sqrt(np.where(tir, 0.0, k))
    out = eta[:, None] * d + (eta * cos_i - cos_t)[:, None] * nrm
    return out / np.linalg.norm(out, axis=1)[:, None], tir


def _trace(layout: CompressorLayout, omega: np.ndarray, origin=None, direction=None,
           reverse: bool = False, keep_points: bool = False) -> dict:
    """Vectorised trace of rays at angular frequencies *omega*.

    Returns per-ray optical path length (mm), in-glass length (mm), final
    point and direction, plus a success mask. Rays that miss a face are
    flagged rather than raised so callers can report every failure.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    m = omega.size
    o = np.tile([0.0, 0.0] if origin is None else origin, (m, 1)).astype(float)
    d = np.tile([1.0, 0.0] if direction is None else direction, (m, 1)).astype(float)
    opl = np.zeros(m)
    glass = np.zeros(m)
    ok = np.ones(m, dtype=bool)
    miss = np.zeros(m)
    fail_prism = -1
    lam = omega_to_nm(omega)
    points = [o.copy()] if keep_points else None
    order = range(4)
    if reverse:
        order = reversed(range(4))
    for j in order:
        pp = layout.placed[j]
        n_glass = refractive_index(pp.material, lam, layout.temperature)
        n_glass = np.broadcast_to(n_glass, (m,)).astype(float)
        faces = [(pp.apex, pp.entry_end), (pp.apex, pp.exit_end)]
        if reverse:
            faces = faces[::-1]
        ones = np.ones(m)
        for f, (a, b) in enumerate(faces):
            t, s = _intersect(o, d, a, b)
            bad = (s < 0) | (s > 1) | (t <= 0)
            if np.any(bad & ok):
                fail_prism = j if fail_prism < 0 else fail_prism
                side = np.linalg.norm(b - a)
                miss = np.where(bad & ok, np.maximum(-s, s - 1) * side, miss)
            ok &= ~bad
            n_here = ones if f == 0 else n_glass
            opl += n_here * t
            if f == 1:
                glass += t
            o = o + t[:, None] * d
            n1, n2 = (ones, n_glass) if f == 0 else (n_glass, ones)
            d, tir = _refract(d, a, b, n1, n2)
            ok &= ~tir
            if keep_points:
                points.append(o.copy())
    return {"opl": opl, "glass": glass, "point": o, "dir": d, "ok": ok, "miss": miss,
            "fail_prism": fail_prism, "points": points}


@dataclass(frozen=True)
class RayPath:
    points: np.ndarray  # (9, 2) mm: start plus eight refraction points
    exit_point: np.ndarray
    exit_direction: np.ndarray


def _to_output_plane(layout, res):
    """Extend traced rays to the plane x = output_x; returns added length."""
    return (layout.output_x - res["point"][:, 0]) / res["dir"][:, 0]


def trace_optical_path(layout: CompressorLayout, angular_frequency: float) -> dict:
    """Trace one frequency from the input plane x=0 to the output plane.

    Returns ``opl`` in m, ``glass_path`` in mm and the :class:`RayPath`.
    """
    res = _trace(layout, np.array([angular_frequency]), keep_points=True)
    if not res["ok"][0]:
        raise TraceError(
            f"ray at {omega_to_nm(angular_frequency):.2f} nm walks off prism "
            f"P{res['fail_prism'] + 1} by {res['miss'][0]:.3f} mm",
            prism=res["fail_prism"] + 1, miss_mm=float(res["miss"][0]),
            omega=float(angular_frequency),
        )
    tail = _to_output_plane(layout, res)
    opl_mm = res["opl"][0] + tail[0]
    pts = np.array([p[0] for p in res["points"]])
    exit_pt = res["point"][0] + tail[0] * res["dir"][0]
    return {
        "opl": opl_mm * 1e-3,
        "glass_path": float(res["glass"][0]),
        "ray": RayPath(np.vstack([pts, exit_pt]), exit_pt, res["dir"][0]),
    }


def optical_path_mm(layout: CompressorLayout, omega) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (opl [mm], glass path [mm]); raises TraceError on any miss."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    res = _trace(layout, omega)
    if not np.all(res["ok"]):
        bad = np.flatnonzero(~res["ok"])[0]
        raise TraceError(
            f"ray at grid point {bad} ({omega_to_nm(omega[bad]):.2f} nm) walks off prism "
            f"P{res['fail_prism'] + 1} by {res['miss'][bad]:.3f} mm",
            prism=res["fail_prism"] + 1, miss_mm=float(res["miss"][bad]), omega=float(omega[bad]),
        )
    return res["opl"] + _to_output_plane(layout, res), res["glass"]


def phase(layout: CompressorLayout, omega) -> np.ndarray:
    """Spectral phase omega*opl/c in rad."""
    opl, _ = optical_path_mm(layout, omega)
    return np.asarray(omega) * opl * 1e-3 / c


def derivatives(layout: CompressorLayout, omega0: float, rel_step: float = PHASE_FD_STEP,
                reference: Optional[CompressorLayout] = None) -> dict:
    """phi', phi'', phi''' at *omega0* in fs, fs^2, fs^3 (5-point stencils).

    If *reference* is given, the derivatives of phase(layout) - phase(reference)
    are returned. The step default (1e-3 omega0) keeps round-off on a metre-scale
    optical path below 1e-3 fs^2 and 0.1 fs^3.
    """
    h = rel_step * omega0
    w = omega0 + h * np.arange(-2, 3)
    p = phase(layout, w)
    if reference is not None:
        p = p - phase(reference, w)
    d1 = (p[0] - 8 * p[1] + 8 * p[3] - p[4]) / (12 * h)
    d2 = (-p[0] + 16 * p[1] - 30 * p[2] + 16 * p[3] - p[4]) / (12 * h**2)
    d3 = (-p[0] + 2 * p[1] - 2 * p[3] + p[4]) / (2 * h**3)
    return {"phi1_fs": d1 * 1e15, "phi2_fs2": d2 * 1e30, "phi3_fs3": d3 * 1e45}


@dataclass(frozen=True)
class SpectralPhase:
    """Sampled compressor phase on a spectral grid plus derivatives at its center."""

    grid: object
    phase: np.ndarray
    phi1_fs: float
    phi2_fs2: float
    phi3_fs3: float
    opl_mm: np.ndarray = field(repr=False, default=None)
    glass_mm: np.ndarray = field(repr=False, default=None)


def spectral_phase(layout: CompressorLayout, grid, reference: Optional[CompressorLayout] = None
                   ) -> SpectralPhase:
    """Trace every grid frequency; derivatives are taken at the grid center."""
    omega = grid.omega
    try:
        opl, glass = optical_path_mm(layout, omega)
        ph = omega * opl * 1e-3 / c
        if reference is not None:
            opl_r, _ = optical_path_mm(reference, omega)
            ph = omega * (opl - opl_r) * 1e-3 / c
    except TraceError as err:
        raise TraceError(f"spectral grid trace failed: {err}", prism=err.prism,
                         miss_mm=err.miss_mm, omega=err.omega) from err
    der = derivatives(layout, grid.center, reference=reference)
    return SpectralPhase(grid, ph, der["phi1_fs"], der["phi2_fs2"], der["phi3_fs3"], opl, glass)


def with_insertion(layout: CompressorLayout, prism_index: int, delta: float) -> CompressorLayout:
    """Copy of *layout* with prism *prism_index* (1..4) moved by *delta* mm."""
    ins = list(layout.insertions)
    ins[prism_index - 1] += delta
    return build_compressor(layout.tip_spacing, ins, layout.design_wavelength,
                            replace(layout.prisms[0], insertion=0.0), layout.depths,
                            layout.pair_gap, layout.lead_in, layout.temperature)


def translator_to_glass_path(layout: CompressorLayout, translator_move: float,
                             prism_index: int) -> float:
    """Total design-ray glass path change (mm) for a stage move of one prism."""
    if translator_move == 0:
        return 0.0
    w0 = nm_to_omega(layout.design_wavelength)
    moved = with_insertion(layout, prism_index, translator_move)
    _, g0 = optical_path_mm(layout, w0)
    _, g1 = optical_path_mm(moved, w0)
    return float(g1[0] - g0[0])


def glass_to_translator(layout: CompressorLayout, glass_change: float, prism_index: int) -> float:
    """Stage move producing *glass_change* mm of design-ray glass (linear inverse)."""
    if glass_change == 0:
        return 0.0
    ratio = translator_to_glass_path(layout, 1.0, prism_index)
    return glass_change / ratio


def insertion_delay(glass_path: float, group_index: float, deflection: float) -> float:
    """Group delay (fs) from inserting glass path *glass_path* mm into one prism."""
    return glass_path / C_MM_PER_FS * (group_index - 1 / np.cos(np.radians(deflection) / 2))


def gdd_slope(layout: CompressorLayout, prism_index: int = 3, glass_step: float = 1.0) -> float:
    """d(phi'')/d(glass path) in fs^2/mm from a central pair of re-traced layouts."""
    move = glass_to_translator(layout, glass_step, prism_index)
    w0 = nm_to_omega(layout.design_wavelength)
    plus = with_insertion(layout, prism_index, move)
    minus = with_insertion(layout, prism_index, -move)
    d = derivatives(plus, w0, reference=minus)
    return d["phi2_fs2"] / (2 * glass_step)


def design_group_index(layout: CompressorLayout) -> float:
    return group_index(layout.prisms[0].material, layout.design_wavelength, layout.temperature)
