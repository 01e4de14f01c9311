"""Refractive index, group index and GVD for the materials in the setup.

Coefficients are read from ``data/materials.json``. Wavelengths at the public
surface are in nm, angular frequencies in rad/s, temperatures in Celsius.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.constants import c

# relative finite-difference step for d/dlambda and d2/domega2
FD_STEP = 1e-4


class WavelengthRangeError(ValueError):
    """Evaluation requested outside a material's tabulated validity."""

    def __init__(self, material: str, wavelength_nm, bound_nm: float, side: str):
        self.material = material
        self.bound_nm = bound_nm
        self.side = side
        super().__init__(
            f"{material}: wavelength {wavelength_nm} nm outside valid range "
            f"({side} bound {bound_nm:g} nm)"
        )


class TemperatureRangeError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialModel:
    id: str
    form: str
    coefficients: tuple[float, ...]
    valid_range_um: tuple[float, float]
    temperature_model: Optional[dict] = field(default=None, compare=False, hash=False)
    reference: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialModel":
        return cls(
            id=d["id"],
            form=d["form"],
            coefficients=tuple(float(x) for x in d["coefficients"]),
            valid_range_um=(float(d["valid_range_um"][0]), float(d["valid_range_um"][1])),
            temperature_model=d.get("temperature_model"),
            reference=d.get("reference", ""),
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "form": self.form,
            "coefficients": list(self.coefficients),
            "valid_range_um": list(self.valid_range_um),
            "temperature_model": self.temperature_model,
            "reference": self.reference,
        }

    @property
    def is_vacuum(self) -> bool:
        return self.form == "constant" and self.coefficients == (1.0,)


def load_materials(path: str | Path | None = None) -> dict[str, MaterialModel]:
    """Read a material data file; the packaged one when *path* is None."""
    if path is None:
        text = resources.files("fransonsim").joinpath("data/materials.json").read_text()
    else:
        text = Path(path).read_text()
    data = json.loads(text)
    return {d["id"]: MaterialModel.from_dict(d) for d in data["materials"]}


@lru_cache(maxsize=None)
def _packaged() -> dict[str, MaterialModel]:
    return load_materials()


def get_material(name: str) -> MaterialModel:
    try:
        return _packaged()[name]
    except KeyError:
        raise KeyError(f"unknown material {name!r}; known: {sorted(_packaged())}") from None


VACUUM = get_material("vacuum")
SF10 = get_material("SF10")
MGO_LN = get_material("MgO:CLN-e")


def _check_range(material: MaterialModel, lam_um) -> None:
    lo, hi = material.valid_range_um
    lam = np.asarray(lam_um)
    if np.any(lam < lo):
        raise WavelengthRangeError(material.id, np.min(lam) * 1e3, lo * 1e3, "lower")
    if np.any(lam > hi):
        raise WavelengthRangeError(material.id, np.max(lam) * 1e3, hi * 1e3, "upper")


def _index_um(material: MaterialModel, lam, temperature: float):
    """Phase index with wavelength in um; no range check."""
    coef = material.coefficients
    if material.form == "constant":
        return np.full_like(np.asarray(lam, dtype=float), coef[0])
    if material.form == "sellmeier3":
        b1, b2, b3, c1, c2, c3 = coef
        l2 = lam * lam
        return np.sqrt(1.0 + b1 * l2 / (l2 - c1) + b2 * l2 / (l2 - c2) + b3 * l2 / (l2 - c3))
    if material.form == "gayer2008":
        a1, a2, a3, a4, a5, a6 = coef
        tm = material.temperature_model
        f = (temperature - tm["reference_c"]) * (temperature + tm["offset_c"])
        b1, b2, b3, b4 = tm["b"]
        g1, g2, g3, g4 = a1 + b1 * f, a2 + b2 * f, a3 + b3 * f, a4 + b4 * f
        l2 = lam * lam
        return np.sqrt(g1 + g2 / (l2 - g3**2) + g4 / (l2 - a5**2) - a6 * l2)
    raise ValueError(f"unknown dispersion form {material.form!r}")


def _check_temperature(material: MaterialModel, temperature: float) -> None:
    tm = material.temperature_model
    if tm and "valid_range_c" in tm:
        lo, hi = tm["valid_range_c"]
        if not lo <= temperature <= hi:
            raise TemperatureRangeError(
                f"{material.id}: temperature {temperature} C outside [{lo}, {hi}]"
            )


def refractive_index(material: MaterialModel, wavelength, temperature: float = 20.0):
    """Phase index at *wavelength* [nm]; accepts scalars or arrays."""
    lam_um = np.asarray(wavelength, dtype=float) * 1e-3
    _check_range(material, lam_um)
    _check_temperature(material, temperature)
    n = _index_um(material, lam_um, temperature)
    return float(n) if np.ndim(n) == 0 else n


def group_index(material: MaterialModel, wavelength, temperature: float = 20.0):
    """N = n - lambda dn/dlambda by central difference with step FD_STEP*lambda."""
    if material.is_vacuum:
        return refractive_index(material, wavelength, temperature)
    lam = np.asarray(wavelength, dtype=float)
    h = FD_STEP * lam
    _check_range(material, (lam - h) * 1e-3)
    _check_range(material, (lam + h) * 1e-3)
    n = refractive_index(material, lam, temperature)
    dn = (
        _index_um(material, (lam + h) * 1e-3, temperature)
        - _index_um(material, (lam - h) * 1e-3, temperature)
    ) / (2 * h)
    out = n - lam * dn
    return float(out) if np.ndim(out) == 0 else out


def omega_to_nm(omega):
    return 2 * np.pi * c / np.asarray(omega, dtype=float) * 1e9


def nm_to_omega(wavelength):
    return 2 * np.pi * c / (np.asarray(wavelength, dtype=float) * 1e-9)


def wavenumber(material: MaterialModel, angular_frequency, temperature: float = 20.0):
    """k = n(omega) omega / c in rad/m."""
    w = np.asarray(angular_frequency, dtype=float)
    k = refractive_index(material, omega_to_nm(w), temperature) * w / c
    return float(k) if np.ndim(k) == 0 else k


def _gvd_step(material, w, temperature, rel):
    dw = rel * w
    kp = wavenumber(material, w + dw, temperature)
    k0 = wavenumber(material, w, temperature)
    km = wavenumber(material, w - dw, temperature)
    return (kp - 2 * k0 + km) / dw**2


def gvd(material: MaterialModel, wavelength, temperature: float = 20.0, richardson: bool = False):
    """Group-velocity dispersion d2k/domega2 in fs^2/mm.

    Three-point central difference on k(omega) with step FD_STEP*omega. With
    ``richardson=True`` the h and h/2 estimates are combined and returned as
    ``(value, |h - h/2| difference)`` so callers can inspect convergence.
    """
    if material.is_vacuum:
        z = np.zeros_like(np.asarray(wavelength, dtype=float))
        z = float(z) if z.ndim == 0 else z
        return (z, z) if richardson else z
    w = nm_to_omega(wavelength)
    # s^2/m -> fs^2/mm
    scale = 1e30 * 1e-3
    g1 = _gvd_step(material, w, temperature, FD_STEP) * scale
    if not richardson:
        return float(g1) if np.ndim(g1) == 0 else g1
    g2 = _gvd_step(material, w, temperature, FD_STEP / 2) * scale
    best = (4 * g2 - g1) / 3
    diff = np.abs(g1 - g2)
    if np.ndim(best) == 0:
        return float(best), float(diff)
    return best, diff
