"""Command-line entry point: ``fransonsim [global flags] <command> ...``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import compressor as comp
from .harness import counts as cnt
from .harness.config import NoiseModel, ScenarioConfig
from .harness.io import write_json, write_run
from .harness.scenarios import bandwidth_scaling_study, prepare, run_fig2, run_fig3
from .materials import SF10, get_material, gvd, group_index, nm_to_omega, refractive_index
from .spdc import (
    SpdcSource,
    calibrated,
    default_grid,
    phase_matching,
    photons_per_mode,
    spectrum_bandwidth_fwhm,
)

log = logging.getLogger("fransonsim")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fransonsim", description=__doc__)
    p.add_argument("--config", type=Path, help="ScenarioConfig JSON file")
    p.add_argument("--out", type=Path, help="output directory (default: runs/)")
    p.add_argument("--grid-samples", type=int, help="spectral samples (power of two)")
    p.add_argument("--no-noise", action="store_true", help="skip Poisson count simulation")
    p.add_argument("--svg", action="store_true", help="also write SVG figures")
    p.add_argument("--no-plots", action="store_true", help="skip figures")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="scenario sweeps")
    simsub = sim.add_subparsers(dest="scenario", required=True)
    for name in ("fig2", "fig3"):
        sp = simsub.add_parser(name)
        sp.add_argument("--mode", choices=("raytraced", "polynomial"))
        sp.add_argument("--seed", type=int)
    bw = simsub.add_parser("bandwidth")
    bw.add_argument("--scales", type=_floats, default=[1.0, 1.25, 1.5])
    bw.add_argument("--mode", choices=("raytraced", "polynomial"))
    ct = simsub.add_parser("counts")
    ct.add_argument("--seed", type=int, default=0)
    ct.add_argument("--figure", choices=("fig2", "fig3"), default="fig3")
    ct.add_argument("--mode", choices=("raytraced", "polynomial"))

    m = sub.add_parser("materials", help="n, N and GVD as a CSV row")
    m.add_argument("--material", default="SF10")
    m.add_argument("--wavelength", type=float, default=1064.0, help="nm")
    m.add_argument("--temperature", type=float, default=20.0, help="C")

    s = sub.add_parser("spdc", help="phase-matching spectrum")
    s.add_argument("--pump-wavelength", type=float, default=532.0)
    s.add_argument("--crystal-length", type=float, default=5.0, help="mm")
    s.add_argument("--temperature", type=float, default=50.0)
    s.add_argument("--flux", type=float, default=1.7e11, help="pairs per second")
    s.add_argument("--bandwidth-scale", type=float, default=1.0)

    c = sub.add_parser("compressor", help="ray-traced compressor phase")
    c.add_argument("--spacing", type=float, default=352.0, help="tip spacing, mm")
    c.add_argument("--insertions", type=_floats, default=[0.0, 0.0, 0.0, 0.0])
    c.add_argument("--depths", type=_floats, default=[2.0, 10.0, 10.0, 2.0])
    c.add_argument("--band", type=_floats, default=[950.0, 1200.0], help="nm,nm")
    c.add_argument("--samples", type=int, default=256)
    c.add_argument("--design-wavelength", type=float, default=1064.0)
    return p


def _config(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    if args.grid_samples:
        cfg = replace(cfg, grid_samples=args.grid_samples)
    if getattr(args, "mode", None):
        cfg = replace(cfg, phase_mode=args.mode)
    if args.no_noise:
        cfg = replace(cfg, noise=None)
    else:
        noise = cfg.noise or NoiseModel()
        seed = getattr(args, "seed", None)
        cfg = replace(cfg, noise=noise if seed is None else replace(noise, seed=seed))
    return cfg


def _out_dir(args, cfg: ScenarioConfig, name: str) -> Path:
    base = args.out if args.out is not None else Path(cfg.out_dir or "runs")
    return base / name


def _noisy(result, noise: NoiseModel):
    """Counts for every case (one stream per case) plus before/after subtraction."""
    noisy, corrected = {}, {}
    for k, (label, case) in enumerate(result.cases.items()):
        rng = cnt.make_rng([noise.seed, k])
        before = cnt.simulate_background(noise, rng)
        noisy[label] = cnt.simulate_counts(case.trace, noise, rng)
        after = cnt.simulate_background(noise, rng)
        corrected[label] = cnt.subtract_background(noisy[label], [before, after])
    return noisy, corrected


def _run_sim(args, runner) -> int:
    cfg = _config(args)
    res = runner(cfg)
    noisy = corrected = None
    if cfg.noise is not None:
        noisy, corrected = _noisy(res, cfg.noise)
    out = write_run(res, _out_dir(args, cfg, res.name), noisy, corrected,
                    seed=cfg.noise.seed if cfg.noise else None)
    if not args.no_plots:
        from .plots import plot_cases

        plot_cases(res, out / res.name, args.svg, noisy)
    s = res.summary
    print(f"{res.name}: mean FWHM {s['mean_fwhm_fs']:.2f} fs, spread {s['fwhm_spread_fs']:.2f} fs")
    for label, c in res.cases.items():
        m = c.metrics
        print(f"  ({label}) fwhm {m.fwhm:7.2f} fs  height {m.height:.3f}  skew {m.skewness:+.4f}")
    if "group_index" in s:
        print(f"  group index {s['group_index']['mean']:.5f}")
    print(f"wrote {out}")
    return 0


def cmd_sim(args) -> int:
    if args.scenario == "fig2":
        return _run_sim(args, run_fig2)
    if args.scenario == "fig3":
        return _run_sim(args, run_fig3)
    if args.scenario == "counts":
        runner = run_fig2 if args.figure == "fig2" else run_fig3
        if args.no_noise:
            raise ValueError("sim counts needs noise; drop --no-noise")
        return _run_sim(args, runner)
    cfg = _config(args)
    rows = bandwidth_scaling_study(cfg, args.scales)
    out = _out_dir(args, cfg, "bandwidth")
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg.to_dict())
    write_json(out / "metrics.json", {"run": "bandwidth", "rows": rows})
    with (out / "bandwidth.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: f"{v:.10g}" for k, v in r.items()})
    if not args.no_plots:
        from .plots import plot_bandwidth_study

        plot_bandwidth_study(rows, out / "bandwidth", args.svg)
    for r in rows:
        print(f"scale {r['scale']:.2f}: fwhm {r['fwhm_fs']:.2f} fs  skew {r['skewness']:+.4f}"
              f"  control skew {r['control_skewness']:+.1e}")
    print(f"wrote {out}")
    return 0


def cmd_materials(args) -> int:
    mat = get_material(args.material)
    lam, t = args.wavelength, args.temperature
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["material", "wavelength_nm", "temperature_c", "n", "N", "gvd_fs2_per_mm"])
    w.writerow([mat.id, lam, t, f"{float(refractive_index(mat, lam, t)):.8f}",
                f"{float(group_index(mat, lam, t)):.8f}", f"{float(gvd(mat, lam, t)):.6f}"])
    return 0


def cmd_spdc(args) -> int:
    src = calibrated(SpdcSource(pump_wavelength=args.pump_wavelength,
                                crystal_length=args.crystal_length, temperature=args.temperature))
    pmf = phase_matching(src, default_grid(src), args.bandwidth_scale)
    bw = spectrum_bandwidth_fwhm(pmf)
    out = args.out or Path("runs")
    out.mkdir(parents=True, exist_ok=True)
    lam = 2 * np.pi * 299792458.0 / pmf.grid.omega * 1e9
    with (out / "spectrum.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal_wavelength_nm", "delta_omega_rad_s", "phi", "phi_sq"])
        for row in zip(lam, pmf.grid.delta_omega, pmf.amplitude, pmf.squared):
            w.writerow([f"{x:.10g}" for x in row])
    metrics = {
        "poling_period_um": src.poling_period,
        "bandwidth_nm": bw,
        "photons_per_mode": photons_per_mode(args.flux, src.degenerate_wavelength, bw),
        "crystal_length_mm": src.crystal_length,
        "temperature_c": src.temperature,
    }
    write_json(out / "spdc_metrics.json", metrics)
    if not args.no_plots:
        from .plots import plot_spectrum

        plot_spectrum(pmf, out / "spectrum", args.svg)
    print(f"poling period {src.poling_period:.6f} um, bandwidth {bw:.2f} nm, "
          f"photons/mode {metrics['photons_per_mode']:.3e}")
    return 0


def cmd_compressor(args) -> int:
    if len(args.band) != 2 or args.band[0] >= args.band[1]:
        raise ValueError("--band needs two increasing wavelengths in nm")
    layout = comp.build_compressor(args.spacing, args.insertions, args.design_wavelength,
                                   depths=args.depths)
    w0 = nm_to_omega(args.design_wavelength)
    omega = np.linspace(nm_to_omega(args.band[1]), nm_to_omega(args.band[0]), args.samples)
    opl, glass = comp.optical_path_mm(layout, omega)
    ph = comp.phase(layout, omega)
    d = comp.derivatives(layout, w0)
    n = refractive_index(SF10, args.design_wavelength)
    geo = comp.min_deviation_geometry(float(n), layout.prisms[0].apex_angle)
    out = args.out or Path("runs")
    out.mkdir(parents=True, exist_ok=True)
    with (out / "compressor.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", "opl_m", "glass_mm", "phase_rad"])
        for row in zip(omega, opl * 1e-3, glass, ph):
            w.writerow([f"{x:.15g}" for x in row])
    metrics = {
        "gdd_fs2": d["phi2_fs2"],
        "tod_fs3": d["phi3_fs3"],
        "gdd_slope_fs2_per_mm": comp.gdd_slope(layout),
        "material_gvd_fs2_per_mm": float(gvd(SF10, args.design_wavelength)),
        "deflection_deg": geo["deflection"],
        "translator_ratio": comp.translator_to_glass_path(layout, 1.0, 3),
    }
    write_json(out / "compressor_metrics.json", metrics)
    print(", ".join(f"{k} {v:.4f}" for k, v in metrics.items()))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"sim": cmd_sim, "materials": cmd_materials, "spdc": cmd_spdc,
               "compressor": cmd_compressor}[args.command]
    try:
        return handler(args)
    except (ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
