import csv
import json

import jsonschema
import pytest

from fransonsim.cli import main
from fransonsim.harness.config import NoiseModel, ScenarioConfig
from fransonsim.harness.io import build_manifest, manifest_schema, write_run


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_materials_row(capsys):
    assert main(["materials", "--material", "SF10", "--wavelength", "1064"]) == 0
    header, row = [line.split(",") for line in capsys.readouterr().out.strip().splitlines()]
    rec = dict(zip(header, row))
    assert float(rec["n"]) == pytest.approx(1.7022, abs=5e-4)
    assert float(rec["N"]) == pytest.approx(1.7281, abs=5e-4)


def test_out_of_range_is_reported(capsys):
    assert main(["materials", "--wavelength", "5000"]) == 2
    assert "error" in capsys.readouterr().err


def test_spdc_outputs(tmp_path):
    assert main(["--out", str(tmp_path), "--no-plots", "spdc", "--crystal-length", "1.25"]) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert rows[0] == ["signal_wavelength_nm", "delta_omega_rad_s", "phi", "phi_sq"]
    m = json.loads((tmp_path / "spdc_metrics.json").read_text())
    assert {"poling_period_um", "bandwidth_nm", "photons_per_mode"} <= set(m)
    assert m["bandwidth_nm"] == pytest.approx(117.0, rel=0.01)


def test_compressor_outputs(tmp_path):
    assert main(["--out", str(tmp_path), "compressor", "--spacing", "352",
                 "--band", "1000,1150", "--samples", "32"]) == 0
    rows = read_csv(tmp_path / "compressor.csv")
    assert rows[0] == ["omega", "opl_m", "glass_mm", "phase_rad"]
    assert len(rows) == 33
    m = json.loads((tmp_path / "compressor_metrics.json").read_text())
    assert m["deflection_deg"] == pytest.approx(56.66, abs=0.05)
    assert m["gdd_slope_fs2_per_mm"] == pytest.approx(105.0, rel=0.05)
    assert main(["--out", str(tmp_path), "compressor", "--band", "1200,1000"]) == 2


def test_sim_fig3_run_directory(tmp_path):
    assert main(["--out", str(tmp_path), "--svg", "sim", "fig3", "--seed", "5"]) == 0
    run = tmp_path / "fig3"
    names = {p.name for p in run.iterdir()}
    assert {"config.json", "metrics.json", "manifest.json", "fig3.png", "fig3.svg"} <= names
    assert {f"case_{k}.csv" for k in "abcd"} <= names
    header = read_csv(run / "case_d.csv")[0]
    assert header[:4] == ["tau_fs", "R_norm", "R_counts_per_s", "R_err"]
    manifest = json.loads((run / "manifest.json").read_text())
    jsonschema.validate(manifest, manifest_schema())
    assert manifest["rng"]["seed"] == 5
    metrics = json.loads((run / "metrics.json").read_text())
    rec = metrics["cases"][3]
    for key in ("case", "phi2_s_fs2", "phi2_i_fs2", "fwhm_fs", "centroid_fs", "height",
                "secondary_maxima", "skewness", "residual2_fs2", "residual3_fs3"):
        assert key in rec
    config = ScenarioConfig.from_dict(json.loads((run / "config.json").read_text()))
    assert config.noise == NoiseModel(seed=5)


def test_no_noise_drops_count_columns(tmp_path):
    assert main(["--out", str(tmp_path), "--no-noise", "--no-plots", "sim", "fig2",
                 "--mode", "polynomial"]) == 0
    assert read_csv(tmp_path / "fig2" / "case_a.csv")[0] == ["tau_fs", "R_norm"]
    assert json.loads((tmp_path / "fig2" / "manifest.json").read_text())["rng"]["seed"] is None


def test_reruns_are_byte_identical(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    for name in ("one", "two"):
        assert main(["--out", str(tmp_path / name), "--no-plots", "sim", "counts",
                     "--seed", "9"]) == 0
    for f in sorted((tmp_path / "one" / "fig3").iterdir()):
        assert f.read_bytes() == (tmp_path / "two" / "fig3" / f.name).read_bytes(), f.name


def test_config_file_and_grid_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"phase_mode": "polynomial", "cases": [["a", 0, 0], ["z", -1, 1]]}))
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--grid-samples", "8192",
                 "--no-plots", "--no-noise", "sim", "fig3"]) == 0
    echo = json.loads((tmp_path / "fig3" / "config.json").read_text())
    assert echo["grid_samples"] == 8192
    # the fig3 scenario fixes its own case list
    assert [c["label"] for c in echo["cases"]] == list("abcd")


def test_bad_grid_samples_rejected(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "--grid-samples", "1000", "sim", "fig3"]) == 2


def test_bandwidth_subcommand(tmp_path):
    assert main(["--out", str(tmp_path), "--no-plots", "sim", "bandwidth",
                 "--scales", "1.0,1.5"]) == 0
    rows = read_csv(tmp_path / "bandwidth" / "bandwidth.csv")
    assert rows[0][:3] == ["scale", "fwhm_fs", "skewness"]
    assert len(rows) == 3


def test_manifest_schema_rejects_missing_fields(fig3_poly, tmp_path):
    write_run(fig3_poly, tmp_path / "r")
    manifest = build_manifest(fig3_poly, ["config.json", "metrics.json"])
    del manifest["versions"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(manifest, manifest_schema())
