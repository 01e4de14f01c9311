import json
from dataclasses import replace

import numpy as np
import pytest

from fransonsim.harness import ScenarioConfig, bandwidth_scaling_study, extract_group_index, prepare
from fransonsim.harness.config import FIG3_CASES, Case, CompressorConfig, NoiseModel
from fransonsim.harness.scenarios import IllConditionedError, run_case, run_cases
from fransonsim.materials import SF10, group_index


def test_config_json_roundtrip(tmp_path):
    cfg = ScenarioConfig(noise=NoiseModel(seed=4), phase_mode="polynomial",
                         signal=CompressorConfig(480.0, (2.0, 15.0, 15.0, 2.0)))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ScenarioConfig.load(path) == cfg


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        ScenarioConfig(phase_mode="exact")
    with pytest.raises(ValueError):
        ScenarioConfig(cases=(Case("a", 0, 0), Case("a", 1, 0)))
    with pytest.raises(ValueError):
        NoiseModel(dark_rate=-1.0)
    assert ScenarioConfig().delta_fs2 == 367.0


def test_every_case_appears_once(fig2_traced, fig3_traced):
    assert list(fig2_traced.cases) == list("abcdefg")
    assert list(fig3_traced.cases) == list("abcd")


def test_reference_case_is_bit_identical(fig2_traced, fig3_traced, default_config):
    model = prepare(default_config)
    ref = run_case(model, Case("ref", 0, 0), fig2_traced.reference_height)
    assert np.array_equal(fig2_traced.cases["a"].trace.rate, ref.trace.rate)
    assert np.array_equal(fig3_traced.cases["a"].trace.rate, ref.trace.rate)
    assert fig2_traced.cases["a"].metrics.height == 1.0


@pytest.mark.parametrize("fixture", ["fig2_traced", "fig2_poly"])
def test_one_arm_gdd_heights(request, fixture):
    res = request.getfixturevalue(fixture)
    h = res.summary["height_ratios"]
    assert res.summary["heights_decrease_signal"]
    assert res.summary["heights_decrease_idler"]
    for k in "be":
        assert h[k] == pytest.approx(0.5, abs=0.15)
    for k in "dg":
        assert h[k] <= 0.20


def test_opposite_arm_gdd_mirrors_trace(fig2_poly):
    rc = fig2_poly.cases["c"].trace
    rf = fig2_poly.cases["f"].trace
    assert np.array_equal(rc.tau, -rf.tau[::-1])
    assert np.max(np.abs(rc.rate - rf.rate[::-1])) < 1e-9


def test_polynomial_cancellation_is_exact(fig3_poly):
    widths = [c.metrics.fwhm for c in fig3_poly.cases.values()]
    assert max(widths) - min(widths) < 1e-6
    for c in fig3_poly.cases.values():
        assert c.residual[2] == pytest.approx(0.0, abs=1e-9)
        assert c.residual[3] == 0.0


def test_raytraced_cancellation_widths(fig3_traced):
    widths = np.array([c.metrics.fwhm for c in fig3_traced.cases.values()])
    assert np.max(np.abs(widths - widths.mean())) < 1.0
    assert np.max(np.abs(widths - widths.mean())) <= 0.05 * widths.mean()


def test_raytraced_gdd_steps_cancel_to_second_order(fig3_traced, fig2_traced):
    for k, c in fig3_traced.cases.items():
        assert abs(c.residual[2]) < 0.05 * 367.0
    for k, steps in zip("bcd", (1, 2, 3)):
        assert fig2_traced.cases[k].phi2_s == pytest.approx(-steps * 367.0, rel=0.05)


def test_skewness_follows_tod_residual(fig3_traced):
    res3 = [fig3_traced.cases[k].residual[3] for k in "abcd"]
    skew = [fig3_traced.cases[k].metrics.skewness for k in "abcd"]
    assert all(b < a for a, b in zip(res3[1:], res3[2:]))
    assert all(abs(b) > abs(a) for a, b in zip(skew, skew[1:]))
    for r, s in zip(res3[1:], skew[1:]):
        assert np.sign(r) == np.sign(s)


def test_group_index_recovery(fig3_traced):
    est = fig3_traced.group_indices
    assert set(est["per_case"]) == {"b", "c", "d"}
    assert est["mean"] == pytest.approx(group_index(SF10, 1064.0), abs=1e-3)


def test_centroid_shift_is_linear_in_glass(fig3_traced):
    b = fig3_traced.cases["b"].raw_centroid - fig3_traced.cases["a"].raw_centroid
    c = fig3_traced.cases["c"].raw_centroid - fig3_traced.cases["a"].raw_centroid
    assert c / b == pytest.approx(2.0, rel=5e-3)


def test_group_index_needs_glass_change(default_config):
    res = run_cases(replace(default_config, cases=(Case("a", 0, 0),)))
    with pytest.raises(IllConditionedError):
        extract_group_index(res)
    with pytest.raises(ValueError):
        extract_group_index(res, glass_steps=[1.0, 2.0])


def test_bandwidth_study(default_config, fig3_traced):
    rows = bandwidth_scaling_study(default_config, [1.0, 1.5])
    d = fig3_traced.cases["d"].metrics
    assert rows[0]["fwhm_fs"] == pytest.approx(d.fwhm, abs=1e-9)
    assert rows[0]["skewness"] == pytest.approx(d.skewness, abs=1e-9)
    assert abs(rows[1]["skewness"]) > abs(rows[0]["skewness"])
    assert rows[1]["fwhm_fs"] < rows[0]["fwhm_fs"]
    for r in rows:
        assert abs(r["control_skewness"]) < 1e-3
    with pytest.raises(ValueError):
        bandwidth_scaling_study(default_config, [0.0])


def test_custom_case_list(default_config):
    res = run_cases(replace(default_config, phase_mode="polynomial",
                            cases=(Case("x", -1, 1), Case("y", 2, 0))))
    assert list(res.cases) == ["x", "y"]
    assert res.cases["y"].phi2_s == pytest.approx(734.0)


def test_fig3_case_list_shape():
    assert [(c.signal_steps, c.idler_steps) for c in FIG3_CASES] == [(0, 0), (-1, 1), (-2, 2), (-3, 3)]
