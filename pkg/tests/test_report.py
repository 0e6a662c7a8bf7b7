"""Table and chart emitters, run configuration, model summary and the full pipeline."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import shutil

import numpy as np
import pytest
from conftest import FIXTURES, model_from_F

from gvarkit.bgvar import AutocorrSummary, CrossCorrTable, GewekeResult
from gvarkit.errors import ConfigError, StageError
from gvarkit.forecast import forecast_unconditional, girf
from gvarkit.panel import ROW_STOCHASTIC, build_weights, ingest_long_csv
from gvarkit.report import Grid, model_summary, parse_config, render_chart, render_table, run
from gvarkit.report.config import RunConfig, load_config, save_config
from gvarkit.report.pipeline import stationarity_grids

def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


# tables -----------------------------------------------------------------------

def test_stationarity_grid_from_fixture_has_six_lines():
    panel = ingest_long_csv(FIXTURES / "panel.csv")
    adf, pp = stationarity_grids(panel, parse_config({}))
    assert adf.values.shape == (5, 8)
    text = render_table(adf, "stationarity", "config abc seed 0")
    assert text.count("\n") == 6
    rows = rows_of(text)
    assert rows[0][1:] == list(panel.variables)
    assert "[config abc seed 0]" in rows[0][0]
    assert all(0.0 <= float(c.rstrip("*")) <= 1.0 for r in rows[1:] for c in r[1:])


def test_stars_follow_p_value_thresholds():
    p = np.array([[0.2, 0.09, 0.04, 0.001]])
    from gvarkit.report.tables import star_marks

    g = Grid([("A",)], ["a", "b", "c", "d"], p, marks=star_marks(p))
    assert rows_of(render_table(g, "stationarity"))[1][1:] == ["0.2000", "0.0900*", "0.0400**", "0.0010***"]


def pair_grid(values):
    vars3 = ["x", "y", "z"]
    labels = [(c, v) for c in ("A", "B") for v in vars3]
    return Grid(labels, vars3, values, corner=("country", "variable"))


def test_johansen_lower_triangle_is_empty():
    text = render_table(pair_grid(np.full((6, 3), 12.345)), "johansen")
    rows = rows_of(text)
    for r in rows[1:]:
        own = ["x", "y", "z"].index(r[1])
        cells = r[2:]
        assert all(c == "" for c in cells[:own + 1])
        assert all(c == "12.35" for c in cells[own + 1:])
    assert "0.00" not in text


def test_granger_grid_marks_own_cells():
    rows = rows_of(render_table(pair_grid(np.full((6, 3), 0.5)), "granger"))
    for r in rows[1:]:
        own = ["x", "y", "z"].index(r[1])
        assert r[2 + own] == "-"


def test_weights_diagonal_printed_as_zero():
    w = build_weights(np.array([[0, 2, 1], [3, 0, 1], [5, 5, 0.0]]), ROW_STOCHASTIC, ["a", "b", "c"])
    g = Grid([(c,) for c in w.countries], list(w.countries), w.w)
    rows = rows_of(render_table(g, "weights"))
    for i in range(3):
        assert rows[1 + i][1 + i] == "0"
    assert rows[1][2] == "0.6667"


def test_grid_validation():
    with pytest.raises(ConfigError):
        Grid([("a",)], ["x", "y"], np.zeros((1, 3)))
    with pytest.raises(ConfigError):
        render_table(Grid([("a",)], ["x"], np.zeros((1, 1))), "bogus")
    with pytest.raises(ConfigError):
        render_table(Grid([("a",)], ["x"], np.zeros((1, 1))), "johansen")


# charts -------------------------------------------------------------------------

def five_country_fan(sigma_scale):
    countries = ["China", "Indonesia", "Malaysia", "Thailand", "Vietnam"]
    gm = model_from_F(0.6 * np.eye(5), sigma_scale * np.eye(5), countries=countries, variables=["mpi"])
    return forecast_unconditional(gm, x_last=np.ones(5), t_last=0, n_ahead=5, paths_per_draw=200)


def test_chart_has_one_panel_per_series():
    svg = render_chart(five_country_fan(1.0), title="fan", provenance="config x seed 1")
    assert svg.count('<g class="panel">') == 5
    assert svg.count("<polygon") == 10
    assert svg.count("<polyline") == 5
    assert "config x seed 1" in svg


def test_zero_width_bands_draw_only_the_median():
    svg = render_chart(five_country_fan(0.0))
    assert "<polygon" not in svg
    assert svg.count("<polyline") == 5


def test_chart_is_byte_identical_for_identical_input():
    fan = five_country_fan(1.0)
    assert render_chart(fan).encode() == render_chart(fan).encode()
    assert render_chart(fan) == render_chart(five_country_fan(1.0))


def test_girf_chart_and_selection():
    gm = model_from_F(np.array([[0.5, 0.1], [0.0, 0.4]]), np.array([[1.0, 0.3], [0.3, 1.0]]), variables=["x", "y"])
    svg = render_chart(girf(gm, ("A", "x"), 4), labels=[("A", "y")])
    assert svg.count('<g class="panel">') == 1
    assert ">A.y<" in svg


# configuration -----------------------------------------------------------------

def test_config_round_trip(tmp_path):
    raw = json.loads((FIXTURES / "report_config.json").read_text())
    cfg = parse_config(raw)
    again = load_config(save_config(cfg, tmp_path / "c.json"))
    assert again == cfg and again.config_hash == cfg.config_hash
    assert parse_config(cfg.to_json()) == cfg


def test_config_defaults_are_complete():
    cfg = RunConfig()
    assert cfg.rolling.window == 8
    assert cfg.sampler.draws == 1000 and cfg.sampler.thin == 1 and cfg.sampler.burn == 1000
    assert cfg.sampler.stable_only
    assert cfg.forecast.half_width == 0.001


@pytest.mark.parametrize("raw", [
    {"unknown": 1},
    {"sampler": {"draws": 1000, "chains": 4}},
    {"schema_version": 2},
    {"sampler": {"draws": 10}},
    {"rolling": {"window": 3}},
])
def test_bad_config_is_rejected(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_hash_changes_with_content():
    assert parse_config({"sampler": {"seed": 1}}).config_hash != parse_config({"sampler": {"seed": 2}}).config_hash


# model summary --------------------------------------------------------------------

def test_model_summary_arithmetic():
    gw = GewekeResult(np.zeros(1680), [], 280, 1680)
    p = np.r_[np.full(31, 0.5), [0.07], np.full(3, 0.02), np.full(5, 0.001)]
    ac = AutocorrSummary(["e"] * 40, p, [31, 1, 3, 5])
    cc = CrossCorrTable(["cpi"], list("abcde"), np.zeros((5, 1)), {"cpi": [4, 0, 1, 0]})
    text = model_summary(5, 1000, 1, 100, gw, ac, cc)
    assert "Number of posterior draws: 1000/1=1000" in text
    assert "Number of stable posterior draws: 100" in text
    assert "280 out of 1680 variables' z-values exceed the 1.96 threshold (16.67%)." in text
    names = ("> 0.10", "0.05 - 0.10", "0.01 - 0.05", "< 0.01")
    buckets = {l[:12].strip(): l.split()[-2:] for l in text.splitlines() if l.startswith(names)}
    assert buckets == {"> 0.10": ["31", "77.5"], "0.05 - 0.10": ["1", "2.5"],
                       "0.01 - 0.05": ["3", "7.5"], "< 0.01": ["5", "12.5"]}
    assert "4 (80%)" in text and "1 (20%)" in text


# pipeline ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    raw = json.loads((FIXTURES / "report_config.json").read_text())
    raw["sampler"] = {"draws": 100, "burn": 50, "seed": 3}
    cfg = parse_config(raw)
    out = tmp_path_factory.mktemp("bundle")
    return cfg, run(cfg, base=FIXTURES, out=out)


def test_pipeline_writes_stages_in_order(small_run):
    cfg, res = small_run
    names = sorted(res.manifest["files"])
    stages = [n[:2] for n in names if n[:2].isdigit()]
    assert stages == sorted(stages) and set(stages) == {"01", "02", "03", "04", "05"}
    assert not (res.out / "INCOMPLETE").exists()
    for name, digest in res.manifest["files"].items():
        assert hashlib.sha256((res.out / name).read_bytes()).hexdigest() == digest


def test_every_output_embeds_the_config_hash(small_run):
    cfg, res = small_run
    for name in res.manifest["files"]:
        if name == "config.json":
            assert parse_config((res.out / name).read_text()).config_hash == cfg.config_hash
            continue
        text = (res.out / name).read_text()
        assert cfg.short_hash in text or cfg.config_hash in text, name


def test_pipeline_summary_and_forecasts(small_run):
    cfg, res = small_run
    summary = (res.out / "04_model_summary.txt").read_text()
    assert "Number of posterior draws: 100/1=100" in summary
    assert "Number of cross-sectional units: 5" in summary
    fixed = (res.out / "05_forecast_fixed.csv").read_text().splitlines()
    china = [r.split(",") for r in fixed[2:] if r.startswith("China,mpi,")]
    assert len(china) == 5
    assert all(len(set(r[3:])) == 1 for r in china)     # zero-width band at the constraint


def test_failed_stage_leaves_marker(tmp_path):
    shutil.copy(FIXTURES / "panel.csv", tmp_path / "panel.csv")
    cfg = parse_config({"data": "panel.csv", "weights": "missing.csv", "sampler": {"draws": 100, "burn": 0}})
    with pytest.raises(StageError) as err:
        run(cfg, base=tmp_path, out=tmp_path / "out")
    assert err.value.stage == "gvar"
    assert "stage: gvar" in (tmp_path / "out" / "INCOMPLETE").read_text()
