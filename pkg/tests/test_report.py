"""Rendering: value formatting, table shapes, JSON round trips, SVG plots."""

import argparse
import json
import re

import pytest

from losanova import ValidationError, generate, render_report, write_csv
from losanova.cli import _build_bundle
from losanova.diagnostics import HistogramData, PPPlotData, ResidualSpread
from losanova.plots import render_plot
from losanova.posthoc import HomogeneousSubsets, Subset
from losanova.power import PowerResult
from losanova.report import fmt3, fmt4, fmtn, power_rows, _table_csv, _table_text
from losanova.synth import reference_cohort_spec


def _args(path, transform="auto", alpha=0.05):
    return argparse.Namespace(
        input=str(path), transform=transform, alpha=alpha, season_from_date=False
    )


@pytest.fixture(scope="module")
def cohort_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "cohort.csv"
    write_csv(generate(reference_cohort_spec(n=8000, seed=0)), path)
    return path


@pytest.fixture(scope="module")
def bundle(cohort_csv):
    return _build_bundle(_args(cohort_csv))


# --- number formatting -----------------------------------------------------------

def test_fmt3_spss_style():
    assert fmt3(3e-7) == ".000"
    assert fmt3(4.9e-4) == ".000"  # floors below 5e-4
    assert fmt3(0.216) == ".216"
    assert fmt3(-0.037) == "-.037"
    assert fmt3(513.847) == "513.847"
    assert fmt3(0.057) == ".057"
    assert fmt3(None) == ""
    assert fmt3(float("nan")) == ""


def test_fmt4_phi_precision():
    assert fmt4(1.15234999) == "1.1523"
    assert fmt4(2.3896) == "2.3896"
    assert fmtn(-0.01994, 4) == "-.0199"
    assert fmtn(0.007819, 5) == ".00782"


def test_power_rows_table_shape():
    rows = [PowerResult(10, 1.328, 1.1523, 3, 360, 5.312, 0.7630, 0.2370)]
    headers, body = power_rows(rows)
    assert headers == ["n", "phi", "NFD", "DFD", "beta", "power"]
    assert body[0][:4] == ["10", "1.1523", "3", "360"]
    text = _table_text(headers, body)
    assert "1.1523" in text and "360" in text


def test_table_csv_escaping():
    out = _table_csv(["a", "b"], [['x,y', 'he said "hi"']])
    assert out.splitlines()[1] == '"x,y","he said ""hi"""'


# --- whole-bundle rendering ---------------------------------------------------------

def test_text_report_sections(bundle):
    text = render_report(bundle, "text").decode()
    for section in ("frequency", "anova", "coefficients", "scheffe_season",
                    "subsets_age_group", "transform", "fitted model"):
        assert f"== {section} ==" in text
    assert "Corrected Model" in text
    assert "Type III Sum of Squares" in text


def test_csv_report_sections(bundle):
    text = render_report(bundle, "csv").decode()
    assert "[anova]" in text and "[frequency]" in text
    assert "Source,Type III Sum of Squares,df,Mean Square,F,Sig." in text


def test_json_report_full_precision(bundle):
    parsed = json.loads(render_report(bundle, "json").decode())
    anova_error = next(r for r in parsed["anova"]["rows"] if r["source"] == "Error")
    assert anova_error["ss"] == bundle.anova.row("Error").ss  # exact float
    assert parsed["parameters"]["transform_applied"] == "logarithmic"
    assert set(parsed["scheffe"]) == {"season", "age_group"}
    assert parsed["diagnostics"]["pp_plot"]["kind"] == "pp"


def test_rendered_tables_are_deterministic(bundle, cohort_csv):
    again = _build_bundle(_args(cohort_csv))
    for fmt in ("text", "csv", "json"):
        assert render_report(bundle, fmt) == render_report(again, fmt)


def test_unknown_format_rejected(bundle):
    with pytest.raises(ValidationError):
        render_report(bundle, "yaml")


def test_frequency_table_text_totals(bundle):
    text = render_report(bundle, "text").decode()
    section = text.split("== frequency ==")[1].split("==")[0]
    assert "total" in section
    # grand total row should carry the dataset size
    assert re.search(rf"total\s+total.*{bundle.anova.row('Total').df}", section)


# --- SVG plots ------------------------------------------------------------------------

def test_histogram_svg_bars(tmp_path):
    h = HistogramData(edges=(-1.0, 0.0, 1.0), counts=(1, 2))
    path = tmp_path / "hist.svg"
    render_plot(h, "histogram", path, xlabel="residual", ylabel="count")
    svg = path.read_text()
    bars = re.findall(r'class="bar" data-count="(\d+)"', svg)
    assert bars == ["1", "2"]
    assert 'xmlns="http://www.w3.org/2000/svg"' in svg
    assert "residual" in svg


def test_histogram_bar_heights_proportional(tmp_path):
    h = HistogramData(edges=(0.0, 1.0, 2.0, 3.0), counts=(1, 3, 2))
    path = tmp_path / "hist3.svg"
    render_plot(h, "histogram", path)
    heights = [
        float(m) for m in re.findall(r'height="([0-9.]+)"[^/]*class="bar"', path.read_text())
    ]
    assert len(heights) == 3
    # pixel coordinates are emitted at two decimals
    assert heights[1] == pytest.approx(3 * heights[0], rel=1e-3)
    assert heights[2] == pytest.approx(2 * heights[0], rel=1e-3)


def test_empty_series_writes_nothing(tmp_path):
    path = tmp_path / "never.svg"
    with pytest.raises(ValidationError):
        render_plot(HistogramData(edges=(0.0,), counts=()), "histogram", path)
    assert not path.exists()


def test_pp_plot_has_identity_line(tmp_path):
    pp = PPPlotData(empirical=(0.25, 0.75), theoretical=(0.2, 0.8),
                    max_abs_deviation=0.05)
    path = tmp_path / "pp.svg"
    render_plot(pp, "pp", path)
    assert 'class="identity"' in path.read_text()


def test_scatter_and_subset_plots(tmp_path):
    spread = ResidualSpread(fitted=(1.0, 2.0, 3.0), residuals=(0.1, -0.2, 0.05),
                            funnel_ratio=1.1)
    render_plot(spread, "scatter", tmp_path / "s.svg")
    assert (tmp_path / "s.svg").exists()

    subsets = HomogeneousSubsets(
        factor="season", alpha=0.05,
        subsets=(Subset(("spring",), (0.59,), 1.0), Subset(("winter", "autumn"), (0.63, 0.64), 0.3)),
    )
    render_plot(subsets, "subset-means", tmp_path / "m.svg")
    svg = (tmp_path / "m.svg").read_text()
    assert svg.count('class="mean"') == 3
    assert 'data-subset="2"' in svg


def test_svg_deterministic(tmp_path):
    h = HistogramData(edges=(0.0, 0.5, 1.0), counts=(4, 6))
    render_plot(h, "histogram", tmp_path / "a.svg")
    render_plot(h, "histogram", tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_unknown_plot_kind(tmp_path):
    with pytest.raises(ValidationError, match="kind"):
        render_plot(HistogramData((0.0, 1.0), (1,)), "pie", tmp_path / "x.svg")
