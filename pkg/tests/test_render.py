import re
import xml.etree.ElementTree as ET

import pytest

from imeval.analysis import (
    MAXIMIZE,
    MINIMIZE,
    CategoryScatterData,
    ParetoPlotData,
    ParetoPoint,
    RadarData,
    ScatterData,
    rank_color,
    rank_table,
)
from imeval.data_model import ALL_GROUP, ResultRow
from imeval.errors import SpecError
from imeval.figures import render_png
from imeval.svgplot import (
    PALETTE,
    fmt,
    radar_svg,
    rank_table_svg,
    render_svg,
    write_svg,
)


def _row(model="m", dataset="d", group=ALL_GROUP, metric="fid", value=1.0):
    return ResultRow(
        model=model, dataset=dataset, group=group, hyperparameters=(),
        metric=metric, value=value, seed=None,
    )


def _pareto_data():
    pts = [
        ParetoPoint(objectives=(("precision", 0.8, MAXIMIZE), ("coverage", 0.2, MAXIMIZE)), label="2.0"),
        ParetoPoint(objectives=(("precision", 0.5, MAXIMIZE), ("coverage", 0.6, MAXIMIZE)), label="4.5"),
        ParetoPoint(objectives=(("precision", 0.4, MAXIMIZE), ("coverage", 0.3, MAXIMIZE)), label="7.0"),
    ]
    return ParetoPlotData.from_points(pts)


def _radar_payload():
    return RadarData(
        metric="precision",
        axes=("g1", "g2", "g3"),
        series=(("a", (0.5, 0.25, 1.0)), ("b", (0.4, None, 0.8))),
    )


def _table():
    rows = []
    for model, fid in [("a", 10.0), ("b", 5.0), ("c", 20.0)]:
        rows.append(_row(model=model, metric="fid", value=fid))
    return rank_table(rows)


def _scatter_payload():
    return ScatterData(
        x_metric="precision",
        y_metric="coverage",
        points=(("a", "d1", 0.5, 0.7), ("b", "d1", 0.6, 0.4)),
    )


def _category_payload():
    return CategoryScatterData(
        metric="fid",
        datasets=("d1", "d2"),
        points=(("a", "d1", 12.0), ("a", "d2", 9.0), ("b", "d1", 7.5)),
    )


ALL_PAYLOADS = [_pareto_data(), _radar_payload(), _table(), _scatter_payload(), _category_payload()]


class TestNumberFormat:
    def test_six_significant_digits(self):
        assert fmt(0.123456789) == "0.123457"
        assert fmt(1000000.0) == "1e+06"

    def test_negative_zero_flattened(self):
        assert fmt(-0.0) == "0"


class TestSvgDeterminism:
    @pytest.mark.parametrize("payload", ALL_PAYLOADS, ids=lambda p: type(p).__name__)
    def test_same_input_same_bytes(self, payload):
        assert render_svg(payload) == render_svg(payload)

    @pytest.mark.parametrize("payload", ALL_PAYLOADS, ids=lambda p: type(p).__name__)
    def test_no_timestamps_or_randomness(self, payload):
        text = render_svg(payload)
        assert "date" not in text.lower()
        assert not re.search(r"\bid=", text)  # no generated element ids

    @pytest.mark.parametrize("payload", ALL_PAYLOADS, ids=lambda p: type(p).__name__)
    def test_parses_as_xml(self, payload):
        root = ET.fromstring(render_svg(payload))
        assert root.tag.endswith("svg")

    def test_write_svg_bytes(self, tmp_path):
        path = tmp_path / "out.svg"
        text = render_svg(_pareto_data())
        write_svg(text, path)
        assert path.read_bytes() == text.encode("utf-8")

    def test_unknown_payload_refused(self):
        with pytest.raises(TypeError):
            render_svg(object())


class TestParetoSvg:
    def test_front_points_labelled(self):
        text = render_svg(_pareto_data())
        assert ">2.0<" in text
        assert ">4.5<" in text
        assert ">7.0<" not in text  # dominated, drawn but not labelled

    def test_axis_labels_name_direction(self):
        text = render_svg(_pareto_data())
        assert ">precision (maximize)<" in text
        assert ">coverage (maximize)<" in text


class TestRadarSvg:
    def test_gap_breaks_polygon(self):
        # 4 grid rings + the one complete series close into polygons; the
        # gapped series degrades to open polylines
        text = radar_svg(_radar_payload())
        assert text.count("<polygon") == 5
        assert text.count("<polyline") == 1  # g3 wraps around to g1

    def test_interior_gap_has_no_wrap(self):
        data = RadarData(
            metric="precision",
            axes=("g1", "g2", "g3"),
            series=(("a", (None, 0.5, 0.6)),),
        )
        text = radar_svg(data)
        assert text.count("<polygon") == 4  # grid rings only
        assert text.count("<polyline") == 1  # g2 to g3, nothing through g1

    def test_lone_value_draws_only_a_dot(self):
        data = RadarData(
            metric="precision",
            axes=("g1", "g2", "g3"),
            series=(("a", (0.5, None, None)),),
        )
        text = radar_svg(data)
        assert text.count("<polyline") == 0
        assert 'r="2.5"' in text

    def test_missing_value_never_drawn_as_zero(self):
        gapped = radar_svg(_radar_payload())
        zeroed = radar_svg(
            RadarData(
                metric="precision",
                axes=("g1", "g2", "g3"),
                series=(("a", (0.5, 0.25, 1.0)), ("b", (0.4, 0.0, 0.8))),
            )
        )
        assert gapped != zeroed

    def test_axis_names_present(self):
        text = radar_svg(_radar_payload())
        for axis in ("g1", "g2", "g3"):
            assert f">{axis}<" in text

    def test_normalized_rim_is_unit(self):
        text = radar_svg(_radar_payload(), normalized=True)
        assert ">1<" in text  # shared rim label

    def test_all_missing_refused(self):
        data = RadarData(metric="m", axes=("g1",), series=(("a", (None,)),))
        with pytest.raises(SpecError):
            radar_svg(data)


class TestRankTableSvg:
    def test_cells_fill_with_ramp_colors(self):
        table = _table()
        text = rank_table_svg(table)
        for rank in (1, 2, 3):
            assert rank_color(rank, 3) in text

    def test_cell_text_carries_value_and_rank(self):
        text = rank_table_svg(_table())
        assert ">5 (1)<" in text
        assert ">10 (2)<" in text
        assert ">20 (3)<" in text

    def test_parse_back_ranks_from_fills(self):
        table = _table()
        text = rank_table_svg(table)
        root = ET.fromstring(text)
        fills = [
            el.get("fill")
            for el in root.iter()
            if el.tag.endswith("rect") and el.get("fill", "").startswith("#")
            and el.get("fill") not in ("#eeeeee", "#ffffff")
        ]
        expected = {rank_color(r, 3) for r in (1, 2, 3)}
        assert expected.issubset(set(fills))

    def test_direction_arrow_in_header(self):
        text = rank_table_svg(_table())
        assert "fid ↓" in text


class TestPngCompanions:
    @pytest.mark.parametrize("payload", ALL_PAYLOADS, ids=lambda p: type(p).__name__)
    def test_renders_a_png_file(self, payload, tmp_path):
        path = tmp_path / "fig.png"
        render_png(payload, path)
        data = path.read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(data) > 500


class TestPalette:
    def test_stable_first_color(self):
        assert PALETTE[0] == "#1f77b4"

    def test_series_colors_assigned_by_sorted_name(self):
        text = radar_svg(_radar_payload())
        # model "a" sorts first so it takes the first palette slot
        a_pos = text.find(">a<")
        assert PALETTE[0] in text[:a_pos] or PALETTE[0] in text
