import pytest
from lxml import etree

from aiin_gan_evaluator.errors import ManifestError, ParameterError
from aiin_gan_evaluator.experiment_runner import ExperimentRow
from aiin_gan_evaluator.report_generator import (
    ReportGenerator,
    ReportTable,
    emit_svg_bars,
    format_text_table,
    rank_table,
    row_label
)

HEADER = "augmentation,batch_size,window,threshold,msssim_delta,fid,accuracy,precision,recall,specificity"
SVG_NS = {"svg": "http://www.w3.org/2000/svg"}


def make_row(tag="aiin", batch=134, window="8x8", threshold=50, delta=-0.012, fid=0.4173,
             metrics=(0.91, 0.89, 0.99, 0.79)) -> ExperimentRow:
    return ExperimentRow(tag, batch, window, threshold, delta, fid, *metrics)


def bar_heights(svg_text: str) -> list[float]:
    root = etree.fromstring(svg_text.encode('utf-8'))
    return [float(rect.get("height")) for rect in root.iterfind(".//svg:g[@id='bars']/svg:rect", SVG_NS)]


@pytest.fixture
def table():
    return ReportTable((
        ExperimentRow("baseline", None, None, None, None, None, 0.8, 0.78, 0.99, 0.45),
        make_row("none", 134, None, None, 0.029, 0.687),
        make_row()
    ))


class TestRowsCsv:
    def test_header(self, table):
        assert table.to_csv().splitlines()[0] == HEADER

    def test_round_trip(self, table):
        assert ReportTable.from_csv(table.to_csv()) == table

    def test_missing_values_are_empty_cells(self, table):
        assert table.to_csv().splitlines()[1] == "baseline,,,,,,0.8,0.78,0.99,0.45"

    def test_file_round_trip(self, table, tmp_path):
        path = table.write(tmp_path / "out" / "rows.csv")
        assert ReportTable.read(path) == table

    def test_wrong_header(self):
        with pytest.raises(ManifestError):
            ReportTable.from_csv("a,b\n1,2\n")

    def test_wrong_column_count(self):
        with pytest.raises(ManifestError, match="line 2"):
            ReportTable.from_csv(HEADER + "\nnone,134\n")

    def test_bad_number(self):
        with pytest.raises(ManifestError, match="fid"):
            ReportTable.from_csv(HEADER + "\nnone,134,,,0.1,abc,,,,\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ReportTable.read(tmp_path / "absent.csv")

    def test_filtered(self, table):
        assert [r.augmentation for r in table.filtered(["aiin", "none"]).rows] == ["none", "aiin"]
        assert table.filtered(None) is table


class TestTextTable:
    def test_layout(self, table):
        lines = format_text_table(table).splitlines()
        assert lines[0].split() == HEADER.split(',')
        assert set(lines[1].replace(' ', '')) == {'-'}
        assert lines[2].split()[:3] == ["baseline", "-", "-"]
        assert "0.4173" in lines[4]
        assert "-0.0120" in lines[4]

    def test_labels(self, table):
        assert row_label(table.rows[2]) == "aiin 8x8 CT50 / 134"
        assert row_label(table.rows[0]) == "baseline"

    def test_rank_lines(self, table):
        assert rank_table([table.rows[2]]) == "1. aiin 8x8 CT50 / 134  msssim_delta=-0.0120  fid=0.4173\n"


class TestSvgBars:
    def test_single_bar(self):
        svg = emit_svg_bars(ReportTable((make_row(fid=0.5),)), "fid")
        heights = bar_heights(svg)
        assert len(heights) == 1
        assert heights[0] > 0.0

    def test_heights_are_linear(self):
        rows = (make_row(fid=1.0), make_row(fid=2.0), make_row(fid=4.0))
        heights = bar_heights(emit_svg_bars(ReportTable(rows), "fid"))
        assert heights[1] == pytest.approx(2 * heights[0])
        assert heights[2] == pytest.approx(4 * heights[0])

    def test_equal_values_equal_heights(self):
        rows = tuple(make_row(fid=0.3) for _ in range(4))
        assert len(set(bar_heights(emit_svg_bars(ReportTable(rows), "fid")))) == 1

    def test_missing_values_skipped(self, table):
        assert len(bar_heights(emit_svg_bars(table, "fid"))) == 2
        assert len(bar_heights(emit_svg_bars(table, "accuracy"))) == 3

    def test_negative_values_hang_below_baseline(self):
        svg = emit_svg_bars(ReportTable((make_row(delta=0.02), make_row(delta=-0.02))), "msssim_delta")
        root = etree.fromstring(svg.encode('utf-8'))
        up, down = root.iterfind(".//svg:g[@id='bars']/svg:rect", SVG_NS)
        assert float(up.get("y")) + float(up.get("height")) == pytest.approx(float(down.get("y")))

    def test_well_formed_for_random_tables(self, np_rng):
        for _ in range(20):
            rows = tuple(
                make_row(delta=float(np_rng.normal(0, 0.05)), fid=float(np_rng.random()))
                for _ in range(int(np_rng.integers(1, 12)))
            )
            root = etree.fromstring(emit_svg_bars(ReportTable(rows), "msssim_delta").encode('utf-8'))
            assert root.tag == "{http://www.w3.org/2000/svg}svg"
            assert root.get("version") == "1.1"

    def test_deterministic(self, table):
        assert emit_svg_bars(table, "fid") == emit_svg_bars(table, "fid")

    def test_unknown_metric(self, table):
        with pytest.raises(ParameterError):
            emit_svg_bars(table, "window")

    def test_empty_table(self):
        with pytest.raises(ParameterError):
            emit_svg_bars(ReportTable(()), "fid")


class TestReportGenerator:
    def test_write_report(self, table, tmp_path):
        written = ReportGenerator().write_report(table, tmp_path / "report", metrics=["fid", "specificity"])
        assert [p.name for p in written] == ["report.txt", "fid.svg", "specificity.svg"]
        assert all(p.is_file() for p in written)

    def test_chart_filter(self, table, tmp_path):
        ReportGenerator().write_report(table, tmp_path, metrics=["accuracy"], augmentations=["aiin"])
        assert len(bar_heights((tmp_path / "accuracy.svg").read_text(encoding='utf-8'))) == 1

    def test_png_charts(self, table, tmp_path):
        written = ReportGenerator().write_report(table, tmp_path, metrics=["fid", "accuracy"], png=True)
        assert [p.name for p in written] == ["report.txt", "fid.svg", "fid.png", "accuracy.svg", "accuracy.png"]
        for name in ("fid.png", "accuracy.png"):
            assert (tmp_path / name).read_bytes().startswith(b'\x89PNG')

    def test_pdf_report(self, table, tmp_path):
        written = ReportGenerator().write_report(table, tmp_path, metrics=["fid"], pdf=True)
        assert written[-1] == tmp_path / "report.pdf"
        assert written[-1].read_bytes().startswith(b'%PDF')

    def test_html_inlines_charts(self, table):
        html = ReportGenerator().render_html(table, {"fid": emit_svg_bars(table, "fid")})
        assert "<?xml" not in html
        assert html.count("<svg") == 1
        assert "0.687" in html

    def test_html_is_dated_only_on_request(self, table):
        generator = ReportGenerator()
        charts = {"fid": emit_svg_bars(table, "fid")}
        undated = generator.render_html(table, charts)
        assert "Generated" not in undated
        assert generator.render_html(table, charts) == undated
        assert "Generated October 19, 2026" in generator.render_html(table, charts, "October 19, 2026")

    def test_missing_template(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ReportGenerator(template_path=tmp_path / "absent.html")
