"""
Result reporting: the experiment rows CSV, a fixed-width text table, SVG bar
charts per metric, and optional PNG (cairosvg) and PDF (Jinja2 + WeasyPrint)
renderings.
"""
import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import cairosvg
import weasyprint
from jinja2 import Environment, FileSystemLoader
from lxml import etree

from aiin_gan_evaluator.errors import ManifestError, ParameterError
from aiin_gan_evaluator.experiment_runner import ROW_FIELDS, ExperimentRow

logger = logging.getLogger(__name__)

NUMERIC_COLUMNS = ("msssim_delta", "fid", "accuracy", "precision", "recall", "specificity")
SVG_NS = "http://www.w3.org/2000/svg"
TEMPLATE_DIR = Path(__file__).parent / "templates"

_INT_COLUMNS = ("batch_size", "threshold")
_TEXT_COLUMNS = ("window",)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _parse_cell(column: str, text: str, line_number: int):
    text = text.strip()
    if column == "augmentation":
        if not text:
            raise ManifestError(f"Error! Row on line {line_number} has an empty augmentation tag.")
        return text
    if not text:
        return None
    try:
        if column in _INT_COLUMNS:
            return int(text)
        if column in _TEXT_COLUMNS:
            return text
        return float(text)
    except ValueError as e:
        raise ManifestError(f"Error! Bad {column} value '{text}' on line {line_number}.") from e


def row_label(row: ExperimentRow) -> str:
    """Short chart label such as 'aiin 8x8 CT50 / 134'."""
    parts = [row.augmentation]
    if row.window:
        parts.append(row.window)
    if row.threshold is not None:
        parts.append(f"CT{row.threshold}")
    label = ' '.join(parts)
    if row.batch_size is not None:
        label += f" / {row.batch_size}"
    return label


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[ExperimentRow, ...]

    def __post_init__(self):
        object.__setattr__(self, 'rows', tuple(self.rows))

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(ROW_FIELDS)
        for row in self.rows:
            writer.writerow([_format_cell(value) for value in row])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ReportTable":
        """
        Parse a rows CSV.

        Raises:
            ManifestError: Missing or wrong header, wrong column count, bad value
        """
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(cell.strip() for cell in header) != ROW_FIELDS:
            raise ManifestError(f"Error! Rows CSV header must be exactly '{','.join(ROW_FIELDS)}'.")

        rows = []
        for line_number, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(ROW_FIELDS):
                raise ManifestError(
                    f"Error! Row on line {line_number} has {len(record)} columns, expected {len(ROW_FIELDS)}."
                )
            rows.append(ExperimentRow(*(
                _parse_cell(column, cell, line_number) for column, cell in zip(ROW_FIELDS, record)
            )))
        return cls(tuple(rows))

    def write(self, csv_path: Union[str, Path]) -> Path:
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(self.to_csv(), encoding='utf-8')
        return csv_path

    @classmethod
    def read(cls, csv_path: Union[str, Path]) -> "ReportTable":
        csv_path = Path(csv_path)
        if not csv_path.is_file():
            raise FileNotFoundError(f"Error! Rows file '{csv_path}' does not exist!")
        try:
            return cls.from_csv(csv_path.read_text(encoding='utf-8'))
        except ManifestError as e:
            raise ManifestError(f"{e} (file '{csv_path}')") from e

    def filtered(self, augmentations: Optional[Iterable[str]]) -> "ReportTable":
        if not augmentations:
            return self
        wanted = {tag.strip() for tag in augmentations}
        return ReportTable(tuple(row for row in self.rows if row.augmentation in wanted))


def format_text_table(table: ReportTable) -> str:
    """Fixed-width table; floats to 4 decimals, missing values as '-'."""
    def cell(value) -> str:
        if value is None:
            return "-"
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    lines = [list(ROW_FIELDS)] + [[cell(value) for value in row] for row in table.rows]
    widths = [max(len(line[i]) for line in lines) for i in range(len(ROW_FIELDS))]
    rendered = ['  '.join(text.ljust(width) for text, width in zip(line, widths)).rstrip() for line in lines]
    rendered.insert(1, '  '.join('-' * width for width in widths))
    return '\n'.join(rendered) + '\n'


def emit_svg_bars(
    table: ReportTable,
    metric: str,
    width: int = 640,
    height: int = 360
) -> str:
    """
    Bar chart of one numeric column, one bar per row in table order.

    Bar heights are linear in the value and measured from a zero baseline, so
    negative values (an MS-SSIM delta below zero) hang below it. Rows without a
    value for the metric are skipped.

    Args:
        table (ReportTable): Rows to chart
        metric (str): Numeric column name
        width (int): Canvas width in pixels
        height (int): Canvas height in pixels

    Returns:
        str: SVG 1.1 document

    Raises:
        ParameterError: Unknown column, or no row carries the metric
    """
    if metric not in NUMERIC_COLUMNS:
        raise ParameterError(f"Error! '{metric}' is not a numeric column; use one of {', '.join(NUMERIC_COLUMNS)}.")
    rows = [row for row in table.rows if getattr(row, metric) is not None]
    if not rows:
        raise ParameterError(f"Error! No rows carry a '{metric}' value to chart.")

    values = [float(getattr(row, metric)) for row in rows]
    margin_left, margin_right, margin_top, margin_bottom = 60, 20, 40, 90
    plot_w = width - margin_left - margin_right
    plot_h = height - margin_top - margin_bottom

    top = max(max(values), 0.0)
    bottom = min(min(values), 0.0)
    span = top - bottom
    scale = plot_h / span if span > 0 else 0.0
    baseline = margin_top + top * scale

    svg = etree.Element(
        f"{{{SVG_NS}}}svg",
        nsmap={None: SVG_NS},
        version="1.1",
        width=str(width),
        height=str(height),
        viewBox=f"0 0 {width} {height}"
    )
    title = etree.SubElement(svg, f"{{{SVG_NS}}}text", x=str(width / 2), y="24")
    title.set("text-anchor", "middle")
    title.set("font-size", "16")
    title.text = metric

    axis = etree.SubElement(svg, f"{{{SVG_NS}}}g", id="axes", stroke="black")
    etree.SubElement(axis, f"{{{SVG_NS}}}line", x1=str(margin_left), y1=str(margin_top),
                     x2=str(margin_left), y2=str(margin_top + plot_h))
    etree.SubElement(axis, f"{{{SVG_NS}}}line", x1=str(margin_left), y1=f"{baseline:.6f}",
                     x2=str(margin_left + plot_w), y2=f"{baseline:.6f}")

    y_label = etree.SubElement(svg, f"{{{SVG_NS}}}text", x="16", y=str(margin_top + plot_h / 2))
    y_label.set("transform", f"rotate(-90 16 {margin_top + plot_h / 2})")
    y_label.set("text-anchor", "middle")
    y_label.set("font-size", "12")
    y_label.text = metric

    for y_value, y_pos in ((top, margin_top), (bottom, margin_top + plot_h)):
        tick = etree.SubElement(svg, f"{{{SVG_NS}}}text", x=str(margin_left - 4), y=f"{y_pos:.6f}")
        tick.set("text-anchor", "end")
        tick.set("font-size", "10")
        tick.text = f"{y_value:.4g}"

    bars = etree.SubElement(svg, f"{{{SVG_NS}}}g", id="bars", fill="steelblue")
    slot = plot_w / len(rows)
    bar_w = slot * 0.7
    for index, (row, value) in enumerate(zip(rows, values)):
        x = margin_left + index * slot + (slot - bar_w) / 2
        bar_h = abs(value) * scale
        y = baseline - bar_h if value >= 0 else baseline
        rect = etree.SubElement(
            bars, f"{{{SVG_NS}}}rect",
            x=f"{x:.6f}", y=f"{y:.6f}", width=f"{bar_w:.6f}", height=f"{bar_h:.6f}"
        )
        rect.set("data-value", repr(value))
        tooltip = etree.SubElement(rect, f"{{{SVG_NS}}}title")
        tooltip.text = f"{row_label(row)}: {value:.4f}"

        label_x = x + bar_w / 2
        label_y = margin_top + plot_h + 12
        label = etree.SubElement(svg, f"{{{SVG_NS}}}text", x=f"{label_x:.6f}", y=f"{label_y:.6f}")
        label.set("transform", f"rotate(45 {label_x:.6f} {label_y:.6f})")
        label.set("font-size", "10")
        label.text = row_label(row)

    return etree.tostring(svg, pretty_print=True, xml_declaration=True, encoding='UTF-8').decode('utf-8')


def rank_table(rows: Sequence[ExperimentRow]) -> str:
    """Numbered ranking lines for `report --rank`."""
    return ''.join(
        f"{position}. {row_label(row)}  msssim_delta={row.msssim_delta:+.4f}  fid={row.fid:.4f}\n"
        for position, row in enumerate(rows, start=1)
    )


class ReportGenerator:
    """
    Writes the rows table, one SVG chart per metric and optional PNG/PDF renderings.

    Args:
        template_path (Path): Jinja2 HTML template used for the PDF report
        dpi (int): Resolution for PNG rasterisation
        width (int): Chart width
        height (int): Chart height
    """

    def __init__(
        self,
        template_path: Union[str, Path] = TEMPLATE_DIR / "report_template.html",
        dpi: int = 96,
        width: int = 640,
        height: int = 360
    ):
        template_path = Path(template_path)
        if not template_path.is_file():
            raise FileNotFoundError(f"Error! Report template '{template_path}' does not exist!")
        self.template_path = template_path
        self.dpi = dpi
        self.width = width
        self.height = height

    def _svg_to_png(self, svg_content: str, output_path: Path) -> Path:
        output_path.write_bytes(cairosvg.svg2png(bytestring=svg_content.encode('utf-8'), dpi=self.dpi))
        return output_path

    def render_html(self, table: ReportTable, charts: dict[str, str], generation_date: Optional[str] = None) -> str:
        """HTML report with the charts inlined; the date line is left out unless given."""
        environment = Environment(loader=FileSystemLoader(str(self.template_path.parent)), autoescape=True)
        template = environment.get_template(self.template_path.name)
        # drop the XML declaration so the SVG can be inlined
        inline_charts = {metric: svg.split('?>', 1)[-1].strip() for metric, svg in charts.items()}
        html_content = template.render(
            columns=ROW_FIELDS,
            rows=[[_format_cell(value) for value in row] for row in table.rows],
            charts=inline_charts,
            generation_date=generation_date
        )
        return html_content

    def _render_pdf(self, html_content: str, output_path: Path) -> Path:
        weasyprint.HTML(string=html_content).write_pdf(str(output_path))
        return output_path

    def write_report(
        self,
        table: ReportTable,
        output_folder: Union[str, Path],
        metrics: Sequence[str] = ("msssim_delta", "fid"),
        augmentations: Optional[Iterable[str]] = None,
        png: bool = False,
        pdf: bool = False,
        generation_date: Optional[str] = None
    ) -> list[Path]:
        output_folder = Path(output_folder)
        output_folder.mkdir(parents=True, exist_ok=True)
        chart_table = table.filtered(augmentations)

        written = [output_folder / "report.txt"]
        written[0].write_text(format_text_table(table), encoding='utf-8')

        charts = {}
        for metric in metrics:
            svg_content = emit_svg_bars(chart_table, metric, self.width, self.height)
            charts[metric] = svg_content
            svg_path = output_folder / f"{metric}.svg"
            svg_path.write_text(svg_content, encoding='utf-8')
            written.append(svg_path)
            if png:
                written.append(self._svg_to_png(svg_content, output_folder / f"{metric}.png"))

        if pdf:
            html_content = self.render_html(table, charts, generation_date)
            written.append(self._render_pdf(html_content, output_folder / "report.pdf"))

        logger.info("Wrote %d report files to %s", len(written), output_folder)
        return written
