"""PDF and markdown summaries of experiment result files."""
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from reportlab.lib import colors
from reportlab.lib.pagesizes import landscape, letter
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import cm, inch
from reportlab.platypus import (
    CondPageBreak,
    KeepTogether,
    Paragraph,
    SimpleDocTemplate,
    Spacer,
    Table,
    TableStyle,
)

from .harness import fit_slopes, read_json
from .models import ResultRow, SlopeFit

_HEADER_COLOR = colors.HexColor("#2c3e50")
_GRID_COLOR = colors.HexColor("#bdc3c7")
_STRIPE_COLOR = colors.HexColor("#f4f6f7")

ROW_COLUMNS = ["protocol", "params", "n", "mean", "variance", "exact variance", "wall ms"]
FIT_COLUMNS = ["experiment", "protocol", "params", "slope", "stderr", "points"]


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4g}"


def _report_styles() -> Dict[str, ParagraphStyle]:
    base = getSampleStyleSheet()
    return {
        "title": ParagraphStyle("ReportTitle", parent=base["Title"], fontSize=18, spaceAfter=4, alignment=0),
        "section": ParagraphStyle(
            "ReportSection", parent=base["Heading3"], textColor=_HEADER_COLOR, spaceBefore=14, spaceAfter=4
        ),
        "meta": ParagraphStyle("ReportMeta", parent=base["Normal"], fontSize=8, textColor=colors.grey),
        "body": base["Normal"],
    }


class ResultsPDFGenerator:
    """Landscape report: header block, one table per experiment, slope fits at the end."""

    def __init__(self, output_path: str):
        self.output_path = output_path
        self.doc = SimpleDocTemplate(
            output_path,
            pagesize=landscape(letter),
            leftMargin=1.5 * cm,
            rightMargin=1.5 * cm,
            topMargin=1.2 * cm,
            bottomMargin=1.2 * cm,
            title="Shadow estimation results",
        )
        self.styles = _report_styles()
        self.story = []

    def add_header(self, experiments: Sequence[str], num_rows: int, timestamp: str):
        self.story.append(Paragraph("Shadow estimation results", self.styles["title"]))
        self.story.append(
            Paragraph(
                f"{num_rows} grid points across {', '.join(experiments)} | generated {timestamp}",
                self.styles["meta"],
            )
        )
        self.story.append(Spacer(1, 0.4 * cm))

    def _table(self, data: List[List[str]], widths: Sequence[float]) -> Table:
        table = Table(data, colWidths=[w * inch for w in widths], repeatRows=1, hAlign="LEFT")
        style = [
            ("BACKGROUND", (0, 0), (-1, 0), _HEADER_COLOR),
            ("TEXTCOLOR", (0, 0), (-1, 0), colors.white),
            ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
            ("FONTSIZE", (0, 0), (-1, -1), 8),
            ("ALIGN", (2, 1), (-1, -1), "RIGHT"),
            ("LINEBELOW", (0, 0), (-1, -1), 0.25, _GRID_COLOR),
        ]
        style += [("BACKGROUND", (0, r), (-1, r), _STRIPE_COLOR) for r in range(2, len(data), 2)]
        table.setStyle(TableStyle(style))
        return table

    def add_experiment(self, experiment: str, rows: Sequence[ResultRow]):
        first = rows[0]
        heading = [
            Paragraph(experiment, self.styles["section"]),
            Paragraph(f"{first.shots} shots per point, seed {first.seed}", self.styles["meta"]),
        ]
        data = [ROW_COLUMNS]
        for row in rows:
            wall = f"{row.wall_ms:.0f}" if row.wall_ms else "-"
            data.append(
                [row.protocol, row.params, str(row.n), _fmt(row.mean), _fmt(row.variance), _fmt(row.variance_exact), wall]
            )
        table = self._table(data, [0.9, 2.2, 0.4, 1.1, 1.2, 1.2, 0.8])
        # heading stays with the first rows of its table
        self.story.append(CondPageBreak(1.5 * inch))
        self.story.append(KeepTogether(heading))
        self.story.append(table)

    def add_fits_table(self, fits: Sequence[SlopeFit]):
        self.story.append(CondPageBreak(2 * inch))
        self.story.append(Paragraph("log2 variance slopes against n", self.styles["section"]))
        if not fits:
            self.story.append(Paragraph("<i>No group had three or more positive variances</i>", self.styles["body"]))
            return
        data = [FIT_COLUMNS]
        for fit in fits:
            data.append(
                [fit.experiment, fit.protocol, fit.params, f"{fit.slope:.3f}", f"{fit.stderr:.3f}", str(fit.points)]
            )
        self.story.append(self._table(data, [1.6, 0.9, 2.2, 0.8, 0.8, 0.6]))

    def build(self):
        self.doc.build(self.story)


def _by_experiment(rows: Sequence[ResultRow]) -> Dict[str, List[ResultRow]]:
    grouped: Dict[str, List[ResultRow]] = {}
    for row in sorted(rows, key=ResultRow.sort_key):
        grouped.setdefault(row.experiment, []).append(row)
    return grouped


def generate_results_pdf(rows: Sequence[ResultRow], output_path: str, fits: Optional[Sequence[SlopeFit]] = None) -> str:
    """
    Render result rows to a PDF.

    Args:
        rows: Result rows, any mix of experiments
        output_path: Target file
        fits: Slope fits to tabulate; refit from rows when omitted

    Returns:
        output_path
    """
    grouped = _by_experiment(rows)
    generator = ResultsPDFGenerator(output_path)
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M")
    generator.add_header(list(grouped), len(rows), timestamp)
    for experiment, experiment_rows in grouped.items():
        generator.add_experiment(experiment, experiment_rows)
    generator.add_fits_table(fit_slopes(rows) if fits is None else fits)
    generator.build()
    return output_path


def batch_generate_pdf_from_json(json_path: str, output_dir: Optional[str] = None) -> str:
    """PDF next to the JSON results file unless output_dir is given."""
    rows, fits = read_json(json_path)
    target = Path(json_path).parent if output_dir is None else Path(output_dir)
    target.mkdir(parents=True, exist_ok=True)
    pdf_path = target / f"{Path(json_path).stem}.pdf"
    return generate_results_pdf(rows, str(pdf_path), fits or None)


def write_markdown_summary(rows: Sequence[ResultRow], path, fits: Optional[Sequence[SlopeFit]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fits = fit_slopes(rows) if fits is None else fits
    with open(path, "w") as f:
        f.write("# Shadow Estimation Results\n\n")
        f.write(f"*Generated {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}*\n\n")
        for experiment, experiment_rows in _by_experiment(rows).items():
            f.write(f"## {experiment}\n\n")
            f.write("| protocol | params | n | mean | variance | exact variance |\n")
            f.write("|---|---|---|---|---|---|\n")
            for row in experiment_rows:
                f.write(
                    f"| {row.protocol} | {row.params} | {row.n} | {_fmt(row.mean)} | "
                    f"{_fmt(row.variance)} | {_fmt(row.variance_exact)} |\n"
                )
            f.write("\n")
        f.write("## Slopes of log2 variance\n\n")
        if not fits:
            f.write("*No group had three or more positive variances.*\n")
        else:
            f.write("| experiment | protocol | params | slope | stderr | points |\n")
            f.write("|---|---|---|---|---|---|\n")
            for fit in fits:
                f.write(
                    f"| {fit.experiment} | {fit.protocol} | {fit.params} | "
                    f"{fit.slope:.3f} | {fit.stderr:.3f} | {fit.points} |\n"
                )
    return path
