"""Episode outcomes and aggregated navigation metrics.

NE: mean distance (m) between stop point and goal. TL: mean macro-action
count (Stop excluded). SR: percent of episodes stopping within the success
radius. SPL: success weighted by path length. BTR: percent of episodes that
revisited an already-visited place. BSCR: among those, percent that still
succeeded (undefined when nothing revisited).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class EpisodeResult:
    scenario: str
    instruction: str
    category: str
    success: int                 # S_i in {0, 1}
    steps: int                   # p_i: executed macro actions, Stop excluded
    shortest: int                # l_i: optimal path length in cells
    final_error_m: float
    revisited: bool
    backtracked_then_succeeded: bool
    seed: int
    stopped: bool = False        # episode ended with an executed Stop
    decisions: int = 0           # decision cycles consumed
    decision_calls: int = 0      # policy invocations (0 on experience reuse)
    reused: bool = False
    aborted_reason: str | None = None

    def __post_init__(self):
        if self.success not in (0, 1):
            raise ValueError("success must be 0 or 1")
        if self.steps < 0 or self.shortest < 0:
            raise ValueError("steps and shortest must be non-negative")


def compute_spl(results) -> float:
    """Success weighted by path length, in percent.

    Per-episode term: S_i * l_i / max(p_i, l_i). A degenerate episode that
    starts on its goal (p = l = 0) contributes its success indicator.
    """
    results = list(results)
    if not results:
        raise ValueError("no episodes")
    total = 0.0
    for r in results:
        denom = max(r.steps, r.shortest)
        total += r.success if denom == 0 else r.success * r.shortest / denom
    return 100.0 * total / len(results)


def compute_core_metrics(results) -> tuple[float, float, float]:
    """(NE, TL, SR) over a non-empty result list."""
    results = list(results)
    if not results:
        raise ValueError("no episodes")
    n = len(results)
    ne = sum(r.final_error_m for r in results) / n
    tl = sum(r.steps for r in results) / n
    sr = 100.0 * sum(r.success for r in results) / n
    return ne, tl, sr


def compute_backtracking_metrics(results) -> tuple[float, float | None]:
    """(BTR, BSCR); BSCR is None when no episode revisited a place."""
    results = list(results)
    if not results:
        raise ValueError("no episodes")
    revisited = [r for r in results if r.revisited]
    btr = 100.0 * len(revisited) / len(results)
    if not revisited:
        return btr, None
    bscr = 100.0 * sum(r.success for r in revisited) / len(revisited)
    return btr, bscr


@dataclass(frozen=True)
class MetricsRow:
    category: str
    n: int
    ne: float
    tl: float
    sr: float
    spl: float
    btr: float
    bscr: float | None


@dataclass(frozen=True)
class MetricsReport:
    overall: MetricsRow
    by_category: tuple[MetricsRow, ...]

    def rows(self) -> list[MetricsRow]:
        return [self.overall, *self.by_category]


def _row(category: str, results) -> MetricsRow:
    ne, tl, sr = compute_core_metrics(results)
    spl = compute_spl(results)
    btr, bscr = compute_backtracking_metrics(results)
    if not (0.0 <= spl <= sr + 1e-9 <= 100.0 + 1e-9):
        raise AssertionError(f"metric invariant violated: SPL={spl}, SR={sr}")
    return MetricsRow(category, len(list(results)), ne, tl, sr, spl, btr, bscr)


def build_report(results) -> MetricsReport:
    results = list(results)
    if not results:
        raise ValueError("no episodes")
    categories = sorted({r.category for r in results})
    return MetricsReport(
        overall=_row("all", results),
        by_category=tuple(
            _row(cat, [r for r in results if r.category == cat]) for cat in categories
        ),
    )


COLUMNS = ("category", "N", "NE", "TL", "SR", "SPL", "BTR", "BSCR")


def _cells(row: MetricsRow) -> list[str]:
    return [
        row.category,
        str(row.n),
        f"{row.ne:.2f}",
        f"{row.tl:.2f}",
        f"{row.sr:.2f}",
        f"{row.spl:.2f}",
        f"{row.btr:.2f}",
        "" if row.bscr is None else f"{row.bscr:.2f}",
    ]


def render_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in report.rows():
        writer.writerow(_cells(row))
    return buf.getvalue()


def render_table(report: MetricsReport) -> str:
    grid = [list(COLUMNS)] + [_cells(row) for row in report.rows()]
    widths = [max(len(line[i]) for line in grid) for i in range(len(COLUMNS))]
    lines = []
    for j, line in enumerate(grid):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
        if j == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(COLUMNS))))
    return "\n".join(lines) + "\n"


def emit_report(report: MetricsReport, path: str | Path, fmt: str | None = None) -> None:
    """Write the report as CSV or a fixed-width table (by flag or extension)."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "table"
    if fmt not in ("csv", "table"):
        raise ValueError(f"unknown report format {fmt!r}")
    text = render_csv(report) if fmt == "csv" else render_table(report)
    path.write_text(text, encoding="utf-8")
