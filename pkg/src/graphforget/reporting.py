"""Render metric reports as aligned text tables plus machine-readable rows.

Rows aggregate repeated runs (seeds) into mean +/- std cells, mirroring the
Forget ROUGE1 / Retain ROUGE1 / Deviation Score column layout, with MRR and
THR columns when rank records were available.
"""

from __future__ import annotations

import math


_COLUMNS = (
    ("rouge1_forget", "Forget ROUGE1", 3),
    ("rouge1_retain", "Retain ROUGE1", 3),
    ("deviation_score", "Deviation Score", 1),
    ("mrr_forget", "Forget MRR", 3),
    ("mrr_retain", "Retain MRR", 3),
    ("thr_forget", "Forget THR", 3),
    ("thr_retain", "Retain THR", 3),
)
_CORE = {"rouge1_forget", "rouge1_retain", "deviation_score"}


def _mean_std(values) -> dict:
    values = [float(v) for v in values]
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return {"mean": mean, "std": math.sqrt(var), "n": len(values)}


def summarize_runs(label: str, reports) -> dict:
    """Aggregate to-dict'ed MetricReports (or raw dicts) into one table row."""
    dicts = [r if isinstance(r, dict) else r.to_dict() for r in reports]
    row: dict = {"label": label}
    for key, _, _ in _COLUMNS:
        values = [d[key] for d in dicts if key in d and d[key] is not None]
        if values:
            row[key] = _mean_std(values)
    return row


def _cell(stat: dict | None, decimals: int) -> str:
    if stat is None:
        return "-"
    if stat["n"] == 1:
        return f"{stat['mean']:.{decimals}f}"
    return f"{stat['mean']:.{decimals}f} ± {stat['std']:.{decimals}f}"


def render_table(rows, label_header: str = "Run") -> str:
    """Aligned text table; columns absent from every row are dropped."""
    active = [
        (key, header, decimals)
        for key, header, decimals in _COLUMNS
        if key in _CORE or any(key in row for row in rows)
    ]
    headers = [label_header] + [h for _, h, _ in active]
    grid = [headers]
    for row in rows:
        grid.append([str(row["label"])] + [_cell(row.get(key), d) for key, _, d in active])
    widths = [max(len(line[i]) for line in grid) for i in range(len(headers))]
    rendered = []
    for line_no, line in enumerate(grid):
        rendered.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        if line_no == 0:
            rendered.append("  ".join("-" * w for w in widths))
    return "\n".join(rendered) + "\n"
