"""Report emitters: CSV, JSON and self-contained SVG panels.

The CSV column order is fixed:

    run_index, seed, t0_true, pLv_true, t1, t2, c2_5, c97_5,
    e_true, e1, e2, e_c2_5, e_c97_5, n_hosp

Unknown values (the truth columns of real-data runs) serialise as empty
CSV fields / JSON nulls.  Floats are written with ``repr`` so parsing the
file back reproduces the records exactly and identical runs give
byte-identical files.  The JSON document carries the same fields per
record plus the thinned posterior sample list used by the SVG panel.
"""

from __future__ import annotations

import json

from .harness import RunRecord, SuiteSummary, suite_summary

__all__ = [
    "CSV_COLUMNS",
    "emit_report",
    "records_to_csv",
    "records_to_json",
    "records_to_svg",
    "read_records_csv",
    "read_report_json",
]

CSV_COLUMNS = (
    "run_index", "seed", "t0_true", "pLv_true", "t1", "t2", "c2_5", "c97_5",
    "e_true", "e1", "e2", "e_c2_5", "e_c97_5", "n_hosp",
)

_INT_COLUMNS = {"run_index", "seed", "n_hosp"}
_OPTIONAL_COLUMNS = {"t0_true", "pLv_true", "e_true"}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def records_to_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            fh.write(",".join(_cell(getattr(r, col)) for col in CSV_COLUMNS) + "\n")


def read_records_csv(path) -> list[RunRecord]:
    records = []
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        for line in fh:
            raw = line.rstrip("\n").split(",")
            kwargs = {}
            for col, text in zip(CSV_COLUMNS, raw):
                if text == "":
                    kwargs[col] = None
                elif col in _INT_COLUMNS:
                    kwargs[col] = int(text)
                else:
                    kwargs[col] = float(text)
            records.append(RunRecord(**kwargs))
    return records


def _record_dict(r: RunRecord) -> dict:
    d = {col: getattr(r, col) for col in CSV_COLUMNS}
    d["t0_samples"] = list(r.t0_samples) if r.t0_samples is not None else None
    return d


def records_to_json(records, summary: SuiteSummary | None, path) -> None:
    doc = {
        "records": [_record_dict(r) for r in records],
        "summary": None if summary is None else {
            "n_runs": summary.n_runs,
            "n_t1_better": summary.n_t1_better,
            "sd_t1_error": summary.sd_t1_error,
            "sd_t2_error": summary.sd_t2_error,
            "mean_ci_width": summary.mean_ci_width,
            "mean_n_hosp": summary.mean_n_hosp,
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_report_json(path) -> tuple[list[RunRecord], SuiteSummary | None]:
    with open(path) as fh:
        doc = json.load(fh)
    records = []
    for d in doc["records"]:
        samples = d.get("t0_samples")
        records.append(RunRecord(
            **{col: d[col] for col in CSV_COLUMNS},
            t0_samples=tuple(samples) if samples is not None else None,
        ))
    summary = None
    if doc.get("summary") is not None:
        summary = SuiteSummary(**doc["summary"])
    return records, summary


# --- SVG panel -------------------------------------------------------------
#
# One column group per run (sorted by true t0): tiny light-blue dots are
# posterior samples, the green line is the truth, the red mark the TNCC
# estimate, the cyan mark the crude estimate, and the two dark-blue marks
# the 2.5/97.5 posterior centiles.

_MARGIN_L = 46.0
_MARGIN_R = 14.0
_MARGIN_T = 16.0
_MARGIN_B = 30.0
_COL_W = 26.0
_PANEL_H = 420.0
_Y_HARD_LIMIT = 15.0


def _y_range(records) -> tuple[float, float]:
    values = []
    for r in records:
        values.extend([r.t1, r.t2, r.c2_5, r.c97_5])
        if r.t0_true is not None:
            values.append(r.t0_true)
    lo = max(min(values), -_Y_HARD_LIMIT)
    hi = min(max(values), _Y_HARD_LIMIT)
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def records_to_svg(records, path, title: str = "") -> None:
    if not records:
        raise ValueError("nothing to plot: no records")
    lo, hi = _y_range(records)
    width = _MARGIN_L + _COL_W * len(records) + _MARGIN_R
    height = _MARGIN_T + _PANEL_H + _MARGIN_B

    def y_of(value: float) -> float:
        clipped = min(max(value, lo), hi)
        return _MARGIN_T + _PANEL_H * (hi - clipped) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="12" font-size="11" text-anchor="middle">{title}</text>'
        )
    # y axis with ticks at whole nats
    axis_x = _MARGIN_L - 6.0
    parts.append(
        f'<line x1="{axis_x:.1f}" y1="{_MARGIN_T:.1f}" x2="{axis_x:.1f}" '
        f'y2="{_MARGIN_T + _PANEL_H:.1f}" stroke="black" stroke-width="1"/>'
    )
    tick = int(lo) - 1
    while tick <= hi + 1:
        if lo <= tick <= hi:
            y = y_of(float(tick))
            parts.append(
                f'<line x1="{axis_x - 4:.1f}" y1="{y:.1f}" x2="{axis_x:.1f}" y2="{y:.1f}" '
                f'stroke="black" stroke-width="1"/>'
            )
            parts.append(
                f'<text x="{axis_x - 7:.1f}" y="{y + 3:.1f}" font-size="9" '
                f'text-anchor="end">{tick}</text>'
            )
        tick += 1
    for i, r in enumerate(records):
        x0 = _MARGIN_L + _COL_W * i
        xc = x0 + _COL_W / 2.0
        group = [f'<g class="run" data-run="{r.run_index}">']
        if r.t0_samples:
            for s in r.t0_samples:
                group.append(
                    f'<circle class="sample" cx="{xc:.1f}" cy="{y_of(s):.2f}" r="1.1" '
                    f'fill="#a8c4e8" fill-opacity="0.5"/>'
                )
        if r.t0_true is not None:
            y = y_of(r.t0_true)
            group.append(
                f'<line class="truth" x1="{x0 + 2:.1f}" y1="{y:.2f}" x2="{x0 + _COL_W - 2:.1f}" '
                f'y2="{y:.2f}" stroke="green" stroke-width="1.6"/>'
            )
        for cls, value, colour in (
            ("tncc", r.t1, "red"),
            ("crude", r.t2, "#00bbbb"),
            ("centile", r.c2_5, "#00008b"),
            ("centile", r.c97_5, "#00008b"),
        ):
            y = y_of(value)
            group.append(
                f'<rect class="{cls}" x="{xc - 5:.1f}" y="{y - 1.5:.2f}" width="10" '
                f'height="3" fill="{colour}"/>'
            )
        group.append("</g>")
        parts.extend(group)
        parts.append(
            f'<text x="{xc:.1f}" y="{_MARGIN_T + _PANEL_H + 14:.1f}" font-size="9" '
            f'text-anchor="middle">{r.run_index}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def emit_report(records, summary: SuiteSummary | None, fmt: str, path) -> None:
    """Write the records (and summary, where the format carries one) to disk."""
    if not records:
        raise ValueError("nothing to report: no records")
    if fmt == "csv":
        records_to_csv(records, path)
    elif fmt == "json":
        records_to_json(records, summary, path)
    elif fmt == "svg":
        records_to_svg(records, path)
    else:
        raise ValueError(f"unknown report format {fmt!r}; expected csv, json or svg")
