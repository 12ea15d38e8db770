"""Result tables: aligned text and CSV with identical numbers.

Rows are grouped into one section per experiment setting (stream
fingerprint), ordered joint first and cade last within a section, and
EERs appear as percentages with three decimals.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..train import RunReport, SummaryRow, aggregate

_DISPLAY = {"joint": "JOINT", "finetune": "FINETUNE", "ewc": "EWC",
            "lwf": "LWF", "mas": "MAS", "replay": "REPLAY",
            "dfwf": "DFWF", "cade": "CADE"}

_HEADERS = ("Experiment Setting", "Method", "Memory", "Test EER(%)")


def read_records(results_path: Path) -> list[dict]:
    results_path = Path(results_path)
    if not results_path.exists():
        raise ValueError(f"no results file at {results_path}")
    records = [json.loads(line)
               for line in results_path.read_text().splitlines()
               if line.strip()]
    if not records:
        raise ValueError(f"results file {results_path} is empty")
    return records


def _report_from(record: dict) -> RunReport:
    return RunReport(
        method=record["method"],
        memory=int(record["memory"]),
        seed=int(record["seed"]),
        per_task_eer=tuple(tuple(row) for row in record["per_task_eer"]),
        final_eer=float(record["final_eer"]),
        fingerprint=record["fingerprint"],
        wall_ms=float(record["wall_ms"]),
        counters=record.get("counters", {}),
    )


def build_sections(records: list[dict]) -> list[tuple[str, str,
                                                      list[SummaryRow]]]:
    """(setting label, fingerprint, summary rows) per stream, sorted."""
    by_fp: dict[str, list[dict]] = {}
    for r in records:
        by_fp.setdefault(r["fingerprint"], []).append(r)
    sections = []
    for fp, recs in by_fp.items():
        label = recs[0].get("setting") or f"stream {fp}"
        rows = aggregate([_report_from(r) for r in recs])
        sections.append((label, fp, rows))
    sections.sort(key=lambda s: (s[0], s[1]))
    return sections


def _pct(v: float) -> str:
    return f"{100.0 * v:.3f}"


def _memory_cell(row: SummaryRow) -> str:
    return "/" if row.method == "joint" else str(row.memory)


def _eer_cell(row: SummaryRow) -> str:
    if row.n_seeds > 1:
        return f"{_pct(row.mean_eer)}±{_pct(row.std_eer)}"
    return _pct(row.mean_eer)


def render_text(sections) -> str:
    cells = []
    for label, _, rows in sections:
        for i, row in enumerate(rows):
            cells.append((label if i == 0 else "", _DISPLAY[row.method],
                          _memory_cell(row), _eer_cell(row)))
    widths = [max(len(h), *(len(c[i]) for c in cells))
              for i, h in enumerate(_HEADERS)]
    def line(parts):
        return "  ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()
    out = [line(_HEADERS), line(["-" * w for w in widths])]
    k = 0
    for s_idx, (label, _, rows) in enumerate(sections):
        if s_idx:
            out.append("")
        for _ in rows:
            out.append(line(cells[k]))
            k += 1
    return "\n".join(out) + "\n"


def render_csv(sections) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["setting", "fingerprint", "method", "memory",
                "eer_mean_pct", "eer_std_pct", "n_seeds"])
    for label, fp, rows in sections:
        for row in rows:
            w.writerow([label, fp, _DISPLAY[row.method],
                        _memory_cell(row), _pct(row.mean_eer),
                        _pct(row.std_eer), row.n_seeds])
    return buf.getvalue()


def write_tables(records: list[dict], out_dir: Path) -> tuple[Path, Path]:
    sections = build_sections(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / "table.txt"
    csv_path = out_dir / "table.csv"
    text_path.write_text(render_text(sections))
    csv_path.write_text(render_csv(sections))
    return text_path, csv_path
