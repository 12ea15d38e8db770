"""Figures rendered next to the tables: method bars and memory trends."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from ..train import SummaryRow  # noqa: E402
from .tables import _DISPLAY, _memory_cell  # noqa: E402


def _bar_figure(label: str, rows: list[SummaryRow], path: Path) -> None:
    names = [f"{_DISPLAY[r.method]}\nmem {_memory_cell(r)}" for r in rows]
    means = [100.0 * r.mean_eer for r in rows]
    stds = [100.0 * r.std_eer for r in rows]
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(rows)), 3.6))
    ax.bar(range(len(rows)), means, yerr=stds, capsize=3,
           color="#4878a8", edgecolor="black", linewidth=0.5)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names, fontsize=8)
    ax.set_ylabel("Test EER (%)")
    ax.set_title(label, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _memory_figure(label: str, rows: list[SummaryRow],
                   path: Path) -> bool:
    by_method: dict[str, list[SummaryRow]] = {}
    for r in rows:
        if r.method != "joint" and r.memory > 0:
            by_method.setdefault(r.method, []).append(r)
    multi = {m: rs for m, rs in by_method.items() if len(rs) > 1}
    if not multi:
        return False
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for method, rs in sorted(multi.items()):
        rs = sorted(rs, key=lambda r: r.memory)
        ax.plot([r.memory for r in rs], [100.0 * r.mean_eer for r in rs],
                marker="o", label=_DISPLAY[method])
    ax.set_xlabel("Memory size")
    ax.set_ylabel("Test EER (%)")
    ax.set_title(label, fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_figures(sections, out_dir: Path) -> list[Path]:
    """One bar chart per setting, plus a memory-trend chart when the
    section sweeps more than one memory size."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for label, fp, rows in sections:
        bar_path = out_dir / f"eer_methods_{fp[:8]}.png"
        _bar_figure(label, rows, bar_path)
        paths.append(bar_path)
        mem_path = out_dir / f"eer_memory_{fp[:8]}.png"
        if _memory_figure(label, rows, mem_path):
            paths.append(mem_path)
    return paths
