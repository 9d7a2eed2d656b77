"""Ablation tables and embedding exports built from stored evaluation reports."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .evaluation import EvalReport

TABLE_COLUMNS = ("benchmark", "n_way", "k_shot", "spf", "sci", "cif", "mean", "ci95", "episodes")


def table_rows(reports: Iterable[EvalReport]) -> list[dict]:
    """One row per report, sorted by module toggles so ablations line up."""
    rows = []
    for r in reports:
        m = r.meta
        rows.append({
            "benchmark": m.get("benchmark", ""),
            "n_way": m.get("n_way", ""),
            "k_shot": m.get("k_shot", ""),
            "spf": bool(m.get("spf", False)),
            "sci": bool(m.get("sci", False)),
            "cif": bool(m.get("cif", False)),
            "mean": r.mean,
            "ci95": r.ci95,
            "episodes": r.n_episodes,
        })
    rows.sort(key=lambda row: (str(row["benchmark"]), str(row["n_way"]), str(row["k_shot"]),
                               row["spf"], row["sci"], row["cif"]))
    return rows


def format_table(rows: Sequence[dict]) -> str:
    """Fixed-width text table; module toggles shown as check marks."""
    def cell(col, value):
        if col in ("spf", "sci", "cif"):
            return "x" if value else "-"
        if col in ("mean", "ci95"):
            return f"{value:.2f}"
        return str(value)

    body = [[cell(c, row[c]) for c in TABLE_COLUMNS] for row in rows]
    widths = [max([len(c)] + [len(b[i]) for b in body]) for i, c in enumerate(TABLE_COLUMNS)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(TABLE_COLUMNS, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def table_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, TABLE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        # repr keeps floats exact through a round trip
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def parse_table_csv(text: str) -> list[dict]:
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = dict(raw)
        for key in ("spf", "sci", "cif"):
            row[key] = row[key] == "True"
        for key in ("mean", "ci95"):
            row[key] = float(row[key])
        for key in ("n_way", "k_shot", "episodes"):
            row[key] = int(row[key]) if row[key] not in ("", None) else ""
        rows.append(row)
    return rows


def write_report(reports: Iterable[EvalReport], out_prefix: str | Path) -> tuple[Path, Path]:
    """Write ``<prefix>.txt`` and ``<prefix>.csv`` ablation tables."""
    rows = table_rows(reports)
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    txt, csv_path = prefix.with_suffix(".txt"), prefix.with_suffix(".csv")
    txt.write_text(format_table(rows) + "\n")
    csv_path.write_text(table_csv(rows))
    return txt, csv_path


def load_reports(paths: Iterable[str | Path]) -> list[EvalReport]:
    """Load reports from ``.csv``/``.json`` paths or prefixes, or directories of them."""
    out, seen = [], set()
    for p in map(Path, paths):
        candidates = sorted(p.rglob("*.json")) if p.is_dir() else [p]
        for c in candidates:
            prefix = c.with_suffix("")
            if prefix in seen or not prefix.with_suffix(".csv").exists():
                continue
            seen.add(prefix)
            out.append(EvalReport.load(prefix))
    return out


# -- embeddings -----------------------------------------------------------------


def export_embeddings(features: np.ndarray, labels: Sequence, path: str | Path) -> Path:
    """Save feature vectors and their labels to ``.npz`` for offline projection."""
    path = Path(path).with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, features=np.asarray(features, dtype=np.float32), labels=np.asarray([str(x) for x in labels]))
    return path


def pca_2d(features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    x = x - x.mean(0)
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    return x @ vt[:2].T


def scatter_plot(features: np.ndarray, labels: Sequence, path: str | Path) -> Path | None:
    """PCA scatter coloured by label; returns ``None`` when matplotlib is unavailable."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    xy = pca_2d(features)
    labels = np.asarray([str(x) for x in labels])
    fig, ax = plt.subplots(figsize=(5, 5))
    for name in sorted(set(labels)):
        sel = labels == name
        ax.scatter(xy[sel, 0], xy[sel, 1], s=8, label=name)
    ax.legend(fontsize=7, markerscale=2)
    ax.set_xticks([])
    ax.set_yticks([])
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
