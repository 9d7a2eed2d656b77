"""k-fold cross-validation: train per fold, evaluate both checkpoints, keep the better average."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..config import ExperimentConfig
from ..data import splits
from ..model import load_checkpoint
from .datasets import experiment_data
from .evaluation import EvalReport, evaluate_model
from .training import train

log = logging.getLogger(__name__)

CHECKPOINTS = ("best", "last")


@dataclass
class FoldResult:
    fold: int
    reports: dict[str, EvalReport]  # keyed by checkpoint kind
    best_epoch: int = 0


@dataclass
class CrossValReport:
    benchmark: str
    folds: list[FoldResult]
    selected: str = ""
    meta: dict = field(default_factory=dict)

    def average(self, which: str) -> float:
        return float(np.mean([f.reports[which].mean for f in self.folds]))

    def average_ci(self, which: str) -> float:
        return float(np.mean([f.reports[which].ci95 for f in self.folds]))

    @property
    def mean(self) -> float:
        return self.average(self.selected)

    @property
    def ci95(self) -> float:
        return self.average_ci(self.selected)

    def per_split(self) -> dict[str, float]:
        """Selected-checkpoint accuracy per fold, labelled ``S0``, ``S1``, ... plus ``mean``."""
        out = {f"S{f.fold}": f.reports[self.selected].mean for f in self.folds}
        out["mean"] = self.mean
        return out

    def summary(self) -> str:
        lines = [f"{self.benchmark}: {len(self.folds)} fold(s)"]
        for f in self.folds:
            parts = "  ".join(f"{k} {f.reports[k]}" for k in CHECKPOINTS if k in f.reports)
            lines.append(f"  fold {f.fold}: {parts}")
        for k in CHECKPOINTS:
            lines.append(f"  average {k}: {self.average(k):.2f} +- {self.average_ci(k):.2f}")
        lines.append(f"  selected: {self.selected} checkpoints -> {self.mean:.2f} +- {self.ci95:.2f}")
        if self.benchmark == splits.SCANOBJECTNN_FS:
            lines.append("  " + "  ".join(f"{k} {v:.2f}" for k, v in self.per_split().items()))
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "benchmark": self.benchmark,
            "selected": self.selected,
            "mean": self.mean,
            "ci95": self.ci95,
            "averages": {k: self.average(k) for k in CHECKPOINTS},
            "per_split": self.per_split(),
            "folds": [
                {"fold": f.fold, "best_epoch": f.best_epoch,
                 **{k: {"mean": r.mean, "ci95": r.ci95} for k, r in f.reports.items()}}
                for f in self.folds
            ],
            "meta": self.meta,
        }


def select_checkpoint(folds: Sequence[FoldResult]) -> str:
    """``"best"`` or ``"last"``, whichever has the higher average accuracy; ties keep ``"best"``."""
    avg = {k: np.mean([f.reports[k].mean for f in folds]) for k in CHECKPOINTS}
    return "last" if avg["last"] > avg["best"] else "best"


def run_fold(cfg: ExperimentConfig, out_dir: Path) -> FoldResult:
    data = experiment_data(cfg)
    result = train(cfg, data, out_dir)
    reports = {}
    for kind in CHECKPOINTS:
        model, _ = load_checkpoint(getattr(result, f"{kind}_path"), cfg)
        reports[kind] = evaluate_model(model, data.test, cfg)
        reports[kind].save(out_dir / f"eval_{kind}")
    return FoldResult(cfg.fold, reports, result.best_epoch)


def cross_validate(
    cfg: ExperimentConfig,
    folds: Sequence[int] | None = None,
    out_dir: str | Path | None = None,
    fold_fn: Callable[[ExperimentConfig, Path], FoldResult] = run_fold,
) -> CrossValReport:
    """Run every fold of the benchmark's scheme (or just ``folds``) and aggregate.

    ModelNet40-FS and ShapeNet70-FS use five folds that rotate the held-out
    validation subset. ScanObjectNN-FS uses three folds that rotate the test
    class group.
    """
    n = splits.n_folds(cfg.benchmark) if cfg.benchmark in splits.BENCHMARKS else 1
    folds = list(range(n)) if folds is None else list(folds)
    bad = [f for f in folds if not 0 <= f < n]
    if bad:
        raise ValueError(f"{cfg.benchmark} has {n} fold(s); got {bad}")
    root = Path(out_dir if out_dir is not None else cfg.out_dir)
    results = []
    for fold in folds:
        fold_cfg = cfg.replace(fold=fold)
        log.info("fold %d of %s", fold, cfg.benchmark)
        results.append(fold_fn(fold_cfg, root / f"fold{fold}"))
    report = CrossValReport(cfg.benchmark, results, select_checkpoint(results),
                            {"config_fingerprint": cfg.fingerprint(), "folds": folds})
    root.mkdir(parents=True, exist_ok=True)
    (root / "crossval.json").write_text(json.dumps(report.to_json(), indent=2))
    return report
