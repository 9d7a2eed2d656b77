"""Fixed-seed episodic evaluation and the persisted evaluation report."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import torch

from ..data.episodes import Episode, EpisodeSpec, LabeledInstance, episode_arrays, group_by_class, sample_episode

Z95 = 1.96


def mean_and_ci(accuracies: Sequence[float]) -> tuple[float, float]:
    """Mean accuracy and 95% half-width, both in percent, from per-episode fractions."""
    acc = np.asarray(accuracies, dtype=np.float64)
    if acc.size == 0:
        return float("nan"), float("nan")
    std = acc.std(ddof=1) if acc.size > 1 else 0.0
    return float(100.0 * acc.mean()), float(100.0 * Z95 * std / math.sqrt(acc.size))


@dataclass
class EvalReport:
    accuracies: np.ndarray  # per-episode fraction correct
    config_fingerprint: str = ""
    wall_clock: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def n_episodes(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return mean_and_ci(self.accuracies)[0]

    @property
    def ci95(self) -> float:
        return mean_and_ci(self.accuracies)[1]

    def __str__(self) -> str:
        return f"{self.mean:.2f} +- {self.ci95:.2f} ({self.n_episodes} episodes)"

    def save(self, prefix: str | Path) -> tuple[Path, Path]:
        """Write ``<prefix>.csv`` with per-episode accuracies and a ``<prefix>.json`` sidecar."""
        prefix = Path(prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = prefix.with_suffix(".csv"), prefix.with_suffix(".json")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode", "accuracy"])
            for i, a in enumerate(self.accuracies):
                writer.writerow([i, repr(float(a))])
        sidecar = {
            "n_episodes": self.n_episodes,
            "mean": self.mean,
            "ci95": self.ci95,
            "config_fingerprint": self.config_fingerprint,
            "wall_clock": self.wall_clock,
            "meta": self.meta,
        }
        json_path.write_text(json.dumps(sidecar, indent=2))
        return csv_path, json_path

    @classmethod
    def load(cls, prefix: str | Path) -> "EvalReport":
        prefix = Path(prefix)
        with open(prefix.with_suffix(".csv"), newline="") as fh:
            accs = [float(row["accuracy"]) for row in csv.DictReader(fh)]
        side = json.loads(prefix.with_suffix(".json").read_text())
        return cls(np.array(accs), side.get("config_fingerprint", ""), side.get("wall_clock", {}), side.get("meta", {}))


def episode_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent per-episode seeds, so episodes can be generated in any order."""
    return np.random.SeedSequence(seed).spawn(n)


def evaluate_predictor(
    predict: Callable[[Episode, np.random.Generator], np.ndarray],
    pool: Mapping[str, Sequence[LabeledInstance]],
    spec: EpisodeSpec,
    n_episodes: int,
    seed: int,
    fingerprint: str = "",
) -> EvalReport:
    """Run ``n_episodes`` fixed-seed episodes through ``predict``.

    ``predict(episode, rng)`` returns predicted class indices for the
    episode's queries; ``rng`` is the episode's own generator.
    """
    accs = np.empty(n_episodes)
    start = time.perf_counter()
    for i, ss in enumerate(episode_seeds(seed, n_episodes)):
        rng = np.random.default_rng(ss)
        episode = sample_episode(pool, spec, rng)
        pred = np.asarray(predict(episode, rng))
        accs[i] = float((pred == episode.query_labels).mean())
    total = time.perf_counter() - start
    return EvalReport(accs, fingerprint, {"total_s": total, "per_episode_s": total / max(n_episodes, 1)})


def model_predictor(model, n_points: int):
    """Wrap a :class:`~pcia.model.FewShotNet` as a predictor for :func:`evaluate_predictor`."""

    def predict(episode: Episode, rng: np.random.Generator) -> np.ndarray:
        sup, qry = episode_arrays(episode, n_points, rng)
        with torch.no_grad():
            logits = model(torch.from_numpy(sup), torch.from_numpy(qry), episode.spec.k_shot)
        return logits.argmax(-1).numpy()

    return predict


def evaluate_model(model, instances: Sequence[LabeledInstance], cfg, n_episodes: int | None = None,
                   seed: int | None = None) -> EvalReport:
    model.eval()
    n = cfg.test_episodes if n_episodes is None else n_episodes
    report = evaluate_predictor(
        model_predictor(model, cfg.n_points), group_by_class(instances), cfg.episode, n,
        cfg.eval_seed if seed is None else seed, cfg.fingerprint(),
    )
    report.meta.update(
        benchmark=cfg.benchmark, fold=cfg.fold, n_way=cfg.n_way, k_shot=cfg.k_shot, q_query=cfg.q_query,
        spf=cfg.spf_enabled, sci=cfg.sci_enabled, cif=cfg.cif_enabled, seed=cfg.eval_seed if seed is None else seed,
    )
    return report
