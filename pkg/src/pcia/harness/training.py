"""Episodic meta-training with validation, early stopping and checkpointing."""

from __future__ import annotations

import json
import logging
import math
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch
import torch.nn.functional as F

from ..config import ExperimentConfig
from ..data.episodes import episode_arrays, group_by_class, sample_episode
from ..model import FewShotNet, save_checkpoint
from .datasets import ExperimentData, experiment_data
from .evaluation import evaluate_model

log = logging.getLogger(__name__)


class NonFiniteLossError(FloatingPointError):
    def __init__(self, epoch: int, episode: int, seed_entropy, classes, dump_path: Path | None):
        self.epoch, self.episode, self.seed_entropy = epoch, episode, seed_entropy
        self.dump_path = dump_path
        super().__init__(
            f"non-finite loss at epoch {epoch}, episode {episode} "
            f"(episode seed {seed_entropy}, classes {classes}); dump: {dump_path}"
        )


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float
    lr: float
    seconds: float
    episode_losses: list[float] = field(default_factory=list)


@dataclass
class TrainResult:
    best_path: Path
    last_path: Path
    history: list[EpochLog]
    best_epoch: int
    best_val_acc: float
    stopped_early: bool


def seed_everything(seed: int, deterministic: bool = True) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)


def run_epochs(
    epochs: int,
    patience: int,
    train_epoch: Callable[[int], tuple[float, float, list[float]]],
    validate: Callable[[int], float],
    on_improve: Callable[[int, float], None] = lambda e, a: None,
    on_epoch_end: Callable[[EpochLog], None] = lambda rec: None,
    lr: Callable[[], float] = lambda: float("nan"),
) -> tuple[list[EpochLog], int, float, bool]:
    """Generic epoch loop with patience-based early stopping.

    Epochs are numbered from 1. Training stops after ``epochs`` epochs, or
    once ``patience`` consecutive epochs pass without the validation
    accuracy exceeding the best seen so far.
    """
    history: list[EpochLog] = []
    best_epoch, best_acc = 0, -math.inf
    for epoch in range(1, epochs + 1):
        start = time.perf_counter()
        rate = lr()
        loss, acc, losses = train_epoch(epoch)
        val = validate(epoch)
        rec = EpochLog(epoch, loss, acc, val, rate, time.perf_counter() - start, losses)
        history.append(rec)
        if val > best_acc:
            best_epoch, best_acc = epoch, val
            on_improve(epoch, val)
        on_epoch_end(rec)
        if epoch - best_epoch >= patience:
            return history, best_epoch, best_acc, True
    return history, best_epoch, best_acc, False


def train(cfg: ExperimentConfig, data: ExperimentData | None = None, out_dir: str | Path | None = None) -> TrainResult:
    """Meta-train a network; writes ``best.pt``, ``last.pt`` and ``train_log.json`` to ``out_dir``."""
    data = experiment_data(cfg) if data is None else data
    leak = set(data.test_classes) & {x.label for x in data.train}
    if leak:
        raise ValueError(f"training instances include test classes: {sorted(leak)}")
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.txt")

    torch_seed, train_ss, val_seed = np.random.SeedSequence(cfg.seed).spawn(3)
    seed_everything(int(torch_seed.generate_state(1)[0]), cfg.deterministic)
    model = FewShotNet(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.optim_lr)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=cfg.optim_step_epochs, gamma=cfg.optim_gamma)
    pool = group_by_class(data.train)
    test_set = set(data.test_classes)
    aug = (
        dict(jitter_sigma=cfg.augment_jitter_sigma, jitter_clip=cfg.augment_jitter_clip)
        if cfg.augment_enabled else None
    )
    val_seed_int = int(val_seed.generate_state(1)[0])
    epoch_seeds = train_ss.spawn(cfg.train_epochs)

    def train_epoch(epoch: int):
        model.train()
        losses, correct, total = [], 0, 0
        for i, ss in enumerate(epoch_seeds[epoch - 1].spawn(cfg.train_episodes)):
            rng = np.random.default_rng(ss)
            episode = sample_episode(pool, cfg.episode, rng)
            if test_set.intersection(episode.classes):
                raise AssertionError(f"test class in training episode: {episode.classes}")
            sup, qry = episode_arrays(episode, cfg.n_points, rng, aug)
            labels = torch.from_numpy(episode.query_labels)
            logits = model(torch.from_numpy(sup), torch.from_numpy(qry), cfg.k_shot)
            loss = F.cross_entropy(logits, labels)
            if not torch.isfinite(loss):
                dump = out / f"nonfinite_epoch{epoch}_episode{i}.npz"
                np.savez(dump, support=sup, query=qry, labels=episode.query_labels,
                         entropy=str(ss.entropy), spawn_key=np.array(ss.spawn_key))
                raise NonFiniteLossError(epoch, i, (ss.entropy, ss.spawn_key), episode.classes, dump)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss.item())
            correct += int((logits.argmax(-1) == labels).sum())
            total += len(labels)
        sched.step()
        return float(np.mean(losses)), correct / total, losses

    def validate(epoch: int) -> float:
        if not data.val:
            return 0.0
        return evaluate_model(model, data.val, cfg, cfg.val_episodes, val_seed_int).mean

    def on_improve(epoch: int, acc: float):
        save_checkpoint(model, cfg, out / "best.pt", epoch=epoch, val_acc=acc)

    def on_epoch_end(rec: EpochLog):
        log.info("epoch %d  loss %.4f  train %.2f%%  val %.2f%%  (%.1fs)",
                 rec.epoch, rec.train_loss, 100 * rec.train_acc, rec.val_acc, rec.seconds)
        save_checkpoint(model, cfg, out / "last.pt", epoch=rec.epoch, val_acc=rec.val_acc)

    history, best_epoch, best_acc, early = run_epochs(
        cfg.train_epochs, cfg.train_patience, train_epoch, validate, on_improve, on_epoch_end,
        lr=lambda: opt.param_groups[0]["lr"],
    )
    (out / "train_log.json").write_text(json.dumps({
        "config_fingerprint": cfg.fingerprint(),
        "best_epoch": best_epoch,
        "best_val_acc": best_acc,
        "stopped_early": early,
        "epochs": [rec.__dict__ for rec in history],
    }, indent=1))
    return TrainResult(out / "best.pt", out / "last.pt", history, best_epoch, best_acc, early)
