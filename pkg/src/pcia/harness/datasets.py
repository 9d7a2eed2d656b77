"""Resolve a config to train / validation / test instance pools."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..data import io, splits
from ..data.episodes import LabeledInstance, group_by_class
from ..data.synthetic import TOY_BENCHMARK, make_toy_benchmark

VALIDATION_FOLDS = 5


@dataclass
class ExperimentData:
    train: list[LabeledInstance]
    val: list[LabeledInstance]
    test: list[LabeledInstance]
    train_classes: list[str]
    test_classes: list[str]


def fold_partition(instances: Sequence[LabeledInstance], n_folds: int, seed: int = 0) -> list[list[LabeledInstance]]:
    """Stratified random partition: per class, subset sizes differ by at most one."""
    rng = np.random.default_rng(seed)
    folds: list[list[LabeledInstance]] = [[] for _ in range(n_folds)]
    offset = 0
    for members in group_by_class(instances).values():
        order = rng.permutation(len(members))
        for j, idx in enumerate(order):
            # rotate the starting fold so remainders spread across subsets
            folds[(offset + j) % n_folds].append(members[idx])
        offset += len(members)
    return folds


def partitioned(cfg) -> splits.PartitionedInstances:
    if cfg.benchmark == TOY_BENCHMARK:
        return make_toy_benchmark(
            cfg.toy_n_per_class, max(cfg.n_points, 512), cfg.toy_seed, cfg.toy_noise, cfg.toy_clutter, cfg.toy_dropout,
            cfg.toy_scale_jitter,
        )
    benchmark, instances = io.read_cache(cfg.resolved_cache_dir())
    if benchmark != cfg.benchmark:
        raise ValueError(f"cache holds {benchmark}, config asks for {cfg.benchmark}")
    return splits.build_split(instances, cfg.benchmark, cfg.fold)


def experiment_data(cfg, parts: splits.PartitionedInstances | None = None) -> ExperimentData:
    """Split the base-class instances into training and validation subsets.

    ModelNet40-FS and ShapeNet70-FS hold out subset ``fold`` of a five-way
    stratified partition; ScanObjectNN-FS and the toy benchmark, whose fold
    rotates the test classes instead, always hold out subset 0.
    """
    parts = partitioned(cfg) if parts is None else parts
    folds = fold_partition(parts.train, VALIDATION_FOLDS, seed=cfg.seed)
    rotating = cfg.benchmark in (splits.MODELNET40_FS, splits.SHAPENET70_FS)
    held = cfg.fold % VALIDATION_FOLDS if rotating else 0
    train = [x for i, f in enumerate(folds) if i != held for x in f]
    return ExperimentData(train, folds[held], parts.test, parts.split.train_classes, parts.split.test_classes)
