"""Point sampling, augmentation and N-way K-shot episode sampling."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass
class LabeledInstance:
    points: np.ndarray  # (n, 3) float32
    label: str
    source_id: str

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class EpisodeSpec:
    n_way: int = 5
    k_shot: int = 1
    q_query: int = 15

    def __post_init__(self):
        if self.n_way < 2 or self.k_shot < 1 or self.q_query < 1:
            raise ValueError(f"invalid episode spec {self}: need N>=2, K>=1, Q>=1")

    @property
    def n_support(self) -> int:
        return self.n_way * self.k_shot

    @property
    def n_query(self) -> int:
        return self.n_way * self.q_query


@dataclass
class Episode:
    """Support and query instances, both ordered class-major.

    ``classes[i]`` is the class mapped to episode index ``i``.
    """

    support: list[LabeledInstance]
    query: list[LabeledInstance]
    classes: list[str]
    spec: EpisodeSpec

    @property
    def class_map(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.classes)}

    @property
    def support_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.spec.n_way), self.spec.k_shot)

    @property
    def query_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.spec.n_way), self.spec.q_query)


class EpisodeConfigError(RuntimeError):
    pass


def sample_points(points: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw exactly ``count`` points, without replacement when the cloud is large enough."""
    n = len(points)
    if n < 1 or count < 1:
        raise ValueError(f"need a nonempty cloud and count >= 1 (n={n}, count={count})")
    idx = rng.choice(n, size=count, replace=n < count)
    return points[idx]


def rotation_about_axis(angle: float, axis: int = 1) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    # The two coordinates spanning the plane orthogonal to ``axis``.
    a, b = [i for i in range(3) if i != axis]
    rot = np.eye(3)
    rot[a, a], rot[a, b] = c, -s
    rot[b, a], rot[b, b] = s, c
    return rot


def augment(
    points: np.ndarray,
    rng: np.random.Generator,
    jitter_sigma: float = 0.01,
    jitter_clip: float = 0.05,
    angle: float | None = None,
    up_axis: int = 1,
) -> np.ndarray:
    """Clipped Gaussian jitter followed by a random rotation about the up axis.

    Pass ``angle`` to fix the rotation instead of drawing it uniformly from
    [0, 2*pi).
    """
    if jitter_sigma < 0:
        raise ValueError("jitter_sigma must be non-negative")
    noise = np.clip(jitter_sigma * rng.standard_normal(points.shape), -jitter_clip, jitter_clip)
    if angle is None:
        angle = rng.uniform(0.0, 2.0 * np.pi)
    rot = rotation_about_axis(angle, up_axis)
    return ((points + noise) @ rot.T).astype(points.dtype, copy=False)


def group_by_class(instances: Iterable[LabeledInstance]) -> dict[str, list[LabeledInstance]]:
    """Pool instances per class, with classes in sorted order for reproducibility."""
    pool = defaultdict(list)
    for inst in instances:
        pool[inst.label].append(inst)
    return {c: pool[c] for c in sorted(pool)}


def sample_episode(
    pool: Mapping[str, Sequence[LabeledInstance]],
    spec: EpisodeSpec,
    rng: np.random.Generator,
) -> Episode:
    """Draw one episode from a class -> instances pool.

    Classes with fewer than K+Q instances are skipped and another class is
    drawn; after ``10 * N`` draws without N usable classes an
    :class:`EpisodeConfigError` is raised.
    """
    need = spec.k_shot + spec.q_query
    candidates = list(pool)
    if len(candidates) < spec.n_way:
        raise EpisodeConfigError(
            f"{spec.n_way}-way episodes need {spec.n_way} classes, pool has {len(candidates)}"
        )
    chosen: list[str] = []
    attempts = 0
    while len(chosen) < spec.n_way:
        if attempts >= 10 * spec.n_way or not candidates:
            raise EpisodeConfigError(
                f"could not find {spec.n_way} classes with >= {need} instances "
                f"after {attempts} draws"
            )
        attempts += 1
        c = candidates.pop(int(rng.integers(len(candidates))))
        if len(pool[c]) >= need:
            chosen.append(c)

    support, query = [], []
    for c in chosen:
        members = pool[c]
        pick = rng.choice(len(members), size=need, replace=False)
        support.extend(members[i] for i in pick[: spec.k_shot])
        query.extend(members[i] for i in pick[spec.k_shot:])
    return Episode(support, query, chosen, spec)


def episode_arrays(
    episode: Episode,
    n_points: int,
    rng: np.random.Generator,
    augment_kwargs: dict | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Stack an episode into ``(N*K, n_points, 3)`` support and ``(N*Q, n_points, 3)`` query arrays.

    Augmentation is applied only when ``augment_kwargs`` is given.
    """

    def prep(inst: LabeledInstance) -> np.ndarray:
        pts = sample_points(inst.points, n_points, rng)
        if augment_kwargs is not None:
            pts = augment(pts, rng, **augment_kwargs)
        return pts

    sup = np.stack([prep(i) for i in episode.support]).astype(np.float32)
    qry = np.stack([prep(i) for i in episode.query]).astype(np.float32)
    return sup, qry
