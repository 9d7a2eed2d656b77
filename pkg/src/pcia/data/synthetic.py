"""Toy benchmark of five primitive surfaces for desk-scale runs.

Every primitive is stretched along the up axis by an aspect factor. Base
classes pair a primitive with a squat or a tall aspect band, novel classes
use an intermediate band no base class covers, so base and novel classes
are disjoint in both name and shape parameters.
"""

from __future__ import annotations

import numpy as np

from .episodes import LabeledInstance
from .io import normalize
from .splits import BenchmarkSplit, PartitionedInstances

TOY_BENCHMARK = "Toy-5Primitives"
PRIMITIVES = ("sphere", "cube", "cylinder", "cone", "torus")
TRAIN_BANDS = {"squat": (0.45, 0.7), "tall": (1.45, 2.0)}
TEST_BANDS = {"mid": (0.85, 1.2)}
UP = 1


def _sphere(n, rng):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _cube(n, rng):
    pts = rng.uniform(-1, 1, (n, 3))
    axis = rng.integers(3, size=n)
    pts[np.arange(n), axis] = rng.choice([-1.0, 1.0], size=n)
    return pts


def _cylinder(n, rng):
    # lateral area 4*pi against 2*pi for the two caps
    lateral = rng.random(n) < 2 / 3
    theta = rng.uniform(0, 2 * np.pi, n)
    r = np.where(lateral, 1.0, np.sqrt(rng.random(n)))
    h = np.where(lateral, rng.uniform(-1, 1, n), rng.choice([-1.0, 1.0], size=n))
    return np.stack([r * np.cos(theta), h, r * np.sin(theta)], axis=1)


def _cone(n, rng):
    # slant sqrt(5) for radius 1 and height 2; lateral area pi*sqrt(5), base pi
    lateral = rng.random(n) < np.sqrt(5) / (np.sqrt(5) + 1)
    theta = rng.uniform(0, 2 * np.pi, n)
    # area density grows linearly with radius on both the side and the base
    r = np.sqrt(rng.random(n))
    h = np.where(lateral, 1.0 - 2.0 * r, -1.0)
    return np.stack([r * np.cos(theta), h, r * np.sin(theta)], axis=1)


def _torus(n, rng, major=1.0, minor=0.35):
    out = np.empty((0, 3))
    while len(out) < n:
        u = rng.uniform(0, 2 * np.pi, 2 * n)
        v = rng.uniform(0, 2 * np.pi, 2 * n)
        # rejection on the area element (major + minor*cos v)
        keep = rng.uniform(0, major + minor, 2 * n) < major + minor * np.cos(v)
        u, v = u[keep], v[keep]
        ring = major + minor * np.cos(v)
        pts = np.stack([ring * np.cos(u), minor * np.sin(v), ring * np.sin(u)], axis=1)
        out = np.concatenate([out, pts])
    return out[:n]


_GENERATORS = {"sphere": _sphere, "cube": _cube, "cylinder": _cylinder, "cone": _cone, "torus": _torus}


def primitive_cloud(
    kind: str,
    aspect: float,
    n_points: int,
    rng: np.random.Generator,
    noise: float = 0.02,
    clutter: float = 0.0,
    dropout: float = 0.0,
    scale_jitter: float = 0.2,
) -> np.ndarray:
    """Sample one noisy primitive surface stretched by ``aspect`` along the up axis.

    ``clutter`` is the fraction of points replaced by uniform background points
    in the bounding cube; ``dropout`` removes the points on one side of a
    random plane (a crude partial scan) before resampling to ``n_points``.
    Each axis is also scaled by a factor drawn from ``1 +- scale_jitter``.
    """
    pts = _GENERATORS[kind](n_points * 2, rng)
    pts[:, UP] *= aspect
    pts *= rng.uniform(1 - scale_jitter, 1 + scale_jitter, size=3)
    if dropout > 0:
        normal = _sphere(1, rng)[0]
        proj = pts @ normal
        keep = proj <= np.quantile(proj, 1.0 - dropout)
        pts = pts[keep]
    pts = pts[rng.choice(len(pts), n_points, replace=len(pts) < n_points)]
    pts = pts + noise * rng.standard_normal(pts.shape)
    n_clutter = int(round(clutter * n_points))
    if n_clutter:
        pts[:n_clutter] = rng.uniform(-1.5, 1.5, (n_clutter, 3))
    return normalize(pts)


def make_toy_benchmark(
    n_per_class: int = 40,
    n_points: int = 256,
    seed: int = 0,
    noise: float = 0.02,
    clutter: float = 0.0,
    dropout: float = 0.0,
    scale_jitter: float = 0.2,
) -> PartitionedInstances:
    """Build the toy benchmark: 10 base classes and 5 novel classes."""
    rng = np.random.default_rng(seed)

    def make(bands):
        insts, classes = [], []
        for kind in PRIMITIVES:
            for band, (lo, hi) in bands.items():
                label = f"{kind}-{band}"
                classes.append(label)
                for i in range(n_per_class):
                    pts = primitive_cloud(kind, rng.uniform(lo, hi), n_points, rng, noise, clutter, dropout, scale_jitter)
                    insts.append(LabeledInstance(pts, label, f"toy/{label}/{i:04d}"))
        return insts, classes

    train, train_cls = make(TRAIN_BANDS)
    test, test_cls = make(TEST_BANDS)
    split = BenchmarkSplit(TOY_BENCHMARK, train_cls, test_cls, 0)
    return PartitionedInstances(split, train, test)
