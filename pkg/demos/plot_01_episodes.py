"""
Benchmarks, splits and episodes
===============================

Class lists for the three benchmarks ship with the package, so a split can
be inspected before any data is downloaded. The toy benchmark is generated
on the fly and is what the rest of these demos use.
"""

import numpy as np

from pcia.data import EpisodeSpec, group_by_class, sample_episode, splits
from pcia.data.synthetic import make_toy_benchmark

# Published class and instance counts, fold 0 of ModelNet40-FS
print(splits.describe_split("ModelNet40-FS", 0).splitlines()[1])

# ScanObjectNN-FS rotates three groups of five test classes
for fold in range(3):
    _, test = splits.class_lists("ScanObjectNN-FS", fold)
    print(fold, test)

###############################################################################
# The toy benchmark: ten training classes (squat and tall primitives) and
# five test classes in an aspect band no training class covers.

toy = make_toy_benchmark(n_per_class=20, n_points=256, seed=0)
print(toy.split.train_classes)
print(toy.split.test_classes)

###############################################################################
# A 5-way 1-shot episode with 15 queries per class. Labels are episode
# indices 0..4 in the order of ``episode.classes``.

rng = np.random.default_rng(0)
episode = sample_episode(group_by_class(toy.test), EpisodeSpec(5, 1, 15), rng)
print(episode.classes)
print(episode.support_labels, episode.query_labels[:20])
