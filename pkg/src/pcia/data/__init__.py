"""Dataset ingestion, benchmark splits and episodic sampling."""

from .episodes import (
    Episode,
    EpisodeConfigError,
    EpisodeSpec,
    LabeledInstance,
    augment,
    episode_arrays,
    group_by_class,
    sample_episode,
    sample_points,
)
from .io import (
    CacheFormatError,
    DatasetNotFoundError,
    LoadResult,
    load_dataset,
    normalize,
    read_cache,
    write_cache,
)
from .splits import (
    BENCHMARKS,
    MODELNET40_FS,
    SCANOBJECTNN_FS,
    SHAPENET70_FS,
    BenchmarkSplit,
    PartitionedInstances,
    SplitError,
    build_split,
    class_lists,
)
from .synthetic import TOY_BENCHMARK, make_toy_benchmark
