"""Class lists for the three few-shot benchmarks and split construction.

Per-class instance counts are the published ones and are used both to
validate a full ingestion and to report expected sizes without raw data.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

MODELNET40_FS = "ModelNet40-FS"
SHAPENET70_FS = "ShapeNet70-FS"
SCANOBJECTNN_FS = "ScanObjectNN-FS"
BENCHMARKS = (MODELNET40_FS, SHAPENET70_FS, SCANOBJECTNN_FS)

# name -> published instance count
MODELNET40_TRAIN = {
    "chair": 989, "sofa": 780, "airplane": 725, "bed": 615, "monitor": 565,
    "table": 492, "toilet": 444, "mantel": 384, "tv_stand": 367, "plant": 339,
    "car": 297, "desk": 286, "dresser": 286, "glass_box": 271, "guitar": 255,
    "bench": 193, "cone": 187, "tent": 183, "laptop": 169, "curtain": 157,
    "radio": 124, "xbox": 123, "bathtub": 156, "lamp": 144, "stairs": 144,
    "door": 129, "stool": 110, "wardrobe": 107, "cup": 99, "bowl": 84,
}
MODELNET40_TEST = {
    "bookshelf": 672, "vase": 575, "bottle": 435, "piano": 331,
    "night_stand": 286, "range_hood": 215, "flower_pot": 169,
    "keyboard": 165, "sink": 148, "person": 108,
}

# WordNet synset offset -> (name, published instance count)
SHAPENET70_TRAIN = {
    "04256520": ("sofa", 1520), "03179701": ("desk", 1226),
    "04401088": ("phone", 1089), "02738535": ("armchair", 1051),
    "02924116": ("bus", 939), "02808440": ("bathtub", 856),
    "02992529": ("radiotelephone", 831), "03891251": ("park bench", 823),
    "03063968": ("coffee table", 763), "20000027": ("club chair", 748),
    "02858304": ("boat", 741), "04250224": ("sniper rifle", 717),
    "03046257": ("clock", 651), "03991062": ("pot", 602),
    "03593526": ("jar", 596), "03237340": ("dresser", 482),
    "04380533": ("table lamp", 464), "03642806": ("laptop", 460),
    "04166281": ("sedan", 429), "03624134": ("knife", 424),
    "20000037": ("rectangular table", 421), "03119396": ("coupe", 418),
    "04373704": ("swivel chair", 398), "20000010": ("desk cabinet", 356),
    "03790512": ("motorcycle", 337), "04037443": ("race car", 323),
    "20000011": ("garage cabinet", 307), "03948459": ("handgun", 307),
    "04285965": ("sport utility", 300), "03928116": ("piano", 239),
    "02818832": ("bed", 233), "04330267": ("stove", 218),
    "03100240": ("convertible", 208), "04285008": ("sports car", 197),
    "02880940": ("bowl", 186), "03141065": ("cruiser", 181),
    "02961451": ("carbine", 172), "04004475": ("printer", 166),
    "03761084": ("microwave", 152), "04225987": ("skateboard", 152),
    "04460130": ("tower", 133), "20000020": ("cantilever chair", 125),
    "02801938": ("basket", 113), "02814533": ("beach wagon", 108),
    "02946921": ("can", 108), "03938244": ("pillow", 96),
    "03594945": ("jeep", 95), "03207941": ("dishwasher", 93),
    "04099429": ("rocket", 85), "02773838": ("bag", 83),
}
SHAPENET70_TEST = {
    "03211117": ("display", 1093), "02690373": ("airline", 1054),
    "03467517": ("guitar", 797), "03325088": ("faucet", 744),
    "03595860": ("jet", 675), "03335030": ("fighter", 597),
    "02876657": ("bottle", 498), "02871439": ("bookshelf", 452),
    "04468005": ("train", 389), "02747177": ("ashcan", 343),
    "03337140": ("file cabinet", 298), "20000001": ("swept wing", 271),
    "03797390": ("mug", 214), "04554684": ("washer", 169),
    "03513137": ("helmet", 162), "04012084": ("propeller plane", 137),
    "02867715": ("bomber", 130), "03174079": ("delta wing", 121),
    "02942699": ("camera", 113), "03710193": ("mailbox", 94),
}

# The fold index selects which 5-class group is held out for testing.
SCANOBJECTNN_SPLITS = (
    {"shelf": 1325, "door": 1102, "bin": 993, "box": 539, "bag": 381},
    {"chair": 1975, "sofa": 1268, "desk": 742, "bed": 674, "pillow": 510},
    {"cabinet": 1716, "table": 1192, "display": 882, "sink": 589, "toilet": 410},
)

# Label order of the ScanObjectNN h5 distribution.
SCANOBJECTNN_LABELS = (
    "bag", "bin", "box", "cabinet", "chair", "desk", "display", "door",
    "shelf", "table", "bed", "pillow", "sink", "sofa", "toilet",
)


class SplitError(ValueError):
    """Unknown benchmark or fold."""


def _canon(name: str) -> str:
    return name.strip().lower().replace(" ", "_")


def n_folds(benchmark: str) -> int:
    """Number of cross-validation folds used by ``benchmark``."""
    check_benchmark(benchmark)
    return 3 if benchmark == SCANOBJECTNN_FS else 5


def check_benchmark(benchmark: str) -> None:
    if benchmark not in BENCHMARKS:
        raise SplitError(
            f"unknown benchmark {benchmark!r}; expected one of {', '.join(BENCHMARKS)}"
        )


def class_lists(benchmark: str, fold: int = 0) -> tuple[list[str], list[str]]:
    """Return canonical ``(train_classes, test_classes)`` for a benchmark.

    Only ScanObjectNN-FS changes its class partition with ``fold``; for the
    other two benchmarks ``fold`` picks a validation subset of the training
    instances and does not move classes, so any fold in range gives the same
    lists.
    """
    check_benchmark(benchmark)
    if not 0 <= fold < n_folds(benchmark):
        raise SplitError(f"fold {fold} out of range for {benchmark} (0..{n_folds(benchmark) - 1})")
    if benchmark == MODELNET40_FS:
        return list(MODELNET40_TRAIN), list(MODELNET40_TEST)
    if benchmark == SHAPENET70_FS:
        return list(SHAPENET70_TRAIN), list(SHAPENET70_TEST)
    test = list(SCANOBJECTNN_SPLITS[fold])
    train = [c for i, s in enumerate(SCANOBJECTNN_SPLITS) if i != fold for c in s]
    return train, test


def published_counts(benchmark: str) -> dict[str, int]:
    """Published per-class instance counts keyed by canonical class id."""
    check_benchmark(benchmark)
    if benchmark == MODELNET40_FS:
        return {**MODELNET40_TRAIN, **MODELNET40_TEST}
    if benchmark == SHAPENET70_FS:
        return {k: v[1] for k, v in {**SHAPENET70_TRAIN, **SHAPENET70_TEST}.items()}
    return {c: n for split in SCANOBJECTNN_SPLITS for c, n in split.items()}


def canonical_class(benchmark: str, raw_name: str) -> str | None:
    """Map a raw class name or synset id onto the benchmark's class id.

    Returns None for classes that are not part of the benchmark.
    """
    known = published_counts(benchmark)
    name = raw_name.strip()
    if name in known:
        return name
    low = _canon(name)
    if benchmark == SHAPENET70_FS:
        for sid, (cname, _) in {**SHAPENET70_TRAIN, **SHAPENET70_TEST}.items():
            if _canon(cname) == low:
                return sid
        return None
    return low if low in known else None


@dataclass
class BenchmarkSplit:
    name: str
    train_classes: list[str]
    test_classes: list[str]
    fold_index: int = 0

    def __post_init__(self):
        overlap = set(self.train_classes) & set(self.test_classes)
        if overlap:
            raise SplitError(f"train and test classes overlap: {sorted(overlap)}")


@dataclass
class PartitionedInstances:
    """Instances of one benchmark split, grouped by partition."""

    split: BenchmarkSplit
    train: list = field(default_factory=list)
    test: list = field(default_factory=list)
    ignored_classes: list[str] = field(default_factory=list)

    def counts(self, which: str = "train") -> dict[str, int]:
        return dict(Counter(inst.label for inst in getattr(self, which)))


def build_split(instances: Iterable, benchmark: str, fold: int = 0) -> PartitionedInstances:
    """Partition labeled instances into the benchmark's base and novel classes.

    ``instances`` are LabeledInstance-like objects with a ``label`` attribute
    holding a canonical class id (see :func:`canonical_class`). Instances whose
    class belongs to neither list are dropped and their classes listed in
    ``ignored_classes``.
    """
    train_cls, test_cls = class_lists(benchmark, fold)
    split = BenchmarkSplit(benchmark, train_cls, test_cls, fold)
    train_set, test_set = set(train_cls), set(test_cls)
    out = PartitionedInstances(split)
    ignored = set()
    for inst in instances:
        if inst.label in train_set:
            out.train.append(inst)
        elif inst.label in test_set:
            out.test.append(inst)
        else:
            ignored.add(inst.label)
    out.ignored_classes = sorted(ignored)
    return out


def describe_split(benchmark: str, fold: int = 0, counts: dict[str, int] | None = None) -> str:
    """Human-readable class listing used by ``inspect-split``."""
    counts = published_counts(benchmark) if counts is None else counts
    train, test = class_lists(benchmark, fold)
    names = {}
    if benchmark == SHAPENET70_FS:
        names = {k: v[0] for k, v in {**SHAPENET70_TRAIN, **SHAPENET70_TEST}.items()}

    def block(title: str, classes: Sequence[str]) -> list[str]:
        total = sum(counts.get(c, 0) for c in classes)
        lines = [f"{title}: {len(classes)} classes, {total} instances"]
        for c in classes:
            label = f"{c} ({names[c]})" if c in names else c
            lines.append(f"  {label:<32s} {counts.get(c, 0):>6d}")
        return lines

    head = [f"{benchmark} fold {fold}"]
    return "\n".join(head + block("train", train) + block("test", test))
