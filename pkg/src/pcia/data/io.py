"""Raw dataset ingestion and the binary point cache.

Supported raw layouts
---------------------
ModelNet40
    ``<root>/<class>/{train,test}/*.off`` meshes, or the HDF5 release
    (``*.h5`` with ``data``/``label`` plus ``shape_names.txt``).
ShapeNetCore
    ``<root>/<synset>/<model>/**/*.obj`` meshes. A ``<root>/<synset>.csv``
    metadata file with ``fullId`` and ``wnsynset`` columns, when present,
    assigns models to fine-grained sub-synsets.
ScanObjectNN
    The ``*objectdataset_augmentedrot_scale75.h5`` files of the PB_T50_RS
    variant, or per-object ``<root>/<class>/*.bin`` files.

Any class directory may also hold pre-sampled points as ``.npy``, ``.txt``,
``.pts`` or ``.xyz`` files.
"""

from __future__ import annotations

import csv
import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import splits
from .episodes import LabeledInstance

log = logging.getLogger(__name__)

MESH_SURFACE_POINTS = 2048
CACHE_MAGIC = b"PCIACACHE"
CACHE_VERSION = 1
POINT_SUFFIXES = {".npy", ".txt", ".pts", ".xyz"}


class DatasetNotFoundError(FileNotFoundError):
    pass


class CacheFormatError(ValueError):
    pass


@dataclass
class FileError:
    path: str
    message: str


@dataclass
class LoadResult:
    instances: list[LabeledInstance] = field(default_factory=list)
    errors: list[FileError] = field(default_factory=list)

    def summary(self) -> str:
        n_cls = len({i.label for i in self.instances})
        msg = f"loaded {len(self.instances)} instances across {n_cls} classes"
        if self.errors:
            msg += f"; {len(self.errors)} file(s) failed"
        return msg


def normalize(points: np.ndarray) -> np.ndarray:
    """Center on the centroid and scale into the unit sphere."""
    pts = np.asarray(points, dtype=np.float64)
    pts = pts - pts.mean(axis=0)
    radius = np.sqrt((pts ** 2).sum(axis=1)).max()
    if radius > 0:
        pts = pts / radius
    return pts.astype(np.float32)


# -- meshes -----------------------------------------------------------------


def read_off(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        tokens = fh.read().split()
    if not tokens or not tokens[0].startswith("OFF"):
        raise ValueError("missing OFF header")
    # ModelNet has files where the header is glued to the counts ("OFF490 518 0").
    head = tokens[0][3:]
    rest = tokens[1:]
    if head:
        rest = [head] + rest
    nv, nf = int(rest[0]), int(rest[1])
    pos = 3
    verts = np.array(rest[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        k = int(rest[pos])
        idx = [int(t) for t in rest[pos + 1:pos + 1 + k]]
        pos += 1 + k
        faces.extend([idx[0], idx[j], idx[j + 1]] for j in range(1, k - 1))
    return verts, np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_obj(path: Path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    with open(path, errors="replace") as fh:
        for line in fh:
            if line.startswith("v "):
                verts.append([float(t) for t in line.split()[1:4]])
            elif line.startswith("f "):
                idx = [int(t.split("/")[0]) for t in line.split()[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                faces.extend([idx[0], idx[j], idx[j + 1]] for j in range(1, len(idx) - 1))
    return np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def sample_surface(verts: np.ndarray, faces: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform area-weighted sampling of ``count`` points on a triangle mesh."""
    if len(faces) == 0:
        raise ValueError("mesh has no faces")
    a, b, c = (verts[faces[:, i]] for i in range(3))
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    total = area.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError("mesh has zero surface area")
    tri = rng.choice(len(faces), size=count, p=area / total)
    u, v = rng.random(count), rng.random(count)
    flip = u + v > 1
    u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
    return a[tri] + u[:, None] * (b[tri] - a[tri]) + v[:, None] * (c[tri] - a[tri])


# -- point files --------------------------------------------------------------


def read_points(path: Path) -> np.ndarray:
    suffix = path.suffix.lower()
    if suffix == ".npy":
        arr = np.load(path)
    elif suffix == ".bin":
        raw = np.fromfile(path, dtype=np.float32)
        n = int(raw[0])
        arr = raw[1:].reshape(n, -1)
    else:
        arr = np.loadtxt(path, delimiter="," if _has_commas(path) else None, ndmin=2)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 3 or len(arr) == 0:
        raise ValueError(f"expected an (n, >=3) point array, got shape {arr.shape}")
    pts = arr[:, :3]
    if not np.isfinite(pts).all():
        raise ValueError("non-finite coordinates")
    return pts


def _has_commas(path: Path) -> bool:
    with open(path) as fh:
        return "," in fh.readline()


def _load_file(path: Path, label: str, source_id: str, seed: int) -> LabeledInstance:
    suffix = path.suffix.lower()
    if suffix in (".off", ".obj"):
        verts, faces = read_off(path) if suffix == ".off" else read_obj(path)
        rng = np.random.default_rng([seed, _stable_hash(source_id)])
        pts = sample_surface(verts, faces, MESH_SURFACE_POINTS, rng)
    else:
        pts = read_points(path)
    return LabeledInstance(normalize(pts), label, source_id)


def _stable_hash(text: str) -> int:
    h = 2166136261
    for ch in text.encode():
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h


# -- dataset walkers ----------------------------------------------------------


def _shapenet_submap(root: Path) -> dict[str, list[str]]:
    """model id -> list of synsets from ``<synset>.csv`` metadata files."""
    out: dict[str, list[str]] = {}
    for meta in root.glob("*.csv"):
        with open(meta, newline="") as fh:
            for row in csv.DictReader(fh):
                full = row.get("fullId", "")
                model = full.split(".")[-1]
                syn = [s.strip().lstrip("n") for s in row.get("wnsynset", "").split(",") if s.strip()]
                out[model] = syn
    return out


def _walk_files(root: Path, benchmark: str) -> list[tuple[Path, str, str]]:
    """Find ``(path, label, source_id)`` triples for per-file layouts."""
    suffixes = POINT_SUFFIXES | {".off", ".obj", ".bin"}
    submap = _shapenet_submap(root) if benchmark == splits.SHAPENET70_FS else {}
    jobs = []
    for path in sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in suffixes):
        rel = path.relative_to(root)
        label = None
        if benchmark == splits.SHAPENET70_FS and len(rel.parts) >= 2:
            model = rel.parts[1] if len(rel.parts) > 2 else path.stem
            for syn in submap.get(model, []):
                if syn in splits.published_counts(benchmark):
                    label = syn
                    break
        if label is None:
            for part in rel.parts[:-1]:
                label = splits.canonical_class(benchmark, part)
                if label is not None:
                    break
        if label is None:
            log.debug("skipping %s: no benchmark class in path", rel)
            continue
        source = rel.as_posix()
        if benchmark == splits.SHAPENET70_FS and len(rel.parts) > 2:
            source = "/".join(rel.parts[:2])
        jobs.append((path, label, source))
    if benchmark == splits.SHAPENET70_FS:
        # One mesh per model directory.
        seen, unique = set(), []
        for job in jobs:
            if job[2] not in seen:
                seen.add(job[2])
                unique.append(job)
        jobs = unique
    return jobs


def _load_h5(root: Path, benchmark: str, result: LoadResult) -> bool:
    files = sorted(root.rglob("*.h5"))
    if benchmark == splits.SCANOBJECTNN_FS:
        variant = [f for f in files if "augmentedrot_scale75" in f.name and "objectdataset" in f.name]
        files = variant or files
    if not files:
        return False
    import h5py

    names = None
    if benchmark == splits.MODELNET40_FS:
        name_file = next(iter(root.rglob("shape_names.txt")), None)
        if name_file is None:
            result.errors.append(FileError(str(root), "HDF5 release without shape_names.txt"))
            return True
        names = name_file.read_text().split()
    else:
        names = list(splits.SCANOBJECTNN_LABELS)
    for f in files:
        try:
            with h5py.File(f, "r") as h5:
                data = np.asarray(h5["data"])
                labels = np.asarray(h5["label"]).reshape(-1)
        except Exception as exc:  # noqa: BLE001 - any unreadable file is reported
            result.errors.append(FileError(str(f), str(exc)))
            log.warning("failed to read %s: %s", f, exc)
            continue
        rel = f.relative_to(root).as_posix()
        for i, (pts, lab) in enumerate(zip(data, labels)):
            label = splits.canonical_class(benchmark, names[int(lab)])
            if label is None:
                continue
            result.instances.append(LabeledInstance(normalize(pts[:, :3]), label, f"{rel}:{i}"))
    return True


def load_dataset(root: str | Path, benchmark: str, workers: int = 1, seed: int = 0) -> LoadResult:
    """Read every instance of ``benchmark`` found under ``root``.

    Unreadable files are recorded in ``LoadResult.errors`` and skipped.
    """
    splits.check_benchmark(benchmark)
    root = Path(root)
    if not root.is_dir():
        raise DatasetNotFoundError(f"dataset not found: {root}")
    result = LoadResult()
    if benchmark == splits.SHAPENET70_FS or not _load_h5(root, benchmark, result):
        jobs = _walk_files(root, benchmark)

        def run(job):
            path, label, source = job
            try:
                return _load_file(path, label, source, seed), None
            except Exception as exc:  # noqa: BLE001
                return None, FileError(str(path), f"{type(exc).__name__}: {exc}")

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                outcomes = list(pool.map(run, jobs))
        else:
            outcomes = [run(j) for j in jobs]
        for inst, err in outcomes:
            if err is not None:
                log.warning("failed to load %s: %s", err.path, err.message)
                result.errors.append(err)
            else:
                result.instances.append(inst)
    if not result.instances and not result.errors:
        raise DatasetNotFoundError(f"dataset not found: no {benchmark} data under {root}")
    log.info(result.summary())
    return result


# -- cache --------------------------------------------------------------------

_HEADER = struct.Struct("<9sI")


def write_cache(instances: Iterable[LabeledInstance], out_dir: str | Path, benchmark: str) -> Path:
    """Store instances as one flat float32 array plus a JSON index."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries, offset = [], 0
    with open(out / "points.bin", "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION))
        for inst in instances:
            arr = np.ascontiguousarray(inst.points, dtype="<f4")
            fh.write(arr.tobytes())
            entries.append({"source_id": inst.source_id, "label": inst.label, "offset": offset, "n": len(arr)})
            offset += arr.size
    index = {"magic": CACHE_MAGIC.decode(), "version": CACHE_VERSION, "benchmark": benchmark, "entries": entries}
    (out / "index.json").write_text(json.dumps(index))
    return out


def read_cache(cache_dir: str | Path) -> tuple[str, list[LabeledInstance]]:
    """Load ``(benchmark, instances)`` from a cache written by :func:`write_cache`."""
    cache = Path(cache_dir)
    if not (cache / "index.json").exists():
        raise DatasetNotFoundError(f"no prepared cache in {cache}")
    index = json.loads((cache / "index.json").read_text())
    if index.get("magic") != CACHE_MAGIC.decode() or index.get("version") != CACHE_VERSION:
        raise CacheFormatError(f"cache index version {index.get('version')} != {CACHE_VERSION}")
    with open(cache / "points.bin", "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise CacheFormatError("truncated cache header")
        magic, version = _HEADER.unpack(head)
        if magic != CACHE_MAGIC or version != CACHE_VERSION:
            raise CacheFormatError(f"cache data version {version} != {CACHE_VERSION}")
        flat = np.fromfile(fh, dtype="<f4")
    instances = []
    for e in index["entries"]:
        pts = flat[e["offset"]:e["offset"] + 3 * e["n"]].reshape(e["n"], 3)
        instances.append(LabeledInstance(pts.astype(np.float32), e["label"], e["source_id"]))
    return index["benchmark"], instances
