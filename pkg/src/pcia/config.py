"""Experiment configuration and its flat ``key = value`` file format.

One setting per line, ``#`` starts a comment. Keys are the field names below
with the first underscore after a group prefix written as a dot, e.g.
``spf_k_s`` is written ``spf.k_s`` and ``train_episodes`` is ``train.episodes``.
Tuples are comma-separated. The ``PCIA_CACHE`` environment variable, when
set, overrides ``cache_dir``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .data.episodes import EpisodeSpec

_GROUPS = ("backbone", "spf", "sci", "cif", "head", "optim", "train", "val", "test", "augment", "toy")


@dataclass
class ExperimentConfig:
    benchmark: str = "ModelNet40-FS"
    fold: int = 0
    cache_dir: str = "cache"
    n_way: int = 5
    k_shot: int = 1
    q_query: int = 15
    n_points: int = 512

    backbone_variant: str = "dgcnn"
    backbone_k: int = 20
    backbone_widths: tuple = (64, 64, 128, 256)
    backbone_embed_dim: int = 1024

    spf_enabled: bool = True
    spf_k_s: int = 64
    spf_k: int = 16
    spf_neighborhood_space: str = "feature"

    sci_enabled: bool = True
    sci_h_r: int = 32

    cif_enabled: bool = True
    cif_k1: int = 3
    cif_h: int = 32
    cif_transductive_test: bool = True

    head_metric: str = "sqeuclid"
    head_tau_init: float = 10.0

    optim_lr: float = 8e-4
    optim_gamma: float = 0.5
    optim_step_epochs: int = 20

    train_epochs: int = 80
    train_episodes: int = 400
    train_patience: int = 30
    val_episodes: int = 600
    test_episodes: int = 700

    augment_enabled: bool = True
    augment_jitter_sigma: float = 0.01
    augment_jitter_clip: float = 0.05

    # toy benchmark generator, used when benchmark is the toy benchmark
    toy_n_per_class: int = 100
    toy_noise: float = 0.02
    toy_clutter: float = 0.0
    toy_dropout: float = 0.0
    toy_scale_jitter: float = 0.2
    toy_seed: int = 0

    seed: int = 0
    eval_seed: int = 2022
    deterministic: bool = True
    out_dir: str = "runs"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        counts = dict(
            fold=self.fold + 1, n_points=self.n_points, backbone_k=self.backbone_k,
            spf_k_s=self.spf_k_s, spf_k=self.spf_k, sci_h_r=self.sci_h_r, cif_k1=self.cif_k1,
            cif_h=self.cif_h, train_epochs=self.train_epochs, train_episodes=self.train_episodes,
            train_patience=self.train_patience, val_episodes=self.val_episodes,
            test_episodes=self.test_episodes, optim_step_epochs=self.optim_step_epochs,
        )
        bad = [k for k, v in counts.items() if v < 1]
        if bad:
            raise ValueError(f"config counts must be positive: {', '.join(bad)}")
        self.backbone_widths = tuple(int(w) for w in self.backbone_widths)
        EpisodeSpec(self.n_way, self.k_shot, self.q_query)

    @property
    def episode(self) -> EpisodeSpec:
        return EpisodeSpec(self.n_way, self.k_shot, self.q_query)

    def resolved_cache_dir(self) -> Path:
        return Path(os.environ.get("PCIA_CACHE", self.cache_dir))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- serialisation --------------------------------------------------------

    def to_dict(self) -> dict[str, object]:
        return {to_key(f.name): getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "extra"}

    def dumps(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        hints = typing.get_type_hints(cls)
        names = {to_key(f.name): f.name for f in dataclasses.fields(cls)}
        values, extra = {}, {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in names:
                extra[key] = value
                continue
            values[names[key]] = _parse(value, hints[names[key]], key)
        cfg = cls(**values)
        cfg.extra = extra
        return cfg

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())

    def fingerprint(self) -> str:
        """Hash of every setting except output locations."""
        text = "\n".join(
            f"{k}={v}" for k, v in self.to_dict().items() if k not in ("cache_dir", "out_dir")
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def to_key(name: str) -> str:
    for group in _GROUPS:
        if name.startswith(group + "_"):
            return group + "." + name[len(group) + 1:]
    return name


def _parse(value: str, kind, key: str):
    try:
        if kind is bool:
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if kind is int:
            return int(value)
        if kind is float:
            return float(value)
        if kind is tuple:
            return tuple(int(v) for v in value.split(",") if v.strip())
        return value
    except ValueError as exc:
        raise ValueError(f"bad value for {key}: {value!r}") from exc
