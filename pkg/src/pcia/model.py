"""The full few-shot network: backbone -> SPF -> prototypes -> SCI+ -> CIF+ -> metric head."""

from __future__ import annotations

import hashlib
from pathlib import Path

import torch
from torch import nn

from .backbone import DGCNN, PointNet
from .cif_plus import CrossInstanceFusion
from .config import ExperimentConfig
from .metric_head import MetricHead, prototypes_from_support
from .sci_plus import SelfChannelInteraction
from .spf import SalientPartFusion, coarse_global

CHECKPOINT_FORMAT = "pcia-checkpoint"
CHECKPOINT_VERSION = 1


class FewShotNet(nn.Module):
    def __init__(self, cfg: ExperimentConfig):
        super().__init__()
        self.n_way = cfg.n_way
        if cfg.backbone_variant == "dgcnn":
            self.backbone = DGCNN(cfg.backbone_widths, cfg.backbone_embed_dim, cfg.backbone_k)
        elif cfg.backbone_variant == "pointnet":
            self.backbone = PointNet((*cfg.backbone_widths, cfg.backbone_embed_dim))
        else:
            raise ValueError(f"unknown backbone variant {cfg.backbone_variant!r}")
        d = self.backbone.out_dim
        self.spf = SalientPartFusion(d, cfg.spf_k_s, cfg.spf_k, cfg.spf_neighborhood_space) if cfg.spf_enabled else None
        self.sci = SelfChannelInteraction(cfg.n_way, cfg.sci_h_r) if cfg.sci_enabled else None
        self.cif = CrossInstanceFusion(cfg.n_way, cfg.cif_k1, cfg.cif_h) if cfg.cif_enabled else None
        self.cif_at_test = cfg.cif_transductive_test
        self.head = MetricHead(cfg.head_metric, cfg.head_tau_init)

    def embed(self, points: torch.Tensor) -> torch.Tensor:
        """Global descriptor per cloud: ``(B, n, 3) -> (B, d)``."""
        fmap = self.backbone(points)
        return self.spf(fmap, points) if self.spf is not None else coarse_global(fmap)

    def episode_features(self, support: torch.Tensor, query: torch.Tensor, k_shot: int):
        """Refined ``(prototypes, queries)`` for support ``(N*K, n, 3)`` ordered class-major."""
        feats = self.embed(torch.cat([support, query]))
        n_sup = support.shape[0]
        protos = prototypes_from_support(feats[:n_sup].reshape(n_sup // k_shot, k_shot, -1))
        queries = feats[n_sup:]
        if self.sci is not None:
            protos, queries = self.sci(protos, queries)
        if self.cif is not None and (self.training or self.cif_at_test):
            protos, queries = self.cif(protos, queries)
        return protos, queries

    def forward(self, support: torch.Tensor, query: torch.Tensor, k_shot: int) -> torch.Tensor:
        protos, queries = self.episode_features(support, query, k_shot)
        return self.head(queries, protos)


def param_hash(model: nn.Module) -> str:
    h = hashlib.sha256()
    for name, tensor in sorted(model.state_dict().items()):
        h.update(name.encode())
        h.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()[:16]


def save_checkpoint(model: FewShotNet, cfg: ExperimentConfig, path: str | Path, **meta) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = model.state_dict()
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "variant": cfg.backbone_variant,
        "n_way": cfg.n_way,
        "benchmark": cfg.benchmark,
        "fold": cfg.fold,
        "config_fingerprint": cfg.fingerprint(),
        "param_hash": param_hash(model),
        "shapes": {k: list(v.shape) for k, v in state.items()},
        "config": cfg.dumps(),
        **meta,
    }
    torch.save({"header": header, "state": state}, path)
    return path


class CheckpointError(ValueError):
    pass


def load_checkpoint(path: str | Path, cfg: ExperimentConfig | None = None) -> tuple[FewShotNet, dict]:
    """Rebuild the network stored at ``path``.

    With ``cfg`` given, the checkpoint must match its backbone variant, way,
    benchmark and fold; otherwise the stored configuration is used.
    """
    blob = torch.load(path, map_location="cpu", weights_only=False)
    header = blob.get("header", {})
    if header.get("format") != CHECKPOINT_FORMAT or header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: not a version {CHECKPOINT_VERSION} checkpoint")
    stored = ExperimentConfig.loads(header["config"])
    if cfg is not None:
        for key in ("backbone_variant", "n_way", "benchmark", "fold"):
            if getattr(cfg, key) != getattr(stored, key):
                raise CheckpointError(
                    f"checkpoint {key}={getattr(stored, key)!r} does not match config {getattr(cfg, key)!r}"
                )
    model = FewShotNet(cfg if cfg is not None else stored)
    expected, stored_keys = set(model.state_dict()), set(header["shapes"])
    if expected != stored_keys:
        extra = sorted({k.split(".")[0] for k in stored_keys - expected})
        missing = sorted({k.split(".")[0] for k in expected - stored_keys})
        raise CheckpointError(
            f"{path}: module set differs from the config (checkpoint-only: {extra or '-'}, config-only: {missing or '-'})"
        )
    for name, shape in header["shapes"].items():
        if name in model.state_dict() and list(model.state_dict()[name].shape) != shape:
            raise CheckpointError(f"parameter {name} has shape {shape}, model expects "
                                  f"{list(model.state_dict()[name].shape)}")
    model.load_state_dict(blob["state"])
    if param_hash(model) != header["param_hash"]:
        raise CheckpointError(f"{path}: parameter hash mismatch")
    return model, header
