"""Point-feature backbones: dynamic-graph EdgeConv (DGCNN) and pointwise MLP (PointNet).

All tensors are channel-last: a batch of clouds is ``(B, n, c)`` and the
backbone returns a per-point feature map of shape ``(B, n, d)``.
"""

from __future__ import annotations

import torch
from torch import nn

DGCNN_WIDTHS = (64, 64, 128, 256)
POINTNET_WIDTHS = (64, 64, 64, 128, 1024)
EMBED_DIM = 1024


def pairwise_sqdist(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Squared Euclidean distances between the rows of ``a`` and ``b``."""
    aa = (a * a).sum(-1, keepdim=True)
    bb = (b * b).sum(-1, keepdim=True)
    return (aa - 2 * a @ b.transpose(-1, -2) + bb.transpose(-1, -2)).clamp_min_(0)


def smallest_k(dist: torch.Tensor, k: int) -> torch.Tensor:
    """Column indices of the ``k`` smallest entries per row, ties going to the lower index.

    Uses ``topk`` and only falls back to a stable sort on rows where the k-th
    value is tied with an unselected entry.
    """
    vals, idx = dist.topk(k, dim=-1, largest=False, sorted=True)
    kth = vals[..., -1:]
    ambiguous = (dist <= kth).sum(-1) > k
    # order the selection by (distance, index)
    idx, _ = idx.sort(dim=-1)
    vals = dist.gather(-1, idx)
    order = vals.argsort(dim=-1, stable=True)
    idx = idx.gather(-1, order)
    if ambiguous.any():
        rows = dist[ambiguous]
        idx[ambiguous] = rows.argsort(dim=-1, stable=True)[..., :k]
    return idx


def knn_graph(features: torch.Tensor, k: int) -> torch.Tensor:
    """k nearest neighbours of every row in feature space, excluding the row itself.

    ``features`` is ``(n, c)`` or ``(B, n, c)``; the result has shape
    ``(..., n, k)`` with neighbours ordered nearest first.
    """
    n = features.shape[-2]
    if k >= n:
        raise ValueError(f"k-NN needs k < n, got k={k}, n={n}")
    with torch.no_grad():
        dist = pairwise_sqdist(features, features)
        eye = torch.eye(n, dtype=torch.bool, device=features.device)
        dist = dist.masked_fill(eye, float("inf"))
        return smallest_k(dist, k)


def gather_rows(x: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    """``x[b, idx[b, i, j]]`` for ``x`` of shape (B, n, c) and ``idx`` of shape (B, m, k)."""
    batch = torch.arange(x.shape[0], device=x.device).view(-1, *([1] * (idx.dim() - 1)))
    return x[batch, idx]


class ChannelNorm(nn.BatchNorm1d):
    """Batch normalisation over the last axis of a tensor of any rank."""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        shape = x.shape
        return super().forward(x.reshape(-1, shape[-1])).reshape(shape)


class SharedMLP(nn.Sequential):
    """Per-point affine map, batch norm and ReLU."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__(nn.Linear(in_dim, out_dim, bias=False), ChannelNorm(out_dim), nn.ReLU())


class EdgeConv(nn.Module):
    """EdgeConv layer: affine map of ``[f_i, f_j - f_i]`` + norm + ReLU, max over neighbours."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.linear = nn.Linear(2 * in_dim, out_dim, bias=False)
        self.norm = ChannelNorm(out_dim)

    def forward(self, x: torch.Tensor, neighbors: torch.Tensor) -> torch.Tensor:
        squeeze = x.dim() == 2
        if squeeze:
            x, neighbors = x.unsqueeze(0), neighbors.unsqueeze(0)
        w_center, w_diff = self.linear.weight.split(self.in_dim, dim=1)
        # W [f_i, f_j - f_i] = (W_c - W_d) f_i + W_d f_j; project before gathering
        center = x @ (w_center - w_diff).t()
        nbr = gather_rows(x @ w_diff.t(), neighbors)
        edge = torch.relu(self.norm(center.unsqueeze(-2) + nbr))
        out = edge.max(dim=-2).values
        return out.squeeze(0) if squeeze else out


def edge_conv(features: torch.Tensor, neighbors: torch.Tensor, layer: EdgeConv) -> torch.Tensor:
    return layer(features, neighbors)


class DGCNN(nn.Module):
    """Four dynamic-graph EdgeConv stages, concatenated and lifted to ``embed_dim`` per point.

    The first stage builds its graph on coordinates, later stages on the
    previous stage's features.
    """

    def __init__(self, widths=DGCNN_WIDTHS, embed_dim: int = EMBED_DIM, k: int = 20, in_dim: int = 3):
        super().__init__()
        self.k = k
        dims = (in_dim, *widths)
        self.convs = nn.ModuleList(EdgeConv(a, b) for a, b in zip(dims[:-1], dims[1:]))
        self.embed = SharedMLP(sum(widths), embed_dim)
        self.out_dim = embed_dim

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        x, stages = points, []
        for conv in self.convs:
            x = conv(x, knn_graph(x, self.k))
            stages.append(x)
        return self.embed(torch.cat(stages, dim=-1))


class PointNet(nn.Module):
    """Shared per-point MLP without the input/feature transform networks."""

    def __init__(self, widths=POINTNET_WIDTHS, in_dim: int = 3):
        super().__init__()
        dims = (in_dim, *widths)
        self.layers = nn.Sequential(*(SharedMLP(a, b) for a, b in zip(dims[:-1], dims[1:])))
        self.out_dim = widths[-1]

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        return self.layers(points)


def build_backbone(variant: str = "dgcnn", **kwargs) -> nn.Module:
    if variant == "dgcnn":
        return DGCNN(**kwargs)
    if variant == "pointnet":
        return PointNet(**kwargs)
    raise ValueError(f"unknown backbone variant {variant!r}")


def backbone_forward(points: torch.Tensor, variant: str = "dgcnn", model: nn.Module | None = None) -> torch.Tensor:
    """Per-point feature map of a cloud ``(n, 3)`` or batch ``(B, n, 3)``."""
    model = build_backbone(variant) if model is None else model
    squeeze = points.dim() == 2
    out = model(points.unsqueeze(0) if squeeze else points)
    return out.squeeze(0) if squeeze else out
