"""Salient-part fusion: refine a max-pooled shape descriptor with its most salient local parts."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .backbone import ChannelNorm, gather_rows, pairwise_sqdist, smallest_k


def coarse_global(fmap: torch.Tensor) -> torch.Tensor:
    """Channel-wise max over points: ``(..., n, d) -> (..., d)``."""
    return fmap.max(dim=-2).values


def cosine(a: torch.Tensor, b: torch.Tensor, eps: float = 0.0) -> torch.Tensor:
    """Cosine similarity along the last axis, defined as 0 when either vector is zero."""
    dot = (a * b).sum(-1)
    norm = a.norm(dim=-1) * b.norm(dim=-1)
    safe = norm > eps
    return torch.where(safe, dot / torch.where(safe, norm, torch.ones_like(norm)), torch.zeros_like(dot))


def salient_scores(fmap: torch.Tensor, coarse: torch.Tensor) -> torch.Tensor:
    """Cosine between every point feature and the coarse global feature, shape ``(..., n)``."""
    return cosine(fmap, coarse.unsqueeze(-2).expand_as(fmap))


def select_salient(scores: torch.Tensor, k_s: int) -> torch.Tensor:
    """Indices of the ``k_s`` highest scores, highest first, ties to the lower index."""
    with torch.no_grad():
        return smallest_k(-scores, k_s)


def part_neighbors(space: torch.Tensor, centers: torch.Tensor, k: int) -> torch.Tensor:
    """k nearest points (self excluded) to each selected center, in the given space.

    ``space`` is ``(B, n, c)`` and ``centers`` holds point indices ``(B, k_s)``.
    """
    n = space.shape[-2]
    if k >= n:
        raise ValueError(f"part neighbourhoods need k < n, got k={k}, n={n}")
    with torch.no_grad():
        dist = pairwise_sqdist(gather_rows(space, centers), space)
        dist = dist.scatter(-1, centers.unsqueeze(-1), float("inf"))
        return smallest_k(dist, k)


@dataclass
class SalientPartSet:
    scores: torch.Tensor  # (B, n)
    selected: torch.Tensor  # (B, k_s)
    parts: torch.Tensor  # (B, k_s, k) point indices of each part


def salient_parts(fmap: torch.Tensor, k_s: int, k: int, coords: torch.Tensor | None = None) -> SalientPartSet:
    """Score points, pick the ``k_s`` most salient and gather their neighbourhoods.

    Neighbourhoods are searched in feature space unless ``coords`` is given.
    A single ``(n, d)`` map is treated as a batch of one.
    """
    if fmap.dim() == 2:
        fmap = fmap.unsqueeze(0)
        coords = None if coords is None else coords.unsqueeze(0)
    if k_s > fmap.shape[-2]:
        raise ValueError(f"k_s={k_s} exceeds the point count {fmap.shape[-2]}")
    scores = salient_scores(fmap, coarse_global(fmap))
    selected = select_salient(scores, k_s)
    parts = part_neighbors(fmap if coords is None else coords, selected, k)
    return SalientPartSet(scores, selected, parts)


class SalientPartFusion(nn.Module):
    """Encode ``[coarse, part row]`` with a shared affine map + norm + ReLU, then max-pool.

    The pooling runs first within each part and then across the ``k_s`` parts.
    """

    def __init__(self, dim: int, k_s: int = 64, k: int = 16, neighborhood_space: str = "feature"):
        super().__init__()
        if neighborhood_space not in ("feature", "coordinate"):
            raise ValueError(f"neighborhood_space must be 'feature' or 'coordinate', got {neighborhood_space!r}")
        self.dim, self.k_s, self.k = dim, k_s, k
        self.neighborhood_space = neighborhood_space
        self.encoder = nn.Linear(2 * dim, dim, bias=False)
        self.norm = ChannelNorm(dim)

    def forward(self, fmap: torch.Tensor, coords: torch.Tensor | None = None) -> torch.Tensor:
        squeeze = fmap.dim() == 2
        if squeeze:
            fmap = fmap.unsqueeze(0)
            coords = None if coords is None else coords.unsqueeze(0)
        n = fmap.shape[-2]
        if self.k_s > n or self.k >= n:
            raise ValueError(f"SPF needs k_s <= n and k < n (k_s={self.k_s}, k={self.k}, n={n})")
        space = coords if self.neighborhood_space == "coordinate" else None
        if self.neighborhood_space == "coordinate" and coords is None:
            raise ValueError("coordinate neighbourhoods need the point coordinates")
        parts = salient_parts(fmap, self.k_s, self.k, space)
        coarse = coarse_global(fmap)
        w_coarse, w_part = self.encoder.weight.split(self.dim, dim=1)
        # g([c, r]) = W_c c + W_r r, with W_r applied to all rows before gathering
        rows = gather_rows(fmap @ w_part.t(), parts.parts)  # (B, k_s, k, d)
        encoded = torch.relu(self.norm(rows + (coarse @ w_coarse.t())[:, None, None, :]))
        out = encoded.max(dim=-2).values.max(dim=-2).values
        return out.squeeze(0) if squeeze else out


def spf_forward(fmap: torch.Tensor, module: SalientPartFusion, coords: torch.Tensor | None = None) -> torch.Tensor:
    return module(fmap, coords)
