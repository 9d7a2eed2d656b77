"""Cross-instance fusion between prototypes and queries.

Each side is refined from the other side's features: an upper branch mixes an
anchor with its top-K1 most similar cross-set features using per-channel
softmax weights, and a lower branch takes an attention-weighted mixture of the
whole cross set. All refinements read the pre-update features.
"""

from __future__ import annotations

import torch
from torch import nn

from .backbone import smallest_k
from .spf import cosine


def top_k_similar(anchor: torch.Tensor, pool: torch.Tensor, k1: int) -> torch.Tensor:
    """Indices of the ``k1`` pool rows most cosine-similar to each anchor, most similar first.

    ``anchor`` is ``(d,)`` or ``(A, d)``; ``pool`` is ``(m, d)``. Ties go to the
    lower index.
    """
    m = pool.shape[0]
    if k1 > m:
        raise ValueError(f"K1={k1} exceeds the pool size {m}")
    single = anchor.dim() == 1
    a = anchor.unsqueeze(0) if single else anchor
    with torch.no_grad():
        sim = cosine(a.unsqueeze(1), pool.unsqueeze(0))  # (A, m)
        idx = smallest_k(-sim, k1)
    return idx[0] if single else idx


class ChannelFuseBranch(nn.Module):
    """Per-channel softmax weighting of ``[anchor, neighbour_1, ..., neighbour_K1]``.

    Two 1x1 maps over the stack axis (K1+1 -> h -> K1+1, ReLU between)
    produce the weight logits.
    """

    def __init__(self, k1: int = 3, h: int = 32):
        super().__init__()
        self.k1 = k1
        self.f1 = nn.Linear(k1 + 1, h)
        self.f2 = nn.Linear(h, k1 + 1)

    def weights(self, stack: torch.Tensor) -> torch.Tensor:
        return self.f2(torch.relu(self.f1(stack)))

    def forward(self, anchor: torch.Tensor, neighbors: torch.Tensor) -> torch.Tensor:
        """``anchor`` (..., d) and ``neighbors`` (..., K1, d) -> fused (..., d)."""
        stack = torch.cat([anchor.unsqueeze(-2), neighbors], dim=-2).transpose(-1, -2)  # (..., d, K1+1)
        w = torch.softmax(self.weights(stack), dim=-1)
        return (w * stack).sum(-1)


def channel_fuse_branch(anchor: torch.Tensor, neighbors: torch.Tensor, branch: ChannelFuseBranch) -> torch.Tensor:
    return branch(anchor, neighbors)


def relation_map(P: torch.Tensor, Q: torch.Tensor) -> torch.Tensor:
    """Inner products ``P Q^T``, summed in a fixed order so that ``relation_map(Q, P)`` is its exact transpose."""
    return (P.unsqueeze(-2) * Q.unsqueeze(-3)).sum(-1)


def instance_fuse_branch(P: torch.Tensor, Q: torch.Tensor) -> torch.Tensor:
    """Each row of ``P`` replaced by a softmax(P Q^T)-weighted mixture of the rows of ``Q``."""
    return torch.softmax(relation_map(P, Q), dim=-1) @ Q


class CrossInstanceFusion(nn.Module):
    """Refine prototypes from queries and queries from prototypes, in one simultaneous step.

    The query side pools over prototypes for both branches, with its K1
    capped at the number of prototypes. The two sides have separate
    weighting parameters.
    """

    def __init__(self, n_way: int, k1: int = 3, h: int = 32):
        super().__init__()
        self.proto_branch = ChannelFuseBranch(k1, h)
        self.query_branch = ChannelFuseBranch(min(k1, n_way), h)

    def forward(self, prototypes: torch.Tensor, queries: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        P, Q = prototypes, queries
        p_idx = top_k_similar(P, Q, self.proto_branch.k1)
        q_idx = top_k_similar(Q, P, self.query_branch.k1)
        p_upper = self.proto_branch(P, Q[p_idx])
        q_upper = self.query_branch(Q, P[q_idx])
        p_lower = instance_fuse_branch(P, Q)
        q_lower = instance_fuse_branch(Q, P)
        return P + p_upper + p_lower, Q + q_upper + q_lower
