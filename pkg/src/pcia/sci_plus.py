"""Self-channel interaction: task-aware channel self-attention over prototypes and queries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn


class MetaLearner(nn.Module):
    """1x1 map over the stacked prototypes: ``N`` inputs -> 1 output, shared by all channels.

    Initialised to the plain prototype mean. Its weights are tied to the
    episode way ``n_way``.
    """

    def __init__(self, n_way: int):
        super().__init__()
        self.n_way = n_way
        self.mix = nn.Linear(n_way, 1)
        with torch.no_grad():
            self.mix.weight.fill_(1.0 / n_way)
            self.mix.bias.zero_()

    def forward(self, prototypes: torch.Tensor) -> torch.Tensor:
        if prototypes.shape[-2] != self.n_way:
            raise ValueError(
                f"meta learner was built for {self.n_way} prototypes, got {prototypes.shape[-2]}"
            )
        return self.mix(prototypes.transpose(-1, -2)).squeeze(-1)


@dataclass
class ChannelInteractionState:
    fused: torch.Tensor  # (..., d, h_r)
    attn_map: torch.Tensor  # (..., d, d), rows sum to one
    value: torch.Tensor  # (..., d, h_r)
    weighted_value: torch.Tensor  # (..., d, h_r)


class ChannelInteractionBlock(nn.Module):
    """d x d channel self-attention on a feature fused with the task embedding, residual output."""

    def __init__(self, h_r: int = 32):
        super().__init__()
        self.h_r = h_r
        self.fuse = nn.Linear(2, h_r)
        self.query = nn.Linear(h_r, h_r)
        self.key = nn.Linear(h_r, h_r)
        self.value = nn.Linear(h_r, h_r)
        self.compress = nn.Linear(h_r, 1)
        # start as the identity map
        nn.init.zeros_(self.compress.weight)
        nn.init.zeros_(self.compress.bias)

    def forward(self, feature: torch.Tensor, task: torch.Tensor, return_state: bool = False):
        """Refine ``feature`` of shape ``(..., d)`` given a task embedding broadcastable to it."""
        task = task.expand_as(feature)
        fused = self.fuse(torch.stack([feature, task], dim=-1))  # (..., d, h_r)
        q, k, v = self.query(fused), self.key(fused), self.value(fused)
        attn = torch.softmax(q @ k.transpose(-1, -2) / math.sqrt(self.h_r), dim=-1)
        weighted = attn @ v
        out = self.compress(weighted).squeeze(-1) + feature
        if return_state:
            return out, ChannelInteractionState(fused, attn, v, weighted)
        return out


def cib_forward(feature: torch.Tensor, task: torch.Tensor, block: ChannelInteractionBlock) -> torch.Tensor:
    return block(feature, task)


class SelfChannelInteraction(nn.Module):
    """Shared task embedding from the prototypes, then one shared CIB for every prototype and query."""

    def __init__(self, n_way: int, h_r: int = 32):
        super().__init__()
        self.meta = MetaLearner(n_way)
        self.block = ChannelInteractionBlock(h_r)

    def forward(self, prototypes: torch.Tensor, queries: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        task = self.meta(prototypes)
        return self.block(prototypes, task), self.block(queries, task)
