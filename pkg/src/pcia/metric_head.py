"""Prototype construction, distance-based logits and the episode loss."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .spf import cosine

METRICS = ("sqeuclid", "cosine")


def prototypes_from_support(support: torch.Tensor) -> torch.Tensor:
    """Per-class mean of support features grouped as ``(N, K, d)``."""
    return support.mean(dim=1)


def score(queries: torch.Tensor, prototypes: torch.Tensor, metric: str = "sqeuclid", tau=10.0) -> torch.Tensor:
    """Logits of shape ``(N_q, N)``: negative squared distance, or ``tau`` times cosine."""
    if metric == "sqeuclid":
        diff = queries.unsqueeze(1) - prototypes.unsqueeze(0)
        return -(diff * diff).sum(-1)
    if metric == "cosine":
        return tau * cosine(queries.unsqueeze(1), prototypes.unsqueeze(0))
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def episode_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean negative log-probability of the true class over all queries."""
    return F.cross_entropy(logits, labels)


def predict(logits: torch.Tensor) -> torch.Tensor:
    # torch.argmax returns the first maximal index, so ties go to the lower class.
    return logits.argmax(dim=-1)


class MetricHead(nn.Module):
    def __init__(self, metric: str = "sqeuclid", tau_init: float = 10.0):
        super().__init__()
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
        self.metric = metric
        self.tau = nn.Parameter(torch.tensor(float(tau_init))) if metric == "cosine" else None

    def forward(self, queries: torch.Tensor, prototypes: torch.Tensor) -> torch.Tensor:
        return score(queries, prototypes, self.metric, self.tau)
