"""Quick built-in checks of the module invariants, runnable from an installed package.

``pcia selftest`` runs these; the full oracle and property suites live in
the repository's ``tests/`` directory.
"""

from __future__ import annotations

import math
import time
import traceback

import numpy as np
import torch

from .backbone import EdgeConv, knn_graph
from .cif_plus import ChannelFuseBranch, CrossInstanceFusion, instance_fuse_branch, relation_map
from .data import splits
from .harness.evaluation import mean_and_ci
from .metric_head import episode_loss, prototypes_from_support, score
from .sci_plus import ChannelInteractionBlock, SelfChannelInteraction
from .spf import SalientPartFusion

CHECKS = []


def check(fn):
    CHECKS.append(fn)
    return fn


def _double(module):
    return module.double().eval()


@check
def disjoint_splits():
    for bench in splits.BENCHMARKS:
        for fold in range(splits.n_folds(bench)):
            train, test = splits.class_lists(bench, fold)
            assert not set(train) & set(test), (bench, fold)


@check
def knn_excludes_self():
    x = torch.randn(20, 3, dtype=torch.float64)
    nb = knn_graph(x, 5)
    assert not (nb == torch.arange(20)[:, None]).any()


@check
def edge_conv_equivariance():
    layer = _double(EdgeConv(3, 8))
    x = torch.randn(16, 3, dtype=torch.float64)
    perm = torch.randperm(16)
    a = layer(x, knn_graph(x, 4))
    b = layer(x[perm], knn_graph(x[perm], 4))
    assert torch.allclose(a[perm], b, rtol=1e-9, atol=1e-12)


@check
def spf_permutation_invariance():
    spf = _double(SalientPartFusion(6, 4, 3))
    x = torch.randn(24, 6, dtype=torch.float64)
    with torch.no_grad():
        assert torch.allclose(spf(x), spf(x[torch.randperm(24)]), rtol=1e-9, atol=1e-12)


@check
def sci_residual_identity():
    sci = SelfChannelInteraction(5, 8).double()
    P, Q = torch.randn(5, 16, dtype=torch.float64), torch.randn(9, 16, dtype=torch.float64)
    p2, q2 = sci(P, Q)
    assert torch.equal(p2, P) and torch.equal(q2, Q)


@check
def cib_attention_rows_sum_to_one():
    block = ChannelInteractionBlock(4).double()
    _, state = block(torch.randn(8, dtype=torch.float64), torch.randn(8, dtype=torch.float64), return_state=True)
    assert torch.allclose(state.attn_map.sum(-1), torch.ones(8, dtype=torch.float64), atol=1e-6)


@check
def cif_fixed_point_and_symmetry():
    cif = CrossInstanceFusion(5, 3, 8).double()
    v = torch.randn(7, dtype=torch.float64)
    with torch.no_grad():
        P, Q = cif(v.expand(5, 7), v.expand(11, 7))
    assert torch.allclose(P, 3 * v.expand(5, 7)) and torch.allclose(Q, 3 * v.expand(11, 7))
    A, B = torch.randn(3, 4, dtype=torch.float64), torch.randn(6, 4, dtype=torch.float64)
    assert torch.equal(relation_map(B, A), relation_map(A, B).t())
    rows = instance_fuse_branch(A, B)
    assert (rows <= B.max(0).values + 1e-12).all() and (rows >= B.min(0).values - 1e-12).all()


@check
def metric_head_examples():
    logits = score(torch.tensor([[0.0, 0.0]]), torch.tensor([[1.0, 0.0], [0.0, 2.0]]))
    assert logits.tolist() == [[-1.0, -4.0]]
    assert abs(episode_loss(torch.zeros(3, 5), torch.tensor([0, 1, 2])).item() - math.log(5)) < 1e-6
    s = torch.tensor([[[0.0, 0.0], [2.0, 2.0]]])
    assert prototypes_from_support(s).tolist() == [[1.0, 1.0]]


@check
def ci_arithmetic():
    acc = np.array([0.8] * 350 + [0.9] * 350)
    mean, ci = mean_and_ci(acc)
    assert abs(mean - 85.0) < 1e-9
    assert abs(ci - 100 * 1.96 * acc.std(ddof=1) / math.sqrt(700)) < 1e-9


@check
def gradients():
    torch.manual_seed(0)
    block = ChannelInteractionBlock(3).double()
    torch.nn.init.normal_(block.compress.weight)
    branch = ChannelFuseBranch(2, 3).double()
    x = torch.randn(5, dtype=torch.float64, requires_grad=True)
    t = torch.randn(5, dtype=torch.float64, requires_grad=True)
    nb = torch.randn(2, 5, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(lambda a, b: block(a, b), (x, t))
    assert torch.autograd.gradcheck(lambda a, n: branch(a, n), (x, nb))
    P = torch.randn(3, 4, dtype=torch.float64, requires_grad=True)
    Q = torch.randn(5, 4, dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(instance_fuse_branch, (P, Q))


def run_selftest(verbose: bool = False) -> int:
    torch.manual_seed(0)
    failed = 0
    start = time.perf_counter()
    for fn in CHECKS:
        try:
            fn()
            print(f"PASS  {fn.__name__}")
        except Exception:  # report every check, keep going
            failed += 1
            print(f"FAIL  {fn.__name__}")
            if verbose:
                traceback.print_exc()
    print(f"{len(CHECKS) - failed}/{len(CHECKS)} checks passed in {time.perf_counter() - start:.1f}s")
    return 1 if failed else 0
