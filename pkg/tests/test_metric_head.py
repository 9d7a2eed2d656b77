import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from pcia.metric_head import MetricHead, episode_loss, predict, prototypes_from_support, score

from oracles import gradient_check, sqeuclid_logits_loop


def test_prototype_examples():
    s = torch.randn(5, 1, 7)
    assert torch.equal(prototypes_from_support(s), s[:, 0])
    two = torch.tensor([[[0.0, 0.0], [2.0, 2.0]]])
    assert prototypes_from_support(two).tolist() == [[1.0, 1.0]]


def test_prototypes_oracle_on_100_instances():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        n, k, d = rng.integers(1, 6, size=3)
        s = rng.standard_normal((n, k, d))
        want = np.array([[sum(s[i, j, c] for j in range(k)) / k for c in range(d)] for i in range(n)])
        worst = max(worst, np.abs(prototypes_from_support(torch.from_numpy(s)).numpy() - want).max())
    assert worst < 1e-6


def test_score_oracle_on_100_instances():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        nq, n, d = rng.integers(1, 8, size=3)
        q, p = rng.standard_normal((nq, d)), rng.standard_normal((n, d))
        got = score(torch.from_numpy(q), torch.from_numpy(p)).numpy()
        worst = max(worst, np.abs(got - sqeuclid_logits_loop(q, p)).max())
    assert worst < 1e-6


def test_score_hand_examples():
    q = torch.tensor([[0.0, 0.0]])
    p = torch.tensor([[1.0, 0.0], [0.0, 2.0]])
    assert score(q, p).tolist() == [[-1.0, -4.0]]
    assert score(p[:1], p)[0, 0].item() == 0.0 and score(p[:1], p)[0, 1].item() < 0
    probs = torch.softmax(score(torch.tensor([[0.0, 1.0]]), torch.tensor([[1.0, 1.0], [-1.0, 1.0]])), -1)
    assert probs.tolist() == [[0.5, 0.5]]


def test_cosine_score_and_zero_guard():
    q = torch.tensor([[1.0, 0.0], [0.0, 0.0]])
    p = torch.tensor([[2.0, 0.0], [0.0, 3.0], [-1.0, 1.0]])
    out = score(q, p, "cosine", tau=10.0)
    torch.testing.assert_close(out, torch.tensor([[10.0, 0.0, -10.0 / math.sqrt(2)], [0.0, 0.0, 0.0]]))
    with pytest.raises(ValueError):
        score(q, p, "manhattan")


def test_loss_examples():
    assert episode_loss(torch.zeros(4, 5), torch.tensor([0, 1, 2, 3])).item() == pytest.approx(math.log(5), abs=1e-7)
    val = episode_loss(torch.tensor([[0.0, -1.0]], dtype=torch.float64), torch.tensor([0])).item()
    assert val == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)
    assert round(val, 4) == 0.3133
    margins = [episode_loss(torch.tensor([[m, 0.0, 0.0]], dtype=torch.float64), torch.tensor([0])).item()
               for m in (0.0, 1.0, 5.0, 20.0, 60.0)]
    assert all(a > b for a, b in zip(margins, margins[1:])) and margins[-1] < 1e-20


def test_predict_examples():
    assert predict(torch.tensor([[0.0, -1.0], [-5.0, 0.0]])).tolist() == [0, 1]
    assert predict(torch.tensor([[1.0, 3.0, 3.0, 2.0]])).tolist() == [1]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 10), st.integers(2, 6), st.floats(-1e3, 1e3))
def test_loss_and_prediction_invariants(seed, nq, n, shift):
    rng = np.random.default_rng(seed)
    logits = torch.from_numpy(rng.standard_normal((nq, n)) * 3)
    labels = torch.from_numpy(rng.integers(0, n, nq))
    probs = torch.softmax(logits, -1)
    torch.testing.assert_close(probs.sum(-1), torch.ones(nq, dtype=torch.float64), atol=1e-6, rtol=0)
    loss = episode_loss(logits, labels)
    assert loss.item() >= 0
    shifts = torch.from_numpy(rng.uniform(-abs(shift) - 1, abs(shift) + 1, (nq, 1)))
    assert abs(episode_loss(logits + shifts, labels).item() - loss.item()) < 1e-6
    assert torch.equal(predict(logits + shifts), predict(logits))
    assert torch.equal(predict(logits), predict(probs))
    const = torch.from_numpy(rng.standard_normal((nq, 1))).expand(nq, n)
    assert episode_loss(const, labels).item() == pytest.approx(math.log(n), abs=1e-9)


def test_metric_head_module():
    head = MetricHead("cosine", 4.0)
    assert head.tau.item() == 4.0 and head.tau.requires_grad
    assert MetricHead().tau is None
    with pytest.raises(ValueError):
        MetricHead("l1")


@pytest.mark.parametrize("metric", ["sqeuclid", "cosine"])
def test_head_gradient_check(gen, metric):
    s = torch.randn(3, 2, 5, generator=gen, dtype=torch.float64, requires_grad=True)
    q = torch.randn(4, 5, generator=gen, dtype=torch.float64, requires_grad=True)
    tau = torch.tensor(3.0, dtype=torch.float64, requires_grad=True)
    labels = torch.tensor([0, 1, 2, 1])
    tensors = [s, q] + ([tau] if metric == "cosine" else [])
    fn = lambda: episode_loss(score(q, prototypes_from_support(s), metric, tau), labels)  # noqa: E731
    assert gradient_check(fn, tensors) < 1e-4
