import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from pcia.backbone import DGCNN, EdgeConv, PointNet, backbone_forward, build_backbone, edge_conv, knn_graph, smallest_k

from conftest import randomize_norms
from oracles import edge_conv_loop, knn_bruteforce


def test_knn_hand_example():
    x = torch.tensor([[0.0], [1.0], [3.0], [3.5]])
    assert knn_graph(x, 2).tolist() == [[1, 2], [0, 2], [3, 1], [2, 1]]


def test_knn_duplicates_exclude_self_keep_duplicate():
    x = torch.tensor([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
    nb = knn_graph(x, 1)
    assert nb.tolist() == [[1], [0], [0]]


def test_knn_rejects_k_not_below_n():
    with pytest.raises(ValueError):
        knn_graph(torch.zeros(4, 3), 4)


@pytest.mark.parametrize("seed", range(20))
def test_knn_matches_bruteforce(seed):
    x = np.random.default_rng(seed).standard_normal((30, 4))
    got = knn_graph(torch.from_numpy(x), 7).numpy()
    np.testing.assert_array_equal(got, knn_bruteforce(x, 7))


def test_smallest_k_ties_go_to_lower_index():
    d = torch.tensor([[2.0, 1.0, 1.0, 1.0, 0.0]])
    assert smallest_k(d, 3).tolist() == [[4, 1, 2]]
    # integer grid: many ties
    x = torch.tensor([[float(i % 3), float(i // 3)] for i in range(9)], dtype=torch.float64)
    np.testing.assert_array_equal(knn_graph(x, 4).numpy(), knn_bruteforce(x.numpy(), 4))


def test_edge_conv_oracle_on_100_instances():
    gen = torch.Generator().manual_seed(0)
    worst = 0.0
    for trial in range(100):
        n = int(torch.randint(4, 17, (1,), generator=gen))
        c = int(torch.randint(1, 5, (1,), generator=gen))
        out_c = int(torch.randint(1, 6, (1,), generator=gen))
        k = int(torch.randint(1, n, (1,), generator=gen))
        layer = randomize_norms(EdgeConv(c, out_c).double(), gen).eval()
        f = torch.randn(n, c, generator=gen, dtype=torch.float64)
        nbrs = knn_graph(f, k)
        with torch.no_grad():
            got = edge_conv(f, nbrs, layer).numpy()
        want = edge_conv_loop(f.numpy(), nbrs.numpy(), layer)
        worst = max(worst, np.abs(got - want).max())
    assert worst < 1e-6


def test_edge_conv_identical_points_give_identical_rows(gen):
    layer = randomize_norms(EdgeConv(3, 8).double(), gen).eval()
    f = torch.ones(10, 3, dtype=torch.float64)
    out = layer(f, knn_graph(f, 3))
    assert torch.equal(out, out[:1].expand_as(out))


def test_edge_conv_equivariance(gen):
    layer = randomize_norms(EdgeConv(3, 8).double(), gen).eval()
    f = torch.randn(12, 3, generator=gen, dtype=torch.float64)
    perm = torch.randperm(12, generator=gen)
    inv = torch.argsort(perm)
    a = layer(f, knn_graph(f, 4))
    b = layer(f[perm], inv[knn_graph(f, 4)[perm]])
    torch.testing.assert_close(b, a[perm], rtol=0, atol=1e-12)


@pytest.mark.parametrize("variant", ["dgcnn", "pointnet"])
def test_full_width_shapes(variant):
    model = build_backbone(variant).eval()
    with torch.no_grad():
        out = backbone_forward(torch.rand(512, 3) * 2 - 1, variant, model)
    assert out.shape == (512, 1024)
    assert torch.isfinite(out).all()


def test_dgcnn_concat_width():
    model = DGCNN()
    assert model.embed[0].in_features == 64 + 64 + 128 + 256
    assert [c.out_dim for c in model.convs] == [64, 64, 128, 256]


def test_pointnet_has_five_layers():
    model = PointNet()
    assert len(model.layers) == 5 and model.out_dim == 1024


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["dgcnn", "pointnet"]))
def test_backbone_permutation_equivariance(seed, variant):
    gen = torch.Generator().manual_seed(seed)
    kwargs = dict(widths=(8, 8, 8, 16), embed_dim=32, k=5) if variant == "dgcnn" else dict(widths=(8, 8, 16))
    model = randomize_norms(build_backbone(variant, **kwargs).double(), gen).eval()
    x = torch.rand(40, 3, generator=gen, dtype=torch.float64) * 2 - 1
    perm = torch.randperm(40, generator=gen)
    with torch.no_grad():
        a, b = model(x[None])[0], model(x[perm][None])[0]
    torch.testing.assert_close(b, a[perm], rtol=1e-5, atol=1e-9)
    torch.testing.assert_close(b.max(0).values, a.max(0).values, rtol=1e-5, atol=1e-9)


def test_unknown_variant():
    with pytest.raises(ValueError):
        build_backbone("pointnet++")
