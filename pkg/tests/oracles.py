"""Brute-force reference implementations used by the tests.

Everything here is plain numpy with explicit loops and shares no code with
the package under test.
"""

import numpy as np
import torch


def knn_bruteforce(x, k):
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    out = []
    for i in range(n):
        cand = sorted((float(((x[i] - x[j]) ** 2).sum()), j) for j in range(n) if j != i)
        out.append([j for _, j in cand[:k]])
    return np.array(out)


def batchnorm_eval(v, bn):
    """Apply an eval-mode BatchNorm1d to a single vector."""
    rm = bn.running_mean.detach().double().numpy()
    rv = bn.running_var.detach().double().numpy()
    g = bn.weight.detach().double().numpy()
    b = bn.bias.detach().double().numpy()
    return (v - rm) / np.sqrt(rv + bn.eps) * g + b


def edge_conv_loop(f, nbrs, layer):
    """EdgeConv with an eval-mode norm, one point and one edge at a time."""
    W = layer.linear.weight.detach().double().numpy()
    f = np.asarray(f, dtype=np.float64)
    out = np.zeros((len(f), W.shape[0]))
    for i in range(len(f)):
        best = None
        for j in nbrs[i]:
            edge = np.concatenate([f[i], f[j] - f[i]])
            h = np.maximum(batchnorm_eval(W @ edge, layer.norm), 0.0)
            best = h if best is None else np.maximum(best, h)
        out[i] = best
    return out


def cos(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b) / (na * nb)


def spf_loop(fmap, module):
    """Salient-part fusion in eval mode, written out step by step."""
    F = np.asarray(fmap, dtype=np.float64)
    n, d = F.shape
    W = module.encoder.weight.detach().double().numpy()
    coarse = np.array([max(F[i, c] for i in range(n)) for c in range(d)])
    scores = [cos(F[i], coarse) for i in range(n)]
    selected = sorted(range(n), key=lambda i: (-scores[i], i))[: module.k_s]
    parts = []
    for p in selected:
        cand = sorted((float(((F[p] - F[q]) ** 2).sum()), q) for q in range(n) if q != p)
        rows = [q for _, q in cand[: module.k]]
        enc = [np.maximum(batchnorm_eval(W @ np.concatenate([coarse, F[q]]), module.norm), 0) for q in rows]
        parts.append(np.max(enc, axis=0))
    return np.max(parts, axis=0), scores, selected


def softmax(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def cib_loop(feature, task, block):
    """Channel interaction block, one channel at a time."""
    p = {name: t.detach().double().numpy() for name, t in block.named_parameters()}
    d, h = len(feature), block.h_r
    fused = np.array([p["fuse.weight"] @ np.array([feature[c], task[c]]) + p["fuse.bias"] for c in range(d)])
    q = np.array([p["query.weight"] @ fused[c] + p["query.bias"] for c in range(d)])
    k = np.array([p["key.weight"] @ fused[c] + p["key.bias"] for c in range(d)])
    v = np.array([p["value.weight"] @ fused[c] + p["value.bias"] for c in range(d)])
    out = np.zeros(d)
    attn = np.zeros((d, d))
    for c in range(d):
        attn[c] = softmax([q[c] @ k[t] / np.sqrt(h) for t in range(d)])
        weighted = sum(attn[c, t] * v[t] for t in range(d))
        out[c] = p["compress.weight"][0] @ weighted + p["compress.bias"][0] + feature[c]
    return out, attn


def channel_fuse_loop(anchor, neighbors, branch):
    p = {name: t.detach().double().numpy() for name, t in branch.named_parameters()}
    Z = np.vstack([anchor, neighbors])  # (K1+1, d)
    out = np.zeros(Z.shape[1])
    for c in range(Z.shape[1]):
        hidden = np.maximum(p["f1.weight"] @ Z[:, c] + p["f1.bias"], 0)
        w = softmax(p["f2.weight"] @ hidden + p["f2.bias"])
        out[c] = sum(w[s] * Z[s, c] for s in range(len(w)))
    return out


def instance_fuse_loop(P, Q):
    P, Q = np.asarray(P, dtype=np.float64), np.asarray(Q, dtype=np.float64)
    out = np.zeros_like(P)
    for i in range(len(P)):
        w = softmax([P[i] @ Q[j] for j in range(len(Q))])
        for j in range(len(Q)):
            out[i] += w[j] * Q[j]
    return out


def sqeuclid_logits_loop(queries, protos):
    out = np.zeros((len(queries), len(protos)))
    for j, q in enumerate(queries):
        for i, p in enumerate(protos):
            out[j, i] = -sum((q[c] - p[c]) ** 2 for c in range(len(q)))
    return out


def central_difference(fn, tensors, eps=1e-6):
    """Numerical gradient of scalar ``fn()`` w.r.t. each tensor, by perturbing entries in place."""
    grads = []
    for t in tensors:
        g = torch.zeros_like(t)
        flat, gflat = t.data.view(-1), g.view(-1)
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + eps
            up = float(fn())
            flat[i] = orig - eps
            down = float(fn())
            flat[i] = orig
            gflat[i] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-5):
    a, n = analytic.detach().double(), numeric.detach().double()
    denom = torch.maximum(torch.maximum(a.abs(), n.abs()), torch.full_like(a, floor))
    return float(((a - n).abs() / denom).max())


def gradient_check(fn, tensors, eps=1e-6):
    """Largest elementwise relative error between autograd and central differences."""
    for t in tensors:
        t.grad = None
    fn().backward()
    analytic = [t.grad.clone() for t in tensors]
    with torch.no_grad():
        numeric = central_difference(fn, tensors, eps)
    return max(max_relative_error(a, n) for a, n in zip(analytic, numeric))
