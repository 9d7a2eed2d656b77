import numpy as np
import pytest
import torch

torch.set_num_threads(1)


def randomize_norms(module, gen):
    """Give every batch-norm layer non-trivial running statistics and affine params."""
    for m in module.modules():
        if isinstance(m, torch.nn.BatchNorm1d):
            c = m.num_features
            m.running_mean.copy_(torch.randn(c, generator=gen, dtype=m.running_mean.dtype))
            m.running_var.copy_(torch.rand(c, generator=gen, dtype=m.running_var.dtype) + 0.5)
            with torch.no_grad():
                m.weight.copy_(torch.randn(c, generator=gen, dtype=m.weight.dtype))
                m.bias.copy_(torch.randn(c, generator=gen, dtype=m.bias.dtype))
    return module


@pytest.fixture
def gen():
    return torch.Generator().manual_seed(1234)


@pytest.fixture
def nprng():
    return np.random.default_rng(1234)


# criterion number -> (status, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {status:<7s} {detail}")
