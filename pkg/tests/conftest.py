import numpy as np
import pytest

from dmmstab.netcore import KINDS, Activation, FeedForwardNet, Layer

ALL_ACTIVATIONS = [Activation(k) for k in KINDS] + [Activation("leaky_relu", 0.2)]


def make_net(rng, depth, width, act, n_in=None, n_out=None, bias=True, scale=1.0):
    """Random dense net with ``depth`` layers of hidden width ``width``."""
    n_in = width if n_in is None else n_in
    n_out = width if n_out is None else n_out
    widths = [n_in] + [width] * (depth - 1) + [n_out]
    act = Activation.parse(act)
    layers = []
    for i in range(depth):
        w = scale * rng.standard_normal((widths[i + 1], widths[i])) / np.sqrt(widths[i])
        b = rng.standard_normal(widths[i + 1]) if bias else None
        layers.append(Layer(w, b, act if i < depth - 1 else Activation("identity")))
    return FeedForwardNet(tuple(layers))


def linear_net(matrix, bias=None):
    return FeedForwardNet((Layer(np.atleast_2d(matrix), bias, Activation("identity")),))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
