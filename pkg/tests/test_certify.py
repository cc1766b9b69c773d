import numpy as np
import pytest

from dmmstab.certify import (
    CERTIFIED,
    MARGINAL,
    NOT_CERTIFIED,
    certify_grid,
    certify_layerwise,
    certify_model,
    combine_verdicts,
    equilibrium_bounds,
    equilibrium_penalty,
    stability_penalty,
)
from dmmstab.dmm import DeepMarkovModel
from dmmstab.errors import ConvergenceError, DomainError, NotCertifiedError
from dmmstab.experiments import fig3_model, random_net
from dmmstab.factorize import SpectralBand
from dmmstab.netcore import FeedForwardNet, Layer
from dmmstab.sim import variance_gain

from conftest import linear_net, make_net


def svd_net(rng, act="relu", band=SpectralBand(0.0, 0.9), depth=3, bias=False):
    return random_net("svd", band, depth, act, 2, rng, bias=bias)[0]


def test_svd_relu_net_certified(rng):
    for depth in (1, 2, 4, 8):
        net = svd_net(rng, depth=depth)
        cert = certify_layerwise(net)
        assert cert.verdict == CERTIFIED
        assert cert.product_bound <= 0.9 ** depth


def test_selu_swap_not_certified(rng):
    net = svd_net(rng, depth=3)
    selu = FeedForwardNet(tuple(
        Layer(l.weight, l.bias, "selu" if i < net.depth - 1 else l.activation)
        for i, l in enumerate(net.layers)))
    cert = certify_layerwise(selu)
    assert cert.verdict == NOT_CERTIFIED
    assert any(s > 1.0 for _, _, s in cert.per_layer)


def test_identity_layer_marginal():
    assert certify_layerwise(linear_net(np.eye(2))).verdict == MARGINAL


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_verdict_iff_rule(p):
    rng = np.random.default_rng(5)
    for _ in range(200):
        net = make_net(rng, 1 + rng.integers(3), 3, rng.choice(["relu", "tanh", "selu", "sigmoid"]),
                       scale=rng.uniform(0.2, 1.5))
        cert = certify_layerwise(net, p)
        rule = all(w < 1 - 1e-12 for _, w, _ in cert.per_layer) and all(s <= 1 for _, _, s in cert.per_layer)
        assert (cert.verdict == CERTIFIED) == rule
        if rule:
            assert cert.product_bound < 1
        elif abs(cert.product_bound - 1) <= 0.02:
            assert cert.verdict == MARGINAL
        else:
            assert cert.verdict == NOT_CERTIFIED


def test_certificate_json_shape(rng):
    d = certify_layerwise(svd_net(rng)).to_dict()
    assert set(d) == {"verdict", "p", "per_layer", "product_bound"}
    assert set(d["per_layer"][0]) == {"layer", "weight_norm", "max_slope", "contractive"}


def test_combine_verdicts():
    assert combine_verdicts(CERTIFIED, MARGINAL) == MARGINAL
    assert combine_verdicts(NOT_CERTIFIED, CERTIFIED) == NOT_CERTIFIED
    assert combine_verdicts(CERTIFIED, CERTIFIED) == CERTIFIED


def test_certify_model_reports_both_nets_and_regions(rng):
    model = DeepMarkovModel(svd_net(rng), svd_net(rng))
    d = certify_model(model)
    assert d["verdict"] == CERTIFIED and "mean" in d and "variance" in d
    pm = certify_model(fig3_model(0))
    assert pm["outer_region_bound"] < 1.0
    assert pm["regions"]["bands"][-1][1] is None


def test_grid_soundness_chain(rng):
    for _ in range(10):
        f, g = svd_net(rng, "tanh", bias=True), svd_net(rng, "relu")
        model = DeepMarkovModel(f, g)
        ev = certify_grid(model, [(-10, 10), (-10, 10)], 41)
        assert ev.sup_mean_norm <= certify_layerwise(f).product_bound + 1e-12
        assert ev.sup_mean_norm < 1.0
        assert ev.sup_mean_norm == max(s[1] for s in ev.samples)
        assert ev.sup_variance_gain == max(s[2] for s in ev.samples)
        assert len(ev.points) == 41 * 41 - 1  # origin dropped


def test_grid_expanding_mean():
    model = DeepMarkovModel(linear_net(1.2 * np.eye(2)), linear_net(np.zeros((2, 2))))
    ev = certify_grid(model, [(-1, 1), (-1, 1)], 5)
    assert ev.sup_mean_norm == pytest.approx(1.2)
    assert not ev.consistent
    d = ev.to_dict()
    assert d["kind"] == "sampled evidence, not a certificate"
    assert d["resolution"] == [5, 5]


def test_grid_constant_variance_gain_peaks_nearest_origin():
    b = np.array([0.3, -0.4])
    model = DeepMarkovModel(linear_net(0.5 * np.eye(2)), linear_net(np.zeros((2, 2)), b))
    ev = certify_grid(model, [(-2, 2), (-2, 2)], 9)
    r = np.linalg.norm(ev.points, axis=1)
    np.testing.assert_allclose(ev.variance_gains, 0.5 / r)
    assert ev.sup_variance_gain == pytest.approx(0.5 / r.min())
    relaxed = certify_grid(model, [(-2, 2), (-2, 2)], 9, threshold=2.0)
    assert relaxed.consistent and not ev.consistent


def test_equilibrium_scalar_closed_form():
    eq = equilibrium_bounds(linear_net([[0.5]], [1.0]))
    assert eq.equilibrium[0] == pytest.approx(2.0, abs=1e-10)
    assert eq.lower == pytest.approx(2.0 / 3.0, abs=1e-10)
    assert eq.upper == pytest.approx(2.0, abs=1e-10)


def test_equilibrium_zero_bias(rng):
    eq = equilibrium_bounds(svd_net(rng, "tanh"))
    assert eq.lower == eq.upper == 0.0
    assert eq.equilibrium_norm == 0.0


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_equilibrium_bounds_contain_fixed_point(p):
    rng = np.random.default_rng(3)
    hits = 0
    while hits < 20:
        f = svd_net(rng, "tanh", band=SpectralBand(0.0, 0.7), bias=True)
        if certify_layerwise(f, p).verdict != CERTIFIED:
            continue
        eq = equilibrium_bounds(f, p)
        assert eq.lower - 1e-9 <= eq.equilibrium_norm <= eq.upper + 1e-9
        hits += 1


def test_upper_bound_tightens_as_norm_shrinks():
    b = np.array([1.0, 0.0])
    uppers = [equilibrium_bounds(linear_net(s * np.eye(2), b)).upper for s in (0.9, 0.6, 0.3)]
    assert uppers[0] > uppers[1] > uppers[2]


def test_equilibrium_refusals():
    with pytest.raises(NotCertifiedError):
        equilibrium_bounds(linear_net(np.eye(2), np.ones(2)))
    with pytest.raises(ConvergenceError) as info:
        equilibrium_bounds(linear_net([[0.99]], [1.0]), max_iter=5)
    assert info.value.iterations == 5
    assert info.value.partial is not None


def test_stability_penalty_examples(rng):
    f, g = svd_net(rng), svd_net(rng)
    model = DeepMarkovModel(f, g)
    x = np.array([3.0, -1.0])
    kg = float(variance_gain(g, x[None])[0])
    pen = stability_penalty(model, x, K=1.0)
    assert pen == pytest.approx(1.0 + max(1.0, kg))
    if kg <= 1:
        assert pen == 2.0
    expanding = DeepMarkovModel(linear_net(1.5 * np.eye(2)), linear_net(np.zeros((2, 2))))
    assert stability_penalty(expanding, [1.0, 1.0], K=1.0) == pytest.approx(1.5 + 1.0)
    with pytest.raises(DomainError):
        stability_penalty(model, [0.0, 0.0])


def test_stability_penalty_matches_grid(rng):
    model = DeepMarkovModel(make_net(rng, 2, 2, "tanh", scale=2.0), make_net(rng, 2, 2, "relu"))
    ev = certify_grid(model, [(-3, 3), (-3, 3)], 6)
    for x, a, k in ev.samples[::5]:
        assert stability_penalty(model, x, K=0.5) == pytest.approx(max(1.0, a) + max(0.5, k), abs=1e-12)


@pytest.mark.parametrize("lo,hi,expected", [(1, 3, 0.0), (3, 4, 1.0), (0, 1, 1.0)])
def test_equilibrium_penalty_examples(lo, hi, expected):
    net = linear_net(0.5 * np.eye(2), np.array([1.0, 0.0]))  # r = 1 / 0.5 = 2
    assert equilibrium_penalty(net, [0.3, 0.2], lo, hi) == pytest.approx(expected)


def test_equilibrium_penalty_rejects_expanding():
    with pytest.raises(DomainError):
        equilibrium_penalty(linear_net(np.eye(2), np.ones(2)), [1.0, 1.0], 0, 1)
