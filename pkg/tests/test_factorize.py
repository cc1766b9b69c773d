import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmmstab.errors import ShapeError
from dmmstab.factorize import (
    GershgorinDisc,
    SpectralBand,
    gd_weight,
    householder,
    householder_product,
    orthogonality_penalty,
    pf_weight,
    random_weight,
    svd_weight,
    verify_band,
)
from dmmstab.spectral import eigenvalues, spectral_radius

BANDS = [SpectralBand(0.0, 0.9), SpectralBand(0.99, 1.0), SpectralBand(1.1, 1.5)]


def test_band_validation_and_targets():
    with pytest.raises(ValueError):
        SpectralBand(0.5, 0.5)
    with pytest.raises(ValueError):
        SpectralBand(-0.1, 0.5)
    assert SpectralBand.stable().target == "stable"
    assert SpectralBand.marginal().to_list() == [0.99, 1.0]
    assert SpectralBand.marginal().target == "marginal"
    assert SpectralBand.unstable().target == "unstable"


def test_squash_stays_in_open_band():
    band = SpectralBand(0.2, 0.7)
    v = band.squash(np.linspace(-30, 30, 1001))
    assert np.all((v > 0.2) & (v < 0.7))
    assert band.squash(0.0) == pytest.approx(0.45)


def test_pf_uniform_example():
    fw = pf_weight(np.zeros((2, 2)), np.zeros((2, 2)), SpectralBand(0.0, 1.0))
    np.testing.assert_allclose(fw.realized, 0.25)
    assert spectral_radius(fw.realized) == pytest.approx(0.5)


@pytest.mark.parametrize("band,check", [
    (SpectralBand(0.8, 1.0), lambda r: 0.8 <= r <= 1.0),
    (SpectralBand(1.1, 1.5), lambda r: r > 1.0),
])
def test_pf_dominant_eigenvalue(rng, band, check):
    for _ in range(20):
        fw = pf_weight(rng.standard_normal((4, 4)), rng.standard_normal((4, 4)), band)
        assert np.all(fw.realized >= 0)
        assert check(spectral_radius(fw.realized))


def test_pf_rows_sum_inside_band(rng):
    band = SpectralBand(0.3, 0.6)
    fw = pf_weight(rng.standard_normal((5, 5)) * 4, rng.standard_normal((5, 5)) * 4, band)
    rows = fw.realized.sum(axis=1)
    assert np.all((rows >= 0.3) & (rows <= 0.6))


def test_pf_shape_errors():
    with pytest.raises(ShapeError):
        pf_weight(np.zeros((2, 3)), np.zeros((2, 3)), SpectralBand(0, 1))
    with pytest.raises(ShapeError):
        pf_weight(np.zeros((2, 2)), np.zeros((3, 3)), SpectralBand(0, 1))


def test_householder_reflector():
    h = householder([1.0, 1.0])
    np.testing.assert_allclose(h @ h, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(h @ np.array([1.0, 1.0]), [-1.0, -1.0], atol=1e-15)
    with pytest.raises(ValueError):
        householder([0.0, 0.0])
    with pytest.raises(ShapeError):
        householder_product([[1.0, 2.0, 3.0]], 2)


def test_svd_identical_reflectors_half_band():
    v = [np.array([1.0, 2.0, -1.0])]
    fw = svd_weight(v, v, np.zeros(3), SpectralBand(0.0, 1.0), (3, 3))
    np.testing.assert_allclose(np.linalg.svd(fw.realized, compute_uv=False), 0.5, atol=1e-14)


def test_svd_nonsquare_band(rng):
    band = SpectralBand(0.9, 0.99)
    fw = random_weight("svd", (3, 5), band, rng)
    assert fw.realized.shape == (3, 5)
    sv = np.sqrt(np.clip(np.linalg.eigvalsh(fw.realized @ fw.realized.T), 0, None))
    assert np.all((sv >= 0.9 - 1e-8) & (sv <= 0.99 + 1e-8))


def test_svd_needs_reflectors_and_matching_raw():
    with pytest.raises(ValueError):
        svd_weight([], [np.ones(2)], np.zeros(2), SpectralBand(0, 1), (2, 2))
    with pytest.raises(ShapeError):
        svd_weight([np.ones(2)], [np.ones(2)], np.zeros(3), SpectralBand(0, 1), (2, 2))


def test_orthogonality_penalty_examples(rng):
    assert orthogonality_penalty(np.eye(3), np.eye(2)) == 0.0
    assert orthogonality_penalty(np.diag([2.0, 1.0]), np.eye(2)) == pytest.approx(6.0, abs=1e-10)
    u = householder_product([rng.standard_normal(4) for _ in range(4)], 4)
    v = householder_product([rng.standard_normal(3) for _ in range(3)], 3)
    assert orthogonality_penalty(u, v) <= 1e-12
    with pytest.raises(ShapeError):
        orthogonality_penalty(np.ones((2, 3)), np.eye(2))


def test_gd_ones_example():
    m = np.ones((3, 3))
    fw = gd_weight(m, radius=0.1, center=0.5)
    off = fw.realized[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, 0.05)
    np.testing.assert_allclose(np.sort(eigenvalues(fw.realized).real), [0.45, 0.45, 0.6], atol=1e-12)
    assert verify_band(fw.realized, GershgorinDisc(0.5, 0.1), "gd").passed


def test_gd_zero_center_radius(rng):
    for _ in range(20):
        fw = gd_weight(rng.uniform(0, 1, (5, 5)), radius=0.5, center=0.0)
        assert spectral_radius(fw.realized) <= 0.5 + 1e-8
        np.testing.assert_array_equal(np.diag(fw.realized), 0.0)


def test_gd_marginal_disc(rng):
    fw = gd_weight(rng.uniform(0, 1, (4, 4)), radius=0.05, center=1.0)
    ev = eigenvalues(fw.realized)
    assert np.all(np.abs(ev - 1.0) <= 0.05 + 1e-9)
    np.testing.assert_array_equal(np.diag(fw.realized), 1.0)


def test_gd_clamps_negatives_and_rejects_empty_rows():
    m = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    with pytest.warns(RuntimeWarning):
        fw = gd_weight(m, 0.2, 0.0)
    assert fw.realized[0, 1] == 0.0
    with pytest.raises(ValueError):
        gd_weight(np.eye(3), 0.2, 0.0)  # diagonal zeroed, rows empty
    with pytest.raises(ShapeError):
        gd_weight(np.ones((2, 3)), 0.2, 0.0)


def test_verify_band_examples():
    assert verify_band(np.eye(2), SpectralBand(0.9, 1.1), "svd").passed
    rep = verify_band(0.5 * np.eye(2), SpectralBand(0.9, 1.0), "svd")
    assert not rep.passed
    assert rep.measured == [0.5, 0.5]
    d = rep.to_dict()
    assert d["band"] == [0.9, 1.0] and d["passed"] is False
    with pytest.raises(ValueError):
        verify_band(np.eye(2), SpectralBand(0, 1), "qr")


def test_random_weight_square_only_for_pf_and_gd(rng):
    for m in ("pf", "gd"):
        with pytest.raises(ShapeError):
            random_weight(m, (2, 3), SpectralBand(0, 0.9), rng)
    one = random_weight("gd", (1, 1), SpectralBand(0.2, 0.4), rng)
    assert one.realized[0, 0] == pytest.approx(0.3)


@pytest.mark.parametrize("method", ["pf", "svd", "gd"])
@pytest.mark.parametrize("band", BANDS, ids=lambda b: f"{b.lambda_min}-{b.lambda_max}")
def test_constructor_round_trip(method, band):
    rng = np.random.default_rng(["pf", "svd", "gd"].index(method) * 10 + BANDS.index(band))
    for i in range(200):
        n = 2 + i % 6
        shape = (n, n) if method != "svd" else (n, 2 + (i * 7) % 6)
        fw = random_weight(method, shape, band, rng)
        assert verify_band(fw.realized, fw.band, method).passed


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 7), m=st.integers(1, 7),
       lo=st.floats(0, 2), width=st.floats(0.01, 1))
def test_svd_singular_values_in_band(seed, n, m, lo, width):
    rng = np.random.default_rng(seed)
    band = SpectralBand(lo, lo + width)
    fw = random_weight("svd", (n, m), band, rng)
    rep = verify_band(fw.realized, band, "svd")
    assert rep.passed
    assert orthogonality_penalty(fw.parameters["u"], fw.parameters["v"]) <= 1e-10
