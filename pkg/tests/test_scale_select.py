import copy

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mafod.grid import ParameterError, gaussian_smooth, gradient, hessian
from mafod.scale_select import (ScaleConfig, ScaleSpace, VesselnessResult, frangi_vesselness,
                                hessian_eigen, normalized_hessian, postprocess_scale_map,
                                select_scales, sorted_eigenvalues)
from mafod.synthgen import gen_concentric

from helpers import bars_image, cross_section_constancy, oracle_vesselness_sweep, y_image

entry = st.floats(-100, 100, allow_nan=False)


def test_eigen_identity_tie_break():
    nu1, e1, nu2, e2 = hessian_eigen(1.0, 0.0, 1.0)
    assert (nu1, nu2) == (1.0, 1.0)
    assert np.array_equal(e1, [1.0, 0.0]) and np.array_equal(e2, [0.0, 1.0])


def test_eigen_diagonal():
    nu1, e1, nu2, e2 = hessian_eigen(0.0, 0.0, -2.0)
    assert nu1 == 0 and nu2 == -2
    assert np.allclose(np.abs(e2), [0, 1])


def test_eigen_equal_magnitude_orders_by_sign():
    nu1, _, nu2, _ = hessian_eigen(1.0, 0.0, -1.0)
    assert (nu1, nu2) == (-1.0, 1.0)


def test_eigen_random_characteristic_polynomial(rng):
    a, b, c = rng.normal(size=(3, 1000)) * 10
    nu1, e1, nu2, e2 = hessian_eigen(a, b, c)
    H = np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)
    for nu, e in ((nu1, e1), (nu2, e2)):
        r = np.einsum("nij,nj->ni", H, e) - nu[:, None] * e
        assert np.max(np.linalg.norm(r, axis=1)) <= 1e-12 * max(1, np.abs(H).max())
    assert np.allclose(nu1 + nu2, a + c, atol=1e-12 * 100)
    assert np.allclose(nu1 * nu2, a * c - b * b, rtol=1e-10, atol=1e-9)
    assert np.all(np.abs(nu1) <= np.abs(nu2))
    assert np.allclose(np.einsum("ni,ni->n", e1, e2), 0, atol=1e-15)


@given(entry, entry, entry)
def test_eigen_property(a, b, c):
    nu1, e1, nu2, e2 = hessian_eigen(a, b, c)
    assert abs(nu1) <= abs(nu2)
    assert abs(np.linalg.norm(e1) - 1) < 1e-12 and abs(np.linalg.norm(e2) - 1) < 1e-12
    assert abs(e1 @ e2) < 1e-12
    s1, s2 = sorted_eigenvalues(a, b, c)
    assert s1 == pytest.approx(nu1, abs=1e-9) and s2 == pytest.approx(nu2, abs=1e-9)


def test_eigen_rejects_nonfinite():
    with pytest.raises(ParameterError):
        hessian_eigen(np.nan, 0.0, 1.0)


def test_frangi_values():
    assert frangi_vesselness(0.0, 0.3) == 0.0
    assert frangi_vesselness(0.1, 0.0) == 0.0
    assert frangi_vesselness(0.0, -1.0, 0.5, 0.5) == pytest.approx(1 - np.exp(-2), abs=1e-12)
    v = frangi_vesselness(-0.2, -0.5, 0.5, 0.3)
    rb, s2 = 0.2 / 0.5, 0.04 + 0.25
    assert v == pytest.approx(np.exp(-rb ** 2 / 0.5) * (1 - np.exp(-s2 / 0.18)), rel=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_frangi_range(a, b):
    nu1, nu2 = sorted((a, b), key=abs)
    v = frangi_vesselness(nu1, nu2, 0.5, 0.7)
    assert 0.0 <= v <= 1.0


def test_config_validation():
    for kw in ({"sigmas": ()}, {"sigmas": (1.0, 0.5)}, {"sigmas": (0.0, 1.0)},
               {"theta": 1.5}, {"beta": 0.0}, {"polarity": "sideways"}):
        with pytest.raises(ParameterError):
            ScaleConfig(**kw)


def test_constant_image_no_vessels():
    r = select_scales(np.full((32, 32), 0.4), ScaleConfig())
    assert np.all(r.v_map == 0) and not r.segmentation.any()


def test_concentric_segmentation_covers_rings():
    u, gt = gen_concentric(256)
    r = select_scales(u, ScaleConfig(theta=0.2))
    px = np.unique(np.rint(np.vstack([c.points for c in gt])).astype(int), axis=0)
    assert r.segmentation[px[:, 1], px[:, 0]].mean() >= 0.95


def test_concentric_scales_increase_with_width():
    u, gt = gen_concentric(256)
    r = select_scales(u, ScaleConfig(theta=0.2))
    med = []
    for c in gt:
        px = np.rint(c.points).astype(int)
        med.append(np.median(r.scale_map[px[:, 1], px[:, 0]]))
    assert med[0] < med[1] < med[2]


def test_valley_polarity_is_negation():
    u = bars_image()
    a = select_scales(u, ScaleConfig(polarity="ridges"))
    b = select_scales(-u, ScaleConfig(polarity="valleys"))
    assert np.allclose(a.v_map, b.v_map, atol=1e-12)
    assert np.array_equal(a.scale_map, b.scale_map)


def test_selection_matches_bruteforce_sweep():
    u = bars_image(shape=(128, 24))
    cfg = ScaleConfig()
    r = select_scales(u, cfg)
    arg, best = oracle_vesselness_sweep(u, cfg.sigmas)
    assert np.max(np.abs(r.v_map - best)) < 1e-9
    for c in (20, 56, 100):
        assert np.mean(r.scale_map[c, 1:-1] == arg[c, 1:-1]) >= 0.95


def test_postprocess_bars_single_scale_and_idempotent():
    u = bars_image()
    r = select_scales(u, ScaleConfig())
    pp = postprocess_scale_map(r, u)
    assert set(np.unique(pp)) <= set(r.sigmas)
    assert cross_section_constancy(pp, r) >= 0.99
    again = postprocess_scale_map(VesselnessResult(r.v_map, pp, r.segmentation,
                                                   r.cross_direction, r.sigmas))
    assert np.array_equal(again, pp)
    assert np.all(pp[~r.segmentation] == r.sigmas[0])


def test_postprocess_y_branch():
    u = y_image()
    r = select_scales(u, ScaleConfig(sigmas=tuple(np.arange(1, 13) * 0.5)))
    pp = postprocess_scale_map(r, u)
    # the raw argmax map varies across nearly every cross-section
    assert cross_section_constancy(r.scale_map, r) < 0.1
    assert cross_section_constancy(pp, r) > 4 * cross_section_constancy(r.scale_map, r)
    stem = copy.copy(r)
    stem.segmentation = r.segmentation.copy()
    stem.segmentation[:60] = False
    assert cross_section_constancy(postprocess_scale_map(stem, u), stem) >= 0.99


def test_normalized_hessian_trivial():
    cfg = np.full((16, 16), 1.0)
    nh = normalized_hessian(np.full((16, 16), 2.0), cfg)
    assert all(np.all(c == 0) for c in nh)
    # a ramp has zero Hessian away from the reflected border
    y, x = np.mgrid[0:32, 0:32].astype(float)
    nh = normalized_hessian(0.3 * x - 0.1 * y, np.full((32, 32), 1.0))
    assert all(np.max(np.abs(c[10:-10, 10:-10])) < 1e-12 for c in nh)


def test_normalized_hessian_composition():
    y, x = np.mgrid[0:20, 0:20].astype(float)
    u = x ** 2 / 2 + 0.1 * x * y
    nh = normalized_hessian(u, np.full(u.shape, 1.0), rho=0.0)
    us = gaussian_smooth(u, 1.0)
    g, h = gradient(us), hessian(us)
    f = 1 / np.sqrt(1 + np.hypot(g.x, g.y))
    assert np.allclose(nh.xx, f * h.xx, atol=1e-13)
    assert np.allclose(nh.xy, f * h.xy, atol=1e-13)
    assert np.allclose(nh.yy, f * h.yy, atol=1e-13)


def test_normalized_hessian_mixed_scales(rng):
    u = rng.random((24, 24))
    smap = np.where(np.arange(24)[None, :] < 12, 1.0, 2.5) * np.ones((24, 1))
    nh = normalized_hessian(u, smap, rho=0.0)
    for s in (1.0, 2.5):
        us = gaussian_smooth(u, s)
        g, h = gradient(us), hessian(us)
        m = smap == s
        assert np.allclose(nh.xx[m], (h.xx / np.sqrt(1 + np.hypot(g.x, g.y)))[m], atol=1e-13)
    with pytest.raises(ParameterError):
        normalized_hessian(u, np.zeros_like(u))


def test_scale_space_memoizes(rng):
    s = ScaleSpace(rng.random((8, 8)))
    assert s.derivatives(1.0) is s.derivatives(1.0)
