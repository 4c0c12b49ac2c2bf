import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mafod.curves import CurveSet, Polyline
from mafod.evaluate import (EvalConfig, hausdorff, l2_distance, match_and_score,
                            point_polyline_distance, snr)
from mafod.grid import ParameterError
from mafod.synthgen import add_noise, gen_concentric

coord = st.floats(-20, 20, allow_nan=False)
pts = st.lists(st.tuples(coord, coord), min_size=2, max_size=6)


def brute_hausdorff(a, b, n=400):
    # dense uniform resampling of both polylines, point-to-point distances
    def dense(p):
        p = np.asarray(p, float)
        out = [a + t * (b - a) for a, b in zip(p[:-1], p[1:]) for t in np.linspace(0, 1, n)]
        return np.array(out)
    da, db = dense(a), dense(b)
    d = np.hypot(da[:, None, 0] - db[None, :, 0], da[:, None, 1] - db[None, :, 1])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def test_point_polyline_distance():
    v = np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 3.0]])
    p = np.array([[2.0, 1.0], [-3.0, 4.0], [5.0, 1.5], [4.0, 3.0]])
    assert np.allclose(point_polyline_distance(p, v), [1.0, 5.0, 1.0, 0.0])
    assert point_polyline_distance([[3.0, 4.0]], [[0.0, 0.0]])[0] == 5.0


def test_hausdorff_cases():
    a = [[0.0, 0.0], [10.0, 0.0]]
    assert hausdorff(a, a) == 0
    assert hausdorff(a, [[0.0, 2.0], [10.0, 2.0]]) == pytest.approx(2.0)
    # a short piece next to a long one: far end dominates
    assert hausdorff(a, [[0.0, 0.0], [4.0, 0.0]]) == pytest.approx(6.0)
    with pytest.raises(ParameterError):
        hausdorff([], a)


@settings(max_examples=25)
@given(pts, pts)
def test_hausdorff_against_dense_oracle(a, b):
    h = hausdorff(a, b, sample_step=0.05)
    assert h == pytest.approx(brute_hausdorff(a, b), abs=0.06)
    assert h == pytest.approx(hausdorff(b, a, sample_step=0.05), abs=1e-12)


def circle(r, c=(50.0, 50.0), n=200):
    phi = np.linspace(0, 2 * np.pi, n + 1)
    p = np.stack([c[0] + r * np.cos(phi), c[1] + r * np.sin(phi)], 1)
    p[-1] = p[0]
    return Polyline(p)


def test_identity_and_offset():
    gt = CurveSet([Polyline([[0.0, 5.0], [40.0, 5.0]]), circle(10)])
    r = match_and_score(gt, gt)
    assert r.E < 1e-12 and r.p == 1.0 and r.summary() == "E=0.000, p=100%"
    shifted = CurveSet([Polyline(c.points + [0.0, 0.5]) for c in gt])
    line = CurveSet([gt[0]])
    r = match_and_score(line, CurveSet([shifted[0]]))
    assert r.E == pytest.approx(0.5) and r.p == 1.0


def test_unmatched_segment_lowers_p():
    gt = CurveSet([Polyline([[0.0, 0.0], [30.0, 0.0]]), Polyline([[0.0, 50.0], [10.0, 50.0]])])
    rec = CurveSet([Polyline([[0.0, 1.0], [30.0, 1.0]])])
    r = match_and_score(gt, rec)
    assert r.p < 1.0 and r.E == pytest.approx(1.0)
    assert r.segments[1]["match"] is None
    assert match_and_score(gt, rec, EvalConfig(p_mode="segments")).p == 0.5
    assert match_and_score(gt, CurveSet()).p == 0.0


def test_segment_length_mode():
    gt = CurveSet([Polyline([[0.0, 0.0], [40.0, 0.0]])])
    rec = CurveSet([Polyline([[0.0, 0.3], [40.0, 0.3]])])
    r = match_and_score(gt, rec, EvalConfig(segment_length=10.0))
    assert len(r.segments) == 4 and r.E == pytest.approx(0.3)


def test_invariances():
    u, gt = gen_concentric(128, radii=(20.0, 40.0), widths=(2.0, 3.0))
    rec = CurveSet([circle(20.4, (63.5, 63.5)), circle(39.7, (63.5, 63.5))])
    base = match_and_score(gt, rec)
    moved = match_and_score(CurveSet([Polyline(c.points + 7.0) for c in gt]),
                            CurveSet([Polyline(c.points + 7.0) for c in rec]))
    assert moved.E == pytest.approx(base.E, abs=1e-9) and moved.p == base.p
    flipped = match_and_score(CurveSet([Polyline(c.points[:, ::-1]) for c in gt]),
                              CurveSet([Polyline(c.points[::-1]) for c in rec]))
    assert flipped.E == pytest.approx(base.E, abs=1e-9)


def test_validation():
    with pytest.raises(ParameterError):
        match_and_score(CurveSet(), CurveSet())
    for kw in ({"neighborhood": 0}, {"sample_step": -1}, {"p_mode": "all"}):
        with pytest.raises(ParameterError):
            EvalConfig(**kw)


def test_l2_distance():
    u = np.zeros((4, 4))
    v = u.copy()
    v[1, 2] = 3.0
    assert l2_distance(u, u) == 0 and l2_distance(u, v) == 3.0
    with pytest.raises(ParameterError):
        l2_distance(u, np.zeros((3, 3)))


def test_snr_definition(rng):
    clean = np.zeros(1000)
    clean[::2] = 0.4  # std 0.2
    noise = np.where(np.arange(1000) % 4 < 2, 0.1, -0.1)  # std 0.1
    assert snr(clean, clean + noise) == pytest.approx(2.0)
    assert snr(clean, clean) == float("inf")


@pytest.mark.parametrize("target", [6.81, 6.40, 2.0])
def test_snr_round_trip(target):
    u, _ = gen_concentric(256)
    assert snr(u, add_noise(u, target, seed=3)) == pytest.approx(target, rel=0.01)
