"""Synthetic test images with analytically known centerlines.

All structures use Gaussian cross-profiles, so the crest of each ridge is
exactly on its ground-truth curve. Noise uses numpy's Philox counter-based
generator, which gives bit-identical streams for a given seed on every
platform.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .curves import CurveSet, Polyline
from .grid import ParameterError

GT_STEP = 0.5


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


def gen_concentric(size=256, radii=(15.0, 35.0, 60.0), widths=(1.5, 3.0, 6.0), center=None):
    """Concentric bright rings; returns (image, ground-truth circles).

    ``center`` defaults to the middle of the image, ``(size - 1) / 2``.
    """
    if len(radii) != len(widths):
        raise ParameterError("radii and widths must have equal length")
    if any(r <= 0 for r in radii) or any(w <= 0 for w in widths):
        raise ParameterError("radii and widths must be positive")
    c = (size - 1) / 2.0 if center is None else center
    cx, cy = (c, c) if np.isscalar(c) else c
    for r, w in zip(radii, widths):
        if r + 3 * w > min(cx, cy, size - 1 - cx, size - 1 - cy):
            raise ParameterError(f"ring of radius {r} and width {w} does not fit")
    order = np.argsort(radii)
    for i, j in zip(order[:-1], order[1:]):
        gap = radii[j] - radii[i]
        # profile of ring i at the crest of ring j (and vice versa)
        overlap = max(np.exp(-gap ** 2 / (2 * widths[i] ** 2)),
                      np.exp(-gap ** 2 / (2 * widths[j] ** 2)))
        if overlap > 0.1:
            warnings.warn(f"rings {radii[i]} and {radii[j]} overlap ({overlap:.2f} of peak)")
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    r = np.hypot(x - cx, y - cy)
    u = np.zeros((size, size))
    curves = []
    for rad, w in zip(radii, widths):
        u += np.exp(-(r - rad) ** 2 / (2.0 * w ** 2))
        n = int(np.ceil(2 * np.pi * rad / GT_STEP))
        phi = 2 * np.pi * np.arange(n + 1) / n
        pts = np.stack([cx + rad * np.cos(phi), cy + rad * np.sin(phi)], axis=1)
        pts[-1] = pts[0]
        curves.append(Polyline(pts, "ridge"))
    return np.clip(u, 0.0, 1.0), CurveSet(curves)


def default_vessel_path(size):
    """A gently curved path crossing the image from left to right."""
    def path(s):
        x = 8.0 + s
        y = size / 2.0 + 0.18 * size * np.sin(2 * np.pi * s / (size - 16.0))
        return np.stack([x, y], axis=-1)
    return path, size - 16.0


def _sample_path(path, length, step):
    # resample by arc length using a fine parametric sampling
    t = np.linspace(0.0, length, int(np.ceil(length / 0.01)) + 1)
    p = path(t)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(p, axis=0).T))])
    s = np.arange(0.0, arc[-1] + 1e-9, step)
    xs = np.interp(s, arc, p[:, 0])
    ys = np.interp(s, arc, p[:, 1])
    return s, np.stack([xs, ys], axis=1)


def gen_occluded_vessel(size=128, path=None, width=1.5, occlusions=((60.0, 66.0),),
                        ramp=1.0):
    """Bright vessel along ``path`` with occluded arc-length intervals.

    ``path`` is ``(callable, parameter_length)``; the callable maps a
    parameter array to (x, y) points. Intervals in ``occlusions`` are in arc
    length along the path. Inside an interval the vessel is removed; the
    intensity recovers linearly over ``ramp`` pixels outside it. The ground
    truth excludes the occluded spans.
    """
    if path is None:
        path = default_vessel_path(size)
    fn, plen = path
    occ = sorted(tuple(map(float, o)) for o in occlusions)
    for (a0, a1), (b0, b1) in zip(occ[:-1], occ[1:]):
        if b0 < a1:
            raise ParameterError("occlusion intervals must be disjoint")
    s, pts = _sample_path(fn, plen, 0.05)
    if any(a < 0 or b > s[-1] or b <= a for a, b in occ):
        raise ParameterError("occlusion intervals must lie inside the path")
    tree = cKDTree(pts)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    dist, idx = tree.query(np.stack([x.ravel(), y.ravel()], axis=1))
    sp = s[idx]
    factor = np.ones_like(sp)
    for a, b in occ:
        gap = np.maximum(a - sp, sp - b)  # negative inside the interval
        factor = np.minimum(factor, np.clip(gap / ramp, 0.0, 1.0) if ramp > 0 else (gap > 0))
    u = (factor * np.exp(-dist ** 2 / (2.0 * width ** 2))).reshape(size, size)

    gs, gpts = _sample_path(fn, plen, GT_STEP)
    bounds = [0.0] + [v for o in occ for v in o] + [gs[-1]]
    curves = []
    for lo, hi in zip(bounds[0::2], bounds[1::2]):
        inner = (gs > lo) & (gs < hi)
        piece = [_point_at(fn, plen, lo)] + list(gpts[inner]) + [_point_at(fn, plen, hi)]
        curves.append(Polyline(np.array(piece), "ridge"))
    return u, CurveSet(curves)


def _point_at(fn, plen, arc):
    s, pts = _sample_path(fn, plen, 0.05)
    return np.array([np.interp(arc, s, pts[:, 0]), np.interp(arc, s, pts[:, 1])])


def add_noise(u, target_snr, seed=0):
    """Add i.i.d. Gaussian noise with std = std(u) / target_snr (no clamping)."""
    if not target_snr > 0:
        raise ParameterError("target_snr must be positive")
    u = np.asarray(u, dtype=np.float64)
    std = float(np.std(u)) / target_snr
    return u + std * rng_for(seed).standard_normal(u.shape)


def gen_trapezoid_1d(length=101, plateau=21, slope=0.05):
    """Symmetric trapezoid in [0, 1]: zero, linear ramps, plateau at 1.

    ``slope`` is the rise per sample; ``plateau`` the number of samples at 1.
    """
    ramp = int(np.ceil(1.0 / slope))
    if plateau < 0 or plateau + 2 * ramp > length:
        raise ParameterError("plateau and ramps do not fit into the signal")
    i = np.arange(length, dtype=np.float64)
    c = (length - 1) / 2.0
    half = (plateau - 1) / 2.0 if plateau > 0 else 0.0
    return np.clip(1.0 - slope * np.maximum(np.abs(i - c) - half, 0.0), 0.0, 1.0)


@dataclass
class SyntheticSpec:
    """JSON-serializable description of a synthetic experiment input."""
    kind: str = "concentric"
    size: int = 256
    radii: list = field(default_factory=lambda: [15.0, 35.0, 60.0])
    widths: list = field(default_factory=lambda: [1.5, 3.0, 6.0])
    occlusions: list = field(default_factory=lambda: [[60.0, 66.0]])
    width: float = 1.5
    length: int = 101
    plateau: int = 21
    slope: float = 0.05
    snr: float = 6.81
    seed: int = 0

    def generate(self):
        """Return (clean, noisy, ground truth); ground truth is None in 1-D."""
        if self.kind == "concentric":
            clean, gt = gen_concentric(self.size, self.radii, self.widths)
        elif self.kind == "occluded-vessel":
            clean, gt = gen_occluded_vessel(self.size, width=self.width,
                                            occlusions=self.occlusions)
        elif self.kind == "trapezoid-1d":
            clean, gt = gen_trapezoid_1d(self.length, self.plateau, self.slope), None
        else:
            raise ParameterError(f"unknown synthetic kind {self.kind!r}")
        return clean, add_noise(clean, self.snr, self.seed), gt
