"""Shared fixtures and independent oracles for the test suite."""

import numpy as np

from mafod.evaluate import point_polyline_distance


def bars_image(widths=(1.0, 2.0, 4.0), centres=(20, 56, 100), shape=(128, 64)):
    """Horizontal Gaussian bars spanning the full width, one per (centre, width)."""
    y = np.arange(shape[0], dtype=float)[:, None] * np.ones((1, shape[1]))
    return sum(np.exp(-(y - c) ** 2 / (2 * w * w)) for c, w in zip(centres, widths))


def y_image(n=96):
    """Two thin branches joining a wider stem."""
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    c = (n / 2, n / 2)
    u = np.zeros(n * n)
    for a, b, w in (((n / 2, n - 1.0), c, 3.0), (c, (10.0, 8.0), 1.5),
                    (c, (n - 11.0, 8.0), 1.5)):
        d = point_polyline_distance(pts, np.array([a, b]))
        u = np.maximum(u, np.exp(-d ** 2 / (2 * w * w)))
    return u.reshape(n, n)


def cross_section_constancy(scale_map, result):
    """Fraction of segmented pixels whose own cross-section carries one value.

    The cross-section is traced exactly as described for the postprocessing
    (nearest pixel, unit steps, cap 2 sigma_max), but with plain loops.
    """
    seg = result.segmentation
    h, w = seg.shape
    cap = int(np.ceil(2 * result.sigmas[-1]))
    ok = total = 0
    for y, x in zip(*np.nonzero(seg)):
        e = result.cross_direction[y, x]
        vals = {scale_map[y, x]}
        for d in (1, -1):
            for k in range(1, cap + 1):
                qx, qy = int(np.rint(x + d * k * e[0])), int(np.rint(y + d * k * e[1]))
                if not (0 <= qx < w and 0 <= qy < h) or not seg[qy, qx]:
                    break
                vals.add(scale_map[qy, qx])
        total += 1
        ok += len(vals) == 1
    return ok / total


def oracle_vesselness_sweep(u, sigmas, beta=0.5, c_factor=0.5):
    """Brute-force scale selection built on scipy.ndimage and plain numpy.

    Returns the per-pixel argmax sigma and the max vesselness.
    """
    from scipy import ndimage as ndi

    best = np.full(u.shape, -1.0)
    arg = np.zeros(u.shape)
    for s in sigmas:
        us = ndi.gaussian_filter(u, s, mode="reflect", truncate=4.0) if s > 0 else u
        hxx = np.zeros_like(u)
        hyy = np.zeros_like(u)
        hxy = np.zeros_like(u)
        hxx[:, 1:-1] = us[:, 2:] - 2 * us[:, 1:-1] + us[:, :-2]
        hyy[1:-1] = us[2:] - 2 * us[1:-1] + us[:-2]
        hxy[1:-1, 1:-1] = (us[2:, 2:] + us[:-2, :-2] - us[2:, :-2] - us[:-2, 2:]) / 4
        v = np.zeros_like(u)
        n1s = np.zeros_like(u)
        n2s = np.zeros_like(u)
        for idx in np.ndindex(u.shape):
            ev = np.linalg.eigvalsh([[hxx[idx], hxy[idx]], [hxy[idx], hyy[idx]]])
            ev = sorted(ev, key=lambda t: (abs(t), t))
            n1s[idx], n2s[idx] = ev[0] * s * s, ev[1] * s * s
        c = c_factor * np.sqrt((n1s ** 2 + n2s ** 2).max())
        for idx in np.ndindex(u.shape):
            n1, n2 = n1s[idx], n2s[idx]
            if n2 < 0:
                v[idx] = (np.exp(-(n1 / n2) ** 2 / (2 * beta ** 2))
                          * (1 - np.exp(-(n1 ** 2 + n2 ** 2) / (2 * c * c))))
        better = v > best
        best[better] = v[better]
        arg[better] = s
    return arg, best


def dense_L(h, w, dx=1.0, dy=1.0):
    """Dense (4hw x hw) stacked stencil matrix from unit impulses."""
    from mafod.solver import apply_L

    cols = []
    for k in range(h * w):
        e = np.zeros(h * w)
        e[k] = 1.0
        cols.append(apply_L(e.reshape(h, w), dx, dy).reshape(-1))
    return np.array(cols).T


def block_diag_D(D):
    h, w = D.shape[:2]
    n = h * w
    out = np.zeros((4 * n, 4 * n))
    Df = D.reshape(n, 4, 4)
    for k in range(n):
        out[4 * k:4 * k + 4, 4 * k:4 * k + 4] = Df[k]
    return out


def random_tensor_field(rng, shape):
    from mafod.tensor import build_tensor

    theta = rng.uniform(0, np.pi, shape)
    e1 = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    e2 = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    mu1, mu2 = rng.random(shape), rng.random(shape)
    return build_tensor(e1, e2, (mu1, mu2, 0.5 * (mu1 + mu2), np.zeros(shape)))
