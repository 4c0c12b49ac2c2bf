"""Sub-pixel ridge and valley extraction.

Creases lie on the zero level set of ``d = det(g | Hg)``, the determinant of
the matrix whose columns are the gradient and the Hessian-gradient product.
This set is a superset of the creases: ``d`` also vanishes where the
gradient points across the crease. Zero crossings are traced with marching
squares and then filtered: a point is kept only if the eigenvector most
orthogonal to the gradient belongs to the eigenvalue of largest magnitude,
that eigenvalue is strong enough, and its sign gives the kind (negative =
ridge, positive = valley).

For rotationally symmetric structures ``d`` is zero on whole annuli and its
sign is set by noise, so the default tracer follows the zeros of the
gradient component along the major eigenvector instead, with eigenvector
signs reconciled edge by edge.
"""

import numpy as np

from .curves import CurveSet, Polyline
from .grid import ParameterError, as_field, gaussian_smooth, gradient, hessian
from .scale_select import hessian_eigen


def crease_derivatives(u, sigma=1.0):
    """Gradient and Hessian of ``u`` smoothed at a scalar or per-pixel sigma."""
    u = as_field(u)
    smap = np.asarray(sigma, dtype=np.float64)
    if smap.ndim == 0:
        us = gaussian_smooth(u, float(smap))
        return gradient(us), hessian(us)
    if smap.shape != u.shape:
        raise ParameterError("scale map shape does not match the image")
    fields = [np.zeros(u.shape) for _ in range(5)]
    for s in np.unique(smap):
        mask = smap == s
        us = gaussian_smooth(u, float(s))
        g, h = gradient(us), hessian(us)
        for f, src in zip(fields, (g.x, g.y, h.xx, h.xy, h.yy)):
            f[mask] = src[mask]
    gx, gy, hxx, hxy, hyy = fields
    return (gx, gy), (hxx, hxy, hyy)


def crease_field(u, sigma=1.0):
    """``d = g_x (Hg)_y - g_y (Hg)_x`` with derivatives of ``u_sigma``."""
    (gx, gy), (hxx, hxy, hyy) = crease_derivatives(u, sigma)
    return _det(gx, gy, hxx, hxy, hyy)


def _det(gx, gy, hxx, hxy, hyy):
    hgx = hxx * gx + hxy * gy
    hgy = hxy * gx + hyy * gy
    return gx * hgy - gy * hgx


def _cell_index(h, w):
    ys, xs = np.mgrid[2:h - 3, 2:w - 3]
    return ys.ravel(), xs.ravel()


def _segments_from_flags(h, w, hcross, vcross, centre_joined):
    """Marching-squares segments as pairs of edge ids.

    Only cells whose corners lie at least two pixels inside the image are
    used: second derivatives vanish by construction on the outer ring, and
    the mirrored border folds produce spurious creases on the next one.
    ``centre_joined(ys, xs)`` decides saddle cells: True connects the
    top-left and bottom-right corners' regions through the cell centre.
    Cells with an odd number of crossings (orientation singularities) are
    skipped.
    """
    hid = lambda y, x: y * w + x
    vid = lambda y, x: h * w + y * w + x
    ys, xs = _cell_index(h, w)
    top = hcross[ys, xs]
    right = vcross[ys, xs + 1]
    bottom = hcross[ys + 1, xs]
    left = vcross[ys, xs]
    ncross = top.astype(int) + right + bottom + left
    e_top, e_right = hid(ys, xs), vid(ys, xs + 1)
    e_bottom, e_left = hid(ys + 1, xs), vid(ys, xs)

    two = ncross == 2
    edges = np.stack([e_top, e_right, e_bottom, e_left], axis=1)[two]
    flags = np.stack([top, right, bottom, left], axis=1)[two]
    segs = [edges[flags].reshape(-1, 2)]

    four = ncross == 4
    if four.any():
        joined = centre_joined(ys[four], xs[four])
        t, r, b, l = e_top[four], e_right[four], e_bottom[four], e_left[four]
        segs.append(np.stack([np.where(joined, t, l), np.where(joined, r, t)], axis=1))
        segs.append(np.stack([np.where(joined, b, r), np.where(joined, l, b)], axis=1))
    return np.vstack(segs)


def _edge_endpoints(edge_ids, h, w):
    e = np.asarray(edge_ids)
    vert = e >= h * w
    k = np.where(vert, e - h * w, e)
    y, x = np.divmod(k, w)
    p0 = y * w + x
    p1 = np.where(vert, (y + 1) * w + x, y * w + x + 1)
    return vert, y, x, p0, p1


def _edge_points(edge_ids, q0, q1, h, w):
    """Interpolated zero crossing of each edge given its end values."""
    vert, y, x, p0, p1 = _edge_endpoints(edge_ids, h, w)
    t = q0 / (q0 - q1)
    px = x + np.where(vert, 0.0, t)
    py = y + np.where(vert, t, 0.0)
    return p0, p1, t, np.stack([px, py], axis=1)


def _scalar_contour(d):
    """Zero contour of a scalar field: segments and node geometry."""
    h, w = d.shape
    pos = d > 0
    hcross = pos[:, :-1] != pos[:, 1:]
    vcross = pos[:-1, :] != pos[1:, :]

    def centre_joined(ys, xs):
        centre = (d[ys, xs] + d[ys, xs + 1] + d[ys + 1, xs + 1] + d[ys + 1, xs]) > 0
        return centre == pos[ys, xs]

    segments = _segments_from_flags(h, w, hcross, vcross, centre_joined)
    nodes, inverse = np.unique(segments, return_inverse=True)
    _, _, _, p0, p1 = _edge_endpoints(nodes, h, w)
    flat = d.ravel()
    return (nodes, inverse.reshape(-1, 2)) + _edge_points(nodes, flat[p0], flat[p1], h, w)


def _oriented_contour(gx, gy, ex, ey):
    """Zero contour of ``g . e`` for a sign-ambiguous direction field ``e``.

    Along each edge the far end's direction is flipped to agree with the
    near end before testing for a sign change, so the result does not depend
    on the arbitrary sign of the eigenvectors.
    """
    h, w = gx.shape
    q = gx * ex + gy * ey

    def edge_test(sl0, sl1):
        flip = np.where(ex[sl0] * ex[sl1] + ey[sl0] * ey[sl1] < 0, -1.0, 1.0)
        q1 = flip * q[sl1]
        return (q[sl0] > 0) != (q1 > 0), q1

    hcross, _ = edge_test((slice(None), slice(0, -1)), (slice(None), slice(1, None)))
    vcross, _ = edge_test((slice(0, -1), slice(None)), (slice(1, None), slice(None)))

    def oriented(ys, xs, oy, ox):
        s = np.sign(ex[ys, xs] * ex[ys + oy, xs + ox] + ey[ys, xs] * ey[ys + oy, xs + ox])
        return np.where(s < 0, -1.0, 1.0) * q[ys + oy, xs + ox]

    def centre_joined(ys, xs):
        centre = (q[ys, xs] + oriented(ys, xs, 0, 1) + oriented(ys, xs, 1, 1)
                  + oriented(ys, xs, 1, 0)) > 0
        return centre == (q[ys, xs] > 0)

    segments = _segments_from_flags(h, w, hcross, vcross, centre_joined)
    nodes, inverse = np.unique(segments, return_inverse=True)
    _, _, _, p0, p1 = _edge_endpoints(nodes, h, w)
    exf, eyf, qf = ex.ravel(), ey.ravel(), q.ravel()
    flip = np.where(exf[p0] * exf[p1] + eyf[p0] * eyf[p1] < 0, -1.0, 1.0)
    return (nodes, inverse.reshape(-1, 2)) + _edge_points(nodes, qf[p0], flip * qf[p1], h, w)


def _link(segments):
    """Chain segments (pairs of node ids) into node sequences."""
    adj = {}
    for a, b in segments.tolist():
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = set()
    chains = []

    def walk(start):
        chain = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [n for n in adj[cur] if n != prev]
            if not nxt:
                return chain
            n = nxt[0]
            if n == start:
                chain.append(start)
                return chain
            if n in seen:
                return chain
            chain.append(n)
            seen.add(n)
            prev, cur = cur, n

    for node in sorted(adj):
        if node not in seen and len(adj[node]) == 1:
            chains.append(walk(node))
    for node in sorted(adj):
        if node not in seen:
            chains.append(walk(node))
    return chains


def _classify(p0, p1, t, derivs, threshold, check_alignment=True):
    """Keep flag, kind (+1 valley / -1 ridge) and strength per crossing."""
    (gx, gy), hs = derivs

    def interp(f):
        f = f.ravel()
        return f[p0] + t * (f[p1] - f[p0])

    ix, iy = interp(gx), interp(gy)
    hxx, hxy, hyy = (interp(f) for f in hs)
    nu1, e1, nu2, e2 = hessian_eigen(hxx, hxy, hyy)
    along = np.abs(ix * e1[:, 0] + iy * e1[:, 1])
    across = np.abs(ix * e2[:, 0] + iy * e2[:, 1])
    keep = (np.abs(nu2) >= threshold) & (nu2 != 0)
    if check_alignment:
        keep &= across <= along
    return keep, np.sign(nu2), np.abs(nu2)


def marching_squares(d, u, sigma=1.0, strength_threshold=1e-4, derivs=None):
    """Trace the zero set of ``d`` and keep the parts that are creases of ``u``.

    ``sigma`` (scalar or per-pixel map) is the derivative scale used to
    classify crossing points; pass ``derivs`` to reuse precomputed
    derivatives from :func:`crease_derivatives`.
    """
    d = as_field(d, "d")
    if min(d.shape) < 2:
        raise ParameterError("crease field must be at least 2x2")
    if derivs is None:
        derivs = crease_derivatives(u, sigma)
    if min(d.shape) < 4:
        return CurveSet()
    return _trace(_scalar_contour(d), derivs, strength_threshold, True)


def _trace(contour, derivs, threshold, check_alignment):
    nodes, segments, p0, p1, t, xy = contour
    if len(segments) == 0:
        return CurveSet()
    keep, kind, strength = _classify(p0, p1, t, derivs, threshold, check_alignment)
    curves = []
    for chain in _link(segments):
        closed = len(chain) > 2 and chain[0] == chain[-1]
        idx = chain[:-1] if closed else chain
        ok = keep[idx]
        sig = kind[idx]
        if closed and ok.all() and np.all(sig == sig[0]):
            curves.append(_polyline(chain, xy, sig[0], strength))
            continue
        if closed:
            # start at a break so that runs do not wrap around
            brk = np.nonzero(~ok | (sig != np.roll(sig, 1)))[0]
            start = int(brk[0]) if brk.size else 0
            idx = idx[start:] + idx[:start] + [idx[start]]
            ok = keep[idx]
            sig = kind[idx]
        run = []
        for j, node in enumerate(idx):
            if ok[j] and (not run or sig[j] == kind[run[-1]]):
                run.append(node)
                continue
            if len(run) >= 2:
                curves.append(_polyline(run, xy, kind[run[0]], strength))
            run = [node] if ok[j] else []
        if len(run) >= 2:
            curves.append(_polyline(run, xy, kind[run[0]], strength))
    return CurveSet([c for c in curves if len(c) >= 2])


def _polyline(nodes, xy, sign, strength):
    pts = xy[nodes]
    # crossings that fall exactly on a shared pixel give repeated vertices
    dup = np.zeros(len(pts), dtype=bool)
    dup[1:] = np.all(pts[1:] == pts[:-1], axis=1)
    return Polyline(pts[~dup], "ridge" if sign < 0 else "valley",
                    float(strength[nodes].mean()))


def extract_creases(u, scale_map=None, sigma=1.0, strength_threshold=1e-4,
                    method="oriented", min_length=0.0):
    """Crease polylines of a filtered image at per-pixel or uniform scale.

    ``method="oriented"`` traces zeros of ``g . e`` where ``e`` is the
    eigenvector of the largest-magnitude Hessian eigenvalue; this is the part
    of the ``d = 0`` set where the gradient runs along the crease, and it
    stays well defined for rotationally symmetric profiles where ``d``
    vanishes identically. ``method="det"`` traces ``d`` itself. Chains
    shorter than ``min_length`` pixels are dropped.
    """
    u = as_field(u)
    if method not in ("oriented", "det"):
        raise ParameterError(f"unknown crease method {method!r}")
    scale = sigma if scale_map is None else scale_map
    derivs = crease_derivatives(u, scale)
    (gx, gy), hs = derivs
    if method == "det":
        curves = marching_squares(_det(gx, gy, *hs), u, scale, strength_threshold, derivs)
    elif min(u.shape) < 4:
        curves = CurveSet()
    else:
        _, _, _, e2 = hessian_eigen(*hs)
        contour = _oriented_contour(gx, gy, e2[..., 0], e2[..., 1])
        # on this contour the gradient is along the crease by construction
        curves = _trace(contour, derivs, strength_threshold, False)
    if min_length > 0:
        curves = CurveSet([c for c in curves if c.length() >= min_length])
    return curves
