"""Centerline accuracy metrics: Hausdorff matching, E and p, l2 and SNR."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .curves import CurveSet, Polyline
from .grid import ParameterError


@dataclass(frozen=True)
class EvalConfig:
    neighborhood: float = 6.0
    sample_step: float = 0.25
    # arc length of the ground-truth / reconstruction pieces that get matched;
    # None matches whole chains
    segment_length: float = None
    # "points": p is the matched fraction of ground-truth samples;
    # "segments": fraction of ground-truth segments with a match
    p_mode: str = "points"

    def __post_init__(self):
        if not self.neighborhood > 0:
            raise ParameterError("neighborhood must be positive")
        if not self.sample_step > 0:
            raise ParameterError("sample_step must be positive")
        if self.p_mode not in ("points", "segments"):
            raise ParameterError("p_mode must be 'points' or 'segments'")


@dataclass
class EvalResult:
    E: float
    p: float
    segments: list = field(default_factory=list)

    def summary(self):
        return f"E={self.E:.3f}, p={100 * self.p:.0f}%"

    def to_dict(self):
        return {"E": self.E, "p": self.p, "segments": self.segments}


def point_polyline_distance(points, vertices):
    """Distance of each point to the closest segment of a polyline."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    v = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if len(v) == 1:
        return np.hypot(*(pts - v[0]).T)
    a = v[:-1][None, :, :]
    ab = (v[1:] - v[:-1])[None, :, :]
    ap = pts[:, None, :] - a
    den = np.einsum("...i,...i->...", ab, ab)
    t = np.clip(np.einsum("...i,...i->...", ap, ab) / np.where(den > 0, den, 1.0), 0.0, 1.0)
    diff = ap - t[..., None] * ab
    return np.sqrt(np.einsum("...i,...i->...", diff, diff).min(axis=1))


def _points(c):
    return c.points if isinstance(c, Polyline) else np.asarray(c, dtype=np.float64)


def hausdorff(a, b, sample_step=0.25):
    """Symmetric Hausdorff distance between two polylines.

    Each polyline is densified to ``sample_step`` and measured against the
    exact segments of the other one.
    """
    pa, pb = Polyline(_points(a)), Polyline(_points(b))
    if len(pa) == 0 or len(pb) == 0:
        raise ParameterError("polylines must be non-empty")
    da = point_polyline_distance(pa.densify(sample_step), pb.points).max()
    db = point_polyline_distance(pb.densify(sample_step), pa.points).max()
    return float(max(da, db))


def _pieces(curves, length):
    out = []
    for c in curves:
        if len(c) >= 2:
            out.extend(c.split(length))
        elif len(c) == 1:
            out.append(c)
    return out


def match_and_score(gt: CurveSet, rec: CurveSet, cfg: EvalConfig = EvalConfig()) -> EvalResult:
    """Match every ground-truth segment to its Hausdorff-closest reconstruction.

    Candidates are reconstructed segments with any sample within
    ``cfg.neighborhood`` of the ground-truth segment's samples. E is the mean
    distance of matched ground-truth samples to their matched segment; p is
    the fraction of ground-truth samples (or segments) that got a match.
    """
    gt_pieces = _pieces(gt, cfg.segment_length)
    if not gt_pieces:
        raise ParameterError("ground truth is empty")
    rec_pieces = _pieces(rec, cfg.segment_length)
    rec_samples = [p.densify(cfg.sample_step) for p in rec_pieces]
    if rec_samples:
        owner = np.concatenate([np.full(len(s), i) for i, s in enumerate(rec_samples)])
        tree = cKDTree(np.vstack(rec_samples))
    table = []
    dist_sum = 0.0
    n_matched = n_total = 0
    seg_matched = 0
    for gi, g in enumerate(gt_pieces):
        samples = g.densify(cfg.sample_step)
        if len(g) >= 2:
            # do not double count the shared endpoint of consecutive pieces
            samples = samples[1:] if gi and np.array_equal(g.points[0], gt_pieces[gi - 1].points[-1]) else samples
        n_total += len(samples)
        row = {"gt_segment": gi, "n_samples": int(len(samples)), "match": None,
               "hausdorff": None, "mean_distance": None}
        if rec_samples:
            hits = tree.query_ball_point(samples, cfg.neighborhood)
            cand = sorted({int(owner[j]) for h in hits for j in h})
            if cand:
                hd = [hausdorff(g, rec_pieces[c], cfg.sample_step) for c in cand]
                best = cand[int(np.argmin(hd))]
                dist = point_polyline_distance(samples, rec_pieces[best].points)
                dist_sum += float(dist.sum())
                n_matched += len(samples)
                seg_matched += 1
                row.update(match=best, hausdorff=float(min(hd)),
                           mean_distance=float(dist.mean()))
        table.append(row)
    E = dist_sum / n_matched if n_matched else float("inf")
    if cfg.p_mode == "points":
        p = n_matched / n_total
    else:
        p = seg_matched / len(gt_pieces)
    return EvalResult(E, p, table)


def l2_distance(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ParameterError(f"shape mismatch {u.shape} vs {v.shape}")
    return float(np.sqrt(np.sum((u - v) ** 2)))


def snr(clean, noisy):
    """std(clean) / std(noisy - clean); infinite when there is no noise."""
    clean = np.asarray(clean, dtype=np.float64)
    noisy = np.asarray(noisy, dtype=np.float64)
    if clean.shape != noisy.shape:
        raise ParameterError(f"shape mismatch {clean.shape} vs {noisy.shape}")
    noise = float(np.std(noisy - clean))
    if noise == 0.0:
        return float("inf")
    return float(np.std(clean)) / noise
