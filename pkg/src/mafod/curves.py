"""Polylines and curve sets with JSON/CSV serialization."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

KINDS = ("ridge", "valley")


@dataclass
class Polyline:
    """Ordered vertex chain with (x, y) sub-pixel coordinates."""
    points: np.ndarray
    kind: str = "ridge"
    strength: float = 0.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)

    def __len__(self):
        return len(self.points)

    @property
    def closed(self):
        return len(self.points) > 2 and np.array_equal(self.points[0], self.points[-1])

    def length(self):
        return float(np.hypot(*np.diff(self.points, axis=0).T).sum())

    def densify(self, step=0.25):
        """Points along the chain, at most ``step`` apart, vertices included."""
        p = self.points
        if len(p) < 2:
            return p.copy()
        out = [p[:1]]
        for a, b in zip(p[:-1], p[1:]):
            n = max(int(np.ceil(np.hypot(*(b - a)) / step)), 1)
            t = np.arange(1, n + 1)[:, None] / n
            out.append(a + t * (b - a))
        return np.vstack(out)

    def split(self, piece_length):
        """Cut into consecutive sub-chains of about ``piece_length`` arc length."""
        p = self.points
        if len(p) < 2 or piece_length is None or piece_length <= 0:
            return [self]
        seg = np.hypot(*np.diff(p, axis=0).T)
        total = seg.sum()
        n = max(int(round(total / piece_length)), 1)
        if n == 1:
            return [self]
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        cuts = np.linspace(0.0, total, n + 1)
        pieces = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            inner = (arc > lo) & (arc < hi)
            pts = np.vstack([_at_arc(p, arc, lo), p[inner], _at_arc(p, arc, hi)])
            pieces.append(Polyline(pts, self.kind, self.strength))
        return pieces

    def to_dict(self):
        return {"kind": self.kind, "points": self.points.tolist()}


def _at_arc(p, arc, s):
    i = int(np.clip(np.searchsorted(arc, s, side="right") - 1, 0, len(p) - 2))
    seg = arc[i + 1] - arc[i]
    t = 0.0 if seg == 0 else (s - arc[i]) / seg
    return (p[i] + t * (p[i + 1] - p[i]))[None, :]


@dataclass
class CurveSet:
    curves: list = field(default_factory=list)

    def __len__(self):
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def __getitem__(self, i):
        return self.curves[i]

    def of_kind(self, kind):
        return CurveSet([c for c in self.curves if c.kind == kind])

    def to_json(self):
        return json.dumps({"curves": [c.to_dict() for c in self.curves]})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls([Polyline(c["points"], c.get("kind", "ridge"), c.get("strength", 0.0))
                    for c in data["curves"]])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["curve_id", "kind", "x", "y"])
        for i, c in enumerate(self.curves):
            for x, y in c.points:
                w.writerow([i, c.kind, repr(float(x)), repr(float(y))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = {}
        for row in csv.DictReader(io.StringIO(text)):
            cid = int(row["curve_id"])
            kind, pts = rows.setdefault(cid, (row["kind"], []))
            pts.append((float(row["x"]), float(row["y"])))
        return cls([Polyline(pts, kind) for _, (kind, pts) in sorted(rows.items())])
