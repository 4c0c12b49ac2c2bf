"""A vessel with a short occlusion.

A curved vessel has a 6 px stretch removed. A good enhancement filter keeps
the gap: the traced centerline should stop on both sides instead of being
joined across it. MAFOD uses per-pixel scales, so it diffuses along the
vessel but barely across the dark gap. At this noise level the Gaussian
scale-space filter keeps the gap too; its centerline is slightly less
accurate, and the overlays show where the two differ.

    python demos/occlusion.py --out demo_out
"""

import argparse
from pathlib import Path

import numpy as np

from mafod.baselines import multiscale_gaussian
from mafod.creases import extract_creases
from mafod.curves import CurveSet
from mafod.evaluate import EvalConfig, match_and_score, point_polyline_distance
from mafod.io import overlay_png, write_png
from mafod.scale_select import ScaleConfig
from mafod.solver import FedSchedule, L2Stopper, MafodParams, run_mafod
from mafod.synthgen import add_noise, gen_occluded_vessel
from mafod.tensor import DiffusivityConfig


def crosses_gap(chain, gt, tol=2.0, reach=10.0):
    ends = []
    for piece, tail in ((gt[0], True), (gt[1], False)):
        p = piece.points
        arc = np.concatenate([[0], np.cumsum(np.hypot(*np.diff(p, axis=0).T))])
        ends.append(p[(arc[-1] - arc if tail else arc) <= reach])
    return all(point_polyline_distance(e, chain.points).min() <= tol for e in ends)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    clean, gt = gen_occluded_vessel(128)
    noisy = add_noise(clean, 6.40, args.seed)
    write_png(out / "vessel_noisy.png", np.clip(noisy, 0, 1))

    params = MafodParams(ScaleConfig(sigmas=tuple(np.arange(1, 7) * 0.5), theta=0.35),
                         DiffusivityConfig(0.017))
    stop = L2Stopper(clean, patience=3).start(noisy)
    run_mafod(noisy, params, FedSchedule(20, 1000, 0.05), stop)

    for name, img in (("mafod", stop.best), ("multiscale-gaussian", multiscale_gaussian(noisy))):
        curves = CurveSet([c for c in extract_creases(img).of_kind("ridge") if c.length() >= 3])
        r = match_and_score(gt, curves, EvalConfig(neighborhood=6.0))
        joined = sum(crosses_gap(c, gt) for c in curves)
        print(f"{name:20s} {r.summary()}, chains across the gap: {joined}")
        overlay_png(out / f"vessel_{name}.png", img, curves, gt)
    print(f"overlays written to {out}")


if __name__ == "__main__":
    main()
