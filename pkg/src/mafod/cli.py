"""Command-line front end: generate, filter, extract, evaluate, pipeline.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io as mio
from .evaluate import EvalConfig, match_and_score
from .grid import NumericalError, ParameterError
from .pipeline import (METHODS, ExperimentConfig, ExtractConfig, FilterConfig, extract,
                       filter_image, load_curves, parse_sigmas, run_experiment)
from .synthgen import SyntheticSpec

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

EPILOG = "exit codes: 0 success, 2 usage/config error, 3 numerical failure (non-finite values)"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CREASE_THREADS")
    try:
        return int(env) if env else 1
    except ValueError:
        raise UsageError(f"CREASE_THREADS must be an integer, got {env!r}")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})")


def cmd_generate(args):
    spec = _read_json(args.spec)
    if not isinstance(spec, dict):
        raise UsageError(f"{args.spec}: expected a JSON object")
    if args.snr is not None:
        spec["snr"] = args.snr
    if args.seed is not None:
        spec["seed"] = args.seed
    try:
        clean, noisy, gt = SyntheticSpec(**spec).generate()
    except TypeError as exc:
        raise UsageError(f"{args.spec}: {exc}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if clean.ndim == 1:
        clean, noisy = clean[None, :], noisy[None, :]
    mio.write_sf2d(out / "clean.sf2d", clean)
    mio.write_sf2d(out / "noisy.sf2d", noisy)
    mio.write_png(out / "clean.png", clean)
    mio.write_png(out / "noisy.png", noisy)
    if gt is not None:
        (out / "gt.json").write_text(gt.to_json())
    print(f"wrote {out}/clean.*, noisy.*" + (", gt.json" if gt is not None else ""))


def _filter_config(args):
    fields = {}
    for name in ("method", "lam", "T", "M", "tau_max", "theta", "beta", "rho", "polarity",
                 "mode", "tau", "steps", "ifod_sigma", "gamma", "t_max", "post_sigma",
                 "sigma_spatial", "sigma_range", "sigma", "patience"):
        v = getattr(args, name, None)
        if v is not None:
            fields[name] = v
    if args.sigmas is not None:
        fields["sigmas"] = parse_sigmas(args.sigmas)
    return FilterConfig(**fields)


def cmd_filter(args):
    cfg = _filter_config(args)
    u = mio.read_image(args.input)
    ref = mio.read_image(args.reference) if args.reference else None
    observer = None
    if args.snapshot_every:
        snap = Path(args.snapshot_dir or Path(args.out).parent / "snapshots")
        snap.mkdir(parents=True, exist_ok=True)

        def observer(k, t, v):
            if k % args.snapshot_every == 0:
                mio.write_sf2d(snap / f"k{k:06d}.sf2d", v)
                mio.write_png(snap / f"k{k:06d}.png", v)
            return False
    res = filter_image(u, cfg, ref, observer)
    mio.write_image(args.out, res.image)
    if args.scale_map_out and res.scale_map is not None:
        mio.write_image(args.scale_map_out, res.scale_map)
    print(json.dumps(res.info, sort_keys=True))


def cmd_extract(args):
    u = mio.read_image(args.input)
    smap = mio.read_image(args.scale_map) if args.scale_map else None
    cfg = ExtractConfig(sigma=args.sigma, use_scale_map=smap is not None,
                        strength_threshold=args.strength_threshold, method=args.method,
                        min_length=args.min_length, kind=args.kind)
    curves = extract(u, cfg, smap)
    Path(args.out).write_text(curves.to_csv() if args.out.endswith(".csv") else curves.to_json())
    if args.overlay:
        gt = load_curves(args.gt) if args.gt else ()
        mio.overlay_png(args.overlay, u, curves, gt)
    print(f"{len(curves)} curves")


def cmd_evaluate(args):
    gt, rec = load_curves(args.gt), load_curves(args.rec)
    cfg = EvalConfig(neighborhood=args.neighborhood, sample_step=args.sample_step,
                     segment_length=args.segment_length, p_mode=args.p_mode)
    res = match_and_score(gt, rec, cfg)
    if args.out:
        report = res.to_dict()
        report["summary"] = res.summary()
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(res.summary())


def cmd_pipeline(args):
    cfg = ExperimentConfig.from_dict(_read_json(args.config))
    cfg.threads = _threads(args)
    manifest = run_experiment(cfg, args.out)
    m = manifest["metrics"]
    print(f"E={m['E']:.3f}, p={100 * m['p']:.0f}%" if m else f"{manifest['n_curves']} curves")


def build_parser():
    p = _Parser(prog="mafod", description=__doc__.splitlines()[0], epilog=EPILOG)
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (falls back to $CREASE_THREADS, default 1)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="synthesize a test image", epilog=EPILOG)
    g.add_argument("--spec", required=True, help="JSON synthetic spec")
    g.add_argument("--snr", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("filter", help="run MAFOD or a baseline filter", epilog=EPILOG)
    f.add_argument("--input", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--method", default="mafod", help=f"one of {', '.join(METHODS)}")
    f.add_argument("--lambda", dest="lam", type=float)
    f.add_argument("--T", type=float)
    f.add_argument("--M", type=int)
    f.add_argument("--tau-max", dest="tau_max", type=float)
    f.add_argument("--sigmas", help="start:step:end or comma list")
    f.add_argument("--theta", type=float)
    f.add_argument("--beta", type=float)
    f.add_argument("--rho", type=float)
    f.add_argument("--polarity", choices=("ridges", "valleys"))
    f.add_argument("--mode", choices=("both", "ridges", "valleys"))
    f.add_argument("--tau", type=float, help="explicit step of the fourth-order baseline")
    f.add_argument("--steps", type=int)
    f.add_argument("--ifod-sigma", dest="ifod_sigma", type=float)
    f.add_argument("--gamma", type=float)
    f.add_argument("--t-max", dest="t_max", type=int)
    f.add_argument("--post-sigma", dest="post_sigma", type=float)
    f.add_argument("--sigma-spatial", dest="sigma_spatial", type=float)
    f.add_argument("--sigma-range", dest="sigma_range", type=float)
    f.add_argument("--sigma", type=float, help="width of the plain Gaussian filter")
    f.add_argument("--reference", help="clean image enabling l2 early stopping")
    f.add_argument("--patience", type=int)
    f.add_argument("--snapshot-every", dest="snapshot_every", type=int, default=0)
    f.add_argument("--snapshot-dir", dest="snapshot_dir")
    f.add_argument("--scale-map-out", dest="scale_map_out")
    f.set_defaults(func=cmd_filter)

    e = sub.add_parser("extract", help="trace ridge/valley polylines", epilog=EPILOG)
    e.add_argument("--input", required=True)
    e.add_argument("--scale-map", dest="scale_map")
    e.add_argument("--sigma", type=float, default=1.0)
    e.add_argument("--strength-threshold", dest="strength_threshold", type=float, default=1e-4)
    e.add_argument("--method", choices=("oriented", "det"), default="oriented")
    e.add_argument("--min-length", dest="min_length", type=float, default=0.0)
    e.add_argument("--kind", choices=("ridge", "valley", "both"), default="both")
    e.add_argument("--out", required=True, help="curves .json or .csv")
    e.add_argument("--overlay", help="PNG with curves drawn in blue")
    e.add_argument("--gt", help="ground-truth curves drawn in red on the overlay")
    e.set_defaults(func=cmd_extract)

    v = sub.add_parser("evaluate", help="score curves against ground truth", epilog=EPILOG)
    v.add_argument("--gt", required=True)
    v.add_argument("--rec", required=True)
    v.add_argument("--neighborhood", type=float, default=6.0)
    v.add_argument("--sample-step", dest="sample_step", type=float, default=0.25)
    v.add_argument("--segment-length", dest="segment_length", type=float, default=None)
    v.add_argument("--p-mode", dest="p_mode", choices=("points", "segments"), default="points")
    v.add_argument("--out", help="metrics JSON")
    v.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("pipeline", help="run a full experiment from a JSON config",
                        epilog=EPILOG)
    pl.add_argument("--config", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr)
    try:
        _threads(args)
        args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ParameterError, mio.FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
