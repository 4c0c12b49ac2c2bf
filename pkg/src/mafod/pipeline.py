"""Experiment configuration, filter dispatch and end-to-end runs.

An experiment is fully described by one JSON document (see
:class:`ExperimentConfig`); :func:`run_experiment` writes the images,
curves and metrics it produces plus a manifest echoing every parameter.
"""

import dataclasses
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as mio
from .baselines import (RidgeStrengthConfig, bilateral, ifod_step, multiscale_gaussian,
                        pm_second_order_step)
from .creases import extract_creases
from .curves import CurveSet
from .evaluate import EvalConfig, l2_distance, match_and_score, snr
from .grid import ParameterError, as_field, gaussian_smooth
from .scale_select import ScaleConfig
from .solver import FedSchedule, L2Stopper, MafodParams, run_mafod, scale_map_for
from .synthgen import SyntheticSpec
from .tensor import DiffusivityConfig

log = logging.getLogger(__name__)

METHODS = ("mafod", "ifod", "multiscale-gaussian", "bilateral", "pm2", "gaussian", "none")


def parse_sigmas(text):
    """``"0.5:0.5:9.0"`` (inclusive range) or ``"0.5,1,2"``."""
    if isinstance(text, (list, tuple)):
        return tuple(float(s) for s in text)
    text = str(text).strip()
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ParameterError("sigma range step must be positive")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 10) for i in range(n))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ParameterError(f"cannot parse sigma list {text!r}") from exc


@dataclass
class FilterConfig:
    method: str = "mafod"
    # MAFOD
    lam: float = 0.005
    T: float = 500.0
    M: int = 10000
    tau_max: float = 0.05
    sigmas: tuple = ScaleConfig().sigmas
    theta: float = 0.2
    beta: float = 0.5
    rho: float = 0.5
    polarity: str = "ridges"
    mode: str = "both"
    # explicit baselines: step size, step cap, IFOD pre-smoothing
    tau: float = 0.03
    steps: int = 20000
    ifod_sigma: float = 1.0
    pm_tau: float = 0.2
    # ridge-strength scale selection
    gamma: float = 0.75
    t_max: int = 30
    post_sigma: float = 0.0
    # bilateral / plain Gaussian
    sigma_spatial: float = 3.0
    sigma_range: float = 1.0
    sigma: float = 1.25
    # l2 early stopping against a reference (patience in cycles or steps)
    early_stop: bool = True
    patience: int = 3

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown filter {self.method!r}; choose from {', '.join(METHODS)}")
        self.sigmas = parse_sigmas(self.sigmas)

    def mafod_params(self):
        return MafodParams(
            ScaleConfig(sigmas=self.sigmas, beta=self.beta, theta=self.theta,
                        polarity=self.polarity),
            DiffusivityConfig(self.lam, self.mode), rho=self.rho)

    def schedule(self):
        return FedSchedule(self.T, int(self.M), self.tau_max)


@dataclass
class ExtractConfig:
    sigma: float = 1.0
    use_scale_map: bool = False
    strength_threshold: float = 1e-4
    method: str = "oriented"
    min_length: float = 0.0
    kind: str = "ridge"   # ridge | valley | both


@dataclass
class ExperimentConfig:
    synthetic: dict = None
    image: str = None
    reference: str = None
    gt: str = None
    filter: FilterConfig = field(default_factory=FilterConfig)
    extract: ExtractConfig = field(default_factory=ExtractConfig)
    evaluate: dict = field(default_factory=dict)
    threads: int = 1

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        try:
            d["filter"] = FilterConfig(**d.get("filter", {}))
            d["extract"] = ExtractConfig(**d.get("extract", {}))
        except TypeError as exc:
            raise ParameterError(str(exc)) from exc
        cfg = cls(**d)
        if (cfg.synthetic is None) == (cfg.image is None):
            raise ParameterError("config needs exactly one of 'synthetic' or 'image'")
        cfg.eval_config()
        return cfg

    def eval_config(self):
        try:
            return EvalConfig(**self.evaluate)
        except TypeError as exc:
            raise ParameterError(str(exc)) from exc

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["filter"]["sigmas"] = list(self.filter.sigmas)
        return d


@dataclass
class FilterResult:
    image: np.ndarray
    info: dict
    scale_map: np.ndarray = None


def _stepper(u, step, steps, observer):
    for k in range(1, steps + 1):
        u = step(u)
        if observer is not None and observer(k, u):
            break
    return u


def filter_image(u, cfg: FilterConfig, reference=None, observer=None):
    """Run the configured filter; with a reference, keep the l2-best iterate.

    ``observer(k, t, u)`` is called after every MAFOD cycle or baseline step.
    """
    u = as_field(u)
    info = {"method": cfg.method}
    stopper = None
    if reference is not None and cfg.early_stop:
        stopper = L2Stopper(reference, cfg.patience, chain=observer).start(u)
    watch = stopper or observer
    smap = None

    if cfg.method == "mafod":
        params, sched = cfg.mafod_params(), cfg.schedule()
        info.update(n_substeps=sched.n, taus=list(sched.taus))
        out = run_mafod(u, params, sched, watch)
        if stopper is not None:
            out = stopper.best
        smap = scale_map_for(out, params)
    elif cfg.method in ("ifod", "pm2"):
        if cfg.method == "ifod":
            tau = cfg.tau
            step = lambda v: ifod_step(v, cfg.lam, tau, cfg.ifod_sigma)
        else:
            tau = cfg.pm_tau
            step = lambda v: pm_second_order_step(v, cfg.lam, tau)
        cb = None if watch is None else (lambda k, v: watch(k, k * tau, v))
        out = _stepper(u, step, cfg.steps, cb)
        if stopper is not None:
            out = stopper.best
    elif cfg.method == "multiscale-gaussian":
        rcfg = RidgeStrengthConfig(cfg.gamma, tuple(range(1, cfg.t_max + 1)), cfg.post_sigma)
        out, smap = multiscale_gaussian(u, rcfg, return_scales=True)
    elif cfg.method == "bilateral":
        out = bilateral(u, cfg.sigma_spatial, cfg.sigma_range)
    elif cfg.method == "gaussian":
        out = gaussian_smooth(u, cfg.sigma)
    else:
        out = u.copy()

    if stopper is not None:
        info.update(best_k=stopper.best_k, best_t=stopper.best_t, best_l2=stopper.best_l2)
    if reference is not None:
        info["l2_in"] = l2_distance(u, reference)
        info["l2_out"] = l2_distance(out, reference)
    return FilterResult(out, info, smap)


def extract(u, cfg: ExtractConfig, scale_map=None):
    curves = extract_creases(u, scale_map if cfg.use_scale_map else None, cfg.sigma,
                             cfg.strength_threshold, cfg.method, cfg.min_length)
    return curves if cfg.kind == "both" else curves.of_kind(cfg.kind)


def _json_dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_curves(path):
    text = Path(path).read_text()
    return CurveSet.from_csv(text) if str(path).endswith(".csv") else CurveSet.from_json(text)


def run_experiment(cfg: ExperimentConfig, out_dir):
    """Generate or load the input, filter, extract, evaluate; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timing = {}
    gt = None

    t0 = time.perf_counter()
    if cfg.synthetic is not None:
        spec = SyntheticSpec(**cfg.synthetic)
        clean, noisy, gt = spec.generate()
        if clean.ndim != 2:
            raise ParameterError("pipeline runs need a 2-D synthetic image")
        reference = clean
        mio.write_sf2d(out / "clean.sf2d", clean)
        mio.write_png(out / "clean.png", clean)
        mio.write_sf2d(out / "noisy.sf2d", noisy)
        mio.write_png(out / "noisy.png", noisy)
        (out / "gt.json").write_text(gt.to_json())
    else:
        noisy = mio.read_image(cfg.image)
        reference = mio.read_image(cfg.reference) if cfg.reference else None
        if cfg.gt:
            gt = load_curves(cfg.gt)
    timing["input"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    res = filter_image(noisy, cfg.filter, reference)
    timing["filter"] = time.perf_counter() - t0
    mio.write_sf2d(out / "filtered.sf2d", res.image)
    mio.write_png(out / "filtered.png", res.image)
    if res.scale_map is not None:
        mio.write_sf2d(out / "scale_map.sf2d", res.scale_map)

    t0 = time.perf_counter()
    curves = extract(res.image, cfg.extract, res.scale_map)
    timing["extract"] = time.perf_counter() - t0
    (out / "curves.json").write_text(curves.to_json())
    mio.overlay_png(out / "overlay.png", res.image, curves, gt if gt is not None else ())

    metrics = None
    if gt is not None:
        t0 = time.perf_counter()
        ev = match_and_score(gt, curves, cfg.eval_config())
        timing["evaluate"] = time.perf_counter() - t0
        metrics = ev.to_dict()
        metrics["summary"] = ev.summary()
        if reference is not None:
            metrics["snr_input"] = snr(reference, noisy)
        _json_dump(out / "metrics.json", metrics)
        log.info("%s: %s", cfg.filter.method, ev.summary())

    manifest = {
        "config": cfg.to_dict(),
        "filter_info": res.info,
        "n_curves": len(curves),
        "metrics": None if metrics is None else {"E": metrics["E"], "p": metrics["p"]},
        "timing_seconds": timing,
        "environment": {"python": platform.python_version(), "numpy": np.__version__},
    }
    _json_dump(out / "manifest.json", manifest)
    return manifest
