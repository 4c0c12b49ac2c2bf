"""Explicit and Fast Explicit Diffusion (FED) solvers for MAFOD.

One explicit step is ``u <- u - tau * L^T D L u`` where ``L`` stacks the
four second-derivative stencils per pixel and ``D`` is the block-diagonal
field of 4x4 diffusion tensors. The operator is applied matrix-free.
"""

import logging
import time
from dataclasses import dataclass, field
from math import ceil, cos, gcd, isfinite, pi, sqrt

import numpy as np

from .grid import (NumericalError, ParameterError, as_field, check_spacing,
                   hessian, hessian_adjoint)
from .scale_select import (ScaleConfig, ScaleSpace, normalized_hessian,
                           postprocess_scale_map, select_scales)
from .tensor import DiffusivityConfig, tensor_field

log = logging.getLogger(__name__)

DEFAULT_TAU_MAX = 0.05


def stability_bound(dx=1.0, dy=1.0):
    """Largest l2-stable explicit step from the Gershgorin estimate.

    Implemented exactly as ``2 / (16 dx^2 + 16 dy^2 + 2 dx dy)``; for unit
    spacing this is 1/17.
    """
    check_spacing(dx, dy)
    return 2.0 / (16.0 * dx ** 2 + 16.0 * dy ** 2 + 2.0 * dx * dy)


def apply_L(u, dx=1.0, dy=1.0):
    """Stacked second derivatives, shape (h, w, 4) in (xx, xy, yx, yy) order."""
    h = hessian(u, dx, dy)
    return np.stack([h.xx, h.xy, h.xy, h.yy], axis=-1)


def apply_LT(w, dx=1.0, dy=1.0):
    return hessian_adjoint(w[..., 0], w[..., 1] + w[..., 2], w[..., 3], dx, dy)


def assemble_flux(u, D, dx=1.0, dy=1.0):
    """Matrix-free ``L^T D L u``; ``D`` has shape (h, w, 4, 4)."""
    u = as_field(u)
    D = np.asarray(D)
    if D.shape != u.shape + (4, 4):
        raise ParameterError(f"tensor field shape {D.shape} does not match image {u.shape}")
    t = np.einsum("...ij,...j->...i", D, apply_L(u, dx, dy))
    return apply_LT(t, dx, dy)


def explicit_step(u, D, tau, dx=1.0, dy=1.0):
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    return u - tau * assemble_flux(u, D, dx, dy)


def fed_substeps(T, M, tau_max):
    if not (T > 0 and M > 0 and tau_max > 0):
        raise ParameterError("T, M and tau_max must be positive")
    return int(ceil(-0.5 + 0.5 * sqrt(1.0 + 12.0 * T / (M * tau_max))))


def fed_taus(T, M, n):
    """Unordered FED step sizes of one cycle; they sum to T / M."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    return [3.0 * T / (2.0 * M * (n * n + n) * cos(pi * (2 * i + 1) / (4 * n + 2)) ** 2)
            for i in range(n)]


def kappa_reorder(taus):
    """Stride permutation of the cycle: indices 0, k, 2k, ... modulo n.

    ``k`` is the largest integer <= n/2 that is coprime to n (1 for n <= 3),
    which spreads the large, individually unstable steps through the cycle.
    """
    n = len(taus)
    if n <= 3:
        kappa = 1
    else:
        kappa = next(k for k in range(n // 2, 0, -1) if gcd(k, n) == 1)
    return [taus[(i * kappa) % n] for i in range(n)]


@dataclass(frozen=True)
class FedSchedule:
    T: float
    M: int
    tau_max: float = DEFAULT_TAU_MAX
    n: int = field(init=False)
    taus: tuple = field(init=False)

    def __post_init__(self):
        n = fed_substeps(self.T, self.M, self.tau_max)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "taus", tuple(kappa_reorder(fed_taus(self.T, self.M, n))))

    @property
    def cycle_time(self):
        return self.T / self.M


@dataclass(frozen=True)
class MafodParams:
    scale: ScaleConfig = ScaleConfig()
    diffusivity: DiffusivityConfig = DiffusivityConfig()
    rho: float = 0.5
    dx: float = 1.0
    dy: float = 1.0


def scale_map_for(u, params: MafodParams, space=None):
    """Post-processed per-pixel scale map of ``u``."""
    if space is None:
        space = ScaleSpace(u, params.dx, params.dy)
    res = select_scales(u, params.scale, space)
    if not res.segmentation.any():
        return np.full(space.u.shape, params.scale.sigmas[0])
    return postprocess_scale_map(res, u)


def mafod_tensors(u, params: MafodParams):
    """Diffusion tensor field for the current image (frozen for one cycle)."""
    space = ScaleSpace(u, params.dx, params.dy)
    smap = scale_map_for(u, params, space)
    nh = normalized_hessian(u, smap, params.rho, space)
    return tensor_field(nh, params.diffusivity)


def _diagnose(u, k):
    bad = ~np.isfinite(u)
    ys, xs = np.nonzero(bad)
    where = ", ".join(f"({x},{y})" for y, x in zip(ys[:5], xs[:5]))
    return (f"non-finite values after cycle {k}: {int(bad.sum())} pixels, "
            f"first at {where}")


def run_mafod(u0, params: MafodParams, sched: FedSchedule, observer=None):
    """Filter ``u0`` with ``sched.M`` FED cycles.

    The tensors are recomputed from the current image at the start of every
    cycle and frozen for its ``sched.n`` inner steps. ``observer(k, t, u)``
    runs after each cycle (k counts from 1, t is the elapsed diffusion time);
    a truthy return value stops the iteration.
    """
    u = as_field(u0, "u0").copy()
    t = 0.0
    for k in range(1, sched.M + 1):
        D = mafod_tensors(u, params)
        with np.errstate(over="ignore", invalid="ignore"):
            for tau in sched.taus:
                u = u - tau * assemble_flux(u, D, params.dx, params.dy)
                if not np.all(np.isfinite(u)):
                    raise NumericalError(_diagnose(u, k))
        t = k * sched.cycle_time
        if log.isEnabledFor(logging.DEBUG):
            log.debug("cycle=%d t=%.4g l2=%.6g", k, t, float(np.linalg.norm(u)))
        if observer is not None and observer(k, t, u):
            break
    return u


class L2Stopper:
    """Observer that tracks the cycle closest (in l2) to a reference image.

    Stops once the distance has not improved for ``patience`` cycles; the
    best image is kept in ``best``.
    """

    def __init__(self, reference, patience=3, every=1, chain=None):
        self.reference = as_field(reference, "reference")
        self.patience = patience
        self.every = every
        self.chain = chain
        self.best = None
        self.best_k = 0
        self.best_t = 0.0
        self.best_l2 = np.inf
        self.history = []
        self._stale = 0

    def start(self, u0):
        self.best = np.array(u0, dtype=np.float64, copy=True)
        self.best_l2 = float(np.linalg.norm(self.best - self.reference))
        self.history.append((0, 0.0, self.best_l2))
        return self

    def __call__(self, k, t, u):
        stop = bool(self.chain(k, t, u)) if self.chain is not None else False
        if k % self.every:
            return stop
        l2 = float(np.linalg.norm(u - self.reference))
        self.history.append((k, t, l2))
        log.info("cycle=%d t=%.4g l2=%.6g", k, t, l2)
        if l2 < self.best_l2:
            self.best, self.best_k, self.best_t, self.best_l2 = u.copy(), k, t, l2
            self._stale = 0
        else:
            self._stale += 1
        return stop or self._stale >= self.patience


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start
        return False
