"""Fourth-order diffusion tensors built from Hessian eigensystems.

A tensor is stored as its 4x4 matrix acting on vectorized 2x2 matrices in
the order (xx, xy, yx, yy). Its eigentensors are

    E1 = e1 e1^T,  E2 = e2 e2^T,
    E3 = (e1 e2^T + e2 e1^T) / sqrt(2),  E4 = (e1 e2^T - e2 e1^T) / sqrt(2)

with eigenvalues mu1, mu2 from the Perona-Malik diffusivity of the Hessian
eigenvalues, mu3 = (mu1 + mu2) / 2 and mu4 = 0.
"""

from dataclasses import dataclass

import numpy as np

from .grid import ParameterError
from .scale_select import hessian_eigen

MODES = ("both", "ridges", "valleys")
_SQRT_HALF = np.sqrt(0.5)


@dataclass(frozen=True)
class DiffusivityConfig:
    lam: float = 0.005
    mode: str = "both"

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")


def perona_malik(s, lam):
    """Perona-Malik diffusivity 1 / (1 + s / lam^2) of a squared magnitude."""
    return 1.0 / (1.0 + np.asarray(s, dtype=np.float64) / lam ** 2)


def mu_from_nu(nu1, nu2, cfg: DiffusivityConfig):
    nu1 = np.asarray(nu1, dtype=np.float64)
    nu2 = np.asarray(nu2, dtype=np.float64)
    mu1 = perona_malik(nu1 ** 2, cfg.lam)
    mu2 = perona_malik(nu2 ** 2, cfg.lam)
    # enhancing only ridges means smoothing out valley-like directions, and vice versa
    if cfg.mode == "ridges":
        mu1 = np.where(nu1 >= 0, 1.0, mu1)
        mu2 = np.where(nu2 >= 0, 1.0, mu2)
    elif cfg.mode == "valleys":
        mu1 = np.where(nu1 <= 0, 1.0, mu1)
        mu2 = np.where(nu2 <= 0, 1.0, mu2)
    mu3 = 0.5 * (mu1 + mu2)
    return mu1, mu2, mu3, np.zeros_like(mu1)


def eigentensor_matrix(e1, e2):
    """Columns are vec(E1..E4); works on (..., 2) arrays, returns (..., 4, 4)."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    ax, ay = e1[..., 0], e1[..., 1]
    bx, by = e2[..., 0], e2[..., 1]
    cols = [
        (ax * ax, ax * ay, ay * ax, ay * ay),
        (bx * bx, bx * by, by * bx, by * by),
        (2 * ax * bx * _SQRT_HALF, (ax * by + bx * ay) * _SQRT_HALF,
         (ay * bx + by * ax) * _SQRT_HALF, 2 * ay * by * _SQRT_HALF),
        (np.zeros_like(ax), (ax * by - bx * ay) * _SQRT_HALF,
         (ay * bx - by * ax) * _SQRT_HALF, np.zeros_like(ax)),
    ]
    return np.stack([np.stack(c, axis=-1) for c in cols], axis=-1)


def build_tensor(e1, e2, mus, tol=1e-8):
    """Assemble ``D = E diag(mu) E^T`` for one pixel or a whole field."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    n1 = np.einsum("...i,...i->...", e1, e1)
    n2 = np.einsum("...i,...i->...", e2, e2)
    dot = np.einsum("...i,...i->...", e1, e2)
    if (np.max(np.abs(n1 - 1)) > tol or np.max(np.abs(n2 - 1)) > tol
            or np.max(np.abs(dot)) > tol):
        raise ParameterError("e1, e2 must be an orthonormal frame")
    E = eigentensor_matrix(e1, e2)
    mu = np.stack([np.broadcast_to(np.asarray(m, dtype=np.float64), n1.shape)
                   for m in mus], axis=-1)
    return np.einsum("...ik,...k,...jk->...ij", E, mu, E)


def double_contract(D, H):
    """``T = D : H`` for 2x2 ``H`` (shape (..., 2, 2)); result symmetrized."""
    H = np.asarray(H, dtype=np.float64)
    vec = H.reshape(H.shape[:-2] + (4,))
    t = np.einsum("...ij,...j->...i", np.asarray(D), vec).reshape(H.shape)
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def tensor_field(nh, cfg: DiffusivityConfig):
    """Per-pixel tensors from a (normalized) Hessian field."""
    nu1, e1, nu2, e2 = hessian_eigen(nh.xx, nh.xy, nh.yy)
    return build_tensor(e1, e2, mu_from_nu(nu1, nu2, cfg))
