"""Image grid utilities: Gaussian smoothing and finite-difference derivatives.

Scalar fields are plain 2-D float arrays indexed ``u[y, x]`` (row = y,
column = x). Pixel edge lengths ``dx`` and ``dy`` are passed explicitly
where they matter.

Second derivatives use the classic 3-point and 4-corner stencils and are
only evaluated where the whole stencil fits inside the image; elsewhere the
derivative is zero. This is the "natural" boundary treatment that keeps the
system matrix of the fourth-order solver exactly ``L^T D L``.
"""

from math import ceil, isfinite
from typing import NamedTuple

import numpy as np
from scipy.ndimage import correlate1d


class ParameterError(ValueError):
    """Raised for invalid parameters or incompatible field shapes."""


class NumericalError(RuntimeError):
    """Raised when a computation produces non-finite values."""


class Gradient(NamedTuple):
    x: np.ndarray
    y: np.ndarray


class Hessian(NamedTuple):
    """Per-pixel symmetric 2x2 matrices stored as three component fields."""
    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray

    def frobenius2(self) -> np.ndarray:
        return self.xx ** 2 + 2.0 * self.xy ** 2 + self.yy ** 2


def as_field(u, name="u") -> np.ndarray:
    """Validate ``u`` as a finite 2-D field and return it as float64."""
    a = np.asarray(u, dtype=np.float64)
    if a.ndim != 2:
        raise ParameterError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise ParameterError(f"{name} is empty")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} contains non-finite values")
    return a


def check_spacing(dx, dy):
    if not (dx > 0 and dy > 0 and isfinite(dx) and isfinite(dy)):
        raise ParameterError(f"pixel spacing must be positive, got dx={dx}, dy={dy}")


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled Gaussian of radius ceil(4 sigma), renormalized to unit sum."""
    radius = max(int(ceil(4.0 * sigma)), 1)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(u, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing with mirror (half-sample reflect) borders.

    ``sigma`` is given in pixels; ``sigma == 0`` returns a copy of ``u``.
    """
    if not isfinite(sigma) or sigma < 0:
        raise ParameterError(f"sigma must be finite and >= 0, got {sigma}")
    u = as_field(u)
    if sigma == 0:
        return u.copy()
    k = gaussian_kernel(sigma)
    out = correlate1d(u, k, axis=0, mode="reflect")
    return correlate1d(out, k, axis=1, mode="reflect")


def gradient(u, dx=1.0, dy=1.0) -> Gradient:
    """Central differences inside, one-sided differences on the border."""
    u = as_field(u)
    check_spacing(dx, dy)
    if min(u.shape) < 2:
        raise ParameterError("gradient needs at least 2 pixels per axis")
    uy, ux = np.gradient(u, dy, dx)
    return Gradient(ux, uy)


def hessian(u, dx=1.0, dy=1.0) -> Hessian:
    """Second derivatives with the natural (stencil-must-fit) boundary rule."""
    u = as_field(u)
    check_spacing(dx, dy)
    if min(u.shape) < 3:
        raise ParameterError(f"hessian needs at least 3x3 pixels, got {u.shape}")
    uxx = np.zeros_like(u)
    uyy = np.zeros_like(u)
    uxy = np.zeros_like(u)
    uxx[:, 1:-1] = (u[:, :-2] - 2.0 * u[:, 1:-1] + u[:, 2:]) / dx ** 2
    uyy[1:-1, :] = (u[:-2, :] - 2.0 * u[1:-1, :] + u[2:, :]) / dy ** 2
    uxy[1:-1, 1:-1] = (u[:-2, :-2] + u[2:, 2:] - u[2:, :-2] - u[:-2, 2:]) / (4.0 * dx * dy)
    return Hessian(uxx, uxy, uyy)


def hessian_adjoint(wxx, wxy, wyy, dx=1.0, dy=1.0) -> np.ndarray:
    """Apply the transposed stencils: ``Lxx^T wxx + Lxy^T wxy + Lyy^T wyy``.

    Only entries of ``w`` where the respective stencil fits are used, so this
    is the exact adjoint of :func:`hessian`. Pass ``wxy = T_xy + T_yx`` when
    both mixed components are present.
    """
    out = np.zeros(np.shape(wxx), dtype=np.float64)
    a = wxx[:, 1:-1] / dx ** 2
    out[:, :-2] += a
    out[:, 1:-1] -= 2.0 * a
    out[:, 2:] += a
    b = wyy[1:-1, :] / dy ** 2
    out[:-2, :] += b
    out[1:-1, :] -= 2.0 * b
    out[2:, :] += b
    c = wxy[1:-1, 1:-1] / (4.0 * dx * dy)
    out[:-2, :-2] += c
    out[2:, 2:] += c
    out[2:, :-2] -= c
    out[:-2, 2:] -= c
    return out
