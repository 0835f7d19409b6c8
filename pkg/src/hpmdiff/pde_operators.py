"""Discrete spatial operators for the diffusion flows.

Arrays are indexed ``[y, x]``.  All stencils use half-sample mirror padding
(the ghost pixel copies the edge pixel), which is the discrete form of the
zero-normal-derivative boundary condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DegenerateDenominatorError, DimensionMismatchError
from .field_poly import TimePolyField, as_field, poly_add, poly_mul, poly_reciprocal, poly_scale, poly_sub

__all__ = [
    "DiffusivitySpec",
    "GaussianKernel",
    "gradient",
    "divergence",
    "dx",
    "dy",
    "dxx",
    "dyy",
    "laplacian",
    "diffusivity_eval",
    "gaussian_convolve",
    "face_diffusivities",
    "flux_divergence",
    "curvature_rhs",
    "pm_divergence_rhs",
    "CurvatureTaylor",
]

DiffusivityKind = Literal["rational", "exponential", "constant_one"]


@dataclass(frozen=True)
class DiffusivitySpec:
    """Edge-stopping function ``g`` with contrast parameter ``k``.

    rational: ``1 / (1 + s2/k**2)``; exponential: ``exp(-s2/k**2)``;
    constant_one: ``1`` everywhere.  ``s2`` is a squared gradient magnitude.
    """

    kind: DiffusivityKind = "rational"
    k: float = 0.1

    def __post_init__(self):
        if self.kind not in ("rational", "exponential", "constant_one"):
            raise ValueError(f"unknown diffusivity kind {self.kind!r}")
        if not (self.k > 0):
            raise ValueError(f"contrast parameter k must be positive, got {self.k}")

    def __call__(self, s2):
        return diffusivity_eval(self, s2)


@dataclass(frozen=True)
class GaussianKernel:
    """Sampled Gaussian truncated at ``ceil(3 sigma)`` and renormalized to unit sum."""

    sigma: float
    radius: int = field(init=False)
    weights_1d: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        radius = int(math.ceil(3.0 * self.sigma))
        x = np.arange(-radius, radius + 1, dtype=np.float64)
        w = np.exp(-(x**2) / (2.0 * self.sigma**2))
        w /= w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "weights_1d", w)

    @property
    def weights(self) -> np.ndarray:
        """Full ``(2r+1, 2r+1)`` weight table (outer product of the 1-D taps)."""
        return np.outer(self.weights_1d, self.weights_1d)


def _pad_x(u, n=1):
    return np.pad(u, ((0, 0), (n, n)), mode="symmetric")


def _pad_y(u, n=1):
    return np.pad(u, ((n, n), (0, 0)), mode="symmetric")


def dx(u, h=1.0):
    """Central difference along x."""
    p = _pad_x(u)
    return (p[:, 2:] - p[:, :-2]) / (2.0 * h)


def dy(u, h=1.0):
    """Central difference along y."""
    p = _pad_y(u)
    return (p[2:, :] - p[:-2, :]) / (2.0 * h)


def dxx(u, h=1.0):
    p = _pad_x(u)
    return (p[:, 2:] - 2.0 * u + p[:, :-2]) / (h * h)


def dyy(u, h=1.0):
    p = _pad_y(u)
    return (p[2:, :] - 2.0 * u + p[:-2, :]) / (h * h)


def laplacian(u, h=1.0):
    """Compact 5-point Laplacian."""
    return dxx(u, h) + dyy(u, h)


def gradient(u, h=1.0):
    """Central-difference gradient ``(u_x, u_y)`` with mirror padding."""
    u = as_field(u)
    return dx(u, h), dy(u, h)


def divergence(fx, fy, h=1.0):
    """Central-difference divergence of the vector field ``(fx, fy)``."""
    fx = as_field(fx)
    fy = as_field(fy)
    if fx.shape != fy.shape:
        raise DimensionMismatchError(f"component shapes differ: {fx.shape} vs {fy.shape}")
    return dx(fx, h) + dy(fy, h)


def diffusivity_eval(spec: DiffusivitySpec, s2):
    """Apply ``g`` pointwise to a nonnegative squared gradient magnitude."""
    s2 = np.asarray(s2, dtype=np.float64)
    if np.any(s2 < 0):
        raise ValueError("squared gradient magnitude must be nonnegative")
    if spec.kind == "rational":
        return 1.0 / (1.0 + s2 / spec.k**2)
    if spec.kind == "exponential":
        return np.exp(-s2 / spec.k**2)
    return np.ones_like(s2)


def gaussian_convolve(kernel: GaussianKernel, u) -> np.ndarray:
    """Separable Gaussian smoothing with mirror padding (x pass, then y pass)."""
    u = as_field(u)
    w = kernel.weights_1d
    r = kernel.radius
    ny, nx = u.shape
    p = _pad_x(u, r)
    tmp = np.zeros_like(u)
    for j, wj in enumerate(w):
        tmp += wj * p[:, j : j + nx]
    p = _pad_y(tmp, r)
    out = np.zeros_like(u)
    for j, wj in enumerate(w):
        out += wj * p[j : j + ny, :]
    return out


def face_diffusivities(u0, spec: DiffusivitySpec, kernel: GaussianKernel | None, h=1.0):
    """Diffusivity on vertical and horizontal cell faces.

    ``g`` is evaluated per pixel on ``|G_sigma * grad u0|**2`` and averaged
    onto the faces between neighbouring pixels.  Returns ``(gx, gy)`` with
    shapes ``(H, W-1)`` and ``(H-1, W)``.
    """
    u0 = as_field(u0)
    if spec.kind == "constant_one":
        g = np.ones_like(u0)
    else:
        us = gaussian_convolve(kernel, u0) if kernel is not None else u0
        gx, gy = gradient(us, h)
        g = diffusivity_eval(spec, gx * gx + gy * gy)
    return 0.5 * (g[:, 1:] + g[:, :-1]), 0.5 * (g[1:, :] + g[:-1, :])


def flux_divergence(u, gx, gy, h=1.0):
    """``div(g grad u)`` with face fluxes and zero flux through the border.

    With ``g == 1`` this is exactly the compact 5-point Laplacian.  The sum
    of the output over all pixels telescopes to zero.
    """
    fx = gx * (u[:, 1:] - u[:, :-1])
    fy = gy * (u[1:, :] - u[:-1, :])
    out = np.zeros_like(u)
    out[:, :-1] += fx
    out[:, 1:] -= fx
    out[:-1, :] += fy
    out[1:, :] -= fy
    return out / (h * h)


def curvature_rhs(u: TimePolyField, eps: float, out_order: int) -> TimePolyField:
    """Level-set curvature flow operator in truncated series arithmetic.

    Computes ``(u_y^2 u_xx - 2 u_x u_y u_xy + u_x^2 u_yy) / (u_x^2 + u_y^2 + eps^2)``
    through degree ``out_order``.  ``u_xy`` is ``Dy(Dx(u))``.
    """
    if out_order > u.order:
        raise ValueError(f"out_order {out_order} exceeds series order {u.order}")
    h = u.spacing
    u = u.truncate(out_order)
    ux = u.map_coeffs(lambda c: dx(c, h))
    uy = u.map_coeffs(lambda c: dy(c, h))
    uxx = u.map_coeffs(lambda c: dxx(c, h))
    uyy = u.map_coeffs(lambda c: dyy(c, h))
    uxy = u.map_coeffs(lambda c: dy(dx(c, h), h))
    n = out_order

    ux2 = poly_mul(ux, ux, n)
    uy2 = poly_mul(uy, uy, n)
    cross = poly_scale(poly_mul(poly_mul(ux, uy, n), uxy, n), 2.0)
    num = poly_sub(poly_add(poly_mul(uy2, uxx, n), poly_mul(ux2, uyy, n)), cross)

    den = poly_add(ux2, uy2).coeffs.copy()
    den[0] += eps * eps
    den = TimePolyField(den, h)
    # ux^2 + uy^2 + eps^2 >= eps^2 always holds in floating point, so this only
    # trips on non-finite input.
    return poly_mul(num, poly_reciprocal(den, n, 0.5 * eps * eps), n)


def pm_divergence_rhs(
    u: TimePolyField,
    spec: DiffusivitySpec,
    kernel: GaussianKernel | None,
    eps: float,
    out_order: int,
) -> TimePolyField:
    """Divergence-form flow ``div(g grad u)`` with ``g`` frozen at ``u.coeffs[0]``.

    ``eps`` is unused by the divergence form (``g`` is bounded) and kept so
    both right-hand sides share a call shape.
    """
    if out_order > u.order:
        raise ValueError(f"out_order {out_order} exceeds series order {u.order}")
    gx, gy = face_diffusivities(u.coeffs[0], spec, kernel, u.spacing)
    return u.truncate(out_order).map_coeffs(lambda c: flux_divergence(c, gx, gy, u.spacing))


class CurvatureTaylor:
    """Incremental (Taylor-mode) evaluation of :func:`curvature_rhs`.

    Feeding coefficients ``v_0, v_1, ...`` one at a time, ``push(v_k)``
    returns the degree-``k`` coefficient of ``curvature_rhs(S_k, eps, k)``,
    where ``S_k`` is the series built so far.  Every product only needs
    coefficients up to ``k``, so each push costs O(k) field products and
    the arithmetic order matches the full recomputation exactly.
    """

    def __init__(self, eps: float, h: float = 1.0):
        self.eps = eps
        self.h = h
        names = ("ux", "uy", "uxx", "uyy", "uxy", "ux2", "uy2", "uxuy", "cross", "num", "recip")
        self._c = {name: [] for name in names}

    @staticmethod
    def _cauchy(a, b, k):
        acc = np.zeros_like(a[0])
        for i in range(k + 1):
            acc += a[i] * b[k - i]
        return acc

    def push(self, v) -> np.ndarray:
        c, h = self._c, self.h
        k = len(c["ux"])
        c["ux"].append(dx(v, h))
        c["uy"].append(dy(v, h))
        c["uxx"].append(dxx(v, h))
        c["uyy"].append(dyy(v, h))
        c["uxy"].append(dy(dx(v, h), h))
        cauchy = self._cauchy
        c["ux2"].append(cauchy(c["ux"], c["ux"], k))
        c["uy2"].append(cauchy(c["uy"], c["uy"], k))
        c["uxuy"].append(cauchy(c["ux"], c["uy"], k))
        c["cross"].append(cauchy(c["uxuy"], c["uxy"], k) * 2.0)
        a = cauchy(c["uy2"], c["uxx"], k)
        b = cauchy(c["ux2"], c["uyy"], k)
        c["num"].append((a + b) - c["cross"][k])
        den = c["ux2"][k] + c["uy2"][k]
        if k == 0:
            den = den.copy()
            den += self.eps * self.eps
            self._den = [den]
            tiny = 0.5 * self.eps * self.eps
            bad = ~(np.abs(den) >= tiny)
            if bad.any():
                raise DegenerateDenominatorError(f"regularized gradient magnitude below eps at {int(bad.sum())} pixels")
            self._inv0 = 1.0 / den
            c["recip"].append(self._inv0)
        else:
            self._den.append(den)
            acc = np.zeros_like(den)
            for j in range(1, k + 1):
                acc += self._den[j] * c["recip"][k - j]
            c["recip"].append(-acc * self._inv0)
        return cauchy(c["num"], c["recip"], k)
