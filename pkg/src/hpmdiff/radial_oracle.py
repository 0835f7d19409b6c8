"""Closed-form testbed: curvature flow of the cone ``sqrt(x^2 + y^2) - 1``.

Under ``u_t = |grad u| div(grad u / |grad u|)`` the cone evolves as

    u(x, y, t) = sqrt(x^2 + y^2 + 2t) - 1

whose Maclaurin expansion in ``t`` is the ten-term table below,
``sum_k c_k t^k / r^(2k-1)`` with ``c_k = binom(1/2, k) 2^k``.  The
expansion converges for ``2t < r^2``.
"""

from __future__ import annotations

import csv
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .imageio import write_heatmap

__all__ = [
    "RADIAL_COEFFS",
    "series_coefficient",
    "exact_solution",
    "ten_term_approx",
    "series_terms",
    "radial_grid",
    "curvature_residual",
    "emit_surface",
    "convergence_radius",
]

RADIAL_COEFFS = (
    Fraction(1),
    Fraction(1),
    Fraction(-1, 2),
    Fraction(1, 2),
    Fraction(-5, 8),
    Fraction(7, 8),
    Fraction(-21, 16),
    Fraction(33, 16),
    Fraction(-429, 128),
    Fraction(715, 128),
)


def series_coefficient(k: int) -> Fraction:
    """Exact rational multiplying ``t^k / r^(2k-1)``; ``k = 0`` is the ``r`` term."""
    if not 0 <= k < len(RADIAL_COEFFS):
        raise IndexError(f"coefficient index must be in 0..{len(RADIAL_COEFFS) - 1}, got {k}")
    return RADIAL_COEFFS[k]


def exact_solution(x, y, t):
    return np.sqrt(np.asarray(x) ** 2 + np.asarray(y) ** 2 + 2.0 * np.asarray(t)) - 1.0


def series_terms(x, y, t):
    """The ten individual terms (``k = 0`` includes the ``-1`` offset), stacked on axis 0."""
    r = np.hypot(x, y)
    t = np.asarray(t, dtype=np.float64)
    terms = [r - 1.0]
    for k in range(1, len(RADIAL_COEFFS)):
        terms.append(float(RADIAL_COEFFS[k]) * t**k / r ** (2 * k - 1))
    return np.stack(np.broadcast_arrays(*terms))


def ten_term_approx(x, y, t):
    """Sum of the ten-term series; meaningless (by design) once ``2t > r^2``."""
    return series_terms(x, y, t).sum(axis=0)


def radial_grid(n: int, h: float):
    """``n x n`` pixel centres ``(X, Y)`` on half-integer multiples of ``h``, so ``r = 0`` is never sampled.

    Pixel ``(i, j)`` sits at ``((j - n//2 + 1/2) h, (i - n//2 + 1/2) h)``; for
    odd ``n`` the origin falls on a pixel corner just off the centre pixel.
    """
    c = (np.arange(n) - n // 2 + 0.5) * h
    return np.meshgrid(c, c)


def curvature_residual(x, y, t, h):
    """``u_t - N(u)`` for the closed form, every derivative by central differences of step ``h``.

    Used to validate the closed form independently of the grid operators.
    """
    u = exact_solution
    ut = (u(x, y, t + h) - u(x, y, t - h)) / (2 * h)
    ux = (u(x + h, y, t) - u(x - h, y, t)) / (2 * h)
    uy = (u(x, y + h, t) - u(x, y - h, t)) / (2 * h)
    uxx = (u(x + h, y, t) - 2 * u(x, y, t) + u(x - h, y, t)) / h**2
    uyy = (u(x, y + h, t) - 2 * u(x, y, t) + u(x, y - h, t)) / h**2
    uxy = (u(x + h, y + h, t) - u(x + h, y - h, t) - u(x - h, y + h, t) + u(x - h, y - h, t)) / (4 * h**2)
    n = (uy**2 * uxx - 2 * ux * uy * uxy + ux**2 * uyy) / (ux**2 + uy**2)
    return ut - n


def emit_surface(t: float, n: int, h: float, out_stem=None) -> np.ndarray:
    """Evaluate the ten-term series on the offset grid at time ``t``.

    With ``out_stem`` set, writes ``<stem>.csv`` (``x,y,value`` rows), a
    min-max normalized ``<stem>.pgm`` heatmap and its ``<stem>.range.txt``.
    """
    X, Y = radial_grid(n, h)
    values = ten_term_approx(X, Y, t)
    if out_stem is not None:
        write_xyz_csv(Path(str(out_stem) + ".csv"), X, Y, values)
        write_heatmap(values, Path(str(out_stem) + ".pgm"))
    return values


def write_xyz_csv(path, X, Y, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for x, y, v in zip(X.ravel(), Y.ravel(), values.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


def convergence_radius(r) -> float:
    """Largest ``t`` for which the expansion at radius ``r`` converges (``r^2 / 2``)."""
    return 0.5 * float(np.min(r)) ** 2 if np.size(r) else math.inf
