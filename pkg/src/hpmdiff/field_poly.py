"""Truncated power series in time whose coefficients are 2-D pixel grids.

A :class:`TimePolyField` of order ``N`` stores ``N + 1`` dense coefficient
grids, ``coeffs[k]`` multiplying ``t**k``.  Plain 2-D float64 arrays play the
role of scalar fields throughout the package.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDenominatorError, DimensionMismatchError

__all__ = [
    "TimePolyField",
    "as_field",
    "poly_add",
    "poly_sub",
    "poly_scale",
    "poly_mul",
    "poly_reciprocal",
    "poly_integrate_t",
    "poly_eval",
    "dump_csv",
]

MIN_SIDE = 3


def as_field(values) -> np.ndarray:
    """Validate and return a 2-D float64 scalar field (at least 3x3)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"scalar field must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
        raise DimensionMismatchError(f"scalar field must be at least 3x3, got {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class TimePolyField:
    """Grid-valued polynomial in ``t`` truncated at ``order``.

    ``coeffs`` has shape ``(order + 1, height, width)``; ``spacing`` is the
    grid step ``h`` shared by every coefficient.  The coefficient array is
    copied on construction and marked read-only.
    """

    coeffs: np.ndarray
    spacing: float = 1.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64, copy=True)
        if c.ndim == 2:
            c = c[np.newaxis]
        if c.ndim != 3 or c.shape[0] < 1:
            raise DimensionMismatchError(f"coefficients must have shape (order+1, H, W), got {c.shape}")
        if c.shape[1] < MIN_SIDE or c.shape[2] < MIN_SIDE:
            raise DimensionMismatchError(f"coefficient fields must be at least 3x3, got {c.shape[1:]}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "spacing", float(self.spacing))

    @classmethod
    def constant(cls, field, order: int = 0, spacing: float = 1.0) -> "TimePolyField":
        """Series whose constant term is ``field`` and all higher terms vanish."""
        field = as_field(field)
        c = np.zeros((order + 1,) + field.shape)
        c[0] = field
        return cls(c, spacing)

    @classmethod
    def zeros(cls, shape, order: int = 0, spacing: float = 1.0) -> "TimePolyField":
        return cls(np.zeros((order + 1,) + tuple(shape)), spacing)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1:]

    @property
    def height(self) -> int:
        return self.coeffs.shape[1]

    @property
    def width(self) -> int:
        return self.coeffs.shape[2]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.coeffs[k]

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def truncate(self, order: int) -> "TimePolyField":
        """Drop terms above ``order`` (pads with zeros if ``order`` is larger)."""
        return TimePolyField(_padded(self.coeffs, order), self.spacing)

    def map_coeffs(self, fn) -> "TimePolyField":
        """Apply a linear spatial operator to every coefficient."""
        return TimePolyField(np.stack([fn(c) for c in self.coeffs]), self.spacing)

    def coeff_norms(self) -> np.ndarray:
        """Max-abs over pixels for each degree."""
        return np.abs(self.coeffs).reshape(len(self), -1).max(axis=1)

    def __add__(self, other):
        return poly_add(self, other)

    def __sub__(self, other):
        return poly_sub(self, other)

    def __neg__(self):
        return poly_scale(self, -1.0)


def _padded(c: np.ndarray, order: int) -> np.ndarray:
    n = c.shape[0]
    if n == order + 1:
        return c
    if n > order + 1:
        return c[: order + 1]
    out = np.zeros((order + 1,) + c.shape[1:])
    out[:n] = c
    return out


def _check_same(a: TimePolyField, b: TimePolyField):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"field shapes differ: {a.shape} vs {b.shape}")
    if a.spacing != b.spacing:
        raise DimensionMismatchError(f"grid spacings differ: {a.spacing} vs {b.spacing}")


def poly_add(a: TimePolyField, b: TimePolyField) -> TimePolyField:
    """Coefficient-wise sum; the shorter operand is padded with zero fields."""
    _check_same(a, b)
    n = max(a.order, b.order)
    return TimePolyField(_padded(a.coeffs, n) + _padded(b.coeffs, n), a.spacing)


def poly_sub(a: TimePolyField, b: TimePolyField) -> TimePolyField:
    _check_same(a, b)
    n = max(a.order, b.order)
    return TimePolyField(_padded(a.coeffs, n) - _padded(b.coeffs, n), a.spacing)


def poly_scale(a: TimePolyField, s: float) -> TimePolyField:
    return TimePolyField(a.coeffs * s, a.spacing)


def poly_mul(a: TimePolyField, b: TimePolyField, out_order: int) -> TimePolyField:
    """Truncated Cauchy product, pointwise in space.

    ``out[k] = sum(a[i] * b[k - i])`` over valid ``i``, for ``k <= out_order``.
    The summation order over ``i`` is fixed, so results are reproducible.
    """
    _check_same(a, b)
    if out_order < 0:
        raise ValueError("out_order must be nonnegative")
    out = np.zeros((out_order + 1,) + a.shape)
    for k in range(out_order + 1):
        lo = max(0, k - b.order)
        hi = min(k, a.order)
        for i in range(lo, hi + 1):
            out[k] += a.coeffs[i] * b.coeffs[k - i]
    return TimePolyField(out, a.spacing)


def poly_reciprocal(a: TimePolyField, out_order: int, eps: float) -> TimePolyField:
    """Series ``r`` with ``a * r == 1`` through degree ``out_order``.

    Uses ``r0 = 1/a0`` and ``rk = -(sum_{j=1..k} a_j r_{k-j}) / a0``.  Raises
    :class:`DegenerateDenominatorError` if ``|a0| < eps`` (or is not finite)
    anywhere on the grid.
    """
    a0 = a.coeffs[0]
    bad = ~(np.abs(a0) >= eps)
    if bad.any():
        iy, ix = np.argwhere(bad)[0]
        raise DegenerateDenominatorError(
            f"constant term {a0[iy, ix]!r} at pixel (y={iy}, x={ix}) is below eps={eps:g}"
        )
    r = np.zeros((out_order + 1,) + a.shape)
    inv0 = 1.0 / a0
    r[0] = inv0
    for k in range(1, out_order + 1):
        acc = np.zeros(a.shape)
        for j in range(1, min(k, a.order) + 1):
            acc += a.coeffs[j] * r[k - j]
        r[k] = -acc * inv0
    return TimePolyField(r, a.spacing)


def poly_integrate_t(a: TimePolyField) -> TimePolyField:
    """Antiderivative in ``t`` with zero constant term (order grows by one)."""
    out = np.zeros((a.order + 2,) + a.shape)
    for k in range(a.order + 1):
        out[k + 1] = a.coeffs[k] / (k + 1)
    return TimePolyField(out, a.spacing)


def poly_eval(a: TimePolyField, t: float) -> np.ndarray:
    """Horner evaluation of the series at time ``t`` (per pixel)."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    acc = a.coeffs[-1].copy()
    for k in range(a.order - 1, -1, -1):
        acc *= t
        acc += a.coeffs[k]
    return acc


def dump_csv(a: TimePolyField, stem) -> list[Path]:
    """Write one CSV per degree as ``<stem>_k<degree>.csv`` (rows = y, columns = x)."""
    stem = Path(stem)
    paths = []
    for k, c in enumerate(a.coeffs):
        path = stem.with_name(f"{stem.name}_k{k}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in c:
                w.writerow([repr(float(v)) for v in row])
        paths.append(path)
    return paths
