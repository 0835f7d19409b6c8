"""Homotopy-perturbation series for autonomous flows ``u_t = F(u)``.

For these flows the homotopy expansion collapses to matching Taylor
coefficients in ``t``: with ``v_0 = u0`` and ``S_k = v_0 + ... + v_k t^k``,

    v_{k+1} = [t^k] F(S_k) / (k + 1)

which is what :func:`build_series` computes on the grid.  :func:`advance`
reaches arbitrary times by re-expanding around the current field whenever
the coefficient ratio test limits the usable step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import MaxRestartsExceeded, SeriesBlowupError
from .field_poly import TimePolyField, as_field, poly_eval
from .pde_operators import (
    CurvatureTaylor,
    DiffusivitySpec,
    GaussianKernel,
    curvature_rhs,
    face_diffusivities,
    flux_divergence,
    pm_divergence_rhs,
)

__all__ = [
    "HpmConfig",
    "CurvatureFlow",
    "DivergenceFlow",
    "SeriesSolution",
    "TraceRow",
    "AdvanceResult",
    "build_series",
    "build_series_direct",
    "estimate_trust_radius",
    "advance",
    "write_trace_csv",
]


@dataclass(frozen=True)
class HpmConfig:
    order: int = 10
    eps: float = 1e-4
    ratio_cap: float = 0.25
    max_restarts: int = 10_000
    k: float = 0.1

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be an integer >= 1, got {self.order}")
        if not (self.eps > 0):
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not (0 < self.ratio_cap < 1):
            raise ValueError(f"ratio_cap must lie in (0, 1), got {self.ratio_cap}")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be nonnegative")
        if not (self.k > 0):
            raise ValueError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class CurvatureFlow:
    """``u_t = (u_y^2 u_xx - 2 u_x u_y u_xy + u_x^2 u_yy) / (|grad u|^2 + eps^2)``."""

    eps: float = 1e-4
    kind = "curvature"

    def rhs(self, s: TimePolyField, out_order: int) -> TimePolyField:
        return curvature_rhs(s, self.eps, out_order)

    def stepper(self, u0, spacing=1.0):
        return CurvatureTaylor(self.eps, spacing).push


@dataclass(frozen=True)
class DivergenceFlow:
    """``u_t = div(g(|G_sigma * grad u0|^2) grad u)`` with ``g`` frozen per expansion.

    ``sigma <= 0`` skips the Gaussian pre-smoothing.
    """

    diffusivity: DiffusivitySpec = field(default_factory=DiffusivitySpec)
    sigma: float = 1.0
    kind = "pm_divergence"

    @property
    def kernel(self) -> GaussianKernel | None:
        return GaussianKernel(self.sigma) if self.sigma > 0 else None

    def rhs(self, s: TimePolyField, out_order: int) -> TimePolyField:
        return pm_divergence_rhs(s, self.diffusivity, self.kernel, 0.0, out_order)

    def stepper(self, u0, spacing=1.0):
        # linear in u once g is frozen: [t^k] F(S_k) = F(v_k)
        gx, gy = face_diffusivities(u0, self.diffusivity, self.kernel, spacing)
        return lambda v: flux_divergence(v, gx, gy, spacing)


Flow = CurvatureFlow | DivergenceFlow


@dataclass(frozen=True)
class SeriesSolution:
    series: TimePolyField
    trust_radius: float
    rhs_kind: Literal["curvature", "pm_divergence"]


def build_series(u0, flow: Flow, config: HpmConfig, spacing: float = 1.0) -> SeriesSolution:
    """Expand the flow from ``u0`` to ``config.order`` terms.

    Raises :class:`SeriesBlowupError` naming the first degree that produced a
    non-finite value.
    """
    u0 = as_field(u0)
    if not np.all(np.isfinite(u0)):
        raise SeriesBlowupError(0, "initial field contains non-finite values")
    push = flow.stepper(u0, spacing)
    n = config.order
    coeffs = np.zeros((n + 1,) + u0.shape)
    coeffs[0] = u0
    # overflow is reported as SeriesBlowupError below, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            nxt = push(coeffs[k]) / (k + 1)
            if not np.all(np.isfinite(nxt)):
                raise SeriesBlowupError(k + 1)
            coeffs[k + 1] = nxt
    return _solution(coeffs, spacing, flow, config)


def build_series_direct(u0, flow: Flow, config: HpmConfig, spacing: float = 1.0) -> SeriesSolution:
    """Reference expansion that re-evaluates ``F(S_k)`` in full series arithmetic at every degree.

    Cost grows as ``order**3``; kept to cross-check :func:`build_series`.
    """
    u0 = as_field(u0)
    n = config.order
    coeffs = np.zeros((n + 1,) + u0.shape)
    coeffs[0] = u0
    for k in range(n):
        r = flow.rhs(TimePolyField(coeffs[: k + 1], spacing), k)
        nxt = r.coeffs[k] / (k + 1)
        if not np.all(np.isfinite(nxt)):
            raise SeriesBlowupError(k + 1)
        coeffs[k + 1] = nxt
    return _solution(coeffs, spacing, flow, config)


def _solution(coeffs, spacing, flow, config):
    series = TimePolyField(coeffs, spacing)
    sol = SeriesSolution(series, math.inf, flow.kind)
    return SeriesSolution(series, estimate_trust_radius(sol, config), flow.kind)


def estimate_trust_radius(sol: SeriesSolution, config: HpmConfig) -> float:
    """Ratio test on max-abs coefficient norms.

    Returns ``ratio_cap * min_k m_k / m_{k+1}`` over degrees with both norms
    positive, or ``inf`` when every higher coefficient vanishes.
    """
    m = sol.series.coeff_norms()
    ratios = [m[k] / m[k + 1] for k in range(len(m) - 1) if m[k + 1] > 0 and m[k] > 0]
    if not ratios:
        return math.inf
    return float(config.ratio_cap * min(ratios))


@dataclass(frozen=True)
class TraceRow:
    restart: int
    t: float
    dt: float
    trust_radius: float
    top_coeff_norm: float


@dataclass
class AdvanceResult:
    field: np.ndarray
    restarts: int
    trace: list[TraceRow]


def advance(u0, T: float, flow: Flow, config: HpmConfig, spacing: float = 1.0) -> AdvanceResult:
    """Evaluate the flow at time ``T`` by restarted series stepping.

    ``restarts`` counts expansions beyond the first.  More than
    ``config.max_restarts`` of them raises :class:`MaxRestartsExceeded`.
    """
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T}")
    u = as_field(u0).copy()
    trace: list[TraceRow] = []
    t = 0.0
    step = 0
    while t < T:
        if step > config.max_restarts:
            raise MaxRestartsExceeded(
                f"reached t={t:g} of T={T:g} after {config.max_restarts} restarts"
            )
        sol = build_series(u, flow, config, spacing)
        remaining = T - t
        dt = min(sol.trust_radius, remaining)
        u = poly_eval(sol.series, dt)
        if not np.all(np.isfinite(u)):
            raise SeriesBlowupError(config.order, f"non-finite field after step {step} (dt={dt:g})")
        t = T if dt == remaining else t + dt
        trace.append(TraceRow(step, t, dt, sol.trust_radius, float(sol.series.coeff_norms()[-1])))
        step += 1
    return AdvanceResult(u, max(step - 1, 0), trace)


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["restart", "t", "dt", "trust_radius", "top_coeff_max_abs"])
        for row in trace:
            w.writerow([row.restart, repr(row.t), repr(row.dt), repr(row.trust_radius), repr(row.top_coeff_norm)])
