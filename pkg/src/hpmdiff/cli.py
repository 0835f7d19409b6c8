"""Command-line front end.

    hpmdiff radial-demo  [--grid N] [--t T ...]
    hpmdiff denoise      --input IMG [--noise-sigma S] [--t T ...]
    hpmdiff compare      --input IMG [--dt DT] [--t T ...]
    hpmdiff series-dump  [--input IMG] [--order N]

Every run writes ``manifest.txt`` into ``--out-dir``; passing it back via
``--config`` reproduces the run (explicit flags still override it).

Exit codes: 0 success, 2 configuration error, 3 input/output error,
4 solver error, 5 partial success (``compare`` with an unstable FD path).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import plotting
from .errors import HpmError, ImageFormatError, UnstableStepError
from .field_poly import dump_csv
from .hpm_solver import HpmConfig, TraceRow, advance, build_series, write_trace_csv
from .image_pipeline import (
    NoiseSpec,
    add_noise,
    compute_metrics,
    fd_evolve,
    load_image,
    save_image,
    select_flow,
    write_metrics_csv,
)
from .imageio import write_heatmap
from .pde_operators import DiffusivitySpec
from .radial_oracle import convergence_radius, exact_solution, radial_grid, ten_term_approx, write_xyz_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SOLVER = 4
EXIT_PARTIAL = 5

COMMANDS = ("radial-demo", "denoise", "compare", "series-dump")
DIFFUSIVITIES = ("rational", "exponential", "curvature", "heat")

# inner radius of the region where the radial solution is scored; the outer
# edge stays this far inside the mirror boundary, which the cone does not satisfy
RADIAL_R_MIN = 3.0
RADIAL_BOUNDARY_MARGIN = 4.0


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    t: list[float] = field(default_factory=lambda: [0.0, 1.0, 10.0, 50.0])
    diffusivity: str = "rational"
    k: float = 0.1
    sigma: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0
    order: int = 10
    eps: float = 1e-4
    ratio_cap: float = 0.25
    max_restarts: int = 10_000
    grid: int = 129
    extent: float = 32.0
    dt: float = 0.05
    figures: bool = True

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.t:
            raise ConfigError("t-list must not be empty")
        if any(not math.isfinite(t) or t < 0 for t in self.t):
            raise ConfigError(f"t-list entries must be finite and nonnegative, got {self.t}")
        if any(b < a for a, b in zip(self.t, self.t[1:])):
            raise ConfigError(f"t-list must be nondecreasing, got {self.t}")
        if self.diffusivity not in DIFFUSIVITIES:
            raise ConfigError(f"--diffusivity must be one of {DIFFUSIVITIES}")
        if self.command in ("denoise", "compare") and not self.input:
            raise ConfigError(f"{self.command} requires --input")
        if self.sigma < 0:
            raise ConfigError("--sigma must be nonnegative")
        if self.grid < 3:
            raise ConfigError("--grid must be at least 3")
        if not self.extent > 0:
            raise ConfigError("--extent must be positive")
        if not self.dt > 0:
            raise ConfigError("--dt must be positive")
        try:
            self.hpm_config()
            self.diffusivity_spec()
            NoiseSpec(self.noise_sigma, self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def hpm_config(self) -> HpmConfig:
        return HpmConfig(self.order, self.eps, self.ratio_cap, self.max_restarts, self.k)

    def diffusivity_spec(self) -> DiffusivitySpec:
        if self.diffusivity in ("curvature", "heat"):
            return DiffusivitySpec("constant_one", self.k)
        return DiffusivitySpec(self.diffusivity, self.k)

    def flow(self):
        kind = "curvature" if self.diffusivity == "curvature" else "divergence"
        return select_flow(self.diffusivity_spec(), self.sigma, self.eps, kind)

    def manifest_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            elif v is None:
                v = ""
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _coerce(name, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    raw = raw.strip()
    kind = types[name]
    try:
        if name == "t":
            return [float(x) for x in raw.split(",") if x.strip()]
        if name == "input":
            return raw or None
        if kind == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        out[key] = _coerce(key, value)
    return out


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="key = value file; explicit flags override it")
    common.add_argument("--input", help="input image (PGM P2/P5 or 8-bit PNG)")
    common.add_argument("--out-dir", default="out", help="output directory (default: out)")
    common.add_argument("--t", action="append", type=float, dest="t", help="output time; repeatable (default 0 1 10 50)")
    common.add_argument("--diffusivity", choices=DIFFUSIVITIES)
    common.add_argument("--k", type=float, help="contrast parameter")
    common.add_argument("--sigma", type=float, help="Gaussian pre-smoothing width in pixels (0 disables)")
    common.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    common.add_argument("--seed", type=int)
    common.add_argument("--order", type=int, help="series order N")
    common.add_argument("--eps", type=float, help="gradient regularization")
    common.add_argument("--ratio-cap", type=float, dest="ratio_cap")
    common.add_argument("--max-restarts", type=int, dest="max_restarts")
    common.add_argument("--grid", type=int, help="radial grid size (pixels per side)")
    common.add_argument("--extent", type=float, help="radial grid half-width")
    common.add_argument("--dt", type=float, help="FD baseline time step")
    common.add_argument("--no-figures", action="store_false", dest="figures", help="skip matplotlib figures")

    parser = argparse.ArgumentParser(prog="hpmdiff", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("radial-demo", parents=[common], help="radial cone: ten-term series, exact and grid solutions")
    sub.add_parser("denoise", parents=[common], help="denoise an image at each requested time")
    sub.add_parser("compare", parents=[common], help="HPM against the explicit FD baseline")
    sub.add_parser("series-dump", parents=[common], help="dump one series' coefficient fields")
    return parser


def resolve_config(argv) -> tuple[RunConfig, Path]:
    args = vars(build_parser().parse_args(argv))
    out_dir = Path(args.pop("out_dir", "out"))
    values = {}
    if "config" in args:
        values.update(read_config_file(args.pop("config")))
    values.pop("command", None)
    values.update(args)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg, out_dir


def _fmt_t(t: float) -> str:
    return f"{t:g}"


def _threads():
    raw = os.environ.get("HPM_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"HPM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"HPM_THREADS must be a positive integer, got {raw!r}")
    return n


def _segments(ts):
    """Yield ``(t, dt_from_previous)`` for a nondecreasing t-list starting at 0."""
    prev = 0.0
    for t in ts:
        yield t, t - prev
        prev = t


def _extend_trace(trace, rows):
    """Append a segment's trace with restart indices and times made cumulative."""
    base = trace[-1].t if trace else 0.0
    offset = len(trace)
    trace.extend(TraceRow(r.restart + offset, r.t + base, r.dt, r.trust_radius, r.top_coeff_norm) for r in rows)


def cmd_radial_demo(cfg: RunConfig, out: Path) -> int:
    n = cfg.grid
    h = 2.0 * cfg.extent / (n - 1)
    X, Y = radial_grid(n, h)
    r = np.hypot(X, Y)
    region = (r >= RADIAL_R_MIN) & (r <= cfg.extent - RADIAL_BOUNDARY_MARGIN)
    u = exact_solution(X, Y, 0.0)
    config = cfg.hpm_config()
    flow = select_flow(DiffusivitySpec("constant_one", cfg.k), 0.0, cfg.eps, "curvature")

    trace, err_rows, fig_rows = [], [], []
    for t, seg in _segments(cfg.t):
        if seg > 0:
            res = advance(u, seg, flow, config, h)
            u = res.field
            _extend_trace(trace, res.trace)
        tag = f"radial_t{_fmt_t(t)}"
        series = ten_term_approx(X, Y, t)
        exact = exact_solution(X, Y, t)
        write_xyz_csv(out / f"{tag}_series.csv", X, Y, series)
        write_heatmap(series, out / f"{tag}_series.pgm")
        write_xyz_csv(out / f"{tag}_exact.csv", X, Y, exact)
        write_xyz_csv(out / f"{tag}_hpm.csv", X, Y, u)
        write_heatmap(u, out / f"{tag}_hpm.pgm")
        err = np.abs(u - exact)[region]
        err_rows.append((t, float(err.max()) if err.size else 0.0, float(np.sqrt(np.mean(err**2))) if err.size else 0.0, int(err.size)))
        fig_rows.append((t, {"ten-term series": series, "exact": exact, "grid HPM": u}))

    with open(out / "radial_errors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "max_abs", "rms", "n_pixels"])
        for t, mx, rms, npx in err_rows:
            w.writerow([repr(float(t)), repr(mx), repr(rms), npx])
    write_trace_csv(trace, out / "radial_trace.csv")
    if cfg.figures:
        ext = X.min() - h / 2, X.max() + h / 2
        plotting.surface_grid(fig_rows, (*ext, *ext), out / "radial_surfaces.png")
        plotting.error_curve([row[0] for row in err_rows], {"max-abs": [row[1] for row in err_rows], "rms": [row[2] for row in err_rows]}, out / "radial_errors.png")
    return EXIT_OK


def _load_inputs(cfg: RunConfig, out: Path):
    clean = load_image(cfg.input)
    if clean.shape[0] < 3 or clean.shape[1] < 3:
        raise ImageFormatError(f"{cfg.input}: image must be at least 3x3")
    ext = Path(cfg.input).suffix.lower()
    ext = ext if ext in (".png", ".pgm") else ".pgm"
    noisy = add_noise(clean, NoiseSpec(cfg.noise_sigma, cfg.seed))
    if cfg.noise_sigma > 0:
        save_image(noisy, out / f"noisy{ext}")
    return clean, noisy, ext


def cmd_denoise(cfg: RunConfig, out: Path) -> int:
    clean, noisy, ext = _load_inputs(cfg, out)
    flow, config = cfg.flow(), cfg.hpm_config()
    rows = [("input", 0.0, compute_metrics(clean, noisy))]
    images, titles, trace = [], [], []
    u = noisy
    for t, seg in _segments(cfg.t):
        if seg > 0:
            res = advance(u, seg, flow, config)
            u = res.field
            _extend_trace(trace, res.trace)
        result = np.clip(u, 0.0, 1.0)
        save_image(result, out / f"denoise_t{_fmt_t(t)}{ext}")
        rows.append(("hpm", t, compute_metrics(clean, result)))
        images.append(result)
        titles.append(f"t = {t:g}")
    write_metrics_csv(rows, out / "metrics.csv")
    write_trace_csv(trace, out / "denoise_trace.csv")
    if cfg.figures:
        plotting.image_row(images, titles, out / "denoise_panel.png")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out: Path) -> int:
    _, noisy, ext = _load_inputs(cfg, out)
    flow, config = cfg.flow(), cfg.hpm_config()
    u_hpm = noisy
    u_fd = noisy
    fd_error = None
    rows, timings, panel, titles = [], [], [], []
    for t, seg in _segments(cfg.t):
        tag = f"compare_t{_fmt_t(t)}"
        t0 = time.perf_counter()
        if seg > 0:
            u_hpm = advance(u_hpm, seg, flow, config).field
        hpm_s = time.perf_counter() - t0
        hpm_img = np.clip(u_hpm, 0.0, 1.0)
        save_image(hpm_img, out / f"{tag}_hpm{ext}")

        fd_s = float("nan")
        if fd_error is None:
            t0 = time.perf_counter()
            try:
                if seg > 0:
                    u_fd = fd_evolve(u_fd, seg, flow, cfg.dt)
            except UnstableStepError as exc:
                fd_error = str(exc)
            fd_s = time.perf_counter() - t0
        if fd_error is None:
            fd_img = np.clip(u_fd, 0.0, 1.0)
            save_image(fd_img, out / f"{tag}_fd{ext}")
            diff = hpm_img - fd_img
            write_heatmap(np.abs(diff), out / f"{tag}_diff.pgm")
            rows.append((t, float(np.abs(diff).max()), float(np.sqrt(np.mean(diff**2))), "ok"))
            panel += [hpm_img, fd_img]
            titles += [f"HPM t={t:g}", f"FD t={t:g}"]
        else:
            rows.append((t, float("nan"), float("nan"), "unstable"))
        timings.append((t, hpm_s, fd_s))

    with open(out / "compare.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "max_abs", "rms", "fd_status"])
        for t, mx, rms, status in rows:
            w.writerow([repr(float(t)), repr(mx), repr(rms), status])
    with open(out / "compare_timings.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "hpm_seconds", "fd_seconds"])
        for t, a, b in timings:
            w.writerow([repr(float(t)), f"{a:.6f}", f"{b:.6f}"])
    if cfg.figures and panel:
        plotting.image_row(panel, titles, out / "compare_panel.png")
    if fd_error is not None:
        print(f"hpmdiff: FD baseline unstable: {fd_error}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_series_dump(cfg: RunConfig, out: Path) -> int:
    config = cfg.hpm_config()
    lines = []
    if cfg.input:
        u0 = load_image(cfg.input)
        h = 1.0
        flow = cfg.flow()
    else:
        n = cfg.grid
        h = 2.0 * cfg.extent / (n - 1)
        X, Y = radial_grid(n, h)
        u0 = exact_solution(X, Y, 0.0)
        flow = select_flow(DiffusivitySpec("constant_one", cfg.k), 0.0, cfg.eps, "curvature")
        lines.append(f"analytic_radius_min = {convergence_radius(np.hypot(X, Y))!r}")
    sol = build_series(u0, flow, config, h)
    dump_csv(sol.series, out / "series")
    lines.insert(0, f"trust_radius = {sol.trust_radius!r}")
    lines.append(f"rhs_kind = {sol.rhs_kind}")
    lines.append(f"order = {sol.series.order}")
    lines.append(f"spacing = {h!r}")
    (out / "trust_radius.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK


HANDLERS = {
    "radial-demo": cmd_radial_demo,
    "denoise": cmd_denoise,
    "compare": cmd_compare,
    "series-dump": cmd_series_dump,
}


def main(argv=None) -> int:
    try:
        cfg, out = resolve_config(argv)
        _threads()
        if cfg.input and not Path(cfg.input).is_file():
            print(f"hpmdiff: input file not found: {cfg.input}", file=sys.stderr)
            return EXIT_IO
    except ConfigError as exc:
        print(f"hpmdiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.txt").write_text(cfg.manifest_text())
        return HANDLERS[cfg.command](cfg, out)
    except ImageFormatError as exc:
        print(f"hpmdiff: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"hpmdiff: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HpmError as exc:
        print(f"hpmdiff: solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
