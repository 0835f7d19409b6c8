import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from hpmdiff.cli import RADIAL_BOUNDARY_MARGIN, RADIAL_R_MIN, main, read_config_file
from hpmdiff.imageio import read_gray8
from hpmdiff.radial_oracle import exact_solution, radial_grid

from conftest import snapshot


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def load_coeff(path):
    with open(path) as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh)])


# --- radial-demo ------------------------------------------------------------


def test_radial_demo_time_zero(tmp_path):
    out = tmp_path / "r"
    assert main(["radial-demo", "--out-dir", str(out), "--t", "0", "--grid", "33", "--extent", "16", "--no-figures"]) == 0
    rows = read_csv(out / "radial_errors.csv")
    assert len(rows) == 1 and float(rows[0]["max_abs"]) == 0 and float(rows[0]["rms"]) == 0
    assert int(rows[0]["n_pixels"]) > 0
    for suffix in ("series.csv", "series.pgm", "series.range.txt", "exact.csv", "hpm.csv", "hpm.pgm"):
        assert (out / f"radial_t0_{suffix}").is_file()


@pytest.fixture(scope="module")
def radial_default(tmp_path_factory):
    out = tmp_path_factory.mktemp("radial")
    code = main(["radial-demo", "--out-dir", str(out)])
    return code, out


def test_radial_demo_defaults(radial_default):
    code, out = radial_default
    assert code == 0
    rows = read_csv(out / "radial_errors.csv")
    assert [float(r["t"]) for r in rows] == [0, 1, 10, 50]
    assert float(rows[1]["max_abs"]) < 1e-2
    for t in (0, 1, 10, 50):
        assert read_gray8(out / f"radial_t{t}_series.pgm").shape == (129, 129)
    assert (out / "radial_surfaces.png").stat().st_size > 0
    assert (out / "radial_errors.png").stat().st_size > 0
    trace = read_csv(out / "radial_trace.csv")
    assert float(trace[-1]["t"]) == 50.0


def test_radial_demo_scoring_region():
    assert RADIAL_R_MIN == 3.0 and RADIAL_BOUNDARY_MARGIN > 0


def test_negative_time_is_config_error(tmp_path, capsys):
    out = tmp_path / "neg"
    assert main(["radial-demo", "--out-dir", str(out), "--t", "-1"]) == 2
    assert not out.exists()
    assert "nonnegative" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["radial-demo", "--t", "2", "--t", "1"],
        ["radial-demo", "--order", "0"],
        ["radial-demo", "--ratio-cap", "1.5"],
        ["denoise"],
        ["radial-demo", "--diffusivity", "quartic"],
        ["bogus"],
    ],
)
def test_config_errors(tmp_path, argv):
    out = tmp_path / "x"
    assert main(argv + ["--out-dir", str(out)]) == 2
    assert not out.exists()


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("HPM_THREADS", "zero")
    assert main(["series-dump", "--out-dir", str(tmp_path / "x")]) == 2


# --- denoise ----------------------------------------------------------------


def test_denoise_time_zero_round_trip(tmp_path, step_pgm):
    out = tmp_path / "d"
    assert main(["denoise", "--input", str(step_pgm), "--out-dir", str(out), "--t", "0"]) == 0
    assert (out / "denoise_t0.pgm").read_bytes() == step_pgm.read_bytes()
    assert not (out / "noisy.pgm").exists()


def test_denoise_improves_psnr(tmp_path, step_pgm):
    out = tmp_path / "d"
    code = main(["denoise", "--input", str(step_pgm), "--out-dir", str(out), "--noise-sigma", "0.05", "--t", "0", "--t", "1"])
    assert code == 0
    rows = read_csv(out / "metrics.csv")
    psnr = {(r["run_id"], float(r["t"])): float(r["psnr"]) for r in rows}
    assert psnr[("hpm", 1.0)] > psnr[("input", 0.0)]
    assert psnr[("hpm", 0.0)] == psnr[("input", 0.0)]
    assert (out / "noisy.pgm").is_file() and (out / "denoise_panel.png").is_file()


def test_denoise_png_in_png_out(tmp_path, step_pgm):
    from hpmdiff.imageio import write_gray8

    png = tmp_path / "step.png"
    write_gray8(read_gray8(step_pgm), png)
    out = tmp_path / "d"
    assert main(["denoise", "--input", str(png), "--out-dir", str(out), "--t", "0.5", "--no-figures"]) == 0
    assert (out / "denoise_t0.5.png").read_bytes()[:4] == b"\x89PNG"


def test_denoise_missing_input(tmp_path, capsys):
    out = tmp_path / "d"
    missing = tmp_path / "nope.pgm"
    code = main(["denoise", "--input", str(missing), "--out-dir", str(out)])
    assert code != 0
    assert str(missing) in capsys.readouterr().err
    assert not out.exists()


def test_denoise_unsupported_image(tmp_path, capsys):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"GIF89a....")
    assert main(["denoise", "--input", str(bad), "--out-dir", str(tmp_path / "d")]) == 3
    assert "bad.pgm" in capsys.readouterr().err


# --- compare ----------------------------------------------------------------


def test_compare_heat(tmp_path, smooth_pgm):
    out = tmp_path / "c"
    code = main(["compare", "--input", str(smooth_pgm), "--out-dir", str(out), "--diffusivity", "heat", "--t", "0", "--t", "0.5", "--dt", "0.001"])
    assert code == 0
    rows = read_csv(out / "compare.csv")
    assert float(rows[0]["max_abs"]) == 0.0
    assert float(rows[1]["max_abs"]) < 1e-2
    assert all(r["fd_status"] == "ok" for r in rows)
    for name in ("compare_t0.5_hpm.pgm", "compare_t0.5_fd.pgm", "compare_t0.5_diff.pgm", "compare_timings.csv", "compare_panel.png"):
        assert (out / name).is_file()


def test_compare_unstable_fd_is_partial(tmp_path, smooth_pgm, capsys):
    out = tmp_path / "c"
    code = main(["compare", "--input", str(smooth_pgm), "--out-dir", str(out), "--t", "1", "--dt", "0.3"])
    assert code == 5
    assert (out / "compare_t1_hpm.pgm").is_file()
    assert not (out / "compare_t1_fd.pgm").exists()
    assert read_csv(out / "compare.csv")[0]["fd_status"] == "unstable"
    assert "unstable" in capsys.readouterr().err


# --- series-dump ------------------------------------------------------------


@pytest.fixture(scope="module")
def radial_dump(tmp_path_factory):
    out = tmp_path_factory.mktemp("dump")
    assert main(["series-dump", "--out-dir", str(out), "--order", "4", "--grid", "65", "--extent", "16"]) == 0
    X, Y = radial_grid(65, 0.5)
    r = np.hypot(X, Y)
    mask = (r >= RADIAL_R_MIN) & (r <= 16 - RADIAL_BOUNDARY_MARGIN)
    return out, r, mask


def test_series_dump_radial_files(radial_dump):
    out, r, mask = radial_dump
    assert sorted(p.name for p in out.glob("series_k*.csv")) == [f"series_k{k}.csv" for k in range(5)]
    X, Y = radial_grid(65, 0.5)
    np.testing.assert_array_equal(load_coeff(out / "series_k0.csv"), exact_solution(X, Y, 0.0))
    v1 = load_coeff(out / "series_k1.csv")
    assert np.max(np.abs(v1 / (1 / r) - 1)[mask]) <= 1e-2


@pytest.mark.xfail(strict=True, reason="second-order stencils at h = 0.5 miss 1% for v2..v4 near r = 3")
def test_series_dump_radial_higher_terms(radial_dump):
    out, r, mask = radial_dump
    exact = {2: -1 / (2 * r**3), 3: 1 / (2 * r**5), 4: -5 / (8 * r**7)}
    for k, want in exact.items():
        got = load_coeff(out / f"series_k{k}.csv")
        assert np.max(np.abs(got / want - 1)[mask]) <= 1e-2, k


def test_series_dump_trust_radius(radial_dump):
    out, r, _ = radial_dump
    info = read_config_file_like(out / "trust_radius.txt")
    analytic = r.min() ** 2 / 2
    assert float(info["analytic_radius_min"]) == pytest.approx(analytic)
    assert analytic / 2 <= float(info["trust_radius"]) <= 2 * analytic


def read_config_file_like(path):
    return dict(line.split(" = ", 1) for line in path.read_text().splitlines())


def test_series_dump_constant_input(tmp_path):
    from hpmdiff.imageio import write_gray8

    flat = tmp_path / "flat.pgm"
    write_gray8(np.full((10, 12), 77, np.uint8), flat)
    out = tmp_path / "s"
    assert main(["series-dump", "--input", str(flat), "--out-dir", str(out), "--order", "3"]) == 0
    for k in (1, 2, 3):
        assert not load_coeff(out / f"series_k{k}.csv").any()
    assert "trust_radius = inf" in (out / "trust_radius.txt").read_text()


# --- manifest and reproducibility ------------------------------------------


def test_manifest_round_trip(tmp_path, step_pgm):
    out = tmp_path / "a"
    args = ["denoise", "--input", str(step_pgm), "--out-dir", str(out), "--noise-sigma", "0.1", "--seed", "7", "--t", "0.5", "--k", "0.2"]
    assert main(args) == 0
    cfg = read_config_file(out / "manifest.txt")
    assert cfg["seed"] == 7 and cfg["t"] == [0.5] and cfg["k"] == 0.2 and cfg["command"] == "denoise"
    again = tmp_path / "b"
    assert main(["denoise", "--config", str(out / "manifest.txt"), "--out-dir", str(again)]) == 0
    assert snapshot(out) == snapshot(again)


def test_flags_override_config(tmp_path):
    conf = tmp_path / "c.txt"
    conf.write_text("order = 3\n# comment\ngrid = 9\nextent = 4.0\n")
    out = tmp_path / "s"
    assert main(["series-dump", "--config", str(conf), "--order", "2", "--out-dir", str(out)]) == 0
    text = (out / "manifest.txt").read_text()
    assert "order = 2\n" in text and "grid = 9\n" in text


def test_bad_config_file(tmp_path):
    conf = tmp_path / "c.txt"
    conf.write_text("colour = blue\n")
    assert main(["series-dump", "--config", str(conf), "--out-dir", str(tmp_path / "s")]) == 2


def run_cli(args, cwd, threads):
    env = dict(os.environ, HPM_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "hpmdiff", *args], cwd=cwd, env=env, capture_output=True, text=True)


def test_rerun_identical_across_thread_counts(tmp_path, step_pgm):
    a = run_cli(["compare", "--input", str(step_pgm), "--out-dir", "a", "--noise-sigma", "0.05", "--t", "0", "--t", "1"], tmp_path, 1)
    assert a.returncode == 0, a.stderr
    b = run_cli(["compare", "--config", "a/manifest.txt", "--out-dir", "b"], tmp_path, 8)
    assert b.returncode == 0, b.stderr
    skip = ("compare_timings.csv",)
    assert snapshot(tmp_path / "a", skip) == snapshot(tmp_path / "b", skip)
