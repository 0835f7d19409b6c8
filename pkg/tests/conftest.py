import numpy as np
import pytest

from hpmdiff.image_pipeline import save_image


def step_image(n=128):
    """Two flat halves with a mid-gray box touching the step."""
    img = np.full((n, n), 0.2)
    img[:, n // 2 :] = 0.8
    img[n // 4 : 3 * n // 4, n // 4 : n // 2] = 0.5
    return img


def smooth_image(n=33):
    y, x = np.mgrid[0:n, 0:n].astype(float)
    return 0.5 + 0.3 * np.sin(2 * np.pi * x / 16) * np.cos(2 * np.pi * y / 20)


def corpus():
    """Synthetic test images in [0, 1]."""
    rng = np.random.default_rng(2024)
    n = 48
    y, x = np.mgrid[0:n, 0:n].astype(float)
    disc = np.where((x - 20) ** 2 + (y - 26) ** 2 < 120, 0.9, 0.1)
    return {
        "step": step_image(n),
        "smooth": smooth_image(n),
        "disc": disc,
        "ramp": x / (n - 1),
        "checker": ((x // 6 + y // 6) % 2) * 0.6 + 0.2,
        "uniform_noise": rng.uniform(size=(n, n)),
        "noisy_step": np.clip(step_image(n) + 0.05 * rng.normal(size=(n, n)), 0, 1),
    }


def snapshot(directory, exclude=()):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file() and p.name not in exclude}


@pytest.fixture
def step_pgm(tmp_path):
    p = tmp_path / "step.pgm"
    save_image(step_image(64), p)
    return p


@pytest.fixture
def smooth_pgm(tmp_path):
    p = tmp_path / "smooth.pgm"
    save_image(smooth_image(33), p)
    return p


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_RESULTS = {}


def record(criterion, ok, detail):
    ACCEPTANCE_RESULTS[criterion] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
