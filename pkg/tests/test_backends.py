import os
import subprocess
import sys

import numpy as np
import pytest

from tanglesim import ExponentialDelay, FixedDelay, SimConfig, UniformDelay, run, solve_pde
from tanglesim._kernels import available_backends, backend_name, get_kernels

both = pytest.mark.skipif(
    len(available_backends()) < 2, reason="compiled kernels not built"
)

DELAYS = [FixedDelay(2.0), ExponentialDelay(0.5), UniformDelay(0.5, 3.5)]


def test_backend_is_reported():
    assert backend_name() in ("compiled", "pure")
    assert "pure" in available_backends()


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        get_kernels("gpu")


@both
def test_compiled_is_default_when_built():
    if os.environ.get("TANGLESIM_BACKEND"):
        pytest.skip("backend forced by environment")
    assert backend_name() == "compiled"


@both
@pytest.mark.parametrize("delay", DELAYS)
@pytest.mark.parametrize("arrival", ["poisson", "deterministic"])
def test_simulation_bit_identical_across_backends(delay, arrival):
    cfg = SimConfig(rate=6.0, delay=delay, horizon=40.0, seed=123, arrival=arrival)
    a = run(cfg, backend="compiled")
    b = run(cfg, backend="pure")
    assert np.array_equal(a.tips, b.tips)
    assert np.array_equal(a.tangle.parent_a, b.tangle.parent_a)
    assert np.array_equal(a.tangle.parent_b, b.tangle.parent_b)
    assert np.array_equal(a.tangle.approved_time, b.tangle.approved_time,
                          equal_nan=True)
    assert (a.n_tips, a.n_approved, a.n_pending) == (b.n_tips, b.n_approved, b.n_pending)


@both
@pytest.mark.parametrize("delay", DELAYS)
def test_density_solve_matches_across_backends(delay):
    a = solve_pde(delay, 60.0, 0.02, backend="compiled", snapshot_stride=500)
    b = solve_pde(delay, 60.0, 0.02, backend="pure", snapshot_stride=500)
    # summation order differs slightly between the kernels, nothing else
    assert np.allclose(a.scaled_tips, b.scaled_tips, rtol=1e-9, atol=1e-12)
    assert np.allclose(a.density_final, b.density_final, rtol=1e-9, atol=1e-12)
    assert np.array_equal(a.snapshot_steps, b.snapshot_steps)
    assert np.allclose(a.snapshot_density, b.snapshot_density, rtol=1e-9, atol=1e-12)


@both
def test_environment_override_forces_pure():
    code = (
        "from tanglesim._kernels import backend_name; print(backend_name())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "TANGLESIM_BACKEND": "pure"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "pure"


def test_environment_override_rejects_nonsense():
    code = "import tanglesim"
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "TANGLESIM_BACKEND": "cuda"},
        capture_output=True, text=True,
    )
    assert out.returncode != 0
    assert "TANGLESIM_BACKEND" in out.stderr
