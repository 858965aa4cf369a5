import os
import subprocess
import sys

import pytest

from bardina import _pykernels as py
from bardina import kernels

try:
    from bardina import _ckernels as cy
except ImportError:  # extension not built in this environment
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def brute_count(lo, hi):
    n = 0
    for a in range(1, int(hi**0.5) + 2):
        for b in range(-a, a + 1):
            q = a * a + b * b
            if lo <= q <= hi:
                n += 1
    return n


@needs_ext
@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("R2", [0.5, 10.0, 200.0, 1000.3])
def test_backends_agree_on_sums(d, R2):
    for m2 in (0.0, 0.01, 1.0, 25.0):
        if m2 > 0:
            assert cy.ball_sum_inv_sq(m2, R2, d) == pytest.approx(py.ball_sum_inv_sq(m2, R2, d), rel=1e-13, abs=1e-300)
            assert cy.ewald_real_sum(m2, 0.7, R2, d) == pytest.approx(py.ewald_real_sum(m2, 0.7, R2, d), rel=1e-13, abs=1e-300)
    for beta in (0.3, 2.0, 9.0):
        assert cy.exp_ball_sum(beta, R2, d) == pytest.approx(py.exp_ball_sum(beta, R2, d), rel=1e-13, abs=1e-300)


@needs_ext
@pytest.mark.parametrize("lo,hi", [(0, 0.5), (1, 2), (3.3, 50.1), (100, 900), (0, 5000)])
def test_backends_agree_on_counts(lo, hi):
    assert cy.count_wedge(lo, hi) == py.count_wedge(lo, hi)


@pytest.mark.parametrize("lo,hi", [(0, 10), (2, 2), (7.5, 130.0)])
def test_count_wedge_by_enumeration(lo, hi):
    assert py.count_wedge(lo, hi) == brute_count(lo, hi)


def test_ball_sum_small_radius_by_hand():
    # |k|² = 1 has 6 points in 3D and 4 in 2D
    assert py.ball_sum_inv_sq(1.0, 1.0, 3) == pytest.approx(6 / 4)
    assert py.ball_sum_inv_sq(1.0, 1.5, 2) == pytest.approx(4 / 4)
    assert py.ball_sum_inv_sq(1.0, 0.9, 3) == 0.0


def test_exp_ball_sum_by_hand():
    import math

    assert py.exp_ball_sum(1.0, 2.0, 2) == pytest.approx(4 * math.exp(-1) + 4 * math.exp(-math.sqrt(2)))


def test_env_var_forces_python_backend():
    code = "from bardina import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, BARDINA_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env.pop("BARDINA_PURE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("cython" if cy is not None else "python")


def test_dispatch_binds_selected_backend():
    impl = cy if kernels.BACKEND == "cython" else py
    assert kernels.count_wedge is impl.count_wedge
