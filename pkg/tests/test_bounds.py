import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bardina import bounds as B
from bardina.dynamics import simulate, time_avg_gradient
from bardina.kolmogorov import KolmogorovFlow, RegionParams
from bardina.verify import forced_problem

pos = st.floats(1e-3, 1e3)


def test_coefficient_isolation():
    assert B.upper_bound_3d(12 * math.pi, 1, 1) == pytest.approx(1.0, rel=1e-15)
    assert B.upper_bound_2d(16 * math.pi, 1, 1) == pytest.approx(1.0, rel=1e-15)
    assert B.upper_bound_2d_vorticity(8 * math.pi, 1, 1) == pytest.approx(1.0, rel=1e-15)


def test_gamma_doubling():
    assert B.upper_bound_3d(5.0, 0.1, 2.0) == pytest.approx(B.upper_bound_3d(5.0, 0.1, 1.0) / 16)


@given(g2=pos, a=st.floats(1e-3, 1), gm=st.floats(0.1, 10), c=st.floats(0.1, 10))
def test_homogeneous_in_forcing(g2, a, gm, c):
    for fn in (B.upper_bound_3d, B.upper_bound_2d, B.upper_bound_2d_vorticity):
        assert fn(c**2 * g2, a, gm) == pytest.approx(c**2 * fn(g2, a, gm), rel=1e-12)
        assert fn(g2, a, gm) >= 0


def test_rejects_nonpositive_parameters():
    with pytest.raises(ValueError):
        B.upper_bound_3d(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        B.upper_bound_2d(1.0, 1.0, -1.0)


@pytest.mark.parametrize("s,alpha", [(2, 0.05), (4, 0.05), (8, 0.001), (3, 0.1)])
def test_vorticity_bound_tighter_iff_small_two_alpha_s2(s, alpha):
    f = KolmogorovFlow(s, 1.3, 0.7, alpha, d=2)
    assert f.rot_forcing_norm_sq() == pytest.approx(s**2 * f.forcing_norm_sq(), rel=1e-15)
    vort = B.upper_bound_2d_vorticity(f.rot_forcing_norm_sq(), alpha, 0.7)
    plain = B.upper_bound_2d(f.forcing_norm_sq(), alpha, 0.7)
    assert vort / plain == pytest.approx(2 * alpha * s**2, rel=1e-12)
    assert (vort < plain) == (2 * alpha * s**2 < 1)


def test_two_dimensionless_2d_forms_agree_at_s_inverse_sqrt_alpha():
    s = 16
    alpha = 1 / s**2
    f = KolmogorovFlow(s, 4.0 * math.sqrt(alpha), 1.0, alpha, d=2)
    a = f.rot_forcing_norm_sq() / (alpha * f.gamma**4)
    b = f.forcing_norm_sq() / (alpha**2 * f.gamma**4)
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("K,gamma,n", [(0.0, 1.0, 1), (3.0, 1.0, 9), (6.0, 2.0, 9), (3.1, 1.0, 10)])
def test_n_star_examples(K, gamma, n):
    assert B.n_star(K, gamma) == n


@given(K=st.floats(0, 1e3), gamma=st.floats(0.01, 10))
def test_n_star_is_first_nonpositive_index(K, gamma):
    n = B.n_star(K, gamma)
    q = lambda m: -gamma * m + K * math.sqrt(m)  # noqa: E731
    assert n >= 1
    assert q(n) <= 1e-9 * max(1.0, gamma * n)
    assert q(n + 1) < 0
    if n > 1:
        assert q(n - 1) > 0


@given(g2=pos, a=st.floats(1e-3, 1), gm=st.floats(0.1, 10))
def test_root_of_averaged_q_is_the_upper_bound(g2, a, gm):
    K = B.trace_coefficient_averaged(math.sqrt(g2), a, gm)
    assert (K / gm) ** 2 == pytest.approx(B.upper_bound_3d(g2, a, gm), rel=1e-12)


def test_averaged_constant_from_instantaneous():
    # substituting ‖g‖/(γ√(2α)) into the instantaneous form gives the averaged coefficient
    g, a, gm = 2.3, 0.03, 0.8
    inst = B.trace_coefficient(g / (gm * math.sqrt(2 * a)), a)
    assert inst == pytest.approx(B.trace_coefficient_averaged(g, a, gm), rel=1e-14)
    assert B.C_TRACE == pytest.approx(math.sqrt(2 / 3) / (2 * math.sqrt(math.pi)))


def test_q_shape():
    n = np.arange(1, 200)
    q = B.q_of_n(n, 5.0, 1.0, 0.1)
    assert np.all(np.diff(q, 2) < 0)  # concave
    ns = B.n_star(B.trace_coefficient(5.0, 0.1), 1.0)
    assert np.all(q[n > ns] < 0)
    with pytest.raises(ValueError):
        B.q_of_n(0, 1.0, 1.0, 0.1)


def test_measured_q_curve_below_formula_curve():
    u0, p = forced_problem(3, 4, seed=21, alpha=0.05)
    rec = simulate(u0, p, 2.0, 0.02)
    n = np.arange(1, 50)
    measured = B.q_of_n(n, time_avg_gradient(rec), p.gamma, p.alpha)
    formula = B.q_of_n_averaged(n, math.sqrt(p.forcing_norm_sq), p.gamma, p.alpha)
    # the averaged bound carries the E(0)/t transient; on this window the measured average is smaller
    assert np.all(measured <= formula)


def test_consistency_report_ratio_and_gamma_invariance():
    r1 = B.consistency_report(1 / 256, 1.0, c1=6.0, max_samples=2)
    r2 = B.consistency_report(1 / 256, 3.0, c1=6.0, max_samples=2)
    assert r1.ratio >= 1
    assert r1.ratio == pytest.approx(r2.ratio, rel=1e-12)
    assert r1.n_star == math.ceil(r1.upper_3d)
    d = r1.to_dict()
    assert set(d["constants"]) == set(B.CONSTANTS)
    assert d["constants"]["upper_3d"] == 1 / (12 * math.pi)


def test_upper_bound_slope_exact():
    reps = [B.consistency_report(1 / s**2, 1.0, RegionParams(), 6.0, max_samples=0) for s in (8, 16, 32, 64)]
    assert B.loglog_slope([r.alpha for r in reps], [r.upper_3d for r in reps]) == pytest.approx(-1.5, abs=1e-10)
    assert all(r.ratio >= 1 for r in reps)


def test_consistency_report_rejects_large_alpha():
    with pytest.raises(ValueError):
        B.consistency_report(0.1, 1.0)
