import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bardina import dynamics as D
from bardina.spectral import SpectralField, TorusLattice, alpha_norm_sq, random_field
from bardina.verify import forced_problem, kolmogorov_steady_state


def test_unforced_energy_decays_exponentially(rng):
    # with g = 0 the nonlinear term drops out of the energy balance: E(t) = E(0) e^{-2γt}
    lat = TorusLattice(2, 8)
    u0 = random_field(lat, rng)
    p = D.PhysicsParams(0.05, 0.7, SpectralField.zeros(lat))
    rec = D.simulate(u0, p, 0.5, 1e-3, every=50)
    expected = rec.energy_alpha[0] * np.exp(-2 * 0.7 * rec.times)
    assert np.max(np.abs(rec.energy_alpha / expected - 1)) < 1e-10


def test_energy_residual_second_order():
    u0, p = forced_problem(2, 8, seed=5)
    r1 = D.simulate(u0, p, 0.04, 2e-3)
    r2 = D.simulate(u0, p, 0.04, 1e-3)
    e1, e2 = D.energy_residual(r1, p), D.energy_residual(r2, p)
    assert math.log2(e1 / e2) == pytest.approx(2.0, abs=0.1)
    c1, c2 = D.energy_residual(r1, p, "centered"), D.energy_residual(r2, p, "centered")
    assert math.log2(c1 / c2) == pytest.approx(2.0, abs=0.1)
    with pytest.raises(ValueError):
        D.energy_residual(r1, p, "spline")


def test_kolmogorov_steady_state_is_fixed_point():
    us, p = kolmogorov_steady_state(TorusLattice(2, 6), 3, 1.5, 0.8, 0.1)
    assert np.max(np.abs(D.rhs(us, p).coeffs)) < 1e-14
    rec = D.simulate(us, p, 2.0, 0.05, every=10)
    assert np.max(np.abs(rec.final.coeffs - us.coeffs)) < 1e-12


def test_kolmogorov_steady_state_3d():
    us, p = kolmogorov_steady_state(TorusLattice(3, 4), 2, 1.0, 1.0, 0.05)
    assert np.max(np.abs(D.rhs(us, p).coeffs)) < 1e-14


def test_dissipative_and_vorticity_estimates():
    u0, p = forced_problem(2, 8, seed=11)
    rec = D.simulate(u0, p, 1.0, 0.01)
    assert D.check_dissipative(rec, p)
    assert D.vorticity_estimate_2d(rec, p)
    assert D.time_avg_gradient(rec) <= D.grad_avg_bound(rec, p)


def test_vorticity_estimate_requires_2d():
    u0, p = forced_problem(3, 3, seed=2)
    rec = D.simulate(u0, p, 0.02, 0.01)
    with pytest.raises(ValueError):
        D.vorticity_estimate_2d(rec, p)


def test_blow_up_guard():
    u0, p = forced_problem(2, 8, seed=3, scale=50.0)
    with pytest.raises(D.BlowUpError):
        D.simulate(u0, p, 5.0, 1.0)


def test_param_and_input_validation(rng):
    lat = TorusLattice(2, 4)
    g = random_field(lat, rng)
    with pytest.raises(ValueError):
        D.PhysicsParams(0.0, 1.0, g)
    with pytest.raises(ValueError):
        D.PhysicsParams(0.1, -1.0, g)
    p = D.PhysicsParams(0.1, 1.0, g)
    bad = SpectralField(lat, random_field(lat, rng).coeffs)  # no flags
    with pytest.raises(ValueError):
        D.simulate(bad, p, 0.1, 0.01)
    with pytest.raises(ValueError):
        D.simulate(random_field(lat, rng), p, 0.001, 0.01)


def test_default_dt_bounded(rng):
    u0, p = forced_problem(2, 8, seed=4)
    dt = D.default_dt(u0, p)
    assert 0 < dt <= 0.05 / p.gamma


def test_csv_and_checkpoint_round_trip(tmp_path):
    u0, p = forced_problem(2, 6, seed=8)
    rec = D.simulate(u0, p, 0.05, 0.01)
    rec.write_csv(tmp_path / "t.csv")
    back = D.TrajectoryRecord.read_csv(tmp_path / "t.csv", rec.final)
    assert np.array_equal(back.energy_alpha, rec.energy_alpha)
    assert np.array_equal(back.vort_energy_alpha, rec.vort_energy_alpha)
    D.write_checkpoint(tmp_path / "c.json", rec, p)
    t, state, p2 = D.read_checkpoint(tmp_path / "c.json")
    assert t == pytest.approx(0.05)
    assert np.array_equal(state.coeffs, rec.final.coeffs)
    assert p2.alpha == p.alpha and np.array_equal(p2.forcing.coeffs, p.forcing.coeffs)


def test_flags_preserved_along_trajectory():
    u0, p = forced_problem(3, 4, seed=9)
    rec = D.simulate(u0, p, 0.1, 0.01)
    assert max(rec.max_flag_drift.values()) < 1e-12
    rec.final.check_flags()


@settings(max_examples=8)
@given(seed=st.integers(0, 10_000), gamma=st.floats(0.3, 3.0), alpha=st.floats(0.01, 0.5))
def test_energy_identity_holds_for_random_problems(seed, gamma, alpha):
    u0, p = forced_problem(2, 6, seed=seed, alpha=alpha, gamma=gamma)
    rec = D.simulate(u0, p, 0.02, 1e-3)
    assert D.energy_residual(rec, p) < 1e-5 * max(rec.energy_alpha.max(), p.forcing_norm_sq / gamma**2)
    assert D.check_dissipative(rec, p)
    assert alpha_norm_sq(rec.final, alpha) == pytest.approx(rec.energy_alpha[-1])
