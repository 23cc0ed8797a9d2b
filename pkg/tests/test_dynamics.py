import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qres import channels as chn
from qres.dynamics import (
    StepControlError,
    build_gkls,
    capacity_at,
    dini_check,
    gamma_rate,
    gamma_rate_sampled,
    gamma_zero_predicate,
    heisenberg,
    projected_rate,
    propagate,
    propagator_matrix,
    propagator_series,
    random_gkls,
    time_dependent_gkls,
    time_feasibility,
    variation_bound,
)
from qres.operators import ValidationError, random_density, random_hermitian
from qres.resource_maps import make_dephasing

SM = np.array([[0, 1], [0, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0])
seeds = st.integers(0, 2**32 - 1)


def test_negative_rate_rejected():
    with pytest.raises(ValidationError, match="negative_rate"):
        build_gkls(np.zeros((2, 2)), [(SM, -0.1)])


def test_amplitude_damping_solution():
    gam = 0.8
    gen = build_gkls(np.zeros((2, 2)), [(SM, gam)])
    rho = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]])
    for t in (0.1, 1.0, 3.0):
        out = propagate(gen, t)(rho)
        assert out[1, 1] == pytest.approx(0.7 * np.exp(-gam * t), abs=1e-12)
        assert out[0, 1] == pytest.approx(rho[0, 1] * np.exp(-gam * t / 2), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_generator_duality_and_semigroup(seed):
    rng = np.random.default_rng(seed)
    gen = random_gkls(rng, 3)
    m, rho = random_hermitian(rng, 3), random_density(rng, 3)
    lhs = np.trace(m @ gen.liouville(rho))
    rhs = np.trace(gen.adjoint_liouville(m) @ rho)
    assert lhs == pytest.approx(rhs, abs=1e-11)
    a, b = propagator_matrix(gen, 0.3), propagator_matrix(gen, 0.5)
    assert np.allclose(a @ b, propagator_matrix(gen, 0.8), atol=1e-11)
    rep = chn.cptp_check(chn.SuperOperator(b))
    assert rep.is_cp and rep.is_tp
    assert np.allclose(heisenberg(gen, m, 0.5), propagate(gen, 0.5).adjoint_apply(m), atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_norm_bound_dominates_estimate(seed):
    gen = random_gkls(np.random.default_rng(seed), 3, scale=2.0)
    assert chn.induced_one_norm(gen.liouville, restarts=4) <= gen.norm_bound() + 1e-10


def test_time_dependent_matches_exact_phase():
    a = 5.0
    gen = time_dependent_gkls(lambda t: (a * t / 2 * SZ, []), 2)
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    for t in (0.5, 1.0):
        out = chn.SuperOperator(propagator_matrix(gen, t))(rho)
        assert out[0, 1] == pytest.approx(0.5 * np.exp(-1j * a * t ** 2 / 2), abs=1e-9)


def test_step_control_failure_is_reported():
    gen = time_dependent_gkls(lambda t: (t * SZ, []), 2)
    with pytest.raises(StepControlError):
        propagator_matrix(gen, 1.0, tol=1e-30, max_halvings=1)


def test_dephasing_rate_for_rotating_qubit():
    # H = w X / 2 rotates |0><0| population; C(t) = |sin(w t)| / 2 for M = |0><0|
    w = 3.0
    gen = build_gkls(w / 2 * np.array([[0, 1], [1, 0]]))
    g = make_dephasing(dim=2)
    m = np.diag([1.0, 0.0])
    for t in (0.2, 0.7, 1.3):
        assert capacity_at(gen, t, g, m) == pytest.approx(abs(np.sin(w * t)) / 2, abs=1e-12)
        assert gamma_rate(gen, t, g, m) == pytest.approx(w * abs(np.cos(w * t)) / 2, abs=1e-12)


def test_sampled_and_projected_rates_are_lower_bounds():
    rng = np.random.default_rng(1)
    gen = random_gkls(rng, 2)
    g = make_dephasing(dim=2)
    m = random_hermitian(rng, 2)
    gam = gamma_rate(gen, 0.4, g, m)
    assert gamma_rate_sampled(gen, 0.4, g, m, n_samples=200) <= gam + 1e-12
    assert projected_rate(gen, 0.4, g.free_extreme_points, m, n_samples=10) <= gam + 1e-6


def test_zero_rate_predicate():
    g = make_dephasing(dim=2)
    pure_deph = build_gkls(np.diag([0.3, -0.3]), [(SZ, 0.5)])
    rep = gamma_zero_predicate(pure_deph, 0.5, g, np.diag([1.0, 0.0]))
    assert rep.vanishes and rep.agrees
    rep = gamma_zero_predicate(random_gkls(np.random.default_rng(2), 2), 0.5, g, np.diag([1.0, 0.0]))
    assert not rep.vanishes and rep.agrees


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_variation_bound_random(seed):
    rng = np.random.default_rng(seed)
    gen = random_gkls(rng, 2)
    g = make_dephasing(dim=2)
    t1, t2 = np.sort(rng.uniform(0, 2, 2))
    lhs, rhs = variation_bound(gen, g, random_hermitian(rng, 2), t1, t2)
    assert lhs <= rhs + 1e-8


def test_dini_quotients_within_rate():
    gen = random_gkls(np.random.default_rng(3), 3)
    rep = dini_check(gen, make_dephasing(dim=3), random_hermitian(np.random.default_rng(4), 3), 0.5,
                     [1e-2, 1e-3, 1e-4])
    assert rep.passed
    with pytest.raises(ValidationError):
        dini_check(gen, make_dephasing(dim=3), np.eye(3), 0.5, [1e-3, 1e-2])


def test_time_feasibility_chain():
    rng = np.random.default_rng(5)
    gen = random_gkls(rng, 2)
    rep = time_feasibility(gen, make_dephasing(dim=2), random_hermitian(rng, 2), 0.0, 1.0, target=0.1, n_grid=40)
    assert rep.ordering_violation() <= 1e-9
    assert rep.min_time == pytest.approx(0.1 / (rep.c_MG * rep.L_max))
    assert rep.feasible == (0.1 <= rep.feasibility_ceiling)
    assert rep.extras["L_max_estimate"] <= rep.L_max + 1e-10
    # the GKLS rate bound holds pointwise
    assert np.all(rep.gamma_series <= rep.extras["gkls_gamma_bound"] + 1e-9)


def test_magnus_and_chained_propagation_agree():
    gen = time_dependent_gkls(lambda t: (np.array([[t, 1], [1, -t]]), [(SM, 0.5 + 0.5 * np.sin(t))]), 2)
    rk = propagator_matrix(gen, 1.0)
    # second order, so a looser tolerance keeps the halving count small
    mg = propagator_matrix(gen, 1.0, tol=1e-6, method="magnus2")
    assert np.max(np.abs(rk - mg)) < 1e-5
    split = propagator_matrix(gen, 1.0, t0=0.4) @ propagator_matrix(gen, 0.4)
    assert np.max(np.abs(split - rk)) < 1e-8
    series = propagator_series(gen, np.linspace(0, 1, 6))
    assert np.max(np.abs(series[-1] - rk)) < 1e-8
    with pytest.raises(ValidationError):
        propagator_matrix(gen, 1.0, method="euler")


def test_identity_observable_has_zero_rate():
    gen = random_gkls(np.random.default_rng(6), 3)
    assert gamma_rate(gen, 0.7, make_dephasing(dim=3), np.eye(3)) < 1e-12
    assert np.allclose(propagator_matrix(gen, 0.0), np.eye(9))
