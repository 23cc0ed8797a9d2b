import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qres import dimer
from qres.dynamics import capacity_at, gamma_rate, heisenberg
from qres.impact import capacity
from qres.operators import ValidationError
from qres.quadrature import integrate

seeds = st.integers(0, 2**32 - 1)
SITE = dimer.site_dephasing()


def rand_coeffs(rng):
    return dimer.ObservableCoeffs(*rng.normal(size=3), complex(*rng.normal(size=2)))


def zd_params(gamma_phi, J=100.0, g=5.0):
    return dimer.DimerParams(delta=0.0, J=J, gamma_phi=gamma_phi, gamma_D=g, gamma_A=g)


def test_mixing_angle():
    assert dimer.mixing_angle(0.0, 100.0) == pytest.approx(np.pi / 4)
    assert dimer.mixing_angle(130.0, 100.0) == pytest.approx(0.5 * np.arctan(200 / 130))


def test_parameter_validation():
    with pytest.raises(ValidationError):
        dimer.DimerParams(gamma_D=-1)
    with pytest.raises(ValidationError):
        dimer.DimerParams(p_A=1.5)
    with pytest.raises(ValidationError):
        dimer.DimerParams(delta=np.nan)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_damping_kraus_complete(eta, pd, pa):
    ks = dimer.damping_kraus(eta, pd, pa)
    assert np.allclose(sum(k.conj().T @ k for k in ks), np.eye(3), atol=1e-12)


def test_trivial_damping_is_identity():
    ks = dimer.damping_kraus(1.0, 0.0, 0.0)
    rho = np.full((3, 3), 1 / 3)
    assert np.allclose(sum(k @ rho @ k.conj().T for k in ks), rho)


def test_step_parameters():
    p = dimer.DimerParams.from_step(0.01, gamma_phi=50.0, gamma_D=5.0, gamma_A=7.0)
    assert p.step_residual(0.01) < 1e-15
    assert p.eta == pytest.approx(np.exp(-0.5))
    assert dimer.DimerParams(eta=0.5).step_residual(0.01) > 0.4


def test_xi_and_norm_bound():
    p = dimer.DimerParams(delta=30.0, J=100.0, gamma_phi=3.0, gamma_D=5.0, gamma_A=7.0)
    assert p.xi == pytest.approx(9.0)
    assert dimer.norm_bound(p) == pytest.approx(np.hypot(200, 30) + 24 + 12)
    assert dimer.norm_bound(p) == pytest.approx(dimer.generator(p).norm_bound())


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_reduced_ode_matches_liouville(seed):
    rng = np.random.default_rng(seed)
    p = dimer.DimerParams(delta=rng.uniform(-50, 50), J=rng.uniform(1, 50), gamma_phi=rng.uniform(0, 30),
                          gamma_D=rng.uniform(0, 10), gamma_A=rng.uniform(0, 10))
    m = rand_coeffs(rng)
    gen = dimer.generator(p)
    ts = rng.uniform(0, 0.5, 3)
    tr = dimer.ode_solution(p, m, ts)
    for i, t in enumerate(ts):
        mt = heisenberg(gen, m.matrix(), t)
        assert mt[1, 2] == pytest.approx(tr.u[i] + 1j * tr.v[i], abs=1e-10)
        assert mt[1, 1].real == pytest.approx(tr.x_D[i], abs=1e-10)
        assert mt[2, 2].real == pytest.approx(tr.x_A[i], abs=1e-10)
        assert capacity_at(gen, t, SITE, m.matrix()) == pytest.approx(tr.capacity[i], abs=1e-10)
    assert np.allclose(dimer.ode_rate(p, m, ts), [gamma_rate(gen, t, SITE, m.matrix()) for t in ts], atol=1e-9)


@pytest.mark.parametrize("gp, tag", [(0.0, "underdamped"), (399.0, "underdamped"), (400.0, "critical"),
                                     (401.0, "overdamped")])
def test_regime_tags_and_zero_detuning_solution(gp, tag):
    p = zd_params(gp)
    assert dimer.regime(p) == tag
    m = rand_coeffs(np.random.default_rng(int(gp)))
    ts = np.linspace(0, 0.1, 25)
    a, b = dimer.analytic_zero_detuning(p, m, ts), dimer.ode_solution(p, m, ts)
    for f in ("u", "v", "x_D", "x_A"):
        assert np.allclose(getattr(a, f), getattr(b, f), atol=1e-10)
    assert np.allclose(dimer.zero_detuning_rate(p, m, ts), dimer.ode_rate(p, m, ts), atol=1e-8)


def test_critical_band_continuity():
    m = rand_coeffs(np.random.default_rng(9))
    ts = np.linspace(0, 0.1, 7)
    crit = dimer.analytic_zero_detuning(zd_params(400.0), m, ts).capacity
    for gp in (400 * (1 - 1e-5), 400 * (1 + 1e-5)):
        assert np.allclose(dimer.analytic_zero_detuning(zd_params(gp), m, ts).capacity, crit, atol=1e-4)


def test_zero_dephasing_rate_and_resonance_forms():
    p = dimer.DimerParams(delta=130.0, J=100.0, gamma_D=5.0, gamma_A=5.0)
    gen = dimer.generator(p)
    a = dimer.ACCEPTOR.matrix()
    for t in (0.0, 0.013, 0.4):
        assert float(dimer.rate_closed_form(p, t)) == pytest.approx(gamma_rate(gen, t, SITE, a), abs=1e-10)
    r = zd_params(0.0)
    gen = dimer.generator(r)
    assert float(dimer.resonance_rate(r, 0.0)) == pytest.approx(100.0)
    for t in (0.005, 0.02, 0.3):
        assert float(dimer.resonance_capacity(r, t)) == pytest.approx(capacity_at(gen, t, SITE, a), abs=1e-12)
        assert float(dimer.resonance_rate(r, t)) == pytest.approx(gamma_rate(gen, t, SITE, a), abs=1e-9)


def test_regime_mismatch_errors():
    with pytest.raises(ValidationError, match="regime mismatch"):
        dimer.analytic_zero_dephasing(zd_params(5.0), dimer.ACCEPTOR, 0.1)
    with pytest.raises(ValidationError, match="regime mismatch"):
        dimer.bounds_closed_form(dimer.DimerParams(delta=10.0), dimer.ACCEPTOR, 0, 1)
    with pytest.raises(ValidationError, match="regime mismatch"):
        dimer.resonance_capacity(zd_params(1.0), 0.1)


@pytest.mark.parametrize("gp", [20.0, 400.0, 900.0])
def test_envelope_and_closed_bound_dominate(gp):
    rng = np.random.default_rng(int(gp))
    p = zd_params(gp)
    m = rand_coeffs(rng)
    rate = lambda s: float(dimer.zero_detuning_rate(p, m, s)[0])
    for t1, t2 in ((0.0, 0.05), (0.02, 0.3)):
        integ = integrate(rate, t1, t2, 1e-10)
        assert integ <= float(dimer.variation_bound_closed_form(p, m, t1, t2)) + 1e-9
    assert integrate(rate, 0.0, 2.0, 1e-10) <= dimer.feasibility_ceiling(p, m, 0.0) + 1e-9


def test_static_capacity_real_and_complex_nu():
    rng = np.random.default_rng(10)
    for _ in range(20):
        p = dimer.DimerParams(theta=rng.uniform(0, np.pi), eta=rng.random(), p_D=rng.random(), p_A=rng.random())
        chain = dimer.build_model(p).chain
        mc = rand_coeffs(rng)
        assert capacity(chain, SITE, mc.matrix()).capacity == pytest.approx(dimer.capacity_closed_form(p, mc), abs=1e-12)
        mr = dimer.ObservableCoeffs(mc.mu_g, mc.mu_D, mc.mu_A, mc.nu.real)
        assert dimer.capacity_closed_form_real_nu(p, mr) == pytest.approx(dimer.capacity_closed_form(p, mr), abs=1e-14)


def test_bounds_closed_form_min_time_consistent():
    p = zd_params(50.0)
    rep = dimer.bounds_closed_form(p, dimer.ACCEPTOR, 0.0, 0.2, target=0.3, n_grid=50)
    assert rep.extras["regime"] == "underdamped"
    assert float(dimer.variation_bound_closed_form(p, dimer.ACCEPTOR, 0.0, rep.min_time)) == pytest.approx(0.3)
    assert rep.ordering_violation() <= 1e-9
    assert rep.c_MG == pytest.approx(4 / 3)


def test_splitting_consistency():
    for gp in (0.0, 50.0):
        p = dimer.DimerParams(delta=130.0, J=100.0, gamma_phi=gp, gamma_D=5.0, gamma_A=7.0)
        dts = [1e-3 / 2 ** k for k in range(4)]
        c = [dimer.splitting_error(p, dt).sector / dt ** 2 for dt in dts]
        assert max(c) / min(c) < 1.1
    # ground-excited coherences: rate gamma_phi / 4 in the chain against gamma_phi / 2 in the generator
    p = dimer.DimerParams(delta=130.0, J=100.0, gamma_phi=50.0, gamma_D=5.0, gamma_A=7.0)
    assert dimer.splitting_error(p, 1e-4).full / 1e-4 == pytest.approx(50.0 / 4 * 2, rel=1e-2)
    p0 = dimer.DimerParams(delta=130.0, J=100.0, gamma_phi=0.0, gamma_D=5.0, gamma_A=7.0)
    assert dimer.splitting_error(p0, 1e-4).full < 1e-5


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_no_ground_excited_coherence(seed):
    rng = np.random.default_rng(seed)
    p = dimer.DimerParams(delta=rng.uniform(-200, 200), J=rng.uniform(1, 200), gamma_phi=rng.uniform(0, 500),
                          gamma_D=rng.uniform(0, 20), gamma_A=rng.uniform(0, 20))
    mt = heisenberg(dimer.generator(p), rand_coeffs(rng).matrix(), rng.uniform(0, 1))
    assert max(abs(mt[0, 1]), abs(mt[0, 2])) < 1e-12


def test_critical_limit_of_damped_formulas():
    p = zd_params(400.0)
    m = rand_coeffs(np.random.default_rng(11))
    ts = np.linspace(0, 0.1, 9)
    crit = dimer.analytic_zero_detuning(p, m, ts)
    z = dimer._zd(p)
    for reg in ("underdamped", "overdamped"):
        near = dimer._zd_trajectory(p, m, ts, dimer._ZD(z.xi, z.zeta, 1e-4, reg))
        assert np.allclose(near.v, crit.v, atol=1e-7) and np.allclose(near.s, crit.s, atol=1e-7)


@pytest.mark.parametrize("lo, hi", [(1.0, 399.0), (401.0, 2000.0), (400.0, 400.0)])
def test_envelope_coefficients_against_ode(lo, hi):
    rng = np.random.default_rng(int(lo))
    ts = np.linspace(0, 0.2, 41)
    for _ in range(10):
        p = zd_params(rng.uniform(lo, hi), g=rng.uniform(0, 20))
        m = rand_coeffs(rng)
        tr = dimer.ode_solution(p, m, ts)
        env = dimer.envelope(p, m)
        z = dimer._zd(p)
        lhs = p.J * tr.s - p.xi * tr.v
        if env.regime == "underdamped":
            rhs = np.exp(-z.zeta * ts) * (env.a * np.cos(z.freq * ts) + env.b * np.sin(z.freq * ts))
        elif env.regime == "overdamped":
            rhs = np.exp(-z.zeta * ts) * (env.a * np.cosh(z.freq * ts) + env.b * np.sinh(z.freq * ts))
        else:
            rhs = np.exp(-z.zeta * ts) * (env.a + env.b * ts)
        assert np.allclose(lhs, rhs, atol=1e-9 * max(1, np.max(np.abs(lhs))))
        if env.regime != "critical":
            assert np.all(np.abs(lhs) <= env.R * np.exp(-env.decay * ts) + 1e-9)
