"""Randomized invariant suites behind ``qres verify``.

Each check returns its worst residual; a check passes when the residual
is at most its tolerance. Inequalities report the largest violation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels as chn
from . import decomposition as dec
from . import dimer
from .dynamics import capacity_at, gamma_rate, propagator_matrix, random_gkls, variation_bound
from .impact import capacity, pi_advantage
from .operators import (
    ValidationError,
    _rng,
    op_norm,
    random_density,
    random_hermitian,
    random_povm_element,
    random_unitary,
    vec,
)
from .resource_maps import make_dephasing, make_replacement, resource_radius


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float
    seed: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst <= self.tol)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{tag}  {self.name:<34s} worst={self.worst:.3e} tol={self.tol:.0e} seed={self.seed}{extra}"


def _maps(d):
    return [make_dephasing(dim=d), make_replacement(np.eye(d) / d)]


def check_row_stacking(seed, n):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 5))
        a, b = random_hermitian(rng, d) + 1j * random_hermitian(rng, d), random_unitary(rng, d)
        r = random_density(rng, d)
        worst = max(worst, float(np.max(np.abs(vec(a @ r @ b) - np.kron(a, b.T) @ vec(r)))))
    return worst


def check_kraus_paths(seed, n):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 5))
        ch = chn.random_channel(rng, d)
        r = random_density(rng, d)
        worst = max(worst, float(np.max(np.abs(ch(r) - ch.apply_kraus(r)))))
    return worst


def check_duality(seed, n):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 5))
        ch = chn.random_channel(rng, d)
        m, r = random_hermitian(rng, d), random_density(rng, d)
        lhs = np.trace(m @ ch(r))
        rhs = np.trace(ch.adjoint_apply(m) @ r)
        worst = max(worst, abs(lhs - rhs), float(np.max(np.abs(ch.adjoint_apply(np.eye(d)) - np.eye(d)))))
    return worst


def check_idempotence(seed, n):
    worst = 0.0
    for d in (2, 3, 4):
        for g in _maps(d):
            worst = max(worst, g.idempotence_residual())
    return worst


def check_pullback(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    worst = 0.0
    for _ in range(n):
        l1, l2 = chn.random_channel(rng, 3), chn.random_channel(rng, 3)
        m = random_hermitian(rng, 3)
        a = capacity(chn.compose(l2, l1), g, m).capacity
        b = capacity(l1, g, l2.adjoint_apply(m)).capacity
        worst = max(worst, abs(a - b))
    return worst


def check_convexity(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    worst = 0.0
    for _ in range(n):
        k = int(rng.integers(2, 4))
        chans = [chn.random_channel(rng, 3) for _ in range(k)]
        p = rng.dirichlet(np.ones(k))
        m = random_hermitian(rng, 3)
        lhs = capacity(chn.mix(p, chans), g, m).capacity
        rhs = sum(pi * capacity(c, g, m).capacity for pi, c in zip(p, chans))
        worst = max(worst, lhs - rhs)
    return max(worst, 0.0)


def check_seminorm(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    worst = 0.0
    for _ in range(n):
        ch = chn.random_channel(rng, 3)
        m1, m2 = random_hermitian(rng, 3), random_hermitian(rng, 3)
        a, b = rng.normal(size=2)
        c1, c2 = capacity(ch, g, m1).capacity, capacity(ch, g, m2).capacity
        lhs = capacity(ch, g, a * m1 + b * m2).capacity
        worst = max(worst, lhs - abs(a) * c1 - abs(b) * c2, abs(capacity(ch, g, a * m1).capacity - abs(a) * c1))
    return max(worst, 0.0)


def check_pi_below_c(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    worst = 0.0
    for _ in range(n):
        ch = chn.random_channel(rng, 3)
        m = random_povm_element(rng, 3)
        worst = max(worst, pi_advantage(ch, g.free_extreme_points, m) - capacity(ch, g, m).capacity)
    return max(worst, 0.0)


def check_resource_part(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    worst = 0.0
    for _ in range(n):
        ch = chn.random_channel(rng, 3)
        r = dec.capacity_equality_check(ch, g, random_hermitian(rng, 3))
        worst = max(worst, r.max_gap)
    return worst


def check_lipschitz(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    worst = 0.0
    for _ in range(n):
        l1, l2 = chn.random_channel(rng, 3), chn.random_channel(rng, 3)
        m = random_hermitian(rng, 3)
        lhs = abs(capacity(l1, g, m).capacity - capacity(l2, g, m).capacity)
        k = 2 * op_norm(m) * chn.diamond_upper(l1 - l2, restarts=4, seed=rng).upper_surrogate
        worst = max(worst, lhs - k)
    return max(worst, 0.0)


def check_variation(seed, n):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 4))
        gen = random_gkls(rng, d)
        g = make_dephasing(dim=d)
        m = random_hermitian(rng, d)
        t1, t2 = np.sort(rng.uniform(0, 2, size=2))
        lhs, rhs = variation_bound(gen, g, m, t1, t2)
        worst = max(worst, lhs - rhs)
    return max(worst, 0.0)


def check_rate_vs_norm(seed, n):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 4))
        gen = random_gkls(rng, d)
        g = make_dephasing(dim=d)
        m = random_hermitian(rng, d)
        c = op_norm(m) * resource_radius(g, restarts=4).value
        t = float(rng.uniform(0, 2))
        worst = max(worst, gamma_rate(gen, t, g, m) - c * gen.norm_bound())
    return max(worst, 0.0)


def check_propagated_cptp(seed, n):
    rng = _rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 4))
        gen = random_gkls(rng, d)
        rep = chn.cptp_check(chn.SuperOperator(propagator_matrix(gen, float(rng.uniform(0, 3)))))
        worst = max(worst, -rep.min_choi_eigenvalue, rep.tp_residual)
    return max(worst, 0.0)


def check_dimer_closed_form(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    worst = 0.0
    for _ in range(n):
        p = dimer.DimerParams(theta=rng.uniform(0, np.pi), eta=rng.random(), p_D=rng.random(), p_A=rng.random())
        m = dimer.ObservableCoeffs(*rng.normal(size=3), complex(*rng.normal(size=2)))
        c = capacity(dimer.build_model(p).chain, g, m.matrix()).capacity
        worst = max(worst, abs(c - dimer.capacity_closed_form(p, m)))
    return worst


def check_dimer_rate(seed, n):
    rng = _rng(seed)
    g = dimer.site_dephasing()
    p = dimer.DimerParams(delta=130.0, J=100.0, gamma_D=5.0, gamma_A=5.0)
    gen = dimer.generator(p)
    m = dimer.ACCEPTOR.matrix()
    worst = 0.0
    for t in rng.uniform(0, 1, size=n):
        worst = max(worst, abs(gamma_rate(gen, t, g, m) - float(dimer.rate_closed_form(p, t))),
                    abs(capacity_at(gen, t, g, m) - float(dimer.analytic_zero_dephasing(p, dimer.ACCEPTOR, t).capacity[0])))
    return worst


def check_completeness(seed, n, broken=False):
    """Negative control: a Kraus set with a scaled operator must be rejected."""
    rng = _rng(seed)
    ops = list(chn.random_channel(rng, 3).kraus)
    if broken:
        ops[0] = 1.1 * ops[0]
    try:
        chn.from_kraus(ops)
    except ValidationError as e:
        return np.inf, str(e)
    return 0.0, ""


SUITES = [
    ("row-stacking identity", check_row_stacking, 1e-12, 1.0),
    ("Kraus vs Liouville application", check_kraus_paths, 1e-11, 1.0),
    ("adjoint duality and unitality", check_duality, 1e-11, 1.0),
    ("idempotence of G", check_idempotence, 1e-10, 0.0),
    ("pullback identity", check_pullback, 1e-11, 0.5),
    ("convexity in the channel", check_convexity, 1e-10, 0.5),
    ("seminorm in M", check_seminorm, 1e-10, 0.5),
    ("Pi <= C", check_pi_below_c, 1e-12, 1.0),
    ("C = C_res = C_res_tilde", check_resource_part, 1e-10, 0.5),
    ("Lipschitz surrogate", check_lipschitz, 1e-9, 0.05),
    ("variation bound (random GKLS)", check_variation, 1e-8, 0.02),
    ("rate <= c_MG ||L||", check_rate_vs_norm, 1e-8, 0.05),
    ("propagated maps are CPTP", check_propagated_cptp, 1e-9, 0.1),
    ("dimer static closed form", check_dimer_closed_form, 1e-10, 0.5),
    ("dimer rate and capacity", check_dimer_rate, 1e-9, 0.2),
]


def run_all(seed: int = 0, samples: int = 200, inject_broken_kraus: bool = False) -> list[CheckResult]:
    out = []
    for i, (name, fn, tol, frac) in enumerate(SUITES):
        s = seed + i
        n = max(1, int(samples * frac))
        out.append(CheckResult(name, float(fn(s, n)), tol, s))
    s = seed + len(SUITES)
    worst, msg = check_completeness(s, 1, broken=inject_broken_kraus)
    out.append(CheckResult("Kraus completeness", worst, 0.0, s, msg))
    return out
