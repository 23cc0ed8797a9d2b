"""GKLS generators, propagation, the instantaneous rate and the bound suite built on it."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import QuantumChannel, SuperOperator, induced_one_norm
from .impact import capacity, capacity_sampled, projected_capacity
from .operators import (
    HermitianObservable,
    ValidationError,
    _rng,
    as_square,
    dagger,
    mat,
    matrix_exp,
    op_norm,
    random_hermitian,
    unvec,
    vec,
)
from .quadrature import cumulative, integrate
from .resource_maps import ResourceDestroyingMap, resource_radius, subspaces


class StepControlError(RuntimeError):
    pass


def gkls_liouville(h, jumps) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for a, rate in jumps:
        ada = dagger(a) @ a
        lv = lv + rate * (np.kron(a, a.conj()) - 0.5 * (np.kron(ada, eye) + np.kron(eye, ada.T)))
    return lv


def gkls_adjoint_liouville(h, jumps) -> np.ndarray:
    """Heisenberg-picture generator i[H, M] + sum rate (A^dag M A - {A^dag A, M}/2)."""
    d = h.shape[0]
    eye = np.eye(d)
    lv = 1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for a, rate in jumps:
        ada = dagger(a) @ a
        lv = lv + rate * (np.kron(dagger(a), a.T) - 0.5 * (np.kron(ada, eye) + np.kron(eye, ada.T)))
    return lv


@dataclass(frozen=True)
class LindbladGenerator:
    hamiltonian: np.ndarray
    jumps: tuple
    liouville: SuperOperator
    adjoint_liouville: SuperOperator
    time_dependent: Callable | None = None
    raw: Callable | None = None

    @property
    def dim(self) -> int:
        return self.liouville.dim

    def at(self, t: float) -> "LindbladGenerator":
        return self if self.time_dependent is None else self.time_dependent(t)

    def liouville_at(self, t: float) -> np.ndarray:
        """Liouville matrix at time t; the stepping path skips the duality re-check."""
        if self.raw is None:
            return self.at(t).liouville.liouville
        h, jumps = self.raw(t)
        if any(float(r) < 0 for _, r in jumps):
            raise ValidationError(f"negative_rate: a jump rate is negative at t={t}")
        return gkls_liouville(np.asarray(h, dtype=complex), [(np.asarray(a, dtype=complex), float(r)) for a, r in jumps])

    def norm_bound(self) -> float:
        """Analytic bound on ||L||_{1->1}: spectral spread of H plus 2 sum rate ||A||^2."""
        w = np.linalg.eigvalsh(self.hamiltonian)
        return float(w[-1] - w[0]) + 2 * sum(rate * op_norm(a) ** 2 for a, rate in self.jumps)


def build_gkls(h, jumps=(), duality_tol: float = 1e-11) -> LindbladGenerator:
    """jumps: iterable of (operator, rate) with rate >= 0."""
    h = HermitianObservable(as_square(h, "Hamiltonian")).matrix
    d = h.shape[0]
    clean = []
    for i, (a, rate) in enumerate(jumps):
        a = as_square(a, f"jump operator {i}")
        if a.shape != (d, d):
            raise ValidationError(f"jump operator {i} has shape {a.shape}, expected {(d, d)}")
        rate = float(rate)
        if rate < 0:
            raise ValidationError(f"negative_rate: jump {i} has rate {rate} (non-CP-divisible input rejected)")
        clean.append((a, rate))
    lv = SuperOperator(gkls_liouville(h, clean), label="L")
    adj = SuperOperator(gkls_adjoint_liouville(h, clean), label="L^dag")
    dual = float(np.max(np.abs(adj.liouville - dagger(lv.liouville))))
    scale = max(1.0, float(np.max(np.abs(lv.liouville))))
    if dual > duality_tol * scale:
        raise ValidationError(f"adjoint generator fails duality: residual {dual:.3e}")
    return LindbladGenerator(h, tuple(clean), lv, adj)


def time_dependent_gkls(fn: Callable[[float], tuple], dim: int) -> LindbladGenerator:
    """fn(t) -> (H_t, jumps_t). Returns a generator whose ``at`` evaluates fn."""
    at = lambda t: build_gkls(*fn(t))
    g0 = at(0.0)
    if g0.dim != dim:
        raise ValidationError(f"generator at t=0 has dim {g0.dim}, expected {dim}")
    return LindbladGenerator(g0.hamiltonian, g0.jumps, g0.liouville, g0.adjoint_liouville, time_dependent=at, raw=fn)


def _rk4_step(gen, t, lam, h):
    f = lambda s, x: gen.liouville_at(s) @ x
    k1 = f(t, lam)
    k2 = f(t + h / 2, lam + h / 2 * k1)
    k3 = f(t + h / 2, lam + h / 2 * k2)
    k4 = f(t + h, lam + h * k3)
    return lam + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _magnus2_step(gen, t, lam, h):
    # exponential midpoint rule, second order and unconditionally CP for GKLS generators
    return matrix_exp(gen.liouville_at(t + h / 2), h) @ lam


STEPPERS = {"rk4": _rk4_step, "magnus2": _magnus2_step}


def _march(gen, t0, t1, h, step):
    n = max(1, int(np.ceil((t1 - t0) / h)))
    h = (t1 - t0) / n
    lam = np.eye(gen.dim ** 2, dtype=complex)
    for i in range(n):
        lam = step(gen, t0 + i * h, lam, h)
    return lam


def propagator_matrix(gen: LindbladGenerator, t: float, tol: float = 1e-9, max_halvings: int = 6,
                      t0: float = 0.0, method: str = "rk4") -> np.ndarray:
    """Liouville matrix of the map from time t0 to time t.

    Time-independent generators use the matrix exponential. Otherwise the
    step starts at min(1e-3, 0.01 / L_max) and halves until two successive
    results agree within tol.
    """
    if t < t0 or t0 < 0:
        raise ValidationError("need 0 <= t0 <= t")
    if method not in STEPPERS:
        raise ValidationError(f"unknown method {method!r}; choose from {sorted(STEPPERS)}")
    if t == t0:
        return np.eye(gen.dim ** 2, dtype=complex)
    if gen.time_dependent is None:
        return matrix_exp(gen.liouville.liouville, t - t0)
    step = STEPPERS[method]
    lmax = max(gen.at(s).norm_bound() for s in np.linspace(t0, t, 9))
    h = min(1e-3, 0.01 / max(lmax, 1e-12))
    coarse = _march(gen, t0, t, h, step)
    err = np.inf
    for _ in range(max_halvings):
        h /= 2
        fine = _march(gen, t0, t, h, step)
        err = float(np.max(np.abs(fine - coarse)))
        if err <= tol:
            return fine
        coarse = fine
    raise StepControlError(f"{method} step control failed on [{t0}, {t}]: achieved {err:.3e} > {tol:.1e}")


def propagator_series(gen: LindbladGenerator, grid, tol: float = 1e-9, method: str = "rk4") -> list[np.ndarray]:
    """Propagators from 0 to each grid time, chained interval by interval."""
    grid = np.asarray(grid, dtype=float)
    if gen.time_dependent is None:
        return [propagator_matrix(gen, t) for t in grid]
    out, lam, prev = [], propagator_matrix(gen, grid[0], tol, method=method), grid[0]
    out.append(lam)
    per = tol / max(len(grid) - 1, 1)
    for t in grid[1:]:
        lam = propagator_matrix(gen, t, per, t0=prev, method=method) @ lam
        out.append(lam)
        prev = t
    return out


def propagate(gen: LindbladGenerator, t: float) -> QuantumChannel:
    return QuantumChannel(propagator_matrix(gen, t), label=f"Lambda_{t:g}")


def heisenberg(gen: LindbladGenerator, m, t: float) -> np.ndarray:
    m = mat(m)
    if gen.time_dependent is None:
        return unvec(matrix_exp(gen.adjoint_liouville.liouville, t) @ vec(m))
    return unvec(dagger(propagator_matrix(gen, t)) @ vec(m))


def _gmap(g):
    return g.superop if isinstance(g, ResourceDestroyingMap) else g


def rate_operator(gen: LindbladGenerator, t, g, m) -> np.ndarray:
    """(id - G^dag)(Lambda_t^dag(L_t^dag(M)))."""
    m = mat(m)
    lam = propagator_matrix(gen, t) if np.isscalar(t) else t.liouville
    tt = t if np.isscalar(t) else 0.0
    x = unvec(dagger(lam) @ (gen.at(tt).adjoint_liouville.liouville @ vec(m)))
    return x - _gmap(g).adjoint_apply(x)


def gamma_rate(gen: LindbladGenerator, t, g, m) -> float:
    """Largest possible rate of change of the yield difference at time t."""
    return op_norm(rate_operator(gen, t, g, m))


def gamma_rate_sampled(gen: LindbladGenerator, t: float, g_callable, m, n_samples=1000, rng=0) -> float:
    """Sampled lower bound on the rate for an arbitrary callable G."""
    deriv = SuperOperator(gen.at(t).liouville.liouville @ propagator_matrix(gen, t))
    return capacity_sampled(deriv, g_callable, m, n_samples, rng).capacity


def projected_rate(gen: LindbladGenerator, t: float, free_extreme_points, m, divergence="trace_distance",
                   n_samples: int = 50, rng=0, resolution: int = 200) -> float:
    """Sampled rate analogue of the projected functional (no spectral shortcut)."""
    deriv = SuperOperator(gen.at(t).liouville.liouville @ propagator_matrix(gen, t))
    return projected_capacity(deriv, free_extreme_points, m, divergence, n_samples, rng, resolution).value


def capacity_at(gen: LindbladGenerator, t: float, g, m) -> float:
    lam = SuperOperator(propagator_matrix(gen, t))
    return capacity(lam, g, m).capacity


@dataclass(frozen=True)
class ZeroRateReport:
    vanishes: bool
    residual: float
    gamma: float
    agrees: bool


def gamma_zero_predicate(gen: LindbladGenerator, t: float, g: ResourceDestroyingMap, m, subs=None) -> ZeroRateReport:
    """Rate vanishes iff the evolved generator output has no component in V_G."""
    subs = subspaces(g) if subs is None else subs
    lam = propagator_matrix(gen, t)
    x = unvec(dagger(lam) @ (gen.at(t).adjoint_liouville.liouville @ vec(mat(m))))
    x = 0.5 * (x + dagger(x))
    res = float(np.linalg.norm(subs.project_VG(x)))
    gam = gamma_rate(gen, t, g, m)
    vanish = res < 1e-10
    return ZeroRateReport(vanish, res, gam, vanish == (gam < 1e-9))


def variation_bound(gen, g, m, t1: float, t2: float, quad_tol: float = 1e-9) -> tuple[float, float]:
    """(|C(t2) - C(t1)|, integral of the rate over [t1, t2])."""
    if t2 < t1:
        raise ValidationError("need t1 <= t2")
    if t1 == t2:
        return 0.0, 0.0
    lhs = abs(capacity_at(gen, t2, g, m) - capacity_at(gen, t1, g, m))
    rhs = integrate(lambda s: gamma_rate(gen, s, g, m), t1, t2, quad_tol)
    return lhs, rhs


@dataclass(frozen=True)
class DiniReport:
    t: float
    gamma: float
    h: np.ndarray
    right_quotients: np.ndarray
    left_quotients: np.ndarray
    slack: np.ndarray
    passed: bool


def dini_check(gen, g, m, t: float, h_list, radius: float | None = None) -> DiniReport:
    """One-sided difference quotients of C(t) against the rate.

    The slack h * R_G * ||L|| * ||L^dag(M)|| / 2 bounds how far the
    averaged rate over [t, t+h] or [t-h, t] can exceed its value at t.
    """
    h = np.asarray(h_list, dtype=float)
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise ValidationError("h_list must be positive and strictly decreasing")
    m = mat(m)
    rg = resource_radius(g).value if radius is None else radius
    c0 = capacity_at(gen, t, g, m)
    gam = gamma_rate(gen, t, g, m)
    lip = max(gen.at(s).norm_bound() for s in (t, t + h[0]))
    ldm = op_norm(unvec(gen.at(t).adjoint_liouville.liouville @ vec(m)))
    slack = h * rg * lip * ldm / 2 + 1e-13 / h
    right = np.array([(capacity_at(gen, t + hi, g, m) - c0) / hi for hi in h])
    left = np.array([(c0 - capacity_at(gen, t - hi, g, m)) / hi if t - hi >= 0 else np.nan for hi in h])
    ok = np.all(np.abs(right) <= gam + slack)
    lmask = ~np.isnan(left)
    ok = ok and np.all(np.abs(left[lmask]) <= gam + slack[lmask])
    return DiniReport(t, gam, h, right, left, slack, bool(ok))


@dataclass(frozen=True)
class BoundReport:
    time_grid: np.ndarray
    capacity_series: np.ndarray
    gamma_series: np.ndarray
    variation_integral_series: np.ndarray
    uniform_bound_series: np.ndarray
    c_MG: float
    L_max: float
    min_time: float
    feasibility_ceiling: float
    feasible: bool
    target: float = 0.0
    extras: dict = field(default_factory=dict)

    def ordering_violation(self) -> float:
        """Largest violation of |dC| <= integral <= uniform bound over the grid."""
        dc = np.abs(self.capacity_series - self.capacity_series[0])
        a = np.max(dc - self.variation_integral_series)
        b = np.max(self.variation_integral_series - self.uniform_bound_series)
        return float(max(a, b, 0.0))


def time_feasibility(gen, g, m, t1: float, t2: float, target: float = 0.0, n_grid: int = 200,
                     n_norm: int = 64, quad_tol: float = 1e-9, restarts: int = 8) -> BoundReport:
    """Evaluate the chain |dC| <= integral of rate <= dt * c_MG * L_max on a grid.

    L_max uses the certified analytic generator bound, so the uniform bound,
    the minimal time and the ceiling stay sound. The restart-based estimate
    is reported alongside.
    """
    if t2 < t1:
        raise ValidationError("need t1 <= t2")
    if target < 0:
        raise ValidationError("target must be >= 0")
    m = mat(m)
    grid = np.linspace(t1, t2, n_grid)
    rg = resource_radius(g).value
    c = op_norm(m) * rg
    norm_ts = np.linspace(t1, t2, n_norm) if gen.time_dependent is not None else [t1]
    l_cert = max(gen.at(s).norm_bound() for s in norm_ts)
    l_est = max(induced_one_norm(gen.at(s).liouville, restarts) for s in norm_ts)
    caps = np.array([capacity_at(gen, s, g, m) for s in grid])
    gam_f = lambda s: gamma_rate(gen, s, g, m)
    gams = np.array([gam_f(s) for s in grid])
    integ = cumulative(gam_f, grid, quad_tol)
    uniform = (grid - t1) * c * l_cert
    rate = c * l_cert
    min_time = target / rate if rate > 0 else (0.0 if target == 0 else np.inf)
    ceiling = (t2 - t1) * rate
    h = gen.at(t1).hamiltonian
    w = np.linalg.eigvalsh(h)
    gkls = 2 * rg * op_norm(m) * ((w[-1] - w[0]) / 2 + sum(r * op_norm(a) ** 2 for a, r in gen.at(t1).jumps))
    return BoundReport(
        time_grid=grid,
        capacity_series=caps,
        gamma_series=gams,
        variation_integral_series=integ,
        uniform_bound_series=uniform,
        c_MG=c,
        L_max=l_cert,
        min_time=float(min_time),
        feasibility_ceiling=float(ceiling),
        feasible=bool(target <= ceiling),
        target=target,
        extras={"L_max_estimate": l_est, "gkls_gamma_bound": gkls, "resource_radius": rg},
    )


def random_gkls(rng, dim: int, n_jumps: int = 2, scale: float = 1.0) -> LindbladGenerator:
    """Random Hamiltonian plus n_jumps Ginibre jump operators with uniform rates."""
    rng = _rng(rng)
    h = random_hermitian(rng, dim, scale)
    jumps = []
    for _ in range(n_jumps):
        a = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2 * dim)
        jumps.append((a, scale * rng.uniform(0, 1)))
    return build_gkls(h, jumps)
