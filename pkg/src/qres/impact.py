"""Static impact functionals: yield differences, capacities and their operational readings."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .channels import SuperOperator
from .operators import (
    HermitianObservable,
    ValidationError,
    _rng,
    dagger,
    eig_hermitian,
    mat,
    op_norm,
    projector,
    random_density,
    random_ket,
)
from .resource_maps import ResourceDestroyingMap

DEGENERACY_TOL = 1e-12


def _superop(g) -> SuperOperator:
    if isinstance(g, ResourceDestroyingMap):
        return g.superop
    if isinstance(g, SuperOperator):
        return g
    raise ValidationError("a linear resource-destroying map is required; use capacity_sampled for callables")


def _check_dims(lam, m, g=None):
    d = lam.dim
    if m.shape != (d, d):
        raise ValidationError(f"observable of shape {m.shape} does not match channel dim {d}")
    if g is not None and _superop(g).dim != d:
        raise ValidationError(f"map dim {_superop(g).dim} does not match channel dim {d}")


def delta_yield(lam, g, m, rho) -> float:
    """Tr[M(Lambda(rho) - Lambda(G(rho)))]; g may be any state-to-state callable."""
    m, rho = mat(m), mat(rho)
    _check_dims(lam, m)
    out = lam(rho) - lam(g(rho))
    return float(np.real(np.trace(m @ out)))


@dataclass(frozen=True)
class ImpactOperator:
    B: np.ndarray
    channel_label: str = ""
    map_label: str = ""


def impact_operator(lam, g, m) -> ImpactOperator:
    """B = (id - G^dag)(Lambda^dag(M))."""
    m = mat(m)
    _check_dims(lam, m, g)
    gs = _superop(g)
    pulled = lam.adjoint_apply(m)
    b = pulled - gs.adjoint_apply(pulled)
    return ImpactOperator(b, getattr(lam, "label", ""), getattr(g, "label", ""))


@dataclass(frozen=True)
class ImpactResult:
    capacity: float
    plus: float
    minus: float
    optimizer: np.ndarray
    method: str = "spectral"
    degenerate: bool = False
    vanishes: bool = False


def capacity_from_operator(b: np.ndarray) -> ImpactResult:
    w, v = eig_hermitian(0.5 * (b + dagger(b)))
    lmax, lmin = float(w[0]), float(w[-1])
    plus, minus = max(lmax, 0.0), max(-lmin, 0.0)
    cap = max(plus, minus)
    degenerate = abs(lmax + lmin) <= DEGENERACY_TOL
    col = 0 if (lmax >= -lmin or degenerate) else -1
    return ImpactResult(
        capacity=cap,
        plus=plus,
        minus=minus,
        optimizer=projector(v[:, col]),
        degenerate=bool(degenerate),
        vanishes=bool(cap < 1e-10),
    )


def capacity(lam, g, m) -> ImpactResult:
    """sup over states of |delta_yield|, as the operator norm of the impact operator."""
    m = mat(m)
    _check_dims(lam, m, g)
    d = m.shape[0]
    if np.max(np.abs(m - np.trace(m) / d * np.eye(d))) <= DEGENERACY_TOL:
        return ImpactResult(0.0, 0.0, 0.0, projector(np.eye(d)[0]), vanishes=True)
    return capacity_from_operator(impact_operator(lam, g, m).B)


def capacity_sampled(lam, g, m, n_samples: int = 1000, rng=0, kinds=("pure", "mixed")) -> ImpactResult:
    """Lower bound on the capacity from random pure and mixed inputs.

    Works for any state-to-state callable ``g``, linear or not.
    """
    rng = _rng(rng)
    m = mat(m)
    d = m.shape[0]
    best, best_rho, plus, minus = 0.0, projector(np.eye(d)[0]), 0.0, 0.0
    for kind in kinds:
        for _ in range(n_samples):
            rho = projector(random_ket(rng, d)) if kind == "pure" else random_density(rng, d)
            dy = delta_yield(lam, g, m, rho)
            plus, minus = max(plus, dy), max(minus, -dy)
            if abs(dy) > best:
                best, best_rho = abs(dy), rho
    return ImpactResult(best, plus, minus, best_rho, method="sampled")


def pi_advantage(lam, free_extreme_points, m) -> float:
    """Best unrestricted |yield| minus best free |yield|."""
    if len(free_extreme_points) == 0:
        raise ValidationError("free set needs at least one extreme point")
    m = mat(m)
    glob = op_norm(lam.adjoint_apply(m))
    free = max(abs(float(np.real(np.trace(m @ lam(mat(s)))))) for s in free_extreme_points)
    return glob - free


def _simplex_grid(k: int, resolution: int) -> np.ndarray:
    if k == 1:
        return np.ones((1, 1))
    pts = []
    for c in itertools.combinations(range(resolution + k - 1), k - 1):
        # stars and bars
        edges = np.diff(np.concatenate([[-1], c, [resolution + k - 1]])) - 1
        pts.append(edges)
    return np.array(pts, dtype=float) / resolution


def _stack_divergence(rho: np.ndarray, sigmas: np.ndarray, divergence: str) -> np.ndarray:
    if divergence == "trace_distance":
        diff = rho[None] - sigmas
        w = np.linalg.eigvalsh(0.5 * (diff + dagger(diff)))
        return 0.5 * np.abs(w).sum(axis=-1)
    if divergence == "relative_entropy":
        wr, vr = np.linalg.eigh(rho)
        wr = wr.clip(min=0)
        nz = wr > 1e-15
        s_rho = float(np.sum(wr[nz] * np.log(wr[nz])))
        ws, vs = np.linalg.eigh(0.5 * (sigmas + dagger(sigmas)))
        # Tr[rho log sigma] via overlaps |<r_i|s_j>|^2
        ov = np.abs(np.einsum("ai,nak->nik", vr.conj(), vs)) ** 2
        logs = np.where(ws > 1e-15, np.log(np.clip(ws, 1e-300, None)), -np.inf)
        weight = wr[None, :, None] * ov
        # 0 * log 0 terms are masked; unsupported weight gives +inf divergence
        with np.errstate(invalid="ignore"):
            cross = np.where(weight > 1e-15, weight * logs[:, None, :], 0.0).sum(axis=(1, 2))
        return s_rho - cross
    raise ValidationError(f"unsupported divergence {divergence!r}; use trace_distance or relative_entropy")


def closest_free(rho, points, divergence: str = "trace_distance", resolution: int = 200, window: float = 1e-9):
    """Minimizers of D(rho || sigma) over conv(points).

    Returns (min value, list of near-minimizing sigmas within ``window``).
    """
    rho = mat(rho)
    pts = np.array([mat(p) for p in points])
    k = len(pts)
    grid = _simplex_grid(k, resolution)
    sig = np.tensordot(grid, pts, axes=1)
    vals = _stack_divergence(rho, sig, divergence)
    i0 = int(np.argmin(vals))

    def f(x):
        w = np.append(x, 1 - np.sum(x))
        if np.any(w < 0):
            return np.inf
        return float(_stack_divergence(rho, np.tensordot(w, pts, axes=1)[None], divergence)[0])

    cands_w = [grid[i0]]
    cand_v = [float(vals[i0])]
    if k > 1 and np.isfinite(vals[i0]):
        res = scipy.optimize.minimize(
            f, grid[i0][:-1], method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000,
                     "initial_simplex": _initial_simplex(grid[i0][:-1], 1.0 / resolution)},
        )
        if res.fun < cand_v[0]:
            cands_w.insert(0, np.append(res.x, 1 - np.sum(res.x)))
            cand_v.insert(0, float(res.fun))
    vmin = min(cand_v)
    near = [np.tensordot(w, pts, axes=1) for w, v in zip(cands_w, cand_v) if v <= vmin + window]
    near += [sig[i] for i in np.flatnonzero(vals <= vmin + window) if i != i0]
    return vmin, near


def _initial_simplex(x0, step):
    n = len(x0)
    simp = [x0]
    for i in range(n):
        y = np.array(x0, dtype=float)
        y[i] = y[i] + step if y[i] + step <= 1 else y[i] - step
        simp.append(y)
    return np.array(simp)


@dataclass(frozen=True)
class ProjectedResult:
    value: float
    samples: list


def projected_capacity(lam, free_extreme_points, m, divergence: str = "trace_distance",
                       n_samples: int = 100, rng=0, resolution: int = 200, states=None) -> ProjectedResult:
    """Sampled lower bound on sup_rho |Tr[M(Lambda(rho) - Lambda(pi(rho)))]|, pi = closest free state.

    Ties among closest free states are resolved optimistically.
    ``lam`` may be any linear map, so the same routine estimates rate
    analogues when given a derivative map.
    """
    rng = _rng(rng)
    m = mat(m)
    d = m.shape[0]
    if states is None:
        states = [projector(random_ket(rng, d)) for _ in range(n_samples)]
    best, rows = 0.0, []
    for rho in states:
        rho = mat(rho)
        _, near = closest_free(rho, free_extreme_points, divergence, resolution)
        lr = lam(rho)
        vals = [abs(float(np.real(np.trace(m @ (lr - lam(s)))))) for s in near]
        j = int(np.argmax(vals))
        rows.append((rho, near[j], vals[j]))
        best = max(best, vals[j])
    return ProjectedResult(best, rows)


@dataclass(frozen=True)
class GeometryReport:
    capacity: float
    support_sampled: float
    support_with_optimizer: float
    polar_member: bool
    slab_member: bool
    on_boundary: bool
    consistent: bool


def geometry_checks(lam, g, m, n_samples: int = 500, rng=0) -> GeometryReport:
    rng = _rng(rng)
    m = mat(m)
    d = m.shape[0]
    res = capacity(lam, g, m)
    gs = _superop(g)

    def pairing(rho):
        o = lam(rho) - lam(gs(rho))
        return abs(float(np.real(np.vdot(m, o))))

    vals = [pairing(projector(random_ket(rng, d))) for _ in range(n_samples)]
    h = max(vals) if vals else 0.0
    h_opt = max(h, pairing(res.optimizer))
    polar = res.capacity <= 1 + 1e-9
    slab = max(vals + [h_opt]) <= 1 + 1e-9
    consistent = h <= res.capacity + 1e-12 and abs(h_opt - res.capacity) <= 1e-10 and (polar == slab or not polar)
    return GeometryReport(
        capacity=res.capacity,
        support_sampled=h,
        support_with_optimizer=h_opt,
        polar_member=bool(polar),
        slab_member=bool(slab),
        on_boundary=bool(abs(res.capacity - 1) <= 1e-9),
        consistent=bool(consistent),
    )


@dataclass(frozen=True)
class HypothesisReport:
    p0: float
    p1: float
    bias: float
    p_succ: float
    n: int
    hoeffding_bound: float
    empirical_error: float
    slack: float
    trials: int

    @property
    def within_bound(self) -> bool:
        return self.empirical_error <= self.hoeffding_bound + self.slack


def hypothesis_test(lam, g, m, rho, n: int, trials: int = 100_000, rng=0) -> HypothesisReport:
    """Threshold test between Lambda(G(rho)) and Lambda(rho) from n shots of the POVM {M, I-M}."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    m = HermitianObservable(mat(m), povm=True).matrix
    rho = mat(rho)
    rng = _rng(rng)
    p0 = float(np.clip(np.real(np.trace(m @ lam(g(rho)))), 0, 1))
    p1 = float(np.clip(np.real(np.trace(m @ lam(rho))), 0, 1))
    lo, hi = min(p0, p1), max(p0, p1)
    bias = hi - lo
    k_lo = rng.binomial(n, lo, size=trials)
    k_hi = rng.binomial(n, hi, size=trials)
    # decide "hi" iff the sample mean reaches the midpoint
    thresh = n * (lo + hi) / 2
    err = 0.5 * (np.mean(k_lo >= thresh) + np.mean(k_hi < thresh))
    bound = float(np.exp(-n * bias ** 2 / 2))
    b = min(bound, 1.0)
    slack = 3 * np.sqrt(b * (1 - b) / trials)
    return HypothesisReport(p0, p1, bias, 0.5 + bias / 2, n, bound, float(err), float(slack), trials)
