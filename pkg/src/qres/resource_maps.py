"""Resource-destroying maps and the geometry attached to them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .channels import (
    QuantumChannel,
    SuperOperator,
    cptp_check,
    induced_one_norm_estimate,
    liouville_from_kraus,
)
from .operators import (
    ValidationError,
    _rng,
    as_square,
    dagger,
    hermitian_basis,
    mat,
    projector,
    random_density,
    random_ket,
    trace_norm,
    vec,
)

IDEMPOTENT_TOL = 1e-10


@dataclass(frozen=True)
class ResourceDestroyingMap:
    superop: SuperOperator
    free_extreme_points: tuple = ()
    self_adjoint: bool = False
    cptp: bool = False
    kind: str = "custom"
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("dephasing", "twirl", "replacement", "custom"):
            raise ValidationError(f"unknown map kind {self.kind!r}")
        pts = tuple(np.array(mat(p), dtype=complex) for p in self.free_extreme_points)
        object.__setattr__(self, "free_extreme_points", pts)

    @property
    def dim(self) -> int:
        return self.superop.dim

    def __call__(self, rho) -> np.ndarray:
        return self.superop(rho)

    def adjoint_apply(self, m) -> np.ndarray:
        return self.superop.adjoint_apply(m)

    def complement(self) -> SuperOperator:
        """id - G."""
        return SuperOperator.identity(self.dim) - self.superop

    def idempotence_residual(self) -> float:
        lv = self.superop.liouville
        return float(np.max(np.abs(lv @ lv - lv)))


def _dedupe(mats, tol=1e-10):
    out = []
    for m in mats:
        if all(np.max(np.abs(m - o)) > tol for o in out):
            out.append(m)
    return out


def make_custom(superop: SuperOperator, free_extreme_points, label: str = "G") -> ResourceDestroyingMap:
    lv = superop.liouville
    rep = cptp_check(superop)
    return ResourceDestroyingMap(
        superop=superop,
        free_extreme_points=tuple(free_extreme_points),
        self_adjoint=bool(np.max(np.abs(lv - dagger(lv))) <= IDEMPOTENT_TOL),
        cptp=rep.is_cp and rep.is_tp,
        kind="custom",
        label=label,
    )


def make_dephasing(basis=None, dim: int | None = None, label: str = "dephasing") -> ResourceDestroyingMap:
    """Complete dephasing in an orthonormal basis (columns or list of kets)."""
    if basis is None:
        if dim is None:
            raise ValidationError("give a basis or a dimension")
        basis = np.eye(dim)
    kets = [np.asarray(b, dtype=complex).ravel() for b in (basis.T if isinstance(basis, np.ndarray) else basis)]
    d = len(kets)
    if any(k.size != d for k in kets):
        raise ValidationError("basis must contain d kets of length d")
    gram = np.array([[np.vdot(a, b) for b in kets] for a in kets])
    err = float(np.max(np.abs(gram - np.eye(d))))
    if err > 1e-10:
        raise ValidationError(f"basis is not orthonormal: max |<i|j> - delta_ij| = {err:.3e}")
    projs = [projector(k) for k in kets]
    lv = liouville_from_kraus(projs)
    ch = QuantumChannel(lv, kraus=projs, label=label)
    return ResourceDestroyingMap(ch, tuple(projs), self_adjoint=True, cptp=True, kind="dephasing", label=label)


def make_twirl(unitaries, free_extreme_points=None, label: str = "twirl") -> ResourceDestroyingMap:
    """Uniform average over a finite unitary group, closed up to global phases."""
    us = [as_square(u, "group element") for u in unitaries]
    if not us:
        raise ValidationError("empty group")
    d = us[0].shape[0]

    def _index(x):
        for k, u in enumerate(us):
            ov = np.vdot(u, x) / d
            if abs(abs(ov) - 1) < 1e-10 and np.max(np.abs(x - ov * u)) < 1e-10:
                return k
        return None

    for i, a in enumerate(us):
        if np.max(np.abs(dagger(a) @ a - np.eye(d))) > 1e-10:
            raise ValidationError(f"element {i} is not unitary")
        for j, b in enumerate(us):
            if _index(a @ b) is None:
                raise ValidationError(f"not a group: product of elements {i} and {j} is missing")
    n = len(us)
    ops = [u / np.sqrt(n) for u in us]
    ch = QuantumChannel(liouville_from_kraus(ops), kraus=ops, label=label)
    if free_extreme_points is None:
        free_extreme_points = _dedupe([ch(projector(np.eye(d)[i])) for i in range(d)])
    return ResourceDestroyingMap(ch, tuple(free_extreme_points), self_adjoint=True, cptp=True, kind="twirl", label=label)


def make_replacement(sigma, label: str = "replacement") -> ResourceDestroyingMap:
    """rho -> Tr[rho] sigma."""
    s = mat(sigma)
    d = s.shape[0]
    lv = np.outer(vec(s), vec(np.eye(d)))
    ch = QuantumChannel(lv, label=label)
    sa = bool(np.max(np.abs(s - np.eye(d) / d)) <= 1e-10)
    return ResourceDestroyingMap(ch, (s,), self_adjoint=sa, cptp=True, kind="replacement", label=label)


@dataclass(frozen=True)
class RadiusResult:
    value: float
    argmax: np.ndarray
    restarts: int


def resource_radius(g: ResourceDestroyingMap, restarts: int = 32, seed=0) -> RadiusResult:
    """max over pure states of ||rho - G(rho)||_1."""
    est = induced_one_norm_estimate(g.complement(), restarts, seed)
    return RadiusResult(est.value, est.argmax, restarts)


@dataclass(frozen=True)
class FreeSubspaces:
    basis_VG: list = field(default_factory=list)
    basis_VG_perp: list = field(default_factory=list)

    def project_VG(self, x) -> np.ndarray:
        x = mat(x)
        return sum((np.vdot(b, x) * b for b in self.basis_VG), np.zeros_like(x))

    def project_VG_perp(self, x) -> np.ndarray:
        x = mat(x)
        return sum((np.vdot(b, x) * b for b in self.basis_VG_perp), np.zeros_like(x))


def subspaces(g: ResourceDestroyingMap, tol: float = 1e-10) -> FreeSubspaces:
    """V_G = span{X - G(X)} over Hermitian X, and its HS complement."""
    d = g.dim
    herm = hermitian_basis(d)
    comp = g.complement()
    # real coordinates of (id - G) on the Hermitian basis
    coords = np.array([[np.vdot(a, comp(b)).real for b in herm] for a in herm])
    u, s, _ = np.linalg.svd(coords)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0)))
    to_op = lambda c: sum(ci * h for ci, h in zip(c, herm))
    vg = [to_op(u[:, k]) for k in range(rank)]
    perp = [to_op(u[:, k]) for k in range(rank, d * d)]
    return FreeSubspaces(vg, perp)


def distance_to_free_set(rho, points) -> tuple[float, np.ndarray]:
    """Trace distance from rho to conv(points), certified from above.

    Least squares on the simplex gives a feasible mixture; its trace
    distance to rho is an upper bound on the true distance.
    """
    rho = mat(rho)
    k = len(points)
    a = np.array([np.concatenate([vec(p).real, vec(p).imag]) for p in points]).T
    b = np.concatenate([vec(rho).real, vec(rho).imag])
    # enforce sum(w) = 1 through a heavily weighted extra row
    big = 1e4
    a = np.vstack([a, big * np.ones(k)])
    b = np.append(b, big)
    w, _ = scipy.optimize.nnls(a, b)
    w = w / w.sum()
    sigma = sum(wi * p for wi, p in zip(w, points))
    return 0.5 * trace_norm(rho - sigma), w


@dataclass(frozen=True)
class RDMReport:
    idempotence_residual: float
    fixes_free_points: float
    max_distance_to_free: float
    linearity_residual: float
    passed: bool


def verify_rdm(g: ResourceDestroyingMap, n_samples: int = 200, seed=0, tol: float = 1e-8) -> RDMReport:
    rng = _rng(seed)
    d = g.dim
    idem = g.idempotence_residual()
    fix = max((float(np.max(np.abs(g(p) - p))) for p in g.free_extreme_points), default=0.0)
    dist = 0.0
    lin = 0.0
    for _ in range(n_samples):
        r1 = projector(random_ket(rng, d)) if rng.random() < 0.5 else random_density(rng, d)
        r2 = random_density(rng, d)
        if g.free_extreme_points:
            dist = max(dist, distance_to_free_set(g(r1), g.free_extreme_points)[0])
        p = rng.random()
        lin = max(lin, float(np.max(np.abs(g(p * r1 + (1 - p) * r2) - p * g(r1) - (1 - p) * g(r2)))))
    passed = idem <= IDEMPOTENT_TOL and fix <= IDEMPOTENT_TOL and dist <= tol and lin <= 1e-12
    return RDMReport(idem, fix, dist, lin, passed)
