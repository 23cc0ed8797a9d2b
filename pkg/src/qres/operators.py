"""Dense operator algebra on small Hilbert spaces.

Everything here works on plain ``numpy`` arrays. The two thin wrappers
:class:`HermitianObservable` and :class:`DensityOperator` only validate on
construction and otherwise behave like the matrix they hold.

Vectorization follows the row-stacking convention, so that
``vec(A @ X @ B) == np.kron(A, B.T) @ vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

ALGEBRA_TOL = 1e-12
SPECTRAL_TOL = 1e-10
EXPM_TOL = 1e-9
PSD_TOL = 1e-10


class ValidationError(ValueError):
    """Raised when an input violates a structural invariant."""


def as_square(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_residual(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def check_hermitian(a, tol: float = ALGEBRA_TOL, name: str = "matrix") -> np.ndarray:
    m = as_square(a, name)
    res = hermitian_residual(m)
    if res > tol:
        raise ValidationError(f"{name} is not Hermitian: max |A - A^dag| = {res:.3e} > {tol:g}")
    return m


@dataclass(frozen=True)
class HermitianObservable:
    matrix: np.ndarray
    povm: bool = False

    def __post_init__(self):
        m = check_hermitian(self.matrix, name="observable")
        m = 0.5 * (m + dagger(m))
        if self.povm:
            w = np.linalg.eigvalsh(m)
            if w[0] < -ALGEBRA_TOL or w[-1] > 1 + ALGEBRA_TOL:
                raise ValidationError(
                    f"POVM element needs spectrum in [0, 1], got [{w[0]:.3e}, {w[-1]:.3e}]"
                )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = check_hermitian(self.matrix, name="density operator")
        tr = np.trace(m).real
        if abs(tr - 1) > ALGEBRA_TOL:
            raise ValidationError(f"density operator has trace {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -PSD_TOL:
            raise ValidationError(f"density operator has negative eigenvalue {lo:.3e}")
        m = 0.5 * (m + dagger(m))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, psi) -> "DensityOperator":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def eig_hermitian(a, tol: float = ALGEBRA_TOL):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(w, V)`` with ``a = V @ diag(w) @ V^dag``.
    """
    m = check_hermitian(np.asarray(a), tol=tol)
    w, v = np.linalg.eigh(0.5 * (m + dagger(m)))
    return w[::-1].copy(), v[:, ::-1].copy()


def op_norm(a) -> float:
    m = np.asarray(a, dtype=complex)
    if hermitian_residual(m) <= ALGEBRA_TOL:
        w = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
        return float(max(abs(w[0]), abs(w[-1])))
    return float(np.linalg.norm(m, 2))


def trace_norm(a) -> float:
    m = np.asarray(a, dtype=complex)
    if hermitian_residual(m) <= ALGEBRA_TOL:
        return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + dagger(m))))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def schatten_norms(a) -> tuple[float, float]:
    """(operator norm, trace norm) from the singular values."""
    s = np.linalg.svd(as_square(a), compute_uv=False)
    return float(s[0]), float(np.sum(s))


def hs_inner(a, b) -> complex:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def vec(a) -> np.ndarray:
    """Row-stacking vectorization."""
    return np.asarray(a, dtype=complex).reshape(-1)


def unvec(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValidationError(f"length {v.size} is not a perfect square")
    return v.reshape(d, d)


def matrix_exp(a, t: float = 1.0) -> np.ndarray:
    """exp(t a) by scaling-and-squaring Pade (scipy)."""
    m = as_square(a)
    if t == 0:
        return np.eye(m.shape[0], dtype=complex)
    return scipy.linalg.expm(t * m)


def ket(dim: int, i: int) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[i] = 1
    return e


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """HS-orthonormal basis of the real space of Hermitian dim x dim matrices."""
    basis = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1
        basis.append(e)
    s = 1 / np.sqrt(2)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = e[j, i] = s
            basis.append(e)
            f = np.zeros((dim, dim), dtype=complex)
            f[i, j] = -1j * s
            f[j, i] = 1j * s
            basis.append(f)
    return basis


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_ket(rng, dim: int) -> np.ndarray:
    rng = _rng(rng)
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def random_density(rng, dim: int, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (Ginibre) random state."""
    rng = _rng(rng)
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_hermitian(rng, dim: int, scale: float = 1.0) -> np.ndarray:
    rng = _rng(rng)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (g + dagger(g))


def random_unitary(rng, dim: int) -> np.ndarray:
    """Haar unitary via QR with phase fix (Mezzadri)."""
    rng = _rng(rng)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_povm_element(rng, dim: int) -> np.ndarray:
    rng = _rng(rng)
    u = random_unitary(rng, dim)
    w = rng.uniform(0, 1, size=dim)
    return (u * w) @ dagger(u)


_SAMPLERS = {
    "pure_state": lambda rng, d: projector(random_ket(rng, d)),
    "mixed_state": random_density,
    "hermitian": random_hermitian,
    "povm_element": random_povm_element,
}


def sample(seed, kind: str, dim: int):
    """Draw one validated random object.

    ``pure_state`` returns the Haar-random ket itself (unit vector); the
    other kinds return wrapped matrices.
    """
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    rng = _rng(seed)
    if kind == "pure_state":
        return random_ket(rng, dim)
    if kind == "mixed_state":
        return DensityOperator(random_density(rng, dim))
    if kind == "hermitian":
        return HermitianObservable(random_hermitian(rng, dim))
    if kind == "povm_element":
        return HermitianObservable(random_povm_element(rng, dim), povm=True)
    raise ValidationError(f"unknown sample kind {kind!r}; choose from {sorted(_SAMPLERS)}")


def mat(x) -> np.ndarray:
    """Unwrap observables, states, or raw arrays into a complex ndarray."""
    if isinstance(x, (HermitianObservable, DensityOperator)):
        return x.matrix
    return np.asarray(x, dtype=complex)
