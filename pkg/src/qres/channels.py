"""Linear maps on B(H) in Liouville (row-stacked) form, and CPTP channels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    ValidationError,
    _rng,
    as_square,
    dagger,
    hermitian_residual,
    mat,
    random_ket,
    trace_norm,
    unvec,
    vec,
)

CHANNEL_TOL = 1e-10
CHOI_TOL = 1e-9


class SuperOperator:
    """A linear map on d x d matrices, stored as its d^2 x d^2 Liouville matrix."""

    __slots__ = ("liouville", "dim", "label")

    def __init__(self, liouville, label: str = ""):
        lv = np.array(liouville, dtype=complex)
        n = lv.shape[0]
        d = int(round(np.sqrt(n)))
        if lv.ndim != 2 or lv.shape != (n, n) or d * d != n:
            raise ValidationError(f"Liouville matrix must be d^2 x d^2, got {lv.shape}")
        if not np.all(np.isfinite(lv)):
            raise ValidationError("Liouville matrix has non-finite entries")
        lv.setflags(write=False)
        self.liouville = lv
        self.dim = d
        self.label = label

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, label={self.label!r})"

    def __call__(self, x) -> np.ndarray:
        x = mat(x)
        if x.shape != (self.dim, self.dim):
            raise ValidationError(f"operator of shape {x.shape} does not match dim {self.dim}")
        return unvec(self.liouville @ vec(x))

    def adjoint(self) -> "SuperOperator":
        # <A, S(B)>_HS = vec(A)^H L vec(B), so the adjoint is L^H
        return SuperOperator(dagger(self.liouville), label=f"{self.label}^dag")

    def adjoint_apply(self, m) -> np.ndarray:
        m = mat(m)
        return unvec(dagger(self.liouville) @ vec(m))

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij S(|i><j|) (x) |i><j| with unnormalized |Omega>."""
        d = self.dim
        return self.liouville.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)

    def is_hermiticity_preserving(self, tol: float = 1e-10) -> bool:
        return hermitian_residual(self.choi()) <= tol

    def _check(self, other):
        if not isinstance(other, SuperOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValidationError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SuperOperator(self.liouville + other.liouville)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SuperOperator(self.liouville - other.liouville)

    def __neg__(self):
        return SuperOperator(-self.liouville)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return SuperOperator(c * self.liouville)

    __rmul__ = __mul__

    def __matmul__(self, other):
        """``a @ b`` is the composition a o b (b acts first)."""
        if self._check(other) is NotImplemented:
            return NotImplemented
        return SuperOperator(self.liouville @ other.liouville)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.liouville))

    @classmethod
    def identity(cls, dim: int) -> "SuperOperator":
        return cls(np.eye(dim * dim), label="id")

    @classmethod
    def from_function(cls, f, dim: int, label: str = "") -> "SuperOperator":
        """Tabulate a (linear) callable on matrix units."""
        cols = []
        for i in range(dim):
            for j in range(dim):
                e = np.zeros((dim, dim), dtype=complex)
                e[i, j] = 1
                cols.append(vec(f(e)))
        return cls(np.array(cols).T, label=label)


class QuantumChannel(SuperOperator):
    """A CPTP map. Built only through constructors that verify CPTP."""

    __slots__ = ("kraus",)

    def __init__(self, liouville, kraus=None, label: str = "", check: bool = True):
        super().__init__(liouville, label=label)
        self.kraus = None if kraus is None else tuple(np.array(k, dtype=complex) for k in kraus)
        if check:
            rep = cptp_check(self)
            if not (rep.is_cp and rep.is_tp):
                raise ValidationError(
                    f"not a channel: min Choi eigenvalue {rep.min_choi_eigenvalue:.3e}, "
                    f"TP residual {rep.tp_residual:.3e}"
                )

    def __call__(self, rho) -> np.ndarray:
        return super().__call__(rho)

    def apply_kraus(self, rho) -> np.ndarray:
        if self.kraus is None:
            raise ValidationError("channel has no Kraus representation")
        rho = mat(rho)
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    @classmethod
    def from_superoperator(cls, s: SuperOperator, label: str | None = None) -> "QuantumChannel":
        return cls(s.liouville, label=s.label if label is None else label)


def liouville_from_kraus(ops) -> np.ndarray:
    return sum(np.kron(k, np.conj(k)) for k in ops)


def from_kraus(ops, label: str = "") -> QuantumChannel:
    ops = [as_square(k, "Kraus operator") for k in ops]
    if not ops:
        raise ValidationError("empty Kraus list")
    d = ops[0].shape[0]
    if any(k.shape != (d, d) for k in ops):
        raise ValidationError("Kraus operators must share one square shape")
    resid = sum(dagger(k) @ k for k in ops) - np.eye(d)
    err = float(np.linalg.norm(resid, 2))
    if err > CHANNEL_TOL:
        raise ValidationError(f"Kraus completeness violated: ||sum K^dag K - I||_inf = {err:.3e}")
    return QuantumChannel(liouville_from_kraus(ops), kraus=ops, label=label)


def unitary_channel(u, label: str = "U") -> QuantumChannel:
    u = as_square(u, "unitary")
    return from_kraus([u], label=label)


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel(np.eye(dim * dim), kraus=[np.eye(dim)], label="id")


def apply(ch: SuperOperator, rho) -> np.ndarray:
    return ch(rho)


def adjoint_apply(ch: SuperOperator, m) -> np.ndarray:
    return ch.adjoint_apply(m)


def compose(ch2: SuperOperator, ch1: SuperOperator) -> SuperOperator:
    """ch2 o ch1, keeping the channel type (and Kraus form) when both are channels."""
    out = ch2 @ ch1
    if isinstance(ch2, QuantumChannel) and isinstance(ch1, QuantumChannel):
        kraus = None
        if ch2.kraus is not None and ch1.kraus is not None:
            kraus = [k2 @ k1 for k2 in ch2.kraus for k1 in ch1.kraus]
        return QuantumChannel(out.liouville, kraus=kraus, label=f"{ch2.label}.{ch1.label}")
    return out


def mix(weights, channels) -> QuantumChannel:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) != len(channels) or len(w) == 0:
        raise ValidationError("weights and channels must be equal-length nonempty lists")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValidationError(f"weights must form a probability vector, got {w}")
    lv = sum(wi * c.liouville for wi, c in zip(w, channels))
    return QuantumChannel(lv, label="mix")


@dataclass(frozen=True)
class CPTPReport:
    is_cp: bool
    is_tp: bool
    min_choi_eigenvalue: float
    tp_residual: float


def cptp_check(s: SuperOperator, tol: float = CHOI_TOL) -> CPTPReport:
    d = s.dim
    choi = s.choi()
    herm = hermitian_residual(choi)
    w = np.linalg.eigvalsh(0.5 * (choi + dagger(choi)))
    # partial trace over the output factor
    ptr = np.einsum("aiaj->ij", choi.reshape(d, d, d, d))
    tp_res = float(np.max(np.abs(ptr - np.eye(d))))
    return CPTPReport(
        is_cp=bool(herm <= tol and w[0] >= -tol),
        is_tp=bool(tp_res <= tol),
        min_choi_eigenvalue=float(w[0]),
        tp_residual=tp_res,
    )


def tensor_identity(s: SuperOperator, anc_dim: int | None = None) -> SuperOperator:
    """Liouville matrix of s (x) id on B(H (x) H_anc)."""
    d = s.dim
    k = d if anc_dim is None else anc_dim
    lv = s.liouville.reshape(d, d, d, d)  # [a, b, i, j]
    eye = np.eye(k)
    # rows (a a', b b'), cols (i i', j j')
    big = np.einsum("abij,xy,uv->axbuiyjv", lv, eye, eye)
    n = d * k
    return SuperOperator(big.reshape(n * n, n * n), label=f"{s.label}(x)id")


def _polar_unitary(x: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(x)
    return u @ vh


def _ascend(s: SuperOperator, psi: np.ndarray, max_iter: int = 500, tol: float = 1e-14):
    """Alternating maximization of ||s(|psi><psi|)||_1 over unit vectors.

    ||X||_1 = max_{||W||_inf<=1} Re Tr[W^dag X]; for fixed W the best psi is
    the top eigenvector of the Hermitian part of s^dag(W). Each half-step
    cannot decrease the objective.
    """
    adj = dagger(s.liouville)
    best = -1.0
    for _ in range(max_iter):
        out = unvec(s.liouville @ vec(np.outer(psi, psi.conj())))
        val = trace_norm(out)
        if val <= best + tol:
            best = max(best, val)
            break
        best = val
        w = _polar_unitary(out)
        h = unvec(adj @ vec(w))
        h = 0.5 * (h + dagger(h))
        _, vecs = np.linalg.eigh(h)
        psi = vecs[:, -1]
    return best, psi


def _starts(dim: int, restarts: int, rng):
    starts = [np.eye(dim, dtype=complex)[i] for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            for ph in (1, 1j, -1, -1j):
                v = np.zeros(dim, dtype=complex)
                v[i], v[j] = 1, ph
                starts.append(v / np.sqrt(2))
    rng = _rng(rng)
    starts.extend(random_ket(rng, dim) for _ in range(restarts))
    return starts


@dataclass(frozen=True)
class NormEstimate:
    value: float
    argmax: np.ndarray
    restarts: int
    lower_bound: bool = True


def induced_one_norm_estimate(s: SuperOperator, restarts: int = 32, seed=0) -> NormEstimate:
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    best, arg = -1.0, None
    for psi in _starts(s.dim, restarts, seed):
        val, p = _ascend(s, psi)
        if val > best:
            best, arg = val, p
    return NormEstimate(value=float(best), argmax=arg, restarts=restarts)


def induced_one_norm(s: SuperOperator, restarts: int = 32, seed=0) -> float:
    """max over pure inputs of ||s(|psi><psi|)||_1 (a certified lower bound on ||s||_{1->1})."""
    return induced_one_norm_estimate(s, restarts, seed).value


@dataclass(frozen=True)
class DiamondReport:
    lower: float
    upper_surrogate: float
    upper_certified: float


def diamond_upper(s: SuperOperator, restarts: int = 32, seed=0) -> DiamondReport:
    """Bracket the diamond norm of s.

    ``lower`` is the best of the plain and ancilla-extended pure-state
    estimates. ``upper_surrogate`` is d times that estimate.
    ``upper_certified`` follows from splitting the Choi matrix into
    positive and negative parts and needs no optimization.
    """
    d = s.dim
    if s.frobenius() == 0:
        return DiamondReport(0.0, 0.0, 0.0)
    plain = induced_one_norm(s, restarts, seed)
    ext = induced_one_norm(tensor_identity(s), max(4, restarts // 4), seed)
    lower = max(plain, ext)
    choi = s.choi()
    choi = 0.5 * (choi + dagger(choi))
    w, v = np.linalg.eigh(choi)
    cert = 0.0
    for part in (w.clip(min=0), (-w).clip(min=0)):
        jp = (v * part) @ dagger(v)
        # trace over the output factor gives an operator on the input
        red = np.einsum("aiaj->ij", jp.reshape(d, d, d, d))
        cert += float(np.linalg.eigvalsh(0.5 * (red + dagger(red)))[-1])
    if hermitian_residual(s.choi()) > 1e-10:
        cert = float(np.sum(np.linalg.svd(s.choi(), compute_uv=False)))
    return DiamondReport(lower=lower, upper_surrogate=d * lower, upper_certified=max(cert, lower))


def random_channel(rng, dim: int, n_kraus: int | None = None) -> QuantumChannel:
    """Random channel from a Haar-like random isometry."""
    rng = _rng(rng)
    k = dim if n_kraus is None else n_kraus
    g = rng.normal(size=(k * dim, dim)) + 1j * rng.normal(size=(k * dim, dim))
    q, _ = np.linalg.qr(g)
    ops = [q[i * dim:(i + 1) * dim, :] for i in range(k)]
    return from_kraus(ops, label="random")
