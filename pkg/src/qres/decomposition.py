"""Free/resourceful splitting of maps and generators relative to an idempotent G."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import SuperOperator, cptp_check
from .dynamics import LindbladGenerator, build_gkls, propagator_series
from .impact import capacity, capacity_sampled
from .operators import ValidationError, matrix_exp
from .resource_maps import IDEMPOTENT_TOL, ResourceDestroyingMap, make_dephasing

BLOCK_TOL = 1e-10
COMPAT_TOL = 1e-9

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
SP = SM.T.copy()


def _g(g) -> SuperOperator:
    s = g.superop if isinstance(g, ResourceDestroyingMap) else g
    if not isinstance(s, SuperOperator):
        raise ValidationError("a linear map G is required")
    lv = s.liouville
    res = float(np.max(np.abs(lv @ lv - lv)))
    if res > IDEMPOTENT_TOL:
        raise ValidationError(f"G is not idempotent: max |G^2 - G| = {res:.3e}")
    return s


def _as_map(x) -> SuperOperator:
    if isinstance(x, LindbladGenerator):
        return x.liouville
    return x


@dataclass(frozen=True)
class SplitChannel:
    free: SuperOperator
    res: SuperOperator
    blocks: dict
    free_cptp: bool | None = None
    res_is_channel: bool | None = None

    def reconstruction_residual(self, lam: SuperOperator) -> float:
        total = sum(b.liouville for b in self.blocks.values())
        return float(max(np.max(np.abs(self.free.liouville + self.res.liouville - lam.liouville)),
                         np.max(np.abs(total - lam.liouville))))


def _split(lam: SuperOperator, g: SuperOperator, check_cptp: bool) -> SplitChannel:
    gp = SuperOperator.identity(g.dim) - g
    free = g @ lam @ g
    res = lam - free
    blocks = {
        "GLG": free,
        "GpLGp": gp @ lam @ gp,
        "GpLG": gp @ lam @ g,
        "GLGp": g @ lam @ gp,
    }
    free_cptp = res_ch = None
    if check_cptp:
        rf, rr = cptp_check(free), cptp_check(res)
        free_cptp = rf.is_cp and rf.is_tp
        res_ch = rr.is_cp and rr.is_tp
    return SplitChannel(free, res, blocks, free_cptp, res_ch)


def split_channel(lam, g) -> SplitChannel:
    """free = G o Lambda o G, res = Lambda - free, plus the four G/G-perp blocks."""
    return _split(_as_map(lam), _g(g), check_cptp=True)


def split_generator(gen, g) -> SplitChannel:
    return _split(_as_map(gen), _g(g), check_cptp=False)


@dataclass(frozen=True)
class CapacityEquality:
    C_full: float
    C_res: float
    C_res_tilde: float
    tilde_equals_res: bool
    max_gap: float


def capacity_equality_check(lam, g, m, n_samples: int = 2000, rng=0) -> CapacityEquality:
    """Capacity of Lambda, of its resource part, and of Lambda - Lambda o G."""
    lam = _as_map(lam)
    if not isinstance(g, (ResourceDestroyingMap, SuperOperator)):
        # callable G: only the tilde part is defined
        tilde = lambda rho: lam(rho) - lam(g(rho))
        cf = capacity_sampled(lam, g, m, n_samples, rng).capacity
        ct = capacity_sampled(_Callable(tilde, lam.dim), g, m, n_samples, rng).capacity
        return CapacityEquality(cf, np.nan, ct, False, abs(cf - ct))
    gs = _g(g)
    split = _split(lam, gs, check_cptp=False)
    tilde = lam - lam @ gs
    cf = capacity(lam, gs, m).capacity
    cr = capacity(split.res, gs, m).capacity
    ct = capacity(tilde, gs, m).capacity
    same = float(np.max(np.abs(tilde.liouville - split.res.liouville))) <= 1e-11
    return CapacityEquality(cf, cr, ct, bool(same), max(abs(cf - cr), abs(cf - ct)))


class _Callable:
    def __init__(self, f, dim):
        self.f, self.dim = f, dim

    def __call__(self, rho):
        return self.f(rho)


@dataclass(frozen=True)
class BlockFlags:
    non_generating: bool
    non_activating: bool
    covariant: bool
    generating_norm: float
    activating_norm: float
    covariance_norm: float
    consistent: bool


def cross_block_flags(lam, g) -> BlockFlags:
    lam = _as_map(lam)
    gs = _g(g)
    sp = _split(lam, gs, check_cptp=False)
    gen = sp.blocks["GpLG"].frobenius()
    act = sp.blocks["GLGp"].frobenius()
    cov = (gs @ lam - lam @ gs).frobenius()
    ng, na, cv = gen < BLOCK_TOL, act < BLOCK_TOL, cov < BLOCK_TOL
    return BlockFlags(bool(ng), bool(na), bool(cv), gen, act, cov, bool(cv == (ng and na)))


@dataclass(frozen=True)
class CompatibilityReport:
    time_grid: np.ndarray
    residual: np.ndarray
    compatible: bool
    semigroup_mismatch: np.ndarray | None
    L_free: SuperOperator


def compatibility_check(gen: LindbladGenerator, g, t0: float = 0.0, t1: float = 1.0, n_grid: int = 128) -> CompatibilityReport:
    """Residual ||G o L_t o G-perp o Lambda_t o G||_F on a uniform grid.

    For time-independent generators the projected semigroup exp(t L_free)
    is also compared with G o Lambda_t o G directly.
    """
    gs = _g(g)
    gl, gp = gs.liouville, np.eye(gs.dim ** 2) - gs.liouville
    grid = np.linspace(t0, t1, n_grid)
    res = np.empty(n_grid)
    mism = None if gen.time_dependent is not None else np.empty(n_grid)
    lfree = SuperOperator(gl @ gen.liouville.liouville @ gl, label="L_free")
    for i, (t, lam) in enumerate(zip(grid, propagator_series(gen, grid))):
        lt = gen.liouville_at(t)
        res[i] = np.linalg.norm(gl @ lt @ gp @ lam @ gl)
        if mism is not None:
            mism[i] = np.linalg.norm(matrix_exp(lfree.liouville, t) @ gl - gl @ lam @ gl)
    return CompatibilityReport(grid, res, bool(np.max(res) < COMPAT_TOL), mism, lfree)


def qubit_dephasing() -> ResourceDestroyingMap:
    return make_dephasing(dim=2, label="qubit dephasing")


def pauli_decay_generator(gx: float, gy: float, gz: float) -> LindbladGenerator:
    """Three independent Pauli channels; Liouville form sum_i g_i (s_i (x) s_i^T - I)."""
    return build_gkls(np.zeros((2, 2)), [(SX, gx), (SY, gy), (SZ, gz)])


def pauli_decay_free_expected(gx: float, gy: float) -> np.ndarray:
    return (gx + gy) * (np.kron(SM, SM) + np.kron(SP, SP) - 0.5 * (np.kron(SZ, SZ) + np.eye(4)))


def rabi_generator(omega: float) -> LindbladGenerator:
    return build_gkls(omega / 2 * SX)


def rabi_free_expected(omega: float, t: float) -> np.ndarray:
    c2, s2 = np.cos(omega * t / 2) ** 2, np.sin(omega * t / 2) ** 2
    return 0.5 * c2 * (np.kron(SZ, SZ) + np.eye(4)) + s2 * (np.kron(SM, SM) + np.kron(SP, SP))
