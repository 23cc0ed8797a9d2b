"""Three-level donor-acceptor model with ground state g, donor D and acceptor A.

Basis order is (g, D, A). Coherence dynamics reduce to a 4-dimensional
linear system for z = (Re y, Im y, x_D - mu_g, x_A - mu_g), where
y = <D|M(t)|A> and x_j = <j|M(t)|j> evolve in the Heisenberg picture.
The capacity with respect to site dephasing is |y| and the rate is |dy/dt|.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.optimize

from .channels import QuantumChannel, from_kraus, unitary_channel
from .dynamics import BoundReport, LindbladGenerator, build_gkls
from .operators import ValidationError, matrix_exp, op_norm
from .quadrature import cumulative
from .resource_maps import ResourceDestroyingMap, make_dephasing, resource_radius

G, D, A = 0, 1, 2
CRITICAL_BAND = 1e-6


def _unit(i, j):
    e = np.zeros((3, 3), dtype=complex)
    e[i, j] = 1
    return e


@dataclass(frozen=True)
class DimerParams:
    delta: float = 0.0
    J: float = 100.0
    gamma_phi: float = 0.0
    gamma_D: float = 5.0
    gamma_A: float = 5.0
    theta: float | None = None
    eta: float = 1.0
    p_D: float = 0.0
    p_A: float = 0.0

    def __post_init__(self):
        for name in ("gamma_phi", "gamma_D", "gamma_A"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("eta", "p_D", "p_A"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")
        vals = [self.delta, self.J, self.gamma_phi, self.gamma_D, self.gamma_A, self.eta, self.p_D, self.p_A]
        if not np.all(np.isfinite(vals)):
            raise ValidationError("parameters must be finite")

    @property
    def mixing(self) -> float:
        return mixing_angle(self.delta, self.J) if self.theta is None else self.theta

    @property
    def xi(self) -> float:
        return self.gamma_phi + (self.gamma_D + self.gamma_A) / 2

    @classmethod
    def from_step(cls, dt: float, **kw) -> "DimerParams":
        """Finite-step parameters implied by the rates over a step dt."""
        p = cls(**kw)
        return cls(**{**kw, "eta": np.exp(-p.gamma_phi * dt),
                      "p_D": 1 - np.exp(-p.gamma_D * dt), "p_A": 1 - np.exp(-p.gamma_A * dt)})

    def step_residual(self, dt: float) -> float:
        """Mismatch between (eta, p_D, p_A) and the rates over a step dt."""
        return float(max(abs(self.eta - np.exp(-self.gamma_phi * dt)),
                         abs(self.p_D - (1 - np.exp(-self.gamma_D * dt))),
                         abs(self.p_A - (1 - np.exp(-self.gamma_A * dt)))))


@dataclass(frozen=True)
class ObservableCoeffs:
    mu_g: float = 0.0
    mu_D: float = 0.0
    mu_A: float = 1.0
    nu: complex = 0.0

    def matrix(self) -> np.ndarray:
        m = np.diag([self.mu_g, self.mu_D, self.mu_A]).astype(complex)
        m[D, A] = self.nu
        m[A, D] = np.conj(self.nu)
        return m

    def is_povm(self) -> bool:
        w = np.linalg.eigvalsh(self.matrix())
        return bool(w[0] >= -1e-12 and w[-1] <= 1 + 1e-12)


ACCEPTOR = ObservableCoeffs(0.0, 0.0, 1.0, 0.0)


def mixing_angle(delta: float, J: float) -> float:
    if delta == 0:
        return float(np.sign(J) * np.pi / 4)
    return float(0.5 * np.arctan(2 * J / delta))


def hamiltonian(p: DimerParams) -> np.ndarray:
    h = p.delta / 2 * (_unit(D, D) - _unit(A, A)) + p.J * (_unit(D, A) + _unit(A, D))
    return h


def unitary(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return _unit(G, G) + c * (_unit(D, D) + _unit(A, A)) + s * (_unit(A, D) - _unit(D, A))


def damping_kraus(eta: float, p_D: float, p_A: float) -> list[np.ndarray]:
    """Combined phase damping and decay to g."""
    r = np.sqrt
    k00 = _unit(G, G) + r((1 + eta) * (1 - p_D) / 2) * _unit(D, D) + r((1 + eta) * (1 - p_A) / 2) * _unit(A, A)
    k10 = r((1 - eta) * (1 - p_D) / 2) * _unit(D, D) - r((1 - eta) * (1 - p_A) / 2) * _unit(A, A)
    k01 = r(p_D * (1 + eta) / 2) * _unit(G, D)
    k02 = r(p_A * (1 + eta) / 2) * _unit(G, A)
    k11 = r(p_D * (1 - eta) / 2) * _unit(G, D)
    k12 = -r(p_A * (1 - eta) / 2) * _unit(G, A)
    return [k00, k10, k01, k02, k11, k12]


def chain_kraus(p: DimerParams) -> list[np.ndarray]:
    u = unitary(p.mixing)
    return [k @ u for k in damping_kraus(p.eta, p.p_D, p.p_A)]


def jump_operators(p: DimerParams) -> list[tuple[np.ndarray, float]]:
    return [
        (_unit(D, D), p.gamma_phi),
        (_unit(A, A), p.gamma_phi),
        (_unit(G, D), p.gamma_D),
        (_unit(G, A), p.gamma_A),
    ]


def generator(p: DimerParams) -> LindbladGenerator:
    return build_gkls(hamiltonian(p), jump_operators(p))


@lru_cache(maxsize=1)
def site_dephasing() -> ResourceDestroyingMap:
    return make_dephasing(dim=3, label="site dephasing")


@lru_cache(maxsize=1)
def site_radius() -> float:
    return resource_radius(site_dephasing()).value


@dataclass(frozen=True)
class DimerModel:
    hamiltonian: np.ndarray
    unitary_channel: QuantumChannel
    chain: QuantumChannel
    generator: LindbladGenerator


def build_model(p: DimerParams) -> DimerModel:
    return DimerModel(
        hamiltonian=hamiltonian(p),
        unitary_channel=unitary_channel(unitary(p.mixing), label="U_theta"),
        chain=from_kraus(chain_kraus(p), label="chain"),
        generator=generator(p),
    )


def step_chain(p: DimerParams, dt: float) -> QuantumChannel:
    """One step of length dt: exp(-i H dt) followed by damping with the rate-implied parameters."""
    q = DimerParams.from_step(dt, delta=p.delta, J=p.J, gamma_phi=p.gamma_phi, gamma_D=p.gamma_D, gamma_A=p.gamma_A)
    u = matrix_exp(-1j * hamiltonian(p), dt)
    return from_kraus([k @ u for k in damping_kraus(q.eta, q.p_D, q.p_A)], label=f"chain({dt:g})")


# Liouville indices (row-stacked) of |g><g| and the D, A block: the sector that
# populations and the D-A coherence live in, closed under both dynamics
SECTOR = np.array([3 * i + j for i in range(3) for j in range(3) if (i == G) == (j == G)])


@dataclass(frozen=True)
class SplittingError:
    dt: float
    full: float
    sector: float


def splitting_error(p: DimerParams, dt: float) -> SplittingError:
    """Frobenius distance between the one-step chain and exp(dt L), overall and on the sector."""
    diff = step_chain(p, dt).liouville - matrix_exp(generator(p).liouville.liouville, dt)
    blk = diff[np.ix_(SECTOR, SECTOR)]
    return SplittingError(dt, float(np.linalg.norm(diff)), float(np.linalg.norm(blk)))


def _static_terms(p: DimerParams, m: ObservableCoeffs):
    th = p.mixing
    w = p.eta * np.sqrt((1 - p.p_D) * (1 - p.p_A)) * complex(m.nu)
    pop = 0.5 * np.sin(2 * th) * (m.mu_A * (1 - p.p_A) - m.mu_D * (1 - p.p_D) + m.mu_g * (p.p_A - p.p_D))
    return th, w, pop


def capacity_closed_form(p: DimerParams, m: ObservableCoeffs = ACCEPTOR) -> float:
    """Capacity of the one-step chain for site dephasing, valid for complex nu.

    The real rotation mixes only the real part of the D-A coherence with
    the population imbalance; the imaginary part passes through.
    """
    th, w, pop = _static_terms(p, m)
    return float(abs(np.cos(2 * th) * w.real + pop + 1j * w.imag))


def capacity_closed_form_real_nu(p: DimerParams, m: ObservableCoeffs = ACCEPTOR) -> float:
    """The same quantity written for real nu: |cos(2 theta) w + pop|."""
    th, w, pop = _static_terms(p, m)
    return float(abs(np.cos(2 * th) * w + pop))


def ode_matrix(p: DimerParams) -> np.ndarray:
    xi, dl, J = p.xi, p.delta, p.J
    return np.array([
        [-xi, -dl, 0, 0],
        [dl, -xi, -J, J],
        [0, 2 * J, -p.gamma_D, 0],
        [0, -2 * J, 0, -p.gamma_A],
    ], dtype=float)


def initial_state(m: ObservableCoeffs) -> np.ndarray:
    nu = complex(m.nu)
    return np.array([nu.real, nu.imag, m.mu_D - m.mu_g, m.mu_A - m.mu_g])


@dataclass(frozen=True)
class CoherenceTrajectory:
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    x_D: np.ndarray
    x_A: np.ndarray
    regime: str

    @property
    def s(self) -> np.ndarray:
        return self.x_A - self.x_D

    @property
    def N(self) -> np.ndarray:
        return self.x_A + self.x_D

    @property
    def capacity(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def ode_solution(p: DimerParams, m: ObservableCoeffs, t) -> CoherenceTrajectory:
    """Reduced 4x4 linear system, solved by matrix exponential."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a, z0 = ode_matrix(p), initial_state(m)
    z = np.array([matrix_exp(a, ti).real @ z0 for ti in t])
    return CoherenceTrajectory(t, z[:, 0], z[:, 1], z[:, 2] + m.mu_g, z[:, 3] + m.mu_g, regime(p))


def ode_rate(p: DimerParams, m: ObservableCoeffs, t) -> np.ndarray:
    """|dy/dt| from the reduced system."""
    tr = ode_solution(p, m, t)
    z = np.stack([tr.u, tr.v, tr.x_D - m.mu_g, tr.x_A - m.mu_g])
    dz = ode_matrix(p) @ z
    return np.hypot(dz[0], dz[1])


def regime(p: DimerParams) -> str:
    disc = p.gamma_phi - 4 * abs(p.J)
    if abs(disc) < CRITICAL_BAND * max(abs(p.J), 1e-300):
        return "critical"
    return "underdamped" if disc < 0 else "overdamped"


def _need(cond: bool, msg: str):
    if not cond:
        raise ValidationError(f"regime mismatch: {msg}")


def analytic_zero_dephasing(p: DimerParams, m: ObservableCoeffs, t) -> CoherenceTrajectory:
    """Closed-form solution for gamma_phi = 0 and equal lifetimes."""
    _need(p.gamma_phi == 0, "requires gamma_phi = 0")
    _need(p.gamma_D == p.gamma_A, "requires gamma_D = gamma_A")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    g, J, dl = p.gamma_D, p.J, p.delta
    nu = complex(m.nu)
    om = np.hypot(2 * J, dl)
    k = dl * nu.real + J * (m.mu_A - m.mu_D)
    e = np.exp(-g * t)
    c, s = np.cos(om * t), np.sin(om * t)
    u = e * (nu.real - dl * nu.imag / om * s + dl * k / om ** 2 * (c - 1))
    v = e * (nu.imag * c + k / om * s)
    diff = e * (m.mu_A - m.mu_D - 4 * J * nu.imag / om * s + 4 * J * k / om ** 2 * (c - 1))
    tot = 2 * m.mu_g + (m.mu_A + m.mu_D - 2 * m.mu_g) * e
    return CoherenceTrajectory(t, u, v, (tot - diff) / 2, (tot + diff) / 2, regime(p))


def generalized_rabi(p: DimerParams) -> float:
    return float(np.hypot(2 * p.J, p.delta))


def rate_closed_form(p: DimerParams, t) -> np.ndarray:
    """Rate for M = |A><A| with gamma_phi = 0 and equal lifetimes."""
    _need(p.gamma_phi == 0, "requires gamma_phi = 0")
    _need(p.gamma_D == p.gamma_A, "requires gamma_D = gamma_A")
    t = np.asarray(t, dtype=float)
    g, J, dl = p.gamma_D, p.J, p.delta
    om = generalized_rabi(p)
    c, s = np.cos(om * t), np.sin(om * t)
    inner = dl ** 2 * (g * (c - 1) / om ** 2 + s / om) ** 2 + (c - g / om * s) ** 2
    return np.exp(-g * t) * abs(J) * np.sqrt(inner)


def _resonance_R(p: DimerParams) -> float:
    return float(np.sqrt(1 + p.gamma_D ** 2 / (4 * p.J ** 2)))


def resonance_capacity(p: DimerParams, t) -> np.ndarray:
    _need(p.delta == 0 and p.gamma_phi == 0 and p.gamma_D == p.gamma_A, "requires delta = gamma_phi = 0, equal lifetimes")
    t = np.asarray(t, dtype=float)
    return 0.5 * np.exp(-p.gamma_D * t) * np.abs(np.sin(2 * p.J * t))


def resonance_rate(p: DimerParams, t) -> np.ndarray:
    _need(p.delta == 0 and p.gamma_phi == 0 and p.gamma_D == p.gamma_A, "requires delta = gamma_phi = 0, equal lifetimes")
    t = np.asarray(t, dtype=float)
    phi = np.arctan(p.gamma_D / (2 * p.J))
    return np.exp(-p.gamma_D * t) * abs(p.J) * _resonance_R(p) * np.abs(np.cos(2 * p.J * t + phi))


@dataclass(frozen=True)
class _ZD:
    xi: float
    zeta: float
    freq: float  # omega, kappa, or 0 at critical damping
    regime: str


def _zd(p: DimerParams) -> _ZD:
    _need(p.delta == 0, "requires delta = 0")
    _need(p.gamma_D == p.gamma_A, "requires gamma_D = gamma_A")
    g, gp, J = p.gamma_D, p.gamma_phi, p.J
    xi = gp + g
    zeta = (g + xi) / 2
    reg = regime(p)
    if reg == "underdamped":
        f = 0.5 * np.sqrt(16 * J ** 2 - gp ** 2)
    elif reg == "overdamped":
        f = 0.5 * np.sqrt(gp ** 2 - 16 * J ** 2)
    else:
        f = 0.0
    return _ZD(xi, zeta, float(f), reg)


def _cs(z: _ZD, t):
    """exp(-zeta t) times (c(t), s(t)), with s(t) = sin(wt)/w, sinh(kt)/k, or t.

    The overdamped branch is written with decaying exponentials only so that
    large t cannot overflow.
    """
    e = np.exp(-z.zeta * t)
    if z.regime == "underdamped":
        return e * np.cos(z.freq * t), e * np.sin(z.freq * t) / z.freq
    if z.regime == "overdamped":
        slow, fast = np.exp((z.freq - z.zeta) * t), np.exp(-(z.freq + z.zeta) * t)
        return (slow + fast) / 2, (slow - fast) / (2 * z.freq)
    return e, e * t


def _zd_trajectory(p: DimerParams, m: ObservableCoeffs, t, z: _ZD) -> CoherenceTrajectory:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    J, gp, g = p.J, p.gamma_phi, p.gamma_D
    nu = complex(m.nu)
    v0, s0 = nu.imag, m.mu_A - m.mu_D
    c, sn = _cs(z, t)
    u = nu.real * np.exp(-z.xi * t)
    v = v0 * c + (2 * J * s0 - gp * v0) / 2 * sn
    diff = s0 * c + (gp * s0 - 8 * J * v0) / 2 * sn
    tot = 2 * m.mu_g + (m.mu_A + m.mu_D - 2 * m.mu_g) * np.exp(-g * t)
    return CoherenceTrajectory(t, u, v, (tot - diff) / 2, (tot + diff) / 2, z.regime)


def analytic_zero_detuning(p: DimerParams, m: ObservableCoeffs, t) -> CoherenceTrajectory:
    """Closed-form solution for delta = 0 and equal lifetimes, in each damping regime."""
    return _zd_trajectory(p, m, t, _zd(p))


def zero_detuning_rate(p: DimerParams, m: ObservableCoeffs, t) -> np.ndarray:
    tr = analytic_zero_detuning(p, m, t)
    xi = p.gamma_phi + p.gamma_D
    return np.hypot(xi * tr.u, p.J * tr.s - xi * tr.v)


@dataclass(frozen=True)
class Envelope:
    a: float
    b: float
    R: float
    decay: float
    regime: str
    u_amp: float
    u_decay: float


def envelope(p: DimerParams, m: ObservableCoeffs) -> Envelope:
    """Envelope |J s - xi v| <= R exp(-decay t), plus the |xi u| term."""
    z = _zd(p)
    J, gp, g = p.J, p.gamma_phi, p.gamma_D
    nu = complex(m.nu)
    v0, s0 = nu.imag, m.mu_A - m.mu_D
    a = J * s0 - z.xi * v0
    num = v0 * (z.xi * gp - 8 * J ** 2) - J * s0 * (g + z.xi)
    if z.regime == "underdamped":
        b = num / (2 * z.freq)
        R, dec = np.hypot(a, b), z.zeta
    elif z.regime == "overdamped":
        b = num / (2 * z.freq)
        R, dec = np.hypot(a, b), z.zeta - z.freq
    else:
        b = num / 2
        R, dec = np.nan, z.zeta
    return Envelope(float(a), float(b), float(R), float(dec), z.regime, abs(nu.real) * z.xi, z.xi)


def _expint(rate: float, t1, t2):
    """Integral of exp(-rate s) over [t1, t2]."""
    if rate == 0:
        return np.asarray(t2, dtype=float) - t1
    return (np.exp(-rate * t1) - np.exp(-rate * np.asarray(t2, dtype=float))) / rate


def _texpint(rate: float, t1, t2):
    """Integral of s exp(-rate s) over [t1, t2]."""
    t2 = np.asarray(t2, dtype=float)

    def prim(s):
        s = np.asarray(s, dtype=float)
        fin = np.isfinite(s)
        safe = np.where(fin, s, 0.0)
        return np.where(fin, -(safe / rate + 1 / rate ** 2) * np.exp(-rate * safe), 0.0)

    return prim(t2) - prim(t1)


def variation_bound_closed_form(p: DimerParams, m: ObservableCoeffs, t1: float, t2) -> np.ndarray:
    """Uniform bound on |C(t2) - C(t1)| for delta = 0 and equal lifetimes."""
    env = envelope(p, m)
    out = env.u_amp * _expint(env.u_decay, t1, t2) if env.u_amp else 0.0
    if env.regime == "critical":
        out = out + abs(env.a) * _expint(env.decay, t1, t2) + abs(env.b) * _texpint(env.decay, t1, t2)
    else:
        out = out + env.R * _expint(env.decay, t1, t2)
    return np.asarray(out, dtype=float)


def feasibility_ceiling(p: DimerParams, m: ObservableCoeffs, t1: float) -> float:
    """Bound on any change of C after t1 (the t2 -> infinity limit)."""
    env = envelope(p, m)
    if env.decay <= 0:
        return np.inf
    return float(variation_bound_closed_form(p, m, t1, np.inf))


def resonance_variation_bound(p: DimerParams, t1: float, t2) -> np.ndarray:
    _need(p.delta == 0 and p.gamma_phi == 0 and p.gamma_D == p.gamma_A, "requires delta = gamma_phi = 0, equal lifetimes")
    g = p.gamma_D
    return abs(p.J) / g * _resonance_R(p) * (np.exp(-g * t1) - np.exp(-g * np.asarray(t2, dtype=float)))


def resonance_ceiling(p: DimerParams, t1: float) -> float:
    g = p.gamma_D
    return float(abs(p.J) / g * np.exp(-g * t1) * _resonance_R(p))


def resonance_min_time(p: DimerParams, t1: float, target: float) -> float:
    """Smallest dt compatible with the uniform bound; inf when the target is unreachable."""
    g = p.gamma_D
    arg = 1 - g * np.exp(g * t1) * target / (abs(p.J) * _resonance_R(p))
    if arg <= 0:
        return np.inf
    return float(-np.log(arg) / g)


def norm_bound(p: DimerParams) -> float:
    """Analytic bound on ||L||_{1->1} for the dimer generator."""
    return generalized_rabi(p) + 2 * (p.gamma_D + p.gamma_A) + 4 * p.gamma_phi


def _is_acceptor(m: ObservableCoeffs) -> bool:
    return m.mu_g == 0 and m.mu_D == 0 and m.mu_A == 1 and m.nu == 0


def bounds_closed_form(p: DimerParams, m: ObservableCoeffs, t1: float, t2: float, target: float = 0.0,
                       n_grid: int = 200, quad_tol: float = 1e-9) -> BoundReport:
    """Closed-form bound chain on a grid, with exact capacity and integrated rate for comparison."""
    _need(p.delta == 0, "closed-form bounds need delta = 0")
    _need(p.gamma_D == p.gamma_A, "closed-form bounds need gamma_D = gamma_A")
    _need(t1 <= t2, "need t1 <= t2")
    grid = np.linspace(t1, t2, n_grid)
    tr = analytic_zero_detuning(p, m, grid)
    caps = tr.capacity
    rate = lambda s: float(zero_detuning_rate(p, m, s)[0])
    gams = zero_detuning_rate(p, m, grid)
    integ = cumulative(rate, grid, quad_tol)
    resonant = p.gamma_phi == 0 and _is_acceptor(m)
    if resonant:
        uniform = resonance_variation_bound(p, t1, grid)
        ceiling = resonance_ceiling(p, t1)
        min_time = resonance_min_time(p, t1, target)
        tag = "resonance"
    else:
        uniform = variation_bound_closed_form(p, m, t1, grid)
        ceiling = feasibility_ceiling(p, m, t1)
        if target <= 0:
            min_time = 0.0
        elif target >= ceiling:
            min_time = np.inf
        else:
            f = lambda dt: float(variation_bound_closed_form(p, m, t1, t1 + dt)) - target
            hi = 1.0 / max(envelope(p, m).decay, 1e-12)
            while f(hi) < 0:
                hi *= 2
            min_time = scipy.optimize.brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-14)
        tag = tr.regime
    return BoundReport(
        time_grid=grid,
        capacity_series=caps,
        gamma_series=gams,
        variation_integral_series=integ,
        uniform_bound_series=np.asarray(uniform),
        c_MG=op_norm(m.matrix()) * site_radius(),
        L_max=norm_bound(p),
        min_time=float(min_time),
        feasibility_ceiling=float(ceiling),
        feasible=bool(target < ceiling),
        target=target,
        extras={"regime": tag},
    )
