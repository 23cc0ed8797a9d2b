"""YAML run configuration with strict key checking.

Schema (all sections optional unless a command needs them)::

    model:
      kind: dimer | custom | rabi | pauli_decay
      dimer: {delta, J, gamma_phi, gamma_D, gamma_A, theta, eta, p_D, p_A}
      custom:
        hamiltonian: {re: [[...]], im: [[...]]}
        jumps: [{op: {re, im}, rate: float}]
        kraus: [{re, im}, ...]
      rabi: {omega}
      pauli_decay: {gx, gy, gz}
    map:
      kind: dephasing | twirl | replacement
      dim: int
      basis: [{re, im}]          # kets as 1 x d matrices, dephasing only
      group: [{re, im}, ...]     # twirl only
      sigma: {re, im}            # replacement only
    observable:
      coeffs: {mu_g, mu_D, mu_A, nu_re, nu_im}
      matrix: {re, im}
    run:
      t1, t2, n_grid, target, seed, trials, n_values, restarts, analytic, quad_tol
    verify:
      samples, inject_broken_kraus
    output:
      dir

Matrices are row-major lists; ``im`` may be omitted for real matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .operators import ValidationError


class ConfigError(ValueError):
    pass


SCHEMA = {
    "model": {"kind", "dimer", "custom", "rabi", "pauli_decay"},
    "model.dimer": {"delta", "J", "gamma_phi", "gamma_D", "gamma_A", "theta", "eta", "p_D", "p_A"},
    "model.custom": {"hamiltonian", "jumps", "kraus"},
    "model.rabi": {"omega"},
    "model.pauli_decay": {"gx", "gy", "gz"},
    "map": {"kind", "dim", "basis", "group", "sigma"},
    "observable": {"coeffs", "matrix"},
    "observable.coeffs": {"mu_g", "mu_D", "mu_A", "nu_re", "nu_im"},
    "run": {"t1", "t2", "n_grid", "target", "seed", "trials", "n_values", "restarts", "analytic", "quad_tol"},
    "verify": {"samples", "inject_broken_kraus"},
    "output": {"dir"},
}
TOP = {"model", "map", "observable", "run", "verify", "output"}
MODEL_KINDS = {"dimer", "custom", "rabi", "pauli_decay"}
MAP_KINDS = {"dephasing", "twirl", "replacement"}


@dataclass
class RunOptions:
    t1: float = 0.0
    t2: float = 1.0
    n_grid: int = 200
    target: float = 0.0
    seed: int = 0
    trials: int = 100_000
    n_values: list = field(default_factory=lambda: [1, 10, 100, 1000])
    restarts: int = 32
    analytic: bool = False
    quad_tol: float = 1e-9


@dataclass
class RunConfig:
    model: dict = field(default_factory=lambda: {"kind": "dimer", "dimer": {}})
    map: dict = field(default_factory=lambda: {"kind": "dephasing"})
    observable: dict = field(default_factory=dict)
    run: RunOptions = field(default_factory=RunOptions)
    verify: dict = field(default_factory=dict)
    output_dir: str = "out"
    source: str = "<defaults>"


def _check_keys(d, path):
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(d).__name__}")
    allowed = SCHEMA.get(path, TOP if path == "" else None)
    if allowed is not None:
        extra = sorted(set(d) - allowed)
        if extra:
            where = path or "top level"
            raise ConfigError(f"{where}: unknown key(s) {extra}; allowed {sorted(allowed)}")
    return d


def parse_matrix(spec, path: str) -> np.ndarray:
    if not isinstance(spec, dict) or "re" not in spec:
        raise ConfigError(f"{path}: matrix must be a mapping with 're' (and optional 'im')")
    extra = set(spec) - {"re", "im"}
    if extra:
        raise ConfigError(f"{path}: unknown key(s) {sorted(extra)}")
    try:
        re = np.asarray(spec["re"], dtype=float)
        im = np.asarray(spec.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: non-numeric entries ({e})") from None
    if re.ndim != 2 or re.shape != im.shape:
        raise ConfigError(f"{path}: 're' and 'im' must be equal-shape 2-d lists, got {re.shape} and {im.shape}")
    return re + 1j * im


def _number(d, key, path, default=None, kind=float):
    if key not in d:
        return default
    try:
        return kind(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {d[key]!r}") from None


def load(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        raise ConfigError(f"{p}:{mark.line + 1}:{mark.column + 1}: {e.problem}") from None
    cfg = from_dict(raw or {})
    cfg.source = str(p)
    return cfg


def from_dict(raw: dict) -> RunConfig:
    raw = _check_keys(raw, "")
    model = _check_keys(raw.get("model", {"kind": "dimer"}), "model")
    kind = model.get("kind", "dimer")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model.kind: {kind!r} not in {sorted(MODEL_KINDS)}")
    for sub in ("dimer", "custom", "rabi", "pauli_decay"):
        _check_keys(model.get(sub), f"model.{sub}")
    gmap = _check_keys(raw.get("map", {"kind": "dephasing"}), "map")
    if gmap.get("kind", "dephasing") not in MAP_KINDS:
        raise ConfigError(f"map.kind: {gmap.get('kind')!r} not in {sorted(MAP_KINDS)}")
    obs = _check_keys(raw.get("observable", {}), "observable")
    _check_keys(obs.get("coeffs"), "observable.coeffs")
    run = _check_keys(raw.get("run", {}), "run")
    ro = RunOptions()
    for key, kd in (("t1", float), ("t2", float), ("n_grid", int), ("target", float), ("seed", int),
                    ("trials", int), ("restarts", int), ("quad_tol", float)):
        setattr(ro, key, _number(run, key, "run", getattr(ro, key), kd))
    if "n_values" in run:
        try:
            ro.n_values = [int(n) for n in run["n_values"]]
        except (TypeError, ValueError):
            raise ConfigError(f"run.n_values: expected a list of integers, got {run['n_values']!r}") from None
    ro.analytic = bool(run.get("analytic", False))
    if ro.t2 < ro.t1:
        raise ConfigError("run: t2 must be >= t1")
    if ro.n_grid < 2:
        raise ConfigError("run.n_grid: must be >= 2")
    if ro.target < 0:
        raise ConfigError("run.target: must be >= 0")
    ver = _check_keys(raw.get("verify", {}), "verify")
    out = _check_keys(raw.get("output", {}), "output")
    cfg = RunConfig(model=model, map=gmap, observable=obs, run=ro, verify=ver, output_dir=str(out.get("dir", "out")))
    build(cfg)  # re-check all physical invariants
    return cfg


@dataclass
class Built:
    kind: str
    dim: int
    params: object
    coeffs: object
    observable: np.ndarray
    gmap: object
    channel: object
    generator: object


def build(cfg: RunConfig) -> Built:
    """Turn a parsed config into validated module inputs."""
    from . import decomposition as dec
    from . import dimer
    from .channels import from_kraus
    from .dynamics import build_gkls
    from .resource_maps import make_dephasing, make_replacement, make_twirl

    m = cfg.model
    kind = m.get("kind", "dimer")
    params = coeffs = channel = gen = None
    try:
        if kind == "dimer":
            params = dimer.DimerParams(**{k: float(v) for k, v in (m.get("dimer") or {}).items()})
            model = dimer.build_model(params)
            channel, gen, dim = model.chain, model.generator, 3
        elif kind == "custom":
            c = m.get("custom") or {}
            if "hamiltonian" not in c and "kraus" not in c:
                raise ConfigError("model.custom: give a hamiltonian (dynamics) and/or kraus (static channel)")
            if "kraus" in c:
                channel = from_kraus([parse_matrix(k, f"model.custom.kraus[{i}]") for i, k in enumerate(c["kraus"])])
            if "hamiltonian" in c:
                h = parse_matrix(c["hamiltonian"], "model.custom.hamiltonian")
                jumps = []
                for i, j in enumerate(c.get("jumps") or []):
                    if set(j) - {"op", "rate"}:
                        raise ConfigError(f"model.custom.jumps[{i}]: unknown keys {sorted(set(j) - {'op', 'rate'})}")
                    jumps.append((parse_matrix(j["op"], f"model.custom.jumps[{i}].op"), float(j["rate"])))
                gen = build_gkls(h, jumps)
            dim = (channel or gen).dim
        elif kind == "rabi":
            gen = dec.rabi_generator(float((m.get("rabi") or {}).get("omega", 1.0)))
            dim = 2
        else:
            pd = m.get("pauli_decay") or {}
            gen = dec.pauli_decay_generator(float(pd.get("gx", 1.0)), float(pd.get("gy", 1.0)), float(pd.get("gz", 1.0)))
            dim = 2

        g = cfg.map
        gk = g.get("kind", "dephasing")
        if "dim" in g and int(g["dim"]) != dim:
            raise ConfigError(f"map.dim: {g['dim']} does not match model dimension {dim}")
        if gk == "dephasing":
            if "basis" in g:
                kets = [parse_matrix(b, f"map.basis[{i}]").ravel() for i, b in enumerate(g["basis"])]
                gmap = make_dephasing(kets)
            else:
                gmap = make_dephasing(dim=dim)
        elif gk == "twirl":
            if "group" not in g:
                raise ConfigError("map.group: required for twirl")
            gmap = make_twirl([parse_matrix(u, f"map.group[{i}]") for i, u in enumerate(g["group"])])
        else:
            if "sigma" in g:
                from .operators import DensityOperator
                sigma = DensityOperator(parse_matrix(g["sigma"], "map.sigma"))
            else:
                sigma = np.eye(dim) / dim
            gmap = make_replacement(sigma)

        o = cfg.observable
        if "matrix" in o:
            obs = parse_matrix(o["matrix"], "observable.matrix")
            from .operators import HermitianObservable
            obs = HermitianObservable(obs).matrix
        elif "coeffs" in o or kind == "dimer":
            c = o.get("coeffs") or {}
            if dim != 3:
                raise ConfigError("observable.coeffs: only meaningful for the 3-level dimer")
            coeffs = dimer.ObservableCoeffs(float(c.get("mu_g", 0.0)), float(c.get("mu_D", 0.0)),
                                            float(c.get("mu_A", 1.0)),
                                            complex(float(c.get("nu_re", 0.0)), float(c.get("nu_im", 0.0))))
            obs = coeffs.matrix()
        else:
            obs = np.diag([1.0] + [0.0] * (dim - 1)).astype(complex)
        if obs.shape != (dim, dim):
            raise ConfigError(f"observable: shape {obs.shape} does not match model dimension {dim}")
    except ValidationError as e:
        raise ConfigError(f"invalid physical input: {e}") from None
    except (TypeError, ValueError, KeyError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid value: {e}") from None
    return Built(kind, dim, params, coeffs, obs, gmap, channel, gen)
