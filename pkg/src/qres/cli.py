"""Command-line front end: ``qres <command> --config run.yaml``."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import decomposition as dec
from . import dimer
from .dynamics import StepControlError, time_feasibility
from .impact import capacity, hypothesis_test
from .operators import ValidationError
from .quadrature import QuadratureError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_REGIME = 0, 2, 3, 4


class InvariantFailure(RuntimeError):
    pass


class RegimeMismatch(RuntimeError):
    pass


def workers() -> int:
    try:
        return max(1, int(os.environ.get("QRES_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    items = list(items)
    n = workers()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.12g" % float(x)


def write_csv(path: Path, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text


def write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def plot_csv(path: Path, xcol: str, ycols):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with path.open() as f:
        rows = list(csv.DictReader(f))
    x = [float(r[xcol]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in ycols:
        ax.plot(x, [float(r[c]) for r in rows], label=c)
    ax.set_xlabel(xcol)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path.with_suffix(".svg"), metadata={"Date": None})
    plt.close(fig)


def _need_dimer(b, what):
    if b.params is None:
        raise cfgmod.ConfigError(f"{what} needs model.kind: dimer")


def cmd_sweep_theta(cfg, b, out: Path, plots: bool):
    _need_dimer(b, "sweep-theta")
    coeffs = b.coeffs or dimer.ACCEPTOR
    g = b.gmap
    thetas = np.linspace(0, np.pi, 181)

    def row(th):
        p = dimer.DimerParams(**{**b.params.__dict__, "theta": float(th)})
        cf = dimer.capacity_closed_form(p, coeffs)
        cs = capacity(dimer.build_model(p).chain, g, coeffs.matrix()).capacity
        return (th, cf, cs, abs(cf - cs))

    rows = pmap(row, thetas)
    worst = max(r[3] for r in rows)
    if worst >= 1e-10:
        raise InvariantFailure(f"closed form and spectral capacity differ by {worst:.3e}")
    path = out / "sweep_theta.csv"
    write_csv(path, ["theta", "capacity_closed_form", "capacity_spectral", "abs_diff"], rows)
    if plots:
        plot_csv(path, "theta", ["capacity_closed_form", "capacity_spectral"])
    return f"wrote {path} (181 rows, max abs_diff {worst:.3e})"


def _analytic(b, r):
    """Closed-form uniform bound on the same grid, or None when the regime does not allow it."""
    if b.params is None:
        return None, "custom"
    p, coeffs = b.params, b.coeffs or dimer.ACCEPTOR
    try:
        rep = dimer.bounds_closed_form(p, coeffs, r.t1, r.t2, r.target, r.n_grid, r.quad_tol)
    except ValidationError as e:
        return None, str(e)
    return rep, rep.extras["regime"]


def _bound_rows(cfg, b):
    if b.generator is None:
        raise cfgmod.ConfigError("model needs a generator (hamiltonian) for dynamics and bounds")
    r = cfg.run
    rep = time_feasibility(b.generator, b.gmap, b.observable, r.t1, r.t2, r.target, r.n_grid,
                           quad_tol=r.quad_tol, restarts=min(r.restarts, 8))
    ana, tag = _analytic(b, r)
    return rep, ana, tag


def _check_chain(rep, ana):
    dc = np.abs(rep.capacity_series - rep.capacity_series[0])
    v1 = np.max(dc - rep.variation_integral_series)
    v2 = np.max(rep.variation_integral_series - rep.uniform_bound_series)
    msgs = []
    if v1 > 1e-8:
        msgs.append(f"|dC| exceeds the integrated rate by {v1:.3e}")
    if v2 > 1e-9:
        msgs.append(f"integrated rate exceeds the uniform bound by {v2:.3e}")
    if ana is not None:
        v3 = np.max(rep.variation_integral_series - ana.uniform_bound_series)
        if v3 > 1e-8:
            msgs.append(f"integrated rate exceeds the closed-form bound by {v3:.3e}")
    if msgs:
        raise InvariantFailure("; ".join(msgs))


def cmd_dynamics(cfg, b, out: Path, plots: bool):
    rep, ana, tag = _bound_rows(cfg, b)
    if ana is None:
        warnings.warn(f"closed-form bound unavailable ({tag}); column filled with nan", stacklevel=1)
    _check_chain(rep, ana)
    regime = dimer.regime(b.params) if b.params is not None else "n/a"
    abound = ana.uniform_bound_series if ana is not None else np.full(len(rep.time_grid), np.nan)
    rows = zip(rep.time_grid, rep.capacity_series, rep.gamma_series, rep.variation_integral_series,
               rep.uniform_bound_series, abound, [regime] * len(rep.time_grid))
    path = out / "dynamics.csv"
    write_csv(path, ["t", "capacity", "gamma", "variation_integral", "uniform_bound",
                     "analytic_bound", "regime"], rows)
    if plots:
        cols = ["capacity", "variation_integral"] + (["analytic_bound"] if ana is not None else [])
        plot_csv(path, "t", cols)
    return f"wrote {path} ({len(rep.time_grid)} rows, regime {regime})"


def cmd_bounds(cfg, b, out: Path, plots: bool):
    rep, ana, tag = _bound_rows(cfg, b)
    if cfg.run.analytic and ana is None:
        raise RegimeMismatch(f"closed-form bounds requested but unavailable: {tag}")
    _check_chain(rep, ana)
    dc = np.abs(rep.capacity_series - rep.capacity_series[0])
    rows = zip(rep.time_grid, dc, rep.variation_integral_series, rep.uniform_bound_series,
               ana.uniform_bound_series if ana is not None else np.full(len(dc), np.nan))
    path = out / "bounds.csv"
    write_csv(path, ["t", "abs_delta_capacity", "variation_integral", "uniform_bound", "analytic_bound"], rows)
    summary = [
        ("c_MG", rep.c_MG), ("L_max", rep.L_max), ("L_max_estimate", rep.extras["L_max_estimate"]),
        ("gkls_gamma_bound", rep.extras["gkls_gamma_bound"]), ("target", rep.target),
        ("min_time", rep.min_time), ("feasibility_ceiling", rep.feasibility_ceiling),
        ("verdict", "feasible" if rep.feasible else "infeasible"),
    ]
    if ana is not None:
        summary += [("analytic_regime", tag), ("analytic_min_time", ana.min_time),
                    ("analytic_ceiling", ana.feasibility_ceiling),
                    ("analytic_verdict", "feasible" if ana.feasible else "infeasible")]
    write_csv(out / "bounds_summary.csv", ["key", "value"], summary)
    if plots:
        plot_csv(path, "t", ["abs_delta_capacity", "variation_integral", "uniform_bound"])
    verdict = "infeasible" if (not rep.feasible or (ana is not None and not ana.feasible)) else "feasible"
    ceil = ana.feasibility_ceiling if ana is not None else rep.feasibility_ceiling
    return f"{verdict}: target {rep.target:.12g}, ceiling {ceil:.12g}; wrote {path}"


def cmd_decompose(cfg, b, out: Path, plots: bool):
    g = b.gmap
    lines = []
    if b.channel is not None:
        sp = dec.split_channel(b.channel, g)
        fl = dec.cross_block_flags(b.channel, g)
        eq = dec.capacity_equality_check(b.channel, g, b.observable)
        lines.append("channel blocks (Frobenius norms):")
        for k, v in sp.blocks.items():
            lines.append(f"  {k:6s} {v.frobenius():.12g}")
        lines.append(f"  free part CPTP: {sp.free_cptp}; resource part is a channel: {sp.res_is_channel}")
        lines.append(f"  non_generating={fl.non_generating} non_activating={fl.non_activating} covariant={fl.covariant}")
        lines.append(f"  C_full={eq.C_full:.12g} C_res={eq.C_res:.12g} C_res_tilde={eq.C_res_tilde:.12g}")
        if eq.max_gap > 1e-10:
            raise InvariantFailure(f"capacities of the full and resource parts differ by {eq.max_gap:.3e}")
    if b.generator is not None:
        r = cfg.run
        comp = dec.compatibility_check(b.generator, g, r.t1, r.t2, 128)
        sg = dec.split_generator(b.generator, g)
        lines.append("generator blocks (Frobenius norms):")
        for k, v in sg.blocks.items():
            lines.append(f"  {k:6s} {v.frobenius():.12g}")
        verdict = "compatible" if comp.compatible else "incompatible"
        lines.append(f"compatibility: {verdict} (max residual {np.max(comp.residual):.3e})")
        write_csv(out / "compatibility.csv", ["t", "residual"], zip(comp.time_grid, comp.residual))
    text = "\n".join(lines) + "\n"
    write_text(out / "decompose.txt", text)
    return text.rstrip()


def cmd_hypothesis(cfg, b, out: Path, plots: bool):
    if b.channel is None:
        raise cfgmod.ConfigError("hypothesis needs a static channel (dimer or custom kraus)")
    r = cfg.run
    res = capacity(b.channel, b.gmap, b.observable)
    rng = np.random.default_rng(r.seed)
    rows = []
    for n in r.n_values:
        h = hypothesis_test(b.channel, b.gmap, b.observable, res.optimizer, n, r.trials, rng)
        if not h.within_bound:
            raise InvariantFailure(f"n={n}: empirical error {h.empirical_error} exceeds bound {h.hoeffding_bound}")
        rows.append((n, h.p0, h.p1, h.p_succ, h.hoeffding_bound, h.empirical_error, h.slack))
    path = out / "hypothesis.csv"
    write_csv(path, ["n", "p0", "p1", "p_succ", "hoeffding_bound", "empirical_error", "slack"], rows)
    return f"wrote {path} (capacity {res.capacity:.12g}, p_succ {0.5 + res.capacity / 2:.12g})"


def cmd_verify(cfg, b, out: Path, plots: bool):
    from .verify import run_all

    v = cfg.verify
    results = run_all(cfg.run.seed, int(v.get("samples", 200)), bool(v.get("inject_broken_kraus", False)))
    text = "\n".join(r.line() for r in results) + "\n"
    write_text(out / "verify.txt", text)
    print(text, end="")
    bad = [r for r in results if not r.passed]
    if bad:
        raise InvariantFailure(f"{len(bad)} check(s) failed: " + ", ".join(f"{r.name} (seed {r.seed})" for r in bad))
    return f"all {len(results)} checks passed"


def cmd_check_config(cfg, b, out: Path, plots: bool):
    return f"{cfg.source}: ok (model {b.kind}, dim {b.dim}, map {b.gmap.kind})"


COMMANDS = {
    "sweep-theta": cmd_sweep_theta,
    "dynamics": cmd_dynamics,
    "bounds": cmd_bounds,
    "decompose": cmd_decompose,
    "hypothesis": cmd_hypothesis,
    "verify": cmd_verify,
    "check-config": cmd_check_config,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qres", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="YAML run configuration (defaults apply when omitted)")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, help="RNG seed (overrides run.seed)")
    ap.add_argument("--plots", action="store_true", help="also write SVG line plots (needs matplotlib)")
    args = ap.parse_args(argv)
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.from_dict({})
        if args.seed is not None:
            cfg.run.seed = args.seed
        b = cfgmod.build(cfg)
        out = Path(args.out or cfg.output_dir)
        msg = COMMANDS[args.command](cfg, b, out, args.plots)
    except cfgmod.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantFailure, ValidationError, StepControlError, QuadratureError) as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except RegimeMismatch as e:
        print(f"regime mismatch: {e}", file=sys.stderr)
        return EXIT_REGIME
    if msg:
        print(msg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
