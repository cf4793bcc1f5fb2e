"""Command-line entry point, strict JSON configuration, and deterministic
output serialization.

Every run emits CSV tables plus a JSON manifest carrying the resolved
configuration, tool version, seed, and integrator settings -- enough to
replay the run exactly.  CSV bodies are byte-identical across re-runs with
the same config and seed.

Exit codes: 0 success, 2 validation/usage error, 3 non-convergence,
4 divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import (PhysicalParams, derive_rates, fractional_offsets,
                   fractional_positions, positions_from_fractions, TWO_PI)
from .errors import (ChiralSimError, DivergenceError, ParameterError,
                     UsageError)
from .steady import (Classification, Tolerances, anneal_detuning,
                     detect_phase_slips, find_steady, random_initial_state)
from . import analytic, experiments, optics

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3
EXIT_DIVERGED = 4

PARAM_KEYS = {
    "n_atoms": int,
    "gamma_1d_frac": float,
    "chi_r": float,
    "delta": float,
    "omega": float,
    "gamma_p": float,
    "omega_r": float,
    "probe_gamma_frac": float,
}
INTEGRATOR_KEYS = {"dt": float, "max_dt": float, "budget": float,
                   "window": float, "anneal_step": float}
TOLERANCE_KEYS = {"eps_p": float, "eps_sigma": float, "eps_spread": float}
RUN_KEYS = {"seed": int, "outdir": str, "spread": float}

_SECTIONS = {
    "params": PARAM_KEYS,
    "integrator": INTEGRATOR_KEYS,
    "tolerances": TOLERANCE_KEYS,
    "run": RUN_KEYS,
}


def parse_config(path=None, overrides=None):
    """Resolve a run configuration from an optional JSON file plus flag
    overrides (flags win).  Unknown keys anywhere are rejected."""
    merged = {section: {} for section in _SECTIONS}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path}: invalid JSON ({exc})")
        if not isinstance(raw, dict):
            raise UsageError(f"config {path}: top level must be an object")
        for section, content in raw.items():
            if section not in _SECTIONS:
                raise UsageError(f"config {path}: unknown section {section!r}")
            if not isinstance(content, dict):
                raise UsageError(f"config {path}: section {section!r} must be an object")
            for key, value in content.items():
                if key not in _SECTIONS[section]:
                    raise UsageError(
                        f"config {path}: unknown key {section}.{key}")
                caster = _SECTIONS[section][key]
                try:
                    merged[section][key] = caster(value)
                except (TypeError, ValueError):
                    raise UsageError(
                        f"config {path}: key {section}.{key} expects "
                        f"{caster.__name__}, got {value!r}")
    if overrides:
        for (section, key), value in overrides.items():
            if value is not None:
                merged[section][key] = value

    params = PhysicalParams(**merged["params"])
    tolerances = Tolerances(**merged["tolerances"])
    integrator = {"dt": None, "max_dt": None, "budget": 1.0e4,
                  "window": 200.0, "anneal_step": 0.5}
    integrator.update(merged["integrator"])
    run = {"seed": 0, "outdir": "runs", "spread": 1.0}
    run.update(merged["run"])
    return {"params": params, "tolerances": tolerances,
            "integrator": integrator, "run": run}


def _config_snapshot(config, extra=None):
    snap = {
        "params": dataclasses.asdict(config["params"]),
        "tolerances": dataclasses.asdict(config["tolerances"]),
        "integrator": dict(config["integrator"]),
        "run": dict(config["run"]),
    }
    if extra:
        snap["experiment"] = dict(extra)
    return snap


def config_hash(snapshot):
    blob = json.dumps(snapshot, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(value):
    """Shortest round-trip decimal text for floats; complex handled upstream."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows):
    """RFC-4180-style CSV with '.' decimals and full double precision.

    Values never contain separators or quotes here, so quoting never
    triggers; newlines are CRLF-free ('\\n') for stable byte comparisons.
    """
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


class RunWriter:
    """Collects tables and summary data, then writes files and a manifest."""

    def __init__(self, subcommand, config, extra=None):
        self.subcommand = subcommand
        self.config = config
        self.snapshot = _config_snapshot(config, extra)
        self.hash = config_hash(self.snapshot)
        self.outdir = Path(config["run"]["outdir"])
        self.tables = {}
        self.summary = {}
        self.t_start = time.perf_counter()

    def add_table(self, name, header, rows):
        self.tables[name] = (header, rows)

    def stem(self, name):
        return f"{self.subcommand}-{name}-{self.hash[:12]}"

    def write(self):
        self.outdir.mkdir(parents=True, exist_ok=True)
        files = {}
        for name, (header, rows) in self.tables.items():
            path = self.outdir / (self.stem(name) + ".csv")
            write_csv(path, header, rows)
            files[name] = str(path)
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "subcommand": self.subcommand,
            "config": self.snapshot,
            "config_hash": self.hash,
            "summary": self.summary,
            "files": files,
            "wall_time_s": time.perf_counter() - self.t_start,
        }
        mpath = self.outdir / f"{self.subcommand}-manifest-{self.hash[:12]}.json"
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return mpath, files


def _steady_rows(result):
    order = np.argsort(result.state.z)
    f = result.fractional
    rows = []
    for rank, atom in enumerate(order):
        sig = result.state.sigma[atom]
        rows.append([rank, f[rank], result.state.p[atom], sig.real, sig.imag])
    return ["j", "f", "p_hbark", "sigma_re", "sigma_im"], rows


def _spectrum_rows(spec):
    header = ["delta", "t_r_re", "t_r_im", "r_l_re", "r_l_im",
              "r_r_re", "r_r_im", "t_l_re", "t_l_im", "abs_r_l", "abs_r_r"]
    rows = []
    for i in range(spec.delta.size):
        rows.append([
            spec.delta[i],
            spec.t_r[i].real, spec.t_r[i].imag,
            spec.r_l[i].real, spec.r_l[i].imag,
            spec.r_r[i].real, spec.r_r[i].imag,
            spec.t_l[i].real, spec.t_l[i].imag,
            abs(spec.r_l[i]), abs(spec.r_r[i]),
        ])
    return header, rows


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_simulate(config, args):
    params = config["params"]
    writer = RunWriter("simulate", config)
    state = random_initial_state(params, seed=config["run"]["seed"],
                                 spread=config["run"]["spread"])
    result = find_steady(state, params, budget=config["integrator"]["budget"],
                         tolerances=config["tolerances"],
                         window=config["integrator"]["window"],
                         dt=config["integrator"]["dt"],
                         max_dt=config["integrator"]["max_dt"])
    writer.add_table("steady", *_steady_rows(result))
    writer.summary = {
        "classification": result.classification.value,
        "drift_momentum": result.drift_momentum,
        "residual_p": result.residual_p,
        "residual_sigma": result.residual_sigma,
        "momentum_spread": result.momentum_spread,
        "sim_time": result.sim_time,
        "saturated": result.saturated,
        "dt": config["integrator"]["dt"],
        "seed": config["run"]["seed"],
    }
    writer.write()
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _cmd_anneal(config, args):
    params = config["params"]
    writer = RunWriter("anneal", config)
    res = anneal_detuning(params, seed=config["run"]["seed"],
                          step=config["integrator"]["anneal_step"],
                          budget_per_step=config["integrator"]["budget"],
                          tolerances=config["tolerances"],
                          window=config["integrator"]["window"],
                          dt=config["integrator"]["dt"],
                          max_dt=config["integrator"]["max_dt"],
                          spread=config["run"]["spread"])
    n = params.n_atoms
    header = ["delta", "classification", "residual_p", "residual_sigma",
              "p_spread"] + [f"f{j}" for j in range(n)]
    rows = []
    for step in res.steps:
        r = step.result
        rows.append([step.delta, r.classification.value, r.residual_p,
                     r.residual_sigma, r.momentum_spread] + list(r.fractional))
    writer.add_table("steps", header, rows)
    final = res.final
    if final is not None:
        writer.add_table("steady", *_steady_rows(final))
        slips = detect_phase_slips(np.sort(final.state.z))
        writer.summary["slips"] = slips.n_slips
        writer.summary["group_sizes"] = slips.group_sizes
    writer.summary.update({
        "converged": res.converged,
        "failed_delta": res.failed_delta,
        "schedule": res.schedule,
        "seed": res.seed,
    })
    writer.write()
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _cmd_analytic_ws(config, args):
    writer = RunWriter("analytic-ws", config,
                       extra={"n": args.n, "symmetric": bool(args.symmetric)})
    if args.symmetric:
        f = analytic.ws_symmetric_positions(args.n)
        rows = [[j, f[j], 0.0] for j in range(args.n)]
    else:
        rates = derive_rates(config["params"])
        ws = analytic.ws_chiral_positions(args.n, chi=rates.chi
                                          if rates.chi > 0 else 0.25)
        rows = [[j, ws.f[j], ws.energies[j]] for j in range(args.n)]
        writer.summary["total_energy"] = ws.total_energy
    writer.add_table("positions", ["j", "f", "energy"], rows)
    writer.write()
    return EXIT_OK


def _cmd_analytic_chiral(config, args):
    params = config["params"]
    writer = RunWriter("analytic-chiral", config, extra={"n": args.n})
    sol = analytic.chiral_steady_any_detuning(args.n or params.n_atoms, params)
    rows = [[j, sol.f[j], sol.sigma[j].real, sol.sigma[j].imag,
             sol.residuals[j]] for j in range(sol.f.size)]
    writer.add_table("positions", ["j", "f", "sigma_re", "sigma_im",
                                   "residual"], rows)
    writer.summary = {"drift_momentum": sol.drift_momentum,
                      "delta": sol.delta,
                      "max_residual": float(np.max(sol.residuals))}
    writer.write()
    return EXIT_OK


def _resolve_positions(config, args):
    """Positions for optics: from a CSV of fractions, or the analytic
    weak-scattering configuration."""
    if args.positions_csv:
        rows = Path(args.positions_csv).read_text().strip().splitlines()
        header = rows[0].split(",")
        if "f" not in header:
            raise UsageError(f"{args.positions_csv}: need a column named 'f'")
        col = header.index("f")
        f = np.array([float(r.split(",")[col]) for r in rows[1:]])
        return np.sort(positions_from_fractions(f))
    n = args.from_ws or config["params"].n_atoms
    if config["params"].chi_r == 1.0:
        return np.sort(positions_from_fractions(
            analytic.ws_chiral_positions(n).f))
    return np.sort(positions_from_fractions(analytic.ws_symmetric_positions(n)))


def _cmd_optics(config, args):
    params = config["params"]
    rates = derive_rates(params)
    writer = RunWriter("optics", config, extra={
        "delta_min": args.delta_min, "delta_max": args.delta_max,
        "points": args.points, "positions_csv": args.positions_csv or "",
        "from_ws": args.from_ws or 0})
    z = _resolve_positions(config, args)
    grid = np.linspace(args.delta_min, args.delta_max, args.points)
    gamma_probe, gamma_loss = optics.probe_settings(params, rates)
    spec = optics.spectrum(z, grid, gamma_probe, gamma_loss)
    writer.add_table("spectrum", *_spectrum_rows(spec))
    writer.summary = {"fwhm_r_l": spec.fwhm_r_l,
                      "gamma_probe": gamma_probe, "gamma_loss": gamma_loss,
                      "n_atoms": int(z.size)}
    writer.write()
    return EXIT_OK


def _steady_for_experiment(config):
    """Converged state for experiment subcommands: anneal when the target is
    within the continuation range, else a direct far-detuned search."""
    params = config["params"]
    if abs(params.delta) < 20.0:
        res = anneal_detuning(params, seed=config["run"]["seed"],
                              step=config["integrator"]["anneal_step"],
                              budget_per_step=config["integrator"]["budget"],
                              tolerances=config["tolerances"],
                              window=config["integrator"]["window"],
                              dt=config["integrator"]["dt"],
                              max_dt=config["integrator"]["max_dt"],
                              spread=config["run"]["spread"])
        if not res.converged or res.final is None:
            raise UsageError(
                f"annealing failed to converge at delta = {res.failed_delta:g}")
        return res.final
    state = random_initial_state(params, seed=config["run"]["seed"],
                                 spread=config["run"]["spread"])
    result = find_steady(state, params, budget=config["integrator"]["budget"],
                         tolerances=config["tolerances"],
                         window=config["integrator"]["window"],
                         dt=config["integrator"]["dt"],
                         max_dt=config["integrator"]["max_dt"])
    if result.classification is not Classification.STEADY:
        raise UsageError(f"steady-state search ended {result.classification.value}")
    return result


def _cmd_modes(config, args):
    writer = RunWriter("modes", config, extra={
        "kick": args.kick, "t_sample": args.t_sample})
    steady = _steady_for_experiment(config)
    spectrum = experiments.mode_spectroscopy(steady, kick=args.kick,
                                             t_sample=args.t_sample)
    rows = []
    for atom, peaks in enumerate(spectrum.peaks):
        for freq in peaks:
            rows.append([atom, freq])
    writer.add_table("peaks", ["atom", "omega"], rows)
    predicted = analytic.mode_frequencies(config["params"].n_atoms,
                                          config["params"]) \
        if config["params"].chi_r == 1.0 else np.array([])
    writer.summary = {"bin_width": spectrum.bin_width,
                      "predicted": [float(w) for w in predicted]}
    writer.write()
    return EXIT_OK


def _cmd_potential(config, args):
    writer = RunWriter("potential", config, extra={
        "atom": args.atom if args.atom is not None else -1,
        "grid_points": args.grid_points})
    steady = _steady_for_experiment(config)
    if args.atom is not None:
        atom = args.atom
    else:
        report = detect_phase_slips(np.sort(steady.state.z))
        atom = experiments.slip_adjacent_atom(steady.state, report)
    curve = experiments.effective_potential(steady, atom,
                                            grid_points=args.grid_points)
    rows = [[curve.positions[k], curve.potential[k]]
            for k in range(curve.positions.size)]
    writer.add_table("potential", ["z", "potential"], rows)
    writer.summary = {"atom": int(atom),
                      "n_minima": len(curve.local_minima())}
    writer.write()
    return EXIT_OK


def _cmd_quench(config, args):
    writer = RunWriter("quench", config, extra={
        "chi_r_new": args.chi_r_new, "duration": args.duration})
    steady = _steady_for_experiment(config)
    q = experiments.chirality_quench(steady, args.chi_r_new,
                                     duration=args.duration)
    rows = [[q.times[k], int(q.slip_counts[k])] for k in range(q.times.size)]
    writer.add_table("slips", ["t", "n_slips"], rows)
    writer.add_table("crossings", ["t", "atom"],
                     [[t, a] for t, a in q.crossings])
    writer.summary = {"collapsed": q.collapsed, "collapse_time": q.collapse_time}
    writer.write()
    return EXIT_OK


def _cmd_transplant(config, args):
    writer = RunWriter("transplant", config, extra={
        "atom": args.atom if args.atom is not None else -1})
    steady = _steady_for_experiment(config)
    outcome = experiments.transplant_across_slip(
        steady, atom_index=args.atom, budget=config["integrator"]["budget"],
        tolerances=config["tolerances"], window=config["integrator"]["window"],
        dt=config["integrator"]["dt"], max_dt=config["integrator"]["max_dt"])
    writer.add_table("steady", *_steady_rows(outcome.result))
    writer.summary = {
        "stable_slip": outcome.stable_slip,
        "groups_before": outcome.groups_before,
        "groups_after": outcome.groups_after,
        "classification": outcome.result.classification.value,
    }
    writer.write()
    return EXIT_OK if outcome.result.converged else EXIT_NOT_CONVERGED


def _cmd_equilibration(config, args):
    writer = RunWriter("equilibration", config, extra={"trials": args.trials})
    stats = experiments.equilibration_times(
        config["params"], trials=args.trials, seed=config["run"]["seed"],
        budget=config["integrator"]["budget"],
        tolerances=config["tolerances"],
        window=config["integrator"]["window"], dt=config["integrator"]["dt"],
        max_dt=config["integrator"]["max_dt"],
        spread=config["run"]["spread"])
    header = ["atom", "median"] + [f"trial{k}" for k in range(stats.times.shape[0])]
    rows = []
    for j in range(stats.times.shape[1]):
        rows.append([j, stats.medians[j]] + list(stats.times[:, j]))
    writer.add_table("times", header, rows)
    writer.summary = {"n_excluded": stats.n_excluded,
                      "trials": args.trials}
    writer.write()
    return EXIT_OK


def _cmd_sweep(config, args):
    values = [float(v) for v in args.values]
    writer = RunWriter("sweep", config, extra={
        "axis": args.axis, "values": values})
    points = experiments.sweep(
        config["params"], args.axis, values,
        seeds=(config["run"]["seed"],),
        budget=config["integrator"]["budget"],
        step=config["integrator"]["anneal_step"],
        tolerances=config["tolerances"],
        window=config["integrator"]["window"], dt=config["integrator"]["dt"],
        max_dt=config["integrator"]["max_dt"],
        spread=config["run"]["spread"])
    n = config["params"].n_atoms
    header = [args.axis, "seed", "error"] + [f"f{j}" for j in range(n)]
    rows = []
    failures = 0
    for pt in points:
        frac = list(pt.fractional) if pt.fractional is not None else [""] * (
            n if args.axis != "n_atoms" else int(pt.value))
        rows.append([pt.value, pt.seed, pt.error or ""] + frac)
        failures += pt.error is not None
    writer.add_table("points", header, rows)
    writer.summary = {"n_points": len(points), "n_failures": failures}
    writer.write()
    return EXIT_OK if failures == 0 else EXIT_NOT_CONVERGED


def _cmd_thermo(config, args):
    params = config["params"]
    if args.gamma_p_ratio is not None:
        params = params.replace(gamma_p=args.gamma_p_ratio * params.omega_r)
    writer = RunWriter("thermo", config, extra={
        "gamma_p_ratio": args.gamma_p_ratio if args.gamma_p_ratio is not None
        else -1.0})
    temp = analytic.temperature(params)
    writer.summary = {
        "gamma_p": params.gamma_p,
        "gamma_p_over_omega_r": params.gamma_p / params.omega_r,
        "s0": params.s0,
        "kbt_hbar_gamma": temp.kbt_hbar_gamma,
        "T_nK": temp.t_nk_normalized,       # T * (gamma_p / Gamma_tot), the
                                            # damping-independent headline value
        "T_actual_nK": temp.t_nk,
        "stability_ratio": analytic.stability_ratio(params),
    }
    writer.write()
    print(json.dumps(writer.summary, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="chiralsim",
        description="Self-organization of atoms along a 1D chiral reservoir: "
                    "simulation, analytic solvers, optics, and experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--n-atoms", type=int, dest="n_atoms")
        p.add_argument("--gamma-1d-frac", type=float, dest="gamma_1d_frac")
        p.add_argument("--chi-r", type=float, dest="chi_r")
        p.add_argument("--delta", type=float)
        p.add_argument("--omega", type=float)
        p.add_argument("--gamma-p", type=float, dest="gamma_p")
        p.add_argument("--omega-r", type=float, dest="omega_r")
        p.add_argument("--probe-gamma-frac", type=float, dest="probe_gamma_frac")
        p.add_argument("--dt", type=float)
        p.add_argument("--max-dt", type=float, dest="max_dt")
        p.add_argument("--budget", type=float)
        p.add_argument("--window", type=float)
        p.add_argument("--anneal-step", type=float, dest="anneal_step")
        p.add_argument("--eps-p", type=float, dest="eps_p")
        p.add_argument("--eps-sigma", type=float, dest="eps_sigma")
        p.add_argument("--eps-spread", type=float, dest="eps_spread")
        p.add_argument("--seed", type=int)
        p.add_argument("--outdir")
        p.add_argument("--spread", type=float)

    p = sub.add_parser("simulate", help="direct steady-state search from a seeded random start")
    common(p)
    p = sub.add_parser("anneal", help="detuning-continuation steady state")
    common(p)
    p = sub.add_parser("analytic-ws", help="weak-scattering lattice table")
    common(p)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--symmetric", action="store_true")
    p = sub.add_parser("analytic-chiral", help="iterative pure-chiral solution at any detuning")
    common(p)
    p.add_argument("--n", type=int, default=0)
    p = sub.add_parser("optics", help="transfer-matrix reflection/transmission spectrum")
    common(p)
    p.add_argument("--delta-min", type=float, default=-20.0, dest="delta_min")
    p.add_argument("--delta-max", type=float, default=20.0, dest="delta_max")
    p.add_argument("--points", type=int, default=801)
    p.add_argument("--positions-csv", dest="positions_csv")
    p.add_argument("--from-ws", type=int, dest="from_ws")
    p = sub.add_parser("modes", help="kick-and-FFT vibrational spectroscopy")
    common(p)
    p.add_argument("--kick", type=float, default=1.0e-3)
    p.add_argument("--t-sample", type=float, default=3.0e4, dest="t_sample")
    p = sub.add_parser("potential", help="effective-potential scan for one atom")
    common(p)
    p.add_argument("--atom", type=int)
    p.add_argument("--grid-points", type=int, default=256, dest="grid_points")
    p = sub.add_parser("quench", help="chirality quench of a converged state")
    common(p)
    p.add_argument("--chi-r-new", type=float, required=True, dest="chi_r_new")
    p.add_argument("--duration", type=float, default=2.0e4)
    p = sub.add_parser("transplant", help="move an atom across the slip and re-converge")
    common(p)
    p.add_argument("--atom", type=int)
    p = sub.add_parser("equilibration", help="per-atom convergence-time statistics")
    common(p)
    p.add_argument("--trials", type=int, default=20)
    p = sub.add_parser("sweep", help="steady-state protocol across a parameter grid")
    common(p)
    p.add_argument("--axis", required=True, choices=experiments.SWEEP_AXES)
    p.add_argument("--values", nargs="+", required=True)
    p = sub.add_parser("thermo", help="Einstein-relation temperature and stability ratio")
    common(p)
    p.add_argument("--gamma-p-ratio", type=float, dest="gamma_p_ratio",
                   help="damping in units of the recoil frequency")
    return parser


_DISPATCH = {
    "simulate": _cmd_simulate,
    "anneal": _cmd_anneal,
    "analytic-ws": _cmd_analytic_ws,
    "analytic-chiral": _cmd_analytic_chiral,
    "optics": _cmd_optics,
    "modes": _cmd_modes,
    "potential": _cmd_potential,
    "quench": _cmd_quench,
    "transplant": _cmd_transplant,
    "equilibration": _cmd_equilibration,
    "sweep": _cmd_sweep,
    "thermo": _cmd_thermo,
}


def _overrides_from_args(args):
    overrides = {}
    for key in PARAM_KEYS:
        overrides[("params", key)] = getattr(args, key, None)
    for key in INTEGRATOR_KEYS:
        overrides[("integrator", key)] = getattr(args, key, None)
    for key in TOLERANCE_KEYS:
        overrides[("tolerances", key)] = getattr(args, key, None)
    for key in RUN_KEYS:
        overrides[("run", key)] = getattr(args, key, None)
    return overrides


def _emit_error(config, code, exc):
    record = {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    sys.stderr.write(json.dumps(record) + "\n")
    try:
        outdir = Path(config["run"]["outdir"]) if config else None
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / "error.json").write_text(json.dumps(record, indent=2) + "\n")
    except OSError:
        pass
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else 0
    config = None
    try:
        config = parse_config(args.config, _overrides_from_args(args))
        return _DISPATCH[args.subcommand](config, args)
    except DivergenceError as exc:
        return _emit_error(config, EXIT_DIVERGED, exc)
    except (ParameterError, UsageError) as exc:
        return _emit_error(config, EXIT_VALIDATION, exc)
    except ChiralSimError as exc:
        return _emit_error(config, EXIT_NOT_CONVERGED, exc)


if __name__ == "__main__":
    sys.exit(main())
