"""Command-line front end.

Usage::

    cslkit <subcommand> [--config FILE] [flags]

Configuration comes from an optional JSON file (see ``cslkit schema config``)
with command-line flags layered on top; flags win. Every run writes one
result file, CSV by default, to ``--output`` or to
``$CSL_OUTPUT_DIR/<subcommand>.<format>`` (current directory if unset).

CSV layout: ``#``-prefixed metadata lines (tool version, seed, resolved
configuration, summary values), then a header row, then data rows. JSON
layout follows ``cslkit schema result``. Exit status is 0 on success, 1 for
invalid input and 2 for runtime failures.

Columns per subcommand:

    simulate        quantity,label,time,value,stderr
                    (quantity is outcome_frequency or probability)
    dmatrix         time,row,col,re,im
    energy          time,matter,noise,noise_integrated,noise_rate,total
    spectrum        energy,density
    predict *       quantity,value
    tails *         quantity,value
    cosmo toy       t,N,Q,H_A,H_w
    cosmo frw       t,R_over_R0

``tails qpv`` takes the stuff distribution as ``--histogram FILE`` (CSV of
value,weight rows), as ``--values``/``--weights``, or as two Gaussian packets
via ``--centers``/``--weights``/``--packet-width``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import pydantic

from . import __version__, constants
from .config import RunConfig, config_schema, format_errors, result_schema
from .core import (CollapseOperatorSet, DensityMatrix, HermitianOperator, ModelParams,
                   StateVector, ValidationError)

log = logging.getLogger("cslkit")

OUTPUT_ENV = "CSL_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# flags: (flag, config path, type, help)

_MODEL_FLAGS = [
    ("--lambda", "params.lam", float, "collapse rate"),
    ("--a", "params.a", float, "smearing length"),
    ("--m0", "params.m0", float, "reference mass"),
    ("--dt", "params.dt", float, "time step"),
]
_RUN_FLAGS = [
    ("--trajectories", "run.trajectories", int, "trajectory count"),
    ("--horizon", "run.horizon", float, "final time"),
    ("--save-count", "run.save_count", int, "number of evenly spaced save times"),
    ("--scheme", "run.scheme", str, "sampler: A (weighted) or B (physical)"),
    ("--seed", "run.seed", int, "master seed"),
    ("--workers", "run.workers", int, "worker threads"),
]

_SUB_FLAGS: dict[str, list] = {
    "simulate": _MODEL_FLAGS + _RUN_FLAGS,
    "dmatrix": _MODEL_FLAGS + _RUN_FLAGS[1:3],
    "energy": _MODEL_FLAGS + _RUN_FLAGS[1:3],
    "spectrum": _MODEL_FLAGS + [
        ("--cutoff", "run.cutoff", float, "half-width of the energy grid"),
        ("--points", "run.points", int, "energy grid points"),
    ],
    "predict energy": [
        ("--lambda", "params.lam", float, "collapse rate (1/s)"),
        ("--a", "params.a", float, "smearing length (cm)"),
        ("--mass", "inputs.mass", float, "particle mass (g)"),
        ("--alpha", "inputs.alpha", float, "coupling ratio"),
        ("--count", "inputs.count", float, "particle count"),
        ("--years", "inputs.years", float, "duration (yr)"),
    ],
    "predict excitation": [
        ("--lambda", "params.lam", float, "collapse rate (1/s)"),
        ("--a", "params.a", float, "smearing length (cm)"),
        ("--matrix-element", "inputs.matrix_element", float, "dipole matrix element (cm)"),
    ],
    "predict com-demo": [
        ("--points", "inputs.grid_points", int, "grid points per coordinate"),
    ],
    "predict fullerene": [
        ("--time-of-flight", "inputs.time_of_flight", float, "flight time (s)"),
        ("--nucleons", "inputs.nucleons", float, "nucleon count"),
        ("--accuracy", "inputs.accuracy", float, "relative contrast accuracy"),
    ],
    "predict sphere": [
        ("--lambda", "params.lam", float, "collapse rate (1/s)"),
        ("--n-a3", "inputs.n_a3", float, "nucleons per a^3"),
        ("--n-total", "inputs.n_total", float, "total nucleons displaced"),
        ("--elapsed", "inputs.elapsed", float, "elapsed time (s)"),
    ],
    "predict disc": [
        ("--lambda", "params.lam", float, "collapse rate (1/s)"),
        ("--a", "params.a", float, "smearing length (cm)"),
        ("--radius", "inputs.radius", float, "disc radius (cm)"),
        ("--thickness", "inputs.thickness", float, "disc thickness (cm)"),
        ("--density", "inputs.density", float, "mass density (g/cm^3)"),
        ("--form-factor", "inputs.form_factor", float, "geometric factor f"),
        ("--amplification", "inputs.amplification", float, "rate amplification (default (m/m0)^2)"),
        ("--time", "inputs.time", float, "elapsed time (s)"),
    ],
    "tails qpv": [
        ("--histogram", "inputs.histogram", str, "CSV file of value,weight rows"),
        ("--error-bar", "inputs.error_bar", float, "observation window width"),
        ("--p-falsify", "inputs.p_falsify", float, "falsification probability"),
        ("--packet-width", "inputs.packet_width", float, "Gaussian packet width"),
    ],
    "tails smd": [
        ("--mean", "inputs.mean", float, "mean smeared mass density"),
        ("--variance", "inputs.variance", float, "its variance"),
        ("--ratio-small", "inputs.ratio_small", float, "accept below this variance/mean^2"),
        ("--ratio-large", "inputs.ratio_large", float, "negligible-density branch above this"),
        ("--density-scale", "inputs.density_scale", float, "reference density m0/a^3"),
        ("--density-small", "inputs.density_small", float, "negligible fraction of the reference"),
    ],
    "cosmo toy": [
        ("--g", "inputs.g", float, "source coupling"),
        ("--m", "inputs.m", float, "particle mass-energy"),
        ("--v1", "inputs.V1", float, "observation volume"),
        ("--lambda0", "inputs.lambda0", float, "base collapse rate"),
        ("--toy-m0", "inputs.toy_m0", float, "reference mass for the rate scaling"),
        ("--t-max", "inputs.t_max", float, "last time"),
        ("--series-points", "inputs.series_points", int, "number of times"),
    ],
    "cosmo frw": [
        ("--omega-m", "inputs.omega_m", float, "matter density"),
        ("--omega-w", "inputs.omega_w", float, "noise-field density"),
        ("--omega-lambda", "inputs.omega_lambda", float, "cosmological constant density"),
        ("--h0", "inputs.h0", float, "Hubble rate today"),
        ("--t-max", "inputs.t_max", float, "last time"),
        ("--series-points", "inputs.series_points", int, "number of times"),
    ],
}

_LIST_FLAGS: dict[str, list] = {
    "predict com-demo": [
        ("--masses", "inputs.masses", "two particle masses"),
        ("--alphas", "inputs.alphas", "two coupling ratios"),
    ],
    "tails qpv": [
        ("--values", "inputs.values", "stuff distribution values"),
        ("--weights", "inputs.weights", "weights of values or of packets"),
        ("--centers", "inputs.centers", "packet centres"),
    ],
}


def _dest(path: str) -> str:
    return "cfg__" + path.replace(".", "__")


def _metavar(flag: str) -> str:
    return flag.lstrip("-").upper().replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--output", dest=_dest("output.path"), metavar="PATH", help="output file")
    common.add_argument("--format", dest=_dest("output.format"), choices=("csv", "json"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cslkit", description="Collapse-model simulations and calculators.")
    parser.add_argument("--version", action="version", version=f"cslkit {__version__}")
    subs = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def add(parent, name, full):
        p = parent.add_parser(name, parents=[common])
        p.set_defaults(subcommand=full)
        for flag, path, typ, help_ in _SUB_FLAGS.get(full, []):
            p.add_argument(flag, dest=_dest(path), type=typ, metavar=_metavar(flag), help=help_)
        for flag, path, help_ in _LIST_FLAGS.get(full, []):
            p.add_argument(flag, dest=_dest(path), type=float, nargs="+", metavar=_metavar(flag),
                           help=help_)
        return p

    for name in ("simulate", "dmatrix", "energy", "spectrum"):
        add(subs, name, name)
    for group, names in (("predict", ("energy", "excitation", "com-demo", "fullerene", "sphere", "disc")),
                         ("tails", ("qpv", "smd")), ("cosmo", ("toy", "frw"))):
        g = subs.add_parser(group).add_subparsers(dest="which", required=True, parser_class=_Parser)
        for name in names:
            add(g, name, f"{group} {name}")
    sch = subs.add_parser("schema", help="print a published JSON schema")
    sch.add_argument("kind", choices=("config", "result"))
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file values, then flags on top."""
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise UsageError(f"{args.config}: top level must be an object")
        given = raw.get("subcommand")
        if given is not None and " ".join(str(given).split()) != args.subcommand:
            raise UsageError(f"config is for {given!r}, command line asks for {args.subcommand!r}")
    raw["subcommand"] = args.subcommand
    for key, value in vars(args).items():
        if not key.startswith("cfg__") or value is None:
            continue
        section, field = key[5:].split("__")
        raw.setdefault(section, {})
        if not isinstance(raw[section], dict):
            raise UsageError(f"{section}: must be an object")
        raw[section][field] = value
    return RunConfig.model_validate(raw)


# --------------------------------------------------------------------------
# helpers shared by the runners

def _model_params(cfg: RunConfig) -> ModelParams:
    p = cfg.params
    return ModelParams(lam=p.lam, a=p.a, m0=p.m0, alpha=tuple(p.alpha), dt=p.dt)


def _system(cfg: RunConfig):
    """Initial state, collapse operators and optional Hamiltonian."""
    from .lattice import (LatticeSpec, build_position_collapse_ops, gaussian_packet,
                          hopping_hamiltonian)
    s = cfg.system
    if s.lattice is not None:
        lat = s.lattice
        spec = LatticeSpec(lat.dimension, lat.extent, lat.spacing, tuple(lat.masses))
        ops = build_position_collapse_ops(spec, _model_params(cfg))
        ham = hopping_hamiltonian(spec, hbar=lat.hbar)
        psi = gaussian_packet(spec, lat.center, lat.width, lat.momentum)
        return psi, ops, ham
    if s.eigenvalues is None:
        raise ValidationError("system: give eigenvalues and amplitudes, or a lattice")
    amps = np.array([complex(*a) if isinstance(a, (tuple, list)) else complex(a)
                     for a in s.amplitudes])
    labels = tuple(range(len(amps)))
    ops = CollapseOperatorSet.from_diagonals(np.array(s.eigenvalues), s.measure, labels)
    ham = None
    if s.hamiltonian is not None:
        h = np.array(s.hamiltonian, dtype=complex)
        if s.hamiltonian_imag is not None:
            h = h + 1j * np.array(s.hamiltonian_imag)
        ham = HermitianOperator(h)
    return StateVector(amps, labels), ops, ham


def _grid(cfg: RunConfig) -> tuple[int, np.ndarray]:
    """Step count to the horizon and the save steps."""
    dt = cfg.params.dt
    if cfg.run.save_times is not None:
        steps = np.rint(np.asarray(cfg.run.save_times) / dt).astype(int)
        return int(steps[-1]), steps
    if cfg.run.horizon is None:
        raise ValidationError("run.horizon: required when run.save_times is not given")
    total = int(round(cfg.run.horizon / dt))
    if total < 1:
        raise ValidationError("run.horizon: shorter than one time step")
    steps = np.unique(np.rint(np.linspace(0, total, cfg.run.save_count + 1)[1:]).astype(int))
    return total, steps


def _need(value, name):
    if value is None:
        raise ValidationError(f"{name}: required for this subcommand")
    return value


# --------------------------------------------------------------------------
# runners: each returns (summary, columns, rows)

def run_simulate(cfg: RunConfig):
    from .dynamics import run_ensemble
    psi, ops, ham = _system(cfg)
    params = _model_params(cfg)
    _, steps = _grid(cfg)
    times = cfg.run.save_times if cfg.run.save_times is not None else list(steps * params.dt)
    st = run_ensemble(psi, ops, params, n_trajectories=cfg.run.trajectories, save_times=times,
                      seed=cfg.run.seed, hamiltonian=ham, scheme=cfg.run.scheme,
                      outcome_tol=cfg.run.outcome_tol, workers=cfg.run.workers)
    t_end = float(st.save_times[-1])
    rows = []
    for lab, f in st.outcome_frequencies.items():
        rows.append(["outcome_frequency", str(lab), t_end, f, st.outcome_stderr[lab]])
    for s, t in enumerate(st.save_times):
        for n, lab in enumerate(ops.basis_labels):
            rows.append(["probability", str(lab), float(t), float(st.probability_mean[s, n]),
                         float(st.probability_stderr[s, n])])
    summary = {
        "scheme": st.scheme, "trajectories": st.trajectory_count, "aborted": st.aborted_count,
        "mean_weight": st.mean_weight, "mean_weight_stderr": st.mean_weight_stderr,
        "effective_sample_size": st.effective_sample_size,
    }
    return summary, ["quantity", "label", "time", "value", "stderr"], rows


def run_dmatrix(cfg: RunConfig):
    from .master import analytic_density, evolve_density
    psi, ops, ham = _system(cfg)
    total, steps = _grid(cfg)
    every = max(1, int(steps[0]))
    path = evolve_density(DensityMatrix.from_state(psi), ham, ops, cfg.params.lam,
                          cfg.params.dt, total, save_every=every)
    rows = []
    summary: dict[str, Any] = {"max_trace_drift": path.max_trace_drift}
    worst = 0.0
    for t, rho in zip(path.times, path.matrices):
        if ham is None and cfg.system.eigenvalues is not None:
            exact = analytic_density(psi.normalized().amplitudes, ops.eigenvalue_table * np.sqrt(
                ops.measure[:, None]), cfg.params.lam, float(t))
            worst = max(worst, float(np.max(np.abs(exact.matrix - rho))))
        for i in range(rho.shape[0]):
            for j in range(rho.shape[1]):
                rows.append([float(t), i, j, float(rho[i, j].real), float(rho[i, j].imag)])
    if ham is None and cfg.system.eigenvalues is not None:
        summary["max_error_vs_closed_form"] = worst
    return summary, ["time", "row", "col", "re", "im"], rows


def run_energy(cfg: RunConfig):
    from .master import evolve_density, mean_energies
    psi, ops, ham = _system(cfg)
    if ham is None:
        raise ValidationError("system.hamiltonian: required for energy bookkeeping")
    total, steps = _grid(cfg)
    every = max(1, int(steps[0]))
    path = evolve_density(DensityMatrix.from_state(psi), ham, ops, cfg.params.lam,
                          cfg.params.dt, total, save_every=every)
    led = mean_energies(path, ham, ops, cfg.params.lam)
    rows = [[float(t), float(a), float(b), float(c), float(r), float(tot)]
            for t, a, b, c, r, tot in zip(led.times, led.matter_energy, led.noise_energy,
                                          led.noise_energy_integrated, led.noise_rate,
                                          led.total_integrated)]
    summary = {"conservation_error": led.conservation_error()}
    return summary, ["time", "matter", "noise", "noise_integrated", "noise_rate", "total"], rows


def run_spectrum(cfg: RunConfig):
    from .master import energy_distribution, energy_grid
    psi, ops, ham = _system(cfg)
    if ham is None:
        raise ValidationError("system.hamiltonian: required for the energy distribution")
    cutoff = cfg.run.cutoff
    if cutoff is None:
        ev = np.linalg.eigvalsh(ham.matrix)
        gamma = 0.5 * cfg.params.lam * float(np.max(ops.rates(1.0) @ ops.eigenvalue_table ** 2))
        cutoff = 50.0 * max(ev[-1] - ev[0], gamma, 1e-300)
    grid = energy_grid(ham, cutoff, cfg.run.points)
    spec = energy_distribution(psi, ham, ops, cfg.params.lam, grid)
    mom = spec.moments()
    summary = dict(mom)
    summary["moments"] = "grid integrals over [center - cutoff, center + cutoff]; normalization adds E^-2 tails"
    summary["expected_energy"] = float(np.vdot(psi.normalized().amplitudes,
                                               ham.matrix @ psi.normalized().amplitudes).real)
    summary["skipped_points"] = len(spec.skipped)
    rows = [[float(e), float(p)] for e, p in zip(spec.energies, spec.density)]
    return summary, ["energy", "density"], rows


def _quantities(d: dict):
    return d, ["quantity", "value"], [[k, v] for k, v in d.items()]


def run_predict(cfg: RunConfig):
    from . import predictions as pr
    which = cfg.subcommand.split()[1]
    inp = cfg.inputs
    params = _model_params(cfg)
    if which == "energy":
        mass = inp.mass if inp.mass is not None else constants.PROTON_MASS
        census = pr.SpeciesCensus(((inp.alpha, inp.count, mass),))
        rate, energy = pr.energy_gain_rate(census, params, inp.years * constants.YEAR)
        out = {"rate_erg_per_s": rate, "energy_erg": energy,
               "fraction_of_rest_energy": energy / (inp.count * mass * constants.C_LIGHT ** 2)
               if inp.count else 0.0}
    elif which == "excitation":
        out = {"rate_per_s": pr.excitation_rate(params, _need(inp.matrix_element,
                                                              "inputs.matrix_element"))}
    elif which == "com-demo":
        generic = pr.com_vanishing_demo(inp.masses, inp.alphas, points=inp.grid_points)
        prop = pr.com_vanishing_demo(inp.masses, [m / inp.masses[0] for m in inp.masses],
                                     points=inp.grid_points)
        out = {"matrix_element": generic, "matrix_element_mass_proportional": prop,
               "ratio": prop / generic if generic else math.nan}
    elif which == "fullerene":
        b = pr.interference_decay_bound(inp.time_of_flight, inp.nucleons, inp.accuracy)
        out = {"decay_exponent_per_lambda": b.decay_exponent_per_lambda,
               "lambda_max": b.lambda_max, "inverse_lambda_min": b.inverse_lambda_min}
    elif which == "sphere":
        rate, exponent = pr.sphere_collapse_rate(params.lam, inp.n_a3, inp.n_total, inp.elapsed)
        out = {"rate_per_s": rate, "exponent": exponent}
    else:
        disc = pr.DiscSpec(inp.radius, inp.thickness, inp.density, inp.form_factor, inp.amplification)
        d = pr.disc_diffusion(disc, params, inp.time)
        out = {"mass_g": d.mass, "amplification": d.amplification,
               "delta_theta_csl": d.delta_theta_csl, "delta_theta_qm": d.delta_theta_qm,
               "ratio": d.ratio, "time_to_2pi": d.time_to_2pi}
    return _quantities(out)


def read_histogram(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV of value,weight; ``#`` lines and a text header are skipped."""
    values, weights = [], []
    try:
        with open(path, newline="") as fh:
            for n, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                if len(row) != 2:
                    raise ValidationError(f"{path}:{n}: expected value,weight")
                try:
                    v, w = float(row[0]), float(row[1])
                except ValueError:
                    if not values and not weights:   # header
                        continue
                    raise ValidationError(f"{path}:{n}: not a number") from None
                values.append(v)
                weights.append(w)
    except OSError as exc:
        raise ValidationError(f"inputs.histogram: {exc}") from None
    return np.array(values), np.array(weights)


def run_tails(cfg: RunConfig):
    from . import tails
    inp = cfg.inputs
    if cfg.subcommand == "tails smd":
        value = tails.smd_possessed(_need(inp.mean, "inputs.mean"),
                                    _need(inp.variance, "inputs.variance"),
                                    inp.ratio_small, inp.ratio_large, inp.density_scale,
                                    inp.density_small)
        return _quantities({"possessed": value is not None, "value": value})
    if inp.centers is not None:
        weights = _need(inp.weights, "inputs.weights")
        if len(weights) != len(inp.centers):
            raise ValidationError("inputs.weights: one weight per packet centre")
        dist = tails.two_packet_distribution(inp.centers, weights,
                                             _need(inp.packet_width, "inputs.packet_width"))
    elif inp.histogram is not None:
        dist = tails.StuffDistribution(*read_histogram(inp.histogram))
    else:
        dist = tails.StuffDistribution(_need(inp.values, "inputs.values"),
                                       _need(inp.weights, "inputs.weights"))
    obs = tails.ObservationSpec(_need(inp.error_bar, "inputs.error_bar"), inp.p_falsify)
    r = tails.qpv(dist, obs, inp.renormalize)
    return _quantities({"possessed": r.possessed, "value": r.value, "window_center": r.window_center,
                        "inside": r.inside, "outside": r.outside})


def run_cosmo(cfg: RunConfig):
    from . import cosmology as co
    inp = cfg.inputs
    t = np.linspace(0.0, inp.t_max, inp.series_points)
    if cfg.subcommand == "cosmo toy":
        p = co.ToyCreationParams(inp.g, inp.m, inp.V1, inp.lambda0, inp.toy_m0)
        r = co.toy_creation_means(p, t)
        rows = [[float(x) for x in row] for row in zip(t, r.N, r.Q, r.H_A, r.H_w)]
        summary = {"lambda_effective": p.lam, "theta": p.theta, "growth_rate": p.growth_rate}
        return summary, ["t", "N", "Q", "H_A", "H_w"], rows
    s = co.FRWState(inp.omega_m, inp.omega_w, inp.omega_lambda, inp.h0)
    omega_k, q0 = co.frw_budget(s)
    x = co.scale_factor_evolve(s, t)
    return {"omega_k": omega_k, "q0": q0}, ["t", "R_over_R0"], [[float(a), float(b)]
                                                              for a, b in zip(t, x)]


RUNNERS: dict[str, Callable] = {
    "simulate": run_simulate, "dmatrix": run_dmatrix, "energy": run_energy,
    "spectrum": run_spectrum, "predict": run_predict, "tails": run_tails, "cosmo": run_cosmo,
}


# --------------------------------------------------------------------------
# output

def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(cfg: RunConfig, summary: dict, columns: list, rows: list) -> str:
    meta = {"tool": "cslkit", "version": __version__, "subcommand": cfg.subcommand,
            "seed": cfg.run.seed, "config": cfg.model_dump(mode="json")}
    summary = {k: _clean(v) for k, v in summary.items()}
    rows = [[_clean(v) for v in row] for row in rows]
    if cfg.output.format == "json":
        doc = {"metadata": meta, "summary": summary, "columns": columns, "rows": rows}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# tool: cslkit {__version__}\n")
    buf.write(f"# subcommand: {cfg.subcommand}\n")
    buf.write(f"# seed: {cfg.run.seed}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    for k, v in summary.items():
        buf.write(f"# summary.{k}: {json.dumps(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def output_path(cfg: RunConfig) -> Path:
    if cfg.output.path:
        return Path(cfg.output.path)
    base = Path(os.environ.get(OUTPUT_ENV) or ".")
    return base / f"{cfg.subcommand.replace(' ', '-')}.{cfg.output.format}"


def execute(argv: Optional[list] = None) -> int:
    """Parse ``argv``, run, write the result file; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.group == "schema":
            schema = config_schema() if args.kind == "config" else result_schema()
            print(json.dumps(schema, indent=1))
            return 0
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except pydantic.ValidationError as exc:
        print(f"invalid configuration:\n{format_errors(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary, columns, rows = RUNNERS[cfg.subcommand.split()[0]](cfg)
        text = render(cfg, summary, columns, rows)
        path = output_path(cfg)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: report, do not trace back
        log.debug("run failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for k, v in summary.items():
        print(f"{k} = {_clean(v)}")
    print(f"wrote {path}")
    return 0


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
