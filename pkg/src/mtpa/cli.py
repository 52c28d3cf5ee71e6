"""Command-line interface binding all modules into reproducible runs.

Every subcommand writes its outputs plus a manifest (resolved config, master
seed, tool version, per-file digests) into --out. Exit codes: 0 success,
1 tolerance failure from `compare`, 2 usage or configuration errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__, matrices
from .config import _matrix_from_key, parse_config
from .errors import MtpaError, ValidationError
from .graph import new_graph, run
from .harness import (ExperimentConfig, convergence_series,
                      perturbed_vs_unperturbed_study, replicate_stream,
                      run_experiment)
from .output import (write_csv, write_distribution_csv, write_graph_snapshots,
                     write_manifest, write_urn_trajectory)
from .theory import solve_recurrence, solve_unperturbed_recurrence
from .urn import assumption_audit, bernoulli_column_sampler, new_urn, run_urn


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="experiment config file")
    sub.add_argument("--seed", type=int, help="master seed (overrides config)")
    sub.add_argument("--out", default="mtpa_out", help="output directory")
    sub.add_argument("--replicates", type=int, help="override replicate count")
    sub.add_argument("--steps", type=int, help="override step count")
    sub.add_argument("--snapshot-every", type=int, dest="snapshot_every",
                     help="override snapshot interval")


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n", "--types", type=int, dest="n_types",
                     help="number of edge types")
    sub.add_argument("--m", type=int, dest="m_edges",
                     help="edges (or draws) per step")
    sub.add_argument("--f", help="row-major comma list or symmetric:p")
    sub.add_argument("--f-file", dest="f_file",
                     help="matrix file: N then N*N reals")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtpa",
        description="Preferential attachment with perturbed multi-type "
                    "edges: simulate, solve, and verify.")
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("simulate-graph",
                              help="simulate the typed-edge growth model")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--seed-graph", dest="seed_graph",
                     help="seed edge-list file (a b t per line)")
    sub.set_defaults(handler=_cmd_simulate_graph, model="graph")

    sub = commands.add_parser("simulate-urn", help="simulate the urn")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--c0", help="initial composition, comma list")
    sub.set_defaults(handler=_cmd_simulate_urn, model="urn")

    sub = commands.add_parser("solve",
                              help="asymptotic degree distribution (perturbed)")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--dmax", type=int, help="truncation weight")
    sub.set_defaults(handler=_cmd_solve)

    sub = commands.add_parser("solve-unperturbed",
                              help="conditional distribution without perturbation")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--dmax", type=int, help="truncation weight")
    sub.add_argument("--psi", help="type proportions, comma list")
    sub.add_argument("--e0", help="seed type counts for Dirichlet proportions "
                                  "(single-edge steps only)")
    sub.set_defaults(handler=_cmd_solve_unperturbed)

    sub = commands.add_parser("compare",
                              help="replicated simulation vs theory, with "
                                   "PASS/FAIL report")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_compare)

    sub = commands.add_parser("diagnose", help="convergence series")
    _add_common(sub)
    sub.add_argument("--quantity", required=True,
                     help="psi | tv | u_n | np_el")
    sub.add_argument("--d", help="target degree, comma list")
    sub.add_argument("--l", type=int, help="target type (1-based)")
    sub.set_defaults(handler=_cmd_diagnose)

    sub = commands.add_parser("audit",
                              help="sample replacement matrices and audit them")
    _add_common(sub)
    _add_model_flags(sub)
    sub.add_argument("--samples", type=int, default=10_000)
    sub.set_defaults(handler=_cmd_audit)

    sub = commands.add_parser("study",
                              help="spread of the non-perturbed answer vs "
                                   "the deterministic perturbed one")
    _add_common(sub)
    sub.add_argument("--psi-samples", type=int, default=1000,
                     dest="psi_samples")
    sub.set_defaults(handler=_cmd_study)

    return parser


def _resolve_matrix(args, n_types: int) -> np.ndarray:
    if getattr(args, "f_file", None):
        return matrices.read_matrix(args.f_file)
    if getattr(args, "f", None):
        return _matrix_from_key(args.f, n_types, "f")
    if n_types == 1:
        return np.array([[1.0]])
    raise ValidationError("--f (or --f-file, or a config file) is required "
                          "when --n > 1")


def _resolve_config(args, model: str | None = None) -> ExperimentConfig:
    if args.config:
        cfg = parse_config(args.config)
        if model is not None and cfg.model != model:
            cfg = dataclasses.replace(cfg, model=model)
    else:
        n_types = getattr(args, "n_types", None)
        if n_types is None:
            raise ValidationError("either --config or --n is required")
        f_matrix = _resolve_matrix(args, n_types)
        cfg = ExperimentConfig(
            model=model or "graph",
            n_types=n_types,
            m_edges=getattr(args, "m_edges", None) or 1,
            f_matrix=f_matrix,
        )
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.steps is not None:
        overrides["n_steps"] = args.steps
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.snapshot_every is not None:
        overrides["snapshot_every"] = args.snapshot_every
    if getattr(args, "m_edges", None) and args.config:
        overrides["m_edges"] = args.m_edges
    if getattr(args, "seed_graph", None):
        from .graph import SeedGraphSpec
        overrides["seed_edges"] = SeedGraphSpec.from_file(
            args.seed_graph, cfg.n_types).edges
    if getattr(args, "c0", None):
        overrides["initial_composition"] = [int(t) for t in args.c0.split(",")]
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out: Path, cfg_dict: dict, master_seed, outputs) -> None:
    write_manifest(out, command=["mtpa"] + list(args.raw_argv),
                   version=__version__, master_seed=master_seed,
                   config=cfg_dict, outputs=outputs)


def _cmd_simulate_graph(args) -> int:
    cfg = _resolve_config(args, model="graph")
    out = _out_dir(args)
    rng = replicate_stream(cfg.master_seed, 0)
    graph = new_graph(cfg.seed_spec())
    snapshots = run(graph, cfg.schedule(), cfg.m_edges, cfg.n_steps,
                    cfg.snapshot_every, rng)
    psi_path, dist_path = write_graph_snapshots(out, snapshots, cfg.n_types)
    _manifest(args, out, cfg.resolved(), cfg.master_seed,
              [psi_path, dist_path])
    print(f"wrote {psi_path} and {dist_path}")
    return 0


def _cmd_simulate_urn(args) -> int:
    cfg = _resolve_config(args, model="urn")
    out = _out_dir(args)
    rng = replicate_stream(cfg.master_seed, 0)
    sampler = bernoulli_column_sampler(cfg.f_matrix)
    urn = new_urn(cfg.urn_composition(), cfg.m_edges, sampler)
    snapshots = run_urn(urn, sampler, cfg.n_steps, cfg.snapshot_every, rng)
    path = write_urn_trajectory(out / "trajectory.csv", snapshots, cfg.n_types)
    _manifest(args, out, cfg.resolved(), cfg.master_seed, [path])
    print(f"wrote {path}")
    return 0


def _solver_params(args, need_f: bool = True):
    if args.config:
        cfg = parse_config(args.config)
        n, m, f = cfg.n_types, cfg.m_edges, cfg.f_matrix
        dmax = cfg.max_weight
    else:
        n = args.n_types
        if n is None:
            raise ValidationError("either --config or --n is required")
        m = args.m_edges or 1
        f = _resolve_matrix(args, n) if need_f else None
        dmax = 30
    if args.dmax is not None:
        dmax = args.dmax
    return n, m, f, dmax


def _cmd_solve(args) -> int:
    n, m, f, dmax = _solver_params(args)
    out = _out_dir(args)
    dist = solve_recurrence(f, m, dmax)
    path = write_distribution_csv(out / "distribution.csv", dist, n)
    config = {"n_types": n, "m_edges": m, "d_max": dmax,
              "f": [float(v) for v in np.asarray(f).ravel()]}
    _manifest(args, out, config, args.seed, [path])
    print(f"wrote {path} ({len(dist.masses)} degree vectors, "
          f"total mass {dist.total():.6f})")
    return 0


def _cmd_solve_unperturbed(args) -> int:
    n, m, _, dmax = _solver_params(args, need_f=False)
    if args.psi:
        psi = np.array([float(t) for t in args.psi.split(",")])
    elif args.e0:
        from .theory import dirichlet_psi_sample
        counts = [int(t) for t in args.e0.split(",")]
        if m != 1:
            raise ValidationError("--e0 proportions only apply with --m 1")
        rng = replicate_stream(args.seed or 0, 0, lane=1)
        psi = dirichlet_psi_sample(counts, rng)
    else:
        raise ValidationError("--psi or --e0 is required")
    if psi.size != n:
        raise ValidationError(f"psi needs {n} entries, got {psi.size}")
    out = _out_dir(args)
    dist = solve_unperturbed_recurrence(psi, m, dmax)
    path = write_distribution_csv(out / "distribution.csv", dist, n)
    config = {"n_types": n, "m_edges": m, "d_max": dmax,
              "psi": [float(v) for v in psi]}
    _manifest(args, out, config, args.seed, [path])
    print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    if not args.config:
        raise ValidationError("compare requires --config")
    cfg = _resolve_config(args)
    out = _out_dir(args)
    report = run_experiment(cfg)

    report_path = out / "report.txt"
    with open(report_path, "w") as fh:
        for line in report.summary_lines():
            fh.write(line + "\n")

    rep_header = ["replicate", "tv", "psi_error"]
    rep_rows = [(r.index, r.tv if r.tv is not None else "", r.psi_error)
                for r in report.replicates]
    rep_path = write_csv(out / "replicates.csv", rep_header, rep_rows)

    outputs = [report_path, rep_path]
    if report.per_degree_errors:
        err_header = ([f"d_{i + 1}" for i in range(cfg.n_types)]
                      + ["empirical_mean", "theoretical", "abs_error"])
        err_rows = []
        for d in sorted(report.per_degree_errors,
                        key=lambda d: (sum(d), d)):
            emp, theo = report.per_degree_errors[d]
            err_rows.append(d + (emp, theo, abs(emp - theo)))
        outputs.append(write_csv(out / "errors.csv", err_header, err_rows))

    _manifest(args, out, cfg.resolved(), cfg.master_seed, outputs)
    for line in report.summary_lines():
        print(line)
    return 0 if report.passed else 1


def _cmd_diagnose(args) -> int:
    if not args.config:
        raise ValidationError("diagnose requires --config")
    cfg = _resolve_config(args)
    degree = None
    if args.d:
        degree = tuple(int(t) for t in args.d.split(","))
    type_index = None if args.l is None else args.l - 1
    header, rows = convergence_series(cfg, args.quantity, degree=degree,
                                      type_index=type_index)
    out = _out_dir(args)
    path = write_csv(out / "series.csv", header, rows)
    _manifest(args, out, cfg.resolved(), cfg.master_seed, [path])
    print(f"wrote {path}")
    return 0


def _cmd_audit(args) -> int:
    if args.config:
        cfg = parse_config(args.config)
        f, seed = cfg.f_matrix, cfg.master_seed
    else:
        n = args.n_types
        if n is None:
            raise ValidationError("either --config or --n is required")
        f = _resolve_matrix(args, n)
        seed = args.seed or 0
    if args.seed is not None:
        seed = args.seed
    sampler = bernoulli_column_sampler(f)
    report = assumption_audit(sampler, args.samples,
                              replicate_stream(seed, 0, lane=2))
    out = _out_dir(args)
    path = out / "audit.txt"
    with open(path, "w") as fh:
        for line in report.lines():
            fh.write(line + "\n")
    config = {"f": [float(v) for v in np.asarray(f).ravel()],
              "samples": args.samples}
    _manifest(args, out, config, seed, [path])
    for line in report.lines():
        print(line)
    return 0


def _cmd_study(args) -> int:
    if not args.config:
        raise ValidationError("study requires --config")
    cfg = _resolve_config(args)
    study = perturbed_vs_unperturbed_study(cfg, args.psi_samples)
    out = _out_dir(args)
    header = ([f"d_{i + 1}" for i in range(cfg.n_types)]
              + ["unperturbed_mean", "unperturbed_std", "perturbed"])
    rows = [d + (study.unperturbed_mean[d], study.unperturbed_std[d],
                 study.perturbed[d])
            for d in study.degrees]
    path = write_csv(out / "study.csv", header, rows)
    _manifest(args, out, cfg.resolved(), cfg.master_seed, [path])
    print(f"wrote {path} (max spread {study.max_std:.4f})")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    args.raw_argv = argv
    try:
        return args.handler(args)
    except MtpaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
