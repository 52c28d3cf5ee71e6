"""Monte Carlo orchestration: replicates, comparisons, convergence series.

Replicates are independent simulations whose generators are derived from
(master_seed, replicate_index), so reports are reproducible and do not
depend on execution order. MTPA_THREADS caps process-level parallelism
(unset or 1 = serial, 0 = all cores).
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .degrees import DegreeDistribution
from .errors import BadArgs, BadQuantity, ValidationError
from .graph import (CONSTANT, PerturbationSchedule, SeedGraphSpec,
                    check_graph_invariants, edge_type_proportions,
                    empirical_distribution, new_graph, pa_step, run)
from .theory import (dirichlet_psi_sample, exact_attachment_probability,
                     edge_gain_rate_limit, exact_no_edge_probability,
                     solve_recurrence, solve_unperturbed_recurrence,
                     stationary_type_distribution)
from .urn import (bernoulli_column_sampler, check_urn_invariants, new_urn,
                  run_urn)

GRAPH = "graph"
URN = "urn"


def replicate_stream(master_seed: int, index: int, lane: int = 0) -> np.random.Generator:
    """Independent generator keyed by (master seed, replicate index)."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(lane, index))
    return np.random.Generator(np.random.PCG64(seq))


def max_workers(replicates: int) -> int:
    raw = os.environ.get("MTPA_THREADS", "1")
    try:
        requested = int(raw)
    except ValueError:
        requested = 1
    if requested == 0:
        requested = os.cpu_count() or 1
    return max(1, min(requested, replicates))


@dataclass
class ExperimentConfig:
    """Fully resolved parameters of one comparison experiment."""

    model: str
    n_types: int
    m_edges: int
    f_matrix: np.ndarray
    schedule_kind: str = CONSTANT
    decay_matrix: np.ndarray | None = None
    decay_rho: float = 1.0
    seed_edges: list | None = None        # None -> default seed graph
    initial_composition: list | None = None  # None -> seed type counts
    n_steps: int = 10_000
    snapshot_every: int = 1_000
    replicates: int = 1
    master_seed: int = 0
    max_weight: int = 30                  # solver truncation (d_max)
    cutoff: int | None = None             # comparison weight K; None -> m+10
    tv_tolerance: float = 0.02
    psi_tolerance: float = 0.02
    pass_fraction: float = 0.95

    def __post_init__(self):
        if self.model not in (GRAPH, URN):
            raise ValidationError(f"unknown model {self.model!r}")
        if self.n_types < 1 or self.m_edges < 1:
            raise ValidationError("types and edges_per_step must be >= 1")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.n_steps < 0 or self.snapshot_every < 1:
            raise ValidationError("steps must be >= 0, snapshot_every >= 1")
        self.f_matrix = np.asarray(self.f_matrix, dtype=float)
        if self.cutoff is None:
            self.cutoff = self.m_edges + 10
        if self.cutoff > self.max_weight:
            raise ValidationError(
                f"cutoff {self.cutoff} exceeds max_weight {self.max_weight}")

    def schedule(self) -> PerturbationSchedule:
        return PerturbationSchedule(self.f_matrix, self.schedule_kind,
                                    self.decay_matrix, self.decay_rho)

    def seed_spec(self) -> SeedGraphSpec:
        if self.seed_edges is None:
            return SeedGraphSpec.default(self.n_types)
        return SeedGraphSpec(self.n_types, list(self.seed_edges))

    def urn_composition(self) -> list:
        if self.initial_composition is not None:
            return list(self.initial_composition)
        return self.seed_spec().type_counts()

    def resolved(self) -> dict:
        """JSON-friendly dict of every field (for manifests)."""
        out = {}
        for name, value in self.__dict__.items():
            if isinstance(value, np.ndarray):
                out[name] = [float(v) for v in value.ravel()]
            elif isinstance(value, list):
                out[name] = [list(v) if isinstance(v, tuple) else v for v in value]
            else:
                out[name] = value
        return out


def tv_distance(p: DegreeDistribution, q: DegreeDistribution,
                cutoff: int) -> float:
    """Half the L1 distance, over the union support truncated at `cutoff`."""
    total = 0.0
    for d in p.support() | q.support():
        if sum(d) <= cutoff:
            total += abs(p.mass(d) - q.mass(d))
    return 0.5 * total


@dataclass
class ReplicateResult:
    index: int
    tv: float | None
    psi: tuple
    psi_error: float
    violations: list


@dataclass
class ComparisonReport:
    """Aggregated empirical-vs-theoretical comparison across replicates."""

    model: str
    replicates: list                 # ReplicateResult, by index
    psi_reference: tuple
    mean_tv: float | None            # graph model only
    psi_ok_fraction: float
    unaccounted_theory_mass: float | None
    per_degree_errors: dict          # d -> (mean empirical, theoretical)
    tv_tolerance: float
    psi_tolerance: float
    pass_fraction: float
    cutoff: int
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary_lines(self) -> list:
        lines = [f"model: {self.model}",
                 f"replicates: {len(self.replicates)}"]
        if self.mean_tv is not None:
            verdict = "PASS" if self.mean_tv <= self.tv_tolerance else "FAIL"
            lines.append(
                f"mean TV distance (cutoff {self.cutoff}): {self.mean_tv:.6f} "
                f"(tolerance {self.tv_tolerance:g}): {verdict}")
            lines.append(
                "unaccounted theoretical mass beyond cutoff: "
                f"{self.unaccounted_theory_mass:.6f}")
        ok = sum(1 for r in self.replicates
                 if r.psi_error <= self.psi_tolerance)
        verdict = ("PASS" if self.psi_ok_fraction >= self.pass_fraction
                   else "FAIL")
        lines.append(
            f"psi within {self.psi_tolerance:g}: {ok}/{len(self.replicates)} "
            f"(required fraction {self.pass_fraction:g}): {verdict}")
        violations = [v for r in self.replicates for v in r.violations]
        lines.append("conservation checks: "
                     + ("PASS" if not violations else "FAIL"))
        for v in violations:
            lines.append(f"  violation: {v}")
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return lines


def _graph_replicate(cfg: ExperimentConfig, index: int):
    rng = replicate_stream(cfg.master_seed, index)
    graph = new_graph(cfg.seed_spec())
    schedule = cfg.schedule()
    for _ in range(cfg.n_steps):
        pa_step(graph, schedule, cfg.m_edges, rng)
    violations = check_graph_invariants(graph, cfg.m_edges)
    emp = empirical_distribution(graph)
    truncated = {d: p for d, p in emp.masses.items()
                 if sum(d) <= cfg.cutoff}
    return ReplicateResult(index, None, edge_type_proportions(graph), 0.0,
                           violations), truncated


def _urn_replicate(cfg: ExperimentConfig, index: int):
    rng = replicate_stream(cfg.master_seed, index)
    sampler = bernoulli_column_sampler(cfg.f_matrix)
    urn = new_urn(cfg.urn_composition(), cfg.m_edges, sampler)
    run_urn(urn, sampler, cfg.n_steps, cfg.snapshot_every, rng)
    violations = check_urn_invariants(urn)
    return ReplicateResult(index, None, urn.fractions(), 0.0, violations), None


def _worker(args):
    cfg, index = args
    if cfg.model == GRAPH:
        return _graph_replicate(cfg, index)
    return _urn_replicate(cfg, index)


def _map_replicates(cfg: ExperimentConfig) -> list:
    jobs = [(cfg, r) for r in range(cfg.replicates)]
    workers = max_workers(cfg.replicates)
    if workers == 1:
        return [_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, jobs))


def run_experiment(cfg: ExperimentConfig) -> ComparisonReport:
    """Run all replicates and compare against the deterministic reference.

    Tolerance failures are recorded in the report, not raised.
    """
    psi_ref = stationary_type_distribution(cfg.f_matrix)
    raw = _map_replicates(cfg)

    failures = []
    if cfg.model == GRAPH:
        theory = solve_recurrence(cfg.f_matrix, cfg.m_edges, cfg.max_weight)
        theory_cut = {d: p for d, p in theory.masses.items()
                      if sum(d) <= cfg.cutoff}
        unaccounted = 1.0 - sum(theory_cut.values())
        results = []
        error_acc = {d: 0.0 for d in theory_cut}
        for result, truncated in raw:
            support = set(truncated) | set(theory_cut)
            tv = 0.5 * sum(abs(truncated.get(d, 0.0) - theory_cut.get(d, 0.0))
                           for d in support)
            result.tv = tv
            result.psi_error = float(np.max(np.abs(
                np.asarray(result.psi) - psi_ref)))
            for d in support:
                error_acc.setdefault(d, 0.0)
                error_acc[d] += truncated.get(d, 0.0)
            results.append(result)
        n_rep = len(results)
        per_degree = {d: (error_acc[d] / n_rep, theory_cut.get(d, 0.0))
                      for d in error_acc}
        mean_tv = float(np.mean([r.tv for r in results]))
        if mean_tv > cfg.tv_tolerance:
            failures.append(
                f"mean TV {mean_tv:.6f} exceeds {cfg.tv_tolerance:g}")
    else:
        unaccounted = None
        per_degree = {}
        mean_tv = None
        results = []
        for result, _ in raw:
            result.psi_error = float(np.max(np.abs(
                np.asarray(result.psi) - psi_ref)))
            results.append(result)

    ok = sum(1 for r in results if r.psi_error <= cfg.psi_tolerance)
    psi_ok_fraction = ok / len(results)
    if psi_ok_fraction < cfg.pass_fraction:
        failures.append(
            f"only {ok}/{len(results)} replicates have terminal proportions "
            f"within {cfg.psi_tolerance:g}")
    violations = [v for r in results for v in r.violations]
    if violations:
        failures.append(f"{len(violations)} conservation violations")

    return ComparisonReport(
        model=cfg.model,
        replicates=results,
        psi_reference=tuple(float(v) for v in psi_ref),
        mean_tv=mean_tv,
        psi_ok_fraction=psi_ok_fraction,
        unaccounted_theory_mass=unaccounted,
        per_degree_errors=per_degree,
        tv_tolerance=cfg.tv_tolerance,
        psi_tolerance=cfg.psi_tolerance,
        pass_fraction=cfg.pass_fraction,
        cutoff=cfg.cutoff,
        failures=failures,
    )


def _analytic_grid(cfg: ExperimentConfig) -> list:
    grid = sorted({1, cfg.n_steps}
                  | {k for k in range(cfg.snapshot_every, cfg.n_steps + 1,
                                      cfg.snapshot_every)})
    return [n for n in grid if n >= 1]


def convergence_series(cfg: ExperimentConfig, quantity: str, *,
                       degree=None, type_index: int | None = None):
    """Per-snapshot series of a convergence diagnostic with its limit.

    PSI and TV are simulated per replicate; U_N and NP_EL are analytic in
    the modelled edge count initial_edges + m*(n-1). Returns (header, rows).
    """
    name = quantity.strip().lower()
    if name == "psi":
        psi_ref = stationary_type_distribution(cfg.f_matrix)
        header = (["replicate", "n"]
                  + [f"psi_{l + 1}" for l in range(cfg.n_types)]
                  + ["max_abs_error"])
        rows = []
        for r in range(cfg.replicates):
            rng = replicate_stream(cfg.master_seed, r)
            if cfg.model == GRAPH:
                graph = new_graph(cfg.seed_spec())
                snaps = run(graph, cfg.schedule(), cfg.m_edges, cfg.n_steps,
                            cfg.snapshot_every, rng)
                series = [(s.n, s.psi) for s in snaps]
            else:
                sampler = bernoulli_column_sampler(cfg.f_matrix)
                urn = new_urn(cfg.urn_composition(), cfg.m_edges, sampler)
                snaps = run_urn(urn, sampler, cfg.n_steps, cfg.snapshot_every,
                                rng)
                series = [(s.n, s.fractions) for s in snaps]
            for n, psi in series:
                err = max(abs(a - b) for a, b in zip(psi, psi_ref))
                rows.append((r, n) + tuple(psi) + (err,))
        return header, rows

    if name == "tv":
        if cfg.model != GRAPH:
            raise BadQuantity("tv series requires the graph model")
        theory = solve_recurrence(cfg.f_matrix, cfg.m_edges, cfg.max_weight)
        header = ["replicate", "n", "tv"]
        rows = []
        for r in range(cfg.replicates):
            rng = replicate_stream(cfg.master_seed, r)
            graph = new_graph(cfg.seed_spec())
            snaps = run(graph, cfg.schedule(), cfg.m_edges, cfg.n_steps,
                        cfg.snapshot_every, rng)
            for snap in snaps:
                rows.append((r, snap.n,
                             tv_distance(snap.distribution, theory,
                                         cfg.cutoff)))
        return header, rows

    if name in ("u_n", "un"):
        if degree is None:
            raise BadArgs("u_n series needs a target degree")
        d = tuple(int(v) for v in degree)
        initial_edges = sum(cfg.seed_spec().type_counts())
        limit = sum(d) / 2.0
        header = ["n", "u_n", "limit", "abs_error"]
        rows = []
        for n in _analytic_grid(cfg):
            edges_prev = initial_edges + cfg.m_edges * (n - 1)
            value = n * (1.0 - exact_no_edge_probability(d, edges_prev,
                                                         cfg.m_edges))
            rows.append((n, value, limit, abs(value - limit)))
        return header, rows

    if name == "np_el":
        if degree is None or type_index is None:
            raise BadArgs("np_el series needs a target degree and type")
        d = tuple(int(v) for v in degree)
        l = int(type_index)
        initial_edges = sum(cfg.seed_spec().type_counts())
        schedule = cfg.schedule()
        limit = edge_gain_rate_limit(d, l, schedule.limit)
        previous = d[:l] + (d[l] - 1,) + d[l + 1:]
        unit = tuple(1 if k == l else 0 for k in range(len(d)))
        header = ["n", "n_times_p", "limit", "abs_error"]
        rows = []
        for n in _analytic_grid(cfg):
            edges_prev = initial_edges + cfg.m_edges * (n - 1)
            value = n * exact_attachment_probability(
                previous, unit, edges_prev, cfg.m_edges,
                schedule.matrix_at(n))
            rows.append((n, value, limit, abs(value - limit)))
        return header, rows

    raise BadQuantity(f"unknown quantity {quantity!r}")


@dataclass
class StudyReport:
    """Spread of the conditional non-perturbed answer vs the perturbed one."""

    n_samples: int
    degrees: list
    unperturbed_mean: dict
    unperturbed_std: dict
    perturbed: dict

    @property
    def max_std(self) -> float:
        return max(self.unperturbed_std.values(), default=0.0)


def perturbed_vs_unperturbed_study(cfg: ExperimentConfig, n_psi_samples: int,
                                   psi_samples=None) -> StudyReport:
    """Contrast the deterministic perturbed masses with the random
    non-perturbed ones across sampled type proportions.

    Without explicit `psi_samples` the proportions are Dirichlet with the
    seed graph's per-type edge counts, which is the tree case and therefore
    requires one edge per step.
    """
    if psi_samples is None:
        if cfg.m_edges != 1:
            raise BadArgs("Dirichlet proportions only apply when each step "
                          "adds a single edge; pass psi_samples explicitly")
        rng = replicate_stream(cfg.master_seed, 0, lane=1)
        counts = cfg.seed_spec().type_counts()
        psi_samples = [dirichlet_psi_sample(counts, rng)
                       for _ in range(n_psi_samples)]
    else:
        psi_samples = [np.asarray(p, dtype=float) for p in psi_samples]
    if not psi_samples:
        raise BadArgs("need at least one psi sample")

    perturbed = solve_recurrence(cfg.f_matrix, cfg.m_edges, cfg.max_weight)
    degrees = [d for d, _ in perturbed.items_sorted() if sum(d) <= cfg.cutoff]
    values = {d: [] for d in degrees}
    for psi in psi_samples:
        dist = solve_unperturbed_recurrence(psi, cfg.m_edges, cfg.max_weight)
        for d in degrees:
            values[d].append(dist.mass(d))
    mean = {d: float(np.mean(values[d])) for d in degrees}
    std = {d: float(np.std(values[d])) for d in degrees}
    return StudyReport(
        n_samples=len(psi_samples),
        degrees=degrees,
        unperturbed_mean=mean,
        unperturbed_std=std,
        perturbed={d: perturbed.mass(d) for d in degrees},
    )
