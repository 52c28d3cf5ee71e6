"""Deterministic numerics for the asymptotic degree distribution.

Covers the stationary edge-type proportions (Perron left eigenvector of the
perturbation limit), the recurrences for the asymptotic degree distribution
in the perturbed and non-perturbed dynamics, the exact finite-step
attachment probabilities with their limits, and the elementary binomial
bound used to control the linearization error of those probabilities.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import matrices
from .degrees import (Degree, DegreeDistribution, THEORETICAL_PERTURBED,
                      THEORETICAL_UNPERTURBED, compositions_of_weight,
                      lattice_size)
from .errors import (BadArgs, BadCounts, BadIndexMatrix, BadPsi,
                     CapacityExceeded, NoConvergence)

#: hard cap on enumerated lattice cells before the solver refuses
LATTICE_CAP = 10_000_000

#: weight above which factorial products switch from exact integers to log-gamma
EXACT_FACTORIAL_LIMIT = 20


def stationary_type_distribution(type_flip_matrix, *, method: str = "auto",
                                 tol: float = 1e-13,
                                 max_iterations: int = 100_000) -> np.ndarray:
    """Asymptotic edge-type proportions psi, with psi @ F = psi and sum 1.

    For an irreducible row-stochastic F this is the unique stationary
    probability vector of the type-flip chain, i.e. the simplex-normalized
    left Perron eigenvector. A dense linear solve is used up to 64 types
    (the default); `method="power"` forces damped power iteration on the
    transpose, which converges for periodic chains too.

    Raises NotStochastic, NotIrreducible, or NoConvergence.
    """
    flip = matrices.as_row_stochastic(type_flip_matrix, what="F")
    matrices.require_irreducible(flip, what="F")
    n = flip.shape[0]
    if np.any((flip == 0.0) | (flip == 1.0)) and n > 1:
        warnings.warn(
            "F has boundary entries (exactly 0 or 1); the proportion limit "
            "was established for entries strictly inside (0, 1)",
            stacklevel=2)
    if method == "auto":
        method = "direct" if n <= 64 else "power"

    if method == "direct":
        system = flip.T - np.eye(n)
        system[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        try:
            psi = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"direct solve failed: {exc}") from exc
    elif method == "power":
        # damping by (T + I)/2 keeps the eigenvector and removes periodicity
        transpose = flip.T
        psi = np.full(n, 1.0 / n)
        for _ in range(max_iterations):
            nxt = 0.5 * (transpose @ psi + psi)
            nxt /= nxt.sum()
            if np.max(np.abs(nxt - psi)) <= tol * np.max(np.abs(nxt)):
                psi = nxt
                break
            psi = nxt
        else:
            raise NoConvergence(
                f"power iteration did not converge in {max_iterations} steps")
    else:
        raise BadArgs(f"unknown method {method!r}")

    psi = np.maximum(psi, 0.0)
    psi /= psi.sum()
    residual = float(np.max(np.abs(psi @ flip - psi)))
    if residual > 1e-12:
        raise NoConvergence(f"stationary residual {residual:.3e} exceeds 1e-12")
    return psi


def _log_factorial(k: int) -> float:
    return math.lgamma(k + 1)


def _mass_of_fresh_vertex(d: Degree, m: int, assignment_rates) -> float:
    # 2*m!/(m+2) * prod_l rate_l**d_l / d_l!
    if m <= EXACT_FACTORIAL_LIMIT:
        value = 2.0 * math.factorial(m) / (m + 2)
        for d_l, rate in zip(d, assignment_rates):
            value *= rate ** d_l / math.factorial(d_l)
        return value
    log_value = math.log(2.0) + _log_factorial(m) - math.log(m + 2)
    for d_l, rate in zip(d, assignment_rates):
        if d_l:
            log_value += d_l * math.log(rate) - _log_factorial(d_l)
    return math.exp(log_value)


def solve_recurrence(type_flip_matrix, m: int, max_weight: int, *,
                     lattice_cap: int = LATTICE_CAP) -> DegreeDistribution:
    """Asymptotic degree distribution of the perturbed dynamics.

    Enumerates degree vectors by increasing weight up to `max_weight`.
    Weight-m vectors get the closed-form mass of a fresh vertex whose m
    edges carry independently assigned-and-flipped types; heavier vectors
    accumulate mass from their weight-(s-1) predecessors with rate
    (d - e_l) . F[:, l] / (s + 2). Vectors lighter than m have mass zero
    and are omitted.
    """
    if m < 1:
        raise BadArgs("m must be at least 1")
    if max_weight < m:
        raise BadArgs("max_weight must be at least m")
    flip = matrices.as_row_stochastic(type_flip_matrix, what="F")
    n = flip.shape[0]
    if lattice_size(n, max_weight) > lattice_cap:
        raise CapacityExceeded(
            f"lattice up to weight {max_weight} in {n} types exceeds "
            f"{lattice_cap} cells")
    psi = stationary_type_distribution(flip)
    assignment_rates = tuple(float(r) for r in psi @ flip)
    columns = tuple(tuple(float(v) for v in flip[:, l]) for l in range(n))

    masses = {}
    for s in range(m, max_weight + 1):
        if s == m:
            for d in compositions_of_weight(s, n):
                masses[d] = _mass_of_fresh_vertex(d, m, assignment_rates)
            continue
        denom = s + 2
        for d in compositions_of_weight(s, n):
            acc = 0.0
            for l in range(n):
                if d[l] == 0:
                    continue
                previous = d[:l] + (d[l] - 1,) + d[l + 1:]
                prev_mass = masses.get(previous, 0.0)
                if prev_mass == 0.0:
                    continue
                column = columns[l]
                rate = 0.0
                for k in range(n):
                    dk = previous[k]
                    if dk:
                        rate += dk * column[k]
                acc += rate * prev_mass
            masses[d] = acc / denom
    return DegreeDistribution(masses, THEORETICAL_PERTURBED, max_weight)


def solve_unperturbed_recurrence(psi, m: int, max_weight: int, *,
                                 lattice_cap: int = LATTICE_CAP) -> DegreeDistribution:
    """Degree distribution of the non-perturbed dynamics given proportions psi.

    Without perturbation the limiting type proportions are random; this
    solves the recurrence conditionally on a supplied realization, for
    comparison studies against the deterministic perturbed answer.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 1 or np.any(psi < 0) or abs(psi.sum() - 1.0) > 1e-12:
        raise BadPsi(f"psi {psi!r} is not a probability vector")
    if m < 1:
        raise BadArgs("m must be at least 1")
    if max_weight < m:
        raise BadArgs("max_weight must be at least m")
    n = psi.size
    if lattice_size(n, max_weight) > lattice_cap:
        raise CapacityExceeded(
            f"lattice up to weight {max_weight} in {n} types exceeds "
            f"{lattice_cap} cells")

    masses = {}
    for s in range(m, max_weight + 1):
        denom = s + 2
        fresh = s == m
        for d in compositions_of_weight(s, n):
            acc = 0.0
            for l in range(n):
                if d[l] == 0 or d[l] == 1:
                    continue  # coefficient d_l - 1 vanishes at 1
                previous = d[:l] + (d[l] - 1,) + d[l + 1:]
                prev_mass = masses.get(previous, 0.0)
                if prev_mass:
                    acc += (d[l] - 1) * prev_mass
            if fresh:
                acc += 2.0 * _multinomial_pmf(d, psi)
            masses[d] = acc / denom
    return DegreeDistribution(masses, THEORETICAL_UNPERTURBED, max_weight)


def _multinomial_pmf(d: Degree, probabilities) -> float:
    s = sum(d)
    if s <= EXACT_FACTORIAL_LIMIT:
        coeff = math.factorial(s)
        value = float(coeff)
        for d_l, p in zip(d, probabilities):
            value *= p ** d_l / math.factorial(d_l)
        return value
    log_value = _log_factorial(s)
    for d_l, p in zip(d, probabilities):
        if d_l:
            if p == 0.0:
                return 0.0
            log_value += d_l * math.log(p) - _log_factorial(d_l)
    return math.exp(log_value)


def dirichlet_psi_sample(initial_type_counts, rng: np.random.Generator) -> np.ndarray:
    """One Dirichlet sample of the non-perturbed type proportions (tree case).

    Valid when each step adds a single edge; the parameters are the seed
    graph's per-type edge counts.
    """
    counts = list(initial_type_counts)
    if not counts or any((int(c) != c or c < 1) for c in counts):
        raise BadCounts(f"counts {counts!r} must be positive integers")
    return rng.dirichlet(np.asarray(counts, dtype=float))


def exact_no_edge_probability(d, num_edges_prev: int, m: int) -> float:
    """Probability that a vertex of degree d gains nothing in one step.

    Each of the m independent endpoint draws misses the vertex with
    probability 1 - weight(d) / (2 |E|), |E| taken before the step.
    """
    d = tuple(d)
    s = sum(d)
    if m < 1 or any(v < 0 for v in d):
        raise BadArgs("need m >= 1 and nonnegative degree entries")
    if s == 0:
        return 1.0
    if num_edges_prev < 1 or 2 * num_edges_prev < s:
        raise BadArgs(
            f"need 2*num_edges_prev >= weight, got {num_edges_prev} vs {s}")
    return (1.0 - s / (2.0 * num_edges_prev)) ** m


def attachment_probability_term(d_prev, assignment, num_edges_prev: int,
                                m: int, type_flip_matrix) -> float:
    """Probability of one specific (initial type -> final type) assignment.

    `assignment[k][l]` counts new edges that landed on the vertex (degree
    `d_prev` before the step) with initial type k flipped to final type l.
    The remaining m - s(assignment) draws all miss the vertex.
    """
    d_prev = tuple(d_prev)
    cell = np.asarray(assignment, dtype=np.int64)
    n = len(d_prev)
    if cell.shape != (n, n) or np.any(cell < 0):
        raise BadIndexMatrix(f"assignment must be {n}x{n} nonnegative integers")
    total_new = int(cell.sum())
    if total_new > m:
        raise BadIndexMatrix(f"assignment places {total_new} edges, step has {m}")
    if any(v < 0 for v in d_prev):
        raise BadArgs("degree entries must be nonnegative")
    s_prev = sum(d_prev)
    if num_edges_prev < 1 or 2 * num_edges_prev < s_prev:
        raise BadArgs("need 2*num_edges_prev >= weight of d_prev")
    flip = np.asarray(type_flip_matrix, dtype=float)

    coeff = math.factorial(m) // math.factorial(m - total_new)
    value = float(coeff)
    two_e = 2.0 * num_edges_prev
    for k in range(n):
        for l in range(n):
            c = int(cell[k, l])
            if c == 0:
                continue
            value /= math.factorial(c)
            value *= ((d_prev[k] / two_e) * flip[k, l]) ** c
    value *= (1.0 - s_prev / two_e) ** (m - total_new)
    return value


def _assignments_with_gains(gained) -> list:
    # all nonnegative integer matrices whose column sums equal `gained`
    n = len(gained)
    per_column = [list(compositions_of_weight(g, n)) for g in gained]
    out = []
    for cols in itertools.product(*per_column):
        out.append(tuple(tuple(cols[l][k] for l in range(n)) for k in range(n)))
    return out


def exact_attachment_probability(d_prev, gained, num_edges_prev: int, m: int,
                                 type_flip_matrix) -> float:
    """Probability that a vertex of degree d_prev gains exactly `gained`.

    `gained[l]` counts new incident edges of final type l. Sums the
    single-assignment terms over every way of attributing the gains to
    initial types.
    """
    gained = tuple(int(g) for g in gained)
    if any(g < 0 for g in gained):
        raise BadArgs("gained entries must be nonnegative")
    if sum(gained) > m:
        raise BadArgs(f"cannot gain {sum(gained)} edges in a step of {m}")
    total = 0.0
    for assignment in _assignments_with_gains(gained):
        total += attachment_probability_term(d_prev, assignment,
                                             num_edges_prev, m,
                                             type_flip_matrix)
    return total


def new_vertex_degree_probability(d, m: int, psi, type_flip_matrix) -> float:
    """Probability that a fresh vertex ends the step with degree d.

    Sums over every split of the m edges into (initial type, final type)
    cells; zero unless weight(d) equals m. `psi` supplies the per-type
    initial-assignment law, the matrix the flip law.
    """
    d = tuple(d)
    if sum(d) != m:
        return 0.0
    n = len(d)
    psi = np.asarray(psi, dtype=float)
    flip = np.asarray(type_flip_matrix, dtype=float)
    total = 0.0
    for assignment in _assignments_with_gains(d):
        coeff = math.factorial(m)
        value = float(coeff)
        for k in range(n):
            for l in range(n):
                c = assignment[k][l]
                if c:
                    value /= math.factorial(c)
                    value *= (psi[k] * flip[k, l]) ** c
        total += value
    return total


def new_vertex_degree_limit(d, m: int, psi, type_flip_matrix) -> float:
    """Closed form of the fresh-vertex degree law at the proportion limit."""
    d = tuple(d)
    if sum(d) != m:
        return 0.0
    psi = np.asarray(psi, dtype=float)
    flip = np.asarray(type_flip_matrix, dtype=float)
    rates = psi @ flip
    value = float(math.factorial(m))
    for d_l, rate in zip(d, rates):
        value *= rate ** d_l / math.factorial(d_l)
    return value


def edge_gain_rate_limit(d, l: int, type_flip_matrix) -> float:
    """Limit of n * P(gain exactly one type-l edge), for predecessors of d."""
    d = tuple(d)
    if d[l] < 1:
        raise BadArgs(f"d must have a type-{l + 1} edge to shed")
    flip = np.asarray(type_flip_matrix, dtype=float)
    previous = d[:l] + (d[l] - 1,) + d[l + 1:]
    return float(np.dot(previous, flip[:, l])) / 2.0


@dataclass
class LimitDiagnostics:
    """Finite-n attachment quantities on a step grid, with their limits."""

    degree: Degree
    steps: list
    no_edge_rate: list          # u_n = n * (1 - P(no new edge))
    no_edge_rate_limit: float   # weight / 2
    edge_gain_rate: dict        # type l -> series of n * P(gain e_l)
    edge_gain_rate_limits: dict
    fresh_vertex_prob: list     # q_n
    fresh_vertex_prob_limit: float


def limit_diagnostics(d, m: int, schedule, initial_edges: int,
                      steps) -> LimitDiagnostics:
    """Evaluate the finite-step attachment formulas along a step grid.

    The edge count is modelled as |E_{n-1}| = initial_edges + m*(n-1), so
    the series is fully analytic; randomness never enters. The fresh-vertex
    series uses the limiting proportions with the step-n flip matrix, which
    isolates the schedule's own convergence.
    """
    d = tuple(int(v) for v in d)
    if m < 1 or initial_edges < 1:
        raise BadArgs("need m >= 1 and initial_edges >= 1")
    steps = [int(n) for n in steps]
    if any(n < 1 for n in steps):
        raise BadArgs("steps must be >= 1")
    psi = stationary_type_distribution(schedule.limit)
    n_types = len(d)

    no_edge = []
    gain = {l: [] for l in range(n_types) if d[l] >= 1}
    fresh = []
    for n in steps:
        edges_prev = initial_edges + m * (n - 1)
        flip_n = schedule.matrix_at(n)
        no_edge.append(n * (1.0 - exact_no_edge_probability(d, edges_prev, m)))
        for l in gain:
            previous = d[:l] + (d[l] - 1,) + d[l + 1:]
            unit = tuple(1 if k == l else 0 for k in range(n_types))
            gain[l].append(n * exact_attachment_probability(
                previous, unit, edges_prev, m, flip_n))
        fresh.append(new_vertex_degree_probability(d, m, psi, flip_n))

    gain_limits = {l: edge_gain_rate_limit(d, l, schedule.limit) for l in gain}
    return LimitDiagnostics(
        degree=d,
        steps=steps,
        no_edge_rate=no_edge,
        no_edge_rate_limit=sum(d) / 2.0,
        edge_gain_rate=gain,
        edge_gain_rate_limits=gain_limits,
        fresh_vertex_prob=fresh,
        fresh_vertex_prob_limit=new_vertex_degree_limit(d, m, psi,
                                                        schedule.limit),
    )


def binomial_bound_holds(n: int, x: float) -> bool:
    """Check |(1-x)**n - (1-n*x)| <= C(n, 2) * x**2 at one point.

    Holds for every integer n >= 1 and x in [0, 1]; a tiny relative slack
    absorbs floating-point rounding at equality cases.
    """
    if n < 1 or not 0.0 <= x <= 1.0:
        raise BadArgs("need n >= 1 and x in [0, 1]")
    lhs = abs((1.0 - x) ** n - (1.0 - n * x))
    rhs = math.comb(n, 2) * x * x
    return lhs <= rhs * (1.0 + 1e-12) + 1e-15
