"""Real-coded constrained GA and NSGA-II over a generic problem interface.

Problems expose per-dimension ``bounds`` (D, 2), ``n_objectives`` (all
objectives maximized), and ``evaluate(x) -> (objectives, violation)`` with
violation = 0 meaning feasible.  Vectorized problems may override
``evaluate_batch`` for population-sized arrays.

Constraint handling is feasibility-first (Deb's rules): feasible beats
infeasible, smaller violation beats larger, and Pareto dominance applies
among feasible individuals only.  All randomness is drawn from per-generation
streams keyed on (seed, generation) in a fixed slot order, and evaluations
are pure, so results are bit-identical regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np


class Problem:
    """Base class for optimization problems; subclasses set bounds and evaluate."""

    n_objectives: int = 1
    bounds: np.ndarray  # (D, 2) float array, [low, high] per dimension

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        raise NotImplementedError

    def evaluate_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        objs = np.empty((xs.shape[0], self.n_objectives))
        viols = np.empty(xs.shape[0])
        for i, x in enumerate(xs):
            f, v = self.evaluate(x)
            objs[i] = np.asarray(f, dtype=float)
            viols[i] = float(v)
        return objs, viols


@dataclass
class EvolverConfig:
    population_size: int = 100
    generations: int = 200
    crossover_fraction: float = 0.8
    mutation_sigma0: float = 0.1
    sigma_decay: float = 0.999
    tournament_size: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population size must be even and at least 4")
        if self.generations < 1:
            raise ValueError("at least one generation required")
        if not 0.0 <= self.crossover_fraction <= 1.0:
            raise ValueError("crossover fraction must lie in [0, 1]")
        if not 0.0 <= self.sigma_decay <= 1.0:
            raise ValueError("sigma decay must lie in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament size must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def desk_preset(seed: int = 0) -> EvolverConfig:
    """Default desk-scale budget: population 100, 200 generations."""
    return EvolverConfig(seed=seed)


def paper_preset(system: str, seed: int = 0) -> EvolverConfig:
    """Publication-scale budgets: NSGA-II 1700x5000 (a), GA 2500x1500 (b)."""
    if system == "a":
        return EvolverConfig(population_size=1700, generations=5000, seed=seed)
    if system == "b":
        return EvolverConfig(population_size=2500, generations=1500, seed=seed)
    raise ValueError(f"unknown system {system!r}")


@dataclass
class Individual:
    x: np.ndarray
    objectives: np.ndarray
    violation: float
    rank: int | None = None
    crowding: float | None = None

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0


@dataclass
class GAResult:
    best: Individual
    trace: list[dict] = field(default_factory=list)
    feasible: bool = True


@dataclass
class NSGA2Result:
    front: list[Individual]
    trace: list[dict] = field(default_factory=list)
    feasible: bool = True
    hv_reference: tuple[float, float] | None = None


def evaluate(problem: Problem, x) -> tuple[np.ndarray, float]:
    """Evaluate one genome, mapping non-finite objectives to a worst-rank result."""
    objs, viol = problem.evaluate(np.asarray(x, dtype=float))
    objs = np.atleast_1d(np.asarray(objs, dtype=float))
    viol = float(viol)
    if not np.isfinite(objs).all() or math.isnan(viol):
        return np.zeros_like(objs), np.inf
    return objs, viol


def _evaluate_population(problem, xs, workers=1):
    if workers <= 1 or xs.shape[0] < 2 * workers:
        objs, viols = problem.evaluate_batch(xs)
    else:
        chunks = np.array_split(np.arange(xs.shape[0]), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda idx: problem.evaluate_batch(xs[idx]), chunks))
        objs = np.concatenate([p[0] for p in parts])
        viols = np.concatenate([p[1] for p in parts])
    objs = np.asarray(objs, dtype=float)
    viols = np.asarray(viols, dtype=float)
    bad = ~np.isfinite(objs).all(axis=1) | np.isnan(viols)
    if bad.any():
        objs = np.where(bad[:, None], 0.0, objs)
        viols = np.where(bad, np.inf, viols)
    return objs, viols


def _gen_rng(seed: int, generation: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, generation]))


def _ga_priority(objs, viols):
    """Smaller is better: feasibility first, then violation, then objective."""
    infeas = (viols > 0).astype(int)
    order = np.lexsort((-objs[:, 0], viols, infeas))
    prio = np.empty(len(order), dtype=int)
    prio[order] = np.arange(len(order))
    return prio


def _tournament(rng, priority, n_picks, size):
    cand = rng.integers(0, len(priority), size=(n_picks, size))
    return cand[np.arange(n_picks), np.argmin(priority[cand], axis=1)]


def _make_offspring(rng, xs, priority, cfg, sigma):
    """One generation of variation: arithmetic crossover or Gaussian mutation."""
    n, _ = xs.shape
    do_cross = rng.random(n) < cfg.crossover_fraction
    n_cross = int(do_cross.sum())
    parents = _tournament(rng, priority, 2 * n_cross + (n - n_cross), cfg.tournament_size)
    children = np.empty_like(xs)
    if n_cross:
        u = rng.random((n_cross, 1))
        a = xs[parents[:n_cross]]
        b = xs[parents[n_cross:2 * n_cross]]
        children[do_cross] = u * a + (1.0 - u) * b
    n_mut = n - n_cross
    if n_mut:
        base = xs[parents[2 * n_cross:]]
        children[~do_cross] = base + rng.standard_normal((n_mut, base.shape[1])) * sigma
    return children


def run_ga(problem: Problem, config: EvolverConfig, workers: int = 1) -> GAResult:
    """Single-objective GA with elitism and feasibility-first selection.

    Returns the best-ever individual and a per-generation trace whose
    best-objective column is non-decreasing once a feasible genome exists.
    Terminal populations with no feasible member are flagged.
    """
    if problem.n_objectives != 1:
        raise ValueError("run_ga requires a single-objective problem")
    bounds = np.asarray(problem.bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    span = hi - lo
    n = config.population_size

    rng = _gen_rng(config.seed, 0)
    xs = lo + rng.random((n, lo.size)) * span
    objs, viols = _evaluate_population(problem, xs, workers)
    prio = _ga_priority(objs, viols)
    best_i = int(np.argmin(prio))
    best = Individual(xs[best_i].copy(), objs[best_i].copy(), float(viols[best_i]))

    trace = [_ga_trace_row(0, objs, viols)]
    for t in range(1, config.generations + 1):
        rng = _gen_rng(config.seed, t)
        sigma = config.mutation_sigma0 * span * config.sigma_decay**t
        children = np.clip(_make_offspring(rng, xs, prio, config, sigma), lo, hi)
        objs, viols = _evaluate_population(problem, children, workers)
        prio = _ga_priority(objs, viols)
        cand_i = int(np.argmin(prio))
        cand = Individual(children[cand_i].copy(), objs[cand_i].copy(), float(viols[cand_i]))
        if _ga_better(cand, best):
            best = cand
        # elitism: re-insert the incumbent over the worst child
        worst_i = int(np.argmax(prio))
        children[worst_i] = best.x
        objs[worst_i] = best.objectives
        viols[worst_i] = best.violation
        prio = _ga_priority(objs, viols)
        xs = children
        trace.append(_ga_trace_row(t, objs, viols))
    return GAResult(best=best, trace=trace, feasible=best.feasible)


def _ga_better(a: Individual, b: Individual) -> bool:
    if (a.violation > 0) != (b.violation > 0):
        return a.violation == 0
    if a.violation > 0:
        return a.violation < b.violation
    return a.objectives[0] > b.objectives[0]


def _ga_trace_row(gen, objs, viols):
    feas = viols == 0
    return {
        "generation": gen,
        "best_objective": float(objs[feas, 0].max()) if feas.any() else float("nan"),
        "mean_objective": float(objs[feas, 0].mean()) if feas.any() else float("nan"),
        "feasible_count": int(feas.sum()),
        "best_violation": float(viols.min()),
    }


# ---------------------------------------------------------------------------
# multi-objective machinery


def _dominance_matrix(objs, viols):
    """D[i, j] True when i dominates j under feasibility-first rules."""
    feas = viols == 0
    fi, fj = feas[:, None], feas[None, :]
    ge = (objs[:, None, :] >= objs[None, :, :]).all(axis=2)
    gt = (objs[:, None, :] > objs[None, :, :]).any(axis=2)
    pareto = ge & gt
    less_viol = viols[:, None] < viols[None, :]
    dom = (fi & ~fj) | (~fi & ~fj & less_viol) | (fi & fj & pareto)
    np.fill_diagonal(dom, False)
    return dom


def non_dominated_sort(objectives, violations=None) -> list[np.ndarray]:
    """Partition a population into fronts (lists of index arrays).

    Objectives are maximized; any feasible individual dominates every
    infeasible one, infeasible individuals are ordered by violation, and
    standard Pareto dominance applies among feasible ones.
    """
    objs = np.atleast_2d(np.asarray(objectives, dtype=float))
    if objs.shape[0] == 0:
        raise ValueError("population must be non-empty")
    viols = (
        np.zeros(objs.shape[0])
        if violations is None
        else np.asarray(violations, dtype=float)
    )
    dom = _dominance_matrix(objs, viols)
    n_dominators = dom.sum(axis=0)
    remaining = np.ones(objs.shape[0], dtype=bool)
    fronts = []
    while remaining.any():
        # the relation is a strict partial order, so a minimal element exists
        idx = np.flatnonzero(remaining & (n_dominators == 0))
        fronts.append(idx)
        remaining[idx] = False
        n_dominators = n_dominators - dom[idx].sum(axis=0)
    return fronts


def crowding_distance(front_objectives) -> np.ndarray:
    """NSGA-II crowding: +inf at per-objective extremes, normalized gaps inside."""
    objs = np.atleast_2d(np.asarray(front_objectives, dtype=float))
    n, m = objs.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for j in range(m):
        order = np.argsort(objs[:, j], kind="stable")
        col = objs[order, j]
        spread = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if spread > 0:
            gaps = (col[2:] - col[:-2]) / spread
            dist[order[1:-1]] += gaps
    return dist


def hypervolume_2d(points, reference) -> float:
    """Dominated hypervolume of maximized 2-D points w.r.t. a reference.

    Points not strictly above the reference in both coordinates are ignored.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(reference, dtype=float)
    if pts.shape[1] != 2 or ref.shape != (2,):
        raise ValueError("hypervolume_2d expects 2-D points and reference")
    pts = pts[(pts > ref).all(axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    keep = non_dominated_sort(pts)[0]
    pts = pts[keep]
    order = np.argsort(-pts[:, 0], kind="stable")
    pts = pts[order]
    hv = 0.0
    for i in range(pts.shape[0]):
        next_x = pts[i + 1, 0] if i + 1 < pts.shape[0] else ref[0]
        hv += (pts[i, 0] - next_x) * (pts[i, 1] - ref[1])
    return float(hv)


def _rank_and_crowding(objs, viols):
    fronts = non_dominated_sort(objs, viols)
    rank = np.empty(objs.shape[0], dtype=int)
    crowd = np.empty(objs.shape[0])
    for r, idx in enumerate(fronts):
        rank[idx] = r
        crowd[idx] = crowding_distance(objs[idx])
    return rank, crowd, fronts


def _nsga2_priority(rank, crowd):
    order = np.lexsort((-crowd, rank))
    prio = np.empty(len(order), dtype=int)
    prio[order] = np.arange(len(order))
    return prio


def run_nsga2(
    problem: Problem,
    config: EvolverConfig,
    workers: int = 1,
    hv_reference: tuple[float, float] | None = None,
) -> NSGA2Result:
    """Elitist NSGA-II: binary tournament on (rank, crowding), mu+lambda selection.

    The returned front holds the feasible non-dominated survivors sorted by
    first objective; when nothing feasible exists the least-violating front
    is returned and the result is flagged.  The trace records the dominated
    hypervolume of the feasible first front against ``hv_reference``
    (defaulting to the componentwise minimum of the first feasible
    generation, minus a small margin).
    """
    bounds = np.asarray(problem.bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    span = hi - lo
    n = config.population_size

    rng = _gen_rng(config.seed, 0)
    xs = lo + rng.random((n, lo.size)) * span
    objs, viols = _evaluate_population(problem, xs, workers)
    rank, crowd, _ = _rank_and_crowding(objs, viols)
    ref = hv_reference
    trace = []

    for t in range(1, config.generations + 1):
        rng = _gen_rng(config.seed, t)
        sigma = config.mutation_sigma0 * span * config.sigma_decay**t
        prio = _nsga2_priority(rank, crowd)
        children = np.clip(_make_offspring(rng, xs, prio, config, sigma), lo, hi)
        c_objs, c_viols = _evaluate_population(problem, children, workers)

        all_xs = np.vstack([xs, children])
        all_objs = np.vstack([objs, c_objs])
        all_viols = np.concatenate([viols, c_viols])
        rank_a, crowd_a, fronts = _rank_and_crowding(all_objs, all_viols)
        keep = _environmental_selection(fronts, crowd_a, n)
        xs, objs, viols = all_xs[keep], all_objs[keep], all_viols[keep]
        rank, crowd = rank_a[keep], crowd_a[keep]

        feas = viols == 0
        if ref is None and feas.any():
            ref = tuple(objs[feas].min(axis=0) - 1e-9) if problem.n_objectives == 2 else None
        hv = float("nan")
        if problem.n_objectives == 2 and ref is not None and feas.any():
            front0 = objs[feas & (rank == 0)]
            hv = hypervolume_2d(front0, ref) if front0.size else float("nan")
        trace.append({
            "generation": t,
            "hypervolume": hv,
            "feasible_count": int(feas.sum()),
            "best_violation": float(viols.min()),
        })

    feas = viols == 0
    flag = bool(feas.any())
    # front 0 is the least-violating set when nothing is feasible
    sel = np.flatnonzero(feas & (rank == 0)) if flag else np.flatnonzero(rank == 0)
    members = [
        Individual(xs[i].copy(), objs[i].copy(), float(viols[i]), rank=0, crowding=float(crowd[i]))
        for i in sel
    ]
    members.sort(key=lambda ind: ind.objectives[0])
    return NSGA2Result(front=members, trace=trace, feasible=flag, hv_reference=ref)


def _environmental_selection(fronts, crowd, n):
    keep: list[int] = []
    for idx in fronts:
        if len(keep) + len(idx) <= n:
            keep.extend(idx.tolist())
        else:
            need = n - len(keep)
            order = idx[np.lexsort((idx, -crowd[idx]))]
            keep.extend(order[:need].tolist())
            break
    return np.array(keep, dtype=int)
