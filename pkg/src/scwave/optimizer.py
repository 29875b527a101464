"""Smoothing-profile search: differential evolution and the w=2 line search.

A candidate is the first w-1 profile weights; the last weight is implied by
the sum-to-one constraint. Candidates whose first w-1 weights already sum
past 1 are not repaired: they simply receive infinite cost and lose. The
mutation recipe is p_r1 + p_r2 - p_r3 passed through the saturation map,
with binomial crossover back to the parent at rate `crossover_prob`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _parallel
from .density import DEFAULT_MAX_ITERS
from .ensemble import EnsembleSpec, SmoothingProfile
from .wave import front_arrival_cost, front_arrival_speed, sweep_out_cost

# Candidate vectors are quantized to this grid for cost memoization.
MEMO_QUANTUM = 1e-12

# Initialization gives up after this many consecutive rejected samples,
# which signals a channel parameter at or beyond the achievable threshold.
REJECTION_CAP_FACTOR = 10


class InitializationError(RuntimeError):
    """No feasible starting population could be sampled."""


@dataclass(frozen=True)
class OptimizerConfig:
    w: int
    epsilon: float
    dv_set: tuple[int, ...] = (3, 4, 5, 6, 7, 8, 9, 10)
    cost_kind: str = "c2"  # "c1" or "c2"
    population_multiplier: int = 100
    generations: int = 1000
    crossover_prob: float = 0.33
    seed: int = 0
    dc_ratio: int = 2  # dc = dc_ratio * dv
    L: int = 100
    de_max_iters: int = DEFAULT_MAX_ITERS

    def __post_init__(self):
        if self.w < 2:
            raise ValueError("optimization requires w >= 2")
        if not 0.0 < self.crossover_prob < 1.0:
            raise ValueError("crossover_prob must be in (0,1)")
        if self.cost_kind not in ("c1", "c2"):
            raise ValueError(f"unknown cost kind {self.cost_kind!r}")

    @property
    def dimension(self) -> int:
        return self.w - 1

    @property
    def population_size(self) -> int:
        return self.population_multiplier * self.dimension


@dataclass
class OptimizerState:
    population: np.ndarray  # (N_P, D)
    costs: np.ndarray  # (N_P,)
    best_vector: np.ndarray
    best_cost: float
    generation: int
    seed: int
    spec_template: EnsembleSpec
    memo: dict = field(default_factory=dict, repr=False)


def f_sat(x) -> np.ndarray:
    """Element-wise fold into [0, 1]: min(|x_d|, 1)."""
    return np.minimum(np.abs(np.asarray(x, dtype=np.float64)), 1.0)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


def candidate_profile(vector: np.ndarray) -> SmoothingProfile | None:
    """Decode the first w-1 weights into a full profile; None if invalid."""
    s = math.fsum(float(v) for v in vector)
    if s > 1.0 or any(v < 0.0 for v in vector):
        return None
    return SmoothingProfile((*[float(v) for v in vector], 1.0 - s))


def _cost_payload(args) -> float:
    vec, dv, dc, L, M, epsilon, kind, max_iters = args
    profile = candidate_profile(np.asarray(vec))
    if profile is None:
        return math.inf
    spec = EnsembleSpec(dv, dc, profile, L, M)
    fn = front_arrival_cost if kind == "c1" else sweep_out_cost
    rep = fn(spec, epsilon, max_iters=max_iters)
    return rep.cost if rep.feasible else math.inf


def _memo_key(vec: np.ndarray) -> tuple:
    return tuple(np.round(vec / MEMO_QUANTUM).astype(np.int64).tolist())


def _evaluate_many(
    vectors: list[np.ndarray],
    state: OptimizerState,
    config: OptimizerConfig,
    workers: int | None = None,
) -> list[float]:
    """Memoized batch cost evaluation; parallel-safe and order-determined."""
    spec = state.spec_template
    todo_idx, todo_args = [], []
    costs: list[float | None] = []
    for i, vec in enumerate(vectors):
        key = _memo_key(vec)
        if key in state.memo:
            costs.append(state.memo[key])
        else:
            costs.append(None)
            todo_idx.append(i)
            todo_args.append(
                (tuple(float(v) for v in vec), spec.dv, spec.dc, spec.L, spec.M,
                 config.epsilon, config.cost_kind, config.de_max_iters)
            )
    if todo_args:
        fresh = _parallel.map_ordered(_cost_payload, todo_args, workers)
        for i, c in zip(todo_idx, fresh):
            costs[i] = c
            state.memo[_memo_key(vectors[i])] = c
    return costs  # type: ignore[return-value]


def sample_simplex(rng: np.random.Generator, w: int, size: int) -> np.ndarray:
    """Uniform samples from the probability simplex on w weights."""
    return rng.dirichlet(np.ones(w), size=size)


def sample_initial_population(
    config: OptimizerConfig,
    spec_template: EnsembleSpec,
    workers: int | None = None,
) -> OptimizerState:
    """Fill the population with uniform simplex samples that decode at the
    configured channel parameter; rejected samples are redrawn.

    Raises InitializationError after REJECTION_CAP_FACTOR * N_P consecutive
    rejections, which signals epsilon at or above the achievable threshold.
    """
    n_p, d = config.population_size, config.dimension
    rng = _rng(config.seed, 1)
    accepted: list[np.ndarray] = []
    accepted_costs: list[float] = []
    state = OptimizerState(
        population=np.empty((0, d)),
        costs=np.empty(0),
        best_vector=np.zeros(d),
        best_cost=math.inf,
        generation=0,
        seed=config.seed,
        spec_template=spec_template,
        memo={},
    )
    consecutive_rejections = 0
    cap = REJECTION_CAP_FACTOR * n_p
    while len(accepted) < n_p:
        batch = min(256, n_p - len(accepted) + 32)
        cands = sample_simplex(rng, config.w, batch)[:, :d]
        costs = _evaluate_many(list(cands), state, config, workers)
        for vec, c in zip(cands, costs):
            if math.isfinite(c):
                consecutive_rejections = 0
                if len(accepted) < n_p:
                    accepted.append(np.array(vec))
                    accepted_costs.append(c)
            else:
                consecutive_rejections += 1
                if consecutive_rejections >= cap:
                    raise InitializationError(
                        f"{cap} consecutive samples failed to decode at "
                        f"epsilon={config.epsilon}; parameter too close to or "
                        f"above the threshold"
                    )
    population = np.vstack(accepted)
    costs_arr = np.asarray(accepted_costs)
    best = int(np.argmin(costs_arr))
    state.population = population
    state.costs = costs_arr
    state.best_vector = population[best].copy()
    state.best_cost = float(costs_arr[best])
    return state


def evolve(
    state: OptimizerState,
    config: OptimizerConfig,
    workers: int | None = None,
) -> OptimizerState:
    """One generation: mutate, cross over, evaluate, select, track the best.

    Index i draws its random numbers from a stream keyed by (seed,
    generation, i), so evaluation order and worker count cannot change the
    outcome. Replacement is strict: ties keep the incumbent.
    """
    n_p, d = config.population_size, config.dimension
    pop = state.population
    gen = state.generation + 1
    candidates = []
    for i in range(n_p):
        rng = _rng(state.seed, 2, gen, i)
        r1 = int(rng.integers(n_p))
        r2 = int(rng.integers(n_p))
        while r2 == r1:
            r2 = int(rng.integers(n_p))
        r3 = int(rng.integers(n_p))
        while r3 == r1 or r3 == r2:
            r3 = int(rng.integers(n_p))
        v = f_sat(pop[r1] + pop[r2] - pop[r3])
        keep_parent = rng.random(d) < config.crossover_prob
        v[keep_parent] = pop[i][keep_parent]
        candidates.append(v)

    cand_costs = _evaluate_many(candidates, state, config, workers)

    new_pop = pop.copy()
    new_costs = state.costs.copy()
    for i in range(n_p):
        if cand_costs[i] < state.costs[i]:
            new_pop[i] = candidates[i]
            new_costs[i] = cand_costs[i]
    best = int(np.argmin(new_costs))
    best_cost, best_vec = state.best_cost, state.best_vector
    if new_costs[best] < best_cost:
        best_cost = float(new_costs[best])
        best_vec = new_pop[best].copy()
    return OptimizerState(
        population=new_pop,
        costs=new_costs,
        best_vector=best_vec,
        best_cost=best_cost,
        generation=gen,
        seed=state.seed,
        spec_template=state.spec_template,
        memo=state.memo,
    )


@dataclass(frozen=True)
class OptimizationResult:
    dv: int
    dc: int
    profile: SmoothingProfile
    cost: float
    speed: float  # recomputed from the front-arrival count
    epsilon: float
    seed: int
    generations: int
    trace: tuple[float, ...]  # best cost after each generation


def optimize_profile(
    config: OptimizerConfig,
    dv: int,
    workers: int | None = None,
) -> OptimizationResult:
    """Run the full evolution for one variable-node degree."""
    dc = config.dc_ratio * dv
    template = EnsembleSpec(dv, dc, SmoothingProfile.uniform(config.w), config.L)
    state = sample_initial_population(config, template, workers)
    trace = [state.best_cost]
    for _ in range(config.generations):
        state = evolve(state, config, workers)
        trace.append(state.best_cost)
    profile = candidate_profile(state.best_vector)
    assert profile is not None  # feasible by construction
    final = front_arrival_speed(
        EnsembleSpec(dv, dc, profile, config.L), config.epsilon,
        max_iters=config.de_max_iters,
    )
    return OptimizationResult(
        dv=dv,
        dc=dc,
        profile=profile,
        cost=state.best_cost,
        speed=final.v,
        epsilon=config.epsilon,
        seed=config.seed,
        generations=config.generations,
        trace=tuple(trace),
    )


@dataclass(frozen=True)
class BestPerDegreeReport:
    results: tuple[OptimizationResult, ...]
    winner: OptimizationResult


def optimize_over_degrees(
    config: OptimizerConfig,
    workers: int | None = None,
) -> BestPerDegreeReport:
    """Run the optimizer for every candidate degree; keep the lowest cost.

    For w=2 the inner optimizer is the line search; differential evolution
    otherwise. Degrees that cannot decode at all are skipped; the report
    fails only if every degree is infeasible.
    """
    results = []
    for dv in config.dv_set:
        try:
            if config.w == 2:
                results.append(optimize_w2_alpha(dv, config.epsilon, config=config))
            else:
                results.append(optimize_profile(config, dv, workers))
        except InitializationError:
            continue
    if not results:
        raise InitializationError(
            f"no degree in {config.dv_set} decodes at epsilon={config.epsilon}"
        )
    winner = min(results, key=lambda r: r.cost)
    return BestPerDegreeReport(results=tuple(results), winner=winner)


def optimize_w2_alpha(
    dv: int,
    epsilon: float,
    grid_step: float = 0.005,
    config: OptimizerConfig | None = None,
) -> OptimizationResult:
    """Line search over the w=2 profile (alpha, 1-alpha), alpha in [0, 1/2].

    Grid scan at `grid_step` followed by one golden-section refinement pass
    inside the best grid bracket; returns the minimizer of the front-arrival
    cost. Restricting alpha to [0, 1/2] keeps the dominant front on the left.
    """
    if config is None:
        config = OptimizerConfig(w=2, epsilon=epsilon, dv_set=(dv,))
    dc = config.dc_ratio * dv
    L = config.L

    def cost_at(alpha: float) -> float:
        rep = front_arrival_cost(
            EnsembleSpec(dv, dc, SmoothingProfile((alpha, 1.0 - alpha)), L),
            epsilon, max_iters=config.de_max_iters,
        )
        return rep.cost if rep.feasible else math.inf

    alphas = np.arange(0.0, 0.5 + 1e-12, grid_step)
    costs = [cost_at(float(a)) for a in alphas]
    k = int(np.argmin(costs))
    best_alpha, best_cost = float(alphas[k]), costs[k]
    if not math.isfinite(best_cost):
        raise InitializationError(
            f"no alpha in [0, 0.5] decodes at epsilon={epsilon} for dv={dv}"
        )

    lo = float(alphas[max(0, k - 1)])
    hi = float(alphas[min(len(alphas) - 1, k + 1)])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = cost_at(c), cost_at(d)
    for _ in range(20):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = cost_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = cost_at(d)
    for alpha, cost in ((c, fc), (d, fd)):
        if cost < best_cost:
            best_alpha, best_cost = alpha, cost

    profile = SmoothingProfile((best_alpha, 1.0 - best_alpha))
    final = front_arrival_speed(EnsembleSpec(dv, dc, profile, L), epsilon,
                                max_iters=config.de_max_iters)
    return OptimizationResult(
        dv=dv,
        dc=dc,
        profile=profile,
        cost=best_cost,
        speed=final.v,
        epsilon=epsilon,
        seed=config.seed,
        generations=0,
        trace=(best_cost,),
    )
