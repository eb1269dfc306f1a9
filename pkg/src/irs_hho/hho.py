"""Harris Hawks Optimizer for box-bounded maximization of a black-box fitness.

The population is updated synchronously: every hawk moves from the
iteration-``t`` population, using the rabbit (best position seen so far) and
the population mean taken before any hawk moves.

Randomness comes from one ``numpy`` substream per iteration, keyed by
``(rng_seed, t)``.  Every draw in an iteration is made up front as a block with
one row per hawk, so the result does not depend on the order (or concurrency)
in which fitness values are computed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Objective = Callable[[np.ndarray], float]

EXPLORATION = 0
SOFT_BESIEGE = 1
HARD_BESIEGE = 2
SOFT_DIVE = 3
HARD_DIVE = 4

BRANCH_NAMES = {
    EXPLORATION: "exploration",
    SOFT_BESIEGE: "soft_besiege",
    HARD_BESIEGE: "hard_besiege",
    SOFT_DIVE: "soft_dive",
    HARD_DIVE: "hard_dive",
}


@dataclass(frozen=True)
class HhoConfig:
    """Population size, iteration budget, search box and Lévy parameters.

    ``periodic`` optionally flags coordinates that are angles: those wrap
    around their box instead of being clamped to it.
    """

    population_size: int
    max_iterations: int
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    levy_beta: float = 1.5
    levy_scale: float = 0.01
    rng_seed: int = 0
    periodic: Optional[np.ndarray] = None

    def __post_init__(self):
        lb = np.atleast_1d(np.asarray(self.lower_bounds, dtype=float))
        ub = np.atleast_1d(np.asarray(self.upper_bounds, dtype=float))
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "upper_bounds", ub)
        if self.periodic is not None:
            periodic = np.asarray(self.periodic, dtype=bool)
            if periodic.shape != lb.shape:
                raise ValueError("periodic mask must match the bounds' length")
            object.__setattr__(self, "periodic", periodic if periodic.any() else None)
        if int(self.population_size) < 2:
            raise ValueError("population_size must be >= 2")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if lb.ndim != 1 or lb.shape != ub.shape:
            raise ValueError("lower and upper bounds must be 1-D vectors of equal length")
        if not np.all(lb < ub):
            raise ValueError("every lower bound must be strictly below its upper bound")
        if not 0.0 < self.levy_beta <= 2.0:
            raise ValueError("levy_beta must lie in (0, 2]")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def dimension(self) -> int:
        return self.lower_bounds.size


@dataclass
class Agent:
    position: np.ndarray
    fitness: float = float("nan")
    evaluated: bool = False


@dataclass
class OptimizerState:
    """Mutable optimizer state.  Positions and fitness values are stored as arrays."""

    iteration: int
    positions: np.ndarray
    fitness: np.ndarray
    rabbit_position: np.ndarray
    rabbit_fitness: float
    trace: list = field(default_factory=list)
    evaluations: int = 0
    branch_counts: dict = field(default_factory=lambda: {name: 0 for name in BRANCH_NAMES.values()})

    @property
    def population(self) -> list:
        return [Agent(p.copy(), float(f), True) for p, f in zip(self.positions, self.fitness)]

    @property
    def rabbit(self) -> Agent:
        return Agent(self.rabbit_position.copy(), self.rabbit_fitness, True)


@dataclass
class OptimizeResult:
    best_position: np.ndarray
    best_fitness: float
    trace: np.ndarray
    evaluations: int
    wall_time: float
    branch_counts: dict


def iteration_rng(seed: int, t: int) -> np.random.Generator:
    """Substream used for iteration ``t`` (``t = 0`` is the initialization)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(t),))))


def make_evaluator(objective: Callable, batch: bool = False) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap ``objective`` so it maps a ``(k, D)`` block to ``k`` fitness values.

    With ``batch=True`` the objective already accepts the whole block.
    """
    if batch:
        def evaluate(block):
            return np.asarray(objective(block), dtype=float).reshape(len(block))
    else:
        def evaluate(block):
            return np.fromiter((objective(x) for x in block), dtype=float, count=len(block))
    return evaluate


def escaping_energy(e0, t, T):
    """Escaping energy ``2 * E0 * (1 - t / T)``."""
    return 2.0 * e0 * (1.0 - t / T)


def select_branch(energy, r):
    """Map escaping energy and escape probability to a branch code.

    Works elementwise on arrays.  ``|E| >= 1`` explores; otherwise ``r`` picks
    besiege (``r >= 0.5``) or rapid dives (``r < 0.5``) and ``|E| >= 0.5`` picks
    the soft variant.
    """
    a = np.abs(energy)
    r = np.asarray(r)
    return np.select(
        [a >= 1.0, (r >= 0.5) & (a >= 0.5), r >= 0.5, a >= 0.5],
        [EXPLORATION, SOFT_BESIEGE, HARD_BESIEGE, SOFT_DIVE],
        default=HARD_DIVE,
    )


def clamp(x, lb, ub, periodic=None):
    """Project onto the box; ``periodic`` coordinates wrap modulo the box width."""
    if periodic is None:
        return np.minimum(np.maximum(x, lb), ub)
    lb = np.broadcast_to(lb, np.shape(periodic))
    ub = np.broadcast_to(ub, np.shape(periodic))
    wrapped = lb + np.mod(x - lb, ub - lb)
    return np.where(periodic, np.minimum(wrapped, ub), np.minimum(np.maximum(x, lb), ub))


def exploration_step(x, x_rand, x_mean, x_rabbit, lb, ub, q, r1, r2, r3, r4, periodic=None):
    """Perching update used while ``|E| >= 1``.

    ``q >= 0.5`` perches relative to a random hawk, otherwise relative to the
    rabbit and the population mean.  Scalars may be per-row arrays of shape
    ``(k, 1)`` when ``x`` is a ``(k, D)`` block.
    """
    by_member = x_rand - r1 * np.abs(x_rand - 2.0 * r2 * x)
    by_rabbit = (x_rabbit - x_mean) - r3 * (lb + r4 * (ub - lb))
    return clamp(np.where(q >= 0.5, by_member, by_rabbit), lb, ub, periodic)


def soft_besiege(x, x_rabbit, energy, jump, lb, ub, periodic=None):
    return clamp((x_rabbit - x) - energy * np.abs(jump * x_rabbit - x), lb, ub, periodic)


def hard_besiege(x, x_rabbit, energy, lb, ub, periodic=None):
    return clamp(x_rabbit - energy * np.abs(x_rabbit - x), lb, ub, periodic)


def mantegna_sigma(beta: float) -> float:
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def levy_flight(size, beta: float = 1.5, scale: float = 0.01, rng: Optional[np.random.Generator] = None):
    """Lévy-distributed steps drawn with Mantegna's algorithm.

    Args:
        size: Output shape (an int ``D`` gives a length-``D`` vector).
        beta: Stability index in (0, 2].
        scale: Multiplier applied to every step.
        rng: Source of the two standard-normal draws.

    Returns:
        ``scale * u * sigma / |v| ** (1 / beta)`` with ``u``, ``v`` ~ N(0, 1).
    """
    if not 0.0 < beta <= 2.0:
        raise ValueError("beta must lie in (0, 2]")
    rng = np.random.default_rng() if rng is None else rng
    u = rng.standard_normal(size)
    v = rng.standard_normal(size)
    return scale * u * mantegna_sigma(beta) / np.abs(v) ** (1.0 / beta)


def _dive(x, fx, x_rabbit, reference, energy, jump, step, lb, ub, evaluate, periodic=None):
    """Rapid dive for a block of hawks; returns (positions, fitness, evaluations)."""
    y = clamp(x_rabbit - energy * np.abs(jump * x_rabbit - reference), lb, ub, periodic)
    fy = evaluate(y)
    out_x = x.copy()
    out_f = fx.copy()
    take_y = fy > fx
    out_x[take_y] = y[take_y]
    out_f[take_y] = fy[take_y]
    rest = ~take_y
    n_evals = len(y)
    if rest.any():
        z = clamp(y[rest] + step[rest], lb, ub, periodic)
        fz = evaluate(z)
        n_evals += len(z)
        take_z = fz > fx[rest]
        idx = np.flatnonzero(rest)[take_z]
        out_x[idx] = z[take_z]
        out_f[idx] = fz[take_z]
    return out_x, out_f, n_evals


def dive_step(x, fx, x_rabbit, reference, energy, jump, step, lb, ub, objective, periodic=None):
    """Progressive rapid dive for a single hawk.

    ``Y`` moves toward the rabbit relative to ``reference`` (the hawk itself
    for the soft dive, the population mean for the hard dive) and ``Z = Y +
    step``, where ``step`` is the random-weighted Lévy vector.  ``Y`` is taken if
    it beats ``fx``, else ``Z`` if it does, else the hawk stays put.

    Returns:
        Tuple ``(position, fitness, evaluations)``.
    """
    evaluate = make_evaluator(objective)
    x = np.asarray(x, dtype=float)[None, :]
    ref = np.asarray(reference, dtype=float)[None, :]
    pos, fit, n = _dive(x, np.array([float(fx)]), np.asarray(x_rabbit, dtype=float), ref,
                        energy, jump, np.asarray(step, dtype=float)[None, :], lb, ub, evaluate, periodic)
    return pos[0], float(fit[0]), n


def initialize_population(config: HhoConfig, objective: Callable, seeds: Optional[Sequence] = None,
                          batch: bool = False) -> OptimizerState:
    lb, ub = config.lower_bounds, config.upper_bounds
    q, d = config.population_size, config.dimension
    seeds = [] if seeds is None else [np.asarray(s, dtype=float).ravel() for s in seeds]
    if len(seeds) > q:
        raise ValueError(f"{len(seeds)} seed positions exceed population size {q}")
    for s in seeds:
        if s.size != d:
            raise ValueError(f"seed position has length {s.size}, bounds have length {d}")
        if np.any(s < lb) or np.any(s > ub):
            raise ValueError("seed position lies outside the search box")
    rng = iteration_rng(config.rng_seed, 0)
    positions = lb + rng.random((q, d)) * (ub - lb)
    for i, s in enumerate(seeds):
        positions[i] = s
    fitness = make_evaluator(objective, batch)(positions)
    best = int(np.argmax(fitness))
    return OptimizerState(
        iteration=0,
        positions=positions,
        fitness=fitness,
        rabbit_position=positions[best].copy(),
        rabbit_fitness=float(fitness[best]),
        evaluations=q,
    )


def step(state: OptimizerState, objective: Callable, config: HhoConfig, batch: bool = False) -> OptimizerState:
    """Advance the population by one iteration (in place) and return the state."""
    evaluate = make_evaluator(objective, batch)
    lb, ub, per = config.lower_bounds, config.upper_bounds, config.periodic
    q, d = state.positions.shape
    t = state.iteration
    rng = iteration_rng(config.rng_seed, t + 1)

    # fixed draw layout: row i of every block belongs to hawk i
    e0 = rng.uniform(-1.0, 1.0, q)
    jump = 2.0 * (1.0 - rng.random(q))
    escape = rng.random(q)
    qs, r1, r2, r3, r4 = rng.random((5, q, 1))
    rand_idx = rng.integers(0, q, q)
    weights = rng.random((q, d))
    levy = levy_flight((q, d), config.levy_beta, config.levy_scale, rng)

    energy = escaping_energy(e0, t, config.max_iterations)
    branch = select_branch(energy, escape)
    x = state.positions
    fx = state.fitness
    x_rabbit = state.rabbit_position
    x_mean = x.mean(axis=0)
    e_col = energy[:, None]
    j_col = jump[:, None]

    new_x = x.copy()
    new_f = fx.copy()

    m = branch == EXPLORATION
    new_x[m] = exploration_step(x[m], x[rand_idx[m]], x_mean, x_rabbit, lb, ub,
                                qs[m], r1[m], r2[m], r3[m], r4[m], per)
    m = branch == SOFT_BESIEGE
    new_x[m] = soft_besiege(x[m], x_rabbit, e_col[m], j_col[m], lb, ub, per)
    m = branch == HARD_BESIEGE
    new_x[m] = hard_besiege(x[m], x_rabbit, e_col[m], lb, ub, per)

    moved = branch <= HARD_BESIEGE
    n_evals = 0
    if moved.any():
        new_f[moved] = evaluate(new_x[moved])
        n_evals += int(moved.sum())

    step_vec = weights * levy
    for code, soft in ((SOFT_DIVE, True), (HARD_DIVE, False)):
        m = branch == code
        if not m.any():
            continue
        ref = x[m] if soft else np.broadcast_to(x_mean, (int(m.sum()), d))
        new_x[m], new_f[m], n = _dive(x[m], fx[m], x_rabbit, ref, e_col[m], j_col[m],
                                      step_vec[m], lb, ub, evaluate, per)
        n_evals += n

    counts = np.bincount(branch, minlength=5)
    for code, name in BRANCH_NAMES.items():
        state.branch_counts[name] += int(counts[code])

    state.positions = new_x
    state.fitness = new_f
    best = int(np.argmax(new_f))
    if new_f[best] > state.rabbit_fitness:
        state.rabbit_position = new_x[best].copy()
        state.rabbit_fitness = float(new_f[best])
    state.trace.append(state.rabbit_fitness)
    state.evaluations += n_evals
    state.iteration = t + 1
    return state


def optimize(config: HhoConfig, objective: Callable, seeds: Optional[Sequence] = None,
             batch: bool = False, callback: Optional[Callable[[OptimizerState], None]] = None) -> OptimizeResult:
    """Maximize ``objective`` over the configured box.

    Args:
        config: Optimizer settings.
        objective: Fitness function ``x -> float`` (or ``(k, D) -> (k,)`` with ``batch``).
        seeds: Positions placed verbatim in the initial population.
        batch: Whether ``objective`` evaluates whole blocks at once.
        callback: Called with the state after every iteration.

    Returns:
        Best-so-far position and fitness, the per-iteration trace, the number
        of objective evaluations and the wall time.
    """
    start = time.perf_counter()
    state = initialize_population(config, objective, seeds, batch)
    for _ in range(config.max_iterations):
        step(state, objective, config, batch)
        if callback is not None:
            callback(state)
    return OptimizeResult(
        best_position=state.rabbit_position,
        best_fitness=state.rabbit_fitness,
        trace=np.asarray(state.trace),
        evaluations=state.evaluations,
        wall_time=time.perf_counter() - start,
        branch_counts=dict(state.branch_counts),
    )
