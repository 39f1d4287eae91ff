"""Generational genetic algorithm over fixed-length binary genomes.

Defaults follow the settings used for SFQ sequence optimization: population
70, per-bit mutation 0.001, crossover 0.9, mating pool 64, 200000
generations, target fitness 0.9999 and one elite.
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal

import numpy as np

from .errors import InvalidConfig, LengthMismatch

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 70
    mutation_prob: float = 0.001
    crossover_prob: float = 0.9
    mating_pool: int = 64
    max_iterations: int = 200_000
    target_fitness: float = 0.9999
    elitism: int = 1
    seed: int = 0
    selection: Literal["roulette", "tournament"] = "roulette"
    crossover: Literal["single_point", "uniform"] = "single_point"
    tournament_size: int = 3

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        problems = []
        if self.population_size < 1:
            problems.append("population_size >= 1")
        if not 0 <= self.mutation_prob <= 1:
            problems.append("0 <= mutation_prob <= 1")
        if not 0 <= self.crossover_prob <= 1:
            problems.append("0 <= crossover_prob <= 1")
        if not 0 <= self.elitism < self.population_size:
            problems.append("0 <= elitism < population_size")
        if not 1 <= self.mating_pool <= self.population_size:
            problems.append("1 <= mating_pool <= population_size")
        if self.max_iterations < 0:
            problems.append("max_iterations >= 0")
        if not 0 <= self.seed < 2**64:
            problems.append("seed is an unsigned 64-bit integer")
        if self.selection not in ("roulette", "tournament"):
            problems.append("selection in {roulette, tournament}")
        if self.crossover not in ("single_point", "uniform"):
            problems.append("crossover in {single_point, uniform}")
        if self.tournament_size < 1:
            problems.append("tournament_size >= 1")
        if problems:
            raise InvalidConfig("invalid GA config: requires " + "; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GARun:
    best_genome: np.ndarray
    best_fitness: float
    history: list[tuple[int, float, float]]
    generations_used: int
    terminated_by: Literal["target_reached", "max_iterations"]
    fitness_calls: list[int] = field(default_factory=list)
    wall_time: float = 0.0


# -- operators ----------------------------------------------------------------

def select(population: np.ndarray, fitnesses, pool_size: int, rng: np.random.Generator,
           method: str = "roulette", tournament_size: int = 3) -> np.ndarray:
    """Indices of a mating pool of ``pool_size`` genomes, drawn with replacement.

    Roulette draws proportionally to fitness and falls back to uniform
    draws when every fitness is zero.
    """
    f = np.asarray(fitnesses, dtype=float)
    n = len(population)
    if pool_size > n:
        raise InvalidConfig("pool_size exceeds population size")
    if np.any(f < 0):
        raise ValueError("fitnesses must be non-negative")
    if method == "tournament":
        contenders = rng.integers(0, n, size=(pool_size, tournament_size))
        return contenders[np.arange(pool_size), np.argmax(f[contenders], axis=1)]
    total = f.sum()
    if total <= 0:
        return rng.integers(0, n, size=pool_size)
    cdf = np.cumsum(f / total)
    idx = np.searchsorted(cdf, rng.random(pool_size), side="right")
    return np.minimum(idx, n - 1)


def crossover_pairs(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, prob: float,
                    kind: str = "single_point", cuts=None):
    """Recombine row-aligned parent arrays of shape (pairs, N).

    Each pair recombines with probability ``prob``; single-point exchange
    swaps the tails after a cut drawn uniformly from ``[1, N-1]``, uniform
    exchange swaps each position with probability 1/2.
    """
    if a.shape != b.shape:
        raise LengthMismatch(f"parent lengths differ: {a.shape} vs {b.shape}")
    pairs, n = a.shape
    active = rng.random(pairs) < prob
    if n < 2:
        active[:] = False
    if kind == "uniform":
        mask = rng.random((pairs, n)) < 0.5
    else:
        if cuts is None:
            cuts = rng.integers(1, max(n, 2), size=pairs)
        mask = np.arange(n)[None, :] >= np.asarray(cuts).reshape(-1, 1)
    mask &= active[:, None]
    return np.where(mask, b, a), np.where(mask, a, b)


def crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, prob: float,
              kind: str = "single_point", cut: int | None = None):
    """Recombine two parents into two new children (parents are not modified)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"parent lengths differ: {a.shape} vs {b.shape}")
    c1, c2 = crossover_pairs(a[None], b[None], rng, prob, kind,
                             None if cut is None else [cut])
    return c1[0], c2[0]


def _flip_positions(size: int, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Positions of a Bernoulli(prob) process on ``[0, size)``, via geometric gaps."""
    if prob <= 0 or size == 0:
        return np.empty(0, dtype=np.int64)
    if prob >= 1:
        return np.arange(size)
    expected = size * prob
    chunk = int(expected + 6 * np.sqrt(expected) + 16)
    steps = rng.geometric(prob, size=chunk)
    pos = np.cumsum(steps) - 1
    while pos[-1] < size:
        more = np.cumsum(rng.geometric(prob, size=chunk)) + pos[-1]
        pos = np.concatenate([pos, more])
    return pos[pos < size]


def mutate(genome: np.ndarray, rng: np.random.Generator, per_bit_prob: float) -> np.ndarray:
    """Copy of ``genome`` (any shape) with each bit flipped independently."""
    if not 0 <= per_bit_prob <= 1:
        raise ValueError("per_bit_prob must lie in [0, 1]")
    out = np.array(genome, dtype=np.uint8, copy=True)
    flat = out.reshape(-1)
    flat[_flip_positions(flat.size, per_bit_prob, rng)] ^= 1
    return out


# -- engine -------------------------------------------------------------------

def initial_population(seed_genome: np.ndarray, config: GAConfig,
                       rng: np.random.Generator) -> np.ndarray:
    """The seed genome plus mutated copies of it."""
    pop = np.tile(np.asarray(seed_genome, dtype=np.uint8), (config.population_size, 1))
    if config.population_size > 1:
        pop[1:] = mutate(pop[1:], rng, config.mutation_prob)
    return pop


def _batch_fitness(fitness_fn):
    batch = getattr(fitness_fn, "batch", None)
    if batch is not None:
        return batch
    return lambda pop: np.array([fitness_fn(g) for g in pop], dtype=float)


def optimize(initial, fitness_fn: Callable, config: GAConfig = GAConfig(),
             callback: Callable | None = None, log_every: int = 0) -> GARun:
    """Maximize ``fitness_fn`` over bit strings of the initial genome's length.

    ``fitness_fn`` maps a uint8 genome to a fitness in [0, 1]; if it has a
    ``batch`` method taking a (P, N) array, that is used instead.
    ``callback(generation, population, fitnesses)`` is called once per
    evaluated generation. Each
    generation evaluates only genomes not already scored in the previous
    generation, so elites are never re-evaluated.

    Stops once the best fitness exceeds ``config.target_fitness`` or after
    ``config.max_iterations`` generations of reproduction.
    """
    config.validate()
    seed_bits = np.asarray(getattr(initial, "bits", initial), dtype=np.uint8).ravel()
    if seed_bits.size < 1:
        raise InvalidConfig("initial genome must have at least one bit")
    rng = np.random.default_rng(config.seed)
    evaluate = _batch_fitness(fitness_fn)
    start = time.perf_counter()

    pop = initial_population(seed_bits, config, rng)
    cache: dict[bytes, float] = {}
    history: list[tuple[int, float, float]] = []
    calls: list[int] = []
    n_children = config.population_size - config.elitism
    generation = 0
    while True:
        keys = [g.tobytes() for g in pop]
        fit = np.empty(len(pop))
        todo = {}
        for i, k in enumerate(keys):
            if k not in cache and k not in todo:
                todo[k] = i
        if todo:
            fit_new = evaluate(pop[list(todo.values())])
            for k, f in zip(todo, fit_new):
                cache[k] = float(f)
        calls.append(len(todo))
        for i, k in enumerate(keys):
            fit[i] = cache[k]
        cache = {k: cache[k] for k in keys}

        best = int(np.argmax(fit))
        history.append((generation, float(fit[best]), float(fit.mean())))
        if callback is not None:
            callback(generation, pop, fit)
        if log_every and generation % log_every == 0:
            log.info("generation %d: best error %.3e", generation, 1 - fit[best])
        if fit[best] > config.target_fitness:
            terminated = "target_reached"
            break
        if generation >= config.max_iterations:
            terminated = "max_iterations"
            break

        order = np.argsort(-fit, kind="stable")
        elites = pop[order[: config.elitism]]
        pool = select(pop, fit, config.mating_pool, rng, config.selection,
                      config.tournament_size)
        n_pairs = (n_children + 1) // 2
        slots = np.arange(2 * n_pairs) % len(pool)
        c1, c2 = crossover_pairs(pop[pool[slots[0::2]]], pop[pool[slots[1::2]]], rng,
                                 config.crossover_prob, config.crossover)
        children = np.empty((2 * n_pairs, pop.shape[1]), dtype=np.uint8)
        children[0::2] = c1
        children[1::2] = c2
        children = children[:n_children]
        children = mutate(children, rng, config.mutation_prob)
        pop = np.concatenate([elites, children])
        generation += 1

    return GARun(
        best_genome=pop[best].copy(),
        best_fitness=float(fit[best]),
        history=history,
        generations_used=generation,
        terminated_by=terminated,
        fitness_calls=calls,
        wall_time=time.perf_counter() - start,
    )
