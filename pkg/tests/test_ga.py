import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from sfqcontrol.errors import InvalidConfig, LengthMismatch
from sfqcontrol.ga import GAConfig, crossover, mutate, optimize, select


class OneMax:
    def __init__(self):
        self.calls = 0

    def __call__(self, genome):
        self.calls += 1
        return float(np.mean(genome))


def test_table_defaults():
    c = GAConfig()
    assert (c.population_size, c.mutation_prob, c.crossover_prob, c.mating_pool,
            c.max_iterations, c.target_fitness, c.elitism) == (70, 0.001, 0.9, 64, 200_000, 0.9999, 1)
    assert (c.selection, c.crossover) == ("roulette", "single_point")


@pytest.mark.parametrize("kwargs", [
    {"mutation_prob": 1.5}, {"crossover_prob": -0.1}, {"elitism": 70},
    {"mating_pool": 71}, {"max_iterations": -1}, {"selection": "rank"},
    {"crossover": "two_point"}, {"seed": -1},
])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfig):
        GAConfig(**kwargs)


def test_onemax_converges():
    run = optimize(np.zeros(64, dtype=np.uint8), OneMax(), GAConfig(seed=4, target_fitness=0.999))
    assert run.best_fitness == 1.0
    assert run.generations_used <= 2000
    assert run.terminated_by == "target_reached"


def test_zero_budget_returns_initial_population_best():
    run = optimize(np.zeros(32, dtype=np.uint8), OneMax(), GAConfig(max_iterations=0))
    assert run.terminated_by == "max_iterations"
    assert len(run.history) == 1 and run.generations_used == 0


def test_elitist_monotone_and_length_preserved():
    lengths = set()
    run = optimize(np.zeros(48, dtype=np.uint8), OneMax(),
                   GAConfig(seed=2, max_iterations=300, mutation_prob=0.01),
                   callback=lambda g, pop, fit: lengths.add(pop.shape[1]))
    best = [h[1] for h in run.history]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    assert lengths == {48}


def test_determinism():
    cfg = GAConfig(seed=123, max_iterations=200, mutation_prob=0.01)
    a = optimize(np.zeros(40, dtype=np.uint8), OneMax(), cfg)
    b = optimize(np.zeros(40, dtype=np.uint8), OneMax(), cfg)
    assert a.history == b.history
    assert np.array_equal(a.best_genome, b.best_genome)


def test_fitness_call_accounting():
    fn = OneMax()
    cfg = GAConfig(seed=5, max_iterations=100, mutation_prob=0.02)
    run = optimize(np.zeros(30, dtype=np.uint8), fn, cfg)
    assert run.fitness_calls[0] <= cfg.population_size
    assert all(c <= cfg.population_size - cfg.elitism for c in run.fitness_calls[1:])
    assert fn.calls == sum(run.fitness_calls)


def test_best_genome_fitness_matches():
    fn = OneMax()
    run = optimize(np.zeros(30, dtype=np.uint8), fn, GAConfig(seed=9, max_iterations=50))
    assert fn(run.best_genome) == run.best_fitness


# -- operators -----------------------------------------------------------------

def test_select_uniform_when_fitness_equal():
    rng = np.random.default_rng(0)
    pop = np.zeros((10, 4), dtype=np.uint8)
    idx = np.concatenate([select(pop, np.full(10, 0.7), 10, rng) for _ in range(10_000)])
    assert chisquare(np.bincount(idx, minlength=10)).pvalue > 0.01


def test_select_degenerate_weights():
    pop = np.zeros((5, 3), dtype=np.uint8)
    idx = select(pop, [0, 0, 1, 0, 0], 5, np.random.default_rng(1))
    assert set(idx) == {2}


def test_select_all_zero_falls_back_to_uniform():
    rng = np.random.default_rng(2)
    pop = np.zeros((4, 3), dtype=np.uint8)
    idx = np.concatenate([select(pop, np.zeros(4), 4, rng) for _ in range(5000)])
    assert chisquare(np.bincount(idx, minlength=4)).pvalue > 0.01


def test_select_proportional():
    rng = np.random.default_rng(3)
    pop = np.zeros((2, 3), dtype=np.uint8)
    idx = np.concatenate([select(pop, [1.0, 3.0], 1, rng) for _ in range(10_000)])
    assert abs(np.mean(idx == 0) - 0.25) < 0.02


def test_tournament_prefers_fitter():
    rng = np.random.default_rng(4)
    pop = np.zeros((3, 2), dtype=np.uint8)
    idx = select(pop, [0.1, 0.2, 0.9], 3, rng, method="tournament", tournament_size=3)
    assert len(idx) == 3


def test_crossover_identical_parents():
    rng = np.random.default_rng(0)
    a = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    for _ in range(20):
        c1, c2 = crossover(a, a.copy(), rng, 1.0)
        assert np.array_equal(c1, a) and np.array_equal(c2, a)


def test_crossover_single_point_definition():
    a = np.zeros(4, dtype=np.uint8)
    b = np.ones(4, dtype=np.uint8)
    c1, c2 = crossover(a, b, np.random.default_rng(0), 1.0, cut=2)
    assert c1.tolist() == [0, 0, 1, 1] and c2.tolist() == [1, 1, 0, 0]


def test_crossover_probability_zero_returns_parents():
    a = np.zeros(6, dtype=np.uint8)
    b = np.ones(6, dtype=np.uint8)
    c1, c2 = crossover(a, b, np.random.default_rng(0), 0.0)
    assert np.array_equal(c1, a) and np.array_equal(c2, b)


def test_crossover_length_mismatch():
    with pytest.raises(LengthMismatch):
        crossover(np.zeros(3), np.zeros(4), np.random.default_rng(0), 1.0)


def test_crossover_conserves_bits_per_position():
    rng = np.random.default_rng(7)
    for kind in ("single_point", "uniform"):
        for _ in range(5000):
            a = rng.integers(0, 2, 12).astype(np.uint8)
            b = rng.integers(0, 2, 12).astype(np.uint8)
            c1, c2 = crossover(a, b, rng, 0.9, kind)
            assert np.array_equal(c1.astype(int) + c2, a.astype(int) + b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 64))
def test_crossover_cut_in_range(seed, n):
    a = np.zeros(n, dtype=np.uint8)
    b = np.ones(n, dtype=np.uint8)
    c1, _ = crossover(a, b, np.random.default_rng(seed), 1.0)
    # a single cut in [1, n-1] leaves a non-empty prefix of a and suffix of b
    assert c1[0] == 0 and c1[-1] == 1 and np.all(np.diff(c1.astype(int)) >= 0)


def test_mutate_extremes():
    rng = np.random.default_rng(0)
    g = rng.integers(0, 2, 100).astype(np.uint8)
    assert np.array_equal(mutate(g, rng, 0.0), g)
    assert np.array_equal(mutate(g, rng, 1.0), 1 - g)


def test_mutate_does_not_modify_input():
    g = np.zeros(50, dtype=np.uint8)
    mutate(g, np.random.default_rng(0), 0.5)
    assert not g.any()


def test_mutation_rate():
    rng = np.random.default_rng(42)
    g = np.zeros((10_000, 2000), dtype=np.uint8)
    flips = mutate(g, rng, 0.001).sum(axis=1)
    assert abs(flips.mean() - 2.0) < 0.15
    assert abs(flips.var() - 2000 * 0.001 * 0.999) < 0.2


def test_mutation_positions_uniform():
    rng = np.random.default_rng(8)
    g = np.zeros((20_000, 10), dtype=np.uint8)
    counts = mutate(g, rng, 0.05).sum(axis=0)
    assert chisquare(counts).pvalue > 0.01
