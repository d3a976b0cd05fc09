"""Generation loop: evaluate, select, cross over, mutate, record statistics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .env import ConfigError, WorldConfig
from .fastsim import EpisodeRunner
from .genome import Genome, InnovationTracker, MutationParams, compile_genome, crossover, initial_genome, mutate

# Survival frames enter fitness at this scale so they only break ties between
# equal pipe counts.
SURVIVAL_WEIGHT = 1e-6


class Selection(enum.Enum):
    FITNESS_PROPORTIONATE = "proportionate"
    TOURNAMENT = "tournament"


class SeedPolicy(enum.Enum):
    FIXED_PER_GENERATION = "per-generation"
    FIXED_GLOBAL = "global"


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 100
    generations: int = 50
    elitism_count: int = 2
    selection: Selection = Selection.FITNESS_PROPORTIONATE
    tournament_k: int = 3
    mutation_params: MutationParams = field(default_factory=MutationParams)
    episode_seed_policy: SeedPolicy = SeedPolicy.FIXED_PER_GENERATION
    master_seed: int = 0
    episodes_per_genome: int = 1

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.population_size < 2:
            raise ConfigError("population_size", "must be >= 2")
        if self.generations < 1:
            raise ConfigError("generations", "must be >= 1")
        if not 0 <= self.elitism_count < self.population_size:
            raise ConfigError("elitism_count", "must satisfy 0 <= elitism_count < population_size")
        if self.tournament_k < 1:
            raise ConfigError("tournament_k", "must be >= 1")
        if self.episodes_per_genome < 1:
            raise ConfigError("episodes_per_genome", "must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be a 64-bit unsigned integer")

    def episode_seed(self, generation: int) -> int:
        """Pipe-sequence seed shared by every agent of ``generation``."""
        g = 0 if self.episode_seed_policy is SeedPolicy.FIXED_GLOBAL else generation
        state = np.random.SeedSequence([self.master_seed, g]).generate_state(1, np.uint64)
        return int(state[0])


@dataclass(frozen=True)
class GenerationStats:
    generation_index: int
    max_score: float
    average_score: float
    average_fitness: float
    best_fitness: float
    episode_seed: int
    best_genome_snapshot: Genome


@dataclass(frozen=True)
class RunResult:
    stats: tuple[GenerationStats, ...]
    champion: Genome
    champion_seed: int
    champion_score: float
    evo_config: EvolutionConfig
    world_config: WorldConfig


def init_population(
    config: EvolutionConfig, rng: np.random.Generator, tracker: InnovationTracker | None = None
) -> list[Genome]:
    config.validate()
    tracker = tracker if tracker is not None else InnovationTracker()
    return [initial_genome(rng, tracker) for _ in range(config.population_size)]


def evaluate_population(
    pop: Sequence[Genome],
    world_config: WorldConfig,
    episode_seed: int,
    episodes: int = 1,
    cache: dict | None = None,
) -> list[tuple[float, float]]:
    """``(fitness, score)`` per genome, in population order.

    Every genome plays the same pipe sequence(s). Fitness is pipes crossed
    plus ``frames * 1e-6``; score is pipes crossed alone. With several
    episodes both are averaged, episode ``j`` using seed ``episode_seed + j``.
    """
    runners = [EpisodeRunner(world_config, (episode_seed + j) % 2**64) for j in range(episodes)]
    out = []
    for genome in pop:
        key = (genome.structure(), episode_seed, episodes)
        if cache is not None and key in cache:
            out.append(cache[key])
            continue
        net = compile_genome(genome)
        results = [r.run_compiled(net) for r in runners]
        score = sum(r.score for r in results) / episodes
        frames = sum(r.frames for r in results) / episodes
        value = (score + frames * SURVIVAL_WEIGHT, float(score))
        if cache is not None:
            cache[key] = value
        out.append(value)
    return out


def _ranking(fitnesses: Sequence[float]) -> list[int]:
    return sorted(range(len(fitnesses)), key=lambda i: (-fitnesses[i], i))


def _select(fitnesses: np.ndarray, config: EvolutionConfig, rng: np.random.Generator) -> int:
    n = len(fitnesses)
    if config.selection is Selection.TOURNAMENT:
        k = min(config.tournament_k, n)
        entrants = rng.choice(n, size=k, replace=False)
        return int(min(entrants, key=lambda i: (-fitnesses[i], i)))
    total = fitnesses.sum()
    if total <= 0:
        return int(rng.integers(n))
    return int(rng.choice(n, p=fitnesses / total))


def next_generation(
    pop: Sequence[Genome],
    fitnesses: Sequence[float],
    config: EvolutionConfig,
    rng: np.random.Generator,
    tracker: InnovationTracker | None = None,
) -> list[Genome]:
    """Elites survive verbatim; the rest are mutated children of two selected parents."""
    if len(pop) != len(fitnesses):
        raise ValueError("population and fitnesses differ in length")
    tracker = tracker if tracker is not None else InnovationTracker.from_population(pop)
    scored = [g.with_fitness(float(f)) for g, f in zip(pop, fitnesses)]
    weights = np.clip(np.asarray(fitnesses, dtype=np.float64), 0.0, None)

    nxt = [scored[i] for i in _ranking(fitnesses)[: config.elitism_count]]
    while len(nxt) < config.population_size:
        a = scored[_select(weights, config, rng)]
        b = scored[_select(weights, config, rng)]
        child = crossover(a, b, rng)
        nxt.append(mutate(child, rng, config.mutation_params, tracker))
    return nxt


def run_evolution(evo_config: EvolutionConfig, world_config: WorldConfig) -> RunResult:
    evo_config.validate()
    world_config.validate()
    rng = np.random.default_rng(evo_config.master_seed)
    tracker = InnovationTracker()
    pop = init_population(evo_config, rng, tracker)
    cache: dict = {}

    stats = []
    champion: Genome | None = None
    champion_seed = 0
    for gen in range(evo_config.generations):
        seed = evo_config.episode_seed(gen)
        results = evaluate_population(pop, world_config, seed, evo_config.episodes_per_genome, cache)
        fitnesses = [f for f, _ in results]
        scores = [s for _, s in results]
        best = _ranking(fitnesses)[0]
        best_genome = pop[best].with_fitness(fitnesses[best])
        stats.append(
            GenerationStats(
                generation_index=gen,
                max_score=max(scores),
                average_score=sum(scores) / len(scores),
                average_fitness=sum(fitnesses) / len(fitnesses),
                best_fitness=fitnesses[best],
                episode_seed=seed,
                best_genome_snapshot=best_genome,
            )
        )
        if champion is None or fitnesses[best] > champion.fitness:
            champion, champion_seed = best_genome, seed
        if gen + 1 < evo_config.generations:
            pop = next_generation(pop, fitnesses, evo_config, rng, tracker)
        if evo_config.episode_seed_policy is SeedPolicy.FIXED_PER_GENERATION:
            cache.clear()

    assert champion is not None
    champion_score = EpisodeRunner(world_config, champion_seed).run(champion).score
    return RunResult(
        stats=tuple(stats),
        champion=champion,
        champion_seed=champion_seed,
        champion_score=float(champion_score),
        evo_config=evo_config,
        world_config=world_config,
    )
