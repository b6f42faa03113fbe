"""Generational loop: batch -> fitness -> tournament -> crossover -> mutation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from ..audio import ToneRanges
from ..data import Sample
from ..errors import ConfigError, OracleUnavailable
from .fitness import Evaluator, FitnessRecord
from .genome import EonGenome, init_population
from .operators import crossover, mutate, tournament_indices

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GpConfig:
    population_size: int = 50
    generations: int = 10
    tournament_size: int = 3
    p_crossover: float = 0.5
    p_mutation: float = 0.1
    bonus: float = 50.0
    batch_size: int = 32
    confidence_threshold: float = 0.7
    n_tones: int = 3
    n_finalists: int = 5
    ranges: ToneRanges = field(default_factory=ToneRanges)
    workers: int = 1

    def __post_init__(self):
        problems = []
        if self.tournament_size < 2:
            problems.append("tournament_size must be >= 2")
        if self.population_size < self.tournament_size:
            problems.append("population_size must be >= tournament_size")
        for name in ("p_crossover", "p_mutation"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must lie in [0, 1]")
        if self.bonus < 0:
            problems.append("bonus must be >= 0")
        if self.generations < 0 or self.batch_size < 1 or self.n_tones < 1 or self.n_finalists < 1:
            problems.append("generations >= 0, batch_size >= 1, n_tones >= 1 and n_finalists >= 1 are required")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems))

    @classmethod
    def from_mapping(cls, data: dict | None, **overrides) -> "GpConfig":
        data = {**(data or {}), **overrides}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown gp settings: {sorted(unknown)}")
        if "ranges" in data and not isinstance(data["ranges"], ToneRanges):
            data["ranges"] = ToneRanges.from_dict(data["ranges"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


class HallOfFame:
    """Best distinct genomes ever evaluated, by fitness. Record-keeping only."""

    def __init__(self, size: int):
        self.size = size
        self.entries: list[tuple[float, EonGenome]] = []

    def update(self, population: Sequence[EonGenome], fitnesses: Sequence[float]) -> None:
        seen = {g.key() for _, g in self.entries}
        for genome, fit in zip(population, fitnesses):
            if genome.key() in seen:
                continue
            if len(self.entries) < self.size or fit > self.entries[-1][0]:
                self.entries.append((fit, genome))
                seen.add(genome.key())
                # stable: earlier entries win ties
                self.entries.sort(key=lambda e: -e[0])
                if len(self.entries) > self.size:
                    dropped = self.entries.pop()
                    seen.discard(dropped[1].key())

    @property
    def best_fitness(self) -> float:
        return self.entries[0][0] if self.entries else float("-inf")

    @property
    def genomes(self) -> list[EonGenome]:
        return [g for _, g in self.entries]


@dataclass
class Finalist:
    genome: EonGenome
    validation_esr: float
    validation_fitness: float

    def to_dict(self) -> dict:
        return {
            "genome": self.genome.to_dict(),
            "validation_esr": self.validation_esr,
            "validation_fitness": self.validation_fitness,
        }


@dataclass
class EvolutionResult:
    finalists: list[Finalist]
    population: list[EonGenome]
    history: list[dict]
    hall_of_fame: HallOfFame


def _evaluate_population(evaluator: Evaluator, population, batch, workers: int) -> list[FitnessRecord]:
    if workers <= 1:
        return [evaluator.evaluate(g, batch) for g in population]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, so reduction order is fixed
        return list(pool.map(lambda g: evaluator.evaluate(g, batch), population))


def rank_finalists(
    candidates: Sequence[EonGenome],
    validation_set: Sequence[Sample],
    evaluator: Evaluator,
    n_finalists: int,
) -> list[Finalist]:
    """Order distinct candidates by validation ESR, then validation fitness, then input order."""
    from ..metrics import SampleRecord, EvalReport  # deferred: metrics imports gp.fitness
    from .fitness import record_from

    distinct, seen = [], set()
    for g in candidates:
        if g.key() not in seen:
            seen.add(g.key())
            distinct.append(g)
    scored = []
    labels = evaluator.classifier.labels
    for order, genome in enumerate(distinct):
        obs = evaluator.observe(genome, validation_set)
        report = EvalReport.from_records([SampleRecord.from_observation(o) for o in obs], labels)
        fit = record_from(obs, evaluator.bonus, evaluator.threshold).fitness
        scored.append((-report.esr, -fit, order, Finalist(genome, report.esr, fit)))
    scored.sort(key=lambda s: s[:3])
    return [s[3] for s in scored[:n_finalists]]


def evolve(
    initial_population: Sequence[EonGenome],
    train_set: Sequence[Sample],
    validation_set: Sequence[Sample] | None,
    classifier,
    transcriber,
    config: GpConfig,
    rng: np.random.Generator,
    phase: str = "evolve",
    generation_offset: int = 0,
    evaluator: Evaluator | None = None,
) -> EvolutionResult:
    """Evolve ``config.generations`` generations.

    Each generation draws a fresh batch (without replacement) from
    ``train_set``. When ``validation_set`` is given, the final population plus
    the hall of fame are ranked by validation ESR to produce the finalists.
    """
    if not train_set and config.generations > 0:
        raise ValueError("training set is empty")
    evaluator = evaluator or Evaluator(classifier, transcriber, config.bonus, config.confidence_threshold)
    population = list(initial_population)
    if len(population) < config.tournament_size:
        raise ConfigError("initial population smaller than the tournament size")
    hof = HallOfFame(config.n_finalists)
    history: list[dict] = []
    n_pairs = len(population) // 2

    for gen in range(config.generations):
        started = time.perf_counter()
        size = min(config.batch_size, len(train_set))
        batch = [train_set[i] for i in rng.choice(len(train_set), size=size, replace=False)]
        try:
            records = _evaluate_population(evaluator, population, batch, config.workers)
        except OracleUnavailable as exc:
            raise OracleUnavailable(f"{phase} generation {generation_offset + gen}: {exc}") from exc
        fits = [r.fitness for r in records]
        hof.update(population, fits)
        best = int(np.argmax(fits))
        history.append(
            {
                "phase": phase,
                "generation": generation_offset + gen,
                "batch_size": size,
                "best_fitness": fits[best],
                "mean_fitness": float(np.mean(fits)),
                "hall_of_fame_fitness": hof.best_fitness,
                "best_misclassified": records[best].misclassified_count,
                "best_misclassification_rate": records[best].misclassified_count / size,
                "mean_misclassification_rate": float(np.mean([r.misclassified_count for r in records])) / size,
                "best_transcription": records[best].transcription,
                "elapsed_s": time.perf_counter() - started,
            }
        )
        log.info(
            "%s gen %d: best %.3f mean %.3f hof %.3f",
            phase, generation_offset + gen, fits[best], history[-1]["mean_fitness"], hof.best_fitness,
        )
        chosen = tournament_indices(fits, config.tournament_size, rng)
        offspring = [population[i] for i in chosen]
        for k in range(n_pairs):
            i, j = 2 * k, 2 * k + 1
            offspring[i], offspring[j] = crossover(offspring[i], offspring[j], config.p_crossover, rng)
        population = [mutate(g, config.p_mutation, rng) for g in offspring]

    finalists: list[Finalist] = []
    if validation_set:
        finalists = rank_finalists(population + hof.genomes, validation_set, evaluator, config.n_finalists)
    return EvolutionResult(finalists, population, history, hof)


__all__ = [
    "EvolutionResult",
    "Finalist",
    "GpConfig",
    "HallOfFame",
    "evolve",
    "init_population",
    "rank_finalists",
]
