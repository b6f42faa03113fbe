from .genome import EonGenome, init_population
from .fitness import (
    Evaluator,
    FitnessRecord,
    Observation,
    deception_from,
    deception_score,
    evaluate_fitness,
    record_from,
    transcription_from,
    transcription_score,
)
from .operators import crossover, mutate, shuffle_positions, tournament_indices, tournament_select
from .evolve import EvolutionResult, Finalist, GpConfig, HallOfFame, evolve, rank_finalists

__all__ = [
    "EonGenome",
    "Evaluator",
    "EvolutionResult",
    "Finalist",
    "FitnessRecord",
    "GpConfig",
    "HallOfFame",
    "Observation",
    "crossover",
    "deception_from",
    "deception_score",
    "evaluate_fitness",
    "evolve",
    "init_population",
    "mutate",
    "rank_finalists",
    "record_from",
    "shuffle_positions",
    "tournament_indices",
    "tournament_select",
    "transcription_from",
    "transcription_score",
]
