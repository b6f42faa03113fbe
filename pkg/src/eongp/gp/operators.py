"""Selection, crossover and mutation on :class:`EonGenome`."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .genome import EonGenome


def tournament_indices(fitnesses: Sequence[float], tournament_size: int, rng: np.random.Generator) -> list[int]:
    """Run ``len(fitnesses)`` tournaments, each over ``tournament_size`` uniform
    draws with replacement. The fittest draw wins; ties go to the lower index."""
    n = len(fitnesses)
    if n < 1:
        raise ValueError("cannot select from an empty population")
    if tournament_size < 1:
        raise ValueError("tournament_size must be >= 1")
    winners = []
    for _ in range(n):
        draws = rng.integers(0, n, size=tournament_size)
        winners.append(int(min(draws, key=lambda i: (-fitnesses[i], i))))
    return winners


def tournament_select(population: Sequence[EonGenome], fitnesses: Sequence[float], tournament_size: int, rng: np.random.Generator) -> list[EonGenome]:
    return [population[i] for i in tournament_indices(fitnesses, tournament_size, rng)]


def crossover(
    parent_a: EonGenome,
    parent_b: EonGenome,
    p_crossover: float,
    rng: np.random.Generator,
    swap_mask: Sequence[bool] | None = None,
) -> tuple[EonGenome, EonGenome]:
    """Uniform crossover at tone granularity.

    With probability ``p_crossover`` each tone position is swapped between the
    two children with probability 1/2. ``swap_mask`` forces a specific swap
    pattern (no random draws are made).
    """
    if parent_a.n_tones != parent_b.n_tones:
        raise ValueError("parents must carry the same number of tones")
    if swap_mask is None:
        if rng.random() >= p_crossover:
            return parent_a, parent_b
        swap_mask = rng.random(parent_a.n_tones) < 0.5
    a, b = list(parent_a.tones), list(parent_b.tones)
    for i, swap in enumerate(swap_mask):
        if swap:
            a[i], b[i] = b[i], a[i]
    return EonGenome(tuple(a), parent_a.ranges), EonGenome(tuple(b), parent_b.ranges)


def shuffle_positions(vec: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Each position, with probability 1/len, swaps with another uniformly chosen position."""
    out = vec.copy()
    size = out.size
    if size < 2:
        return out
    for i in range(size):
        if rng.random() < 1.0 / size:
            j = int(rng.integers(0, size - 1))
            if j >= i:
                j += 1
            out[i], out[j] = out[j], out[i]
    return out


def mutate(
    genome: EonGenome,
    p_mutation: float,
    rng: np.random.Generator,
    swaps: Sequence[tuple[int, int]] | None = None,
) -> EonGenome:
    """Shuffle the genome's [0, 1]-normalized parameter vector, then map each
    position back through the range of the field it now occupies.

    ``swaps`` forces a list of position swaps instead of the random shuffle.
    """
    if swaps is None:
        if rng.random() >= p_mutation:
            return genome
        vec = shuffle_positions(genome.normalized(), rng)
    else:
        vec = genome.normalized()
        for i, j in swaps:
            vec[i], vec[j] = vec[j], vec[i]
    return EonGenome.from_normalized(vec, genome.ranges)
