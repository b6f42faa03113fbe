"""EON genomes: N tones plus the ranges that bound them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..audio import AudioClip, Tone, ToneRanges, synthesize_eon


@dataclass(frozen=True)
class EonGenome:
    tones: tuple[Tone, ...]
    ranges: ToneRanges = field(default_factory=ToneRanges)

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        for tone in self.tones:
            tone.check(self.ranges)

    @property
    def n_tones(self) -> int:
        return len(self.tones)

    @property
    def frequencies(self) -> list[float]:
        return [t.frequency for t in self.tones]

    def key(self) -> tuple:
        return tuple(t.as_tuple() for t in self.tones)

    def normalized(self) -> np.ndarray:
        """Flat vector [f0, a0, o0, d0, f1, ...], each field mapped onto [0, 1] by its range."""
        bounds = self.ranges.as_list()
        return np.array(
            [(value - r.low) / r.span for tone in self.tones for value, r in zip(tone.as_tuple(), bounds)],
            dtype=np.float64,
        )

    @classmethod
    def from_normalized(cls, vec, ranges: ToneRanges | None = None) -> "EonGenome":
        ranges = ranges or ToneRanges()
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size % 4:
            raise ValueError("normalized genome length must be a multiple of 4")
        bounds = ranges.as_list()
        tones = []
        for chunk in vec.reshape(-1, 4):
            values = [min(r.high, max(r.low, r.low + float(v) * r.span)) for v, r in zip(chunk, bounds)]
            tones.append(Tone(*values))
        return cls(tuple(tones), ranges)

    @classmethod
    def silent(cls, n_tones: int = 3, ranges: ToneRanges | None = None) -> "EonGenome":
        """Control genome whose tones are all muted (amplitude 0)."""
        ranges = ranges or ToneRanges()
        tone = Tone(ranges.frequency.low, 0.0, ranges.offset.low, ranges.duration.low)
        return cls((tone,) * n_tones, ranges)

    def render(self, sample_rate: int, total_duration: float | None = None, gain: float = 1.0) -> AudioClip:
        return synthesize_eon(self, sample_rate, total_duration, gain)

    def to_dict(self) -> dict:
        return {
            "tones": [
                {"frequency": t.frequency, "amplitude": t.amplitude, "offset": t.offset, "duration": t.duration}
                for t in self.tones
            ],
            "ranges": self.ranges.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EonGenome":
        ranges = ToneRanges.from_dict(data.get("ranges"))
        return cls(tuple(Tone(**{k: float(v) for k, v in t.items()}) for t in data["tones"]), ranges)


def init_population(size: int, rng: np.random.Generator, ranges: ToneRanges | None = None, n_tones: int = 3) -> list[EonGenome]:
    """Draw every tone field uniformly from its range."""
    if size < 1:
        raise ValueError("population size must be >= 1")
    ranges = ranges or ToneRanges()
    bounds = ranges.as_list()
    pop = []
    for _ in range(size):
        tones = tuple(Tone(*(float(rng.uniform(r.low, r.high)) for r in bounds)) for _ in range(n_tones))
        pop.append(EonGenome(tones, ranges))
    return pop
