"""Constrained fitness: deception x transcription.

deception    = mean_x max(0, p_true(x) - p_true(x + eon)) + bonus * #{x : some class beats the true one}
transcription = 0 if any mixed transcript differs from the clean one,
                0 if any mixed confidence falls below the threshold,
                1 - mean_x max(0, conf(x) - conf(x + eon)) otherwise
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..audio import AudioClip, mix
from ..data import Sample
from ..oracles.base import ClassScores, TranscriptResult


@dataclass(frozen=True)
class Observation:
    """Oracle answers for one sample, clean and perturbed."""

    sample_id: str
    label: str
    reference: tuple[str, ...]
    clean_scores: ClassScores
    mixed_scores: ClassScores
    clean_transcript: TranscriptResult
    mixed_transcript: TranscriptResult

    @property
    def predicted(self) -> str:
        return self.mixed_scores.predicted

    @property
    def fooled(self) -> bool:
        return self.predicted != self.label

    @property
    def transcript_ok(self) -> bool:
        return self.mixed_transcript.tokens == self.reference

    @property
    def evaded(self) -> bool:
        return self.fooled and self.transcript_ok


@dataclass(frozen=True)
class FitnessRecord:
    deception: float
    transcription: float
    fitness: float
    misclassified_count: int
    batch_ids: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "deception": self.deception,
            "transcription": self.transcription,
            "fitness": self.fitness,
            "misclassified_count": self.misclassified_count,
            "batch_ids": list(self.batch_ids),
        }


def deception_from(observations: Sequence[Observation], bonus: float) -> tuple[float, int]:
    if not observations:
        return 0.0, 0
    drop = 0.0
    flipped = 0
    for obs in observations:
        drop += max(0.0, obs.clean_scores.score(obs.label) - obs.mixed_scores.score(obs.label))
        if obs.mixed_scores.outranked(obs.label):
            flipped += 1
    return drop / len(observations) + bonus * flipped, flipped


def transcription_from(observations: Sequence[Observation], threshold: float) -> float:
    if not observations:
        return 1.0
    for obs in observations:
        if obs.mixed_transcript.tokens != obs.clean_transcript.tokens:
            return 0.0
    for obs in observations:
        if obs.mixed_transcript.confidence < threshold:
            return 0.0
    loss = sum(max(0.0, o.clean_transcript.confidence - o.mixed_transcript.confidence) for o in observations)
    return 1.0 - loss / len(observations)


def record_from(observations: Sequence[Observation], bonus: float, threshold: float) -> FitnessRecord:
    deception, flipped = deception_from(observations, bonus)
    transcription = transcription_from(observations, threshold)
    return FitnessRecord(
        deception=deception,
        transcription=transcription,
        fitness=deception * transcription,
        misclassified_count=flipped,
        batch_ids=tuple(o.sample_id for o in observations),
    )


class Evaluator:
    """Queries both oracles for a genome over a batch, caching clean-clip answers.

    Either oracle may be ``None`` when only one side is needed; the missing
    side then reports the clean answer for the perturbed clip too.
    """

    def __init__(self, classifier, transcriber, bonus: float = 50.0, threshold: float = 0.7):
        self.classifier = classifier
        self.transcriber = transcriber
        self.bonus = bonus
        self.threshold = threshold
        self._clean: dict[str, tuple[ClassScores | None, TranscriptResult | None]] = {}

    def clean(self, sample: Sample) -> tuple[ClassScores | None, TranscriptResult | None]:
        hit = self._clean.get(sample.sample_id)
        if hit is None:
            scores = self.classifier.classify(sample.clip) if self.classifier is not None else None
            text = self.transcriber.transcribe(sample.clip) if self.transcriber is not None else None
            hit = (scores, text)
            self._clean[sample.sample_id] = hit
        return hit

    def observe_clip(self, sample: Sample, eon_clip: AudioClip, classify_input=None) -> Observation:
        """Observe one sample mixed with ``eon_clip``.

        ``classify_input`` optionally transforms the mixed clip before it
        reaches the classifier only (the defender's path).
        """
        clean_scores, clean_text = self.clean(sample)
        mixed = mix(sample.clip, eon_clip)
        seen = classify_input(mixed) if classify_input is not None else mixed
        mixed_scores = self.classifier.classify(seen) if self.classifier is not None else clean_scores
        mixed_text = self.transcriber.transcribe(mixed) if self.transcriber is not None else clean_text
        return Observation(
            sample_id=sample.sample_id,
            label=sample.label,
            reference=sample.transcript,
            clean_scores=clean_scores,
            mixed_scores=mixed_scores,
            clean_transcript=clean_text,
            mixed_transcript=mixed_text,
        )

    def observe(self, genome, batch: Sequence[Sample], gain: float = 1.0, classify_input=None) -> list[Observation]:
        if not batch:
            return []
        eon_clip = genome.render(batch[0].clip.sample_rate, gain=gain)
        return [self.observe_clip(s, eon_clip, classify_input) for s in batch]

    def evaluate(self, genome, batch: Sequence[Sample], gain: float = 1.0) -> FitnessRecord:
        return record_from(self.observe(genome, batch, gain), self.bonus, self.threshold)


def deception_score(genome, batch: Sequence[Sample], classifier, bonus: float = 50.0, gain: float = 1.0) -> tuple[float, int]:
    obs = Evaluator(classifier, None, bonus).observe(genome, batch, gain)
    return deception_from(obs, bonus)


def transcription_score(genome, batch: Sequence[Sample], transcriber, threshold: float = 0.7, gain: float = 1.0) -> float:
    obs = Evaluator(None, transcriber, threshold=threshold).observe(genome, batch, gain)
    return transcription_from(obs, threshold)


def evaluate_fitness(genome, batch: Sequence[Sample], classifier, transcriber, bonus: float = 50.0, threshold: float = 0.7, gain: float = 1.0) -> FitnessRecord:
    return Evaluator(classifier, transcriber, bonus, threshold).evaluate(genome, batch, gain)
