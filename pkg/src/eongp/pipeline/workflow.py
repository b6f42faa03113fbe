"""Pipeline steps that operate on in-memory entries and samples.

Disk layout and artifact bookkeeping live in :mod:`eongp.pipeline.stages`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..data import Sample
from ..defenses import DEFAULT_DEFENSES, DefenseSpec, DefenseSweep, defense_sweep
from ..errors import ConfigError, DataError
from ..gp import EonGenome, Evaluator, Finalist, GpConfig, evolve, init_population, rank_finalists, record_from
from ..metrics import EvalReport, SampleRecord
from ..oracles.base import normalize_transcript
from .manifest import ManifestEntry, check_leakage


# ---------------------------------------------------------------- prefilter


@dataclass(frozen=True)
class Rejection:
    entry: ManifestEntry
    reasons: tuple[str, ...]

    def to_dict(self) -> dict:
        return {**self.entry.to_dict(), "reasons": list(self.reasons)}


@dataclass
class PrefilterResult:
    kept: list[ManifestEntry]
    kept_samples: list[Sample]
    rejected: list[Rejection]


def prefilter(entries: Sequence[ManifestEntry], samples: Sequence[Sample], classifier, transcriber) -> PrefilterResult:
    """Keep entries whose clean clip is classified and transcribed correctly."""
    if len(entries) != len(samples):
        raise ValueError("entries and samples must be aligned")
    labels = set(classifier.labels)
    kept, kept_samples, rejected = [], [], []
    for entry, sample in zip(entries, samples):
        reasons = []
        if entry.emotion_label not in labels:
            reasons.append(f"label: {entry.emotion_label!r} not in classifier classes")
        else:
            predicted = classifier.classify(sample.clip).predicted
            if predicted != entry.emotion_label:
                reasons.append(f"classification: predicted {predicted}")
        heard = transcriber.transcribe(sample.clip).tokens
        if heard != normalize_transcript(entry.transcript):
            reasons.append(f"transcription: heard {' '.join(heard)!r}")
        if reasons:
            rejected.append(Rejection(entry, tuple(reasons)))
        else:
            kept.append(entry)
            kept_samples.append(sample)
    return PrefilterResult(kept, kept_samples, rejected)


# -------------------------------------------------------------------- split


def allocate(n: int, fractions: Sequence[float]) -> list[int]:
    """Split ``n`` items by ``fractions`` (largest remainder), at least one item each."""
    k = len(fractions)
    if n < k:
        raise DataError(f"cannot split {n} utterance(s) into {k} non-empty parts")
    weights = np.asarray(fractions, dtype=np.float64)
    raw = weights / weights.sum() * n
    counts = np.maximum(np.floor(raw).astype(int), 1)
    while counts.sum() < n:
        counts[int(np.argmax(raw - counts))] += 1
    while counts.sum() > n:
        over = np.where(counts > 1, counts - raw, -np.inf)
        counts[int(np.argmax(over))] -= 1
    return counts.tolist()


def split(
    entries: Sequence[ManifestEntry],
    fractions: Sequence[float] = (0.1, 0.1, 0.8),
    seed: int = 0,
    tags: Sequence[str] = ("tailor", "reserve", "eval"),
) -> list[ManifestEntry]:
    """Tag untagged entries by utterance, separately within each speaker.

    Entries that already carry a tag (e.g. ``pretrain``) are left alone.
    All clips of one utterance land in the same split.
    """
    if len(fractions) != len(tags):
        raise ConfigError("need one fraction per split tag")
    if any(f <= 0 for f in fractions) or sum(fractions) > 1.0 + 1e-9:
        raise ConfigError(f"split fractions must be positive and sum to <= 1, got {list(fractions)}")
    rng = np.random.default_rng(seed)
    by_speaker: dict[str, list[str]] = {}
    for e in entries:
        if e.split_tag is None:
            utts = by_speaker.setdefault(e.speaker_id, [])
            if e.utterance_id not in utts:
                utts.append(e.utterance_id)
    assignment: dict[tuple[str, str], str] = {}
    for speaker in sorted(by_speaker):
        utts = sorted(by_speaker[speaker])
        try:
            counts = allocate(len(utts), fractions)
        except DataError as exc:
            raise DataError(f"speaker {speaker}: {exc}") from None
        order = rng.permutation(len(utts))
        start = 0
        for tag, count in zip(tags, counts):
            for i in order[start:start + count]:
                assignment[(speaker, utts[i])] = tag
            start += count
    out = [e.with_tag(assignment[(e.speaker_id, e.utterance_id)]) if e.split_tag is None else e for e in entries]
    check_leakage(out)
    return out


# ------------------------------------------------------- pretrain + tailor


@dataclass
class PretrainTailorResult:
    finalists: list[Finalist]
    population: list[EonGenome]
    history: list[dict]
    hall_of_fame: list[EonGenome]


def run_pretrain_tailor(
    pretrain_set: Sequence[Sample],
    tailor_set: Sequence[Sample],
    classifier,
    transcriber,
    config: GpConfig,
    generations_pretrain: int,
    generations_tailor: int,
    seed: int,
    validation_set: Sequence[Sample] | None = None,
    evaluator: Evaluator | None = None,
) -> PretrainTailorResult:
    """Evolve a generic population on ``pretrain_set``, then continue it on ``tailor_set``.

    Finalists are ranked by ESR on ``validation_set`` (the tailor set when
    omitted) over the final population plus both phases' halls of fame.
    """
    if generations_pretrain < 0 or generations_tailor < 0:
        raise ConfigError("generation counts must be >= 0")
    if generations_pretrain and not pretrain_set:
        raise DataError("pretraining needs a non-empty pretrain set")
    if not tailor_set:
        raise DataError("tailoring needs a non-empty tailor set")
    validation_set = list(tailor_set if validation_set is None else validation_set)
    evaluator = evaluator or Evaluator(classifier, transcriber, config.bonus, config.confidence_threshold)
    rng = np.random.default_rng(seed)
    population = init_population(config.population_size, rng, config.ranges, config.n_tones)

    history, famous = [], []
    phases = (("pretrain", pretrain_set, generations_pretrain), ("tailor", tailor_set, generations_tailor))
    offset = 0
    for phase, data, generations in phases:
        cfg = replace(config, generations=generations)
        result = evolve(population, list(data), None, classifier, transcriber, cfg, rng, phase, offset, evaluator)
        population = result.population
        history.extend(result.history)
        famous.extend(result.hall_of_fame.genomes)
        offset += generations
    finalists = rank_finalists(population + famous, validation_set, evaluator, config.n_finalists)
    return PretrainTailorResult(finalists, population, history, famous)


# ---------------------------------------------------------- amplitude sweep

SWEEP_FIELDS = (
    "finalist", "multiplier", "max_amplitude", "esr", "transcription", "deception", "fitness", "misclassified",
)


@dataclass
class SweepResult:
    rows: list[dict]
    genome: EonGenome
    multiplier: float
    finalist: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def selection(self) -> dict:
        return {"finalist": self.finalist, "multiplier": self.multiplier, "genome": self.genome.to_dict()}


def select_from_rows(rows: Sequence[dict]) -> dict:
    """Highest ESR, then higher transcription score, then lower multiplier, then earlier finalist.

    Pairs whose validation fitness is zero broke the transcription
    constraint (or fooled nothing); they compete only when no pair has
    positive fitness.
    """
    feasible = [r for r in rows if r["fitness"] > 0.0] or list(rows)
    return min(feasible, key=lambda r: (-r["esr"], -r["transcription"], r["multiplier"], r["finalist"]))


def check_multipliers(multipliers: Sequence[float], ranges, ceiling: float) -> None:
    if not multipliers:
        raise ConfigError("amplitude sweep needs at least one multiplier")
    if any(m < 0 for m in multipliers):
        raise ConfigError("amplitude multipliers must be >= 0")
    top = max(multipliers) * ranges.amplitude.high
    if top > ceiling:
        raise ConfigError(
            f"multiplier {max(multipliers)} can scale a tone to {top:g}, above the amplitude ceiling {ceiling}"
        )


def amplitude_sweep(
    finalists: Sequence[EonGenome | Finalist],
    multipliers: Sequence[float],
    validation_set: Sequence[Sample],
    evaluator: Evaluator,
    ceiling: float = 0.08,
) -> SweepResult:
    """Score every finalist x multiplier on the validation set and pick one pair (see :func:`select_from_rows`)."""
    genomes = [f.genome if isinstance(f, Finalist) else f for f in finalists]
    if not genomes:
        raise DataError("amplitude sweep needs at least one finalist")
    if not validation_set:
        raise DataError("amplitude sweep needs a non-empty validation set")
    for g in genomes:
        check_multipliers(multipliers, g.ranges, ceiling)
    labels = evaluator.classifier.labels
    rows = []
    for i, genome in enumerate(genomes):
        for mult in multipliers:
            obs = evaluator.observe(genome, validation_set, gain=mult)
            report = EvalReport.from_records([SampleRecord.from_observation(o) for o in obs], labels)
            rec = record_from(obs, evaluator.bonus, evaluator.threshold)
            rows.append(
                {
                    "finalist": i,
                    "multiplier": float(mult),
                    "max_amplitude": max(t.amplitude for t in genome.tones) * float(mult),
                    "esr": report.esr,
                    "transcription": rec.transcription,
                    "deception": rec.deception,
                    "fitness": rec.fitness,
                    "misclassified": rec.misclassified_count,
                }
            )
    best = select_from_rows(rows)
    return SweepResult(rows, genomes[best["finalist"]], best["multiplier"], best["finalist"])


# ---------------------------------------------------------- final evaluation


@dataclass
class FinalEvaluation:
    report: EvalReport
    control: EvalReport
    defenses: DefenseSweep | None = None
    extras: dict = field(default_factory=dict)

    def verify(self) -> None:
        self.report.verify()
        self.control.verify()
        if self.defenses is not None:
            self.defenses.verify()


def evaluate_final(
    genome: EonGenome,
    multiplier: float,
    eval_set: Sequence[Sample],
    evaluator: Evaluator,
    defenses: Sequence[DefenseSpec] | None = DEFAULT_DEFENSES,
    oracle_name: str = "surrogate",
) -> FinalEvaluation:
    """Undefended report, a muted-EON control report, and the defense sweep."""
    if not eval_set:
        raise DataError("evaluation set is empty")
    labels = evaluator.classifier.labels

    def report_for(g, gain):
        obs = evaluator.observe(g, eval_set, gain=gain)
        return EvalReport.from_records([SampleRecord.from_observation(o) for o in obs], labels)

    report = report_for(genome, multiplier)
    control = report_for(EonGenome.silent(genome.n_tones, genome.ranges), 1.0)
    sweep = None
    if defenses:
        sweep = defense_sweep(
            genome, eval_set, evaluator.classifier, evaluator.transcriber, defenses,
            gain=multiplier, evaluator=evaluator, oracle_name=oracle_name, baseline=report,
        )
    result = FinalEvaluation(report, control, sweep)
    result.verify()
    return result


__all__ = [
    "FinalEvaluation",
    "PrefilterResult",
    "PretrainTailorResult",
    "Rejection",
    "SweepResult",
    "allocate",
    "amplitude_sweep",
    "check_multipliers",
    "evaluate_final",
    "prefilter",
    "run_pretrain_tailor",
    "select_from_rows",
    "split",
]
