"""Evaluation measures: evasion success rate, WER, MCC, NMI, confusion
matrices, and band-occlusion attribution."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .audio import AudioClip
from .data import Sample
from .gp.fitness import Evaluator, Observation
from .spectral import complex_stft, frame_params, istft


def edit_distance(reference: Sequence[str], hypothesis: Sequence[str]) -> int:
    vocab: dict[str, int] = {}
    ref = [vocab.setdefault(tok, len(vocab)) for tok in reference]
    hyp = [vocab.setdefault(tok, len(vocab)) for tok in hypothesis]
    return int(kernels.levenshtein(ref, hyp))


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """(substitutions + insertions + deletions) / len(reference)."""
    if isinstance(reference, str) or isinstance(hypothesis, str):
        raise TypeError("wer() takes token sequences; split strings first")
    if len(reference) == 0:
        raise ValueError("reference must contain at least one token")
    return edit_distance(reference, hypothesis) / len(reference)


def confusion_matrix(true: Sequence[str], predicted: Sequence[str], labels: Sequence[str]) -> np.ndarray:
    """Rows are true classes, columns predicted classes, in ``labels`` order."""
    index = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(true, predicted):
        cm[index[t], index[p]] += 1
    return cm


def _check_confusion(confusion) -> np.ndarray:
    cm = np.asarray(confusion, dtype=np.float64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.size == 0:
        raise ValueError(f"confusion matrix must be square and non-empty, got shape {cm.shape}")
    if np.any(cm < 0) or cm.sum() <= 0:
        raise ValueError("confusion matrix must be non-negative with a positive total")
    return cm


def mcc(confusion) -> float:
    """Multiclass Matthews correlation (Gorodkin's R_K); 0 when undefined."""
    cm = _check_confusion(confusion)
    s = cm.sum()
    c = np.trace(cm)
    t = cm.sum(axis=1)
    p = cm.sum(axis=0)
    cov_tp = c * s - float(p @ t)
    cov_pp = s * s - float(p @ p)
    cov_tt = s * s - float(t @ t)
    if cov_pp <= 0 or cov_tt <= 0:
        return 0.0
    return float(cov_tp / math.sqrt(cov_pp * cov_tt))


def nmi(confusion) -> float:
    """Mutual information over the geometric mean of the marginal entropies (nats)."""
    cm = _check_confusion(confusion)
    joint = cm / cm.sum()
    pt = joint.sum(axis=1)
    pp = joint.sum(axis=0)

    def entropy(q):
        q = q[q > 0]
        return float(-(q * np.log(q)).sum())

    ht, hp = entropy(pt), entropy(pp)
    if ht <= 0.0 or hp <= 0.0:
        return 0.0
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / np.outer(pt, pp)[nz])).sum())
    return float(min(1.0, max(0.0, mi / math.sqrt(ht * hp))))


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    label: str
    predicted: str
    transcript: str
    transcript_ok: bool
    confidence: float
    edits: int
    ref_len: int

    @property
    def fooled(self) -> bool:
        return self.predicted != self.label

    @property
    def evaded(self) -> bool:
        return self.fooled and self.transcript_ok

    @classmethod
    def from_observation(cls, obs: Observation) -> "SampleRecord":
        hyp = obs.mixed_transcript.tokens
        return cls(
            sample_id=obs.sample_id,
            label=obs.label,
            predicted=obs.predicted,
            transcript=" ".join(hyp),
            transcript_ok=obs.transcript_ok,
            confidence=obs.mixed_transcript.confidence,
            edits=edit_distance(obs.reference, hyp),
            ref_len=len(obs.reference),
        )


@dataclass
class EvalReport:
    esr: float
    wer: float
    mcc: float
    nmi: float
    confusion: np.ndarray
    labels: tuple[str, ...]
    n_samples: int
    records: list[SampleRecord] = field(default_factory=list)

    @classmethod
    def from_records(cls, records: Sequence[SampleRecord], labels: Sequence[str]) -> "EvalReport":
        if not records:
            raise ValueError("cannot build a report from zero samples")
        labels = tuple(labels)
        cm = confusion_matrix([r.label for r in records], [r.predicted for r in records], labels)
        ref_total = sum(r.ref_len for r in records)
        return cls(
            esr=sum(r.evaded for r in records) / len(records),
            wer=(sum(r.edits for r in records) / ref_total) if ref_total else 0.0,
            mcc=mcc(cm),
            nmi=nmi(cm),
            confusion=cm,
            labels=labels,
            n_samples=len(records),
            records=list(records),
        )

    @property
    def n_evaded(self) -> int:
        return sum(r.evaded for r in self.records)

    def verify(self) -> None:
        """Recompute every aggregate from the per-sample records; raise on any mismatch."""
        again = EvalReport.from_records(self.records, self.labels)
        for name in ("esr", "wer", "mcc", "nmi", "n_samples"):
            if getattr(again, name) != getattr(self, name):
                raise AssertionError(f"report {name}={getattr(self, name)!r} but records give {getattr(again, name)!r}")
        if not np.array_equal(again.confusion, self.confusion):
            raise AssertionError("confusion matrix does not match per-sample records")

    def summary(self) -> dict:
        return {
            "esr": self.esr,
            "wer": self.wer,
            "mcc": self.mcc,
            "nmi": self.nmi,
            "n_samples": self.n_samples,
            "n_evaded": self.n_evaded,
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
        }

    def to_dict(self) -> dict:
        return {**self.summary(), "records": [asdict(r) for r in self.records]}

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            esr=data["esr"],
            wer=data["wer"],
            mcc=data["mcc"],
            nmi=data["nmi"],
            confusion=np.asarray(data["confusion"], dtype=np.int64),
            labels=tuple(data["labels"]),
            n_samples=data["n_samples"],
            records=[SampleRecord(**r) for r in data.get("records", [])],
        )

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["true\\predicted", *self.labels])
        for lab, row in zip(self.labels, self.confusion.tolist()):
            writer.writerow([lab, *row])
        return buf.getvalue()


def esr(
    genome,
    eval_set: Sequence[Sample],
    classifier,
    transcriber,
    gain: float = 1.0,
    evaluator: Evaluator | None = None,
    classify_input=None,
) -> tuple[float, EvalReport]:
    """Fraction of samples that the perturbed clip both misclassifies and still transcribes correctly."""
    if not eval_set:
        raise ValueError("evaluation set is empty")
    evaluator = evaluator or Evaluator(classifier, transcriber)
    observations = evaluator.observe(genome, eval_set, gain, classify_input)
    report = EvalReport.from_records([SampleRecord.from_observation(o) for o in observations], classifier.labels)
    return report.esr, report


@dataclass
class BandAttribution:
    bands: list[tuple[float, float]]
    scores: np.ndarray
    target_class: str
    baseline: float

    def to_dict(self) -> dict:
        return {
            "target_class": self.target_class,
            "baseline": self.baseline,
            "bands": [{"low_hz": lo, "high_hz": hi, "score": float(s)} for (lo, hi), s in zip(self.bands, self.scores)],
        }


def band_attribution(
    clip: AudioClip,
    classifier,
    band_edges: Sequence[float],
    target_class: str,
    window_s: float = 0.025,
    hop_s: float = 0.010,
) -> BandAttribution:
    """Occlude one frequency band at a time and measure the drop in the target class score.

    The inner edges split [0, Nyquist] into ``len(band_edges) + 1`` bands.
    Masked spectra are resynthesized with the original phases. A positive
    score means the band supports ``target_class``.
    """
    nyquist = clip.sample_rate / 2.0
    edges = [float(e) for e in band_edges]
    if any(not 0.0 < e < nyquist for e in edges) or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError(f"band edges must be strictly increasing inside (0, {nyquist})")
    bounds = [0.0, *edges, nyquist]
    bands = list(zip(bounds[:-1], bounds[1:]))

    win, hop = frame_params(clip.sample_rate, window_s, hop_s)
    spec = complex_stft(clip.samples, win, hop)
    freqs = np.arange(spec.shape[1]) * clip.sample_rate / win
    baseline = classifier.classify(clip).score(target_class)
    scores = []
    for i, (lo, hi) in enumerate(bands):
        last = i == len(bands) - 1
        mask = (freqs >= lo) & ((freqs <= hi) if last else (freqs < hi))
        masked = spec.copy()
        masked[:, mask] = 0.0
        resynth = clip.with_samples(istft(masked, win, hop, len(clip)))
        scores.append(baseline - classifier.classify(resynth).score(target_class))
    return BandAttribution(bands, np.array(scores), target_class, baseline)
