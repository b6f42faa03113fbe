"""Oracle result types and the duck-typed oracle interfaces.

A classifier is anything with ``labels`` and ``classify(clip) -> ClassScores``.
A transcriber is anything with ``transcribe(clip) -> TranscriptResult``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

from ..audio import AudioClip
from ..errors import OracleUnavailable

_PUNCT = re.compile(r"[^\w\s']|_")


def normalize_transcript(text: str | Sequence[str]) -> tuple[str, ...]:
    """Lowercase, strip punctuation, collapse whitespace; return tokens."""
    if not isinstance(text, str):
        text = " ".join(text)
    text = _PUNCT.sub(" ", text.lower()).replace("'", "")
    return tuple(text.split())


@dataclass(frozen=True, eq=False)
class ClassScores:
    labels: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        labels = tuple(self.labels)
        if probs.shape != (len(labels),):
            raise OracleUnavailable(f"score vector of shape {probs.shape} for {len(labels)} labels")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-6:
            raise OracleUnavailable(f"invalid class probabilities {probs.tolist()}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_mapping(cls, scores: Mapping[str, float], labels: Sequence[str] | None = None) -> "ClassScores":
        labels = tuple(labels) if labels is not None else tuple(scores)
        missing = set(labels) ^ set(scores)
        if missing:
            raise OracleUnavailable(f"score labels disagree with class list: {sorted(missing)}")
        return cls(labels, np.array([float(scores[k]) for k in labels]))

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.labels, self.probs)}

    def score(self, label: str) -> float:
        return float(self.probs[self.labels.index(label)])

    @property
    def predicted(self) -> str:
        """Argmax label; ties go to the lexicographically smallest label."""
        top = self.probs.max()
        return min(lab for lab, p in zip(self.labels, self.probs) if p == top)

    def outranked(self, label: str) -> bool:
        """True if some other class scores strictly higher than ``label``."""
        own = self.score(label)
        return any(p > own for lab, p in zip(self.labels, self.probs) if lab != label)


@dataclass(frozen=True)
class TranscriptResult:
    tokens: tuple[str, ...]
    confidence: float

    def __post_init__(self):
        conf = float(self.confidence)
        if not 0.0 <= conf <= 1.0 or conf != conf:
            raise OracleUnavailable(f"transcription confidence {self.confidence!r} outside [0, 1]")
        object.__setattr__(self, "confidence", conf)
        object.__setattr__(self, "tokens", normalize_transcript(self.tokens))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


class Classifier(Protocol):
    labels: tuple[str, ...]

    def classify(self, clip: AudioClip) -> ClassScores: ...


class Transcriber(Protocol):
    def transcribe(self, clip: AudioClip) -> TranscriptResult: ...


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)
