"""Deterministic stand-in for a speech-to-text service.

Confidence falls linearly with the noise-to-signal RMS ratio between the
presented clip and the registered clean recording. Below ``drop_threshold``
one token is replaced, chosen by hashing the presented samples, so the same
input always yields the same (wrong) transcript.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..audio import AudioClip, rms
from ..errors import DataError
from .base import TranscriptResult, normalize_transcript

CORRUPT_TOKEN = "unintelligible"


@dataclass(frozen=True)
class MockSettings:
    k: float = 2.0
    floor: float = 0.01
    drop_threshold: float = 0.5


def snr_confidence(noise_rms: float, signal_rms: float, k: float, floor: float) -> float:
    if signal_rms <= 0.0:
        ratio = 0.0 if noise_rms == 0.0 else float("inf")
    else:
        ratio = noise_rms / signal_rms
    return float(min(1.0, max(0.0, 1.0 - k * max(0.0, ratio - floor))))


class MockTranscriber:
    def __init__(self, settings: MockSettings | None = None):
        self.settings = settings or MockSettings()
        self._clean: dict[str, np.ndarray] = {}
        self._truth: dict[str, tuple[str, ...]] = {}

    def register(self, clip: AudioClip, transcript: str) -> None:
        if clip.clip_id is None:
            raise ValueError("registered clips need a clip_id")
        self._clean[clip.clip_id] = clip.samples
        self._truth[clip.clip_id] = normalize_transcript(transcript)

    @classmethod
    def from_pairs(cls, pairs, settings: MockSettings | None = None) -> "MockTranscriber":
        mock = cls(settings)
        for clip, transcript in pairs:
            mock.register(clip, transcript)
        return mock

    def ground_truth(self, clip_id: str) -> tuple[str, ...]:
        return self._truth[clip_id]

    def __contains__(self, clip_id) -> bool:
        return clip_id in self._truth

    def transcribe(self, clip: AudioClip) -> TranscriptResult:
        if clip.clip_id not in self._truth:
            raise DataError(f"mock transcriber has no ground truth for clip {clip.clip_id!r}")
        clean = self._clean[clip.clip_id]
        presented = clip.samples
        n = presented.size
        ref = clean[:n] if clean.size >= n else np.pad(clean, (0, n - clean.size))
        conf = snr_confidence(rms(presented - ref), rms(clean), self.settings.k, self.settings.floor)
        tokens = self._truth[clip.clip_id]
        if conf < self.settings.drop_threshold and tokens:
            digest = hashlib.sha256(np.ascontiguousarray(presented, dtype="<f8").tobytes()).digest()
            i = int.from_bytes(digest[:8], "little") % len(tokens)
            tokens = tokens[:i] + (CORRUPT_TOKEN,) + tokens[i + 1 :]
        return TranscriptResult(tokens, conf)


def settings_from_mapping(data: Mapping | None) -> MockSettings:
    data = dict(data or {})
    return MockSettings(
        k=float(data.get("k", 2.0)),
        floor=float(data.get("floor", 0.01)),
        drop_threshold=float(data.get("drop_threshold", 0.5)),
    )
