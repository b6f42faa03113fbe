"""Labeled speech samples as seen by fitness evaluation and metrics."""

from __future__ import annotations

from dataclasses import dataclass

from .audio import AudioClip
from .oracles.base import normalize_transcript


@dataclass(frozen=True, eq=False)
class Sample:
    clip: AudioClip
    label: str
    transcript: tuple[str, ...]
    speaker_id: str = ""
    utterance_id: str = ""

    def __post_init__(self):
        if self.clip.clip_id is None:
            raise ValueError("samples need clips with a clip_id")
        object.__setattr__(self, "transcript", normalize_transcript(self.transcript))

    @property
    def sample_id(self) -> str:
        return self.clip.clip_id
