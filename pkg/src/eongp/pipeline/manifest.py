"""Manifest entries: one JSON object per line, CSV accepted on input."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from ..audio import read_wav
from ..data import Sample
from ..errors import DataError

SPLIT_TAGS = ("pretrain", "tailor", "eval", "reserve")
DISJOINT_TAGS = ("tailor", "eval", "reserve")
FIELDS = ("clip_path", "speaker_id", "emotion_label", "transcript", "split_tag", "utterance_id")


@dataclass(frozen=True)
class ManifestEntry:
    clip_path: str
    speaker_id: str
    emotion_label: str
    transcript: str
    utterance_id: str
    split_tag: str | None = None

    def __post_init__(self):
        if self.split_tag in ("", None):
            object.__setattr__(self, "split_tag", None)
        elif self.split_tag not in SPLIT_TAGS:
            raise DataError(f"{self.clip_path}: unknown split tag {self.split_tag!r}")

    def with_tag(self, tag: str | None) -> "ManifestEntry":
        return replace(self, split_tag=tag)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in FIELDS}


def check_leakage(entries: Iterable[ManifestEntry]) -> None:
    """Raise if an utterance id is tagged into more than one of tailor/eval/reserve."""
    owner: dict[str, str] = {}
    clashes = []
    for e in entries:
        if e.split_tag not in DISJOINT_TAGS:
            continue
        prev = owner.setdefault(e.utterance_id, e.split_tag)
        if prev != e.split_tag:
            clashes.append(f"{e.utterance_id} ({prev}, {e.split_tag})")
    if clashes:
        raise DataError("utterances appear in more than one split: " + ", ".join(sorted(set(clashes))[:10]))


def _from_row(row: dict, where: str) -> ManifestEntry:
    try:
        return ManifestEntry(
            clip_path=str(row["clip_path"]),
            speaker_id=str(row["speaker_id"]),
            emotion_label=str(row["emotion_label"]),
            transcript=str(row["transcript"]),
            utterance_id=str(row["utterance_id"]),
            split_tag=row.get("split_tag") or None,
        )
    except KeyError as exc:
        raise DataError(f"{where}: missing manifest field {exc}") from exc


def read_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    entries = []
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh), start=2):
                entries.append(_from_row(row, f"{path}:{i}"))
    else:
        for i, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{i}: {exc}") from exc
            entries.append(_from_row(row, f"{path}:{i}"))
    check_leakage(entries)
    return entries


def write_manifest(entries: Sequence[ManifestEntry], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for e in entries:
            fh.write(json.dumps(e.to_dict(), sort_keys=True) + "\n")
    return path


def resolve(entry: ManifestEntry, root) -> Path:
    p = Path(entry.clip_path)
    return p if p.is_absolute() else Path(root) / p


def load_samples(entries: Sequence[ManifestEntry], root) -> list[Sample]:
    """Read every referenced clip. Missing files are all listed before failing."""
    missing = [e.clip_path for e in entries if not resolve(e, root).exists()]
    if missing:
        raise DataError(f"{len(missing)} clip(s) missing under {root}: " + ", ".join(missing[:10]))
    samples = []
    for e in entries:
        clip = read_wav(resolve(e, root), clip_id=e.clip_path)
        samples.append(Sample(clip, e.emotion_label, e.transcript, e.speaker_id, e.utterance_id))
    return samples


def by_tag(entries: Sequence[ManifestEntry], *tags: str) -> list[ManifestEntry]:
    return [e for e in entries if e.split_tag in tags]


def entries_to_dicts(entries: Sequence[ManifestEntry]) -> list[dict]:
    return [asdict(e) for e in entries]
