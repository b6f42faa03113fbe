"""Active defenses applied on the classifier's input path, and the sweep that
measures how much each one changes the evasion success rate."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .audio import AudioClip, resample
from .data import Sample
from .errors import ConfigError
from .gp.fitness import Evaluator
from .metrics import EvalReport, esr
from .spectral import invert_mel, log_mel_to_mfcc, mel_spectrogram, mfcc_to_mel_power, notch_filter

KINDS = ("resample", "mel_roundtrip", "eon_bandpass")


@dataclass(frozen=True)
class DefenseSpec:
    """One defense and its parameters.

    ``frequencies=None`` on an ``eon_bandpass`` spec means "use the tone
    frequencies of the perturbation under test" (a defender who knows the EON).
    """

    kind: str
    target_rate: int = 8000
    n_mels: int = 40
    n_coeffs: int = 22
    iterations: int = 32
    frequencies: tuple[float, ...] | None = None
    half_width: float = 10.0
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown defense kind {self.kind!r}; expected one of {KINDS}")
        if self.frequencies is not None:
            object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        if self.target_rate <= 0 or self.iterations < 1 or self.half_width <= 0:
            raise ConfigError(f"invalid parameters for defense {self.kind}")
        if not 1 <= self.n_coeffs <= self.n_mels:
            raise ConfigError("mel_roundtrip needs 1 <= n_coeffs <= n_mels")

    @property
    def label(self) -> str:
        return self.name or self.kind

    @classmethod
    def from_mapping(cls, data: dict) -> "DefenseSpec":
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad defense spec {data}: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["frequencies"] is not None:
            d["frequencies"] = list(d["frequencies"])
        return d


DEFAULT_DEFENSES = (
    DefenseSpec("resample"),
    DefenseSpec("mel_roundtrip"),
    DefenseSpec("eon_bandpass"),
)


def _fit_length(x: np.ndarray, n: int) -> np.ndarray:
    return x[:n] if x.size >= n else np.pad(x, (0, n - x.size))


def apply_defense(spec: DefenseSpec, clip: AudioClip, eon_frequencies: Sequence[float] | None = None) -> AudioClip:
    if spec.kind == "resample":
        if spec.target_rate == clip.sample_rate:
            return clip
        back = resample(resample(clip, spec.target_rate), clip.sample_rate)
        return clip.with_samples(_fit_length(back.samples, len(clip)))
    if spec.kind == "mel_roundtrip":
        mel = mel_spectrogram(clip, n_mels=spec.n_mels)
        if spec.n_coeffs < spec.n_mels:
            coeffs = log_mel_to_mfcc(mel.magnitudes, spec.n_coeffs)
            mel = replace(mel, magnitudes=mfcc_to_mel_power(coeffs, spec.n_mels))
        out = invert_mel(mel, iterations=spec.iterations)
        return clip.with_samples(out.samples)
    # eon_bandpass
    freqs = spec.frequencies if spec.frequencies is not None else tuple(eon_frequencies or ())
    return notch_filter(clip, freqs, spec.half_width)


def audible_frequencies(genome, gain: float = 1.0) -> tuple[float, ...]:
    if gain == 0.0:
        return ()
    return tuple(t.frequency for t in genome.tones if t.amplitude > 0.0)


@dataclass(frozen=True)
class DefenseSampleRecord:
    sample_id: str
    label: str
    undefended_predicted: str
    defended_predicted: str
    transcript_ok: bool

    @property
    def undefended_evaded(self) -> bool:
        return self.undefended_predicted != self.label and self.transcript_ok

    @property
    def defended_evaded(self) -> bool:
        return self.defended_predicted != self.label and self.transcript_ok


@dataclass
class DefenseResult:
    spec: DefenseSpec
    report: EvalReport
    delta: float
    records: list[DefenseSampleRecord]

    @property
    def esr(self) -> float:
        return self.report.esr

    def verify(self) -> None:
        n = len(self.records)
        before = sum(r.undefended_evaded for r in self.records) / n
        after = sum(r.defended_evaded for r in self.records) / n
        if after != self.report.esr or after - before != self.delta:
            raise AssertionError(f"defense {self.spec.label}: delta {self.delta} does not match per-sample records")
        self.report.verify()

    def to_dict(self) -> dict:
        return {
            "defense": self.spec.to_dict(),
            "esr": self.esr,
            "delta": self.delta,
            "report": self.report.to_dict(),
            "records": [asdict(r) for r in self.records],
        }


@dataclass
class DefenseSweep:
    oracle: str
    baseline: EvalReport
    results: list[DefenseResult] = field(default_factory=list)

    def verify(self) -> None:
        self.baseline.verify()
        for res in self.results:
            res.verify()

    def table_rows(self) -> list[dict]:
        row = {"oracle": self.oracle, "undefended_esr": self.baseline.esr}
        for res in self.results:
            row[f"{res.spec.label}_esr"] = res.esr
            row[f"{res.spec.label}_delta"] = res.delta
        return [row]

    def to_csv(self) -> str:
        rows = self.table_rows()
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "oracle": self.oracle,
            "baseline": self.baseline.to_dict(),
            "defenses": [r.to_dict() for r in self.results],
        }


def defense_sweep(
    genome,
    eval_set: Sequence[Sample],
    classifier,
    transcriber,
    specs: Sequence[DefenseSpec] = DEFAULT_DEFENSES,
    gain: float = 1.0,
    evaluator: Evaluator | None = None,
    oracle_name: str = "surrogate",
    baseline: EvalReport | None = None,
) -> DefenseSweep:
    """ESR with each defense inserted between mixing and classification.

    Transcription is always judged on the undefended mixed audio: the
    defender controls only what the classifier sees.
    """
    evaluator = evaluator or Evaluator(classifier, transcriber)
    if baseline is None:
        _, baseline = esr(genome, eval_set, classifier, transcriber, gain, evaluator)
    before = {r.sample_id: r for r in baseline.records}
    freqs = audible_frequencies(genome, gain)
    sweep = DefenseSweep(oracle_name, baseline)
    for spec in specs:
        _, report = esr(
            genome, eval_set, classifier, transcriber, gain, evaluator,
            classify_input=lambda clip, spec=spec: apply_defense(spec, clip, freqs),
        )
        records = [
            DefenseSampleRecord(
                sample_id=r.sample_id,
                label=r.label,
                undefended_predicted=before[r.sample_id].predicted,
                defended_predicted=r.predicted,
                transcript_ok=r.transcript_ok,
            )
            for r in report.records
        ]
        sweep.results.append(DefenseResult(spec, report, report.esr - baseline.esr, records))
    sweep.verify()
    return sweep


__all__ = [
    "DEFAULT_DEFENSES",
    "DefenseResult",
    "DefenseSampleRecord",
    "DefenseSpec",
    "DefenseSweep",
    "apply_defense",
    "audible_frequencies",
    "defense_sweep",
]
