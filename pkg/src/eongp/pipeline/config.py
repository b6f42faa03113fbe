"""Run configuration: a YAML (or JSON) mapping with a mandatory seed.

Top-level keys::

    seed: 1234                  # required here or via --seed
    run_dir: runs/demo
    corpus:
      path: null                # existing corpus root; null -> synthesize into <run_dir>/corpus
      manifest: manifest.jsonl  # relative to the corpus root
      synth: {n_user_speakers: 2, n_user_utterances: 50, separation: 0.1, cue_gain: 0.05, ...}
    split: {fractions: [0.1, 0.1, 0.8]}
    features: {n_coeffs: 40, n_mels: 40, window_s: 0.025, hop_s: 0.010}
    surrogate: {epochs: 200, learning_rate: 0.01, hidden: [64, 64, 48, 48, 32, 32], train_tags: [pretrain]}
    classifier: {backend: surrogate}            # or {backend: plugin, command: [...], labels: [...], timeout: 30}
    transcriber: {backend: mock, k: 2.0, floor: 0.01, drop_threshold: 0.5}
    gp: {population_size: 50, generations_pretrain: 40, generations_tailor: 10, ...}
    sweep: {multipliers: [0.5, 1.0, 1.5, 2.0], amplitude_ceiling: 0.08}
    defenses: [{kind: resample}, {kind: mel_roundtrip}, {kind: eon_bandpass}]
    attribute: {band_edges: [250, 500, 1000, 2000, 4000], n_clips: 8}
"""

from __future__ import annotations

import copy
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..defenses import DEFAULT_DEFENSES, DefenseSpec
from ..errors import ConfigError
from ..gp import GpConfig
from ..oracles.mock import MockSettings, settings_from_mapping
from ..oracles.surrogate import DEFAULT_HIDDEN, FeatureConfig
from .workflow import check_multipliers

SECTIONS = (
    "seed", "run_dir", "corpus", "split", "features", "surrogate", "classifier",
    "transcriber", "gp", "sweep", "defenses", "attribute",
)

DEFAULTS: dict = {
    "run_dir": "run",
    "corpus": {"path": None, "manifest": "manifest.jsonl", "synth": {}},
    "split": {"fractions": [0.1, 0.1, 0.8]},
    "features": {},
    "surrogate": {"epochs": 200, "learning_rate": 0.01, "hidden": list(DEFAULT_HIDDEN), "train_tags": ["pretrain"]},
    "classifier": {"backend": "surrogate"},
    "transcriber": {"backend": "mock"},
    "gp": {"generations_pretrain": 40, "generations_tailor": 10},
    "sweep": {"multipliers": [0.5, 1.0, 1.5, 2.0], "amplitude_ceiling": 0.08},
    "defenses": [d.to_dict() for d in DEFAULT_DEFENSES],
    "attribute": {"band_edges": [250.0, 500.0, 1000.0, 2000.0, 4000.0], "n_clips": 8},
}


def derive_seed(seed: int, name: str) -> int:
    """Independent, stable sub-seed for one pipeline stage."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(zlib.crc32(name.encode()),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


@dataclass
class OracleConfig:
    backend: str
    command: list[str] | None = None
    labels: list[str] | None = None
    timeout: float = 30.0
    params: dict = field(default_factory=dict)


@dataclass
class RunConfig:
    seed: int
    run_dir: Path
    corpus_path: Path | None
    manifest_name: str
    synth: dict
    split_fractions: tuple[float, ...]
    features: FeatureConfig
    surrogate: dict
    classifier: OracleConfig
    transcriber: OracleConfig
    gp: GpConfig
    generations_pretrain: int
    generations_tailor: int
    multipliers: tuple[float, ...]
    amplitude_ceiling: float
    defenses: tuple[DefenseSpec, ...]
    attribute: dict
    raw: dict

    @property
    def corpus_root(self) -> Path:
        return self.corpus_path if self.corpus_path is not None else self.run_dir / "corpus"

    @property
    def manifest_path(self) -> Path:
        return self.corpus_root / self.manifest_name

    @property
    def mock_settings(self) -> MockSettings:
        return settings_from_mapping(self.transcriber.params)

    def seed_for(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def _oracle(section: dict, name: str, backends: tuple[str, ...]) -> OracleConfig:
    section = dict(section)
    backend = section.pop("backend", backends[0])
    if backend not in backends:
        raise ConfigError(f"{name}.backend must be one of {backends}, got {backend!r}")
    command = section.pop("command", None)
    labels = section.pop("labels", None)
    timeout = float(section.pop("timeout", 30.0))
    if backend == "plugin":
        if not command:
            raise ConfigError(f"{name}: plugin backend needs a command")
        if isinstance(command, str):
            command = command.split()
        if name == "classifier" and not labels:
            raise ConfigError("classifier: plugin backend needs the class labels")
    return OracleConfig(backend, list(command) if command else None, labels, timeout, section)


def build_config(data: dict, seed: int | None = None, run_dir=None, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    merged = _merge(DEFAULTS, data)
    if "defenses" in data:
        merged["defenses"] = data["defenses"]
    if seed is not None:
        merged["seed"] = seed
    if run_dir is not None:
        merged["run_dir"] = str(run_dir)
    if merged.get("seed") is None:
        raise ConfigError("a seed is required (config 'seed' or --seed)")
    if not isinstance(merged["seed"], int) or merged["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {merged['seed']!r}")
    base_dir = base_dir or Path.cwd()

    def path(p):
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    corpus = merged["corpus"]
    corpus_path = path(corpus["path"]) if corpus.get("path") else None
    if corpus_path is not None and not (corpus_path / corpus.get("manifest", "manifest.jsonl")).exists():
        raise ConfigError(f"corpus manifest not found under {corpus_path}")

    gp_section = dict(merged["gp"])
    k_pre = gp_section.pop("generations_pretrain")
    k_tail = gp_section.pop("generations_tailor")
    if not (isinstance(k_pre, int) and isinstance(k_tail, int)) or k_pre < 0 or k_tail < 0:
        raise ConfigError("gp.generations_pretrain and gp.generations_tailor must be non-negative integers")
    if "generations" in gp_section:
        raise ConfigError("use gp.generations_pretrain / gp.generations_tailor instead of gp.generations")
    gp = GpConfig.from_mapping(gp_section)

    sweep = merged["sweep"]
    multipliers = tuple(float(m) for m in sweep["multipliers"])
    ceiling = float(sweep["amplitude_ceiling"])
    check_multipliers(multipliers, gp.ranges, ceiling)

    try:
        features = FeatureConfig(**merged["features"])
        defenses = tuple(DefenseSpec.from_mapping(d) for d in merged["defenses"])
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    fractions = tuple(float(f) for f in merged["split"]["fractions"])
    if len(fractions) != 3:
        raise ConfigError("split.fractions needs three values: tailor, reserve, eval")

    surrogate = dict(merged["surrogate"])
    extra = set(surrogate) - {"epochs", "learning_rate", "hidden", "train_tags"}
    if extra:
        raise ConfigError(f"unknown surrogate settings: {sorted(extra)}")

    transcriber = _oracle(merged["transcriber"], "transcriber", ("mock", "plugin"))
    extra = set(transcriber.params) - ({"k", "floor", "drop_threshold"} if transcriber.backend == "mock" else set())
    if extra:
        raise ConfigError(f"unknown transcriber settings: {sorted(extra)}")

    return RunConfig(
        seed=merged["seed"],
        run_dir=path(merged["run_dir"]),
        corpus_path=corpus_path,
        manifest_name=corpus.get("manifest", "manifest.jsonl"),
        synth=dict(corpus.get("synth") or {}),
        split_fractions=fractions,
        features=features,
        surrogate=surrogate,
        classifier=_oracle(merged["classifier"], "classifier", ("surrogate", "plugin")),
        transcriber=transcriber,
        gp=gp,
        generations_pretrain=k_pre,
        generations_tailor=k_tail,
        multipliers=multipliers,
        amplitude_ceiling=ceiling,
        defenses=defenses,
        attribute=dict(merged["attribute"]),
        raw=merged,
    )


def load_config(path=None, seed: int | None = None, run_dir=None) -> RunConfig:
    """Read a YAML/JSON config file; ``None`` means all defaults (seed still required)."""
    if path is None:
        return build_config({}, seed, run_dir)
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return build_config(data, seed, run_dir, base_dir=path.parent)


def dump_config(config: RunConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True, default=str)


__all__ = ["DEFAULTS", "OracleConfig", "RunConfig", "build_config", "derive_seed", "dump_config", "load_config"]
