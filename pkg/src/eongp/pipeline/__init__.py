from .manifest import ManifestEntry, check_leakage, load_samples, read_manifest, write_manifest
from .synth import EMOTIONS, generate_corpus
from .workflow import (
    FinalEvaluation,
    PrefilterResult,
    PretrainTailorResult,
    SweepResult,
    amplitude_sweep,
    evaluate_final,
    prefilter,
    run_pretrain_tailor,
    split,
)
from .config import RunConfig, build_config, load_config
from .stages import STAGES, RunDir, run_pipeline, run_stage

__all__ = [
    "EMOTIONS",
    "FinalEvaluation",
    "ManifestEntry",
    "PrefilterResult",
    "PretrainTailorResult",
    "RunConfig",
    "RunDir",
    "STAGES",
    "SweepResult",
    "amplitude_sweep",
    "build_config",
    "check_leakage",
    "evaluate_final",
    "generate_corpus",
    "load_config",
    "load_samples",
    "prefilter",
    "read_manifest",
    "run_pipeline",
    "run_pretrain_tailor",
    "run_stage",
    "split",
    "write_manifest",
]
