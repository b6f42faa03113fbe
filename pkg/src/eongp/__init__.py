"""Evolve universal multi-tone audio perturbations that make a speech-emotion
classifier misfire while transcription keeps working."""

from .audio import AudioClip, ParamRange, Tone, ToneRanges, mix, resample, synthesize_eon
from .errors import ConfigError, DataError, EongpError, OracleUnavailable

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "ConfigError",
    "DataError",
    "EongpError",
    "OracleUnavailable",
    "ParamRange",
    "Tone",
    "ToneRanges",
    "mix",
    "resample",
    "synthesize_eon",
]
