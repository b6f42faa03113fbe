"""JSON-lines subprocess protocol for external oracles.

Requests, one JSON object per line on the child's stdin::

    {"id": 3, "op": "classify", "sample_rate": 16000,
     "samples_b64": "<base64 of little-endian float32>", "clip_id": "..."}

Responses, one per line on the child's stdout, in any order::

    {"id": 3, "scores": {"angry": 0.1, ...}}
    {"id": 4, "transcript": "turn on the light", "confidence": 0.93}
    {"id": 5, "error": "message"}

The client pipelines requests and matches responses by id. Any protocol
failure poisons the connection: pending and later requests raise a subclass
of :class:`~eongp.errors.OracleUnavailable`.
"""

from __future__ import annotations

import base64
import itertools
import json
import shlex
import subprocess
import sys
import threading
from concurrent.futures import Future
from concurrent.futures import TimeoutError as FutureTimeout
from typing import Callable, Sequence

import numpy as np

from ..audio import AudioClip
from ..errors import OracleUnavailable, PluginExited, PluginIdMismatch, PluginProtocolError, PluginTimeout
from .base import ClassScores, TranscriptResult

ROLES = ("classifier", "transcriber")


def encode_samples(samples: np.ndarray) -> str:
    return base64.b64encode(np.asarray(samples, dtype="<f4").tobytes()).decode("ascii")


def decode_samples(payload: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(payload), dtype="<f4").astype(np.float64)


def clip_request(op: str, clip: AudioClip) -> dict:
    req = {"op": op, "sample_rate": clip.sample_rate, "samples_b64": encode_samples(clip.samples)}
    if clip.clip_id is not None:
        req["clip_id"] = clip.clip_id
    return req


class PluginProcess:
    """A running plugin child process plus a reader thread that routes responses."""

    def __init__(self, command: str | Sequence[str], role: str, timeout: float = 30.0, cwd=None, env=None):
        if role not in ROLES:
            raise ValueError(f"plugin role must be one of {ROLES}, got {role!r}")
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.role = role
        self.timeout = float(timeout)
        self._ids = itertools.count(1)
        self._pending: dict[int, Future] = {}
        self._lock = threading.Lock()
        self._failure: OracleUnavailable | None = None
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
                text=True,
                bufsize=1,
                cwd=cwd,
                env=env,
            )
        except OSError as exc:
            raise PluginExited(f"cannot launch plugin {self.command}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, name="eongp-plugin-reader", daemon=True)
        self._reader.start()

    def _fail(self, error: OracleUnavailable) -> None:
        with self._lock:
            if self._failure is None:
                self._failure = error
            pending, self._pending = self._pending, {}
        for fut in pending.values():
            if not fut.done():
                fut.set_exception(error)

    def _read_loop(self) -> None:
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
                rid = msg["id"]
            except (json.JSONDecodeError, KeyError, TypeError):
                self._fail(PluginProtocolError(f"malformed plugin response: {line[:200]!r}"))
                return
            with self._lock:
                fut = self._pending.pop(rid, None)
            if fut is None:
                self._fail(PluginIdMismatch(f"plugin answered unknown request id {rid!r}"))
                return
            fut.set_result(msg)
        code = self._proc.wait()
        self._fail(PluginExited(f"plugin {self.command[0]} exited with code {code}"))

    def submit(self, request: dict) -> Future:
        fut: Future = Future()
        with self._lock:
            if self._failure is not None:
                raise self._failure
            rid = next(self._ids)
            self._pending[rid] = fut
            line = json.dumps({"id": rid, **request})
            try:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError, ValueError) as exc:
                self._pending.pop(rid, None)
                raise PluginExited(f"cannot write to plugin: {exc}") from exc
        return fut

    def result(self, fut: Future) -> dict:
        try:
            msg = fut.result(timeout=self.timeout)
        except FutureTimeout:
            raise PluginTimeout(f"plugin did not answer within {self.timeout:g} s") from None
        if "error" in msg:
            raise OracleUnavailable(f"plugin reported error: {msg['error']}")
        return msg

    def request(self, request: dict) -> dict:
        return self.result(self.submit(request))

    def close(self) -> None:
        try:
            if self._proc.stdin and not self._proc.stdin.closed:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class PluginClassifier:
    def __init__(self, process: PluginProcess, labels: Sequence[str]):
        if process.role != "classifier":
            raise ValueError("PluginClassifier needs a process launched with role 'classifier'")
        self.process = process
        self.labels = tuple(labels)

    def classify(self, clip: AudioClip) -> ClassScores:
        msg = self.process.request(clip_request("classify", clip))
        if not isinstance(msg.get("scores"), dict):
            raise PluginProtocolError(f"classify response without a scores object: {msg}")
        try:
            return ClassScores.from_mapping(msg["scores"], self.labels)
        except (TypeError, ValueError, OracleUnavailable) as exc:
            raise PluginProtocolError(f"bad scores from plugin: {exc}") from exc


class PluginTranscriber:
    def __init__(self, process: PluginProcess):
        if process.role != "transcriber":
            raise ValueError("PluginTranscriber needs a process launched with role 'transcriber'")
        self.process = process

    def transcribe(self, clip: AudioClip) -> TranscriptResult:
        msg = self.process.request(clip_request("transcribe", clip))
        try:
            return TranscriptResult(str(msg["transcript"]), float(msg["confidence"]))
        except (KeyError, TypeError, ValueError, OracleUnavailable) as exc:
            raise PluginProtocolError(f"bad transcription response {msg}: {exc}") from exc


def serve(
    classify: Callable[[AudioClip], dict] | None = None,
    transcribe: Callable[[AudioClip], tuple[str, float]] | None = None,
    stdin=None,
    stdout=None,
) -> None:
    """Plugin-side loop: answer requests from ``stdin`` until it closes.

    ``classify`` returns a ``{label: probability}`` mapping; ``transcribe``
    returns ``(transcript, confidence)``.
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        rid = req.get("id")
        try:
            clip = AudioClip.from_unclipped(decode_samples(req["samples_b64"]), req["sample_rate"], req.get("clip_id"))
            if req["op"] == "classify" and classify is not None:
                reply = {"id": rid, "scores": {k: float(v) for k, v in classify(clip).items()}}
            elif req["op"] == "transcribe" and transcribe is not None:
                text, conf = transcribe(clip)
                reply = {"id": rid, "transcript": text, "confidence": float(conf)}
            else:
                reply = {"id": rid, "error": f"unsupported op {req.get('op')!r}"}
        except Exception as exc:  # reported to the client, never swallowed
            reply = {"id": rid, "error": f"{type(exc).__name__}: {exc}"}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
