"""One function per CLI subcommand. Each reads its inputs from the run
directory, writes its outputs there and records them in ``artifacts.json``.

Everything written is a pure function of config, seed and corpus. Wall-clock
data goes to ``run_metadata.json`` only, which ``artifacts.json`` never hashes.
"""

from __future__ import annotations

import contextlib
import datetime as _dt
import hashlib
import json
import logging
import os
import time
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from ..audio import mix
from ..data import Sample
from ..defenses import defense_sweep
from ..errors import ConfigError, DataError, RunLocked
from ..gp import EonGenome, Evaluator
from ..metrics import EvalReport, band_attribution
from ..oracles.mock import MockTranscriber
from ..oracles.plugin import PluginClassifier, PluginProcess, PluginTranscriber
from ..oracles.surrogate import SurrogateModel, train_surrogate
from .config import RunConfig
from .manifest import ManifestEntry, by_tag, load_samples, read_manifest, write_manifest
from .synth import generate_corpus
from .workflow import amplitude_sweep, evaluate_final, prefilter, run_pretrain_tailor, split

log = logging.getLogger(__name__)

STAGES = (
    "synth-corpus", "train-surrogate", "prefilter", "split", "evolve",
    "sweep", "evaluate", "defend", "attribute", "report",
)
LOCK_NAME = ".lock"
METADATA_NAME = "run_metadata.json"
ARTIFACTS_NAME = "artifacts.json"


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class RunDir:
    def __init__(self, root):
        self.root = Path(root)

    def path(self, name: str) -> Path:
        return self.root / name

    def require(self, name: str, hint: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise DataError(f"{p} not found; run '{hint}' first")
        return p

    @contextlib.contextmanager
    def lock(self) -> Iterator[None]:
        self.root.mkdir(parents=True, exist_ok=True)
        lock = self.path(LOCK_NAME)
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLocked(f"run directory {self.root} is in use (remove {lock} if no command is running)") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            lock.unlink(missing_ok=True)

    def _update_json(self, name: str, update) -> None:
        p = self.path(name)
        data = json.loads(p.read_text()) if p.exists() else {}
        update(data)
        p.write_text(_dumps(data))

    def record(self, stage: str, *names: str) -> None:
        def update(data):
            for name in names:
                data[name] = {"stage": stage, "sha256": _sha256(self.path(name))}

        self._update_json(ARTIFACTS_NAME, update)

    def write_text(self, stage: str, name: str, text: str) -> Path:
        p = self.path(name)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        self.record(stage, name)
        return p

    def write_json(self, stage: str, name: str, obj) -> Path:
        return self.write_text(stage, name, _dumps(obj))

    def write_jsonl(self, stage: str, name: str, rows: Sequence[dict]) -> Path:
        return self.write_text(stage, name, "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))

    def read_json(self, name: str, hint: str):
        return json.loads(self.require(name, hint).read_text())

    def note_timing(self, stage: str, started: float, extra: dict | None = None) -> None:
        def update(data):
            data.setdefault("stages", {})[stage] = {
                "finished_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                "elapsed_s": round(time.perf_counter() - started, 3),
                **(extra or {}),
            }

        self._update_json(METADATA_NAME, update)


# ------------------------------------------------------------------ oracles


def _manifest(cfg: RunConfig) -> list[ManifestEntry]:
    if not cfg.manifest_path.exists():
        raise DataError(f"corpus manifest {cfg.manifest_path} not found; run 'synth-corpus' or set corpus.path")
    return read_manifest(cfg.manifest_path)


def _samples(cfg: RunConfig, entries: Sequence[ManifestEntry]) -> list[Sample]:
    return load_samples(entries, cfg.corpus_root)


@contextlib.contextmanager
def oracles(cfg: RunConfig, run: RunDir, samples: Sequence[Sample]):
    """Yield (classifier, transcriber); plugin processes are closed on exit."""
    with contextlib.ExitStack() as stack:
        if cfg.classifier.backend == "surrogate":
            classifier = SurrogateModel.load(run.require("surrogate.json", "train-surrogate"))
        else:
            proc = stack.enter_context(PluginProcess(cfg.classifier.command, "classifier", cfg.classifier.timeout))
            classifier = PluginClassifier(proc, cfg.classifier.labels)
        if cfg.transcriber.backend == "mock":
            transcriber = MockTranscriber.from_pairs(
                [(s.clip, " ".join(s.transcript)) for s in samples], cfg.mock_settings
            )
        else:
            proc = stack.enter_context(PluginProcess(cfg.transcriber.command, "transcriber", cfg.transcriber.timeout))
            transcriber = PluginTranscriber(proc)
        yield classifier, transcriber


def _evaluator(cfg: RunConfig, classifier, transcriber) -> Evaluator:
    return Evaluator(classifier, transcriber, cfg.gp.bonus, cfg.gp.confidence_threshold)


def _split_samples(cfg: RunConfig, run: RunDir, *tags: str) -> tuple[list[ManifestEntry], list[Sample]]:
    entries = read_manifest(run.require("manifest_split.jsonl", "split"))
    chosen = by_tag(entries, *tags)
    return chosen, _samples(cfg, chosen)


def _oracle_name(cfg: RunConfig) -> str:
    return "surrogate" if cfg.classifier.backend == "surrogate" else "plugin:" + " ".join(cfg.classifier.command)


# ------------------------------------------------------------------- stages


def synth_corpus(cfg: RunConfig, run: RunDir) -> dict:
    if cfg.corpus_path is not None:
        raise ConfigError("corpus.path points at an existing corpus; synth-corpus only writes <run_dir>/corpus")
    out = run.path("corpus")
    try:
        entries = generate_corpus(out, seed=cfg.seed_for("corpus"), **cfg.synth)
    except TypeError as exc:
        raise ConfigError(f"corpus.synth: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"corpus.synth: {exc}") from exc
    run.record("synth-corpus", "corpus/manifest.jsonl")
    return {"clips": len(entries)}


def train_surrogate_stage(cfg: RunConfig, run: RunDir) -> dict:
    tags = cfg.surrogate.get("train_tags", ["pretrain"])
    entries = [e for e in _manifest(cfg) if e.split_tag in tags]
    if not entries:
        raise DataError(f"no manifest entries tagged {tags} to train the surrogate on")
    samples = _samples(cfg, entries)
    result = train_surrogate(
        [(s.clip, s.label) for s in samples],
        epochs=int(cfg.surrogate["epochs"]),
        learning_rate=float(cfg.surrogate["learning_rate"]),
        seed=cfg.seed_for("surrogate"),
        hidden=tuple(cfg.surrogate["hidden"]),
        features=cfg.features,
    )
    result.model.save(run.path("surrogate.json"))
    run.record("train-surrogate", "surrogate.json")
    summary = {"accuracy": result.accuracy, "final_loss": result.losses[-1], "n_samples": len(samples), "losses": result.losses}
    run.write_json("train-surrogate", "surrogate_training.json", summary)
    return {"accuracy": result.accuracy, "n_samples": len(samples)}


def prefilter_stage(cfg: RunConfig, run: RunDir) -> dict:
    entries = _manifest(cfg)
    samples = _samples(cfg, entries)
    with oracles(cfg, run, samples) as (classifier, transcriber):
        result = prefilter(entries, samples, classifier, transcriber)
    write_manifest(result.kept, run.path("manifest_prefiltered.jsonl"))
    run.record("prefilter", "manifest_prefiltered.jsonl")
    run.write_jsonl("prefilter", "prefilter_rejected.jsonl", [r.to_dict() for r in result.rejected])
    return {"kept": len(result.kept), "rejected": len(result.rejected)}


def split_stage(cfg: RunConfig, run: RunDir) -> dict:
    entries = read_manifest(run.require("manifest_prefiltered.jsonl", "prefilter"))
    tagged = split(entries, cfg.split_fractions, seed=cfg.seed_for("split"))
    write_manifest(tagged, run.path("manifest_split.jsonl"))
    run.record("split", "manifest_split.jsonl")
    counts: dict = {}
    for e in tagged:
        per = counts.setdefault(e.split_tag, {})
        per[e.speaker_id] = per.get(e.speaker_id, 0) + 1
    run.write_json("split", "split_summary.json", counts)
    return {tag: sum(v.values()) for tag, v in sorted(counts.items())}


def evolve_stage(cfg: RunConfig, run: RunDir) -> dict:
    entries, samples = _split_samples(cfg, run, "pretrain", "tailor")
    pretrain = [s for e, s in zip(entries, samples) if e.split_tag == "pretrain"]
    tailor = [s for e, s in zip(entries, samples) if e.split_tag == "tailor"]
    with oracles(cfg, run, samples) as (classifier, transcriber):
        result = run_pretrain_tailor(
            pretrain, tailor, classifier, transcriber, cfg.gp,
            cfg.generations_pretrain, cfg.generations_tailor,
            seed=cfg.seed_for("gp"), evaluator=_evaluator(cfg, classifier, transcriber),
        )
    timings = [h.pop("elapsed_s") for h in result.history]
    run.write_jsonl("evolve", "history.jsonl", result.history)
    run.write_json("evolve", "finalists.json", [f.to_dict() for f in result.finalists])
    run.write_json("evolve", "population.json", [g.to_dict() for g in result.population])
    return {"generations": len(result.history), "best_validation_esr": result.finalists[0].validation_esr, "_timings": timings}


def sweep_stage(cfg: RunConfig, run: RunDir) -> dict:
    finalists = [EonGenome.from_dict(f["genome"]) for f in run.read_json("finalists.json", "evolve")]
    entries, validation = _split_samples(cfg, run, "tailor")
    with oracles(cfg, run, validation) as (classifier, transcriber):
        result = amplitude_sweep(
            finalists, cfg.multipliers, validation, _evaluator(cfg, classifier, transcriber), cfg.amplitude_ceiling
        )
    run.write_text("sweep", "sweep.csv", result.to_csv())
    run.write_json("sweep", "selected_eon.json", result.selection())
    return {"finalist": result.finalist, "multiplier": result.multiplier}


def _selected(run: RunDir) -> tuple[EonGenome, float]:
    sel = run.read_json("selected_eon.json", "sweep")
    return EonGenome.from_dict(sel["genome"]), float(sel["multiplier"])


def evaluate_stage(cfg: RunConfig, run: RunDir) -> dict:
    genome, multiplier = _selected(run)
    _, eval_set = _split_samples(cfg, run, "eval")
    with oracles(cfg, run, eval_set) as (classifier, transcriber):
        final = evaluate_final(genome, multiplier, eval_set, _evaluator(cfg, classifier, transcriber), defenses=None)
    run.write_json("evaluate", "report.json", final.report.to_dict())
    run.write_text("evaluate", "confusion.csv", final.report.confusion_csv())
    run.write_json("evaluate", "control_report.json", final.control.to_dict())
    return {"esr": final.report.esr, "wer": final.report.wer, "control_esr": final.control.esr}


def defend_stage(cfg: RunConfig, run: RunDir) -> dict:
    genome, multiplier = _selected(run)
    baseline = EvalReport.from_dict(run.read_json("report.json", "evaluate"))
    baseline.verify()
    _, eval_set = _split_samples(cfg, run, "eval")
    with oracles(cfg, run, eval_set) as (classifier, transcriber):
        sweep = defense_sweep(
            genome, eval_set, classifier, transcriber, cfg.defenses, gain=multiplier,
            evaluator=_evaluator(cfg, classifier, transcriber), oracle_name=_oracle_name(cfg), baseline=baseline,
        )
    run.write_json("defend", "defenses.json", sweep.to_dict())
    run.write_text("defend", "defenses.csv", sweep.to_csv())
    return {r.spec.label: r.delta for r in sweep.results}


def attribute_stage(cfg: RunConfig, run: RunDir) -> dict:
    genome, multiplier = _selected(run)
    entries, eval_set = _split_samples(cfg, run, "eval")
    order = sorted(range(len(eval_set)), key=lambda i: eval_set[i].sample_id)
    chosen = [eval_set[i] for i in order[: int(cfg.attribute.get("n_clips", 8))]]
    edges = cfg.attribute.get("band_edges", [250.0, 500.0, 1000.0, 2000.0, 4000.0])
    if not chosen:
        raise DataError("no eval clips to attribute")
    eon = genome.render(chosen[0].clip.sample_rate, gain=multiplier)
    clips = []
    with oracles(cfg, run, chosen) as (classifier, _):
        for s in chosen:
            clean = band_attribution(s.clip, classifier, edges, s.label)
            mixed = band_attribution(mix(s.clip, eon), classifier, edges, s.label)
            clips.append({"sample_id": s.sample_id, "label": s.label, "clean": clean.to_dict(), "mixed": mixed.to_dict()})
    bands = [(b["low_hz"], b["high_hz"]) for b in clips[0]["clean"]["bands"]]
    mean = {
        which: [float(np.mean([c[which]["bands"][i]["score"] for c in clips])) for i in range(len(bands))]
        for which in ("clean", "mixed")
    }
    doc = {
        "eon_frequencies": sorted(t.frequency for t in genome.tones),
        "bands": [list(b) for b in bands],
        "mean_score": mean,
        "clips": clips,
    }
    run.write_json("attribute", "attribution.json", doc)
    return {"clips": len(clips)}


def _fmt(x) -> str:
    return f"{x:.4f}" if isinstance(x, float) else str(x)


def report_stage(cfg: RunConfig, run: RunDir) -> dict:
    report = EvalReport.from_dict(run.read_json("report.json", "evaluate"))
    control = EvalReport.from_dict(run.read_json("control_report.json", "evaluate"))
    report.verify()
    control.verify()
    sel = run.read_json("selected_eon.json", "sweep")
    lines = ["# Run summary", "", f"seed: {cfg.seed}", ""]
    lines += ["## Selected perturbation", "", f"finalist {sel['finalist']}, amplitude multiplier {sel['multiplier']}", ""]
    lines += ["| frequency (Hz) | amplitude | offset (s) | duration (s) |", "|---|---|---|---|"]
    for t in sel["genome"]["tones"]:
        lines.append(f"| {t['frequency']:.1f} | {t['amplitude'] * sel['multiplier']:.4f} | {t['offset']:.3f} | {t['duration']:.3f} |")
    lines += ["", "## Held-out evaluation", "", "| metric | perturbed | muted control |", "|---|---|---|"]
    for name in ("esr", "wer", "mcc", "nmi", "n_samples"):
        lines.append(f"| {name} | {_fmt(getattr(report, name))} | {_fmt(getattr(control, name))} |")
    lines += ["", "Confusion (rows true, columns predicted):", "", "```", report.confusion_csv().rstrip(), "```"]
    if run.path("defenses.json").exists():
        d = run.read_json("defenses.json", "defend")
        lines += ["", "## Defenses", "", "| defense | ESR | delta |", "|---|---|---|"]
        for res in d["defenses"]:
            label = res["defense"].get("name") or res["defense"]["kind"]
            lines.append(f"| {label} | {res['esr']:.4f} | {res['delta']:+.4f} |")
    if run.path("attribution.json").exists():
        a = run.read_json("attribution.json", "attribute")
        lines += ["", "## Band attribution (mean true-class score drop when the band is removed)", ""]
        lines += ["| band (Hz) | clean | perturbed |", "|---|---|---|"]
        for (lo, hi), c, m in zip(a["bands"], a["mean_score"]["clean"], a["mean_score"]["mixed"]):
            lines.append(f"| {lo:.0f}-{hi:.0f} | {c:+.4f} | {m:+.4f} |")
    if run.path("history.jsonl").exists():
        hist = [json.loads(line) for line in run.path("history.jsonl").read_text().splitlines() if line]
        if hist:
            lines += ["", "## Evolution", "", f"{len(hist)} generations; final best fitness {hist[-1]['best_fitness']:.3f}, "
                      f"best hall-of-fame fitness {max(h['hall_of_fame_fitness'] for h in hist):.3f}"]
    run.write_text("report", "summary.md", "\n".join(lines) + "\n")
    return {"esr": report.esr}


HANDLERS = {
    "synth-corpus": synth_corpus,
    "train-surrogate": train_surrogate_stage,
    "prefilter": prefilter_stage,
    "split": split_stage,
    "evolve": evolve_stage,
    "sweep": sweep_stage,
    "evaluate": evaluate_stage,
    "defend": defend_stage,
    "attribute": attribute_stage,
    "report": report_stage,
}


def run_stage(name: str, cfg: RunConfig, run: RunDir | None = None) -> dict:
    """Run one stage under the run-directory lock."""
    run = run or RunDir(cfg.run_dir)
    with run.lock():
        return _run_unlocked(name, cfg, run)


def _run_unlocked(name: str, cfg: RunConfig, run: RunDir) -> dict:
    started = time.perf_counter()
    log.info("stage %s", name)
    info = HANDLERS[name](cfg, run)
    extra = {"generation_elapsed_s": info.pop("_timings")} if "_timings" in info else None
    run.write_json(name, "config.json", cfg.to_dict())
    run.note_timing(name, started, extra)
    return info


def run_pipeline(cfg: RunConfig, stages: Sequence[str] | None = None, run: RunDir | None = None) -> dict:
    """Run stages in order (all of them by default; synth-corpus only when no corpus path is set)."""
    run = run or RunDir(cfg.run_dir)
    if stages is None:
        stages = [s for s in STAGES if not (s == "synth-corpus" and cfg.corpus_path is not None)]
    out = {}
    with run.lock():
        for name in stages:
            out[name] = _run_unlocked(name, cfg, run)
    return out
