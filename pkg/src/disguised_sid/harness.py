"""Train/test grid over feature methods and disguise effects, plus report rendering."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from . import __version__
from .audio_io import EMOTIONS, UtteranceRecord, load_manifest, read_wav, split_partitions
from .classifier import SMOClassifier
from .disguise import DEFAULT_CARRIER_HZ, DEFAULT_SEMITONES, EFFECTS, DisguiseSpec, canonical_effect
from .exceptions import ParameterError, SidError
from .features import FeatureConfig, make_extractor
from .plda import PLDAClassifier

log = logging.getLogger(__name__)

EXPERIMENT_METHODS = ("mfcc_dd", "lpc", "dwpd", "plda", "dct")
BACKEND_NOTE = "backend: pooled-SVM (CNN-SVM stand-in); plda: two-covariance PLDA on mfcc_dd embeddings"
ACCURACY_COLUMN = "Average Speaker Identification Accuracy"

METHOD_LABELS = {
    "mfcc_dd": "MFCCs Δ²",
    "lpc": "LPC",
    "dwpd": "Hybrid Algorithm DWPD",
    "plda": "PLDA",
    "dct": "DCT",
}
EFFECT_LABELS = {
    "none": "NO DISGUISE (CLEAN)",
    "high_pitched": "HIGH-PITCHED",
    "low_pitched": "LOW-PITCHED",
    "evc": "EVC",
}


class ExperimentError(SidError):
    """A stage of the grid failed; the message names method, effect and utterance."""


@dataclass
class ExperimentConfig:
    manifest: str
    methods: tuple[str, ...] = EXPERIMENT_METHODS
    effects: tuple[str, ...] = EFFECTS
    features: FeatureConfig = field(default_factory=FeatureConfig)
    svm_C: float = 10.0
    svm_kernel: str = "rbf"
    svm_gamma: float | str = "scale"
    plda_iterations: int = 20
    semitones: float = DEFAULT_SEMITONES
    carrier_hz: float = DEFAULT_CARRIER_HZ
    seed: int = 0
    cache_dir: str | None = None

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.effects = tuple(canonical_effect(e) for e in self.effects)
        if not self.methods or not self.effects:
            raise ParameterError("methods and effects must be non-empty")
        bad = [m for m in self.methods if m not in EXPERIMENT_METHODS]
        if bad:
            raise ParameterError(f"unknown methods {bad}; choose from {EXPERIMENT_METHODS}")
        if isinstance(self.features, dict):
            self.features = FeatureConfig(**self.features)

    def disguise(self, effect: str) -> DisguiseSpec:
        return DisguiseSpec.default(effect, self.semitones, self.carrier_hz)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        d["effects"] = list(self.effects)
        d.pop("cache_dir")
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class CellResult:
    n_correct: int
    n_total: int
    by_emotion: dict = field(default_factory=dict)  # emotion -> [correct, total]

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_total if self.n_total else 0.0


@dataclass
class EvalReport:
    cells: dict  # (method, effect) -> CellResult
    config: dict
    version: str = __version__

    def accuracy(self, method: str, effect: str) -> float:
        return self.cells[(method, effect)].accuracy

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(m for m, _ in self.cells))

    @property
    def effects(self) -> list[str]:
        return list(dict.fromkeys(e for _, e in self.cells))

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "backend": BACKEND_NOTE,
            "config": self.config,
            "results": [
                {"method": m, "effect": e, "accuracy": c.accuracy, "n_correct": c.n_correct,
                 "n_total": c.n_total, "by_emotion": c.by_emotion}
                for (m, e), c in self.cells.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        cells = {
            (r["method"], r["effect"]): CellResult(r["n_correct"], r["n_total"], r.get("by_emotion", {}))
            for r in data["results"]
        }
        return cls(cells, data.get("config", {}), data.get("version", __version__))


def compute_accuracy(predictions: Iterable[tuple]) -> float:
    """Top-1 exact-match rate over (true_id, predicted_id) pairs."""
    pairs = list(predictions)
    if not pairs:
        raise ParameterError("no predictions to score")
    return sum(1 for t, p in pairs if t == p) / len(pairs)


def _feature_method(method: str) -> str:
    return "mfcc_dd" if method == "plda" else method


def _make_backend(method: str, cfg: ExperimentConfig):
    if method == "plda":
        return make_pipeline(StandardScaler(), PLDAClassifier(n_iter=cfg.plda_iterations))
    return SMOClassifier(C=cfg.svm_C, kernel=cfg.svm_kernel, gamma=cfg.svm_gamma, random_state=cfg.seed)


def _corpus_hash(manifest: Path) -> str:
    return hashlib.sha256(manifest.read_bytes()).hexdigest()[:16]


class _EmbeddingStore:
    """Embeddings per (feature method, effect, partition), optionally cached on disk."""

    def __init__(self, cfg: ExperimentConfig, corpus_hash: str):
        self.cfg = cfg
        self.corpus_hash = corpus_hash
        self.mem: dict = {}
        self.dir = Path(cfg.cache_dir) if cfg.cache_dir else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def _path(self, fmethod, effect, partition):
        spec = self.cfg.disguise(effect)
        key = json.dumps([fmethod, self.cfg.features.as_dict(), dataclasses.asdict(spec),
                          partition, self.corpus_hash, __version__], sort_keys=True)
        return self.dir / f"{hashlib.sha256(key.encode()).hexdigest()[:24]}.npy"

    def get(self, fmethod, effect, partition):
        k = (fmethod, effect, partition)
        if k in self.mem:
            return self.mem[k]
        if self.dir:
            p = self._path(*k)
            if p.exists():
                self.mem[k] = np.load(p)
                return self.mem[k]
        return None

    def put(self, fmethod, effect, partition, value):
        self.mem[(fmethod, effect, partition)] = value
        if self.dir:
            np.save(self._path(fmethod, effect, partition), value)

    def compute(self, fmethods, effect, partition, records, stage_methods):
        missing = [m for m in fmethods if self.get(m, effect, partition) is None]
        if not missing:
            return
        spec = self.cfg.disguise(effect)
        extractors = {m: make_extractor(m, self.cfg.features) for m in missing}
        rows = {m: [] for m in missing}
        for rec in records:
            try:
                clip = spec.apply(read_wav(rec.path))
            except Exception as exc:
                raise ExperimentError(
                    f"disguise failed: methods={stage_methods(missing)} effect={effect} "
                    f"utterance={rec.path}: {exc}") from exc
            for m, ext in extractors.items():
                try:
                    rows[m].append(ext.transform([clip])[0])
                except Exception as exc:
                    raise ExperimentError(
                        f"feature extraction failed: methods={stage_methods([m])} effect={effect} "
                        f"utterance={rec.path}: {exc}") from exc
        for m in missing:
            self.put(m, effect, partition, np.vstack(rows[m]))


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    """Train each backend on clean neutral speech, then identify disguised test speech."""
    manifest = Path(cfg.manifest)
    records = load_manifest(manifest)
    train, test = split_partitions(records)
    if not train or not test:
        raise ExperimentError("manifest has an empty training or testing partition")
    y_train = np.array([r.speaker_id for r in train])
    y_test = np.array([r.speaker_id for r in test])
    emotions = [r.emotion for r in test]

    store = _EmbeddingStore(cfg, _corpus_hash(manifest))
    fmethods = list(dict.fromkeys(_feature_method(m) for m in cfg.methods))

    def stage_methods(fms):
        return [m for m in cfg.methods if _feature_method(m) in fms]

    log.info("extracting training features for %s", ", ".join(fmethods))
    store.compute(fmethods, "none", "train", train, stage_methods)

    backends = {}
    for method in cfg.methods:
        X = store.get(_feature_method(method), "none", "train")
        try:
            backends[method] = _make_backend(method, cfg).fit(X, y_train)
        except Exception as exc:
            raise ExperimentError(f"training failed: method={method}: {exc}") from exc

    cells = {}
    for effect in cfg.effects:
        log.info("effect %s: extracting test features", effect)
        store.compute(fmethods, effect, "test", test, stage_methods)
        for method in cfg.methods:
            X = store.get(_feature_method(method), effect, "test")
            try:
                pred = backends[method].predict(X)
            except Exception as exc:
                raise ExperimentError(f"identification failed: method={method} effect={effect}: {exc}") from exc
            hit = pred == y_test
            by_emotion = {}
            for emo in EMOTIONS:
                mask = np.array([e == emo for e in emotions])
                if mask.any():
                    by_emotion[emo] = [int(hit[mask].sum()), int(mask.sum())]
            cells[(method, effect)] = CellResult(int(hit.sum()), int(hit.size), by_emotion)
            log.info("%s / %s: %.1f%%", method, effect, 100 * cells[(method, effect)].accuracy)

    ordered = {(m, e): cells[(m, e)] for m in cfg.methods for e in cfg.effects}
    return EvalReport(ordered, cfg.to_dict())


def _rows_for_effect(report: EvalReport, effect: str):
    order = {m: i for i, m in enumerate(report.methods)}
    rows = [(m, c) for (m, e), c in report.cells.items() if e == effect]
    return sorted(rows, key=lambda mc: (-mc[1].accuracy, order[mc[0]]))


def emit_report(report: EvalReport, fmt: str = "markdown") -> str:
    """Render one accuracy table per effect, methods sorted by accuracy (descending)."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["effect", "method", "technique", "accuracy_pct", "n_correct", "n_total"])
        for effect in report.effects:
            for m, c in _rows_for_effect(report, effect):
                w.writerow([effect, m, METHOD_LABELS.get(m, m), f"{100 * c.accuracy:.1f}", c.n_correct, c.n_total])
        return buf.getvalue()
    if fmt != "markdown":
        raise ParameterError(f"unknown report format {fmt!r}")

    out = [f"# Speaker identification under disguise (toolkit {report.version})", "", BACKEND_NOTE, ""]
    for i, effect in enumerate(report.effects, start=1):
        label = EFFECT_LABELS.get(effect, effect.upper())
        out.append(f"## Table {i}. Performance of feature extraction techniques under {label} effect")
        out.append("")
        out.append(f"| Technique | {ACCURACY_COLUMN} |")
        out.append("|---|---|")
        for m, c in _rows_for_effect(report, effect):
            out.append(f"| {METHOD_LABELS.get(m, m)} | {100 * c.accuracy:.1f}% |")
        out.append("")
    out.append("## Resolved configuration")
    out.append("")
    out.append("```json")
    out.append(json.dumps(report.config, indent=2, sort_keys=True, ensure_ascii=False))
    out.append("```")
    return "\n".join(out) + "\n"


def parse_report_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
