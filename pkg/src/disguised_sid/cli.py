"""Command-line entry point: ``disguised-sid <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from sklearn.preprocessing import StandardScaler

from . import __version__
from .audio_io import load_manifest, read_wav, split_partitions, write_wav
from .classifier import SMOClassifier
from .corpus import build_corpus
from .disguise import DEFAULT_CARRIER_HZ, DEFAULT_SEMITONES, DisguiseSpec
from .exceptions import SidError
from .features import EXTRACTORS, FeatureConfig, make_extractor, write_feature_csv
from .harness import EXPERIMENT_METHODS, EvalReport, ExperimentConfig, emit_report, run_experiment
from .plda import PLDAClassifier, load_plda, save_plda, train_plda

log = logging.getLogger("disguised_sid")

EFFECT_CHOICES = ("none", "high", "low", "evc")
FORMATS = ("markdown", "csv", "json")


# --- shared option groups -------------------------------------------------


def _feature_args(p):
    g = p.add_argument_group("feature parameters")
    for name, default in FeatureConfig().as_dict().items():
        kind = type(default) if default is not None else (int if name == "n_fft" else float)
        g.add_argument(f"--{name.replace('_', '-')}", dest=f"feat_{name}", type=kind, default=None,
                       help=f"default {default}")


def _features_from(args, base: FeatureConfig | None = None) -> FeatureConfig:
    base = base or FeatureConfig()
    changes = {k[5:]: v for k, v in vars(args).items() if k.startswith("feat_") and v is not None}
    return base.replace(**changes)


def _effect_args(p, default="none"):
    p.add_argument("--effect", choices=EFFECT_CHOICES, default=default)
    p.add_argument("--semitones", type=float, default=DEFAULT_SEMITONES,
                   help="shift magnitude; the sign follows the effect")
    p.add_argument("--carrier", type=float, default=DEFAULT_CARRIER_HZ, help="EVC carrier in Hz")


def _disguise_from(args) -> DisguiseSpec:
    return DisguiseSpec.default(args.effect, args.semitones, args.carrier)


def _clips(args, spec: DisguiseSpec):
    """(path, speaker or None, disguised clip) from --wav files or a manifest partition."""
    if args.wav:
        for path in args.wav:
            yield path, None, spec.apply(read_wav(path))
        return
    records = load_manifest(args.manifest)
    train, test = split_partitions(records)
    chosen = {"train": train, "test": test, "all": records}[args.partition]
    for rec in chosen:
        yield rec.path, rec.speaker_id, spec.apply(read_wav(rec.path))


def _source_args(p, partition):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--wav", nargs="+", help="one or more WAV files")
    src.add_argument("--manifest", help="corpus manifest CSV")
    p.add_argument("--partition", choices=("train", "test", "all"), default=partition)


# --- subcommands ------------------------------------------------------------


def cmd_synth(args):
    manifest = build_corpus(args.speakers, args.out, seed=args.seed, write_audio=not args.no_audio)
    print(manifest)


def cmd_disguise(args):
    spec = _disguise_from(args)
    write_wav(spec.apply(read_wav(args.input)), args.output)
    print(json.dumps({"input": args.input, "output": args.output, "effect": spec.effect,
                      "semitones": spec.semitones, "carrier_hz": spec.carrier_hz}))


def cmd_extract(args):
    cfg = _features_from(args)
    spec = _disguise_from(args)
    ext = make_extractor(args.method, cfg)
    out = Path(args.out)
    if args.frames:
        if not args.wav or len(args.wav) != 1:
            raise SidError("--frames needs exactly one --wav file")
        clip = spec.apply(read_wav(args.wav[0]))
        write_feature_csv(ext.extract(clip), out)
        return
    paths, labels, rows = [], [], []
    for path, label, clip in _clips(args, spec):
        rows.append(ext.transform([clip])[0])
        paths.append(path)
        labels.append(label or "")
    np.savez(out, X=np.vstack(rows), speaker_id=np.array(labels), path=np.array(paths),
             config=np.array(json.dumps({"method": args.method, "features": cfg.as_dict(),
                                         "effect": spec.effect, "semitones": spec.semitones,
                                         "carrier_hz": spec.carrier_hz}, sort_keys=True)))
    log.info("wrote %d embeddings to %s", len(rows), out)


def cmd_train(args):
    cfg = _features_from(args)
    fmethod = "mfcc_dd" if args.method == "plda" else args.method
    ext = make_extractor(fmethod, cfg)
    train, _ = split_partitions(load_manifest(args.manifest))
    if not train:
        raise SidError("manifest has no training records")
    X = np.vstack([ext.transform([read_wav(r.path)])[0] for r in train])
    y = np.array([r.speaker_id for r in train])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"version": __version__, "method": args.method, "features": cfg.as_dict()}
    if args.method == "plda":
        scaler = StandardScaler().fit(X)
        save_plda(train_plda(scaler.transform(X), y, n_iter=args.plda_iterations), out / "backend.npz")
        meta["scaler"] = {"mean": scaler.mean_.tolist(), "scale": scaler.scale_.tolist()}
    else:
        clf = SMOClassifier(C=args.C, kernel=args.kernel, random_state=args.seed).fit(X, y)
        clf.save(out / "backend.npz")
    (out / "model.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(out)


def _load_model(model_dir: Path):
    meta = json.loads((model_dir / "model.json").read_text(encoding="utf-8"))
    cfg = FeatureConfig(**meta["features"])
    fmethod = "mfcc_dd" if meta["method"] == "plda" else meta["method"]
    ext = make_extractor(fmethod, cfg)
    if meta["method"] == "plda":
        mean = np.array(meta["scaler"]["mean"])
        scale = np.array(meta["scaler"]["scale"])
        clf = PLDAClassifier()
        clf.model_ = load_plda(model_dir / "backend.npz", expected_dim=mean.size)
        clf.classes_ = np.array(sorted(clf.model_.enrolled))
        clf.n_features_in_ = mean.size

        def predict(X):
            return clf.predict((X - mean) / scale)
    else:
        svm = SMOClassifier.load(model_dir / "backend.npz")
        predict = svm.predict
    return meta, ext, predict


def cmd_identify(args):
    meta, ext, predict = _load_model(Path(args.model))
    spec = _disguise_from(args)
    hits = total = 0
    for path, label, clip in _clips(args, spec):
        pred = str(predict(ext.transform([clip]))[0])
        print(f"{path}\t{pred}")
        if label is not None:
            total += 1
            hits += pred == label
    if total:
        print(f"accuracy\t{hits / total:.4f}\t{hits}/{total}")


def _experiment_config(args) -> ExperimentConfig:
    data = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    overrides = {
        "manifest": args.manifest, "methods": args.methods, "effects": args.effects,
        "svm_C": args.C, "svm_kernel": args.kernel, "plda_iterations": args.plda_iterations,
        "semitones": args.semitones, "carrier_hz": args.carrier, "seed": args.seed,
        "cache_dir": args.cache_dir,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    base = FeatureConfig(**data.get("features", {}))
    data["features"] = _features_from(args, base)
    if "manifest" not in data:
        raise SidError("a manifest is required (--manifest or the config file)")
    return ExperimentConfig.from_dict(data)


def _write(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_evaluate(args):
    report = run_experiment(_experiment_config(args))
    _write(emit_report(report, args.format), args.out)
    if args.json_out:
        Path(args.json_out).write_text(emit_report(report, "json"), encoding="utf-8")


def cmd_report(args):
    report = EvalReport.from_dict(json.loads(Path(args.input).read_text(encoding="utf-8")))
    _write(emit_report(report, args.format), args.out)


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disguised-sid",
                                     description="Speaker identification under voice disguise.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="build the synthetic corpus")
    p.add_argument("--speakers", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-audio", action="store_true", help="write the manifest only")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("disguise", help="apply a disguise effect to one WAV file")
    p.add_argument("input")
    p.add_argument("output")
    _effect_args(p, default="high")
    p.set_defaults(func=cmd_disguise)

    p = sub.add_parser("extract", help="pooled embeddings (.npz) or per-frame features (.csv)")
    p.add_argument("--method", choices=sorted(EXTRACTORS), default="mfcc_dd")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", action="store_true", help="write the frame matrix of a single file")
    _source_args(p, "all")
    _effect_args(p)
    _feature_args(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a backend on the clean training partition")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=EXPERIMENT_METHODS, default="mfcc_dd")
    p.add_argument("--out", required=True, help="model directory")
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--kernel", choices=("rbf", "linear"), default="rbf")
    p.add_argument("--plda-iterations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _feature_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("identify", help="identify speakers with a trained model")
    p.add_argument("--model", required=True)
    _source_args(p, "test")
    _effect_args(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="run the method x effect grid")
    p.add_argument("--config", help="JSON experiment config; flags override it")
    p.add_argument("--manifest")
    p.add_argument("--methods", nargs="+", choices=EXPERIMENT_METHODS)
    p.add_argument("--effects", nargs="+", choices=("none", "high_pitched", "low_pitched", "evc", "high", "low"))
    p.add_argument("--C", type=float)
    p.add_argument("--kernel", choices=("rbf", "linear"))
    p.add_argument("--plda-iterations", type=int)
    p.add_argument("--semitones", type=float)
    p.add_argument("--carrier", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--cache-dir")
    p.add_argument("--format", choices=FORMATS, default="markdown")
    p.add_argument("--out", help="report path (stdout if omitted)")
    p.add_argument("--json-out", help="also write the JSON report here")
    _feature_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="re-render a JSON report")
    p.add_argument("input")
    p.add_argument("--format", choices=FORMATS, default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (SidError, OSError, ValueError, KeyError) as exc:
        print(f"disguised-sid {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
