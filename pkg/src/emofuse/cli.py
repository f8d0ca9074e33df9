"""emofuse command line.

Subcommands: extract-audio, extract-faces, train, eval, predict-audio,
predict-video, predict-fused, sweep.  Run ``emofuse <cmd> -h`` for details.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import audio_features, classifiers, face_detect, fusion, lbp_features
from .errors import EmofuseError, NoFramesError, SingleClassError, TooFewSamplesError
from .signal_io import read_manifest, read_pgm, read_wav

log = logging.getLogger("emofuse")

DEFAULT_SEED = 42
DEFAULT_SPLIT = 0.75
CASCADE_ENV = "EMOFUSE_CASCADE"

AUDIO_HEADER = audio_features.FEATURE_NAMES
FACE_HEADER = [f"lbp{i}" for i in range(lbp_features.FEATURE_LEN)]


# -- helpers -----------------------------------------------------------------

def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))  # map preserves input order
    return [fn(it) for it in items]


def _cascade(path: Optional[str]) -> face_detect.Cascade:
    path = path or os.environ.get(CASCADE_ENV) or face_detect.default_cascade_path()
    return face_detect.load_cascade(path)


def audio_vector(path) -> np.ndarray:
    try:
        return audio_features.extract_utterance_features(read_wav(path))
    except (EmofuseError, OSError) as exc:
        raise EmofuseError(f"{path}: {exc}") from exc


def face_vector(img, cascade: Optional[face_detect.Cascade]) -> Optional[np.ndarray]:
    """Descriptor for the largest detected face, or None when nothing is found.
    Without a cascade the image must already be a 112x128 crop."""
    if cascade is None:
        return lbp_features.facial_feature_vector(img)
    box = face_detect.largest_face(img, cascade)
    if box is None:
        return None
    return lbp_features.facial_feature_vector(face_detect.crop_face(img, box))


def _face_vector_from_file(args) -> Optional[np.ndarray]:
    path, cascade = args
    try:
        return face_vector(read_pgm(path), cascade)
    except (EmofuseError, OSError) as exc:
        raise EmofuseError(f"{path}: {exc}") from exc


def write_feature_csv(header: Sequence[str], rows: Sequence[Tuple[np.ndarray, str]],
                      integer: bool = False) -> str:
    lines = [",".join(list(header) + ["label"])]
    for vec, label in rows:
        vals = (str(int(v)) for v in vec) if integer else (f"{v:.6f}" for v in vec)
        lines.append(",".join(vals) + "," + label)
    return "\n".join(lines) + "\n"


def read_feature_csv(path) -> Tuple[np.ndarray, List[str]]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(lines) < 2:
        raise TooFewSamplesError(f"{path}: no feature rows")
    vectors, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        *vals, label = line.split(",")
        try:
            vectors.append([float(v) for v in vals])
        except ValueError as exc:
            raise EmofuseError(f"{path}:{lineno}: {exc}") from exc
        labels.append(label.strip())
    if len({len(v) for v in vectors}) != 1:
        raise EmofuseError(f"{path}: rows have different lengths")
    return np.array(vectors), labels


def stratified_split(labels: Sequence[str], fraction: float, seed: int):
    """Seeded per-class shuffle; each class contributes round(fraction*n) to training
    (at least one sample to each side when it has two or more)."""
    rng = np.random.default_rng(seed)
    lab = np.array(labels)
    train, test = [], []
    for name in sorted(set(labels)):
        idx = rng.permutation(np.flatnonzero(lab == name))
        n_train = int(round(fraction * idx.size))
        if idx.size >= 2:
            n_train = min(max(n_train, 1), idx.size - 1)
        else:
            n_train = idx.size
        train.extend(idx[:n_train].tolist())
        test.extend(idx[n_train:].tolist())
    return sorted(train), sorted(test)


def format_report(title: str, train_labels, test_labels, accuracy: float,
                  cm: classifiers.ConfusionMatrix) -> str:
    lines = [title, ""]
    lines.append("samples per class (train / test):")
    tr, te = Counter(train_labels), Counter(test_labels)
    for lab in cm.labels:
        lines.append(f"  {lab:<12} {tr.get(lab, 0):>5} / {te.get(lab, 0):<5}")
    lines.append("")
    lines.append(f"accuracy: {100.0 * accuracy:.2f}% ({int(np.trace(cm.counts))}/{int(cm.counts.sum())})")
    lines.append("")
    lines.append("confusion matrix (row %, rows = true, columns = predicted):")
    lines.append(cm.format_table())
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------

def cmd_extract_audio(args) -> int:
    manifest = read_manifest(args.manifest)
    paths = [p for p, _ in manifest.entries]
    vectors = _map(audio_vector, paths, args.jobs)
    rows = list(zip(vectors, (lab for _, lab in manifest.entries)))
    _emit(write_feature_csv(AUDIO_HEADER, rows), args.out)
    return 0


def cmd_extract_faces(args) -> int:
    manifest = read_manifest(args.manifest)
    cascade = None if args.no_detect else _cascade(args.cascade)
    vectors = _map(_face_vector_from_file, [(p, cascade) for p, _ in manifest.entries], args.jobs)
    rows = []
    for (path, label), vec in zip(manifest.entries, vectors):
        if vec is None:
            log.warning("skipped %s: no face detected", path)
            continue
        rows.append((vec, label))
    _emit(write_feature_csv(FACE_HEADER, rows, integer=True), args.out)
    return 0


def train_model(vectors, labels, algo: str, k: int, lam: float, epochs: int, seed: int):
    if algo == "knn":
        return classifiers.knn_train(vectors, labels, k)
    return classifiers.svm_train(vectors, labels, lam, epochs, seed)


def cmd_train(args) -> int:
    if args.out is None:
        raise EmofuseError("train needs --out MODEL_PATH")
    vectors, labels = read_feature_csv(args.features)
    if len(set(labels)) < 2:
        raise SingleClassError(f"{args.features}: only one class ({labels[0]})")
    train_idx, test_idx = stratified_split(labels, args.split, args.seed)
    if not test_idx or len(train_idx) < 2:
        raise TooFewSamplesError(
            f"{len(labels)} samples are too few for a {args.split:.2f} split")
    tr_labels = [labels[i] for i in train_idx]
    te_labels = [labels[i] for i in test_idx]
    model = train_model(vectors[train_idx], tr_labels, args.algo, args.k, args.lam,
                        args.epochs, args.seed)
    acc, cm = classifiers.evaluate(model, vectors[test_idx], te_labels)
    out = Path(args.out)
    classifiers.save_model(model, out)
    report = format_report(f"{args.algo} model trained on {Path(args.features).name}",
                           tr_labels, te_labels, acc, cm)
    out.with_name(out.name + ".report.txt").write_text(report, encoding="utf-8")
    out.with_name(out.name + ".confusion.csv").write_text(cm.to_csv(), encoding="utf-8")
    sys.stdout.write(report)
    return 0


def cmd_eval(args) -> int:
    model = classifiers.load_model(args.model)
    vectors, labels = read_feature_csv(args.features)
    acc, cm = classifiers.evaluate(model, vectors, labels)
    report = format_report(f"{model.kind} model {Path(args.model).name} on {Path(args.features).name}",
                           [], labels, acc, cm)
    _emit(report, args.out)
    if args.out is not None:
        out = Path(args.out)
        out.with_name(out.name + ".confusion.csv").write_text(cm.to_csv(), encoding="utf-8")
    return 0


def predict_audio(model, wav) -> str:
    return model.predict(audio_vector(wav))


def video_counts(model, frames_dir, cascade) -> fusion.EmotionCounts:
    frames = sorted(Path(frames_dir).glob("*.pgm"))
    if not frames:
        raise NoFramesError(f"{frames_dir}: no .pgm frames")
    preds = []
    for path in frames:
        vec = _face_vector_from_file((path, cascade))
        if vec is None:
            log.warning("skipped %s: no face detected", path)
            continue
        preds.append(model.predict(vec))
    if not preds:
        raise NoFramesError(f"{frames_dir}: no frame contained a detectable face")
    return fusion.count_labels(preds)


def cmd_predict_audio(args) -> int:
    model = classifiers.load_model(args.model)
    _emit(_json({"audio_label": predict_audio(model, args.wav)}), args.out)
    return 0


def cmd_predict_video(args) -> int:
    model = classifiers.load_model(args.model)
    cascade = None if args.no_detect else _cascade(args.cascade)
    counts = video_counts(model, args.frames, cascade)
    label, margin = fusion.video_emotion(counts)
    _emit(_json({"video_counts": counts, "video_label": label, "margin": margin}), args.out)
    return 0


def cmd_predict_fused(args) -> int:
    if not Path(args.wav).is_file():
        raise EmofuseError(f"{args.wav}: no such WAV file")
    face_model = classifiers.load_model(args.face_model)
    audio_model = classifiers.load_model(args.audio_model)
    cascade = None if args.no_detect else _cascade(args.cascade)
    counts = video_counts(face_model, args.frames, cascade)
    video = fusion.video_emotion(counts)
    audio_label = predict_audio(audio_model, args.wav)
    decision = fusion.fuse(video, audio_label, args.threshold)
    result = {"video_counts": counts, "threshold": args.threshold, **decision.to_dict()}
    _emit(_json(result), args.out)
    return 0


def read_cases(path):
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    cases = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise EmofuseError(f"{path}:{lineno}: expected video_counts,audio_label,true_label")
        try:
            counts = fusion.parse_counts(fields[0])
        except ValueError as exc:
            raise EmofuseError(f"{path}:{lineno}: {exc}") from exc
        cases.append((counts, fields[1], fields[2]))
    return cases


def cmd_sweep(args) -> int:
    rows = fusion.threshold_sweep(read_cases(args.cases))
    text = "threshold,accuracy\n" + "".join(f"{t},{a:.6f}\n" for t, a in rows)
    _emit(text, args.out)
    return 0


# -- argument parsing --------------------------------------------------------

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(DEFAULT_SEED), help="RNG seed (default 42)")
    p.add_argument("--threshold", type=_threshold, default=d(fusion.DEFAULT_THRESHOLD),
                   help="fusion margin threshold in frames (default 9)")
    p.add_argument("--split", type=_fraction, default=d(DEFAULT_SPLIT),
                   help="training fraction for train (default 0.75)")
    p.add_argument("--out", type=Path, default=d(None), help="output path (default stdout)")


def _threshold(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("threshold must be >= 0")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("split must be in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emofuse", description=__doc__.splitlines()[0])
    _add_globals(ap, suppress=False)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _add_globals(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    def detection(p):
        p.add_argument("--cascade", help=f"cascade JSON (default ${CASCADE_ENV} or bundled)")
        p.add_argument("--no-detect", action="store_true",
                       help="inputs are already 112x128 face crops")

    p = command("extract-audio", cmd_extract_audio, "utterance feature CSV from a WAV manifest")
    p.add_argument("manifest")
    p.add_argument("--jobs", type=int, default=1)

    p = command("extract-faces", cmd_extract_faces, "3304-feature CSV from a PGM manifest")
    p.add_argument("manifest")
    p.add_argument("--jobs", type=int, default=1)
    detection(p)

    p = command("train", cmd_train, "train a model on a feature CSV with a held-out report")
    p.add_argument("features")
    p.add_argument("--algo", choices=("knn", "svm"), default="svm")
    p.add_argument("--k", type=int, default=classifiers.DEFAULT_K)
    p.add_argument("--lam", type=float, default=classifiers.DEFAULT_LAMBDA)
    p.add_argument("--epochs", type=int, default=classifiers.DEFAULT_EPOCHS)

    p = command("eval", cmd_eval, "evaluate a saved model on a feature CSV")
    p.add_argument("model")
    p.add_argument("features")

    p = command("predict-audio", cmd_predict_audio, "classify one WAV clip")
    p.add_argument("model")
    p.add_argument("wav")

    p = command("predict-video", cmd_predict_video, "per-frame vote over a frame directory")
    p.add_argument("model")
    p.add_argument("frames")
    detection(p)

    p = command("predict-fused", cmd_predict_fused, "fuse video frame votes with audio")
    p.add_argument("--frames", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--face-model", required=True)
    p.add_argument("--audio-model", required=True)
    detection(p)

    p = command("sweep", cmd_sweep, "fused accuracy for thresholds 0..10")
    p.add_argument("cases", help="CSV: video_counts,audio_label,true_label")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (EmofuseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
