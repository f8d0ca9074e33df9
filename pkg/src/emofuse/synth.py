"""Deterministic synthetic corpus for demos and end-to-end tests.

Real emotion corpora cannot be redistributed, so this writes stand-ins with the
same file layout: labeled WAV clips, labeled PGM frames holding a detectable
"face", per-clip frame directories and a fusion-case table.  Classes differ by
pitch/timbre (audio) and by facial texture (images); nothing here models real
emotions.

    python -m emofuse.synth OUT_DIR [--seed 0]
"""

from __future__ import annotations

import argparse
import shutil
from pathlib import Path

import numpy as np

from .face_detect import default_cascade_path
from .fusion import format_counts
from .signal_io import SAMPLE_RATE, GrayImage, write_pgm, write_wav

CLASSES = ("angry", "happy", "sad")
# fundamental (Hz), harmonic rolloff, noise level
VOICES = {"angry": (230.0, 0.9, 0.05), "happy": (320.0, 0.6, 0.02), "sad": (140.0, 0.3, 0.01)}
FRAME_SIZE = 96
FACE_SIZE = 32


def synth_voice(label: str, rng: np.random.Generator, seconds: float = 0.5) -> np.ndarray:
    f0, rolloff, noise = VOICES[label]
    f0 *= 1.0 + rng.uniform(-0.03, 0.03)
    t = np.arange(int(seconds * SAMPLE_RATE)) / SAMPLE_RATE
    x = sum(rolloff ** (h - 1) * np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
            for h in range(1, 6))
    x = x / np.max(np.abs(x)) * 0.5 + rng.normal(0.0, noise, t.size)
    return np.clip(x, -1.0, 1.0)


def _texture(label: str, n: int) -> np.ndarray:
    yy, xx = np.mgrid[0:n, 0:n]
    if label == "angry":
        return np.where((yy // 2) % 2 == 0, 1.0, -1.0)
    if label == "happy":
        return np.where((xx // 2) % 2 == 0, 1.0, -1.0)
    return np.where(((xx + yy) // 3) % 2 == 0, 1.0, -1.0)


def synth_frame(label: str, rng: np.random.Generator) -> GrayImage:
    """Noisy gray frame with one bright-top/dark-bottom textured square."""
    px = rng.normal(110.0, 6.0, (FRAME_SIZE, FRAME_SIZE))
    x, y = rng.integers(4, FRAME_SIZE - FACE_SIZE - 4, 2)
    face = np.empty((FACE_SIZE, FACE_SIZE))
    face[: FACE_SIZE // 2] = 200.0
    face[FACE_SIZE // 2:] = 50.0
    face += 25.0 * _texture(label, FACE_SIZE) + rng.normal(0.0, 4.0, face.shape)
    px[y:y + FACE_SIZE, x:x + FACE_SIZE] = face
    return GrayImage(np.clip(np.round(px), 0, 255))


def _write_manifest(path: Path, rows) -> None:
    path.write_text("".join(f"{p},{lab}\n" for p, lab in rows), encoding="utf-8")


def make_fixture(out: Path, seed: int = 0, per_class: int = 8) -> Path:
    """Write the corpus under ``out`` and return it."""
    out = Path(out)
    rng = np.random.default_rng(seed)
    for sub in ("audio", "faces"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    audio_rows, face_rows = [], []
    for label in CLASSES:
        for i in range(per_class):
            wav = f"audio/{label}_{i:02d}.wav"
            write_wav(out / wav, synth_voice(label, rng))
            audio_rows.append((wav, label))
            pgm = f"faces/{label}_{i:02d}.pgm"
            write_pgm(out / pgm, synth_frame(label, rng))
            face_rows.append((pgm, label))
    _write_manifest(out / "audio_manifest.csv", audio_rows)
    _write_manifest(out / "faces_manifest.csv", face_rows)

    # two test clips: a decisive video (17 vs 2 frames) and an ambiguous one (6 vs 3)
    clips = {
        "clip_video_wins": ("happy", 17, "sad", 2, "angry"),
        "clip_audio_wins": ("angry", 6, "happy", 3, "sad"),
    }
    for name, (major, n_major, minor, n_minor, voice) in clips.items():
        frames = out / name / "frames"
        frames.mkdir(parents=True, exist_ok=True)
        labels = [major] * n_major + [minor] * n_minor
        order = rng.permutation(len(labels))
        for idx, j in enumerate(order):
            write_pgm(frames / f"frame_{idx:04d}.pgm", synth_frame(labels[j], rng))
        write_wav(out / name / "audio.wav", synth_voice(voice, rng))

    cases = []
    for _ in range(20):
        truth = CLASSES[rng.integers(len(CLASSES))]
        other = CLASSES[(CLASSES.index(truth) + 1) % len(CLASSES)]
        top = int(rng.integers(5, 25))
        second = int(rng.integers(0, top))
        video_right = rng.random() < 0.7
        counts = {truth: top, other: second} if video_right else {other: top, truth: second}
        audio = truth if rng.random() < 0.6 else other
        cases.append((counts, audio, truth))
    lines = ["video_counts,audio_label,true_label"]
    lines += [f"{format_counts(c)},{a},{t}" for c, a, t in cases]
    (out / "fusion_cases.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    shutil.copyfile(default_cascade_path(), out / "cascade.json")
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="write the synthetic demo corpus")
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--per-class", type=int, default=8)
    args = ap.parse_args(argv)
    make_fixture(args.out, args.seed, args.per_class)
    print(f"wrote synthetic corpus to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
