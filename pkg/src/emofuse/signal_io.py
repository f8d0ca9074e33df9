"""Readers for 16 kHz PCM16 WAV audio, PGM grayscale images and sample manifests.

Video containers are never decoded here.  Frames and audio tracks are expected
to be split out beforehand (see the README for an ffmpeg recipe).
"""

from __future__ import annotations

import csv
import io
import re
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .errors import (
    BadChannelsError,
    BadLineError,
    BadMagicError,
    BadMaxvalError,
    BadRateError,
    EmptyError,
    NotPcm16Error,
    TruncatedError,
)

SAMPLE_RATE = 16000
PCM16_SCALE = 32768.0

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if self.sample_rate != SAMPLE_RATE:
            raise BadRateError(f"sample rate must be {SAMPLE_RATE}, got {self.sample_rate}")
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("AudioClip needs a non-empty 1-D sample array")
        if np.any(np.abs(samples) > 1.0):
            raise ValueError("AudioClip amplitudes must lie in [-1, 1]")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image; ``pixels`` has shape (height, width), top-left origin."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError("GrayImage pixels must be 2-D (height, width)")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ValueError("GrayImage pixels must be in 0..255")
        object.__setattr__(self, "pixels", px.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "GrayImage":
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"expected {width * height} pixels, got {values.size}")
        return cls(values.reshape(height, width))


@dataclass
class SampleManifest:
    entries: List[Tuple[Path, str]] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self) -> List[str]:
        return sorted({label for _, label in self.entries})


# -- WAV ---------------------------------------------------------------------

def read_wav(path: PathLike) -> AudioClip:
    """Load a mono 16-bit PCM WAV recorded at 16 kHz.

    Samples are divided by 32768, so -32768 maps to exactly -1.0.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            nframes = wf.getnframes()
            raw = wf.readframes(nframes)
    except wave.Error as exc:
        raise NotPcm16Error(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise TruncatedError(f"{path}: header ends prematurely") from exc

    if width != 2:
        raise NotPcm16Error(f"{path}: sample width {8 * width} bits, expected 16")
    if channels != 1:
        raise BadChannelsError(f"{path}: {channels} channels, expected mono")
    if rate != SAMPLE_RATE:
        raise BadRateError(f"{path}: {rate} Hz, expected {SAMPLE_RATE}")
    if len(raw) < nframes * 2:
        raise TruncatedError(
            f"{path}: header declares {nframes} samples, payload holds {len(raw) // 2}"
        )
    if nframes == 0:
        raise TruncatedError(f"{path}: no audio samples")
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioClip(ints.astype(np.float64) / PCM16_SCALE)


def write_wav(path: PathLike, samples) -> None:
    """Write amplitudes in [-1, 1] as mono PCM16 at 16 kHz (round to nearest)."""
    x = np.asarray(samples, dtype=np.float64)
    ints = np.clip(np.round(x * PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(SAMPLE_RATE)
        wf.writeframes(ints.tobytes())


# -- PGM ---------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data: bytes, count: int, pos: int):
    tokens = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise TruncatedError("PGM header ends prematurely")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def parse_pgm(data: bytes) -> GrayImage:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise BadMagicError(f"not a PGM file (magic {magic!r})")
    tokens, pos = _header_tokens(data, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise TruncatedError(f"malformed PGM header: {tokens!r}") from exc
    if maxval > 255:
        raise BadMaxvalError(f"maxval {maxval} exceeds 255")
    if maxval < 1 or width < 1 or height < 1:
        raise BadMaxvalError(f"invalid PGM header {width}x{height} maxval {maxval}")
    n = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        payload = data[pos + 1: pos + 1 + n]
        if len(payload) < n:
            raise TruncatedError(f"P5 raster has {len(payload)} of {n} bytes")
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        fields = data[pos:].split()
        if len(fields) < n:
            raise TruncatedError(f"P2 raster has {len(fields)} of {n} values")
        values = np.array([int(v) for v in fields[:n]], dtype=np.int64)
    if values.max(initial=0) > maxval:
        raise BadMaxvalError("pixel value exceeds declared maxval")
    return GrayImage.from_flat(width, height, values)


def read_pgm(path: PathLike) -> GrayImage:
    return parse_pgm(Path(path).read_bytes())


def write_pgm(path: PathLike, img: GrayImage, ascii: bool = False) -> None:
    px = img.pixels
    if ascii:
        buf = io.StringIO()
        buf.write(f"P2\n{img.width} {img.height}\n255\n")
        for row in px:
            buf.write(" ".join(str(int(v)) for v in row))
            buf.write("\n")
        Path(path).write_text(buf.getvalue(), encoding="ascii")
    else:
        header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
        Path(path).write_bytes(header + px.astype(np.uint8).tobytes())


# -- manifests ---------------------------------------------------------------

def read_manifest(path: PathLike) -> SampleManifest:
    """Parse a ``path,label`` manifest.

    Relative paths are resolved against the manifest's own directory.
    """
    path = Path(path)
    base = path.parent
    entries = []
    text = path.read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader([stripped]))
        if len(fields) != 2:
            raise BadLineError(f"{path}:{lineno}: expected 'path,label', got {stripped!r}")
        file_part, label = (f.strip() for f in fields)
        if not file_part or not label:
            raise BadLineError(f"{path}:{lineno}: empty path or label")
        entry = Path(file_part)
        if not entry.is_absolute():
            entry = base / entry
        entries.append((entry, label))
    if not entries:
        raise EmptyError(f"{path}: manifest has no entries")
    return SampleManifest(entries)
