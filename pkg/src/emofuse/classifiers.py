"""KNN and one-vs-rest linear SVM (Pegasos-style subgradient training),
feature standardization, evaluation and model persistence."""

from __future__ import annotations

import hashlib
import json
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from .errors import (
    BadVersionError,
    CorruptError,
    DimMismatchError,
    KTooLargeError,
    ModelIoError,
    SingleClassError,
    TooFewSamplesError,
    UnknownLabelError,
)

DEFAULT_K = 3
DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 200

MODEL_MAGIC = b"EMOFUSE\x00"
MODEL_VERSION = 1


def label_set(labels: Sequence[str]) -> List[str]:
    labels = sorted(set(labels))
    if not labels:
        raise ValueError("label set is empty")
    return labels


def _as_matrix(vectors) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise DimMismatchError(f"expected a 2-D array of vectors, got shape {x.shape}")
    return x


# -- standardization ---------------------------------------------------------

@dataclass(eq=False)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.size

    def apply(self, vectors) -> np.ndarray:
        x = np.asarray(vectors, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimMismatchError(f"vector length {x.shape[-1]} != {self.dim}")
        return (x - self.mean) / self.std


def fit_standardizer(vectors) -> Standardizer:
    """Per-dimension mean and population std; constant dimensions get std 1."""
    try:
        x = _as_matrix(vectors)
    except ValueError as exc:  # ragged input
        raise DimMismatchError(str(exc)) from exc
    if x.shape[0] < 2:
        raise TooFewSamplesError(f"need at least 2 vectors, got {x.shape[0]}")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0] = 1.0
    return Standardizer(mean, std)


def apply_standardizer(s: Standardizer, vector) -> np.ndarray:
    return s.apply(vector)


# -- models ------------------------------------------------------------------

@dataclass(eq=False)
class KnnModel:
    standardizer: Standardizer
    vectors: np.ndarray  # standardized
    labels: List[str]
    k: int = DEFAULT_K
    label_set: List[str] = field(default_factory=list)

    kind = "knn"

    def predict(self, vector) -> str:
        q = self.standardizer.apply(vector)
        dist = np.sum((self.vectors - q) ** 2, axis=1)
        # stable sort: equal distances keep training order
        order = np.argsort(dist, kind="stable")[: self.k]
        votes = Counter(self.labels[i] for i in order)
        best = max(votes.values())
        winners = {lab for lab, n in votes.items() if n == best}
        # vote tie: the tied label whose member lies nearest
        return next(self.labels[i] for i in order if self.labels[i] in winners)


@dataclass(eq=False)
class SvmModel:
    standardizer: Standardizer
    weights: np.ndarray  # (n_classes, dim)
    biases: np.ndarray   # (n_classes,)
    label_set: List[str]
    lam: float = DEFAULT_LAMBDA
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0

    kind = "svm"

    def scores(self, vector) -> np.ndarray:
        return self.weights @ self.standardizer.apply(vector) + self.biases

    def predict(self, vector) -> str:
        # argmax returns the first maximum, i.e. the earlier label on ties
        return self.label_set[int(np.argmax(self.scores(vector)))]


def knn_train(vectors, labels: Sequence[str], k: int = DEFAULT_K) -> KnnModel:
    x = _as_matrix(vectors)
    labels = [str(lab) for lab in labels]
    if len(labels) != x.shape[0]:
        raise DimMismatchError(f"{x.shape[0]} vectors but {len(labels)} labels")
    if k < 1 or k > x.shape[0]:
        raise KTooLargeError(f"k={k} with {x.shape[0]} training samples")
    if x.shape[0] == 1:
        s = Standardizer(np.zeros(x.shape[1]), np.ones(x.shape[1]))
    else:
        s = fit_standardizer(x)
    return KnnModel(s, s.apply(x), labels, k, label_set(labels))


def knn_predict(model: KnnModel, vector) -> str:
    return model.predict(vector)


def _pegasos_binary(x: np.ndarray, y: np.ndarray, lam: float, epochs: int,
                    orders: List[np.ndarray]):
    """Subgradient descent on (lam/2)|w|^2 + mean hinge loss with step 1/(lam t).

    The bias rides along as the weight of a constant-1 input and is shrunk with
    the rest of w.  Left unregularized, the early 1/lam-sized steps pile up in b
    and swamp the class scores.
    """
    xa = np.hstack([x, np.ones((x.shape[0], 1))])
    w = np.zeros(xa.shape[1])
    t = 0
    for order in orders[:epochs]:
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (xa[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += (eta * y[i]) * xa[i]
    return w[:-1], w[-1]


def svm_train(vectors, labels: Sequence[str], lam: float = DEFAULT_LAMBDA,
              epochs: int = DEFAULT_EPOCHS, seed: int = 0) -> SvmModel:
    x = _as_matrix(vectors)
    labels = [str(lab) for lab in labels]
    if len(labels) != x.shape[0]:
        raise DimMismatchError(f"{x.shape[0]} vectors but {len(labels)} labels")
    classes = label_set(labels)
    if len(classes) < 2:
        raise SingleClassError(f"need at least 2 classes, got {classes}")
    s = fit_standardizer(x)
    xs = s.apply(x)
    rng = np.random.default_rng(seed)
    # one shuffle per epoch, shared by every class
    orders = [rng.permutation(x.shape[0]) for _ in range(epochs)]
    lab = np.array(labels)
    weights = np.zeros((len(classes), x.shape[1]))
    biases = np.zeros(len(classes))
    for c, name in enumerate(classes):
        y = np.where(lab == name, 1.0, -1.0)
        weights[c], biases[c] = _pegasos_binary(xs, y, lam, epochs, orders)
    return SvmModel(s, weights, biases, classes, lam, epochs, seed)


def svm_predict(model: SvmModel, vector) -> str:
    return model.predict(vector)


# -- evaluation --------------------------------------------------------------

@dataclass(eq=False)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    labels: List[str]
    counts: np.ndarray

    def row_percentages(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(totals > 0, 100.0 * self.counts / totals, 0.0)
        return pct

    @property
    def accuracy(self) -> float:
        total = self.counts.sum()
        return float(np.trace(self.counts) / total) if total else 0.0

    def format_table(self, width: int = 8) -> str:
        abbrev = [lab[:2].capitalize() for lab in self.labels]
        if len(set(abbrev)) != len(abbrev):
            abbrev = self.labels
        lines = ["".ljust(width) + "".join(a.rjust(width) for a in abbrev)]
        for a, row in zip(abbrev, self.row_percentages()):
            lines.append(a.ljust(width) + "".join(f"{v:.2f}".rstrip("0").rstrip(".").rjust(width)
                                                  for v in row))
        return "\n".join(lines)

    def to_csv(self) -> str:
        rows = ["true\\pred," + ",".join(self.labels)]
        for lab, row in zip(self.labels, self.counts):
            rows.append(lab + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(rows) + "\n"


def evaluate(model, vectors, labels: Sequence[str]):
    """Accuracy and confusion matrix of ``model`` on a labeled test set."""
    classes = list(model.label_set)
    index = {lab: i for i, lab in enumerate(classes)}
    unknown = sorted(set(labels) - set(index))
    if unknown:
        raise UnknownLabelError(f"labels not known to the model: {unknown}")
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for vec, truth in zip(vectors, labels):
        pred = model.predict(vec)
        counts[index[truth], index[pred]] += 1
    cm = ConfusionMatrix(classes, counts)
    return cm.accuracy, cm


# -- persistence -------------------------------------------------------------
# layout: magic | u16 version | u64 payload length | payload | sha256(payload)
# payload: u32 header length | JSON header | raw little-endian float64 arrays

def _model_arrays(model) -> tuple[dict, Dict[str, np.ndarray]]:
    meta = {"kind": model.kind, "label_set": list(model.label_set)}
    arrays = {"std_mean": model.standardizer.mean, "std_std": model.standardizer.std}
    if isinstance(model, KnnModel):
        meta.update(k=model.k, labels=list(model.labels))
        arrays["vectors"] = model.vectors
    elif isinstance(model, SvmModel):
        meta.update(lam=model.lam, epochs=model.epochs, seed=model.seed)
        arrays.update(weights=model.weights, biases=model.biases)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return meta, arrays


def model_to_bytes(model) -> bytes:
    meta, arrays = _model_arrays(model)
    blobs = []
    meta["arrays"] = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        meta["arrays"].append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = struct.pack("<I", len(header)) + header + b"".join(blobs)
    return (MODEL_MAGIC + struct.pack("<HQ", MODEL_VERSION, len(payload)) + payload
            + hashlib.sha256(payload).digest())


def model_from_bytes(data: bytes):
    if data[:len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise BadVersionError("not an emofuse model file (bad magic)")
    pos = len(MODEL_MAGIC)
    if len(data) < pos + 10:
        raise CorruptError("model file truncated inside the header")
    version, length = struct.unpack_from("<HQ", data, pos)
    if version != MODEL_VERSION:
        raise BadVersionError(f"model format version {version}, expected {MODEL_VERSION}")
    pos += 10
    payload = data[pos:pos + length]
    digest = data[pos + length:]
    if len(payload) != length or digest != hashlib.sha256(payload).digest():
        raise CorruptError("model file checksum mismatch")

    (hlen,) = struct.unpack_from("<I", payload, 0)
    meta = json.loads(payload[4:4 + hlen].decode("utf-8"))
    arrays = {}
    off = 4 + hlen
    for spec in meta["arrays"]:
        n = int(np.prod(spec["shape"], dtype=np.int64))
        arrays[spec["name"]] = np.frombuffer(payload, dtype="<f8", count=n,
                                             offset=off).reshape(spec["shape"]).copy()
        off += 8 * n
    s = Standardizer(arrays["std_mean"], arrays["std_std"])
    if meta["kind"] == "knn":
        return KnnModel(s, arrays["vectors"], meta["labels"], meta["k"], meta["label_set"])
    if meta["kind"] == "svm":
        return SvmModel(s, arrays["weights"], arrays["biases"], meta["label_set"],
                        meta["lam"], meta["epochs"], meta["seed"])
    raise CorruptError(f"unknown model kind {meta['kind']!r}")


def save_model(model, path) -> None:
    try:
        Path(path).write_bytes(model_to_bytes(model))
    except OSError as exc:
        raise ModelIoError(f"cannot write {path}: {exc}") from exc


def load_model(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ModelIoError(f"cannot read {path}: {exc}") from exc
    return model_from_bytes(data)
