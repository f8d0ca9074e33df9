"""Decision-level fusion of a per-frame video vote with the audio prediction.

The video label is the most frequent per-frame prediction.  When it leads the
runner-up by more than ``threshold`` frames it is trusted; otherwise the audio
label wins.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import EmptyCountsError, NoCasesError, NoFramesError

DEFAULT_THRESHOLD = 9
SWEEP_THRESHOLDS = tuple(range(11))

EmotionCounts = Dict[str, int]


@dataclass(frozen=True)
class FusionDecision:
    label: str
    source: str  # "video" or "audio"
    margin: int
    video_label: str
    audio_label: str

    def to_dict(self) -> dict:
        return {"label": self.label, "source": self.source, "margin": self.margin,
                "video_label": self.video_label, "audio_label": self.audio_label}


def count_labels(predictions: Iterable[str]) -> EmotionCounts:
    counts = dict(sorted(Counter(predictions).items()))
    if not counts:
        raise NoFramesError("no frames to count")
    return counts


def count_frame_emotions(frame_vectors: Sequence, model) -> EmotionCounts:
    """Classify every frame independently and tally the predicted labels."""
    if len(frame_vectors) == 0:
        raise NoFramesError("no frames to classify")
    return count_labels(model.predict(v) for v in frame_vectors)


def video_emotion(counts: EmotionCounts) -> Tuple[str, int]:
    """(top label, lead over the runner-up).  Ties go to the lexicographically
    first label with margin 0; a lone label's margin is its full count."""
    positive = {lab: n for lab, n in counts.items() if n > 0}
    if not positive:
        raise EmptyCountsError("frame counts are empty")
    ranked = sorted(positive.items(), key=lambda kv: (-kv[1], kv[0]))
    top_label, top = ranked[0]
    second = ranked[1][1] if len(ranked) > 1 else 0
    return top_label, top - second


def fuse(video: Tuple[str, int], audio_label: str,
         threshold: float = DEFAULT_THRESHOLD) -> FusionDecision:
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    video_label, margin = video
    if margin > threshold:
        return FusionDecision(video_label, "video", margin, video_label, audio_label)
    return FusionDecision(audio_label, "audio", margin, video_label, audio_label)


def threshold_sweep(cases: Sequence[Tuple[EmotionCounts, str, str]],
                    thresholds: Sequence[int] = SWEEP_THRESHOLDS) -> List[Tuple[int, float]]:
    """Fused accuracy at each threshold for (counts, audio label, true label) cases."""
    if not cases:
        raise NoCasesError("threshold sweep needs at least one case")
    videos = [(video_emotion(counts), audio, truth) for counts, audio, truth in cases]
    out = []
    for thr in thresholds:
        hits = sum(fuse(v, audio, thr).label == truth for v, audio, truth in videos)
        out.append((thr, hits / len(videos)))
    return out


def parse_counts(text: str) -> EmotionCounts:
    """Parse ``label:count;label:count``."""
    counts: EmotionCounts = {}
    for item in filter(None, (p.strip() for p in text.split(";"))):
        label, _, n = item.rpartition(":")
        if not label:
            raise ValueError(f"bad count entry {item!r}")
        counts[label.strip()] = counts.get(label.strip(), 0) + int(n)
    return counts


def format_counts(counts: EmotionCounts) -> str:
    return ";".join(f"{lab}:{n}" for lab, n in sorted(counts.items()))
