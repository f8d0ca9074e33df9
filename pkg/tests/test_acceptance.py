"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines inline;
a summary section is printed at the end of any run that includes this file.
"""

import math
import time

import numpy as np

import oracles
from emofuse import audio_features as af
from emofuse import classifiers as clf
from emofuse import cli, fusion
from emofuse import face_detect as fd
from emofuse import lbp_features as lbp
from emofuse.signal_io import AudioClip, GrayImage
from emofuse.synth import make_fixture

SR = 16000


def sine(freq, seconds=0.5, amp=0.5):
    t = np.arange(int(SR * seconds)) / SR
    return amp * np.sin(2 * math.pi * freq * t)


def test_dsp_matches_oracles(criterion):
    with criterion(1, "DSP oracle equivalence (spectrum, MFCC, YIN difference)"):
        rng = np.random.default_rng(2024)
        frames = rng.uniform(-1, 1, (100, 480))
        start = time.perf_counter()
        for x in frames:
            fr = af.Frame(x)
            spec = af.magnitude_spectrum(fr).magnitudes
            assert oracles.relative_error(spec, oracles.dft_magnitudes(x)) < 1e-6
            assert oracles.relative_error(af.mfcc(fr), oracles.mfcc(x)) < 1e-6
            got = af.yin_difference(x, 26, 160).d
            assert oracles.relative_error(got, oracles.yin_difference(x, 26, 160)) < 1e-6
        # the matrix DFT itself against a pure loop on a couple of frames
        for x in frames[:2]:
            assert oracles.relative_error(af.magnitude_spectrum(af.Frame(x)).magnitudes,
                                          oracles.dft_magnitudes_loop(x)) < 1e-6
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_pitch_accuracy(criterion):
    with criterion(2, "pitch within 2% on sines and an impulse train; silence gives 0"):
        for f0 in (60, 100, 200, 300, 440, 600):
            got = af.estimate_pitch(AudioClip(sine(f0)))
            assert abs(got - f0) <= 0.02 * f0, (f0, got)

        pulses = np.zeros(8000)
        pulses[::100] = 0.9
        assert abs(af.estimate_pitch(AudioClip(pulses)) - 160) <= 0.02 * 160

        assert af.estimate_pitch(AudioClip(np.zeros(8000))) == 0.0

        # 200 Hz: the multiples 160 and 240 dip below 0.7 as well; the first dip wins
        x = sine(200)
        dn = af.yin_normalize(af.yin_difference(x, 26, 320)).d_norm
        for lag in (80, 160, 240):
            assert dn[lag - 26] < 0.7
        assert af.yin_lag(x) == 80


def test_scaling_invariance(criterion):
    with criterion(3, "amplitude-scaling invariants over 50 random clips"):
        rng = np.random.default_rng(77)
        invariant = [i for i, name in enumerate(af.FEATURE_NAMES[1:])
                     if name in ("zcr", "entropy", "centroid", "spread", "flux",
                                 "rolloff", "spec_entropy")]
        e = af.FEATURE_NAMES[1:].index("energy")
        for _ in range(50):
            base = sine(rng.uniform(80, 500), amp=rng.uniform(0.05, 0.3))
            base = base + rng.normal(0, 0.05, base.size)
            c = rng.uniform(0.1, 2.5)
            a, b = AudioClip(base), AudioClip(base * c)
            fa = af.frame_features(af.frame_signal(a))
            fb = af.frame_features(af.frame_signal(b))
            np.testing.assert_allclose(fb[:, invariant], fa[:, invariant], rtol=1e-9, atol=0)
            np.testing.assert_allclose(fb[:, e], c * c * fa[:, e], rtol=1e-9, atol=0)
            pa, pb = af.estimate_pitch(a), af.estimate_pitch(b)
            assert abs(pb - pa) <= 1e-9 * abs(pa)


def test_entropy_bounds(criterion):
    with criterion(4, "entropy bounds and equality cases"):
        top = math.log2(10)
        rng = np.random.default_rng(5)
        for _ in range(200):
            fr = af.Frame(rng.normal(0, rng.uniform(0.01, 0.5), 480) * rng.integers(0, 2, 480))
            for h in (af.energy_entropy(fr), af.spectral_entropy(af.magnitude_spectrum(fr))):
                assert 0.0 <= h <= top + 1e-12

        assert abs(af.energy_entropy(af.Frame(np.full(480, 0.3))) - top) <= 1e-9
        burst = np.zeros(480)
        burst[96:144] = 0.5
        assert af.energy_entropy(af.Frame(burst)) == 0.0

        sizes = [len(g) for g in np.array_split(np.arange(257), 10)]
        flat = np.concatenate([np.full(n, 1 / math.sqrt(n)) for n in sizes])
        assert abs(af.spectral_entropy(af.Spectrum(flat)) - top) <= 1e-9
        peak = np.zeros(257)
        peak[40] = 3.0
        assert af.spectral_entropy(af.Spectrum(peak)) == 0.0


def test_lbp_exactness(criterion):
    with criterion(5, "LBP codes, uniform map and face descriptor"):
        ring = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)]
        px = np.full((3, 3), 90)
        for (r, c), bit in zip(ring, "10011110"):
            px[r, c] = 130 if bit == "1" else 50
        assert lbp.lbp_code(GrayImage(px), 1, 1) == 158

        table = lbp.build_uniform_map()
        assert int(np.sum(table < 58)) == 58
        assert sorted(set(table[table < 58].tolist())) == list(range(58))
        assert all((table[c] < 58) == oracles.is_uniform(c) for c in range(256))

        v = lbp.facial_feature_vector(GrayImage(np.full((128, 112), 200)))
        assert v.shape == (3304,) and int(v.sum()) == 13860
        assert int(v.reshape(56, 59)[:, table[255]].sum()) == 13860

        rng = np.random.default_rng(9)
        for _ in range(50):
            img = rng.integers(0, 256, (6, 6))
            want = [[oracles.lbp_code(img, x, y) for x in range(1, 5)] for y in range(1, 5)]
            assert lbp.lbp_image(GrayImage(img)).tolist() == want


def test_integral_image(criterion):
    with criterion(6, "integral-image rectangle sums equal brute force"):
        rng = np.random.default_rng(31)
        for _ in range(10):
            img = rng.integers(0, 256, (8, 8))
            ii = fd.integral_image(GrayImage(img))
            for y in range(8):
                for x in range(8):
                    for h in range(1, 9 - y):
                        for w in range(1, 9 - x):
                            assert ii.rect_sum(x, y, w, h) == oracles.rect_sum(img, x, y, w, h)


def test_detection_fixture(criterion):
    with criterion(7, "one-stump cascade finds the bright-top face, nothing on blank"):
        cascade = fd.cascade_from_dict({
            "window": [24, 24],
            "stages": [{"threshold": 0.5, "stumps": [{
                "rects": [[0, 0, 24, 12, 1], [0, 12, 24, 12, -1]],
                "threshold": 450.0, "left": 0.0, "right": 1.0}]}],
        })
        truth = fd.FaceBox(20, 17, 24, 24)
        px = np.full((64, 64), 100)
        px[17:29, 20:44] = 220
        px[29:41, 20:44] = 40
        boxes = fd.detect_faces(GrayImage(px), cascade)
        assert len(boxes) == 1 and boxes[0].iou(truth) >= 0.5
        assert fd.detect_faces(GrayImage(np.full((64, 64), 100)), cascade) == []


def _gaussians(rng, n):
    y = np.array(["neg", "pos"] * (n // 2))
    x = rng.normal(0, 1, (n, 2))
    x[y == "pos", 0] += 4.0
    return x, y


def test_classifier_sanity(criterion):
    with criterion(8, "KNN and SVM on two Gaussians; SVM separates a margin set"):
        rng = np.random.default_rng(8)
        x_train, y_train = _gaussians(rng, 200)
        x_test, y_test = _gaussians(rng, 200)
        for model in (clf.knn_train(x_train, y_train), clf.svm_train(x_train, y_train)):
            acc, _ = clf.evaluate(model, x_test, y_test)
            assert acc >= 0.95, (type(model).__name__, acc)

        # classes at distance >= 1 either side of the plane x0 + x1 = 0
        pts = rng.uniform(-5, 5, (120, 2))
        side = pts.sum(axis=1) / math.sqrt(2)
        pts = pts[np.abs(side) >= 1.0]
        labels = np.where(pts.sum(axis=1) > 0, "up", "down")
        svm = clf.svm_train(pts, labels)
        assert clf.evaluate(svm, pts, labels)[0] == 1.0

        again = clf.svm_train(pts, labels)
        assert clf.model_to_bytes(again) == clf.model_to_bytes(svm)
        knn = clf.knn_train(x_train, y_train)
        assert clf.model_to_bytes(clf.knn_train(x_train, y_train)) == clf.model_to_bytes(knn)


def fusion_cases():
    """20 cases whose sweep accuracies are tallied by hand below."""
    cases = []
    # video right, audio wrong: correct exactly when margin > T
    for m in (2, 2, 4, 6, 6, 6, 8, 11, 12, 15):
        cases.append(({"happy": m + 2, "sad": 2}, "angry", "happy"))
    # video wrong, audio right: correct exactly when margin <= T
    cases.append(({"angry": 4, "sad": 4}, "sad", "sad"))  # tie goes to "angry", margin 0
    for m in (1, 1, 3, 5):
        cases.append(({"angry": m + 1, "sad": 1}, "sad", "sad"))
    # both right, both wrong
    cases += [({"happy": 5}, "happy", "happy")] * 3
    cases += [({"happy": 7, "angry": 1}, "angry", "sad")] * 2
    return cases


HAND_TABLE = [0.70, 0.80, 0.70, 0.75, 0.70, 0.75, 0.60, 0.60, 0.55, 0.55, 0.55]


def test_fusion_exactness(criterion, tmp_path):
    with criterion(9, "fusion boundaries, 20-case sweep table and 11-row CSV"):
        assert fusion.fuse(("happy", 15), "sad", 9).source == "video"
        assert fusion.fuse(("happy", 9), "sad", 9).source == "audio"
        assert fusion.fuse(("happy", 1), "sad", 0).source == "video"

        cases = fusion_cases()
        assert len(cases) == 20
        rows = fusion.threshold_sweep(cases)
        assert [t for t, _ in rows] == list(range(11))
        for (_, acc), want in zip(rows, HAND_TABLE):
            assert abs(acc - want) < 1e-12

        text = ["video_counts,audio_label,true_label"]
        text += [f"{fusion.format_counts(c)},{a},{t}" for c, a, t in cases]
        (tmp_path / "cases.csv").write_text("\n".join(text) + "\n")
        assert cli.main(["sweep", str(tmp_path / "cases.csv"), "--out",
                         str(tmp_path / "sweep.csv")]) == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "threshold,accuracy"
        assert len(lines[1:]) == 11
        assert [float(ln.split(",")[1]) for ln in lines[1:]] == HAND_TABLE


def _pipeline(corpus, out):
    out.mkdir()
    steps = [
        ["extract-audio", corpus / "audio_manifest.csv", "--out", out / "audio.csv"],
        ["extract-faces", corpus / "faces_manifest.csv", "--out", out / "faces.csv"],
        ["train", out / "audio.csv", "--algo", "svm", "--out", out / "audio.model"],
        ["train", out / "faces.csv", "--algo", "svm", "--out", out / "face.model"],
    ]
    for clip in ("clip_video_wins", "clip_audio_wins"):
        steps.append(["predict-fused", "--frames", corpus / clip / "frames",
                      "--wav", corpus / clip / "audio.wav",
                      "--face-model", out / "face.model", "--audio-model", out / "audio.model",
                      "--out", out / f"{clip}.json"])
    for argv in steps:
        assert cli.main(["--seed", "42"] + [str(a) for a in argv]) == 0, argv
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_end_to_end_determinism(criterion, tmp_path):
    with criterion(10, "extract, train and predict-fused twice: byte-identical, < 60 s"):
        start = time.perf_counter()
        corpus = make_fixture(tmp_path / "corpus", seed=0)
        first = _pipeline(corpus, tmp_path / "run1")
        second = _pipeline(corpus, tmp_path / "run2")
        elapsed = time.perf_counter() - start
        assert first.keys() == second.keys() and len(first) >= 8
        for name in first:
            assert first[name] == second[name], name
        assert elapsed < 60.0, f"took {elapsed:.1f}s"
