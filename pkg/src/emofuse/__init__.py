"""Speech and facial-expression emotion recognition with decision-level fusion."""

from .audio_features import estimate_pitch, extract_utterance_features
from .classifiers import evaluate, knn_train, load_model, save_model, svm_train
from .face_detect import crop_face, detect_faces, load_cascade
from .fusion import FusionDecision, fuse, threshold_sweep, video_emotion
from .lbp_features import facial_feature_vector
from .signal_io import AudioClip, GrayImage, read_manifest, read_pgm, read_wav

__version__ = "0.1.0"
