"""Interview ingestion, tri-modal sentence assembly, batching, and a synthetic corpus.

Corpus layout::

    <root>/labels.csv              patient_id,phq_score
    <root>/split.tsv               patient_id<TAB>train|validation
    <root>/embeddings.txt          word vectors (synthetic corpora ship their own)
    <root>/<id>/<id>_AUDIO.wav
    <root>/<id>/<id>_KEYPOINTS.csv
    <root>/<id>/<id>_TRANSCRIPT.csv start_time,stop_time,speaker,value
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp, text, visual
from .config import MODALITIES, RunConfig
from .errors import EmptySegment, FormatError, IngestionError, InputError, ParameterError
from .seeding import derive_rng

log = logging.getLogger(__name__)

PHQ_MAX = 24
MDD_THRESHOLD = 10
TRANSCRIPT_HEADER = ["start_time", "stop_time", "speaker", "value"]


def mdd_label(phq):
    return int(phq >= MDD_THRESHOLD)


@dataclass(frozen=True)
class TranscriptRow:
    start: float
    stop: float
    speaker: str
    text: str


@dataclass
class InterviewRecord:
    patient_id: str
    phq_score: int
    transcript: list
    audio: dsp.AudioClip | None = None
    keypoints: visual.KeypointTrack | None = None

    def __post_init__(self):
        if not 0 <= self.phq_score <= PHQ_MAX:
            raise IngestionError(f"PHQ score {self.phq_score} for {self.patient_id} outside 0-{PHQ_MAX}")


@dataclass(eq=False)
class SentenceSample:
    patient_id: str
    sentence_index: int
    label_phq: int
    audio_features: np.ndarray | None = None
    visual_features: np.ndarray | None = None
    text_features: np.ndarray | None = None
    start: float = 0.0
    stop: float = 0.0

    @property
    def label_mdd(self):
        return mdd_label(self.label_phq)

    def features(self, modality):
        return {
            "audio": self.audio_features,
            "visual": self.visual_features,
            "linguistic": self.text_features,
        }[modality]


@dataclass
class SplitManifest:
    train: list = field(default_factory=list)
    validation: list = field(default_factory=list)

    def __post_init__(self):
        overlap = set(self.train) & set(self.validation)
        if overlap:
            raise FormatError(f"patients in both splits: {sorted(overlap)}")

    def patients(self, split):
        if split not in ("train", "validation"):
            raise ParameterError(f"unknown split {split!r}")
        return list(getattr(self, split))

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for pid in self.train:
                fh.write(f"{pid}\ttrain\n")
            for pid in self.validation:
                fh.write(f"{pid}\tvalidation\n")

    @classmethod
    def load(cls, path):
        train, val = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or parts[1] not in ("train", "validation"):
                    raise FormatError("expected 'patient_id<TAB>train|validation'", path=path, line=lineno)
                (train if parts[1] == "train" else val).append(parts[0])
        return cls(train, val)


# ---------------------------------------------------------------- ingestion


def read_labels(path):
    path = Path(path)
    labels = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open labels file ({exc.strerror})", path=path) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["patient_id", "phq_score"]:
            raise IngestionError("labels header must be 'patient_id,phq_score'", path=path)
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2:
                raise IngestionError(f"line {lineno}: expected 2 columns", path=path)
            pid = row[0].strip()
            try:
                phq = int(row[1])
            except ValueError:
                raise IngestionError(f"line {lineno}: PHQ score {row[1]!r} is not an integer", path=path) from None
            if not 0 <= phq <= PHQ_MAX:
                raise IngestionError(f"line {lineno}: PHQ score {phq} outside 0-{PHQ_MAX}", path=path)
            if pid in labels:
                raise IngestionError(f"line {lineno}: duplicate patient {pid!r}", path=path)
            labels[pid] = phq
    return labels


def write_labels(path, labels):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patient_id", "phq_score"])
        for pid, phq in labels.items():
            w.writerow([pid, phq])


def read_transcript(path):
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open transcript ({exc.strerror})", path=path) from exc
    rows = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRANSCRIPT_HEADER:
            raise IngestionError("transcript header must be start_time,stop_time,speaker,value", path=path)
        for k, row in enumerate(reader, 1):
            if not row:
                continue
            if len(row) != 4:
                raise IngestionError(f"row {k}: expected 4 columns, got {len(row)}", path=path)
            try:
                start, stop = float(row[0]), float(row[1])
            except ValueError:
                raise IngestionError(f"row {k}: non-numeric timestamp", path=path) from None
            if not (math.isfinite(start) and math.isfinite(stop)) or not start < stop:
                raise IngestionError(f"row {k}: stop time {row[1]} is not after start time {row[0]}", path=path)
            rows.append(TranscriptRow(start, stop, row[2].strip(), row[3]))
    return rows


def write_transcript(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRANSCRIPT_HEADER)
        for r in rows:
            w.writerow([f"{r.start:.3f}", f"{r.stop:.3f}", r.speaker, r.text])


def interview_paths(directory, patient_id=None):
    directory = Path(directory)
    pid = patient_id or directory.name
    return {
        "audio": directory / f"{pid}_AUDIO.wav",
        "visual": directory / f"{pid}_KEYPOINTS.csv",
        "transcript": directory / f"{pid}_TRANSCRIPT.csv",
    }


def load_interview_files(patient_id, phq_score, transcript, audio=None, keypoints=None,
                         modalities=MODALITIES, resample=False):
    """Build a record from explicit file paths; only active modalities are read."""
    record_audio = record_kp = None
    if "audio" in modalities:
        if audio is None or not Path(audio).exists():
            raise IngestionError("audio file missing", path=audio)
        try:
            record_audio = dsp.read_wav(audio, resample=resample)
        except FormatError as exc:
            raise IngestionError(str(exc), path=audio) from exc
    if "visual" in modalities:
        if keypoints is None or not Path(keypoints).exists():
            raise IngestionError("keypoint file missing", path=keypoints)
        try:
            record_kp = visual.load_keypoints(keypoints)
        except FormatError as exc:
            raise IngestionError(str(exc), path=keypoints) from exc
    rows = read_transcript(transcript)
    return InterviewRecord(patient_id, phq_score, rows, record_audio, record_kp)


def load_interview(directory, labels=None, modalities=MODALITIES, resample=False):
    """Load ``<dir>/<id>_{AUDIO.wav,KEYPOINTS.csv,TRANSCRIPT.csv}`` plus the corpus label."""
    directory = Path(directory)
    pid = directory.name
    if labels is None:
        labels = read_labels(directory.parent / "labels.csv")
    if pid not in labels:
        raise IngestionError(f"no label for patient {pid!r}", path=directory.parent / "labels.csv")
    paths = interview_paths(directory, pid)
    return load_interview_files(pid, labels[pid], paths["transcript"], paths["audio"], paths["visual"],
                                modalities, resample)


# ----------------------------------------------------------- featurization


class FeaturePipeline:
    """Turns interview records into sentence samples per a :class:`RunConfig`."""

    def __init__(self, config, embeddings=None, lexicon=None, sentence_vectors=None):
        self.config = config
        self.modalities = config.modalities
        self.frame_spec = dsp.FrameSpec(config.frame_length, config.hop, config.window, config.fft_size)
        self.frame_samples, _ = self.frame_spec.samples(config.sample_rate)
        self.bank = dsp.mel_filterbank(config.n_mels, config.fft_size, config.sample_rate,
                                       config.mel_low_hz, config.mel_high_hz)
        if lexicon is None:
            lexicon = text.load_lexicon(config.lexicon) if config.lexicon else text.Lexicon()
        self.lexicon = lexicon
        if sentence_vectors is None and config.sentence_vectors:
            sentence_vectors = text.load_precomputed_sentence_vectors(config.sentence_vectors)
        self.sentence_vectors = sentence_vectors
        if "linguistic" in self.modalities and sentence_vectors is None and embeddings is None:
            raise IngestionError("linguistic modality needs a word-vector file (config key 'embeddings')")
        self.embeddings = embeddings

    def feature_dims(self):
        dims = {}
        if "audio" in self.modalities:
            dims["audio"] = self.config.n_mfcc if self.config.audio_features == "mfcc" else self.config.n_mels
        if "visual" in self.modalities:
            dims["visual"] = visual.FEATURE_WIDTH
        if "linguistic" in self.modalities:
            table = self.sentence_vectors if self.sentence_vectors is not None else self.embeddings
            dims["linguistic"] = table.dimension
        return dims

    def audio_features(self, clip):
        if len(clip.samples) < self.frame_samples:
            # too short for one frame: zero-pad to exactly one
            pad = np.zeros(self.frame_samples)
            pad[: len(clip.samples)] = clip.samples
            clip = dsp.AudioClip(pad, clip.sample_rate)
        feats = dsp.log_mel(clip, self.frame_spec, self.bank)
        if self.config.audio_features == "mfcc":
            feats = dsp.mfcc(feats, self.config.n_mfcc)
        return feats.astype(np.float32)

    def visual_features(self, track, start, stop):
        try:
            return visual.slice_track(track, start, stop, self.config.confidence_threshold).astype(np.float32)
        except EmptySegment:
            return np.zeros((1, visual.FEATURE_WIDTH), dtype=np.float32)

    def text_features(self, patient_id, index, sentence):
        if self.sentence_vectors is not None:
            return self.sentence_vectors[f"{patient_id}_{index}"][None, :].astype(np.float32)
        return text.embed_tokens(sentence, self.embeddings)

    def assemble(self, record):
        """One sample per participant transcript row; empty-text rows are skipped."""
        samples, skipped = [], 0
        participant = [r for r in record.transcript if r.speaker == self.config.participant_label]
        for index, row in enumerate(participant):
            sentence = text.canonicalize(row.text, self.lexicon)
            if not sentence.tokens:
                skipped += 1
                continue
            start = max(row.start, row.stop - self.config.max_sentence_seconds)
            sample = SentenceSample(record.patient_id, index, record.phq_score, start=row.start, stop=row.stop)
            if "audio" in self.modalities:
                sample.audio_features = self.audio_features(record.audio.slice(start, row.stop))
            if "visual" in self.modalities:
                sample.visual_features = self.visual_features(record.keypoints, start, row.stop)
            if "linguistic" in self.modalities:
                sample.text_features = self.text_features(record.patient_id, index, sentence)
            samples.append(sample)
        if skipped:
            log.info("%s: skipped %d sentence(s) with no tokens", record.patient_id, skipped)
        return samples


def assemble_sentences(record, config, embeddings=None, lexicon=None, sentence_vectors=None):
    return FeaturePipeline(config, embeddings, lexicon, sentence_vectors).assemble(record)


def resolve_embeddings(config, root=None):
    if "linguistic" not in config.modalities or config.sentence_vectors:
        return None
    path = Path(config.embeddings) if config.embeddings else (Path(root) / "embeddings.txt" if root else None)
    if path is None or not path.exists():
        raise IngestionError("word-vector file not found", path=path)
    try:
        return text.load_embeddings(path)
    except FormatError as exc:
        raise IngestionError(str(exc), path=path) from exc


@dataclass
class Corpus:
    root: Path
    labels: dict
    manifest: SplitManifest
    samples: dict  # patient_id -> list[SentenceSample]
    feature_dims: dict

    def split(self, name):
        return {pid: self.samples[pid] for pid in self.manifest.patients(name) if pid in self.samples}

    def flat(self, name):
        return [s for pid in self.manifest.patients(name) for s in self.samples.get(pid, [])]


def load_corpus(root, config, splits=("train", "validation"), manifest_path=None):
    """Load and featurize every patient in the requested splits."""
    root = Path(root)
    labels = read_labels(root / "labels.csv")
    manifest_path = Path(manifest_path) if manifest_path else root / "split.tsv"
    if not manifest_path.exists():
        raise IngestionError("split manifest missing", path=manifest_path)
    manifest = SplitManifest.load(manifest_path)
    for pid in manifest.train + manifest.validation:
        if pid not in labels:
            raise IngestionError(f"split references unknown patient {pid!r}", path=manifest_path)
    pipeline = FeaturePipeline(config, resolve_embeddings(config, root))
    samples = {}
    for split in splits:
        for pid in manifest.patients(split):
            record = load_interview(root / pid, labels, config.modalities, config.resample)
            samples[pid] = pipeline.assemble(record)
    return Corpus(root, labels, manifest, samples, pipeline.feature_dims())


# ----------------------------------------------------------------- batching


@dataclass
class Batch:
    features: dict  # modality -> float32 [B, T, F], zero right-padded
    lengths: dict  # modality -> int64 [B]
    label_phq: np.ndarray
    label_mdd: np.ndarray
    patient_ids: list
    sentence_indices: list

    def __len__(self):
        return len(self.patient_ids)


def pad_batch(samples, modalities=MODALITIES, dtype=np.float32):
    feats, lengths = {}, {}
    for m in modalities:
        seqs = [s.features(m) for s in samples]
        if any(x is None for x in seqs):
            raise InputError(f"sample lacks {m} features")
        lens = np.array([len(x) for x in seqs], dtype=np.int64)
        if np.any(lens == 0):
            raise InputError(f"empty {m} feature sequence")
        out = np.zeros((len(seqs), int(lens.max()), seqs[0].shape[1]), dtype=dtype)
        for i, x in enumerate(seqs):
            out[i, : len(x)] = x
        feats[m], lengths[m] = out, lens
    return Batch(
        feats,
        lengths,
        np.array([s.label_phq for s in samples], dtype=np.float64),
        np.array([s.label_mdd for s in samples], dtype=np.float64),
        [s.patient_id for s in samples],
        [s.sentence_index for s in samples],
    )


def batch_sentences(samples, batch_size=16, rng=None, modalities=MODALITIES, shuffle=True, dtype=np.float32):
    """Yield padded batches; order is a seeded permutation when ``shuffle``."""
    samples = list(samples)
    if not samples:
        raise InputError("no samples to batch")
    order = np.arange(len(samples))
    if shuffle:
        if rng is None:
            raise ParameterError("shuffling needs an rng")
        order = rng.permutation(len(samples))
    for lo in range(0, len(samples), batch_size):
        yield pad_batch([samples[i] for i in order[lo : lo + batch_size]], modalities, dtype)


# ----------------------------------------------------------- synthetic data

POSITIVE_WORDS = """
good great happy fun friends family enjoy love nice beach travel music laugh relaxed
excited proud hopeful energy calm weekend dinner hiking movies garden cooking sunshine
vacation party smile dance reading looking about until work school city dog walk
coffee game sports learn plans talk visit weather morning together
""".split()

NEGATIVE_WORDS = """
tired sad lonely hopeless sleep worry anxious stress empty guilty worthless alone crying
pain numb exhausted afraid bored upset angry hard difficult struggle lost nothing never
dark heavy sick hurt miss regret fail blame trapped restless slow cannot bad worse
awful broken down weak doubt grief useless nobody
""".split()

AVATAR_PROMPTS = [
    "How are you doing today?",
    "Where are you from originally?",
    "How often do you visit your hometown?",
    "Cool.",
    "Tell me about your last vacation.",
    "How have you been sleeping?",
    "What do you do to relax?",
    "I see.",
    "When was the last time you felt really happy?",
    "How would your best friend describe you?",
]

SLANG_SURFACE = {"about": "bout", "until": "till", "looking": "lookin"}

SAMPLE_RATE = 16000
KEYPOINT_FPS = 30
EMBED_DIM = 300
SNR_DB = 20.0
LATENT_JITTER = 3.0  # PHQ points of per-modality expressiveness noise


def severity_parameters(s):
    """Planted generator parameters for severity ``s`` in [0, 24].

    Acoustic amplitude, pitch variation, head-motion and mouth-motion
    amplitudes are non-increasing in ``s``; downward head pitch and the share
    of words drawn from the negative vocabulary increase with ``s``.
    """
    r = float(np.clip(s, 0, PHQ_MAX)) / PHQ_MAX
    return {
        "amplitude": 0.6 - 0.4 * r,
        "pitch_var_hz": 60.0 - 50.0 * r,
        "motion_amp": 1.0 - 0.8 * r,
        "mouth_amp": 1.0 - 0.8 * r,
        "gaze_down_rad": 0.3 * r,
        "negative_word_prob": r,
    }


def face_template():
    """Deterministic 68-point face in millimetres (jaw, brows, nose, eyes, mouth)."""
    pts = []
    for i in range(17):
        th = np.pi * (1 - i / 16)
        pts.append((70 * np.cos(th), -10 - 70 * np.sin(th), 30 * (1 - np.sin(th))))
    for side in (-1, 1):
        xs = np.linspace(50, 15, 5) * side if side < 0 else np.linspace(15, 50, 5)
        for j, x in enumerate(xs):
            pts.append((x, 35 + 4 * np.sin(np.pi * j / 4), 12))
    for j in range(4):
        pts.append((0.0, 25 - 10 * j, 20 + 6 * j))
    for x in np.linspace(-12, 12, 5):
        pts.append((x, -12.0, 28 - abs(x) / 2))
    for cx in (-30, 30):
        for j in range(6):
            th = 2 * np.pi * j / 6
            pts.append((cx + 10 * np.cos(th), 20 + 4 * np.sin(th), 8.0))
    for j in range(12):
        th = 2 * np.pi * j / 12
        pts.append((25 * np.cos(th), -35 + 9 * np.sin(th), 18 - 4 * abs(np.sin(th))))
    for j in range(8):
        th = 2 * np.pi * j / 8
        pts.append((15 * np.cos(th), -35 + 4 * np.sin(th), 16.0))
    out = np.array(pts, dtype=np.float64)
    assert out.shape == (visual.N_POINTS, 3)
    return out


def _rotation(yaw, pitch):
    cy, sy, cp, sp = np.cos(yaw), np.sin(yaw), np.cos(pitch), np.sin(pitch)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    return ry @ rx


def synth_sentence_audio(params, duration, base_f0, gain, rng, sample_rate=SAMPLE_RATE):
    """Harmonic tone with sinusoidal pitch movement plus noise at a fixed SNR."""
    n = max(int(round(duration * sample_rate)), 1)
    t = np.arange(n) / sample_rate
    rate = rng.uniform(1.5, 3.0)
    f0 = base_f0 + params["pitch_var_hz"] * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    tone = sum(np.sin(k * phase) / k for k in range(1, 5))
    tone /= np.sqrt(np.mean(tone**2))
    ramp = min(int(0.02 * sample_rate), n // 2)
    if ramp:
        env = np.ones(n)
        env[:ramp] = np.linspace(0, 1, ramp)
        env[-ramp:] = np.linspace(1, 0, ramp)
        tone *= env
    noise = rng.standard_normal(n) * 10 ** (-SNR_DB / 20)
    return gain * params["amplitude"] * (tone + noise)


def _word_vectors(seed):
    rng = derive_rng(seed, "synthetic/embeddings")
    pos_c = rng.standard_normal(EMBED_DIM) * 0.15
    neg_c = rng.standard_normal(EMBED_DIM) * 0.15
    table = text.EmbeddingTable(EMBED_DIM)
    for words, center in ((POSITIVE_WORDS, pos_c), (NEGATIVE_WORDS, neg_c)):
        for w in words:
            vec = center + rng.standard_normal(EMBED_DIM) * 0.1
            table.add(w, np.round(vec, 4))
    return table


def _sentence_text(p_neg, rng):
    n = int(rng.integers(3, 9))
    words = []
    for _ in range(n):
        vocab = NEGATIVE_WORDS if rng.random() < p_neg else POSITIVE_WORDS
        w = vocab[int(rng.integers(len(vocab)))]
        words.append(SLANG_SURFACE.get(w, w) if rng.random() < 0.5 else w)
    if rng.random() < 0.1:
        words.insert(int(rng.integers(len(words) + 1)), str(int(rng.integers(1, 100))))
    words[0] = words[0].capitalize()
    return " ".join(words) + rng.choice([".", "...", "!", ","])


@dataclass(frozen=True)
class PatientPlan:
    patient_id: str
    severity: int
    latent: dict  # modality -> jittered severity driving that modality
    base_f0: float
    gain: float
    face_scale: float
    n_sentences: int


def plan_patients(n_patients, seed):
    rng = derive_rng(seed, "synthetic/patients")
    plans = []
    for i in range(n_patients):
        s = int(rng.integers(0, PHQ_MAX + 1))
        latent = {m: float(np.clip(s + LATENT_JITTER * rng.standard_normal(), 0, PHQ_MAX)) for m in MODALITIES}
        plans.append(
            PatientPlan(
                patient_id=str(300 + i),
                severity=s,
                latent=latent,
                base_f0=float(rng.uniform(100, 220)),
                gain=float(np.exp(0.2 * rng.standard_normal())),
                face_scale=float(rng.uniform(0.9, 1.1)),
                n_sentences=int(rng.integers(8, 21)),
            )
        )
    return plans


def stratified_split(plans, seed, validation_fraction=0.25):
    rng = derive_rng(seed, "synthetic/split")
    n = len(plans)
    n_val = int(math.floor(n * validation_fraction + 0.5))
    strata = {0: [], 1: []}
    for p in plans:
        strata[mdd_label(p.severity)].append(p.patient_id)
    v1 = int(math.floor(n_val * len(strata[1]) / n + 0.5))
    v1 = min(v1, len(strata[1]), n_val)
    v0 = min(n_val - v1, len(strata[0]))
    v1 = n_val - v0
    val = set()
    for label, k in ((0, v0), (1, v1)):
        ids = strata[label]
        pick = rng.permutation(len(ids))[:k]
        val.update(ids[j] for j in pick)
    ids = [p.patient_id for p in plans]
    return SplitManifest([i for i in ids if i not in val], [i for i in ids if i in val])


def synthesize_interview(plan, seed):
    """Audio clip, keypoint track and transcript rows for one planned patient."""
    rng = derive_rng(seed, f"synthetic/interview/{plan.patient_id}")
    pa = severity_parameters(plan.latent["audio"])
    pv = severity_parameters(plan.latent["visual"])
    pl = severity_parameters(plan.latent["linguistic"])
    rows, speech = [], []
    t = 0.5
    for _ in range(plan.n_sentences):
        d_av = float(rng.uniform(0.4, 0.8))
        rows.append(TranscriptRow(round(t, 3), round(t + d_av, 3), "Ellie",
                                  AVATAR_PROMPTS[int(rng.integers(len(AVATAR_PROMPTS)))]))
        t += d_av + 0.1
        d = float(rng.uniform(0.5, 1.1))
        start, stop = round(t, 3), round(t + d, 3)
        rows.append(TranscriptRow(start, stop, "Participant", _sentence_text(pl["negative_word_prob"], rng)))
        speech.append((start, stop))
        t = stop + 0.2
    total = t + 0.3

    n = int(round(total * SAMPLE_RATE))
    audio = rng.standard_normal(n) * 1e-3
    for start, stop in speech:
        a = int(round(start * SAMPLE_RATE))
        seg = synth_sentence_audio(pa, stop - start, plan.base_f0, plan.gain, rng)
        audio[a : a + len(seg)] += seg[: n - a]
    audio = np.clip(audio, -1.0, 1.0)

    n_frames = int(total * KEYPOINT_FPS)
    times = np.round(np.arange(n_frames) / KEYPOINT_FPS, 6)
    template = face_template() * plan.face_scale
    lower_lip = np.zeros(visual.N_POINTS, dtype=bool)
    lower_lip[48:68] = template[48:68, 1] < -35 * plan.face_scale
    ph = rng.uniform(0, 2 * np.pi, size=5)
    amp = pv["motion_amp"]
    # gesture-rate sway so a one-second sentence spans whole cycles
    yaw = amp * (0.35 * np.sin(2 * np.pi * 0.6 * times + ph[0]) + 0.1 * np.sin(2 * np.pi * 1.3 * times + ph[1]))
    pitch = amp * 0.2 * np.sin(2 * np.pi * 0.8 * times + ph[2]) - pv["gaze_down_rad"]
    talking = np.zeros(n_frames, dtype=bool)
    for start, stop in speech:
        talking |= (times >= start) & (times < stop)
    mouth = pv["mouth_amp"] * 6.0 * np.abs(np.sin(2 * np.pi * 3.0 * times + ph[3])) * talking
    drift = np.stack([
        20 * np.sin(2 * np.pi * 0.05 * times + ph[4]),
        10 * np.cos(2 * np.pi * 0.07 * times),
        600 + 30 * np.sin(2 * np.pi * 0.03 * times),
    ], axis=1)
    points = np.empty((n_frames, visual.N_POINTS, 3))
    for i in range(n_frames):
        face = template.copy()
        face[lower_lip, 1] -= mouth[i]
        points[i] = face @ _rotation(yaw[i], pitch[i]).T + drift[i]
    points += rng.standard_normal(points.shape) * 0.3
    points = np.round(points, 3)
    confidence = np.round(rng.uniform(0.85, 1.0, n_frames), 3)
    dropout_frames = rng.random(n_frames) < 0.02
    confidence[dropout_frames] = np.round(rng.uniform(0.0, 0.4, int(dropout_frames.sum())), 3)
    track = visual.KeypointTrack(times, points, confidence)
    return dsp.AudioClip(audio, SAMPLE_RATE), track, rows


def generate_synthetic_corpus(n_patients, seed, out_dir):
    """Write a deterministic synthetic corpus and return its split manifest."""
    if n_patients < 4:
        raise ParameterError(f"need at least 4 patients, got {n_patients}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plans = plan_patients(n_patients, seed)
    manifest = stratified_split(plans, seed)
    write_labels(out / "labels.csv", {p.patient_id: p.severity for p in plans})
    manifest.save(out / "split.tsv")
    text.save_vectors(_word_vectors(seed), out / "embeddings.txt")
    for plan in plans:
        clip, track, rows = synthesize_interview(plan, seed)
        d = out / plan.patient_id
        d.mkdir(exist_ok=True)
        paths = interview_paths(d, plan.patient_id)
        dsp.write_wav(paths["audio"], clip)
        visual.save_keypoints(track, paths["visual"])
        write_transcript(paths["transcript"], rows)
    return manifest
