import hashlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phqnet import corpus, dsp, visual
from phqnet.config import RunConfig
from phqnet.errors import FormatError, IngestionError, InputError, ParameterError


def digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_generator_is_deterministic(tmp_path):
    a = corpus.generate_synthetic_corpus(4, 3, tmp_path / "a")
    b = corpus.generate_synthetic_corpus(4, 3, tmp_path / "b")
    assert a == b
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    c = corpus.generate_synthetic_corpus(4, 4, tmp_path / "c")
    assert digest(tmp_path / "a") != digest(tmp_path / "c")


def test_small_corpus_shape(small_corpus):
    assert len(small_corpus.manifest.train) == 6
    assert len(small_corpus.manifest.validation) == 2
    assert small_corpus.feature_dims == {"audio": 80, "visual": 204, "linguistic": 300}
    for pid, samples in small_corpus.samples.items():
        assert samples
        for s in samples:
            assert s.label_phq == small_corpus.labels[pid]
            assert s.label_mdd == int(s.label_phq >= 10)
            assert s.audio_features.dtype == np.float32
            assert s.visual_features.shape[1] == 204


def test_split_is_stratified():
    plans = corpus.plan_patients(40, 5)
    m = corpus.stratified_split(plans, 5)
    assert len(m.validation) == 10
    pos = {p.patient_id for p in plans if p.severity >= 10}
    share = len(pos & set(m.validation)) / 10
    assert abs(share - len(pos) / 40) <= 0.1


def test_too_few_patients(tmp_path):
    with pytest.raises(ParameterError):
        corpus.generate_synthetic_corpus(3, 0, tmp_path)


@given(st.floats(0, 24), st.floats(0, 24))
def test_planted_parameters_are_monotone(a, b):
    lo, hi = sorted((a, b))
    p, q = corpus.severity_parameters(lo), corpus.severity_parameters(hi)
    for key in ("amplitude", "pitch_var_hz", "motion_amp", "mouth_amp"):
        assert q[key] <= p[key]
    assert q["negative_word_prob"] >= p["negative_word_prob"]
    assert q["gaze_down_rad"] >= p["gaze_down_rad"]


def test_synth_audio_amplitude_tracks_severity():
    rms = []
    for s in (0, 12, 24):
        rng = np.random.default_rng(0)
        seg = corpus.synth_sentence_audio(corpus.severity_parameters(s), 1.0, 150.0, 1.0, rng)
        rms.append(np.sqrt(np.mean(seg**2)))
    assert rms[0] > rms[1] > rms[2]


def test_labels_io(tmp_path):
    p = tmp_path / "labels.csv"
    corpus.write_labels(p, {"300": 4, "301": 17})
    assert corpus.read_labels(p) == {"300": 4, "301": 17}
    p.write_text("patient_id,phq_score\n300,25\n")
    with pytest.raises(IngestionError, match="2"):
        corpus.read_labels(p)
    p.write_text("patient_id,phq_score\n300,x\n")
    with pytest.raises(IngestionError):
        corpus.read_labels(p)


def test_record_rejects_out_of_range_score():
    with pytest.raises(IngestionError):
        corpus.InterviewRecord("1", 25, [])


def test_transcript_io_and_row_error(tmp_path):
    rows = [corpus.TranscriptRow(0.5, 1.0, "Ellie", "hi"), corpus.TranscriptRow(1.2, 2.0, "Participant", "ok")]
    p = tmp_path / "t.csv"
    corpus.write_transcript(p, rows)
    assert corpus.read_transcript(p) == rows
    p.write_text("start_time,stop_time,speaker,value\n0.5,0.2,Ellie,hi\n")
    with pytest.raises(IngestionError, match="row 1"):
        corpus.read_transcript(p)


def test_manifest_round_trip_and_overlap(tmp_path):
    m = corpus.SplitManifest(["1", "2"], ["3"])
    m.save(tmp_path / "s.tsv")
    assert corpus.SplitManifest.load(tmp_path / "s.tsv") == m
    with pytest.raises(FormatError):
        corpus.SplitManifest(["1"], ["1"])
    (tmp_path / "s.tsv").write_text("1 train\n")
    with pytest.raises(FormatError):
        corpus.SplitManifest.load(tmp_path / "s.tsv")


def test_missing_modality_file_is_named(small_corpus_dir, tmp_path):
    d = tmp_path / "300"
    d.mkdir()
    src = small_corpus_dir / "300"
    for f in src.iterdir():
        if not f.name.endswith(".wav"):
            (d / f.name).write_bytes(f.read_bytes())
    with pytest.raises(IngestionError, match="wav"):
        corpus.load_interview(d, {"300": 3})
    record = corpus.load_interview(d, {"300": 3}, modalities=("visual", "linguistic"))
    assert record.audio is None


def test_participant_rows_become_samples(rng):
    rows = [
        corpus.TranscriptRow(0.0, 0.5, "Ellie", "how are you"),
        corpus.TranscriptRow(0.6, 1.2, "Participant", "fine"),
        corpus.TranscriptRow(1.3, 1.9, "Participant", "I'm lookin good"),
        corpus.TranscriptRow(2.0, 2.5, "Participant", "..."),
        corpus.TranscriptRow(2.6, 3.1, "Participant", "24 hours"),
    ]
    n = 32000 * 2
    clip = dsp.AudioClip(rng.standard_normal(n) * 0.1)
    times = np.arange(120) / 30
    pts = corpus.face_template()[None] + rng.standard_normal((120, 68, 3))
    track = visual.KeypointTrack(times, pts, np.ones(120))
    record = corpus.InterviewRecord("9", 12, rows, clip, track)
    table = corpus._word_vectors(0)
    samples = corpus.assemble_sentences(record, RunConfig(), table)
    assert [s.sentence_index for s in samples] == [0, 1, 3]
    assert all(s.label_mdd == 1 for s in samples)
    assert samples[2].text_features.shape == (3, 300)


def test_long_sentence_is_truncated_to_tail(rng):
    rows = [corpus.TranscriptRow(0.0, 30.0, "Participant", "fine")]
    clip = dsp.AudioClip(rng.standard_normal(16000 * 31) * 0.1)
    track = visual.KeypointTrack(np.arange(900) / 30, corpus.face_template()[None] + rng.standard_normal((900, 68, 3)),
                                 np.ones(900))
    record = corpus.InterviewRecord("9", 3, rows, clip, track)
    cfg = RunConfig(max_sentence_seconds=5.0)
    (s,) = corpus.assemble_sentences(record, cfg, corpus._word_vectors(0))
    assert s.audio_features.shape[0] == dsp.log_mel(clip.slice(25.0, 30.0)).shape[0]
    assert s.start == 0.0 and s.stop == 30.0


def test_batching_sizes_and_padding(small_corpus):
    samples = small_corpus.flat("train")[:33]
    batches = list(corpus.batch_sentences(samples, 16, np.random.default_rng(0)))
    assert [len(b) for b in batches] == [16, 16, 1]
    b = batches[0]
    for m in corpus.MODALITIES:
        x, lens = b.features[m], b.lengths[m]
        assert x.shape[0] == 16 and x.shape[1] == lens.max()
        i = int(lens.argmin())
        assert np.all(x[i, lens[i]:] == 0)
    ids = [(p, i) for bb in batches for p, i in zip(bb.patient_ids, bb.sentence_indices)]
    assert sorted(ids) == sorted((s.patient_id, s.sentence_index) for s in samples)


def test_batching_errors(small_corpus):
    with pytest.raises(InputError):
        next(corpus.batch_sentences([], 4, np.random.default_rng(0)))
    with pytest.raises(ParameterError):
        next(corpus.batch_sentences(small_corpus.flat("train"), 4))
    ordered = list(corpus.batch_sentences(small_corpus.flat("train")[:5], 4, shuffle=False))
    assert ordered[0].sentence_indices == [s.sentence_index for s in small_corpus.flat("train")[:4]]
