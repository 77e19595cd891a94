import logging

import numpy as np
import pytest
import soundfile as sf

from pydiffau import (
    ArgumentError,
    ConfigurationError,
    CorpusFile,
    DatasetManifest,
    DatasetSpec,
    EmptyCorpus,
    InsufficientSpeakers,
    ManifestEntry,
    SourceEntry,
    Split,
    SplitLeakage,
    ingest_corpus,
    load_clip,
    plan_dataset,
    read_manifest,
    regenerate_clip,
    save_clip,
    synth_dataset,
    write_manifest,
)


def memory_corpus(speakers=20, files=3, length=40000):
    rng = np.random.default_rng(99)
    return [
        CorpusFile(f"spk{s:02d}/utt{f}", f"spk{s:02d}", 0.5 * rng.standard_normal(length))
        for s in range(speakers)
        for f in range(files)
    ]


def small_spec(**kwargs):
    defaults = dict(n_clips=8, clip_samples=2048, split_fractions={"train": 0.5, "test": 0.5}, seed=3)
    defaults.update(kwargs)
    return DatasetSpec(**defaults)


def test_ingest_corpus(corpus_dir):
    corpus = ingest_corpus(corpus_dir)
    assert len(corpus) == 20
    assert [f.source_id for f in corpus] == sorted(f.source_id for f in corpus)
    assert corpus[0].source_id == "spk00/utt0" and corpus[0].speaker == "spk00"
    assert all(np.max(np.abs(f.waveform)) == pytest.approx(0.9) for f in corpus)
    assert ingest_corpus(corpus_dir)[5].waveform.tolist() == corpus[5].waveform.tolist()


def test_ingest_resamples_and_skips(tmp_path, caplog):
    root = tmp_path / "mixed"
    root.mkdir()
    sf.write(str(root / "slow.wav"), np.sin(np.arange(8000) / 10.0), 8000)
    sf.write(str(root / "stereo.wav"), np.ones((100, 2)) * 0.1, 16000)
    sf.write(str(root / "silent.wav"), np.zeros(100), 16000)
    (root / "broken.wav").write_bytes(b"RIFF0000WAVEjunk")

    with caplog.at_level(logging.WARNING, logger="pydiffau.dataset"):
        corpus = ingest_corpus(root)
    assert [f.source_id for f in corpus] == ["slow"]
    assert corpus[0].length == 16000
    assert corpus[0].speaker == "slow"
    assert len([r for r in caplog.records if r.levelno == logging.WARNING]) == 3


def test_empty_corpus(tmp_path):
    with pytest.raises(EmptyCorpus):
        ingest_corpus(tmp_path)
    with pytest.raises(EmptyCorpus):
        ingest_corpus(tmp_path / "nowhere")


def test_plan_splits_and_balances():
    spec = DatasetSpec(n_clips=1000, clip_samples=4096, seed=1)
    manifest = plan_dataset(memory_corpus(speakers=40), spec)
    assert len(manifest) == 1000
    assert manifest.summary()["splits"] == {"train": 800, "val": 100, "test": 100}
    assert manifest.speaker_histogram(Split.train) == {1: 200, 2: 200, 3: 200, 4: 200}
    assert manifest.speaker_histogram(Split.test) == {1: 25, 2: 25, 3: 25, 4: 25}

    speakers = {s: {src.speaker for e in manifest.split(s) for src in e.sources} for s in Split}
    assert not speakers[Split.train] & speakers[Split.val]
    assert not speakers[Split.train] & speakers[Split.test]
    assert not speakers[Split.val] & speakers[Split.test]

    for entry in manifest:
        ids = [src.source_id for src in entry.sources]
        assert len(set(ids)) == len(ids) == entry.speaker_count
        assert len({src.speaker for src in entry.sources}) == entry.speaker_count
        assert all(0 <= src.offset <= 40000 - 4096 for src in entry.sources)
        assert entry.path == f"clips/{entry.clip_id}.wav"


def test_plan_is_seeded():
    corpus = memory_corpus()
    first = plan_dataset(corpus, small_spec(n_clips=50))
    assert first.to_jsonl() == plan_dataset(corpus, small_spec(n_clips=50)).to_jsonl()
    assert first.to_jsonl() != plan_dataset(corpus, small_spec(n_clips=50, seed=4)).to_jsonl()


def test_plan_errors():
    with pytest.raises(InsufficientSpeakers):
        plan_dataset(memory_corpus(speakers=2, files=1), small_spec())
    with pytest.raises(InsufficientSpeakers):
        plan_dataset(memory_corpus(speakers=1), small_spec())
    with pytest.raises(ConfigurationError):
        plan_dataset(memory_corpus(), small_spec(n_clips=0))
    with pytest.raises(ConfigurationError):
        plan_dataset(memory_corpus(), small_spec(split_fractions={"holdout": 1.0}))


def test_clips_never_repeat_a_speaker():
    manifest = plan_dataset(memory_corpus(speakers=10, files=4), small_spec(n_clips=400))
    assert manifest.speaker_histogram(Split.train) == {1: 50, 2: 50, 3: 50, 4: 50}
    for entry in manifest:
        assert len({src.speaker for src in entry.sources}) == entry.speaker_count

    # Twelve utterances per split, but only three talkers.
    with pytest.raises(InsufficientSpeakers) as info:
        plan_dataset(memory_corpus(speakers=6, files=4), small_spec())
    assert (info.value.needed, info.value.available) == (4, 3)


def test_split_leakage_is_detected():
    source = SourceEntry("spk00/utt0", "spk00", 0.0, 1.0)
    manifest = DatasetManifest(
        [
            ManifestEntry("clip00000", Split.train, 1, 1, [source]),
            ManifestEntry("clip00001", Split.test, 2, 1, [source]),
        ]
    )
    with pytest.raises(SplitLeakage):
        manifest.check_disjoint()
    with pytest.raises(ArgumentError):
        ManifestEntry("clip00002", Split.test, 3, 2, [source])


def test_synth_dataset(corpus_dir, tmp_path):
    corpus = ingest_corpus(corpus_dir)
    out = tmp_path / "data"
    manifest = synth_dataset(corpus, small_spec(), out)

    assert read_manifest(out).to_jsonl() == manifest.to_jsonl()
    assert sorted(p.name for p in (out / "clips").iterdir()) == [f"clip{i:05d}.wav" for i in range(8)]
    for entry in manifest:
        clip = load_clip(out / entry.path, order=3, sample_rate=16000)
        assert clip.channels.shape == (16, 2048)
        rebuilt = regenerate_clip(entry, corpus)
        assert np.allclose(clip.channels, rebuilt.channels, atol=1e-5)


def test_synth_does_not_depend_on_jobs(corpus_dir, tmp_path):
    corpus = ingest_corpus(corpus_dir)
    synth_dataset(corpus, small_spec(), tmp_path / "serial", jobs=1)
    synth_dataset(corpus, small_spec(), tmp_path / "pooled", jobs=3)
    for path in sorted((tmp_path / "serial" / "clips").iterdir()):
        assert path.read_bytes() == (tmp_path / "pooled" / "clips" / path.name).read_bytes()


def test_short_sources_are_looped(corpus_dir):
    corpus = ingest_corpus(corpus_dir)
    manifest = plan_dataset(corpus, small_spec(clip_samples=20000))
    clip = regenerate_clip(manifest.entries[0], corpus)
    assert clip.length == 20000
    assert np.all(np.isfinite(clip.channels))
    assert np.max(np.abs(clip.channels[0, 8000:])) > 0


def test_clip_io(tmp_path):
    manifest = plan_dataset(memory_corpus(), small_spec())
    write_manifest(manifest, tmp_path)
    assert read_manifest(tmp_path / "manifest.jsonl").by_id().keys() == manifest.by_id().keys()

    corpus = memory_corpus()
    clip = regenerate_clip(manifest.entries[0], corpus)
    save_clip(clip, tmp_path / "a.wav")
    with pytest.raises(ArgumentError):
        load_clip(tmp_path / "a.wav", order=1)
    with pytest.raises(ArgumentError):
        load_clip(tmp_path / "a.wav", sample_rate=8000)
    assert load_clip(tmp_path / "a.wav").order == 3
