"""Tests for the synthetic corpus, the babble bank, media files and manifests."""

import numpy as np
import pytest
from PIL import Image

from avrelscore.core.artifacts import assert_seed_domain, derive_seed, seed_domain
from avrelscore.core.config import CorruptionConfig
from avrelscore.core.exceptions import AVRelScoreError, DatasetError, MediaFormatError
from avrelscore.data import (
    build_noise_bank,
    dump_pgm,
    generate_clips,
    generate_dataset,
    load_clips,
    load_manifest,
    make_babble,
    read_avt,
    synthesize_clip,
    write_avt,
)
from avrelscore.data.manifest import MANIFEST_NAME
from avrelscore.model.views import Vocabulary

VOCAB = Vocabulary.of_size(8)


class TestSynthesis:
    def test_clip_is_deterministic(self, tiny_spec):
        a = synthesize_clip(tiny_spec, 3, split="train")
        b = synthesize_clip(tiny_spec, 3, split="train")
        np.testing.assert_array_equal(a.video.frames, b.video.frames)
        np.testing.assert_array_equal(a.audio.samples, b.audio.samples)
        assert a.transcript == b.transcript

    def test_splits_differ(self, tiny_spec):
        a = synthesize_clip(tiny_spec, 0, split="train")
        b = synthesize_clip(tiny_spec, 0, split="test")
        assert a.clip_id == "train-0000" and b.clip_id == "test-0000"
        assert not np.array_equal(a.audio.samples[:100], b.audio.samples[:100])

    def test_lengths_follow_symbol_count(self, tiny_spec):
        spec = tiny_spec.model_copy(update={"min_symbols": 5, "max_symbols": 5})
        clip = synthesize_clip(spec, 0)
        assert len(clip.transcript) == 5
        assert clip.video.num_frames == 20
        assert clip.audio.num_samples == 20 * spec.samples_per_frame
        assert clip.video.frames.min() >= 0.0 and clip.video.frames.max() <= 1.0

    def test_clean_audio_frames_are_linearly_separable(self, tiny_spec):
        spec = tiny_spec.model_copy(update={"min_symbols": 4, "max_symbols": 6})

        def frames(split, n):
            feats, labels = [], []
            for clip in generate_clips(spec, n, split=split):
                spectra = np.abs(np.fft.rfft(clip.audio.samples.reshape(-1, spec.samples_per_frame), axis=1))
                feats.append(np.log1p(spectra))
                labels.append(np.repeat(VOCAB.encode(clip.transcript), spec.frames_per_symbol))
            x = np.concatenate(feats)
            return np.hstack([x, np.ones((len(x), 1))]), np.concatenate(labels)

        x_train, y_train = frames("train", 40)
        x_test, y_test = frames("test", 20)
        classes = np.unique(y_train)
        targets = (y_train[:, None] == classes[None, :]).astype(float)
        weights, *_ = np.linalg.lstsq(x_train, targets, rcond=None)
        predicted = classes[np.argmax(x_test @ weights, axis=1)]
        assert np.mean(predicted == y_test) > 0.9


class TestBabble:
    def test_unit_rms(self, tiny_spec):
        babble = make_babble(tiny_spec, 5, seed=1, num_samples=4000)
        assert np.sqrt(np.mean(babble ** 2)) == pytest.approx(1.0, abs=1e-6)

    def test_seeds_give_weakly_correlated_babble(self, tiny_spec):
        waves = [make_babble(tiny_spec, 5, seed=s, num_samples=16000) for s in range(4)]
        corrs = [abs(np.corrcoef(waves[i], waves[j])[0, 1]) for i in range(4) for j in range(i + 1, 4)]
        assert np.mean(corrs) < 0.2

    def test_needs_three_voices(self, tiny_spec):
        with pytest.raises(DatasetError):
            make_babble(tiny_spec, 2, seed=0, num_samples=100)

    def test_bank_covers_every_noise_id(self, tiny_spec):
        cfg = CorruptionConfig()
        bank = build_noise_bank(tiny_spec, cfg, seed=0)
        assert sorted(bank) == sorted(f"babble-{i}" for i in range(cfg.noise_bank_size))
        assert all(len(w) == tiny_spec.max_frames * tiny_spec.samples_per_frame for w in bank.values())


class TestDataset:
    def test_written_corpus_does_not_depend_on_workers(self, tiny_spec, tmp_path):
        generate_dataset(tiny_spec, 4, tmp_path / "one", workers=1)
        generate_dataset(tiny_spec, 4, tmp_path / "many", workers=3)
        one = sorted(p.relative_to(tmp_path / "one") for p in (tmp_path / "one").rglob("*") if p.is_file())
        many = sorted(p.relative_to(tmp_path / "many") for p in (tmp_path / "many").rglob("*") if p.is_file())
        assert one == many
        for rel in one:
            assert (tmp_path / "one" / rel).read_bytes() == (tmp_path / "many" / rel).read_bytes()

    def test_manifest_loads_back_the_same_clips(self, tiny_spec, tmp_path):
        generate_dataset(tiny_spec, 3, tmp_path, split="dev")
        manifest, root = load_manifest(tmp_path)
        clips = load_clips(manifest, root)
        assert [c.clip_id for c in clips] == ["dev-0000", "dev-0001", "dev-0002"]
        original = synthesize_clip(tiny_spec, 1, split="dev")
        np.testing.assert_array_equal(clips[1].video.frames, original.video.frames)
        np.testing.assert_array_equal(clips[1].audio.samples, original.audio.samples)
        assert clips[1].transcript == original.transcript

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError):
            load_manifest(tmp_path / "nowhere")

    def test_media_shorter_than_declared(self, tiny_spec, tmp_path):
        manifest = generate_dataset(tiny_spec, 1, tmp_path)
        entry = manifest.entries[0]
        frames = read_avt(tmp_path / entry.video_path)
        write_avt(tmp_path / entry.video_path, frames[:-1])
        manifest, root = load_manifest(tmp_path)
        with pytest.raises(DatasetError):
            load_clips(manifest, root)

    def test_unpaired_lengths_rejected(self, tiny_spec, tmp_path):
        generate_dataset(tiny_spec, 1, tmp_path)
        path = tmp_path / MANIFEST_NAME
        clip = synthesize_clip(tiny_spec, 0)
        path.write_text(path.read_text().replace(f'"num_frames": {clip.video.num_frames}', '"num_frames": 99'))
        with pytest.raises(DatasetError):
            load_manifest(tmp_path)


class TestMedia:
    def test_roundtrip(self, rng, tmp_path):
        array = rng.normal(size=(3, 4, 5, 1))
        np.testing.assert_array_equal(read_avt(write_avt(tmp_path / "x.avt", array)), array)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.avt"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(MediaFormatError):
            read_avt(path)


    def test_pgm_dump(self, rng, tmp_path):
        frames = rng.uniform(size=(2, 6, 5, 1))
        paths = dump_pgm(frames, tmp_path / "frames")
        assert [p.name for p in paths] == ["frame_0000.pgm", "frame_0001.pgm"]
        with Image.open(paths[1]) as img:
            assert img.size == (5, 6)
            pixels = np.asarray(img)
        np.testing.assert_array_equal(pixels, np.round(frames[1, ..., 0] * 255).astype(np.uint8))


class TestSeedDomains:
    def test_domains_are_disjoint(self):
        train = {derive_seed(0, epoch, f"clip-{i}", domain="train") for epoch in range(5) for i in range(50)}
        test = {derive_seed(0, f"clip-{i}", domain="test") for i in range(50)}
        assert not train & test
        assert_seed_domain(train, "train")
        assert_seed_domain(test, "test")

    def test_cross_domain_seed_rejected(self):
        with pytest.raises(AVRelScoreError):
            assert_seed_domain([derive_seed(7, "x", domain="test")], "train")

    def test_same_parts_different_domain(self):
        assert seed_domain(derive_seed(3, 1, "a", domain="data")) == "data"
        assert derive_seed(3, 1, "a", domain="train") != derive_seed(3, 1, "a", domain="test")
