"""Tests for the reliability-scoring network and its ablation variants."""

import numpy as np
import pytest

from avrelscore.core.exceptions import AVRelScoreError, ShapeError, SizingError, VocabularyError
from avrelscore.corruption.views import AudioClip
from avrelscore.data.synthetic import synthesize_clip
from avrelscore.model import (
    AVRelScoreModel,
    FeatureSequence,
    ReliabilityScorer,
    Vocabulary,
    emphasize,
    load_model,
    save_model,
)
from avrelscore.tensor import Tensor, no_grad, save_checkpoint


@pytest.fixture
def clip(tiny_spec):
    return synthesize_clip(tiny_spec, 0, split="test")


@pytest.fixture
def model(tiny_model_cfg):
    return AVRelScoreModel(tiny_model_cfg, seed=5).eval()


def _features(rng, t=6, d=4, modality="audio"):
    return FeatureSequence(values=Tensor(rng.normal(size=(t, d))), modality=modality)


class TestEmphasis:
    def test_zero_scores_pass_features_through(self, rng):
        f = _features(rng)
        out = emphasize(f, Tensor(np.zeros(f.values.shape)))
        np.testing.assert_array_equal(out.values.data, f.values.data)

    def test_unit_scores_double(self, rng):
        f = _features(rng)
        out = emphasize(f, Tensor(np.ones(f.values.shape)))
        np.testing.assert_array_equal(out.values.data, 2.0 * f.values.data)

    def test_elementwise_value(self):
        f = FeatureSequence(values=Tensor([[2.0, -1.0]]), modality="visual")
        out = emphasize(f, Tensor([[0.5, 0.25]]))
        np.testing.assert_allclose(out.values.data, [[3.0, -1.25]])

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            emphasize(_features(rng), Tensor(np.zeros((3, 4))))


class TestReliabilityScorer:
    def test_scores_in_open_unit_interval(self, rng):
        scorer = ReliabilityScorer(4, 3, rng).eval()
        s = scorer(_features(rng, t=10)).data
        assert np.all((s > 0.0) & (s < 1.0))

    def test_scores_can_fall_below_half(self, rng):
        scorer = ReliabilityScorer(4, 3, rng).eval()
        scorer.conv3.bias.data[:] = -20.0
        s = scorer(_features(rng, t=10)).data
        assert np.all(s < 0.5)

    def test_locality(self, rng):
        scorer = ReliabilityScorer(4, 3, rng).eval()
        values = rng.normal(size=(12, 4))
        changed = values.copy()
        changed[-1] += 5.0
        a = scorer(FeatureSequence(values=Tensor(values), modality="visual")).data
        b = scorer(FeatureSequence(values=Tensor(changed), modality="visual")).data
        untouched = 12 - 1 - scorer.receptive_radius
        np.testing.assert_array_equal(a[:untouched], b[:untouched])
        assert not np.array_equal(a[-1], b[-1])


class TestNetwork:
    def test_shapes(self, model, clip):
        t = clip.video.num_frames
        vocab = model.vocab
        y_in = [vocab.sos] + vocab.encode(clip.transcript)
        out = model(clip.video, clip.audio, y_in)
        assert out.ctc_logits.shape == (t, vocab.size)
        assert out.att_logits.shape == (len(y_in), vocab.size)
        s_a, s_v = out.trace.frame_means()
        assert s_a.shape == s_v.shape == (t,)
        assert np.all((s_a > 0) & (s_a < 1)) and np.all((s_v > 0) & (s_v < 1))

    def test_fused_output_is_first_half_of_encoding(self, model, rng):
        fa, fv = _features(rng, 5, 8, "audio"), _features(rng, 5, 8, "visual")
        with no_grad():
            fused = model.fuse_encode(fa, fv)
            joint = model.joint_encoding(fa, fv)
        assert joint.shape == (10, model.cfg.d_model)
        np.testing.assert_array_equal(fused.data, joint.data[:5])

    def test_fusion_is_local_without_self_attention(self, model, rng):
        t = 12
        fa, fv = _features(rng, t, 8, "audio"), _features(rng, t, 8, "visual")
        radius = model.cfg.enc_layers * (model.cfg.conv_kernel // 2)
        model.encoder.set_self_attention(False)
        try:
            with no_grad():
                base = model.fuse_encode(fa, fv).data
                moved_audio = fa.values.data.copy()
                moved_audio[0] += 3.0
                a = model.fuse_encode(FeatureSequence(values=Tensor(moved_audio), modality="audio"), fv).data
                moved_visual = fv.values.data.copy()
                moved_visual[0] += 3.0
                v = model.fuse_encode(fa, FeatureSequence(values=Tensor(moved_visual), modality="visual")).data
        finally:
            model.encoder.set_self_attention(True)
        np.testing.assert_array_equal(a[radius + 1:], base[radius + 1:])
        assert not np.array_equal(a[0], base[0])
        # visual row 0 sits at joint index t
        np.testing.assert_array_equal(v[:t - radius], base[:t - radius])
        assert not np.array_equal(v[t - 1], base[t - 1])

    def test_linear_variant_has_no_joint_encoding(self, tiny_model_cfg, rng):
        model = AVRelScoreModel(tiny_model_cfg.model_copy(update={"fusion": "linear"})).eval()
        with pytest.raises(AVRelScoreError):
            model.joint_encoding(_features(rng, 4, 8), _features(rng, 4, 8, "visual"))

    def test_same_seed_same_logits(self, tiny_model_cfg, clip):
        a = AVRelScoreModel(tiny_model_cfg, seed=9).eval().encode(clip.video, clip.audio)
        b = AVRelScoreModel(tiny_model_cfg, seed=9).eval().encode(clip.video, clip.audio)
        np.testing.assert_array_equal(a.ctc_logits.data, b.ctc_logits.data)

    def test_decoder_is_causal(self, model, clip):
        vocab = model.vocab
        with no_grad():
            memory = model.encode(clip.video, clip.audio).memory
            a = model.decode_forward(memory, [vocab.sos, 3, 4, 5]).data
            b = model.decode_forward(memory, [vocab.sos, 3, 6, 5]).data
        np.testing.assert_array_equal(a[:2], b[:2])
        assert not np.array_equal(a[2:], b[2:])

    def test_decoder_input_must_start_with_sos(self, model, clip):
        with no_grad():
            memory = model.encode(clip.video, clip.audio).memory
        with pytest.raises(VocabularyError):
            model.decode_forward(memory, [3, 4])
        with pytest.raises(VocabularyError):
            model.decode_forward(memory, [model.vocab.sos, model.vocab.size])

    def test_visual_stream_reaches_ctc_head(self, model, clip):
        blank_video = clip.video.with_frames(np.zeros_like(clip.video.frames))
        with no_grad():
            a = model.encode(clip.video, clip.audio).ctc_logits.data
            b = model.encode(blank_video, clip.audio).ctc_logits.data
        assert not np.allclose(a, b)

    def test_audio_length_must_match_frames(self, model, clip):
        short = AudioClip(samples=clip.audio.samples[:-1], sample_rate=clip.audio.sample_rate)
        with pytest.raises(SizingError):
            model.encode(clip.video, short)

    def test_wrong_frame_size(self, model, clip):
        small = clip.video.model_copy(update={"frames": clip.video.frames[:, :16, :16]})
        with pytest.raises(ShapeError):
            model.encode(small, clip.audio)


class TestVariants:
    @pytest.mark.parametrize("fusion", ["relscore", "attention", "linear"])
    @pytest.mark.parametrize("modality", ["av", "audio", "visual"])
    def test_forward(self, tiny_model_cfg, clip, fusion, modality):
        cfg = tiny_model_cfg.model_copy(update={"fusion": fusion, "modality": modality})
        model = AVRelScoreModel(cfg, seed=0).eval()
        with no_grad():
            enc = model.encode(clip.video, clip.audio)
        assert enc.ctc_logits.shape == (clip.video.num_frames, model.vocab.size)
        assert (enc.trace is not None) == (fusion == "relscore")

    def test_audio_only_ignores_video(self, tiny_model_cfg, clip):
        model = AVRelScoreModel(tiny_model_cfg.model_copy(update={"modality": "audio"}), seed=0).eval()
        blank_video = clip.video.with_frames(np.zeros_like(clip.video.frames))
        with no_grad():
            a = model.encode(clip.video, clip.audio).ctc_logits.data
            b = model.encode(blank_video, clip.audio).ctc_logits.data
        np.testing.assert_array_equal(a, b)

    def test_scoring_requires_relscore(self, tiny_model_cfg, clip):
        model = AVRelScoreModel(tiny_model_cfg.model_copy(update={"fusion": "attention"}), seed=0)
        fa, fv = model.extract_features(clip.video, clip.audio)
        with pytest.raises(AVRelScoreError):
            model.reliability_score(fa, fv)

    def test_variants_have_distinct_parameter_sets(self, tiny_model_cfg):
        names = {}
        for fusion in ("relscore", "attention", "linear"):
            model = AVRelScoreModel(tiny_model_cfg.model_copy(update={"fusion": fusion}))
            names[fusion] = {name for name, _ in model.named_parameters()}
        assert any(n.startswith("audio_scorer") for n in names["relscore"])
        assert not any(n.startswith("audio_scorer") for n in names["attention"])
        assert any(n.startswith("fuse_proj") for n in names["linear"])


class TestPersistence:
    def test_save_and_load_reproduce_logits(self, model, clip, tmp_path):
        path = save_model(model, tmp_path / "model.avrt", seed=5, created_by="test")
        restored = load_model(path)
        assert restored.cfg == model.cfg
        with no_grad():
            a = model.encode(clip.video, clip.audio).ctc_logits.data
            b = restored.encode(clip.video, clip.audio).ctc_logits.data
        np.testing.assert_array_equal(a, b)

    def test_missing_sidecar(self, model, tmp_path):
        path = save_checkpoint(tmp_path / "bare.avrt", model.state_dict())
        with pytest.raises(AVRelScoreError):
            load_model(path)


class TestVocabulary:
    def test_encode_decode(self):
        vocab = Vocabulary.of_size(4)
        ids = vocab.encode(["ba", "ko", "ba"])
        assert ids == [3, 6, 3]
        assert vocab.decode([vocab.sos] + ids + [vocab.eos]) == ["ba", "ko", "ba"]

    def test_unknown_word(self):
        with pytest.raises(VocabularyError):
            Vocabulary.of_size(2).encode(["zo"])
