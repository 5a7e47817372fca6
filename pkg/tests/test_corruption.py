"""Tests for chunk scheduling, the visual and audio corruptions and plan application."""

import numpy as np
import pytest

from avrelscore.core.config import CorruptionConfig
from avrelscore.core.exceptions import BankLookupError, CorruptionError, SizingError
from avrelscore.corruption import (
    AudioClip,
    AudioSegment,
    CorruptionPlan,
    OcclusionPatch,
    Rect,
    VideoClip,
    add_pixel_noise,
    apply_occlusion,
    build_patch_bank,
    condition_config,
    corrupt_pair,
    gaussian_blur,
    load_plans,
    mix_at_snr,
    plan_corruption,
    save_plans,
    snr_db,
)
from avrelscore.corruption.scheduler import division_bounds
from avrelscore.corruption.visual import gaussian_kernel

SPF = 160


@pytest.fixture
def cfg() -> CorruptionConfig:
    return CorruptionConfig()


def _clip_pair(rng, frames: int = 12):
    video = VideoClip(
        frames=rng.uniform(0.2, 0.8, size=(frames, 32, 32, 1)),
        mouth_region=Rect(top=16, left=8, height=12, width=16),
    )
    audio = AudioClip(samples=rng.normal(size=frames * SPF))
    return video, audio


def _assert_spans_fit_divisions(spans, length, cfg):
    spans = sorted(spans)
    for (start, end), (d_start, d_end) in zip(spans, division_bounds(length, len(spans))):
        assert d_start <= start < end <= d_end
        fraction = (end - start) / (d_end - d_start)
        assert cfg.ratio_min - 1e-9 <= fraction <= cfg.ratio_max + 1e-9


class TestScheduler:
    def test_plan_is_pure(self, cfg):
        a = plan_corruption(42, 100, 100 * SPF, cfg)
        b = plan_corruption(42, 100, 100 * SPF, cfg)
        assert a == b

    def test_occlusion_segments_respect_divisions(self, cfg):
        for seed in range(300):
            plan = plan_corruption(seed, 100, 100 * SPF, cfg)
            spans = [(s.start, s.end) for s in plan.occlusion_segments]
            assert len(spans) <= cfg.max_occurrences
            if spans:
                _assert_spans_fit_divisions(spans, 100, cfg)

    def test_two_divisions_of_100_frames(self, cfg):
        two = cfg.model_copy(update={"max_occurrences": 2, "p_occlusion": 1.0})
        seen = False
        for seed in range(100):
            segs = plan_corruption(seed, 100, 100 * SPF, two).occlusion_segments
            if len(segs) == 2:
                seen = True
                assert all(15 <= s.end - s.start <= 25 for s in segs)
        assert seen

    def test_presence_frequencies(self, cfg):
        n = 10_000
        occ = blur = noise = overlap = 0
        for seed in range(n):
            plan = plan_corruption(seed, 20, 20 * SPF, cfg)
            occ += bool(plan.occlusion_segments)
            blur += bool(plan.blur_segments)
            noise += bool(plan.pixelnoise_segments)
            overlap += bool(np.any(plan.visual_frame_mask() & plan.audio_frame_mask(SPF)))
        assert abs(occ / n - 0.8) <= 0.02
        assert abs(blur / n - 0.3) <= 0.02
        assert abs(noise / n - 0.3) <= 0.02
        assert overlap > 0

    def test_stream_too_short(self, cfg):
        with pytest.raises(SizingError):
            plan_corruption(0, 2, 2 * SPF, cfg)

    def test_full_audio_span(self, cfg):
        full = condition_config(cfg, "clean", 5.0, audio_span="full")
        plan = plan_corruption(7, 10, 10 * SPF, full)
        assert [(s.start, s.end, s.snr_db) for s in plan.audio_segments] == [(0, 10 * SPF, 5.0)]
        assert not plan.visual_frame_mask().any()

    def test_condition_config_forces_presence(self, cfg):
        both = condition_config(cfg, "both", None)
        for seed in range(20):
            plan = plan_corruption(seed, 12, 12 * SPF, both)
            assert plan.occlusion_segments and plan.blur_segments and plan.pixelnoise_segments
            assert not plan.audio_segments

    def test_unknown_condition(self, cfg):
        with pytest.raises(CorruptionError):
            condition_config(cfg, "fog", None)

    def test_overlapping_occlusion_rejected(self):
        with pytest.raises(ValueError):
            CorruptionPlan(
                seed=0, num_frames=10, num_samples=1600,
                occlusion_segments=[
                    {"start": 0, "end": 5, "patch_id": "p0", "position": (1, 1)},
                    {"start": 4, "end": 8, "patch_id": "p1", "position": (1, 1)},
                ],
            )

    def test_plans_roundtrip_through_jsonl(self, tmp_path, cfg):
        plans = {f"clip-{i}": plan_corruption(i, 12, 12 * SPF, cfg) for i in range(3)}
        save_plans(tmp_path / "plans.jsonl", plans)
        assert load_plans(tmp_path / "plans.jsonl") == plans


class TestAudio:
    @pytest.mark.parametrize("snr", [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    def test_requested_snr_is_reached(self, rng, snr):
        clean = AudioClip(samples=rng.normal(size=4000))
        noise = rng.normal(size=4000) * 3.0
        out = mix_at_snr(clean, noise, snr, (1000, 3000))
        added = out.samples[1000:3000] - clean.samples[1000:3000]
        assert abs(snr_db(clean.samples[1000:3000], added) - snr) < 0.1
        np.testing.assert_array_equal(out.samples[:1000], clean.samples[:1000])
        np.testing.assert_array_equal(out.samples[3000:], clean.samples[3000:])

    def test_twenty_db_is_a_hundredth(self, rng):
        clean = AudioClip(samples=rng.normal(size=800))
        out = mix_at_snr(clean, rng.normal(size=800), 20.0, (0, 800))
        added = out.samples - clean.samples
        assert np.mean(added ** 2) == pytest.approx(np.mean(clean.samples ** 2) / 100)

    def test_zero_power_noise(self, rng):
        clean = AudioClip(samples=rng.normal(size=100))
        with pytest.raises(CorruptionError):
            mix_at_snr(clean, np.zeros(100), 0.0, (0, 100))

    def test_short_noise(self, rng):
        clean = AudioClip(samples=rng.normal(size=100))
        with pytest.raises(CorruptionError):
            mix_at_snr(clean, rng.normal(size=10), 0.0, (0, 100))


class TestVisual:
    def _patch(self, alpha: float, value: float = 1.0) -> OcclusionPatch:
        return OcclusionPatch(patch_id="p", pixels=np.full((4, 4, 1), value), alpha=np.full((4, 4), alpha))

    def test_transparent_patch(self, rng):
        frame = rng.uniform(size=(16, 16, 1))
        np.testing.assert_array_equal(apply_occlusion(frame, self._patch(0.0), (8, 8)), frame)

    def test_opaque_patch(self, rng):
        frame = rng.uniform(size=(16, 16, 1))
        out = apply_occlusion(frame, self._patch(1.0, 0.25), (8, 8))
        np.testing.assert_array_equal(out[6:10, 6:10], np.full((4, 4, 1), 0.25))
        np.testing.assert_array_equal(out[:6], frame[:6])

    def test_half_alpha_blend(self):
        out = apply_occlusion(np.zeros((16, 16, 1)), self._patch(0.5), (8, 8))
        np.testing.assert_allclose(out[6:10, 6:10], 0.5)

    def test_patch_larger_than_frame(self):
        with pytest.raises(CorruptionError):
            apply_occlusion(np.zeros((3, 3, 1)), self._patch(1.0), (1, 1))

    def test_blur_keeps_constant_image(self):
        frame = np.full((12, 12, 1), 0.37)
        np.testing.assert_allclose(gaussian_blur(frame, 1.3), frame, atol=1e-12)

    def test_blur_of_impulse_is_kernel(self):
        frame = np.zeros((15, 15, 1))
        frame[7, 7, 0] = 1.0
        taps = gaussian_kernel(0.5)
        out = gaussian_blur(frame, 0.5)
        np.testing.assert_allclose(out[4:11, 4:11, 0], np.outer(taps, taps), atol=1e-12)

    def test_blur_preserves_interior_mass(self, rng):
        frame = np.zeros((20, 20, 1))
        frame[7:13, 7:13, 0] = rng.uniform(size=(6, 6))
        assert gaussian_blur(frame, 2.0).sum() == pytest.approx(frame.sum(), abs=1e-6)

    @pytest.mark.parametrize("sigma", [0.0, 0.05, 2.5])
    def test_blur_rejects_sigma_out_of_range(self, sigma):
        with pytest.raises(CorruptionError):
            gaussian_blur(np.zeros((8, 8, 1)), sigma)

    @pytest.mark.parametrize("sigma", [0.1, 2.0])
    def test_blur_accepts_range_ends(self, sigma):
        assert gaussian_blur(np.full((8, 8, 1), 0.5), sigma).shape == (8, 8, 1)

    def test_pixel_noise_variance(self):
        frame = np.full((64, 64, 1), 0.5)
        out = add_pixel_noise(frame, 0.01, seed=9, frame_index=2)
        assert np.var(out - frame) == pytest.approx(0.01, abs=0.001)

    def test_pixel_noise_is_deterministic(self):
        frame = np.full((8, 8, 1), 0.5)
        a = add_pixel_noise(frame, 0.1, seed=5, frame_index=3)
        b = add_pixel_noise(frame, 0.1, seed=5, frame_index=3)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, add_pixel_noise(frame, 0.1, seed=5, frame_index=4))

    def test_pixel_noise_rejects_large_variance(self):
        with pytest.raises(CorruptionError):
            add_pixel_noise(np.zeros((4, 4, 1)), 0.3, seed=0)


class TestCorruptPair:
    @pytest.fixture
    def banks(self, cfg, rng):
        return build_patch_bank(cfg, seed=0), {f"babble-{i}": rng.normal(size=4000) for i in range(cfg.noise_bank_size)}

    def test_empty_plan_is_identity(self, rng, banks):
        video, audio = _clip_pair(rng)
        plan = CorruptionPlan(seed=1, num_frames=video.num_frames, num_samples=audio.num_samples)
        out_v, out_a = corrupt_pair(video, audio, plan, *banks)
        np.testing.assert_array_equal(out_v.frames, video.frames)
        np.testing.assert_array_equal(out_a.samples, audio.samples)

    def test_audio_only_plan_leaves_video(self, rng, banks, cfg):
        video, audio = _clip_pair(rng)
        plan = plan_corruption(3, video.num_frames, audio.num_samples, condition_config(cfg, "clean", 0.0))
        assert plan.audio_segments
        out_v, out_a = corrupt_pair(video, audio, plan, *banks)
        np.testing.assert_array_equal(out_v.frames, video.frames)
        assert not np.array_equal(out_a.samples, audio.samples)

    def test_fixed_plan_gives_same_output(self, rng, banks, cfg):
        video, audio = _clip_pair(rng)
        plan = plan_corruption(11, video.num_frames, audio.num_samples, condition_config(cfg, "both", 5.0),
                               mouth_region=video.mouth_region)
        first = corrupt_pair(video, audio, plan, *banks)
        second = corrupt_pair(video, audio, plan, *banks)
        np.testing.assert_array_equal(first[0].frames, second[0].frames)
        np.testing.assert_array_equal(first[1].samples, second[1].samples)
        assert first[0].frames.min() >= 0.0 and first[0].frames.max() <= 1.0

    def test_missing_noise_id(self, rng, banks):
        video, audio = _clip_pair(rng)
        plan = CorruptionPlan(
            seed=1, num_frames=video.num_frames, num_samples=audio.num_samples,
            audio_segments=[AudioSegment(start=0, end=100, noise_id="missing", snr_db=0.0)],
        )
        with pytest.raises(BankLookupError) as info:
            corrupt_pair(video, audio, plan, *banks)
        assert info.value.key == "missing"

    def test_plan_size_mismatch(self, rng, banks):
        video, audio = _clip_pair(rng)
        plan = CorruptionPlan(seed=1, num_frames=video.num_frames + 1, num_samples=audio.num_samples)
        with pytest.raises(SizingError):
            corrupt_pair(video, audio, plan, *banks)
