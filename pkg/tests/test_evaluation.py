"""Tests for WER, the seeded test sets, the grid runner and the reliability export."""

import csv
from pathlib import Path

import numpy as np
import pytest

from avrelscore.core.artifacts import assert_seed_domain, read_metadata
from avrelscore.core.config import ConfigBundle, DecodeConfig
from avrelscore.core.exceptions import DatasetError
from avrelscore.corruption import build_patch_bank, condition_config, load_plans
from avrelscore.data import build_noise_bank, generate_clips, load_clips, load_manifest
from avrelscore.evaluation import (
    VARIANTS,
    GridCondition,
    compare_variants,
    corpus_wer,
    corrupt_clips,
    corrupt_dataset,
    default_conditions,
    export_reliability,
    reliability_contrast,
    reliability_rows,
    run_grid,
    wer,
    word_errors,
)
from avrelscore.evaluation.reliability_export import RELIABILITY_HEADER
from avrelscore.model import AVRelScoreModel, save_model
from tests.oracles import levenshtein

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def banks(tiny_bundle):
    return (
        build_patch_bank(tiny_bundle.corruption, seed=0),
        build_noise_bank(tiny_bundle.synthetic, tiny_bundle.corruption, seed=0),
    )


@pytest.fixture
def checkpoint(tiny_model_cfg, tmp_path):
    return save_model(AVRelScoreModel(tiny_model_cfg, seed=2), tmp_path / "model.avrt", seed=2, created_by="test")


@pytest.fixture
def fast_bundle(tiny_bundle):
    return tiny_bundle.model_copy(update={"decode": DecodeConfig(beam_width=2, max_len=4)})


class TestWER:
    def test_single_deletion(self):
        assert wer(["a", "b", "c"], ["a", "c"]) == pytest.approx(100 / 3)
        assert word_errors(["a", "b", "c"], ["a", "c"]) == 1

    def test_substitution_plus_insertion(self):
        assert word_errors(["a", "b"], ["x", "b", "y"]) == 2
        assert wer(["a", "b"], ["x", "b", "y"]) == pytest.approx(100.0)

    def test_matches_reference_distance(self, rng):
        for _ in range(200):
            ref = list(rng.choice(list("abcd"), size=rng.integers(1, 8)))
            hyp = list(rng.choice(list("abcd"), size=rng.integers(0, 8)))
            assert word_errors(ref, hyp) == levenshtein(ref, hyp)

    def test_empty_reference(self):
        with pytest.raises(DatasetError):
            wer([], ["a"])

    def test_corpus_pools_errors(self):
        pairs = [(["a", "b"], ["a", "b"]), (["a", "b", "c", "d"], ["a"])]
        assert corpus_wer(pairs) == pytest.approx(50.0)


class TestConditions:
    def test_default_grid(self):
        conditions = default_conditions()
        labels = [c.label for c in conditions]
        assert len(labels) == len(set(labels)) == 29
        assert labels.count("clean/clean/chunks") == 1
        assert all(c.visual == "clean" for c in conditions if c.audio_mode == "full")

    def test_snr_label(self):
        assert GridCondition(snr=-5.0).snr_label == "-5"
        assert GridCondition().snr_label == "clean"


class TestTestSet:
    def test_plans_are_fixed_by_seed(self, clips, tiny_bundle, banks):
        cfg = condition_config(tiny_bundle.corruption, "both", 0.0)
        a = corrupt_clips(clips, cfg, 5, *banks)
        b = corrupt_clips(clips, cfg, 5, *banks, workers=3)
        assert [p for _, p in a] == [p for _, p in b]
        for (x, _), (y, _) in zip(a, b):
            np.testing.assert_array_equal(x.video.frames, y.video.frames)
            np.testing.assert_array_equal(x.audio.samples, y.audio.samples)

    def test_plan_seeds_live_in_the_test_range(self, clips, tiny_bundle, banks):
        plans = [p for _, p in corrupt_clips(clips, tiny_bundle.corruption, 5, *banks)]
        assert_seed_domain([p.seed for p in plans], "test")

    def test_corrupt_dataset_writes_plans_and_media(self, clips, tiny_bundle, banks, tmp_path):
        manifest, plans = corrupt_dataset(clips, tiny_bundle.corruption, 5, *banks, out_dir=tmp_path)
        assert load_plans(tmp_path / "plans.jsonl") == plans
        assert read_metadata(tmp_path / "plans.jsonl").seed == 5
        loaded, root = load_manifest(tmp_path)
        assert loaded.clip_ids() == sorted(c.clip_id for c in clips)
        assert len(load_clips(loaded, root)) == len(clips)


class TestGrid:
    def test_missing_checkpoint(self, clips, fast_bundle, tmp_path):
        with pytest.raises(DatasetError):
            run_grid({"m": tmp_path / "absent.avrt"}, clips, fast_bundle)

    def test_no_clips(self, checkpoint, fast_bundle):
        with pytest.raises(DatasetError):
            run_grid({"m": checkpoint}, [], fast_bundle)

    def test_same_seed_same_tables(self, checkpoint, clips, fast_bundle, tmp_path):
        conditions = [GridCondition(visual="occlusion", snr=5.0), GridCondition(visual="clean", snr=0.0, audio_mode="full")]
        reports = run_grid({"m": checkpoint}, clips, fast_bundle, conditions=conditions, seed=3, out_dir=tmp_path / "a")
        run_grid({"m": checkpoint}, clips, fast_bundle, conditions=conditions, seed=3, out_dir=tmp_path / "b", workers=2)
        assert [r.n_utts for r in reports] == [len(clips)] * 2
        for name in ("grid_table.csv", "grid_long.csv"):
            assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()
        rows = list(csv.reader((tmp_path / "a" / "grid_long.csv").open()))
        assert rows[0] == ["model", "visual", "snr", "audio_mode", "wer", "n_utts"]
        assert len(rows) == 3


class TestReliabilityExport:
    @pytest.fixture
    def corrupted(self, clips, tiny_bundle, banks):
        cfg = condition_config(tiny_bundle.corruption, "occlusion", 0.0)
        pairs = corrupt_clips(clips, cfg, 9, *banks)
        return [c for c, _ in pairs], {c.clip_id: p for c, p in pairs}

    def test_csv_columns_and_flags(self, tiny_model_cfg, corrupted, tmp_path):
        clips, plans = corrupted
        model = AVRelScoreModel(tiny_model_cfg, seed=1)
        rows = export_reliability(model, clips, plans, tmp_path / "reliability.csv", seed=9)
        with (tmp_path / "reliability.csv").open() as fh:
            table = list(csv.DictReader(fh))
        assert list(table[0]) == RELIABILITY_HEADER
        assert len(table) == sum(c.video.num_frames for c in clips)
        for row in rows:
            assert 0.0 < row.s_a_mean < 1.0 and 0.0 < row.s_v_mean < 1.0
            plan = plans[row.clip_id]
            assert row.visual_corrupted == bool(plan.visual_frame_mask()[row.frame])
        assert any(r.visual_corrupted for r in rows)
        assert any(r.audio_corrupted for r in rows)

    def test_contrast_groups(self, tiny_model_cfg, corrupted):
        clips, plans = corrupted
        rows = reliability_rows(AVRelScoreModel(tiny_model_cfg, seed=1), clips, plans)
        contrast = reliability_contrast(rows)
        flagged = [r.s_v_mean for r in rows if r.visual_corrupted]
        assert contrast.s_v_corrupted == pytest.approx(np.mean(flagged))

    def test_missing_plan(self, tiny_model_cfg, corrupted):
        clips, plans = corrupted
        plans = dict(plans)
        plans.pop(clips[0].clip_id)
        with pytest.raises(DatasetError):
            reliability_rows(AVRelScoreModel(tiny_model_cfg, seed=1), clips, plans)


class TestVariantComparison:
    def test_one_seed_produces_every_variant(self, clips, tiny_bundle, tmp_path):
        bundle = tiny_bundle.model_copy(update={
            "decode": DecodeConfig(beam_width=2, max_len=4),
            "train": tiny_bundle.train.model_copy(update={"stage_frames": [12], "stage_epochs": [1]}),
        })
        report = compare_variants(clips, clips, bundle, [1], tmp_path)
        (outcome,) = report.outcomes
        assert set(outcome.noisy_wer) == set(outcome.clean_wer) == set(VARIANTS)
        assert (tmp_path / "seed1" / "grid" / "grid_long.csv").exists()
        assert read_metadata(tmp_path / "trend.json").seed == 1
        assert report.wins == int(outcome.relscore_wins)


@pytest.mark.slow
def test_reliability_scoring_wins_under_noise(tmp_path):
    bundle = ConfigBundle.load([CONFIGS / "tiny.conf"])
    train_clips = generate_clips(bundle.synthetic, 32, split="train")
    test_clips = generate_clips(bundle.synthetic, 16, split="test")
    report = compare_variants(train_clips, test_clips, bundle, [0, 1, 2, 3], tmp_path, workers=2)
    assert report.wins >= 3
    assert np.mean([o.clean_gap for o in report.outcomes]) <= 2.0
    for outcome in report.outcomes:
        assert outcome.contrast.visual_gap > 0.0
        assert outcome.contrast.audio_gap > 0.0
