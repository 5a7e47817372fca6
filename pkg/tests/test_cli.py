"""Tests for the command-line interface."""

import json

import pytest
from click.testing import CliRunner

from avrelscore.cli.runner import cli
from avrelscore.core.artifacts import read_metadata
from avrelscore.data import load_manifest
from avrelscore.decoding import NGramLM

TINY = ["--set", "max_symbols=3", "--set", "min_symbols=2"]
TINY_MODEL = [
    "--set", "d_model=8", "--set", "ff_dim=16", "--set", "enc_layers=1", "--set", "dec_layers=1",
    "--set", "heads=2", "--set", "conv_kernel=3", "--set", "visual_channels=2", "--set", "audio_channels=2,2,2",
]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus(runner, tmp_path):
    out = tmp_path / "data"
    result = runner.invoke(cli, ["gen-data", "-o", str(out), "--n-clips", "3", *TINY])
    assert result.exit_code == 0, result.output
    return out


class TestCommands:
    def test_gen_data(self, corpus):
        manifest, _ = load_manifest(corpus)
        assert len(manifest.entries) == 3
        assert (corpus / "media").is_dir()

    def test_lm_train(self, runner, corpus, tmp_path):
        out = tmp_path / "lm"
        result = runner.invoke(cli, ["lm-train", "--manifest", str(corpus), "-o", str(out), "--order", "2", "--seed", "4"])
        assert result.exit_code == 0, result.output
        lm = NGramLM.load(out / "lm.json")
        assert lm.order == 2
        assert read_metadata(out / "lm.json").seed == 4

    def test_corrupt(self, runner, corpus, tmp_path):
        out = tmp_path / "corrupted"
        result = runner.invoke(cli, [
            "corrupt", "--manifest", str(corpus), "-o", str(out),
            "--visual-corruption", "noise", "--snr", "5", "--dump-frames", *TINY,
        ])
        assert result.exit_code == 0, result.output
        assert (out / "plans.jsonl").exists()
        assert "3/3 clips corrupted" in result.output
        assert list((out / "frames").glob("*/frame_0000.pgm"))

    def test_train_two_stage_curriculum(self, runner, tmp_path):
        data = tmp_path / "data"
        short = ["--set", "min_symbols=2", "--set", "max_symbols=2"]
        result = runner.invoke(cli, ["gen-data", "-o", str(data), "--n-clips", "3", *short])
        assert result.exit_code == 0, result.output
        out = tmp_path / "train"
        result = runner.invoke(cli, [
            "train", "--manifest", str(data), "-o", str(out), "--stage-frames", "10,20", "--epochs", "5,5",
            *short, *TINY_MODEL,
        ])
        assert result.exit_code == 0, result.output
        assert (out / "checkpoint_stage0.avrt").exists() and (out / "checkpoint_stage1.avrt").exists()
        rows = (out / "metrics.csv").read_text().splitlines()
        assert rows[0] == "step,stage,lr,l_ctc,l_att,l_joint"
        assert {row.split(",")[1] for row in rows[1:]} == {"0", "1"}

    def test_gradcheck(self, runner, tmp_path):
        result = runner.invoke(cli, ["gradcheck", "-o", str(tmp_path), "--max-coords", "1"])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "gradcheck.json").read_text())
        assert report["max_rel_error"] < 1e-4


class TestErrors:
    def test_unknown_config_key(self, runner, tmp_path):
        result = runner.invoke(cli, ["gen-data", "-o", str(tmp_path), "--set", "bogus=1"])
        assert result.exit_code == 1
        assert "kind=ConfigError" in result.output
        assert "key=bogus" in result.output

    def test_invalid_config_value(self, runner, tmp_path):
        result = runner.invoke(cli, ["gen-data", "-o", str(tmp_path), "--set", "min_symbols=0"])
        assert result.exit_code == 1
        assert "key=min_symbols" in result.output

    def test_config_file(self, runner, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("# corpus\nmin_symbols = 2\nmax_symbols = 2\n")
        out = tmp_path / "data"
        result = runner.invoke(cli, ["gen-data", "-c", str(conf), "-o", str(out), "--n-clips", "2"])
        assert result.exit_code == 0, result.output
        manifest, _ = load_manifest(out)
        assert all(len(e.transcript) == 2 for e in manifest.entries)

    def test_missing_manifest(self, runner, tmp_path):
        result = runner.invoke(cli, ["lm-train", "--manifest", str(tmp_path / "none"), "-o", str(tmp_path)])
        assert result.exit_code == 1
        assert "kind=DatasetError" in result.output

    def test_unknown_flag(self, runner):
        result = runner.invoke(cli, ["gen-data", "--frobnicate"])
        assert result.exit_code == 2


@pytest.mark.slow
def test_train_decode_export_pipeline(runner, corpus, tmp_path):
    train_out = tmp_path / "train"
    result = runner.invoke(cli, [
        "train", "--manifest", str(corpus), "-o", str(train_out), "--stage-frames", "12", "--epochs", "1",
        *TINY, *TINY_MODEL,
    ])
    assert result.exit_code == 0, result.output
    checkpoint = train_out / "checkpoint_stage0.avrt"
    assert checkpoint.exists()

    result = runner.invoke(cli, [
        "decode", "--checkpoint", str(checkpoint), "--manifest", str(corpus), "-o", str(tmp_path / "dec"),
        "--beam-width", "2", *TINY, *TINY_MODEL,
    ])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "dec" / "decode.jsonl").read_text().splitlines()
    assert len(lines) == 3

    corrupted = tmp_path / "corrupted"
    runner.invoke(cli, ["corrupt", "--manifest", str(corpus), "-o", str(corrupted), *TINY])
    result = runner.invoke(cli, [
        "export-rel", "--checkpoint", str(checkpoint), "--manifest", str(corrupted), "-o", str(tmp_path / "rel"),
    ])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "rel" / "reliability.csv").exists()
