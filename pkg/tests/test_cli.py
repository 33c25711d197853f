import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import tiny_configs

from seasongan.cli import FAILED_MARKER, build_parser, main
from seasongan.data import decode_image, load_image_dir, stack_pixels, synthesize_paired_domains
from seasongan.features import extract_features
from seasongan.placerec import GroundTruth, evaluate_pr, match_sequences, read_pr_curve
from seasongan.training import init_state, load_checkpoint, save_checkpoint

TINY_YAML = """\
generator: {input_size: 16, encoder_channels: [4, 8]}
discriminator: {input_size: 16, encoder_channels: [4, 8], feature_dim: 6}
training: {total_steps: 10, batch_size: 2, dtype: float64}
data: {domain_a_dir: %(root)s/syn/A, domain_b_dir: %(root)s/syn/B, image_size: 16}
"""


@pytest.fixture
def synth_dir(tmp_path):
    assert main(["synth", "--count", "8", "--size", "16", "--seed", "3", "--out", str(tmp_path / "syn")]) == 0
    return tmp_path / "syn"


@pytest.fixture
def tiny_config(tmp_path, synth_dir):
    path = tmp_path / "run.yaml"
    path.write_text(TINY_YAML % {"root": tmp_path})
    return path


def test_synth_writes_images_and_manifest(tmp_path, synth_dir):
    assert len(list((synth_dir / "A").glob("*.png"))) + len(list((synth_dir / "B").glob("*.png"))) == 16
    with open(synth_dir / "manifest.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16 and set(rows[0]) == {"frame_index", "domain", "path", "seed"}
    assert all(r["seed"] == "3" for r in rows)
    main(["synth", "--count", "8", "--size", "16", "--seed", "3", "--out", str(tmp_path / "again")])
    assert (tmp_path / "again" / "manifest.csv").read_bytes() == (synth_dir / "manifest.csv").read_bytes()


def test_synth_images_reload(synth_dir):
    seq_a, seq_b = synthesize_paired_domains(3, 8, 16)
    for rec in seq_a + seq_b:
        back = decode_image(synth_dir / rec.domain / f"{rec.frame_index:06d}.png", 16)
        assert np.max(np.abs(back - rec.pixels)) <= 1 / 127.5


def test_synth_unwritable_path(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["synth", "--count", "2", "--size", "16", "--out", str(blocker / "sub")]) != 0
    assert "error" in capsys.readouterr().err


def test_train_smoke_and_resume(tmp_path, tiny_config):
    out = tmp_path / "run"
    assert main(["train", "--config", str(tiny_config), "--out", str(out), "--log-every", "0"]) == 0
    rows = (out / "loss_log.csv").read_text().splitlines()
    assert len(rows) == 11 and rows[1].startswith("1,") and rows[-1].startswith("10,")
    assert (out / "checkpoints" / "final.ckpt").exists() and (out / "config.yaml").exists()

    resumed = tmp_path / "resumed"
    assert main(["train", "--config", str(tiny_config), "--steps", "14", "--out", str(resumed),
                 "--resume", str(out / "checkpoints" / "final.ckpt"), "--log-every", "0"]) == 0
    rows = (resumed / "loss_log.csv").read_text().splitlines()[1:]
    assert [int(r.split(",")[0]) for r in rows] == [11, 12, 13, 14]
    assert load_checkpoint(resumed / "checkpoints" / "final.ckpt").step == 14

    # the same 14 steps in one go give the same tail
    straight = tmp_path / "straight"
    main(["train", "--config", str(tiny_config), "--steps", "14", "--out", str(straight), "--log-every", "0"])
    assert (straight / "loss_log.csv").read_text().splitlines()[-4:] == rows


def test_train_invalid_key(tmp_path, tiny_config, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(tiny_config.read_text() + "extra_section: {learning_rate: 1}\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "o")]) != 0
    assert "extra_section" in capsys.readouterr().err


def test_train_failure_marks_output(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("data: {domain_a_dir: nowhere, domain_b_dir: nowhere}\n")
    out = tmp_path / "o"
    out.mkdir()
    assert main(["train", "--config", str(cfg), "--out", str(out)]) != 0
    assert (out / FAILED_MARKER).exists()


def _identity_checkpoint(path):
    cfg, g, d = tiny_configs()
    g.input_skip, g.skip_connections = True, False
    state = init_state(cfg, g, d)
    for name in ("G_A", "G_B"):
        for deconv, _ in state.network(name).decoder:
            deconv.weight.data[...] = 0.0
    save_checkpoint(state, path)


def test_translate_identity_generator(tmp_path, synth_dir):
    ckpt = tmp_path / "id.ckpt"
    _identity_checkpoint(ckpt)
    out = tmp_path / "tx"
    assert main(["translate", "--checkpoint", str(ckpt), "--in", str(synth_dir / "A"), "--out", str(out)]) == 0
    inputs = sorted((synth_dir / "A").glob("*.png"))
    assert len(list(out.glob("*.png"))) == len(inputs)
    for f in inputs:
        expected = np.tanh(decode_image(f, 16))
        assert np.max(np.abs(decode_image(out / f.name, 16) - expected)) <= 1 / 127.5
    summary = json.loads((out / "translate_summary.json").read_text())
    assert summary["images"] == len(inputs) and summary["mean_ms_per_image"] > 0


def test_match_eval_self_match(tmp_path, synth_dir):
    ckpt = tmp_path / "id.ckpt"
    _identity_checkpoint(ckpt)
    out = tmp_path / "me"
    args = ["match-eval", "--checkpoint", str(ckpt), "--query-dir", str(synth_dir / "A"),
            "--db-dir", str(synth_dir / "A"), "--lengths", "1,3", "--threshold-grid", "50",
            "--no-translate", "--out", str(out)]
    assert main(args) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["curves"]["1"]["max_recall"] == 1.0
    assert summary["curves"]["3"]["max_recall"] == (8 - 3 + 1) / 8
    c1 = read_pr_curve(out / "pr_n1.csv")
    accepting = c1.thresholds > 0
    assert np.all(c1.recall[accepting] == 1.0) and np.all(c1.precision[accepting] == 1.0)
    assert (out / "distance_heatmap.png").exists() and not (out / FAILED_MARKER).exists()


def test_match_eval_pr_files_equal_library(tmp_path, synth_dir):
    ckpt = tmp_path / "id.ckpt"
    _identity_checkpoint(ckpt)
    out = tmp_path / "me"
    assert main(["match-eval", "--checkpoint", str(ckpt), "--query-dir", str(synth_dir / "B"),
                 "--db-dir", str(synth_dir / "A"), "--lengths", "2", "--direction", "B2A",
                 "--out", str(out)]) == 0
    state = load_checkpoint(ckpt)
    q = stack_pixels(load_image_dir(synth_dir / "B", 16), np.float64)
    db = stack_pixels(load_image_dir(synth_dir / "A", 16), np.float64)
    matches, _ = match_sequences(extract_features(state.D_A, state.G_A(q)), extract_features(state.D_A, db), 2)
    ref = evaluate_pr(matches, GroundTruth.identity(8, 2), total_queries=8, sequence_length=2)
    got = read_pr_curve(out / "pr_n2.csv")
    np.testing.assert_array_equal(got.precision, ref.precision)
    np.testing.assert_array_equal(got.recall, ref.recall)


def test_match_eval_failure_marker(tmp_path, synth_dir, capsys):
    out = tmp_path / "me"
    out.mkdir()
    code = main(["match-eval", "--checkpoint", str(tmp_path / "missing.ckpt"), "--query-dir",
                 str(synth_dir / "B"), "--db-dir", str(synth_dir / "A"), "--out", str(out)])
    assert code != 0 and (out / FAILED_MARKER).exists()


def test_plot_and_default_config(tmp_path, synth_dir, capsys):
    ckpt = tmp_path / "id.ckpt"
    _identity_checkpoint(ckpt)
    main(["match-eval", "--checkpoint", str(ckpt), "--query-dir", str(synth_dir / "A"), "--db-dir",
          str(synth_dir / "A"), "--lengths", "1", "--out", str(tmp_path / "me")])
    assert main(["plot", str(tmp_path / "me" / "pr_n1.csv"), "--out", str(tmp_path / "pr.svg")]) == 0
    assert (tmp_path / "pr.svg").read_text().lstrip().startswith("<?xml")
    assert main(["default-config"]) == 0
    assert "matching:" in capsys.readouterr().out


def test_every_flag_documents_its_default():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        for action in p._actions:
            if not action.option_strings or action.dest == "help":
                continue
            rendered = p.formatter_class("x")._get_help_string(action)
            assert "default" in rendered or "(required)" in rendered, (name, action.dest)


def test_console_script_help():
    result = subprocess.run([sys.executable, "-m", "seasongan.cli", "match-eval", "--help"],
                            capture_output=True, text=True, check=True)
    for flag in ("--direction", "--lengths", "--threshold-grid", "--tolerance-frames", "--stride", "--config"):
        assert flag in result.stdout
