import subprocess
import sys

import numpy as np
import pytest

from colorizer.cli import main
from colorizer.colorspace import rgb_to_lab
from colorizer.imageio import read_image, write_png
from colorizer.model import NetConfig, build_network, init_weights
from colorizer.checkpoint import save_checkpoint

from conftest import SMALL_CHANNELS


@pytest.fixture
def model_path(tmp_path):
    net = init_weights(build_network(NetConfig(input_size=16, channels=SMALL_CHANNELS)), 0)
    path = tmp_path / "final.aclr"
    save_checkpoint(net, None, path)
    return path


def write_config(path, **kw):
    base = dict(image_size=16, batch_size=4, epochs=1, channels="4, 8, 8", lr=0.001)
    base.update(kw)
    path.write_text("# test config\n" + "\n".join(f"{k} = {v}" for k, v in base.items()) + "\n")
    return path


def test_colorize_writes_output(tmp_path, model_path, scenes):
    write_png(tmp_path / "photo.png", scenes[0])
    out = tmp_path / "outdir"
    code = main(["colorize", "--model", str(model_path), str(tmp_path / "photo.png"), "--out", str(out)])
    assert code == 0
    img = read_image(out / "photo.png")
    assert img.shape == (64, 64, 3)


def test_colorize_directory_and_gray_input(tmp_path, model_path, scenes):
    src = tmp_path / "in"
    src.mkdir()
    write_png(src / "a.png", scenes[0])
    write_png(src / "b.png", scenes[1][..., 1])
    out = tmp_path / "out"
    assert main(["colorize", "--model", str(model_path), str(src), "--out", str(out),
                 "--decode", "mode", "--temp", "0.5", "--saturation", "0.5"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["a.png", "b.png"]


def test_colorize_bad_checkpoint(tmp_path, scenes, capsys):
    bad = tmp_path / "bad.aclr"
    bad.write_bytes(b"XXXX" + bytes(20))
    write_png(tmp_path / "p.png", scenes[0])
    assert main(["colorize", "--model", str(bad), str(tmp_path / "p.png"), "--out", str(tmp_path / "o")]) == 1
    assert "not a checkpoint" in capsys.readouterr().err


def test_train_missing_data_dir(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.cfg", data_dir=tmp_path / "missing", out_dir=tmp_path / "o")
    assert main(["train", "--config", str(cfg)]) == 1
    assert str(tmp_path / "missing") in capsys.readouterr().err


def test_train_flags_override_config(tmp_path, image_dir):
    cfg = write_config(tmp_path / "c.cfg", data_dir=tmp_path / "missing", out_dir=tmp_path / "o", epochs=1)
    out = tmp_path / "flagged"
    assert main(["train", "--config", str(cfg), "--data", str(image_dir), "--out", str(out),
                 "--epochs", "2"]) == 0
    assert sorted(p.name for p in out.glob("*.aclr")) == ["epoch_001.aclr", "epoch_002.aclr", "final.aclr"]
    assert not (tmp_path / "o").exists()


def test_train_unknown_config_key(tmp_path, image_dir, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"data_dir = {image_dir}\nwarp_factor = 9\n")
    assert main(["train", "--config", str(cfg)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_train_twice_identical(tmp_path, image_dir):
    for name in ("a", "b"):
        cfg = write_config(tmp_path / f"{name}.cfg", data_dir=image_dir, out_dir=tmp_path / name, seed=4)
        assert main(["-q", "train", "--config", str(cfg)]) == 0
    assert (tmp_path / "a" / "final.aclr").read_bytes() == (tmp_path / "b" / "final.aclr").read_bytes()


def test_eval_command(tmp_path, scenes, capsys):
    d = tmp_path / "d"
    d.mkdir()
    write_png(d / "x.png", scenes[0])
    report = tmp_path / "report.csv"
    assert main(["eval", "--pred", str(d), "--truth", str(d), "--out", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "file,psnr_db,ab_mae,bias_a,bias_b"
    assert lines[-1].startswith("AGGREGATE,99.0000,0.0000")
    assert "AGGREGATE" in capsys.readouterr().out


def test_convert_round_trip(tmp_path, scenes):
    write_png(tmp_path / "in.png", scenes[3])
    assert main(["convert", "--to", "lab", str(tmp_path / "in.png"), str(tmp_path / "lab.npy")]) == 0
    lab = np.load(tmp_path / "lab.npy")
    np.testing.assert_array_equal(lab, rgb_to_lab(scenes[3]))
    assert main(["convert", "--to", "rgb", str(tmp_path / "lab.npy"), str(tmp_path / "out.png")]) == 0
    back = read_image(tmp_path / "out.png")
    assert np.abs(back.astype(int) - scenes[3]).max() <= 1


def test_convert_rgb_needs_npy(tmp_path, scenes):
    write_png(tmp_path / "in.png", scenes[3])
    assert main(["convert", "--to", "rgb", str(tmp_path / "in.png"), str(tmp_path / "o.png")]) == 2


def test_gradcheck_command(capsys):
    assert main(["gradcheck"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 18
    for line in lines:
        err = float(line.split("max_rel_err=")[1].split()[0])
        assert err < 1e-3 and line.endswith("ok")


def test_inspect(model_path, capsys):
    assert main(["inspect", str(model_path)]) == 0
    out = capsys.readouterr().out
    assert "version: 1" in out
    assert "conv1.weight" in out and "4x1x3x3" in out
    assert "bn7.running_var" in out


@pytest.mark.parametrize("argv", [["frobnicate"], ["colorize", "--bogus"], [],
                                  ["convert", "--to", "hsv", "a", "b"]])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_thread_env_var(monkeypatch, model_path, capsys):
    monkeypatch.setenv("COLORIZER_NUM_THREADS", "1")
    assert main(["inspect", str(model_path)]) == 0
    monkeypatch.setenv("COLORIZER_NUM_THREADS", "lots")
    assert main(["inspect", str(model_path)]) == 2


def test_module_entry_point_exit_codes(tmp_path):
    ok = subprocess.run([sys.executable, "-m", "colorizer", "--help"], capture_output=True, text=True)
    assert ok.returncode == 0 and "colorize" in ok.stdout
    bad = subprocess.run([sys.executable, "-m", "colorizer", "nope"], capture_output=True, text=True)
    assert bad.returncode == 2 and "usage" in bad.stderr
