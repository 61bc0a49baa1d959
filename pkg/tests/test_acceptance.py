"""Exit criteria for the colorizer. One test per criterion; each records a
PASS/FAIL line that is printed in the pytest terminal summary."""

import struct
import time

import numpy as np
import pytest

from colorizer import LabColorizer
from colorizer.checkpoint import (CorruptCheckpointError, NotACheckpointError,
                                  UnsupportedVersionError, load_checkpoint, save_checkpoint)
from colorizer.cli import main
from colorizer.colorspace import lab_to_rgb, rgb_to_lab
from colorizer.datasets import make_scenes
from colorizer.imageio import write_png
from colorizer.metrics import ab_errors, eval_report, psnr
from colorizer.model import NetConfig, build_network, init_weights
from colorizer.nn import euclidean_loss
from colorizer.nn.gradcheck import run_suite
from colorizer.pipeline import colorize
from colorizer.quantizer import (build_bin_grid, decode_distribution, quantize_ab,
                                 soft_encode, soft_encode_dense)

from conftest import ACCEPTANCE_RESULTS


def record(number, title, ok, detail):
    ACCEPTANCE_RESULTS.append((number, title, bool(ok), detail))
    print(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    assert ok, f"criterion {number} ({title}) failed: {detail}"


def gray_render(img):
    lab = rgb_to_lab(img)
    lab[..., 1:] = 0
    return lab_to_rgb(lab)


def test_01_color_round_trip():
    t0 = time.perf_counter()
    g = np.arange(0, 256, 17)
    rgb = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 1, 3).astype(np.uint8)
    err = np.abs(lab_to_rgb(rgb_to_lab(rgb)).astype(int) - rgb).max()
    elapsed = time.perf_counter() - t0
    record(1, "color round trip", err <= 1 and elapsed < 5,
           f"max channel error {err} (<= 1) over 16^3 grid in {elapsed:.2f}s (< 5s)")


def test_02_neutral_axis():
    gray = np.repeat(np.arange(256, dtype=np.uint8)[:, None, None], 3, axis=2)
    ab = np.abs(rgb_to_lab(gray)[..., 1:]).max()
    record(2, "neutral axis", ab < 1e-9, f"max |a|,|b| = {ab:.3g} (< 1e-9) over 256 gray levels")


def test_03_gradient_suite():
    t0 = time.perf_counter()
    results = run_suite(eps=1e-5, seed=0)
    elapsed = time.perf_counter() - t0
    worst_name, worst = max(results, key=lambda r: r[1])
    convs = sum(name.startswith("conv2d") for name, _ in results)
    ok = worst < 1e-3 and elapsed < 60 and convs == 12 and len(results) == 18
    record(3, "gradient suite", ok,
           f"{len(results)} kernels, worst {worst_name} = {worst:.2e} (< 1e-3) in {elapsed:.1f}s (< 60s)")


def test_04_loss_spot_value():
    pred = np.array([1.0, 2.0], dtype=np.float32).reshape(1, 2, 1, 1)
    loss, _ = euclidean_loss(pred, np.zeros_like(pred))
    record(4, "loss spot value", loss == 2.5, f"loss = {loss!r} (exactly 2.5)")


@pytest.mark.slow
def test_05_overfit_convergence():
    img = make_scenes(1, size=64, seed=7)
    t0 = time.perf_counter()
    est = LabColorizer(epochs=500, batch_size=8, lr=3e-4, optimizer="adam", random_state=0).fit(img)
    elapsed = time.perf_counter() - t0
    losses = np.array(est.loss_curve_)
    out = est.transform(img)[0]
    quality = psnr(out, img[0])
    trailing = np.convolve(losses, np.ones(50) / 50, mode="valid")
    ok = (len(losses) == 500 and losses[-1] <= losses[0] / 100 and quality >= 25
          and elapsed < 300 and trailing[-1] < trailing[0])
    record(5, "overfit convergence", ok,
           f"loss {losses[0]:.4g} -> {losses[-1]:.4g} (ratio {losses[0] / losses[-1]:.3g} >= 100), "
           f"PSNR {quality:.2f} dB (>= 25), {elapsed:.0f}s (< 300s)")


@pytest.mark.slow
def test_06_desk_scale_learning_signal():
    train = make_scenes(200, size=64, seed=100)
    held_out = make_scenes(40, size=64, seed=200)
    t0 = time.perf_counter()
    est = LabColorizer(epochs=10, random_state=0).fit(train)
    preds = est.transform(held_out)
    elapsed = time.perf_counter() - t0
    mae = float(np.mean([ab_errors(p, t)[0] for p, t in zip(preds, held_out)]))
    baseline = float(np.mean([ab_errors(gray_render(t), t)[0] for t in held_out]))
    record(6, "desk-scale learning signal", mae < baseline and elapsed < 1800,
           f"held-out ab MAE {mae:.3f} < gray baseline {baseline:.3f}, {elapsed:.0f}s (< 1800s)")


def test_07_quantizer_laws():
    grid = build_bin_grid(10)
    rng = np.random.default_rng(77)
    n = 10_000
    # in-gamut samples: uniform inside randomly chosen in-gamut cells
    ab = grid.centers[rng.integers(0, grid.Q, n)] + rng.uniform(-5, 5, (n, 2))
    _, w = soft_encode(ab, grid)
    sums_ok = np.all(w >= 0) and np.abs(w.sum(-1) - 1).max() <= 1e-6
    fixed_ok = np.array_equal(quantize_ab(grid.centers, grid), np.arange(grid.Q))
    back = decode_distribution(soft_encode_dense(ab, grid), grid, "mode")
    dist = np.hypot(*(back - ab).T).max()
    bound = grid.bin_size * np.sqrt(2) / 2
    record(7, "quantizer laws", sums_ok and fixed_ok and dist <= bound,
           f"soft labels sum to 1 +- 1e-6: {sums_ok}; quantize(center_i)=i for all {grid.Q}: "
           f"{fixed_ok}; max mode-decode distance {dist:.3f} <= {bound:.3f} on 1e4 samples")


def test_08_determinism(tmp_path):
    data = tmp_path / "data"
    data.mkdir()
    for i, img in enumerate(make_scenes(8, size=64, seed=8)):
        write_png(data / f"{i:03d}.png", img)
    outputs = []
    for run in ("run1", "run2"):
        cfg = tmp_path / f"{run}.cfg"
        cfg.write_text(f"data_dir = {data}\nout_dir = {tmp_path / run}\nepochs = 2\nseed = 123\n")
        assert main(["-q", "train", "--config", str(cfg)]) == 0
        outputs.append((tmp_path / run / "final.aclr").read_bytes())
    record(8, "determinism", outputs[0] == outputs[1],
           f"two train runs, final.aclr {len(outputs[0])} bytes each, bitwise equal: {outputs[0] == outputs[1]}")


def test_09_lightness_preservation():
    net = init_weights(build_network(NetConfig()), 31)
    rng = np.random.default_rng(9)
    images = list(make_scenes(10, size=64, seed=90))
    for shape in [(48, 80), (123, 77), (64, 64), (31, 45), (100, 100)]:
        images.append(rng.integers(0, 256, shape + (3,), dtype=np.uint8))
        images.append(make_scenes(1, size=96, seed=int(rng.integers(1e6)))[0][:shape[0], :shape[1]])
    worst = 0.0
    for img in images:
        out = colorize(img, net)
        assert out.shape == img.shape
        worst = max(worst, float(np.abs(rgb_to_lab(out)[..., 0] - rgb_to_lab(img)[..., 0]).max()))
    record(9, "lightness preservation", len(images) == 20 and worst <= 2,
           f"{len(images)} images, max |L_out - L_in| = {worst:.3f} (<= 2)")


def test_10_red_mask_detector(tmp_path):
    truth_dir, pred_dir = tmp_path / "truth", tmp_path / "pred"
    truth_dir.mkdir()
    pred_dir.mkdir()
    for i, img in enumerate(make_scenes(10, size=64, seed=21)):
        lab = rgb_to_lab(img)
        lab[..., 1] += 10
        write_png(truth_dir / f"{i}.png", img)
        write_png(pred_dir / f"{i}.png", lab_to_rgb(lab))
    agg = eval_report(pred_dir, truth_dir).aggregate
    record(10, "red-mask detector", abs(agg.bias_a - 10) <= 0.2,
           f"bias_a = {agg.bias_a:+.3f} (10 +- 0.2), bias_b = {agg.bias_b:+.3f}")


def test_11_checkpoint_robustness(tmp_path):
    grid = build_bin_grid(10)
    net = init_weights(build_network(NetConfig(head="classification", Q=grid.Q)), 11)
    net.forward(np.random.default_rng(0).uniform(-1, 1, (2, 1, 64, 64)).astype(np.float32), train=True)
    path = tmp_path / "m.aclr"
    save_checkpoint(net, grid, path)
    loaded, lgrid = load_checkpoint(path)
    a, b = net.state_dict(), loaded.state_dict()
    lossless = a.keys() == b.keys() and all(a[k].tobytes() == b[k].tobytes() for k in a) and lgrid == grid
    data = path.read_bytes()
    cases = {
        "bad magic": (b"XXXX" + data[4:], NotACheckpointError),
        "bad version": (data[:4] + struct.pack("<I", 2) + data[8:], UnsupportedVersionError),
        "truncated": (data[:len(data) // 2], CorruptCheckpointError),
    }
    seen = {}
    for name, (blob, _) in cases.items():
        p = tmp_path / f"{name.replace(' ', '_')}.aclr"
        p.write_bytes(blob)
        try:
            load_checkpoint(p)
            seen[name] = None
        except Exception as exc:
            seen[name] = type(exc)
    distinct = all(seen[n] is cls for n, (_, cls) in cases.items()) and len(set(seen.values())) == 3
    record(11, "checkpoint robustness", lossless and distinct,
           f"round trip bitwise: {lossless}; errors: "
           + ", ".join(f"{n} -> {seen[n].__name__ if seen[n] else 'none'}" for n in cases))
