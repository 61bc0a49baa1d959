"""Image-quality metrics and the directory evaluation report."""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colorspace import rgb_to_lab
from .imageio import list_images, read_image

logger = logging.getLogger(__name__)

PSNR_IDENTICAL = 99.0


def psnr(a, b):
    """Peak signal-to-noise ratio in dB over all channels, 255 peak.

    Identical images return the sentinel 99.0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return PSNR_IDENTICAL
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def ab_errors(pred_rgb, truth_rgb):
    """``(mae, bias_a, bias_b)`` of predicted vs true ab, in CIELAB units.

    MAE averages ``|da|`` and ``|db|`` over pixels and both channels; the
    biases are the mean signed differences, prediction minus truth.
    """
    pred_rgb = np.asarray(pred_rgb)
    truth_rgb = np.asarray(truth_rgb)
    if pred_rgb.shape != truth_rgb.shape:
        raise ValueError(f"dimension mismatch: {pred_rgb.shape} vs {truth_rgb.shape}")
    d = rgb_to_lab(pred_rgb)[..., 1:] - rgb_to_lab(truth_rgb)[..., 1:]
    return float(np.abs(d).mean()), float(d[..., 0].mean()), float(d[..., 1].mean())


@dataclass
class ImageScore:
    file: str
    psnr_db: float
    ab_mae: float
    bias_a: float
    bias_b: float


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    @property
    def aggregate(self):
        cols = np.array([[r.psnr_db, r.ab_mae, r.bias_a, r.bias_b] for r in self.rows])
        return ImageScore("AGGREGATE", *(float(v) for v in cols.mean(axis=0)))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["file", "psnr_db", "ab_mae", "bias_a", "bias_b"])
            for r in self.rows + [self.aggregate]:
                w.writerow([r.file, f"{r.psnr_db:.4f}", f"{r.ab_mae:.4f}",
                            f"{r.bias_a:.4f}", f"{r.bias_b:.4f}"])

    def to_text(self):
        agg = self.aggregate
        lines = [f"{'file':<32} {'PSNR dB':>9} {'ab MAE':>8} {'bias a':>8} {'bias b':>8}"]
        for r in self.rows + [agg]:
            lines.append(f"{r.file:<32} {r.psnr_db:9.3f} {r.ab_mae:8.3f} {r.bias_a:+8.3f} {r.bias_b:+8.3f}")
        if abs(agg.bias_a) >= 2.0 or abs(agg.bias_b) >= 2.0:
            hue = ("red" if agg.bias_a > 0 else "green", "yellow" if agg.bias_b > 0 else "blue")
            lines.append(f"note: systematic chroma cast toward {hue[0]}/{hue[1]} "
                         f"(mean da={agg.bias_a:+.2f}, db={agg.bias_b:+.2f})")
        return "\n".join(lines)


def score_pair(name, pred, truth):
    mae, ba, bb = ab_errors(pred, truth)
    return ImageScore(name, psnr(pred, truth), mae, ba, bb)


def eval_report(pred_dir, truth_dir):
    """Compare same-named images in two directories.

    Pairs whose dimensions differ are skipped with a warning; the
    aggregate is the unweighted mean over the scored pairs.
    """
    truth = {p.name: p for p in list_images(truth_dir)}
    names = [p.name for p in list_images(pred_dir) if p.name in truth]
    if not names:
        raise ValueError(f"no matching filenames between {pred_dir} and {truth_dir}")
    report = EvalReport()
    for name in names:
        pred = read_image(Path(pred_dir) / name)
        true = read_image(truth[name])
        if pred.shape != true.shape:
            logger.warning("skipping %s: size %s vs %s", name, pred.shape[:2], true.shape[:2])
            continue
        report.rows.append(score_pair(name, pred, true))
    if not report.rows:
        raise ValueError("every matched pair had mismatched dimensions")
    return report
