"""Dataset ingestion, target preparation and the training loop."""

import csv
import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .checkpoint import save_checkpoint
from .colorspace import normalize, rgb_to_lab, split_channels
from .imageio import list_images, read_image
from .model import HEADS, NetConfig, build_network, init_weights
from .nn.losses import euclidean_loss, softmax_cross_entropy
from .nn.optim import make_optimizer
from .quantizer import build_bin_grid, grid_from_centers, kmeans_palette, soft_encode

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    data_dir: str = ""
    out_dir: str = "out"
    image_size: int = 64
    batch_size: int = 8
    lr: float = 3e-4
    optimizer: str = "adam"
    momentum: float = 0.9
    epochs: int = 10
    head: str = "regression"
    channels: tuple = (32, 64, 128)
    bin_size: float = 10.0
    palette: str = "grid"
    palette_size: int = 64
    k: int = 5
    sigma: float = 5.0
    temperature: float = 0.38
    seed: int = 0
    augment_fake_grayscale: bool = False
    min_chroma_filter: float = 2.0

    def __post_init__(self):
        for name in ("image_size", "batch_size", "lr", "epochs", "bin_size",
                     "palette_size", "k", "sigma", "temperature"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.min_chroma_filter < 0:
            raise ConfigError(f"min_chroma_filter must be non-negative, got {self.min_chroma_filter!r}")
        if self.head not in HEADS:
            raise ConfigError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.palette not in ("grid", "kmeans"):
            raise ConfigError(f"palette must be 'grid' or 'kmeans', got {self.palette!r}")
        if self.image_size % 4:
            raise ConfigError(f"image_size must be a multiple of 4, got {self.image_size}")
        self.channels = tuple(int(c) for c in self.channels)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name, text, current):
    if isinstance(current, bool):
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    try:
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
        if isinstance(current, tuple):
            return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None
    return text


def parse_config_text(text, base=None):
    """Parse flat ``key = value`` lines into a :class:`TrainConfig`.

    ``#`` starts a comment. Keys not known to ``TrainConfig`` are errors.
    Values not given keep their value from ``base`` (or the defaults).
    """
    base = base or TrainConfig()
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    changes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        changes[key] = _coerce(key, value, getattr(base, key))
    return base.replace(**changes)


def load_config(path, base=None):
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base)


@dataclass
class SoftLabel:
    """Sparse per-pixel distribution: ``indices``/``weights`` of shape (H, W, K)."""

    indices: np.ndarray
    weights: np.ndarray

    def dense(self, Q):
        out = np.zeros(self.indices.shape[:-1] + (Q,), dtype=np.float32)
        np.put_along_axis(out, self.indices, self.weights.astype(np.float32), axis=-1)
        return out.transpose(2, 0, 1)


@dataclass
class Sample:
    L: np.ndarray          # (S, S) normalized lightness, network input
    ab: np.ndarray         # (S, S, 2) ground-truth ab, CIELAB units
    source: str = ""
    target: object = field(default=None, repr=False)


@dataclass
class LossRecord:
    epoch: int
    step: int
    seconds: float
    loss: float


def center_square(img, size):
    """Center-crop to a square and resize to ``size`` (bilinear)."""
    h, w = img.shape[:2]
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    crop = np.ascontiguousarray(img[top:top + side, left:left + side])
    if side == size:
        return crop
    return np.asarray(Image.fromarray(crop).resize((size, size), Image.BILINEAR))


def mean_chroma(ab):
    return float(np.mean(np.hypot(ab[..., 0], ab[..., 1])))


def samples_from_images(images, config, sources=None):
    """Turn RGB images into training samples, applying the chroma filter and augmentation."""
    sources = sources or [f"image[{i}]" for i in range(len(images))]
    samples = []
    for img, src in zip(images, sources):
        rgb = center_square(np.asarray(img, dtype=np.uint8), config.image_size)
        lightness, ab = split_channels(rgb_to_lab(rgb))
        if mean_chroma(ab) < config.min_chroma_filter:
            logger.info("skipping %s: mean chroma below %.3g", src, config.min_chroma_filter)
            continue
        samples.append(Sample(normalize(lightness, "L").astype(np.float32), ab, src))
        if config.augment_fake_grayscale:
            gray = np.asarray(Image.fromarray(rgb).convert("L"))
            fake, _ = split_channels(rgb_to_lab(np.repeat(gray[..., None], 3, axis=-1)))
            samples.append(Sample(normalize(fake, "L").astype(np.float32), ab, src + "#gray"))
    return samples


def ingest_dataset(config):
    """Load every decodable image in ``config.data_dir`` in sorted filename order."""
    data_dir = Path(config.data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"data directory not found: {data_dir}")
    paths = list_images(data_dir)
    if not paths:
        raise ValueError(f"no images found in {data_dir}")
    images, sources = [], []
    for path in paths:
        try:
            images.append(read_image(path))
        except (OSError, ValueError) as exc:
            logger.warning("skipping undecodable file %s: %s", path, exc)
            continue
        sources.append(str(path))
    if not images:
        raise ValueError(f"no decodable images in {data_dir}")
    samples = samples_from_images(images, config, sources)
    if not samples:
        raise ValueError(f"every image in {data_dir} was rejected by the chroma filter")
    return samples


def downsample_area(ab, factor=2):
    """Average non-overlapping ``factor`` x ``factor`` blocks of an ``(H, W, C)`` map."""
    h, w, c = ab.shape
    return ab.reshape(h // factor, factor, w // factor, factor, c).mean(axis=(1, 3))


def prepare_targets(samples, head, grid=None, k=5, sigma=5.0):
    """Attach half-resolution targets to each sample in place and return the list.

    Regression targets are normalized ab maps ``(2, S/2, S/2)``; classification
    targets are :class:`SoftLabel` maps over ``grid``.
    """
    if head == "classification" and grid is None:
        raise ValueError("classification targets need a bin grid")
    for s in samples:
        small = downsample_area(s.ab)
        if head == "regression":
            s.target = normalize(small, "ab").transpose(2, 0, 1).astype(np.float32)
        else:
            idx, w = soft_encode(small, grid, k, sigma)
            s.target = SoftLabel(idx, w)
    return samples


def build_palette(config, samples=None):
    if config.palette == "grid" or config.head != "classification":
        return build_bin_grid(config.bin_size)
    ab = np.concatenate([downsample_area(s.ab).reshape(-1, 2) for s in samples])
    centers = kmeans_palette(ab, config.palette_size, seed=config.seed)
    return grid_from_centers(centers, config.bin_size)


def _batch_targets(batch, head, Q):
    if head == "regression":
        return np.stack([s.target for s in batch])
    return np.stack([s.target.dense(Q) for s in batch])


def fit_network(network, samples, config, on_step=None, on_epoch=None):
    """Run the optimization loop over prepared samples.

    Returns the list of :class:`LossRecord`. ``on_epoch(epoch, records)``
    is called after every epoch.
    """
    rng = np.random.default_rng(config.seed)
    head = network.config.head
    loss_fn = euclidean_loss if head == "regression" else softmax_cross_entropy
    opt = make_optimizer(config.optimizer, network.named_parameters(), config.lr,
                         momentum=config.momentum)
    records = []
    step = 0
    start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(samples))
        for lo in range(0, len(order), config.batch_size):
            batch = [samples[i] for i in order[lo:lo + config.batch_size]]
            x = np.stack([s.L for s in batch])[:, None]
            y = _batch_targets(batch, head, network.config.Q)
            pred = network.forward(x, train=True)
            loss, grad = loss_fn(pred, y)
            step += 1
            if not math.isfinite(loss):
                tail = ", ".join(f"{r.loss:.4g}" for r in records[-5:])
                raise TrainingDivergedError(
                    f"non-finite loss at step {step} (epoch {epoch}, lr={config.lr}); "
                    f"recent losses: [{tail}]")
            network.backward(grad)
            opt.step(network.named_grads())
            rec = LossRecord(epoch, step, time.perf_counter() - start, loss)
            records.append(rec)
            if on_step is not None:
                on_step(rec)
        if on_epoch is not None:
            on_epoch(epoch, records)
    return records


@dataclass
class TrainResult:
    final_checkpoint: Path
    epoch_checkpoints: list
    loss_log: Path
    records: list


def train(config):
    """Train from ``config.data_dir``, writing checkpoints and ``loss.csv`` to ``config.out_dir``."""
    samples = ingest_dataset(config)
    logger.info("ingested %d samples from %s", len(samples), config.data_dir)
    grid = build_palette(config, samples) if config.head == "classification" else None
    prepare_targets(samples, config.head, grid, config.k, config.sigma)
    net_config = NetConfig(
        input_size=config.image_size, head=config.head,
        Q=grid.Q if grid is not None else None,
        channels=config.channels, seed=config.seed)
    network = init_weights(build_network(net_config), config.seed)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "loss.csv"
    with open(log_path, "w", newline="") as fh:
        csv.writer(fh).writerow(["epoch", "step", "seconds", "loss"])
    epoch_paths = []
    written = [0]

    def on_epoch(epoch, records):
        with open(log_path, "a", newline="") as fh:
            w = csv.writer(fh)
            for r in records[written[0]:]:
                w.writerow([r.epoch, r.step, f"{r.seconds:.3f}", repr(r.loss)])
            fh.flush()
        written[0] = len(records)
        path = out / f"epoch_{epoch:03d}.aclr"
        save_checkpoint(network, grid, path)
        epoch_paths.append(path)
        logger.info("epoch %d: mean loss %.5g", epoch,
                    np.mean([r.loss for r in records if r.epoch == epoch]))

    records = fit_network(network, samples, config, on_epoch=on_epoch)
    final = out / "final.aclr"
    save_checkpoint(network, grid, final)
    return TrainResult(final, epoch_paths, log_path, records)
