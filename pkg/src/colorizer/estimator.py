"""scikit-learn style front end: ``LabColorizer().fit(images).transform(gray)``."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .checkpoint import load_checkpoint, save_checkpoint
from .metrics import ab_errors
from .model import NetConfig, build_network, init_weights
from .nn.layers import resize_bilinear
from .pipeline import ColorizeOptions, colorize_lightness, input_lightness, predict_ab, resize_plane
from .trainer import TrainConfig, build_palette, fit_network, prepare_targets, samples_from_images
from .utils.validation import check_image_collection


class LabColorizer(BaseEstimator, TransformerMixin):
    """Learn to predict CIELAB chroma from lightness.

    ``fit`` takes color images (any size; they are center-cropped and
    resized to ``image_size``). ``transform`` takes RGB or grayscale
    images and returns colorized RGB images of the same size; only the
    input's lightness is used.

    Parameters
    ----------
    image_size : int
        Network input side length, a multiple of 4.
    head : {"regression", "classification"}
        Euclidean regression on ab, or cross-entropy over quantized ab bins.
    channels : tuple of int
        Stage widths of the network.
    epochs, batch_size, lr, optimizer
        Training loop settings; ``optimizer`` is ``"adam"`` or ``"sgd"``.
    bin_size, palette, palette_size, n_neighbors, sigma
        Classification palette (uniform ``"grid"`` or ``"kmeans"``) and
        soft-encoding settings.
    decode, temperature, saturation
        Rendering options, see :class:`~colorizer.pipeline.ColorizeOptions`.
    augment_fake_grayscale : bool
        Add desaturated-input copies of every training image.
    min_chroma_filter : float
        Skip training images whose mean chroma is below this.
    random_state : int
        Seed for initialization and shuffling.

    Attributes
    ----------
    network_ : ColorizerNet
    grid_ : ColorBinGrid or None
    loss_curve_ : list of float
        Training loss per step.
    n_samples_ : int
        Number of training samples after filtering and augmentation.
    """

    def __init__(self, image_size=64, head="regression", channels=(32, 64, 128),
                 epochs=10, batch_size=8, lr=3e-4, optimizer="adam",
                 bin_size=10, palette="grid", palette_size=64, n_neighbors=5, sigma=5.0,
                 decode="annealed-mean", temperature=0.38, saturation=1.0,
                 augment_fake_grayscale=False, min_chroma_filter=2.0, random_state=0):
        self.image_size = image_size
        self.head = head
        self.channels = channels
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.optimizer = optimizer
        self.bin_size = bin_size
        self.palette = palette
        self.palette_size = palette_size
        self.n_neighbors = n_neighbors
        self.sigma = sigma
        self.decode = decode
        self.temperature = temperature
        self.saturation = saturation
        self.augment_fake_grayscale = augment_fake_grayscale
        self.min_chroma_filter = min_chroma_filter
        self.random_state = random_state

    def _train_config(self):
        return TrainConfig(
            image_size=self.image_size, batch_size=self.batch_size, lr=self.lr,
            optimizer=self.optimizer, epochs=self.epochs, head=self.head,
            channels=self.channels, bin_size=float(self.bin_size), palette=self.palette,
            palette_size=self.palette_size, k=self.n_neighbors, sigma=self.sigma,
            temperature=self.temperature, seed=self.random_state,
            augment_fake_grayscale=self.augment_fake_grayscale,
            min_chroma_filter=self.min_chroma_filter)

    def _options(self):
        return ColorizeOptions(decode=self.decode, temperature=self.temperature,
                               saturation=self.saturation)

    def fit(self, X, y=None):
        """Train on color images ``X``. ``y`` is ignored."""
        images = check_image_collection(X)
        if any(im.ndim != 3 for im in images):
            raise ValueError("fit needs color images; got a grayscale image")
        config = self._train_config()
        samples = samples_from_images(images, config)
        if not samples:
            raise ValueError("every training image was rejected by the chroma filter")
        grid = build_palette(config, samples) if self.head == "classification" else None
        prepare_targets(samples, self.head, grid, self.n_neighbors, self.sigma)
        net_config = NetConfig(input_size=self.image_size, head=self.head,
                               Q=grid.Q if grid is not None else None,
                               channels=self.channels, seed=self.random_state)
        network = init_weights(build_network(net_config), self.random_state)
        records = fit_network(network, samples, config)
        self.network_ = network
        self.grid_ = grid
        self.loss_curve_ = [r.loss for r in records]
        self.n_samples_ = len(samples)
        return self

    def predict(self, X):
        """Predicted ab planes ``(H, W, 2)`` at each input's full resolution."""
        check_is_fitted(self, "network_")
        out = []
        for im in check_image_collection(X):
            lightness = input_lightness(im)
            ab = self._predict_small(lightness)
            h, w = lightness.shape
            out.append(np.moveaxis(resize_bilinear(np.moveaxis(ab, -1, 0), h, w), 0, -1)
                       * self.saturation)
        return out

    def _predict_small(self, lightness):
        small = resize_plane(lightness, self.network_.config.input_size)
        return predict_ab(small[None], self.network_, self.grid_, self._options())[0]

    def transform(self, X):
        """Colorized ``uint8`` RGB images, one per input, same sizes as the inputs."""
        check_is_fitted(self, "network_")
        images = check_image_collection(X)
        opts = self._options()
        out = []
        for im in images:
            lightness = input_lightness(im)
            out.append(colorize_lightness(lightness, self._predict_small(lightness), opts))
        if isinstance(X, np.ndarray) and X.ndim == 4:
            return np.stack(out)
        return out

    def score(self, X, y=None):
        """Negative mean ab absolute error of ``transform(X)`` against ``X``."""
        images = check_image_collection(X)
        preds = self.transform(images)
        return -float(np.mean([ab_errors(p, t)[0] for p, t in zip(preds, images)]))

    def save(self, path):
        check_is_fitted(self, "network_")
        save_checkpoint(self.network_, self.grid_, path)

    @classmethod
    def from_checkpoint(cls, path, **params):
        """Rebuild a fitted estimator from an ``.aclr`` file."""
        network, grid = load_checkpoint(path)
        c = network.config
        est = cls(image_size=c.input_size, head=c.head, channels=c.channels,
                  random_state=c.seed, **params)
        if grid is not None:
            est.bin_size = grid.bin_size
        est.network_ = network
        est.grid_ = grid
        return est
