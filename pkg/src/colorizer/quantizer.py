"""Quantized ab palette, Gaussian soft encoding and distribution decoding."""

from dataclasses import dataclass

import numpy as np

from .colorspace import AB_LIMIT, lab_to_rgb, rgb_to_lab

PROBE_LIGHTNESS = np.arange(0.0, 101.0, 10.0)


@dataclass(frozen=True, eq=False)
class ColorBinGrid:
    """A lattice of ab bin centers restricted to the sRGB gamut.

    Attributes
    ----------
    bin_size : float
        Lattice spacing in ab units.
    candidates : ndarray of shape (M, 2)
        All lattice cell midpoints over [-110, 110)^2, row-major over (a, b).
    in_gamut : ndarray of bool, shape (M,)
        Which candidates survive the gamut probe.
    """

    bin_size: float
    candidates: np.ndarray
    in_gamut: np.ndarray

    @property
    def centers(self):
        """In-gamut centers, shape ``(Q, 2)``; bin index ``i`` is row ``i``."""
        return self.candidates[self.in_gamut]

    @property
    def Q(self):
        return int(self.in_gamut.sum())

    def __eq__(self, other):
        if not isinstance(other, ColorBinGrid):
            return NotImplemented
        return (self.bin_size == other.bin_size
                and np.array_equal(self.candidates, other.candidates)
                and np.array_equal(self.in_gamut, other.in_gamut))


def lattice_centers(bin_size):
    n = int(round(2 * AB_LIMIT / bin_size))
    axis = -AB_LIMIT + bin_size / 2.0 + bin_size * np.arange(n)
    a, b = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([a.ravel(), b.ravel()], axis=-1)


def gamut_mask(centers, bin_size, probes=PROBE_LIGHTNESS):
    """True where some probe lightness round-trips the center through 8-bit sRGB."""
    centers = np.asarray(centers, dtype=np.float64)
    lab = np.empty((len(probes), len(centers), 3))
    lab[..., 0] = np.asarray(probes)[:, None]
    lab[..., 1:] = centers[None]
    back = rgb_to_lab(lab_to_rgb(lab))
    err = np.hypot(*(back[..., 1:] - lab[..., 1:]).transpose(2, 0, 1))
    return np.any(err < bin_size / 2.0, axis=0)


def build_bin_grid(bin_size=10):
    """Build the uniform ab palette used by the classification head.

    Parameters
    ----------
    bin_size : float
        Cell size in ab units. Must be positive and divide 220 evenly.
    """
    if not bin_size > 0:
        raise ValueError(f"bin_size must be positive, got {bin_size!r}")
    n = 2 * AB_LIMIT / bin_size
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"bin_size must divide {2 * AB_LIMIT:g} evenly, got {bin_size!r}")
    candidates = lattice_centers(bin_size)
    mask = gamut_mask(candidates, bin_size)
    if not mask.any():
        raise ValueError(f"no in-gamut bins for bin_size={bin_size!r}")
    return ColorBinGrid(float(bin_size), candidates, mask)


def grid_from_centers(centers, bin_size):
    """Wrap an explicit palette (e.g. from :func:`kmeans_palette`) as a grid."""
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    return ColorBinGrid(float(bin_size), centers, np.ones(len(centers), dtype=bool))


def _sq_dists(ab, centers):
    ab = np.asarray(ab, dtype=np.float64)
    diff = ab[..., None, :] - centers
    return np.einsum("...qc,...qc->...q", diff, diff)


def quantize_ab(ab, grid):
    """Index of the nearest in-gamut center for each ab value.

    ``ab`` has shape ``(..., 2)``; ties go to the lowest index.
    """
    return np.argmin(_sq_dists(ab, grid.centers), axis=-1)


def soft_encode(ab, grid, k=5, sigma=5.0):
    """Sparse Gaussian soft labels over the ``k`` nearest centers.

    Returns
    -------
    indices : int ndarray of shape (..., k)
    weights : float ndarray of shape (..., k)
        Non-negative, summing to one along the last axis.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    k = min(int(k), grid.Q)
    d2 = _sq_dists(ab, grid.centers)
    # stable sort keeps the lowest index first among equidistant centers
    idx = np.argsort(d2, axis=-1, kind="stable")[..., :k]
    near = np.take_along_axis(d2, idx, axis=-1)
    # shifting by the nearest distance leaves the normalized weights unchanged
    w = np.exp(-(near - near[..., :1]) / (2.0 * sigma ** 2))
    w /= w.sum(axis=-1, keepdims=True)
    return idx, w


def soft_encode_dense(ab, grid, k=5, sigma=5.0):
    """Soft labels as a dense ``(..., Q)`` distribution."""
    idx, w = soft_encode(ab, grid, k, sigma)
    dense = np.zeros(idx.shape[:-1] + (grid.Q,))
    np.put_along_axis(dense, idx, w, axis=-1)
    return dense


def decode_distribution(dist, grid, method="annealed-mean", temperature=0.38):
    """Collapse per-pixel distributions ``(..., Q)`` to ab values ``(..., 2)``.

    ``method="mode"`` returns the center of the most probable bin.
    ``method="annealed-mean"`` sharpens the distribution as ``p**(1/T)``,
    renormalizes and returns the expected center.
    """
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape[-1] != grid.Q:
        raise ValueError(f"distribution has {dist.shape[-1]} bins, grid has {grid.Q}")
    if np.any(dist < 0):
        raise ValueError("distribution has negative entries")
    total = dist.sum(axis=-1)
    if np.any(total <= 0):
        raise ValueError("degenerate distribution: all-zero mass at some pixel")
    centers = grid.centers
    if method == "mode":
        return centers[np.argmax(dist, axis=-1)]
    if method in ("annealed-mean", "anneal"):
        if not temperature > 0:
            raise ValueError(f"temperature must be positive, got {temperature!r}")
        with np.errstate(divide="ignore"):
            logp = np.log(dist / total[..., None])
        logp = logp / temperature
        logp -= logp.max(axis=-1, keepdims=True)
        p = np.exp(logp)
        p /= p.sum(axis=-1, keepdims=True)
        return p @ centers
    raise ValueError(f"unknown decode method {method!r}; expected 'mode' or 'annealed-mean'")


def kmeans_inertia(samples, centers):
    d2 = _sq_dists(samples, centers)
    return float(d2.min(axis=-1).sum())


def kmeans_palette(samples, n_colors, n_iter=50, seed=0, return_history=False):
    """Lloyd's k-means over ab samples.

    Initial centers are drawn uniformly without replacement from the
    distinct samples with a seeded generator. A cluster that goes empty
    is re-seeded with the sample farthest from its current center.

    Parameters
    ----------
    samples : array-like of shape (n, 2)
    n_colors : int
        Number of centers; must not exceed the number of distinct samples.
    n_iter : int
    seed : int
    return_history : bool
        Also return the inertia after each iteration.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    if len(samples) == 0:
        raise ValueError("kmeans_palette needs at least one sample")
    distinct = np.unique(samples, axis=0)
    if n_colors < 1 or n_colors > len(distinct):
        raise ValueError(
            f"n_colors={n_colors} must be in [1, {len(distinct)}] (distinct samples)")
    rng = np.random.default_rng(seed)
    centers = distinct[rng.choice(len(distinct), size=n_colors, replace=False)].copy()
    history = []
    for _ in range(n_iter):
        d2 = _sq_dists(samples, centers)
        labels = np.argmin(d2, axis=-1)
        new = centers.copy()
        for j in range(n_colors):
            members = samples[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
        counts = np.bincount(labels, minlength=n_colors)
        for j in np.flatnonzero(counts == 0):
            own = d2[np.arange(len(samples)), labels]
            far = int(np.argmax(own))
            new[j] = samples[far]
            d2[far] = 0.0
        history.append(kmeans_inertia(samples, new))
        if np.array_equal(new, centers):
            centers = new
            break
        centers = new
    return (centers, history) if return_history else centers
