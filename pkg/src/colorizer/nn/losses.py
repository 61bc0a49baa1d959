"""Training objectives. Each returns ``(loss, grad_wrt_prediction)``."""

import numpy as np


def euclidean_loss(pred, target):
    """Half squared error summed over pixels and channels, averaged over the batch.

    ``pred`` and ``target`` are ``(N, 2, H, W)`` ab maps. The gradient is
    ``(pred - target) / N``.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    n = pred.shape[0]
    diff = pred - target
    loss = 0.5 * float(np.sum(diff.astype(np.float64) ** 2)) / n
    return loss, (diff / n).astype(pred.dtype, copy=False)


def log_softmax(logits, axis=1):
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax_cross_entropy(logits, target, tol=1e-4):
    """Cross-entropy between per-pixel softmax over channels and a target distribution.

    Parameters
    ----------
    logits : ndarray of shape (N, Q, H, W)
    target : ndarray of shape (N, Q, H, W)
        Dense per-pixel distributions over the Q bins.
    tol : float
        Allowed deviation of each target pixel's total mass from one.

    Returns
    -------
    loss : float
        Mean over batch and pixels.
    grad : ndarray
        ``(softmax(logits) - target) / (N * H * W)``.
    """
    logits = np.asarray(logits)
    target = np.asarray(target)
    if logits.shape != target.shape:
        raise ValueError(f"shape mismatch: logits {logits.shape} vs target {target.shape}")
    if np.any(target < 0) or np.any(np.abs(target.sum(axis=1) - 1.0) > tol):
        raise ValueError("invalid target: each pixel must be a distribution summing to 1")
    n, _, h, w = logits.shape
    count = n * h * w
    logp = log_softmax(logits.astype(np.float64), axis=1)
    loss = -float(np.sum(target * logp)) / count
    grad = (np.exp(logp) - target) / count
    return loss, grad.astype(logits.dtype, copy=False)
