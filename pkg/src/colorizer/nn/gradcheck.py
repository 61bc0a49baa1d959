"""Central finite-difference verification of the hand-written backward passes."""

import numpy as np

from .layers import BatchNorm2d, Conv2d, ReLU, Upsample
from .losses import euclidean_loss, softmax_cross_entropy


def relative_error(analytic, numeric, floor=1e-8):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def numeric_gradient(f, x, eps):
    """Central differences of scalar ``f()`` w.r.t. array ``x``, perturbed in place."""
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f()
        flat[i] = orig - eps
        fm = f()
        flat[i] = orig
        g[i] = (fp - fm) / (2 * eps)
    return grad


def check_layer(layer, x, eps=1e-5, train=True, seed=0):
    """Max relative error of ``layer``'s input and parameter gradients.

    Parameters and input are promoted to float64. The scalar probed is
    ``sum(forward(x) * R)`` for a fixed random ``R``.
    """
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    for store in (layer.params, layer.buffers):
        for k in store:
            store[k] = store[k].astype(np.float64)
    out = layer.forward(x, train=train)
    proj = rng.standard_normal(out.shape)

    def f():
        return float(np.sum(layer.forward(x, train=train) * proj))

    dx = layer.backward(proj)
    analytic = {"input": dx, **{k: v.copy() for k, v in layer.grads.items()}}
    numeric = {"input": numeric_gradient(f, x, eps)}
    for k, p in layer.params.items():
        numeric[k] = numeric_gradient(f, p, eps)
    return max(relative_error(analytic[k], numeric[k]) for k in analytic)


def check_loss(loss_fn, pred, target, eps=1e-5):
    """Max relative error of a loss function's gradient w.r.t. its prediction."""
    pred = np.array(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _, grad = loss_fn(pred, target)
    numeric = numeric_gradient(lambda: loss_fn(pred, target)[0], pred, eps)
    return relative_error(grad, numeric)


def _away_from_zero(rng, shape, margin):
    x = rng.uniform(margin, 1.0, size=shape)
    return x * rng.choice([-1.0, 1.0], size=shape)


def run_suite(eps=1e-5, seed=0):
    """Check every kernel used by the network; returns ``[(name, max_rel_err), ...]``."""
    rng = np.random.default_rng(seed)
    results = []
    for stride in (1, 2):
        for pad in (0, 1, 2):
            for dilation in (1, 2):
                conv = Conv2d(3, 4, 3, stride=stride, pad=pad, dilation=dilation)
                conv.params["weight"] = rng.standard_normal(conv.params["weight"].shape)
                conv.params["bias"] = rng.standard_normal(4)
                x = rng.standard_normal((2, 3, 6, 6))
                name = f"conv2d stride={stride} pad={pad} dilation={dilation}"
                results.append((name, check_layer(conv, x, eps, seed=seed)))
    results.append(("relu", check_layer(
        ReLU(), _away_from_zero(rng, (2, 3, 4, 4), 10 * eps), eps, seed=seed)))
    bn = BatchNorm2d(3)
    bn.params["gamma"] = rng.uniform(0.5, 1.5, 3)
    bn.params["beta"] = rng.standard_normal(3)
    results.append(("batchnorm train", check_layer(
        bn, rng.standard_normal((2, 3, 4, 4)), eps, seed=seed)))
    for mode in ("nearest", "bilinear"):
        results.append((f"upsample {mode}", check_layer(
            Upsample(2, mode), rng.standard_normal((2, 3, 3, 4)), eps, seed=seed)))
    results.append(("euclidean_loss", check_loss(
        euclidean_loss, rng.standard_normal((2, 2, 3, 3)), rng.standard_normal((2, 2, 3, 3)), eps)))
    target = rng.dirichlet(np.ones(5), size=(2, 3, 3)).transpose(0, 3, 1, 2)
    results.append(("softmax_cross_entropy", check_loss(
        softmax_cross_entropy, rng.standard_normal((2, 5, 3, 3)), target, eps)))
    return results
