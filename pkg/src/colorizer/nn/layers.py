"""Layers with hand-written forward and backward passes.

Tensors are numpy arrays in NCHW layout. Layers keep whatever floating
dtype they are given (float32 for training, float64 under the gradient
checker). Each layer caches what its backward pass needs during
``forward`` and fills ``self.grads`` during ``backward``.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv_output_size(size, kernel, stride=1, pad=0, dilation=1):
    return (size + 2 * pad - dilation * (kernel - 1) - 1) // stride + 1


class Layer:
    """Base class: a named-parameter container with forward/backward."""

    def __init__(self):
        self.params = {}
        self.grads = {}
        self.buffers = {}

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def __call__(self, x, train=False):
        return self.forward(x, train=train)

    def zero_grad(self):
        for name, p in self.params.items():
            self.grads[name] = np.zeros_like(p)


class Conv2d(Layer):
    """2-D cross-correlation with per-output-channel bias.

    Weights have shape ``(out_channels, in_channels, k, k)``.
    """

    def __init__(self, in_channels, out_channels, kernel_size=3, stride=1, pad=0,
                 dilation=1, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.pad = pad
        self.dilation = dilation
        k = kernel_size
        self.params["weight"] = np.zeros((out_channels, in_channels, k, k), dtype=dtype)
        self.params["bias"] = np.zeros(out_channels, dtype=dtype)
        self._cache = None

    def _check_input(self, x):
        if x.ndim != 4:
            raise ValueError(f"conv2d expects NCHW input, got shape {x.shape}")
        if x.shape[1] != self.in_channels:
            raise ValueError(
                f"conv2d channel mismatch: input has C={x.shape[1]}, "
                f"layer expects {self.in_channels}")
        for axis, name in ((2, "H"), (3, "W")):
            out = conv_output_size(x.shape[axis], self.kernel_size, self.stride,
                                   self.pad, self.dilation)
            if out < 1:
                raise ValueError(
                    f"conv2d input {name}={x.shape[axis]} too small for kernel "
                    f"{self.kernel_size}, dilation {self.dilation}, pad {self.pad}")

    def forward(self, x, train=False):
        self._check_input(x)
        w, b = self.params["weight"], self.params["bias"]
        n, c, h, wd = x.shape
        k, s, p, d = self.kernel_size, self.stride, self.pad, self.dilation
        ho = conv_output_size(h, k, s, p, d)
        wo = conv_output_size(wd, k, s, p, d)
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        span = d * (k - 1) + 1
        win = sliding_window_view(xp, (span, span), axis=(2, 3))
        win = win[:, :, :s * (ho - 1) + 1:s, :s * (wo - 1) + 1:s, ::d, ::d]
        # (N, Ho, Wo, C, k, k) -> rows of receptive fields
        cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * ho * wo, c * k * k)
        out = cols @ w.reshape(self.out_channels, -1).T + b
        self._cache = (x.shape, cols, ho, wo)
        return np.ascontiguousarray(out.reshape(n, ho, wo, self.out_channels).transpose(0, 3, 1, 2))

    def backward(self, dout):
        xshape, cols, ho, wo = self._cache
        n, c, h, wd = xshape
        k, s, p, d = self.kernel_size, self.stride, self.pad, self.dilation
        w = self.params["weight"]
        dflat = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        self.grads["weight"] = (dflat.T @ cols).reshape(w.shape)
        self.grads["bias"] = dflat.sum(axis=0)
        dcols = (dflat @ w.reshape(self.out_channels, -1)).reshape(n, ho, wo, c, k, k)
        dxp = np.zeros((n, c, h + 2 * p, wd + 2 * p), dtype=dout.dtype)
        # fixed scatter order over kernel taps keeps the result deterministic
        for i in range(k):
            for j in range(k):
                dxp[:, :, i * d:i * d + s * (ho - 1) + 1:s,
                    j * d:j * d + s * (wo - 1) + 1:s] += dcols[..., i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, p:p + h, p:p + wd] if p else dxp


class ReLU(Layer):
    def forward(self, x, train=False):
        self._mask = x > 0
        return np.where(self._mask, x, 0).astype(x.dtype, copy=False)

    def backward(self, dout):
        return np.where(self._mask, dout, 0).astype(dout.dtype, copy=False)


class Tanh(Layer):
    def forward(self, x, train=False):
        self._y = np.tanh(x)
        return self._y

    def backward(self, dout):
        return dout * (1 - self._y * self._y)


def interp_matrix(n_in, n_out, dtype=np.float64):
    """Linear interpolation weights ``(n_out, n_in)`` with half-pixel centers.

    Source coordinate of output ``o`` is ``(o + 0.5) * n_in / n_out - 0.5``,
    clamped to the valid range at the borders.
    """
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    m = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    np.add.at(m, (rows, i0), 1 - frac)
    np.add.at(m, (rows, i1), frac)
    return m.astype(dtype)


def resize_bilinear(x, out_h, out_w):
    """Bilinear resize over the last two axes (no antialiasing)."""
    mh = interp_matrix(x.shape[-2], out_h, x.dtype)
    mw = interp_matrix(x.shape[-1], out_w, x.dtype)
    return mh @ x @ mw.T


class Upsample(Layer):
    """Integer-factor upsampling, ``mode`` is ``"nearest"`` or ``"bilinear"``."""

    def __init__(self, factor=2, mode="nearest"):
        super().__init__()
        if int(factor) != factor or factor < 1:
            raise ValueError(f"upsample factor must be a positive integer, got {factor!r}")
        if mode not in ("nearest", "bilinear"):
            raise ValueError(f"unknown upsample mode {mode!r}")
        self.factor = int(factor)
        self.mode = mode

    def forward(self, x, train=False):
        f = self.factor
        h, w = x.shape[-2:]
        self._hw = (h, w)
        if f == 1:
            return x.copy()
        if self.mode == "nearest":
            return x.repeat(f, axis=-2).repeat(f, axis=-1)
        self._mh = interp_matrix(h, h * f, x.dtype)
        self._mw = interp_matrix(w, w * f, x.dtype)
        return self._mh @ x @ self._mw.T

    def backward(self, dout):
        f = self.factor
        h, w = self._hw
        if f == 1:
            return dout.copy()
        if self.mode == "nearest":
            return dout.reshape(*dout.shape[:-2], h, f, w, f).sum(axis=(-3, -1))
        return self._mh.T @ dout @ self._mw


class BatchNorm2d(Layer):
    """Per-channel batch normalization over (N, H, W).

    Running statistics use the biased batch variance and are updated with
    ``running = (1 - momentum) * running + momentum * batch``.
    """

    def __init__(self, channels, eps=1e-5, momentum=0.1, dtype=np.float32):
        super().__init__()
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps!r}")
        self.eps = eps
        self.momentum = momentum
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_var"] = np.ones(channels, dtype=dtype)

    def forward(self, x, train=False):
        g = self.params["gamma"][None, :, None, None]
        b = self.params["beta"][None, :, None, None]
        if train:
            # statistics accumulated in float64 for stability and fixed reduction order
            x64 = x.astype(np.float64)
            mean = x64.mean(axis=(0, 2, 3))
            var = x64.var(axis=(0, 2, 3))
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = ((x64 - mean[None, :, None, None]) * inv_std[None, :, None, None]).astype(x.dtype)
            m = self.momentum
            rm, rv = self.buffers["running_mean"], self.buffers["running_var"]
            self.buffers["running_mean"] = ((1 - m) * rm + m * mean).astype(rm.dtype)
            self.buffers["running_var"] = ((1 - m) * rv + m * var).astype(rv.dtype)
            self._cache = (xhat, inv_std.astype(x.dtype), True)
        else:
            mean = self.buffers["running_mean"].astype(x.dtype)
            var = self.buffers["running_var"].astype(x.dtype)
            inv_std = (1.0 / np.sqrt(var + self.eps)).astype(x.dtype)
            xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
            self._cache = (xhat, inv_std, False)
        return g * xhat + b

    def backward(self, dout):
        xhat, inv_std, batch_stats = self._cache
        g = self.params["gamma"]
        self.grads["gamma"] = (dout * xhat).sum(axis=(0, 2, 3))
        self.grads["beta"] = dout.sum(axis=(0, 2, 3))
        dxhat = dout * g[None, :, None, None]
        if not batch_stats:
            # running statistics are constants here
            return dxhat * inv_std[None, :, None, None]
        mean_dxhat = dxhat.mean(axis=(0, 2, 3), keepdims=True)
        mean_dxhat_xhat = (dxhat * xhat).mean(axis=(0, 2, 3), keepdims=True)
        return (dxhat - mean_dxhat - xhat * mean_dxhat_xhat) * inv_std[None, :, None, None]


class Sequential(Layer):
    """An ordered chain of named layers.

    Parameters and buffers are exposed under dotted names, e.g.
    ``"conv1.weight"`` or ``"bn1.running_mean"``.
    """

    def __init__(self, layers):
        super().__init__()
        self.layers = list(layers)
        names = [name for name, _ in self.layers]
        if len(set(names)) != len(names):
            raise ValueError("layer names must be unique")

    def forward(self, x, train=False):
        for _, layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dout):
        for _, layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def named_parameters(self):
        return {f"{ln}.{pn}": p for ln, layer in self.layers for pn, p in layer.params.items()}

    def named_grads(self):
        return {f"{ln}.{pn}": g for ln, layer in self.layers for pn, g in layer.grads.items()}

    def named_buffers(self):
        return {f"{ln}.{bn}": b for ln, layer in self.layers for bn, b in layer.buffers.items()}

    def state_dict(self):
        state = dict(self.named_parameters())
        state.update(self.named_buffers())
        return state

    def load_state_dict(self, state):
        expected = self.state_dict()
        missing = sorted(set(expected) - set(state))
        extra = sorted(set(state) - set(expected))
        if missing or extra:
            raise ValueError(f"state mismatch: missing {missing}, unexpected {extra}")
        for ln, layer in self.layers:
            for store in (layer.params, layer.buffers):
                for name in store:
                    value = np.asarray(state[f"{ln}.{name}"])
                    if value.shape != store[name].shape:
                        raise ValueError(
                            f"shape mismatch for {ln}.{name}: "
                            f"{value.shape} vs {store[name].shape}")
                    store[name] = value.astype(store[name].dtype, copy=True)
