"""Optimizers updating parameter arrays in place."""

import numpy as np


class Optimizer:
    def __init__(self, params, lr):
        if not lr > 0:
            raise ValueError(f"learning rate must be positive, got {lr!r}")
        self.params = params
        self.lr = lr
        self.t = 0

    def step(self, grads):
        """Apply one update; ``grads`` maps parameter names to gradients."""
        self.t += 1
        for name, p in self.params.items():
            self._update(name, p, grads[name])


class SGD(Optimizer):
    """Heavy-ball SGD: ``v = momentum * v + g``; ``w -= lr * v``."""

    def __init__(self, params, lr=0.01, momentum=0.0):
        super().__init__(params, lr)
        self.momentum = momentum
        self.velocity = {k: np.zeros_like(p) for k, p in params.items()}

    def _update(self, name, p, g):
        v = self.velocity[name]
        v *= self.momentum
        v += g
        p -= (self.lr * v).astype(p.dtype, copy=False)


class Adam(Optimizer):
    """Bias-corrected Adam."""

    def __init__(self, params, lr=3e-4, betas=(0.9, 0.999), eps=1e-8):
        super().__init__(params, lr)
        self.betas = betas
        self.eps = eps
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}

    def _update(self, name, p, g):
        b1, b2 = self.betas
        m, v = self.m[name], self.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1 ** self.t)
        v_hat = v / (1 - b2 ** self.t)
        p -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype, copy=False)


def make_optimizer(kind, params, lr, momentum=0.9, betas=(0.9, 0.999), eps=1e-8):
    if kind == "sgd":
        return SGD(params, lr=lr, momentum=momentum)
    if kind == "adam":
        return Adam(params, lr=lr, betas=betas, eps=eps)
    raise ValueError(f"unknown optimizer {kind!r}; expected 'sgd' or 'adam'")
