"""Adam optimizer (first/second moment estimates with bias correction)."""
from __future__ import annotations

import numpy as np

from .config import OptimizerConfig


class Adam:
    """Standard Adam update: theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)."""

    def __init__(self, dim: int, cfg: OptimizerConfig):
        self.cfg = cfg
        self.m = np.zeros(dim)
        self.v = np.zeros(dim)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        self.t += 1
        self.m = cfg.beta1 * self.m + (1.0 - cfg.beta1) * grad
        self.v = cfg.beta2 * self.v + (1.0 - cfg.beta2) * grad * grad
        m_hat = self.m / (1.0 - cfg.beta1**self.t)
        v_hat = self.v / (1.0 - cfg.beta2**self.t)
        return theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon_hat)
