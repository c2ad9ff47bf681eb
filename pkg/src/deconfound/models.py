"""Network builders for the translator, its critics, the attribute probes and the classifier."""
from __future__ import annotations

import numpy as np

from .nn import Broadcast2d, Concat, Conv2d, ConvTranspose2d, Dense, Flatten, L2Normalize, LeakyReLU, Network, Sigmoid


def to_unit(images: np.ndarray) -> np.ndarray:
    """uint8 ``(N, H, W, 3)`` -> float32 ``(N, 3, H, W)`` in ``[0, 1]``."""
    return np.ascontiguousarray(images.transpose(0, 3, 1, 2), dtype=np.float32) / np.float32(255)


def to_uint8(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(x * 255), 0, 255).astype(np.uint8).transpose(0, 2, 3, 1).copy()


def one_hot(values, k: int, dtype=np.float32) -> np.ndarray:
    out = np.zeros((len(values), k), dtype=dtype)
    out[np.arange(len(values)), np.asarray(values, dtype=np.int64)] = 1
    return out


def generator(size: int, n_cond: int, width: int = 8, seed: int = 0) -> Network:
    """Encoder-decoder with skip connections; the target value enters as constant channels."""
    w = width
    net = Network({"x": (3, size, size), "cond": (n_cond,)}, seed=seed)
    net.add("tile", Broadcast2d(size), "cond")
    net.add("in", Concat(), ["x", "tile"])
    net.add("e1", Conv2d(3 + n_cond, w, 1), "in")
    net.add("a1", LeakyReLU(0.2), "e1")
    net.add("e2", Conv2d(w, 2 * w, 2), "a1")
    net.add("a2", LeakyReLU(0.2), "e2")
    net.add("e3", Conv2d(2 * w, 4 * w, 2), "a2")
    net.add("a3", LeakyReLU(0.2), "e3")
    net.add("u2", ConvTranspose2d(4 * w, 2 * w), "a3")
    net.add("b2", LeakyReLU(0.2), "u2")
    net.add("s2", Concat(), ["b2", "a2"])
    net.add("u1", ConvTranspose2d(4 * w, w), "s2")
    net.add("b1", LeakyReLU(0.2), "u1")
    net.add("s1", Concat(), ["b1", "a1", "in"])
    net.add("out", Conv2d(2 * w + 3 + n_cond, 3, 1), "s1")
    net.add("px", Sigmoid(), "out")
    return net


def discriminator(size: int, n_cond: int, width: int = 16, seed: int = 0) -> Network:
    """Conditional critic with a raw (unsquashed) score output."""
    w = width
    net = Network({"x": (3, size, size), "cond": (n_cond,)}, seed=seed)
    net.add("tile", Broadcast2d(size), "cond")
    net.add("in", Concat(), ["x", "tile"])
    net.add("c1", Conv2d(3 + n_cond, w, 2), "in")
    net.add("a1", LeakyReLU(0.2), "c1")
    net.add("c2", Conv2d(w, 2 * w, 2), "a1")
    net.add("a2", LeakyReLU(0.2), "c2")
    net.add("c3", Conv2d(2 * w, 2 * w, 2), "a2")
    net.add("a3", LeakyReLU(0.2), "c3")
    net.add("flat", Flatten(), "a3")
    s = (size + 7) // 8
    net.add("score", Dense(2 * w * s * s, 1), "flat")
    return net


def probe_net(size: int, dim: int = 16, seed: int = 0) -> Network:
    """Unit-norm embedder used as a frozen attribute probe."""
    net = Network({"x": (3, size, size)}, seed=seed)
    net.add("c1", Conv2d(3, 8, 2), "x")
    net.add("a1", LeakyReLU(0.2), "c1")
    net.add("c2", Conv2d(8, 16, 2), "a1")
    net.add("a2", LeakyReLU(0.2), "c2")
    net.add("flat", Flatten(), "a2")
    s = (size + 3) // 4
    net.add("fc", Dense(16 * s * s, dim), "flat")
    net.add("norm", L2Normalize(), "fc")
    return net


def classifier_net(size: int, n_classes: int, seed: int = 0, hidden: int = 48) -> Network:
    """Two stride-2 conv blocks and a dense head (~30k parameters at size 16)."""
    net = Network({"x": (3, size, size)}, seed=seed)
    net.add("c1", Conv2d(3, 16, 2), "x")
    net.add("a1", LeakyReLU(0.2), "c1")
    net.add("c2", Conv2d(16, 32, 2), "a1")
    net.add("a2", LeakyReLU(0.2), "c2")
    net.add("flat", Flatten(), "a2")
    s = (size + 3) // 4
    net.add("fc1", Dense(32 * s * s, hidden), "flat")
    net.add("a3", LeakyReLU(0.2), "fc1")
    net.add("logits", Dense(hidden, n_classes), "a3")
    return net
