"""Layers with explicit forward/backward passes on NCHW numpy arrays.

``forward`` returns ``(output, cache)`` and ``backward(cache, grad)`` returns
``(input_grads, param_grads)``; layers hold parameters but no per-call state,
so one layer can appear several times on a tape.
"""
from __future__ import annotations

import numpy as np

LAYERS: dict[str, type] = {}


def register(cls):
    LAYERS[cls.__name__] = cls
    return cls


class Layer:
    params: dict

    def __init__(self):
        self.params = {}

    def output_shape(self, *shapes):
        return shapes[0]

    def config(self) -> dict:
        return {}

    def init(self, rng: np.random.Generator, dtype=np.float32):
        pass


def _glorot(rng, shape, fan_in, fan_out, dtype):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape).astype(dtype)


def _pad1(x):
    return np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))


def _im2col(xp, stride, ho, wo):
    n, c = xp.shape[:2]
    cols = np.empty((n, ho, wo, c, 3, 3), dtype=xp.dtype)
    for ki in range(3):
        for kj in range(3):
            patch = xp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride]
            cols[:, :, :, :, ki, kj] = patch.transpose(0, 2, 3, 1)
    return cols.reshape(n * ho * wo, c * 9)


def _col2im(cols, padded_shape, stride, ho, wo):
    n, c = padded_shape[:2]
    cols = cols.reshape(n, ho, wo, c, 3, 3)
    xp = np.zeros(padded_shape, dtype=cols.dtype)
    for ki in range(3):
        for kj in range(3):
            xp[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += cols[..., ki, kj].transpose(
                0, 3, 1, 2
            )
    return xp


@register
class Dense(Layer):
    def __init__(self, n_in: int, n_out: int):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out

    def init(self, rng, dtype=np.float32):
        self.params = {
            "W": _glorot(rng, (self.n_in, self.n_out), self.n_in, self.n_out, dtype),
            "b": np.zeros(self.n_out, dtype=dtype),
        }

    def config(self):
        return {"n_in": self.n_in, "n_out": self.n_out}

    def output_shape(self, shape):
        if shape != (self.n_in,):
            raise ValueError(f"Dense expects ({self.n_in},), got {shape}")
        return (self.n_out,)

    def forward(self, x):
        return x @ self.params["W"] + self.params["b"], x

    def backward(self, x, g):
        return (g @ self.params["W"].T,), {"W": x.T @ g, "b": g.sum(axis=0)}


@register
class Conv2d(Layer):
    """3x3 convolution, zero padding 1, stride 1 or 2."""

    def __init__(self, c_in: int, c_out: int, stride: int = 1):
        super().__init__()
        if stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")
        self.c_in, self.c_out, self.stride = c_in, c_out, stride

    def init(self, rng, dtype=np.float32):
        self.params = {
            "W": _glorot(rng, (self.c_out, self.c_in, 3, 3), self.c_in * 9, self.c_out * 9, dtype),
            "b": np.zeros(self.c_out, dtype=dtype),
        }

    def config(self):
        return {"c_in": self.c_in, "c_out": self.c_out, "stride": self.stride}

    def output_shape(self, shape):
        c, h, w = shape
        if c != self.c_in:
            raise ValueError(f"Conv2d expects {self.c_in} channels, got {c}")
        return (self.c_out, (h - 1) // self.stride + 1, (w - 1) // self.stride + 1)

    def forward(self, x):
        n, _, h, w = x.shape
        s = self.stride
        ho, wo = (h - 1) // s + 1, (w - 1) // s + 1
        xp = _pad1(x)
        cols = _im2col(xp, s, ho, wo)
        wmat = self.params["W"].reshape(self.c_out, -1)
        out = cols @ wmat.T + self.params["b"]
        return out.reshape(n, ho, wo, self.c_out).transpose(0, 3, 1, 2), (cols, xp.shape, ho, wo)

    def backward(self, cache, g):
        cols, pshape, ho, wo = cache
        gm = g.transpose(0, 2, 3, 1).reshape(-1, self.c_out)
        wmat = self.params["W"].reshape(self.c_out, -1)
        dw = (gm.T @ cols).reshape(self.params["W"].shape)
        dx = _col2im(gm @ wmat, pshape, self.stride, ho, wo)[:, :, 1:-1, 1:-1]
        return (dx,), {"W": dw, "b": gm.sum(axis=0)}


@register
class ConvTranspose2d(Layer):
    """3x3 transposed convolution with stride 2: doubles the spatial size.

    Exactly the adjoint of ``Conv2d(c_out, c_in, stride=2)`` on an even-sized input.
    """

    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        self.c_in, self.c_out = c_in, c_out

    def init(self, rng, dtype=np.float32):
        self.params = {
            "W": _glorot(rng, (self.c_in, self.c_out, 3, 3), self.c_in * 9, self.c_out * 9, dtype),
            "b": np.zeros(self.c_out, dtype=dtype),
        }

    def config(self):
        return {"c_in": self.c_in, "c_out": self.c_out}

    def output_shape(self, shape):
        c, h, w = shape
        if c != self.c_in:
            raise ValueError(f"ConvTranspose2d expects {self.c_in} channels, got {c}")
        return (self.c_out, 2 * h, 2 * w)

    def forward(self, y):
        n, _, h, w = y.shape
        gm = y.transpose(0, 2, 3, 1).reshape(-1, self.c_in)
        wmat = self.params["W"].reshape(self.c_in, -1)
        xp = _col2im(gm @ wmat, (n, self.c_out, 2 * h + 2, 2 * w + 2), 2, h, w)
        out = xp[:, :, 1:-1, 1:-1] + self.params["b"][None, :, None, None]
        return out, (gm, y.shape)

    def backward(self, cache, g):
        gm, yshape = cache
        n, _, h, w = yshape
        cols = _im2col(_pad1(g), 2, h, w)
        wmat = self.params["W"].reshape(self.c_in, -1)
        dy = (cols @ wmat.T).reshape(n, h, w, self.c_in).transpose(0, 3, 1, 2)
        dw = (gm.T @ cols).reshape(self.params["W"].shape)
        return (dy,), {"W": dw, "b": g.sum(axis=(0, 2, 3))}


@register
class LeakyReLU(Layer):
    def __init__(self, slope: float = 0.2):
        super().__init__()
        self.slope = slope

    def config(self):
        return {"slope": self.slope}

    def forward(self, x):
        pos = x > 0
        return np.where(pos, x, x * x.dtype.type(self.slope)), pos

    def backward(self, pos, g):
        return (np.where(pos, g, g * g.dtype.type(self.slope)),), {}


@register
class Sigmoid(Layer):
    def forward(self, x):
        e = np.exp(-np.abs(x))
        y = np.where(x >= 0, 1 / (1 + e), e / (1 + e))
        return y, y

    def backward(self, y, g):
        return (g * y * (1 - y),), {}


@register
class Concat(Layer):
    """Channel (axis 1) concatenation of any number of inputs."""

    def output_shape(self, *shapes):
        if len({s[1:] for s in shapes}) != 1:
            raise ValueError(f"Concat inputs disagree on trailing shape: {shapes}")
        return (sum(s[0] for s in shapes),) + tuple(shapes[0][1:])

    def forward(self, *xs):
        return np.concatenate(xs, axis=1), [x.shape[1] for x in xs]

    def backward(self, sizes, g):
        return tuple(np.split(g, np.cumsum(sizes)[:-1], axis=1)), {}


@register
class Flatten(Layer):
    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x):
        return x.reshape(len(x), -1), x.shape

    def backward(self, shape, g):
        return (g.reshape(shape),), {}


@register
class Broadcast2d(Layer):
    """Tile a ``(N, k)`` vector into ``(N, k, size, size)`` constant channels."""

    def __init__(self, size: int):
        super().__init__()
        self.size = size

    def config(self):
        return {"size": self.size}

    def output_shape(self, shape):
        return (shape[0], self.size, self.size)

    def forward(self, v):
        return np.broadcast_to(v[:, :, None, None], v.shape + (self.size, self.size)).copy(), None

    def backward(self, _, g):
        return (g.sum(axis=(2, 3)),), {}


@register
class L2Normalize(Layer):
    def __init__(self, eps: float = 1e-12):
        super().__init__()
        self.eps = eps

    def config(self):
        return {"eps": self.eps}

    def forward(self, x):
        norm = np.sqrt((x * x).sum(axis=1, keepdims=True) + x.dtype.type(self.eps))
        y = x / norm
        return y, (y, norm)

    def backward(self, cache, g):
        y, norm = cache
        return ((g - y * (y * g).sum(axis=1, keepdims=True)) / norm,), {}
