"""Central finite-difference gradient checks (run in float64)."""
from __future__ import annotations

from typing import Callable

import numpy as np


def numeric_gradient(f: Callable[[], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``f()`` with respect to ``x``, perturbed in place."""
    g = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        orig = x[i]
        x[i] = orig + h
        fp = f()
        x[i] = orig - h
        fm = f()
        x[i] = orig
        g[i] = (fp - fm) / (2 * h)
    return g


def relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    a, n = np.asarray(analytic, dtype=np.float64), np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)))


def gradient_check(net, inputs: dict[str, np.ndarray], seed: int = 0, h: float = 1e-5) -> float:
    """Max relative error between backprop and finite differences for ``net``.

    The scalar probed is ``sum(output * W)`` for a fixed random ``W``; both
    parameters and graph inputs are checked.  The network is cast to float64.
    """
    net.astype(np.float64)
    inputs = {k: np.array(v, dtype=np.float64) for k, v in inputs.items()}
    out, _ = net.forward(**inputs)
    w = np.random.default_rng(seed).standard_normal(out.shape)

    def f():
        return float((net(**inputs) * w).sum())

    net.zero_grad()
    _, tape = net.forward(**inputs)
    in_grads = net.backward(tape, w)
    worst = 0.0
    for k, p in net.params.items():
        worst = max(worst, relative_error(net.grads[k], numeric_gradient(f, p, h)))
    for k, x in inputs.items():
        worst = max(worst, relative_error(in_grads[k], numeric_gradient(f, x, h)))
    return worst


def loss_gradient_check(loss_fn: Callable, args: list[np.ndarray], wrt: list[int], h: float = 1e-5) -> float:
    """Check a loss returning ``(value, grad_0, grad_1, ...)`` where grad ``k`` is for ``args[wrt[k]]``."""
    args = [np.array(a, dtype=np.float64) for a in args]
    res = loss_fn(*args)
    grads = res[1:]
    worst = 0.0
    for g, idx in zip(grads, wrt):
        num = numeric_gradient(lambda: loss_fn(*args)[0], args[idx], h)
        worst = max(worst, relative_error(g, num))
    return worst
