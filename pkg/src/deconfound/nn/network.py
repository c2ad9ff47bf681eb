"""A static layer graph with a tape-based reverse pass."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .layers import LAYERS, Layer


@dataclass
class Node:
    name: str
    layer: Layer
    inputs: tuple[str, ...]
    shape: tuple[int, ...]


class Network:
    """Ordered DAG of layers.

    Nodes are evaluated in insertion order; each node reads named graph inputs
    or earlier nodes.  Shapes (without the batch axis) are checked on ``add``.

    >>> net = Network({"x": (4,)})
    >>> _ = net.add("fc", Dense(4, 2), "x")
    """

    def __init__(self, inputs: dict[str, tuple[int, ...]], seed: int = 0, dtype=np.float32):
        self.input_shapes = {k: tuple(v) for k, v in inputs.items()}
        self.nodes: list[Node] = []
        self._shapes = dict(self.input_shapes)
        self.output: str | None = None
        self.frozen = False
        self.dtype = np.dtype(dtype)
        self._rng = np.random.default_rng(seed)
        self.seed = seed
        self.grads: dict[str, np.ndarray] = {}

    def add(self, name: str, layer: Layer, inputs) -> str:
        if isinstance(inputs, str):
            inputs = (inputs,)
        if name in self._shapes:
            raise ValueError(f"duplicate node name {name!r}")
        for i in inputs:
            if i not in self._shapes:
                raise ValueError(f"node {name!r} reads unknown input {i!r}")
        shape = tuple(layer.output_shape(*(self._shapes[i] for i in inputs)))
        layer.init(self._rng, self.dtype)
        self.nodes.append(Node(name, layer, tuple(inputs), shape))
        self._shapes[name] = shape
        self.output = name
        return name

    @property
    def output_shape(self):
        return self._shapes[self.output]

    # -- parameters ---------------------------------------------------------------
    @property
    def params(self) -> dict[str, np.ndarray]:
        return {f"{n.name}.{k}": v for n in self.nodes for k, v in n.layer.params.items()}

    def n_params(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def zero_grad(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def astype(self, dtype) -> "Network":
        self.dtype = np.dtype(dtype)
        for n in self.nodes:
            n.layer.params = {k: v.astype(dtype) for k, v in n.layer.params.items()}
        self.zero_grad()
        return self

    def param_hash(self) -> str:
        h = hashlib.sha256()
        for k, v in sorted(self.params.items()):
            h.update(k.encode())
            h.update(np.ascontiguousarray(v).tobytes())
        return h.hexdigest()

    def load_params(self, values: dict[str, np.ndarray]):
        for n in self.nodes:
            for k in list(n.layer.params):
                v = np.asarray(values[f"{n.name}.{k}"], dtype=self.dtype)
                if v.shape != n.layer.params[k].shape:
                    raise ValueError(f"shape mismatch for {n.name}.{k}")
                n.layer.params[k] = v.copy()
        self.zero_grad()

    # -- passes -------------------------------------------------------------------
    def forward(self, **inputs):
        """Run the graph; returns ``(output, tape)`` for a later :meth:`backward`."""
        if set(inputs) != set(self.input_shapes):
            raise ValueError(f"expected inputs {sorted(self.input_shapes)}, got {sorted(inputs)}")
        values = {}
        for k, v in inputs.items():
            v = np.asarray(v, dtype=self.dtype)
            if v.shape[1:] != self.input_shapes[k]:
                raise ValueError(f"input {k!r} has shape {v.shape[1:]}, expected {self.input_shapes[k]}")
            values[k] = v
        caches = []
        for n in self.nodes:
            out, cache = n.layer.forward(*(values[i] for i in n.inputs))
            values[n.name] = out
            caches.append(cache)
        return values[self.output], caches

    def __call__(self, **inputs) -> np.ndarray:
        return self.forward(**inputs)[0]

    def backward(self, tape, grad_out) -> dict[str, np.ndarray]:
        """Reverse pass.  Accumulates parameter gradients into ``self.grads``
        (unless the network is frozen) and returns gradients for the graph inputs."""
        if not self.grads and not self.frozen:
            self.zero_grad()
        grads = {self.output: np.asarray(grad_out, dtype=self.dtype)}
        for n, cache in zip(reversed(self.nodes), reversed(tape)):
            g = grads.pop(n.name, None)
            if g is None:
                continue
            in_grads, p_grads = n.layer.backward(cache, g)
            if not self.frozen:
                for k, v in p_grads.items():
                    self.grads[f"{n.name}.{k}"] += v
            for i, gi in zip(n.inputs, in_grads):
                grads[i] = grads[i] + gi if i in grads else gi
        return {k: grads[k] for k in self.input_shapes if k in grads}

    # -- serialization ------------------------------------------------------------
    def graph(self) -> dict:
        return {
            "inputs": {k: list(v) for k, v in self.input_shapes.items()},
            "nodes": [
                {"name": n.name, "kind": type(n.layer).__name__, "config": n.layer.config(), "inputs": list(n.inputs)}
                for n in self.nodes
            ],
            "output": self.output,
            "seed": self.seed,
        }

    @classmethod
    def from_graph(cls, g: dict, dtype=np.float32) -> "Network":
        net = cls({k: tuple(v) for k, v in g["inputs"].items()}, seed=g.get("seed", 0), dtype=dtype)
        for nd in g["nodes"]:
            net.add(nd["name"], LAYERS[nd["kind"]](**nd["config"]), nd["inputs"])
        net.output = g["output"]
        return net
