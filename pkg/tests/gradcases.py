"""Float64 gradient-check cases for every layer, the model graphs and every loss."""
import numpy as np

from deconfound.models import classifier_net, discriminator, generator, probe_net
from deconfound.nn import (
    Broadcast2d,
    Concat,
    Conv2d,
    ConvTranspose2d,
    Dense,
    Flatten,
    L2Normalize,
    LeakyReLU,
    Network,
    Sigmoid,
    contrastive_loss,
    cross_entropy,
    cycle_l1,
    gradient_check,
    logistic_discriminator_loss,
    logistic_generator_loss,
    loss_gradient_check,
    lsgan_discriminator_loss,
    lsgan_generator_loss,
    pairwise_contrastive,
)


def _single(shape, layer, seed=0):
    net = Network({"x": shape}, seed=seed, dtype=np.float64)
    net.add("y", layer, "x")
    return net


def layer_cases():
    rng = np.random.default_rng(0)
    img = rng.standard_normal((2, 3, 6, 6))
    cases = {
        "dense": (_single((5,), Dense(5, 4)), {"x": rng.standard_normal((3, 5))}),
        "conv2d": (_single((3, 6, 6), Conv2d(3, 4, 1)), {"x": img}),
        "conv2d_stride2": (_single((3, 6, 6), Conv2d(3, 4, 2)), {"x": img}),
        "conv_transpose2d": (_single((3, 3, 3), ConvTranspose2d(3, 2)), {"x": rng.standard_normal((2, 3, 3, 3))}),
        "leaky_relu": (_single((7,), LeakyReLU(0.2)), {"x": rng.standard_normal((3, 7))}),
        "sigmoid": (_single((7,), Sigmoid()), {"x": rng.standard_normal((3, 7))}),
        "flatten": (_single((2, 3, 3), Flatten()), {"x": rng.standard_normal((2, 2, 3, 3))}),
        "broadcast2d": (_single((3,), Broadcast2d(4)), {"x": rng.standard_normal((2, 3))}),
        "l2_normalize": (_single((5,), L2Normalize()), {"x": rng.standard_normal((3, 5))}),
    }
    cat = Network({"a": (2, 4, 4), "b": (3, 4, 4)}, dtype=np.float64)
    cat.add("y", Concat(), ["a", "b"])
    cases["concat"] = (cat, {"a": rng.standard_normal((2, 2, 4, 4)), "b": rng.standard_normal((2, 3, 4, 4))})
    cond = np.eye(3)[[0, 2]]
    x8 = rng.uniform(0, 1, (2, 3, 8, 8))
    cases["generator"] = (generator(8, 3, width=2, seed=1), {"x": x8, "cond": cond})
    cases["discriminator"] = (discriminator(8, 3, width=2, seed=2), {"x": x8, "cond": cond})
    cases["probe"] = (probe_net(8, dim=4, seed=3), {"x": x8})
    cases["classifier"] = (classifier_net(8, 3, seed=4, hidden=6), {"x": x8})
    return cases


def loss_cases():
    rng = np.random.default_rng(1)
    logits = rng.standard_normal((5, 4))
    labels = np.array([0, 3, 1, 1, 2])
    e1, e2 = rng.standard_normal((6, 3)) * 0.4, rng.standard_normal((6, 3)) * 0.4
    same = np.array([1, 0, 1, 0, 0, 1], dtype=float)
    z = rng.standard_normal((6, 3)) * 0.4
    zl = np.array([0, 1, 0, 2, 1, 0])
    dr, df = rng.standard_normal((4, 1)), rng.standard_normal((4, 1))
    x, xr = rng.uniform(0, 1, (2, 3, 4, 4)), rng.uniform(0, 1, (2, 3, 4, 4))
    return {
        "cross_entropy": (lambda a: cross_entropy(a, labels), [logits], [0]),
        "contrastive": (lambda a, b: contrastive_loss(a, b, same, 1.0), [e1, e2], [0, 1]),
        "pairwise_contrastive": (lambda a: pairwise_contrastive(a, zl, 1.0), [z], [0]),
        "lsgan_generator": (lsgan_generator_loss, [df], [0]),
        "lsgan_discriminator": (lsgan_discriminator_loss, [dr, df], [0, 1]),
        "logistic_generator": (logistic_generator_loss, [df], [0]),
        "logistic_discriminator": (logistic_discriminator_loss, [dr, df], [0, 1]),
        "cycle_l1": (lambda a, b: (lambda r: (r[0], r[1]))(cycle_l1(a, b)), [x, xr], [1]),
    }


def run_all():
    """Return ``{name: max relative error}`` over every case."""
    out = {name: gradient_check(net, inputs) for name, (net, inputs) in layer_cases().items()}
    for name, (fn, args, wrt) in loss_cases().items():
        out[name] = loss_gradient_check(fn, args, wrt)
    return out
