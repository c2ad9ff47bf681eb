import numpy as np
import pytest

from deconfound.models import classifier_net, generator
from deconfound.nn import (
    Adam,
    Conv2d,
    Dense,
    Network,
    contrastive_loss,
    cross_entropy,
    cycle_l1,
    gradient_check,
    load_checkpoint,
    loss_gradient_check,
    lsgan_losses,
    pairwise_contrastive,
    save_checkpoint,
)
from deconfound.nn.checkpoint import MAGIC

from gradcases import layer_cases, loss_cases


@pytest.mark.parametrize("name", sorted(layer_cases()))
def test_layer_gradients(name):
    net, inputs = layer_cases()[name]
    assert gradient_check(net, inputs) <= 1e-4


@pytest.mark.parametrize("name", sorted(loss_cases()))
def test_loss_gradients(name):
    fn, args, wrt = loss_cases()[name]
    assert loss_gradient_check(fn, args, wrt) <= 1e-4


def test_adam_first_step():
    p = {"w": np.array([1.0, -2.0])}
    opt = Adam(p, lr=0.1)
    opt.step(p, {"w": np.array([0.5, -3.0])})
    # bias-corrected first step moves each coordinate by lr * sign(g)
    np.testing.assert_allclose(p["w"], [0.9, -1.9], atol=1e-6)
    assert opt.t == 1


def test_adam_rejects_shape_mismatch():
    p = {"w": np.zeros(3)}
    with pytest.raises(ValueError):
        Adam(p).step(p, {"w": np.zeros(2)})


def test_cross_entropy_uniform_logits():
    loss, g = cross_entropy(np.zeros((4, 10)), [0, 1, 2, 3])
    assert loss == pytest.approx(np.log(10))
    np.testing.assert_allclose(g.sum(axis=1), 0, atol=1e-12)


def test_contrastive_examples():
    a = np.array([[0.0, 0.0]])
    b = np.array([[0.3, 0.4]])
    assert contrastive_loss(a, b, [1])[0] == pytest.approx(0.25)
    assert contrastive_loss(a, b, [0], margin=1.0)[0] == pytest.approx(0.25)
    assert contrastive_loss(a, b * 4, [0], margin=1.0)[0] == 0.0
    loss, g1, g2 = contrastive_loss(a, a, [0])
    assert loss == pytest.approx(1.0) and not g1.any() and not g2.any()
    with pytest.raises(ValueError):
        contrastive_loss(a, b, [1], margin=0)


def test_pairwise_contrastive_matches_pair_loop():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((5, 3)) * 0.5
    lab = np.array([0, 1, 0, 1, 2])
    want = np.mean(
        [contrastive_loss(z[i : i + 1], z[j : j + 1], [lab[i] == lab[j]])[0] for i in range(5) for j in range(i + 1, 5)]
    )
    assert pairwise_contrastive(z, lab)[0] == pytest.approx(want, abs=1e-12)


def test_adversarial_and_cycle_values():
    g, d = lsgan_losses(np.ones((3, 1)), np.zeros((3, 1)))
    assert g == pytest.approx(1.0) and d == pytest.approx(0.0)
    x = np.zeros((2, 3))
    assert cycle_l1(x, x)[0] == 0.0
    assert cycle_l1(x, x + 0.5)[0] == pytest.approx(0.5)


def test_frozen_network_keeps_parameters_and_grads():
    net = classifier_net(8, 3, seed=0, hidden=6)
    net.frozen = True
    before = net.param_hash()
    out, tape = net.forward(x=np.ones((2, 3, 8, 8), dtype=np.float32))
    gin = net.backward(tape, np.ones_like(out))
    assert gin["x"].shape == (2, 3, 8, 8)
    assert all(not g.any() for g in net.grads.values())
    assert net.param_hash() == before


def test_init_is_seeded():
    a, b = generator(8, 2, 4, seed=5), generator(8, 2, 4, seed=5)
    assert a.param_hash() == b.param_hash()
    assert generator(8, 2, 4, seed=6).param_hash() != a.param_hash()


def test_shape_errors():
    net = Network({"x": (4,)})
    with pytest.raises(ValueError):
        net.add("fc", Dense(3, 2), "x")
    with pytest.raises(ValueError):
        net.add("fc", Dense(4, 2), "missing")
    net.add("fc", Dense(4, 2), "x")
    with pytest.raises(ValueError):
        net.forward(x=np.zeros((1, 5)))
    img = Network({"x": (3, 8, 8)})
    img.add("c", Conv2d(3, 2, 2), "x")
    assert img.output_shape == (2, 4, 4)


def test_checkpoint_round_trip(tmp_path):
    net = generator(8, 2, 4, seed=3)
    path = save_checkpoint(tmp_path / "g.ckpt", {"g": net}, {"note": "x"})
    assert path.read_bytes()[:8] == MAGIC
    nets, meta = load_checkpoint(path)
    assert meta == {"note": "x"}
    assert nets["g"].param_hash() == net.param_hash()
    x = np.random.default_rng(0).uniform(0, 1, (2, 3, 8, 8)).astype(np.float32)
    c = np.eye(2, dtype=np.float32)
    np.testing.assert_array_equal(nets["g"](x=x, cond=c), net(x=x, cond=c))
    (tmp_path / "bad").write_bytes(b"notackpt" + b"\0" * 16)
    with pytest.raises(ValueError):
        load_checkpoint(tmp_path / "bad")


def test_training_reduces_loss():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((64, 4)).astype(np.float32)
    y = (x[:, 0] > 0).astype(int)
    net = Network({"x": (4,)}, seed=0)
    net.add("fc", Dense(4, 2), "x")
    opt = Adam(net.params, lr=0.05)
    first = None
    for _ in range(50):
        out, tape = net.forward(x=x)
        loss, g = cross_entropy(out, y)
        first = loss if first is None else first
        net.zero_grad()
        net.backward(tape, g)
        opt.step(net.params, net.grads)
    assert loss < 0.5 * first


def test_checkpoint_with_several_networks(tmp_path):
    nets = {"zeta": generator(8, 2, 4, seed=1), "alpha": classifier_net(8, 3, seed=2, hidden=6)}
    loaded, _ = load_checkpoint(save_checkpoint(tmp_path / "m.ckpt", nets))
    for name, net in nets.items():
        assert loaded[name].param_hash() == net.param_hash()
