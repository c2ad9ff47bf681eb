"""Frozen attribute probes and the learned counterfactual translator.

The translator is a conditional cycle-consistent pair of generators: ``G1``
moves ``T1`` images to the target value ``z_j^p`` and ``G2`` moves ``T2`` images
back to a requested non-target value.  Besides the adversarial and cycle terms,
two frozen probes shape the objective: the target-attribute probe ``L1``
pushes the embeddings of ``X`` and ``G(X)`` apart and the partner probe ``L2``
pulls them together.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .models import discriminator, generator, one_hot, probe_net, to_uint8, to_unit
from .nn import (
    Adam,
    Network,
    cycle_l1,
    load_checkpoint,
    logistic_discriminator_loss,
    logistic_generator_loss,
    lsgan_discriminator_loss,
    lsgan_generator_loss,
    pairwise_contrastive,
    save_checkpoint,
)
from .synth import Dataset, Sample

log = logging.getLogger(__name__)


# -- probes --------------------------------------------------------------------------


class ProbeTrainingError(RuntimeError):
    pass


class MapperDivergedError(FloatingPointError):
    def __init__(self, step: int, losses: dict, dump: Path | None):
        self.step, self.losses, self.dump = step, losses, dump
        super().__init__(f"mapper training diverged at step {step}: {losses} (state dumped to {dump})")


@dataclass
class ProbeConfig:
    dim: int = 16
    steps: int = 400
    batch_size: int = 64
    margin: float = 1.0
    lr: float = 1e-3
    seed: int = 0
    min_accuracy: float = 0.95
    holdout: float = 0.2


class Probe:
    """Frozen embedder for one attribute plus its per-value centroids."""

    def __init__(self, net, attribute: str, centroids: np.ndarray, accuracy: float = float("nan")):
        self.net = net
        self.net.frozen = True
        self.attribute = attribute
        self.centroids = np.asarray(centroids, dtype=np.float32)
        self.accuracy = accuracy

    def embed(self, x: np.ndarray, chunk: int = 1024) -> np.ndarray:
        """Embeddings of unit-scaled NCHW images."""
        return np.concatenate([self.net(x=x[i : i + chunk]) for i in range(0, len(x), chunk)])

    def classify(self, x: np.ndarray) -> np.ndarray:
        return nearest_centroid(self.embed(x), self.centroids)

    def margin(self, x: np.ndarray, value: int) -> np.ndarray:
        """Distance to the runner-up centroid minus distance to ``value``'s centroid."""
        d = _sq_dists(self.embed(x), self.centroids) ** 0.5
        own = d[:, value]
        d[:, value] = np.inf
        return d.min(axis=1) - own

    def param_hash(self) -> str:
        return self.net.param_hash()

    def save(self, path):
        meta = {"attribute": self.attribute, "centroids": self.centroids.tolist(), "accuracy": self.accuracy}
        return save_checkpoint(path, {"probe": self.net}, meta)

    @classmethod
    def load(cls, path) -> "Probe":
        nets, meta = load_checkpoint(path)
        return cls(nets["probe"], meta["attribute"], np.array(meta["centroids"]), meta.get("accuracy", float("nan")))


def _sq_dists(e, c):
    return np.maximum((e * e).sum(1)[:, None] + (c * c).sum(1)[None, :] - 2 * e @ c.T, 0)


def nearest_centroid(emb: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return _sq_dists(emb, centroids).argmin(axis=1)


def centroids_of(emb: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((k, emb.shape[1]), dtype=np.float32)
    for v in range(k):
        if (labels == v).any():
            out[v] = emb[labels == v].mean(axis=0)
    return out


def pretrain_probes(data: Dataset, attribute: str, config: ProbeConfig | None = None) -> Probe:
    """Train a unit-norm embedder with the pairwise contrastive loss on same/different
    ``attribute`` pairs, then freeze it.

    Raises :class:`ProbeTrainingError` when nearest-centroid accuracy on the held-out
    part of ``data`` stays below ``config.min_accuracy``.
    """
    cfg = config or ProbeConfig()
    rng = np.random.default_rng(cfg.seed)
    k = data.schema[attribute].cardinality
    labels = data.column(attribute)
    perm = rng.permutation(len(data))
    n_hold = max(int(len(data) * cfg.holdout), 1)
    hold, fit = perm[:n_hold], perm[n_hold:]
    if len(fit) < 2:
        raise ValueError("too few samples to train a probe")
    x = to_unit(data.images)
    net = probe_net(data.images.shape[1], cfg.dim, seed=cfg.seed)
    opt = Adam(net.params, cfg.lr)
    history = []
    for _ in range(cfg.steps):
        idx = rng.choice(fit, size=min(cfg.batch_size, len(fit)), replace=False)
        emb, tape = net.forward(x=x[idx])
        loss, grad = pairwise_contrastive(emb, labels[idx], cfg.margin)
        net.zero_grad()
        net.backward(tape, grad)
        opt.step(net.params, net.grads)
        history.append(loss)
    probe = Probe(net, attribute, np.zeros((k, cfg.dim)))
    probe.centroids = centroids_of(probe.embed(x[fit]), labels[fit], k)
    acc = float((probe.classify(x[hold]) == labels[hold]).mean())
    probe.accuracy = acc
    if acc < cfg.min_accuracy:
        per_value = {
            int(v): float((probe.classify(x[hold][labels[hold] == v]) == v).mean())
            for v in range(k)
            if (labels[hold] == v).any()
        }
        raise ProbeTrainingError(
            f"probe for {attribute!r} reached nearest-centroid accuracy {acc:.3f} < {cfg.min_accuracy} "
            f"after {cfg.steps} steps; final loss {history[-1]:.4f}; per-value accuracy {per_value}"
        )
    return probe


# -- learned mapper ------------------------------------------------------------------


@dataclass
class MapperConfig:
    steps: int = 3000
    batch_size: int = 32
    alpha: float = 1.0
    margin: float = 1.0
    cycle_weight: float = 10.0
    lr: float = 2e-4
    disc_lr: float | None = None  # defaults to ``lr``
    beta1: float = 0.5
    beta2: float = 0.999
    width: int = 8
    disc_width: int = 16
    gan: str = "lsgan"  # or "logistic"
    literal_push: bool = False  # use the unbounded -D^2 form for the L1 probe term
    init_output_bias: bool = True  # start generators at the mean colour of their output domain
    instance_noise: float = 0.0  # std of Gaussian noise added to every critic input
    ema: float = 0.99  # generator weight averaging; 0 keeps the raw weights
    ema_start: int = 0
    eval_every: int = 0
    seed: int = 0
    log_every: int = 0
    dump_dir: str | None = None

    def __post_init__(self):
        if self.gan not in ("lsgan", "logistic"):
            raise ValueError("gan must be 'lsgan' or 'logistic'")
        if self.alpha < 0 or self.cycle_weight < 0:
            raise ValueError("loss weights must be >= 0")


class LearnedMapper:
    """``G1`` applied with the target value as condition; the assignment is
    stamped with ``Z_j := value``."""

    kind = "learned"

    def __init__(self, g1, g2, target_attr, target_value, partner_attr, partner_value, n_values, config=None, d_t2=None, d_t1=None):
        self.g1, self.g2 = g1, g2
        self.d_t2, self.d_t1 = d_t2, d_t1
        self.target_attr, self.target_value = target_attr, int(target_value)
        self.partner_attr, self.partner_value = partner_attr, int(partner_value)
        self.n_values = n_values
        self.config = config or MapperConfig()
        self.history: list[dict] = []
        self.best_score: float | None = None
        self.probe_hashes: dict[str, str] = {}

    def translate(self, x: np.ndarray, value: int | None = None, chunk: int = 512) -> np.ndarray:
        """``G1`` on unit-scaled NCHW images."""
        v = self.target_value if value is None else value
        out = []
        for i in range(0, len(x), chunk):
            xb = x[i : i + chunk]
            out.append(self.g1(x=xb, cond=one_hot(np.full(len(xb), v), self.n_values)))
        return np.concatenate(out)

    def translate_back(self, x: np.ndarray, values, chunk: int = 512) -> np.ndarray:
        values = np.asarray(values)
        out = []
        for i in range(0, len(x), chunk):
            out.append(self.g2(x=x[i : i + chunk], cond=one_hot(values[i : i + chunk], self.n_values)))
        return np.concatenate(out)

    def apply(self, sample: Sample, value: int | None = None, source_index: int = -1) -> Sample:
        from .synth import Origin

        v = self.target_value if value is None else int(value)
        img = to_uint8(self.translate(to_unit(sample.image[None]), v))[0]
        assignment = {**sample.assignment, self.target_attr: v}
        return Sample(img, assignment, sample.noise, Origin("counterfactual", source_index, self.target_attr, "learned"))

    def apply_batch(self, data: Dataset, idx) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        attrs = data.attrs[idx].copy()
        attrs[:, data.schema.index(self.target_attr)] = self.target_value
        images = to_uint8(self.translate(to_unit(data.images[idx])))
        n = len(idx)
        return Dataset(
            data.schema, images, attrs, data.noise[idx], split=data.split, spec_hash=data.spec_hash, seed=data.seed,
            source_index=idx, intervened_attribute=np.array([self.target_attr] * n, dtype=object),
            mapper_kind=np.array(["learned"] * n, dtype=object),
        )

    def _meta(self):
        return {
            "target_attr": self.target_attr,
            "target_value": self.target_value,
            "partner_attr": self.partner_attr,
            "partner_value": self.partner_value,
            "n_values": self.n_values,
            "config": asdict(self.config),
            "probe_hashes": self.probe_hashes,
        }

    def save(self, path):
        nets = {"g1": self.g1, "g2": self.g2}
        if self.d_t2 is not None:
            nets.update(d_t2=self.d_t2, d_t1=self.d_t1)
        return save_checkpoint(path, nets, self._meta())

    @classmethod
    def load(cls, path) -> "LearnedMapper":
        nets, m = load_checkpoint(path)
        out = cls(
            nets["g1"], nets["g2"], m["target_attr"], m["target_value"], m["partner_attr"], m["partner_value"],
            m["n_values"], MapperConfig(**m["config"]), nets.get("d_t2"), nets.get("d_t1"),
        )
        out.probe_hashes = m.get("probe_hashes", {})
        return out


def _probe_term(probe: Probe, x, fx, push: bool, margin: float, literal: bool):
    """Probe loss between embeddings of ``x`` and ``fx``; returns ``(loss, grad wrt fx)``.

    ``x`` is a fixed input image, so only ``fx`` receives a gradient.
    """
    ex = probe.net(x=x)
    efx, tape = probe.net.forward(x=fx)
    diff = efx - ex
    n = len(x)
    d2 = (diff * diff).sum(axis=1)
    if not push:
        loss, ge = float(d2.mean()), 2 * diff / n
    elif literal:
        loss, ge = float(-d2.mean()), -2 * diff / n
    else:
        d = np.sqrt(d2)
        hinge = np.maximum(margin - d, 0)
        loss = float((hinge * hinge).mean())
        coef = np.where(d > 0, -2 * hinge / np.where(d > 0, d, 1), 0) / n
        ge = coef[:, None] * diff
    gx = probe.net.backward(tape, ge.astype(efx.dtype))["x"]
    return loss, gx


def _dump_state(path: Path, nets: dict, step: int, losses: dict) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    clean = {k: (v if np.isfinite(v) else repr(v)) for k, v in losses.items()}
    with np.errstate(all="ignore"):
        finite = {k: n for k, n in nets.items() if all(np.isfinite(p).all() for p in n.params.values())}
    if finite:
        save_checkpoint(path / "state.ckpt", finite, {"step": step, "losses": clean})
    (path / "divergence.json").write_text(json.dumps({"step": step, "losses": clean, "nonfinite_nets": sorted(set(nets) - set(finite))}, indent=2))
    return path


def _logit(p):
    p = np.clip(p, 1e-3, 1 - 1e-3)
    return np.log(p / (1 - p)).astype(np.float32)


def _set_output_bias(g, mean_rgb):
    g.nodes[-2].layer.params["b"][:] = _logit(mean_rgb)


def _noisy(x, sigma, rng):
    if sigma <= 0:
        return x
    return x + np.float32(sigma) * rng.standard_normal(x.shape, dtype=np.float32)


def train_mapper(
    t1: Dataset,
    t2: Dataset,
    probes: tuple[Probe, Probe],
    config: MapperConfig | None = None,
    *,
    target_attr: str,
    target_value: int,
    partner_attr: str,
    partner_value: int,
    validate=None,
) -> LearnedMapper:
    """Alternate generator and critic updates on minibatches drawn from ``t1`` and ``t2``.

    ``probes`` is ``(L1, L2)``: ``L1`` embeds the target attribute and ``L2`` the
    partner attribute.  Probe parameters are never updated.  ``validate``, if
    given, is called as ``validate(mapper, step)`` every ``config.eval_every``
    steps and at the end; it returns a score, and the generator weights with the
    best score are kept.
    """
    cfg = config or MapperConfig()
    if len(t1) == 0 or len(t2) == 0:
        raise ValueError("degenerate domain: T1 and T2 must be non-empty")
    l1, l2 = probes
    hashes = {"L1": l1.param_hash(), "L2": l2.param_hash()}
    l1.net.frozen = l2.net.frozen = True
    k = t1.schema[target_attr].cardinality
    size = t1.images.shape[1]
    rng = np.random.default_rng(cfg.seed)
    seeds = rng.integers(0, 2**31, size=4)
    g1 = generator(size, k, cfg.width, seed=int(seeds[0]))
    g2 = generator(size, k, cfg.width, seed=int(seeds[1]))
    d_t2 = discriminator(size, k, cfg.disc_width, seed=int(seeds[2]))
    d_t1 = discriminator(size, k, cfg.disc_width, seed=int(seeds[3]))
    x1_all, x2_all = to_unit(t1.images), to_unit(t2.images)
    if cfg.init_output_bias:
        # start each generator at the mean colour of the domain it writes into
        _set_output_bias(g1, x2_all.mean(axis=(0, 2, 3)))
        _set_output_bias(g2, x1_all.mean(axis=(0, 2, 3)))
    nets = {"g1": g1, "g2": g2, "d_t2": d_t2, "d_t1": d_t1}
    opts = {
        n: Adam(v.params, cfg.lr if n.startswith("g") else (cfg.disc_lr or cfg.lr), cfg.beta1, cfg.beta2)
        for n, v in nets.items()
    }
    gen_loss, disc_loss = (
        (lsgan_generator_loss, lsgan_discriminator_loss) if cfg.gan == "lsgan" else (logistic_generator_loss, logistic_discriminator_loss)
    )
    c1_all = t1.column(target_attr)
    target = one_hot(np.full(cfg.batch_size, target_value), k)
    # shadow generators hold the exponential moving average of the trained weights
    shadow = {n: Network.from_graph(nets[n].graph()) for n in ("g1", "g2")}
    for n in shadow:
        shadow[n].load_params(nets[n].params)
    mapper = LearnedMapper(shadow["g1"], shadow["g2"], target_attr, target_value, partner_attr, partner_value, k, cfg, d_t2, d_t1)
    mapper.probe_hashes = hashes
    best_score, best_params = -np.inf, None
    sigma = cfg.instance_noise
    for step in range(cfg.steps):
        i1 = rng.integers(0, len(t1), cfg.batch_size)
        i2 = rng.integers(0, len(t2), cfg.batch_size)
        x1, x2, c1 = x1_all[i1], x2_all[i2], one_hot(c1_all[i1], k)
        # random non-target values for the T2 -> T1 direction, drawn from T1's value mix
        c2 = one_hot(c1_all[rng.integers(0, len(t1), cfg.batch_size)], k)

        # generator step
        for n in nets:
            nets[n].zero_grad()
        fake2, tf2 = g1.forward(x=x1, cond=target)
        rec1, tr1 = g2.forward(x=fake2, cond=c1)
        fake1, tf1 = g2.forward(x=x2, cond=c2)
        rec2, tr2 = g1.forward(x=fake1, cond=target)

        n2, n1 = _noisy(fake2, sigma, rng), _noisy(fake1, sigma, rng)
        s2, ts2 = d_t2.forward(x=n2, cond=target)
        s1, ts1 = d_t1.forward(x=n1, cond=c2)
        adv2, gs2 = gen_loss(s2)
        adv1, gs1 = gen_loss(s1)
        cyc1, gc1 = cycle_l1(x1, rec1)
        cyc2, gc2 = cycle_l1(x2, rec2)
        w = np.float32(cfg.cycle_weight)
        g_fake2 = d_t2.backward(ts2, gs2)["x"]
        g_fake1 = d_t1.backward(ts1, gs1)["x"]
        probe_loss = 0.0
        if cfg.alpha > 0:
            a = np.float32(cfg.alpha)
            lp, gp = _probe_term(l1, x1, fake2, True, cfg.margin, cfg.literal_push)
            lq, gq = _probe_term(l2, x1, fake2, False, cfg.margin, cfg.literal_push)
            g_fake2 = g_fake2 + a * (gp + gq)
            lp2, gp2 = _probe_term(l1, x2, fake1, True, cfg.margin, cfg.literal_push)
            lq2, gq2 = _probe_term(l2, x2, fake1, False, cfg.margin, cfg.literal_push)
            g_fake1 = g_fake1 + a * (gp2 + gq2)
            probe_loss = lp + lq + lp2 + lq2
        # cycle gradients flow through the second generator into the first
        g_fake2 = g_fake2 + g2.backward(tr1, w * gc1)["x"]
        g_fake1 = g_fake1 + g1.backward(tr2, w * gc2)["x"]
        g1.backward(tf2, g_fake2)
        g2.backward(tf1, g_fake1)
        opts["g1"].step(g1.params, g1.grads)
        opts["g2"].step(g2.params, g2.grads)

        # critic step on the (now fixed) translations
        d_losses = 0.0
        for d, real, rc, fake, fc in ((d_t2, x2, target, fake2, target), (d_t1, x1, c1, fake1, c2)):
            sr, tr = d.forward(x=_noisy(real, sigma, rng), cond=rc)
            sf, tfk = d.forward(x=_noisy(fake, sigma, rng), cond=fc)
            ld, gr, gf = disc_loss(sr, sf)
            d.zero_grad()
            d.backward(tr, gr)
            d.backward(tfk, gf)
            d_losses += ld
        opts["d_t2"].step(d_t2.params, d_t2.grads)
        opts["d_t1"].step(d_t1.params, d_t1.grads)

        losses = {"step": step, "adv": adv1 + adv2, "cycle": cyc1 + cyc2, "probe": probe_loss, "disc": d_losses}
        if not all(np.isfinite(v) for v in losses.values()):
            dump = _dump_state(Path(cfg.dump_dir), nets, step, losses) if cfg.dump_dir else None
            raise MapperDivergedError(step, losses, dump)
        mapper.history.append(losses)
        decay = cfg.ema if step >= cfg.ema_start else 0.0
        for n in shadow:
            sp = shadow[n].params
            for key, v in nets[n].params.items():
                sp[key] *= np.float32(decay)
                sp[key] += np.float32(1 - decay) * v
        if cfg.log_every and step % cfg.log_every == 0:
            log.info("mapper step %d: %s", step, {k: round(v, 4) for k, v in losses.items() if k != "step"})
        last = step == cfg.steps - 1
        if validate is not None and ((cfg.eval_every and (step + 1) % cfg.eval_every == 0) or last):
            score = float(validate(mapper, step + 1))
            if score > best_score:
                best_score = score
                best_params = {n: {k: v.copy() for k, v in shadow[n].params.items()} for n in shadow}
    if best_params is not None:
        for n in shadow:
            shadow[n].load_params(best_params[n])
        mapper.best_score = best_score
    if {"L1": l1.param_hash(), "L2": l2.param_hash()} != hashes:
        raise RuntimeError("probe parameters changed during mapper training")
    return mapper


@dataclass
class MapperEval:
    target_rate: float
    preserve_rate: float
    cycle_mae: float
    n: int
    details: dict = field(default_factory=dict)


def evaluate_mapper(mapper: LearnedMapper, held_out_t1: Dataset, probes: tuple[Probe, Probe]) -> MapperEval:
    """Probe-based quality of ``G1`` on held-out ``T1`` images.

    * target rate: share of ``G1(X)`` the target probe places at ``z_j^p``
    * preserve rate: share where the partner probe agrees on ``X`` and ``G1(X)``
    * cycle MAE: mean |G2(G1(X)) - X| on unit-scaled pixels
    """
    l1, l2 = probes
    x = to_unit(held_out_t1.images)
    fx = mapper.translate(x)
    back = mapper.translate_back(fx, held_out_t1.column(mapper.target_attr))
    tgt = float((l1.classify(fx) == mapper.target_value).mean())
    keep = float((l2.classify(fx) == l2.classify(x)).mean())
    mae = float(np.abs(back - x).mean())
    return MapperEval(tgt, keep, mae, len(x), {"probe_hashes": {"L1": l1.param_hash(), "L2": l2.param_hash()}})
