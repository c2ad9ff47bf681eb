"""Downstream classifier: plain ERM, training on augmented data, and evaluation on unconfounded splits."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .models import classifier_net, to_unit
from .nn import Adam, cross_entropy, load_checkpoint, pairwise_contrastive, save_checkpoint


@dataclass
class ClassifierConfig:
    epochs: int = 10
    batch_size: int = 256
    lam: float = 0.0  # weight of the pairwise logit contrastive term
    margin: float = 1.0
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    hidden: int = 48

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.lam > 0 and self.batch_size < 2:
            raise ValueError("the contrastive term needs batch size >= 2")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch size must be >= 1 and epochs >= 0")


class Classifier:
    def __init__(self, net, label_attribute: str, n_classes: int, config: ClassifierConfig, provenance=None):
        self.net = net
        self.label_attribute = label_attribute
        self.n_classes = n_classes
        self.config = config
        self.provenance = dict(provenance or {})
        self.history: list[float] = []

    def logits(self, images: np.ndarray, chunk: int = 1024) -> np.ndarray:
        out = [self.net(x=to_unit(images[i : i + chunk])) for i in range(0, len(images), chunk)]
        return np.concatenate(out) if out else np.zeros((0, self.n_classes), dtype=np.float32)

    def predict(self, images: np.ndarray) -> np.ndarray:
        return self.logits(images).argmax(axis=1)

    def loss(self, images, labels) -> float:
        return cross_entropy(self.logits(images), labels)[0]

    def save(self, path):
        meta = {
            "label_attribute": self.label_attribute,
            "n_classes": self.n_classes,
            "config": asdict(self.config),
            "provenance": self.provenance,
        }
        return save_checkpoint(path, {"classifier": self.net}, meta)

    @classmethod
    def load(cls, path) -> "Classifier":
        nets, meta = load_checkpoint(path)
        return cls(
            nets["classifier"], meta["label_attribute"], meta["n_classes"], ClassifierConfig(**meta["config"]),
            meta.get("provenance"),
        )


def _fit(images, labels, n_classes, label_attribute, config: ClassifierConfig, provenance) -> Classifier:
    size = images.shape[1]
    net = classifier_net(size, n_classes, seed=config.seed, hidden=config.hidden)
    opt = Adam(net.params, config.lr, config.beta1, config.beta2)
    rng = np.random.default_rng(config.seed)
    model = Classifier(net, label_attribute, n_classes, config, provenance)
    n = len(images)
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            y = labels[idx]
            logits, tape = net.forward(x=to_unit(images[idx]))
            loss, grad = cross_entropy(logits, y)
            if config.lam > 0 and len(idx) >= 2:
                c_loss, c_grad = pairwise_contrastive(logits, y, config.margin)
                loss += config.lam * c_loss
                grad = grad + np.float32(config.lam) * c_grad
            if not np.isfinite(loss):
                raise FloatingPointError("classifier loss is not finite")
            net.zero_grad()
            net.backward(tape, grad)
            opt.step(net.params, net.grads)
            model.history.append(loss)
    return model


def train_erm(train, config: ClassifierConfig | None = None) -> Classifier:
    """Minimize mean cross-entropy over ``train`` (the contrastive weight is ignored)."""
    config = config or ClassifierConfig()
    if config.lam:
        config = ClassifierConfig(**{**asdict(config), "lam": 0.0})
    label = train.schema.label_attribute
    return _fit(
        train.images, train.column(label), train.schema[label].cardinality, label, config,
        {"train": train.spec_hash, "n_train": len(train), "objective": "erm"},
    )


def train_aug(aug, config: ClassifierConfig | None = None) -> Classifier:
    """Cross-entropy over base + counterfactual samples plus ``lam`` times the
    mean pairwise contrastive loss on logits (same label => pulled together)."""
    config = config or ClassifierConfig(lam=0.5)
    data = aug.combined if hasattr(aug, "combined") else aug
    label = data.schema.label_attribute
    return _fit(
        data.images, data.column(label), data.schema[label].cardinality, label, config,
        {"train": data.spec_hash, "n_train": len(data), "objective": "aug", "lam": config.lam},
    )


@dataclass
class EvalReport:
    accuracy: float
    confusion: list[list[int]]
    groups: dict = field(default_factory=dict)  # attr -> {"accuracy": [[...]], "count": [[...]]}
    n: int = 0
    seed: int | None = None
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["group_attribute", "label", "value", "count", "accuracy"])
        w.writerow(["*", "*", "*", self.n, self.accuracy])
        for attr, g in self.groups.items():
            for y, row in enumerate(g["count"]):
                for v, c in enumerate(row):
                    acc = g["accuracy"][y][v]
                    w.writerow([attr, y, v, c, "" if acc is None else acc])
        return buf.getvalue()


def evaluate(model, test) -> EvalReport:
    """Accuracy of ``model.predict`` on ``test`` with per-(label, attribute value) breakdowns."""
    label = test.schema.label_attribute
    y = test.column(label)
    pred = np.asarray(model.predict(test.images))
    d = test.schema[label].cardinality
    correct = pred == y
    conf = np.zeros((d, d), dtype=np.int64)
    np.add.at(conf, (y, np.clip(pred, 0, d - 1)), 1)
    groups = {}
    for a in test.schema.attributes:
        if a.name == label:
            continue
        v = test.column(a.name)
        count = np.zeros((d, a.cardinality), dtype=np.int64)
        hit = np.zeros((d, a.cardinality), dtype=np.int64)
        np.add.at(count, (y, v), 1)
        np.add.at(hit, (y, v), correct.astype(np.int64))
        acc = [[(int(h) / int(c)) if c else None for h, c in zip(hr, cr)] for hr, cr in zip(hit, count)]
        groups[a.name] = {"accuracy": acc, "count": count.tolist()}
    return EvalReport(
        accuracy=float(correct.mean()) if len(y) else float("nan"),
        confusion=conf.tolist(),
        groups=groups,
        n=len(y),
        seed=getattr(getattr(model, "config", None), "seed", None),
        provenance={"test": test.spec_hash, **getattr(model, "provenance", {})},
    )
