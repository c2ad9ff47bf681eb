"""Experiment drivers: the correlation/confounding curve and the end-to-end augmentation study."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .augment import Budget, run_algorithm1
from .causal import analytic_confounding
from .classify import ClassifierConfig, evaluate, train_aug, train_erm
from .metrics import confounding, joint_from_codes, mutual_information, pearson_codes, report
from .presets import preset
from .synth import sample_assignments, stream_seed, synth_dataset

DEFAULT_GRID = (0.10, 0.20, 0.50, 0.90, 0.95)


@dataclass
class CurveRow:
    p: float
    pearson: float
    confounding: float
    mutual_information: float
    analytic: float


def table3(d: int = 10, grid=DEFAULT_GRID, n: int = 60000, seed: int = 0, pair=("digit", "color")) -> list[CurveRow]:
    """Empirical confounding (marginal-assumption tables) of a label/color pair on the
    ``cm`` preset across strengths.  Only assignments are sampled; nothing is rendered."""
    rows = []
    for p in grid:
        spec = preset("cm", d=d, p=float(p), seed=seed)
        attrs, _ = sample_assignments(spec, n, stream_seed(seed, "train"))
        x = attrs[:, spec.schema.index(pair[0])]
        y = attrs[:, spec.schema.index(pair[1])]
        j = joint_from_codes(x, y, d, d)
        rows.append(
            CurveRow(float(p), pearson_codes(x, y), confounding(j), mutual_information(j), analytic_confounding(spec, pair))
        )
    return rows


def curve_csv(rows: list[CurveRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "pearson", "confounding", "mutual_information", "analytic"])
    for r in rows:
        w.writerow([r.p, f"{r.pearson:.6f}", f"{r.confounding:.6f}", f"{r.mutual_information:.6f}", f"{r.analytic:.6f}"])
    return buf.getvalue()


@dataclass
class E2EResult:
    erm_accuracy: list[float]
    aug_accuracy: list[float]
    n_train: int
    n_counterfactuals: int
    confounding_before: dict
    confounding_after: dict
    seeds: list[int] = field(default_factory=list)

    @property
    def erm_mean(self) -> float:
        return float(np.mean(self.erm_accuracy))

    @property
    def aug_mean(self) -> float:
        return float(np.mean(self.aug_accuracy))

    def summary(self) -> str:
        lines = ["model,mean_accuracy," + ",".join(f"seed_{s}" for s in self.seeds)]
        for name, accs in (("ERM", self.erm_accuracy), ("CONIC", self.aug_accuracy)):
            lines.append(f"{name},{np.mean(accs):.4f}," + ",".join(f"{a:.4f}" for a in accs))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {**asdict(self), "erm_mean": self.erm_mean, "aug_mean": self.aug_mean}


def _pair_confounding(data) -> dict:
    return {f"{r.attr_i}:{r.attr_j}": r.confounding for r in report(data).pairs}


def e2e(
    preset_name: str = "cm",
    p: float = 0.95,
    *,
    d: int = 10,
    n_train: int = 3000,
    n_test: int = 2000,
    budget: Budget = Budget("balance"),
    seeds=(0, 1, 2),
    data_seed: int = 0,
    epochs: int = 10,
    lam: float = 0.5,
    size: int = 16,
    progress=None,
) -> E2EResult:
    """Synthesize, augment with the oracle mapper, train ERM and augmented
    classifiers per seed, and score both on the unconfounded test split."""
    spec = preset(preset_name, d=d, p=p, seed=data_seed, size=size)
    train = synth_dataset(spec, n_train, "train")
    test = synth_dataset(spec, n_test, "test")
    aug = run_algorithm1(train, spec, "oracle", budget, seed=data_seed)
    erm, conic = [], []
    for s in seeds:
        erm.append(evaluate(train_erm(train, ClassifierConfig(epochs=epochs, seed=s)), test).accuracy)
        conic.append(evaluate(train_aug(aug, ClassifierConfig(epochs=epochs, seed=s, lam=lam)), test).accuracy)
        if progress:
            progress(s, erm[-1], conic[-1])
    return E2EResult(
        erm, conic, len(train), len(aug.cfs), _pair_confounding(train), _pair_confounding(aug.combined), list(seeds)
    )
