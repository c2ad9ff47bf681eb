import json

import numpy as np
import pytest

from deconfound.augment import AugmentedDataset
from deconfound.classify import Classifier, ClassifierConfig, evaluate, train_aug, train_erm
from deconfound.presets import cm
from deconfound.synth import synth_dataset


class Constant:
    def __init__(self, value):
        self.value = value

    def predict(self, images):
        return np.full(len(images), self.value)


class Oracle:
    def __init__(self, labels):
        self.labels = labels

    def predict(self, images):
        return self.labels


def test_lambda_zero_matches_erm(small_train):
    cfg = ClassifierConfig(epochs=2, batch_size=64, seed=3, lam=0.0)
    a = train_erm(small_train, cfg)
    b = train_aug(AugmentedDataset(small_train, small_train.subset([])), cfg)
    assert a.history == b.history
    assert a.net.param_hash() == b.net.param_hash()


def test_contrastive_term_changes_training(small_train):
    a = train_aug(small_train, ClassifierConfig(epochs=1, batch_size=64, lam=0.0))
    b = train_aug(small_train, ClassifierConfig(epochs=1, batch_size=64, lam=0.5))
    assert a.net.param_hash() != b.net.param_hash()


def test_config_checks():
    with pytest.raises(ValueError):
        ClassifierConfig(lam=0.5, batch_size=1)
    with pytest.raises(ValueError):
        ClassifierConfig(lam=-1)


def test_evaluate_trivial_models(small_test):
    y = small_test.column("digit")
    const = evaluate(Constant(0), small_test)
    assert const.accuracy == pytest.approx(np.mean(y == 0))
    assert const.accuracy == pytest.approx(0.25, abs=0.06)
    perfect = evaluate(Oracle(y), small_test)
    assert perfect.accuracy == 1.0
    assert np.trace(np.array(perfect.confusion)) == len(y)


def test_group_breakdown_recombines(small_test):
    rng = np.random.default_rng(0)
    y = small_test.column("digit")
    noisy = np.where(rng.random(len(y)) < 0.3, (y + 1) % 4, y)
    rep = evaluate(Oracle(noisy), small_test)
    g = rep.groups["color"]
    counts = np.array(g["count"])
    acc = np.array([[a if a is not None else 0.0 for a in row] for row in g["accuracy"]])
    assert counts.sum() == rep.n
    assert (acc * counts).sum() / counts.sum() == pytest.approx(rep.accuracy)
    assert json.loads(rep.to_json())["n"] == rep.n
    assert rep.to_csv().splitlines()[1].startswith("*")


def test_erm_learns_unconfounded_task():
    # the thickness edge carries its own strength, so zero it explicitly
    spec = cm(d=4, p=0.0).unconfounded()
    train = synth_dataset(spec, 2000, "train")
    test = synth_dataset(spec, 500, "test")
    model = train_erm(train, ClassifierConfig(epochs=15, seed=0))
    assert evaluate(model, test).accuracy >= 0.9


def test_checkpoint_round_trip(tmp_path, small_train, small_test):
    model = train_erm(small_train, ClassifierConfig(epochs=1))
    back = Classifier.load(model.save(tmp_path / "c.ckpt"))
    np.testing.assert_array_equal(back.predict(small_test.images), model.predict(small_test.images))
    assert back.provenance["objective"] == "erm"
