"""Acceptance gate: one PASS/FAIL line per criterion.

Each test records its line in ``RESULTS`` (echoed in the terminal summary by
``conftest.py``) and then asserts, so a failing criterion fails visibly.
Criteria 6 and 7 train networks and take minutes.
"""
import time
from itertools import permutations

import numpy as np
import pytest

from deconfound.augment import Budget, partition_domains, run_algorithm1
from deconfound.causal import analytic_joint
from deconfound.classify import ClassifierConfig, train_aug, train_erm
from deconfound.experiments import DEFAULT_GRID, e2e, table3
from deconfound.mapper import MapperConfig, evaluate_mapper, pretrain_probes, train_mapper
from deconfound.metrics import (
    InterventionalTable,
    confounding,
    empirical_joint,
    joint_from_codes,
    mutual_information,
)
from deconfound.presets import cm, dcm
from deconfound.synth import read_dataset, sample_assignments, stream_seed, synth_dataset, write_dataset

from gradcases import run_all

RESULTS = {}


def record(n, ok, detail, elapsed, budget=None):
    if budget is not None and elapsed > budget:
        ok = False
        detail += f"; over the {budget:.0f} s budget"
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}"
    print(RESULTS[n])
    return ok


def test_1_table3_reproduction():
    start = time.perf_counter()
    rows = table3(d=10, grid=DEFAULT_GRID, n=60000, seed=0)
    reference = (0.072, 0.249, 1.244, 3.585, 4.041)
    closed = (0.0732, 0.2553, 1.2513, 3.6046, 4.0409)
    got = [r.confounding for r in rows]
    ok = all(abs(g - a) <= 0.03 for g, a in zip(got, reference)) and all(
        abs(g - c) <= 0.02 for g, c in zip(got, closed)
    )
    assert record(1, ok, "confounding " + ", ".join(f"{g:.4f}" for g in got), time.perf_counter() - start, 60)


def test_2_identity():
    start = time.perf_counter()
    worst_analytic = 0.0
    for p in np.linspace(0, 1, 21):
        j = analytic_joint(cm(d=10, p=float(p)), ("digit", "color"))
        worst_analytic = max(worst_analytic, abs(confounding(j) - 2 * mutual_information(j)))
    worst_empirical = 0.0
    for p in DEFAULT_GRID:
        attrs, _ = sample_assignments(cm(d=10, p=p), 20000, stream_seed(0, "train"))
        for i, k in permutations(range(3), 2):
            j = joint_from_codes(attrs[:, i], attrs[:, k], 10 if i < 2 else 2, 10 if k < 2 else 2)
            worst_empirical = max(worst_empirical, abs(confounding(j) - 2 * mutual_information(j)))
    ok = worst_analytic < 1e-12 and worst_empirical < 1e-9
    detail = f"max gap analytic {worst_analytic:.1e}, empirical {worst_empirical:.1e}"
    assert record(2, ok, detail, time.perf_counter() - start, 30)


def test_3_interventional_equals_marginal():
    start = time.perf_counter()
    spec = cm(d=10, p=0.95)
    n = 60000
    attrs, _ = sample_assignments(spec, n, stream_seed(0, "train"))
    names = spec.schema.names
    worst = 0.0
    for target, intervened in permutations(names, 2):
        ti = spec.schema.index(target)
        marginal = np.bincount(attrs[:, ti], minlength=spec.schema[target].cardinality) / n
        tab = InterventionalTable.sampled(spec, target, intervened, n, seed=0).table
        worst = max(worst, float(np.abs(tab - marginal[:, None]).max()))
    assert record(3, worst < 0.02, f"max-norm distance {worst:.4f}", time.perf_counter() - start)


def test_4_gradient_integrity():
    start = time.perf_counter()
    errs = run_all()
    worst = max(errs, key=errs.get)
    ok = all(e <= 1e-4 for e in errs.values())
    detail = f"{len(errs)} checks, worst {worst} {errs[worst]:.1e}"
    assert record(4, ok, detail, time.perf_counter() - start, 60)


def test_5_augmentation_removes_confounding():
    start = time.perf_counter()
    spec = cm(d=4, p=0.95)
    data = synth_dataset(spec, 4000, "train")
    before = confounding(empirical_joint(data, "digit", "color"))
    aug = run_algorithm1(data, spec, "oracle", Budget("balance"))
    after = confounding(empirical_joint(aug.combined, "digit", "color"))
    ok = after < 0.05 and abs(before - 2.37) < 0.15
    detail = f"confounding(label, color) {before:.3f} -> {after:.4f} nats with {len(aug.cfs)} counterfactuals"
    assert record(5, ok, detail, time.perf_counter() - start, 60)


@pytest.mark.slow
def test_6_downstream_gain():
    start = time.perf_counter()
    res = e2e("cm", 0.95, d=10, n_train=3000, n_test=2000, budget=Budget("balance"), seeds=(0, 1, 2), epochs=10)
    gain = res.aug_mean - res.erm_mean
    detail = (
        f"ERM {res.erm_mean:.3f} vs augmented {res.aug_mean:.3f} (gain {100 * gain:.1f} points; "
        f"per seed ERM {[round(a, 3) for a in res.erm_accuracy]}, augmented {[round(a, 3) for a in res.aug_accuracy]})"
    )
    assert record(6, gain >= 0.15, detail, time.perf_counter() - start, 15 * 60)


@pytest.mark.slow
def test_7_learned_mapper_properties():
    start = time.perf_counter()
    spec = cm(d=4, p=0.95, seed=0)
    train = synth_dataset(spec, 20000, "train")
    probe_split = synth_dataset(spec, 3000, "probe")
    probes = (pretrain_probes(probe_split, "color"), pretrain_probes(probe_split, "digit"))
    hashes = [p.param_hash() for p in probes]

    def held_out_t1(seed):
        data = synth_dataset(spec, 3000, "test", seed=seed)
        return data.subset(partition_domains(data, "color", 0, "digit", 0).t1)

    val, final = held_out_t1(11), held_out_t1(21)
    dp = partition_domains(train, "color", 0, "digit", 0)

    def validate(m, step):
        e = evaluate_mapper(m, val, probes)
        return min(e.target_rate, e.preserve_rate) - 10 * max(e.cycle_mae - 0.1, 0)

    tried = []
    passed = False
    for seed in (0, 1, 2):  # best of three; later seeds only run if needed
        cfg = MapperConfig(steps=1500, batch_size=32, eval_every=250, seed=seed)
        m = train_mapper(
            train.subset(dp.t1), train.subset(dp.t2), probes, cfg,
            target_attr="color", target_value=0, partner_attr="digit", partner_value=0, validate=validate,
        )
        e = evaluate_mapper(m, final, probes)
        tried.append(f"seed {seed}: target {e.target_rate:.3f}, preserve {e.preserve_rate:.3f}, cycle MAE {e.cycle_mae:.3f}")
        if e.target_rate >= 0.8 and e.preserve_rate >= 0.8 and e.cycle_mae <= 0.1:
            passed = True
            break
    passed = passed and [p.param_hash() for p in probes] == hashes
    detail = f"|T1|={len(dp.t1)}, |T2|={len(dp.t2)}, held-out n={len(final)}; " + "; ".join(tried)
    assert record(7, passed, detail, time.perf_counter() - start, 30 * 60)


def test_8_contract_suite(tmp_path):
    start = time.perf_counter()
    checks = {}
    spec = cm(d=4, p=0.95)
    data = synth_dataset(spec, 800, "train")

    cfg = ClassifierConfig(epochs=2, batch_size=64, lam=0.0, seed=7)
    a, b = train_erm(data, cfg), train_aug(data, cfg)
    checks["lambda=0 trajectories"] = a.history == b.history and a.net.param_hash() == b.net.param_hash()

    ok = True
    for s in (spec, dcm(d=4, p=0.95)):
        d = data if s is spec else synth_dataset(s, 800, "train")
        aug = run_algorithm1(d, s, "oracle", Budget("balance"))
        pool = aug.combined
        diff = pool.attrs[aug.cfs.source_index] != aug.cfs.attrs
        names = np.array(s.schema.names)
        ok &= bool((diff.sum(axis=1) == 1).all())
        ok &= all(set(names[row]) == {attr} for row, attr in zip(diff, aug.cfs.intervened_attribute))
    checks["one-attribute delta"] = ok

    probe_split = synth_dataset(spec, 600, "probe")
    probes = (pretrain_probes(probe_split, "color"), pretrain_probes(probe_split, "digit"))
    before = [p.param_hash() for p in probes]
    dp = partition_domains(data, "color", 0, "digit", 0)
    m = train_mapper(
        data.subset(dp.t1), data.subset(dp.t2), probes, MapperConfig(steps=10, batch_size=8),
        target_attr="color", target_value=0, partner_attr="digit", partner_value=0,
    )
    checks["probe hash invariant"] = [p.param_hash() for p in probes] == before == list(m.probe_hashes.values())

    first = write_dataset(data, tmp_path / "a")
    second = write_dataset(read_dataset(first), tmp_path / "b")
    checks["container round trip"] = (first / "images.bin").read_bytes() == (second / "images.bin").read_bytes()

    detail = ", ".join(f"{k} {'ok' if v else 'BROKEN'}" for k, v in checks.items())
    assert record(8, all(checks.values()), detail, time.perf_counter() - start)
