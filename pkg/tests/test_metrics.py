import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deconfound.causal import analytic_joint
from deconfound.metrics import (
    InterventionalTable,
    JointDistribution,
    SupportViolationError,
    ZeroVarianceError,
    confounding,
    directed_information,
    empirical_joint,
    joint_from_codes,
    mutual_information,
    pearson,
    pearson_codes,
    report,
)
from deconfound.presets import cm
from deconfound.synth import sample_assignments

from oracles import kl_loops, mi_loops

joints = st.tuples(st.integers(2, 5), st.integers(2, 5)).flatmap(
    lambda s: st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 1.0)), min_size=s[0] * s[1], max_size=s[0] * s[1]).map(
        lambda v, s=s: np.array(v).reshape(s)
    )
).filter(lambda t: t.sum() > 1e-3)


def _norm(t):
    return JointDistribution(t / t.sum())


def test_empirical_joint_counts():
    x = np.array([0, 0, 1, 1, 1, 0])
    y = np.array([0, 1, 1, 1, 0, 0])
    j = joint_from_codes(x, y, 2, 2)
    np.testing.assert_allclose(j.table, [[2 / 6, 1 / 6], [1 / 6, 2 / 6]])
    s = joint_from_codes(x, y, 2, 2, smoothing=1.0)
    np.testing.assert_allclose(s.table, [[3 / 10, 2 / 10], [2 / 10, 3 / 10]])
    with pytest.raises(ValueError):
        joint_from_codes([], [], 2, 2)


def test_mi_examples():
    assert mutual_information(JointDistribution(np.eye(2) / 2)) == pytest.approx(np.log(2), abs=1e-15)
    assert mutual_information(JointDistribution(np.full((3, 4), 1 / 12))) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(joints)
def test_mi_matches_loop_oracle(t):
    j = _norm(t)
    assert mutual_information(j) == pytest.approx(mi_loops(j.table.tolist()), abs=1e-12)
    assert mutual_information(j) >= -1e-15


@settings(max_examples=60, deadline=None)
@given(joints)
def test_marginal_assumption_identity(t):
    j = _norm(t)
    assert abs(confounding(j) - 2 * mutual_information(j)) < 1e-12


def test_directed_information_is_expected_kl():
    t = np.array([[0.3, 0.1], [0.2, 0.4]])
    j = JointDistribution(t)
    q = InterventionalTable(np.array([[0.6, 0.2], [0.4, 0.8]]))
    cond = t / t.sum(axis=0)
    want = sum(t[:, b].sum() * kl_loops(cond[:, b], q.table[:, b]) for b in range(2))
    assert directed_information(j, q) == pytest.approx(want, abs=1e-14)


def test_directed_information_zero_when_conditional_equals_interventional():
    t = np.array([[0.3, 0.1], [0.2, 0.4]])
    cond = t / t.sum(axis=0)
    assert directed_information(JointDistribution(t), InterventionalTable(cond)) == pytest.approx(0, abs=1e-15)
    ind = np.outer([0.2, 0.8], [0.5, 0.5])
    assert directed_information(JointDistribution(ind), InterventionalTable.from_marginal(JointDistribution(ind))) == 0


def test_support_violation():
    j = JointDistribution(np.array([[0.5, 0.0], [0.0, 0.5]]))
    q = InterventionalTable(np.array([[1.0, 0.0], [0.0, 1.0]]).T[::-1])
    with pytest.raises(SupportViolationError) as exc:
        directed_information(j, q)
    assert exc.value.cells


def test_invalid_tables_rejected():
    with pytest.raises(ValueError):
        JointDistribution(np.array([[0.5, 0.6]]))
    with pytest.raises(ValueError):
        InterventionalTable(np.array([[0.5, 0.5], [0.2, 0.2]]))


def test_analytic_grid_identity():
    for p in (0.0, 0.1, 0.2, 0.5, 0.9, 0.95, 1.0):
        j = analytic_joint(cm(d=10, p=p), ("digit", "color"))
        assert abs(confounding(j) - 2 * mutual_information(j)) < 1e-12


def test_pearson():
    assert pearson_codes([0, 1, 2], [0, 1, 2]) == pytest.approx(1.0)
    assert pearson_codes([0, 1, 2], [2, 1, 0]) == pytest.approx(-1.0)
    with pytest.raises(ZeroVarianceError):
        pearson_codes([1, 1, 1], [0, 1, 2])


def test_sampled_interventional_matches_marginal():
    spec = cm(d=10, p=0.95)
    tab = InterventionalTable.sampled(spec, "color", "digit", 20000, seed=0)
    assert tab.table.shape == (10, 10)
    np.testing.assert_allclose(tab.table.sum(axis=0), 1.0)
    assert np.abs(tab.table - 0.1).max() < 0.02
    # intervening on the effect does not move the confounder's other child
    back = InterventionalTable.sampled(spec, "digit", "color", 20000, seed=0)
    assert np.abs(back.table - 0.1).max() < 0.02


def test_report_on_dataset(small_train):
    r = report(small_train)
    pr = r.get("color", "digit")
    j = empirical_joint(small_train, pr.attr_i, pr.attr_j)
    assert pr.confounding == pytest.approx(2 * mutual_information(j), abs=1e-9)
    assert pr.pearson == pytest.approx(pearson(small_train, pr.attr_i, pr.attr_j))
    assert pr.tables == "marginal-assumption"
    assert "mutual_information" in r.to_csv().splitlines()[0]
    assert len(r.pairs) == 3


def test_empirical_confounding_tracks_closed_form():
    spec = cm(d=10, p=0.5)
    attrs, _ = sample_assignments(spec, 60000, 0)
    j = joint_from_codes(attrs[:, 0], attrs[:, 1], 10, 10)
    want = 2 * mutual_information(analytic_joint(spec, ("digit", "color")))
    assert confounding(j) == pytest.approx(want, abs=0.02)
