"""Discrete information measures: joints, mutual information, directed information, confounding.

All logarithms are natural (nats).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np


class SupportViolationError(ValueError):
    """KL divergence is infinite: the interventional table puts zero mass where the conditional does not."""

    def __init__(self, cells):
        self.cells = [tuple(int(v) for v in c) for c in cells]
        super().__init__(f"support violation at cells {self.cells[:5]}{'...' if len(self.cells) > 5 else ''}")


class ZeroVarianceError(ValueError):
    pass


class JointDistribution:
    """Probability table over an attribute pair; rows index ``Z_i``, columns ``Z_j``."""

    def __init__(self, table, sample_count: int = 0, smoothing: float = 0.0, *, atol: float = 1e-9):
        t = np.array(table, dtype=np.float64)
        if t.ndim != 2:
            raise ValueError("joint table must be 2-D")
        if (t < 0).any():
            raise ValueError("joint table has negative cells")
        if abs(t.sum() - 1.0) > atol:
            raise ValueError(f"joint table sums to {t.sum()!r}, not 1")
        t.setflags(write=False)
        self.table = t
        self.sample_count = int(sample_count)
        self.smoothing = float(smoothing)

    @property
    def shape(self) -> tuple[int, int]:
        return self.table.shape

    @cached_property
    def row_marginal(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @cached_property
    def col_marginal(self) -> np.ndarray:
        return self.table.sum(axis=0)

    def conditional_rows_given_cols(self) -> np.ndarray:
        """``P(Z_i = a | Z_j = b)`` as a ``(d_i, d_j)`` table; empty columns are left at zero."""
        pj = self.col_marginal
        out = np.zeros_like(self.table)
        nz = pj > 0
        out[:, nz] = self.table[:, nz] / pj[nz]
        return out

    @property
    def T(self) -> "JointDistribution":
        return JointDistribution(self.table.T, self.sample_count, self.smoothing)

    def __repr__(self):
        return f"JointDistribution(shape={self.shape}, n={self.sample_count})"


def joint_from_codes(x, y, di: int, dj: int, smoothing: float = 0.0) -> JointDistribution:
    x, y = np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise ValueError("empty dataset")
    counts = np.bincount(x * dj + y, minlength=di * dj).reshape(di, dj).astype(np.float64)
    table = (counts + smoothing) / (len(x) + smoothing * di * dj)
    return JointDistribution(table, sample_count=len(x), smoothing=smoothing)


def empirical_joint(dataset, zi: str, zj: str, smoothing: float = 0.0) -> JointDistribution:
    """Plug-in joint of two attributes: ``(count(a, b) + s) / (N + s * d_i * d_j)``."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    schema = dataset.schema
    return joint_from_codes(
        dataset.column(zi), dataset.column(zj), schema[zi].cardinality, schema[zj].cardinality, smoothing
    )


def mutual_information(joint: JointDistribution) -> float:
    p = joint.table
    outer = np.outer(joint.row_marginal, joint.col_marginal)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / outer[nz])))


@dataclass(frozen=True)
class InterventionalTable:
    """``table[a, z] = p(Z_i = a | do(Z_j = z))``; each column sums to one."""

    table: np.ndarray
    provenance: str = "user-supplied"
    sample_count: int = 0

    def __post_init__(self):
        t = np.array(self.table, dtype=np.float64)
        if t.ndim != 2 or (t < 0).any():
            raise ValueError("interventional table must be a non-negative 2-D array")
        if np.abs(t.sum(axis=0) - 1.0).max() > 1e-9:
            raise ValueError("interventional table columns must each sum to 1")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_marginal(cls, joint: JointDistribution) -> "InterventionalTable":
        """Interventional table for ``Z_i`` under ``do(Z_j)`` when it equals the marginal of ``Z_i``."""
        di, dj = joint.shape
        return cls(np.tile(joint.row_marginal[:, None], (1, dj)), "marginal-assumption")

    @classmethod
    def sampled(cls, spec, target: str, intervened: str, n: int, seed: int = 0) -> "InterventionalTable":
        """Estimate ``p(target | do(intervened = z))`` from ``n`` interventional draws per ``z``."""
        from .synth import sample_assignments

        di = spec.schema[target].cardinality
        dj = spec.schema[intervened].cardinality
        ti = spec.schema.index(target)
        cols = []
        for z in range(dj):
            seq = np.random.SeedSequence([int(seed), 3, spec.schema.index(intervened), z])
            attrs, _ = sample_assignments(spec, n, seq, do={intervened: z})
            cols.append(np.bincount(attrs[:, ti], minlength=di) / n)
        return cls(np.stack(cols, axis=1), f"sampled({n})", sample_count=n)


def directed_information(joint: JointDistribution, interventional: InterventionalTable) -> float:
    """``I(Z_i -> Z_j) = E_{p(Z_i, Z_j)} ln p(Z_i | Z_j) / p(Z_i | do(Z_j))``.

    Raises :class:`SupportViolationError` when the divergence is infinite.
    """
    t = interventional.table
    if t.shape != joint.shape:
        raise ValueError(f"shape mismatch: joint {joint.shape} vs interventional {t.shape}")
    cond = joint.conditional_rows_given_cols()
    p = joint.table
    nz = p > 0
    bad = nz & (t <= 0)
    if bad.any():
        raise SupportViolationError(np.argwhere(bad))
    return float(np.sum(p[nz] * np.log(cond[nz] / t[nz])))


def confounding(
    joint: JointDistribution,
    forward: InterventionalTable | None = None,
    backward: InterventionalTable | None = None,
) -> float:
    """``I(Z_i -> Z_j) + I(Z_j -> Z_i)``; missing tables default to the marginal assumption.

    ``forward`` is ``p(Z_i | do(Z_j))`` with shape ``(d_i, d_j)``; ``backward`` is
    ``p(Z_j | do(Z_i))`` with shape ``(d_j, d_i)``.
    """
    jt = joint.T
    forward = forward if forward is not None else InterventionalTable.from_marginal(joint)
    backward = backward if backward is not None else InterventionalTable.from_marginal(jt)
    return directed_information(joint, forward) + directed_information(jt, backward)


def pearson_codes(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("at least two samples required")
    xc, yc = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt((xc * xc).sum()), np.sqrt((yc * yc).sum())
    if sx == 0 or sy == 0:
        raise ZeroVarianceError("zero variance")
    return float(np.clip((xc * yc).sum() / (sx * sy), -1.0, 1.0))


def pearson(dataset, zi: str, zj: str) -> float:
    """Product-moment correlation of the integer value codes."""
    return pearson_codes(dataset.column(zi), dataset.column(zj))


def joint_pearson(joint: JointDistribution) -> float:
    """Population Pearson correlation of integer codes under a joint table."""
    di, dj = joint.shape
    a, b = np.arange(di, dtype=np.float64), np.arange(dj, dtype=np.float64)
    pa, pb = joint.row_marginal, joint.col_marginal
    ma, mb = pa @ a, pb @ b
    cov = (a - ma) @ joint.table @ (b - mb)
    va, vb = pa @ (a - ma) ** 2, pb @ (b - mb) ** 2
    if va == 0 or vb == 0:
        raise ZeroVarianceError("zero variance")
    return float(cov / math.sqrt(va * vb))


# -- reports -------------------------------------------------------------------------


@dataclass
class PairReport:
    attr_i: str
    attr_j: str
    mutual_information: float
    directed_ij: float | None
    directed_ji: float | None
    confounding: float | None
    pearson: float | None
    sample_count: int
    tables: str = "marginal-assumption"
    status: str = "ok"


@dataclass
class ConfoundingReport:
    pairs: list[PairReport] = field(default_factory=list)

    def get(self, a: str, b: str) -> PairReport:
        for p in self.pairs:
            if (p.attr_i, p.attr_j) in ((a, b), (b, a)):
                return p
        raise KeyError((a, b))

    def to_json(self) -> str:
        return json.dumps({"pairs": [asdict(p) for p in self.pairs]}, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = list(PairReport.__dataclass_fields__)
        w = csv.writer(buf)
        w.writerow(cols)
        for p in self.pairs:
            w.writerow(["" if getattr(p, c) is None else getattr(p, c) for c in cols])
        return buf.getvalue()


def report(dataset, spec=None, *, n_interventional: int | None = None, seed: int = 0) -> ConfoundingReport:
    """Measure every attribute pair of ``dataset``.

    Without ``spec`` the interventional tables are the marginals (valid for the
    confounder-only graph family); with ``spec`` they are sampled from it.
    """
    out = ConfoundingReport()
    n_int = n_interventional or len(dataset)
    for a, b in combinations(dataset.schema.names, 2):
        j = empirical_joint(dataset, a, b)
        mi = mutual_information(j)
        try:
            r = pearson(dataset, a, b)
        except ZeroVarianceError:
            r = None
        if spec is None:
            fwd = InterventionalTable.from_marginal(j)
            bwd = InterventionalTable.from_marginal(j.T)
            kind = "marginal-assumption"
        else:
            fwd = InterventionalTable.sampled(spec, a, b, n_int, seed)
            bwd = InterventionalTable.sampled(spec, b, a, n_int, seed)
            kind = fwd.provenance
        try:
            dij = directed_information(j, fwd)
            dji = directed_information(j.T, bwd)
            pr = PairReport(a, b, mi, dij, dji, dij + dji, r, len(dataset), kind)
        except SupportViolationError:
            pr = PairReport(a, b, mi, None, None, None, r, len(dataset), kind, status="support-violation")
        out.pairs.append(pr)
    return out
