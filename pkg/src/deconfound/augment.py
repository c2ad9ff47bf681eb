"""Counterfactual augmentation per confounding edge.

For an edge ``C -> Z_j`` and a partner edge ``C -> Z_l`` with a confounded
value pair ``(z_j^p, z_l^q)``:

* ``T1`` = rows with ``Z_j != z_j^p`` and ``Z_l == z_l^q``
* ``T2`` = rows with ``Z_j == z_j^p`` and ``Z_l == z_l^q``
* factuals = rows with ``Z_j != z_j^p`` and ``Z_l != z_l^q``; mapping them
  with ``do(Z_j = z_j^p)`` fills the under-populated off-theme cells.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .causal import CausalSpec
from .synth import Dataset, Sample, oracle_counterfactual, oracle_counterfactual_batch


class DegenerateDomainError(ValueError):
    pass


class BalanceRequiresOracleError(ValueError):
    def __init__(self):
        super().__init__("balance requires oracle")


@dataclass(frozen=True)
class ConfoundingEdge:
    """Edge ``confounder -> target`` considered against the partner attribute.

    ``pairs`` lists confounded value pairs ``(z_j^p, z_l^q)``; empty means all
    pairs implied by the confounder's themes.
    """

    confounder: str
    target: str
    partner: str
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.target == self.partner:
            raise ValueError("target and partner must be distinct attributes")
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))


def theme_of(spec: CausalSpec, confounder: str, attr: str) -> tuple[int, ...]:
    conf = spec.confounder(confounder)
    if attr == spec.schema.label_attribute and spec.label_confounder == confounder:
        return tuple(range(conf.states))
    e = conf.edge_for(attr)
    if e is None:
        raise KeyError(f"{attr!r} is not a target of confounder {confounder!r}")
    return e.theme


def confounded_pairs(spec: CausalSpec, edge: ConfoundingEdge) -> list[tuple[int, int]]:
    if edge.pairs:
        return list(edge.pairs)
    tj = theme_of(spec, edge.confounder, edge.target)
    tl = theme_of(spec, edge.confounder, edge.partner)
    return list(dict.fromkeys(zip(tj, tl)))


def confounding_edges(spec: CausalSpec) -> list[ConfoundingEdge]:
    """Every (edge, partner) combination: partners are the label (when it is the
    confounder state) followed by the confounder's other targets."""
    out = []
    label = spec.schema.label_attribute
    for c in spec.confounders:
        partners = [label] if spec.label_confounder == c.id else []
        partners += [e.target for e in c.edges]
        for e in c.edges:
            out += [ConfoundingEdge(c.id, e.target, p) for p in partners if p != e.target]
    return out


@dataclass
class DomainPair:
    t1: np.ndarray
    t2: np.ndarray


def partition_domains(data: Dataset, zj: str, zjp: int, zl: str, zlq: int, *, allow_empty: bool = False) -> DomainPair:
    vj, vl = data.column(zj), data.column(zl)
    if not 0 <= zjp < data.schema[zj].cardinality or not 0 <= zlq < data.schema[zl].cardinality:
        raise ValueError("attribute value out of range")
    t1 = np.flatnonzero((vj != zjp) & (vl == zlq))
    t2 = np.flatnonzero((vj == zjp) & (vl == zlq))
    if not allow_empty and (len(t1) == 0 or len(t2) == 0):
        raise DegenerateDomainError(f"degenerate domain: |T1|={len(t1)}, |T2|={len(t2)}")
    return DomainPair(t1, t2)


def factual_indices(data: Dataset, zj: str, zjp: int, zl: str, zlq: int) -> np.ndarray:
    return np.flatnonzero((data.column(zj) != zjp) & (data.column(zl) != zlq))


# -- mappers -------------------------------------------------------------------------


@dataclass
class OracleMapper:
    """Counterfactuals by re-rendering with the recorded noise."""

    spec: CausalSpec
    kind: str = "oracle"

    def apply(self, sample: Sample, attr: str, value: int, source_index: int = -1) -> Sample:
        return oracle_counterfactual(sample, {attr: value}, self.spec.render, self.spec.schema, source_index)

    def apply_batch(self, data: Dataset, idx, attr: str, values) -> Dataset:
        return oracle_counterfactual_batch(data, idx, attr, values, self.spec.render)


def apply_mapper(mapper, sample: Sample, value: int, attr: str | None = None, source_index: int = -1) -> Sample:
    """Counterfactual of ``sample`` with the mapper's target attribute set to ``value``."""
    if mapper.kind == "oracle":
        if attr is None:
            raise ValueError("oracle mapper needs the intervened attribute")
        return mapper.apply(sample, attr, value, source_index)
    return mapper.apply(sample, value, source_index)


# -- counterfactual generation -------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    mode: str = "count"  # or "balance"
    count: int = 0

    @classmethod
    def parse(cls, text: str) -> "Budget":
        if text == "balance":
            return cls("balance")
        kind, _, n = text.partition(":")
        if kind != "count" or not n.isdigit():
            raise ValueError(f"budget must be 'balance' or 'count:N', got {text!r}")
        return cls("count", int(n))


def _empty_like(data: Dataset) -> Dataset:
    return data.subset(np.zeros(0, dtype=np.int64))


def _even_split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (i < extra) for i in range(parts)]


def generate_cfs(
    data: Dataset,
    edge: ConfoundingEdge,
    mapper,
    budget: Budget,
    *,
    spec: CausalSpec | None = None,
    seed: int = 0,
) -> Dataset:
    """Counterfactual rows for one (edge, partner); ``source_index`` refers to rows of ``data``."""
    rng = np.random.default_rng(seed)
    zj, zl = edge.target, edge.partner
    if budget.mode == "balance":
        if mapper.kind != "oracle":
            raise BalanceRequiresOracleError()
        return _balance_cfs(data, zj, zl, mapper, rng)
    if budget.count == 0:
        return _empty_like(data)
    if mapper.kind == "oracle":
        pairs = confounded_pairs(spec or mapper.spec, edge)
    else:
        pairs = [(mapper.target_value, mapper.partner_value)]
    parts = []
    for (zjp, zlq), n_pair in zip(pairs, _even_split(budget.count, len(pairs))):
        eligible = factual_indices(data, zj, zjp, zl, zlq)
        take = min(n_pair, len(eligible))
        if take == 0:
            continue
        idx = np.sort(rng.choice(eligible, size=take, replace=False))
        if mapper.kind == "oracle":
            parts.append(mapper.apply_batch(data, idx, zj, np.full(take, zjp)))
        else:
            parts.append(mapper.apply_batch(data, idx))
    return Dataset.concat(*parts) if parts else _empty_like(data)


def balance_deficits(data: Dataset, zj: str, zl: str) -> np.ndarray:
    """Rows needed per ``(Z_j, Z_l)`` cell to lift every cell to the largest count."""
    dj, dl = data.schema[zj].cardinality, data.schema[zl].cardinality
    counts = np.bincount(data.column(zj) * dl + data.column(zl), minlength=dj * dl).reshape(dj, dl)
    return counts.max() - counts


def _balance_cfs(data: Dataset, zj: str, zl: str, mapper, rng) -> Dataset:
    deficit = balance_deficits(data, zj, zl)
    vj, vl = data.column(zj), data.column(zl)
    src, vals = [], []
    for a, b in zip(*np.nonzero(deficit)):
        need = int(deficit[a, b])
        pool = np.flatnonzero((vl == b) & (vj != a))
        if len(pool) == 0:
            continue
        chosen = rng.choice(pool, size=need, replace=need > len(pool))
        src.append(np.sort(chosen))
        vals.append(np.full(need, a))
    if not src:
        return _empty_like(data)
    return mapper.apply_batch(data, np.concatenate(src), zj, np.concatenate(vals))


@dataclass
class AugmentedDataset:
    base: Dataset
    cfs: Dataset

    def __len__(self):
        return len(self.base) + len(self.cfs)

    @cached_property
    def combined(self) -> Dataset:
        return Dataset.concat(self.base, self.cfs) if len(self.cfs) else self.base

    @property
    def schema(self):
        return self.base.schema


def run_algorithm1(
    data: Dataset,
    spec: CausalSpec,
    mapper_kind: str = "oracle",
    budget: Budget = Budget("balance"),
    *,
    edges: list[ConfoundingEdge] | None = None,
    mappers: dict | None = None,
    seed: int = 0,
) -> AugmentedDataset:
    """Generate counterfactuals for every confounding edge and append them to ``data``.

    Edges are processed in order; each pass draws its factuals from the pool
    augmented so far, so ``source_index`` indexes the combined view.  A count
    budget is split evenly over the edges.  For learned mappers, ``mappers``
    maps ``(target, partner)`` to a trained mapper; edges without one are skipped.
    """
    edges = confounding_edges(spec) if edges is None else edges
    if mapper_kind not in ("oracle", "learned"):
        raise ValueError(f"unknown mapper kind {mapper_kind!r}")
    if mapper_kind == "learned" and budget.mode == "balance":
        raise BalanceRequiresOracleError()
    oracle = OracleMapper(spec)
    counts = _even_split(budget.count, max(len(edges), 1)) if budget.mode == "count" else [0] * len(edges)
    pool = data
    cf_parts = []
    for k, (edge, n_edge) in enumerate(zip(edges, counts)):
        if mapper_kind == "oracle":
            mapper = oracle
        else:
            mapper = (mappers or {}).get((edge.target, edge.partner))
            if mapper is None:
                continue
        b = budget if budget.mode == "balance" else Budget("count", n_edge)
        new = generate_cfs(pool, edge, mapper, b, spec=spec, seed=seed + k)
        if len(new):
            cf_parts.append(new)
            pool = Dataset.concat(pool, new)
    cfs = Dataset.concat(*cf_parts) if cf_parts else _empty_like(data)
    return AugmentedDataset(data, cfs)
