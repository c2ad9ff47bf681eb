"""Declarative causal generative process and its closed-form distributions.

A :class:`CausalSpec` describes a label ``Y``, a set of generative attributes
``Z_1..Z_n`` and a set of confounders ``C_1..C_m``.  Each confounder has a
discrete state drawn uniformly from ``{0..K-1}``; the label equals the state of
the *label confounder*, and every confounding edge ``C -> Z`` maps the state to
an attribute value through a theme table.  With probability ``p`` (the edge
strength) the attribute follows its theme, otherwise it is drawn uniformly.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

ROLES = (
    "label",
    "foreground-color",
    "background-color",
    "texture",
    "foreground-texture",
    "background-texture",
    "thickness",
)
MODES = ("joint", "independent")


class SpecValidationError(ValueError):
    """Raised when a spec violates one or more invariants.

    ``errors`` holds every human-readable violation found.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NoCommonConfounderError(ValueError):
    pass


@dataclass(frozen=True)
class Attribute:
    name: str
    cardinality: int
    role: str
    value_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.value_labels:
            object.__setattr__(
                self, "value_labels", tuple(str(v) for v in range(self.cardinality))
            )
        else:
            object.__setattr__(self, "value_labels", tuple(self.value_labels))


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @property
    def label_attribute(self) -> str:
        labels = [a.name for a in self.attributes if a.role == "label"]
        if len(labels) != 1:
            raise SpecValidationError(["schema must have exactly one label attribute"])
        return labels[0]

    def index(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise KeyError(f"unknown attribute {name!r}")

    def __getitem__(self, name: str) -> Attribute:
        return self.attributes[self.index(name)]

    def __contains__(self, name: str) -> bool:
        return any(a.name == name for a in self.attributes)

    def by_role(self, role: str) -> Attribute | None:
        for a in self.attributes:
            if a.role == role:
                return a
        return None

    @property
    def cardinalities(self) -> list[int]:
        return [a.cardinality for a in self.attributes]


@dataclass(frozen=True)
class Edge:
    """Confounding edge ``C -> target``; ``theme[c]`` is the value followed in state ``c``."""

    target: str
    theme: tuple[int, ...]
    strength: float | None = None  # per-edge override of the confounder strength

    def __post_init__(self):
        object.__setattr__(self, "theme", tuple(int(t) for t in self.theme))


@dataclass(frozen=True)
class ConfounderSpec:
    id: str
    states: int
    edges: tuple[Edge, ...]
    strength: float
    mode: str = "joint"

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))

    def edge_for(self, target: str) -> Edge | None:
        for e in self.edges:
            if e.target == target:
                return e
        return None

    def edge_strength(self, edge: Edge) -> float:
        return self.strength if edge.strength is None else edge.strength

    def follows_jointly(self, edge: Edge) -> bool:
        """True when the edge shares the confounder-wide follow flag."""
        return self.mode == "joint" and edge.strength is None


@dataclass(frozen=True)
class CausalSpec:
    schema: AttributeSchema
    confounders: tuple[ConfounderSpec, ...]
    render: Any = None  # synth.RenderParams; Any avoids an import cycle
    seed: int = 0
    label_confounder: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "confounders", tuple(self.confounders))
        if self.render is None:
            from .render import RenderParams

            object.__setattr__(self, "render", RenderParams())

    def confounder(self, cid: str) -> ConfounderSpec:
        for c in self.confounders:
            if c.id == cid:
                return c
        raise KeyError(f"unknown confounder {cid!r}")

    def unconfounded(self) -> "CausalSpec":
        """Copy of the spec with every confounding strength forced to zero."""
        confs = tuple(
            replace(
                c,
                strength=0.0,
                edges=tuple(replace(e, strength=None if e.strength is None else 0.0) for e in c.edges),
            )
            for c in self.confounders
        )
        return replace(self, confounders=confs)

    def with_strength(self, p: float) -> "CausalSpec":
        """Copy with every non-overridden confounder strength set to ``p``."""
        return replace(self, confounders=tuple(replace(c, strength=float(p)) for c in self.confounders))

    # -- serialization -------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema": {
                "attributes": [
                    {
                        "name": a.name,
                        "cardinality": a.cardinality,
                        "role": a.role,
                        "value_labels": list(a.value_labels),
                    }
                    for a in self.schema.attributes
                ]
            },
            "confounders": [
                {
                    "id": c.id,
                    "states": c.states,
                    "strength": c.strength,
                    "mode": c.mode,
                    "edges": [
                        {"target": e.target, "theme": list(e.theme), "strength": e.strength}
                        for e in c.edges
                    ],
                }
                for c in self.confounders
            ],
            "label_confounder": self.label_confounder,
            "seed": int(self.seed),
            "render": self.render.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CausalSpec":
        from .render import RenderParams

        schema = AttributeSchema(
            tuple(
                Attribute(a["name"], int(a["cardinality"]), a["role"], tuple(a.get("value_labels", ())))
                for a in d["schema"]["attributes"]
            )
        )
        confs = tuple(
            ConfounderSpec(
                id=c["id"],
                states=int(c["states"]),
                strength=float(c["strength"]),
                mode=c.get("mode", "joint"),
                edges=tuple(
                    Edge(e["target"], tuple(e["theme"]), e.get("strength"))
                    for e in c.get("edges", [])
                ),
            )
            for c in d.get("confounders", [])
        )
        render = RenderParams.from_dict(d["render"]) if d.get("render") else None
        return cls(
            schema=schema,
            confounders=confs,
            render=render,
            seed=int(d.get("seed", 0)),
            label_confounder=d.get("label_confounder"),
        )

    def canonical_json(self) -> bytes:
        return canonical_json(self.to_dict())

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json()).hexdigest()


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def load_spec(path) -> CausalSpec:
    with open(path, "rb") as fh:
        return CausalSpec.from_dict(json.loads(fh.read()))


def save_spec(spec: CausalSpec, path) -> str:
    """Write the canonical JSON form and return the spec hash."""
    with open(path, "wb") as fh:
        fh.write(spec.canonical_json())
    return spec.hash


# -- validation ----------------------------------------------------------------------


def spec_violations(spec: CausalSpec) -> list[str]:
    errors: list[str] = []
    attrs = spec.schema.attributes
    names = [a.name for a in attrs]
    seen = set()
    for n in names:
        if n in seen:
            errors.append(f"duplicate attribute name {n!r}")
        seen.add(n)
    for a in attrs:
        if a.role not in ROLES:
            errors.append(f"attribute {a.name!r}: unknown role {a.role!r}")
        if a.cardinality < 2:
            errors.append(f"attribute {a.name!r}: cardinality {a.cardinality} < 2")
        if len(a.value_labels) != a.cardinality:
            errors.append(f"attribute {a.name!r}: {len(a.value_labels)} value labels for cardinality {a.cardinality}")
    labels = [a.name for a in attrs if a.role == "label"]
    if len(labels) != 1:
        errors.append(f"exactly one label attribute required, found {len(labels)}")
    label = labels[0] if len(labels) == 1 else None
    card = {a.name: a.cardinality for a in attrs}

    cids = set()
    for c in spec.confounders:
        if c.id in cids:
            errors.append(f"duplicate confounder id {c.id!r}")
        cids.add(c.id)
        if c.states < 2:
            errors.append(f"confounder {c.id!r}: state count {c.states} < 2")
        if c.mode not in MODES:
            errors.append(f"confounder {c.id!r}: unknown mode {c.mode!r}")
        if not 0.0 <= c.strength <= 1.0:
            errors.append(f"confounder {c.id!r}: strength outside [0,1] ({c.strength})")
        targets = set()
        for e in c.edges:
            if e.target not in card:
                errors.append(f"confounder {c.id!r}: edge target {e.target!r} not in schema")
                continue
            if e.target in targets:
                errors.append(f"confounder {c.id!r}: duplicate edge to {e.target!r}")
            targets.add(e.target)
            if e.target == label and spec.label_confounder is not None:
                errors.append(
                    f"confounder {c.id!r}: edge targets the label {label!r}, which equals the confounder state"
                )
            if len(e.theme) != c.states or any(not 0 <= t < card[e.target] for t in e.theme):
                errors.append(f"confounder {c.id!r}: theme table not total for edge to {e.target!r}")
            if e.strength is not None and not 0.0 <= e.strength <= 1.0:
                errors.append(f"confounder {c.id!r}: edge to {e.target!r} strength outside [0,1] ({e.strength})")

    if spec.label_confounder is not None:
        if spec.label_confounder not in cids:
            errors.append(f"label confounder {spec.label_confounder!r} not defined")
        elif label is not None:
            k = spec.confounder(spec.label_confounder).states
            if k != card[label]:
                errors.append(f"label confounder has {k} states but label cardinality is {card[label]}")
    if not 0 <= int(spec.seed) < 2**64:
        errors.append("seed must be a 64-bit unsigned integer")
    errors.extend(spec.render.violations(spec.schema))
    return errors


def validate_spec(spec: CausalSpec) -> CausalSpec:
    """Return ``spec`` unchanged, or raise :class:`SpecValidationError` listing every violation."""
    errors = spec_violations(spec)
    if errors:
        raise SpecValidationError(errors)
    return spec


# -- closed-form distributions ------------------------------------------------------


def _role_in_pair(spec: CausalSpec, attr: str):
    """Resolve ``attr`` to ``(confounder, edge)``; the label resolves to ``(label_confounder, None)``."""
    label = spec.schema.label_attribute
    out = []
    if attr == label and spec.label_confounder is not None:
        out.append((spec.confounder(spec.label_confounder), None))
    for c in spec.confounders:
        e = c.edge_for(attr)
        if e is not None:
            out.append((c, e))
    return out


def analytic_joint(spec: CausalSpec, pair: tuple[str, str]):
    """Exact observational joint ``P(Z_i, Z_j)`` for two attributes sharing a confounder.

    Rows index ``pair[0]`` values and columns ``pair[1]`` values.
    """
    from .metrics import JointDistribution

    a, b = pair
    for name in pair:
        if name not in spec.schema:
            raise KeyError(f"unknown attribute {name!r}")
    ra, rb = _role_in_pair(spec, a), _role_in_pair(spec, b)
    common = [(ca, ea, eb) for ca, ea in ra for cb, eb in rb if ca.id == cb.id]
    if not common or a == b:
        raise NoCommonConfounderError(f"no common confounder for {a!r} and {b!r}")
    if len(ra) > 1 or len(rb) > 1:
        raise NoCommonConfounderError("analytic joint supports one confounder per attribute")
    conf, ea, eb = common[0]
    da, db = spec.schema[a].cardinality, spec.schema[b].cardinality
    k = conf.states

    def conditional(edge, d):
        # P(value | C = c, follow) and P(value | C = c, no follow) as (K, d) tables
        if edge is None:
            onehot = np.eye(d)[:k]
            return onehot, onehot
        onehot = np.zeros((k, d))
        onehot[np.arange(k), edge.theme] = 1.0
        return onehot, np.full((k, d), 1.0 / d)

    fa, ua = conditional(ea, da)
    fb, ub = conditional(eb, db)
    sa = 1.0 if ea is None else conf.edge_strength(ea)
    sb = 1.0 if eb is None else conf.edge_strength(eb)
    shared = ea is not None and eb is not None and conf.follows_jointly(ea) and conf.follows_jointly(eb)

    table = np.zeros((da, db))
    for c in range(k):
        if shared:
            p = conf.strength
            block = p * np.outer(fa[c], fb[c]) + (1 - p) * np.outer(ua[c], ub[c])
        else:
            pa = sa * fa[c] + (1 - sa) * ua[c]
            pb = sb * fb[c] + (1 - sb) * ub[c]
            block = np.outer(pa, pb)
        table += block / k
    return JointDistribution(table, sample_count=0)


def analytic_confounding(spec: CausalSpec, pair: tuple[str, str]) -> float:
    """Closed-form confounding between the pair, in nats (twice their mutual information)."""
    from .metrics import mutual_information

    return 2.0 * mutual_information(analytic_joint(spec, pair))
