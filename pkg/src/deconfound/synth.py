"""Observational / interventional sampling and the dataset container.

Randomness layout: every sample consumes a fixed-width block of uniform draws
from one PCG64 stream, so sample ``i`` depends only on ``(seed, i)``.  Chunks
of a dataset can be generated independently (``start=``) and are
bit-identical to the serial result.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .causal import CausalSpec, validate_spec
from .render import RenderNoise, RenderParams, render, render_batch

FORMAT_VERSION = 1
SPLITS = ("train", "test")
ORIGIN_COLUMNS = ("source_index", "intervened_attribute", "mapper_kind")
_SPLIT_CODE = {"train": 0, "test": 1, "probe": 2, "interventional": 3}


def _block_width(spec: CausalSpec) -> int:
    m, a = len(spec.confounders), len(spec.schema.attributes)
    # states, joint flags, per-(confounder, attribute) flags, fallbacks, 4 noise slots
    return m + m + m * a + a + 4


def stream_seed(seed: int, split: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & (2**64 - 1), _SPLIT_CODE[split]])


def _uniforms(spec: CausalSpec, n: int, seed_seq: np.random.SeedSequence, start: int) -> np.ndarray:
    width = _block_width(spec)
    bitgen = np.random.PCG64(seed_seq)
    if start:
        bitgen.advance(start * width)
    return np.random.Generator(bitgen).random((n, width))


def _categorical(u: np.ndarray, d: int) -> np.ndarray:
    return np.minimum((u * d).astype(np.int64), d - 1)


def sample_assignments(
    spec: CausalSpec,
    n: int,
    seed_seq: np.random.SeedSequence | int | None = None,
    *,
    start: int = 0,
    do: Mapping[str, int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` attribute assignments and their render noise.

    Returns ``(attrs, noise)`` with shapes ``(n, A)`` and ``(n, 4)``.  ``do``
    cuts the mechanism of each named attribute and forces its value; all other
    mechanisms (including the confounder states) are left untouched.
    """
    if seed_seq is None:
        seed_seq = stream_seed(spec.seed, "train")
    elif isinstance(seed_seq, (int, np.integer)):
        seed_seq = np.random.SeedSequence(int(seed_seq))
    do = dict(do or {})
    schema = spec.schema
    for name, value in do.items():
        if name not in schema:
            raise KeyError(f"unknown attribute {name!r}")
        if not 0 <= int(value) < schema[name].cardinality:
            raise ValueError(f"value {value} out of range for {name!r}")

    u = _uniforms(spec, n, seed_seq, start)
    m, a_count = len(spec.confounders), len(schema.attributes)
    states = {c.id: _categorical(u[:, i], c.states) for i, c in enumerate(spec.confounders)}
    joint_flag = {c.id: u[:, m + i] for i, c in enumerate(spec.confounders)}
    flag_base, fallback_base = 2 * m, 2 * m + m * a_count
    noise_base = fallback_base + a_count

    label = schema.label_attribute
    attrs = np.empty((n, a_count), dtype=np.int64)
    for ai, attr in enumerate(schema.attributes):
        if attr.name in do:
            attrs[:, ai] = int(do[attr.name])
            continue
        if attr.name == label and spec.label_confounder is not None:
            attrs[:, ai] = states[spec.label_confounder]
            continue
        value = _categorical(u[:, fallback_base + ai], attr.cardinality)
        assigned = np.zeros(n, dtype=bool)
        for ci, c in enumerate(spec.confounders):
            edge = c.edge_for(attr.name)
            if edge is None:
                continue
            if c.follows_jointly(edge):
                follow = joint_flag[c.id] < c.strength
            else:
                follow = u[:, flag_base + ci * a_count + ai] < c.edge_strength(edge)
            follow &= ~assigned
            theme = np.asarray(edge.theme, dtype=np.int64)
            value = np.where(follow, theme[states[c.id]], value)
            assigned |= follow
        attrs[:, ai] = value

    rp = spec.render
    j = rp.jitter
    noise = np.empty((n, 4), dtype=np.int64)
    noise[:, 0] = _categorical(u[:, noise_base], 2 * j + 1) - j
    noise[:, 1] = _categorical(u[:, noise_base + 1], 2 * j + 1) - j
    noise[:, 2] = _categorical(u[:, noise_base + 2], rp.texture_period)
    noise[:, 3] = (u[:, noise_base + 3] * 2.0**53).astype(np.int64)
    return attrs, noise


def _as_dicts(spec, attrs, noise):
    names = spec.schema.names
    a = dict(zip(names, (int(v) for v in attrs)))
    return a, RenderNoise(*(int(v) for v in noise))


def sample_assignment(spec: CausalSpec, seed_seq=None, index: int = 0) -> tuple[dict, RenderNoise]:
    """Single observational draw: sample ``index`` of the stream."""
    attrs, noise = sample_assignments(spec, 1, seed_seq, start=index)
    return _as_dicts(spec, attrs[0], noise[0])


def interventional_sample(spec: CausalSpec, do: Mapping[str, int], seed_seq=None, index: int = 0):
    """Single draw from ``p(. | do(...))``."""
    attrs, noise = sample_assignments(spec, 1, seed_seq, start=index, do=do)
    return _as_dicts(spec, attrs[0], noise[0])


# -- samples and datasets ------------------------------------------------------------


@dataclass(frozen=True)
class Origin:
    kind: str = "observational"  # or "counterfactual"
    source_index: int = -1
    intervened_attribute: str = ""
    mapper_kind: str = ""


@dataclass
class Sample:
    image: np.ndarray
    assignment: dict
    noise: RenderNoise
    origin: Origin = field(default_factory=Origin)


class Dataset:
    """Column-oriented collection of rendered samples.

    ``images`` is ``(N, H, H, 3)`` uint8; ``attrs`` is ``(N, A)`` integer codes in
    schema order; ``noise`` is ``(N, 4)`` = ``dx, dy, phase, draw_seed``.
    Counterfactual rows carry origin columns (``source_index >= 0``).
    """

    def __init__(
        self,
        schema,
        images,
        attrs,
        noise,
        *,
        split="train",
        spec_hash="",
        seed=0,
        source_index=None,
        intervened_attribute=None,
        mapper_kind=None,
    ):
        self.schema = schema
        self.images = np.ascontiguousarray(images, dtype=np.uint8)
        self.attrs = np.asarray(attrs, dtype=np.int64).reshape(len(self.images), len(schema.attributes))
        self.noise = np.asarray(noise, dtype=np.int64).reshape(len(self.images), 4)
        n = len(self.images)
        self.split = split
        self.spec_hash = spec_hash
        self.seed = int(seed)
        self.source_index = (
            np.full(n, -1, dtype=np.int64) if source_index is None else np.asarray(source_index, dtype=np.int64)
        )
        self.intervened_attribute = (
            np.array([""] * n, dtype=object) if intervened_attribute is None else np.asarray(intervened_attribute, dtype=object)
        )
        self.mapper_kind = np.array([""] * n, dtype=object) if mapper_kind is None else np.asarray(mapper_kind, dtype=object)

    def __len__(self) -> int:
        return len(self.images)

    def column(self, name: str) -> np.ndarray:
        return self.attrs[:, self.schema.index(name)]

    @property
    def has_origin(self) -> bool:
        return bool((self.source_index >= 0).any())

    def __getitem__(self, i: int) -> Sample:
        i = int(i)
        origin = Origin()
        if self.source_index[i] >= 0:
            origin = Origin(
                "counterfactual",
                int(self.source_index[i]),
                str(self.intervened_attribute[i]),
                str(self.mapper_kind[i]),
            )
        return Sample(
            image=self.images[i],
            assignment=dict(zip(self.schema.names, (int(v) for v in self.attrs[i]))),
            noise=RenderNoise(*(int(v) for v in self.noise[i])),
            origin=origin,
        )

    @property
    def samples(self) -> list[Sample]:
        return [self[i] for i in range(len(self))]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.schema,
            self.images[idx],
            self.attrs[idx],
            self.noise[idx],
            split=self.split,
            spec_hash=self.spec_hash,
            seed=self.seed,
            source_index=self.source_index[idx],
            intervened_attribute=self.intervened_attribute[idx],
            mapper_kind=self.mapper_kind[idx],
        )

    @classmethod
    def concat(cls, first: "Dataset", *rest: "Dataset") -> "Dataset":
        parts = tuple(p for p in (first,) + rest if len(p)) or (first,)
        for p in rest:
            if p.schema != first.schema:
                raise ValueError("datasets do not share a schema")
        return cls(
            first.schema,
            np.concatenate([p.images for p in parts]),
            np.concatenate([p.attrs for p in parts]),
            np.concatenate([p.noise for p in parts]),
            split=first.split,
            spec_hash=first.spec_hash,
            seed=first.seed,
            source_index=np.concatenate([p.source_index for p in parts]),
            intervened_attribute=np.concatenate([p.intervened_attribute for p in parts]),
            mapper_kind=np.concatenate([p.mapper_kind for p in parts]),
        )


def synth_dataset(
    spec: CausalSpec,
    n: int,
    split: str = "train",
    seed: int | None = None,
    *,
    workers: int = 1,
    chunk: int = 8192,
) -> Dataset:
    """Sample and render ``n`` samples.

    The ``test`` split uses the same spec with every strength forced to zero.
    ``workers > 1`` renders chunks concurrently; output is identical to serial.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if split not in SPLITS and split not in _SPLIT_CODE:
        raise ValueError(f"unknown split {split!r}")
    validate_spec(spec)
    seed = spec.seed if seed is None else int(seed)
    gen_spec = spec if split == "train" else spec.unconfounded()
    seq = stream_seed(seed, split)

    def make(start):
        m = min(chunk, n - start)
        attrs, noise = sample_assignments(gen_spec, m, seq, start=start)
        return attrs, noise, render_batch(spec.schema, attrs, noise, spec.render)

    starts = list(range(0, n, chunk))
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(make, starts))
    else:
        parts = [make(s) for s in starts]
    return Dataset(
        spec.schema,
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        split=split,
        spec_hash=spec.hash,
        seed=seed,
    )


def oracle_counterfactual(
    sample: Sample, do: Mapping[str, int], params: RenderParams, schema, source_index: int = -1
) -> Sample:
    """Abduction (read the recorded noise), action (set the value), prediction (re-render)."""
    if len(do) != 1:
        raise ValueError("exactly one intervened attribute expected")
    (attr, value), = do.items()
    if attr not in schema:
        raise KeyError(f"unknown attribute {attr!r}")
    if not 0 <= int(value) < schema[attr].cardinality:
        raise ValueError(f"value {value} out of range for {attr!r}")
    assignment = dict(sample.assignment)
    assignment[attr] = int(value)
    image = render(schema, assignment, sample.noise, params)
    return Sample(
        image=image,
        assignment=assignment,
        noise=sample.noise,
        origin=Origin("counterfactual", int(source_index), attr, "oracle"),
    )


def oracle_counterfactual_batch(
    data: Dataset, idx: np.ndarray, attr: str, values: np.ndarray, params: RenderParams
) -> Dataset:
    """Vectorized oracle counterfactuals for rows ``idx`` of ``data`` with ``attr := values``."""
    idx = np.asarray(idx, dtype=np.int64)
    attrs = data.attrs[idx].copy()
    attrs[:, data.schema.index(attr)] = np.asarray(values, dtype=np.int64)
    noise = data.noise[idx]
    images = render_batch(data.schema, attrs, noise, params)
    n = len(idx)
    return Dataset(
        data.schema,
        images,
        attrs,
        noise,
        split=data.split,
        spec_hash=data.spec_hash,
        seed=data.seed,
        source_index=idx,
        intervened_attribute=np.array([attr] * n, dtype=object),
        mapper_kind=np.array(["oracle"] * n, dtype=object),
    )


# -- container I/O ------------------------------------------------------------------


def _schema_to_json(schema) -> list[dict]:
    return [
        {"name": a.name, "cardinality": a.cardinality, "role": a.role, "value_labels": list(a.value_labels)}
        for a in schema.attributes
    ]


def _schema_from_json(items):
    from .causal import Attribute, AttributeSchema

    return AttributeSchema(
        tuple(Attribute(a["name"], int(a["cardinality"]), a["role"], tuple(a["value_labels"])) for a in items)
    )


def write_dataset(data: Dataset, path, *, with_origin: bool | None = None) -> Path:
    """Write ``manifest.json``, ``images.bin``, ``attrs.csv`` and ``noise.csv`` under ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if with_origin is None:
        with_origin = data.has_origin
    size = data.images.shape[1] if len(data) else 0
    manifest = {
        "format_version": FORMAT_VERSION,
        "schema": _schema_to_json(data.schema),
        "split": data.split,
        "n": len(data),
        "image_size": int(size),
        "spec_hash": data.spec_hash,
        "seed": data.seed,
        "has_origin": bool(with_origin),
    }
    with open(path / "images.bin", "wb") as fh:
        fh.write(np.ascontiguousarray(data.images, dtype=np.uint8).tobytes())
    with open(path / "attrs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        header = list(data.schema.names) + (list(ORIGIN_COLUMNS) if with_origin else [])
        w.writerow(header)
        for i in range(len(data)):
            row = [int(v) for v in data.attrs[i]]
            if with_origin:
                row += [int(data.source_index[i]), data.intervened_attribute[i], data.mapper_kind[i]]
            w.writerow(row)
    with open(path / "noise.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dx", "dy", "phase", "draw_seed"])
        w.writerows(data.noise.tolist())
    with open(path / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def read_dataset(path) -> Dataset:
    path = Path(path)
    with open(path / "manifest.json") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported dataset format version {manifest.get('format_version')}")
    schema = _schema_from_json(manifest["schema"])
    n, h = manifest["n"], manifest["image_size"]
    images = np.fromfile(path / "images.bin", dtype=np.uint8)
    if images.size != n * h * h * 3:
        raise ValueError("images.bin size does not match manifest")
    images = images.reshape(n, h, h, 3)
    a = len(schema.attributes)
    with open(path / "attrs.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    header, rows = rows[0], rows[1:]
    if header[:a] != schema.names:
        raise ValueError("attrs.csv header does not match schema")
    attrs = np.array([[int(v) for v in r[:a]] for r in rows], dtype=np.int64).reshape(n, a)
    src = inter = kind = None
    if header[a:] == list(ORIGIN_COLUMNS):
        src = np.array([int(r[a]) for r in rows], dtype=np.int64)
        inter = np.array([r[a + 1] for r in rows], dtype=object)
        kind = np.array([r[a + 2] for r in rows], dtype=object)
    noise = np.loadtxt(path / "noise.csv", delimiter=",", skiprows=1, dtype=np.int64, ndmin=2).reshape(n, 4)
    return Dataset(
        schema,
        images,
        attrs,
        noise,
        split=manifest["split"],
        spec_hash=manifest["spec_hash"],
        seed=manifest["seed"],
        source_index=src,
        intervened_attribute=inter,
        mapper_kind=kind,
    )
