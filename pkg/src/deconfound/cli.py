"""Command-line interface.

Every command writes one run manifest next to its primary output: inside the
output directory as ``run_manifest.json``, or as ``<file>.run.json`` for file
outputs.  Relative output paths resolve under ``$DECONFOUND_OUT`` when set.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .augment import Budget, confounding_edges, run_algorithm1
from .causal import SpecValidationError, load_spec, save_spec, spec_violations
from .classify import Classifier, ClassifierConfig, evaluate, train_aug, train_erm
from .experiments import DEFAULT_GRID, curve_csv, e2e, table3
from .mapper import LearnedMapper, MapperConfig, Probe, ProbeConfig, pretrain_probes, train_mapper
from .metrics import report
from .presets import PRESETS, preset
from .svg import curve_svg, plot_svg
from .synth import Dataset, read_dataset, synth_dataset, write_dataset

OUT_ENV = "DECONFOUND_OUT"
log = logging.getLogger("deconfound")


class CommandError(Exception):
    pass


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def out_path(p: str) -> Path:
    path = Path(p)
    root = os.environ.get(OUT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def hash_path(path: Path) -> str:
    """SHA-256 of a file, or of a directory's files in sorted order (manifests excluded)."""
    h = hashlib.sha256()
    if path.is_dir():
        for f in sorted(path.rglob("*")):
            if f.is_file() and f.name != "run_manifest.json":
                h.update(f.relative_to(path).as_posix().encode())
                h.update(f.read_bytes())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def write_manifest(args, outputs: list[Path], inputs: list[Path], started: float, extra: dict | None = None):
    if outputs:
        primary = outputs[0]
        target = primary / "run_manifest.json" if primary.is_dir() else primary.with_name(primary.name + ".run.json")
    else:
        target = inputs[0].with_name(f"{inputs[0].name}.{args.command}.run.json")
    config = {k: v for k, v in vars(args).items() if k not in ("func",) and not callable(v)}
    manifest = {
        "command": args.command + (f" {args.action}" if getattr(args, "action", None) else ""),
        "config": config,
        "inputs": {str(p): hash_path(p) for p in inputs},
        "outputs": {str(p): hash_path(p) for p in outputs},
        "seed": getattr(args, "seed", None),
        "wall_time_s": round(time.time() - started, 3),
        "tool_version": tool_version(),
        **(extra or {}),
    }
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    return target


def _read_data(p) -> Dataset:
    path = Path(p)
    if not (path / "manifest.json").is_file():
        raise CommandError(f"{path} is not a dataset container")
    return read_dataset(path)


def _parse_filter(text: str) -> dict[str, tuple[str, int]]:
    """``"color!=0,digit=0"`` -> ``{"color": ("!=", 0), "digit": ("=", 0)}``."""
    out = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        op = "!=" if "!=" in part else "="
        name, _, value = part.partition(op)
        if not name or not value.strip().lstrip("-").isdigit():
            raise CommandError(f"bad filter clause {part!r}")
        out[name.strip()] = (op, int(value))
    return out


def _budget(text: str) -> Budget:
    try:
        return Budget.parse(text)
    except ValueError as e:
        raise CommandError(str(e)) from None


# -- commands ------------------------------------------------------------------------


def cmd_spec(args):
    if args.action == "init":
        spec = preset(args.preset, d=args.d, p=args.p, seed=args.seed or 0, size=args.size)
        out = out_path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        digest = save_spec(spec, out)
        print(digest)
        return [out], []
    path = Path(args.spec)
    try:
        spec = load_spec(path)
    except (KeyError, TypeError, ValueError) as e:
        raise CommandError(f"malformed spec: {e}") from None
    errors = spec_violations(spec)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        raise SpecValidationError(errors)
    print(f"ok {spec.hash}")
    return [], [path]


def cmd_synth(args):
    spec = load_spec(args.spec)
    data = synth_dataset(spec, args.n, args.split, seed=args.seed, workers=args.threads)
    out = write_dataset(data, out_path(args.out))
    print(f"wrote {len(data)} {args.split} samples to {out}")
    return [out], [Path(args.spec)]


def cmd_measure(args):
    data = _read_data(args.data)
    spec = load_spec(args.spec) if args.spec else None
    rep = report(data, spec, n_interventional=args.n_interventional, seed=args.seed or 0)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rep.to_json() if out.suffix == ".json" else rep.to_csv())
    outputs = [out]
    if args.svg:
        pts = [(p.pearson, p.confounding) for p in rep.pairs if p.pearson is not None and p.confounding is not None]
        svg = out_path(args.svg)
        svg.write_text(
            plot_svg({"pairs": ([abs(a) for a, _ in pts], [b for _, b in pts])}, title="Attribute pairs",
                     xlabel="|Pearson r|", ylabel="confounding (nats)")
        )
        outputs.append(svg)
    for p in rep.pairs:
        c = "n/a" if p.confounding is None else f"{p.confounding:.4f}"
        print(f"{p.attr_i}-{p.attr_j}: confounding {c} nats, MI {p.mutual_information:.4f}")
    return outputs, [Path(args.data)] + ([Path(args.spec)] if args.spec else [])


def cmd_table3(args):
    grid = [float(g) for g in args.grid.split(",")]
    rows = table3(args.d, grid, args.n, args.seed or 0)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(curve_csv(rows))
    outputs = [out]
    if args.svg:
        svg = out_path(args.svg)
        svg.write_text(curve_svg(rows))
        outputs.append(svg)
    sys.stdout.write(curve_csv(rows))
    return outputs, []


def cmd_probes(args):
    data = _read_data(args.data)
    if args.attr not in data.schema:
        raise CommandError(f"unknown attribute {args.attr!r}")
    cfg = ProbeConfig(steps=args.steps, seed=args.seed or 0, dim=args.dim)
    probe = pretrain_probes(data, args.attr, cfg)
    out = probe.save(out_path(args.out))
    print(f"probe for {args.attr}: nearest-centroid accuracy {probe.accuracy:.3f}")
    return [out], [Path(args.data)]


def _domain_roles(t1: dict, t2: dict):
    """Infer (target, z_j^p, partner, z_l^q) from T1/T2 filters."""
    targets = [a for a, (op, _) in t1.items() if op == "!="]
    if len(targets) != 1 or targets[0] not in t2 or t2[targets[0]][0] != "=" or t1[targets[0]][1] != t2[targets[0]][1]:
        raise CommandError("--t1 needs exactly one 'attr!=v' clause matched by 'attr=v' in --t2")
    target = targets[0]
    partners = [a for a, (op, v) in t1.items() if op == "=" and t2.get(a) == ("=", v)]
    if len(partners) != 1:
        raise CommandError("--t1 and --t2 must share exactly one 'attr=v' clause for the partner attribute")
    return target, t2[target][1], partners[0], t1[partners[0]][1]


def cmd_mapper(args):
    from .augment import partition_domains

    data = _read_data(args.data)
    target, zjp, partner, zlq = _domain_roles(_parse_filter(args.t1), _parse_filter(args.t2))
    l1, l2 = (Probe.load(p) for p in args.probes.split(","))
    if (l1.attribute, l2.attribute) != (target, partner):
        raise CommandError(f"--probes must embed ({target}, {partner}), got ({l1.attribute}, {l2.attribute})")
    dp = partition_domains(data, target, zjp, partner, zlq)
    cfg = MapperConfig(
        steps=args.steps, batch_size=args.batch_size, alpha=args.alpha, seed=args.seed or 0,
        literal_push=args.literal_push, log_every=args.log_every, dump_dir=str(out_path(args.out)) + ".diverged",
    )
    mapper = train_mapper(
        data.subset(dp.t1), data.subset(dp.t2), (l1, l2), cfg,
        target_attr=target, target_value=zjp, partner_attr=partner, partner_value=zlq,
    )
    out = mapper.save(out_path(args.out))
    print(f"trained mapper {target}:={zjp} | {partner}={zlq} on |T1|={len(dp.t1)}, |T2|={len(dp.t2)}")
    inputs = [Path(args.data)] + [Path(p) for p in args.probes.split(",")]
    return [out], inputs, {"nondeterministic": "learned-mapper training is exempt from output-hash reproducibility"}


def cmd_augment(args):
    data = _read_data(args.data)
    spec = load_spec(args.spec)
    edges = confounding_edges(spec)
    if args.edge:
        cid, _, target = args.edge.partition(":")
        edges = [e for e in edges if e.confounder == cid and e.target == target]
        if not edges:
            raise CommandError(f"{args.edge!r} is not a confounding edge of the spec")
    budget = _budget(args.budget)
    if args.mapper == "oracle":
        aug = run_algorithm1(data, spec, "oracle", budget, edges=edges, seed=args.seed or 0)
    else:
        mappers = {}
        for p in args.mapper.split(","):
            m = LearnedMapper.load(p)
            mappers[(m.target_attr, m.partner_attr)] = m
        edges = [e for e in edges if (e.target, e.partner) in mappers]
        if not edges:
            raise CommandError("no confounding edge matches the supplied mapper checkpoints")
        aug = run_algorithm1(data, spec, "learned", budget, edges=edges, mappers=mappers, seed=args.seed or 0)
    out = write_dataset(aug.cfs, out_path(args.out), with_origin=True)
    print(f"generated {len(aug.cfs)} counterfactuals ({len(aug)} samples in the augmented set)")
    inputs = [Path(args.data), Path(args.spec)] + ([] if args.mapper == "oracle" else [Path(p) for p in args.mapper.split(",")])
    return [out], inputs


def cmd_train(args):
    data = _read_data(args.data)
    cfg = ClassifierConfig(epochs=args.epochs, batch_size=args.batch_size, lam=args.lam, seed=args.seed or 0)
    if args.aug:
        from .augment import AugmentedDataset

        model = train_aug(AugmentedDataset(data, _read_data(args.aug)), cfg)
    else:
        model = train_erm(data, cfg)
    out = model.save(out_path(args.out))
    print(f"trained on {model.provenance['n_train']} samples; final batch loss {model.history[-1]:.4f}" if model.history else "no steps")
    return [out], [Path(args.data)] + ([Path(args.aug)] if args.aug else [])


def cmd_eval(args):
    model = Classifier.load(args.model)
    test = _read_data(args.test)
    rep = evaluate(model, test)
    out = out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rep.to_csv() if out.suffix == ".csv" else rep.to_json())
    print(f"accuracy {rep.accuracy:.4f} on {rep.n} samples")
    return [out], [Path(args.model), Path(args.test)]


def cmd_e2e(args):
    seeds = [int(s) for s in args.seeds.split(",")]
    res = e2e(
        args.preset, args.p, d=args.d, n_train=args.n, n_test=args.n_test, budget=_budget(args.budget), seeds=seeds,
        data_seed=args.seed or 0, epochs=args.epochs, lam=args.lam,
        progress=lambda s, a, b: log.info("seed %d: ERM %.4f, CONIC %.4f", s, a, b),
    )
    out = out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(res.summary())
    (out / "result.json").write_text(json.dumps(res.to_dict(), indent=2))
    sys.stdout.write(res.summary())
    return [out], []


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for all randomness")
    common.add_argument("--threads", type=int, default=1, help="maximum worker count")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="deconfound", description="Confounded data synthesis, measurement and counterfactual augmentation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spec", parents=[common], help="emit or validate a causal spec")
    s.add_argument("action", choices=["init", "validate"])
    s.add_argument("spec", nargs="?", help="spec file to validate")
    s.add_argument("--preset", choices=PRESETS, default="cm")
    s.add_argument("--d", type=int, default=10)
    s.add_argument("--p", type=float, default=0.95)
    s.add_argument("--size", type=int, default=16)
    s.add_argument("--out", default="spec.json")
    s.set_defaults(func=cmd_spec)

    s = sub.add_parser("synth", parents=[common], help="sample and render a dataset")
    s.add_argument("--spec", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--split", choices=["train", "test"], default="train")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("measure", parents=[common], help="confounding report over all attribute pairs")
    s.add_argument("--data", required=True)
    s.add_argument("--spec")
    s.add_argument("--n-interventional", type=int, default=None)
    s.add_argument("--out", required=True, help="report.csv or report.json")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("table3", parents=[common], help="correlation vs confounding curve")
    s.add_argument("--d", type=int, default=10)
    s.add_argument("--grid", default=",".join(str(g) for g in DEFAULT_GRID))
    s.add_argument("--n", type=int, default=60000)
    s.add_argument("--out", default="table3.csv")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_table3)

    s = sub.add_parser("probes", parents=[common], help="pretrain a frozen attribute probe")
    s.add_argument("--data", required=True)
    s.add_argument("--attr", required=True)
    s.add_argument("--steps", type=int, default=ProbeConfig.steps)
    s.add_argument("--dim", type=int, default=ProbeConfig.dim)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_probes)

    s = sub.add_parser("mapper", parents=[common], help="train a learned counterfactual mapper")
    s.add_argument("--data", required=True)
    s.add_argument("--t1", required=True, help='e.g. "color!=0,digit=0"')
    s.add_argument("--t2", required=True, help='e.g. "color=0,digit=0"')
    s.add_argument("--probes", required=True, help="L1.ckpt,L2.ckpt (target probe first)")
    s.add_argument("--alpha", type=float, default=MapperConfig.alpha)
    s.add_argument("--steps", type=int, default=MapperConfig.steps)
    s.add_argument("--batch-size", type=int, default=MapperConfig.batch_size)
    s.add_argument("--literal-push", action="store_true", help="unbounded -D^2 form of the target-probe term")
    s.add_argument("--log-every", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mapper)

    s = sub.add_parser("augment", parents=[common], help="generate counterfactuals for every confounding edge")
    s.add_argument("--data", required=True)
    s.add_argument("--spec", required=True)
    s.add_argument("--edge", help="confounder:target, default all confounding edges")
    s.add_argument("--mapper", default="oracle", help="'oracle' or comma-separated mapper checkpoints")
    s.add_argument("--budget", default="balance", help="balance or count:N")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("train", parents=[common], help="train a classifier")
    s.add_argument("--data", required=True)
    s.add_argument("--aug", help="counterfactual container from 'augment'")
    s.add_argument("--lambda", dest="lam", type=float, default=0.5)
    s.add_argument("--epochs", type=int, default=ClassifierConfig.epochs)
    s.add_argument("--batch-size", type=int, default=ClassifierConfig.batch_size)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="evaluate a classifier")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out", required=True, help="report.json or report.csv")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("e2e", parents=[common], help="synth, augment, train ERM and CONIC, evaluate")
    s.add_argument("--preset", choices=PRESETS, default="cm")
    s.add_argument("--p", type=float, default=0.95)
    s.add_argument("--d", type=int, default=10)
    s.add_argument("--n", type=int, default=3000)
    s.add_argument("--n-test", type=int, default=2000)
    s.add_argument("--budget", default="balance")
    s.add_argument("--seeds", default="0,1,2")
    s.add_argument("--epochs", type=int, default=ClassifierConfig.epochs)
    s.add_argument("--lambda", dest="lam", type=float, default=0.5)
    s.add_argument("--out", default="e2e")
    s.set_defaults(func=cmd_e2e)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    started = time.time()
    try:
        result = args.func(args)
        outputs, inputs, *extra = result
        for o in outputs:
            if not o.exists():
                raise CommandError(f"declared output {o} was not written")
        if outputs or inputs:
            write_manifest(args, outputs, inputs, started, extra[0] if extra else None)
    except (CommandError, SpecValidationError, ValueError, KeyError, FileNotFoundError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
