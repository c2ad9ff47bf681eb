"""Synthesize confounded image datasets, measure confounding, and remove it with
counterfactual augmentation."""
from .augment import (
    AugmentedDataset,
    Budget,
    ConfoundingEdge,
    DomainPair,
    OracleMapper,
    apply_mapper,
    confounding_edges,
    generate_cfs,
    partition_domains,
    run_algorithm1,
)
from .causal import (
    Attribute,
    AttributeSchema,
    CausalSpec,
    ConfounderSpec,
    Edge,
    analytic_confounding,
    analytic_joint,
    load_spec,
    save_spec,
    validate_spec,
)
from .classify import ClassifierConfig, EvalReport, evaluate, train_aug, train_erm
from .mapper import LearnedMapper, MapperConfig, Probe, ProbeConfig, evaluate_mapper, pretrain_probes, train_mapper
from .metrics import (
    InterventionalTable,
    JointDistribution,
    confounding,
    directed_information,
    empirical_joint,
    mutual_information,
    pearson,
    report,
)
from .presets import preset
from .render import RenderParams
from .synth import Dataset, oracle_counterfactual, read_dataset, synth_dataset, write_dataset

__all__ = [
    "Attribute",
    "AttributeSchema",
    "AugmentedDataset",
    "Budget",
    "CausalSpec",
    "ClassifierConfig",
    "ConfounderSpec",
    "ConfoundingEdge",
    "Dataset",
    "DomainPair",
    "Edge",
    "EvalReport",
    "InterventionalTable",
    "JointDistribution",
    "LearnedMapper",
    "MapperConfig",
    "OracleMapper",
    "Probe",
    "ProbeConfig",
    "RenderParams",
    "analytic_confounding",
    "analytic_joint",
    "apply_mapper",
    "confounding",
    "confounding_edges",
    "directed_information",
    "empirical_joint",
    "evaluate",
    "evaluate_mapper",
    "generate_cfs",
    "load_spec",
    "mutual_information",
    "oracle_counterfactual",
    "partition_domains",
    "pearson",
    "preset",
    "pretrain_probes",
    "read_dataset",
    "report",
    "run_algorithm1",
    "save_spec",
    "synth_dataset",
    "train_aug",
    "train_erm",
    "train_mapper",
    "validate_spec",
    "write_dataset",
]
