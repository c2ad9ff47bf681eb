"""
A learned counterfactual mapper
===============================

Without access to the renderer, counterfactuals have to be learned.  Two
frozen probes embed color and digit; a pair of conditional generators is
trained to move rare off-theme images (digit 0, color != red) into the
on-theme domain (digit 0, red) while keeping the digit.  Takes a few minutes.
"""

import time

from deconfound.augment import partition_domains
from deconfound.mapper import MapperConfig, evaluate_mapper, pretrain_probes, train_mapper
from deconfound.presets import cm
from deconfound.synth import synth_dataset

spec = cm(d=4, p=0.95, seed=0)
train = synth_dataset(spec, 20000, "train")

# probes are trained on an unconfounded split so color and digit are separable
probe_split = synth_dataset(spec, 3000, "probe")
l1 = pretrain_probes(probe_split, "color")
l2 = pretrain_probes(probe_split, "digit")
print(f"probe accuracy: color {l1.accuracy:.3f}, digit {l2.accuracy:.3f}")

dp = partition_domains(train, "color", 0, "digit", 0)
print(f"|T1| = {len(dp.t1)} off-theme images, |T2| = {len(dp.t2)} on-theme images")

held = synth_dataset(spec, 3000, "test", seed=11)
held_t1 = held.subset(partition_domains(held, "color", 0, "digit", 0).t1)


def validate(m, step):
    e = evaluate_mapper(m, held_t1, (l1, l2))
    print(f"step {step}: target {e.target_rate:.3f}  preserve {e.preserve_rate:.3f}  cycle MAE {e.cycle_mae:.3f}")
    return min(e.target_rate, e.preserve_rate)


t = time.time()
mapper = train_mapper(
    train.subset(dp.t1), train.subset(dp.t2), (l1, l2), MapperConfig(steps=1000, eval_every=250),
    target_attr="color", target_value=0, partner_attr="digit", partner_value=0, validate=validate,
)
print(f"trained in {time.time() - t:.0f} s; best validation score {mapper.best_score:.3f}")

cfs = mapper.apply_batch(train, dp.t1[:8])
print("counterfactual colors:", cfs.column("color").tolist(), "digits:", cfs.column("digit").tolist())
