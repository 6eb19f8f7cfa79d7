"""End-to-end data preparation: balance, split, and seed derivation."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .imgdata import LabeledSet, split_train_test, split_train_val
from .smote import BalancePlan, balance

log = logging.getLogger(__name__)

TEST_FRACTION = 0.2
VAL_FRACTION = 0.1
SMOTE_MODES = ("faithful", "no-leak")
_STAGES = {"synth": 1, "smote": 2, "init": 3, "shuffle": 4}


def stage_seed(seed: int, stage: str) -> int:
    """Seed for one pipeline stage. Splits use ``seed`` itself; every other
    stage gets an independent stream derived from (seed, stage)."""
    if stage == "split":
        return seed
    return int(np.random.SeedSequence([seed, _STAGES[stage]]).generate_state(1)[0])


@dataclass
class PreparedData:
    train: LabeledSet
    val: LabeledSet
    test: LabeledSet
    plan: BalancePlan
    mode: str


def prepare(data: LabeledSet, seed: int = 42, mode: str = "faithful", k: int = 5) -> PreparedData:
    """``faithful``: SMOTE the full set, then 80/20 test split, then 90/10
    validation split. ``no-leak``: split first and balance only the
    training partition, so no synthetic sibling of a test image is trained on.
    """
    if mode not in SMOTE_MODES:
        raise ConfigError(f"smote mode must be one of {SMOTE_MODES}, got {mode!r}")
    split = stage_seed(seed, "split")
    smote_seed = stage_seed(seed, "smote")
    if mode == "faithful":
        balanced, plan = balance(data, k, smote_seed)
        tt = split_train_test(balanced, TEST_FRACTION, split)
        tv = split_train_val(tt.train, VAL_FRACTION, split)
        train = tv.train
    else:
        tt = split_train_test(data, TEST_FRACTION, split)
        tv = split_train_val(tt.train, VAL_FRACTION, split)
        train, plan = balance(tv.train, k, smote_seed)
    log.info("SMOTE %s; train %d, val %d, test %d", plan.describe(), len(train),
             len(tv.held_out), len(tt.held_out))
    return PreparedData(train, tv.held_out, tt.held_out, plan, mode)
