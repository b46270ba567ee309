"""Grouped cross-validation: fold planning, the full per-fold protocol,
and the aggregated report structure.

Folds partition infants, never snippets, so no infant contributes to both
sides of a fold. Within each fold the non-test infants split again by
infant into fit and validation groups (about one sixth of them validate).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .architectures import (
    FAMILY_SVM,
    INPUT_SIGNALS,
    build_architecture,
    network_input,
)
from .dataset import Dataset
from .encoding import encode
from .engine import TrainConfig
from .features import VARIANT_BASE12, VARIANT_FULL24, extract_features
from .metrics import ci95_mean, confusion
from .selection import (
    SELECT_ACCURACY,
    select_best_network,
    svm_grid_search,
)

AGGREGATE_KEYS = ("tpr", "tnr", "balanced_accuracy")


@dataclass(frozen=True)
class FoldPlan:
    """Infant-level fold assignments for grouped k-fold evaluation.

    With k = 1 the single infant group backs all three roles at once, a
    degenerate smoke mode for pipeline checks only; for k > 1 the roles
    are disjoint by construction and verified here.
    """

    seed: int
    k: int
    test_groups: tuple[tuple[str, ...], ...]
    fit_groups: tuple[tuple[str, ...], ...]
    val_groups: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if self.k == 1:
            return
        all_test = [i for group in self.test_groups for i in group]
        if len(all_test) != len(set(all_test)):
            raise ValueError("an infant appears in more than one test group")
        universe = set(all_test)
        for fold in range(self.k):
            test = set(self.test_groups[fold])
            fit = set(self.fit_groups[fold])
            val = set(self.val_groups[fold])
            if test & fit or test & val or fit & val:
                raise ValueError(f"fold {fold}: overlapping infant roles")
            if fit | val | test != universe:
                raise ValueError(f"fold {fold}: roles do not cover all infants")


def grouped_kfold(infants: Sequence[str], k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle infants by seed and deal them round-robin into k test groups.

    For each fold the remaining infants are reshuffled with a fold-derived
    seed; about one sixth of them (at least one) become the validation
    group and the rest fit the model.
    """
    infants = sorted(set(infants))
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(infants) < k:
        raise ValueError(f"need at least k={k} infants, have {len(infants)}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
    order = [infants[i] for i in rng.permutation(len(infants))]
    groups: list[list[str]] = [[] for _ in range(k)]
    for pos, infant in enumerate(order):
        groups[pos % k].append(infant)

    if k == 1:
        # degenerate smoke mode: the single group backs all three roles
        group = tuple(groups[0])
        return FoldPlan(seed=seed, k=1, test_groups=(group,),
                        fit_groups=(group,), val_groups=(group,))

    test_groups, fit_groups, val_groups = [], [], []
    for fold in range(k):
        test = groups[fold]
        remaining = [i for g, grp in enumerate(groups) if g != fold for i in grp]
        fold_rng = np.random.default_rng(np.random.SeedSequence([seed, k, fold]))
        shuffled = [remaining[i] for i in fold_rng.permutation(len(remaining))]
        n_val = max(1, round(len(remaining) / 6.0))
        if len(remaining) - n_val < 1:
            raise ValueError(
                f"fold {fold}: only {len(remaining)} non-test infants, "
                "not enough to split into fit and validation"
            )
        test_groups.append(tuple(test))
        val_groups.append(tuple(shuffled[:n_val]))
        fit_groups.append(tuple(shuffled[n_val:]))
    return FoldPlan(seed=seed, k=k, test_groups=tuple(test_groups),
                    fit_groups=tuple(fit_groups), val_groups=tuple(val_groups))


@dataclass
class FoldResult:
    fold: int
    metrics_dict: dict
    selection_log: dict
    counts: dict

    def as_dict(self) -> dict:
        return {"fold": self.fold, "metrics": self.metrics_dict,
                "selection": self.selection_log, "counts": self.counts}


@dataclass
class CvReport:
    arch: str
    seed: int
    k: int
    repeats: int
    config: dict
    folds: list[FoldResult]
    aggregate: dict

    def fold_values(self, key: str) -> list[float | None]:
        return [f.metrics_dict[key] for f in self.folds]

    def as_dict(self) -> dict:
        return {
            "arch": self.arch, "seed": self.seed, "k": self.k,
            "repeats": self.repeats, "config": self.config,
            "folds": [f.as_dict() for f in self.folds],
            "aggregate": self.aggregate,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "CvReport":
        folds = [FoldResult(fold=f["fold"], metrics_dict=f["metrics"],
                            selection_log=f["selection"], counts=f["counts"])
                 for f in doc["folds"]]
        return cls(arch=doc["arch"], seed=doc["seed"], k=doc["k"],
                   repeats=doc["repeats"], config=doc["config"], folds=folds,
                   aggregate=doc["aggregate"])

    @classmethod
    def from_json(cls, text: str) -> "CvReport":
        return cls.from_dict(json.loads(text))


def _aggregate(folds: list[FoldResult]) -> dict:
    out = {}
    for key in AGGREGATE_KEYS:
        values = [f.metrics_dict[key] for f in folds]
        if any(v is None for v in values):
            out[key] = {"mean": None, "ci_low": None, "ci_high": None,
                        "undefined_folds": [f.fold for f, v in zip(folds, values)
                                            if v is None]}
            continue
        mean = float(np.mean(values))
        if len(values) >= 2:
            low, high = ci95_mean(values)
        else:
            low = high = None
        out[key] = {"mean": mean, "ci_low": low, "ci_high": high}
    return out


def _encode_dataset(dataset: Dataset) -> np.ndarray:
    return np.stack([encode(s) for s in dataset.snippets()])


def network_base_seed(seed: int, fold: int) -> int:
    """Seed for a fold's first training run; runs use consecutive seeds."""
    return seed + 1000 * (fold + 1)


def fit_val_split(infants: Sequence[str], seed: int = 0,
                  fraction: float = 1.0 / 6.0) -> tuple[list[str], list[str]]:
    """Split infants into fit and validation groups (validation gets about
    `fraction` of them, at least one each)."""
    infants = sorted(set(infants))
    if len(infants) < 2:
        raise ValueError("need at least two infants to split")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 6001]))
    order = [infants[i] for i in rng.permutation(len(infants))]
    n_val = min(len(infants) - 1, max(1, round(len(infants) * fraction)))
    return order[n_val:], order[:n_val]


def run_crossval(dataset: Dataset, arch_name: str, config: TrainConfig | None = None,
                 seed: int = 0, repeats: int = 20, k: int = 5,
                 selection_metric: str = SELECT_ACCURACY,
                 standardize: bool = True, jobs: int = 1) -> CvReport:
    """Full grouped-CV protocol for one architecture.

    Per fold: split snippets by the infant plan, encode, extract features
    when the family needs them, run the family's selection protocol (the
    hyperparameter grid for SVMs, `repeats` seeded runs for networks),
    then score the selected model on the fold's test snippets.
    """
    arch = build_architecture(arch_name)
    if config is None:
        config = TrainConfig()
    plan = grouped_kfold(dataset.infants(), k=k, seed=seed)

    signals = _encode_dataset(dataset)
    labels = dataset.labels
    infant_ids = np.asarray(dataset.infant_ids)

    needs_features = arch.input_kind != INPUT_SIGNALS
    if needs_features:
        variant = VARIANT_BASE12 if arch.n_features == 12 else VARIANT_FULL24
        features = extract_features(signals, variant)

    folds: list[FoldResult] = []
    for fold in range(plan.k):
        sets = {}
        for role, group in (("fit", plan.fit_groups[fold]),
                            ("val", plan.val_groups[fold]),
                            ("test", plan.test_groups[fold])):
            idx = np.flatnonzero(np.isin(infant_ids, list(group)))
            if len(idx) == 0:
                raise ValueError(f"fold {fold}: no snippets for {role} infants")
            if needs_features:
                x = features[idx]
            else:
                x = network_input(arch, signals=signals[idx])
            sets[role] = (x, labels[idx], idx)

        (x_fit, y_fit, _), (x_val, y_val, _), (x_test, y_test, _) = (
            sets["fit"], sets["val"], sets["test"]
        )
        if arch.family == FAMILY_SVM:
            selection = svm_grid_search(arch, x_fit, y_fit, x_val, y_val,
                                        metric=selection_metric, seed=seed,
                                        standardize=standardize, jobs=jobs)
        else:
            selection = select_best_network(arch, x_fit, y_fit, x_val, y_val,
                                            config,
                                            base_seed=network_base_seed(seed, fold),
                                            runs=repeats, jobs=jobs)
        predictions = selection.model.predict(x_test)
        metrics = confusion(predictions, y_test)
        if metrics.total != len(y_test):
            raise AssertionError("confusion counts do not cover the test set")
        counts = {
            "fit_snippets": int(len(y_fit)),
            "val_snippets": int(len(y_val)),
            "test_snippets": int(len(y_test)),
            "test_fm_plus": int(np.sum(y_test == 1)),
            "test_fm_minus": int(np.sum(y_test == 0)),
            "train_fm_plus": int(np.sum(y_fit == 1) + np.sum(y_val == 1)),
            "train_fm_minus": int(np.sum(y_fit == 0) + np.sum(y_val == 0)),
            "fit_infants": len(plan.fit_groups[fold]),
            "val_infants": len(plan.val_groups[fold]),
            "test_infants": len(plan.test_groups[fold]),
        }
        folds.append(FoldResult(fold=fold, metrics_dict=metrics.as_dict(),
                                selection_log=selection.log(), counts=counts))

    return CvReport(
        arch=arch_name, seed=seed, k=plan.k, repeats=repeats,
        config={**config.__dict__, "selection_metric": selection_metric,
                "standardize": standardize},
        folds=folds, aggregate=_aggregate(folds),
    )
