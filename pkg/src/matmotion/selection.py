"""Per-fold model selection: SVM hyperparameter grid and repeated
network training.

SVMs: 25 (C, gamma) combinations scored by validation accuracy. Networks:
a fixed number of training repetitions with consecutive seeds, keeping
the run with the lowest validation loss. Ties break toward the lowest
candidate index in both protocols.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .architectures import NetworkArch, SvmArch
from .engine import TrainConfig, TrainedNet, train
from .metrics import confusion
from .svm import KernelSVC

C_GRID = (0.1, 1.0, 10.0, 100.0, 1000.0)
GAMMA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

SELECT_ACCURACY = "accuracy"
SELECT_BALANCED = "balanced"


@dataclass
class Candidate:
    index: int
    ident: dict
    score: float


@dataclass
class SelectionResult:
    model: object            # fitted KernelSVC or TrainedNet
    chosen: Candidate
    candidates: list[Candidate]

    def log(self) -> dict:
        return {
            "chosen": {"index": self.chosen.index, **self.chosen.ident,
                       "score": self.chosen.score},
            "candidates": [
                {"index": c.index, **c.ident, "score": c.score}
                for c in self.candidates
            ],
        }


def _accuracy(pred: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(pred == y))


def _balanced(pred: np.ndarray, y: np.ndarray) -> float:
    ba = confusion(pred, y).balanced_accuracy
    return -1.0 if ba is None else ba


def _fit_svm_cell(args):
    c, gamma, arch, x_fit, y_fit, standardize, seed = args
    model = KernelSVC(C=c, kernel=arch.kernel, gamma=gamma, degree=arch.degree,
                      standardize=standardize, random_state=seed)
    return model.fit(x_fit, y_fit)


def svm_grid_search(arch: SvmArch, x_fit, y_fit, x_val, y_val,
                    metric: str = SELECT_ACCURACY, seed: int = 0,
                    standardize: bool = True, jobs: int = 1) -> SelectionResult:
    """Train the full C x gamma grid, keep the best validation score.

    The grid is enumerated C-major then gamma; the first best cell wins
    ties, so an all-equal validation set selects (C=0.1, gamma=0.01).
    Cells are independent and run in `jobs` processes when jobs > 1; the
    result does not depend on scheduling.
    """
    if len(x_val) == 0:
        raise ValueError("validation set is empty")
    score_fn = _accuracy if metric == SELECT_ACCURACY else _balanced
    cells = [(c, gamma, arch, x_fit, y_fit, standardize, seed)
             for c in C_GRID for gamma in GAMMA_GRID]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            models = list(pool.map(_fit_svm_cell, cells))
    else:
        models = [_fit_svm_cell(cell) for cell in cells]
    candidates = [
        Candidate(index=i, ident={"C": cell[0], "gamma": cell[1]},
                  score=score_fn(model.predict(x_val), np.asarray(y_val)))
        for i, (cell, model) in enumerate(zip(cells, models))
    ]
    best = max(range(len(candidates)), key=lambda i: (candidates[i].score, -i))
    return SelectionResult(model=models[best], chosen=candidates[best],
                           candidates=candidates)


TrainFn = Callable[..., TrainedNet]


def _train_run(args):
    specs, x_fit, y_fit, x_val, y_val, config, name = args
    return train(specs, x_fit, y_fit, x_val, y_val, config, arch_name=name)


def select_best_network(arch: NetworkArch, x_fit, y_fit, x_val, y_val,
                        config: TrainConfig, base_seed: int, runs: int = 20,
                        train_fn: TrainFn = train,
                        jobs: int = 1) -> SelectionResult:
    """Train `runs` times with seeds base_seed..base_seed+runs-1 and keep
    the run with the lowest validation loss (first wins ties).

    Runs share nothing and may execute in `jobs` processes; an injected
    `train_fn` forces serial execution (it may not be picklable).
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    tasks = [(list(arch.layer_specs), x_fit, y_fit, x_val, y_val,
              replace(config, seed=base_seed + r), arch.name)
             for r in range(runs)]
    if jobs > 1 and train_fn is train:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            nets = list(pool.map(_train_run, tasks))
    else:
        nets = [train_fn(specs, xf, yf, xv, yv, cfg, arch_name=name)
                for specs, xf, yf, xv, yv, cfg, name in tasks]
    candidates = [Candidate(index=r, ident={"seed": base_seed + r},
                            score=net.validation_loss)
                  for r, net in enumerate(nets)]
    best = min(range(len(candidates)), key=lambda i: (candidates[i].score, i))
    return SelectionResult(model=nets[best], chosen=candidates[best],
                           candidates=candidates)
