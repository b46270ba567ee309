"""Kernel SVM trained with sequential minimal optimization.

The solver works on the soft-margin dual: pick a pair of multipliers
violating the KKT conditions beyond tolerance, optimize the pair
analytically under the box and equality constraints, update the bias and
error cache, and repeat until a full sweep makes no progress or the pass
cap is hit. Pairwise updates preserve sum(alpha * y) = 0 exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import as_feature_matrix, as_binary_labels

KERNEL_RBF = "rbf"
KERNEL_POLY = "poly"


def kernel_eval(kind: str, gamma: float, degree: int, u, v, coef0: float = 0.0):
    """Kernel value(s) between u and v.

    rbf: exp(-gamma * ||u - v||^2); poly: (gamma * <u, v> + coef0)^degree
    with degree restricted to 1..3. Accepts vectors or matrices; matrix
    inputs produce the full Gram block.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if u.shape[1] != v.shape[1]:
        raise ValueError(f"feature lengths differ: {u.shape[1]} vs {v.shape[1]}")
    if kind == KERNEL_RBF:
        sq = (
            (u * u).sum(axis=1)[:, None]
            + (v * v).sum(axis=1)[None, :]
            - 2.0 * (u @ v.T)
        )
        out = np.exp(-gamma * np.maximum(sq, 0.0))
    elif kind == KERNEL_POLY:
        if degree not in (1, 2, 3):
            raise ValueError(f"polynomial degree must be 1, 2 or 3, got {degree}")
        out = (gamma * (u @ v.T) + coef0) ** degree
    else:
        raise ValueError(f"kernel must be {KERNEL_RBF!r} or {KERNEL_POLY!r}")
    return out if out.size > 1 else float(out[0, 0])


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    passes: int
    converged: bool


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_passes: int | None = None, seed: int = 0) -> SmoResult:
    """Solve the dual for a precomputed kernel matrix and labels in {-1, +1}.

    Alternates full sweeps with sweeps over the non-bound multipliers; a
    full sweep with no progress means every KKT condition holds within
    `tol`. `max_passes` defaults to 10 * n_samples, bounding runtime on
    pathological problems.
    """
    solver = _Smo(K, y, C, tol, seed)
    if max_passes is None:
        max_passes = 10 * len(y)
    passes = 0
    converged = False
    examine_all = True
    while passes < max_passes:
        passes += 1
        solver.refresh_errors()
        if examine_all:
            candidates = range(solver.n)
        else:
            candidates = np.flatnonzero(
                (solver.alpha > 0.0) & (solver.alpha < C)
            )
        changed = 0
        for i in candidates:
            changed += solver.examine(int(i))
        if examine_all:
            if changed == 0:
                converged = True
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    return SmoResult(alpha=solver.alpha, bias=solver.b, passes=passes,
                     converged=converged)


class _Smo:
    def __init__(self, K, y, C, tol, seed):
        self.K = K
        self.y = y
        self.C = C
        self.tol = tol
        self.n = len(y)
        self.rng = np.random.default_rng(seed)
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.errors = np.zeros(self.n)

    def refresh_errors(self):
        # E_i = f(x_i) - y_i; recomputed per sweep to drop incremental drift
        self.errors = (self.alpha * self.y) @ self.K + self.b - self.y

    def examine(self, i: int) -> int:
        ri = self.errors[i] * self.y[i]
        violating = ((ri < -self.tol and self.alpha[i] < self.C)
                     or (ri > self.tol and self.alpha[i] > 0.0))
        if not violating:
            return 0
        non_bound = np.flatnonzero((self.alpha > 0.0) & (self.alpha < self.C))
        # first choice: maximize |E_i - E_j| over non-bound multipliers
        if len(non_bound) > 1:
            j = int(non_bound[np.argmax(np.abs(self.errors[non_bound]
                                               - self.errors[i]))])
            if j != i and self.take_step(i, j):
                return 1
        # then the remaining non-bound points, then everything, from a
        # random start so no fixed index dominates
        for pool in (non_bound, np.arange(self.n)):
            if len(pool) == 0:
                continue
            start = int(self.rng.integers(len(pool)))
            for j in np.roll(pool, -start):
                j = int(j)
                if j != i and self.take_step(i, j):
                    return 1
        return 0

    def take_step(self, i: int, j: int) -> bool:
        K, y, C = self.K, self.y, self.C
        alpha, errors = self.alpha, self.errors
        ai_old, aj_old = alpha[i], alpha[j]
        ei, ej = errors[i], errors[j]
        if y[i] != y[j]:
            lo = max(0.0, aj_old - ai_old)
            hi = min(C, C + aj_old - ai_old)
        else:
            lo = max(0.0, ai_old + aj_old - C)
            hi = min(C, ai_old + aj_old)
        if lo >= hi:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0.0:
            return False
        aj = aj_old - y[j] * (ei - ej) / eta
        aj = min(max(aj, lo), hi)
        if abs(aj - aj_old) < 1e-8 * (aj + aj_old + 1e-8):
            return False
        ai = ai_old + y[i] * y[j] * (aj_old - aj)
        # box feasibility is exact algebraically; clamp rounding dirt only
        ai = min(max(ai, 0.0), C)
        alpha[i], alpha[j] = ai, aj

        b = self.b
        b1 = b - ei - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
        b2 = b - ej - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
        if 0.0 < ai < C:
            new_b = b1
        elif 0.0 < aj < C:
            new_b = b2
        else:
            new_b = 0.5 * (b1 + b2)
        # incremental cache update keeps sweeps cheap between refreshes
        errors += (
            y[i] * (ai - ai_old) * K[i]
            + y[j] * (aj - aj_old) * K[j]
            + (new_b - b)
        )
        self.b = new_b
        return True


def dual_objective(alpha: np.ndarray, K: np.ndarray, y: np.ndarray) -> float:
    """Soft-margin dual value: sum(alpha) - 0.5 * (alpha y)' K (alpha y)."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


class KernelSVC(BaseEstimator, ClassifierMixin):
    """Binary kernel SVM classifier trained by SMO.

    Parameters
    ----------
    C : float
        Soft-margin penalty.
    kernel : str
        "rbf" or "poly".
    gamma : float
        Kernel coefficient.
    degree : int
        Polynomial degree (1..3), ignored for rbf.
    coef0 : float
        Polynomial offset; 0 matches the catalog's kernels.
    tol : float
        KKT violation tolerance of the solver.
    standardize : bool
        Z-score features with training-set statistics before the kernel.
    random_state : int
        Seed for the solver's second-choice fallback.

    Attributes
    ----------
    alpha_ : (n_samples,) multipliers of the full training set.
    support_vectors_ : standardized training points with alpha > 0.
    dual_coef_ : alpha_i * y_i of the support vectors.
    intercept_ : bias term of the decision function.
    mean_, scale_ : standardization vectors applied to inputs.
    """

    def __init__(self, C: float = 1.0, kernel: str = KERNEL_RBF, gamma: float = 1.0,
                 degree: int = 3, coef0: float = 0.0, tol: float = 1e-3,
                 standardize: bool = True, random_state: int = 0):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.degree = degree
        self.coef0 = coef0
        self.tol = tol
        self.standardize = standardize
        self.random_state = random_state

    def fit(self, X, y):
        X = as_feature_matrix(X)
        y01 = as_binary_labels(y, X.shape[0])
        if len(np.unique(y01)) < 2:
            raise ValueError("training set contains a single class")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.standardize:
            self.mean_ = X.mean(axis=0)
            std = X.std(axis=0)
            self.scale_ = np.where(std == 0.0, 1.0, std)
        else:
            self.mean_ = np.zeros(X.shape[1])
            self.scale_ = np.ones(X.shape[1])
        Xs = (X - self.mean_) / self.scale_
        ypm = np.where(y01 == 1, 1.0, -1.0)

        K = kernel_eval(self.kernel, self.gamma, self.degree, Xs, Xs, self.coef0)
        K = np.atleast_2d(K)
        result = smo_solve(K, ypm, self.C, tol=self.tol, seed=self.random_state)

        self.alpha_ = result.alpha
        self.intercept_ = result.bias
        self.n_passes_ = result.passes
        self.converged_ = result.converged
        sv = result.alpha > 0.0
        self.support_vectors_ = Xs[sv]
        self.dual_coef_ = result.alpha[sv] * ypm[sv]
        self.classes_ = np.array([0, 1])
        self._train_y_pm = ypm
        return self

    def transform_features(self, X) -> np.ndarray:
        """Apply the stored standardization (identity when disabled)."""
        X = as_feature_matrix(X, len(self.mean_))
        return (X - self.mean_) / self.scale_

    def decision_function(self, X) -> np.ndarray:
        Xs = self.transform_features(X)
        if len(self.support_vectors_) == 0:
            return np.full(Xs.shape[0], self.intercept_)
        K = kernel_eval(self.kernel, self.gamma, self.degree, Xs,
                        self.support_vectors_, self.coef0)
        K = np.atleast_2d(K)
        return K @ self.dual_coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        # FM+ (label 1) on the boundary: decision value 0 maps to the
        # positive class
        return (self.decision_function(X) >= 0.0).astype(int)


def kkt_summary(model: KernelSVC) -> dict:
    """Feasibility diagnostics of a fitted model, for tests and self-checks."""
    alpha = model.alpha_
    box_violation = float(max(np.max(-alpha, initial=0.0),
                              np.max(alpha - model.C, initial=0.0), 0.0))
    balance = float(abs(np.sum(alpha * model._train_y_pm)))
    return {"box_violation": box_violation, "balance": balance}


def save_svm(model: KernelSVC, path) -> None:
    """JSON header line plus support vectors and dual coefficients as <f8."""
    header = {
        "format": "matmotion-svm",
        "version": 1,
        "params": {
            "C": model.C, "kernel": model.kernel, "gamma": model.gamma,
            "degree": model.degree, "coef0": model.coef0, "tol": model.tol,
            "standardize": model.standardize, "random_state": model.random_state,
        },
        "intercept": model.intercept_,
        "mean": model.mean_.tolist(),
        "scale": model.scale_.tolist(),
        "n_support": int(len(model.dual_coef_)),
        "n_features": int(len(model.mean_)),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(model.support_vectors_, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.dual_coef_, dtype="<f8").tobytes())


def load_svm(path) -> KernelSVC:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("format") != "matmotion-svm":
        raise ValueError(f"{path}: not a recognized SVM file")
    model = KernelSVC(**header["params"])
    n_sv, n_feat = header["n_support"], header["n_features"]
    offset = nl + 1
    sv = np.frombuffer(raw, dtype="<f8", count=n_sv * n_feat, offset=offset)
    offset += n_sv * n_feat * 8
    coef = np.frombuffer(raw, dtype="<f8", count=n_sv, offset=offset)
    offset += n_sv * 8
    if offset != len(raw):
        raise ValueError(f"{path}: payload size mismatch")
    model.support_vectors_ = sv.reshape(n_sv, n_feat).astype(float)
    model.dual_coef_ = coef.astype(float)
    model.intercept_ = header["intercept"]
    model.mean_ = np.asarray(header["mean"], dtype=float)
    model.scale_ = np.asarray(header["scale"], dtype=float)
    model.classes_ = np.array([0, 1])
    return model
