"""Gaussian-kernel support vector machine trained by SMO, plus grid search
with cross-validation.

Binary machines solve the soft-margin dual

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij   s.t.  0 <= a <= h,  a.y = 0

with ``K(a, b) = exp(-eta * |a - b|^2)``. Working pairs are the maximal
violating pair; the solver stops once the violation drops below ``tol``.
Several classes are handled one-versus-one.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

log = logging.getLogger(__name__)

TOL = 1e-3
MAX_ITER = 100_000
TAU = 1e-12


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _smo(K, y, C, tol, max_iter, record):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of 1/2 a'Qa - e'a
    hist = np.empty(max_iter + 1 if record else 0)
    it = 0
    gap = np.inf
    while True:
        # maximal violating pair
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > gmax:
                    gmax = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                if v < gmin:
                    gmin = v
                    j = t
        gap = gmax - gmin
        if record:
            s = 0.0
            for t in range(n):
                s += alpha[t] * (G[t] - 1.0)
            hist[it] = -0.5 * s
        if i < 0 or j < 0 or gap < tol or it >= max_iter:
            break
        it += 1
        Kii = K[i, i]
        Kjj = K[j, j]
        Kij = K[i, j]
        ai = alpha[i]
        aj = alpha[j]
        if y[i] != y[j]:
            quad = Kii + Kjj + 2.0 * y[i] * y[j] * Kij
            if quad <= 0.0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            alpha[i] = ai + delta
            alpha[j] = aj + delta
            if diff > 0.0:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0.0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = Kii + Kjj - 2.0 * y[i] * y[j] * Kij
            if quad <= 0.0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            alpha[i] = ai - delta
            alpha[j] = aj + delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = total
        di = alpha[i] - ai
        dj = alpha[j] - aj
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * di + y[j] * K[t, j] * dj)
    # offset: average over free vectors, else midpoint of the feasible range
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0.0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    rho = sfree / nfree if nfree > 0 else 0.5 * (ub + lb)
    return alpha, rho, it, gap, hist[: it + 1] if record else hist


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    iterations: int
    violation: float
    objective_trace: np.ndarray

    @property
    def converged(self) -> bool:
        return self.violation < TOL


def dual_objective(alpha, K, y) -> float:
    """``sum(a) - 1/2 a'Qa`` with ``Q_ij = y_i y_j K_ij``."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def smo(K, y, h: float, *, tol: float = TOL, max_iter: int = MAX_ITER, record: bool = False) -> SmoResult:
    """Solve the binary dual for kernel matrix ``K`` and labels ``y`` in {-1, +1}.

    Decision values are ``(alpha * y) @ K[:, x] - rho``.
    """
    K = np.ascontiguousarray(K, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    alpha, rho, it, gap, hist = _smo(K, y, float(h), tol, max_iter, record)
    if it >= max_iter and gap >= tol:
        log.warning("SMO hit the iteration cap (%d) with violation %.3g", max_iter, gap)
    return SmoResult(alpha, float(rho), int(it), float(gap), hist)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def sq_dists(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    D = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(D, 0.0)


def rbf(A, B, eta: float) -> np.ndarray:
    return np.exp(-eta * sq_dists(A, B))


def standardize_stats(X) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and standard deviation; constant features get scale 1."""
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0.0] = 1.0
    return mu, sd


@dataclass
class BinaryMachine:
    positive: object
    negative: object
    support: np.ndarray
    coef: np.ndarray  # alpha_i * y_i for the support vectors
    rho: float

    def decision(self, Z, eta) -> np.ndarray:
        if len(self.coef) == 0:
            return np.full(len(Z), -self.rho)
        return rbf(Z, self.support, eta) @ self.coef - self.rho


@dataclass
class SvmModel:
    classes: np.ndarray
    h: float
    eta: float
    mean: np.ndarray
    scale: np.ndarray
    machines: list[BinaryMachine] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.mean)


def train(X, y, h: float, eta: float, *, tol: float = TOL, max_iter: int = MAX_ITER) -> SvmModel:
    """Fit a standardized RBF SVM; one-versus-one for more than two classes."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, p) with one label per row")
    if h <= 0 or eta <= 0:
        raise ValueError("h and eta must be positive")
    classes = np.unique(y)
    if len(classes) < 2 or len(X) < 2:
        raise ValueError("degenerate labels: need at least two classes")
    mu, sd = standardize_stats(X)
    Z = (X - mu) / sd
    K = rbf(Z, Z, eta)
    model = SvmModel(classes, float(h), float(eta), mu, sd)
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            idx = np.flatnonzero((y == classes[a]) | (y == classes[b]))
            yy = np.where(y[idx] == classes[a], 1.0, -1.0)
            res = smo(K[np.ix_(idx, idx)], yy, h, tol=tol, max_iter=max_iter)
            sv = res.alpha > 0
            model.machines.append(
                BinaryMachine(classes[a], classes[b], Z[idx[sv]], (res.alpha * yy)[sv], res.rho)
            )
    return model


def decision_function(model: SvmModel, X) -> np.ndarray:
    """Decision values, one column per class pair (positive favours the lower label)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    Z = (X - model.mean) / model.scale
    return np.column_stack([m.decision(Z, model.eta) for m in model.machines])


def _vote(classes, pairs, F) -> np.ndarray:
    votes = np.zeros((F.shape[0], len(classes)), dtype=int)
    for col, (a, b) in enumerate(pairs):
        win = np.where(F[:, col] >= 0.0, a, b)
        np.add.at(votes, (np.arange(F.shape[0]), win), 1)
    # argmax returns the first maximum, i.e. the lowest label on ties
    return classes[np.argmax(votes, axis=1)]


def _pairs(k):
    return [(a, b) for a in range(k) for b in range(a + 1, k)]


def predict(model: SvmModel, X):
    """Predicted labels for the rows of ``X`` (a single vector gives a scalar)."""
    single = np.ndim(X) == 1
    out = _vote(model.classes, _pairs(len(model.classes)), decision_function(model, X))
    return out[0] if single else out


# ---------------------------------------------------------------------------
# grid search with cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    h: tuple[float, ...]
    eta: tuple[float, ...]

    def __post_init__(self):
        if not self.h or not self.eta:
            raise ValueError("grid must be non-empty")
        if min(self.h) <= 0 or min(self.eta) <= 0:
            raise ValueError("grid values must be positive")

    @classmethod
    def default(cls) -> "GridSpec":
        h = (0.5, 0.7, 0.9) + tuple(float(v) for v in range(1, 30, 2))
        eta = tuple(float(v) for v in np.linspace(0.0001, 0.1001, 250))
        return cls(h, eta)

    @property
    def size(self) -> int:
        return len(self.h) * len(self.eta)


def parse_scheme(scheme: str) -> int | None:
    """``"loo"`` gives ``None``; ``"kfold:K"`` gives ``K``."""
    if scheme == "loo":
        return None
    if scheme.startswith("kfold:"):
        try:
            k = int(scheme.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad scheme {scheme!r}") from None
        if k < 2:
            raise ValueError("kfold needs at least 2 folds")
        return k
    raise ValueError(f"unknown scheme {scheme!r}; use loo or kfold:K")


def make_folds(y, scheme: str = "loo", seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays. k-fold splits are stratified and seeded."""
    y = np.asarray(y)
    n = len(y)
    k = parse_scheme(scheme)
    if k is None:
        return [np.array([i]) for i in range(n)]
    if k > n:
        raise ValueError(f"{k} folds requested for {n} samples")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        for r, i in enumerate(idx):
            folds[(offset + r) % k].append(int(i))
        offset += len(idx)
    return [np.array(sorted(f), dtype=int) for f in folds if f]


@njit(cache=True, nogil=True)
def _fold_grid(D2, D2test, y, hs, etas, tol, max_iter):
    """Decision values for every (eta, h) cell of one binary fold."""
    out = np.empty((len(etas), len(hs), D2test.shape[0]))
    capped = 0
    for a in range(len(etas)):
        K = np.exp(-etas[a] * D2)
        Kt = np.exp(-etas[a] * D2test)
        for b in range(len(hs)):
            alpha, rho, it, gap, _ = _smo(K, y, hs[b], tol, max_iter, False)
            if it >= max_iter and gap >= tol:
                capped += 1
            coef = alpha * y
            out[a, b] = Kt @ coef - rho
    return out, capped


@dataclass
class CvResult:
    h: np.ndarray
    eta: np.ndarray
    accuracy: np.ndarray  # shape (len(h), len(eta))
    scheme: str
    seed: int

    @property
    def average(self) -> float:
        return float(self.accuracy.mean())

    @property
    def max(self) -> float:
        return float(self.accuracy.max())

    @property
    def std(self) -> float:
        return float(self.accuracy.std())

    def summary(self) -> dict:
        return {"average": self.average, "max": self.max, "std": self.std}

    def best(self) -> tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(self.accuracy)), self.accuracy.shape)
        return float(self.h[i]), float(self.eta[j])

    def rows(self):
        for i, h in enumerate(self.h):
            for j, eta in enumerate(self.eta):
                yield float(h), float(eta), float(self.accuracy[i, j])


def _fold_predictions(X, y, classes, test, grid, tol, max_iter):
    """Predicted class indices for one fold, shape ``(n_h, n_eta, n_test)``."""
    train_idx = np.setdiff1d(np.arange(len(y)), test)
    present = np.unique(y[train_idx])
    nh, ne = len(grid.h), len(grid.eta)
    if len(present) == 1:
        return np.full((nh, ne, len(test)), present[0])
    mu, sd = standardize_stats(X[train_idx])
    Z = (X - mu) / sd
    D2 = sq_dists(Z[train_idx], Z[train_idx])
    D2t = sq_dists(Z[test], Z[train_idx])
    hs = np.array(grid.h, dtype=float)
    etas = np.array(grid.eta, dtype=float)
    ytr = y[train_idx]
    pairs = _pairs(len(present))
    F = np.empty((ne, nh, len(test), len(pairs)))
    for col, (a, b) in enumerate(pairs):
        sub = np.flatnonzero((ytr == present[a]) | (ytr == present[b]))
        yy = np.where(ytr[sub] == present[a], 1.0, -1.0)
        dec, capped = _fold_grid(
            np.ascontiguousarray(D2[np.ix_(sub, sub)]),
            np.ascontiguousarray(D2t[:, sub]),
            yy, hs, etas, tol, max_iter,
        )
        if capped:
            log.warning("%d SMO solves hit the iteration cap", capped)
        F[..., col] = dec
    pred = _vote(present, pairs, F.reshape(-1, len(pairs))).reshape(ne, nh, len(test))
    return pred.transpose(1, 0, 2)


def cross_validate(
    X,
    y,
    scheme: str = "loo",
    grid: GridSpec | None = None,
    seed: int = 0,
    *,
    n_jobs: int | None = None,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
) -> CvResult:
    """Cross-validated accuracy for every ``(h, eta)`` in ``grid``.

    Accuracy is the fraction of all samples predicted correctly when held
    out. Standardization statistics come from each training fold only.
    Folds run on a thread pool; results do not depend on ``n_jobs``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise ValueError("degenerate labels: need at least two classes")
    grid = grid or GridSpec.default()
    folds = make_folds(y, scheme, seed)
    classes = np.unique(y)
    correct = np.zeros((len(grid.h), len(grid.eta)))

    def run(test):
        return test, _fold_predictions(X, y, classes, test, grid, tol, max_iter)

    workers = n_jobs or os.cpu_count() or 1
    if workers == 1:
        results = map(run, folds)
    else:
        pool = ThreadPoolExecutor(workers)
        results = pool.map(run, folds)
    for test, pred in results:
        correct += (pred == y[test]).sum(axis=2)
    if workers != 1:
        pool.shutdown()
    return CvResult(np.array(grid.h), np.array(grid.eta), correct / len(y), scheme, seed)
