"""Lasso probing of embeddings for the handcrafted markers.

For each marker: drop IQR outliers, pick the regularization strength by
speaker-grouped cross-validation, refit on all retained rows, predict
those same rows, and report the coefficient of determination. High r²
means the embedding linearly encodes the marker.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import ConvergenceWarning

from .corpus import CorpusManifest, read_embedding
from .validation import check_matrix, check_same_length, check_vector

DEFAULT_FOLDS = 5
DEFAULT_N_LAMBDAS = 30
DEFAULT_MIN_LAMBDA_RATIO = 1e-4
DEFAULT_IQR_MULTIPLIER = 1.5

_MIN_PROBE_ROWS = 10


@dataclass(frozen=True)
class ProbeDataset:
    """An embedding matrix, one target per row, and row speaker ids."""

    X: np.ndarray
    y: np.ndarray
    speakers: tuple[str, ...]

    def __post_init__(self):
        X = check_matrix(self.X, "X", min_rows=_MIN_PROBE_ROWS)
        y = check_vector(self.y, "y", min_len=_MIN_PROBE_ROWS)
        check_same_length(X, y)
        check_same_length(X, self.speakers, "X", "speakers")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "speakers", tuple(self.speakers))


def soft_threshold(value: float, threshold: float) -> float:
    """Shrink toward zero by ``threshold``, clipping at zero."""
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


class LassoRegressor(BaseEstimator, RegressorMixin):
    """L1-penalized linear regression by cyclic coordinate descent.

    Minimizes (1/2N)·||y - Xw - b||² + alpha·||w||₁. Each coordinate
    update is an exact single-variable minimization (soft-thresholding),
    so the objective never increases; ``objective_path_`` records it
    after every full sweep.

    With ``standardize`` (the default), columns are centered and scaled
    to unit population variance before descent and zero-variance columns
    are dropped; coefficients stay in the standardized basis and
    ``predict`` replays the transform.

    With ``warm_start``, a refit resumes descent from the previous
    coefficients when the column count matches — the usual way to walk a
    regularization path cheaply.
    """

    def __init__(
        self,
        alpha: float = 1.0,
        fit_intercept: bool = True,
        standardize: bool = True,
        tol: float = 1e-8,
        max_sweeps: int = 10000,
        warm_start: bool = False,
    ):
        self.alpha = alpha
        self.fit_intercept = fit_intercept
        self.standardize = standardize
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.warm_start = warm_start

    def _prepare(self, X: np.ndarray):
        if self.standardize:
            mean = X.mean(axis=0)
            scale = X.std(axis=0)
            kept = np.flatnonzero(scale > 0.0)
            if len(kept) == 0:
                raise ValueError("all columns have zero variance")
            return (X[:, kept] - mean[kept]) / scale[kept], mean, scale, kept
        kept = np.arange(X.shape[1])
        return X, np.zeros(X.shape[1]), np.ones(X.shape[1]), kept

    def fit(self, X, y):
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        X = check_matrix(X, "X")
        y = check_vector(y, "y")
        check_same_length(X, y)

        work, mean, scale, kept = self._prepare(X)
        n, d = work.shape
        col_sq = np.sum(work**2, axis=0)
        if np.any(col_sq == 0.0):
            raise ValueError("zero-variance column survived preparation")

        if self.warm_start and getattr(self, "coef_", None) is not None and len(self.coef_) == d:
            w = self.coef_.copy()
            b = self.intercept_ if self.fit_intercept else 0.0
        else:
            w = np.zeros(d)
            b = float(np.mean(y)) if self.fit_intercept else 0.0
        residual = y - b - work @ w
        objectives: list[float] = []
        converged = False
        sweeps = 0

        for sweeps in range(1, self.max_sweeps + 1):
            max_delta = 0.0
            for j in range(d):
                col = work[:, j]
                rho = (float(col @ residual) + col_sq[j] * w[j]) / n
                new_w = soft_threshold(rho, self.alpha) / (col_sq[j] / n)
                if new_w != w[j]:
                    residual -= col * (new_w - w[j])
                    max_delta = max(max_delta, abs(new_w - w[j]))
                    w[j] = new_w
            if self.fit_intercept:
                shift = float(np.mean(residual))
                if shift != 0.0:
                    b += shift
                    residual -= shift
                    max_delta = max(max_delta, abs(shift))
            objectives.append(
                float(np.dot(residual, residual) / (2 * n) + self.alpha * np.sum(np.abs(w)))
            )
            if max_delta < self.tol:
                converged = True
                break

        if not converged:
            warnings.warn(
                f"lasso did not converge in {self.max_sweeps} sweeps "
                f"(last sweep moved {max_delta:.3e})",
                ConvergenceWarning,
            )

        self.coef_ = w
        self.intercept_ = b
        self.feature_mean_ = mean
        self.feature_scale_ = scale
        self.kept_columns_ = kept
        self.objective_path_ = np.asarray(objectives)
        self.n_sweeps_ = sweeps
        self.converged_ = converged
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        X = check_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns, model was fit with {self.n_features_in_}"
            )
        kept = self.kept_columns_
        if self.standardize:
            work = (X[:, kept] - self.feature_mean_[kept]) / self.feature_scale_[kept]
        else:
            work = X
        return work @ self.coef_ + self.intercept_


def fit_lasso(
    data: ProbeDataset,
    alpha: float,
    tol: float = 1e-8,
    max_sweeps: int = 10000,
    standardize: bool = True,
) -> LassoRegressor:
    """Fit one lasso model on a probe dataset."""
    return LassoRegressor(
        alpha=alpha, standardize=standardize, tol=tol, max_sweeps=max_sweeps
    ).fit(data.X, data.y)


def lambda_max(X, y, standardize: bool = True) -> float:
    """Smallest regularization strength with an all-zero solution.

    Computed as max |Xᵀ(y - mean(y))| / N on the (optionally
    standardized) design, matching the coordinate-descent optimality
    condition at w = 0. The per-column dot products deliberately repeat
    the fit's own arithmetic (same preparation, same reduction order) so
    that fitting at exactly this strength keeps every coefficient at
    bit-exact zero.
    """
    X = check_matrix(X, "X")
    y = check_vector(y, "y")
    check_same_length(X, y)
    work, _, _, _ = LassoRegressor(standardize=standardize)._prepare(X)
    residual = y - float(np.mean(y))
    n = len(y)
    return max(abs(float(work[:, j] @ residual) / n) for j in range(work.shape[1]))


def lambda_grid(
    lam_max: float,
    n_lambdas: int = DEFAULT_N_LAMBDAS,
    min_ratio: float = DEFAULT_MIN_LAMBDA_RATIO,
) -> np.ndarray:
    """Log-spaced grid from ``min_ratio * lam_max`` up to ``lam_max``."""
    if lam_max <= 0:
        raise ValueError(f"lambda_max must be positive, got {lam_max}")
    return np.geomspace(min_ratio * lam_max, lam_max, n_lambdas)


def iqr_filter(values, multiplier: float = DEFAULT_IQR_MULTIPLIER) -> np.ndarray:
    """Indices of values inside [Q1 - m·IQR, Q3 + m·IQR].

    Quartiles use linear interpolation. An all-equal list collapses the
    bounds onto that value and keeps everything.
    """
    values = check_vector(values, "values", min_len=4)
    q1, q3 = np.percentile(values, [25.0, 75.0])
    spread = multiplier * (q3 - q1)
    return np.flatnonzero((values >= q1 - spread) & (values <= q3 + spread))


def grouped_folds(speakers: tuple[str, ...], k: int) -> dict[str, int]:
    """Assign speakers to k folds, balancing row counts greedily.

    Speakers are placed largest first (ties by id) into the currently
    lightest fold (ties by fold index), so every row of one speaker
    lands in exactly one fold.
    """
    counts: dict[str, int] = {}
    for spk in speakers:
        counts[spk] = counts.get(spk, 0) + 1
    if len(counts) < k:
        raise ValueError(f"need at least {k} distinct speakers, got {len(counts)}")
    loads = [0] * k
    assignment: dict[str, int] = {}
    for spk in sorted(counts, key=lambda s: (-counts[s], s)):
        fold = min(range(k), key=lambda f: (loads[f], f))
        assignment[spk] = fold
        loads[fold] += counts[spk]
    return assignment


def grouped_cv_select(
    data: ProbeDataset,
    grid: np.ndarray,
    k: int = DEFAULT_FOLDS,
    tol: float = 1e-8,
    max_sweeps: int = 10000,
) -> tuple[float, dict[float, float]]:
    """Pick the grid strength with the lowest mean held-out MSE.

    Folds group whole speakers; per fold the grid is walked from the
    strongest penalty down with warm starts. Ties prefer the larger
    (more regularized) strength. Returns the winner and the full CV
    curve.
    """
    assignment = grouped_folds(data.speakers, k)
    fold_of_row = np.asarray([assignment[spk] for spk in data.speakers])
    path = np.sort(np.asarray(grid, dtype=np.float64))[::-1]
    errors: dict[float, list[float]] = {float(lam): [] for lam in path}
    for fold in range(k):
        held = fold_of_row == fold
        model = LassoRegressor(tol=tol, max_sweeps=max_sweeps, warm_start=True)
        for lam in path:
            model.set_params(alpha=float(lam))
            model.fit(data.X[~held], data.y[~held])
            pred = model.predict(data.X[held])
            errors[float(lam)].append(float(np.mean((data.y[held] - pred) ** 2)))
    curve = {lam: float(np.mean(vals)) for lam, vals in errors.items()}

    best = None
    best_mse = math.inf
    for lam in sorted(curve, reverse=True):
        if curve[lam] < best_mse:
            best, best_mse = lam, curve[lam]
    return best, curve


def r2(y, yhat) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot."""
    y = check_vector(y, "y", min_len=2)
    yhat = check_vector(yhat, "yhat", min_len=2)
    check_same_length(y, yhat, "y", "yhat")
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        raise ValueError("target variance is zero; r2 is undefined")
    ss_res = float(np.sum((y - yhat) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class ProbeResult:
    """One marker's probing outcome."""

    feature: str
    r2: float
    r2_display: float
    alpha: float
    lambda_max: float
    n_total: int
    n_kept: int
    n_outliers: int
    converged: bool


@dataclass(frozen=True)
class ProbeReport:
    """All probed markers plus the settings that produced them."""

    results: tuple[ProbeResult, ...]
    skipped: dict[str, str]
    metadata: dict = field(default_factory=dict)


def run_probe(
    manifest: CorpusManifest,
    feature_table: dict[str, dict[str, float | None]],
    feature_names: tuple[str, ...] | None = None,
    folds: int = DEFAULT_FOLDS,
    n_lambdas: int = DEFAULT_N_LAMBDAS,
    min_lambda_ratio: float = DEFAULT_MIN_LAMBDA_RATIO,
    strict_holdout: bool = False,
    embeddings: dict[str, np.ndarray] | None = None,
    tol: float = 1e-8,
    max_sweeps: int = 10000,
) -> ProbeReport:
    """Probe every marker column of a feature table against embeddings.

    Per marker: IQR-filter the targets, select the lasso strength by
    speaker-grouped CV, refit on all retained rows, predict those same
    rows, and report raw and zero-clamped r². With ``strict_holdout``
    the predictions come from per-fold refits on held-out rows instead;
    the mode is recorded in metadata. Markers without a single value are
    skipped and listed.

    ``feature_table`` maps utterance id to marker values (None = absent),
    as read back from a feature CSV.
    """
    if embeddings is None:
        embeddings = {}
        for rec in manifest.utterances:
            if rec.embedding_path is not None:
                embeddings[rec.id] = read_embedding(rec.embedding_path, manifest.embedding_dim)

    speaker_of = {rec.id: rec.speaker for rec in manifest.utterances}
    shared = sorted(set(embeddings) & set(feature_table) & set(speaker_of))
    if not shared:
        raise ValueError("no utterance ids shared between embeddings and feature table")

    if feature_names is None:
        seen: list[str] = []
        for row in feature_table.values():
            for name in row:
                if name not in seen:
                    seen.append(name)
        feature_names = tuple(seen)

    X_all = np.asarray([embeddings[utt] for utt in shared])
    speakers_all = np.asarray([speaker_of[utt] for utt in shared])

    results: list[ProbeResult] = []
    skipped: dict[str, str] = {}
    for feature in feature_names:
        present = np.asarray(
            [feature_table[utt].get(feature) is not None for utt in shared]
        )
        if not np.any(present):
            skipped[feature] = "no values in feature table"
            continue
        y = np.asarray(
            [feature_table[utt][feature] for utt, ok in zip(shared, present) if ok],
            dtype=np.float64,
        )
        X = X_all[present]
        speakers = speakers_all[present]
        n_total = len(y)

        kept = iqr_filter(y)
        X, y, speakers = X[kept], y[kept], speakers[kept]
        if float(np.std(y)) == 0.0:
            raise ValueError(f"feature {feature!r} is constant after outlier removal")

        data = ProbeDataset(X, y, tuple(speakers))
        lam_max = lambda_max(X, y)
        grid = lambda_grid(lam_max, n_lambdas, min_lambda_ratio)
        best, _curve = grouped_cv_select(data, grid, k=folds, tol=tol, max_sweeps=max_sweeps)

        if strict_holdout:
            assignment = grouped_folds(data.speakers, folds)
            fold_of_row = np.asarray([assignment[s] for s in data.speakers])
            yhat = np.empty_like(y)
            converged = True
            for fold in range(folds):
                held = fold_of_row == fold
                model = LassoRegressor(alpha=best, tol=tol, max_sweeps=max_sweeps)
                model.fit(X[~held], y[~held])
                converged = converged and model.converged_
                yhat[held] = model.predict(X[held])
        else:
            model = LassoRegressor(alpha=best, tol=tol, max_sweeps=max_sweeps).fit(X, y)
            yhat = model.predict(X)
            converged = model.converged_

        score = r2(y, yhat)
        results.append(
            ProbeResult(
                feature=feature,
                r2=score,
                r2_display=max(0.0, score),
                alpha=best,
                lambda_max=lam_max,
                n_total=n_total,
                n_kept=len(y),
                n_outliers=n_total - len(y),
                converged=converged,
            )
        )

    return ProbeReport(
        results=tuple(results),
        skipped=skipped,
        metadata={
            "folds": folds,
            "n_lambdas": n_lambdas,
            "min_lambda_ratio": min_lambda_ratio,
            "iqr_multiplier": DEFAULT_IQR_MULTIPLIER,
            "mode": "strict_holdout" if strict_holdout else "refit_on_all",
            "n_shared_utterances": len(shared),
        },
    )
