"""Weighted L2-regularized logistic regression, fit by damped Newton steps.

The loss is the unnormalized weighted negative log-likelihood plus an L2
penalty on the coefficients (never the intercept), so giving a case weight 2
is exactly equivalent to duplicating it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ..errors import NonFiniteError, SchemaMismatchError, SingleClassError

if TYPE_CHECKING:
    from ..ingest import FeatureMatrix

_PROB_EPS = 1e-12


@dataclass(frozen=True)
class LogisticConfig:
    max_iterations: int = 2000
    l2_strength: float = 1.0
    tolerance: float = 1e-6


@dataclass(frozen=True)
class LinearModel:
    coefficients: np.ndarray
    intercept: float
    column_names: tuple[str, ...]
    config: LogisticConfig = field(default_factory=LogisticConfig)
    n_iterations: int = 0
    converged: bool = False

    def __post_init__(self) -> None:
        coef = np.ascontiguousarray(self.coefficients, dtype=np.float64)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        if coef.shape != (len(self.column_names),):
            raise SchemaMismatchError(
                f"coefficient vector of length {coef.shape[0]} does not match "
                f"{len(self.column_names)} columns"
            )

    def decision_scores(self, matrix: "FeatureMatrix") -> np.ndarray:
        if matrix.column_names != self.column_names:
            raise SchemaMismatchError(
                "prediction matrix columns differ from training columns"
            )
        return matrix.values @ self.coefficients + self.intercept

    def predict_proba(self, matrix: "FeatureMatrix") -> np.ndarray:
        """Per-case probability, strictly inside (0, 1)."""
        return sigmoid(self.decision_scores(matrix))


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable sigmoid, clipped away from exact 0 and 1."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _PROB_EPS, 1.0 - _PROB_EPS)


def logistic_loss_gradient(
    params: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    l2_strength: float,
) -> tuple[float, np.ndarray]:
    """Weighted penalized negative log-likelihood and its gradient.

    ``params`` stacks the coefficient vector followed by the intercept.
    """
    w = params[:-1]
    b = params[-1]
    z = X @ w + b
    # log(1 + e^z) - y*z, summed with case weights
    loss = float(np.dot(sample_weight, np.logaddexp(0.0, z) - y * z))
    loss += 0.5 * l2_strength * float(np.dot(w, w))
    residual = sample_weight * (sigmoid(z) - y)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ residual + l2_strength * w
    grad[-1] = residual.sum()
    return loss, grad


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    sample_weight: np.ndarray,
    column_names: tuple[str, ...],
    config: LogisticConfig | None = None,
) -> LinearModel:
    """Fit by Newton's method with backtracking on the penalized loss.

    Stops when the gradient max-norm drops below the tolerance or the
    iteration budget is exhausted. Deterministic: no randomness anywhere.
    """
    config = config or LogisticConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(sample_weight, dtype=np.float64)
    if X.shape[0] == 0:
        raise SingleClassError("cannot fit on an empty pool")
    if np.all(y == y[0]):
        # A constant target still has a finite optimum thanks to the
        # probability clipping; allow it so degenerate pools stay trainable.
        pass

    n, p = X.shape
    params = np.zeros(p + 1, dtype=np.float64)
    penalty_mask = np.ones(p + 1)
    penalty_mask[-1] = 0.0

    loss, grad = logistic_loss_gradient(params, X, y, w, config.l2_strength)
    if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
        raise NonFiniteError("loss or gradient is not finite at the start")

    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        if np.max(np.abs(grad)) < config.tolerance:
            converged = True
            iterations -= 1
            break
        z = X @ params[:-1] + params[-1]
        prob = sigmoid(z)
        curvature = w * prob * (1.0 - prob)
        hessian = np.empty((p + 1, p + 1), dtype=np.float64)
        Xc = X * curvature[:, None]
        hessian[:p, :p] = X.T @ Xc
        hessian[:p, p] = Xc.sum(axis=0)
        hessian[p, :p] = hessian[:p, p]
        hessian[p, p] = curvature.sum()
        hessian[np.diag_indices(p + 1)] += config.l2_strength * penalty_mask
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError:
            scale = max(1.0, float(np.abs(np.diag(hessian)).max()))
            step = grad / scale

        # Backtracking line search on the full loss.
        step_size = 1.0
        directional = float(grad @ step)
        improved = False
        for _ in range(60):
            candidate = params - step_size * step
            cand_loss, cand_grad = logistic_loss_gradient(
                candidate, X, y, w, config.l2_strength
            )
            if not np.isfinite(cand_loss) or not np.all(np.isfinite(cand_grad)):
                raise NonFiniteError("loss or gradient overflowed during fitting")
            if cand_loss <= loss - 1e-4 * step_size * directional:
                params, loss, grad = candidate, cand_loss, cand_grad
                improved = True
                break
            step_size *= 0.5
        if not improved:
            converged = True  # no descent direction left at float precision
            break

    return LinearModel(
        coefficients=params[:-1].copy(),
        intercept=float(params[-1]),
        column_names=tuple(column_names),
        config=config,
        n_iterations=iterations,
        converged=converged,
    )


def train_logistic(pool, config: LogisticConfig | None = None) -> LinearModel:
    """Fit the FTA classifier on an imputed training pool."""
    return fit_logistic(
        pool.matrix.values,
        pool.labels.astype(np.float64),
        pool.weights,
        pool.matrix.column_names,
        config,
    )
