"""Full-batch vanilla gradient descent with residual logging.

The loss is the half sum of squared residuals over all training points and
output components; one epoch is one parameter update using all of them.
Training stops when the Euclidean parameter step drops below the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models
from .errors import ConfigurationError, DivergenceError, StructuralError, UndefinedMetricError

TWO_PI = 2.0 * np.pi
_RESIDUAL_BUDGET = 1_000_000


@dataclass(frozen=True)
class TrainConfig:
    eta: float
    max_epochs: int = 500
    convergence_tol: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ConfigurationError("eta must be positive")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be >= 1")
        if self.convergence_tol <= 0.0:
            raise ConfigurationError("convergence_tol must be positive")


@dataclass(frozen=True)
class TrainLog:
    """losses[t] is the loss at theta(t) for t = 0..epochs_run; step_norms[t]
    the parameter step taken at epoch t+1. Residual snapshots are stored at
    ``residual_epochs`` (every epoch unless the memory budget forces a stride)."""

    losses: np.ndarray
    step_norms: np.ndarray
    theta0: np.ndarray
    theta_final: np.ndarray
    epochs_run: int
    converged: bool
    residuals: np.ndarray
    residual_epochs: np.ndarray

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])

    def summary_dict(self) -> dict:
        return {
            "converged": self.converged,
            "epochs_run": self.epochs_run,
            "final_loss": self.final_loss,
            "relative_param_change": lazy_metrics(self),
        }

    def csv_rows(self) -> list[tuple]:
        rows = [(0, float(self.losses[0]), 0.0)]
        for t in range(1, self.epochs_run + 1):
            rows.append((t, float(self.losses[t]), float(self.step_norms[t - 1])))
        return rows


def initial_parameters(param_count: int, seed: int) -> np.ndarray:
    """Uniform draw from [0, 2*pi) per parameter, reproducible from the seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(0.0, TWO_PI, size=param_count)


def mse_loss(preds, labels) -> float:
    """Half sum of squared residuals over the merged (point, output) index."""
    p = np.ravel(np.asarray(preds, dtype=float))
    y = np.ravel(np.asarray(labels, dtype=float))
    if p.shape != y.shape:
        raise StructuralError(f"predictions {p.shape} and labels {y.shape} differ")
    diff = p - y
    return float(0.5 * diff @ diff)


def _train_arrays(model, dataset):
    inputs = np.asarray(dataset.train_inputs, dtype=float)
    labels = np.ravel(np.asarray(dataset.train_labels, dtype=float))
    if inputs.ndim != 2 or inputs.shape[1] != model.config.input_dim:
        raise StructuralError("dataset feature dimension does not match the model")
    if labels.size != inputs.shape[0] * model.config.n_outputs:
        raise StructuralError("dataset label shape does not match the model outputs")
    return inputs, labels


def _batch_forward_jacobian(model, plan, theta):
    f, jac = models.batch_forward_and_jacobian(model, None, theta, plan=plan)
    return f.reshape(-1), jac.reshape(-1, model.param_count)


def gd_step(model, theta, dataset, eta: float) -> np.ndarray:
    """One update theta - eta * G.T @ residuals over the training split."""
    theta = np.asarray(theta, dtype=float)
    inputs, labels = _train_arrays(model, dataset)
    plan = models.batch_plan(model, inputs)
    f, g = _batch_forward_jacobian(model, plan, theta)
    with np.errstate(invalid="ignore", over="ignore"):
        new_theta = theta - eta * (g.T @ (f - labels))
    if not np.all(np.isfinite(new_theta)):
        raise DivergenceError("gradient step produced non-finite parameters")
    return new_theta


def train(model, dataset, config: TrainConfig) -> TrainLog:
    """Iterate gd_step until the step norm converges or max_epochs is hit."""
    inputs, labels = _train_arrays(model, dataset)
    plan = models.batch_plan(model, inputs)
    stride = 1 if labels.size * config.max_epochs <= _RESIDUAL_BUDGET else 10

    theta0 = initial_parameters(model.param_count, config.seed)
    theta = theta0
    losses, step_norms = [], []
    residuals, residual_epochs = [], []
    converged = False
    epochs_run = 0

    for epoch in range(config.max_epochs):
        f, g = _batch_forward_jacobian(model, plan, theta)
        eps = f - labels
        losses.append(0.5 * float(eps @ eps))
        if epoch % stride == 0:
            residuals.append(eps)
            residual_epochs.append(epoch)
        with np.errstate(invalid="ignore", over="ignore"):
            new_theta = theta - config.eta * (g.T @ eps)
        if not np.all(np.isfinite(new_theta)):
            # losses/residuals already cover theta(epoch), the last finite state
            partial = TrainLog(
                losses=np.asarray(losses),
                step_norms=np.asarray(step_norms),
                theta0=theta0,
                theta_final=theta,
                epochs_run=epoch,
                converged=False,
                residuals=np.asarray(residuals),
                residual_epochs=np.asarray(residual_epochs, dtype=int),
            )
            raise DivergenceError(
                f"non-finite parameters at epoch {epoch + 1}", log=partial
            )
        step = float(np.linalg.norm(new_theta - theta))
        step_norms.append(step)
        theta = new_theta
        epochs_run = epoch + 1
        if step < config.convergence_tol:
            converged = True
            break

    return _finish_log(
        model, plan, labels, theta, theta0, losses, step_norms,
        residuals, residual_epochs, epochs_run, converged,
    )


def _finish_log(model, plan, labels, theta, theta0, losses, step_norms,
                residuals, residual_epochs, epochs_run, converged) -> TrainLog:
    f = models.batch_forward(model, None, theta, plan=plan).reshape(-1)
    eps = f - labels
    losses = losses + [0.5 * float(eps @ eps)]
    residuals = residuals + [eps]
    residual_epochs = residual_epochs + [epochs_run]
    return TrainLog(
        losses=np.asarray(losses),
        step_norms=np.asarray(step_norms),
        theta0=theta0,
        theta_final=theta,
        epochs_run=epochs_run,
        converged=converged,
        residuals=np.asarray(residuals),
        residual_epochs=np.asarray(residual_epochs, dtype=int),
    )


def lazy_metrics(log: TrainLog) -> float:
    """Relative parameter change over training, ||theta_f - theta_0|| / ||theta_0||."""
    base = float(np.linalg.norm(log.theta0))
    if base == 0.0:
        raise UndefinedMetricError("initial parameter vector has zero norm")
    return float(np.linalg.norm(log.theta_final - log.theta0)) / base
