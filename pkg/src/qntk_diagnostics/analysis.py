"""Scoring metrics, the model Fourier-spectrum probe, and the comparison pipeline.

``build_report`` runs the full per-seed protocol: kernel diagnostics at the
shared initialization, infinite-time kernel predictions, actual training, and
agreement metrics, then aggregates mean and standard deviation across seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import datasets, models, qntk, training
from .errors import (
    ConfigurationError,
    DivergenceError,
    SingularKernelError,
    StructuralError,
    UndefinedMetricError,
)

EXTENDED_POINTS_1D = 100
FOURIER_GRID = 64
FOURIER_SEEDS = 20


def r2_score(preds, labels) -> float:
    """Coefficient of determination, 1 - sum(e^2) / sum((y - mean)^2)."""
    p = np.ravel(np.asarray(preds, dtype=float))
    y = np.ravel(np.asarray(labels, dtype=float))
    if p.shape != y.shape:
        raise StructuralError(f"predictions {p.shape} and labels {y.shape} differ")
    if y.size < 2:
        raise UndefinedMetricError("need at least two labels")
    spread = float(np.sum((y - y.mean()) ** 2))
    if spread == 0.0:
        raise UndefinedMetricError("labels have zero variance")
    return 1.0 - float(np.sum((p - y) ** 2)) / spread


def aad(a, b) -> float:
    """Average absolute difference between two equally long vectors."""
    a = np.ravel(np.asarray(a, dtype=float))
    b = np.ravel(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise StructuralError(f"vectors {a.shape} and {b.shape} differ in length")
    if a.size == 0:
        raise StructuralError("vectors must be non-empty")
    return float(np.mean(np.abs(a - b)))


def fft_coefficients(samples) -> np.ndarray:
    """DFT coefficients normalized so a pure cos signal gives |c_{+-1}| = 1/2."""
    samples = np.asarray(samples, dtype=float)
    return np.fft.fft(samples) / samples.size


@dataclass(frozen=True)
class SpectrumReport:
    """Ensemble-averaged magnitudes of the model's sampled Fourier coefficients."""

    frequencies: np.ndarray  # signed integer bins, ascending
    mean_abs_coeff: np.ndarray
    mean_sq_coeff: np.ndarray
    mean_power: float  # ensemble mean of the per-sample signal power
    ensemble_size: int
    grid_size: int

    def high_frequency_mass(self, threshold: float) -> float:
        """Fraction of summed |c| carried by bins with |frequency| > threshold."""
        total = float(np.sum(self.mean_abs_coeff))
        high = float(np.sum(self.mean_abs_coeff[np.abs(self.frequencies) > threshold]))
        return high / total


def fourier_spectrum(
    model: models.QnnModel,
    seeds=range(FOURIER_SEEDS),
    grid_size: int = FOURIER_GRID,
    thetas=None,
) -> SpectrumReport:
    """Sample the first output over a 2*pi window and average |FFT| over an ensemble.

    The ensemble is either explicit parameter vectors (``thetas``) or uniform
    [0, 2*pi) draws from the given seeds."""
    if grid_size < 32 or grid_size & (grid_size - 1):
        raise ConfigurationError("grid_size must be a power of two >= 32")
    if model.config.input_dim != 1:
        raise StructuralError("the spectrum probe needs a one-dimensional input")
    if thetas is None:
        thetas = [training.initial_parameters(model.param_count, s) for s in seeds]
    thetas = [np.asarray(t, dtype=float) for t in thetas]
    if not thetas:
        raise ConfigurationError("ensemble must be non-empty")

    xs = (-np.pi + 2.0 * np.pi * np.arange(grid_size) / grid_size).reshape(-1, 1)
    plan = models.batch_plan(model, xs)

    abs_acc = np.zeros(grid_size)
    sq_acc = np.zeros(grid_size)
    power_acc = 0.0
    for theta in thetas:
        samples = models.batch_forward(model, xs, theta, plan=plan)[:, 0]
        coeff = fft_coefficients(samples)
        abs_acc += np.abs(coeff)
        sq_acc += np.abs(coeff) ** 2
        power_acc += float(np.mean(samples**2))

    count = len(thetas)
    freqs = np.fft.fftfreq(grid_size, d=1.0 / grid_size).astype(int)
    order = np.argsort(freqs, kind="stable")
    return SpectrumReport(
        frequencies=freqs[order],
        mean_abs_coeff=abs_acc[order] / count,
        mean_sq_coeff=sq_acc[order] / count,
        mean_power=power_acc / count,
        ensemble_size=count,
        grid_size=grid_size,
    )


def resolve_eta(mode: str, value: float | None, diag: qntk.Diagnostics | None) -> float:
    """Learning rate from an eta mode: crit, fraction (of crit), or absolute."""
    if mode == "crit":
        if diag is None:
            raise SingularKernelError("critical learning rate needs kernel diagnostics")
        return diag.eta_crit
    if mode == "fraction":
        if value is None or value <= 0.0:
            raise ConfigurationError("fraction mode needs a positive value")
        if diag is None:
            raise SingularKernelError("critical learning rate needs kernel diagnostics")
        return value * diag.eta_crit
    if mode == "absolute":
        if value is None or value <= 0.0:
            raise ConfigurationError("absolute mode needs a positive value")
        return value
    raise ConfigurationError(f"unknown eta mode {mode!r}")


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    status: str  # "ok" | "singular_kernel" | "diverged"
    error: str | None
    diagnostics: qntk.Diagnostics | None
    eta: float | None
    converged: bool | None
    epochs_run: int | None
    final_loss: float | None
    rel_param_change: float | None
    r2_qntk: float | None
    r2_qnn: float | None
    aad_value: float | None
    qntk_train: np.ndarray | None
    qntk_test: np.ndarray | None
    qntk_extended: np.ndarray | None
    qnn_extended: np.ndarray | None

    def to_json_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "status": self.status,
            "error": self.error,
            "diagnostics": self.diagnostics.to_json_dict() if self.diagnostics else None,
            "eta": self.eta,
            "converged": self.converged,
            "epochs_run": self.epochs_run,
            "final_loss": self.final_loss,
            "rel_param_change": self.rel_param_change,
            "r2_qntk": self.r2_qntk,
            "r2_qnn": self.r2_qnn,
            "aad": self.aad_value,
        }
        return out


@dataclass(frozen=True)
class DiagnosticReport:
    model_config: models.ModelConfig
    dataset_provenance: dict
    seeds: tuple[int, ...]
    eta_mode: tuple[str, float | None]
    cutoff_rel: float
    extended_inputs: np.ndarray
    outcomes: tuple[SeedOutcome, ...]
    aggregates: dict
    qntk_curve_mean: np.ndarray | None  # (D, C) over ok seeds
    qntk_curve_std: np.ndarray | None
    qnn_curve_mean: np.ndarray | None
    qnn_curve_std: np.ndarray | None

    def to_json_dict(self) -> dict:
        from dataclasses import asdict

        return {
            "model": asdict(self.model_config),
            "dataset": self.dataset_provenance,
            "seeds": list(self.seeds),
            "eta_mode": {"mode": self.eta_mode[0], "value": self.eta_mode[1]},
            "cutoff_rel": self.cutoff_rel,
            "results": [o.to_json_dict() for o in self.outcomes],
            "aggregates": self.aggregates,
        }


_AGGREGATE_FIELDS = (
    "r2_qntk",
    "r2_qnn",
    "aad_value",
    "rel_param_change",
    "final_loss",
    "epochs_run",
)


def _aggregate(outcomes) -> dict:
    ok = [o for o in outcomes if o.status == "ok"]
    agg = {"n_ok": len(ok), "n_failed": len(outcomes) - len(ok)}
    for name in _AGGREGATE_FIELDS:
        values = [getattr(o, name) for o in ok if getattr(o, name) is not None]
        key = "aad" if name == "aad_value" else name
        if values:
            arr = np.asarray(values, dtype=float)
            agg[key] = {"mean": float(arr.mean()), "std": float(arr.std())}
        else:
            agg[key] = None
    return agg


def default_extended_inputs(dataset: datasets.Dataset) -> np.ndarray:
    """Evaluation inputs spanning the dataset: a 100-point line for 1-d features,
    the fixed 2-d grid otherwise."""
    if dataset.input_dim == 1:
        lo = float(dataset.inputs.min())
        hi = float(dataset.inputs.max())
        return datasets.extended_test_inputs_1d(EXTENDED_POINTS_1D, lo, hi)
    if dataset.input_dim == 2:
        return datasets.inference_grid_moons()
    raise StructuralError("no default evaluation inputs for input_dim > 2")


def _batch_forward(model, inputs, theta) -> np.ndarray:
    return models.batch_forward(model, np.asarray(inputs, dtype=float), theta)


def build_report(
    model_config: models.ModelConfig,
    dataset: datasets.Dataset,
    seeds,
    train_config: training.TrainConfig | None = None,
    eta_mode: tuple[str, float | None] = ("crit", None),
    extended_inputs=None,
    cutoff_rel: float = qntk.DEFAULT_CUTOFF_REL,
) -> DiagnosticReport:
    """Per-seed kernel diagnostics, kernel predictions, training, and comparison.

    Singular kernels and diverged runs become error entries for their seed
    without aborting the remaining seeds."""
    if dataset.input_dim != model_config.input_dim:
        raise StructuralError("dataset feature dimension does not match the model")
    if dataset.n_outputs != model_config.n_outputs:
        raise StructuralError("dataset label dimension does not match the model")
    model = models.build_model(model_config)
    base = train_config or training.TrainConfig(eta=1.0)
    extended = (
        default_extended_inputs(dataset)
        if extended_inputs is None
        else np.asarray(extended_inputs, dtype=float)
    )
    if extended.ndim == 1:
        extended = extended.reshape(-1, 1)

    train_x, train_y = dataset.train_inputs, dataset.train_labels
    test_x, test_y = dataset.test_inputs, dataset.test_labels
    n_outputs = model_config.n_outputs

    outcomes = []
    for seed in seeds:
        theta0 = training.initial_parameters(model.param_count, seed)
        try:
            bundle = qntk.kernel_matrix(model, theta0, train_x, cutoff_rel)
            diag = qntk.diagnostics(bundle)
            eta = resolve_eta(eta_mode[0], eta_mode[1], diag)
            k_inv = bundle.inverse
            flat_y = np.ravel(train_y)

            qntk_train = qntk.predict_infinite(bundle.matrix, k_inv, flat_y)
            cross_test = qntk.cross_kernel(model, theta0, test_x, train_x)
            qntk_test = qntk.predict_infinite(cross_test, k_inv, flat_y)
            cross_ext = qntk.cross_kernel(model, theta0, extended, train_x)
            qntk_ext = qntk.predict_infinite(cross_ext, k_inv, flat_y)

            log = training.train(model, dataset, replace(base, eta=eta, seed=seed))
            qnn_test = _batch_forward(model, test_x, log.theta_final)
            qnn_ext = _batch_forward(model, extended, log.theta_final)

            outcomes.append(
                SeedOutcome(
                    seed=seed,
                    status="ok",
                    error=None,
                    diagnostics=diag,
                    eta=eta,
                    converged=log.converged,
                    epochs_run=log.epochs_run,
                    final_loss=log.final_loss,
                    rel_param_change=training.lazy_metrics(log),
                    r2_qntk=r2_score(qntk_test, test_y),
                    r2_qnn=r2_score(qnn_test, test_y),
                    aad_value=aad(qnn_ext, qntk_ext),
                    qntk_train=qntk_train.reshape(-1, n_outputs),
                    qntk_test=qntk_test.reshape(-1, n_outputs),
                    qntk_extended=qntk_ext.reshape(-1, n_outputs),
                    qnn_extended=qnn_ext,
                )
            )
        except SingularKernelError as exc:
            outcomes.append(_failed_outcome(seed, "singular_kernel", exc))
        except DivergenceError as exc:
            outcomes.append(_failed_outcome(seed, "diverged", exc))

    ok = [o for o in outcomes if o.status == "ok"]
    curves = {}
    for name in ("qntk", "qnn"):
        stacks = [getattr(o, f"{name}_extended") for o in ok]
        if stacks:
            arr = np.stack(stacks)
            curves[f"{name}_mean"] = arr.mean(axis=0)
            curves[f"{name}_std"] = arr.std(axis=0)
        else:
            curves[f"{name}_mean"] = None
            curves[f"{name}_std"] = None

    return DiagnosticReport(
        model_config=model_config,
        dataset_provenance=dataset.provenance,
        seeds=tuple(seeds),
        eta_mode=eta_mode,
        cutoff_rel=cutoff_rel,
        extended_inputs=extended,
        outcomes=tuple(outcomes),
        aggregates=_aggregate(outcomes),
        qntk_curve_mean=curves["qntk_mean"],
        qntk_curve_std=curves["qntk_std"],
        qnn_curve_mean=curves["qnn_mean"],
        qnn_curve_std=curves["qnn_std"],
    )


def _failed_outcome(seed, status, exc) -> SeedOutcome:
    return SeedOutcome(
        seed=seed,
        status=status,
        error=str(exc),
        diagnostics=None,
        eta=None,
        converged=None,
        epochs_run=None,
        final_loss=None,
        rel_param_change=None,
        r2_qntk=None,
        r2_qnn=None,
        aad_value=None,
        qntk_train=None,
        qntk_test=None,
        qntk_extended=None,
        qnn_extended=None,
    )


# --- CSV schemas shared with the CLI and the plot scripts --------------------


def spectrum_csv_rows(report: SpectrumReport):
    header = ["omega", "mean_abs_coeff"]
    rows = [(int(w), float(c)) for w, c in zip(report.frequencies, report.mean_abs_coeff)]
    return header, rows


def diagnostics_csv_rows(outcomes):
    header = ["seed", "lambda_min", "lambda_max", "kappa", "eta_crit", "tau"]
    rows = []
    for o in outcomes:
        if o.status == "ok" and o.diagnostics is not None:
            d = o.diagnostics
            rows.append((o.seed, d.lambda_min, d.lambda_max, d.kappa, d.eta_crit, d.tau))
    return header, rows


def training_csv_rows(outcomes):
    header = ["seed", "epochs", "final_loss", "rel_param_change"]
    rows = [
        (o.seed, o.epochs_run, o.final_loss, o.rel_param_change)
        for o in outcomes
        if o.status == "ok"
    ]
    return header, rows


def predictions_csv_rows(report: DiagnosticReport):
    """1-d single-output data keeps the plain x/qntk/qnn columns; wider data
    gets per-feature x_i and per-output suffixed columns."""
    inputs = report.extended_inputs
    dim = inputs.shape[1]
    n_outputs = report.model_config.n_outputs
    if dim == 1 and n_outputs == 1:
        header = ["x", "qntk_mean", "qntk_std", "qnn_mean", "qnn_std"]
    else:
        header = [f"x_{k}" for k in range(dim)]
        for name in ("qntk_mean", "qntk_std", "qnn_mean", "qnn_std"):
            header += [f"{name}_{j}" for j in range(n_outputs)]
    rows = []
    curves = (
        report.qntk_curve_mean,
        report.qntk_curve_std,
        report.qnn_curve_mean,
        report.qnn_curve_std,
    )
    if any(c is None for c in curves):
        return header, rows
    for i in range(inputs.shape[0]):
        row = [float(v) for v in inputs[i]]
        for curve in curves:
            row += [float(v) for v in curve[i]]
        rows.append(tuple(row))
    return header, rows


def dataset_csv_rows(dataset: datasets.Dataset):
    header = (
        [f"feature_{k}" for k in range(dataset.input_dim)]
        + [f"label_{j}" for j in range(dataset.n_outputs)]
        + ["is_train"]
    )
    rows = []
    for i in range(dataset.n_points):
        row = [float(v) for v in dataset.inputs[i]]
        row += [float(v) for v in dataset.labels[i]]
        row.append(1 if dataset.train_mask[i] else 0)
        rows.append(tuple(row))
    return header, rows
