"""Tangent kernel at initialization: assembly, spectrum, and kernel predictors.

Data points and output components share a merged row index alpha = i * C + j,
so the kernel of M points with C outputs is an MC x MC Gram matrix of output
gradients. Eigenvectors are returned as rows of an orthogonal matrix A with
K = A.T @ diag(w) @ A and eigenvalues ascending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import models
from .errors import (
    ConfigurationError,
    NumericalIntegrityError,
    SingularKernelError,
    StructuralError,
)

DEFAULT_CUTOFF_REL = 1e-10

_SYM_TOL = 1e-10
_JACOBI_TOL = 1e-14
_MAX_SWEEPS = 100


def _as_inputs(inputs, dim: int) -> np.ndarray:
    arr = np.asarray(inputs, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise StructuralError(f"inputs have shape {arr.shape}, expected (*, {dim})")
    return arr


def jacobian(model: models.QnnModel, theta0, inputs) -> np.ndarray:
    """Stacked output gradients, shape (M * C, P); rows ordered point-major."""
    arr = _as_inputs(inputs, model.config.input_dim)
    if arr.shape[0] == 0:
        return np.zeros((0, model.param_count))
    _, jac = models.batch_forward_and_jacobian(model, arr, theta0)
    full = jac.reshape(-1, model.param_count)
    if not np.all(np.isfinite(full)):
        raise NumericalIntegrityError("non-finite entry in gradient stack")
    return full


def _jacobi_rotate(a, vec, p, q):
    apq = a[p, q]
    diff = a[q, q] - a[p, p]
    if abs(apq) < abs(diff) * 1e-36:
        t = apq / diff
    else:
        theta = diff / (2.0 * apq)
        t = 1.0 / (abs(theta) + math.hypot(1.0, theta))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    col_p, col_q = a[:, p].copy(), a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p, row_q = a[p, :].copy(), a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = a[q, p] = 0.0
    v_p, v_q = vec[:, p].copy(), vec[:, q].copy()
    vec[:, p] = c * v_p - s * v_q
    vec[:, q] = s * v_p + c * v_q


def eig_sym(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and row-eigenvector matrix A of a symmetric matrix.

    Cyclic Jacobi rotations; converges quadratically for the small kernels this
    package produces. Satisfies K = A.T @ diag(w) @ A with A orthogonal.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StructuralError(f"expected a square matrix, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > _SYM_TOL:
        raise StructuralError("matrix is not symmetric")
    a = np.array(a, copy=True)
    m = a.shape[0]
    vec = np.eye(m)
    if m > 1:
        scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
        for _ in range(_MAX_SWEEPS):
            off = np.max(np.abs(a - np.diag(np.diagonal(a))))
            if off <= _JACOBI_TOL * scale:
                break
            for p in range(m - 1):
                for q in range(p + 1, m):
                    if abs(a[p, q]) > 1e-300:
                        _jacobi_rotate(a, vec, p, q)
        else:
            raise NumericalIntegrityError("Jacobi eigensolver failed to converge")
    w = np.diagonal(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], vec[:, order].T


@dataclass(frozen=True)
class KernelBundle:
    """Kernel matrix with its eigensystem and spectrally regularized inverse."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # rows; K = A.T @ diag(eigenvalues) @ A
    inverse: np.ndarray
    cutoff_rel: float
    cutoff_used: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "size": self.size,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "cutoff_rel": float(self.cutoff_rel),
            "cutoff_used": float(self.cutoff_used),
        }


def bundle_from_matrix(matrix, cutoff_rel: float = DEFAULT_CUTOFF_REL) -> KernelBundle:
    """Eigendecompose a symmetric kernel and attach its spectral pseudo-inverse."""
    w, vecs = eig_sym(matrix)
    cutoff = cutoff_rel * max(float(w[-1]), 0.0)
    inv_diag = np.zeros_like(w)
    kept = w > cutoff
    inv_diag[kept] = 1.0 / w[kept]
    inverse = vecs.T @ (inv_diag[:, None] * vecs)
    return KernelBundle(
        matrix=np.asarray(matrix, dtype=float),
        eigenvalues=w,
        eigenvectors=vecs,
        inverse=inverse,
        cutoff_rel=cutoff_rel,
        cutoff_used=cutoff,
    )


def kernel_matrix(
    model: models.QnnModel, theta0, inputs, cutoff_rel: float = DEFAULT_CUTOFF_REL
) -> KernelBundle:
    """Gram matrix of output gradients over the merged (point, output) index.

    Built as G @ G.T from the (MC, P) Jacobian, hence symmetric PSD up to
    round-off by construction.
    """
    g = jacobian(model, theta0, inputs)
    k = g @ g.T
    k = 0.5 * (k + k.T)
    return bundle_from_matrix(k, cutoff_rel)


def cross_kernel(model: models.QnnModel, theta0, test_inputs, train_inputs) -> np.ndarray:
    """Gradient inner products between test and train points, shape (TC, MC)."""
    g_test = jacobian(model, theta0, test_inputs)
    g_train = jacobian(model, theta0, train_inputs)
    return g_test @ g_train.T


@dataclass(frozen=True)
class Diagnostics:
    """Spectral training diagnostics of a kernel at initialization."""

    lambda_min: float
    lambda_max: float
    kappa: float
    eta_crit: float
    tau: float
    cutoff_used: float

    def to_json_dict(self) -> dict:
        return {
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "kappa": self.kappa,
            "eta_crit": self.eta_crit,
            "tau": self.tau,
            "cutoff_used": self.cutoff_used,
        }


def diagnostics(bundle: KernelBundle, cutoff_rel: float | None = None) -> Diagnostics:
    """Critical learning rate 2/lambda_max, condition number, and decay time 2*kappa.

    lambda_min is the smallest eigenvalue above the relative cutoff, so a
    rank-deficient kernel is diagnosed on its retained spectrum. When nothing
    clears the cutoff the kernel is unusable and SingularKernelError flags a
    degenerate or too-shallow model.
    """
    rel = bundle.cutoff_rel if cutoff_rel is None else cutoff_rel
    w = bundle.eigenvalues
    lam_max = float(w[-1])
    if lam_max <= 0.0:
        raise SingularKernelError("kernel has no positive eigenvalues")
    cutoff = rel * lam_max
    retained = w[w > cutoff]
    if retained.size == 0:
        raise SingularKernelError(f"all eigenvalues at or below cutoff {cutoff:.3e}")
    lam_min = float(retained[0])
    kappa = lam_max / lam_min
    return Diagnostics(
        lambda_min=lam_min,
        lambda_max=lam_max,
        kappa=kappa,
        eta_crit=2.0 / lam_max,
        tau=2.0 * kappa,
        cutoff_used=cutoff,
    )


def regularized_inverse(bundle: KernelBundle, cutoff_rel: float | None = None) -> np.ndarray:
    """Spectral pseudo-inverse: eigenvalues above cutoff inverted, the rest zeroed."""
    rel = bundle.cutoff_rel if cutoff_rel is None else cutoff_rel
    w, vecs = bundle.eigenvalues, bundle.eigenvectors
    cutoff = rel * max(float(w[-1]), 0.0)
    kept = w > cutoff
    if not np.any(kept):
        raise SingularKernelError("all eigenvalues at or below cutoff")
    inv_diag = np.zeros_like(w)
    inv_diag[kept] = 1.0 / w[kept]
    return vecs.T @ (inv_diag[:, None] * vecs)


def inference_map(cross: np.ndarray, k_inv: np.ndarray) -> np.ndarray:
    """Linear map sending training labels to predictions: cross @ K^-1."""
    cross = np.asarray(cross, dtype=float)
    if cross.ndim != 2 or cross.shape[1] != k_inv.shape[0]:
        raise StructuralError(
            f"cross kernel {cross.shape} does not conform with inverse {k_inv.shape}"
        )
    return cross @ k_inv


def _merged_labels(labels, size: int) -> np.ndarray:
    y = np.ravel(np.asarray(labels, dtype=float))
    if y.shape != (size,):
        raise StructuralError(f"labels flatten to {y.shape}, kernel expects ({size},)")
    return y


def predict_at_time(cross, bundle: KernelBundle, labels, eta: float, t: float) -> np.ndarray:
    """Expected outputs after training time t under the frozen-kernel flow.

    Computes cross @ K^-1 @ (1 - exp(-eta*K*t)) @ y spectrally; assumes the
    mean initial output vanishes, so predictions start at zero and relax
    toward the labels.
    """
    if eta <= 0.0:
        raise ConfigurationError("eta must be positive")
    if t < 0.0:
        raise ConfigurationError("t must be >= 0")
    y = _merged_labels(labels, bundle.size)
    w, vecs = bundle.eigenvalues, bundle.eigenvectors
    kept = w > bundle.cutoff_used
    if not np.any(kept):
        raise SingularKernelError("all eigenvalues at or below cutoff")
    filt = np.zeros_like(w)
    filt[kept] = -np.expm1(-eta * w[kept] * t) / w[kept]
    cross = np.asarray(cross, dtype=float)
    return cross @ (vecs.T @ (filt * (vecs @ y)))


def predict_infinite(cross, k_inv: np.ndarray, labels) -> np.ndarray:
    """Infinite-time kernel predictions; exact on training inputs at full rank."""
    y = _merged_labels(labels, k_inv.shape[0])
    return inference_map(cross, k_inv) @ y


def error_trajectory(bundle: KernelBundle, eta: float, eps0, t: int) -> np.ndarray:
    """Residuals after t discrete GD steps under the frozen kernel: (1 - eta*K)^t eps0."""
    if t < 0 or int(t) != t:
        raise ConfigurationError("t must be a non-negative integer")
    e0 = _merged_labels(eps0, bundle.size)
    w, vecs = bundle.eigenvalues, bundle.eigenvectors
    decay = (1.0 - eta * w) ** int(t)
    return vecs.T @ (decay * (vecs @ e0))


def merged_index_header(n_points: int, n_outputs: int) -> list[str]:
    return [f"{i}.{j}" for i in range(n_points) for j in range(n_outputs)]
