"""Synthetic datasets and the Ising ground-state oracle.

Gaussian noise is drawn with a Box-Muller transform over PCG64 uniforms so a
given seed reproduces a dataset bit-for-bit; the same generator then drives
the train/test permutation, in that order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import simulator
from .errors import ConfigurationError, StructuralError

MAX_SPINS = 10
_DEGENERACY_GAP = 1e-10


class DegenerateGroundSpaceWarning(UserWarning):
    """Ground space was (near-)degenerate; the parity-even state was used."""


def _box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals from uniform pairs; deterministic for a seeded rng."""
    pairs = (size + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1], keeps the log finite
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([radius * np.cos(2.0 * np.pi * u2), radius * np.sin(2.0 * np.pi * u2)])
    return z[:size]


def _split_mask(n_points: int, rng: np.random.Generator) -> np.ndarray:
    mask = np.zeros(n_points, dtype=bool)
    mask[rng.permutation(n_points)[: n_points // 2]] = True
    return mask


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-feature affine map from the fitted source range onto a target interval."""

    src_min: np.ndarray
    src_max: np.ndarray
    target_min: float
    target_max: float

    @classmethod
    def fit(cls, values: np.ndarray, target_range: tuple[float, float]) -> "MinMaxScaler":
        values = np.asarray(values, dtype=float)
        lo, hi = values.min(axis=0), values.max(axis=0)
        if np.any(hi - lo <= 0.0):
            raise StructuralError("cannot fit a min-max scaler on a constant feature")
        return cls(lo, hi, float(target_range[0]), float(target_range[1]))

    def transform(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        unit = (values - self.src_min) / (self.src_max - self.src_min)
        return self.target_min + unit * (self.target_max - self.target_min)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        unit = (values - self.target_min) / (self.target_max - self.target_min)
        return self.src_min + unit * (self.src_max - self.src_min)

    def to_json_dict(self) -> dict:
        return {
            "src_min": [float(v) for v in np.atleast_1d(self.src_min)],
            "src_max": [float(v) for v in np.atleast_1d(self.src_max)],
            "target_min": self.target_min,
            "target_max": self.target_max,
        }


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray  # (M, d), already scaled where applicable
    labels: np.ndarray  # (M, C)
    train_mask: np.ndarray  # (M,) bool
    feature_scaler: MinMaxScaler | None
    label_scaler: MinMaxScaler | None
    provenance: dict

    @property
    def n_points(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.labels.shape[1]

    @property
    def train_inputs(self) -> np.ndarray:
        return self.inputs[self.train_mask]

    @property
    def train_labels(self) -> np.ndarray:
        return self.labels[self.train_mask]

    @property
    def test_inputs(self) -> np.ndarray:
        return self.inputs[~self.train_mask]

    @property
    def test_labels(self) -> np.ndarray:
        return self.labels[~self.train_mask]

    def sidecar_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "feature_scaler": self.feature_scaler.to_json_dict() if self.feature_scaler else None,
            "label_scaler": self.label_scaler.to_json_dict() if self.label_scaler else None,
            "n_points": self.n_points,
            "input_dim": self.input_dim,
            "n_outputs": self.n_outputs,
        }


# --- transverse-field Ising chain -------------------------------------------

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


def _site_operator(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    out = np.array([[1.0]])
    for q in range(n_spins):
        out = np.kron(out, op if q == site else np.eye(2))
    return out


def tfim_hamiltonian(n_spins: int, h_field: float, coupling: float = 1.0) -> np.ndarray:
    """Dense periodic-chain Hamiltonian: -J * sum Z_i Z_{i+1} - h * sum X_i."""
    if not 2 <= n_spins <= MAX_SPINS:
        raise ConfigurationError(f"n_spins must be in [2, {MAX_SPINS}]")
    dim = 1 << n_spins
    ham = np.zeros((dim, dim))
    z_ops = [_site_operator(_SZ, q, n_spins) for q in range(n_spins)]
    for q in range(n_spins):
        ham -= coupling * z_ops[q] @ z_ops[(q + 1) % n_spins]
        ham -= h_field * _site_operator(_SX, q, n_spins)
    return ham


def _spin_flip(vector: np.ndarray, n_spins: int) -> np.ndarray:
    """Apply the global spin flip (X on every site): index -> bitwise complement."""
    idx = np.arange(vector.size) ^ (vector.size - 1)
    return vector[idx]


def tfim_ground_state(n_spins: int, h_field: float, coupling: float = 1.0):
    """Ground energy and vector; resolves degeneracy into the parity-even sector.

    The Hamiltonian commutes with the global spin flip, so a (near-)degenerate
    ground space is diagonalized in that symmetry and the +1-parity vector
    returned."""
    ham = tfim_hamiltonian(n_spins, h_field, coupling)
    energies, vectors = np.linalg.eigh(ham)
    ground = vectors[:, 0]
    degenerate = bool(energies[1] - energies[0] < _DEGENERACY_GAP)
    if degenerate:
        span = vectors[:, energies - energies[0] < _DEGENERACY_GAP]
        flipped = np.column_stack([_spin_flip(span[:, k], n_spins) for k in range(span.shape[1])])
        parity = span.T @ flipped
        parity = 0.5 * (parity + parity.T)
        pvals, pvecs = np.linalg.eigh(parity)
        ground = span @ pvecs[:, -1]  # eigenvalue closest to +1
        ground = ground / np.linalg.norm(ground)
    return float(energies[0]), ground, degenerate


def tfim_ground_magnetization(n_spins: int, h_field: float, coupling: float = 1.0) -> float:
    """Per-site transverse magnetization (1/N) sum <X_i> of the ground state."""
    _, ground, degenerate = tfim_ground_state(n_spins, h_field, coupling)
    if degenerate:
        warnings.warn(
            f"degenerate ground space at h={h_field}; using the parity-even sector",
            DegenerateGroundSpaceWarning,
        )
    return simulator.expectation(ground.astype(complex), simulator.Observable.mean_x(n_spins))


_DEFAULT_FIELDS = tuple(np.linspace(-5.0, 4.5, 20))


@dataclass(frozen=True)
class TfimConfig:
    n_spins: int = 6
    coupling: float = 1.0
    h_values: tuple[float, ...] = _DEFAULT_FIELDS
    feature_range: tuple[float, float] = (-0.95, 0.95)

    def __post_init__(self):
        if not 2 <= self.n_spins <= MAX_SPINS:
            raise ConfigurationError(f"n_spins must be in [2, {MAX_SPINS}]")
        if not self.h_values:
            raise ConfigurationError("h_values must be non-empty")


def make_tfim_dataset(config: TfimConfig | None = None, split_seed: int = 0) -> Dataset:
    """Magnetization labels over a sweep of field strengths, features min-max scaled.

    Labels stay unscaled (they already sit well inside [-1, 1])."""
    config = config or TfimConfig()
    ratios = np.asarray(config.h_values, dtype=float).reshape(-1, 1) / config.coupling
    labels = np.array(
        [
            tfim_ground_magnetization(config.n_spins, h, config.coupling)
            for h in np.asarray(config.h_values, dtype=float)
        ]
    ).reshape(-1, 1)
    scaler = MinMaxScaler.fit(ratios, config.feature_range)
    rng = np.random.Generator(np.random.PCG64(split_seed))
    return Dataset(
        inputs=scaler.transform(ratios),
        labels=labels,
        train_mask=_split_mask(ratios.shape[0], rng),
        feature_scaler=scaler,
        label_scaler=None,
        provenance={
            "generator": "tfim",
            "split_seed": split_seed,
            "n_spins": config.n_spins,
            "coupling": config.coupling,
            "h_values": [float(h) for h in config.h_values],
        },
    )


def make_sinusoid_dataset(
    n_points: int = 20,
    noise_std: float = 0.5,
    seed: int = 0,
    noise_amplitude: float = 0.4,
) -> Dataset:
    """Noisy sine on a uniform grid over [-1, 1], labels min-max scaled to [-1, 1]."""
    if n_points < 2:
        raise ConfigurationError("n_points must be >= 2")
    x = np.linspace(-1.0, 1.0, n_points).reshape(-1, 1)
    rng = np.random.Generator(np.random.PCG64(seed))
    raw = np.sin(np.pi * x[:, 0]) + noise_amplitude * noise_std * _box_muller(rng, n_points)
    raw = raw.reshape(-1, 1)
    label_scaler = MinMaxScaler.fit(raw, (-1.0, 1.0))
    return Dataset(
        inputs=x,
        labels=label_scaler.transform(raw),
        train_mask=_split_mask(n_points, rng),
        feature_scaler=None,
        label_scaler=label_scaler,
        provenance={
            "generator": "sinusoid",
            "seed": seed,
            "n_points": n_points,
            "noise_std": noise_std,
            "noise_amplitude": noise_amplitude,
        },
    )


def make_moons_dataset(n_points: int = 20, noise_std: float = 0.2, seed: int = 0) -> Dataset:
    """Two interleaved half circles with Gaussian noise, features scaled to [-1, 1].

    Upper arc (cos t, sin t) is class 0 with label (+1, -1); lower arc
    (1 - cos t, 1/2 - sin t) is class 1 with label (-1, +1)."""
    if n_points < 2 or n_points % 2:
        raise ConfigurationError("n_points must be even and >= 2")
    half = n_points // 2
    t = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    raw = np.vstack([upper, lower])
    rng = np.random.Generator(np.random.PCG64(seed))
    raw = raw + noise_std * _box_muller(rng, 2 * n_points).reshape(n_points, 2)
    labels = np.vstack(
        [np.tile([1.0, -1.0], (half, 1)), np.tile([-1.0, 1.0], (half, 1))]
    )
    scaler = MinMaxScaler.fit(raw, (-1.0, 1.0))
    return Dataset(
        inputs=scaler.transform(raw),
        labels=labels,
        train_mask=_split_mask(n_points, rng),
        feature_scaler=scaler,
        label_scaler=None,
        provenance={
            "generator": "moons",
            "seed": seed,
            "n_points": n_points,
            "noise_std": noise_std,
        },
    )


def inference_grid_moons(step: float = 0.1, low: float = -1.2, high: float = 1.2) -> np.ndarray:
    """Axis-aligned evaluation grid over the square covered by the scaled data.

    The default 0.1 step over [-1.2, 1.2] gives a 25 x 25 layout, 625 points."""
    if step <= 0.0:
        raise ConfigurationError("step must be positive")
    count = int(np.floor((high - low) / step + 1e-9)) + 1
    axis = low + step * np.arange(count)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def extended_test_inputs_1d(count: int, low: float, high: float) -> np.ndarray:
    """Evenly spaced evaluation inputs spanning [low, high], shape (count, 1)."""
    if count < 2:
        raise ConfigurationError("count must be >= 2")
    return np.linspace(low, high, count).reshape(-1, 1)
