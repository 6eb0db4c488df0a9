"""QNN architectures: data-encoding blocks interleaved with trainable blocks.

A model is a flat gate program. Encoding gates derive their angle from one
input feature through a polynomial pre-processing; trainable gates hold an
index into the parameter vector, one independent parameter per gate.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import simulator
from .errors import ConfigurationError, StructuralError
from .simulator import Gate, Observable

ENCODINGS = ("low_freq", "high_freq")
ANSATZES = ("HEA", "HVA")


@dataclass(frozen=True)
class ModelConfig:
    n_qubits: int
    layers: int
    encoding: str
    ansatz: str
    n_outputs: int = 1
    input_dim: int = 1

    def __post_init__(self):
        if not 1 <= self.n_qubits <= simulator.MAX_QUBITS:
            raise ConfigurationError(f"n_qubits must be in [1, {simulator.MAX_QUBITS}]")
        if self.layers < 1:
            raise ConfigurationError("layers must be >= 1")
        if self.encoding not in ENCODINGS:
            raise ConfigurationError(f"encoding must be one of {ENCODINGS}")
        if self.ansatz not in ANSATZES:
            raise ConfigurationError(f"ansatz must be one of {ANSATZES}")
        if self.ansatz == "HVA" and self.n_qubits < 2:
            raise ConfigurationError("HVA needs at least 2 qubits for its couplings")
        if not 1 <= self.n_outputs <= self.n_qubits:
            raise ConfigurationError("n_outputs must be in [1, n_qubits]")
        if self.input_dim < 1:
            raise ConfigurationError("input_dim must be >= 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        allowed = {"n_qubits", "layers", "encoding", "ansatz", "n_outputs", "input_dim"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(f"unknown model config keys: {sorted(unknown)}")
        missing = {"n_qubits", "layers", "encoding", "ansatz"} - set(data)
        if missing:
            raise ConfigurationError(f"missing model config keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FeatureAngle:
    """angle = coeff * x[index] ** power"""

    index: int
    coeff: float
    power: int


@dataclass(frozen=True)
class ProgramGate:
    """Gate template: exactly one of param_index / feature is set, or neither (cnot)."""

    kind: str
    targets: tuple[int, ...]
    param_index: int | None = None
    feature: FeatureAngle | None = None


@dataclass(frozen=True)
class QnnModel:
    config: ModelConfig
    program: tuple[ProgramGate, ...]
    observables: tuple[Observable, ...]
    param_count: int


def build_model(config: ModelConfig) -> QnnModel:
    """Assemble the gate program: layers of [encoding block; ansatz block].

    low_freq encodes via RX with angle x/(L-l) for layer l = 0..L-1; high_freq
    via RY(x) then RZ(x^2). Features are assigned cyclically, qubit q carrying
    feature q mod input_dim. HEA is RX/RZ/RX sub-layers plus a CNOT ring; HVA
    is an RX sub-layer plus RZZ couplings on the periodic neighbor ring.
    """
    n, depth, dim = config.n_qubits, config.layers, config.input_dim
    program: list[ProgramGate] = []
    p = 0
    for layer in range(depth):
        if config.encoding == "low_freq":
            coeff = 1.0 / (depth - layer)
            for q in range(n):
                program.append(ProgramGate("rx", (q,), feature=FeatureAngle(q % dim, coeff, 1)))
        else:
            for q in range(n):
                program.append(ProgramGate("ry", (q,), feature=FeatureAngle(q % dim, 1.0, 1)))
            for q in range(n):
                program.append(ProgramGate("rz", (q,), feature=FeatureAngle(q % dim, 1.0, 2)))
        if config.ansatz == "HEA":
            for kind in ("rx", "rz", "rx"):
                for q in range(n):
                    program.append(ProgramGate(kind, (q,), param_index=p))
                    p += 1
            if n >= 2:
                for q in range(n):
                    program.append(ProgramGate("cnot", (q, (q + 1) % n)))
        else:
            for q in range(n):
                program.append(ProgramGate("rx", (q,), param_index=p))
                p += 1
            for q in range(n):
                program.append(ProgramGate("rzz", (q, (q + 1) % n), param_index=p))
                p += 1
    observables = tuple(Observable.single_z(j, n) for j in range(config.n_outputs))
    return QnnModel(config, tuple(program), observables, p)


def bind_inputs(model: QnnModel, x) -> list[Gate]:
    """Resolve feature-derived angles for one input, leaving trainable slots open.

    The result depends only on x, so callers evaluating many parameter vectors
    on a fixed point should bind once and reuse.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.config.input_dim,):
        raise StructuralError(
            f"input has shape {x.shape}, model expects ({model.config.input_dim},)"
        )
    if not np.all(np.isfinite(x)):
        raise StructuralError("input features must be finite")
    gates = []
    for g in model.program:
        if g.feature is not None:
            angle = g.feature.coeff * x[g.feature.index] ** g.feature.power
            gates.append(Gate(g.kind, g.targets, angle=float(angle)))
        else:
            gates.append(Gate(g.kind, g.targets, param_index=g.param_index))
    return gates


def _check_theta(model: QnnModel, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.param_count,):
        raise StructuralError(
            f"theta has shape {theta.shape}, model expects ({model.param_count},)"
        )
    return theta


def forward(model: QnnModel, x, theta) -> np.ndarray:
    """Model outputs: <Z_j> on qubit j for j = 0..n_outputs-1. Each lies in [-1, 1]."""
    theta = _check_theta(model, theta)
    state = simulator.run_circuit(model.config.n_qubits, bind_inputs(model, x), theta)
    return np.array([simulator.expectation(state, obs) for obs in model.observables])


def forward_and_gradient(model: QnnModel, x, theta, bound=None):
    """Outputs plus the (n_outputs, param_count) Jacobian, sharing one forward pass."""
    theta = _check_theta(model, theta)
    gates = bind_inputs(model, x) if bound is None else bound
    n = model.config.n_qubits
    state = simulator.run_circuit(n, gates, theta)
    outputs = np.array([simulator.expectation(state, obs) for obs in model.observables])
    jac = np.vstack(
        [
            simulator.adjoint_gradient(n, gates, theta, obs, final_state=state)
            for obs in model.observables
        ]
    )
    return outputs, jac


def model_gradient(model: QnnModel, x, theta) -> np.ndarray:
    """Jacobian of the outputs w.r.t. the trainable parameters, shape (C, P)."""
    return forward_and_gradient(model, x, theta)[1]


# --- batched evaluation -------------------------------------------------------


@dataclass(frozen=True)
class BatchPlan:
    """Circuit structure bound to a whole input batch: per-gate angle vectors
    for encoding gates, parameter slots left open. Reusable across theta."""

    n_qubits: int
    batch: int
    steps: tuple  # (kind, targets, param_index, angles (B,) or None, generator label)


def batch_plan(model: QnnModel, xs) -> BatchPlan:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs.reshape(-1, 1)
    if xs.ndim != 2 or xs.shape[1] != model.config.input_dim:
        raise StructuralError(
            f"inputs have shape {xs.shape}, model expects (*, {model.config.input_dim})"
        )
    if not np.all(np.isfinite(xs)):
        raise StructuralError("input features must be finite")
    n = model.config.n_qubits
    steps = []
    for g in model.program:
        angles = None
        label = None
        if g.feature is not None:
            angles = g.feature.coeff * xs[:, g.feature.index] ** g.feature.power
        if g.param_index is not None:
            if g.kind == "rzz":
                label = "".join("Z" if q in g.targets else "I" for q in range(n))
            else:
                ch = {"rx": "X", "ry": "Y", "rz": "Z"}[g.kind]
                label = "".join(ch if q == g.targets[0] else "I" for q in range(n))
        steps.append((g.kind, g.targets, g.param_index, angles, label))
    return BatchPlan(n_qubits=n, batch=xs.shape[0], steps=tuple(steps))


def _batch_apply(states, kind, targets, angle, n):
    if kind == "cnot":
        return simulator.batch_apply_cnot(states, n, *targets)
    if kind == "rzz":
        return simulator.batch_apply_rzz(states, n, targets[0], targets[1], angle)
    return simulator.batch_apply_rotation(states, targets[0], kind, angle)


def _run_plan(plan: BatchPlan, theta) -> np.ndarray:
    states = simulator.batch_init(plan.n_qubits, plan.batch)
    for kind, targets, idx, angles, _ in plan.steps:
        angle = theta[idx] if idx is not None else angles
        states = _batch_apply(states, kind, targets, angle, plan.n_qubits)
    return states


def batch_forward(model: QnnModel, xs, theta, plan: BatchPlan | None = None) -> np.ndarray:
    """Outputs for a whole input batch, shape (B, C)."""
    theta = _check_theta(model, theta)
    plan = batch_plan(model, xs) if plan is None else plan
    states = _run_plan(plan, theta)
    return np.column_stack(
        [simulator.batch_expectation(states, obs) for obs in model.observables]
    )


def batch_forward_and_jacobian(model: QnnModel, xs, theta, plan: BatchPlan | None = None):
    """Batch outputs (B, C) and Jacobians (B, C, P) via one shared reverse sweep.

    The bra images of all outputs ride through the inverse gates as one
    (C*B)-wide batch, so the cost per gate is independent of batch size."""
    theta = _check_theta(model, theta)
    plan = batch_plan(model, xs) if plan is None else plan
    n, batch = plan.n_qubits, plan.batch
    n_out = len(model.observables)
    states = _run_plan(plan, theta)
    outputs = np.column_stack(
        [simulator.batch_expectation(states, obs) for obs in model.observables]
    )
    lam = np.concatenate(
        [simulator.batch_apply_observable(states, obs) for obs in model.observables]
    )  # (C*B, 2^n), output-major
    psi = states
    grads = np.zeros((batch, n_out, model.param_count))
    for kind, targets, idx, angles, label in reversed(plan.steps):
        if idx is not None:
            mu = simulator.batch_apply_pauli_string(psi, label)
            lam3 = lam.reshape(n_out, batch, -1)
            grads[:, :, idx] += np.einsum("cba,ba->bc", np.conj(lam3), mu).imag
        if kind == "cnot":
            psi = _batch_apply(psi, kind, targets, None, n)
            lam = _batch_apply(lam, kind, targets, None, n)
        else:
            inv = -(theta[idx] if idx is not None else angles)
            psi = _batch_apply(psi, kind, targets, inv, n)
            lam = _batch_apply(lam, kind, targets, inv if np.ndim(inv) == 0 else np.tile(inv, n_out), n)
    return outputs, grads
