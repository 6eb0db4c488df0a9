"""Dense statevector simulator with exact expectation values and gradients.

Conventions: qubit 0 occupies the most significant bit of the state index, so
axis q of ``state.reshape([2] * n)`` addresses qubit q. Every rotation gate
implements exp(-i * angle * G / 2) with G its Pauli generator; the half-angle
convention is what makes the parameter-shift rule with shift pi/2 exact.

All operations are pure: they return fresh arrays and never mutate inputs.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    NumericalIntegrityError,
    StructuralError,
    UnsupportedGateError,
)

MAX_QUBITS = 12
ROTATION_KINDS = frozenset({"rx", "ry", "rz", "rzz"})
GATE_KINDS = ROTATION_KINDS | {"cnot"}

_PAULI_CHARS = frozenset("IXYZ")
_IMAG_TOL = 1e-10
_NORM_TOL = 1e-10


@dataclass(frozen=True)
class Gate:
    """One circuit operation. ``angle`` is the fixed angle unless ``param_index``
    points into an external parameter vector; cnot carries neither."""

    kind: str
    targets: tuple[int, ...]
    angle: float = 0.0
    param_index: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise StructuralError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind in ("rzz", "cnot") else 1
        if len(self.targets) != arity:
            raise StructuralError(
                f"{self.kind} takes {arity} target(s), got {len(self.targets)}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise StructuralError(f"{self.kind} targets must be distinct: {self.targets}")
        if self.kind == "cnot" and self.param_index is not None:
            raise UnsupportedGateError("cnot cannot carry a trainable parameter")


@dataclass(frozen=True)
class Observable:
    """Hermitian operator as a real combination of Pauli strings.

    Each term is (coefficient, label) with one of I/X/Y/Z per qubit."""

    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        if not self.terms:
            raise StructuralError("observable needs at least one term")
        width = len(self.terms[0][1])
        for coeff, label in self.terms:
            if not math.isfinite(coeff):
                raise StructuralError("observable coefficients must be finite")
            if len(label) != width or not set(label) <= _PAULI_CHARS:
                raise StructuralError(f"bad Pauli label {label!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.terms[0][1])

    @classmethod
    def single_z(cls, qubit: int, n_qubits: int) -> "Observable":
        label = "".join("Z" if q == qubit else "I" for q in range(n_qubits))
        return cls(((1.0, label),))

    @classmethod
    def mean_x(cls, n_qubits: int) -> "Observable":
        """(1/n) * sum of X on each qubit."""
        terms = []
        for q in range(n_qubits):
            label = "".join("X" if i == q else "I" for i in range(n_qubits))
            terms.append((1.0 / n_qubits, label))
        return cls(tuple(terms))


def init_state(n_qubits: int) -> np.ndarray:
    """All-zeros computational basis state of n qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    state = np.zeros(1 << n_qubits, dtype=complex)
    state[0] = 1.0
    return state


def n_qubits_of(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if state.ndim != 1 or state.shape[0] != 1 << n:
        raise StructuralError(f"state length {state.shape} is not a power of two")
    return n


def _apply_1q_rotation(state, q, kind, angle):
    half = 0.5 * angle
    c, s = math.cos(half), math.sin(half)
    v = state.reshape((1 << q), 2, -1)
    a, b = v[:, 0, :], v[:, 1, :]
    out = np.empty_like(v)
    if kind == "rx":
        out[:, 0, :] = c * a - 1j * s * b
        out[:, 1, :] = c * b - 1j * s * a
    elif kind == "ry":
        out[:, 0, :] = c * a - s * b
        out[:, 1, :] = s * a + c * b
    else:  # rz
        p = cmath.exp(-1j * half)
        out[:, 0, :] = p * a
        out[:, 1, :] = p.conjugate() * b
    return out.reshape(-1)


def _apply_rzz(state, n, q0, q1, angle):
    # Diagonal: phase exp(-i*angle/2) on equal bits, conjugate on unequal.
    p = cmath.exp(-0.5j * angle)
    t = np.moveaxis(state.reshape([2] * n), (q0, q1), (0, 1))
    out = np.empty(t.shape, dtype=t.dtype)
    out[0, 0] = p * t[0, 0]
    out[1, 1] = p * t[1, 1]
    out[0, 1] = p.conjugate() * t[0, 1]
    out[1, 0] = p.conjugate() * t[1, 0]
    return np.moveaxis(out, (0, 1), (q0, q1)).reshape(-1)


def _apply_cnot(state, n, control, target):
    t = np.moveaxis(state.reshape([2] * n), (control, target), (0, 1))
    out = np.empty(t.shape, dtype=t.dtype)
    out[0] = t[0]
    out[1, 0] = t[1, 1]
    out[1, 1] = t[1, 0]
    return np.moveaxis(out, (0, 1), (control, target)).reshape(-1)


def apply_gate(state: np.ndarray, gate: Gate, angle: float | None = None) -> np.ndarray:
    """Apply one gate, returning a new state. ``angle`` overrides gate.angle."""
    n = n_qubits_of(state)
    for q in gate.targets:
        if not 0 <= q < n:
            raise StructuralError(f"target {q} out of range for {n} qubits")
    if gate.kind == "cnot":
        return _apply_cnot(state, n, *gate.targets)
    phi = gate.angle if angle is None else angle
    if gate.kind == "rzz":
        return _apply_rzz(state, n, gate.targets[0], gate.targets[1], phi)
    return _apply_1q_rotation(state, gate.targets[0], gate.kind, phi)


def _angle_of(gate: Gate, params: np.ndarray | None) -> float:
    if gate.param_index is None:
        return gate.angle
    if params is None or not 0 <= gate.param_index < len(params):
        raise StructuralError(f"parameter index {gate.param_index} out of range")
    return float(params[gate.param_index])


def run_circuit(n_qubits: int, gates, params=None) -> np.ndarray:
    """Run a gate sequence on |0...0>, resolving trainable angles from ``params``."""
    params = None if params is None else np.asarray(params, dtype=float)
    state = init_state(n_qubits)
    for gate in gates:
        state = apply_gate(state, gate, _angle_of(gate, params))
    drift = abs(np.vdot(state, state).real - 1.0)
    if drift > _NORM_TOL:
        raise NumericalIntegrityError(f"statevector norm drifted by {drift:.3e}")
    return state


def apply_pauli_string(state: np.ndarray, label: str) -> np.ndarray:
    """Apply a Pauli string (one I/X/Y/Z per qubit) to the state."""
    n = n_qubits_of(state)
    if len(label) != n:
        raise StructuralError(f"label {label!r} does not match {n} qubits")
    psi = state
    for q, ch in enumerate(label):
        if ch == "I":
            continue
        v = psi.reshape((1 << q), 2, -1)
        out = np.empty_like(v)
        if ch == "Z":
            out[:, 0, :] = v[:, 0, :]
            out[:, 1, :] = -v[:, 1, :]
        elif ch == "X":
            out[:, 0, :] = v[:, 1, :]
            out[:, 1, :] = v[:, 0, :]
        else:  # Y
            out[:, 0, :] = -1j * v[:, 1, :]
            out[:, 1, :] = 1j * v[:, 0, :]
        psi = out.reshape(-1)
    return psi


def apply_observable(state: np.ndarray, obs: Observable) -> np.ndarray:
    """O|psi> as a (generally unnormalized) vector."""
    if obs.n_qubits != n_qubits_of(state):
        raise StructuralError("observable width does not match state")
    acc = np.zeros_like(state)
    for coeff, label in obs.terms:
        acc += coeff * apply_pauli_string(state, label)
    return acc


def expectation(state: np.ndarray, obs: Observable) -> float:
    """<psi|O|psi>, asserting the imaginary residue is negligible."""
    value = np.vdot(state, apply_observable(state, obs))
    if abs(value.imag) > _IMAG_TOL:
        raise NumericalIntegrityError(f"expectation has imaginary residue {value.imag:.3e}")
    return float(value.real)


def _generator_label(gate: Gate, n: int) -> str:
    if gate.kind == "rzz":
        return "".join("Z" if q in gate.targets else "I" for q in range(n))
    ch = {"rx": "X", "ry": "Y", "rz": "Z"}[gate.kind]
    return "".join(ch if q == gate.targets[0] else "I" for q in range(n))


def _validate_param_indices(gates, n_params: int):
    for gate in gates:
        if gate.param_index is not None and not 0 <= gate.param_index < n_params:
            raise StructuralError(
                f"parameter index {gate.param_index} outside [0, {n_params})"
            )


def adjoint_gradient(n_qubits, gates, params, obs, final_state=None) -> np.ndarray:
    """d<O>/d(theta) for every parameter in one forward plus one reverse pass.

    Walks the circuit backwards keeping two vectors: the state with gates
    peeled off, and the observable image propagated through the inverses.
    A rotation exp(-i*phi*G/2) contributes Im(<lam|G|psi_after>) to its
    parameter; shared indices accumulate.
    """
    params = np.asarray(params, dtype=float)
    gates = list(gates)
    _validate_param_indices(gates, params.size)
    psi = run_circuit(n_qubits, gates, params) if final_state is None else final_state
    lam = apply_observable(psi, obs)
    grads = np.zeros(params.size)
    for gate in reversed(gates):
        if gate.param_index is not None:
            mu = apply_pauli_string(psi, _generator_label(gate, n_qubits))
            grads[gate.param_index] += np.vdot(lam, mu).imag
        if gate.kind == "cnot":
            psi = apply_gate(psi, gate)
            lam = apply_gate(lam, gate)
        else:
            inv = -_angle_of(gate, params)
            psi = apply_gate(psi, gate, inv)
            lam = apply_gate(lam, gate, inv)
    return grads


def parameter_shift_gradient(n_qubits, gates, params, obs) -> np.ndarray:
    """Exact gradient from +/- pi/2 evaluations, one pair per trainable gate."""
    params = np.asarray(params, dtype=float)
    gates = list(gates)
    _validate_param_indices(gates, params.size)
    base = [_angle_of(g, params) for g in gates]

    def run_with(shift_pos, delta):
        state = init_state(n_qubits)
        for i, gate in enumerate(gates):
            phi = base[i] + (delta if i == shift_pos else 0.0)
            state = apply_gate(state, gate, phi)
        return state

    grads = np.zeros(params.size)
    for i, gate in enumerate(gates):
        if gate.param_index is None:
            continue
        if gate.kind not in ROTATION_KINDS:
            raise UnsupportedGateError(f"parameter-shift cannot differentiate {gate.kind}")
        plus = expectation(run_with(i, math.pi / 2), obs)
        minus = expectation(run_with(i, -math.pi / 2), obs)
        grads[gate.param_index] += 0.5 * (plus - minus)
    return grads


def gradient(n_qubits, gates, params, obs, method: str = "adjoint") -> np.ndarray:
    """Gradient of <O> w.r.t. the parameter vector. Methods: adjoint, parameter-shift."""
    if method == "adjoint":
        return adjoint_gradient(n_qubits, gates, params, obs)
    if method == "parameter-shift":
        return parameter_shift_gradient(n_qubits, gates, params, obs)
    raise ConfigurationError(f"unknown gradient method {method!r}")


# --- batched engine ----------------------------------------------------------
# Same circuit structure evaluated on a whole batch of inputs at once, with a
# per-batch angle vector on every encoding gate. States are (B, 2^n) arrays;
# one numpy call per gate covers the batch, which is what makes deep-circuit
# training loops affordable.


def batch_init(n_qubits: int, batch: int) -> np.ndarray:
    states = np.zeros((batch, 1 << n_qubits), dtype=complex)
    states[:, 0] = 1.0
    return states


def _bcast(values, batch):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(batch, float(arr))
    return arr.reshape(batch, 1, 1)


def batch_apply_rotation(states, q, kind, angles) -> np.ndarray:
    batch = states.shape[0]
    half = 0.5 * _bcast(angles, batch)
    v = states.reshape(batch, (1 << q), 2, -1)
    a, b = v[:, :, 0, :], v[:, :, 1, :]
    out = np.empty_like(v)
    if kind == "rx":
        c, s = np.cos(half), np.sin(half)
        out[:, :, 0, :] = c * a - 1j * s * b
        out[:, :, 1, :] = c * b - 1j * s * a
    elif kind == "ry":
        c, s = np.cos(half), np.sin(half)
        out[:, :, 0, :] = c * a - s * b
        out[:, :, 1, :] = s * a + c * b
    else:  # rz
        p = np.exp(-1j * half)
        out[:, :, 0, :] = p * a
        out[:, :, 1, :] = np.conj(p) * b
    return out.reshape(batch, -1)


def batch_apply_rzz(states, n, q0, q1, angles) -> np.ndarray:
    batch = states.shape[0]
    p = np.exp(-0.5j * _bcast(angles, batch))[:, :, 0]
    t = np.moveaxis(states.reshape([batch] + [2] * n), (q0 + 1, q1 + 1), (1, 2))
    out = np.empty(t.shape, dtype=t.dtype)
    flat = t.reshape(batch, 2, 2, -1)
    oflat = out.reshape(batch, 2, 2, -1)
    oflat[:, 0, 0] = p * flat[:, 0, 0]
    oflat[:, 1, 1] = p * flat[:, 1, 1]
    oflat[:, 0, 1] = np.conj(p) * flat[:, 0, 1]
    oflat[:, 1, 0] = np.conj(p) * flat[:, 1, 0]
    return np.moveaxis(out, (1, 2), (q0 + 1, q1 + 1)).reshape(batch, -1)


def batch_apply_cnot(states, n, control, target) -> np.ndarray:
    batch = states.shape[0]
    t = np.moveaxis(states.reshape([batch] + [2] * n), (control + 1, target + 1), (1, 2))
    out = np.empty(t.shape, dtype=t.dtype)
    out[:, 0] = t[:, 0]
    out[:, 1, 0] = t[:, 1, 1]
    out[:, 1, 1] = t[:, 1, 0]
    return np.moveaxis(out, (1, 2), (control + 1, target + 1)).reshape(batch, -1)


def batch_apply_pauli_string(states, label: str) -> np.ndarray:
    batch = states.shape[0]
    psi = states
    for q, ch in enumerate(label):
        if ch == "I":
            continue
        v = psi.reshape(batch, (1 << q), 2, -1)
        out = np.empty_like(v)
        if ch == "Z":
            out[:, :, 0, :] = v[:, :, 0, :]
            out[:, :, 1, :] = -v[:, :, 1, :]
        elif ch == "X":
            out[:, :, 0, :] = v[:, :, 1, :]
            out[:, :, 1, :] = v[:, :, 0, :]
        else:  # Y
            out[:, :, 0, :] = -1j * v[:, :, 1, :]
            out[:, :, 1, :] = 1j * v[:, :, 0, :]
        psi = out.reshape(batch, -1)
    return psi


def batch_apply_observable(states, obs: Observable) -> np.ndarray:
    acc = np.zeros_like(states)
    for coeff, label in obs.terms:
        acc += coeff * batch_apply_pauli_string(states, label)
    return acc


def batch_expectation(states, obs: Observable) -> np.ndarray:
    values = np.einsum("ba,ba->b", np.conj(states), batch_apply_observable(states, obs))
    if np.max(np.abs(values.imag), initial=0.0) > _IMAG_TOL:
        raise NumericalIntegrityError("batch expectation has imaginary residue")
    return values.real.copy()
