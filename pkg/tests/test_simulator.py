import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qntk_diagnostics import simulator as sim
from qntk_diagnostics.errors import (
    ConfigurationError,
    StructuralError,
    UnsupportedGateError,
)


def fd_gradient(n, gates, params, obs, h=1e-5):
    """Central finite differences through the forward pass only."""
    params = np.asarray(params, dtype=float)
    grads = np.zeros(params.size)
    for j in range(params.size):
        plus, minus = params.copy(), params.copy()
        plus[j] += h
        minus[j] -= h
        fp = sim.expectation(sim.run_circuit(n, gates, plus), obs)
        fm = sim.expectation(sim.run_circuit(n, gates, minus), obs)
        grads[j] = (fp - fm) / (2 * h)
    return grads


def random_circuit(rng, n, n_params, n_gates):
    gates = []
    for _ in range(n_gates):
        kind = rng.choice(["rx", "ry", "rz", "rzz", "cnot"])
        if kind in ("rzz", "cnot"):
            if n < 2:
                kind = "rx"
            else:
                q0, q1 = rng.choice(n, size=2, replace=False)
                if kind == "rzz":
                    gates.append(sim.Gate("rzz", (int(q0), int(q1)),
                                          param_index=int(rng.integers(n_params))))
                else:
                    gates.append(sim.Gate("cnot", (int(q0), int(q1))))
                continue
        q = int(rng.integers(n))
        if rng.random() < 0.3:
            gates.append(sim.Gate(kind, (q,), angle=float(rng.uniform(-np.pi, np.pi))))
        else:
            gates.append(sim.Gate(kind, (q,), param_index=int(rng.integers(n_params))))
    return gates


class TestInitState:
    def test_single_qubit_basis(self):
        assert np.array_equal(sim.init_state(1), [1, 0])

    def test_two_qubit_basis(self):
        assert np.array_equal(sim.init_state(2), [1, 0, 0, 0])

    def test_qubit_cap(self):
        with pytest.raises(ConfigurationError):
            sim.init_state(13)
        with pytest.raises(ConfigurationError):
            sim.init_state(0)


class TestApplyGate:
    def test_rx_zero_is_identity(self):
        rng = np.random.default_rng(0)
        state = rng.normal(size=8) + 1j * rng.normal(size=8)
        state /= np.linalg.norm(state)
        out = sim.apply_gate(state, sim.Gate("rx", (1,), angle=0.0))
        assert np.allclose(out, state, atol=1e-15)

    def test_ry_pi_flips_z(self):
        state = sim.apply_gate(sim.init_state(1), sim.Gate("ry", (0,), angle=math.pi))
        z = sim.Observable.single_z(0, 1)
        assert sim.expectation(state, z) == pytest.approx(-1.0, abs=1e-12)

    def test_rzz_on_basis_state_is_phase_only(self):
        state = sim.apply_gate(sim.init_state(2), sim.Gate("rzz", (0, 1), angle=0.7))
        z0 = sim.Observable.single_z(0, 2)
        assert sim.expectation(state, z0) == pytest.approx(1.0, abs=1e-12)
        assert np.abs(state[0]) == pytest.approx(1.0, abs=1e-12)

    def test_cnot_flips_target(self):
        state = sim.apply_gate(sim.init_state(2), sim.Gate("ry", (0,), angle=math.pi))
        state = sim.apply_gate(state, sim.Gate("cnot", (0, 1)))
        # |11> up to phase
        assert np.abs(state[3]) == pytest.approx(1.0, abs=1e-12)

    def test_bad_target_index(self):
        with pytest.raises(StructuralError):
            sim.apply_gate(sim.init_state(2), sim.Gate("rx", (2,), angle=0.1))

    def test_gate_validation(self):
        with pytest.raises(StructuralError):
            sim.Gate("rzz", (0,), angle=0.1)
        with pytest.raises(StructuralError):
            sim.Gate("cnot", (1, 1))
        with pytest.raises(StructuralError):
            sim.Gate("hadamard", (0,))
        with pytest.raises(UnsupportedGateError):
            sim.Gate("cnot", (0, 1), param_index=0)


class TestExpectation:
    def test_ground_state_z(self):
        z = sim.Observable.single_z(0, 1)
        assert sim.expectation(sim.init_state(1), z) == 1.0

    def test_ry_gives_cosine(self):
        state = sim.apply_gate(sim.init_state(1), sim.Gate("ry", (0,), angle=math.pi / 3))
        z = sim.Observable.single_z(0, 1)
        assert sim.expectation(state, z) == pytest.approx(0.5, abs=1e-12)

    def test_mean_x_on_ground_state(self):
        obs = sim.Observable.mean_x(3)
        assert sim.expectation(sim.init_state(3), obs) == pytest.approx(0.0, abs=1e-15)

    def test_width_mismatch(self):
        with pytest.raises(StructuralError):
            sim.expectation(sim.init_state(2), sim.Observable.single_z(0, 3))

    def test_pauli_bound(self):
        rng = np.random.default_rng(5)
        gates = random_circuit(rng, 3, 4, 20)
        state = sim.run_circuit(3, gates, rng.uniform(0, 2 * np.pi, 4))
        for q in range(3):
            for label in ("X", "Y", "Z"):
                obs = sim.Observable(((1.0, "".join(label if i == q else "I" for i in range(3))),))
                assert abs(sim.expectation(state, obs)) <= 1.0 + 1e-12


class TestGradient:
    def test_ry_analytic_at_zero(self):
        gates = [sim.Gate("ry", (0,), param_index=0)]
        z = sim.Observable.single_z(0, 1)
        for method in ("adjoint", "parameter-shift"):
            g = sim.gradient(1, gates, [0.0], z, method=method)
            assert g[0] == pytest.approx(0.0, abs=1e-12)

    def test_ry_analytic_at_half_pi(self):
        gates = [sim.Gate("ry", (0,), param_index=0)]
        z = sim.Observable.single_z(0, 1)
        for method in ("adjoint", "parameter-shift"):
            g = sim.gradient(1, gates, [math.pi / 2], z, method=method)
            assert g[0] == pytest.approx(-1.0, abs=1e-12)

    def test_shared_parameter_accumulates(self):
        # f(t) = cos(2t) when one angle drives two stacked ry gates
        gates = [sim.Gate("ry", (0,), param_index=0), sim.Gate("ry", (0,), param_index=0)]
        z = sim.Observable.single_z(0, 1)
        t = 0.37
        g = sim.gradient(1, gates, [t], z)
        assert g[0] == pytest.approx(-2 * math.sin(2 * t), abs=1e-12)

    def test_methods_agree_on_random_circuits(self):
        rng = np.random.default_rng(42)
        for _ in range(15):
            n = int(rng.integers(1, 5))
            n_params = int(rng.integers(1, 21))
            gates = random_circuit(rng, n, n_params, int(rng.integers(4, 25)))
            params = rng.uniform(0, 2 * np.pi, n_params)
            obs = sim.Observable.single_z(int(rng.integers(n)), n)
            adj = sim.gradient(n, gates, params, obs, method="adjoint")
            shf = sim.gradient(n, gates, params, obs, method="parameter-shift")
            assert np.max(np.abs(adj - shf)) < 1e-10
            fd = fd_gradient(n, gates, params, obs)
            assert np.max(np.abs(adj - fd)) < 1e-6

    def test_adjoint_vs_fd_on_3_qubit_12_param(self):
        rng = np.random.default_rng(3)
        gates = random_circuit(rng, 3, 12, 30)
        params = rng.uniform(0, 2 * np.pi, 12)
        obs = sim.Observable.single_z(0, 3)
        adj = sim.gradient(3, gates, params, obs)
        assert np.max(np.abs(adj - fd_gradient(3, gates, params, obs))) < 1e-6

    def test_param_index_out_of_range(self):
        gates = [sim.Gate("ry", (0,), param_index=5)]
        with pytest.raises(StructuralError):
            sim.gradient(1, gates, [0.1], sim.Observable.single_z(0, 1))

    def test_unknown_method(self):
        gates = [sim.Gate("ry", (0,), param_index=0)]
        with pytest.raises(ConfigurationError):
            sim.gradient(1, gates, [0.1], sim.Observable.single_z(0, 1), method="fd")


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=10_000))
def test_norm_preserved_after_every_gate(n, seed):
    rng = np.random.default_rng(seed)
    gates = random_circuit(rng, n, 4, 12)
    params = rng.uniform(0, 2 * np.pi, 4)
    state = sim.init_state(n)
    for gate in gates:
        angle = params[gate.param_index] if gate.param_index is not None else None
        state = sim.apply_gate(state, gate, angle)
        assert abs(np.vdot(state, state).real - 1.0) < 1e-12


def test_batch_engine_matches_single():
    rng = np.random.default_rng(9)
    n = 3
    gates = random_circuit(rng, n, 6, 18)
    params = rng.uniform(0, 2 * np.pi, 6)
    single = sim.run_circuit(n, gates, params)
    states = sim.batch_init(n, 4)
    for gate in gates:
        angle = params[gate.param_index] if gate.param_index is not None else gate.angle
        if gate.kind == "cnot":
            states = sim.batch_apply_cnot(states, n, *gate.targets)
        elif gate.kind == "rzz":
            states = sim.batch_apply_rzz(states, n, *gate.targets, np.full(4, angle))
        else:
            states = sim.batch_apply_rotation(states, gate.targets[0], gate.kind, np.full(4, angle))
    for b in range(4):
        assert np.max(np.abs(states[b] - single)) < 1e-13
    obs = sim.Observable.single_z(1, n)
    vals = sim.batch_expectation(states, obs)
    assert np.allclose(vals, sim.expectation(single, obs), atol=1e-13)
