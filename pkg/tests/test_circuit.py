import math

import numpy as np
import pytest

from catsim.exceptions import DimensionMismatchError, GateError, QubitIndexError, TopologyError
from catsim.schemas import CatParams
from catsim.services.circuit import (
    CNOT,
    U3,
    AxisRotation,
    Circuit,
    CouplingMap,
    axis_rotation_matrix,
    build_cat_chain,
    build_cat_on_topology,
    chain_coupling,
    circuit_from_text,
    circuit_to_text,
    execute,
    format_coupling,
    load_coupling,
    parse_coupling,
    spanning_tree_edges,
    u3_matrix,
    validate_circuit,
)
from catsim.services.qstate import new_zero_state

def two_amplitude_check(state, params, tol=1e-10):
    amps = state.amplitudes
    last = len(amps) - 1
    assert amps[0] == pytest.approx(math.cos(params.theta / 2), abs=tol)
    assert amps[last] == pytest.approx(np.exp(1j * params.phi) * math.sin(params.theta / 2), abs=tol)
    assert np.count_nonzero(np.abs(amps[1:last]) > tol) == 0

class TestGateMatrices:
    def test_u3_half_pi(self):
        expected = np.array([[1, -1], [1, 1]]) / math.sqrt(2)
        assert np.allclose(u3_matrix(math.pi / 2, 0, 0), expected, atol=1e-12)

    def test_u3_zero_is_identity(self):
        assert np.allclose(u3_matrix(0, 0, 0), np.eye(2))

    def test_u3_pi_half_phase(self):
        assert np.allclose(u3_matrix(math.pi, math.pi / 2, 0), [[0, -1], [1j, 0]], atol=1e-12)

    def test_u3_unitary_for_random_angles(self):
        rng = np.random.default_rng(0)
        for theta, phi, lam in rng.uniform(-10, 10, size=(1000, 3)):
            u = u3_matrix(theta, phi, lam)
            assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12)

    def test_u3_rejects_non_finite(self):
        with pytest.raises(GateError):
            u3_matrix(math.nan, 0, 0)

    def test_axis_rotation_y(self):
        expected = np.array([[1, 1], [-1, 1]]) / math.sqrt(2)
        assert np.allclose(axis_rotation_matrix("y", math.pi / 2), expected, atol=1e-12)

    def test_axis_rotation_zero_angle(self):
        assert np.allclose(axis_rotation_matrix("x", 0.0), np.eye(2))

    def test_axis_rotation_maps_plus_to_zero(self):
        plus = np.array([1, 1]) / math.sqrt(2)
        assert np.allclose(axis_rotation_matrix("y", math.pi / 2) @ plus, [1, 0], atol=1e-12)

    def test_unknown_axis(self):
        with pytest.raises(GateError):
            axis_rotation_matrix("w", 1.0)

class TestCircuitIR:
    def test_rejects_out_of_register_qubit(self):
        with pytest.raises(QubitIndexError):
            Circuit(2, (CNOT(0, 2),))

    def test_cnot_control_equals_target(self):
        with pytest.raises(QubitIndexError):
            CNOT(1, 1)

    def test_non_finite_angle(self):
        with pytest.raises(GateError):
            U3(0, math.inf)

    def test_append_keeps_cat_tag(self, half_pi):
        circuit = build_cat_chain(3, half_pi)
        extended = circuit.append(AxisRotation("y", 0, math.pi / 2))
        assert extended.cat == circuit.cat
        assert len(extended) == len(circuit) + 1
        assert len(circuit) == 3

    def test_text_form(self, half_pi):
        circuit = build_cat_chain(3, half_pi).append(AxisRotation("x", 2, -math.pi / 2))
        text = circuit_to_text(circuit)
        assert text.splitlines()[0] == "qubits 3"
        assert "cx 1 2" in text
        assert circuit_from_text(text).ops == circuit.ops

    def test_text_form_rejects_garbage(self):
        with pytest.raises(GateError):
            circuit_from_text("qubits 2\nswap 0 1\n")

class TestChainBuilder:
    def test_bell(self, half_pi):
        state = execute(build_cat_chain(2, half_pi), new_zero_state(2))
        assert np.allclose(state.amplitudes, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])

    def test_five_qubits(self):
        params = CatParams(theta=1.3, phi=0.6)
        two_amplitude_check(execute(build_cat_chain(5, params), new_zero_state(5)), params)

    def test_gate_count(self, half_pi):
        circuit = build_cat_chain(6, half_pi)
        assert circuit.count(U3) == 1
        assert circuit.count(CNOT) == 5
        assert circuit.ops[0] == U3(0, math.pi / 2)

    def test_third_example(self):
        state = execute(build_cat_chain(4, CatParams(theta=2 * math.pi / 3)), new_zero_state(4))
        assert state.amplitudes[0] == pytest.approx(0.5, abs=1e-12)
        assert state.amplitudes[15] == pytest.approx(math.sqrt(3) / 2, abs=1e-12)

    def test_empty_circuit_is_identity(self):
        state = new_zero_state(3)
        assert np.array_equal(execute(Circuit(3), state).amplitudes, state.amplitudes)

    def test_execute_register_mismatch(self, half_pi):
        with pytest.raises(DimensionMismatchError):
            execute(build_cat_chain(3, half_pi), new_zero_state(2))

class TestCouplingMap:
    def test_melbourne_edges(self, melbourne):
        assert melbourne.num_qubits == 15
        assert len(melbourne.edges) == 20
        assert melbourne.has_edge(8, 6)
        assert not melbourne.has_edge(6, 7)

    def test_melbourne_degrees(self, melbourne):
        for q in range(15):
            if q == 7:
                assert melbourne.degree(q) == 1
            else:
                assert melbourne.degree(q) >= 2

    def test_bundled_file_matches_constant(self, melbourne):
        assert load_coupling("melbourne") == melbourne

    def test_text_format(self, melbourne):
        assert parse_coupling(format_coupling(melbourne)) == melbourne

    def test_self_loop_rejected(self):
        with pytest.raises(TopologyError):
            CouplingMap(3, frozenset({(1, 1)}))

    def test_malformed_text(self):
        with pytest.raises(TopologyError):
            parse_coupling("qubits 3\n0 1 2\n")

    def test_error_does_not_quote_the_line(self):
        with pytest.raises(TopologyError) as excinfo:
            parse_coupling("db_password=hunter2\n")
        assert "hunter2" not in excinfo.value.message
        assert excinfo.value.message.startswith("line 1:")

    def test_named_lookup_rejects_paths(self, tmp_path, melbourne):
        path = tmp_path / "device.coupling"
        path.write_text(format_coupling(melbourne))
        assert load_coupling(str(path)) == melbourne
        with pytest.raises(TopologyError):
            load_coupling(str(path), allow_paths=False)
        assert load_coupling("melbourne", allow_paths=False) == melbourne

    def test_missing_file(self):
        with pytest.raises(TopologyError):
            load_coupling("/nonexistent/device.coupling")

class TestTopologyBuilder:
    def test_melbourne_fifteen_qubit_cat(self, melbourne, half_pi):
        circuit = build_cat_on_topology(melbourne, 6, half_pi)
        assert circuit.ops[0] == U3(6, math.pi / 2)
        assert circuit.count(CNOT) == 14
        two_amplitude_check(execute(circuit, new_zero_state(15)), half_pi)

    def test_path_matches_chain(self, half_pi):
        topology = build_cat_on_topology(chain_coupling(3), 0, half_pi)
        assert topology.ops == build_cat_chain(3, half_pi).ops

    def test_star(self):
        params = CatParams(theta=0.9, phi=1.1)
        star = CouplingMap(5, frozenset({(0, 1), (0, 2), (0, 3), (0, 4)}))
        circuit = build_cat_on_topology(star, 0, params)
        cnots = [op for op in circuit.ops if isinstance(op, CNOT)]
        assert len(cnots) == 4
        assert all(op.control == 0 for op in cnots)
        two_amplitude_check(execute(circuit, new_zero_state(5)), params)

    def test_breadth_first_ascending(self, melbourne):
        edges = spanning_tree_edges(melbourne, 6)
        assert edges[:2] == [(6, 5), (6, 8)]
        assert len(edges) == 14

    def test_disconnected_names_unreachable(self, half_pi):
        coupling = CouplingMap(4, frozenset({(0, 1), (2, 3)}))
        with pytest.raises(TopologyError, match=r"\[2, 3\]"):
            build_cat_on_topology(coupling, 0, half_pi)

    def test_root_out_of_range(self, melbourne, half_pi):
        with pytest.raises(QubitIndexError):
            build_cat_on_topology(melbourne, 15, half_pi)

    def test_partial_cat(self, melbourne, half_pi):
        circuit = build_cat_on_topology(melbourne, 6, half_pi, size=5)
        assert circuit.num_qubits == 15
        assert len(circuit.cat.qubits) == 5
        state = execute(circuit, new_zero_state(15))
        mask = sum(1 << q for q in circuit.cat.qubits)
        assert abs(state.amplitudes[0]) ** 2 == pytest.approx(0.5)
        assert abs(state.amplitudes[mask]) ** 2 == pytest.approx(0.5)

    def test_any_root_gives_same_state(self, melbourne):
        params = CatParams(theta=2.2, phi=0.4)
        reference = execute(build_cat_on_topology(melbourne, 6, params), new_zero_state(15))
        for root in (0, 7, 14):
            state = execute(build_cat_on_topology(melbourne, root, params), new_zero_state(15))
            assert np.allclose(state.amplitudes, reference.amplitudes, atol=1e-10)

class TestValidateCircuit:
    def test_topology_output_passes(self, melbourne, half_pi):
        assert validate_circuit(build_cat_on_topology(melbourne, 6, half_pi), melbourne).ok

    def test_chain_violates_melbourne(self, melbourne, half_pi):
        report = validate_circuit(build_cat_chain(15, half_pi), melbourne)
        assert not report
        assert [(v.op_index, v.control, v.target) for v in report.violations] == [(7, 6, 7)]

    def test_no_cnots(self, melbourne):
        assert validate_circuit(Circuit(15, (U3(3, 1.0),)), melbourne).ok

    def test_register_mismatch(self, melbourne, half_pi):
        with pytest.raises(DimensionMismatchError):
            validate_circuit(build_cat_chain(5, half_pi), melbourne)
