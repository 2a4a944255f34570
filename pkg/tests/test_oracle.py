"""Exact Born-probability oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bornbox.circuits import (IqpCircuit, OutcomePattern, ProdCircuit,
                              ce_encode, index_to_outcome)
from bornbox.oracle import (ExactDistribution, OracleLimitError, StateVector,
                            exact_distribution, exact_probability,
                            exact_sample, l1_distance, min_sparsity,
                            statevector)
from bornbox.stabcore import (GateApp, ProductState, pauli_expansion_probability,
                              tableau_from_gates)

from helpers import ghz_circuit, random_iqp_circuit, random_pattern, random_prod_circuit


def test_bell_distribution():
    c = ghz_circuit(2)
    d = exact_distribution(c)
    assert np.allclose(d.probs, [0.5, 0, 0, 0.5])
    assert abs(exact_probability(c, OutcomePattern("0*")) - 0.5) < 1e-12
    assert abs(exact_probability(c, OutcomePattern("11")) - 0.5) < 1e-12


def test_ghz3_distribution_is_exact():
    d = exact_distribution(ghz_circuit(3))
    assert d.probs[0] == 0.5
    assert d.probs[7] == 0.5
    assert d.probs[1:7].max() == 0.0
    assert exact_probability(ghz_circuit(3), OutcomePattern("111")) == 0.5


def test_x_gate_flips_and_index_order():
    c = ProdCircuit(2, 2, ProductState.zero(2), (GateApp("X", (1,)),))
    d = exact_distribution(c)
    # outcome "01": qubit 0 measured 0, qubit 1 measured 1 -> index 0b01
    assert np.allclose(d.probs, [0, 1, 0, 0])


def test_mixed_inputs():
    c = ProdCircuit(1, 1, ProductState(((0.0, 0.0, 0.0),)), ())
    assert np.allclose(exact_distribution(c).probs, [0.5, 0.5])
    c = ProdCircuit(1, 1, ProductState(((0.0, 0.0, 0.5),)), ())
    assert abs(exact_probability(c, OutcomePattern("0")) - 0.75) < 1e-12


def test_mixed_input_through_entangler():
    # H on a partially mixed qubit, then CNOT; cross-check by density matrix
    c = ProdCircuit(2, 2, ProductState(((0.2, -0.1, 0.4), (0.0, 0.0, 1.0))),
                    (GateApp("H", (0,)), GateApp("CNOT", (0, 1))))
    d = exact_distribution(c)
    X = np.array([[0, 1], [1, 0]], complex)
    Y = np.array([[0, -1j], [1j, 0]], complex)
    Z = np.array([[1, 0], [0, -1]], complex)
    rho0 = (np.eye(2) + 0.2 * X - 0.1 * Y + 0.4 * Z) / 2
    rho = np.kron(np.diag([1.0, 0.0]), rho0)  # qubit 1 slow axis, qubit 0 fast
    H2 = np.array([[1, 1], [1, -1]], complex) / np.sqrt(2)
    U = np.zeros((4, 4), complex)
    for b in range(4):
        U[b ^ ((b & 1) << 1), b] = 1.0  # CNOT control qubit 0, target qubit 1
    U = U @ np.kron(np.eye(2), H2)
    rho = U @ rho @ U.conj().T
    want = [rho[0, 0].real, rho[2, 2].real, rho[1, 1].real, rho[3, 3].real]
    assert np.allclose(d.probs, want)


def test_iqp_frozen():
    assert np.allclose(exact_distribution(IqpCircuit(1, 1, ((1,),))).probs,
                       [0.5, 0.5])
    assert np.allclose(exact_distribution(IqpCircuit(1, 1, ((1,), (1,)))).probs,
                       [0.0, 1.0])
    # row touching only qubit 0 leaves qubit 1 in |0>
    assert np.allclose(exact_distribution(IqpCircuit(2, 2, ((1, 0),))).probs,
                       [0.5, 0, 0.5, 0])


def test_iqp_empty_program_is_point_mass():
    d = exact_distribution(IqpCircuit(3, 3, ()))
    assert d.probs[0] == 1.0


def test_encoded_frozen():
    e = ce_encode(ProdCircuit(1, 1, ProductState.zero(1), ()))
    d = exact_distribution(e)
    assert np.allclose(d.probs, [0.5, 0, 0, 0.5])
    assert exact_probability(e, OutcomePattern("0*")) == 0.5
    assert exact_probability(e, OutcomePattern("*1")) == 0.5
    assert exact_probability(e, OutcomePattern("00")) == 0.5
    assert exact_probability(e, OutcomePattern("10")) == 0.0


def test_encoded_marginals_exactly_dyadic():
    e = ce_encode(ghz_circuit(3))
    assert e.k == 4
    assert exact_probability(e, OutcomePattern("*01*")) == 0.25
    assert exact_probability(e, OutcomePattern("1***")) == 0.5
    assert exact_probability(e, OutcomePattern("*111")) == 0.125


def test_encoded_first_bit_recovers_inner_marginal():
    # Par(Z) = X, so summing outcomes with even parity equals inner p(first=0)
    inner = random_prod_circuit(np.random.default_rng(3), 3, 8)
    e = ce_encode(inner)
    p0 = exact_probability(inner, OutcomePattern("0**"))
    d = exact_distribution(e)
    even = sum(float(d.probs[i]) for i in range(1 << e.k)
               if bin(i).count("1") % 2 == 0)
    assert abs(even - p0) < 1e-12


def test_distribution_normalized_after_rounding():
    rng = np.random.default_rng(17)
    for _ in range(10):
        c = random_prod_circuit(rng, 3, 10)
        assert abs(float(exact_distribution(c).probs.sum()) - 1.0) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_marginal_equals_sum_of_completions(seed):
    rng = np.random.default_rng(seed)
    if rng.integers(2):
        c = random_prod_circuit(rng, int(rng.integers(1, 4)), int(rng.integers(0, 8)))
    else:
        c = random_iqp_circuit(rng, int(rng.integers(1, 4)), int(rng.integers(0, 6)))
    pattern = random_pattern(rng, c.k)
    total = sum(
        exact_probability(c, OutcomePattern(index_to_outcome(i, c.k)))
        for i in range(1 << c.k)
        if pattern.matches(index_to_outcome(i, c.k)))
    assert abs(exact_probability(c, pattern) - total) < 1e-9


def test_encoded_closed_form_agrees_with_distribution():
    rng = np.random.default_rng(23)
    for _ in range(5):
        e = ce_encode(random_prod_circuit(rng, 2, 6))
        d = exact_distribution(e)
        for i in range(1 << e.k):
            bits = index_to_outcome(i, e.k)
            assert abs(exact_probability(e, OutcomePattern(bits))
                       - d.probs[i]) < 1e-12


def test_min_sparsity():
    p = np.array([0.5, 0.3, 0.1, 0.1])
    assert min_sparsity(p, 0.0) == 4
    assert min_sparsity(p, 0.2) == 3
    assert min_sparsity(p, 0.4) == 2
    assert min_sparsity(p, 2.0) == 1
    with pytest.raises(ValueError):
        min_sparsity(p, -0.1)
    with pytest.raises(ValueError):
        min_sparsity(p, 2.5)


@given(st.integers(1, 4), st.floats(0.0, 2.0))
def test_min_sparsity_uniform_formula(d, eps):
    # dropping the u smallest of 2^d equal cells costs 2u/2^d in L1
    size = 1 << d
    t = min_sparsity(np.full(size, 1.0 / size), eps)
    want = max(1, int(np.ceil(size * (1.0 - eps / 2.0) - 1e-9)))
    assert t == want


def test_l1_distance():
    a = ExactDistribution(1, np.array([1.0, 0.0]))
    b = ExactDistribution(1, np.array([0.25, 0.75]))
    assert abs(l1_distance(a, b) - 1.5) < 1e-15
    assert l1_distance(a.probs, b.probs) == l1_distance(a, b)
    with pytest.raises(ValueError):
        l1_distance(a, ExactDistribution(2, np.full(4, 0.25)))


def test_exact_sample_deterministic():
    d = exact_distribution(ghz_circuit(3))
    a = exact_sample(d, np.random.default_rng(0))
    b = exact_sample(d, np.random.default_rng(0))
    assert a == b
    assert a in ("000", "111")
    draws = d.sample_outcomes(np.random.default_rng(1), 200)
    assert set(draws) <= {"000", "111"}


def test_oracle_limit(monkeypatch):
    monkeypatch.setenv("BORNBOX_ORACLE_LIMIT", "2")
    with pytest.raises(OracleLimitError):
        exact_distribution(ghz_circuit(3))
    assert np.allclose(exact_distribution(ghz_circuit(2)).probs,
                       [0.5, 0, 0, 0.5])
    monkeypatch.setenv("BORNBOX_ORACLE_LIMIT", "abc")
    with pytest.raises(OracleLimitError):
        exact_distribution(ghz_circuit(2))
    monkeypatch.setenv("BORNBOX_ORACLE_LIMIT", "0")
    with pytest.raises(OracleLimitError):
        exact_distribution(ghz_circuit(2))


def test_statevector_validation():
    with pytest.raises(ValueError, match="wrong length"):
        StateVector(2, np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="not normalized"):
        StateVector(1, np.array([1.0, 1.0]))
    psi = statevector(ghz_circuit(2))
    assert psi.n == 2
    assert abs(abs(psi.amplitudes[0]) ** 2 - 0.5) < 1e-12
    assert abs(abs(psi.amplitudes[3]) ** 2 - 0.5) < 1e-12
    with pytest.raises(ValueError, match="no state vector"):
        statevector(ProdCircuit(1, 1, ProductState(((0.0, 0.0, 0.0),)), ()))
    with pytest.raises(TypeError):
        statevector(ce_encode(ghz_circuit(2)))


def test_distribution_validation():
    with pytest.raises(ValueError, match="wrong length"):
        ExactDistribution(2, np.array([0.5, 0.5]))
    with pytest.raises(ValueError, match="negative"):
        ExactDistribution(1, np.array([1.1, -0.1]))
    with pytest.raises(ValueError, match="sum to 1"):
        ExactDistribution(1, np.array([0.7, 0.7]))
    d = ExactDistribution(2, np.array([0.5, 0.5, 0.0, 0.0]))
    with pytest.raises(ValueError, match="pattern length"):
        d.probability(OutcomePattern("0"))


def test_statevector_route_matches_pauli_expansion():
    # two independent evaluation routes for Clifford circuits on |0..0>
    rng = np.random.default_rng(41)
    for _ in range(12):
        n = int(rng.integers(1, 4))
        c = random_prod_circuit(rng, n, int(rng.integers(0, 10)), mixed=False)
        c = ProdCircuit(n, n, ProductState.zero(n), c.gates)
        t = tableau_from_gates(n, c.gates)
        pattern = random_pattern(rng, n)
        via_tableau = pauli_expansion_probability(t, c.state, pattern.trits)
        via_oracle = exact_probability(c, pattern)
        assert abs(via_tableau - via_oracle) < 1e-10
