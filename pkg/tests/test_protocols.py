import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdouble import protocols as pr
from qdouble.dense import fourier_matrix
from qdouble.lattice import PLAQUETTE, VERTEX, LatticeGeometry, extract_syndrome, ground_state
from qdouble.paulis import commutation_exponent


def random_amplitudes(d, rng):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def fresh(d, seed=0):
    geom = LatticeGeometry(2, 2, d)
    state = ground_state(geom, "dense", np.random.default_rng(seed))
    return state, pr.two_by_two_layout(geom)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("kind", [VERTEX, PLAQUETTE])
def test_logical_operators_on_single_spin(d, kind):
    geom = LatticeGeometry(3, 3, d)
    q = pr.spin_qudit(geom, kind, geom.v_edge(1, 1))
    X = pr.x_operator(geom, q)
    Z = pr.z_operator(geom, q)
    assert X.weight == 1
    assert commutation_exponent(Z, X) % d == 1       # Z X = w X Z
    state = ground_state(geom, "tableau")
    pr.encode(state, q)
    for j in range(d):
        s = state.copy()
        pr.logical_x(s, q, j)
        assert pr.measure_logical_z(s, q) == j


def test_hole_loop_is_hole_stabilizer():
    geom = LatticeGeometry(3, 3, 3)
    for kind in (VERTEX, PLAQUETTE):
        loop = pr.hole_loop(geom, kind, 4)
        stab = geom.vertex_x_powers[4] if kind == VERTEX else geom.plaquette_z_powers[4]
        powers = loop.x if kind == VERTEX else loop.z
        assert np.array_equal(powers % 3, stab % 3)


@pytest.mark.parametrize("d", [2, 3])
def test_braid_phase(d):
    state, L = fresh(d)
    v, p = L["v"], L["data"]
    pr.encode(state, v)
    pr.encode(state, p)
    for a in range(d):
        for b in range(d):
            for cw, sign in ((True, 1), (False, -1)):
                s = state.copy()
                pr.logical_x(s, v, a)
                pr.logical_x(s, p, b)
                pr.braid_controlled_z(s, v, p, clockwise=cw)
                amp = pr.logical_amplitudes(s, [v, p])[a, b]
                assert amp == pytest.approx(np.exp(2j * np.pi * sign * a * b / d))


@settings(max_examples=12, deadline=None)
@given(st.sampled_from([2, 3]), st.booleans(), st.integers(0, 2), st.integers(0, 2 ** 31))
def test_fourier_teleport_every_branch(d, inverse, l, seed):
    l %= d
    state, L = fresh(d, seed)
    v, p = L["v"], L["p"]
    pr.encode(state, v)
    psi = random_amplitudes(d, np.random.default_rng(seed))
    pr.encode_amplitudes(state, [v], psi)
    pr.prepare_x_eigenstate(state, p)
    tr = pr.fourier_teleport(state, v, p, inverse=inverse, outcome=l)
    assert tr.outcomes == [l]
    assert pr.logical_fidelity(state, [p], fourier_matrix(d, inverse) @ psi) == pytest.approx(1.0)
    assert state.holes.vertices == set()          # source released


def test_teleport_from_plaquette_to_vertex():
    d = 3
    state, L = fresh(d, 5)
    pr.encode(state, L["data"])
    psi = np.array([1, 2j, -1]) / np.sqrt(6)
    pr.encode_amplitudes(state, [L["data"]], psi)
    pr.prepare_x_eigenstate(state, L["v"])
    pr.fourier_teleport(state, L["data"], L["v"])
    assert pr.logical_fidelity(state, [L["v"]], fourier_matrix(d) @ psi) == pytest.approx(1.0)


def test_teleport_rejects_same_kind():
    state, L = fresh(2)
    with pytest.raises(pr.ConfigurationError):
        pr.fourier_teleport(state, L["data"], L["p"])


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("inverse", [False, True])
def test_controlled_x_truth_table(d, inverse):
    state, L = fresh(d, 11)
    data, aux = L["data"], L["p"]
    pr.encode(state, data)
    pr.encode(state, aux)
    for a in range(d):
        for b in range(d):
            s = state.copy()
            pr.logical_x(s, data, a)
            pr.logical_x(s, aux, b)
            land = pr.controlled_x(s, data, aux, pr.GateLayout(L["v"], aux), inverse=inverse)
            amps = pr.logical_amplitudes(s, [data, land])
            want = (a, (b - a) % d if inverse else (b + a) % d)
            assert abs(amps[want]) == pytest.approx(1.0)


def test_controlled_x_on_superposition():
    d = 3
    rng = np.random.default_rng(4)
    state, L = fresh(d, 4)
    data, aux = L["data"], L["p"]
    pr.encode(state, data)
    pr.encode(state, aux)
    psi = random_amplitudes(d * d, rng).reshape(d, d)
    pr.encode_amplitudes(state, [data, aux], psi)
    land = pr.controlled_x(state, data, aux, pr.GateLayout(L["v"], aux))
    want = np.zeros_like(psi)
    for a in range(d):
        for b in range(d):
            want[a, (a + b) % d] = psi[a, b]
    assert pr.logical_fidelity(state, [data, land], want) == pytest.approx(1.0)


def test_phi_from_theta_differences():
    theta = np.array([0.3, 1.1, -0.4])
    phi = pr.phi_from_theta(theta)
    assert phi[0] == 0
    np.testing.assert_allclose(np.diff(phi), (theta - theta.mean())[:-1])
    B = pr.phase_state_basis(phi)
    np.testing.assert_allclose(B @ B.conj().T, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_ancilla_every_branch(d):
    theta = np.random.default_rng(d).uniform(0, 2 * np.pi, d)
    for k in range(d):
        state, L = fresh(d, k)
        tr, land = pr.prepare_ancilla_theta(state, theta, L["rus"].ancilla, forced=[(k, 0)])
        assert tr.success and tr.attempts == 1
        assert pr.logical_fidelity(state, [land], np.exp(1j * theta)) == pytest.approx(1.0)


def test_ancilla_failure_restores_vacuum():
    d = 3
    theta = np.array([0.0, 0.7, 2.0])
    state, L = fresh(d, 9)
    tr, land = pr.prepare_ancilla_theta(state, theta, L["rus"].ancilla, forced=[(0, 1), (0, 0)])
    assert tr.attempts == 2 and tr.success
    assert pr.logical_fidelity(state, [land], np.exp(1j * theta)) == pytest.approx(1.0)


def test_ancilla_needs_dense():
    geom = LatticeGeometry(2, 2, 2)
    state = ground_state(geom, "tableau")
    L = pr.two_by_two_layout(geom)
    with pytest.raises(pr.ConfigurationError):
        pr.prepare_ancilla_theta(state, [0, 1], L["rus"].ancilla)


@pytest.mark.parametrize("d", [2, 3])
def test_rus_phase_gate(d):
    rng = np.random.default_rng(20 + d)
    theta = rng.uniform(0, 2 * np.pi, d)
    state, L = fresh(d, 20 + d)
    pr.encode(state, L["data"])
    psi = random_amplitudes(d, rng)
    pr.encode_amplitudes(state, [L["data"]], psi)
    tr = pr.phase_gate_rus(state, L["data"], theta, L["rus"])
    assert tr.success
    assert pr.logical_fidelity(state, [L["data"]], np.exp(1j * theta) * psi) == pytest.approx(1.0)
    assert state.holes.plaquettes == set(L["data"].holes())


def test_rus_rejects_vertex_data():
    state, L = fresh(2)
    with pytest.raises(pr.ConfigurationError):
        pr.phase_gate_rus(state, L["v"], [0, 1], L["rus"])


@pytest.mark.parametrize("kind", [VERTEX, PLAQUETTE])
def test_split_hole_preserves_logical_value(kind):
    d = 3
    geom = LatticeGeometry(5, 5, d)
    state = ground_state(geom, "tableau", np.random.default_rng(1))
    q = pr.spin_qudit(geom, kind, geom.h_edge(1, 2))
    pr.encode(state, q)
    pr.logical_x(state, q, 2)
    pr.split_hole(state, q, 0)
    pr.split_hole(state, q, 1)
    assert len(q.rows[0]) == 2 and len(q.rows[1]) == 2
    assert pr.measure_logical_z(state, q) == 2
    assert extract_syndrome(state).is_trivial()
    Z = pr.z_operator(geom, q)
    for _, _, P in state.enforced_checks():
        assert commutation_exponent(P, Z) == 0


def test_release_returns_value_and_closes_holes():
    geom = LatticeGeometry(3, 3, 3)
    state = ground_state(geom, "tableau")
    q = pr.encode(state, pr.spin_qudit(geom, VERTEX, geom.h_edge(0, 0)))
    pr.logical_x(state, q, 1)
    assert pr.release(state, q) == 1
    assert state.holes.vertices == set()
    assert extract_syndrome(state).is_trivial()
