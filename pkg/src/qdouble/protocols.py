"""Logical qudits stored in hole pairs and the gates built on them.

A v-type qudit lives in two vertex holes, ``|j>_v = |e_j>_{v1} |e_-j>_{v2}``;
a p-type qudit in two plaquette holes with fluxes. Logical operators:

* ``X`` is the string dragging a unit anyon from the second hole into the
  first (a single ``Z_i`` or ``X_i`` when the holes sit across spin i);
* ``Z`` is the product of the hole stabilizers of the first row, i.e. a
  clockwise loop of the conjugate anyon around it.

Braids, teleports and measurements are expressed through those operators, so
every routine runs on either engine except the single-spin measurements in
non-Pauli bases, which need the dense one.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .dense import StateVector
from .lattice import (
    CHARGE, FLUX, PLAQUETTE, VERTEX, CodeState, HoleError, LatticeGeometry, close_hole,
    open_hole, shortest_path, string_operator,
)
from .paulis import PauliOperator, compose, power


class ProtocolError(RuntimeError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass
class LogicalQudit:
    """Hole-encoded qudit.

    ``rows[0]`` holds v1 (or p1) and the holes later split off it, ``rows[1]``
    the v2 side. ``x_edges`` optionally pins the edges of the X string when
    the primary holes share more than one spin.
    """
    kind: str
    rows: tuple[list[int], list[int]]
    d: int
    x_edges: list[int] | None = None

    @property
    def first(self) -> int:
        return self.rows[0][0]

    @property
    def second(self) -> int:
        return self.rows[1][0]

    @property
    def anyon(self) -> str:
        return CHARGE if self.kind == VERTEX else FLUX

    def holes(self) -> list[int]:
        return list(self.rows[0]) + list(self.rows[1])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rows": [list(r) for r in self.rows], "x_edges": self.x_edges}


@dataclass
class ProtocolTranscript:
    protocol: str
    attempts: int = 0
    outcomes: list = field(default_factory=list)
    corrections: list[str] = field(default_factory=list)
    success: bool = False
    fidelity: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# operators --------------------------------------------------------------

def x_operator(geom: LatticeGeometry, q: LogicalQudit, k: int = 1, pair: tuple[int, int] | None = None) -> PauliOperator:
    """Logical X^k as the string from a row-1 hole to a row-0 hole (primary pair by default)."""
    if pair is None:
        a, b = q.second, q.first
        edges = q.x_edges
    else:
        b, a = pair
        edges = None
    if edges is not None:
        path = [a, b]
    else:
        path = shortest_path(geom, a, b)
    return string_operator(geom, q.anyon, path, k, edges)


def z_operator(geom: LatticeGeometry, q: LogicalQudit, k: int = 1) -> PauliOperator:
    """Logical Z^k: product of the first row's hole stabilizers, each a clockwise loop."""
    n, d = geom.n_spins, geom.d
    if q.kind == VERTEX:
        x = geom.vertex_x_powers[q.rows[0]].sum(axis=0)
        P = PauliOperator(d, x, np.zeros(n, dtype=np.int64))
    else:
        z = geom.plaquette_z_powers[q.rows[0]].sum(axis=0)
        P = PauliOperator(d, np.zeros(n, dtype=np.int64), z)
    return power(P, k)


def hole_loop(geom: LatticeGeometry, kind: str, site: int, g: int = 1, clockwise: bool = True) -> PauliOperator:
    """Closed string of the conjugate anyon around one hole, built step by step."""
    x, y = geom.coords(site)
    if kind == PLAQUETTE:
        ring = [geom.site(x, y + 1), geom.site(x + 1, y + 1), geom.site(x + 1, y), geom.site(x, y)]
        anyon = CHARGE
    else:
        ring = [geom.site(x - 1, y), geom.site(x, y), geom.site(x, y - 1), geom.site(x - 1, y - 1)]
        anyon = FLUX
    if not clockwise:
        ring = ring[::-1]
    return string_operator(geom, anyon, ring + ring[:1], g)


def spin_qudit(geom: LatticeGeometry, kind: str, spin: int) -> LogicalQudit:
    """Qudit on the two sites across ``spin``, oriented so that X is the bare spin Pauli."""
    first, second = geom.spin_ends(kind, spin)
    return LogicalQudit(kind, ([first], [second]), geom.d, [spin])


# encoding and single-qudit operations ----------------------------------

def encode(state: CodeState, q: LogicalQudit) -> LogicalQudit:
    """Open the qudit's holes; on the vacuum this leaves it in |0>."""
    for s in q.holes():
        open_hole(state, q.kind, s)
    return q


def release(state: CodeState, q: LogicalQudit) -> int:
    """Read Z, drag the content back out and close every hole. Returns the Z value read."""
    j = measure_logical_z(state, q)
    if j:
        state.apply(x_operator(state.geometry, q, -j))
    for s in q.holes():
        close_hole(state, q.kind, s)
    for s in _row_spins(state.geometry, q):
        state.fixed_spins.pop(s, None)
    return j


def _row_spins(geom: LatticeGeometry, q: LogicalQudit) -> list[int]:
    out = []
    for row in q.rows:
        for a, b in zip(row, row[1:]):
            out.extend(geom.adjacent(q.kind, a, b)[:1])
    return out


def _check_encoded(state: CodeState, q: LogicalQudit) -> None:
    if q.d != state.d:
        raise ConfigurationError("qudit and lattice disagree on d")
    missing = [s for s in q.holes() if s not in state.holes.of(q.kind)]
    if missing:
        raise ConfigurationError(f"{q.kind}-holes {missing} are not open")


def logical_x(state: CodeState, q: LogicalQudit, k: int = 1) -> CodeState:
    _check_encoded(state, q)
    if k % state.d:
        state.apply(x_operator(state.geometry, q, k))
    return state


def logical_z(state: CodeState, q: LogicalQudit, k: int = 1) -> CodeState:
    _check_encoded(state, q)
    if k % state.d:
        state.apply(z_operator(state.geometry, q, k))
    return state


def measure_logical_z(state: CodeState, q: LogicalQudit, outcome: int | None = None) -> int:
    """Occupancy of the first row: j for |j>."""
    _check_encoded(state, q)
    j, _ = state.measure(z_operator(state.geometry, q), outcome)
    return j


def measure_logical_x(state: CodeState, q: LogicalQudit, pair: tuple[int, int] | None = None,
                      single_spin: bool = True, outcome: int | None = None) -> int:
    """Fourier label m of the X eigenstate ``|m~>`` found (X eigenvalue ``w^-m``).

    With ``single_spin`` the primary holes must sit across one spin, making
    this a plain Z (v-type) or X (p-type) measurement of that spin. ``pair``
    selects another (row0 hole, row1 hole) pair of a split qudit.
    """
    _check_encoded(state, q)
    X = x_operator(state.geometry, q, 1, pair)
    if single_spin and X.weight != 1:
        raise ConfigurationError("holes are not adjacent across a single spin")
    forced = None if outcome is None else (-outcome) % state.d
    g, _ = state.measure(X, forced)
    return (-g) % state.d


# two-qudit gates -------------------------------------------------------

def braid_controlled_z(state: CodeState, control: LogicalQudit, target: LogicalQudit,
                       clockwise: bool = True) -> CodeState:
    """Carry the first hole of ``control`` around the first hole of ``target``.

    In the charge sector j of the control, the transported anyon traces a
    closed loop around the target hole, which is the target's Z^j; the braid
    is therefore ``sum_j Pi_j(Z_control) Z_target^{+-j}``, giving
    ``|a>|b> -> w^{+-ab}|a>|b>``.
    """
    if control is target or set(control.holes()) & set(target.holes()) and control.kind == target.kind:
        raise ConfigurationError("braid needs two distinct qudits")
    if control.kind == target.kind:
        raise ConfigurationError("braiding pairs a v-type with a p-type qudit")
    _check_encoded(state, control)
    _check_encoded(state, target)
    geom = state.geometry
    loop = z_operator(geom, target)
    state.controlled_phase(z_operator(geom, control), loop, 1 if clockwise else -1)
    return state


def _is_x_zero(state: CodeState, q: LogicalQudit) -> bool:
    X = x_operator(state.geometry, q)
    if state.engine == "dense":
        return abs(state.backend.expectation(X) - 1) < 1e-8
    return state.backend.peek(X) == 0


def prepare_x_eigenstate(state: CodeState, q: LogicalQudit, outcome: int | None = None) -> ProtocolTranscript:
    """Open fresh holes for q, measure X and rotate the result to ``|0~>``.

    ``Z |m~> = |m+1~>``, so the correction after reading m is ``Z^-m``.
    """
    encode(state, q)
    m = measure_logical_x(state, q, single_spin=False, outcome=outcome)
    tr = ProtocolTranscript("prepare_x_eigenstate", attempts=1, outcomes=[m], success=True)
    if m:
        Zc = z_operator(state.geometry, q, -m)
        state.apply(Zc)
        tr.corrections.append(str(Zc))
    return tr


def fourier_teleport(state: CodeState, source: LogicalQudit, dest: LogicalQudit,
                     inverse: bool = False, outcome: int | None = None,
                     release_source: bool = True) -> ProtocolTranscript:
    """Move the source state onto ``dest`` (opposite kind, in ``|0~>``) applying F or F^dag.

    The braid gives ``sum_l |l~>_src (x) X^{+-l} F^{+-1}|psi>``; the source X
    measurement reads l and ``X^{-+l}`` on the destination removes it.
    """
    if source.kind == dest.kind:
        raise ConfigurationError("teleport needs qudits of opposite kinds")
    if not _is_x_zero(state, dest):
        raise ProtocolError("teleport destination is not in |0~>")
    control, target = (source, dest) if source.kind == VERTEX else (dest, source)
    braid_controlled_z(state, control, target, clockwise=not inverse)
    l = measure_logical_x(state, source, single_spin=False, outcome=outcome)
    shift = l if inverse else -l
    tr = ProtocolTranscript("fourier_teleport" + ("_inverse" if inverse else ""), attempts=1,
                            outcomes=[l], success=True)
    if shift % state.d:
        C = x_operator(state.geometry, dest, shift)
        state.apply(C)
        tr.corrections.append(str(C))
    if release_source:
        release(state, source)
    return tr


@dataclass
class GateLayout:
    """Sites used by the measurement-based gates on one lattice.

    ``helper`` is a qudit of the opposite kind used as the teleport waypoint;
    ``landing`` is where the target ends up (usually the target's own holes
    with a different crossing spin).
    """
    helper: LogicalQudit
    landing: LogicalQudit


def controlled_x(state: CodeState, control: LogicalQudit, target: LogicalQudit, layout: GateLayout,
                 inverse: bool = False, outcomes: tuple[int | None, int | None] = (None, None),
                 transcript: ProtocolTranscript | None = None) -> LogicalQudit:
    """``|a>|b> -> |a>|b +- a>`` between same-kind qudits; returns the target's new location.

    Sequence: teleport the target through F^dag onto the helper, braid with
    the control, teleport back through F. Since ``F Z F^dag = X^dag`` the
    anticlockwise braid yields the forward controlled-X.
    """
    if control.kind != target.kind:
        raise ConfigurationError("controlled-X acts on two qudits of the same kind")
    helper, landing = layout.helper, layout.landing
    if helper.kind == target.kind or landing.kind != target.kind:
        raise ConfigurationError("layout kinds do not fit the target")
    tr = transcript if transcript is not None else ProtocolTranscript("controlled_x")
    sub = prepare_x_eigenstate(state, helper)
    tr.corrections += sub.corrections
    sub = fourier_teleport(state, target, helper, inverse=True, outcome=outcomes[0])
    tr.outcomes += sub.outcomes
    tr.corrections += sub.corrections
    if helper.kind == VERTEX:
        braid_controlled_z(state, helper, control, clockwise=inverse)
    else:
        braid_controlled_z(state, control, helper, clockwise=inverse)
    sub = prepare_x_eigenstate(state, landing)
    tr.corrections += sub.corrections
    sub = fourier_teleport(state, helper, landing, inverse=False, outcome=outcomes[1])
    tr.outcomes += sub.outcomes
    tr.corrections += sub.corrections
    tr.attempts += 1
    tr.success = True
    return landing


# non-Clifford ancillae --------------------------------------------------

def phi_from_theta(theta) -> np.ndarray:
    """Spin-basis phases phi with ``phi_{j+1} - phi_j = theta_j - mean(theta)`` and phi_0 = 0.

    The prepared ancilla carries the consecutive differences of phi, which
    sum to zero around Z_d, so theta is realized up to a global phase.
    """
    theta = np.asarray(theta, dtype=float)
    steps = theta - theta.mean()
    return np.concatenate([[0.0], np.cumsum(steps)[:-1]])


def phase_state_basis(phi) -> np.ndarray:
    """Orthonormal basis ``{Z^k |phi>}``; row k is the k-th vector."""
    phi = np.asarray(phi, dtype=float)
    d = len(phi)
    j = np.arange(d)
    return np.exp(1j * (phi[None, :] + 2 * np.pi * np.outer(j, j) / d)) / np.sqrt(d)


@dataclass
class AncillaLayout:
    """Sites for preparing ``|theta>_p``: the v/p pair around ``spin`` and the landing p-qudit."""
    spin: int
    landing: LogicalQudit


def prepare_ancilla_theta(state: CodeState, theta, layout: AncillaLayout, max_attempts: int = 100,
                          forced: list[tuple[int, int]] | None = None) -> tuple[ProtocolTranscript, LogicalQudit]:
    """Prepare ``sum_j e^{i theta_j}|j>_p / sqrt(d)`` on ``layout.landing`` (dense engine).

    Measure the shared spin in the basis ``{Z^k|phi>}``, apply ``X_p^dag``
    and keep the run only if the p-qudit then reads 0; otherwise release both
    qudits and retry on the restored vacuum. The surviving v-qudit is Fourier
    teleported onto the landing plaquettes.

    ``forced`` optionally fixes (spin outcome, p readout) per attempt.
    """
    if state.engine != "dense":
        raise ConfigurationError("phase-state measurements need the dense engine")
    theta = np.asarray(theta, dtype=float)
    geom = state.geometry
    if theta.shape != (geom.d,):
        raise ValueError(f"theta needs {geom.d} entries")
    basis = phase_state_basis(phi_from_theta(theta))
    tr = ProtocolTranscript("prepare_ancilla_theta")
    while tr.attempts < max_attempts:
        f = forced[tr.attempts] if forced and tr.attempts < len(forced) else (None, None)
        tr.attempts += 1
        qv = encode(state, spin_qudit(geom, VERTEX, layout.spin))
        qp = encode(state, spin_qudit(geom, PLAQUETTE, layout.spin))
        rec = state.backend.measure_in_basis(layout.spin, basis, state.rng, f[0], label="phi")
        state.apply(x_operator(geom, qp, -1))
        m = measure_logical_z(state, qp, f[1])
        tr.outcomes.append([rec.outcome, m])
        if m == 0:
            release(state, qp)
            landing = layout.landing
            sub = prepare_x_eigenstate(state, landing)
            tr.corrections += sub.corrections
            sub = fourier_teleport(state, qv, landing)
            tr.outcomes.append(sub.outcomes[0])
            tr.corrections += sub.corrections
            tr.success = True
            return tr, landing
        release(state, qp)
        release(state, qv)
    return tr, layout.landing


@dataclass
class RUSLayout:
    ancilla: AncillaLayout
    gate: GateLayout


def phase_gate_rus(state: CodeState, data: LogicalQudit, theta, layout: RUSLayout,
                   max_attempts: int = 100) -> ProtocolTranscript:
    """Apply ``U(theta) = sum_j e^{i theta_j}|j><j|`` to a p-type qudit by repeat-until-success.

    Each round prepares ``|delta>`` for the still-missing phases delta, applies
    the inverse controlled-X from data onto it and reads the ancilla in Z.
    Outcome m leaves the data with ``delta_{k+m}`` instead of ``delta_k``; the
    residual becomes the next round's delta.
    """
    if data.kind != PLAQUETTE:
        raise ConfigurationError("the repeat-until-success gate is laid out for p-type data")
    d = state.d
    target = np.asarray(theta, dtype=float)
    applied = np.zeros(d)
    tr = ProtocolTranscript("phase_gate_rus")
    while tr.attempts < max_attempts:
        delta = target - applied
        if _is_global(delta):
            tr.success = True
            return tr
        tr.attempts += 1
        sub, anc = prepare_ancilla_theta(state, delta, layout.ancilla, max_attempts)
        if not sub.success:
            raise ProtocolError("ancilla preparation exhausted its attempts")
        landing = controlled_x(state, data, anc, layout.gate, inverse=True)
        m = measure_logical_z(state, landing)
        release(state, landing)
        tr.outcomes.append(m)
        applied = applied + np.roll(delta, -m)
    tr.success = _is_global(target - applied)
    return tr


def _is_global(delta, tol: float = 1e-12) -> bool:
    w = np.exp(1j * (np.asarray(delta) - delta[0]))
    return bool(np.allclose(w, 1.0, atol=tol))


# repetition-code rows ---------------------------------------------------

def split_hole(state: CodeState, q: LogicalQudit, end: int, new_site: int | None = None,
               outcome: int | None = None) -> LogicalQudit:
    """Grow row ``end`` of q by one hole next to its last hole.

    v-type: measure Z on the shared spin and undo the value g with a power of
    A on the new vertex (no fluxes are created); p-type: measure X on the
    shared spin and fix it with a power of B on the new plaquette.
    """
    _check_encoded(state, q)
    geom = state.geometry
    row = q.rows[end]
    last = row[-1]
    if new_site is None:
        taken = state.holes.of(q.kind)
        new_site = next((w for w, _ in geom.neighbors(q.kind, last) if w not in taken), None)
        if new_site is None:
            raise HoleError("no free neighbour to split into")
    edges = geom.adjacent(q.kind, last, new_site)
    if not edges:
        raise HoleError(f"{new_site} is not adjacent to {last}")
    if new_site in state.holes.of(q.kind):
        raise HoleError(f"{q.kind}{new_site} is already open")
    e = edges[0]
    open_hole(state, q.kind, new_site)
    n, d = geom.n_spins, geom.d
    if q.kind == VERTEX:
        g, _ = state.measure(PauliOperator.single(n, d, e, z=1), outcome)
        a = int(geom.vertex_x_powers[new_site, e])
        t = (-g * a) % d          # a = +-1, so a^{-1} = a
        fix = PauliOperator(d, geom.vertex_x_powers[new_site], np.zeros(n, dtype=np.int64)) ** t
        state.fixed_spins[e] = "z"
    else:
        g, _ = state.measure(PauliOperator.single(n, d, e, x=1), outcome)
        b = int(geom.plaquette_z_powers[new_site, e])
        t = (g * b) % d
        fix = PauliOperator(d, np.zeros(n, dtype=np.int64), geom.plaquette_z_powers[new_site]) ** t
        state.fixed_spins[e] = "x"
    if t:
        state.apply(fix)
    row.append(new_site)
    return q


# dense-engine oracles ---------------------------------------------------

def basis_state(state: CodeState, qudits: list[LogicalQudit], values) -> StateVector:
    """``prod_i X_i^{values_i}`` applied to the stored vacuum (dense only)."""
    if state.reference is None:
        raise ConfigurationError("no dense reference vacuum stored")
    out = state.reference.copy()
    for q, j in zip(qudits, values):
        if j % state.d:
            out.apply_pauli(x_operator(state.geometry, q, j))
    return out


def logical_amplitudes(state: CodeState, qudits: list[LogicalQudit]) -> np.ndarray:
    """Amplitudes of the state in the joint logical basis of ``qudits``; shape (d,)*m."""
    d = state.d
    m = len(qudits)
    out = np.zeros((d,) * m, dtype=complex)
    for idx in np.ndindex(*out.shape):
        out[idx] = basis_state(state, qudits, idx).overlap(state.backend)
    return out


def encode_amplitudes(state: CodeState, qudits: list[LogicalQudit], amplitudes) -> CodeState:
    """Overwrite the dense state with ``sum amplitudes[idx] |idx>_L`` (test injection)."""
    amps = np.asarray(amplitudes, dtype=complex).reshape((state.d,) * len(qudits))
    acc = np.zeros_like(state.backend.amplitudes)
    for idx in np.ndindex(*amps.shape):
        if amps[idx] != 0:
            acc += amps[idx] * basis_state(state, qudits, idx).amplitudes
    acc /= np.linalg.norm(acc)
    state.backend = StateVector(state.backend.n, state.d, acc)
    return state


def logical_fidelity(state: CodeState, qudits: list[LogicalQudit], target) -> float:
    """``|<target|psi>|^2`` with target given as logical amplitudes; phase-invariant."""
    amps = logical_amplitudes(state, qudits).reshape(-1)
    t = np.asarray(target, dtype=complex).reshape(-1)
    t = t / np.linalg.norm(t)
    return float(abs(np.vdot(t, amps)) ** 2)


def two_by_two_layout(geom: LatticeGeometry) -> dict:
    """Standard site assignment on the 2x2 torus.

    data p-qudit on plaquettes (0,1),(1,1) crossing v(1,1); v-qudit on vertices
    (1,0),(1,1) crossing v(1,0); a second p-qudit on plaquettes (0,0),(1,0)
    crossing v(0,0).
    """
    if (geom.Lx, geom.Ly) != (2, 2):
        raise ConfigurationError("layout is specific to the 2x2 torus")
    spin_data, spin_v, spin_aux = geom.v_edge(1, 1), geom.v_edge(1, 0), geom.v_edge(0, 0)
    data = spin_qudit(geom, PLAQUETTE, spin_data)
    helper_v = spin_qudit(geom, VERTEX, spin_v)
    aux_p = spin_qudit(geom, PLAQUETTE, spin_aux)
    return {
        "data": data,
        "v": helper_v,
        "p": aux_p,
        "spin": spin_v,
        "rus": RUSLayout(AncillaLayout(spin_v, aux_p), GateLayout(helper_v, aux_p)),
    }
