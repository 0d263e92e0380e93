"""Random Clifford circuits run side by side on the dense and tableau engines.

Both engines start from the same lattice vacuum. Each step is a Pauli, a
Fourier gate, a controlled-Z power or a Pauli measurement. Measurements
compare the full outcome distribution; the dense branch is sampled and the
tableau is forced onto it. At the end every tableau stabilizer, phase
included, must have expectation 1 on the dense state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeGeometry, ground_state
from .paulis import PauliOperator
from .tableau import Tableau

GATES = ("pauli", "fourier", "fourier_dag", "cz", "measure")
TOL = 1e-9


def random_pauli(n: int, d: int, rng: np.random.Generator, max_weight: int = 3) -> PauliOperator:
    w = int(rng.integers(1, max_weight + 1))
    sites = rng.choice(n, size=w, replace=False)
    x = np.zeros(n, dtype=np.int64)
    z = np.zeros(n, dtype=np.int64)
    x[sites] = rng.integers(0, d, size=w)
    z[sites] = rng.integers(0, d, size=w)
    if not (x.any() or z.any()):
        z[sites[0]] = 1
    P = PauliOperator(d, x, z)
    # at d=2 a Y-like factor needs a phase to be Hermitian-ordered
    return P.with_phase(0 if P.has_unit_order() else 1)


def random_circuit(n: int, d: int, depth: int, rng: np.random.Generator) -> list[tuple]:
    ops = []
    for _ in range(depth):
        g = GATES[int(rng.integers(len(GATES)))]
        if g == "pauli" or g == "measure":
            ops.append((g, random_pauli(n, d, rng)))
        elif g == "cz":
            a, b = rng.choice(n, size=2, replace=False)
            ops.append((g, int(a), int(b), int(rng.integers(1, d))))
        else:
            ops.append((g, int(rng.integers(n))))
    return ops


def tableau_distribution(tab: Tableau, P: PauliOperator) -> np.ndarray:
    det = tab.peek(P)
    if det is None:
        return np.full(tab.d, 1.0 / tab.d)
    out = np.zeros(tab.d)
    out[det] = 1.0
    return out


@dataclass
class CrosscheckResult:
    circuits: int
    measurements: int = 0
    mismatches: int = 0
    first_failure: dict | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return self.mismatches == 0


def run_circuit(dense, tab: Tableau, ops: list[tuple], rng: np.random.Generator) -> tuple[int, str | None]:
    """Apply ``ops`` to both engines; returns (measurements made, failure description or None)."""
    n_meas = 0
    for op in ops:
        kind = op[0]
        if kind == "pauli":
            dense.apply_pauli(op[1])
            tab.apply_pauli(op[1])
        elif kind in ("fourier", "fourier_dag"):
            dense.apply_fourier(op[1], inverse=kind == "fourier_dag")
            tab.apply_fourier(op[1], inverse=kind == "fourier_dag")
        elif kind == "cz":
            dense.apply_controlled_z_power(op[1], op[2], op[3])
            tab.apply_controlled_z_power(op[1], op[2], op[3])
        else:
            P = op[1]
            pd = dense.pauli_distribution(P)
            pt = tableau_distribution(tab, P)
            n_meas += 1
            if not np.allclose(pd, pt, atol=TOL):
                return n_meas, f"distribution of {P}: dense {np.round(pd, 6).tolist()} vs tableau {pt.tolist()}"
            k = dense.measure_pauli(P, rng).outcome
            tab.measure_pauli(P, outcome=k)
    for S in tab.stabilizers():
        if abs(dense.expectation(S) - 1) > TOL:
            return n_meas, f"stabilizer {S} has dense expectation {dense.expectation(S):.6f}"
    return n_meas, None


def crosscheck(circuits: int, seed: int, d: int = 3, Lx: int = 2, Ly: int = 2, depth: int = 12) -> CrosscheckResult:
    """Seeded sweep; circuit i uses ``default_rng([seed, i])``."""
    geom = LatticeGeometry(Lx, Ly, d)
    dense0 = ground_state(geom, "dense", np.random.default_rng([seed, 0, 0])).backend
    tab0 = ground_state(geom, "tableau").backend
    result = CrosscheckResult(circuits)
    start_ok = all(abs(dense0.expectation(S) - 1) < TOL for S in tab0.stabilizers())
    if not start_ok:
        result.mismatches += 1
        result.first_failure = {"circuit": -1, "reason": "vacua differ"}
        return result
    for i in range(circuits):
        rng = np.random.default_rng([seed, i])
        ops = random_circuit(geom.n_spins, d, depth, rng)
        n_meas, failure = run_circuit(dense0.copy(), tab0.copy(), ops, rng)
        result.measurements += n_meas
        if failure:
            result.mismatches += 1
            if result.first_failure is None:
                result.first_failure = {"circuit": i, "reason": failure}
    return result
