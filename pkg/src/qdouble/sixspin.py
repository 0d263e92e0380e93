"""A six-spin qubit stabilizer code with optional "holes".

Generators on spins 1..6 (sites 0..5 here):

    S1 = Z1 Z2, S2 = Z2 Z3, S3 = Z4 Z5, S4 = Z5 Z6,
    S5 = X1 X2 X3 X4 X5 X6, S6 = Z1 Z3 Z4 Z6.

Leaving two of them unenforced stores a qubit the same way holes do on the
lattice. Variant A drops S1 and S2 (Z = S1, X = X2); variant B drops S2 and
S3 (Z = S2, X = X3 X4).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dense import StateVector
from .paulis import PauliOperator, commutation_exponent
from .tableau import Tableau

N_SPINS = 6
_Z_SUPPORTS = {1: (0, 1), 2: (1, 2), 3: (3, 4), 4: (4, 5), 6: (0, 2, 3, 5)}

VARIANTS = {
    "A": {"dropped": (1, 2), "z": 1, "x": (1,)},
    "B": {"dropped": (2, 3), "z": 2, "x": (2, 3)},
    "full": {"dropped": (), "z": None, "x": None},
}


def generator(k: int) -> PauliOperator:
    """S_k, 1-based as in the usual listing."""
    if k == 5:
        return PauliOperator(2, np.ones(N_SPINS), np.zeros(N_SPINS))
    if k not in _Z_SUPPORTS:
        raise ValueError(f"no generator S{k}")
    z = np.zeros(N_SPINS, dtype=np.int64)
    z[list(_Z_SUPPORTS[k])] = 1
    return PauliOperator(2, np.zeros(N_SPINS), z)


def rank_mod_p(ops: list[PauliOperator]) -> int:
    """Rank of the (x|z) vectors over Z_d, d prime."""
    if not ops:
        return 0
    d = ops[0].d
    M = np.array([np.concatenate([P.x, P.z]) for P in ops], dtype=np.int64) % d
    rank = 0
    for col in range(M.shape[1]):
        piv = next((r for r in range(rank, len(M)) if M[r, col]), None)
        if piv is None:
            continue
        M[[rank, piv]] = M[[piv, rank]]
        M[rank] = (M[rank] * pow(int(M[rank, col]), -1, d)) % d
        for r in range(len(M)):
            if r != rank and M[r, col]:
                M[r] = (M[r] - M[r, col] * M[rank]) % d
        rank += 1
    return rank


@dataclass
class SixSpinCode:
    variant: str = "full"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {sorted(VARIANTS)}")

    @property
    def generators(self) -> list[PauliOperator]:
        return [generator(k) for k in range(1, 7)]

    @property
    def enforced(self) -> list[PauliOperator]:
        dropped = VARIANTS[self.variant]["dropped"]
        return [generator(k) for k in range(1, 7) if k not in dropped]

    def logical_z(self) -> PauliOperator | None:
        k = VARIANTS[self.variant]["z"]
        return None if k is None else generator(k)

    def logical_x(self) -> PauliOperator | None:
        sites = VARIANTS[self.variant]["x"]
        if sites is None:
            return None
        return PauliOperator.from_sparse(N_SPINS, 2, {s: (1, 0) for s in sites})

    def in_stabilizer_group(self, P: PauliOperator) -> bool:
        """Whether P's powers lie in the span of the enforced generators (phase ignored)."""
        base = rank_mod_p(self.enforced)
        return rank_mod_p(self.enforced + [P]) == base

    def is_undetectable_logical(self, P: PauliOperator) -> bool:
        """Commutes with every enforced generator but is not itself a stabilizer."""
        if any(commutation_exponent(S, P) for S in self.enforced):
            return False
        return not self.in_stabilizer_group(P)


@dataclass
class EncodedSixSpin:
    code: SixSpinCode
    backend: object
    z_logical: PauliOperator | None
    x_logical: PauliOperator | None


def encode_variant(variant: str, engine: str = "tableau", logical: int = 0) -> EncodedSixSpin:
    """Logical ``|0>`` (or ``|1>``) of the chosen variant on either engine.

    The state is fixed by the enforced generators, the logical Z and, where
    that leaves freedom, extra commuting generators picked by the tableau.
    """
    code = SixSpinCode(variant)
    zl, xl = code.logical_z(), code.logical_x()
    gens = list(code.enforced) + ([zl] if zl is not None else [])
    tab = Tableau.from_generators(gens)
    if logical:
        if xl is None:
            raise ValueError("the fully enforced code has no hole qubit to flip")
        tab.apply_pauli(xl)
    if engine == "tableau":
        return EncodedSixSpin(code, tab, zl, xl)
    if engine != "dense":
        raise ValueError(f"unknown engine {engine!r}")
    sv = StateVector(N_SPINS, 2)
    rng = np.random.default_rng(0)
    for S in tab.stabilizers():
        k = sv.measure_pauli(S, rng).outcome
        if k:
            # flip the outcome with a Pauli that anticommutes with this row only
            j = next(r for r, T in enumerate(tab.stabilizers()) if T == S)
            D = PauliOperator(2, tab.dx[j], tab.dz[j])
            sv.apply_pauli(D)
    return EncodedSixSpin(code, sv, zl, xl)


@dataclass
class ProtectionReport:
    variant: str
    min_weight: int | None
    witnesses: list[str] = field(default_factory=list)
    checked: int = 0


def protection_report(variant: str, max_weight: int = 2) -> ProtectionReport:
    """Smallest weight of a Pauli that no enforced check sees but that acts as a logical."""
    code = SixSpinCode(variant)
    report = ProtectionReport(variant, None)
    singles = [(1, 0), (0, 1), (1, 1)]
    for w in range(1, max_weight + 1):
        for sites in itertools.combinations(range(N_SPINS), w):
            for powers in itertools.product(singles, repeat=w):
                P = PauliOperator.from_sparse(N_SPINS, 2, dict(zip(sites, powers)))
                report.checked += 1
                if code.is_undetectable_logical(P):
                    report.witnesses.append(_label(P))
        if report.witnesses:
            report.min_weight = w
            return report
    return report


def _label(P: PauliOperator) -> str:
    names = {(1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
    return " ".join(f"{names[(int(P.x[s]), int(P.z[s]))]}{s + 1}" for s in P.support)
