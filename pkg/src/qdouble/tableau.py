"""Stabilizer tableau over Z_d for prime d.

Rows are kept as integer power matrices. Stabilizer row j carries its full
phase; destabilizer row j satisfies ``c(D_j, S_j) = 1`` and commutes with
every other stabilizer, so that for any P in the stabilizer group
``P ~ prod_j S_j^{c(D_j, P)}``. Destabilizer phases are never read.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paulis import DimensionError, PauliOperator, commutation_exponent, compose, power


class NonCommutingError(ValueError):
    pass


class InconsistentGeneratorsError(ValueError):
    """A dependent generator carries a phase incompatible with the others."""


@dataclass(frozen=True)
class PauliMeasurementOutcome:
    exponent: int
    was_deterministic: bool


def is_prime(d: int) -> bool:
    return d >= 2 and all(d % q for q in range(2, int(d ** 0.5) + 1))


def _unit_phase(d: int, x: np.ndarray, z: np.ndarray) -> int:
    # Smallest phase numerator giving P^d = I; only odd sum(xz) at d=2 needs one.
    return (int(np.dot(x, z)) % 2) if d == 2 else 0


class Tableau:
    def __init__(self, n: int, d: int, sx, sz, sphase, dx, dz):
        self.n = n
        self.d = d
        self.sx = np.asarray(sx, dtype=np.int64) % d
        self.sz = np.asarray(sz, dtype=np.int64) % d
        self.sphase = np.asarray(sphase, dtype=np.int64) % (2 * d)
        self.dx = np.asarray(dx, dtype=np.int64) % d
        self.dz = np.asarray(dz, dtype=np.int64) % d
        self.rank_deficiency = 0
        self.completion_rows: list[int] = []

    # construction -------------------------------------------------------

    @classmethod
    def from_generators(cls, gens: list[PauliOperator]) -> "Tableau":
        """Canonical tableau for the state stabilized by ``gens``.

        A rank-deficient list is completed with extra commuting generators
        (recorded in ``completion_rows``) so the tableau always describes a
        pure state; ``rank_deficiency`` reports how many were added.
        """
        if not gens:
            raise ValueError("need at least one generator; the maximally mixed state is not representable")
        n, d = gens[0].n, gens[0].d
        if not is_prime(d):
            raise ValueError(f"tableau engine needs prime d, got {d}")
        for g in gens:
            if g.n != n or g.d != d:
                raise DimensionError("generators disagree on register shape")
            if not g.has_unit_order():
                raise ValueError(f"generator {g} has no eigenvalue 1")
        for i, a in enumerate(gens):
            for b in gens[i + 1:]:
                if commutation_exponent(a, b):
                    raise NonCommutingError(f"{a} and {b} do not commute")

        def symp(u, v):
            return (int(np.dot(u[n:], v[:n])) - int(np.dot(u[:n], v[n:]))) % d

        pool = [np.eye(2 * n, dtype=np.int64)[k] for k in range(2 * n)]
        stabs: list[PauliOperator] = []
        destabs: list[np.ndarray] = []
        pending = list(gens)

        def project(u_vec, w_vec, S_op=None):
            # Make pool vectors and pending generators orthogonal to the pair (u, w), <w, u> = 1.
            for idx, v in enumerate(pool):
                a, b = symp(v, w_vec), symp(v, u_vec)
                if a or b:
                    pool[idx] = (v + a * u_vec - b * w_vec) % d
            if S_op is not None:
                for idx, g in enumerate(pending):
                    gv = np.concatenate([g.x, g.z])
                    t = symp(gv, w_vec)
                    if t:
                        pending[idx] = compose(g, power(S_op, t))

        while pending:
            S = pending.pop(0)
            sv = np.concatenate([S.x, S.z])
            if not sv.any():
                if S.phase:
                    raise InconsistentGeneratorsError("generators imply a nontrivial scalar stabilizer")
                continue
            j = next(j for j, v in enumerate(pool) if symp(v, sv))
            w = pool.pop(j)
            w = (w * pow(symp(w, sv), -1, d)) % d
            stabs.append(S)
            destabs.append(w)
            project(sv, w, S)

        deficiency = n - len(stabs)
        completion = []
        while len(stabs) < n:
            u = next(v for v in pool if v.any())
            pool = [v for v in pool if v is not u]
            j = next(j for j, v in enumerate(pool) if symp(v, u))
            w = pool.pop(j)
            w = (w * pow(symp(w, u), -1, d)) % d
            completion.append(len(stabs))
            stabs.append(PauliOperator(d, u[:n], u[n:], _unit_phase(d, u[:n], u[n:])))
            destabs.append(w)
            project(u, w)

        D = np.array(destabs)
        t = cls(n, d,
                np.array([s.x for s in stabs]), np.array([s.z for s in stabs]),
                np.array([s.phase for s in stabs]), D[:, :n], D[:, n:])
        t.rank_deficiency = deficiency
        t.completion_rows = completion
        return t

    def copy(self) -> "Tableau":
        t = Tableau(self.n, self.d, self.sx, self.sz, self.sphase, self.dx, self.dz)
        t.rank_deficiency = self.rank_deficiency
        t.completion_rows = list(self.completion_rows)
        return t

    def stabilizers(self) -> list[PauliOperator]:
        return [PauliOperator(self.d, x, z, p) for x, z, p in zip(self.sx, self.sz, self.sphase)]

    def destabilizers(self) -> list[PauliOperator]:
        return [PauliOperator(self.d, x, z) for x, z in zip(self.dx, self.dz)]

    # vectorized row algebra --------------------------------------------

    def _symp_rows(self, X, Z, P: PauliOperator) -> np.ndarray:
        """c(row, P) for every row."""
        return (Z @ P.x - X @ P.z) % self.d

    def _check(self, P: PauliOperator) -> None:
        if P.n != self.n or P.d != self.d:
            raise DimensionError("Pauli does not match the tableau")

    def _times_power(self, X, Z, ph, R: PauliOperator, e: np.ndarray) -> None:
        """In place: row_j <- row_j @ R^{e_j}."""
        d = self.d
        e = np.asarray(e, dtype=np.int64) % (2 * d)
        Rx, Rz = R.x, R.z
        rphase = e * R.phase + int(np.dot(Rz, Rx)) * e * (e - 1)
        if ph is not None:
            ph += rphase + 2 * e * (Z @ Rx)
            ph %= 2 * d
        X += np.outer(e, Rx)
        Z += np.outer(e, Rz)
        X %= d
        Z %= d

    # gates --------------------------------------------------------------

    def apply_pauli(self, Q: PauliOperator) -> "Tableau":
        self._check(Q)
        # Q S Q^dag = w^{c(Q,S)} S
        c = (Q.z @ self.sx.T - Q.x @ self.sz.T) % self.d
        self.sphase = (self.sphase + 2 * c) % (2 * self.d)
        return self

    def apply_fourier(self, site: int, inverse: bool = False) -> "Tableau":
        if not 0 <= site < self.n:
            raise IndexError(f"site {site} out of range for n={self.n}")
        d = self.d
        for X, Z, ph in ((self.sx, self.sz, self.sphase), (self.dx, self.dz, None)):
            a = X[:, site].copy()
            b = Z[:, site].copy()
            if inverse:
                X[:, site], Z[:, site] = b, (-a) % d
            else:
                X[:, site], Z[:, site] = (-b) % d, a
            if ph is not None:
                ph -= 2 * a * b
                ph %= 2 * d
        return self

    def apply_controlled_phase(self, M1: PauliOperator, M2: PauliOperator, k: int = 1) -> "Tableau":
        """Conjugate by ``sum_j Pi_j(M1) M2^{kj}`` (see paulis.controlled_phase_conjugate)."""
        self._check(M1)
        self._check(M2)
        if commutation_exponent(M1, M2):
            raise ValueError("controlled phase needs commuting observables")
        M2k = power(M2, k)
        d = self.d
        for X, Z, ph in ((self.sx, self.sz, self.sphase), (self.dx, self.dz, None)):
            a = (-self._symp_rows(X, Z, M1)) % d    # c(M1, row)
            b = (-self._symp_rows(X, Z, M2k)) % d   # c(M2^k, row)
            if ph is not None:
                ph += 2 * a * b
            self._times_power(X, Z, ph, M1, b)
            self._times_power(X, Z, ph, M2k, a)
        return self

    def apply_controlled_z_power(self, control: int, target: int, k: int = 1) -> "Tableau":
        if control == target:
            raise ValueError("controlled-Z needs two distinct sites")
        Zc = PauliOperator.single(self.n, self.d, control, z=1)
        Zt = PauliOperator.single(self.n, self.d, target, z=1)
        return self.apply_controlled_phase(Zc, Zt, k)

    def apply_clifford(self, gate: str, sites, power_: int = 1) -> "Tableau":
        """Dispatch ``X``, ``Z`` (with power), ``F``, ``Fdag`` on one site or ``CZ`` on two."""
        sites = [sites] if np.isscalar(sites) else list(sites)
        for s in sites:
            if not 0 <= s < self.n:
                raise IndexError(f"site {s} out of range for n={self.n}")
        if gate == "X":
            return self.apply_pauli(PauliOperator.single(self.n, self.d, sites[0], x=power_))
        if gate == "Z":
            return self.apply_pauli(PauliOperator.single(self.n, self.d, sites[0], z=power_))
        if gate in ("F", "Fdag"):
            return self.apply_fourier(sites[0], inverse=gate == "Fdag")
        if gate == "CZ":
            return self.apply_controlled_z_power(sites[0], sites[1], power_)
        raise ValueError(f"unknown gate {gate!r}")

    # measurement --------------------------------------------------------

    def in_group(self, P: PauliOperator) -> bool:
        self._check(P)
        return not self._symp_rows(self.sx, self.sz, P).any()

    def group_element(self, P: PauliOperator) -> PauliOperator:
        """The stabilizer-group element with P's powers, carrying the group's phase."""
        a = self._symp_rows(self.dx, self.dz, P)   # c(D_j, P)
        Q = PauliOperator.identity(self.n, self.d)
        for j in np.flatnonzero(a):
            Q = compose(Q, power(PauliOperator(self.d, self.sx[j], self.sz[j], self.sphase[j]), int(a[j])))
        if not Q.same_up_to_phase(P):
            raise RuntimeError("tableau lost its destabilizer pairing")
        return Q

    def peek(self, P: PauliOperator) -> int | None:
        """Deterministic outcome of measuring P, or None if it would be random."""
        if not P.has_unit_order():
            raise ValueError(f"observable {P} does not have eigenvalues in powers of w")
        if not self.in_group(P):
            return None
        diff = (P.phase - self.group_element(P).phase) % (2 * self.d)
        if diff % 2:
            raise RuntimeError("phase bookkeeping produced a non-root-of-unity eigenvalue")
        return diff // 2

    def measure_pauli(self, P: PauliOperator, rng: np.random.Generator | None = None,
                      outcome: int | None = None) -> PauliMeasurementOutcome:
        """Measure observable P; exponent k means eigenvalue ``w^k``.

        A forced ``outcome`` is honoured only for random measurements and must
        agree with the deterministic value otherwise.
        """
        det = self.peek(P)
        if det is not None:
            if outcome is not None and int(outcome) % self.d != det:
                raise ValueError(f"forced outcome {outcome} contradicts deterministic {det}")
            return PauliMeasurementOutcome(det, True)
        d = self.d
        c = self._symp_rows(self.sx, self.sz, P)
        p = int(np.flatnonzero(c)[0])
        inv = pow(int(c[p]), -1, d)
        Sp = PauliOperator(d, self.sx[p].copy(), self.sz[p].copy(), int(self.sphase[p]))

        t = (-c * inv) % d
        t[p] = 0
        self._times_power(self.sx, self.sz, self.sphase, Sp, t)
        e = self._symp_rows(self.dx, self.dz, P)
        t = (-e * inv) % d
        t[p] = 0
        self._times_power(self.dx, self.dz, None, Sp, t)

        Dp = power(Sp, inv)
        self.dx[p], self.dz[p] = Dp.x, Dp.z
        if outcome is None:
            if rng is None:
                raise ValueError("need an rng or a forced outcome")
            k = int(rng.integers(d))
        else:
            k = int(outcome) % d
        self.sx[p], self.sz[p] = P.x, P.z
        self.sphase[p] = (P.phase - 2 * k) % (2 * d)
        return PauliMeasurementOutcome(k, False)

    def validate(self) -> None:
        """Raise if the commutation structure has been corrupted."""
        d = self.d
        SS = (self.sz @ self.sx.T - self.sx @ self.sz.T) % d
        DS = (self.dz @ self.sx.T - self.dx @ self.sz.T) % d
        if SS.any():
            raise AssertionError("stabilizers no longer commute")
        if not np.array_equal(DS, np.eye(self.n, dtype=np.int64)):
            raise AssertionError("destabilizer pairing broken")
