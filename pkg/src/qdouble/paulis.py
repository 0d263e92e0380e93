"""Generalized Pauli (Weyl) operators on n qudits of dimension d.

An operator is stored as ``exp(i*pi*phase/d) * prod_j X_j^{x_j} Z_j^{z_j}``
with the X factor to the left of the Z factor on every site. ``X`` is the
shift ``|g> -> |g+1>`` and ``Z`` the clock ``|g> -> w^g |g>`` with
``w = exp(2*pi*i/d)``, so ``Z X = w X Z``.

Phases are kept modulo 2d rather than d so that signs such as
``(XZ)^2 = -I`` at d=2 stay exact. A phase numerator ``2k`` is ``w^k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np


class DimensionError(ValueError):
    """Operands disagree on site count or local dimension."""


def _frozen(a, d: int) -> np.ndarray:
    arr = np.mod(np.asarray(a, dtype=np.int64), d)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PauliOperator:
    d: int
    x: np.ndarray
    z: np.ndarray
    phase: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"local dimension must be >= 2, got {self.d}")
        x = _frozen(self.x, self.d)
        z = _frozen(self.z, self.d)
        if x.ndim != 1 or x.shape != z.shape:
            raise DimensionError("x and z power vectors must be 1-d and equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(self.phase) % (2 * self.d))

    # construction -------------------------------------------------------

    @classmethod
    def identity(cls, n: int, d: int) -> "PauliOperator":
        return cls(d, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    @classmethod
    def single(cls, n: int, d: int, site: int, x: int = 0, z: int = 0) -> "PauliOperator":
        return cls.from_sparse(n, d, {site: (x, z)})

    @classmethod
    def from_sparse(cls, n: int, d: int, powers: Mapping[int, tuple[int, int]],
                    phase: int = 0) -> "PauliOperator":
        """Build from ``{site: (x_power, z_power)}``."""
        x = np.zeros(n, dtype=np.int64)
        z = np.zeros(n, dtype=np.int64)
        for site, (a, b) in powers.items():
            if not 0 <= site < n:
                raise IndexError(f"site {site} out of range for n={n}")
            x[site] += a
            z[site] += b
        return cls(d, x, z, phase)

    @classmethod
    def omega(cls, n: int, d: int, k: int = 1) -> "PauliOperator":
        """Scalar ``w^k`` times the identity."""
        return cls(d, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64), 2 * k)

    # basic properties ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero((self.x != 0) | (self.z != 0))

    @property
    def weight(self) -> int:
        return int(len(self.support))

    def is_identity(self, ignore_phase: bool = False) -> bool:
        trivial = not self.x.any() and not self.z.any()
        return trivial and (ignore_phase or self.phase == 0)

    def same_up_to_phase(self, other: "PauliOperator") -> bool:
        return (self.d == other.d and np.array_equal(self.x, other.x)
                and np.array_equal(self.z, other.z))

    def with_phase(self, phase: int) -> "PauliOperator":
        return PauliOperator(self.d, self.x, self.z, phase)

    def has_unit_order(self) -> bool:
        """True when P^d = I, i.e. the eigenvalues are powers of w."""
        d = self.d
        return (self.phase * d + int(np.dot(self.z, self.x)) * d * (d - 1)) % (2 * d) == 0

    def __eq__(self, other):
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return self.same_up_to_phase(other) and self.phase == other.phase

    def __hash__(self):
        return hash((self.d, self.x.tobytes(), self.z.tobytes(), self.phase))

    def __matmul__(self, other: "PauliOperator") -> "PauliOperator":
        return compose(self, other)

    def __pow__(self, k: int) -> "PauliOperator":
        return power(self, k)

    def dagger(self) -> "PauliOperator":
        return power(self, -1)

    def matrix(self) -> np.ndarray:
        """Dense d^n x d^n matrix, site 0 as the most significant factor."""
        d = self.d
        X = np.roll(np.eye(d), 1, axis=0)
        Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
        out = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.x, self.z):
            local = np.linalg.matrix_power(X, int(a)) @ np.linalg.matrix_power(Z, int(b))
            out = np.kron(out, local)
        return np.exp(1j * np.pi * self.phase / d) * out

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"PauliOperator(d={self.d}, n={self.n}, '{render(self)}')"


def _check_pair(P: PauliOperator, Q: PauliOperator) -> None:
    if P.d != Q.d or P.n != Q.n:
        raise DimensionError(f"mismatched operands: (n={P.n}, d={P.d}) vs (n={Q.n}, d={Q.d})")


def compose(P: PauliOperator, Q: PauliOperator) -> PauliOperator:
    """Normal-ordered product ``P @ Q``.

    Moving ``Z^a`` of P past ``X^b`` of Q on each site contributes ``w^{ab}``.
    """
    _check_pair(P, Q)
    reorder = 2 * int(np.dot(P.z, Q.x))
    return PauliOperator(P.d, P.x + Q.x, P.z + Q.z, P.phase + Q.phase + reorder)


def commutation_exponent(P: PauliOperator, Q: PauliOperator) -> int:
    """c with ``P Q = w^c Q P``."""
    _check_pair(P, Q)
    return int(np.dot(P.z, Q.x) - np.dot(P.x, Q.z)) % P.d


def power(P: PauliOperator, k: int) -> PauliOperator:
    # P^d is +-I, so P^(2d) = I and negative powers reduce mod 2d.
    k = int(k) % (2 * P.d)
    reorder = int(np.dot(P.z, P.x)) * k * (k - 1)
    return PauliOperator(P.d, P.x * k, P.z * k, P.phase * k + reorder)


def fourier_conjugate(P: PauliOperator, site: int, inverse: bool = False) -> PauliOperator:
    """Return ``F P F^dag`` (or ``F^dag P F`` when ``inverse``) for F on ``site``.

    With ``F = sum_g |g~><g|`` one has ``F X F^dag = Z`` and
    ``F Z F^dag = X^dag``; on a single site ``X^a Z^b`` maps to
    ``w^{-ab} X^{-b} Z^a`` (inverse: ``w^{-ab} X^b Z^{-a}``).
    """
    if not 0 <= site < P.n:
        raise IndexError(f"site {site} out of range for n={P.n}")
    a, b = int(P.x[site]), int(P.z[site])
    x = P.x.copy()
    z = P.z.copy()
    if inverse:
        x[site], z[site] = b, -a
    else:
        x[site], z[site] = -b, a
    return PauliOperator(P.d, x, z, P.phase - 2 * a * b)


def controlled_phase_conjugate(P: PauliOperator, M1: PauliOperator, M2: PauliOperator) -> PauliOperator:
    """Conjugate P by ``U = sum_j Pi_j(M1) M2^j``.

    ``Pi_j(M1)`` projects onto the ``w^j`` eigenspace of M1; M1 and M2 must
    commute and have unit order. With ``a = c(M1, P)`` and ``b = c(M2, P)``,
    ``U P U^dag = w^{ab} P M1^b M2^a``.
    """
    if commutation_exponent(M1, M2) != 0:
        raise ValueError("controlled phase needs commuting observables")
    a = commutation_exponent(M1, P)
    b = commutation_exponent(M2, P)
    if a == 0 and b == 0:
        return P
    out = compose(compose(P, power(M1, b)), power(M2, a))
    return PauliOperator(P.d, out.x, out.z, out.phase + 2 * a * b)


def controlled_z_conjugate(P: PauliOperator, control: int, target: int, k: int = 1) -> PauliOperator:
    """Conjugate P by ``sum_{a,b} w^{kab} |a><a| (x) |b><b|`` on (control, target)."""
    if control == target:
        raise ValueError("controlled-Z needs two distinct sites")
    Zc = PauliOperator.single(P.n, P.d, control, z=1)
    Zt = PauliOperator.single(P.n, P.d, target, z=k)
    return controlled_phase_conjugate(P, Zc, Zt)


def render(P: PauliOperator) -> str:
    """Text form such as ``w^2 X^1 Z^2 @ site3 . X^1 @ site5``."""
    if P.phase % 2 == 0:
        head = f"w^{P.phase // 2}"
    else:
        head = f"w^{P.phase}/2"
    terms = []
    for j in P.support:
        parts = []
        if P.x[j]:
            parts.append(f"X^{P.x[j]}")
        if P.z[j]:
            parts.append(f"Z^{P.z[j]}")
        terms.append(" ".join(parts) + f" @ site{j}")
    return head + " " + (" . ".join(terms) if terms else "I")
