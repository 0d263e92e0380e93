"""Dense state-vector simulation of n qudits.

Amplitudes are indexed by the base-d number whose most significant digit
is site 0. This engine is exact and small; it is the reference every other
path in the package is checked against.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .paulis import DimensionError, PauliOperator

MAX_AMPLITUDES = 2 ** 24
NORM_TOL = 1e-12
MIN_BRANCH_PROBABILITY = 1e-14
ACTION_CACHE_LIMIT = 2 ** 16      # registers up to this size keep per-Pauli index maps


class CapacityError(RuntimeError):
    """The requested register does not fit in the dense engine."""


@dataclass(frozen=True)
class MeasurementRecord:
    site: int | None
    basis_label: str
    outcome: int
    probability: float


def fourier_matrix(d: int, inverse: bool = False) -> np.ndarray:
    g = np.arange(d)
    F = np.exp(2j * np.pi * np.outer(g, g) / d) / np.sqrt(d)   # F[h, g] = w^{gh}/sqrt(d)
    return F.conj().T if inverse else F


_ACTIONS: dict = {}


@lru_cache(maxsize=16)
def _digits(n: int, d: int) -> np.ndarray:
    """Base-d digits of every basis index, site 0 most significant; shape (d^n, n)."""
    idx = np.arange(d ** n)
    return (idx[:, None] // d ** np.arange(n - 1, -1, -1)[None, :]) % d


@lru_cache(maxsize=16)
def _projector_weights(d: int) -> np.ndarray:
    g = np.arange(d)
    return np.exp(-2j * np.pi * np.outer(g, g) / d) / d


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    p = np.where(probs < MIN_BRANCH_PROBABILITY, 0.0, probs)
    c = np.cumsum(p)
    k = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    return min(k, len(p) - 1)


class StateVector:
    def __init__(self, n: int, d: int, amplitudes=None):
        if d ** n > MAX_AMPLITUDES:
            raise CapacityError(f"d^n = {d}^{n} exceeds the dense cap of {MAX_AMPLITUDES} amplitudes")
        self.n = n
        self.d = d
        if amplitudes is None:
            amplitudes = np.zeros(d ** n, dtype=complex)
            amplitudes[0] = 1.0
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.size != d ** n:
            raise DimensionError(f"expected {d ** n} amplitudes, got {amps.size}")
        self.tensor = amps.reshape((d,) * n).copy()
        self._omega = np.exp(2j * np.pi * np.arange(d) / d)

    @classmethod
    def basis_state(cls, d: int, digits) -> "StateVector":
        digits = [int(g) % d for g in digits]
        s = cls(len(digits), d)
        s.tensor[...] = 0
        s.tensor[tuple(digits)] = 1.0
        return s

    @property
    def amplitudes(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.d, self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _check_site(self, site: int) -> None:
        if not 0 <= site < self.n:
            raise IndexError(f"site {site} out of range for n={self.n}")

    def _axis_vector(self, site: int, values: np.ndarray) -> np.ndarray:
        shape = [1] * self.n
        shape[site] = self.d
        return values.reshape(shape)

    # unitaries ----------------------------------------------------------

    def _action(self, P: PauliOperator) -> tuple[np.ndarray, np.ndarray] | None:
        """(source index, phase) with ``(P psi)[h] = phase[h] * psi[src[h]]``, for small registers."""
        size = self.d ** self.n
        if size > ACTION_CACHE_LIMIT:
            return None
        key = (self.n, self.d, P.x.tobytes(), P.z.tobytes(), P.phase)
        hit = _ACTIONS.get(key)
        if hit is None:
            digits = _digits(self.n, self.d)
            src_digits = (digits - P.x) % self.d
            src = src_digits @ (self.d ** np.arange(self.n - 1, -1, -1))
            expo = (src_digits @ P.z) % self.d
            phase = self._omega[expo] * np.exp(1j * np.pi * P.phase / self.d)
            if len(_ACTIONS) > 4096:
                _ACTIONS.clear()
            hit = _ACTIONS[key] = (src, phase)
        return hit

    def apply_pauli(self, P: PauliOperator) -> "StateVector":
        if P.n != self.n or P.d != self.d:
            raise DimensionError("Pauli does not match the register")
        act = self._action(P)
        if act is not None:
            src, phase = act
            self.tensor = (phase * self.amplitudes[src]).reshape(self.tensor.shape)
            return self
        t = self.tensor
        g = np.arange(self.d)
        for site in np.flatnonzero(P.z):
            t = t * self._axis_vector(site, self._omega[(P.z[site] * g) % self.d])
        for site in np.flatnonzero(P.x):
            t = np.roll(t, int(P.x[site]), axis=site)
        if P.phase:
            t = t * np.exp(1j * np.pi * P.phase / self.d)
        self.tensor = np.ascontiguousarray(t)
        return self

    def apply_unitary(self, site: int, U: np.ndarray) -> "StateVector":
        self._check_site(site)
        t = np.tensordot(U, self.tensor, axes=([1], [site]))
        self.tensor = np.ascontiguousarray(np.moveaxis(t, 0, site))
        return self

    def apply_fourier(self, site: int, inverse: bool = False) -> "StateVector":
        return self.apply_unitary(site, fourier_matrix(self.d, inverse))

    def apply_controlled_z_power(self, control: int, target: int, k: int = 1) -> "StateVector":
        self._check_site(control)
        self._check_site(target)
        if control == target:
            raise ValueError("controlled-Z needs two distinct sites")
        g = np.arange(self.d)
        expo = (k * np.outer(g, g)) % self.d
        shape = [1] * self.n
        shape[control] = self.d
        shape[target] = self.d
        phases = self._omega[expo]
        if control > target:
            phases = phases.T
        self.tensor = self.tensor * phases.reshape(shape)
        return self

    def _diagonal_exponents(self, M: PauliOperator) -> np.ndarray:
        """Eigenvalue exponent of every basis state under a diagonal M."""
        key = ("diag", self.n, self.d, M.z.tobytes(), M.phase)
        hit = _ACTIONS.get(key)
        if hit is not None:
            return hit
        d = self.d
        expo = np.full(self.tensor.shape, (M.phase // 2) % d, dtype=np.int64)
        g = np.arange(d)
        for site in np.flatnonzero(M.z):
            expo = expo + self._axis_vector(site, (M.z[site] * g) % d)
        expo = (expo % d).reshape(-1)
        if self.d ** self.n <= ACTION_CACHE_LIMIT:
            if len(_ACTIONS) > 4096:
                _ACTIONS.clear()
            _ACTIONS[key] = expo
        return expo

    def eigen_components(self, M: PauliOperator) -> np.ndarray:
        """Rows ``Pi_j(M)|psi>`` for j in Z_d, with ``Pi_j = (1/d) sum_a w^{-ja} M^a``."""
        if not M.has_unit_order():
            raise ValueError(f"observable {M} does not have eigenvalues in powers of w")
        d = self.d
        if not M.x.any():
            # diagonal: sort amplitudes by their eigenvalue exponent directly
            expo = self._diagonal_exponents(M)
            comps = np.zeros((d, expo.size), dtype=complex)
            comps[expo, np.arange(expo.size)] = self.amplitudes
            return comps
        powers = np.empty((d, self.amplitudes.size), dtype=complex)
        powers[0] = self.amplitudes
        act = self._action(M)
        if act is not None:
            src, phase = act
            for a in range(1, d):
                powers[a] = phase * powers[a - 1][src]
        else:
            s = self.copy()
            for a in range(1, d):
                s.apply_pauli(M)
                powers[a] = s.amplitudes
        # comps[j] = (1/d) sum_a w^{-ja} powers[a]
        return _projector_weights(d) @ powers

    def apply_controlled_phase(self, M1: PauliOperator, M2: PauliOperator, k: int = 1) -> "StateVector":
        """Apply ``sum_j Pi_j(M1) M2^{kj}`` for commuting unit-order M1, M2."""
        comps = self.eigen_components(M1)
        out = np.zeros_like(self.amplitudes)
        step = M2 ** k
        op = PauliOperator.identity(self.n, self.d)
        for j in range(self.d):
            part = StateVector(self.n, self.d, comps[j])
            out += part.apply_pauli(op).amplitudes
            op = op @ step
        self.tensor = out.reshape(self.tensor.shape)
        return self

    # measurement --------------------------------------------------------

    def measure_pauli(self, M: PauliOperator, rng: np.random.Generator | None = None,
                      outcome: int | None = None) -> MeasurementRecord:
        """Projective measurement of observable M; outcome j means eigenvalue ``w^j``.

        Passing ``outcome`` post-selects that branch instead of sampling.
        """
        if not M.x.any() and M.has_unit_order():
            amps = self.amplitudes
            expo = self._diagonal_exponents(M)
            probs = np.bincount(expo, weights=amps.real ** 2 + amps.imag ** 2, minlength=self.d)
            k = self._choose(probs, rng, outcome)
            kept = np.where(expo == k, amps, 0) / np.sqrt(probs[k])
            self.tensor = kept.reshape(self.tensor.shape)
            return MeasurementRecord(None, "pauli", k, float(probs[k]))
        comps = self.eigen_components(M)
        probs = (comps.real ** 2 + comps.imag ** 2).sum(axis=1)
        k = self._choose(probs, rng, outcome)
        self.tensor = (comps[k] / np.sqrt(probs[k])).reshape(self.tensor.shape)
        return MeasurementRecord(None, "pauli", k, float(probs[k]))

    def pauli_distribution(self, M: PauliOperator) -> np.ndarray:
        comps = self.eigen_components(M)
        return (comps.real ** 2 + comps.imag ** 2).sum(axis=1)

    def measure_in_basis(self, site: int, basis, rng: np.random.Generator | None = None,
                         outcome: int | None = None, label: str = "custom") -> MeasurementRecord:
        """Measure one site in the orthonormal basis whose k-th element is ``basis[k]``."""
        self._check_site(site)
        B = np.asarray(basis, dtype=complex)
        if B.shape != (self.d, self.d) or not np.allclose(B @ B.conj().T, np.eye(self.d), atol=1e-10):
            raise ValueError("measurement basis must be d orthonormal vectors")
        comps = np.tensordot(B.conj(), self.tensor, axes=([1], [site]))   # comps[k] = <b_k|_site psi
        probs = np.array([np.vdot(c, c).real for c in comps])
        k = self._choose(probs, rng, outcome)
        collapsed = np.multiply.outer(B[k], comps[k] / np.sqrt(probs[k]))
        self.tensor = np.ascontiguousarray(np.moveaxis(collapsed, 0, site))
        return MeasurementRecord(site, label, k, float(probs[k]))

    def _choose(self, probs, rng, outcome) -> int:
        if outcome is not None:
            k = int(outcome) % self.d
            if probs[k] < MIN_BRANCH_PROBABILITY:
                raise ValueError(f"branch {k} has probability {probs[k]:.3g}")
            return k
        if rng is None:
            raise ValueError("need an rng or a forced outcome")
        return _sample(probs, rng)

    # inner products -----------------------------------------------------

    def overlap(self, other: "StateVector") -> complex:
        if (other.n, other.d) != (self.n, self.d):
            raise DimensionError("overlap of states on different registers")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2

    def expectation(self, P: PauliOperator) -> complex:
        return self.overlap(self.copy().apply_pauli(P))

    # debugging dump -----------------------------------------------------

    def to_json(self) -> str:
        flat = np.column_stack([self.amplitudes.real, self.amplitudes.imag]).reshape(-1)
        return json.dumps({"n": self.n, "d": self.d, "amplitudes": flat.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        obj = json.loads(text)
        flat = np.asarray(obj["amplitudes"], dtype=float).reshape(-1, 2)
        return cls(obj["n"], obj["d"], flat[:, 0] + 1j * flat[:, 1])
