"""Periodic square lattice for the D(Z_d) code: geometry, stabilizers, strings, holes.

Coordinates have y pointing up. Vertex (x, y) and plaquette (x, y) share id
``y*Lx + x``; plaquette (x, y) has vertex (x, y) as its lower-left corner.
Horizontal edge h(x, y) joins (x, y)-(x+1, y) and has id ``y*Lx + x``;
vertical edge v(x, y) joins (x, y)-(x, y+1) and has id ``Lx*Ly + y*Lx + x``.

Spin roles 1..4 run clockwise from the top: for a vertex (N, E, S, W), for a
plaquette (top, right, bottom, left). With these,
``A(v) = X1^dag X2^dag X3 X4`` and ``B(p) = Z1^dag Z2 Z3 Z4^dag``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .dense import StateVector
from .paulis import PauliOperator
from .tableau import Tableau

VERTEX = "v"
PLAQUETTE = "p"
CHARGE = "charge"
FLUX = "flux"

_A_POWERS = (-1, -1, 1, 1)
_B_POWERS = (-1, 1, 1, -1)


class PathError(ValueError):
    pass


class HoleError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeGeometry:
    Lx: int
    Ly: int
    d: int

    def __post_init__(self):
        if self.Lx < 2 or self.Ly < 2:
            raise ValueError("periodic lattice needs Lx, Ly >= 2")
        if self.d < 2:
            raise ValueError("d must be >= 2")

    @property
    def n_spins(self) -> int:
        return 2 * self.Lx * self.Ly

    @property
    def n_sites(self) -> int:
        return self.Lx * self.Ly

    def site(self, x: int, y: int) -> int:
        return (y % self.Ly) * self.Lx + (x % self.Lx)

    def coords(self, s: int) -> tuple[int, int]:
        return s % self.Lx, s // self.Lx

    def h_edge(self, x: int, y: int) -> int:
        return self.site(x, y)

    def v_edge(self, x: int, y: int) -> int:
        return self.n_sites + self.site(x, y)

    @cached_property
    def vertex_spins(self) -> np.ndarray:
        """(n_sites, 4) edges of each vertex in role order N, E, S, W."""
        out = np.empty((self.n_sites, 4), dtype=np.int64)
        for s in range(self.n_sites):
            x, y = self.coords(s)
            out[s] = (self.v_edge(x, y), self.h_edge(x, y), self.v_edge(x, y - 1), self.h_edge(x - 1, y))
        return out

    @cached_property
    def plaquette_spins(self) -> np.ndarray:
        """(n_sites, 4) edges of each plaquette in role order top, right, bottom, left."""
        out = np.empty((self.n_sites, 4), dtype=np.int64)
        for s in range(self.n_sites):
            x, y = self.coords(s)
            out[s] = (self.h_edge(x, y + 1), self.v_edge(x + 1, y), self.h_edge(x, y), self.v_edge(x, y))
        return out

    @cached_property
    def vertex_neighbors(self) -> list[list[tuple[int, int]]]:
        """Per vertex, ``(neighbor, edge)`` in role order N, E, S, W."""
        out = []
        for s in range(self.n_sites):
            x, y = self.coords(s)
            nbrs = (self.site(x, y + 1), self.site(x + 1, y), self.site(x, y - 1), self.site(x - 1, y))
            out.append(list(zip(nbrs, (int(e) for e in self.vertex_spins[s]))))
        return out

    @cached_property
    def plaquette_neighbors(self) -> list[list[tuple[int, int]]]:
        """Per plaquette, ``(neighbor, edge crossed)`` in role order top, right, bottom, left."""
        out = []
        for s in range(self.n_sites):
            x, y = self.coords(s)
            nbrs = (self.site(x, y + 1), self.site(x + 1, y), self.site(x, y - 1), self.site(x - 1, y))
            out.append(list(zip(nbrs, (int(e) for e in self.plaquette_spins[s]))))
        return out

    @cached_property
    def vertex_x_powers(self) -> np.ndarray:
        """Row v holds the X powers of A(v)."""
        M = np.zeros((self.n_sites, self.n_spins), dtype=np.int64)
        for s, edges in enumerate(self.vertex_spins):
            for e, a in zip(edges, _A_POWERS):
                M[s, e] += a
        return M % self.d

    @cached_property
    def plaquette_z_powers(self) -> np.ndarray:
        """Row p holds the Z powers of B(p)."""
        M = np.zeros((self.n_sites, self.n_spins), dtype=np.int64)
        for s, edges in enumerate(self.plaquette_spins):
            for e, b in zip(edges, _B_POWERS):
                M[s, e] += b
        return M % self.d

    def neighbors(self, kind: str, s: int) -> list[tuple[int, int]]:
        return self.vertex_neighbors[s] if kind == VERTEX else self.plaquette_neighbors[s]

    def adjacent(self, kind: str, a: int, b: int) -> list[int]:
        """Edges joining sites a and b (two of them on a 2-wide torus)."""
        return [e for w, e in self.neighbors(kind, a) if w == b]

    def vertex_role(self, v: int, e: int) -> int:
        return int(np.flatnonzero(self.vertex_spins[v] == e)[0]) + 1

    def plaquette_role(self, p: int, e: int) -> int:
        return int(np.flatnonzero(self.plaquette_spins[p] == e)[0]) + 1

    def charge_coefficient(self, v: int, e: int) -> int:
        """Charge created at v by Z on e: +1 for roles 1, 2 and -1 for roles 3, 4."""
        return 1 if self.vertex_role(v, e) <= 2 else -1

    def flux_coefficient(self, p: int, e: int) -> int:
        """Flux created at p by X on e: +1 for roles 2, 3 and -1 for roles 1, 4."""
        return 1 if self.plaquette_role(p, e) in (2, 3) else -1

    def spin_ends(self, kind: str, e: int) -> tuple[int, int]:
        """Sites across spin e, first the one where e has role 1/2 (vertex) or 2/3 (plaquette)."""
        horizontal = e < self.n_sites
        x, y = self.coords(e % self.n_sites)
        if kind == VERTEX:
            return (self.site(x, y), self.site(x + 1, y)) if horizontal else (self.site(x, y), self.site(x, y + 1))
        return (self.site(x, y), self.site(x, y - 1)) if horizontal else (self.site(x - 1, y), self.site(x, y))

    def distance(self, a: int, b: int) -> int:
        (ax, ay), (bx, by) = self.coords(a), self.coords(b)
        dx, dy = abs(ax - bx) % self.Lx, abs(ay - by) % self.Ly
        return min(dx, self.Lx - dx) + min(dy, self.Ly - dy)

    def to_dict(self) -> dict:
        return {"Lx": self.Lx, "Ly": self.Ly, "d": self.d}


def vertex_stabilizer(geom: LatticeGeometry, v: int) -> PauliOperator:
    if not 0 <= v < geom.n_sites:
        raise IndexError(f"vertex {v} out of range")
    return PauliOperator(geom.d, geom.vertex_x_powers[v], np.zeros(geom.n_spins, dtype=np.int64))


def plaquette_stabilizer(geom: LatticeGeometry, p: int) -> PauliOperator:
    if not 0 <= p < geom.n_sites:
        raise IndexError(f"plaquette {p} out of range")
    return PauliOperator(geom.d, np.zeros(geom.n_spins, dtype=np.int64), geom.plaquette_z_powers[p])


def string_operator(geom: LatticeGeometry, kind: str, path, g: int, edges=None) -> PauliOperator:
    """String moving an anyon of value g from ``path[0]`` to ``path[-1]``.

    Applied to the vacuum it creates ``e_g`` (``m_g`` for ``kind='flux'``) at the
    last site and the antiparticle at the first. Consecutive sites must be
    adjacent; ``edges`` picks the edge per step where two sites share several.
    """
    site_kind = VERTEX if kind == CHARGE else PLAQUETTE
    powers = np.zeros(geom.n_spins, dtype=np.int64)
    path = list(path)
    for step, (a, b) in enumerate(zip(path, path[1:])):
        choices = geom.adjacent(site_kind, a, b)
        if not choices:
            raise PathError(f"sites {a} and {b} are not adjacent")
        e = edges[step] if edges is not None else choices[0]
        if e not in choices:
            raise PathError(f"edge {e} does not join {a} and {b}")
        if kind == CHARGE:
            powers[e] += g * geom.charge_coefficient(b, e)
        else:
            powers[e] += g * geom.flux_coefficient(b, e)
    zero = np.zeros(geom.n_spins, dtype=np.int64)
    if kind == CHARGE:
        return PauliOperator(geom.d, zero, powers)
    return PauliOperator(geom.d, powers, zero)


def shortest_path(geom: LatticeGeometry, a: int, b: int) -> list[int]:
    """Taxicab path on the torus, x leg first."""
    (ax, ay), (bx, by) = geom.coords(a), geom.coords(b)
    dx = (bx - ax) % geom.Lx
    sx = 1 if dx <= geom.Lx - dx else -1
    dy = (by - ay) % geom.Ly
    sy = 1 if dy <= geom.Ly - dy else -1
    path = [a]
    x, y = ax, ay
    while x % geom.Lx != bx:
        x += sx
        path.append(geom.site(x, y))
    while y % geom.Ly != by:
        y += sy
        path.append(geom.site(x, y))
    return path


def torus_loops(geom: LatticeGeometry) -> list[PauliOperator]:
    """The two non-contractible charge loops (Z strings along a row and a column)."""
    row = [geom.site(x, 0) for x in range(geom.Lx)] + [geom.site(0, 0)]
    col = [geom.site(0, y) for y in range(geom.Ly)] + [geom.site(0, 0)]
    row_edges = [geom.h_edge(x, 0) for x in range(geom.Lx)]
    col_edges = [geom.v_edge(0, y) for y in range(geom.Ly)]
    return [string_operator(geom, CHARGE, row, 1, row_edges),
            string_operator(geom, CHARGE, col, 1, col_edges)]


@dataclass
class HoleSet:
    vertices: set[int] = field(default_factory=set)
    plaquettes: set[int] = field(default_factory=set)

    def of(self, kind: str) -> set[int]:
        return self.vertices if kind == VERTEX else self.plaquettes

    def to_dict(self) -> dict:
        return {"vertices": sorted(self.vertices), "plaquettes": sorted(self.plaquettes)}


@dataclass
class Syndrome:
    charges: dict[int, int]
    fluxes: dict[int, int]
    fixed: dict[int, int] = field(default_factory=dict)

    def anyons(self, kind: str) -> dict[int, int]:
        src = self.charges if kind == VERTEX else self.fluxes
        return {s: g for s, g in src.items() if g}

    def is_trivial(self) -> bool:
        return not any(self.charges.values()) and not any(self.fluxes.values()) and not any(self.fixed.values())


class CodeState:
    """Lattice geometry, hole set and an engine-backed quantum state.

    ``fixed_spins`` maps a spin to ``'z'`` or ``'x'`` when a hole split has
    pinned it to Z=1 or X=1; those single-spin checks join the syndrome.
    """

    def __init__(self, geometry: LatticeGeometry, backend, rng: np.random.Generator | None = None):
        self.geometry = geometry
        self.backend = backend
        self.holes = HoleSet()
        self.fixed_spins: dict[int, str] = {}
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.reference: StateVector | None = None
        self.log: list[str] = []

    @property
    def engine(self) -> str:
        return "dense" if isinstance(self.backend, StateVector) else "tableau"

    @property
    def d(self) -> int:
        return self.geometry.d

    def copy(self) -> "CodeState":
        other = CodeState(self.geometry, self.backend.copy(), np.random.default_rng(self.rng.bit_generator.random_raw()))
        other.holes = HoleSet(set(self.holes.vertices), set(self.holes.plaquettes))
        other.fixed_spins = dict(self.fixed_spins)
        other.reference = self.reference
        return other

    # engine-neutral primitives -----------------------------------------

    def apply(self, P: PauliOperator) -> "CodeState":
        self.backend.apply_pauli(P)
        return self

    def measure(self, P: PauliOperator, outcome: int | None = None) -> tuple[int, float | None]:
        """Measure observable P; returns (exponent, probability or None on the tableau)."""
        rec = self.backend.measure_pauli(P, self.rng, outcome)
        if self.engine == "dense":
            return rec.outcome, rec.probability
        return rec.exponent, (1.0 if rec.was_deterministic else 1.0 / self.d)

    def controlled_phase(self, M1: PauliOperator, M2: PauliOperator, k: int = 1) -> "CodeState":
        self.backend.apply_controlled_phase(M1, M2, k)
        return self

    def stabilizer(self, kind: str, s: int) -> PauliOperator:
        if kind == VERTEX:
            return vertex_stabilizer(self.geometry, s)
        return plaquette_stabilizer(self.geometry, s)

    def fixed_check(self, e: int) -> PauliOperator:
        n, d = self.geometry.n_spins, self.d
        if self.fixed_spins[e] == "z":
            return PauliOperator.single(n, d, e, z=1)
        return PauliOperator.single(n, d, e, x=1)

    def enforced_checks(self) -> list[tuple[str, int, PauliOperator]]:
        out = []
        for kind in (VERTEX, PLAQUETTE):
            for s in range(self.geometry.n_sites):
                if s not in self.holes.of(kind):
                    out.append((kind, s, self.stabilizer(kind, s)))
        for e in sorted(self.fixed_spins):
            out.append(("spin", e, self.fixed_check(e)))
        return out

    def describe(self) -> dict:
        return {**self.geometry.to_dict(), "holes": self.holes.to_dict(),
                "fixed_spins": {str(k): v for k, v in sorted(self.fixed_spins.items())}}

    def to_json(self) -> str:
        return json.dumps(self.describe(), sort_keys=True)


def ground_state(geom: LatticeGeometry, engine: str = "dense", rng: np.random.Generator | None = None) -> CodeState:
    """Anyon vacuum with both torus charge loops fixed to eigenvalue 1.

    Dense: start from |0...0> (every B(p) and Z loop already 1), measure each
    A(v) and drag any charge found to the last vertex, where it cancels.
    Tableau: the vacuum's generators directly.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    if engine == "dense":
        sv = StateVector(geom.n_spins, geom.d)
        ref = geom.n_sites - 1
        for v in range(ref):
            rec = sv.measure_pauli(vertex_stabilizer(geom, v), rng)
            if rec.outcome:
                sv.apply_pauli(string_operator(geom, CHARGE, shortest_path(geom, v, ref), rec.outcome))
        state = CodeState(geom, sv, rng)
        state.reference = sv.copy()
    elif engine == "tableau":
        gens = [vertex_stabilizer(geom, v) for v in range(geom.n_sites)]
        gens += [plaquette_stabilizer(geom, p) for p in range(geom.n_sites)]
        gens += torus_loops(geom)
        state = CodeState(geom, Tableau.from_generators(gens), rng)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return state


def open_hole(state: CodeState, kind: str, site: int) -> CodeState:
    holes = state.holes.of(kind)
    if site in holes:
        raise HoleError(f"{kind}{site} is already open")
    holes.add(site)
    return state


def close_hole(state: CodeState, kind: str, site: int) -> int:
    """Measure the stabilizer of an open hole, re-enforce it, return the absorbed anyon value."""
    holes = state.holes.of(kind)
    if site not in holes:
        raise HoleError(f"{kind}{site} is not open")
    k, _ = state.measure(state.stabilizer(kind, site))
    holes.discard(site)
    return k


def extract_syndrome(state: CodeState) -> Syndrome:
    charges, fluxes, fixed = {}, {}, {}
    for kind, s, P in state.enforced_checks():
        k, _ = state.measure(P)
        {VERTEX: charges, PLAQUETTE: fluxes, "spin": fixed}[kind][s] = k
    return Syndrome(charges, fluxes, fixed)
