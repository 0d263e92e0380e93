"""Stochastic spin faults, a greedy anyon decoder and logical error estimates.

Every spin independently suffers a clock fault ``Z^k`` with probability
``p_z`` (creating charges) and a shift fault ``X^k`` with probability ``p_x``
(creating fluxes), with k uniform over the nonzero powers. The decoder pairs
anyons with each other or with open holes of the matching kind, shortest
first, and moves them along BFS paths.

Two execution paths give the same numbers: ``run_trial`` drives a full
tableau simulation, while ``estimate_logical_rate`` only tracks the Pauli
frame of fault times correction. Each trial draws from
``default_rng([seed, trial])``, so results do not depend on batching.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from .lattice import (
    CHARGE, FLUX, PLAQUETTE, VERTEX, CodeState, LatticeGeometry, extract_syndrome, ground_state,
)
from .paulis import PauliOperator
from .protocols import (
    LogicalQudit, encode, measure_logical_x, measure_logical_z, prepare_x_eigenstate, split_hole, x_operator,
    z_operator,
)

UNREACHABLE = 10 ** 6


@dataclass(frozen=True)
class NoiseModel:
    p_x: float = 0.0
    p_z: float = 0.0

    def __post_init__(self):
        for p in (self.p_x, self.p_z):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"fault probability {p} outside [0, 1]")

    def sample(self, n: int, d: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Shift and clock powers per spin. The draw order is fixed so both paths agree."""
        hit_x = rng.random(n) < self.p_x
        k_x = rng.integers(1, d, size=n)
        hit_z = rng.random(n) < self.p_z
        k_z = rng.integers(1, d, size=n)
        return np.where(hit_x, k_x, 0), np.where(hit_z, k_z, 0)


def apply_noise(state: CodeState, model: NoiseModel, rng: np.random.Generator) -> PauliOperator:
    x, z = model.sample(state.geometry.n_spins, state.d, rng)
    fault = PauliOperator(state.d, x, z)
    state.apply(fault)
    return fault


# decoding graph ---------------------------------------------------------

class DecodingGraph:
    """All-pairs BFS distances and unit correction strings for one anyon type.

    ``sinks`` are open holes that absorb anyons; ``blocked`` are spins the
    correction strings may not touch (pinned spins that would detect them).
    """

    def __init__(self, geom: LatticeGeometry, anyon: str, sinks=(), blocked=()):
        self.geometry = geom
        self.anyon = anyon
        self.kind = VERTEX if anyon == CHARGE else PLAQUETTE
        self.sinks = sorted(sinks)
        self.blocked = set(blocked)
        m = geom.n_sites
        self.dist = np.full((m, m), UNREACHABLE, dtype=np.int64)
        self.unit = np.zeros((m, m, geom.n_spins), dtype=np.int64)
        for a in range(m):
            self._bfs(a)
        if self.sinks:
            sd = self.dist[:, self.sinks]
            self.sink_dist = sd.min(axis=1)
            self.sink_of = np.asarray(self.sinks)[sd.argmin(axis=1)]
        else:
            self.sink_dist = np.full(m, UNREACHABLE, dtype=np.int64)
            self.sink_of = np.zeros(m, dtype=np.int64)

    def _bfs(self, a: int) -> None:
        geom = self.geometry
        coef = geom.charge_coefficient if self.anyon == CHARGE else geom.flux_coefficient
        seen = {a}
        queue = deque([a])
        self.dist[a, a] = 0
        while queue:
            u = queue.popleft()
            for w, e in geom.neighbors(self.kind, u):
                if w in seen or e in self.blocked:
                    continue
                seen.add(w)
                self.dist[a, w] = self.dist[a, u] + 1
                self.unit[a, w] = self.unit[a, u]
                self.unit[a, w, e] += coef(w, e)
                queue.append(w)
        self.unit[a] %= geom.d


@lru_cache(maxsize=64)
def decoding_graph(geom: LatticeGeometry, anyon: str, sinks: tuple = (), blocked: tuple = ()) -> DecodingGraph:
    return DecodingGraph(geom, anyon, sinks, blocked)


_NO_PAIR = np.iinfo(np.int64).max // 4


def _pair_keys(vals: np.ndarray, idx: np.ndarray, graph: DecodingGraph) -> np.ndarray:
    """Key ``2*distance + (not cancelling)`` for every (anyon, anyon) and (anyon, sink) option."""
    d = graph.geometry.d
    v = vals[idx]
    m = len(idx)
    key = np.empty((m, m + 1), dtype=np.int64)
    key[:, :m] = 2 * graph.dist[np.ix_(idx, idx)] + ((v[:, None] + v[None, :]) % d != 0)
    np.fill_diagonal(key[:, :m], _NO_PAIR)
    key[:, m] = 2 * graph.sink_dist[idx]
    return key


def _fuse(vals: np.ndarray, a: int, b: int | None, d: int) -> np.ndarray:
    out = vals.copy()
    if b is not None:
        out[b] = (out[b] + out[a]) % d
    out[a] = 0
    return out


def _lookahead(key: np.ndarray, drop_i: np.ndarray, drop_j: np.ndarray) -> np.ndarray:
    """Next cheapest key after each option removes rows drop_i and drop_j (no value changes).

    Two removals can hide at most two partners of a row, so a row's three
    cheapest partners are enough.
    """
    m = key.shape[0]
    short = np.argsort(key[:, :m], axis=1, kind="stable")[:, :3]
    cand = np.take_along_axis(key[:, :m], short, axis=1)
    hidden = (short[None] == drop_i[:, None, None]) | (short[None] == drop_j[:, None, None])
    rows = np.minimum(np.where(hidden, _NO_PAIR, cand[None]).min(axis=2), key[None, :, m])
    gone = np.arange(m)[None] == drop_i[:, None]
    gone |= np.arange(m)[None] == drop_j[:, None]
    rows = np.where(gone, _NO_PAIR, rows)
    out = rows.min(axis=1)
    return np.where(gone.all(axis=1), -1, out)


def greedy_match(values: np.ndarray, graph: DecodingGraph) -> np.ndarray:
    """Correction powers that remove every anyon in ``values`` (one entry per site).

    Repeatedly take the closest (anyon, partner) pair, where a partner is
    another anyon or the nearest sink; at equal distance a cancelling pair
    wins. Remaining ties go to the option after which the next cheapest move
    is cheapest, then to the lowest indices. The anyon is moved onto the
    partner and fused there.
    """
    d = graph.geometry.d
    vals = np.asarray(values, dtype=np.int64) % d
    out = np.zeros(graph.geometry.n_spins, dtype=np.int64)
    live = np.flatnonzero(vals)
    while len(live):
        m = len(live)
        key = _pair_keys(vals, live, graph)
        best = key.min()
        if best >= 2 * UNREACHABLE:
            raise RuntimeError("anyons left that cannot be paired")
        options = np.argwhere(key == best)
        if len(options) == 1:
            i, j = options[0]
        else:
            oi, oj = options[:, 0], options[:, 1]
            v = vals[live]
            sink = oj == m
            pj = np.where(sink, m - 1, oj)
            cancels = sink | ((v[oi] + v[pj]) % d == 0)
            cost = _lookahead(key, oi, np.where(sink, oi, oj))
            for k in np.flatnonzero(~cancels):
                rest = _fuse(vals, live[oi[k]], live[oj[k]], d)
                nxt = np.flatnonzero(rest)
                cost[k] = _pair_keys(rest, nxt, graph).min()
            k = int(np.lexsort((oj, oi, cost))[0])
            i, j = oi[k], oj[k]
        a = live[i]
        b = None if j == m else live[j]
        target = graph.sink_of[a] if b is None else b
        out += vals[a] * graph.unit[a, target]
        vals = _fuse(vals, a, b, d)
        live = np.flatnonzero(vals)
    return out % d


# noise layouts ----------------------------------------------------------

@dataclass
class NoiseLayout:
    """A v-type qudit: two horizontal rows of ``rows`` holes each, ``separation`` apart in y.

    The primary holes are the left ends of the rows; splitting extends each
    row to the right.
    """
    Lx: int
    Ly: int
    d: int
    separation: int
    rows: int = 1
    origin: tuple[int, int] = (1, 1)

    def __post_init__(self):
        if self.separation < 1:
            raise ValueError("hole separation must be >= 1")
        if self.rows < 1:
            raise ValueError("need at least one hole per row")
        if self.Ly < 2 * self.separation + 2 or self.Lx < self.rows + 3:
            raise ValueError("lattice too small for this layout")

    @classmethod
    def default(cls, d: int, separation: int, rows: int = 1) -> "NoiseLayout":
        return cls(max(rows + 5, 6), max(2 * separation + 4, 8), d, separation, rows)

    @property
    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry(self.Lx, self.Ly, self.d)

    def row_sites(self, end: int) -> list[int]:
        geom = self.geometry
        x0, y0 = self.origin
        y = y0 + end * self.separation
        return [geom.site(x0 + k, y) for k in range(self.rows)]

    def qudit(self) -> LogicalQudit:
        r0, r1 = self.row_sites(0), self.row_sites(1)
        return LogicalQudit(VERTEX, ([r0[0]], [r1[0]]), self.d)

    def fixed_spins(self) -> list[int]:
        geom = self.geometry
        out = []
        for end in (0, 1):
            r = self.row_sites(end)
            for a, b in zip(r, r[1:]):
                out.append(geom.adjacent(VERTEX, a, b)[0])
        return out

    def prepare(self, state: CodeState, logical: str = "z") -> LogicalQudit:
        """Open the holes, split the rows and put the qudit in ``|0>`` or ``|0~>``."""
        q = self.qudit()
        if logical == "x":
            prepare_x_eigenstate(state, q)
        else:
            encode(state, q)
        for end in (0, 1):
            for site in self.row_sites(end)[1:]:
                split_hole(state, q, end, site)
        return q


@dataclass
class FrameModel:
    """Precomputed arrays for the Pauli-frame path of one layout."""
    layout: NoiseLayout
    charge_graph: DecodingGraph
    flux_graph: DecodingGraph
    A_x: np.ndarray
    B_z: np.ndarray
    z_readout: np.ndarray      # X-type powers whose overlap with R gives the X error
    x_string_z: np.ndarray     # z powers of the logical X string
    enforced_v: np.ndarray
    enforced_p: np.ndarray
    fixed_z: np.ndarray

    @classmethod
    def build(cls, layout: NoiseLayout) -> "FrameModel":
        geom = layout.geometry
        holes = layout.row_sites(0) + layout.row_sites(1)
        fixed = layout.fixed_spins()
        q = layout.qudit()
        q.rows = (layout.row_sites(0), layout.row_sites(1))
        ev = np.ones(geom.n_sites, dtype=bool)
        ev[holes] = False
        return cls(
            layout,
            decoding_graph(geom, CHARGE, tuple(sorted(holes))),
            decoding_graph(geom, FLUX, (), tuple(sorted(fixed))),
            geom.vertex_x_powers, geom.plaquette_z_powers,
            z_operator(geom, q).x.astype(np.int64),
            x_operator(geom, q).z.astype(np.int64),
            ev, np.ones(geom.n_sites, dtype=bool), np.asarray(fixed, dtype=np.int64),
        )

    def decode(self, xf: np.ndarray, zf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.layout.d
        xr = xf.copy()
        xr[self.fixed_z] = 0          # pinned spins: reset by the inverse shift
        charges = np.where(self.enforced_v, -(self.A_x @ zf), 0) % d
        fluxes = (self.B_z @ xr) % d
        cz = greedy_match(charges, self.charge_graph) if charges.any() else 0
        cx = greedy_match(fluxes, self.flux_graph) if fluxes.any() else 0
        return (xr + cx) % d, (zf + cz) % d

    def logical_errors(self, xR: np.ndarray, zR: np.ndarray) -> tuple[int, int]:
        d = self.layout.d
        x_err = int(-(self.z_readout @ zR)) % d     # c(Z_L, R)
        z_err = int(-(xR @ self.x_string_z)) % d    # c(R, X_L)
        return x_err, z_err


@dataclass
class TrialResult:
    trial: int
    n_faults: int
    x_error: int
    z_error: int


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def decode_state(state: CodeState, q: LogicalQudit) -> tuple[PauliOperator, dict]:
    """Measure the syndrome of a tableau/dense state, apply and return the greedy correction."""
    geom = state.geometry
    syn = extract_syndrome(state)
    n, d = geom.n_spins, state.d
    cx = np.zeros(n, dtype=np.int64)
    for e, t in syn.fixed.items():
        if t:
            if state.fixed_spins[e] == "z":
                cx[e] -= t
            else:
                raise NotImplementedError("charge-side pinned spins are not used by the noise layouts")
    if cx.any():
        state.apply(PauliOperator(d, cx, np.zeros(n, dtype=np.int64)))
        syn = extract_syndrome(state)
    charges = np.zeros(geom.n_sites, dtype=np.int64)
    fluxes = np.zeros(geom.n_sites, dtype=np.int64)
    for s, g in syn.charges.items():
        charges[s] = g
    for s, g in syn.fluxes.items():
        fluxes[s] = g
    pinned = sorted(state.fixed_spins.items())
    zc = greedy_match(charges, decoding_graph(geom, CHARGE, tuple(sorted(state.holes.vertices)),
                                              tuple(e for e, b in pinned if b == "x")))
    xc = greedy_match(fluxes, decoding_graph(geom, FLUX, tuple(sorted(state.holes.plaquettes)),
                                             tuple(e for e, b in pinned if b == "z")))
    corr = PauliOperator(d, xc, zc)
    state.apply(corr)
    return PauliOperator(d, cx, np.zeros(n, dtype=np.int64)) @ corr, {"charges": syn.charges, "fluxes": syn.fluxes}


@lru_cache(maxsize=8)
def _tableau_vacuum(geom: LatticeGeometry) -> CodeState:
    return ground_state(geom, "tableau")


def run_trial(layout: NoiseLayout, model: NoiseModel, seed: int, trial: int, logical: str = "z") -> TrialResult:
    """One full tableau run: prepare, inject faults, decode, read the logical value.

    ``logical='z'`` prepares ``|0>`` and reports the X error (Z readout);
    ``logical='x'`` prepares ``|0~>`` and reports the Z error (X readout).
    """
    state = _tableau_vacuum(layout.geometry).copy()
    state.rng = np.random.default_rng([seed, trial, 1])
    q = layout.prepare(state, logical)
    rng = trial_rng(seed, trial)
    fault = apply_noise(state, model, rng)
    decode_state(state, q)
    if logical == "z":
        x_err, z_err = measure_logical_z(state, q), 0
    else:
        x_err, z_err = 0, measure_logical_x(state, q, single_spin=False)
    return TrialResult(trial, fault.weight, x_err, z_err)


def frame_trial(frame: FrameModel, model: NoiseModel, seed: int, trial: int) -> TrialResult:
    rng = trial_rng(seed, trial)
    geom = frame.layout
    xf, zf = model.sample(geom.Lx * geom.Ly * 2, geom.d, rng)
    xR, zR = frame.decode(xf, zf)
    x_err, z_err = frame.logical_errors(xR, zR)
    return TrialResult(trial, int(np.count_nonzero(xf | zf)), x_err, z_err)


def _frame_chunk(args) -> list[tuple[int, int, int, int]]:
    layout, model, seed, start, stop = args
    frame = FrameModel.build(layout)
    return [tuple(asdict(frame_trial(frame, model, seed, t)).values()) for t in range(start, stop)]


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class RateEstimate:
    p: float
    trials: int
    x_failures: int
    z_failures: int
    x_rate: float
    z_rate: float
    x_interval: tuple[float, float]
    z_interval: tuple[float, float]


def estimate_logical_rate(layout: NoiseLayout, model: NoiseModel, trials: int, seed: int,
                          workers: int = 1, chunk: int = 2000, p_label: float | None = None) -> RateEstimate:
    """Monte Carlo X/Z logical error rates on the Pauli-frame path."""
    if trials < 1:
        raise ValueError("need at least one trial")
    jobs = [(layout, model, seed, a, min(a + chunk, trials)) for a in range(0, trials, chunk)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_frame_chunk, jobs))
    else:
        parts = [_frame_chunk(j) for j in jobs]
    rows = [r for part in parts for r in part]
    kx = sum(1 for r in rows if r[2])
    kz = sum(1 for r in rows if r[3])
    p = p_label if p_label is not None else max(model.p_x, model.p_z)
    return RateEstimate(p, trials, kx, kz, kx / trials, kz / trials,
                        wilson_interval(kx, trials), wilson_interval(kz, trials))


@dataclass
class ScalingReport:
    ps: list[float]
    rates: list[float]
    exponent: float
    intercept: float


def fit_scaling_exponent(ps, rates) -> ScalingReport:
    """Least-squares slope of log(rate) against log(p)."""
    ps = np.asarray(ps, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if np.any(rates <= 0):
        raise ValueError("cannot fit a power law through zero rates")
    slope, icpt = np.polyfit(np.log(ps), np.log(rates), 1)
    return ScalingReport(ps.tolist(), rates.tolist(), float(slope), float(icpt))


# exhaustive searches ----------------------------------------------------

@dataclass
class ExhaustiveReport:
    fault_type: str
    max_weight: int
    checked: int
    failures: list[dict] = field(default_factory=list)

    @property
    def min_failing_weight(self) -> int | None:
        return min((len(f["spins"]) for f in self.failures), default=None)


def enumerate_faults(layout: NoiseLayout, fault_type: str, max_weight: int, stop_at_first: bool = False,
                     spins=None) -> ExhaustiveReport:
    """Decode every fault of weight <= max_weight and list those leaving a logical error.

    ``fault_type`` 'z' (clock faults, checked for X errors) or 'x' (shift
    faults, checked for Z errors). All nonzero power assignments are tried.
    """
    if fault_type not in ("x", "z"):
        raise ValueError("fault_type is 'x' or 'z'")
    frame = FrameModel.build(layout)
    d = layout.d
    n = layout.geometry.n_spins
    spins = range(n) if spins is None else spins
    report = ExhaustiveReport(fault_type, max_weight, 0)
    zero = np.zeros(n, dtype=np.int64)
    for w in range(1, max_weight + 1):
        for support in itertools.combinations(spins, w):
            for ks in itertools.product(range(1, d), repeat=w):
                f = zero.copy()
                f[list(support)] = ks
                xR, zR = frame.decode(f, zero) if fault_type == "x" else frame.decode(zero, f)
                x_err, z_err = frame.logical_errors(xR, zR)
                err = z_err if fault_type == "x" else x_err
                report.checked += 1
                if err:
                    report.failures.append({"spins": list(support), "powers": list(ks), "logical": err})
                    if stop_at_first:
                        return report
    return report


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
