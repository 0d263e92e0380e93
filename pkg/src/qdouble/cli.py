"""Command-line experiment runner.

    qdouble run config.json [--out DIR] [--seed S] [--workers K]

The config is one JSON object; see ``ExperimentConfig`` for the fields.
Every run writes ``results.csv``, ``results.json`` and ``transcript.log``
into the output directory, with no timestamps, so identical inputs give
identical bytes.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import protocols as pr
from .crosscheck import crosscheck
from .dense import MAX_AMPLITUDES, CapacityError, fourier_matrix
from .lattice import LatticeGeometry, ground_state
from .noise import NoiseLayout, NoiseModel, estimate_logical_rate, fit_scaling_exponent, rows_to_csv
from .sixspin import protection_report

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CAPACITY = 3

KINDS = ("protocol-demo", "noise-sweep", "six-spin-report", "engine-crosscheck")
PROTOCOLS = ("fourier-teleport", "braid", "controlled-x", "ancilla", "phase-gate")
NON_CLIFFORD = ("ancilla", "phase-gate")
MIN_EVENTS_FOR_FIT = 20


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    d: int = 3
    Lx: int | None = None
    Ly: int | None = None
    separation: int = 2
    rows: int = 1
    theta: list[float] | None = None
    p_grid: list[float] = field(default_factory=lambda: [0.01])
    channel: str = "z"
    trials: int = 100
    seed: int = 0
    engine: str = "auto"
    protocol: str = "fourier-teleport"
    depth: int = 12
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "kind" not in raw:
            raise ConfigError("config needs a 'kind'")
        try:
            cfg = cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if not isinstance(self.d, int) or self.d < 2:
            raise ConfigError("d must be an integer >= 2")
        if self.engine not in ("dense", "tableau", "auto"):
            raise ConfigError("engine must be dense, tableau or auto")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.channel not in ("x", "z"):
            raise ConfigError("channel is 'x' (shift faults, Z errors) or 'z' (clock faults, X errors)")
        if any(not 0 <= p <= 1 for p in self.p_grid) or not self.p_grid:
            raise ConfigError("p_grid needs probabilities in [0, 1]")
        if self.kind == "protocol-demo":
            if self.protocol not in PROTOCOLS:
                raise ConfigError(f"protocol must be one of {PROTOCOLS}")
            if self.theta is not None and len(self.theta) != self.d:
                raise ConfigError(f"theta needs {self.d} entries")
            if self.protocol in NON_CLIFFORD and self.engine == "tableau":
                raise ConfigError(f"{self.protocol} has non-Clifford steps; use the dense engine")
        if self.kind == "six-spin-report" and self.d != 2:
            raise ConfigError("the six-spin code is a qubit code; set d = 2")

    def resolved_engine(self) -> str:
        if self.engine != "auto":
            return self.engine
        if self.kind == "protocol-demo":
            return "dense"      # fidelity oracle, and required for the non-Clifford protocols
        return "tableau"

    def check_capacity(self) -> None:
        dense = self.kind == "engine-crosscheck" or (
            self.kind == "protocol-demo" and self.resolved_engine() == "dense")
        if dense:
            Lx, Ly = self.Lx or 2, self.Ly or 2
            if self.d ** (2 * Lx * Ly) > MAX_AMPLITUDES:
                raise CapacityError(f"{self.d}^{2 * Lx * Ly} amplitudes exceed the dense cap")
            if self.kind == "protocol-demo" and (Lx, Ly) != (2, 2):
                raise ConfigError("protocol demos use the 2x2 layout")


class Transcript:
    def __init__(self):
        self.lines: list[str] = []

    def __call__(self, line: str) -> None:
        self.lines.append(line)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _random_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def _demo_trial(cfg: ExperimentConfig, trial: int, log: Transcript) -> dict:
    d = cfg.d
    rng = np.random.default_rng([cfg.seed, trial])
    engine = cfg.resolved_engine()
    geom = LatticeGeometry(2, 2, d)
    state = ground_state(geom, engine, rng)
    L = pr.two_by_two_layout(geom)
    dense = engine == "dense"
    row = {"protocol": cfg.protocol, "d": d, "trial": trial, "engine": engine}
    if cfg.protocol == "fourier-teleport":
        src, dst = L["v"], L["p"]
        pr.encode(state, src)
        psi = _random_state(d, rng) if dense else None
        if dense:
            pr.encode_amplitudes(state, [src], psi)
        pr.prepare_x_eigenstate(state, dst)
        tr = pr.fourier_teleport(state, src, dst)
        target = fourier_matrix(d) @ psi if dense else None
        qs = [dst]
    elif cfg.protocol == "braid":
        g, h = int(rng.integers(d)), int(rng.integers(d))
        pr.encode(state, L["v"])
        pr.encode(state, L["data"])
        pr.logical_x(state, L["v"], g)
        pr.logical_x(state, L["data"], h)
        before = pr.logical_amplitudes(state, [L["v"], L["data"]]) if dense else None
        pr.braid_controlled_z(state, L["v"], L["data"])
        tr = pr.ProtocolTranscript("braid", attempts=1, outcomes=[g, h], success=True)
        target = before * np.exp(2j * np.pi * g * h / d) if dense else None
        qs = [L["v"], L["data"]]
    elif cfg.protocol == "controlled-x":
        a, b = int(rng.integers(d)), int(rng.integers(d))
        data, aux = L["data"], L["p"]
        pr.encode(state, data)
        pr.encode(state, aux)
        pr.logical_x(state, data, a)
        pr.logical_x(state, aux, b)
        tr = pr.ProtocolTranscript("controlled_x", outcomes=[a, b])
        land = pr.controlled_x(state, data, aux, pr.GateLayout(L["v"], aux), transcript=tr)
        target = np.zeros((d, d), dtype=complex)
        target[a, (a + b) % d] = 1
        qs = [data, land]
        if not dense:
            got = (pr.measure_logical_z(state, data), pr.measure_logical_z(state, land))
            row["readout_ok"] = got == (a, (a + b) % d)
    else:
        theta = np.asarray(cfg.theta if cfg.theta is not None else rng.uniform(0, 2 * np.pi, d))
        if cfg.protocol == "ancilla":
            tr, land = pr.prepare_ancilla_theta(state, theta, L["rus"].ancilla)
            target = np.exp(1j * theta)
            qs = [land]
        else:
            data = L["data"]
            pr.encode(state, data)
            psi = _random_state(d, rng)
            pr.encode_amplitudes(state, [data], psi)
            tr = pr.phase_gate_rus(state, data, theta, L["rus"])
            target = np.exp(1j * theta) * psi
            qs = [data]
    fid = pr.logical_fidelity(state, qs, target) if dense else None
    tr.fidelity = fid
    row.update({"attempts": tr.attempts, "success": tr.success,
                "outcomes": json.dumps(tr.outcomes), "fidelity": "" if fid is None else f"{fid:.15f}"})
    log(f"trial {trial}: {tr.protocol} attempts={tr.attempts} outcomes={tr.outcomes} "
        f"fidelity={row['fidelity'] or 'n/a'}")
    for c in tr.corrections:
        log(f"  correction {c}")
    return row


def run_protocol_demo(cfg: ExperimentConfig, log: Transcript) -> tuple[list[dict], dict]:
    rows = [_demo_trial(cfg, t, log) for t in range(cfg.trials)]
    fids = [float(r["fidelity"]) for r in rows if r["fidelity"] != ""]
    summary = {"trials": cfg.trials, "min_fidelity": min(fids) if fids else None,
               "all_succeeded": all(r["success"] for r in rows)}
    return rows, summary


def run_noise_sweep(cfg: ExperimentConfig, log: Transcript) -> tuple[list[dict], dict]:
    layout = NoiseLayout.default(cfg.d, cfg.separation, cfg.rows)
    if cfg.Lx or cfg.Ly:
        layout = NoiseLayout(cfg.Lx or layout.Lx, cfg.Ly or layout.Ly, cfg.d, cfg.separation, cfg.rows)
    if cfg.resolved_engine() == "dense":
        raise ConfigError("noise sweeps run on the tableau engine")
    rows, fit_ps, fit_rates = [], [], []
    for p in cfg.p_grid:
        model = NoiseModel(p_x=p, p_z=0.0) if cfg.channel == "x" else NoiseModel(p_x=0.0, p_z=p)
        est = estimate_logical_rate(layout, model, cfg.trials, cfg.seed, cfg.workers, p_label=p)
        rate, events = (est.z_rate, est.z_failures) if cfg.channel == "x" else (est.x_rate, est.x_failures)
        if events >= MIN_EVENTS_FOR_FIT:
            fit_ps.append(p)
            fit_rates.append(rate)
        rows.append({
            "d": cfg.d, "Lx": layout.Lx, "Ly": layout.Ly, "s": cfg.separation, "N": cfg.rows,
            "p_x": model.p_x, "p_z": model.p_z, "trials": cfg.trials,
            "x_rate": f"{est.x_rate:.8g}", "z_rate": f"{est.z_rate:.8g}",
            "x_lo": f"{est.x_interval[0]:.8g}", "x_hi": f"{est.x_interval[1]:.8g}",
            "z_lo": f"{est.z_interval[0]:.8g}", "z_hi": f"{est.z_interval[1]:.8g}",
            "exponent": "",
        })
        log(f"p={p}: x failures {est.x_failures}/{cfg.trials}, z failures {est.z_failures}/{cfg.trials}")
    exponent = None
    if len(fit_ps) >= 3:
        exponent = fit_scaling_exponent(fit_ps, fit_rates).exponent
        for r in rows:
            r["exponent"] = f"{exponent:.6f}"
        log(f"fitted exponent {exponent:.6f} over p={fit_ps}")
    else:
        log(f"no exponent: {len(fit_ps)} points with >= {MIN_EVENTS_FOR_FIT} events")
    return rows, {"layout": asdict(layout), "exponent": exponent}


def run_six_spin(cfg: ExperimentConfig, log: Transcript) -> tuple[list[dict], dict]:
    rows = []
    log(f"{'variant':<8}{'min weight':>12}{'checked':>10}  witnesses")
    for v in ("A", "B", "full"):
        r = protection_report(v)
        rows.append({"variant": v, "min_weight": r.min_weight, "checked": r.checked,
                     "witnesses": len(r.witnesses), "example": r.witnesses[0] if r.witnesses else ""})
        log(f"{v:<8}{str(r.min_weight):>12}{r.checked:>10}  {', '.join(r.witnesses[:4])}")
    return rows, {}


def run_engine_crosscheck(cfg: ExperimentConfig, log: Transcript) -> tuple[list[dict], dict]:
    res = crosscheck(cfg.trials, cfg.seed, cfg.d, cfg.Lx or 2, cfg.Ly or 2, cfg.depth)
    verdict = "agree" if res.agree else "disagree"
    log(f"{res.circuits} circuits, {res.measurements} measurements compared: {verdict}")
    if res.first_failure:
        log(f"first failure: {res.first_failure}")
    return [{"d": cfg.d, "circuits": res.circuits, "measurements": res.measurements,
             "mismatches": res.mismatches, "verdict": verdict}], {"first_failure": res.first_failure}


RUNNERS = {
    "protocol-demo": run_protocol_demo,
    "noise-sweep": run_noise_sweep,
    "six-spin-report": run_six_spin,
    "engine-crosscheck": run_engine_crosscheck,
}


def run(cfg: ExperimentConfig, out: Path) -> int:
    cfg.check_capacity()
    log = Transcript()
    log(f"kind={cfg.kind} d={cfg.d} seed={cfg.seed} engine={cfg.resolved_engine()}")
    rows, summary = RUNNERS[cfg.kind](cfg, log)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(rows_to_csv(rows))
    cfg_dump = asdict(cfg)
    cfg_dump.pop("workers")
    doc = {"config": cfg_dump, "summary": summary, "rows": rows}
    (out / "results.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    (out / "transcript.log").write_text(log.text())
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="qdouble", description="Quantum-double hole-qudit experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=Path("results"))
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--workers", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        raw = json.loads(args.config.read_text())
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.workers is not None:
            raw["workers"] = args.workers
        cfg = ExperimentConfig.from_dict(raw)
        return run(cfg, args.out)
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
