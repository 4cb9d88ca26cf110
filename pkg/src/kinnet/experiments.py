"""Scenario runs and the reproduction tables behind the command line tool."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import diagnostics
from .halfmoment import HalfMomentSolver
from .kinetic import KineticSolver
from .solver import NetworkSolver, RunResult
from .topology import Condition, CouplingKind, Network, Scenario, with_overrides
from .wave import WaveSolver

FLOAT_FMT = "{:.8e}"  # 9 significant digits
TRIPOD_ENTROPY_T0 = 13.0 / 18.0  # 0.722222...
REFERENCE_COUPLING = CouplingKind(Condition.HALF_MOMENT)


def fmt(x: float) -> str:
    return FLOAT_FMT.format(float(x))


@dataclass
class RunManifest:
    scenario: Scenario
    network: Network
    out_dir: Path | None = None
    snapshots: list[float] = field(default_factory=list)
    coupling: CouplingKind | None = None

    def __post_init__(self):
        bad = [t for t in self.snapshots if t < 0 or t > self.scenario.t_end * (1 + 1e-12)]
        if bad:
            raise ValueError(f"snapshot times {bad} lie outside [0, t_end={self.scenario.t_end}]")


def make_solver(scenario: Scenario, network: Network, coupling: CouplingKind | None = None) -> NetworkSolver:
    if scenario.model == "wave":
        return WaveSolver(scenario, network, coupling)
    if coupling is not None and coupling.condition is not Condition.KINETIC:
        raise ValueError(f"the {scenario.model} model couples nodes kinetically; --coupling applies to the wave model")
    if scenario.model == "kinetic":
        return KineticSolver(scenario, network)
    return HalfMomentSolver(scenario, network)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, float) else x for x in row])


def write_snapshot(path: Path, fields: dict[int, dict]):
    names = [k for k in next(iter(fields.values())) if k != "x"]
    rows = []
    for eid, cols in fields.items():
        for i, x in enumerate(cols["x"]):
            rows.append([eid, float(x)] + [float(cols[k][i]) for k in names])
    _write_csv(path, ["edge", "x"] + names, rows)


def write_entropy(path: Path, res: RunResult):
    _write_csv(path, ["t", "total_entropy", "total_mass"],
               ([float(t), float(e), float(m)] for t, e, m in zip(res.times, res.entropy, res.mass)))


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:.6g}.csv"


def simulate(manifest: RunManifest) -> RunResult:
    """Run the scenario; with an output directory write one CSV per snapshot plus ``entropy.csv``."""
    solver = make_solver(manifest.scenario, manifest.network, manifest.coupling)
    res = solver.run(snapshots=manifest.snapshots)
    if manifest.out_dir is not None:
        out = Path(manifest.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for s in res.snapshots:
            write_snapshot(out / snapshot_name(s.t), s.fields)
        if not any(s.t == res.final.t for s in res.snapshots):
            write_snapshot(out / snapshot_name(res.final.t), res.final.fields)
        write_entropy(out / "entropy.csv", res)
    return res


def _macro(snapshot) -> dict:
    return {eid: (c["rho"], c["q"]) for eid, c in snapshot.fields.items()}


@dataclass
class SweepRow:
    epsilon: float
    distance: float
    rho_distance: float


def sweep_epsilon(scenario: Scenario, network: Network, epsilons: Sequence[float],
                  reference: CouplingKind = REFERENCE_COUPLING) -> list[SweepRow]:
    """L1 distance at t_end between the kinetic or half-moment model and the wave reference."""
    if scenario.model not in ("kinetic", "halfmoment"):
        raise ValueError("sweep-epsilon needs the kinetic or halfmoment model")
    ref_sc, ref_net = with_overrides(scenario, network, model="wave")
    ref = _macro(WaveSolver(ref_sc, ref_net, reference).run().final)
    dx = {eid: e.dx for eid, e in network.edges.items()}
    rows = []
    for eps in epsilons:
        sc, net = with_overrides(scenario, network, epsilon=float(eps))
        got = _macro(make_solver(sc, net).run().final)
        rows.append(SweepRow(float(eps), diagnostics.l1_distance(got, ref, dx),
                             diagnostics.l1_distance(got, ref, dx, components="rho")))
    return rows


def write_sweep(path: Path, rows: Sequence[SweepRow]):
    _write_csv(path, ["epsilon", "distance", "rho_distance"], ([r.epsilon, r.distance, r.rho_distance] for r in rows))


@dataclass
class EntropyRow:
    label: str
    total_entropy: float
    entropy_loss: float


WAVE_TABLE = ("equal_density", "full_moment", "maxwell", "half_moment")


def table_entropy(scenario: Scenario, network: Network, t: float = 0.1, wave_cells: int = 3000,
                  pde_cells: int = 1000, velocity_cells: int | None = None, epsilon: float = 1e-6,
                  models: Sequence[str] = WAVE_TABLE + ("halfmoment", "kinetic")) -> list[EntropyRow]:
    """Total entropy at time ``t`` and its loss against the initial entropy."""
    rows = []
    for m in models:
        if m in WAVE_TABLE:
            sc, net = with_overrides(scenario, network, model="wave", cells=wave_cells, t_end=t)
            res = WaveSolver(sc, net, CouplingKind.parse(m)).run()
            label = f"wave {m}"
        elif m in ("halfmoment", "kinetic"):
            sc, net = with_overrides(scenario, network, model=m, cells=pde_cells, t_end=t, epsilon=epsilon,
                                     velocity_cells=velocity_cells)
            res = make_solver(sc, net).run()
            label = m
        else:
            raise ValueError(f"unknown table entry {m!r}")
        rows.append(EntropyRow(label, res.entropy[-1], res.entropy[-1] - res.entropy[0]))
    return rows


def write_entropy_table(path: Path, rows: Sequence[EntropyRow]):
    _write_csv(path, ["model", "total_entropy", "entropy_loss"], ([r.label, r.total_entropy, r.entropy_loss]
                                                                  for r in rows))


def tripod_r1(a: float = 1.0 / math.sqrt(3.0)) -> list[float]:
    """Ingoing invariants of the tripod initial data rho = (1, 2/3, 0), q = 0."""
    return [-a, -2.0 * a / 3.0, 0.0]
