"""Command line entry point: ``kinnet <subcommand> ...``."""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments, halfspace
from .coupling import invariant_coefficient
from .topology import CouplingKind, ScenarioError, load_scenario, uniform_matrix, with_overrides


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _a_value(text: str) -> float:
    if text.strip() in ("1/sqrt(3)", "1/sqrt3"):
        return 1.0 / math.sqrt(3.0)
    return float(text)


def _scenario_args(p: argparse.ArgumentParser, default: str | None = None):
    p.add_argument("--scenario", default=default, required=default is None,
                   help="scenario JSON file or built-in name (tripod, diamond, single_edge)")
    p.add_argument("--model", choices=["kinetic", "halfmoment", "wave"])
    p.add_argument("--epsilon", type=float)
    p.add_argument("--cells", type=int, help="cells per edge")
    p.add_argument("--vcells", type=int, help="velocity cells (kinetic model)")
    p.add_argument("--cfl", type=float)
    p.add_argument("--t-end", type=float)


def _coupling_args(p: argparse.ArgumentParser):
    p.add_argument("--coupling", help="wave node coupling: equal_density, full_moment, maxwell, half_moment")
    p.add_argument("--velocity-model", default="bounded", choices=["bounded", "unbounded"])


def _load(args):
    sc, net = load_scenario(args.scenario)
    return with_overrides(sc, net, model=args.model, epsilon=args.epsilon, cells=args.cells,
                          velocity_cells=args.vcells, cfl=args.cfl, t_end=getattr(args, "t_end", None))


def _coupling(args) -> CouplingKind | None:
    return CouplingKind.parse(args.coupling, args.velocity_model) if args.coupling else None


def cmd_simulate(args) -> int:
    sc, net = _load(args)
    manifest = experiments.RunManifest(sc, net, Path(args.out), args.snapshots or [], _coupling(args))
    res = experiments.simulate(manifest)
    print(f"{sc.model}: {res.steps} steps to t={res.final.t:g}, entropy {experiments.fmt(res.entropy[-1])}, "
          f"output in {args.out}")
    return 0


def cmd_sweep(args) -> int:
    sc, net = _load(args)
    if args.model is None and sc.model == "wave":
        sc, net = with_overrides(sc, net, model="kinetic")
    rows = experiments.sweep_epsilon(sc, net, args.epsilons)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    experiments.write_sweep(out / "sweep_epsilon.csv", rows)
    print("epsilon,distance,rho_distance")
    for r in rows:
        print(",".join(experiments.fmt(x) for x in (r.epsilon, r.distance, r.rho_distance)))
    return 0


def cmd_table(args) -> int:
    sc, net = load_scenario(args.scenario)
    rows = experiments.table_entropy(sc, net, t=args.t_end, wave_cells=args.cells, pde_cells=args.pde_cells,
                                     velocity_cells=args.vcells, epsilon=args.epsilon,
                                     models=args.models.split(","))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    experiments.write_entropy_table(out / "table_entropy.csv", rows)
    print("model,total_entropy,entropy_loss")
    for r in rows:
        print(f"{r.label},{experiments.fmt(r.total_entropy)},{experiments.fmt(r.entropy_loss)}")
    return 0


def cmd_coeff(args) -> int:
    K = invariant_coefficient(CouplingKind.parse(args.variant), args.velocity_model, args.n, args.a)
    print(f"{K:.12g}")
    return 0


def cmd_extrapolation(args) -> int:
    a = args.a if args.a is not None else (1.0 / math.sqrt(3.0) if args.velocity_model == "bounded" else 1.0)
    grid = {}
    if args.method == "numeric":
        grid = dict(length=args.length, nx=args.nx, nv=args.nv)
    lam = halfspace.extrapolation_length(args.method, args.velocity_model, a, **grid)
    print("method,velocity_model,a,lambda")
    print(f"{args.method},{args.velocity_model},{experiments.fmt(a)},{experiments.fmt(lam)}")
    return 0


def cmd_fixpoint(args) -> int:
    a = args.a
    r1 = np.array(args.r1 if args.r1 else experiments.tripod_r1(a))
    C = uniform_matrix(r1.size)
    fp = halfspace.albedo_fixpoint_node(C, r1, a, length=args.length, nx=args.nx, nv=args.nv, tol=args.tol)
    K = "" if fp.fitted_K is None else experiments.fmt(fp.fitted_K)
    print("edge,rho_inf,q_inf,fitted_K")
    for i, (rho, q) in enumerate(zip(fp.rho_inf, fp.q_inf), start=1):
        print(f"{i},{experiments.fmt(rho)},{experiments.fmt(q)},{K}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kinnet", description="Kinetic, half-moment and wave models on networks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write snapshot and entropy CSVs")
    _scenario_args(p)
    _coupling_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--snapshots", type=_floats, help="t1,t2,...")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-epsilon", help="L1 distance to the wave reference for several epsilon")
    _scenario_args(p, "tripod")
    p.add_argument("--epsilons", type=_floats, default=[0.1, 0.01, 0.001])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table-entropy", help="tripod entropy and entropy loss per model")
    p.add_argument("--scenario", default="tripod")
    p.add_argument("--out", required=True)
    p.add_argument("--t-end", type=float, default=0.1)
    p.add_argument("--cells", type=int, default=3000, help="cells per edge for the wave runs")
    p.add_argument("--pde-cells", type=int, default=1000, help="cells per edge for the kinetic and half-moment runs")
    p.add_argument("--vcells", type=int)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--models", default=",".join(experiments.WAVE_TABLE + ("halfmoment", "kinetic")))
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("coupling-coeff", help="invariant coefficient K of a uniform node")
    p.add_argument("--variant", required=True,
                   choices=["equal_density", "full_moment", "maxwell", "half_moment", "equal", "full", "half"])
    p.add_argument("--velocity-model", default="bounded", choices=["bounded", "unbounded"])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--a", type=_a_value, default=1.0 / math.sqrt(3.0))
    p.set_defaults(func=cmd_coeff)

    p = sub.add_parser("extrapolation", help="extrapolation length of a layer approximation")
    p.add_argument("--method", required=True, choices=["maxwell", "halfmoment", "numeric"])
    p.add_argument("--velocity-model", default="bounded", choices=["bounded", "unbounded"])
    p.add_argument("--a", type=_a_value)
    p.add_argument("--length", type=float, default=20.0)
    p.add_argument("--nx", type=int, default=2000)
    p.add_argument("--nv", type=int, default=400)
    p.set_defaults(func=cmd_extrapolation)

    p = sub.add_parser("halfspace-fixpoint", help="coupled kinetic half-space problems at a uniform node")
    p.add_argument("--r1", type=_floats, help="ingoing invariants per edge (default: tripod data)")
    p.add_argument("--a", type=_a_value, default=1.0 / math.sqrt(3.0))
    p.add_argument("--length", type=float, default=20.0)
    p.add_argument("--nx", type=int, default=400)
    p.add_argument("--nv", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_fixpoint)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, FileNotFoundError, OSError, RuntimeError) as exc:
        print(f"kinnet {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
