"""Command-line interface: solve-acopf, solve-boxqp, batch, export-sdpa."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import acopf, boxqp, model, profiles
from .driver import SolveConfig, serialize_events, solve
from .problems import GenericProblem
from .relax import export_sdpa


def _add_common(sp: argparse.ArgumentParser, gap: float, relax: str) -> None:
    sp.add_argument("--relax", choices=["sdp", "sdp+rlt", "sdp+cvi"], default=relax)
    sp.add_argument("--rule", choices=["mvsb", "mvwb", "rbeb"], default="mvwb")
    sp.add_argument("--gap", type=float, default=gap,
                    help="relative optimality gap limit")
    sp.add_argument("--nodes", type=int, default=10000, help="explored node limit")
    sp.add_argument("--time", type=float, default=5400.0, help="time limit (s)")
    sp.add_argument("--depth", type=int, default=100, help="search depth limit")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out", type=Path, default=None, help="write full report JSON")
    sp.add_argument("--events", type=Path, default=None,
                    help="write newline-delimited JSON event log")


def _config(args) -> SolveConfig:
    return SolveConfig(relax=args.relax, rule=args.rule, gap_limit=args.gap,
                       node_limit=args.nodes, time_limit=args.time,
                       depth_limit=args.depth, seed=args.seed,
                       threads=args.threads)


def _load_problem(kind: str, path: Path, decompose: bool = True):
    text = Path(path).read_text()
    if kind == "acopf":
        return acopf.build_lacopf(acopf.parse_matpower(text), decompose=decompose)
    if kind == "boxqp":
        return GenericProblem(boxqp.boxqp_to_model(boxqp.parse_boxqp(text)),
                              decompose=decompose)
    if kind == "json":
        return GenericProblem(model.load_json(text), decompose=decompose)
    raise ValueError(f"unknown instance type {kind!r}")


def _kind_from_path(path: Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".m":
        return "acopf"
    if suffix == ".json":
        return "json"
    return "boxqp"


def _finish(args, problem, report) -> int:
    if report["incumbent"] is not None and isinstance(problem, GenericProblem):
        from .numerics import ComplexVector

        inc = report["incumbent"]
        x = problem.original_point(ComplexVector(inc["x_re"], inc["x_im"]))
        inc["x_re"], inc["x_im"] = x.re.tolist(), x.im.tolist()
    summary = {k: report[k] for k in ("status", "glb", "gub", "gap", "nodes",
                                      "depth", "lbtime", "ubtime", "time")}
    print(json.dumps(summary, sort_keys=True))
    if args.events:
        args.events.write_text(serialize_events(report["events"]))
    if args.out:
        args.out.write_text(json.dumps(
            {k: v for k, v in report.items() if k != "events"},
            indent=1, sort_keys=True))
    return 0 if report["status"] == "optimal" else 1


def _cmd_solve_acopf(args) -> int:
    problem = _load_problem("acopf", args.case)
    report = solve(problem, _config(args))
    return _finish(args, problem, report)


def _cmd_solve_boxqp(args) -> int:
    problem = _load_problem("boxqp", args.file)
    report = solve(problem, _config(args))
    return _finish(args, problem, report)


def _cmd_batch(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    base = Path(args.manifest).parent
    problem_factories = []
    for inst in manifest["instances"]:
        path = base / inst["path"]
        name = inst.get("name", Path(inst["path"]).stem)
        kind = inst.get("type", _kind_from_path(path))
        problem_factories.append(
            (name, lambda kind=kind, path=path: _load_problem(kind, path)))
    configs = []
    for c in manifest["configs"]:
        cfg = SolveConfig(relax=c.get("relax", "sdp+cvi"),
                          rule=c.get("rule", "mvwb"),
                          gap_limit=c.get("gap", 1e-3),
                          node_limit=c.get("nodes", 10000),
                          time_limit=c.get("time", 5400.0),
                          depth_limit=c.get("depth", 100))
        configs.append((c.get("name", f"{cfg.relax}/{cfg.rule}"), cfg))
    report = profiles.run_batch(problem_factories, configs)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}-report.json").write_text(report.to_json())
    Path(f"{prefix}-profiles.csv").write_text(report.profiles_csv())
    print(json.dumps(report.aggregates, indent=1, sort_keys=True))
    return 0


def _cmd_export_sdpa(args) -> int:
    kind = args.type or _kind_from_path(args.instance)
    problem = _load_problem(kind, args.instance)
    eb = problem.initial_bounds()
    tightened = problem.tighten(eb, None)
    if tightened == "infeasible":
        print("instance root is infeasible", file=sys.stderr)
        return 1
    cuts = problem.cuts_for(tightened, args.relax)
    cp = problem.build_relaxation(tightened, cuts)
    text = export_sdpa(cp)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cqsbc",
        description="Spatial branch-and-cut for nonconvex QCQP with bounded "
                    "complex variables")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve-acopf", help="solve a MATPOWER case")
    sp.add_argument("case", type=Path)
    _add_common(sp, gap=1e-3, relax="sdp+cvi")
    sp.set_defaults(func=_cmd_solve_acopf)

    sp = sub.add_parser("solve-boxqp", help="solve a spar-format BoxQP file")
    sp.add_argument("file", type=Path)
    _add_common(sp, gap=1e-4, relax="sdp+rlt")
    sp.set_defaults(func=_cmd_solve_boxqp)

    sp = sub.add_parser("batch", help="run a manifest of instances x configs")
    sp.add_argument("manifest", type=Path)
    sp.add_argument("--out-prefix", default="batch", help="output file prefix")
    sp.set_defaults(func=_cmd_batch)

    sp = sub.add_parser("export-sdpa", help="export a root relaxation as .dat-s")
    sp.add_argument("instance", type=Path)
    sp.add_argument("--type", choices=["acopf", "boxqp", "json"], default=None)
    sp.add_argument("--relax", choices=["sdp", "sdp+rlt", "sdp+cvi"],
                    default="sdp+cvi")
    sp.add_argument("--out", type=Path, default=None)
    sp.set_defaults(func=_cmd_export_sdpa)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
