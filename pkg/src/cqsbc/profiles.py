"""Batch runner and performance-profile data emission.

Profiles follow the ratio-to-best convention: for each instance the best
value of a metric across configurations is the reference; a configuration's
curve value at x is the fraction of instances it solved within 2^x times
the best.  Unsolved instances never enter a configuration's numerator, so
curves are nondecreasing step functions ending at or below 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .driver import SolveConfig, solve


@dataclass
class BatchReport:
    records: list[dict]
    aggregates: dict[str, dict]
    profiles: dict[str, dict[str, list[tuple[float, float]]]]

    def to_json(self) -> str:
        return json.dumps({"records": self.records, "aggregates": self.aggregates,
                           "profiles": self.profiles}, indent=1, sort_keys=True)

    def profiles_csv(self) -> str:
        lines = ["metric,config,log2_ratio,fraction"]
        for metric, curves in sorted(self.profiles.items()):
            for config, points in sorted(curves.items()):
                for x, y in points:
                    lines.append(f"{metric},{config},{x!r},{y!r}")
        return "\n".join(lines) + "\n"


def performance_profile(records: list[dict], metric: str,
                        configs: list[str]) -> dict[str, list[tuple[float, float]]]:
    """Ratio-to-best step curves on a log2 x-axis, one per configuration."""
    instances = sorted({r["instance"] for r in records})
    table: dict[tuple[str, str], float] = {}
    for r in records:
        if r["solved"]:
            table[(r["instance"], r["config"])] = float(r[metric])
    curves: dict[str, list[tuple[float, float]]] = {}
    n_inst = len(instances)
    for cfg in configs:
        ratios = []
        for inst in instances:
            best = min((table.get((inst, c), math.inf) for c in configs),
                       default=math.inf)
            mine = table.get((inst, cfg), math.inf)
            if math.isfinite(mine) and best > 0.0:
                ratios.append(mine / best)
        ratios.sort()
        points: list[tuple[float, float]] = []
        for k, r in enumerate(ratios, start=1):
            points.append((math.log2(max(r, 1.0)), k / n_inst))
        curves[cfg] = points
    return curves


def run_batch(problems: list[tuple[str, callable]],
              configs: list[tuple[str, SolveConfig]]) -> BatchReport:
    """Run every (instance, configuration) pair; failures are recorded, not raised.

    ``problems`` holds (name, factory) pairs; the factory builds a fresh
    problem object per run so searches never share mutable state.
    """
    records = []
    for inst_name, factory in problems:
        for cfg_name, cfg in configs:
            try:
                report = solve(factory(), cfg)
                records.append({
                    "instance": inst_name,
                    "config": cfg_name,
                    "status": report["status"],
                    "solved": report["status"] == "optimal",
                    "glb": report["glb"],
                    "gub": report["gub"],
                    "gap": report["gap"],
                    "nodes": report["nodes"],
                    "depth": report["depth"],
                    "lbtime": report["lbtime"],
                    "ubtime": report["ubtime"],
                    "time": report["time"],
                })
            except Exception as exc:  # noqa: BLE001 - batch must continue
                records.append({"instance": inst_name, "config": cfg_name,
                                "status": f"error: {exc}", "solved": False,
                                "glb": None, "gub": None, "gap": None,
                                "nodes": 0, "depth": 0, "lbtime": 0.0,
                                "ubtime": 0.0, "time": 0.0})
    config_names = [name for name, _ in configs]
    aggregates = {}
    for cfg_name in config_names:
        solved = [r for r in records if r["config"] == cfg_name and r["solved"]]
        total = [r for r in records if r["config"] == cfg_name]
        agg = {"solved": f"{len(solved)}/{len(total)}"}
        for key in ("nodes", "depth", "lbtime", "ubtime", "time"):
            agg[key] = (sum(r[key] for r in solved) / len(solved)) if solved else None
        aggregates[cfg_name] = agg
    profiles = {metric: performance_profile(records, metric, config_names)
                for metric in ("time", "nodes")}
    return BatchReport(records=records, aggregates=aggregates, profiles=profiles)
