"""Depth-first spatial branch-and-cut search.

The driver is problem-agnostic: it consumes any object exposing the lifted
problem protocol (tracked pairs, entry bounds, relaxation builder, cut
generator, tightening, rounding, polish, evaluation) and runs the search:
solve the node relaxation, try the rank-one rounding heuristic, prune by
bound or infeasibility, select a branching entry by the configured rule,
bisect, recurse.  Every decision is appended to a JSON-serializable event
log; wall-clock times are kept out of the log so that identical
single-threaded runs produce identical logs.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .branch import (PseudocostTable, branch_children, candidate_entries,
                     combine_scores, measure_violation, wev_lambda)
from .model import EntryBounds, LiftedIndex
from .numerics import ComplexVector
from .relax import INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL, solve_conic

FEAS_TOL = 1e-6
GAP_DENOM_GUARD = 1e-9

RELAX_VARIANTS = ("sdp", "sdp+rlt", "sdp+cvi")
RULES = ("mvsb", "mvwb", "rbeb")


@dataclass
class SolveConfig:
    relax: str = "sdp+cvi"
    rule: str = "mvwb"
    gap_limit: float = 1e-4
    node_limit: int = 10000
    depth_limit: int = 100
    time_limit: float | None = 5400.0
    mu: float = 0.15
    eta: int = 1
    alpha: float = 0.5
    seed: int = 0
    threads: int = 1
    heuristic: bool = True

    def __post_init__(self):
        if self.relax not in RELAX_VARIANTS:
            raise ValueError(f"relax must be one of {RELAX_VARIANTS}")
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}")
        if self.alpha != 0.5:
            raise ValueError("only bisection (alpha = 0.5) is supported")


@dataclass
class SearchNode:
    """Bounds are delta-encoded against the parent to keep the tree light."""

    id: int
    parent: int
    depth: int
    side: str  # root | up | down
    entry: LiftedIndex | None
    bound: float
    delta: dict[LiftedIndex, tuple[float, float]] = field(default_factory=dict)
    status: str = "open"
    parent_cstar: tuple[int, int] | None = None
    halfwidth: float | None = None  # parent interval halfwidth at branch time


@dataclass
class Incumbent:
    x: ComplexVector
    objective: float
    source: str


def prune_test(value: float, gub: float, gap_limit: float) -> bool:
    """A node whose bound is within the gap limit of the incumbent is closed."""
    if not math.isfinite(gub):
        return False
    return value >= gub - gap_limit * max(abs(gub), GAP_DENOM_GUARD)


def relative_gap(gub: float, glb: float) -> float:
    if not (math.isfinite(gub) and math.isfinite(glb)):
        return math.inf
    return (gub - glb) / max(abs(gub), GAP_DENOM_GUARD)


class _Search:
    def __init__(self, problem, config: SolveConfig):
        self.problem = problem
        self.config = config
        self.nodes: dict[int, SearchNode] = {}
        self.stack: list[int] = []
        self.events: list[dict] = []
        self.pc = PseudocostTable()
        self.gub = math.inf
        self.incumbent: Incumbent | None = None
        self.closed_min = math.inf  # min bound over closed (non-infeasible) leaves
        self.any_closed = False
        self.next_id = 0
        self.lbtime = 0.0
        self.ubtime = 0.0
        self.max_depth = 0
        self.depth_pruned_violated = False
        self.bound_warnings = 0
        self.root_eb: EntryBounds | None = None
        self.glb_trace: list[float | None] = []

    # -- bookkeeping ---------------------------------------------------------

    def log(self, **record) -> None:
        self.events.append(record)

    def new_node(self, parent: int, depth: int, side: str, entry, bound,
                 delta, parent_cstar=None, halfwidth=None) -> SearchNode:
        node = SearchNode(self.next_id, parent, depth, side, entry, bound,
                          delta, parent_cstar=parent_cstar, halfwidth=halfwidth)
        self.nodes[node.id] = node
        self.next_id += 1
        return node

    def materialize(self, node: SearchNode) -> EntryBounds:
        chain = []
        cur = node
        while cur.id != 0:
            chain.append(cur)
            cur = self.nodes[cur.parent]
        eb = self.root_eb.copy()
        for nd in reversed(chain):
            for (i, j), (lo, hi) in nd.delta.items():
                eb.set(i, j, lo, hi)
        return eb

    def glb(self) -> float:
        best = self.closed_min if self.any_closed else math.inf
        for nid in self.stack:
            best = min(best, self.nodes[nid].bound)
        if not self.stack and not self.any_closed:
            return self.gub
        return best

    def update_incumbent(self, x: ComplexVector, obj: float, source: str,
                         node_id: int) -> bool:
        if obj < self.gub - 1e-12:
            self.gub = obj
            self.incumbent = Incumbent(x, obj, source)
            self.log(event="incumbent", node=node_id, obj=obj, source=source)
            return True
        return False

    # -- node relaxation -----------------------------------------------------

    def solve_node_relaxation(self, eb: EntryBounds, track_time: bool = True):
        cuts = self.problem.cuts_for(eb, self.config.relax)
        cp = self.problem.build_relaxation(eb, cuts)
        t0 = time.perf_counter()
        sol = solve_conic(cp)
        if track_time:
            self.lbtime += time.perf_counter() - t0
        return sol

    def run_heuristic(self, node_id: int, sol) -> None:
        if not self.config.heuristic:
            return
        t0 = time.perf_counter()
        try:
            x0 = self.problem.extract_point(sol)
            if x0 is not None:
                x = self.problem.polish(x0)
                obj, viol = self.problem.evaluate(x)
                if viol <= FEAS_TOL:
                    self.update_incumbent(x, obj, "heuristic", node_id)
        except Exception:
            pass  # heuristic failures never stop the search
        finally:
            self.ubtime += time.perf_counter() - t0

    # -- branching rules -----------------------------------------------------

    def _strong_scores(self, eb: EntryBounds, entry, cstar, node_value,
                       track_time: bool = True):
        """Solve both children; (lambda, objective delta) per side, None if infeasible."""
        out = []
        for child_eb in branch_children(eb, entry):
            sol = self.solve_node_relaxation(child_eb, track_time=track_time)
            if sol.status == OPTIMAL:
                lam = measure_violation(sol, [cstar])[cstar]
                out.append((lam, sol.objective - node_value))
            elif sol.status == INFEASIBLE:
                out.append((None, None))
            else:
                out.append((math.inf, 0.0))
        return out[0], out[1]

    def select_entry(self, node, eb, sol, report):
        """Apply the configured rule; returns (entry, cstar, up_first) or None."""
        cfg = self.config
        ordered_pairs = sorted(report, key=lambda pr: (-report[pr], pr))
        cstar = None
        for pr in ordered_pairs:
            if report[pr] <= 0.0:
                break
            if candidate_entries(pr, eb):
                cstar = pr
                break
        if cstar is None:
            return None
        if cfg.rule == "rbeb":
            return self._select_rbeb(node, eb, sol, report, cstar)
        cands = candidate_entries(cstar, eb)

        def eval_candidate(entry):
            t0 = time.perf_counter()
            if cfg.rule == "mvsb":
                (lu, du), (ld, dd) = self._strong_scores(eb, entry, cstar,
                                                         sol.objective,
                                                         track_time=False)
                strong = True
            else:
                up_eb, down_eb = branch_children(eb, entry)
                lu = wev_lambda(cstar, up_eb, self.problem.real_vars)
                ld = wev_lambda(cstar, down_eb, self.problem.real_vars)
                du = dd = None
                strong = False
            elapsed = time.perf_counter() - t0
            score = combine_scores(lu, ld, cfg.mu)
            record = {"entry": list(entry), "score": score,
                      "up_lambda": lu, "down_lambda": ld, "strong": strong}
            return record, (du, dd), elapsed

        if cfg.threads > 1 and len(cands) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(eval_candidate, cands))
        else:
            results = [eval_candidate(entry) for entry in cands]
        scored = [r[0] for r in results]
        deltas = [r[1] for r in results]
        self.lbtime += sum(r[2] for r in results)
        best = max(range(len(cands)),
                   key=lambda k: (scored[k]["score"], -cands[k][0], -cands[k][1]))
        self.log(event="branch", node=node.id, rule=cfg.rule,
                 cstar=list(cstar), candidates=scored,
                 chosen=list(cands[best]))
        du, dd = deltas[best]
        up_first = True
        if du is not None and dd is not None and dd < du:
            up_first = False  # lower child relaxation value is explored first
        return cands[best], cstar, up_first

    def _select_rbeb(self, node, eb, sol, report, cstar):
        cfg = self.config
        entries: list[LiftedIndex] = []
        for pr in sorted(report):
            if report[pr] > 0.0:
                for entry in candidate_entries(pr, eb):
                    if entry not in entries:
                        entries.append(entry)
        if not entries:
            return None
        scored = []
        for entry in entries:
            width = eb.width(entry)
            if self.pc.reliable(entry, cfg.eta):
                score = self.pc.score(entry, width, cfg.mu)
                scored.append({"entry": list(entry), "score": score, "strong": False})
            else:
                (_lu, du), (_ld, dd) = self._strong_scores(eb, entry, cstar,
                                                           sol.objective)
                half = width / 2.0
                vals = []
                for direction, dv in (("up", du), ("down", dd)):
                    if dv is None:
                        vals.append(math.inf)
                        continue
                    phi = self.pc.update(entry, direction, dv, half)
                    self.log(event="pseudocost", entry=list(entry), dir=direction,
                             delta=max(dv, 0.0), halfwidth=half,
                             count=self.pc.count(entry, direction), phi=phi)
                    vals.append(self.pc.value(entry, direction))
                score = (cfg.mu * max(vals) + (1.0 - cfg.mu) * min(vals)) * half
                scored.append({"entry": list(entry), "score": score, "strong": True})
        best = max(range(len(entries)),
                   key=lambda k: (scored[k]["score"], -entries[k][0], -entries[k][1]))
        self.log(event="branch", node=node.id, rule="rbeb", cstar=list(cstar),
                 candidates=scored, chosen=list(entries[best]))
        return entries[best], cstar, True

    # -- main loop -----------------------------------------------------------

    def run(self) -> dict:
        cfg = self.config
        t_start = time.perf_counter()
        eb = self.problem.initial_bounds()
        tightened = self.problem.tighten(eb, None)
        if tightened == "infeasible":
            return self.finish("infeasible", t_start, 0)
        self.root_eb = tightened
        root = self.new_node(-1, 0, "root", None, -math.inf, {})
        self.stack = [root.id]
        processed = 0
        status = None
        while self.stack:
            if processed >= cfg.node_limit:
                status = "node-limit"
                break
            if cfg.time_limit is not None and time.perf_counter() - t_start > cfg.time_limit:
                status = "time-limit"
                break
            glb = self.glb()
            self.glb_trace.append(glb if math.isfinite(glb) else None)
            if relative_gap(self.gub, glb) <= cfg.gap_limit:
                status = "optimal"
                break
            node = self.nodes[self.stack.pop()]
            processed += 1
            self.max_depth = max(self.max_depth, node.depth)
            if self.process(node) == "root-failed":
                return self.finish("failed", t_start, processed)
        if status is None:
            if relative_gap(self.gub, self.glb()) <= cfg.gap_limit:
                status = "optimal"
            elif self.incumbent is None and not self.stack:
                status = "infeasible"
            else:
                status = "exhausted"
        return self.finish(status, t_start, processed)

    def process(self, node: SearchNode) -> str | None:
        cfg = self.config
        if node.id != 0 and prune_test(node.bound, self.gub, cfg.gap_limit):
            self.close(node, "pruned-bound", node.bound, None, None)
            return None
        eb = self.materialize(node)
        if node.id != 0 and node.entry is not None:
            tightened = self.problem.tighten(eb, node.entry)
            if tightened == "infeasible":
                self.close(node, "pruned-infeasible", math.inf, None, None)
                return None
            self._merge_tighten_delta(node, eb, tightened)
            eb = tightened
        if not eb.is_valid():
            self.close(node, "pruned-infeasible", math.inf, None, None)
            return None

        sol = self.solve_node_relaxation(eb)
        if sol.status == INFEASIBLE:
            self.close(node, "pruned-infeasible", math.inf, None, None)
            return None
        if sol.status == NUMERICAL_FAILURE:
            if node.id == 0:
                self.log(event="warning", kind="root-numerical-failure")
                return "root-failed"
            # conservative: keep the parent bound, do not prune
            self.close(node, "unresolved", node.bound, None, None)
            return None

        value = sol.objective
        if math.isfinite(node.bound):
            value = max(value, node.bound)
        report = measure_violation(sol, self.problem.tracked_pairs)
        viol_pair, viol = max(((pr, report[pr]) for pr in sorted(report)),
                              key=lambda kv: kv[1])
        pcl = report.get(node.parent_cstar) if node.parent_cstar else None

        if (cfg.rule == "rbeb" and node.side in ("up", "down")
                and node.entry is not None and node.halfwidth):
            parent = self.nodes[node.parent]
            if math.isfinite(parent.bound):
                dv = max(value - parent.bound, 0.0)
                phi = self.pc.update(node.entry, node.side, dv, node.halfwidth)
                self.log(event="pseudocost", entry=list(node.entry), dir=node.side,
                         delta=dv, halfwidth=node.halfwidth,
                         count=self.pc.count(node.entry, node.side), phi=phi)

        if prune_test(value, self.gub, cfg.gap_limit):
            self.close(node, "pruned-bound", value, viol, pcl)
            return None

        self.run_heuristic(node.id, sol)
        if self.incumbent is not None and self.incumbent.objective < value - FEAS_TOL * (
                1.0 + abs(value)):
            # a feasible objective below the node bound signals numerical trouble
            self.bound_warnings += 1
            self.log(event="warning", kind="bound-crossing", node=node.id,
                     value=value, gub=self.gub)
        if prune_test(value, self.gub, cfg.gap_limit):
            self.close(node, "pruned-bound", value, viol, pcl)
            return None

        scale = 1.0 + sum(abs(sol.entry("W", i, i)) for i in range(eb.dim))
        if viol <= 1e-6 * scale:
            self.close(node, "leaf-rank-one", value, viol, pcl)
            return None
        if node.depth >= cfg.depth_limit:
            if relative_gap(self.gub, value) > cfg.gap_limit:
                self.depth_pruned_violated = True
                self.log(event="warning", kind="depth-pruned-uncertified",
                         node=node.id, value=value)
            self.close(node, "pruned-depth", value, viol, pcl)
            return None

        selection = self.select_entry(node, eb, sol, report)
        if selection is None:
            self.close(node, "leaf-unbranchable", value, viol, pcl)
            return None
        entry, cstar, up_first = selection
        lo, hi = eb.interval(entry)
        mid = 0.5 * (lo + hi)
        half = (hi - lo) / 2.0
        up = self.new_node(node.id, node.depth + 1, "up", entry, value,
                           {entry: (mid, hi)}, parent_cstar=cstar, halfwidth=half)
        down = self.new_node(node.id, node.depth + 1, "down", entry, value,
                             {entry: (lo, mid)}, parent_cstar=cstar, halfwidth=half)
        # the child popped last is explored first
        if up_first:
            self.stack.extend([down.id, up.id])
        else:
            self.stack.extend([up.id, down.id])
        node.status = "branched"
        self.log(event="node", id=node.id, parent=node.parent, side=node.side,
                 depth=node.depth, value=value, status="branched",
                 viol=viol, viol_pair=list(viol_pair),
                 parent_cstar_lambda=pcl, children=[up.id, down.id])
        return None

    def _merge_tighten_delta(self, node: SearchNode, before: EntryBounds,
                             after: EntryBounds) -> None:
        diff = np.argwhere((before.L != after.L) | (before.U != after.U))
        for i, j in diff:
            if i <= j:
                node.delta[(int(i), int(j))] = (float(after.L[i, j]),
                                                float(after.U[i, j]))

    def close(self, node: SearchNode, status: str, value: float, viol, pcl) -> None:
        node.status = status
        if status != "pruned-infeasible" and math.isfinite(value):
            self.closed_min = min(self.closed_min, value)
            self.any_closed = True
        self.log(event="node", id=node.id, parent=node.parent, side=node.side,
                 depth=node.depth,
                 value=value if math.isfinite(value) else None,
                 status=status, viol=viol,
                 viol_pair=None, parent_cstar_lambda=pcl, children=[])

    def finish(self, status: str, t_start: float, processed: int) -> dict:
        total = time.perf_counter() - t_start
        glb = self.glb()
        gub = self.gub
        gap = relative_gap(gub, glb)
        return {
            "status": status,
            "glb": glb if math.isfinite(glb) else None,
            "gub": gub if math.isfinite(gub) else None,
            "gap": gap if math.isfinite(gap) else None,
            "nodes": processed,
            "depth": self.max_depth,
            "lbtime": round(self.lbtime, 6),
            "ubtime": round(self.ubtime, 6),
            "time": round(total, 6),
            "certified": status == "optimal" and not self.depth_pruned_violated,
            "bound_warnings": self.bound_warnings,
        }


def solve(problem, config: SolveConfig | None = None,
          event_log_path: str | None = None) -> dict:
    """Run the search; returns the report with events and incumbent attached."""
    config = config or SolveConfig()
    search = _Search(problem, config)
    report = search.run()
    report["events"] = search.events
    if search.incumbent is not None:
        report["incumbent"] = {
            "objective": search.incumbent.objective,
            "x_re": search.incumbent.x.re.tolist(),
            "x_im": search.incumbent.x.im.tolist(),
            "source": search.incumbent.source,
        }
    else:
        report["incumbent"] = None
    if event_log_path:
        with open(event_log_path, "w") as fh:
            fh.write(serialize_events(search.events))
    return report


def serialize_events(events: list[dict]) -> str:
    return "\n".join(json.dumps(ev, sort_keys=True) for ev in events) + "\n"
