"""Branching mechanics for the spatial search.

Rank-one violation is measured locally: a PSD lifted matrix has rank one
iff every 2x2 principal minor vanishes, so the pair with the largest
minimum eigenvalue is the most violated.  Candidate entries on that pair
are its two diagonal intervals and the off-diagonal ratio interval; they
are scored by strong branching (MVSB), by the worst-case eigenvalue
subproblem (MVWB), or by pseudocosts (RBEB), and partitioned by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cuts import generate_cvi
from .model import EntryBounds, LiftedIndex
from .relax import (INFEASIBLE, OPTIMAL, ConicProgram, RelaxationSolution,
                    solve_conic)
from .numerics import min_eigenvalue_2x2

MU_DEFAULT = 0.15
MIN_INTERVAL = 1e-9


def measure_violation(sol: RelaxationSolution,
                      pairs: list[tuple[int, int]]) -> dict[tuple[int, int], float]:
    """Minimum eigenvalue of each tracked 2x2 principal submatrix."""
    return {pr: min_eigenvalue_2x2(*sol.pair_values(*pr)) for pr in pairs}


def most_violated(report: dict[tuple[int, int], float]) -> tuple[tuple[int, int], float]:
    """Pair with greatest lambda_min; ties broken by lowest (i, j)."""
    best = None
    for pr in sorted(report):
        lam = report[pr]
        if best is None or lam > best[1] + 0.0:
            best = (pr, lam)
    return best


def candidate_entries(cstar: tuple[int, int], eb: EntryBounds,
                      min_width: float = MIN_INTERVAL) -> list[LiftedIndex]:
    """Branchable entries of a violated pair: (i,i), (j,j), (i,j).

    Entries whose interval is degenerate or unbounded are filtered out.
    """
    i, j = cstar
    out = []
    for entry in ((i, i), (j, j), (i, j)):
        lo, hi = eb.interval(entry)
        if math.isfinite(lo) and math.isfinite(hi) and hi - lo > min_width:
            out.append(entry)
    return out


def branch_children(eb: EntryBounds, entry: LiftedIndex) -> tuple[EntryBounds, EntryBounds]:
    """Bisect the entry's interval: up child raises L, down child lowers U."""
    lo, hi = eb.interval(entry)
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi - lo <= 0.0:
        raise ValueError("cannot branch on a degenerate interval")
    mid = 0.5 * (lo + hi)
    up = eb.copy()
    up.set(entry[0], entry[1], mid, hi)
    down = eb.copy()
    down.set(entry[0], entry[1], lo, mid)
    return up, down


def combine_scores(lam_up: float | None, lam_down: float | None,
                   mu: float = MU_DEFAULT) -> float:
    """mu max(-lam+, -lam-) + (1-mu) min(-lam+, -lam-); infeasible side -> +inf."""
    a = math.inf if lam_up is None else -lam_up
    b = math.inf if lam_down is None else -lam_down
    return mu * max(a, b) + (1.0 - mu) * min(a, b)


def wev_lambda(pair: tuple[int, int], eb: EntryBounds, real_vars: bool) -> float | None:
    """Worst-case eigenvalue over the convex hull of the pair's rank-one set.

    Maximizes lambda subject to ||(Wii - Wjj, 2 Wij, 2 Tij)|| <= Wii + Wjj
    - 2 lambda together with the pair's bound rows and both hull cuts; the
    PSD condition is unnecessary because the objective maximizes the
    minimum eigenvalue.  Returns None when infeasible (child prunable).
    """
    i, j = pair
    Lii, Uii = eb.interval((i, i))
    Ljj, Ujj = eb.interval((j, j))
    Lij, Uij = eb.interval((i, j))
    cp = ConicProgram()
    lam = cp.add_variable(("lam",))
    wii = cp.add_variable(("wii",))
    wjj = cp.add_variable(("wjj",))
    wij = cp.add_variable(("wij",))
    tij = None if real_vars else cp.add_variable(("tij",))
    cp.set_objective({lam: -1.0})
    cp.add_ineq({wii: 1.0}, Uii)
    cp.add_ineq({wii: -1.0}, -Lii)
    cp.add_ineq({wjj: 1.0}, Ujj)
    cp.add_ineq({wjj: -1.0}, -Ljj)
    cp.add_ineq({wij: -1.0}, 0.0)
    if tij is not None and math.isfinite(Lij) and math.isfinite(Uij):
        cp.add_ineq({wij: Lij, tij: -1.0}, 0.0)
        cp.add_ineq({tij: 1.0, wij: -Uij}, 0.0)
    # hull cuts under the same bounds
    tmp = EntryBounds.unbounded(2)
    tmp.set(0, 0, Lii, Uii)
    tmp.set(1, 1, Ljj, Ujj)
    tmp.set(0, 1, Lij if math.isfinite(Lij) else 0.0, Uij if math.isfinite(Uij) else 0.0)
    if math.isfinite(Lij) and math.isfinite(Uij):
        for cut in generate_cvi((0, 1), tmp):
            terms = {wii: -cut.coeffs.get("wii", 0.0), wjj: -cut.coeffs.get("wjj", 0.0),
                     wij: -cut.coeffs.get("wij", 0.0)}
            if tij is not None:
                terms[tij] = -cut.coeffs.get("tij", 0.0)
            cp.add_ineq(terms, cut.const)
    soc = [({wii: 1.0, wjj: 1.0, lam: -2.0}, 0.0),
           ({wii: 1.0, wjj: -1.0}, 0.0),
           ({wij: 2.0}, 0.0)]
    if tij is not None:
        soc.append(({tij: 2.0}, 0.0))
    cp.add_soc(soc)
    sol = solve_conic(cp)
    if sol.status == INFEASIBLE:
        return None
    if sol.status != OPTIMAL:
        # conservative: no overestimate available, treat as unbounded violation
        return math.inf
    return -sol.objective


@dataclass
class PseudocostTable:
    """Running averages of per-unit bound improvement per entry and direction."""

    sums: dict[tuple[LiftedIndex, str], float] = field(default_factory=dict)
    counts: dict[tuple[LiftedIndex, str], int] = field(default_factory=dict)

    def update(self, entry: LiftedIndex, direction: str, delta: float,
               halfwidth: float) -> float:
        if direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        if halfwidth <= 0.0:
            raise ValueError("halfwidth must be positive")
        key = (entry, direction)
        per_unit = max(delta, 0.0) / halfwidth
        self.sums[key] = self.sums.get(key, 0.0) + per_unit
        self.counts[key] = self.counts.get(key, 0) + 1
        return self.value(entry, direction)

    def count(self, entry: LiftedIndex, direction: str) -> int:
        return self.counts.get((entry, direction), 0)

    def value(self, entry: LiftedIndex, direction: str) -> float:
        key = (entry, direction)
        c = self.counts.get(key, 0)
        return self.sums.get(key, 0.0) / c if c else 0.0

    def reliable(self, entry: LiftedIndex, eta: int) -> bool:
        return self.count(entry, "up") >= eta and self.count(entry, "down") >= eta

    def score(self, entry: LiftedIndex, width: float, mu: float = MU_DEFAULT) -> float:
        up = self.value(entry, "up")
        down = self.value(entry, "down")
        return (mu * max(up, down) + (1.0 - mu) * min(up, down)) * (width / 2.0)
