"""Closed-form domain reduction.

Two procedures: variable-bound inference from a quadratic inequality
a q^2 + q y + c <= 0 with the remaining terms aggregated into one bounded
variable y, and tightening of off-diagonal ratio bounds around triangles
using the fact that phase differences sum to zero on a cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ComplexQcqp, EntryBounds

INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class QuadConstraint1D:
    """a q^2 + q y + c <= 0 with y confined to [y_lo, y_hi]."""

    a: float
    c: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if self.y_lo > self.y_hi:
            raise ValueError("empty y interval")


def tighten_quadratic(qc: QuadConstraint1D) -> tuple[float, float] | str:
    """Interval containing all q feasible for the 1-D system, or 'infeasible'.

    Solving the slack equality a q^2 + q y + c + s = 0 for q gives roots
    (-y +- sqrt(y^2 - 4ac - 4as)) / (2a); the widest interval is at s = 0.
    For a > 0 both root branches are monotone decreasing in y, so extremes
    sit at interval endpoints; when the radicand y^2 - 4ac dips negative the
    domain of y shrinks to |y| >= 2 sqrt(ac), and an empty domain certifies
    infeasibility.  For a < 0 the feasible set is unbounded (no tightening);
    a = 0 must be handled by the caller as a linear constraint.
    """
    a, c = qc.a, qc.c
    if a == 0.0:
        raise ValueError("a = 0 must take the linear fallback")
    if a < 0.0:
        return (-math.inf, math.inf)
    K = -4.0 * a * c

    def upper_root(y):
        return (-y + math.sqrt(y * y + K)) / (2.0 * a)

    def lower_root(y):
        return (-y - math.sqrt(y * y + K)) / (2.0 * a)

    if K >= 0.0:
        return (lower_root(qc.y_hi), upper_root(qc.y_lo))
    y_star = math.sqrt(-K)  # radicand zero at +-y_star
    ys: list[float] = []
    # surviving y-subdomain: [y_lo, y_hi] intersect { |y| >= y_star }
    if qc.y_lo <= -y_star:
        ys.extend([qc.y_lo, min(qc.y_hi, -y_star)])
    if qc.y_hi >= y_star:
        ys.extend([max(qc.y_lo, y_star), qc.y_hi])
    if not ys:
        return INFEASIBLE
    lo = min(lower_root(y) for y in ys)
    hi = max(upper_root(y) for y in ys)
    return (lo, hi)


def _interval_mul(coef: float, lo: float, hi: float) -> tuple[float, float]:
    a, b = coef * lo, coef * hi
    return (a, b) if a <= b else (b, a)


def real_embedding_data(Q, cvec, b) -> tuple[np.ndarray, np.ndarray, float]:
    """Real form z'Ez + g'z + b of x*Qx + Re(c*x) + b with z = (Re x; Im x)."""
    E = np.block([[Q.W, -Q.T], [Q.T, Q.W]])
    g = np.concatenate([cvec.re, cvec.im])
    return E, g, b


def aggregate_to_1d(p: ComplexQcqp, con_index: int, component: int,
                    z_lo: np.ndarray, z_hi: np.ndarray) -> QuadConstraint1D | str:
    """Collapse one real-embedded constraint to a q/y system for one component.

    ``component`` indexes the stacked vector z = (Re x; Im x); z_lo/z_hi are
    its current componentwise bounds.  The cross terms 2 e_i' E z + g_i join
    the bounded aggregate y; every other term is fixed at its interval
    minimum, which keeps the 1-D system a valid relaxation.  Returns the
    string "linear" when the target has no square term.
    """
    if con_index < 1 or con_index > p.m:
        raise ValueError("constraint index out of range")
    Q, cvec, b = p.constraints[con_index]
    E, g, const = real_embedding_data(Q, cvec, b)
    dim = E.shape[0]
    i = component
    a = E[i, i]
    if a == 0.0:
        return "linear"
    y_lo = g[i]
    y_hi = g[i]
    for j in range(dim):
        if j == i:
            continue
        lo, hi = _interval_mul(2.0 * E[i, j], z_lo[j], z_hi[j])
        y_lo += lo
        y_hi += hi
    c = const
    for j in range(dim):
        if j == i:
            continue
        # linear term g_j z_j at its minimum
        c += min(g[j] * z_lo[j], g[j] * z_hi[j])
        # diagonal quadratic E_jj z_j^2 at its minimum
        sq_lo = 0.0 if z_lo[j] <= 0.0 <= z_hi[j] else min(z_lo[j] ** 2, z_hi[j] ** 2)
        sq_hi = max(z_lo[j] ** 2, z_hi[j] ** 2)
        c += min(E[j, j] * sq_lo, E[j, j] * sq_hi)
        # off-diagonal quadratics among the aggregated variables
        for k in range(j + 1, dim):
            if k == i:
                continue
            lo, hi = _interval_mul(2.0 * E[j, k], z_lo[j], z_hi[j])
            c += min(lo * z_lo[k], lo * z_hi[k], hi * z_lo[k], hi * z_hi[k])
    return QuadConstraint1D(a, c, y_lo, y_hi)


def tighten_box(p: ComplexQcqp, z_lo: np.ndarray, z_hi: np.ndarray,
                passes: int = 5) -> tuple[np.ndarray, np.ndarray] | str:
    """Fixpoint-capped sweep of quadratic tightening over all components.

    z = (Re x; Im x) componentwise bounds; returns tightened copies or
    "infeasible".  The pass cap keeps the sweep cheap; convergence to an
    exact fixpoint is not required for validity.
    """
    z_lo = np.array(z_lo, dtype=float)
    z_hi = np.array(z_hi, dtype=float)
    for _ in range(passes):
        changed = False
        for con in range(1, p.m + 1):
            for i in range(2 * p.n):
                qc = aggregate_to_1d(p, con, i, z_lo, z_hi)
                if qc == "linear":
                    continue
                res = tighten_quadratic(qc)
                if res == INFEASIBLE:
                    return INFEASIBLE
                lo, hi = res
                new_lo = max(z_lo[i], lo)
                new_hi = min(z_hi[i], hi)
                if new_lo > new_hi + 1e-12:
                    return INFEASIBLE
                if new_lo > z_lo[i] + 1e-12 or new_hi < z_hi[i] - 1e-12:
                    changed = True
                z_lo[i] = max(z_lo[i], min(new_lo, new_hi))
                z_hi[i] = min(z_hi[i], max(new_lo, new_hi))
        if not changed:
            break
    return z_lo, z_hi


# Guard for inverting the tangent: skip when the fixed-edge angle sum leaves
# the principal branch.
ANGLE_GUARD = math.pi / 2.0 - 1e-9


def tighten_cycle(cycle: list[int], eb: EntryBounds) -> EntryBounds:
    """Tighten ratio bounds on a 3-cycle; never loosens.

    Ratio bounds are tangents of phase-difference bounds, and the phase
    differences around the cycle sum to zero, so each edge's interval is
    intersected with the arctan-sum implied by the other two edges.
    Updates are skipped when an implied angle leaves (-pi/2, pi/2).
    """
    if len(cycle) != 3:
        raise ValueError("only triangles are supported")
    out = eb.copy()

    def angle_interval(a: int, b: int) -> tuple[float, float] | None:
        # interval for theta_a - theta_b from the stored canonical bounds
        i, j = (a, b) if a < b else (b, a)
        lo, hi = out.interval((i, j))
        if not (math.isfinite(lo) and math.isfinite(hi)):
            return None
        alo, ahi = math.atan(lo), math.atan(hi)
        return (alo, ahi) if a < b else (-ahi, -alo)

    for t in range(3):
        a, b = cycle[t], cycle[(t + 1) % 3]
        c = cycle[(t + 2) % 3]
        # theta_a - theta_b = (theta_a - theta_c) + (theta_c - theta_b)
        i1 = angle_interval(a, c)
        i2 = angle_interval(c, b)
        if i1 is None or i2 is None:
            continue
        lo_sum = i1[0] + i2[0]
        hi_sum = i1[1] + i2[1]
        i, j = (a, b) if a < b else (b, a)
        sign = 1.0 if a < b else -1.0
        if sign < 0.0:
            lo_sum, hi_sum = -hi_sum, -lo_sum
        cur_lo, cur_hi = out.interval((i, j))
        new_lo, new_hi = cur_lo, cur_hi
        if abs(lo_sum) < ANGLE_GUARD:
            new_lo = max(cur_lo, math.tan(lo_sum))
        if abs(hi_sum) < ANGLE_GUARD:
            new_hi = min(cur_hi, math.tan(hi_sum))
        out.set(i, j, new_lo, new_hi)
    return out
