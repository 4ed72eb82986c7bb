"""Linear valid inequalities for rank-one constrained 2x2 Hermitian blocks.

For a pair (i, j) of lifted indices, the nonconvex target set consists of
the 2x2 Hermitian PSD matrices with bounded diagonals, bounded ratio
T_ij / W_ij, nonnegative W_ij, and the rank-one surface equality
W_ii W_jj = W_ij^2 + T_ij^2.  Its convex hull is the SDP relaxation plus
exactly two linear cuts whose coefficients are built from the sigmoid
f(x) = (sqrt(1 + x^2) - 1) / x.  Standard RLT (McCormick) inequalities for
the real-embedding products are provided for comparison and for the real
special case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import EntryBounds, LiftedIndex

# Cut term keys: pair entries and the linear components of x_i, x_j
# ("wi" = Re x_i, "ti" = Im x_i), available when a homogenizing row exists.
CUT_TERMS = ("wii", "wjj", "wij", "tij", "wi", "wj", "ti", "tj")


@dataclass(frozen=True)
class LinearCut:
    """coeffs . terms + const >= 0 over the lifted entries of pair (i, j)."""

    pair: LiftedIndex
    coeffs: dict[str, float]
    const: float
    provenance: str

    def __post_init__(self):
        for k, v in self.coeffs.items():
            if k not in CUT_TERMS:
                raise ValueError(f"unknown cut term {k!r}")
            if not math.isfinite(v):
                raise ValueError("cut coefficients must be finite")
        if not math.isfinite(self.const):
            raise ValueError("cut constant must be finite")

    def value(self, point: dict[str, float]) -> float:
        """Left-hand side at a point; >= 0 means satisfied."""
        return sum(c * point.get(k, 0.0) for k, c in self.coeffs.items()) + self.const


@dataclass(frozen=True)
class PiCoefficients:
    pi0: float
    pi1: float
    pi2: float
    pi3: float
    pi4: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.pi0, self.pi1, self.pi2, self.pi3, self.pi4)


def sigmoid_f(x: float) -> float:
    """f(x) = (sqrt(1 + x^2) - 1) / x with f(0) = 0; odd, increasing, |f| < 1.

    Evaluated as x / (sqrt(1 + x^2) + 1), which is exact at 0 and avoids
    cancellation for small |x|.
    """
    return x / (math.sqrt(1.0 + x * x) + 1.0)


def _clamp_sqrt(v: float) -> float:
    # squares of bounds can go epsilon-negative through floating error
    return math.sqrt(v) if v > 0.0 else 0.0


def pi_coefficients(Lii: float, Uii: float, Ljj: float, Ujj: float,
                    Lij: float, Uij: float) -> PiCoefficients:
    """Cut coefficients for pair bounds (diagonal intervals and ratio interval)."""
    if Lii > Uii or Ljj > Ujj or Lij > Uij:
        raise ValueError("bounds must satisfy L <= U")
    if Lii < 0.0 or Ljj < 0.0:
        raise ValueError("diagonal lower bounds must be nonnegative")
    fL = sigmoid_f(Lij)
    fU = sigmoid_f(Uij)
    pre = (_clamp_sqrt(Lii) + _clamp_sqrt(Uii)) * (_clamp_sqrt(Ljj) + _clamp_sqrt(Ujj))
    denom = 1.0 + fL * fU
    return PiCoefficients(
        pi0=-_clamp_sqrt(Lii * Ljj * Uii * Ujj),
        pi1=-_clamp_sqrt(Ljj * Ujj),
        pi2=-_clamp_sqrt(Lii * Uii),
        pi3=pre * (1.0 - fL * fU) / denom,
        pi4=pre * (fL + fU) / denom,
    )


def generate_cvi(pair: LiftedIndex, eb: EntryBounds) -> list[LinearCut]:
    """The two convex-hull cuts for a tracked pair, rearranged to ">= 0" form.

    Degenerate pairs (a diagonal interval pinned to zero) admit only the
    zero matrix on that entry, so no cuts are emitted.  Pairs with
    non-finite ratio bounds are skipped as well.
    """
    i, j = pair
    Lii, Uii = eb.interval((i, i))
    Ljj, Ujj = eb.interval((j, j))
    Lij, Uij = eb.interval((i, j))
    if not (math.isfinite(Lij) and math.isfinite(Uij)):
        return []
    if Uii <= 0.0 or Ujj <= 0.0:
        return []
    pi = pi_coefficients(Lii, Uii, Ljj, Ujj, Lij, Uij)
    vi1 = LinearCut(
        pair,
        {"wii": pi.pi1 - Ujj, "wjj": pi.pi2 - Uii, "wij": pi.pi3, "tij": pi.pi4},
        pi.pi0 + Uii * Ujj,
        "vi1",
    )
    vi2 = LinearCut(
        pair,
        {"wii": pi.pi1 - Ljj, "wjj": pi.pi2 - Lii, "wij": pi.pi3, "tij": pi.pi4},
        pi.pi0 + Lii * Ljj,
        "vi2",
    )
    return [vi1, vi2]


def _mccormick(xkey: str, ykey: str, lx: float, ux: float, ly: float, uy: float,
               pair: LiftedIndex, pkey: str, tag: str) -> list[LinearCut]:
    """Four McCormick cuts for the product of terms xkey and ykey stored in pkey."""
    cuts = []
    # p <= uy x + lx y - lx uy  and  p <= ly x + ux y - ux ly
    for k, (a, b, c) in enumerate(((uy, lx, -lx * uy), (ly, ux, -ux * ly))):
        cuts.append(LinearCut(pair, {pkey: -1.0, xkey: a, ykey: b}, c, f"{tag}-{k + 1}"))
    # p >= ly x + lx y - lx ly  and  p >= uy x + ux y - ux uy
    for k, (a, b, c) in enumerate(((ly, lx, -lx * ly), (uy, ux, -ux * uy))):
        cuts.append(LinearCut(pair, {pkey: 1.0, xkey: -a, ykey: -b}, -c, f"{tag}-{k + 3}"))
    return cuts


def _mccormick_diag(xkey: str, lx: float, ux: float, pair: LiftedIndex,
                    pkey: str, tag: str) -> list[LinearCut]:
    """Three RLT cuts for the square term: one secant upper, two tangent lowers."""
    return [
        LinearCut(pair, {pkey: -1.0, xkey: lx + ux}, -lx * ux, f"{tag}-1"),
        LinearCut(pair, {pkey: 1.0, xkey: -2.0 * lx}, lx * lx, f"{tag}-2"),
        LinearCut(pair, {pkey: 1.0, xkey: -2.0 * ux}, ux * ux, f"{tag}-3"),
    ]


def generate_rlt(p: int, q: int, lp: float, up: float, lq: float, uq: float) -> list[LinearCut]:
    """RLT cuts for the product of two real variable components.

    For p != q these are the four McCormick estimators linking W_pq to the
    linear components w_p, w_q; for p == q the three diagonal cuts linking
    W_pp to w_p.  All bounds must be finite.
    """
    for v in (lp, up, lq, uq):
        if not math.isfinite(v):
            raise ValueError("RLT requires finite bounds")
    if p == q:
        return _mccormick_diag("wi", lp, up, (p, p), "wii", "rlt-diag")
    pair = (min(p, q), max(p, q))
    return _mccormick("wi", "wj", lp, up, lq, uq, pair, "wij", "rlt")


@dataclass(frozen=True)
class Rectangle:
    """Componentwise bounds on one complex variable."""

    w_lo: float
    w_hi: float
    t_lo: float
    t_hi: float


def _interval_product(lx, ux, ly, uy):
    vals = (lx * ly, lx * uy, ux * ly, ux * uy)
    return min(vals), max(vals)


def generate_rlt_complex(pair: LiftedIndex, ri: Rectangle, rj: Rectangle,
                         with_linear_terms: bool = True) -> list[LinearCut]:
    """Composite RLT cuts for a complex pair via the reals transformation.

    W_ij = w_i w_j + t_i t_j and T_ij = t_i w_j - w_i t_j; each bilinear term
    receives its McCormick estimators under the rectangles, and the composite
    cuts are the pairwise sums.  Without linear terms available (no
    homogenizing row), the linear pieces are relaxed to interval bounds,
    leaving box cuts on W_ij and T_ij alone.
    """
    i, j = pair
    if not with_linear_terms:
        wlo1, whi1 = _interval_product(ri.w_lo, ri.w_hi, rj.w_lo, rj.w_hi)
        wlo2, whi2 = _interval_product(ri.t_lo, ri.t_hi, rj.t_lo, rj.t_hi)
        tlo1, thi1 = _interval_product(ri.t_lo, ri.t_hi, rj.w_lo, rj.w_hi)
        tlo2, thi2 = _interval_product(ri.w_lo, ri.w_hi, rj.t_lo, rj.t_hi)
        return [
            LinearCut(pair, {"wij": -1.0}, whi1 + whi2, "rlt-box-1"),
            LinearCut(pair, {"wij": 1.0}, -(wlo1 + wlo2), "rlt-box-2"),
            LinearCut(pair, {"tij": -1.0}, thi1 - tlo2, "rlt-box-3"),
            LinearCut(pair, {"tij": 1.0}, -(tlo1 - thi2), "rlt-box-4"),
        ]

    cuts: list[LinearCut] = []

    def product_bounds(xkey, ykey, lx, ux, ly, uy):
        uppers = [({xkey: uy, ykey: lx}, -lx * uy), ({xkey: ly, ykey: ux}, -ux * ly)]
        lowers = [({xkey: ly, ykey: lx}, -lx * ly), ({xkey: uy, ykey: ux}, -ux * uy)]
        return uppers, lowers

    def combine(pkey, first, second, sign2, tag):
        up1, lo1 = first
        up2, lo2 = second
        k = 0
        for e1, c1 in up1:
            for e2, c2 in (up2 if sign2 > 0 else lo2):
                k += 1
                coeffs = {pkey: -1.0}
                for key, v in e1.items():
                    coeffs[key] = coeffs.get(key, 0.0) + v
                for key, v in e2.items():
                    coeffs[key] = coeffs.get(key, 0.0) + sign2 * v
                cuts.append(LinearCut(pair, coeffs, c1 + sign2 * c2, f"{tag}-u{k}"))
        k = 0
        for e1, c1 in lo1:
            for e2, c2 in (lo2 if sign2 > 0 else up2):
                k += 1
                coeffs = {pkey: 1.0}
                for key, v in e1.items():
                    coeffs[key] = coeffs.get(key, 0.0) - v
                for key, v in e2.items():
                    coeffs[key] = coeffs.get(key, 0.0) - sign2 * v
                cuts.append(LinearCut(pair, coeffs, -(c1 + sign2 * c2), f"{tag}-l{k}"))

    # W_ij = (w_i w_j) + (t_i t_j)
    ww = product_bounds("wi", "wj", ri.w_lo, ri.w_hi, rj.w_lo, rj.w_hi)
    tt = product_bounds("ti", "tj", ri.t_lo, ri.t_hi, rj.t_lo, rj.t_hi)
    combine("wij", ww, tt, +1.0, "rlt-w")
    # T_ij = (t_i w_j) - (w_i t_j)
    tw = product_bounds("ti", "wj", ri.t_lo, ri.t_hi, rj.w_lo, rj.w_hi)
    wt = product_bounds("wi", "tj", ri.w_lo, ri.w_hi, rj.t_lo, rj.t_hi)
    combine("tij", tw, wt, -1.0, "rlt-t")
    # diagonal composites W_kk = w_k^2 + t_k^2: one secant upper, four
    # tangent-combination lowers per variable
    for key_w, key_t, rect, dpair, dk in (("wi", "ti", ri, (i, i), "i"),
                                          ("wj", "tj", rj, (j, j), "j")):
        lw, uw, lt, ut = rect.w_lo, rect.w_hi, rect.t_lo, rect.t_hi
        cuts.append(LinearCut(dpair, {"wii": -1.0, key_w: lw + uw, key_t: lt + ut},
                              -lw * uw - lt * ut, f"rlt-diag-{dk}-u"))
        k = 0
        for aw, cw in ((2.0 * lw, -lw * lw), (2.0 * uw, -uw * uw)):
            for at, ct in ((2.0 * lt, -lt * lt), (2.0 * ut, -ut * ut)):
                k += 1
                cuts.append(LinearCut(dpair, {"wii": 1.0, key_w: -aw, key_t: -at},
                                      -(cw + ct), f"rlt-diag-{dk}-l{k}"))
    return cuts


def hull_membership(values: tuple[float, float, float, float], eb: EntryBounds,
                    pair: LiftedIndex, tol: float = 1e-9) -> str:
    """Classify (Wii, Wjj, Wij, Tij) as 'in_JC', 'in_hull_only', or 'outside'."""
    Wii, Wjj, Wij, Tij = values
    i, j = pair
    Lii, Uii = eb.interval((i, i))
    Ljj, Ujj = eb.interval((j, j))
    Lij, Uij = eb.interval((i, j))
    scale = 1.0 + abs(Wii) + abs(Wjj) + abs(Wij) + abs(Tij)
    box = (Lii - tol * scale <= Wii <= Uii + tol * scale
           and Ljj - tol * scale <= Wjj <= Ujj + tol * scale
           and Lij * Wij - tol * scale <= Tij <= Uij * Wij + tol * scale
           and Wij >= -tol * scale)
    if not box:
        return "outside"
    gap = Wii * Wjj - Wij**2 - Tij**2
    if gap < -tol * scale**2:
        return "outside"
    point = {"wii": Wii, "wjj": Wjj, "wij": Wij, "tij": Tij}
    for cut in generate_cvi(pair, eb):
        if cut.value(point) < -tol * scale**2:
            return "outside"
    if abs(gap) <= tol * scale**2:
        return "in_JC"
    return "in_hull_only"
