"""Instance representation for QCQP over bounded complex variables.

An instance holds Hermitian data matrices Q_i, complex linear terms c_i and
offsets b_i for the objective (index 0) and m inequality constraints

    x* Q_i x + Re(c_i* x) + b_i <= 0,      l <= x <= u  componentwise,

with finite rectangle bounds on real and imaginary parts.  The lifted view
appends a homogenizing coordinate y = (1, x), so lifted index 0 always
refers to the constant-one row of Y = y y*.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .numerics import ComplexVector, HermitianMatrix

# Lifted index pair (i, j), 0 <= i <= j <= n, with row/col 0 the homogenizer.
LiftedIndex = tuple[int, int]


def _symmetrize(Q: HermitianMatrix) -> HermitianMatrix:
    W = (Q.W + Q.W.T) / 2.0
    T = (Q.T - Q.T.T) / 2.0
    np.fill_diagonal(T, 0.0)
    return HermitianMatrix(W, T)


@dataclass(frozen=True)
class ComplexQcqp:
    """A complex QCQP instance; constraints[0] is the objective."""

    n: int
    constraints: list[tuple[HermitianMatrix, ComplexVector, float]]
    lb: ComplexVector
    ub: ComplexVector
    real_vars: bool = False

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("need at least the objective entry")
        fixed = []
        for Q, c, b in self.constraints:
            if Q.n != self.n or c.n != self.n:
                raise ValueError("constraint data dimension mismatch")
            fixed.append((_symmetrize(Q), c, float(b)))
        object.__setattr__(self, "constraints", fixed)
        if self.lb.n != self.n or self.ub.n != self.n:
            raise ValueError("bound dimension mismatch")
        if not (np.all(np.isfinite(self.lb.re)) and np.all(np.isfinite(self.ub.re))
                and np.all(np.isfinite(self.lb.im)) and np.all(np.isfinite(self.ub.im))):
            raise ValueError("all variable bounds must be finite")
        if np.any(self.lb.re > self.ub.re) or np.any(self.lb.im > self.ub.im):
            raise ValueError("lower bounds exceed upper bounds")
        if self.real_vars and (np.any(self.lb.im != 0.0) or np.any(self.ub.im != 0.0)):
            raise ValueError("real instance must fix imaginary parts to zero")

    @property
    def m(self) -> int:
        return len(self.constraints) - 1


class EntryBounds:
    """Bound matrices L <= U on the lifted matrix.

    Diagonal entries bound the squared magnitudes W_ii; off-diagonal entries
    bound the ratio T_ij / W_ij (the tangent of the phase difference).
    Untracked off-diagonal pairs carry +-inf.
    """

    def __init__(self, L: np.ndarray, U: np.ndarray):
        self.L = np.asarray(L, dtype=float)
        self.U = np.asarray(U, dtype=float)
        if self.L.shape != self.U.shape or self.L.ndim != 2:
            raise ValueError("L and U must be square matrices of equal shape")

    @property
    def dim(self) -> int:
        return self.L.shape[0]

    @staticmethod
    def unbounded(dim: int) -> "EntryBounds":
        L = np.full((dim, dim), -np.inf)
        U = np.full((dim, dim), np.inf)
        np.fill_diagonal(L, 0.0)
        return EntryBounds(L, U)

    def copy(self) -> "EntryBounds":
        return EntryBounds(self.L.copy(), self.U.copy())

    def set(self, i: int, j: int, lo: float, hi: float) -> None:
        self.L[i, j] = self.L[j, i] = lo
        self.U[i, j] = self.U[j, i] = hi

    def interval(self, entry: LiftedIndex) -> tuple[float, float]:
        i, j = entry
        return float(self.L[i, j]), float(self.U[i, j])

    def width(self, entry: LiftedIndex) -> float:
        lo, hi = self.interval(entry)
        return hi - lo

    def is_valid(self) -> bool:
        if np.any(self.L > self.U):
            return False
        return bool(np.all(np.diag(self.L) >= 0.0))

    def check(self) -> None:
        if not self.is_valid():
            raise ValueError("entry bounds violate L <= U or L_ii >= 0")


def affine_shift_positive(p: ComplexQcqp) -> tuple[ComplexQcqp, ComplexVector]:
    """Shift variables so every component lower bound is >= 1.

    Substituting q := x - l + e + ie, where e is the ones vector, gives an
    equivalent instance in q with q = x - shift, shift := l - e - ie.  Data
    transforms by q*Qq absorbing the cross terms into the linear part:
    c' = c + 2 Q d and b' = b + d*Q d + Re(c* d) with d = shift.
    """
    n = p.n
    one = np.ones(n)
    d_re = p.lb.re - one
    d_im = p.lb.im - (0.0 if p.real_vars else one)
    shift = ComplexVector(d_re, d_im)
    d = shift.to_complex()
    new_cons = []
    for Q, c, b in p.constraints:
        Qc = Q.to_complex()
        cc = c.to_complex()
        c_new = cc + 2.0 * (Qc @ d)
        b_new = b + float(np.real(d.conj() @ (Qc @ d))) + float(np.real(cc.conj() @ d))
        new_cons.append((Q, ComplexVector.from_complex(c_new), b_new))
    lb = ComplexVector(p.lb.re - d_re, p.lb.im - d_im)
    ub = ComplexVector(p.ub.re - d_re, p.ub.im - d_im)
    shifted = ComplexQcqp(n, new_cons, lb, ub, real_vars=p.real_vars)
    return shifted, shift


def initial_entry_bounds(p: ComplexQcqp) -> EntryBounds:
    """Entry bounds for the lifted matrix of a component-positive instance.

    Requires every component lower bound >= 1 for complex instances (so that
    W_minus := wL_i wL_j + tL_i tL_j > 0 and the ratio bound
    -L_ij = U_ij = sqrt(U_ii U_jj / W_minus^2 - 1) is valid), or
    componentwise nonnegative lower bounds for real instances (ratio bounds
    are then pinned to zero).
    """
    n = p.n
    eb = EntryBounds.unbounded(n + 1)
    eb.set(0, 0, 1.0, 1.0)
    # component lower-bound vectors in lifted order, index 0 = homogenizer
    wL = np.concatenate(([1.0], p.lb.re))
    tL = np.concatenate(([0.0], p.lb.im))
    if p.real_vars:
        if np.any(p.lb.re < 0.0):
            raise ValueError("real instance must have nonnegative lower bounds")
    else:
        if np.any(p.lb.re < 1.0) or np.any(p.lb.im < 1.0):
            raise ValueError("instance not shifted: component lower bounds below 1")
    for i in range(1, n + 1):
        lo = p.lb.re[i - 1] ** 2 + p.lb.im[i - 1] ** 2
        hi = p.ub.re[i - 1] ** 2 + p.ub.im[i - 1] ** 2
        eb.set(i, i, lo, hi)
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            if p.real_vars:
                eb.set(i, j, 0.0, 0.0)
                continue
            w_minus = wL[i] * wL[j] + tL[i] * tL[j]
            if w_minus <= 0.0:
                raise ValueError("W_minus <= 0: shift not applied")
            rad = eb.U[i, i] * eb.U[j, j] / w_minus**2 - 1.0
            r = float(np.sqrt(max(rad, 0.0)))
            eb.set(i, j, -r, r)
    eb.check()
    return eb


def evaluate(p: ComplexQcqp, x: ComplexVector) -> tuple[float, float]:
    """Objective value and maximum violation (constraints and bounds) at x."""
    if x.n != p.n:
        raise ValueError("point dimension mismatch")
    z = x.to_complex()

    def q_val(Q, c, b):
        return float(np.real(z.conj() @ (Q.to_complex() @ z))
                     + np.real(c.to_complex().conj() @ z)) + b

    obj = q_val(*p.constraints[0])
    viol = 0.0
    for Q, c, b in p.constraints[1:]:
        viol = max(viol, q_val(Q, c, b))
    viol = max(viol, float(np.max(p.lb.re - x.re, initial=0.0)))
    viol = max(viol, float(np.max(x.re - p.ub.re, initial=0.0)))
    viol = max(viol, float(np.max(p.lb.im - x.im, initial=0.0)))
    viol = max(viol, float(np.max(x.im - p.ub.im, initial=0.0)))
    return obj, viol


def quadratic_pattern(p: ComplexQcqp) -> set[tuple[int, int]]:
    """Aggregate off-diagonal sparsity of all Q_i, in original variable indices."""
    pat: set[tuple[int, int]] = set()
    tol = 0.0
    for Q, _c, _b in p.constraints:
        nz = np.argwhere((np.abs(Q.W) > tol) | (np.abs(Q.T) > tol))
        for a, b in nz:
            if a < b:
                pat.add((int(a), int(b)))
    return pat


# ---------------------------------------------------------------------------
# JSON serialization.  Schema (documented in README):
#   {"n": int, "real": bool,
#    "objective": {...}, "constraints": [{...}, ...],
#    "lb_re": [...], "lb_im": [...], "ub_re": [...], "ub_im": [...]}
# where each quadratic block {...} is
#   {"Qw": [[...]] | "Qw_triplets": [[i,j,v],...],
#    "Qt": [[...]] | "Qt_triplets": [[i,j,v],...],
#    "c_re": [...], "c_im": [...], "b": float}
# Qw triplets fill (i,j) and (j,i); Qt triplets fill (i,j) and -(j,i).
# ---------------------------------------------------------------------------

def _mat_from_json(d: dict, key: str, n: int, skew: bool) -> np.ndarray:
    dense = d.get(key)
    if dense is not None:
        return np.asarray(dense, dtype=float)
    M = np.zeros((n, n))
    for i, j, v in d.get(key + "_triplets", []):
        M[int(i), int(j)] = float(v)
        M[int(j), int(i)] = -float(v) if skew else float(v)
    return M


def _block_from_json(d: dict, n: int) -> tuple[HermitianMatrix, ComplexVector, float]:
    W = _mat_from_json(d, "Qw", n, skew=False)
    T = _mat_from_json(d, "Qt", n, skew=True)
    c = ComplexVector(np.asarray(d.get("c_re", np.zeros(n)), dtype=float),
                      np.asarray(d.get("c_im", np.zeros(n)), dtype=float))
    return _symmetrize(HermitianMatrix((W + W.T) / 2, (T - T.T) / 2)), c, float(d.get("b", 0.0))


def load_json(text: str) -> ComplexQcqp:
    d = json.loads(text)
    n = int(d["n"])
    blocks = [d["objective"]] + list(d.get("constraints", []))
    cons = [_block_from_json(b, n) for b in blocks]
    lb = ComplexVector(np.asarray(d["lb_re"], dtype=float),
                       np.asarray(d.get("lb_im", np.zeros(n)), dtype=float))
    ub = ComplexVector(np.asarray(d["ub_re"], dtype=float),
                       np.asarray(d.get("ub_im", np.zeros(n)), dtype=float))
    return ComplexQcqp(n, cons, lb, ub, real_vars=bool(d.get("real", False)))


def dump_json(p: ComplexQcqp) -> str:
    def blk(Q, c, b):
        return {"Qw": Q.W.tolist(), "Qt": Q.T.tolist(),
                "c_re": c.re.tolist(), "c_im": c.im.tolist(), "b": b}

    d = {
        "n": p.n,
        "real": p.real_vars,
        "objective": blk(*p.constraints[0]),
        "constraints": [blk(*con) for con in p.constraints[1:]],
        "lb_re": p.lb.re.tolist(), "lb_im": p.lb.im.tolist(),
        "ub_re": p.ub.re.tolist(), "ub_im": p.ub.im.tolist(),
    }
    return json.dumps(d, indent=1, sort_keys=True)
