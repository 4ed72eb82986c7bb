"""Box-constrained QP frontend: min (1/2) x'Qx + f'x over the unit box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ComplexQcqp
from .numerics import ComplexVector, HermitianMatrix


class SparFormatError(Exception):
    pass


@dataclass(frozen=True)
class BoxQpInstance:
    Q: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        f = np.asarray(self.f, dtype=float).ravel()
        object.__setattr__(self, "Q", (Q + Q.T) / 2.0)
        object.__setattr__(self, "f", f)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != f.shape[0]:
            raise SparFormatError("Q must be n x n and f length n")

    @property
    def n(self) -> int:
        return self.f.shape[0]

    def density(self) -> float:
        n = self.n
        if n <= 1:
            return 0.0
        off = (self.Q != 0.0).sum() - (np.diag(self.Q) != 0.0).sum()
        return float(off) / (n * (n - 1))

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.Q @ x) + self.f @ x)


def parse_boxqp(text: str) -> BoxQpInstance:
    """Parse the whitespace spar layout: n, then f (n values), then Q rows."""
    toks = text.split()
    if not toks:
        raise SparFormatError("empty file")
    try:
        n = int(toks[0])
    except ValueError as exc:
        raise SparFormatError("first token must be the dimension") from exc
    need = 1 + n + n * n
    if len(toks) != need:
        raise SparFormatError(f"expected {need} tokens for n={n}, got {len(toks)}")
    vals = np.array([float(t) for t in toks[1:]], dtype=float)
    f = vals[:n]
    Q = vals[n:].reshape(n, n)
    return BoxQpInstance(Q=Q, f=f)


def dump_boxqp(inst: BoxQpInstance) -> str:
    lines = [str(inst.n)]
    lines.append(" ".join(repr(v) for v in inst.f.tolist()))
    for row in inst.Q:
        lines.append(" ".join(repr(v) for v in row.tolist()))
    return "\n".join(lines) + "\n"


def boxqp_to_model(inst: BoxQpInstance) -> ComplexQcqp:
    """Real-flagged QCQP over [0, 1]^n; imaginary parts are pinned to zero."""
    n = inst.n
    Q0 = HermitianMatrix(inst.Q / 2.0, np.zeros((n, n)))
    c0 = ComplexVector(inst.f, np.zeros(n))
    return ComplexQcqp(
        n, [(Q0, c0, 0.0)],
        lb=ComplexVector(np.zeros(n), np.zeros(n)),
        ub=ComplexVector(np.ones(n), np.zeros(n)),
        real_vars=True,
    )
