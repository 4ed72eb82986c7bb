"""Semidefinite relaxation construction and the conic solver interface.

The relaxation of a lifted instance is posed in LMI form: a linear
objective over the tracked entries of the lifted Hermitian matrix (plus any
auxiliary frontend variables), linear rows, second-order cone rows, and one
PSD constraint per clique of the chordal decomposition.  Hermitian blocks
are solved through their real symmetric embedding.  The default backend is
CVXOPT's dense primal-dual interior-point solver (conelp); any conic solver
can be plugged in through the same interface, and programs can be exported
in SDPA sparse format for cross-validation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .cuts import LinearCut
from .model import ComplexQcqp, EntryBounds, quadratic_pattern
from .numerics import (ComplexVector, HermitianMatrix, hermitian_eigenvalues,
                       principal_eigvec)

VarKey = tuple

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

# Built-in interior-point settings: duality-gap stop, feasibility tolerance,
# iteration cap.
IPM_TOL = 1e-7
IPM_MAX_ITERS = 200


class CompletionError(Exception):
    """Clique blocks are inconsistent on a shared separator entry."""

    def __init__(self, clique_a, clique_b, message=""):
        self.clique_a = tuple(clique_a)
        self.clique_b = tuple(clique_b)
        super().__init__(
            f"rank-one completion failed between cliques {self.clique_a} and "
            f"{self.clique_b}: {message}")


# ---------------------------------------------------------------------------
# Clique trees
# ---------------------------------------------------------------------------

@dataclass
class CliqueTree:
    """Maximal cliques of a chordal graph plus a spanning tree over them."""

    n: int
    cliques: list[tuple[int, ...]]
    edges: list[tuple[int, int, tuple[int, ...]]]  # (a, b, separator)

    def __post_init__(self):
        covered = set()
        for c in self.cliques:
            covered.update(c)
        if covered != set(range(self.n)):
            raise ValueError("cliques must cover all indices")
        if len(self.edges) != len(self.cliques) - 1:
            raise ValueError("tree must have exactly k-1 edges")
        if not self._connected():
            raise ValueError("clique tree must be connected")
        if not self.verify_rip():
            raise ValueError("running-intersection property violated")

    def _connected(self) -> bool:
        if len(self.cliques) <= 1:
            return True
        adj = {i: [] for i in range(len(self.cliques))}
        for a, b, _s in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(self.cliques)

    def verify_rip(self) -> bool:
        """Cliques containing any given vertex must induce a subtree."""
        adj = {i: [] for i in range(len(self.cliques))}
        for a, b, _s in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        for v in range(self.n):
            holders = [k for k, c in enumerate(self.cliques) if v in c]
            if len(holders) <= 1:
                continue
            hset = set(holders)
            seen = {holders[0]}
            queue = deque([holders[0]])
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w in hset and w not in seen:
                        seen.add(w)
                        queue.append(w)
            if seen != hset:
                return False
        return True

    def traversal_order(self) -> list[tuple[int, int]]:
        """(clique index, parent index) pairs in BFS order from clique 0."""
        adj = {i: [] for i in range(len(self.cliques))}
        for a, b, _s in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        order = [(0, -1)]
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    order.append((v, u))
                    queue.append(v)
        return order

    def pairs(self) -> list[tuple[int, int]]:
        """All within-clique index pairs (i < j), each tracked once."""
        seen: set[tuple[int, int]] = set()
        out: list[tuple[int, int]] = []
        for c in self.cliques:
            cs = sorted(c)
            for a in range(len(cs)):
                for b in range(a + 1, len(cs)):
                    pr = (cs[a], cs[b])
                    if pr not in seen:
                        seen.add(pr)
                        out.append(pr)
        return sorted(out)


def chordal_decompose(n: int, pattern: set[tuple[int, int]]) -> CliqueTree:
    """Clique tree of a chordal completion of the given sparsity pattern.

    Uses minimum-degree elimination (lowest index on ties) as the fill
    heuristic, collects the elimination cliques, keeps the maximal ones and
    connects them by a maximum-weight spanning tree on separator sizes,
    which realizes the running-intersection property.
    """
    adj: dict[int, set[int]] = {v: set() for v in range(n)}
    for i, j in pattern:
        if i == j:
            continue
        adj[i].add(j)
        adj[j].add(i)
    remaining = set(range(n))
    elim_cliques: list[frozenset[int]] = []
    work = {v: set(nb) for v, nb in adj.items()}
    while remaining:
        v = min(remaining, key=lambda u: (len(work[u] & remaining), u))
        nbrs = sorted(work[v] & remaining)
        elim_cliques.append(frozenset([v] + nbrs))
        for a in nbrs:
            for b in nbrs:
                if a != b:
                    work[a].add(b)
        for a in nbrs:
            work[a].discard(v)
        remaining.discard(v)

    maximal: list[frozenset[int]] = []
    for c in sorted(elim_cliques, key=lambda c: (-len(c), sorted(c))):
        if not any(c <= m for m in maximal):
            maximal.append(c)
    cliques = sorted(tuple(sorted(c)) for c in maximal)

    # Prim's algorithm on separator weight, deterministic tie-breaks; zero
    # weights bridge disconnected components.
    k = len(cliques)
    edges: list[tuple[int, int, tuple[int, ...]]] = []
    if k > 1:
        in_tree = {0}
        sets = [set(c) for c in cliques]
        while len(in_tree) < k:
            best = None
            for a in sorted(in_tree):
                for b in range(k):
                    if b in in_tree:
                        continue
                    w = len(sets[a] & sets[b])
                    cand = (w, -a, -b)
                    if best is None or cand > best[0]:
                        best = (cand, a, b)
            _w, a, b = best
            sep = tuple(sorted(sets[a] & sets[b]))
            edges.append((a, b, sep))
            in_tree.add(b)
    return CliqueTree(n, cliques, edges)


def rank_one_complete(ct: CliqueTree, blocks: list[HermitianMatrix],
                      tol: float | None = 1e-6) -> ComplexVector:
    """Reconstruct x from rank-one clique blocks, unique up to global phase.

    Walks the clique tree from its first clique; each block contributes
    sqrt(lambda_1) times its principal eigenvector, rotated by a complex
    phase so that the entry shared with already-set indices agrees.  With
    ``tol=None`` the consistency checks are skipped (best-effort mode used
    by the rounding heuristic on blocks that are only approximately
    rank one).
    """
    if len(blocks) != len(ct.cliques):
        raise ValueError("one block per clique required")
    x = np.zeros(ct.n, dtype=complex)
    known = np.zeros(ct.n, dtype=bool)
    setter = [-1] * ct.n
    for ci, _parent in ct.traversal_order():
        members = list(ct.cliques[ci])
        X = blocks[ci]
        if X.n != len(members):
            raise ValueError("block size does not match clique size")
        lam, d = principal_eigvec(X)
        v = np.sqrt(max(lam, 0.0)) * d.to_complex()
        scale = 1.0 + abs(X.trace())
        shared = [k for k, g in enumerate(members) if known[g]]
        if tol is not None:
            for k in shared:
                if abs(abs(x[members[k]]) - abs(v[k])) > tol * scale:
                    raise CompletionError(
                        ct.cliques[setter[members[k]]], ct.cliques[ci],
                        f"magnitude mismatch at index {members[k]}")
        phase = 1.0 + 0.0j
        if shared:
            m = max(shared, key=lambda k: (abs(x[members[k]]), -k))
            if abs(x[members[m]]) > 0.0 and abs(v[m]) > 0.0:
                phase = (x[members[m]] / v[m])
                phase /= abs(phase)
        v = v * phase
        for k, g in enumerate(members):
            if not known[g]:
                x[g] = v[k]
                known[g] = True
                setter[g] = ci
    if tol is not None:
        for ci, c in enumerate(ct.cliques):
            sub = x[list(c)]
            resid = np.abs(np.outer(sub, sub.conj()) - blocks[ci].to_complex()).max()
            if resid > max(tol, 1e-6) * (1.0 + abs(blocks[ci].trace())):
                raise CompletionError(c, c, f"reconstruction residual {resid:.2e}")
    return ComplexVector.from_complex(x)


# ---------------------------------------------------------------------------
# Conic programs
# ---------------------------------------------------------------------------

class ConicProgram:
    """Linear objective and conic constraints over named scalar variables.

    Variables are keyed by tuples: ``("W", i, j)`` / ``("T", i, j)`` with
    i <= j for lifted entries (overlapping PSD blocks therefore share the
    same variable by construction), and arbitrary tuples for auxiliaries.
    Pinned entries (like the homogenizing W_00 = 1) live in ``fixed``.
    """

    def __init__(self):
        self._index: dict[VarKey, int] = {}
        self.keys: list[VarKey] = []
        self.fixed: dict[VarKey, float] = {}
        self.obj_terms: dict[int, float] = {}
        self.obj_const: float = 0.0
        self.eqs: list[tuple[dict[int, float], float]] = []
        self.ineqs: list[tuple[dict[int, float], float]] = []
        self.socs: list[list[tuple[dict[int, float], float]]] = []
        self.psd_blocks: list[tuple[tuple[int, ...], bool]] = []

    # -- variables ----------------------------------------------------------

    def add_variable(self, key: VarKey) -> int:
        if key in self._index or key in self.fixed:
            raise ValueError(f"variable {key} already defined")
        self._index[key] = len(self.keys)
        self.keys.append(key)
        return self._index[key]

    def var(self, key: VarKey) -> int:
        return self._index[key]

    def has_var(self, key: VarKey) -> bool:
        return key in self._index

    def pin(self, key: VarKey, value: float) -> None:
        self.fixed[key] = value

    @property
    def nvar(self) -> int:
        return len(self.keys)

    def entry_expr(self, kind: str, i: int, j: int) -> tuple[dict[int, float], float]:
        """Affine expression (terms, const) for lifted entry W_ij or T_ij."""
        if kind == "T" and i == j:
            return {}, 0.0
        sign = 1.0
        if i > j:
            i, j = j, i
            if kind == "T":
                sign = -1.0
        key = (kind, i, j)
        if key in self.fixed:
            return {}, sign * self.fixed[key]
        if key in self._index:
            return {self._index[key]: sign}, 0.0
        if kind == "T":
            return {}, 0.0  # real instance: T vanishes structurally
        raise KeyError(f"entry {key} is not tracked")

    # -- constraints ---------------------------------------------------------

    def set_objective(self, terms: dict[int, float], const: float = 0.0) -> None:
        self.obj_terms = dict(terms)
        self.obj_const = const

    def add_eq(self, terms: dict[int, float], rhs: float) -> None:
        self.eqs.append((dict(terms), rhs))

    def add_ineq(self, terms: dict[int, float], rhs: float) -> None:
        """sum(terms) <= rhs"""
        self.ineqs.append((dict(terms), rhs))

    def add_soc(self, rows: list[tuple[dict[int, float], float]]) -> None:
        """rows[0] >= || rows[1:] ||_2"""
        if len(rows) < 2:
            raise ValueError("SOC block needs at least two rows")
        self.socs.append([(dict(t), c) for t, c in rows])

    def add_psd_block(self, indices: tuple[int, ...], hermitian: bool = True) -> None:
        """Demand the (W + iT) submatrix on the given lifted indices be PSD."""
        self.psd_blocks.append((tuple(indices), hermitian))

    # -- assembly helpers ----------------------------------------------------

    def _block_stamps(self, indices: tuple[int, ...], hermitian: bool):
        """Constant matrix and per-variable stamps of a PSD block.

        Hermitian blocks are realized through the real symmetric embedding
        [[W, -T], [T, W]] of size 2k; real blocks use W directly.
        """
        k = len(indices)
        size = 2 * k if hermitian else k
        const = np.zeros((size, size))
        stamps: dict[int, np.ndarray] = {}

        def stamp(var, mat):
            if var not in stamps:
                stamps[var] = np.zeros((size, size))
            stamps[var] += mat

        for a in range(k):
            for b in range(a, k):
                wt, wc = self.entry_expr("W", indices[a], indices[b])
                base = np.zeros((size, size))
                base[a, b] = base[b, a] = 1.0
                if hermitian:
                    base[k + a, k + b] = base[k + b, k + a] = 1.0
                const += wc * base
                for var, coef in wt.items():
                    stamp(var, coef * base)
                if hermitian and a != b:
                    tt, tc = self.entry_expr("T", indices[a], indices[b])
                    tbase = np.zeros((size, size))
                    # embedding carries -T in the upper-right block
                    tbase[a, k + b] = tbase[k + b, a] = -1.0
                    tbase[b, k + a] = tbase[k + a, b] = 1.0
                    const += tc * tbase
                    for var, coef in tt.items():
                        stamp(var, coef * tbase)
        return const, stamps


@dataclass
class RelaxationSolution:
    """Values of the lifted entries at a conic optimum, with status."""

    status: str
    objective: float | None = None
    values: dict[VarKey, float] = field(default_factory=dict)

    def entry(self, kind: str, i: int, j: int) -> float:
        if kind == "T" and i == j:
            return 0.0
        sign = 1.0
        if i > j:
            i, j = j, i
            if kind == "T":
                sign = -1.0
        return sign * self.values.get((kind, i, j), 0.0)

    def pair_values(self, i: int, j: int) -> tuple[float, float, float, float]:
        return (self.entry("W", i, i), self.entry("W", j, j),
                self.entry("W", i, j), self.entry("T", i, j))

    def block(self, indices) -> HermitianMatrix:
        idx = list(indices)
        k = len(idx)
        W = np.zeros((k, k))
        T = np.zeros((k, k))
        for a in range(k):
            for b in range(k):
                W[a, b] = self.entry("W", idx[a], idx[b])
                T[a, b] = self.entry("T", idx[a], idx[b])
        return HermitianMatrix(W, T)


def solve_conic(cp: ConicProgram, backend: str = "cvxopt") -> RelaxationSolution:
    """Solve a conic program; statuses: optimal / infeasible / numerical-failure."""
    if backend != "cvxopt":
        raise ValueError(f"unknown backend {backend!r}")
    return _solve_cvxopt(cp)


def _solve_cvxopt(cp: ConicProgram) -> RelaxationSolution:
    from cvxopt import matrix, solvers

    n = cp.nvar
    c = np.zeros(n)
    for var, coef in cp.obj_terms.items():
        c[var] = coef

    G_rows: list[np.ndarray] = []
    h_rows: list[float] = []
    dims = {"l": len(cp.ineqs), "q": [], "s": []}
    for terms, rhs in cp.ineqs:
        row = np.zeros(n)
        for var, coef in terms.items():
            row[var] += coef
        G_rows.append(row)
        h_rows.append(rhs)
    for rows in cp.socs:
        dims["q"].append(len(rows))
        for terms, const in rows:
            row = np.zeros(n)
            for var, coef in terms.items():
                row[var] += coef
            G_rows.append(-row)
            h_rows.append(const)
    for indices, hermitian in cp.psd_blocks:
        const, stamps = cp._block_stamps(indices, hermitian)
        size = const.shape[0]
        dims["s"].append(size)
        block = np.zeros((size * size, n))
        for var, mat in stamps.items():
            block[:, var] = -mat.reshape(-1, order="F")
        G_rows.extend(block)
        h_rows.extend(const.reshape(-1, order="F"))

    G = matrix(np.asarray(G_rows, dtype=float))
    h = matrix(np.asarray(h_rows, dtype=float))
    A = b = None
    if cp.eqs:
        Am = np.zeros((len(cp.eqs), n))
        bm = np.zeros(len(cp.eqs))
        for r, (terms, rhs) in enumerate(cp.eqs):
            for var, coef in terms.items():
                Am[r, var] += coef
            bm[r] = rhs
        A, b = matrix(Am), matrix(bm)

    opts = {"show_progress": False, "maxiters": IPM_MAX_ITERS,
            "abstol": IPM_TOL, "reltol": IPM_TOL, "feastol": IPM_TOL}
    try:
        if A is not None:
            sol = solvers.conelp(matrix(c), G, h, dims, A=A, b=b, options=opts)
        else:
            sol = solvers.conelp(matrix(c), G, h, dims, options=opts)
    except (ValueError, ZeroDivisionError, ArithmeticError):
        return RelaxationSolution(status=NUMERICAL_FAILURE)

    status = sol["status"]
    if status == "optimal":
        x = np.array(sol["x"]).ravel()
        values = {key: float(x[k]) for k, key in enumerate(cp.keys)}
        values.update(cp.fixed)
        obj = float(c @ x) + cp.obj_const
        return RelaxationSolution(status=OPTIMAL, objective=obj, values=values)
    if status == "primal infeasible":
        return RelaxationSolution(status=INFEASIBLE)
    return RelaxationSolution(status=NUMERICAL_FAILURE)


# ---------------------------------------------------------------------------
# CSDP relaxation of a generic complex QCQP
# ---------------------------------------------------------------------------

def lifted_cliques(p: ComplexQcqp, decompose: bool = True) -> CliqueTree:
    """Clique tree over lifted indices 0..n, homogenizer joined to every clique."""
    n = p.n
    if not decompose:
        return CliqueTree(n + 1, [tuple(range(n + 1))], [])
    pattern = {(a + 1, b + 1) for a, b in quadratic_pattern(p)}
    base = chordal_decompose(n + 1, pattern | {(0, i) for i in range(1, n + 1)})
    return base


def _objective_terms(cp: ConicProgram, Q, cvec, real_vars: bool):
    terms: dict[int, float] = {}
    const = 0.0

    def acc(expr_const, expr_terms, coef):
        nonlocal const
        const += coef * expr_const
        for var, v in expr_terms.items():
            terms[var] = terms.get(var, 0.0) + coef * v

    n = Q.n
    for a in range(n):
        if Q.W[a, a] != 0.0:
            t, cst = cp.entry_expr("W", a + 1, a + 1)
            acc(cst, t, Q.W[a, a])
        for b in range(a + 1, n):
            if Q.W[a, b] != 0.0:
                t, cst = cp.entry_expr("W", a + 1, b + 1)
                acc(cst, t, 2.0 * Q.W[a, b])
            if not real_vars and Q.T[a, b] != 0.0:
                t, cst = cp.entry_expr("T", a + 1, b + 1)
                acc(cst, t, 2.0 * Q.T[a, b])
    for a in range(n):
        if cvec.re[a] != 0.0:
            t, cst = cp.entry_expr("W", 0, a + 1)
            acc(cst, t, cvec.re[a])
        if not real_vars and cvec.im[a] != 0.0:
            # Im(x_a) = -T_{0,a+1}
            t, cst = cp.entry_expr("T", 0, a + 1)
            acc(cst, t, -cvec.im[a])
    return terms, const


def add_entry_bound_rows(cp: ConicProgram, eb: EntryBounds,
                         pairs: list[tuple[int, int]], diag: list[int],
                         real_vars: bool) -> None:
    """Diagonal interval rows, ratio rows and W_ij >= 0 for tracked pairs."""
    for i in diag:
        lo, hi = eb.interval((i, i))
        t, cst = cp.entry_expr("W", i, i)
        if not t:
            continue
        if np.isfinite(hi):
            cp.add_ineq(t, hi - cst)
        if np.isfinite(lo):
            cp.add_ineq({v: -c for v, c in t.items()}, cst - lo)
    for i, j in pairs:
        lo, hi = eb.interval((i, j))
        if not (np.isfinite(lo) and np.isfinite(hi)):
            continue  # pair carries no valid phase window; PSD rows only
        wt, wc = cp.entry_expr("W", i, j)
        cp.add_ineq({v: -c for v, c in wt.items()}, wc)  # W_ij >= 0
        if real_vars:
            continue
        tt, tc = cp.entry_expr("T", i, j)
        # L_ij W_ij - T_ij <= 0  and  T_ij - U_ij W_ij <= 0
        row = {v: lo * c for v, c in wt.items()}
        for v, c in tt.items():
            row[v] = row.get(v, 0.0) - c
        cp.add_ineq(row, tc - lo * wc)
        row = {v: c for v, c in tt.items()}
        for v, c in wt.items():
            row[v] = row.get(v, 0.0) - hi * c
        cp.add_ineq(row, hi * wc - tc)


def add_cut_rows(cp: ConicProgram, cuts: list[LinearCut], real_vars: bool) -> None:
    """Append LinearCut rows (coeffs . terms + const >= 0) as <= inequalities."""
    for cut in cuts:
        i, j = cut.pair
        mapping = {
            "wii": ("W", i, i, 1.0), "wjj": ("W", j, j, 1.0),
            "wij": ("W", i, j, 1.0), "tij": ("T", i, j, 1.0),
            "wi": ("W", 0, i, 1.0), "wj": ("W", 0, j, 1.0),
            "ti": ("T", 0, i, -1.0), "tj": ("T", 0, j, -1.0),
        }
        terms: dict[int, float] = {}
        const = cut.const
        for key, coef in cut.coeffs.items():
            kind, a, b, sign = mapping[key]
            if real_vars and kind == "T":
                continue
            t, cst = cp.entry_expr(kind, a, b)
            const += coef * sign * cst
            for var, v in t.items():
                terms[var] = terms.get(var, 0.0) + coef * sign * v
        cp.add_ineq({v: -c for v, c in terms.items()}, const)


def build_csdp(p: ComplexQcqp, eb: EntryBounds, cuts: list[LinearCut],
               ct: CliqueTree | None = None) -> ConicProgram:
    """SDP relaxation of a complex QCQP with entry bounds and supplied cuts."""
    n = p.n
    if ct is None:
        ct = lifted_cliques(p, decompose=False)
    cp = ConicProgram()
    cp.pin(("W", 0, 0), 1.0)
    pairs = ct.pairs()
    for i in range(1, n + 1):
        cp.add_variable(("W", i, i))
    for i, j in pairs:
        cp.add_variable(("W", i, j))
        if not p.real_vars:
            cp.add_variable(("T", i, j))

    Q0, c0, b0 = p.constraints[0]
    terms, const = _objective_terms(cp, Q0, c0, p.real_vars)
    cp.set_objective(terms, const + b0)
    for Q, cvec, b in p.constraints[1:]:
        terms, const = _objective_terms(cp, Q, cvec, p.real_vars)
        cp.add_ineq(terms, -b - const)

    # variable rectangle bounds through the homogenizing row
    for a in range(n):
        t, cst = cp.entry_expr("W", 0, a + 1)
        cp.add_ineq(t, p.ub.re[a] - cst)
        cp.add_ineq({v: -c for v, c in t.items()}, cst - p.lb.re[a])
        if not p.real_vars:
            t, cst = cp.entry_expr("T", 0, a + 1)
            # Im(x_a) = -T_{0,a+1}
            cp.add_ineq({v: -c for v, c in t.items()}, p.ub.im[a] + cst)
            cp.add_ineq(t, -p.lb.im[a] - cst)

    add_entry_bound_rows(cp, eb, pairs, list(range(1, n + 1)), p.real_vars)
    add_cut_rows(cp, cuts, p.real_vars)
    for c in ct.cliques:
        cp.add_psd_block(c, hermitian=not p.real_vars)
    return cp


# ---------------------------------------------------------------------------
# SDPA sparse export (LMI form: min c'x s.t. sum x_i F_i - F0 >= 0)
# ---------------------------------------------------------------------------

def export_sdpa(cp: ConicProgram) -> str:
    """Serialize the program in SDPA sparse (.dat-s) format.

    Block order: PSD blocks first (clique order, real embedding), then one
    arrow block per SOC row group, then a single diagonal block holding all
    linear rows (inequalities as slacks, equalities as opposing pairs).
    The objective constant is recorded in a comment; SDPA objectives are
    linear homogeneous.
    """
    n = cp.nvar
    blocks: list[dict] = []

    for indices, hermitian in cp.psd_blocks:
        const, stamps = cp._block_stamps(indices, hermitian)
        blocks.append({"size": const.shape[0], "const": const, "stamps": stamps})
    for rows in cp.socs:
        k = len(rows)
        size = k
        const = np.zeros((size, size))
        stamps: dict[int, np.ndarray] = {}

        def stamp(var, mat, stamps=stamps):
            if var not in stamps:
                stamps[var] = np.zeros(mat.shape)
            stamps[var] += mat

        t_terms, t_const = rows[0]
        for d in range(size):
            const[d, d] = t_const
            for var, coef in t_terms.items():
                m = np.zeros((size, size))
                m[d, d] = coef
                stamp(var, m)
        for r, (terms, cc) in enumerate(rows[1:], start=1):
            const[0, r] = const[r, 0] = cc
            for var, coef in terms.items():
                m = np.zeros((size, size))
                m[0, r] = m[r, 0] = coef
                stamp(var, m)
        blocks.append({"size": size, "const": const, "stamps": stamps})

    lin_rows: list[tuple[dict[int, float], float]] = []
    for terms, rhs in cp.ineqs:
        lin_rows.append(({v: -c for v, c in terms.items()}, -rhs))  # rhs - terms >= 0
    for terms, rhs in cp.eqs:
        lin_rows.append(({v: -c for v, c in terms.items()}, -rhs))
        lin_rows.append((dict(terms), rhs))
    if lin_rows:
        size = len(lin_rows)
        const = np.zeros((size, size))
        stamps = {}
        for r, (terms, cc) in enumerate(lin_rows):
            const[r, r] = cc
            for var, coef in terms.items():
                if var not in stamps:
                    stamps[var] = np.zeros((size, size))
                stamps[var][r, r] += coef
        blocks.append({"size": -size, "const": const, "stamps": stamps})

    out = [f'"objective constant: {cp.obj_const!r}"']
    out.append(f"{n} = mDIM")
    out.append(f"{len(blocks)} = nBLOCK")
    out.append(" ".join(str(b["size"]) for b in blocks) + " = bLOCKsTRUCT")
    cvec = np.zeros(n)
    for var, coef in cp.obj_terms.items():
        cvec[var] = coef
    out.append(" ".join(repr(float(v)) for v in cvec))

    def emit(matno, blkno, M):
        lines = []
        size = abs(M.shape[0])
        for r in range(size):
            for cidx in range(r, size):
                v = float(M[r, cidx])
                if v != 0.0:
                    lines.append(f"{matno} {blkno} {r + 1} {cidx + 1} {v!r}")
        return lines

    for bi, blk in enumerate(blocks, start=1):
        # F0 = -const so that sum x_i F_i - F0 = const + sum x_i stamps
        out.extend(emit(0, bi, -blk["const"]))
    for var in range(n):
        for bi, blk in enumerate(blocks, start=1):
            if var in blk["stamps"]:
                out.extend(emit(var + 1, bi, blk["stamps"][var]))
    return "\n".join(out) + "\n"


def psd_violation(sol: RelaxationSolution, cp: ConicProgram) -> float:
    """Worst eigenvalue deficit over all PSD blocks of a solution (0 if PSD)."""
    worst = 0.0
    for indices, _h in cp.psd_blocks:
        lam = hermitian_eigenvalues(sol.block(indices))[0]
        worst = max(worst, -lam)
    return worst
