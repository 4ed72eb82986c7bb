"""AC optimal power flow frontend.

Parses MATPOWER case files (bus/gen/branch + polynomial gencost), builds
the standard branch-model admittance matrices, and assembles the lifted
dispatch problem over the voltage outer-product entries: power-flow rows
linear in (W, T), voltage-magnitude diagonal bounds, phase-angle ratio
bounds per branch, second-order-cone apparent-power line limits, per-clique
PSD blocks from the chordal decomposition of the network graph, and a
quadratic generation cost handled through epigraph cones.  The rank
condition is left to the search.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import cuts as cuts_mod
from . import tighten as tighten_mod
from .model import EntryBounds
from .numerics import ComplexVector
from .relax import (CliqueTree, ConicProgram, add_cut_rows,
                    add_entry_bound_rows, chordal_decompose, rank_one_complete)


class ParseError(Exception):
    pass


@dataclass
class Bus:
    bus_id: int
    btype: int
    pd: float  # per-unit
    qd: float
    gs: float
    bs: float
    vmax: float
    vmin: float


@dataclass
class Gen:
    bus: int  # bus index, not id
    pmin: float
    pmax: float
    qmin: float
    qmax: float
    c2: float  # per-unit cost: cost(p) = c2 p^2 + c1 p + c0, p in pu
    c1: float
    c0: float


@dataclass
class Branch:
    f: int  # bus indices
    t: int
    r: float
    x: float
    b: float
    rate: float  # per-unit apparent power limit; 0 means unlimited
    tap: float
    shift_deg: float
    angmin_deg: float
    angmax_deg: float


@dataclass
class PowerCase:
    name: str
    base_mva: float
    buses: list[Bus]
    gens: list[Gen]
    branches: list[Branch]

    def __post_init__(self):
        for g in self.gens:
            if g.c2 < 0.0:
                raise ParseError("negative quadratic cost coefficient")
        for b in self.buses:
            if b.vmin > b.vmax:
                raise ParseError(f"bus {b.bus_id}: vmin > vmax")
        if not self._connected():
            raise ParseError("network is not connected")

    def _connected(self) -> bool:
        n = len(self.buses)
        if n <= 1:
            return True
        adj = {i: set() for i in range(n)}
        for br in self.branches:
            adj[br.f].add(br.t)
            adj[br.t].add(br.f)
        seen = {0}
        frontier = [0]
        while frontier:
            u = frontier.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return len(seen) == n

    @property
    def n(self) -> int:
        return len(self.buses)

    def gens_at(self, bus: int) -> list[Gen]:
        return [g for g in self.gens if g.bus == bus]


_MATRIX_RE = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\];", re.S)
_SCALAR_RE = re.compile(r"mpc\.(\w+)\s*=\s*([^;\[]+);")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%")[0] for line in text.splitlines())


def _parse_matrix(body: str, name: str) -> list[list[float]]:
    rows = []
    for lineno, raw in enumerate(re.split(r"[;\n]", body), start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            rows.append([float(tok) for tok in raw.split()])
        except ValueError as exc:
            raise ParseError(f"{name} row {lineno}: {exc}") from exc
    return rows


def parse_matpower(text: str) -> PowerCase:
    """Parse the bus/gen/branch/gencost subset of a MATPOWER case file."""
    clean = _strip_comments(text)
    name_m = re.search(r"function\s+mpc\s*=\s*(\w+)", clean)
    name = name_m.group(1) if name_m else "case"
    matrices = {m.group(1): _parse_matrix(m.group(2), m.group(1))
                for m in _MATRIX_RE.finditer(clean)}
    scalars = {m.group(1): m.group(2).strip() for m in _SCALAR_RE.finditer(clean)}
    for required in ("bus", "gen", "branch"):
        if required not in matrices:
            raise ParseError(f"missing mpc.{required}")
    if "gencost" not in matrices:
        raise ParseError("missing mpc.gencost")
    base = float(scalars.get("baseMVA", "100"))

    buses = []
    id_to_index = {}
    for row in matrices["bus"]:
        if len(row) < 13:
            raise ParseError("bus row needs 13 columns")
        bus_id = int(row[0])
        id_to_index[bus_id] = len(buses)
        buses.append(Bus(bus_id=bus_id, btype=int(row[1]),
                         pd=row[2] / base, qd=row[3] / base,
                         gs=row[4] / base, bs=row[5] / base,
                         vmax=row[11], vmin=row[12]))

    gencost = matrices["gencost"]
    if len(gencost) < len(matrices["gen"]):
        raise ParseError("gencost must cover every generator")
    gens = []
    for grow, crow in zip(matrices["gen"], gencost):
        if len(grow) < 10:
            raise ParseError("gen row needs 10 columns")
        if int(grow[7]) <= 0:
            continue  # out of service
        if int(crow[0]) != 2:
            raise ParseError("only polynomial (model 2) gencost is supported")
        ncost = int(crow[3])
        coeffs = crow[4:4 + ncost]
        if ncost == 3:
            c2, c1, c0 = coeffs
        elif ncost == 2:
            c2, (c1, c0) = 0.0, coeffs
        elif ncost == 1:
            c2, c1, c0 = 0.0, 0.0, coeffs[0]
        else:
            raise ParseError("gencost must have 1-3 polynomial coefficients")
        gens.append(Gen(bus=id_to_index[int(grow[0])],
                        pmin=grow[9] / base, pmax=grow[8] / base,
                        qmin=grow[4] / base, qmax=grow[3] / base,
                        c2=c2 * base * base, c1=c1 * base, c0=c0))

    branches = []
    for row in matrices["branch"]:
        if len(row) < 13:
            raise ParseError("branch row needs 13 columns")
        if int(row[10]) <= 0:
            continue  # out of service
        if row[2] == 0.0 and row[3] == 0.0:
            raise ParseError("zero-impedance branch is not supported")
        branches.append(Branch(f=id_to_index[int(row[0])], t=id_to_index[int(row[1])],
                               r=row[2], x=row[3], b=row[4],
                               rate=row[5] / base, tap=row[8],
                               shift_deg=row[9], angmin_deg=row[11],
                               angmax_deg=row[12]))
    return PowerCase(name=name, base_mva=base, buses=buses, gens=gens,
                     branches=branches)


def serialize_matpower(pc: PowerCase) -> str:
    """Emit the supported-field subset back as MATPOWER case text."""
    base = pc.base_mva
    out = [f"function mpc = {pc.name}", "mpc.version = '2';",
           f"mpc.baseMVA = {base!r};"]
    out.append("mpc.bus = [")
    for b in pc.buses:
        out.append(f"\t{b.bus_id}\t{b.btype}\t{b.pd * base!r}\t{b.qd * base!r}\t"
                   f"{b.gs * base!r}\t{b.bs * base!r}\t1\t1\t0\t1\t1\t"
                   f"{b.vmax!r}\t{b.vmin!r};")
    out.append("];")
    out.append("mpc.gen = [")
    for g in pc.gens:
        out.append(f"\t{pc.buses[g.bus].bus_id}\t0\t0\t{g.qmax * base!r}\t"
                   f"{g.qmin * base!r}\t1\t{base!r}\t1\t{g.pmax * base!r}\t"
                   f"{g.pmin * base!r};")
    out.append("];")
    out.append("mpc.branch = [")
    for br in pc.branches:
        out.append(f"\t{pc.buses[br.f].bus_id}\t{pc.buses[br.t].bus_id}\t{br.r!r}\t"
                   f"{br.x!r}\t{br.b!r}\t{br.rate * base!r}\t0\t0\t{br.tap!r}\t"
                   f"{br.shift_deg!r}\t1\t{br.angmin_deg!r}\t{br.angmax_deg!r};")
    out.append("];")
    out.append("mpc.gencost = [")
    for g in pc.gens:
        out.append(f"\t2\t0\t0\t3\t{g.c2 / base / base!r}\t{g.c1 / base!r}\t{g.c0!r};")
    out.append("];")
    return "\n".join(out) + "\n"


@dataclass
class Admittances:
    G: np.ndarray
    B: np.ndarray
    Gf: np.ndarray
    Bf: np.ndarray
    Gt: np.ndarray
    Bt: np.ndarray
    Cf: np.ndarray
    Ct: np.ndarray

    @property
    def Y(self) -> np.ndarray:
        return self.G + 1j * self.B

    @property
    def Yf(self) -> np.ndarray:
        return self.Gf + 1j * self.Bf

    @property
    def Yt(self) -> np.ndarray:
        return self.Gt + 1j * self.Bt


def build_admittances(pc: PowerCase) -> Admittances:
    """Standard MATPOWER branch model with charging, taps and phase shift."""
    n = pc.n
    k = len(pc.branches)
    Y = np.zeros((n, n), dtype=complex)
    Yf = np.zeros((k, n), dtype=complex)
    Yt = np.zeros((k, n), dtype=complex)
    Cf = np.zeros((k, n))
    Ct = np.zeros((k, n))
    for r, br in enumerate(pc.branches):
        if br.r == 0.0 and br.x == 0.0:
            raise ParseError("zero-impedance branch")
        ys = 1.0 / complex(br.r, br.x)
        bc = 1j * br.b / 2.0
        tap = br.tap if br.tap != 0.0 else 1.0
        tap_c = tap * np.exp(1j * math.radians(br.shift_deg))
        yff = (ys + bc) / (tap * tap)
        yft = -ys / np.conj(tap_c)
        ytf = -ys / tap_c
        ytt = ys + bc
        Y[br.f, br.f] += yff
        Y[br.f, br.t] += yft
        Y[br.t, br.f] += ytf
        Y[br.t, br.t] += ytt
        Yf[r, br.f] = yff
        Yf[r, br.t] = yft
        Yt[r, br.f] = ytf
        Yt[r, br.t] = ytt
        Cf[r, br.f] = 1.0
        Ct[r, br.t] = 1.0
    for i, b in enumerate(pc.buses):
        Y[i, i] += complex(b.gs, b.bs)
    return Admittances(G=Y.real.copy(), B=Y.imag.copy(),
                       Gf=Yf.real.copy(), Bf=Yf.imag.copy(),
                       Gt=Yt.real.copy(), Bt=Yt.imag.copy(), Cf=Cf, Ct=Ct)


DEFAULT_ANGLE_DEG = 30.0


def _angle_bounds(br: Branch, default_deg: float) -> tuple[float, float]:
    """Branch angle-difference bounds in degrees; fall back to the default.

    MATPOWER encodes 'unconstrained' as (0, 0) or +-360; bounds at or past
    90 degrees cannot be carried as tangents, so they also fall back.
    """
    lo, hi = br.angmin_deg, br.angmax_deg
    if lo == 0.0 and hi == 0.0:
        return -default_deg, default_deg
    if lo <= -90.0 or hi >= 90.0:
        return -default_deg, default_deg
    if default_deg >= 90.0:
        raise ValueError("default angle bound must be below 90 degrees")
    return lo, hi


class AcopfProblem:
    """Driver-protocol adapter for the lifted ACOPF model."""

    real_vars = False

    def __init__(self, pc: PowerCase, default_angle_deg: float = DEFAULT_ANGLE_DEG,
                 decompose: bool = True):
        self.case = pc
        self.adm = build_admittances(pc)
        n = pc.n
        pattern = {(min(br.f, br.t), max(br.f, br.t)) for br in pc.branches}
        if decompose:
            self.clique_tree: CliqueTree = chordal_decompose(n, pattern)
        else:
            self.clique_tree = CliqueTree(n, [tuple(range(n))], [])
        self.tracked_pairs = self.clique_tree.pairs()
        self._triangles = [tri for tri in itertools.combinations(range(n), 3)
                           if all(tuple(sorted(pr)) in set(self.tracked_pairs)
                                  for pr in itertools.combinations(tri, 2))]
        # per-branch angle windows (radians) for evaluation, canonical pair order
        self._ratio: dict[tuple[int, int], tuple[float, float]] = {}
        self._angle_windows: list[tuple[int, int, float, float]] = []
        for br in pc.branches:
            lo_d, hi_d = _angle_bounds(br, default_angle_deg)
            lo, hi = math.radians(lo_d), math.radians(hi_d)
            self._angle_windows.append((br.f, br.t, lo, hi))
            i, j = min(br.f, br.t), max(br.f, br.t)
            if (br.f, br.t) != (i, j):
                lo, hi = -hi, -lo
            cur = self._ratio.get((i, j), (-math.inf, math.inf))
            self._ratio[(i, j)] = (max(cur[0], math.tan(lo)),
                                   min(cur[1], math.tan(hi)))
        self.gens_by_bus = [[] for _ in range(n)]
        for gi, g in enumerate(pc.gens):
            self.gens_by_bus[g.bus].append(gi)
        self._ref = next((i for i, b in enumerate(pc.buses) if b.btype == 3), 0)

    # -- bounds ---------------------------------------------------------------

    def initial_bounds(self) -> EntryBounds:
        n = self.case.n
        eb = EntryBounds.unbounded(n)
        for i, b in enumerate(self.case.buses):
            eb.set(i, i, b.vmin**2, b.vmax**2)
        for pr, (lo, hi) in sorted(self._ratio.items()):
            eb.set(pr[0], pr[1], lo, hi)
        return eb

    def tighten(self, eb: EntryBounds, changed=None) -> EntryBounds | str:
        out = eb.copy()
        for tri in self._triangles:
            out = tighten_mod.tighten_cycle(list(tri), out)
        return out if out.is_valid() else "infeasible"

    # -- cuts -----------------------------------------------------------------

    def cuts_for(self, eb: EntryBounds, variant: str) -> list:
        if variant == "sdp":
            return []
        out = []
        if variant == "sdp+cvi":
            for pr in self.tracked_pairs:
                out.extend(cuts_mod.generate_cvi(pr, eb))
            return out
        if variant != "sdp+rlt":
            raise ValueError(f"unknown relaxation variant {variant!r}")
        # no linear voltage components exist in this lifted space, so the
        # complex-to-real RLT cuts degrade to interval box cuts on W/T
        for i, j in self.tracked_pairs:
            vi = self.case.buses[i].vmax
            vj = self.case.buses[j].vmax
            ri = cuts_mod.Rectangle(-vi, vi, -vi, vi)
            rj = cuts_mod.Rectangle(-vj, vj, -vj, vj)
            out.extend(cuts_mod.generate_rlt_complex((i, j), ri, rj,
                                                     with_linear_terms=False))
        return out

    # -- relaxation -----------------------------------------------------------

    def _injection_terms(self, cp: ConicProgram, Grow, Brow, row_bus: int,
                         reactive: bool):
        """P_i = sum_k (G W + B T); Q_i = sum_k (G T - B W) at the given bus."""
        terms: dict[int, float] = {}
        const = 0.0
        for k in range(len(Grow)):
            g, b = Grow[k], Brow[k]
            if g == 0.0 and b == 0.0:
                continue
            wt, wc = cp.entry_expr("W", row_bus, k)
            tt, tc = cp.entry_expr("T", row_bus, k)
            cw = -b if reactive else g
            ct = g if reactive else b
            const += cw * wc + ct * tc
            for var, coef in wt.items():
                terms[var] = terms.get(var, 0.0) + cw * coef
            for var, coef in tt.items():
                terms[var] = terms.get(var, 0.0) + ct * coef
        return terms, const

    def build_relaxation(self, eb: EntryBounds, cuts: list) -> ConicProgram:
        pc = self.case
        n = pc.n
        cp = ConicProgram()
        for i in range(n):
            cp.add_variable(("W", i, i))
        for i, j in self.tracked_pairs:
            cp.add_variable(("W", i, j))
            cp.add_variable(("T", i, j))
        pvars = [cp.add_variable(("P", i)) for i in range(n)]
        qvars = [cp.add_variable(("Q", i)) for i in range(n)]

        obj: dict[int, float] = {}
        obj_const = 0.0
        for i in range(n):
            terms, const = self._injection_terms(cp, self.adm.G[i], self.adm.B[i],
                                                 i, reactive=False)
            terms[pvars[i]] = terms.get(pvars[i], 0.0) - 1.0
            cp.add_eq(terms, -const)
            terms, const = self._injection_terms(cp, self.adm.G[i], self.adm.B[i],
                                                 i, reactive=True)
            terms[qvars[i]] = terms.get(qvars[i], 0.0) - 1.0
            cp.add_eq(terms, -const)

        for i in range(n):
            bus = pc.buses[i]
            gids = self.gens_by_bus[i]
            if not gids:
                cp.add_eq({pvars[i]: 1.0}, -bus.pd)
                cp.add_eq({qvars[i]: 1.0}, -bus.qd)
                continue
            pg = {}
            qg = {}
            for gi in gids:
                g = pc.gens[gi]
                pg[gi] = cp.add_variable(("pg", gi))
                qg[gi] = cp.add_variable(("qg", gi))
                cp.add_ineq({pg[gi]: 1.0}, g.pmax)
                cp.add_ineq({pg[gi]: -1.0}, -g.pmin)
                cp.add_ineq({qg[gi]: 1.0}, g.qmax)
                cp.add_ineq({qg[gi]: -1.0}, -g.qmin)
                if g.c2 > 0.0:
                    tg = cp.add_variable(("tg", gi))
                    # t >= c2 p^2  as  ||(2 sqrt(c2) p, t - 1)|| <= t + 1
                    cp.add_soc([({tg: 1.0}, 1.0),
                                ({pg[gi]: 2.0 * math.sqrt(g.c2)}, 0.0),
                                ({tg: 1.0}, -1.0)])
                    obj[tg] = obj.get(tg, 0.0) + 1.0
                obj[pg[gi]] = obj.get(pg[gi], 0.0) + g.c1
                obj_const += g.c0
            balance = {v: 1.0 for v in pg.values()}
            balance[pvars[i]] = balance.get(pvars[i], 0.0) - 1.0
            cp.add_eq(balance, bus.pd)
            balance = {v: 1.0 for v in qg.values()}
            balance[qvars[i]] = balance.get(qvars[i], 0.0) - 1.0
            cp.add_eq(balance, bus.qd)

        for r, br in enumerate(pc.branches):
            if br.rate <= 0.0:
                continue
            for tag, Grow, Brow, row_bus in (
                    ("f", self.adm.Gf[r], self.adm.Bf[r], br.f),
                    ("t", self.adm.Gt[r], self.adm.Bt[r], br.t)):
                pf = cp.add_variable(("Pbr", tag, r))
                qf = cp.add_variable(("Qbr", tag, r))
                terms, const = self._injection_terms(cp, Grow, Brow, row_bus,
                                                     reactive=False)
                terms[pf] = terms.get(pf, 0.0) - 1.0
                cp.add_eq(terms, -const)
                terms, const = self._injection_terms(cp, Grow, Brow, row_bus,
                                                     reactive=True)
                terms[qf] = terms.get(qf, 0.0) - 1.0
                cp.add_eq(terms, -const)
                cp.add_soc([({}, br.rate), ({pf: 1.0}, 0.0), ({qf: 1.0}, 0.0)])

        add_entry_bound_rows(cp, eb, self.tracked_pairs, list(range(n)),
                             real_vars=False)
        add_cut_rows(cp, cuts, real_vars=False)
        for c in self.clique_tree.cliques:
            cp.add_psd_block(c, hermitian=True)
        cp.set_objective(obj, obj_const)
        return cp

    # -- primal side ----------------------------------------------------------

    def _dispatch(self, bus: int, target: float) -> tuple[float, float]:
        """Cost-minimal split of the required generation at one bus.

        Returns (cost, violation): the target is clipped into the aggregate
        box; the residual is the violation.
        """
        gids = self.gens_by_bus[bus]
        if not gids:
            return 0.0, abs(target)
        gens = [self.case.gens[k] for k in gids]
        lo = sum(g.pmin for g in gens)
        hi = sum(g.pmax for g in gens)
        viol = max(target - hi, lo - target, 0.0)
        goal = min(max(target, lo), hi)
        if len(gens) == 1:
            g = gens[0]
            return g.c2 * goal**2 + g.c1 * goal + g.c0, viol

        def total(mu):
            out = 0.0
            for g in gens:
                if g.c2 > 0.0:
                    p = (mu - g.c1) / (2.0 * g.c2)
                else:
                    p = g.pmax if mu > g.c1 else g.pmin
                out += min(max(p, g.pmin), g.pmax)
            return out

        lo_mu, hi_mu = -1e9, 1e9
        for _ in range(200):
            mid = 0.5 * (lo_mu + hi_mu)
            if total(mid) < goal:
                lo_mu = mid
            else:
                hi_mu = mid
        mu = 0.5 * (lo_mu + hi_mu)
        cost = 0.0
        acc = 0.0
        parts = []
        for g in gens:
            if g.c2 > 0.0:
                p = (mu - g.c1) / (2.0 * g.c2)
            else:
                p = g.pmax if mu > g.c1 else g.pmin
            p = min(max(p, g.pmin), g.pmax)
            parts.append(p)
            acc += p
        # distribute any residual onto the first generator with slack
        resid = goal - acc
        for k, g in enumerate(gens):
            room = (g.pmax - parts[k]) if resid > 0 else (parts[k] - g.pmin)
            take = min(abs(resid), room) * (1 if resid > 0 else -1)
            parts[k] += take
            resid -= take
            if abs(resid) < 1e-12:
                break
        for g, p in zip(gens, parts):
            cost += g.c2 * p**2 + g.c1 * p + g.c0
        return cost, viol

    def _violations(self, V: np.ndarray) -> tuple[float, list[float]]:
        """Dispatch cost and the list of constraint violations at a voltage vector."""
        pc = self.case
        S = V * np.conj(self.adm.Y @ V)
        viols: list[float] = []
        for i, b in enumerate(pc.buses):
            vm = abs(V[i])
            viols.extend((b.vmin - vm, vm - b.vmax))
        for (f, t, lo, hi) in self._angle_windows:
            d = math.atan2((V[f] * np.conj(V[t])).imag, (V[f] * np.conj(V[t])).real)
            viols.extend((lo - d, d - hi))
        Sf = (self.adm.Cf @ V) * np.conj(self.adm.Yf @ V)
        St = (self.adm.Ct @ V) * np.conj(self.adm.Yt @ V)
        for r, br in enumerate(pc.branches):
            if br.rate > 0.0:
                viols.extend((abs(Sf[r]) - br.rate, abs(St[r]) - br.rate))
        obj = 0.0
        for i, b in enumerate(pc.buses):
            p_req = S[i].real + b.pd
            q_req = S[i].imag + b.qd
            cost, pviol = self._dispatch(i, p_req)
            obj += cost
            viols.append(pviol)
            gids = self.gens_by_bus[i]
            qlo = sum(pc.gens[k].qmin for k in gids)
            qhi = sum(pc.gens[k].qmax for k in gids)
            viols.extend((qlo - q_req, q_req - qhi))
        return obj, viols

    def evaluate(self, x: ComplexVector) -> tuple[float, float]:
        obj, viols = self._violations(x.to_complex())
        return obj, max(0.0, max(viols))

    def extract_point(self, sol) -> ComplexVector | None:
        blocks = [sol.block(c) for c in self.clique_tree.cliques]
        V = rank_one_complete(self.clique_tree, blocks, tol=None).to_complex()
        ref = V[self._ref]
        if abs(ref) > 1e-12:
            V = V * (np.conj(ref) / abs(ref))
        mags = np.abs(V)
        for i, b in enumerate(self.case.buses):
            m = mags[i]
            tgt = min(max(m, b.vmin), b.vmax)
            V[i] = V[i] * (tgt / m) if m > 1e-12 else tgt
        return ComplexVector.from_complex(V)

    def polish(self, x0: ComplexVector) -> ComplexVector:
        """Two-phase local improvement in polar coordinates.

        Phase one restores feasibility by driving the squared violations to
        zero; phase two descends on cost with the feasibility penalty held
        strong enough that the line/limit constraints stay active rather
        than traded away.
        """
        pc = self.case
        n = pc.n
        V0 = x0.to_complex()
        r0 = np.abs(V0)
        th0 = np.angle(V0)
        th0 = th0 - th0[self._ref]
        z = np.concatenate([r0, th0])
        bounds = [(b.vmin, b.vmax) for b in pc.buses]
        bounds += [(0.0, 0.0) if i == self._ref else (-math.pi, math.pi)
                   for i in range(n)]

        def penalty(z):
            V = z[:n] * np.exp(1j * z[n:])
            _obj, viols = self._violations(V)
            return sum(max(v, 0.0) ** 2 for v in viols)

        def cost_with_penalty(z, rho):
            V = z[:n] * np.exp(1j * z[n:])
            obj, viols = self._violations(V)
            return obj + rho * sum(max(v, 0.0) ** 2 for v in viols)

        res = scipy.optimize.minimize(penalty, z, method="L-BFGS-B", bounds=bounds,
                                      options={"maxiter": 200, "ftol": 1e-16,
                                               "gtol": 1e-12})
        z = res.x
        scale = 1.0 + abs(cost_with_penalty(z, 0.0))
        best_z = z.copy()
        best = self.evaluate(ComplexVector.from_complex(
            z[:n] * np.exp(1j * z[n:])))
        for rho in (1e4 * scale, 1e6 * scale):
            res = scipy.optimize.minimize(cost_with_penalty, z, args=(rho,),
                                          method="L-BFGS-B", bounds=bounds,
                                          options={"maxiter": 300, "ftol": 1e-14})
            z = res.x
            cand = self.evaluate(ComplexVector.from_complex(
                z[:n] * np.exp(1j * z[n:])))
            if cand[1] <= 1e-6 and (best[1] > 1e-6 or cand[0] < best[0]):
                best, best_z = cand, z.copy()
        z = best_z if best[1] <= 1e-6 else z
        V = z[:n] * np.exp(1j * z[n:])
        return ComplexVector.from_complex(V)


def build_lacopf(pc: PowerCase, default_angle_deg: float = DEFAULT_ANGLE_DEG,
                 decompose: bool = True) -> AcopfProblem:
    """Assemble the lifted ACOPF problem for the search driver."""
    return AcopfProblem(pc, default_angle_deg=default_angle_deg,
                        decompose=decompose)
