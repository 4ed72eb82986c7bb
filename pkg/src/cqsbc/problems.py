"""Adapter exposing a generic complex QCQP to the search driver.

The driver protocol: ``tracked_pairs``, ``real_vars``, ``initial_bounds()``,
``tighten(eb, changed)``, ``cuts_for(eb, variant)``,
``build_relaxation(eb, cuts)``, ``extract_point(sol)``, ``polish(x)``,
``evaluate(x)``.  The adapter shifts the instance so every component is
positive (making the pair sets valid on all tracked pairs), runs quadratic
box tightening once during construction, and afterwards behaves as a pure
function of the entry bounds.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.optimize

from . import cuts as cuts_mod
from . import model as model_mod
from . import tighten as tighten_mod
from .model import ComplexQcqp, EntryBounds
from .numerics import ComplexVector
from .relax import CliqueTree, build_csdp, lifted_cliques, rank_one_complete


class GenericProblem:
    def __init__(self, p: ComplexQcqp, decompose: bool = True,
                 root_tighten: bool = True):
        self.original = p
        if p.real_vars:
            if np.any(p.lb.re < 0.0):
                shifted, shift = model_mod.affine_shift_positive(p)
            else:
                shifted, shift = p, ComplexVector.zeros(p.n)
        else:
            if np.all(p.lb.re >= 1.0) and np.all(p.lb.im >= 1.0):
                shifted, shift = p, ComplexVector.zeros(p.n)
            else:
                shifted, shift = model_mod.affine_shift_positive(p)
        self.p = shifted
        self.shift = shift
        self.real_vars = p.real_vars
        if root_tighten and self.p.m > 0:
            z_lo, z_hi = self._base_z_bounds()
            res = tighten_mod.tighten_box(self.p, z_lo, z_hi)
            if res == "infeasible":
                self.root_infeasible = True
            else:
                self.root_infeasible = False
                z_lo, z_hi = res
                lb = ComplexVector(z_lo[:self.p.n], z_lo[self.p.n:])
                ub = ComplexVector(z_hi[:self.p.n], z_hi[self.p.n:])
                self.p = ComplexQcqp(self.p.n, self.p.constraints, lb, ub,
                                     real_vars=self.p.real_vars)
        else:
            self.root_infeasible = False
        self.clique_tree: CliqueTree = lifted_cliques(self.p, decompose=decompose)
        self.tracked_pairs = self.clique_tree.pairs()
        self._triangles = self._find_triangles()
        self._embedded = [tighten_mod.real_embedding_data(Q, c, b)
                          for Q, c, b in self.p.constraints]

    # -- geometry ------------------------------------------------------------

    def _base_z_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.concatenate([self.p.lb.re, self.p.lb.im]),
                np.concatenate([self.p.ub.re, self.p.ub.im]))

    def _find_triangles(self) -> list[tuple[int, int, int]]:
        pairs = set(self.tracked_pairs)
        verts = sorted({v for pr in pairs for v in pr})
        tris = []
        for a, b, c in itertools.combinations(verts, 3):
            if (a, b) in pairs and (a, c) in pairs and (b, c) in pairs:
                tris.append((a, b, c))
        return tris

    def node_box(self, eb: EntryBounds) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise z = (re; im) box implied by diagonal bounds.

        Valid because every component is nonnegative after the shift:
        re^2 <= U_ii - min(im)^2 and re^2 >= L_ii - max(im)^2.
        """
        n = self.p.n
        z_lo, z_hi = self._base_z_bounds()
        for i in range(n):
            Lii, Uii = eb.interval((i + 1, i + 1))
            for comp, other in ((i, i + n), (i + n, i)):
                hi_sq = Uii - z_lo[other] ** 2
                z_hi[comp] = min(z_hi[comp], math.sqrt(max(hi_sq, 0.0)))
                lo_sq = Lii - z_hi[other] ** 2
                if lo_sq > 0.0:
                    z_lo[comp] = max(z_lo[comp], math.sqrt(lo_sq))
        return z_lo, z_hi

    def initial_bounds(self) -> EntryBounds:
        eb = model_mod.initial_entry_bounds(self.p)
        return eb

    def tighten(self, eb: EntryBounds, changed=None) -> EntryBounds | str:
        if self.root_infeasible:
            return "infeasible"
        out = eb.copy()
        z_lo, z_hi = self.node_box(eb)
        if self.p.m > 0 and changed is not None:
            res = tighten_mod.tighten_box(self.p, z_lo, z_hi, passes=2)
            if res == "infeasible":
                return "infeasible"
            z_lo, z_hi = res
        n = self.p.n
        for i in range(n):
            lo = z_lo[i] ** 2 + z_lo[i + n] ** 2
            hi = z_hi[i] ** 2 + z_hi[i + n] ** 2
            Lii, Uii = out.interval((i + 1, i + 1))
            out.set(i + 1, i + 1, max(Lii, lo), min(Uii, hi))
        if not self.real_vars:
            wl = np.concatenate(([1.0], z_lo[:n]))
            tl = np.concatenate(([0.0], z_lo[n:]))
            for i, j in self.tracked_pairs:
                w_minus = wl[i] * wl[j] + tl[i] * tl[j]
                if w_minus <= 0.0:
                    continue
                rad = out.U[i, i] * out.U[j, j] / w_minus**2 - 1.0
                r = math.sqrt(max(rad, 0.0))
                lo, hi = out.interval((i, j))
                out.set(i, j, max(lo, -r), min(hi, r))
            for tri in self._triangles:
                out = tighten_mod.tighten_cycle(list(tri), out)
        return out if out.is_valid() else "infeasible"

    # -- cuts ----------------------------------------------------------------

    def cuts_for(self, eb: EntryBounds, variant: str) -> list:
        if variant == "sdp":
            return []
        if variant == "sdp+cvi":
            out = []
            for pr in self.tracked_pairs:
                out.extend(cuts_mod.generate_cvi(pr, eb))
            return out
        if variant != "sdp+rlt":
            raise ValueError(f"unknown relaxation variant {variant!r}")
        z_lo, z_hi = self.node_box(eb)
        n = self.p.n
        out = []
        if self.real_vars:
            for i in range(1, n + 1):
                out.extend(cuts_mod.generate_rlt(i, i, z_lo[i - 1], z_hi[i - 1],
                                                 z_lo[i - 1], z_hi[i - 1]))
            for i, j in self.tracked_pairs:
                if i == 0:
                    continue
                out.extend(cuts_mod.generate_rlt(i, j, z_lo[i - 1], z_hi[i - 1],
                                                 z_lo[j - 1], z_hi[j - 1]))
            return out
        rects = [cuts_mod.Rectangle(z_lo[i], z_hi[i], z_lo[i + n], z_hi[i + n])
                 for i in range(n)]
        for i, j in self.tracked_pairs:
            if i == 0:
                continue
            out.extend(cuts_mod.generate_rlt_complex((i, j), rects[i - 1],
                                                     rects[j - 1]))
        return out

    def build_relaxation(self, eb: EntryBounds, cuts: list):
        return build_csdp(self.p, eb, cuts, self.clique_tree)

    # -- primal side ---------------------------------------------------------

    def evaluate(self, x: ComplexVector) -> tuple[float, float]:
        return model_mod.evaluate(self.p, x)

    def original_point(self, x: ComplexVector) -> ComplexVector:
        return ComplexVector(x.re + self.shift.re, x.im + self.shift.im)

    def extract_point(self, sol) -> ComplexVector | None:
        blocks = [sol.block(c) for c in self.clique_tree.cliques]
        y = rank_one_complete(self.clique_tree, blocks, tol=None).to_complex()
        y0 = y[0]
        if abs(y0) < 1e-9:
            return None
        x = y[1:] / y0
        re = np.clip(x.real, self.p.lb.re, self.p.ub.re)
        im = np.clip(x.imag, self.p.lb.im, self.p.ub.im)
        return ComplexVector(re, im)

    def _penalized(self, z: np.ndarray, rho: float) -> tuple[float, np.ndarray]:
        E0, g0, b0 = self._embedded[0]
        val = float(z @ (E0 @ z) + g0 @ z) + b0
        grad = 2.0 * (E0 @ z) + g0
        for E, g, b in self._embedded[1:]:
            gi = float(z @ (E @ z) + g @ z) + b
            if gi > 0.0:
                val += rho * gi * gi
                grad += rho * 2.0 * gi * (2.0 * (E @ z) + g)
        return val, grad

    def polish(self, x0: ComplexVector) -> ComplexVector:
        z0 = np.concatenate([x0.re, x0.im])
        z_lo, z_hi = self._base_z_bounds()
        bounds = list(zip(z_lo, z_hi))
        z = z0
        rhos = (1.0,) if self.p.m == 0 else (1e3, 1e6)
        for rho in rhos:
            res = scipy.optimize.minimize(
                self._penalized, z, args=(rho,), jac=True, method="L-BFGS-B",
                bounds=bounds, options={"maxiter": 200})
            z = res.x
        n = self.p.n
        return ComplexVector(np.clip(z[:n], z_lo[:n], z_hi[:n]),
                             np.clip(z[n:], z_lo[n:], z_hi[n:]))
