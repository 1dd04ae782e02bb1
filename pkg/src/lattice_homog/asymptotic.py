"""Finite-window energies with affine boundary clamping.

The window value at size K minimizes the quadratic energy over the K^d-cell
box with every vertex within Euclidean distance 2*sqrt(d)*T of the box
boundary pinned to the affine field z . i^d.  Interactions reaching one step
outside the box are kept, with the outside endpoint held at its affine
value; this makes the periodic cell value a true lower bound for every K.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cell import convention_factor, f_hom
from .errors import NoConvergence, WindowTooSmall
from .graph import instantiate_window
from .util import parallel_map


@dataclass
class WindowProblem:
    K: int
    direction: np.ndarray
    finite: object                  # clamped FiniteGraph over {0..K-1}^d cells
    clamped: np.ndarray             # bool per vertex
    affine: np.ndarray              # z . pos for every vertex
    ghost_affine: np.ndarray        # z . pos for boundary (outside) endpoints


def boundary_layer_width(graph):
    return 2.0 * math.sqrt(graph.d) * graph.T


def build_window_problem(graph, z, K):
    """Set up the clamped K-window problem; K < 2 is a degenerate window."""
    if K < 2:
        raise WindowTooSmall("window needs K >= 2 (a single period is entirely "
                             "inside the clamped boundary layer)")
    z = np.asarray(z, dtype=float).reshape(-1)
    fg = instantiate_window(graph, [(0, K)] * graph.d, wrap="clamped")
    side = K * graph.T
    layer = boundary_layer_width(graph)
    clamped = np.zeros(len(fg.vertices), dtype=bool)
    affine = np.zeros(len(fg.vertices))
    for i, v in enumerate(fg.vertices):
        dist = min(min(p, side - p) for p in v.pos_d)
        clamped[i] = dist < layer
        affine[i] = float(z @ np.asarray(v.pos_d, dtype=float))
    ghost = np.array([float(z @ np.asarray(v.pos_d, dtype=float))
                      for v in fg.boundary_vertices])
    return WindowProblem(K, z, fg, clamped, affine, ghost)


def _solve_window(problem):
    """Values per vertex minimizing the clamped window energy."""
    fg = problem.finite
    values = problem.affine.copy()
    free = np.flatnonzero(~problem.clamped)
    if free.size == 0:
        return values
    col = -np.ones(len(fg.vertices), dtype=int)
    col[free] = np.arange(free.size)
    rows, cols, vals = [], [], []
    rhs = np.zeros(free.size)
    for a, b, w in fg.edges:
        c = 2.0 * w  # ordered-pair (double) counting of interior orbits
        ca, cb = col[a], col[b]
        if ca >= 0 and cb >= 0:
            rows += [ca, cb, ca, cb]
            cols += [ca, cb, cb, ca]
            vals += [c, c, -c, -c]
        elif ca >= 0:
            rows.append(ca)
            cols.append(ca)
            vals.append(c)
            rhs[ca] += c * values[b]
        elif cb >= 0:
            rows.append(cb)
            cols.append(cb)
            vals.append(c)
            rhs[cb] += c * values[a]
    for a, gb, w in fg.ghost_edges:
        ca = col[a]
        if ca >= 0:
            rows.append(ca)
            cols.append(ca)
            vals.append(w)
            rhs[ca] += w * problem.ghost_affine[gb]

    A = sp.csr_matrix((vals, (rows, cols)), shape=(free.size, free.size))
    sol = spla.spsolve(A, rhs)
    if not np.all(np.isfinite(sol)):
        raise NoConvergence("window solve produced non-finite values")
    values[free] = sol
    return values


def window_energy(problem, values, convention="double"):
    """Evaluate the clamped-window energy of `values` under `convention`.

    Interior orbit instances count twice (ordered pairs), interactions into
    the affine ring once; the single-count value is exactly half.
    """
    fg = problem.finite
    e = 0.0
    for a, b, w in fg.edges:
        diff = values[a] - values[b]
        e += 2.0 * w * diff * diff
    for a, gb, w in fg.ghost_edges:
        diff = values[a] - problem.ghost_affine[gb]
        e += w * diff * diff
    return float(convention_factor(convention) / 2.0 * e)


def finite_window_value(graph, z, K, convention="double"):
    """Energy density of the K-window problem: minimum energy / (KT)^d."""
    problem = build_window_problem(graph, z, K)
    values = _solve_window(problem)
    vol = float(K * graph.T) ** graph.d
    return window_energy(problem, values, convention=convention) / vol


def affine_energy_density(graph, z, convention="double"):
    """Energy density of the uncorrected affine field z . i^d."""
    z = np.asarray(z, dtype=float).reshape(-1)
    total = 0.0
    for orb in graph.orbits:
        dd, _ = orb.displacement(graph.T)
        g = float(z @ np.asarray(dd, dtype=float))
        total += orb.weight * g * g
    return convention_factor(convention) * total / graph.T ** graph.d


@dataclass
class StudyEntry:
    K: int
    value: float
    gap: float
    seconds: float


@dataclass
class ConvergenceTable:
    direction: tuple
    convention: str
    cell_value: float
    rows: list = field(default_factory=list)
    rate_exponent: float = float("nan")

    def to_rows(self):
        return [{"K": r.K, "f0K": r.value, "gap": r.gap, "seconds": r.seconds}
                for r in self.rows]


def convergence_study(graph, z, Ks, tol=1e-10, convention="double"):
    """Window values for each K with gaps against the periodic cell value.

    Also fits gap ~ c / K^p on the rows with positive gap and reports p;
    the fit is a diagnostic, the theory only gives gap -> 0.
    """
    Ks = list(Ks)
    if Ks != sorted(Ks):
        raise ValueError("Ks must be sorted ascending")
    cell_value = f_hom(graph, z, tol=tol, convention=convention)
    table = ConvergenceTable(tuple(np.asarray(z, dtype=float)), convention, cell_value)

    def run(K):
        t0 = time.perf_counter()
        value = finite_window_value(graph, z, K, convention=convention)
        return StudyEntry(K, value, value - cell_value, time.perf_counter() - t0)

    table.rows = parallel_map(run, Ks)
    pos = [(r.K, r.gap) for r in table.rows if r.gap > 0]
    if len(pos) >= 2:
        lk = np.log([p[0] for p in pos])
        lg = np.log([p[1] for p in pos])
        slope = np.polyfit(lk, lg, 1)[0]
        table.rate_exponent = float(-slope)
    return table


@dataclass
class TilingCheck:
    K: int
    H: int
    tiles: int
    lhs: float      # f_0^H
    rhs: float      # tiling construction bound
    slack: float

    @property
    def holds(self):
        return self.lhs <= self.rhs + self.slack


def tiling_check(graph, z, K, convention="double", slack=1e-6):
    """Verify the tiling bound relating the 2K-window to the K-window.

    Placing floor(H/(K+1))^d copies of a K-window minimizer on a grid of
    pitch K+1 and filling the remaining cells with the affine field gives

        f_0^H <= (m K / H)^d (f_0^K + 1/K) + alpha (H^d - (m K)^d) / H^d

    with m the tile count per axis and alpha the affine energy density.
    """
    H = 2 * K
    m = H // (K + 1)
    d = graph.d
    fK = finite_window_value(graph, z, K, convention=convention)
    fH = finite_window_value(graph, z, H, convention=convention)
    alpha = affine_energy_density(graph, z, convention=convention)
    covered = (m ** d) * (K ** d) / float(H ** d)
    rhs = covered * (fK + 1.0 / K) + alpha * (1.0 - covered)
    return TilingCheck(K, H, m ** d, fH, rhs, slack)
