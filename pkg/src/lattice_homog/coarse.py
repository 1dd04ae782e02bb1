"""Coarse-graining and the structural inequalities behind compactness.

The coarse field replaces a lattice function by its per-cell arithmetic mean
(one cell = one period column times the full cross-section).  The two local
inequalities — adjacent cell means controlled by local edge differences, and
per-cell deviation from the mean controlled by weighted edge differences —
are verified empirically with constants computed from shortest-path structure,
as is the domain-scale Poincare inequality for fields vanishing near the
boundary.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.linalg

from .errors import CellOutOfWindow, DisconnectedGraph
from .graph import connectedness_certificate


@dataclass
class LatticeFunction:
    """Real values on a finite set of lattice vertices at scale eps."""

    graph: object
    positions: np.ndarray       # (N, d) absolute integer d-coordinates
    node_ids: np.ndarray        # (N,) index into graph.nodes
    values: np.ndarray          # (N,)
    scale: float                # eps

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=int)
        self.node_ids = np.asarray(self.node_ids, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        self.cells = self.positions // self.graph.T
        self._cell_map = {}
        for i, c in enumerate(map(tuple, self.cells)):
            self._cell_map.setdefault(c, []).append(i)

    def cell_indices(self, cell):
        try:
            return self._cell_map[tuple(cell)]
        except KeyError:
            raise CellOutOfWindow(f"cell {tuple(cell)} not sampled") from None

    def full_cells(self):
        n = self.graph.n_cell
        return sorted(c for c, idx in self._cell_map.items() if len(idx) == n)


def function_on_window(fg, values, scale=1.0):
    """Wrap FiniteGraph vertex values as a LatticeFunction."""
    positions = np.array([v.pos_d for v in fg.vertices], dtype=int)
    node_ids = np.array([fg.graph.node_index(v.node) for v in fg.vertices], dtype=int)
    return LatticeFunction(fg.graph, positions, node_ids, np.asarray(values, float), scale)


def coarse_mean(u, cell):
    """Arithmetic mean of u over one period cell; linear in u."""
    idx = u.cell_indices(cell)
    if len(idx) != u.graph.n_cell:
        raise CellOutOfWindow(f"cell {tuple(cell)} only partially sampled")
    return float(np.sum(u.values[idx]) / u.graph.n_cell)


@dataclass
class CoarseField:
    """Per-cell means of a lattice function, one value per full cell."""

    means: dict                 # cell tuple -> mean
    scale: float
    period: int
    d: int

    @property
    def cell_volume(self):
        return float(self.scale * self.period) ** self.d

    def l2_norm(self, weight_nodes=1):
        vals = np.array(list(self.means.values()))
        return math.sqrt(weight_nodes * self.cell_volume * float(vals @ vals))


def coarse_field(u, domain):
    """Means over every full cell whose scaled box lies inside `domain`.

    `domain` is an open box ((a, b), ...); a half-open cell [lo, hi)^d is
    inside when lo > a and hi <= b per axis, so partial boundary cells are
    excluded.  A domain smaller than one cell yields an empty field.
    """
    T = u.graph.T
    eps = u.scale
    means = {}
    for cell in u.full_cells():
        lo = [eps * c * T for c in cell]
        hi = [eps * (c + 1) * T for c in cell]
        if all(l > a and h <= b for (a, b), l, h in zip(domain, lo, hi)):
            means[cell] = coarse_mean(u, cell)
    return CoarseField(means, eps, T, u.graph.d)


# ---------------------------------------------------------------------------
# path constants


@dataclass
class PathConstants:
    C_two: float
    C_pw: float
    M: int
    max_translation_path: int
    max_pair_path: int
    min_weight: float
    translation_multiplicity: int = 1
    pair_multiplicity: int = 1


def _incidence(graph):
    inc = [[] for _ in range(graph.n_cell)]
    for orb in graph.orbits:
        a, b = graph.node_index(orb.u), graph.node_index(orb.v)
        dd, _ = orb.displacement(graph.T)
        inc[a].append((b, dd))
        inc[b].append((a, tuple(-x for x in dd)))
    return inc


def _bfs_path(graph, inc, start, target, box):
    """States of a shortest path inside `box` (inclusive d-coordinate bounds)."""
    s = (tuple(graph.nodes[start].dpos), start)
    if s == target:
        return [s]
    parent = {s: None}
    queue = deque([s])
    while queue:
        pos, ni = queue.popleft()
        for nj, dd in inc[ni]:
            npos = tuple(p + q for p, q in zip(pos, dd))
            if any(not (lo <= c <= hi) for c, (lo, hi) in zip(npos, box)):
                continue
            state = (npos, nj)
            if state in parent:
                continue
            parent[state] = (pos, ni)
            if state == target:
                path = [state]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            queue.append(state)
    return None


def _path_edges(path):
    return [tuple(sorted((a, b))) for a, b in zip(path, path[1:])]


def compute_path_constants(graph):
    """Inequality constants from shortest witness paths.

    M = T (one period of enlargement).  For each unit translation the
    witness family {cell node -> its translate} has a longest length N and a
    largest per-edge multiplicity mu (how many of the witnesses share one
    edge); the chain of estimates bounding a squared mean difference by N
    times the stacked path sums makes N * mu / #cell a valid constant for
    the unweighted local edge energy.  The per-cell constant is built the
    same way from the in-cell pair witnesses, divided by the smallest
    weight.  If a witness does not fit inside the M-enlarged box, M grows by
    T (re-tiling argument); a connected graph always terminates.
    """
    connectedness_certificate(graph)  # raises DisconnectedGraph on failure
    inc = _incidence(graph)
    T, d = graph.T, graph.d

    def translation_paths(M):
        # per axis: (longest witness) * (max edge multiplicity of the family)
        worst_cand = 0
        worst_len = 0
        worst_mu = 1
        for m in range(d):
            box = []
            for mm in range(d):
                hi_cell = 2 * T - 1 if mm == m else T - 1
                box.append((-(M - 1), hi_cell + (M - 1)))
            counts = {}
            longest = 0
            for i, node in enumerate(graph.nodes):
                tpos = tuple(node.dpos[mm] + (T if mm == m else 0) for mm in range(d))
                path = _bfs_path(graph, inc, i, (tpos, i), box)
                if path is None:
                    return None
                longest = max(longest, len(path) - 1)
                for e in _path_edges(path):
                    counts[e] = counts.get(e, 0) + 1
            mu = max(counts.values(), default=1)
            if longest * mu > worst_cand:
                worst_cand, worst_len, worst_mu = longest * mu, longest, mu
        return worst_cand, worst_len, worst_mu

    def pair_paths(M):
        box = [(-(M - 1), T - 1 + (M - 1))] * d
        counts = {}
        longest = 0
        for i in range(graph.n_cell):
            for j in range(graph.n_cell):
                if i == j:
                    continue
                path = _bfs_path(graph, inc, i,
                                 (tuple(graph.nodes[j].dpos), j), box)
                if path is None:
                    return None
                longest = max(longest, len(path) - 1)
                for e in _path_edges(path):
                    counts[e] = counts.get(e, 0) + 1
        return longest, max(counts.values(), default=1)

    M = T
    for _ in range(8):
        two = translation_paths(M)
        pw = pair_paths(M)
        if two is not None and pw is not None:
            break
        M += T
    else:
        raise DisconnectedGraph("witness paths do not fit any tested enlargement")

    cand_two, n_two, mu_two = two
    n_pw, mu_pw = pw
    min_w = min(o.weight for o in graph.orbits)
    n_cell = graph.n_cell
    return PathConstants(C_two=cand_two / n_cell,
                         C_pw=n_pw * mu_pw / n_cell / min_w,
                         M=M,
                         max_translation_path=n_two,
                         max_pair_path=n_pw,
                         min_weight=min_w,
                         translation_multiplicity=mu_two,
                         pair_multiplicity=mu_pw)


# ---------------------------------------------------------------------------
# random-field harnesses


@dataclass
class InequalityReport:
    name: str
    constant_used: float
    worst_ratio: float
    trials: int
    witness: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.worst_ratio <= 1.0

    def to_dict(self):
        return {"name": self.name, "constant": self.constant_used,
                "worst_ratio": self.worst_ratio, "trials": self.trials,
                "witness": self.witness, "holds": bool(self.holds), **self.extra}


class _Universe:
    """All lattice vertices with d-coordinates in a box, plus their edges."""

    def __init__(self, graph, box):
        self.graph = graph
        self.box = box
        self.pos = []
        self.node_ids = []
        index = {}
        ranges = [range(lo, hi + 1) for lo, hi in box]
        for pos in product(*ranges):
            for ni, node in enumerate(graph.nodes):
                if all((p - q) % graph.T == 0 for p, q in zip(pos, node.dpos)):
                    index[(pos, ni)] = len(self.pos)
                    self.pos.append(pos)
                    self.node_ids.append(ni)
        self.index = index
        self.edges = []         # (ia, ib, weight)
        for (pos, ni), ia in index.items():
            node = graph.nodes[ni]
            for orb in graph.orbits:
                if graph.node_index(orb.u) != ni:
                    continue
                dd, _ = orb.displacement(graph.T)
                tpos = tuple(p + q for p, q in zip(pos, dd))
                ib = index.get((tpos, graph.node_index(orb.v)))
                if ib is not None:
                    self.edges.append((ia, ib, orb.weight))
        self.pos = np.array(self.pos, dtype=int)
        self.node_ids = np.array(self.node_ids, dtype=int)

    def n(self):
        return len(self.pos)

    def vertices_in(self, box):
        m = np.ones(self.n(), dtype=bool)
        for ax, (lo, hi) in enumerate(box):
            m &= (self.pos[:, ax] >= lo) & (self.pos[:, ax] <= hi)
        return m

    def edge_subset(self, box):
        mask = self.vertices_in(box)
        return [(a, b, w) for a, b, w in self.edges if mask[a] and mask[b]]

    def cell_mean(self, u, cell):
        T = self.graph.T
        box = [(c * T, (c + 1) * T - 1) for c in cell]
        m = self.vertices_in(box)
        return float(u[m].sum() / self.graph.n_cell)


def _trial_field(seed, universe, t):
    """Deterministic per-trial families: gaussian, affine, indicator, checkerboard.

    Each trial draws from its own (seed, t)-keyed stream, so trials can run
    in any order (or in parallel) without changing the outcome.
    """
    rng = np.random.default_rng((seed, t))
    n = universe.n()
    fam = ("gaussian", "affine", "indicator", "checkerboard")[t % 4]
    if fam == "gaussian":
        return rng.standard_normal(n), fam
    if fam == "affine":
        slope = rng.standard_normal(universe.graph.d)
        vals = universe.pos @ slope + rng.standard_normal()
        return vals, fam
    if fam == "indicator":
        vals = np.zeros(n)
        vals[rng.integers(n)] = 1.0
        return vals, fam
    vals = ((universe.pos.sum(axis=1) + universe.node_ids) % 2).astype(float) * 2 - 1
    return vals, fam


def check_two_connectedness(graph, trials=200, seed=7):
    """Adjacent cell-mean differences vs. unweighted local edge energy.

    For each trial field and each axis pair (cell 0, cell e_m), checks
    |mean_l - mean_l'|^2 <= C * sum over ordered edge pairs inside the
    (-M, M)-enlarged pair box of |u_i - u_j|^2.
    """
    consts = compute_path_constants(graph)
    T, d, M = graph.T, graph.d, consts.M
    box = [(-(M - 1), 2 * T - 1 + (M - 1))] * d
    uni = _Universe(graph, box)
    pairs = []
    for m in range(d):
        cell = (0,) * d
        other = tuple(1 if mm == m else 0 for mm in range(d))
        pbox = []
        for mm in range(d):
            hi_cell = 2 * T - 1 if mm == m else T - 1
            pbox.append((-(M - 1), hi_cell + (M - 1)))
        pairs.append((cell, other, uni.edge_subset(pbox)))

    worst, witness = 0.0, ""
    for t in range(trials):
        u, fam = _trial_field(seed, uni, t)
        for cell, other, edges in pairs:
            lhs = (uni.cell_mean(u, cell) - uni.cell_mean(u, other)) ** 2
            rhs = 2.0 * sum((u[a] - u[b]) ** 2 for a, b, _ in edges)
            ratio = 0.0 if lhs == 0 else (math.inf if rhs == 0
                                          else lhs / (consts.C_two * rhs))
            if ratio > worst:
                worst, witness = ratio, f"trial {t} ({fam}), pair {cell}->{other}"
    return InequalityReport("two-connectedness", consts.C_two, worst, trials, witness)


def check_poincare_wirtinger(graph, trials=200, seed=7):
    """Per-cell deviation from the mean vs. weighted local edge energy."""
    consts = compute_path_constants(graph)
    T, d, M = graph.T, graph.d, consts.M
    box = [(-(M - 1), 2 * T - 1 + (M - 1))] * d
    uni = _Universe(graph, box)
    cells = [(0,) * d]
    if T - 1 + (M - 1) >= 2 * T - 1:   # a second full enlarged cell fits
        cells.append(tuple(1 if mm == 0 else 0 for mm in range(d)))
    cell_data = []
    for cell in cells:
        cbox = [(cell[mm] * T - (M - 1), (cell[mm] + 1) * T - 1 + (M - 1))
                for mm in range(d)]
        inbox = [(cell[mm] * T, (cell[mm] + 1) * T - 1) for mm in range(d)]
        cell_data.append((cell, uni.vertices_in(inbox), uni.edge_subset(cbox)))

    worst, witness = 0.0, ""
    for t in range(trials):
        u, fam = _trial_field(seed, uni, t)
        for cell, mask, edges in cell_data:
            mean = float(u[mask].sum() / graph.n_cell)
            lhs = float(((u[mask] - mean) ** 2).sum())
            rhs = 2.0 * sum(w * (u[a] - u[b]) ** 2 for a, b, w in edges)
            ratio = 0.0 if lhs == 0 else (math.inf if rhs == 0
                                          else lhs / (consts.C_pw * rhs))
            if ratio > worst:
                worst, witness = ratio, f"trial {t} ({fam}), cell {cell}"
    return InequalityReport("poincare-wirtinger", consts.C_pw, worst, trials, witness)


# ---------------------------------------------------------------------------
# domain-scale Poincare inequality


@dataclass
class PoincareReport:
    width_cells: int
    diameter: float
    c_empirical: float          # smallest C with lhs <= C * rhs over all trials
    c_sharp: float              # exact sharp constant (eigenvalue)
    c0: float                   # c_empirical / diameter^2
    trials: int
    witness: str = ""

    def to_dict(self):
        return {"width_cells": self.width_cells, "diameter": self.diameter,
                "c_empirical": self.c_empirical, "c_sharp": self.c_sharp,
                "c0": self.c0, "trials": self.trials, "witness": self.witness}


def check_poincare(graph, widths, trials=100, seed=7):
    """Zero-boundary fields: squared norm vs. weighted edge energy per domain.

    Domains are boxes of `width` cells per axis at scale eps = 1; admissible
    fields vanish where the distance to the domain boundary is <= 2 sqrt(d) T.
    Reports the empirical constant, the exact sharp constant (inverse of the
    smallest eigenvalue of the constrained weighted Laplacian, which is also
    fed back in as an extremal trial), and the constant normalized by the
    squared diameter.
    """
    d, T = graph.d, graph.T
    layer = 2.0 * math.sqrt(d) * T
    reports = []
    for width in widths:
        W = width * T
        uni = _Universe(graph, [(0, W)] * d)
        dist = np.minimum(uni.pos, W - uni.pos).min(axis=1).astype(float)
        free = dist > layer
        nf = int(free.sum())
        if nf == 0:
            raise ValueError(f"width {width} leaves no admissible vertex")
        col = -np.ones(uni.n(), dtype=int)
        col[free] = np.arange(nf)
        B = np.zeros((nf, nf))
        for a, b, w in uni.edges:
            ca, cb = col[a], col[b]
            c = 2.0 * w
            if ca >= 0 and cb >= 0:
                B[ca, ca] += c
                B[cb, cb] += c
                B[ca, cb] -= c
                B[cb, ca] -= c
            elif ca >= 0:
                B[ca, ca] += c
            elif cb >= 0:
                B[cb, cb] += c
        evals, evecs = scipy.linalg.eigh(B)
        c_sharp = 1.0 / float(evals[0])
        extremal = np.zeros(uni.n())
        extremal[free] = evecs[:, 0]

        worst, witness = 0.0, ""
        fields = [("extremal", extremal),
                  ("tent", np.maximum(dist - layer, 0.0))]
        for t in range(trials):
            u, fam = _trial_field(seed + width, uni, t)
            u = u * free
            fields.append((f"trial {t} ({fam})", u))
        for fam, u in fields:
            lhs = float(u @ u)
            rhs = 2.0 * sum(w * (u[a] - u[b]) ** 2 for a, b, w in uni.edges)
            if lhs == 0:
                continue
            ratio = math.inf if rhs == 0 else lhs / rhs
            if ratio > worst:
                worst, witness = ratio, fam
        diam = W * math.sqrt(d)
        reports.append(PoincareReport(width, diam, worst, c_sharp,
                                      worst / diam ** 2, trials, witness))
    return reports


# ---------------------------------------------------------------------------
# compactness-hypothesis norms


def hypothesis_norms(u, domain):
    """The two equi-boundedness quantities for a scaled lattice function.

    Returns (eps^d sum |u_i|^2, sum over interior adjacent cell pairs of the
    unweighted edge energy over the M-enlarged pair boxes, scaled eps^(d-2)).
    """
    g = u.graph
    eps = float(u.scale)
    d, T = g.d, g.T
    M = T
    l2 = eps ** d * float(u.values @ u.values)

    layer = 2.0 * eps * math.sqrt(d) * T
    interior = []
    for cell in u.full_cells():
        anchor = [eps * c * T for c in cell]
        dist = min(min(x - a, b - x) for (a, b), x in zip(domain, anchor))
        if dist > layer:
            interior.append(cell)
    interior_set = set(interior)

    pos_index = {}
    for i, (p, ni) in enumerate(zip(map(tuple, u.positions), u.node_ids)):
        pos_index[(p, int(ni))] = i
    edges = []
    for (p, ni), i in pos_index.items():
        node = g.nodes[ni]
        for orb in g.orbits:
            if g.node_index(orb.u) != ni:
                continue
            dd, _ = orb.displacement(T)
            q = tuple(a + b for a, b in zip(p, dd))
            j = pos_index.get((q, g.node_index(orb.v)))
            if j is not None:
                edges.append((i, j))
    epos = np.array([[a, b] for a, b in edges], dtype=int).reshape(-1, 2)

    grad = 0.0
    for cell in interior:
        for m in range(d):
            other = tuple(c + (1 if mm == m else 0) for mm, c in enumerate(cell))
            if other not in interior_set:
                continue
            lo = [min(a, b) * T - (M - 1) for a, b in zip(cell, other)]
            hi = [(max(a, b) + 1) * T - 1 + (M - 1) for a, b in zip(cell, other)]
            for a, b in epos:
                pa, pb = u.positions[a], u.positions[b]
                if all(l <= x <= h for l, x, h in zip(lo, pa, hi)) and \
                   all(l <= x <= h for l, x, h in zip(lo, pb, hi)):
                    grad += 2.0 * (u.values[a] - u.values[b]) ** 2
    grad *= eps ** (d - 2)
    return l2, grad
