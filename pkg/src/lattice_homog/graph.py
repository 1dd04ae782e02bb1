"""Periodic graphs on cylindrical lattice subsets.

A graph lives on a node set X inside Z^d x {0..M-1}^k, is T-periodic in the
first d coordinate directions and carries positive weights on an edge set
that is invariant under the same translations.  Everything is stored per
fundamental cell: nodes with d-coordinates in [0, T) and one representative
per translation orbit of edges.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import product

from .errors import CellOutOfWindow, DisconnectedGraph, EmptyWindow, UnknownNode


@dataclass(frozen=True, order=True)
class CellNode:
    """One node of the fundamental cell: d periodic coords, k bounded coords."""

    dpos: tuple
    kpos: tuple

    def __str__(self):
        return "(" + " ".join(str(c) for c in self.dpos + self.kpos) + ")"


@dataclass(frozen=True, order=True)
class EdgeOrbit:
    """One undirected translation orbit of edges.

    The represented edge joins `u` (in the cell) to `v` translated by
    `offset` cells, i.e. the node at v.dpos + T*offset.  Weight is shared by
    the whole orbit.
    """

    u: CellNode
    v: CellNode
    offset: tuple
    weight: float

    def displacement(self, T):
        """Geometric displacement (d-part, k-part) of the represented edge."""
        dd = tuple(self.v.dpos[m] + T * self.offset[m] - self.u.dpos[m]
                   for m in range(len(self.offset)))
        dk = tuple(b - a for a, b in zip(self.u.kpos, self.v.kpos))
        return dd, dk

    def reversed(self):
        return EdgeOrbit(self.v, self.u, tuple(-o for o in self.offset), self.weight)

    def canonical(self):
        """Orientation with the lexicographically smaller endpoint first.

        Self-orbits (u == v) keep the lexicographically positive offset so
        that serialization is deterministic.
        """
        if self.v < self.u:
            return self.reversed()
        if self.v == self.u and self.offset < tuple(-o for o in self.offset):
            return self.reversed()
        return self


class LatticeGraph:
    """Immutable periodic graph; safe to share, all operations are pure."""

    def __init__(self, d, k, T, nodes, orbits, M=None):
        if d < 1:
            raise ValueError("d must be >= 1")
        if k < 0:
            raise ValueError("k must be >= 0")
        if T < 1:
            raise ValueError("T must be >= 1")
        nodes = tuple(sorted(nodes))
        for n in nodes:
            if len(n.dpos) != d or len(n.kpos) != k:
                raise ValueError(f"node {n} has wrong arity for d={d}, k={k}")
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate nodes")
        canon = []
        seen = {}
        for orb in orbits:
            if len(orb.offset) != d:
                raise ValueError(f"orbit offset {orb.offset} has wrong arity")
            c = orb.canonical()
            key = (c.u, c.v, c.offset)
            if key in seen:
                raise ValueError(f"duplicate orbit {key}")
            seen[key] = c
            canon.append(c)
        self.d = d
        self.k = k
        self.T = T
        self.nodes = nodes
        self.orbits = tuple(sorted(canon, key=lambda o: (o.u, o.v, o.offset)))
        if M is None:
            M = max((max(n.kpos) + 1 for n in nodes if n.kpos), default=1)
        self.M = max(int(M), 1)
        self._index = {n: i for i, n in enumerate(nodes)}
        for orb in self.orbits:
            if orb.u not in self._index or orb.v not in self._index:
                raise ValueError(f"orbit endpoint not among nodes: {orb}")

    @property
    def n_cell(self):
        return len(self.nodes)

    def node_index(self, node):
        try:
            return self._index[node]
        except KeyError:
            raise UnknownNode(f"node {node} is not in the fundamental cell") from None

    def __eq__(self, other):
        return (isinstance(other, LatticeGraph)
                and (self.d, self.k, self.T, self.M) == (other.d, other.k, other.T, other.M)
                and self.nodes == other.nodes
                and self.orbits == other.orbits)

    def __repr__(self):
        return (f"LatticeGraph(d={self.d}, k={self.k}, T={self.T}, M={self.M}, "
                f"{len(self.nodes)} nodes, {len(self.orbits)} orbits)")

    def max_displacement(self):
        """R: largest max-norm of an edge displacement (0 for edgeless graphs)."""
        R = 0
        for orb in self.orbits:
            dd, dk = orb.displacement(self.T)
            R = max(R, max(abs(c) for c in dd + dk))
        return R


def neighbors(graph, node):
    """All neighbours of `node`, both orientations of every incident orbit.

    Returns a list of (cell node, cell offset, weight); the actual neighbour
    position is neighbour.dpos + T * offset.
    """
    i = graph.node_index(node)
    out = []
    for orb in graph.orbits:
        if graph.node_index(orb.u) == i:
            out.append((orb.v, orb.offset, orb.weight))
        if graph.node_index(orb.v) == i:
            out.append((orb.u, tuple(-o for o in orb.offset), orb.weight))
    return out


# ---------------------------------------------------------------------------
# connectivity


@dataclass
class ConnectivityResult:
    connected: bool
    quotient_connected: bool
    lattice_index: int          # |det| of the translation subgroup basis, 0 if rank-deficient
    components: list            # node partitions of the quotient graph
    sublattice_basis: list      # reduced integer basis rows of the offset subgroup
    witnesses: dict             # (i_node, j_node, m) -> list of (CellNode, cell tuple)

    @property
    def failure(self):
        if self.connected:
            return None
        return "quotient" if not self.quotient_connected else "sublattice"


def _hnf_rows(vectors, d):
    """Row-echelon integer basis of the subgroup of Z^d spanned by `vectors`.

    Column-by-column Euclidean elimination with exact integer arithmetic;
    every step is an invertible integer row operation, so the returned rows
    generate the same subgroup.  Pivot columns are strictly increasing.
    """
    work = [list(v) for v in vectors if any(v)]
    basis = []
    for c in range(d):
        pool = [r for r in work if r[c] != 0]
        work = [r for r in work if r[c] == 0]
        while len(pool) > 1:
            pool.sort(key=lambda r: abs(r[c]))
            pivot, remainder = pool[0], pool[1:]
            pool = [pivot]
            for r in remainder:
                q = r[c] // pivot[c]
                r2 = [a - q * b for a, b in zip(r, pivot)]
                if r2[c] != 0:
                    pool.append(r2)
                elif any(r2):
                    work.append(r2)
        if pool:
            basis.append(pool[0])
    return basis


def _quotient_components(graph):
    adj = {i: set() for i in range(graph.n_cell)}
    for orb in graph.orbits:
        a, b = graph.node_index(orb.u), graph.node_index(orb.v)
        adj[a].add(b)
        adj[b].add(a)
    seen = [False] * graph.n_cell
    comps = []
    for s in range(graph.n_cell):
        if seen[s]:
            continue
        comp = []
        queue = deque([s])
        seen[s] = True
        while queue:
            x = queue.popleft()
            comp.append(x)
            for y in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    queue.append(y)
        comps.append(sorted(comp))
    return comps


def _window_bfs_paths(graph, radius):
    """BFS shortest paths from (cell 0, node) over a window of +-radius cells.

    Returns parent maps keyed by (node index, cell tuple) per source node.
    """
    parents = []
    inside = lambda cell: all(-radius <= c <= radius for c in cell)
    nbrs = [[] for _ in range(graph.n_cell)]
    for orb in graph.orbits:
        a, b = graph.node_index(orb.u), graph.node_index(orb.v)
        nbrs[a].append((b, orb.offset))
        nbrs[b].append((a, tuple(-o for o in orb.offset)))
    zero = (0,) * graph.d
    for s in range(graph.n_cell):
        par = {(s, zero): None}
        queue = deque([(s, zero)])
        while queue:
            x, cell = queue.popleft()
            for y, off in nbrs[x]:
                ncell = tuple(c + o for c, o in zip(cell, off))
                if inside(ncell) and (y, ncell) not in par:
                    par[(y, ncell)] = (x, cell)
                    queue.append((y, ncell))
        parents.append(par)
    return parents


def _extract_path(par, target):
    path = []
    cur = target
    while cur is not None:
        path.append(cur)
        cur = par[cur]
    path.reverse()
    return path


def connectedness_certificate(graph, raise_on_failure=True):
    """Certify connectedness of the infinite periodic graph.

    The graph is connected iff (a) the quotient multigraph on cell nodes is
    connected and (b) closed-walk offset sums generate all of Z^d.  (b) is
    decided exactly from the reduced integer basis of the cycle-offset
    subgroup.  On success the result carries, for every ordered node pair and
    every unit translation e_m, a shortest witness path found by BFS on a
    window of +-4 cells.
    """
    if graph.n_cell == 0:
        raise ValueError("graph has no nodes")
    comps = _quotient_components(graph)
    quotient_ok = len(comps) == 1

    lattice_index = 0
    basis = []
    if quotient_ok:
        # spanning-tree potentials, then fundamental cycle offsets
        pot = {0: (0,) * graph.d}
        nbrs = [[] for _ in range(graph.n_cell)]
        for orb in graph.orbits:
            a, b = graph.node_index(orb.u), graph.node_index(orb.v)
            nbrs[a].append((b, orb.offset))
            nbrs[b].append((a, tuple(-o for o in orb.offset)))
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for y, off in nbrs[x]:
                if y not in pot:
                    pot[y] = tuple(p + o for p, o in zip(pot[x], off))
                    queue.append(y)
        cycles = []
        for orb in graph.orbits:
            a, b = graph.node_index(orb.u), graph.node_index(orb.v)
            vec = tuple(pot[a][m] + orb.offset[m] - pot[b][m] for m in range(graph.d))
            if any(vec):
                cycles.append(vec)
        basis = _hnf_rows(cycles, graph.d)
        if len(basis) == graph.d:
            det = 1
            for row in basis:
                det *= row[next(i for i, x in enumerate(row) if x != 0)]
            lattice_index = abs(det)

    connected = quotient_ok and lattice_index == 1
    witnesses = {}
    if connected:
        parents = _window_bfs_paths(graph, radius=4)
        for si, src in enumerate(graph.nodes):
            for tj, tgt in enumerate(graph.nodes):
                for m in range(graph.d):
                    cell = tuple(1 if mm == m else 0 for mm in range(graph.d))
                    key = (tj, cell)
                    if key not in parents[si]:
                        raise DisconnectedGraph(
                            f"no path from {src} to {tgt} shifted by e_{m+1} "
                            "within a 4-cell window", reason="window-bfs")
                    path = _extract_path(parents[si], key)
                    witnesses[(src, tgt, m)] = [(graph.nodes[x], c) for x, c in path]

    result = ConnectivityResult(connected, quotient_ok, lattice_index,
                                [[graph.nodes[i] for i in comp] for comp in comps],
                                basis, witnesses)
    if not connected and raise_on_failure:
        if not quotient_ok:
            raise DisconnectedGraph(
                f"quotient graph has {len(comps)} components",
                reason="quotient", detail=result.components)
        raise DisconnectedGraph(
            "translation offsets generate a proper sublattice "
            f"(index {lattice_index if lattice_index else 'infinite'})",
            reason="sublattice", detail=basis)
    return result


# ---------------------------------------------------------------------------
# validation


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list
    R: int

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "ok": self.ok,
            "R": self.R,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                       for c in self.checks],
        }


def validate(graph):
    """Check the standing assumptions; failures are reported, not raised."""
    checks = []

    bad = [n for n in graph.nodes
           if any(not (0 <= c < graph.T) for c in n.dpos)
           or any(not (0 <= c < graph.M) for c in n.kpos)]
    checks.append(CheckResult(
        "node-ranges", not bad,
        "all node coordinates in range" if not bad else f"out of range: {bad[:3]}"))

    bad_w = [o for o in graph.orbits if not (o.weight > 0 and math.isfinite(o.weight))]
    checks.append(CheckResult(
        "weight-positivity", not bad_w,
        "all weights positive" if not bad_w else f"non-positive weight on {bad_w[0]}"))

    loops = [o for o in graph.orbits
             if not any(o.displacement(graph.T)[0] + o.displacement(graph.T)[1])]
    checks.append(CheckResult(
        "no-self-loop", not loops,
        "no zero-displacement orbit" if not loops else f"self loop: {loops[0]}"))

    R = graph.max_displacement()
    checks.append(CheckResult(
        "range-bound", R <= graph.T,
        f"R = {R} <= T = {graph.T}" if R <= graph.T else f"R = {R} > T = {graph.T}"))

    try:
        cert = connectedness_certificate(graph, raise_on_failure=False)
        ok = cert.connected
        if ok:
            detail = "connected (quotient connected, lattice index 1)"
        elif not cert.quotient_connected:
            detail = f"quotient graph has {len(cert.components)} components"
        else:
            detail = f"offset sublattice has index {cert.lattice_index or 'infinite'}"
    except ValueError as exc:
        ok, detail = False, str(exc)
    checks.append(CheckResult("connectedness", ok, detail))

    return ValidationReport(checks, R)


# ---------------------------------------------------------------------------
# finite instantiation


@dataclass
class FiniteVertex:
    cell: tuple
    node: CellNode
    pos_d: tuple
    pos_k: tuple


@dataclass
class FiniteGraph:
    """A finite window of cells of a periodic graph.

    `vertices` covers every (cell, node) pair of the window; `edges` holds
    (ia, ib, weight) index pairs, one entry per orbit instance.  Under the
    clamped policy, edges leaving the window keep their outside endpoint in
    `boundary_vertices` and appear in `ghost_edges` as (inside index, ghost
    index, weight).
    """

    graph: LatticeGraph
    window: tuple               # ((lo, hi), ...) per axis, hi exclusive, cell units
    wrap: str
    vertices: list
    edges: list
    boundary_vertices: list
    ghost_edges: list

    def vertex_index(self, cell, node):
        return self._vindex[(cell, self.graph.node_index(node))]

    def cell_vertices(self, cell):
        try:
            return self._cells[tuple(cell)]
        except KeyError:
            raise CellOutOfWindow(f"cell {tuple(cell)} outside window {self.window}") from None

    @property
    def cells(self):
        return list(self._cells)


def instantiate_window(graph, window, wrap="open"):
    """Materialize the cells of `window` ((lo, hi) per axis, hi exclusive).

    wrap policy: "open" drops edges leaving the window, "clamped" keeps them
    with the outside endpoint marked as boundary, "periodic" wraps cell
    indices modulo the window extents.
    """
    if wrap not in ("open", "clamped", "periodic"):
        raise ValueError(f"unknown wrap policy {wrap!r}")
    window = tuple((int(lo), int(hi)) for lo, hi in window)
    if len(window) != graph.d:
        raise ValueError("window arity != d")
    if any(hi <= lo for lo, hi in window):
        raise EmptyWindow(f"empty window {window}")

    cells = list(product(*(range(lo, hi) for lo, hi in window)))
    vertices = []
    vindex = {}
    cmap = {}
    for cell in cells:
        cmap[cell] = []
        for ni, node in enumerate(graph.nodes):
            pos_d = tuple(node.dpos[m] + graph.T * cell[m] for m in range(graph.d))
            vindex[(cell, ni)] = len(vertices)
            cmap[cell].append(len(vertices))
            vertices.append(FiniteVertex(cell, node, pos_d, node.kpos))

    extents = tuple(hi - lo for lo, hi in window)
    edges = []
    boundary = []
    bindex = {}
    ghost_edges = []
    for cell in cells:
        for orb in graph.orbits:
            ia = vindex[(cell, graph.node_index(orb.u))]
            tcell = tuple(c + o for c, o in zip(cell, orb.offset))
            if all(lo <= t < hi for (lo, hi), t in zip(window, tcell)):
                edges.append((ia, vindex[(tcell, graph.node_index(orb.v))], orb.weight))
            elif wrap == "open":
                continue
            elif wrap == "periodic":
                wcell = tuple(lo + (t - lo) % ext
                              for (lo, hi), ext, t in zip(window, extents, tcell))
                edges.append((ia, vindex[(wcell, graph.node_index(orb.v))], orb.weight))
            else:  # clamped: ghost endpoint
                key = (tcell, graph.node_index(orb.v))
                if key not in bindex:
                    bindex[key] = len(boundary)
                    pos_d = tuple(orb.v.dpos[m] + graph.T * tcell[m] for m in range(graph.d))
                    boundary.append(FiniteVertex(tcell, orb.v, pos_d, orb.v.kpos))
                ghost_edges.append((ia, bindex[key], orb.weight))
        if wrap == "clamped":
            # instances anchored outside the window but ending inside it
            for orb in graph.orbits:
                scell = tuple(c - o for c, o in zip(cell, orb.offset))
                if all(lo <= s < hi for (lo, hi), s in zip(window, scell)):
                    continue
                ib = vindex[(cell, graph.node_index(orb.v))]
                key = (scell, graph.node_index(orb.u))
                if key not in bindex:
                    bindex[key] = len(boundary)
                    pos_d = tuple(orb.u.dpos[m] + graph.T * scell[m] for m in range(graph.d))
                    boundary.append(FiniteVertex(scell, orb.u, pos_d, orb.u.kpos))
                ghost_edges.append((ib, bindex[key], orb.weight))

    fg = FiniteGraph(graph, window, wrap, vertices, edges, boundary, ghost_edges)
    fg._vindex = vindex
    fg._cells = cmap
    return fg


def graph_from_edges(d, k, T, node_coords, edge_list, M=None):
    """Convenience constructor from plain tuples.

    `node_coords` is an iterable of (dpos..., kpos...) integer tuples;
    `edge_list` holds (from coords, to coords, offset, weight).
    """
    nodes = [CellNode(tuple(c[:d]), tuple(c[d:])) for c in node_coords]
    by_coords = {tuple(n.dpos + n.kpos): n for n in nodes}
    orbits = []
    for a, b, off, w in edge_list:
        orbits.append(EdgeOrbit(by_coords[tuple(a)], by_coords[tuple(b)],
                                tuple(off), float(w)))
    return LatticeGraph(d, k, T, nodes, orbits, M=M)


def normalize_period(graph, new_T=None):
    """Re-tile the cell to period lcm(T, M) so that the cross-section fits.

    The infinite graph is unchanged; only the bookkeeping period grows.
    """
    T2 = new_T if new_T is not None else math.lcm(graph.T, graph.M)
    if T2 % graph.T != 0:
        raise ValueError("new period must be a multiple of the current one")
    reps = T2 // graph.T
    nodes = []
    for node in graph.nodes:
        for shift in product(range(reps), repeat=graph.d):
            nodes.append(CellNode(
                tuple(node.dpos[m] + graph.T * shift[m] for m in range(graph.d)),
                node.kpos))
    orbits = []
    for orb in graph.orbits:
        for shift in product(range(reps), repeat=graph.d):
            u = CellNode(tuple(orb.u.dpos[m] + graph.T * shift[m] for m in range(graph.d)),
                         orb.u.kpos)
            vabs = tuple(orb.v.dpos[m] + graph.T * (shift[m] + orb.offset[m])
                         for m in range(graph.d))
            off = tuple(c // T2 for c in vabs)
            v = CellNode(tuple(c - T2 * o for c, o in zip(vabs, off)), orb.v.kpos)
            orbits.append(EdgeOrbit(u, v, off, orb.weight))
    return LatticeGraph(graph.d, graph.k, T2, nodes, orbits, M=graph.M)
