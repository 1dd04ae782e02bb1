"""Dense brute-force evaluation of the cell problem, used as test ground truth.

This deliberately shares nothing with the sparse conjugate-gradient path: the
stationarity system is assembled from the neighbour lists over ordered pairs,
solved with an explicit pseudo-inverse, and the energy is then evaluated by
literally summing the ordered-pair interaction terms.
"""

from __future__ import annotations

import numpy as np

from .cell import convention_factor
from .errors import InvalidDirection, TooLarge
from .graph import neighbors

SIZE_CAP = 64


def brute_force_cell_oracle(graph, z, convention="double"):
    """Minimum cell energy per volume for direction z, by dense linear algebra."""
    n = graph.n_cell
    if n > SIZE_CAP:
        raise TooLarge(f"oracle handles at most {SIZE_CAP} cell nodes, got {n}")
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != (graph.d,) or not np.all(np.isfinite(z)):
        raise InvalidDirection(f"direction must be a finite vector of length {graph.d}")

    # ordered-pair terms w * (chi_i - chi_j - g_ij)^2 with g_ij = z . (pos_j - pos_i)
    pairs = []
    for i, node in enumerate(graph.nodes):
        for nbr, offset, w in neighbors(graph, node):
            j = graph.node_index(nbr)
            disp = [nbr.dpos[m] + graph.T * offset[m] - node.dpos[m]
                    for m in range(graph.d)]
            g = float(z @ np.asarray(disp, dtype=float))
            pairs.append((i, j, w, g))

    Q = np.zeros((n, n))
    lin = np.zeros(n)
    for i, j, w, g in pairs:
        Q[i, i] += w
        Q[j, j] += w
        Q[i, j] -= w
        Q[j, i] -= w
        lin[i] -= w * g
        lin[j] += w * g
    chi = -np.linalg.pinv(2.0 * Q) @ (2.0 * lin)

    energy = 0.0
    for i, j, w, g in pairs:
        diff = chi[i] - chi[j] - g
        energy += w * diff * diff
    # the ordered-pair sum above is the double-count value
    return convention_factor(convention) / 2.0 * energy / graph.T ** graph.d
