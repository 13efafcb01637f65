"""Hypergraph incidence structure, degrees, weights, and the hyperedge-precision metric.

Vertices and hyperedges are both indexed by correspondence index: hyperedge j
collects the vertices whose initial weight to j is positive, plus j itself, so
the incidence matrix is square (N x N, row = vertex, column = hyperedge).
"""

from dataclasses import dataclass

import numpy as np

from .compat import CompatGraph
from .errors import NoEdges


@dataclass(frozen=True)
class Hypergraph:
    h: np.ndarray     # (N, N) binary incidence, float64 holding {0, 1}
    w_h: np.ndarray   # (N, N) nonnegative weights, zero where h is zero

    @property
    def n(self) -> int:
        return self.h.shape[0]


def init_hypergraph(g: CompatGraph) -> Hypergraph:
    """Incidence from the positive support of w_h0, plus self-membership.

    Every non-isolated vertex i is added to its own hyperedge with weight 1 so
    that hypothesis sampling over e_i always contains the seed. Isolated
    vertices keep an all-zero row and column.
    """
    w0 = g.w_h0
    h = (w0 > 0).astype(np.float64)
    w_h = w0.copy()
    non_isolated = h.sum(axis=1) > 0
    idx = np.flatnonzero(non_isolated)
    h[idx, idx] = 1.0
    w_h[idx, idx] = 1.0
    return Hypergraph(h=h, w_h=w_h)


def vertex_degrees(hg: Hypergraph) -> np.ndarray:
    """D(v_i): number of hyperedges containing vertex i (row sums)."""
    return hg.h.sum(axis=1)


def hyperedge_degrees(hg: Hypergraph) -> np.ndarray:
    """D(e_j): number of vertices in hyperedge j (column sums)."""
    return hg.h.sum(axis=0)


def hyperedge_weights(hg: Hypergraph) -> np.ndarray:
    """W(e_j): total weight mass of hyperedge j (column sums of w_h)."""
    return hg.w_h.sum(axis=0)


def gt_hypergraph(labels) -> Hypergraph:
    """Ground-truth incidence: h*(i, j) = 1 iff i and j are both inliers."""
    lab = np.asarray(labels, dtype=bool).astype(np.float64)
    h = np.outer(lab, lab)
    return Hypergraph(h=h, w_h=h.copy())


def hyperedge_precision(hg: Hypergraph, labels) -> float:
    """Mean inlier fraction over non-empty hyperedges, in [0, 1].

    Empty hyperedges are excluded from the mean (a 0/0 term is undefined).
    Raises NoEdges when every hyperedge is empty.
    """
    lab = np.asarray(labels, dtype=bool)
    sizes = hg.h.sum(axis=0)
    nonempty = sizes > 0
    if not np.any(nonempty):
        raise NoEdges("every hyperedge is empty")
    inlier_counts = hg.h[lab, :].sum(axis=0)
    fractions = inlier_counts[nonempty] / sizes[nonempty]
    return float(np.mean(fractions))


def excluded_edge_count(hg: Hypergraph) -> int:
    """Number of empty hyperedges left out of the precision mean."""
    return int(np.sum(hg.h.sum(axis=0) == 0))


def dump(hg: Hypergraph) -> str:
    """Debug listing: one line per hyperedge with sorted members and weights."""
    lines = []
    for j in range(hg.n):
        members = np.flatnonzero(hg.h[:, j] > 0)
        weights = " ".join(format(hg.w_h[i, j], ".6g") for i in members)
        vs = " ".join(str(i) for i in members)
        lines.append(f"edge {j}: v=[{vs}] w=[{weights}]")
    return "\n".join(lines)
