"""Single-linkage pre-clustering with adaptive branch cuts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster

from .errors import InvalidInputError
from .geometry import _as_points, torus_distance, wrap_angle

DEFAULT_MIN_SIZE = 15
DEFAULT_MAX_OUTLIER = np.deg2rad(50.0)


@dataclass
class Dendrogram:
    """Single-linkage tree in scipy linkage-matrix layout.

    Row ``i`` of ``linkage`` merges nodes ``linkage[i, 0]`` and
    ``linkage[i, 1]`` at height ``linkage[i, 2]`` into node ``n + i``
    holding ``linkage[i, 3]`` leaves.
    """

    linkage: np.ndarray
    n: int
    ties: bool = False

    @property
    def heights(self) -> np.ndarray:
        return self.linkage[:, 2]

    def children(self, node):
        row = self.linkage[node - self.n]
        return int(row[0]), int(row[1])

    def size(self, node) -> int:
        return 1 if node < self.n else int(self.linkage[node - self.n, 3])

    def leaves(self, node) -> np.ndarray:
        out, stack = [], [node]
        while stack:
            k = stack.pop()
            if k < self.n:
                out.append(k)
            else:
                stack.extend(self.children(k))
        return np.sort(np.array(out, dtype=int))

    def components(self, threshold) -> np.ndarray:
        """Component label per leaf after dropping merges above ``threshold``."""
        if self.n == 1:
            return np.ones(1, dtype=int)
        return fcluster(self.linkage, threshold, criterion="distance")


def _mst_edges(x):
    """Prim's algorithm on the torus metric with O(n) memory."""
    n = x.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.zeros(n, dtype=int)
    edges = np.empty((n - 1, 3))
    cur = 0
    in_tree[0] = True
    for k in range(n - 1):
        d = torus_distance(x, x[cur])
        upd = (d < best) & ~in_tree
        best[upd] = d[upd]
        parent[upd] = cur
        cand = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(cand))
        edges[k] = (min(nxt, parent[nxt]), max(nxt, parent[nxt]), best[nxt])
        in_tree[nxt] = True
        cur = nxt
    return edges


def single_linkage(points) -> Dendrogram:
    """Single-linkage agglomeration under the torus distance.

    Merges are ordered by height, then by the smaller and larger index of
    the joining pair.
    """
    x = wrap_angle(_as_points(points))
    n = x.shape[0]
    if n < 1:
        raise InvalidInputError("need at least one point")
    if n == 1:
        return Dendrogram(np.empty((0, 4)), 1)
    edges = _mst_edges(x)
    order = np.lexsort((edges[:, 1], edges[:, 0], edges[:, 2]))
    edges = edges[order]
    ties = bool(np.any(np.diff(edges[:, 2]) == 0.0))

    root = np.arange(n)
    node_of = np.arange(n)  # current cluster node id for each union-find root
    size = np.ones(2 * n - 1, dtype=int)

    def find(i):
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    Z = np.empty((n - 1, 4))
    for k, (i, j, h) in enumerate(edges):
        ri, rj = find(int(i)), find(int(j))
        a, b = sorted((node_of[ri], node_of[rj]))
        size[n + k] = size[a] + size[b]
        Z[k] = (a, b, h, size[n + k])
        root[rj] = ri
        node_of[ri] = n + k
    return Dendrogram(Z, n, ties)


@dataclass
class PreClustering:
    clusters: list  # arrays of original indices, in extraction order
    outliers: np.ndarray
    min_size: int
    max_outlier: float
    flags: list = field(default_factory=list)

    def labels(self, n) -> np.ndarray:
        """Cluster label per point (0-based), -1 for outliers."""
        out = np.full(n, -1, dtype=int)
        for k, idx in enumerate(self.clusters):
            out[idx] = k
        return out


def _branch_candidates(tree: Dendrogram, s_p):
    """Walk along the larger branch and collect candidate subtrees."""
    found = []
    last_larger = None
    node = 2 * tree.n - 2
    while node >= tree.n:
        a, b = tree.children(node)
        # larger first; ties go to the lower node id
        if tree.size(b) > tree.size(a):
            a, b = b, a
        small = tree.size(b)
        if small > s_p:
            found.append(b)
        if small >= s_p:
            last_larger = a
        node = a
    if last_larger is not None:
        found.append(last_larger)
    return found


def adaptive_branch_cut(
    points, m=DEFAULT_MIN_SIZE, d_max=DEFAULT_MAX_OUTLIER
) -> PreClustering:
    """Iteratively peel dense single-linkage branches off the data.

    Each round first removes components of fewer than ``m`` points at
    linkage scale ``d_max`` as outliers.  The remaining tree is walked
    from the root along the larger branch; side branches with more than
    ``S = sqrt(|P| + m²)`` points are candidates, as is the larger branch
    at the deepest fork whose side branch reaches ``S``.  The largest
    candidate becomes the next cluster; without candidates all remaining
    points form one final cluster.
    """
    x = _as_points(points)
    if m < 1 or d_max <= 0:
        raise InvalidInputError("need m >= 1 and d_max > 0")
    remaining = np.arange(x.shape[0])
    clusters, outliers, flags = [], [], []
    while remaining.size:
        tree = single_linkage(x[remaining])
        labels = tree.components(d_max)
        counts = np.bincount(labels)
        small = counts[labels] < m
        if small.any():
            outliers.extend(remaining[small].tolist())
            remaining = remaining[~small]
            if not remaining.size:
                break
            tree = single_linkage(x[remaining])
        if tree.ties:
            flags.append("tied-merge-heights")
        s_p = np.sqrt(remaining.size + m * m)
        cand = _branch_candidates(tree, s_p)
        if not cand:
            clusters.append(remaining.copy())
            break
        sizes = [tree.size(c) for c in cand]
        pick = cand[int(np.argmax(sizes))]
        members = remaining[tree.leaves(pick)]
        clusters.append(members)
        remaining = np.setdiff1d(remaining, members, assume_unique=True)
    return PreClustering(
        clusters=clusters,
        outliers=np.sort(np.array(outliers, dtype=int)),
        min_size=m,
        max_outlier=float(d_max),
        flags=sorted(set(flags)),
    )
