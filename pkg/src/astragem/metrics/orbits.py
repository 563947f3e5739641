"""Graphlet orbit counts by exhaustive subset enumeration.

Every node is scored against the 15 automorphism orbits of the connected
graphlets on 2-4 nodes (standard numbering):

    0  edge endpoint                8  4-cycle node
    1  path P3 end                  9  paw pendant
    2  path P3 middle               10 paw triangle node (unattached)
    3  triangle node                11 paw attachment node
    4  path P4 end                  12 diamond degree-2 node
    5  path P4 middle               13 diamond degree-3 node
    6  star S3 leaf                 14 K4 node
    7  star S3 center

Enumeration over all <=4-node subsets is exact and fast for the graph sizes
this package targets (n <= 20).
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

N_ORBITS = 15


def orbit_counts(adjacency: np.ndarray) -> np.ndarray:
    """Per-node orbit count matrix of shape (n, 15)."""
    a = np.asarray(adjacency)
    n = a.shape[0]
    counts = np.zeros((n, N_ORBITS), dtype=np.int64)

    counts[:, 0] = a.sum(axis=1)  # orbit 0: one count per incident edge

    for trio in combinations(range(n), 3):
        sub = a[np.ix_(trio, trio)]
        m = int(sub.sum()) // 2
        if m == 2:
            degs = sub.sum(axis=1)
            for i, v in enumerate(trio):
                counts[v, 2 if degs[i] == 2 else 1] += 1
        elif m == 3:
            for v in trio:
                counts[v, 3] += 1

    for quad in combinations(range(n), 4):
        sub = a[np.ix_(quad, quad)]
        degs = sub.sum(axis=1)
        m = int(degs.sum()) // 2
        if m < 3 or degs.min() == 0:
            continue  # disconnected (or too sparse to be connected)
        if m == 3:
            if degs.max() == 3:  # star
                for i, v in enumerate(quad):
                    counts[v, 7 if degs[i] == 3 else 6] += 1
            else:  # path P4
                for i, v in enumerate(quad):
                    counts[v, 5 if degs[i] == 2 else 4] += 1
        elif m == 4:
            if degs.max() == 2:  # 4-cycle
                for v in quad:
                    counts[v, 8] += 1
            else:  # paw
                for i, v in enumerate(quad):
                    if degs[i] == 1:
                        counts[v, 9] += 1
                    elif degs[i] == 3:
                        counts[v, 11] += 1
                    else:
                        counts[v, 10] += 1
        elif m == 5:  # diamond
            for i, v in enumerate(quad):
                counts[v, 13 if degs[i] == 3 else 12] += 1
        else:  # m == 6: K4
            for v in quad:
                counts[v, 14] += 1

    return counts
