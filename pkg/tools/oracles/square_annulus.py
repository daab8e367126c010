"""Reference modulus of the annulus between concentric squares of side 1 and 4.

Independent of the package: a node-aligned Cartesian grid (both squares
fall on grid lines), a weighted graph Laplacian on one quadrant with
half-weight edges along the symmetry axes, and pyamg.  The modulus is
1 / Dirichlet energy.  Prints the values per grid and the extrapolation
using the observed convergence order.
"""

import math
import sys

import numpy as np
import pyamg
from scipy.sparse import coo_matrix


def quadrant_energy(n_full: int) -> float:
    """Energy on the full annulus with ``n_full`` cells across the outer side."""
    m = n_full // 2            # intervals on [0, 2]
    k = n_full // 8            # inner half-side 0.5 in cells
    x = np.arange(m + 1)
    I, J = np.meshgrid(x, x, indexing="ij")
    fixed0 = (I <= k) & (J <= k)
    fixed1 = (I == m) | (J == m)
    free = ~(fixed0 | fixed1)
    val = np.where(fixed1, 1.0, 0.0)
    idx = -np.ones(I.shape, dtype=np.int64)
    idx[free] = np.arange(int(free.sum()))

    edges = []
    # edges along each axis; half weight on the symmetry line they run along
    for di, dj in ((1, 0), (0, 1)):
        a = (slice(0, m + 1 - di), slice(0, m + 1 - dj))
        b = (slice(di, m + 1), slice(dj, m + 1))
        w = np.ones((m + 1 - di, m + 1 - dj))
        if di:
            w[:, 0] = 0.5
        else:
            w[0, :] = 0.5
        edges.append((idx[a].ravel(), idx[b].ravel(), val[a].ravel(), val[b].ravel(),
                      w.ravel()))
    n = int(free.sum())
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    diag = np.zeros(n)
    for ia, ib, va, vb, w in edges:
        fa, fb = ia >= 0, ib >= 0
        both = fa & fb
        rows += [ia[both], ib[both]]
        cols += [ib[both], ia[both]]
        vals += [-w[both], -w[both]]
        np.add.at(diag, ia[fa], w[fa])
        np.add.at(diag, ib[fb], w[fb])
        s = fa & ~fb
        np.add.at(rhs, ia[s], w[s] * vb[s])
        s = fb & ~fa
        np.add.at(rhs, ib[s], w[s] * va[s])
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    A = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(n, n)).tocsr()
    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
    u = ml.solve(rhs, tol=1e-12, accel="cg", maxiter=1000)
    full = val.copy()
    full[free] = u
    dx = np.diff(full, axis=0)
    dy = np.diff(full, axis=1)
    wx = np.ones_like(dx)
    wx[:, 0] = 0.5
    wy = np.ones_like(dy)
    wy[0, :] = 0.5
    e = float(np.sum(wx * dx ** 2) + np.sum(wy * dy ** 2))
    return 4.0 * e


def main(grids=(1024, 2048, 4096)):
    mods = []
    for n in grids:
        mods.append(1.0 / quadrant_energy(n))
        print(f"grid {n}: modulus {mods[-1]!r}")
    d1, d2 = mods[1] - mods[0], mods[2] - mods[1]
    p = math.log2(d1 / d2)
    ext = mods[2] + d2 / (2 ** p - 1)
    print(f"observed order {p:.4f}")
    print(f"extrapolated {ext!r}")
    return ext


if __name__ == "__main__":
    main(tuple(int(a) for a in sys.argv[1:]) or (1024, 2048, 4096))
