"""Pure-numpy shortest-augmenting-path assignment (fallback for the compiled kernel)."""
import numpy as np


def solve(cost):
    """Min-cost assignment of every row to a distinct column (rows <= cols).

    Successive shortest paths with Dijkstra on reduced costs; each row is
    augmented in turn. Returns ``(col_of_row, u, v)`` with the same dual
    guarantees as the compiled kernel.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n > m:
        raise ValueError("need rows <= cols")
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.intp)
    way = np.zeros(m + 1, dtype=np.intp)

    if n and m:
        u[1:] = cost.min(axis=1)
        for i, j in enumerate(cost.argmin(axis=1), start=1):
            if p[j + 1] == 0:
                p[j + 1] = i
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[p[p > 0]] = True

    for i in range(1, n + 1):
        if seeded[i]:
            continue
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    col_of_row = np.full(n, -1, dtype=np.intp)
    cols = np.nonzero(p[1:])[0]
    col_of_row[p[cols + 1] - 1] = cols
    return col_of_row, u[1:].copy(), v[1:].copy()
