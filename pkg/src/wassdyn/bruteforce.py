"""Exhaustive references for tiny transport problems.

Enumerates every basic solution of the transportation polytope (all spanning
trees of the complete bipartite support graph) and evaluates objectives over
them.  Exponential in the atom counts: intended for problems with at most
four or five atoms per side, as an independent check of the simplex path.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def _tree_flows(cells, m: int, n: int, wa, wb):
    """Solve the flows on a candidate basis; None when not a spanning tree."""
    nv = m + n
    adj = [[] for _ in range(nv)]
    for k, (i, j) in enumerate(cells):
        adj[i].append((m + j, k))
        adj[m + j].append((i, k))
    parent = [-2] * nv
    parent_arc = [-1] * nv
    parent[0] = -1
    order = [0]
    head = 0
    while head < len(order):
        node = order[head]
        head += 1
        for other, k in adj[node]:
            if parent[other] == -2:
                parent[other] = node
                parent_arc[other] = k
                order.append(other)
    if len(order) != nv:
        return None
    net = [0.0] * nv
    for i in range(m):
        net[i] = wa[i]
    for j in range(n):
        net[m + j] = -wb[j]
    flows = [0.0] * len(cells)
    for node in reversed(order[1:]):
        f = net[node] if node < m else -net[node]
        flows[parent_arc[node]] = f
        net[parent[node]] += net[node]
    return flows


def vertex_plans(wa, wb):
    """All vertices of the transportation polytope as (i, j, mass) triples."""
    wa = np.asarray(wa, dtype=float)
    wb = np.asarray(wb, dtype=float)
    m, n = wa.shape[0], wb.shape[0]
    cells_all = [(i, j) for i in range(m) for j in range(n)]
    seen = set()
    out = []
    for subset in combinations(range(m * n), m + n - 1):
        cells = [cells_all[k] for k in subset]
        flows = _tree_flows(cells, m, n, wa, wb)
        if flows is None:
            continue
        if min(flows) < -1e-12:
            continue
        entries = tuple(sorted((i, j, round(max(f, 0.0), 15))
                               for (i, j), f in zip(cells, flows) if f > 1e-14))
        if entries in seen:
            continue
        seen.add(entries)
        out.append(entries)
    return out


def plan_value(entries, matrix) -> float:
    return float(sum(m * matrix[i, j] for i, j, m in entries))


def min_cost(wa, wb, cost) -> float:
    """LP optimum by exhaustive vertex search."""
    return min(plan_value(p, np.asarray(cost, dtype=float))
               for p in vertex_plans(wa, wb))


def face_extrema(wa, wb, primary, secondary, face_tol: float | None = None):
    """(min, max) of a secondary objective over the primary-optimal face."""
    primary = np.asarray(primary, dtype=float)
    secondary = np.asarray(secondary, dtype=float)
    plans = vertex_plans(wa, wb)
    costs = [plan_value(p, primary) for p in plans]
    best = min(costs)
    if face_tol is None:
        face_tol = 1e-9 * (1.0 + abs(best))
    vals = [plan_value(p, secondary)
            for p, c in zip(plans, costs) if c <= best + face_tol]
    return min(vals), max(vals)
