"""Primal network simplex for dense balanced transportation problems.

This file is written in Cython "pure Python" mode: it imports and runs as an
ordinary Python module (the slow fallback), and the build compiles the very
same source into a C extension that shadows it (the fast kernel).  Both paths
execute the identical pivot sequence; the interpreted path additionally
vectorizes arc pricing with numpy so it stays usable on larger instances.

Problem: min sum_ij c_ij x_ij subject to row sums a_i, column sums b_j,
x >= 0, with sum a == sum b.  The solver returns an exact basic optimal
solution (a vertex of the transportation polytope), the dual potentials of
the final basis, and the basis itself so a second, face-restricted solve can
warm start from it (used for lexicographic objectives).

Pivoting: Dantzig pricing (most negative reduced cost) with first-index tie
breaking; after a long run of degenerate pivots the entering rule switches to
Bland's rule, which cannot cycle, and switches back on the next real step.
"""

import numpy as np

try:
    import cython
except ModuleNotFoundError:  # pragma: no cover - cython is a light runtime dep
    class _SubscriptableStub:
        def __getitem__(self, item):
            return self

        def __call__(self, *args, **kwargs):
            return args[0] if args else None

    class _CythonStub:
        compiled = False

        def __getattr__(self, name):
            return _SubscriptableStub()

    cython = _CythonStub()

COMPILED = bool(cython.compiled)


class SimplexError(RuntimeError):
    """Numerical breakdown of the transport solver (should not happen on
    valid inputs; indicates a solver bug or corrupted warm start)."""


def _northwest_basis(a, b):
    """Initial spanning-tree basis with exactly m+n-1 cells."""
    m = a.shape[0]
    n = b.shape[0]
    brow = np.empty(m + n - 1, dtype=np.intp)
    bcol = np.empty(m + n - 1, dtype=np.intp)
    bflow = np.empty(m + n - 1, dtype=np.float64)
    i = 0
    j = 0
    ra = float(a[0])
    rb = float(b[0])
    k = 0
    while True:
        f = ra if ra < rb else rb
        brow[k] = i
        bcol[k] = j
        bflow[k] = f
        k += 1
        if i == m - 1 and j == n - 1:
            break
        # guard both ends: float drift must never push an index out of range
        if j == n - 1 or (i < m - 1 and ra <= rb):
            rb -= f
            i += 1
            ra = float(a[i])
        else:
            ra -= f
            j += 1
            rb = float(b[j])
    if k != m + n - 1:
        raise SimplexError("northwest-corner start produced a deficient basis")
    return brow, bcol, bflow


def _rebuild_tree(m: cython.Py_ssize_t, nv: cython.Py_ssize_t,
                  brow: cython.Py_ssize_t[:], bcol: cython.Py_ssize_t[:],
                  parent: cython.Py_ssize_t[:], parent_arc: cython.Py_ssize_t[:],
                  depth: cython.Py_ssize_t[:], order: cython.Py_ssize_t[:],
                  adj_start: cython.Py_ssize_t[:], adj_arc: cython.Py_ssize_t[:],
                  scratch: cython.Py_ssize_t[:]) -> cython.Py_ssize_t:
    """BFS the basis tree from node 0; returns number of visited nodes."""
    k: cython.Py_ssize_t
    node: cython.Py_ssize_t
    other: cython.Py_ssize_t
    arc: cython.Py_ssize_t
    na: cython.Py_ssize_t = nv - 1
    for node in range(nv + 1):
        adj_start[node] = 0
    # counting sort of arc endpoints into a CSR adjacency
    for k in range(na):
        adj_start[brow[k] + 1] += 1
        adj_start[m + bcol[k] + 1] += 1
    for node in range(nv):
        adj_start[node + 1] += adj_start[node]
    for node in range(nv):
        scratch[node] = adj_start[node]
    for k in range(na):
        node = brow[k]
        adj_arc[scratch[node]] = k
        scratch[node] += 1
        node = m + bcol[k]
        adj_arc[scratch[node]] = k
        scratch[node] += 1
    for node in range(nv):
        parent[node] = -2  # -2 = unvisited
    parent[0] = -1
    parent_arc[0] = -1
    depth[0] = 0
    order[0] = 0
    head: cython.Py_ssize_t = 0
    tail: cython.Py_ssize_t = 1
    while head < tail:
        node = order[head]
        head += 1
        for k in range(adj_start[node], adj_start[node + 1]):
            arc = adj_arc[k]
            other = brow[arc] if node >= m else m + bcol[arc]
            if parent[other] == -2:
                parent[other] = node
                parent_arc[other] = arc
                depth[other] = depth[node] + 1
                order[tail] = other
                tail += 1
    return tail


def _compute_potentials(m: cython.Py_ssize_t, nv: cython.Py_ssize_t,
                        n: cython.Py_ssize_t, cost: cython.double[:],
                        brow: cython.Py_ssize_t[:], bcol: cython.Py_ssize_t[:],
                        parent: cython.Py_ssize_t[:], parent_arc: cython.Py_ssize_t[:],
                        order: cython.Py_ssize_t[:], pot: cython.double[:]) -> None:
    """Dual potentials from the tree: c_ij = pot[i] + pot[m+j] on basic arcs."""
    idx: cython.Py_ssize_t
    node: cython.Py_ssize_t
    arc: cython.Py_ssize_t
    pot[0] = 0.0
    for idx in range(1, nv):
        node = order[idx]
        arc = parent_arc[node]
        pot[node] = cost[brow[arc] * n + bcol[arc]] - pot[parent[node]]


def _price_dantzig(m: cython.Py_ssize_t, n: cython.Py_ssize_t,
                   cost: cython.double[:], allowed: cython.char[:],
                   pot: cython.double[:], tol: cython.double) -> cython.Py_ssize_t:
    """Most negative reduced cost below -tol; first flat index wins ties."""
    i: cython.Py_ssize_t
    j: cython.Py_ssize_t
    base: cython.Py_ssize_t
    best: cython.Py_ssize_t = -1
    ui: cython.double
    r: cython.double
    best_val: cython.double = -tol
    for i in range(m):
        ui = pot[i]
        base = i * n
        for j in range(n):
            if allowed[base + j] != 0:
                r = cost[base + j] - ui - pot[m + j]
                if r < best_val:
                    best_val = r
                    best = base + j
    return best


def _price_bland(m: cython.Py_ssize_t, n: cython.Py_ssize_t,
                 cost: cython.double[:], allowed: cython.char[:],
                 pot: cython.double[:], tol: cython.double) -> cython.Py_ssize_t:
    """First flat index with reduced cost below -tol."""
    i: cython.Py_ssize_t
    j: cython.Py_ssize_t
    base: cython.Py_ssize_t
    ui: cython.double
    for i in range(m):
        ui = pot[i]
        base = i * n
        for j in range(n):
            if allowed[base + j] != 0:
                if cost[base + j] - ui - pot[m + j] < -tol:
                    return base + j
    return -1


def _pivot(enter: cython.Py_ssize_t, m: cython.Py_ssize_t, n: cython.Py_ssize_t,
           brow: cython.Py_ssize_t[:], bcol: cython.Py_ssize_t[:], bflow: cython.double[:],
           parent: cython.Py_ssize_t[:], parent_arc: cython.Py_ssize_t[:],
           depth: cython.Py_ssize_t[:],
           cyc_arc: cython.Py_ssize_t[:], cyc_sign: cython.Py_ssize_t[:]) -> cython.double:
    """Exchange the entering cell against the blocking basic arc on its cycle.

    Returns the (nonnegative) amount of mass moved; 0 marks a degenerate
    pivot.  Ties in the ratio test break toward the smallest flat cell index.
    """
    ei: cython.Py_ssize_t = enter // n
    ej: cython.Py_ssize_t = enter % n
    na: cython.Py_ssize_t = ei
    nb: cython.Py_ssize_t = m + ej
    k: cython.Py_ssize_t = 0
    pa: cython.Py_ssize_t = 0
    pb: cython.Py_ssize_t = 0
    arc: cython.Py_ssize_t
    # climb to the common ancestor; sign -1 on odd cycle positions per side
    while depth[na] > depth[nb]:
        cyc_arc[k] = parent_arc[na]
        cyc_sign[k] = -1 if pa % 2 == 0 else 1
        pa += 1
        k += 1
        na = parent[na]
    while depth[nb] > depth[na]:
        cyc_arc[k] = parent_arc[nb]
        cyc_sign[k] = -1 if pb % 2 == 0 else 1
        pb += 1
        k += 1
        nb = parent[nb]
    while na != nb:
        cyc_arc[k] = parent_arc[na]
        cyc_sign[k] = -1 if pa % 2 == 0 else 1
        pa += 1
        k += 1
        na = parent[na]
        cyc_arc[k] = parent_arc[nb]
        cyc_sign[k] = -1 if pb % 2 == 0 else 1
        pb += 1
        k += 1
        nb = parent[nb]
    # ratio test over the minus arcs
    delta: cython.double = -1.0
    leave: cython.Py_ssize_t = -1
    leave_cell: cython.Py_ssize_t = -1
    i: cython.Py_ssize_t
    cell: cython.Py_ssize_t
    for i in range(k):
        if cyc_sign[i] < 0:
            arc = cyc_arc[i]
            cell = brow[arc] * n + bcol[arc]
            if delta < 0.0 or bflow[arc] < delta or (bflow[arc] == delta and cell < leave_cell):
                delta = bflow[arc]
                leave = arc
                leave_cell = cell
    if leave < 0:
        raise SimplexError("pivot cycle without a blocking arc")
    for i in range(k):
        arc = cyc_arc[i]
        if cyc_sign[i] < 0:
            bflow[arc] -= delta
            if bflow[arc] < 0.0:
                bflow[arc] = 0.0
        else:
            bflow[arc] += delta
    brow[leave] = ei
    bcol[leave] = ej
    bflow[leave] = delta
    return delta


def _recompute_flows(m: cython.Py_ssize_t, nv: cython.Py_ssize_t,
                     a: cython.double[:], b: cython.double[:],
                     brow: cython.Py_ssize_t[:], bcol: cython.Py_ssize_t[:],
                     bflow: cython.double[:],
                     parent: cython.Py_ssize_t[:], parent_arc: cython.Py_ssize_t[:],
                     order: cython.Py_ssize_t[:], net: cython.double[:]) -> None:
    """Re-solve the basic flows exactly from the marginals (leaf elimination),
    clearing any drift accumulated by pivot updates."""
    node: cython.Py_ssize_t
    idx: cython.Py_ssize_t
    f: cython.double
    for node in range(m):
        net[node] = a[node]
    for node in range(m, nv):
        net[node] = -b[node - m]
    for idx in range(nv - 1, 0, -1):
        node = order[idx]
        f = net[node] if node < m else -net[node]
        if f < 0.0:
            f = 0.0
        bflow[parent_arc[node]] = f
        net[parent[node]] += net[node]


def solve_transport(a, b, cost, allowed=None, basis=None,
                    opt_tol=None, max_pivots=200_000):
    """Solve the balanced transportation problem to proven optimality.

    Parameters
    ----------
    a, b : 1-D float arrays of positive masses with equal sums.
    cost : (m, n) float array.
    allowed : optional (m, n) boolean/uint8 mask of usable arcs.  Requires a
        warm-start ``basis`` whose arcs are all allowed.
    basis : optional (rows, cols, flows) arrays describing a feasible
        spanning-tree basis to warm start from.
    opt_tol : absolute reduced-cost optimality threshold; defaults to
        1e-12 * (1 + max |cost|).

    Returns
    -------
    dict with plan arrays (``rows``, ``cols``, ``mass``), dual potentials
    (``u``, ``v``), ``objective``, the final basis, and pivot counters.
    """
    # writable copies: typed memoryviews reject read-only buffers
    a = np.array(a, dtype=np.float64, order="C")
    b = np.array(b, dtype=np.float64, order="C")
    cmat = np.array(cost, dtype=np.float64, order="C")
    m, n = cmat.shape
    if a.shape[0] != m or b.shape[0] != n:
        raise ValueError("marginal lengths do not match the cost matrix")
    nv = m + n
    cflat = cmat.reshape(-1)
    if opt_tol is None:
        opt_tol = 1e-12 * (1.0 + float(np.abs(cflat).max()))

    if allowed is None:
        allowed_flat = np.ones(m * n, dtype=np.int8)
    else:
        allowed_flat = np.ascontiguousarray(
            np.asarray(allowed, dtype=bool).reshape(-1).astype(np.int8))

    if basis is None:
        if allowed is not None:
            raise ValueError("a restricted arc set requires a warm-start basis")
        brow, bcol, bflow = _northwest_basis(a, b)
    else:
        brow = np.ascontiguousarray(basis[0], dtype=np.intp)
        bcol = np.ascontiguousarray(basis[1], dtype=np.intp)
        bflow = np.array(basis[2], dtype=np.float64)
        if brow.shape[0] != nv - 1:
            raise ValueError("warm-start basis has wrong size")
        if allowed is not None and not np.all(allowed_flat[brow * n + bcol] != 0):
            raise ValueError("warm-start basis uses forbidden arcs")

    parent = np.empty(nv, dtype=np.intp)
    parent_arc = np.empty(nv, dtype=np.intp)
    depth = np.empty(nv, dtype=np.intp)
    order = np.empty(nv, dtype=np.intp)
    adj_start = np.empty(nv + 1, dtype=np.intp)
    adj_arc = np.empty(2 * (nv - 1), dtype=np.intp)
    scratch = np.empty(nv, dtype=np.intp)
    pot = np.empty(nv, dtype=np.float64)
    cyc_arc = np.empty(nv, dtype=np.intp)
    cyc_sign = np.empty(nv, dtype=np.intp)

    mass_scale = float(max(a.max(), b.max()))
    degen_tol = 1e-15 * mass_scale
    bland_trigger = 2 * nv + 20

    n_pivots = 0
    n_degenerate = 0
    degen_run = 0
    use_bland = False

    while True:
        visited = _rebuild_tree(m, nv, brow, bcol, parent, parent_arc, depth,
                                order, adj_start, adj_arc, scratch)
        if visited != nv:
            raise SimplexError("basis does not span the bipartite graph")
        _compute_potentials(m, nv, n, cflat, brow, bcol, parent, parent_arc,
                            order, pot)
        if COMPILED:
            if use_bland:
                enter = _price_bland(m, n, cflat, allowed_flat, pot, opt_tol)
            else:
                enter = _price_dantzig(m, n, cflat, allowed_flat, pot, opt_tol)
        else:
            rc = cflat - np.repeat(pot[:m], n) - np.tile(pot[m:], m)
            rc[allowed_flat == 0] = np.inf
            if use_bland:
                hits = np.nonzero(rc < -opt_tol)[0]
                enter = int(hits[0]) if hits.size else -1
            else:
                k = int(np.argmin(rc))
                enter = k if rc[k] < -opt_tol else -1
        if enter < 0:
            break
        delta = _pivot(enter, m, n, brow, bcol, bflow, parent, parent_arc,
                       depth, cyc_arc, cyc_sign)
        n_pivots += 1
        if delta <= degen_tol:
            n_degenerate += 1
            degen_run += 1
            if degen_run > bland_trigger:
                use_bland = True
        else:
            degen_run = 0
            use_bland = False
        if n_pivots > max_pivots:
            raise SimplexError(f"no convergence within {max_pivots} pivots")

    net = np.empty(nv, dtype=np.float64)
    _recompute_flows(m, nv, a, b, brow, bcol, bflow, parent, parent_arc,
                     order, net)

    brow_arr = np.asarray(brow)
    bcol_arr = np.asarray(bcol)
    bflow_arr = np.asarray(bflow)
    objective = float(np.dot(bflow_arr, cflat[brow_arr * n + bcol_arr]))
    keep = bflow_arr > 0.0
    rows = brow_arr[keep]
    cols = bcol_arr[keep]
    mass = bflow_arr[keep]
    sorter = np.argsort(rows * n + cols, kind="stable")
    pot_arr = np.asarray(pot)
    return {
        "rows": rows[sorter],
        "cols": cols[sorter],
        "mass": mass[sorter],
        "u": pot_arr[:m].copy(),
        "v": pot_arr[m:].copy(),
        "objective": objective,
        "basis": (brow_arr.copy(), bcol_arr.copy(), bflow_arr.copy()),
        "n_pivots": n_pivots,
        "n_degenerate": n_degenerate,
    }
