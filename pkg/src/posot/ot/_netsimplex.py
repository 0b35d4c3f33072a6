"""Primal network simplex for the balanced transportation problem.

Rows are supply nodes ``0..n-1``, columns are demand nodes ``n..n+m-1`` and
node ``n+m`` is an artificial root. The starting basis routes every supply
to the root and every demand from the root through arcs of prohibitive
cost, which makes the initial tree strongly feasible. Leaving arcs follow
Cunningham's last-blocking-arc rule, so strong feasibility is preserved and
degenerate pivots cannot cycle. Entering arcs are chosen by block search.

The tree is rebuilt from its arc list after every pivot (O(n+m)); that is
cheap next to pricing and keeps the bookkeeping short.
"""

import numpy as np
from numba import njit

STATUS_OPTIMAL = 0
STATUS_MAX_ITER = 1
STATUS_UNBOUNDED = 2


@njit(cache=True)
def _rebuild(tail, head, cost, n_nodes, root, deg, ptr, adj, parent, pslot,
             depth, pi, queue):
    n_arcs = tail.shape[0]
    for v in range(n_nodes):
        deg[v] = 0
    for s in range(n_arcs):
        deg[tail[s]] += 1
        deg[head[s]] += 1
    ptr[0] = 0
    for v in range(n_nodes):
        ptr[v + 1] = ptr[v] + deg[v]
        deg[v] = 0
    for s in range(n_arcs):
        x = tail[s]
        adj[ptr[x] + deg[x]] = s
        deg[x] += 1
        y = head[s]
        adj[ptr[y] + deg[y]] = s
        deg[y] += 1

    parent[root] = -1
    pslot[root] = -1
    depth[root] = 0
    pi[root] = 0.0
    queue[0] = root
    q_head = 0
    q_tail = 1
    while q_head < q_tail:
        v = queue[q_head]
        q_head += 1
        for k in range(ptr[v], ptr[v + 1]):
            s = adj[k]
            if s == pslot[v]:
                continue
            if tail[s] == v:
                c = head[s]
                # arc v -> c: pi[v] - pi[c] = cost
                pi[c] = pi[v] - cost[s]
            else:
                c = tail[s]
                # arc c -> v: pi[c] - pi[v] = cost
                pi[c] = pi[v] + cost[s]
            parent[c] = v
            pslot[c] = s
            depth[c] = depth[v] + 1
            queue[q_tail] = c
            q_tail += 1
    return q_tail


@njit(cache=True)
def network_simplex(a, b, C, max_iter, eps):
    """Solve min <G, C> s.t. G 1 = a, G^T 1 = b, G >= 0.

    Returns ``(G, u, v, iterations, status)`` where ``u``/``v`` are dual
    potentials with ``u_i + v_j <= C_ij`` (equality on basic arcs).
    """
    n, m = C.shape
    nm = n * m
    root = n + m
    n_nodes = n + m + 1
    n_arcs = n + m

    cmax = 0.0
    for i in range(n):
        for j in range(m):
            if abs(C[i, j]) > cmax:
                cmax = abs(C[i, j])
    art_cost = (cmax + 1.0) * n_nodes
    tol = eps * max(cmax, 1.0)

    tail = np.empty(n_arcs, np.int64)
    head = np.empty(n_arcs, np.int64)
    cost = np.empty(n_arcs, np.float64)
    flow = np.empty(n_arcs, np.float64)
    arc_id = np.empty(n_arcs, np.int64)
    for i in range(n):
        tail[i] = i
        head[i] = root
        cost[i] = art_cost
        flow[i] = a[i]
        arc_id[i] = -1
    for j in range(m):
        tail[n + j] = root
        head[n + j] = n + j
        cost[n + j] = art_cost
        flow[n + j] = b[j]
        arc_id[n + j] = -1

    deg = np.empty(n_nodes, np.int64)
    ptr = np.empty(n_nodes + 1, np.int64)
    adj = np.empty(2 * n_arcs, np.int64)
    parent = np.empty(n_nodes, np.int64)
    pslot = np.empty(n_nodes, np.int64)
    depth = np.empty(n_nodes, np.int64)
    pi = np.empty(n_nodes, np.float64)
    queue = np.empty(n_nodes, np.int64)
    path_k = np.empty(n_nodes, np.int64)
    path_l = np.empty(n_nodes, np.int64)

    _rebuild(tail, head, cost, n_nodes, root, deg, ptr, adj, parent, pslot,
             depth, pi, queue)

    block = int(np.sqrt(nm))
    if block < 16:
        block = 16
    if block > nm:
        block = nm
    cursor = 0
    it = 0
    status = STATUS_OPTIMAL
    while True:
        # block-search pricing over real arcs
        best = -tol
        bi = -1
        bj = -1
        scanned = 0
        while scanned < nm:
            stop = scanned + block
            if stop > nm:
                stop = nm
            for t in range(scanned, stop):
                pos = cursor + t
                if pos >= nm:
                    pos -= nm
                i = pos // m
                j = pos - i * m
                rc = C[i, j] - pi[i] + pi[n + j]
                if rc < best:
                    best = rc
                    bi = i
                    bj = j
            scanned = stop
            if bi >= 0:
                break
        if bi < 0:
            break
        cursor = (cursor + scanned) % nm
        if it >= max_iter:
            status = STATUS_MAX_ITER
            break
        it += 1

        k = bi
        l = n + bj
        # tree paths from both endpoints up to their common ancestor
        nk = 0
        nl = 0
        x = k
        y = l
        while depth[x] > depth[y]:
            path_k[nk] = x
            nk += 1
            x = parent[x]
        while depth[y] > depth[x]:
            path_l[nl] = y
            nl += 1
            y = parent[y]
        while x != y:
            path_k[nk] = x
            nk += 1
            x = parent[x]
            path_l[nl] = y
            nl += 1
            y = parent[y]

        # walk the cycle apex -> k -> l -> apex; keep the last blocking arc
        delta = np.inf
        leave = -1
        for q in range(nk - 1, -1, -1):
            v = path_k[q]
            s = pslot[v]
            if head[s] != v:  # arc v -> parent traversed against its direction
                if flow[s] <= delta:
                    delta = flow[s]
                    leave = s
        for q in range(nl):
            v = path_l[q]
            s = pslot[v]
            if tail[s] != v:  # arc parent -> v traversed against its direction
                if flow[s] <= delta:
                    delta = flow[s]
                    leave = s
        if leave < 0:
            status = STATUS_UNBOUNDED
            break

        for q in range(nk):
            v = path_k[q]
            s = pslot[v]
            if head[s] == v:
                flow[s] += delta
            else:
                flow[s] -= delta
        for q in range(nl):
            v = path_l[q]
            s = pslot[v]
            if tail[s] == v:
                flow[s] += delta
            else:
                flow[s] -= delta
        tail[leave] = k
        head[leave] = l
        cost[leave] = C[bi, bj]
        flow[leave] = delta
        arc_id[leave] = bi * m + bj
        _rebuild(tail, head, cost, n_nodes, root, deg, ptr, adj, parent, pslot,
                 depth, pi, queue)

    G = np.zeros((n, m))
    for s in range(n_arcs):
        if arc_id[s] >= 0:
            i = arc_id[s] // m
            j = arc_id[s] - i * m
            f = flow[s]
            if f < 0.0:
                f = 0.0
            G[i, j] += f
    u = np.empty(n)
    v = np.empty(m)
    for i in range(n):
        u[i] = pi[i]
    for j in range(m):
        v[j] = -pi[n + j]
    return G, u, v, it, status
