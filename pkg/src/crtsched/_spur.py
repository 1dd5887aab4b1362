"""Compiled shortest-path kernels used by Yen's algorithm.

Weights are integer picoseconds so that equal-length paths compare exactly.
Among all minimum-weight spur paths the search returns the one with the
lexicographically smallest vertex sequence.
"""
import numpy as np
from numba import njit

NO_PATH = -1
INF = np.iinfo(np.int64).max


@njit(cache=True, inline="always")
def _push(hk, hv, size, key, val):
    i = size
    hk[i] = key
    hv[i] = val
    while i > 0:
        parent = (i - 1) >> 1
        if hk[parent] < hk[i] or (hk[parent] == hk[i] and hv[parent] <= hv[i]):
            break
        hk[parent], hk[i] = hk[i], hk[parent]
        hv[parent], hv[i] = hv[i], hv[parent]
        i = parent
    return size + 1


@njit(cache=True, inline="always")
def _pop(hk, hv, size):
    key = hk[0]
    val = hv[0]
    size -= 1
    hk[0] = hk[size]
    hv[0] = hv[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        c = left
        right = left + 1
        if right < size and (hk[right] < hk[left] or (hk[right] == hk[left] and hv[right] < hv[left])):
            c = right
        if hk[i] < hk[c] or (hk[i] == hk[c] and hv[i] <= hv[c]):
            break
        hk[c], hk[i] = hk[i], hk[c]
        hv[c], hv[i] = hv[i], hv[c]
        i = c
    return key, val, size


@njit(cache=True)
def distances_to(rev_ptr, rev_src, rev_eid, fwd_w, t, out, hk, hv):
    """Full Dijkstra on reversed edges: ``out[u]`` = weight of the shortest ``u -> t`` path."""
    out[:] = INF
    done = np.zeros(out.shape[0], dtype=np.bool_)
    out[t] = 0
    size = _push(hk, hv, 0, 0, t)
    while size > 0:
        d, v, size = _pop(hk, hv, size)
        if done[v]:
            continue
        done[v] = True
        for k in range(rev_ptr[v], rev_ptr[v + 1]):
            u = rev_src[k]
            nd = d + fwd_w[rev_eid[k]]
            if nd < out[u]:
                out[u] = nd
                size = _push(hk, hv, size, nd, u)


@njit(cache=True)
def spur_path(fwd_ptr, fwd_dst, fwd_w, node_block, edge_block, s, t, h, g, done, reach, touched, hk, hv):
    """Forward A* from ``s`` to ``t`` on the unblocked subgraph.

    ``h`` must be a consistent lower bound on the distance to ``t`` (the
    unrestricted distances are). Every node whose A* key does not exceed the
    optimum is settled, so a shortest path is exactly a walk over tight edges;
    the walk picks the smallest-id tight successor that can still reach ``t``.
    ``g`` must be all ``INF`` and ``done``/``reach`` all False on entry; they are
    restored before returning.
    """
    ntouch = 0
    g[s] = 0
    touched[ntouch] = s
    ntouch += 1
    size = _push(hk, hv, 0, h[s], s)
    best = INF
    nsettled = 0
    settled = np.empty(fwd_ptr.shape[0], dtype=np.int64)
    while size > 0:
        f, u, size = _pop(hk, hv, size)
        if f > best:
            break
        if done[u]:
            continue
        done[u] = True
        settled[nsettled] = u
        nsettled += 1
        if u == t:
            best = g[t]
            continue
        gu = g[u]
        for k in range(fwd_ptr[u], fwd_ptr[u + 1]):
            v = fwd_dst[k]
            if done[v] or node_block[v] or edge_block[k] or h[v] == INF:
                continue
            nd = gu + fwd_w[k]
            if nd < g[v]:
                if g[v] == INF:
                    touched[ntouch] = v
                    ntouch += 1
                g[v] = nd
                size = _push(hk, hv, size, nd + h[v], v)
    total = np.int64(NO_PATH)
    out = np.empty(0, dtype=np.int64)
    if best != INF:
        total = best
        # which settled nodes reach t over tight edges: sweep in decreasing g
        keys = np.empty(nsettled, dtype=np.int64)
        for i in range(nsettled):
            keys[i] = g[settled[i]]
        order = np.argsort(-keys, kind="mergesort")
        reach[t] = True
        for oi in range(nsettled):
            u = settled[order[oi]]
            if u == t:
                continue
            for k in range(fwd_ptr[u], fwd_ptr[u + 1]):
                v = fwd_dst[k]
                if reach[v] and not node_block[v] and not edge_block[k] and done[v] and g[u] + fwd_w[k] == g[v]:
                    reach[u] = True
                    break
        buf = np.empty(nsettled, dtype=np.int64)
        n = 0
        u = s
        buf[n] = s
        n += 1
        while u != t:
            nxt = -1
            # out-edges are sorted by head id, so the first usable tight edge is the lexicographic minimum
            for k in range(fwd_ptr[u], fwd_ptr[u + 1]):
                v = fwd_dst[k]
                if reach[v] and not node_block[v] and not edge_block[k] and done[v] and g[u] + fwd_w[k] == g[v]:
                    nxt = v
                    break
            buf[n] = nxt
            n += 1
            u = nxt
        out = buf[:n].copy()
        for i in range(nsettled):
            reach[settled[i]] = False
    for i in range(ntouch):
        g[touched[i]] = INF
        done[touched[i]] = False
    return total, out
