# cython: language_level=3, boundscheck=False, wraparound=False
# cython: cdivision=True, initializedcheck=False
"""Compiled kernel backend.

Bit-compatible mirror of ``_pykernels``: every floating point operation is
performed in the same order on the same IEEE-754 doubles, and the extension
is compiled with FMA contraction disabled, so results match the pure
backend exactly.  See ``_pykernels`` for the semantic documentation.
"""

from libc.math cimport INFINITY, exp
from libc.stdlib cimport free, malloc

import numpy as np

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

BACKEND = "compiled"

ctypedef unsigned long long u64
ctypedef Py_ssize_t isize


def bfs_distances(cindptr, cindices, source):
    """Hop distances from ``source`` to every vertex; -1 where unreachable."""
    cdef int[::1] cip = np.ascontiguousarray(cindptr, dtype=np.int32)
    cdef int[::1] cix = np.ascontiguousarray(cindices, dtype=np.int32)
    cdef isize n = cip.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int32)
    cdef int[::1] dist = dist_arr
    frontier_arr = np.empty(n, dtype=np.int32)
    nxt_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] frontier = frontier_arr
    cdef int[::1] nxt = nxt_arr
    cdef isize n_front = 1, n_next, i, e
    cdef int v, w, d = 0
    dist[<isize>source] = 0
    frontier[0] = <int>source
    while n_front > 0:
        d += 1
        n_next = 0
        for i in range(n_front):
            v = frontier[i]
            for e in range(cip[v], cip[v + 1]):
                w = cix[e]
                if dist[w] < 0:
                    dist[w] = d
                    nxt[n_next] = w
                    n_next += 1
        frontier, nxt = nxt, frontier
        n_front = n_next
    return dist_arr


def static_value_iteration(cindptr, cindices, reward, horizon, gamma, pm,
                           scale):
    """Finite-horizon sweep over a static reward field (see pure backend)."""
    cdef int[::1] cip = np.ascontiguousarray(cindptr, dtype=np.int32)
    cdef int[::1] cix = np.ascontiguousarray(cindices, dtype=np.int32)
    cdef double[::1] rew = np.ascontiguousarray(reward, dtype=np.float64)
    cdef double[:, ::1] pmv = np.ascontiguousarray(pm, dtype=np.float64)
    cdef isize n = rew.shape[0]
    cdef int h = <int>horizon
    cdef double g = <double>gamma, sc = <double>scale
    out = np.zeros((h + 1, n), dtype=np.float64)
    cdef double[:, ::1] values = out
    cdef isize t, s, e, sp
    cdef double best, factor, q
    for t in range(h - 1, -1, -1):
        for s in range(n):
            best = -INFINITY
            for e in range(cip[s], cip[s + 1]):
                sp = cix[e]
                factor = 1.0 - sc * pmv[t + 1, sp]
                if factor < 0.0:
                    factor = 0.0
                q = rew[sp] + g * (factor * values[t + 1, sp])
                if q > best:
                    best = q
            values[t, s] = best
    return out


def boltzmann_probabilities(cindptr, cindices, reward, values, gamma,
                            temperature):
    """Per-stage softmax over successor action values (see pure backend)."""
    cdef int[::1] cip = np.ascontiguousarray(cindptr, dtype=np.int32)
    cdef int[::1] cix = np.ascontiguousarray(cindices, dtype=np.int32)
    cdef double[::1] rew = np.ascontiguousarray(reward, dtype=np.float64)
    cdef double[:, ::1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef isize h = vals.shape[0] - 1
    cdef isize n = cip.shape[0] - 1
    cdef double g = <double>gamma, tau = <double>temperature
    out = np.zeros((h, cix.shape[0]), dtype=np.float64)
    cdef double[:, ::1] prob = out
    cdef isize t, s, e, sp, lo, hi
    cdef double best, q, w, z
    for t in range(h):
        for s in range(n):
            lo = cip[s]
            hi = cip[s + 1]
            best = -INFINITY
            for e in range(lo, hi):
                sp = cix[e]
                q = rew[sp] + g * vals[t + 1, sp]
                if q > best:
                    best = q
            z = 0.0
            for e in range(lo, hi):
                sp = cix[e]
                q = rew[sp] + g * vals[t + 1, sp]
                w = exp((q - best) / tau)
                prob[t, e] = w
                z += w
            for e in range(lo, hi):
                prob[t, e] /= z
    return out


def propagate_mass(cindptr, cindices, probs, start, horizon):
    """Forward-propagate occupancy mass through a stage policy."""
    cdef int[::1] cip = np.ascontiguousarray(cindptr, dtype=np.int32)
    cdef int[::1] cix = np.ascontiguousarray(cindices, dtype=np.int32)
    cdef double[:, ::1] prob = np.ascontiguousarray(probs, dtype=np.float64)
    cdef isize n = cip.shape[0] - 1
    cdef isize h = <isize>horizon
    cdef isize h_policy = prob.shape[0]
    out = np.zeros((h + 1, n), dtype=np.float64)
    cdef double[:, ::1] occ = out
    cdef isize t, s, e
    cdef double m
    occ[0, <isize>start] = 1.0
    for t in range(h):
        if t >= h_policy:
            for s in range(n):
                occ[t + 1, s] = occ[t, s]
            continue
        for s in range(n):
            m = occ[t, s]
            if m == 0.0:
                continue
            for e in range(cip[s], cip[s + 1]):
                occ[t + 1, cix[e]] += m * prob[t, e]
    return out


cdef inline double _action_q(u64 m, u64 occ2, isize pos2_base,
                             const double* vn, int nb, const double* frac,
                             const u64* prox, double p, double g,
                             double* pi_of) nogil:
    cdef u64 m_ext = m & ~occ2
    cdef double total = 0.0
    cdef int b, cbits
    for b in range(nb):
        if (m_ext >> b) & 1:
            total += frac[b]
    cdef double base_r = 1.0 - total
    cdef u64 blocked = m_ext | occ2
    cdef u64 cand = 0
    cdef double pi
    for b in range(nb):
        if (blocked >> b) & 1:
            continue
        cbits = __builtin_popcountll(m_ext & prox[b])
        if cbits == 0:
            continue
        pi = p * cbits
        if pi > 1.0:
            pi = 1.0
        cand |= (<u64>1) << b
        pi_of[b] = pi
    cdef double q = 0.0
    cdef u64 sub = 0
    cdef double prob, sub_area, r
    while True:
        prob = 1.0
        sub_area = 0.0
        for b in range(nb):
            if (cand >> b) & 1:
                if (sub >> b) & 1:
                    prob *= pi_of[b]
                    sub_area += frac[b]
                else:
                    prob *= 1.0 - pi_of[b]
        r = base_r - sub_area
        q += prob * (r + g * vn[pos2_base + <isize>(m_ext | sub)])
        if sub == cand:
            break
        sub = (sub - cand) & cand
    return q


def joint_value_iteration_kernel(cindptr, cindices, n_agents, building_vertex,
                                 vertex_building, area_frac, prox_mask, p,
                                 gamma, horizon):
    """Exact finite-horizon backup over the joint (positions, fire) space."""
    cdef int[::1] cip = np.ascontiguousarray(cindptr, dtype=np.int32)
    cdef int[::1] cix = np.ascontiguousarray(cindices, dtype=np.int32)
    cdef int[::1] vb = np.ascontiguousarray(vertex_building, dtype=np.int32)
    cdef double[::1] frac = np.ascontiguousarray(area_frac, dtype=np.float64)
    cdef u64[::1] prox = np.ascontiguousarray(prox_mask, dtype=np.uint64)
    cdef int na = <int>n_agents
    cdef int nb = <int>len(building_vertex)
    cdef isize n_v = cip.shape[0] - 1
    cdef isize n_masks = (<isize>1) << nb
    cdef isize n_pos = 1
    cdef int i
    for i in range(na):
        n_pos *= n_v
    cdef isize n_states = n_pos * n_masks
    cdef int h = <int>horizon
    cdef double pp = <double>p, g = <double>gamma
    out = np.zeros((h + 1, n_states), dtype=np.float64)
    cdef double[:, ::1] values = out
    pi_arr = np.zeros(nb if nb else 1, dtype=np.float64)
    cdef double[::1] pi_of = pi_arr
    cdef isize* pow_v = <isize*>malloc(na * sizeof(isize))
    cdef isize* positions = <isize*>malloc(na * sizeof(isize))
    cdef isize* astart = <isize*>malloc(na * sizeof(isize))
    cdef isize* alen = <isize*>malloc(na * sizeof(isize))
    cdef isize* c = <isize*>malloc(na * sizeof(isize))
    if not (pow_v and positions and astart and alen and c):
        free(pow_v); free(positions); free(astart); free(alen); free(c)
        raise MemoryError()
    for i in range(na):
        pow_v[i] = n_v ** (na - 1 - i)
    cdef isize t, pos_idx, pos_base, pos2_idx, pos2_base, m, tgt
    cdef const double* vn
    cdef double* vt
    cdef double q
    cdef u64 occ2
    cdef int b, j
    cdef bint done
    try:
        with nogil:
            for t in range(h - 1, -1, -1):
                vn = &values[t + 1, 0]
                vt = &values[t, 0]
                for pos_idx in range(n_pos):
                    pos_base = pos_idx * n_masks
                    for i in range(na):
                        positions[i] = (pos_idx // pow_v[i]) % n_v
                        astart[i] = cip[positions[i]]
                        alen[i] = cip[positions[i] + 1] - astart[i]
                        c[i] = 0
                    for m in range(n_masks):
                        vt[pos_base + m] = -INFINITY
                    # odometer over joint moves, lexicographic by agent order
                    while True:
                        pos2_idx = 0
                        occ2 = 0
                        for i in range(na):
                            tgt = cix[astart[i] + c[i]]
                            pos2_idx += tgt * pow_v[i]
                            b = vb[tgt]
                            if b >= 0:
                                occ2 |= (<u64>1) << b
                        pos2_base = pos2_idx * n_masks
                        for m in range(n_masks):
                            q = _action_q(<u64>m, occ2, pos2_base, vn, nb,
                                          &frac[0], &prox[0], pp, g,
                                          &pi_of[0])
                            if q > vt[pos_base + m]:
                                vt[pos_base + m] = q
                        j = na - 1
                        done = False
                        while j >= 0:
                            c[j] += 1
                            if c[j] < alen[j]:
                                break
                            c[j] = 0
                            j -= 1
                        if j < 0:
                            break
    finally:
        free(pow_v); free(positions); free(astart); free(alen); free(c)
    return out


def joint_q_values(cindptr, cindices, n_agents, building_vertex,
                   vertex_building, area_frac, prox_mask, p, gamma, v_next,
                   positions, fire_mask):
    """All joint moves from one state with their action values."""
    cdef int[::1] cip = np.ascontiguousarray(cindptr, dtype=np.int32)
    cdef int[::1] cix = np.ascontiguousarray(cindices, dtype=np.int32)
    cdef int[::1] vb = np.ascontiguousarray(vertex_building, dtype=np.int32)
    cdef double[::1] frac = np.ascontiguousarray(area_frac, dtype=np.float64)
    cdef u64[::1] prox = np.ascontiguousarray(prox_mask, dtype=np.uint64)
    cdef double[::1] vn = np.ascontiguousarray(v_next, dtype=np.float64)
    cdef long[::1] pos = np.ascontiguousarray(positions, dtype=np.int64)
    cdef int na = <int>n_agents
    cdef int nb = <int>len(building_vertex)
    cdef isize n_v = cip.shape[0] - 1
    cdef isize n_masks = (<isize>1) << nb
    cdef u64 m = <u64>fire_mask
    cdef double pp = <double>p, g = <double>gamma
    pi_arr = np.zeros(nb if nb else 1, dtype=np.float64)
    cdef double[::1] pi_of = pi_arr
    cdef isize n_actions = 1
    cdef int i
    for i in range(na):
        n_actions *= cip[pos[i] + 1] - cip[pos[i]]
    targets_arr = np.empty((n_actions, na), dtype=np.int32)
    q_arr = np.empty(n_actions, dtype=np.float64)
    cdef int[:, ::1] targets = targets_arr
    cdef double[::1] qs = q_arr
    cdef isize* pow_v = <isize*>malloc(na * sizeof(isize))
    cdef isize* astart = <isize*>malloc(na * sizeof(isize))
    cdef isize* alen = <isize*>malloc(na * sizeof(isize))
    cdef isize* c = <isize*>malloc(na * sizeof(isize))
    if not (pow_v and astart and alen and c):
        free(pow_v); free(astart); free(alen); free(c)
        raise MemoryError()
    cdef isize k = 0, pos2_idx, tgt
    cdef u64 occ2
    cdef int b, j
    try:
        for i in range(na):
            pow_v[i] = n_v ** (na - 1 - i)
            astart[i] = cip[pos[i]]
            alen[i] = cip[pos[i] + 1] - astart[i]
            c[i] = 0
        while True:
            pos2_idx = 0
            occ2 = 0
            for i in range(na):
                tgt = cix[astart[i] + c[i]]
                targets[k, i] = <int>tgt
                pos2_idx += tgt * pow_v[i]
                b = vb[tgt]
                if b >= 0:
                    occ2 |= (<u64>1) << b
            qs[k] = _action_q(m, occ2, pos2_idx * n_masks, &vn[0], nb,
                              &frac[0], &prox[0], pp, g, &pi_of[0])
            k += 1
            j = na - 1
            while j >= 0:
                c[j] += 1
                if c[j] < alen[j]:
                    break
                c[j] = 0
                j -= 1
            if j < 0:
                break
    finally:
        free(pow_v); free(astart); free(alen); free(c)
    return targets_arr, q_arr


def joint_greedy_action(cindptr, cindices, n_agents, building_vertex,
                        vertex_building, area_frac, prox_mask, p, gamma,
                        v_next, positions, fire_mask):
    """Best joint move from one state; ties break to the lexicographically
    smallest target tuple (agent 0 first)."""
    targets, qs = joint_q_values(cindptr, cindices, n_agents, building_vertex,
                                 vertex_building, area_frac, prox_mask, p,
                                 gamma, v_next, positions, fire_mask)
    cdef double[::1] q = qs
    cdef isize best = 0, i
    for i in range(1, q.shape[0]):
        if q[i] > q[best]:
            best = i
    return targets[best].copy()
