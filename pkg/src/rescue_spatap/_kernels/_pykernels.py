"""Pure-Python kernel backend.

This module is the reference implementation of the numeric kernels.  The
compiled backend (``_cykernels``) mirrors every loop and every floating point
operation in the same order, so the two backends produce bit-identical
results (the extension is built with FMA contraction disabled).

Conventions shared by both backends:

* graphs arrive as CSR ``indptr``/``indices`` int32 arrays with each row
  sorted ascending; "closed" adjacency rows additionally contain the row
  vertex itself (staying put is always a legal move),
* stage-value tables have shape ``(horizon + 1, n)`` with the terminal stage
  all zero,
* fire configurations are bitmasks over building slots (bit ``i`` is the
  ``i``-th building), capped at 62 buildings.
"""

import math

import numpy as np

BACKEND = "pure"


def bfs_distances(indptr, indices, source):
    """Hop distances from ``source`` to every vertex; -1 where unreachable."""
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int32)
    dist[source] = 0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                if dist[w] < 0:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


def static_value_iteration(cindptr, cindices, reward, horizon, gamma, pm, scale):
    """Finite-horizon sweep over a static reward field.

    Backup: ``V[t][s] = max over closed successors s' of
    reward[s'] + gamma * (clamp(1 - scale * pm[t+1][s'], 0) * V[t+1][s'])``.
    With ``scale == 0`` the presence term is exactly 1.0 and the sweep
    degenerates to the plain single-agent recursion.
    """
    n = len(reward)
    cip = cindptr.tolist()
    cix = cindices.tolist()
    rew = reward.tolist()
    values = np.zeros((horizon + 1, n), dtype=np.float64)
    vn = values[horizon].tolist()
    pml = pm.tolist()
    for t in range(horizon - 1, -1, -1):
        pmn = pml[t + 1]
        vt = [0.0] * n
        for s in range(n):
            best = -math.inf
            for e in range(cip[s], cip[s + 1]):
                sp = cix[e]
                factor = 1.0 - scale * pmn[sp]
                if factor < 0.0:
                    factor = 0.0
                q = rew[sp] + gamma * (factor * vn[sp])
                if q > best:
                    best = q
            vt[s] = best
        values[t] = vt
        vn = vt
    return values


def boltzmann_probabilities(cindptr, cindices, reward, values, gamma, temperature):
    """Per-stage softmax over successor action values.

    Output row layout matches ``cindices``: entry ``(t, e)`` is the
    probability of moving along closed edge ``e`` at stage ``t``.  The max
    action value is subtracted before exponentiation, which leaves the
    distribution unchanged but keeps ``exp`` in range.
    """
    h = values.shape[0] - 1
    n = len(cindptr) - 1
    cip = cindptr.tolist()
    cix = cindices.tolist()
    rew = reward.tolist()
    out = np.zeros((h, len(cindices)), dtype=np.float64)
    for t in range(h):
        vn = values[t + 1].tolist()
        row = out[t]
        for s in range(n):
            lo, hi = cip[s], cip[s + 1]
            best = -math.inf
            for e in range(lo, hi):
                sp = cix[e]
                q = rew[sp] + gamma * vn[sp]
                if q > best:
                    best = q
            z = 0.0
            for e in range(lo, hi):
                sp = cix[e]
                q = rew[sp] + gamma * vn[sp]
                w = math.exp((q - best) / temperature)
                row[e] = w
                z += w
            for e in range(lo, hi):
                row[e] /= z
    return out


def propagate_mass(cindptr, cindices, probs, start, horizon):
    """Forward-propagate one unit of occupancy mass through a stage policy.

    ``probs`` has shape ``(h_policy, nnz)`` aligned with ``cindices``.  Past
    the policy's own horizon the agent is assumed to hold position, so mass
    is copied through unchanged.
    """
    n = len(cindptr) - 1
    cip = cindptr.tolist()
    cix = cindices.tolist()
    h_policy = probs.shape[0]
    occ = np.zeros((horizon + 1, n), dtype=np.float64)
    occ[0, start] = 1.0
    for t in range(horizon):
        src = occ[t]
        if t >= h_policy:
            occ[t + 1] = src
            continue
        srcl = src.tolist()
        prow = probs[t].tolist()
        dst = [0.0] * n
        for s in range(n):
            m = srcl[s]
            if m == 0.0:
                continue
            for e in range(cip[s], cip[s + 1]):
                dst[cix[e]] += m * prow[e]
        occ[t + 1] = dst
    return occ


def _joint_setup(cindptr, cindices, n_agents, building_vertex, vertex_building,
                 area_frac, prox_mask):
    n_v = len(cindptr) - 1
    rows = [
        [int(x) for x in cindices[cindptr[v]:cindptr[v + 1]]] for v in range(n_v)
    ]
    vb = [int(x) for x in vertex_building]
    frac = [float(x) for x in area_frac]
    prox = [int(x) for x in prox_mask]
    pow_v = [n_v ** (n_agents - 1 - i) for i in range(n_agents)]
    return n_v, rows, vb, frac, prox, pow_v


def _mask_frac(mask, frac, nb):
    total = 0.0
    for b in range(nb):
        if (mask >> b) & 1:
            total += frac[b]
    return total


def _action_q(m, occ2, pos2_base, vn, nb, frac, prox, p, gamma, pi_of):
    """Expected one-step value of a joint move under fire configuration ``m``.

    Moves first, then extinguish by occupancy, then spread: each clear and
    unoccupied building ignites independently with probability
    ``min(1, p * count of still-burning buildings in range)``.
    """
    m_ext = m & ~occ2
    base_r = 1.0 - _mask_frac(m_ext, frac, nb)
    blocked = m_ext | occ2
    cand = 0
    for b in range(nb):
        if (blocked >> b) & 1:
            continue
        c = (m_ext & prox[b]).bit_count()
        if c == 0:
            continue
        pi = p * c
        if pi > 1.0:
            pi = 1.0
        cand |= 1 << b
        pi_of[b] = pi
    q = 0.0
    sub = 0
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
        q += prob * (r + gamma * vn[pos2_base + (m_ext | sub)])
        if sub == cand:
            break
        sub = (sub - cand) & cand
    return q


def joint_value_iteration_kernel(cindptr, cindices, n_agents, building_vertex,
                                 vertex_building, area_frac, prox_mask, p,
                                 gamma, horizon):
    """Exact finite-horizon backup over the joint (positions, fire) space.

    States are encoded ``pos_index * 2**nb + fire_mask`` with
    ``pos_index = sum(pos[i] * n_v**(n_agents-1-i))`` (agent 0 most
    significant).  Returns the full stage-value array of shape
    ``(horizon + 1, n_v**n_agents * 2**nb)``.
    """
    n_v, rows, vb, frac, prox, pow_v = _joint_setup(
        cindptr, cindices, n_agents, building_vertex, vertex_building,
        area_frac, prox_mask)
    nb = len(building_vertex)
    n_masks = 1 << nb
    n_pos = n_v ** n_agents
    n_states = n_pos * n_masks
    values = np.zeros((horizon + 1, n_states), dtype=np.float64)
    vn = values[horizon].tolist()
    pi_of = [0.0] * nb
    for t in range(horizon - 1, -1, -1):
        vt = [0.0] * n_states
        for pos_idx in range(n_pos):
            pos_base = pos_idx * n_masks
            positions = [(pos_idx // pow_v[i]) % n_v for i in range(n_agents)]
            arows = [rows[positions[i]] for i in range(n_agents)]
            best = [-math.inf] * n_masks
            # odometer over joint moves, lexicographic by agent order
            c = [0] * n_agents
            while True:
                pos2_idx = 0
                occ2 = 0
                for i in range(n_agents):
                    tgt = arows[i][c[i]]
                    pos2_idx += tgt * pow_v[i]
                    b = vb[tgt]
                    if b >= 0:
                        occ2 |= 1 << b
                pos2_base = pos2_idx * n_masks
                for m in range(n_masks):
                    q = _action_q(m, occ2, pos2_base, vn, nb, frac, prox, p,
                                  gamma, pi_of)
                    if q > best[m]:
                        best[m] = q
                i = n_agents - 1
                while i >= 0:
                    c[i] += 1
                    if c[i] < len(arows[i]):
                        break
                    c[i] = 0
                    i -= 1
                if i < 0:
                    break
            vt[pos_base:pos_base + n_masks] = best
        values[t] = vt
        vn = vt
    return values


def joint_q_values(cindptr, cindices, n_agents, building_vertex,
                   vertex_building, area_frac, prox_mask, p, gamma, v_next,
                   positions, fire_mask):
    """All joint moves from one state with their action values.

    Returns ``(targets, q)`` where ``targets`` is ``(n_actions, n_agents)``
    int32 in lexicographic order and ``q`` the matching value array.
    """
    n_v, rows, vb, frac, prox, pow_v = _joint_setup(
        cindptr, cindices, n_agents, building_vertex, vertex_building,
        area_frac, prox_mask)
    nb = len(building_vertex)
    n_masks = 1 << nb
    vn = v_next.tolist()
    pi_of = [0.0] * nb
    m = int(fire_mask)
    arows = [rows[int(positions[i])] for i in range(n_agents)]
    targets = []
    qs = []
    c = [0] * n_agents
    while True:
        tgt = [arows[i][c[i]] for i in range(n_agents)]
        pos2_idx = 0
        occ2 = 0
        for i in range(n_agents):
            pos2_idx += tgt[i] * pow_v[i]
            b = vb[tgt[i]]
            if b >= 0:
                occ2 |= 1 << b
        qs.append(_action_q(m, occ2, pos2_idx * n_masks, vn, nb, frac, prox,
                            p, gamma, pi_of))
        targets.append(tgt)
        i = n_agents - 1
        while i >= 0:
            c[i] += 1
            if c[i] < len(arows[i]):
                break
            c[i] = 0
            i -= 1
        if i < 0:
            break
    return np.array(targets, dtype=np.int32), np.array(qs, dtype=np.float64)


def joint_greedy_action(cindptr, cindices, n_agents, building_vertex,
                        vertex_building, area_frac, prox_mask, p, gamma,
                        v_next, positions, fire_mask):
    """Best joint move from one state; ties break to the lexicographically
    smallest target tuple (agent 0 first)."""
    targets, qs = joint_q_values(cindptr, cindices, n_agents, building_vertex,
                                 vertex_building, area_frac, prox_mask, p,
                                 gamma, v_next, positions, fire_mask)
    best = 0
    for i in range(1, len(qs)):
        if qs[i] > qs[best]:
            best = i
    return targets[best].copy()
