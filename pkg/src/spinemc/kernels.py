"""Hot loops: growing a marked tree and reading paths back out of it.

Trees live in flat arrays.  Nodes are numbered in creation order (breadth
first, children contiguous); node ``i`` owns path breakpoints
``path_start[i] : path_end[i]`` of the global ``pt/px/py`` arrays, plus the
cumulative integrals ``pcr`` (of R) and ``pcmr`` (of m R) measured from the
tree's time origin along the ancestral line.
"""

import math

import numpy as np

from ._jit import njit
from .rng import child_key_k, exp1_k, normal_k, salted_k, uniform_k

OK = 0
EXPLODED = 1


@njit
def _grow_f(a, need):
    if need <= a.size:
        return a
    out = np.empty(max(need, 2 * a.size), dtype=np.float64)
    out[: a.size] = a
    return out


@njit
def _grow_i(a, need):
    if need <= a.size:
        return a
    out = np.empty(max(need, 2 * a.size), dtype=np.int64)
    out[: a.size] = a
    return out


@njit
def _grow_u(a, need):
    if need <= a.size:
        return a
    out = np.empty(max(need, 2 * a.size), dtype=np.uint64)
    out[: a.size] = a
    return out


@njit
def _pick(cum, u):
    k = 0
    while k < cum.size - 1 and u >= cum[k]:
        k += 1
    return k


@njit
def _next_type(gen, y, u):
    q = -gen[y, y]
    acc = 0.0
    last = y
    for j in range(gen.shape[0]):
        if j == y:
            continue
        last = j
        acc += gen[y, j] / q
        if u < acc:
            return j
    return last


@njit
def grow_tree(root_key, salt, x0, y0, t0, c_r0, c_mr0, t_max, grid_step, checkpoints,
              drift, var, gen, rate, mr, pmf_cum,
              s_drift, s_gen, s_rate, s_pmf_cum,
              spine_mode, fission, max_nodes):
    """Grow one tree from a single ancestor at (x0, y0) born at time t0.

    Off-spine particles use (drift, var, gen, rate, pmf_cum); with
    ``spine_mode`` the ancestral spine uses the ``s_*`` dynamics and picks a
    uniform child to continue at every fission.  Fission times come from
    inverting the cumulative hazard against a unit exponential, exact for the
    piecewise-constant rates used here.  The integrals in pcr/pcmr always use
    the unchanged ``rate`` and ``mr``.
    """
    cap = 64
    parent = np.empty(cap, np.int64)
    child_j = np.empty(cap, np.int64)
    depth = np.empty(cap, np.int64)
    birth = np.empty(cap, np.float64)
    death = np.empty(cap, np.float64)
    n_extra = np.empty(cap, np.int64)
    first_child = np.empty(cap, np.int64)
    spine = np.empty(cap, np.int64)
    keys = np.empty(cap, np.uint64)
    bx = np.empty(cap, np.float64)
    by = np.empty(cap, np.int64)
    bcr = np.empty(cap, np.float64)
    bcmr = np.empty(cap, np.float64)
    pstart = np.empty(cap, np.int64)
    pend = np.empty(cap, np.int64)
    pcap = 1024
    pt = np.empty(pcap, np.float64)
    px = np.empty(pcap, np.float64)
    py = np.empty(pcap, np.int64)
    pcr = np.empty(pcap, np.float64)
    pcmr = np.empty(pcap, np.float64)

    parent[0] = -1
    child_j[0] = 0
    depth[0] = 0
    birth[0] = t0
    keys[0] = root_key
    bx[0] = x0
    by[0] = y0
    bcr[0] = c_r0
    bcmr[0] = c_mr0
    spine[0] = 1 if spine_mode else 0
    n_nodes = 1
    n_pts = 0
    status = OK
    n_ck = checkpoints.size

    i = 0
    while i < n_nodes:
        key = keys[i]
        on_spine = spine[i] == 1
        t = birth[i]
        x = bx[i]
        y = by[i]
        cr = bcr[i]
        cmr = bcmr[i]
        if on_spine:
            dr = s_drift
            gn = s_gen
            rt = s_rate
            pc = s_pmf_cum
        else:
            dr = drift
            gn = gen
            rt = rate
            pc = pmf_cum

        pstart[i] = n_pts
        if n_pts + 1 > pt.size:
            pt = _grow_f(pt, n_pts + 1)
            px = _grow_f(px, n_pts + 1)
            py = _grow_i(py, n_pts + 1)
            pcr = _grow_f(pcr, n_pts + 1)
            pcmr = _grow_f(pcmr, n_pts + 1)
        pt[n_pts] = t
        px[n_pts] = x
        py[n_pts] = y
        pcr[n_pts] = cr
        pcmr[n_pts] = cmr
        n_pts += 1

        c = 0
        target = exp1_k(key, c)
        c += 1
        hazard = 0.0
        q = -gn[y, y]
        if q > 0.0:
            t_type = t + exp1_k(key, c) / q
            c += 1
        else:
            t_type = np.inf
        kg = math.floor(t / grid_step) + 1.0
        g_next = kg * grid_step
        while g_next <= t:
            kg += 1.0
            g_next = kg * grid_step
        ci = 0
        while ci < n_ck and checkpoints[ci] <= t:
            ci += 1

        died = False
        while True:
            t_stop = min(g_next, t_type, t_max)
            if ci < n_ck and checkpoints[ci] < t_stop:
                t_stop = checkpoints[ci]
            r = rt[y]
            t_f = np.inf
            if fission and r > 0.0:
                t_f = t + (target - hazard) / r
            if t_f < t_stop:
                dt = t_f - t
                died = True
            else:
                dt = t_stop - t
            if dt > 0.0:
                x = x + dr[y] * dt + math.sqrt(var[y] * dt) * normal_k(key, c)
                c += 2
                cr = cr + rate[y] * dt
                cmr = cmr + mr[y] * dt
                hazard = hazard + r * dt
            if died:
                t = t_f
            else:
                t = t_stop
            if died or t >= t_max:
                break
            if t == t_type:
                y = _next_type(gn, y, uniform_k(key, c))
                c += 1
                q = -gn[y, y]
                if q > 0.0:
                    t_type = t + exp1_k(key, c) / q
                    c += 1
                else:
                    t_type = np.inf
            if t >= g_next:
                kg += 1.0
                g_next = kg * grid_step
            while ci < n_ck and checkpoints[ci] <= t:
                ci += 1
            if n_pts + 1 > pt.size:
                pt = _grow_f(pt, n_pts + 1)
                px = _grow_f(px, n_pts + 1)
                py = _grow_i(py, n_pts + 1)
                pcr = _grow_f(pcr, n_pts + 1)
                pcmr = _grow_f(pcmr, n_pts + 1)
            pt[n_pts] = t
            px[n_pts] = x
            py[n_pts] = y
            pcr[n_pts] = cr
            pcmr[n_pts] = cmr
            n_pts += 1

        # closing breakpoint: left limit at death, or state at the horizon
        if n_pts + 1 > pt.size:
            pt = _grow_f(pt, n_pts + 1)
            px = _grow_f(px, n_pts + 1)
            py = _grow_i(py, n_pts + 1)
            pcr = _grow_f(pcr, n_pts + 1)
            pcmr = _grow_f(pcmr, n_pts + 1)
        pt[n_pts] = t
        px[n_pts] = x
        py[n_pts] = y
        pcr[n_pts] = cr
        pcmr[n_pts] = cmr
        n_pts += 1
        pend[i] = n_pts

        if not died:
            death[i] = np.inf
            n_extra[i] = -1
            first_child[i] = -1
            i += 1
            continue

        death[i] = t
        a = _pick(pc[y], uniform_k(key, c))
        c += 1
        js = 0
        if on_spine:
            js = 1 + min(int(uniform_k(key, c) * (a + 1)), a)
            c += 1
        n_extra[i] = a
        first_child[i] = n_nodes
        need = n_nodes + a + 1
        if need > max_nodes:
            status = EXPLODED
            n_nodes = need
            break
        if need > parent.size:
            parent = _grow_i(parent, need)
            child_j = _grow_i(child_j, need)
            depth = _grow_i(depth, need)
            birth = _grow_f(birth, need)
            death = _grow_f(death, need)
            n_extra = _grow_i(n_extra, need)
            first_child = _grow_i(first_child, need)
            spine = _grow_i(spine, need)
            keys = _grow_u(keys, need)
            bx = _grow_f(bx, need)
            by = _grow_i(by, need)
            bcr = _grow_f(bcr, need)
            bcmr = _grow_f(bcmr, need)
            pstart = _grow_i(pstart, need)
            pend = _grow_i(pend, need)
        for j in range(1, a + 2):
            k = n_nodes
            parent[k] = i
            child_j[k] = j
            depth[k] = depth[i] + 1
            birth[k] = t
            bx[k] = x
            by[k] = y
            bcr[k] = cr
            bcmr[k] = cmr
            ck = child_key_k(key, j)
            if on_spine and j == js:
                spine[k] = 1
            else:
                spine[k] = 0
                if on_spine:
                    ck = salted_k(ck, salt)
            keys[k] = ck
            n_nodes += 1
        i += 1

    n = min(n_nodes, parent.size)
    return (status, n_nodes, parent[:n], child_j[:n], depth[:n], birth[:n], death[:n],
            n_extra[:n], first_child[:n], spine[:n], keys[:n], pstart[:n], pend[:n],
            pt[:n_pts], px[:n_pts], py[:n_pts], pcr[:n_pts], pcmr[:n_pts])


@njit
def locate(pstart, pend, pt, node, t):
    """Index k of the breakpoint interval [pt[k], pt[k+1]] of ``node`` holding t."""
    lo = pstart[node]
    hi = pend[node] - 1
    if t >= pt[hi]:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pt[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


@njit
def states_at(pstart, pend, pt, px, py, pcr, pcmr, nodes, t):
    """Position, type and cumulative integrals of each node at time t.

    Exact at breakpoints; between breakpoints the position is linearly
    interpolated and the integrals (piecewise linear for type-only rates)
    likewise.
    """
    n = nodes.size
    xs = np.empty(n)
    ys = np.empty(n, np.int64)
    crs = np.empty(n)
    cmrs = np.empty(n)
    for i in range(n):
        u = nodes[i]
        k = locate(pstart, pend, pt, u, t)
        if pt[k] == t or k == pend[u] - 1:
            xs[i] = px[k]
            ys[i] = py[k]
            crs[i] = pcr[k]
            cmrs[i] = pcmr[k]
        else:
            f = (t - pt[k]) / (pt[k + 1] - pt[k])
            xs[i] = px[k] + f * (px[k + 1] - px[k])
            ys[i] = py[k]
            crs[i] = pcr[k] + f * (pcr[k + 1] - pcr[k])
            cmrs[i] = pcmr[k] + f * (pcmr[k + 1] - pcmr[k])
    return xs, ys, crs, cmrs


@njit
def alive_nodes(birth, death, t):
    n = 0
    for i in range(birth.size):
        if birth[i] <= t and t < death[i]:
            n += 1
    out = np.empty(n, np.int64)
    n = 0
    for i in range(birth.size):
        if birth[i] <= t and t < death[i]:
            out[n] = i
            n += 1
    return out


@njit
def log_extension_weights(parent, n_extra, nodes):
    """log prod_{v < u} 1/(1 + A_v) for each node u."""
    out = np.empty(nodes.size)
    for i in range(nodes.size):
        s = 0.0
        v = parent[nodes[i]]
        while v >= 0:
            s -= math.log(1.0 + n_extra[v])
            v = parent[v]
        out[i] = s
    return out


@njit
def extension_sum(parent, n_extra, nodes):
    """sum over nodes of prod_{v < u} 1/(1 + A_v), accumulated in linear space."""
    s = 0.0
    for i in range(nodes.size):
        w = 1.0
        v = parent[nodes[i]]
        while v >= 0:
            w /= 1.0 + n_extra[v]
            v = parent[v]
        s += w
    return s


@njit
def logsumexp(a):
    if a.size == 0:
        return -np.inf
    m = a.max()
    if not np.isfinite(m):
        return m
    s = 0.0
    for i in range(a.size):
        s += math.exp(a[i] - m)
    return m + math.log(s)
