"""Compiled inner loops: split scans, node grids, tree growth, routing and leaf curves.

Everything here works on plain numpy arrays so it can run under ``nogil``.
The public, documented entry points live in ``splitting``, ``tree`` and
``forest``.
"""

import numpy as np
from numba import njit

FAST_EPS = 1e-12

TIE = 0
SKIPPED = 1
VALID = 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


@njit(cache=True)
def mix64(z):
    """splitmix64 finalizer."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def stream_key(seed, node):
    return mix64(seed ^ mix64(np.uint64(node) + _GOLDEN))


@njit(cache=True)
def stream_uniform(key, counter):
    z = mix64(key + np.uint64(counter + 1) * _GOLDEN)
    return float(z >> _S11) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def sample_features(feats, p, mtry, key):
    for j in range(p):
        feats[j] = j
    for k in range(mtry):
        j = k + int(stream_uniform(key, k) * (p - k))
        if j >= p:
            j = p - 1
        tmp = feats[k]
        feats[k] = feats[j]
        feats[j] = tmp


@njit(cache=True)
def midpoint(lo, hi):
    mid = 0.5 * lo + 0.5 * hi
    # adjacent floats can round the midpoint onto hi
    if not (lo <= mid and mid < hi):
        mid = lo
    return mid


@njit(nogil=True, cache=True)
def scan_exact_core(xs, ev, slot, d, Y, alpha, beta, min_node, min_events,
                    tr_num, tr_den, tr_flag):
    """Exact log-rank scan. Returns (n_left of best candidate or -1, best value).

    Left-node counts are kept per slot; at each candidate the at-risk counts
    and both sums are rebuilt over all M slots.
    """
    n = xs.shape[0]
    M = d.shape[0]
    tracing = tr_flag.shape[0] > 0
    d_left = np.zeros(M)
    cnt_left = np.zeros(M)
    total_ev = 0
    for i in range(n):
        total_ev += ev[i]
    ev_left = 0
    best_pos = -1
    best = -1.0
    for i in range(n - 1):
        g = slot[i]
        if g >= 0:
            cnt_left[g] += 1.0
            if ev[i] == 1:
                d_left[g] += 1.0
        ev_left += ev[i]
        if xs[i] >= xs[i + 1]:
            if tracing:
                tr_flag[i] = TIE
                tr_num[i] = np.nan
                tr_den[i] = np.nan
            continue
        n_left = i + 1
        ok = (n_left >= min_node and n - n_left >= min_node
              and ev_left >= min_events and total_ev - ev_left >= min_events)
        if not ok and not tracing:
            continue
        num = 0.0
        var = 0.0
        y_left = 0.0
        for t in range(M - 1, -1, -1):
            y_left += cnt_left[t]
            num += d_left[t] - y_left * alpha[t]
            var += y_left * (Y[t] - y_left) * beta[t]
        if tracing:
            tr_num[i] = num
            tr_den[i] = var
            tr_flag[i] = VALID if (ok and var > 0.0) else SKIPPED
        if not ok or var <= 0.0:
            continue
        crit = num * num / var
        if crit > best:
            best = crit
            best_pos = n_left
    return best_pos, best


@njit(nogil=True, cache=True)
def scan_fast_core(xs, ev, gamma, gamma_bar, min_node, min_events,
                   tr_num, tr_e1, tr_flag):
    """Constant-time-update scan of the Poissonized log-rank criterion."""
    n = xs.shape[0]
    tracing = tr_flag.shape[0] > 0
    total_ev = 0
    for i in range(n):
        total_ev += ev[i]
    num = 0.0
    e1 = 0.0
    ev_left = 0
    best_pos = -1
    best = -1.0
    for i in range(n - 1):
        num += ev[i] - gamma[i]
        e1 += gamma[i]
        ev_left += ev[i]
        if xs[i] >= xs[i + 1]:
            if tracing:
                tr_flag[i] = TIE
                tr_num[i] = np.nan
                tr_e1[i] = np.nan
            continue
        n_left = i + 1
        e2 = gamma_bar - e1
        ok = (n_left >= min_node and n - n_left >= min_node
              and ev_left >= min_events and total_ev - ev_left >= min_events
              and e1 > FAST_EPS and e2 > FAST_EPS)
        if tracing:
            tr_num[i] = num
            tr_e1[i] = e1
            tr_flag[i] = VALID if ok else SKIPPED
        if not ok:
            continue
        crit = num * num * (1.0 / e1 + 1.0 / e2)
        if crit > best:
            best = crit
            best_pos = n_left
    return best_pos, best


@njit(nogil=True, cache=True)
def node_grid_kernel(tsorted, trank, events, slot_of, gamma_of, d, Y, alpha, beta, A):
    """Build the node grid from the node's samples walked in time order.

    Writes per-sample slot and gamma into the global-size ``slot_of`` and
    ``gamma_of``; returns (M, gamma_bar).
    """
    m = tsorted.shape[0]
    M = 0
    cur = -1
    i = 0
    while i < m:
        r = trank[tsorted[i]]
        j = i
        has_event = False
        while j < m and trank[tsorted[j]] == r:
            if events[tsorted[j]] == 1:
                has_event = True
            j += 1
        if has_event:
            cur = M
            d[cur] = 0.0
            Y[cur] = 0.0
            M += 1
        for k in range(i, j):
            sid = tsorted[k]
            slot_of[sid] = cur
            if cur >= 0:
                Y[cur] += 1.0
                if events[sid] == 1:
                    d[cur] += 1.0
        i = j
    if M == 0:
        return 0, 0.0
    acc = 0.0
    for t in range(M - 1, -1, -1):
        acc += Y[t]
        Y[t] = acc
    cum = 0.0
    for t in range(M):
        alpha[t] = d[t] / Y[t]
        if Y[t] > 1.0:
            beta[t] = (Y[t] - d[t]) / (Y[t] - 1.0) * d[t] / (Y[t] * Y[t])
        else:
            beta[t] = 0.0
        cum += alpha[t]
        A[t] = cum
    gamma_bar = 0.0
    for k in range(m):
        sid = tsorted[k]
        g = slot_of[sid]
        gamma_of[sid] = A[g] if g >= 0 else 0.0
        gamma_bar += gamma_of[sid]
    return M, gamma_bar


@njit(nogil=True, cache=True)
def grow_kernel(XT, trank, events, order, mtry, min_node, min_events, max_depth,
                fast, seed):
    """Grow one tree depth-first over presorted sample orders.

    ``order`` has p + 1 rows holding the tree's samples sorted by each
    feature and, in the last row, by time. Every node owns the same
    contiguous segment in all rows; rows are stably partitioned in place on
    each split. Returns node arrays plus leaf sample lists in CSR form.
    """
    p = XT.shape[0]
    n = XT.shape[1]
    m = order.shape[1]
    cap = 2 * m + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    crit = np.zeros(cap)
    seg_start = np.zeros(cap, np.int64)
    seg_end = np.zeros(cap, np.int64)
    depth = np.zeros(cap, np.int64)

    slot_of = np.empty(n, np.int64)
    gamma_of = np.empty(n)
    go_left = np.zeros(n, np.bool_)
    d = np.empty(m)
    Y = np.empty(m)
    alpha = np.empty(m)
    beta = np.empty(m)
    A = np.empty(m)
    xs = np.empty(m)
    evs = np.empty(m, np.int64)
    sl = np.empty(m, np.int64)
    gs = np.empty(m)
    buf = np.empty(m, np.int64)
    feats = np.empty(p, np.int64)
    no_trace_f = np.empty(0)
    no_trace_i = np.empty(0, np.int64)

    stack = np.empty(cap, np.int64)
    seg_end[0] = m
    n_nodes = 1
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        s = seg_start[node]
        e = seg_end[node]
        nn = e - s
        if nn < 2 * min_node:
            continue
        if max_depth >= 0 and depth[node] >= max_depth:
            continue
        M, gamma_bar = node_grid_kernel(order[p, s:e], trank, events, slot_of,
                                        gamma_of, d, Y, alpha, beta, A)
        if M == 0:
            continue
        sample_features(feats, p, mtry, stream_key(seed, node))

        best = -1.0
        best_f = -1
        best_nl = -1
        for k in range(mtry):
            f = feats[k]
            seg = order[f, s:e]
            for q in range(nn):
                sid = seg[q]
                xs[q] = XT[f, sid]
                evs[q] = events[sid]
                if fast:
                    gs[q] = gamma_of[sid]
                else:
                    sl[q] = slot_of[sid]
            if fast:
                pos, c = scan_fast_core(xs[:nn], evs[:nn], gs[:nn], gamma_bar,
                                        min_node, min_events,
                                        no_trace_f, no_trace_f, no_trace_i)
            else:
                pos, c = scan_exact_core(xs[:nn], evs[:nn], sl[:nn], d[:M], Y[:M],
                                         alpha[:M], beta[:M], min_node, min_events,
                                         no_trace_f, no_trace_f, no_trace_i)
            if pos > 0 and c > best:
                best = c
                best_f = f
                best_nl = pos
        if best_f < 0:
            continue

        seg = order[best_f, s:e]
        thr = midpoint(XT[best_f, seg[best_nl - 1]], XT[best_f, seg[best_nl]])
        for q in range(nn):
            go_left[seg[q]] = q < best_nl
        for r in range(p + 1):
            a = s
            b = 0
            for q in range(s, e):
                sid = order[r, q]
                if go_left[sid]:
                    order[r, a] = sid
                    a += 1
                else:
                    buf[b] = sid
                    b += 1
            for q in range(b):
                order[r, a + q] = buf[q]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = thr
        left[node] = lc
        right[node] = rc
        crit[node] = best
        seg_start[lc] = s
        seg_end[lc] = s + best_nl
        seg_start[rc] = s + best_nl
        seg_end[rc] = e
        depth[lc] = depth[node] + 1
        depth[rc] = depth[node] + 1
        stack[sp] = rc
        sp += 1
        stack[sp] = lc
        sp += 1

    ptr = np.zeros(n_nodes + 1, np.int64)
    for k in range(n_nodes):
        size = seg_end[k] - seg_start[k] if feature[k] < 0 else 0
        ptr[k + 1] = ptr[k] + size
    samples = np.empty(ptr[n_nodes], np.int64)
    for k in range(n_nodes):
        if feature[k] < 0:
            samples[ptr[k]:ptr[k + 1]] = np.sort(order[p, seg_start[k]:seg_end[k]])
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), crit[:n_nodes].copy(), ptr, samples)


@njit(nogil=True, cache=True)
def apply_kernel(feature, threshold, left, right, X, rows):
    out = np.empty(rows.shape[0], np.int64)
    for k in range(rows.shape[0]):
        i = rows[k]
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[k] = node
    return out


@njit(nogil=True, cache=True)
def leaf_curves_kernel(ptr, samples, times, events, grid, chf):
    """Kaplan-Meier (or Nelson-Aalen if ``chf``) of every leaf on ``grid``.

    Rows of internal nodes stay zero.
    """
    K = ptr.shape[0] - 1
    G = grid.shape[0]
    out = np.zeros((K, G))
    for k in range(K):
        a = ptr[k]
        b = ptr[k + 1]
        size = b - a
        if size == 0:
            continue
        ids = samples[a:b]
        ts = times[ids]
        es = events[ids]
        o = np.argsort(ts, kind="mergesort")
        val = 0.0 if chf else 1.0
        at_risk = float(size)
        q = 0
        i = 0
        while i < size:
            t = ts[o[i]]
            j = i
            dd = 0.0
            while j < size and ts[o[j]] == t:
                dd += es[o[j]]
                j += 1
            while q < G and grid[q] < t:
                out[k, q] = val
                q += 1
            if dd > 0.0:
                if chf:
                    val += dd / at_risk
                else:
                    val *= 1.0 - dd / at_risk
            at_risk -= j - i
            i = j
        while q < G:
            out[k, q] = val
            q += 1
    return out


@njit(nogil=True, cache=True)
def leaf_chf_sums_kernel(ptr, samples, times, events, grid):
    """Sum over ``grid`` of each leaf's Nelson-Aalen curve, as a (K, 1) array.

    Each hazard increment at time u counts once for every grid point >= u.
    """
    K = ptr.shape[0] - 1
    G = grid.shape[0]
    out = np.zeros((K, 1))
    for k in range(K):
        a = ptr[k]
        b = ptr[k + 1]
        size = b - a
        if size == 0:
            continue
        ids = samples[a:b]
        ts = times[ids]
        es = events[ids]
        o = np.argsort(ts, kind="mergesort")
        at_risk = float(size)
        total = 0.0
        i = 0
        while i < size:
            t = ts[o[i]]
            j = i
            dd = 0.0
            while j < size and ts[o[j]] == t:
                dd += es[o[j]]
                j += 1
            if dd > 0.0:
                total += dd / at_risk * (G - np.searchsorted(grid, t))
            at_risk -= j - i
            i = j
        out[k, 0] = total
    return out
