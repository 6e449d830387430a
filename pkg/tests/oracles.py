"""Brute-force reference computations used as independent test oracles.

Nothing here calls into the package's grid, scanner or estimator code; every
quantity is recounted from raw (time, event, x) triples.
"""

import numpy as np


def count_grid(times, events):
    """Failure times with d_t and Y_t recounted by definition."""
    times = [float(t) for t in times]
    events = [int(e) for e in events]
    failure_times = sorted({t for t, e in zip(times, events) if e == 1})
    d = [sum(1 for t, e in zip(times, events) if t == ft and e == 1) for ft in failure_times]
    Y = [sum(1 for t in times if t >= ft) for ft in failure_times]
    return failure_times, d, Y


def weights(d, Y):
    alpha = [di / yi for di, yi in zip(d, Y)]
    beta = [((yi - di) / (yi - 1)) * di / yi**2 if yi > 1 else 0.0 for di, yi in zip(d, Y)]
    return alpha, beta


def gamma_by_definition(times, events):
    """gamma_i = sum_t 1{T_i >= t} alpha_t, summing over failure times directly."""
    ft, d, Y = count_grid(times, events)
    alpha, _ = weights(d, Y)
    return [sum(a for f, a in zip(ft, alpha) if t >= f) for t in times]


def exact_terms(times, events, left):
    """(numerator, variance) of the log-rank statistic for the left set ``left``."""
    ft, d, Y = count_grid(times, events)
    alpha, beta = weights(d, Y)
    num = 0.0
    var = 0.0
    for f, a, b, y in zip(ft, alpha, beta, Y):
        d_left = sum(1 for i in left if times[i] == f and events[i] == 1)
        y_left = sum(1 for i in left if times[i] >= f)
        num += d_left - y_left * a
        var += y_left * (y - y_left) * b
    return num, var


def fast_terms(times, events, left):
    """(numerator, E1, E2) of the Poissonized criterion for the left set."""
    g = gamma_by_definition(times, events)
    left = set(left)
    num = sum(events[i] - g[i] for i in left)
    e1 = sum(g[i] for i in left)
    e2 = sum(g[i] for i in range(len(times)) if i not in left)
    return num, e1, e2


def candidate_lefts(x):
    """Left index sets for every split between distinct sorted values of ``x``."""
    order = sorted(range(len(x)), key=lambda i: x[i])
    out = []
    for k in range(1, len(x)):
        if x[order[k - 1]] < x[order[k]]:
            out.append((k, order[:k]))
    return out


def km_by_hand(times, events, grid):
    out = []
    for g in grid:
        s = 1.0
        for u in sorted({t for t, e in zip(times, events) if e == 1 and t <= g}):
            d = sum(1 for t, e in zip(times, events) if t == u and e == 1)
            y = sum(1 for t in times if t >= u)
            s *= 1 - d / y
        out.append(s)
    return out


def na_by_hand(times, events, grid):
    out = []
    for g in grid:
        h = 0.0
        for u in sorted({t for t, e in zip(times, events) if e == 1 and t <= g}):
            d = sum(1 for t, e in zip(times, events) if t == u and e == 1)
            y = sum(1 for t in times if t >= u)
            h += d / y
        out.append(h)
    return out


def harrell_pairs(risk, times, events):
    conc = 0.0
    comp = 0
    n = len(risk)
    for i in range(n):
        for j in range(n):
            if times[i] < times[j] and events[i] == 1:
                comp += 1
                if risk[i] > risk[j]:
                    conc += 1
                elif risk[i] == risk[j]:
                    conc += 0.5
    return conc, comp


def random_node(rng, n_max=200, m_max=50):
    """Integer times on 1..M with ties, censoring rate drawn from [0, 0.8]."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    censor = rng.uniform(0.0, 0.8)
    times = rng.integers(1, m + 1, size=n).astype(float)
    events = (rng.uniform(size=n) >= censor).astype(int)
    if events.sum() == 0:
        events[rng.integers(n)] = 1
    # coarse rounding produces ties in the feature as well
    x = np.round(rng.uniform(size=n), int(rng.integers(1, 4)))
    return times, events, x


def exact_terms_all(times, events, x):
    """(n_left, numerator, variance) for every candidate split of ``x``.

    Each candidate's left set is rebuilt as an indicator row and d_L, Y_L are
    recounted against every failure time with a matrix product, so no state
    is carried from one candidate to the next.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=int)
    ft, d, Y = count_grid(times, events)
    alpha, beta = weights(d, Y)
    ft, Y, alpha, beta = (np.asarray(a, dtype=float) for a in (ft, Y, alpha, beta))
    at_risk = (times[:, None] >= ft[None, :]).astype(float)
    failed = ((times[:, None] == ft[None, :]) & (events[:, None] == 1)).astype(float)
    lefts = candidate_lefts(list(x))
    if not lefts:
        return np.zeros(0, dtype=int), np.zeros(0), np.zeros(0)
    L = np.zeros((len(lefts), times.size))
    for row, (_, left) in enumerate(lefts):
        L[row, left] = 1.0
    y_left = L @ at_risk
    d_left = L @ failed
    num = (d_left - y_left * alpha).sum(axis=1)
    var = (y_left * (Y - y_left) * beta).sum(axis=1)
    return np.array([k for k, _ in lefts]), num, var
