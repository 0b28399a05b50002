"""Losses scoring a predicted action distribution against the observed action.

Only the chosen action is observed, so a prediction ``q`` is scored by the
smallest cross-entropy between ``q`` and any distribution ``p`` under which
the observed action ``i`` is (weakly) the most likely one:

* L1: min over p of H(q, p) = -sum q_k ln p_k
* L2: min over p of H(p, q) = -sum p_k ln q_k
* binary: -ln q_i

Natural logarithms throughout.
"""

from __future__ import annotations

import math

import numpy as np

from .core import PROB_EPS, DomainError, check_distribution

L1 = "l1"
L2 = "l2"
BINARY = "binary"
LOSS_KINDS = (L1, L2, BINARY)

QP = "QP"  # H(q, p), the L1 direction
PQ = "PQ"  # H(p, q), the L2 direction


def _prep(q, i):
    q = check_distribution(q, atol=1e-6)
    if not 0 <= i < q.size:
        raise DomainError(f"observed action {i} out of range for {q.size} actions")
    return q, int(i)


def _xlogy(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    out = np.zeros(np.broadcast(x, y).shape)
    nz = np.broadcast_to(x, out.shape) != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = x * np.log(np.maximum(y, PROB_EPS))
    out[nz] = np.broadcast_to(vals, out.shape)[nz]
    return out


# -- L1 ---------------------------------------------------------------------

def l1_tied_set(q, i):
    """Indices pooled with ``i`` at the optimum, and their common value.

    Starting from {i}, the largest remaining entries are pooled while they
    exceed the running pool average; whatever is left keeps its own value.
    """
    q, i = _prep(q, i)
    others = [k for k in np.argsort(-q, kind="stable") if k != i]
    tied = [i]
    total = q[i]
    for k in others:
        if q[k] > total / len(tied):
            tied.append(int(k))
            total += q[k]
        else:
            break
    return sorted(tied), total / len(tied)


def l1_minimizer(q, i) -> np.ndarray:
    """Distribution with its maximum at ``i`` closest to ``q`` in H(q, p)."""
    q, i = _prep(q, i)
    tied, eta = l1_tied_set(q, i)
    p = q.copy()
    p[tied] = eta
    return p


def l1_uniform_qh(q, i) -> np.ndarray:
    """Average ``q`` over every entry at least as large as ``q_i``.

    Coincides with :func:`l1_minimizer` whenever every such entry is at least
    the pooled average; otherwise it is feasible but not optimal.
    """
    q, i = _prep(q, i)
    qh = q >= q[i]
    p = q.copy()
    p[qh] = q[qh].mean()
    return p


def l1_loss(q, i) -> float:
    q, i = _prep(q, i)
    return float(-_xlogy(q, l1_minimizer(q, i)).sum())


# -- L2 ---------------------------------------------------------------------

def l2_uniform_qh(q, i) -> np.ndarray:
    q, i = _prep(q, i)
    qh = q >= q[i]
    return qh / qh.sum()


def l2_sqrt_threshold(q, i) -> np.ndarray:
    """Equal mass on ``i``, the argmax ``j`` and every other entry above
    sqrt(q_i q_j); zero elsewhere."""
    q, i = _prep(q, i)
    j = int(np.argmax(q))
    keep = q > math.sqrt(q[i] * q[j])
    keep[i] = keep[j] = True
    return keep / keep.sum()


def l2_prefix(q, i) -> np.ndarray:
    """Exact minimiser: the objective is linear in ``p`` so the optimum is a
    vertex, uniform on ``i`` plus the k most likely other actions for the best k."""
    q, i = _prep(q, i)
    a = -np.log(np.maximum(q, PROB_EPS))
    others = [k for k in np.argsort(a, kind="stable") if k != i]
    best_set, best = [i], a[i]
    chosen = [i]
    total = a[i]
    for k in others:
        chosen.append(int(k))
        total += a[k]
        mean = total / len(chosen)
        if mean < best - 1e-15:
            best, best_set = mean, list(chosen)
    p = np.zeros(q.size)
    p[best_set] = 1.0 / len(best_set)
    return p


def _h_pq(p, q):
    return float(-(p * np.log(np.maximum(q, PROB_EPS))).sum())


def l2_minimizer(q, i, check_oracle=False) -> np.ndarray:
    """Best of the candidate closed forms for min H(p, q).

    The uniform-over-q_H and square-root-threshold candidates are evaluated
    together with the exact vertex solution; the first candidate attaining the
    smallest value is returned. With ``check_oracle`` the result is compared to
    the lattice oracle and an AssertionError is raised on disagreement.
    """
    q, i = _prep(q, i)
    cands = [l2_uniform_qh(q, i), l2_sqrt_threshold(q, i), l2_prefix(q, i)]
    vals = [_h_pq(p, q) for p in cands]
    best = next(k for k in range(3) if vals[k] <= min(vals) + 1e-12)
    p = cands[best]
    if check_oracle and q.size <= 8:
        _, oracle = oracle_min_cross_entropy(q, i, PQ, resolution=1e-3)
        if not -1e-9 <= oracle - vals[best] <= 2e-3:
            raise AssertionError(f"L2 closed form {vals[best]} disagrees with oracle {oracle}")
    return p


def l2_loss(q, i) -> float:
    q, i = _prep(q, i)
    return _h_pq(l2_minimizer(q, i), q)


def binary_loss(q, i) -> float:
    q, i = _prep(q, i)
    return float(-math.log(max(q[i], PROB_EPS)))


def loss(kind: str, q, i) -> float:
    if kind == L1:
        return l1_loss(q, i)
    if kind == L2:
        return l2_loss(q, i)
    if kind == BINARY:
        return binary_loss(q, i)
    raise DomainError(f"unknown loss {kind!r}; expected one of {LOSS_KINDS}")


# -- batched versions for grid fitting --------------------------------------

def _split_observed(Q, idx):
    Q = np.asarray(Q, dtype=float)
    idx = np.asarray(idx, dtype=int)
    rows = np.arange(Q.shape[0])
    qi = Q[rows, idx]
    return Q, rows, qi


def l1_loss_batch(Q, idx) -> np.ndarray:
    """Row-wise :func:`l1_loss` for a 2-D array of distributions."""
    Q, rows, qi = _split_observed(Q, idx)
    n = Q.shape[1]
    others = Q.copy()
    others[rows, idx] = -np.inf
    srt = -np.sort(-others, axis=1)[:, : n - 1]  # descending, observed removed
    cum = np.concatenate([np.zeros((Q.shape[0], 1)), np.cumsum(srt, axis=1)], axis=1)
    pool = qi[:, None] + cum  # pool mass after adding m entries, m = 0..n-1
    eta = pool / np.arange(1, n + 1)
    stop = np.ones((Q.shape[0], n), dtype=bool)
    stop[:, : n - 1] = srt <= eta[:, : n - 1]
    m = np.argmax(stop, axis=1)
    eta_star = eta[rows, m]
    ent = -_xlogy(srt, srt)
    ent_cum = np.concatenate([np.zeros((Q.shape[0], 1)), np.cumsum(ent, axis=1)], axis=1)
    rest = ent_cum[:, -1] - ent_cum[rows, m]
    return -pool[rows, m] * np.log(np.maximum(eta_star, PROB_EPS)) + rest


def l2_loss_batch(Q, idx) -> np.ndarray:
    Q, rows, qi = _split_observed(Q, idx)
    n = Q.shape[1]
    a = -np.log(np.maximum(Q, PROB_EPS))
    ai = a[rows, idx]
    a_others = a.copy()
    a_others[rows, idx] = np.inf
    srt = np.sort(a_others, axis=1)[:, : n - 1]
    cum = np.concatenate([np.zeros((Q.shape[0], 1)), np.cumsum(srt, axis=1)], axis=1)
    means = (ai[:, None] + cum) / np.arange(1, n + 1)
    return means.min(axis=1)


def binary_loss_batch(Q, idx) -> np.ndarray:
    _, _, qi = _split_observed(Q, idx)
    return -np.log(np.maximum(qi, PROB_EPS))


def loss_batch(kind: str, Q, idx) -> np.ndarray:
    if kind == L1:
        return l1_loss_batch(Q, idx)
    if kind == L2:
        return l2_loss_batch(Q, idx)
    if kind == BINARY:
        return binary_loss_batch(Q, idx)
    raise DomainError(f"unknown loss {kind!r}; expected one of {LOSS_KINDS}")


# -- lattice oracle ---------------------------------------------------------

def _units_at(lam, q, cap):
    # largest u with marginal gain q*ln(u/(u-1)) >= lam, at least one unit
    with np.errstate(over="ignore", divide="ignore"):
        u = np.floor(1.0 / -np.expm1(-lam / q))
    return np.clip(u, 1, cap)


def _qp_slices(q, i, M):
    """Lattice optimum of H(q, p) for every value t of p_i (in units of 1/M)."""
    n = q.size
    others = np.delete(q, i)
    pos = others > 0
    qp = others[pos]
    n_zero = int((~pos).sum())
    ts = np.arange(int(math.ceil(M / n)), M + 1)
    R = (M - ts).astype(float)
    cap = ts[:, None].astype(float)
    # feasible slices: every positive coordinate needs a unit, total capacity suffices
    feasible = (R >= qp.size) & (R <= cap[:, 0] * (n - 1))
    lo = np.full(ts.size, 1e-300)
    hi = np.full(ts.size, 1e3)
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        tot = _units_at(mid[:, None], qp, cap).sum(axis=1)
        too_many = tot > R
        lo = np.where(too_many, mid, lo)
        hi = np.where(too_many, hi, mid)
    u_hi = _units_at(hi[:, None], qp, cap)
    u_lo = _units_at(lo[:, None], qp, cap)
    short = R - u_hi.sum(axis=1)
    # leftover units go to coordinates whose next marginal sits between lo and hi
    extra = u_lo - u_hi
    csum = np.cumsum(extra, axis=1)
    add = np.clip(np.minimum(extra, short[:, None] - (csum - extra)), 0, None)
    u = u_hi + add
    short = R - u.sum(axis=1)
    # anything still left is free mass on zero-probability coordinates
    feasible &= short <= n_zero * cap[:, 0] + 1e-9
    vals = -(qp * np.log(u / M)).sum(axis=1) - q[i] * np.log(ts / M)
    vals = np.where(feasible, vals, np.inf)
    return ts, u, short, vals


def _pq_slices(q, i, M):
    n = q.size
    a = -np.log(np.maximum(q, PROB_EPS))
    order = np.argsort(np.delete(a, i), kind="stable")
    a_sorted = np.delete(a, i)[order]
    ts = np.arange(int(math.ceil(M / n)), M + 1)
    R = M - ts
    full = R // ts
    rem = R % ts
    feasible = (full < n - 1) | ((full == n - 1) & (rem == 0))
    full_c = np.minimum(full, n - 1)
    cum = np.concatenate([[0.0], np.cumsum(a_sorted)])
    nxt = np.append(a_sorted, 0.0)[np.minimum(full_c, n - 1)]
    vals = (ts * a[i] + ts * cum[full_c] + rem * nxt) / M
    vals = np.where(feasible, vals, np.inf)
    return ts, order, full_c, rem, vals


def oracle_min_cross_entropy(q, i, direction=QP, resolution=1e-3):
    """Lattice search for the constrained cross-entropy minimum.

    Searches distributions whose entries are multiples of ``resolution`` and
    whose largest entry is at ``i``. Every lattice value of ``p_i`` is
    enumerated; for each one the remaining mass is placed optimally on the
    lattice (greedy marginal allocation for H(q, p), which is exact for a
    separable convex objective; cheapest-first filling for the linear H(p, q)).

    Returns ``(p, loss)``. Meant for validation only.
    """
    q, i = _prep(q, i)
    if q.size > 8:
        raise DomainError("oracle supports at most 8 actions")
    if resolution < 1e-3 - 1e-15:
        raise DomainError("resolution must be at least 1e-3")
    M = int(round(1.0 / resolution))
    n = q.size
    p = np.zeros(n)
    rest_idx = [k for k in range(n) if k != i]
    if direction == QP:
        ts, u, short, vals = _qp_slices(q, i, M)
        b = int(np.argmin(vals))
        others = np.delete(q, i)
        pos_idx = [k for k, v in zip(rest_idx, others) if v > 0]
        zero_idx = [k for k, v in zip(rest_idx, others) if v <= 0]
        p[i] = ts[b]
        p[pos_idx] = u[b]
        left = int(round(short[b]))
        for k in zero_idx:
            put = min(left, ts[b])
            p[k] = put
            left -= put
        return p / M, float(vals[b])
    if direction == PQ:
        ts, order, full, rem, vals = _pq_slices(q, i, M)
        b = int(np.argmin(vals))
        p[i] = ts[b]
        ranked = [rest_idx[k] for k in order]
        for k in ranked[: full[b]]:
            p[k] = ts[b]
        if full[b] < len(ranked):
            p[ranked[full[b]]] = rem[b]
        return p / M, float(vals[b])
    raise DomainError(f"direction must be {QP!r} or {PQ!r}")
