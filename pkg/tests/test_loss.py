import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog, minimize

from teamdecide.core import DomainError
from teamdecide.loss import (
    PQ,
    QP,
    binary_loss,
    binary_loss_batch,
    l1_loss,
    l1_loss_batch,
    l1_minimizer,
    l1_uniform_qh,
    l2_loss,
    l2_loss_batch,
    l2_minimizer,
    l2_prefix,
    l2_sqrt_threshold,
    l2_uniform_qh,
    loss,
    loss_batch,
    oracle_min_cross_entropy,
)


@st.composite
def dist_and_index(draw, min_n=2, max_n=8):
    n = draw(st.integers(min_n, max_n))
    w = draw(st.lists(st.floats(0.001, 1), min_size=n, max_size=n))
    q = np.array(w) / sum(w)
    return q, draw(st.integers(0, n - 1))


def entropy(q):
    q = q[q > 0]
    return float(-(q * np.log(q)).sum())


def h_pq(p, q):
    return float(-(p * np.log(np.maximum(q, 1e-9))).sum())


def test_l1_minimizer_examples():
    q = np.array([0.6, 0.3, 0.1])
    assert np.allclose(l1_minimizer(q, 0), q)
    assert np.allclose(l1_minimizer(q, 1), (0.45, 0.45, 0.1))
    u = np.full(8, 0.125)
    for i in range(8):
        assert np.allclose(l1_minimizer(u, i), u)


def test_l1_uniform_qh_is_not_always_optimal():
    # averaging over every entry above q_i can lift a middle entry above the pool
    q = np.array([0.5, 0.3, 0.15, 0.05])
    exact = l1_minimizer(q, 3)
    naive = l1_uniform_qh(q, 3)
    assert exact[3] >= exact.max() - 1e-12
    assert -(q * np.log(exact)).sum() < -(q * np.log(naive)).sum() - 1e-3


def test_l2_examples():
    q = np.array([0.5, 0.3, 0.2])
    assert np.allclose(l2_uniform_qh(q, 2), 1 / 3)
    assert h_pq(l2_uniform_qh(q, 2), q) == pytest.approx(1.169, abs=1e-3)
    assert np.allclose(l2_sqrt_threshold(q, 2), (0.5, 0, 0.5))
    assert h_pq(l2_sqrt_threshold(q, 2), q) == pytest.approx(1.151, abs=1e-3)
    assert np.allclose(l2_minimizer(q, 2), (0.5, 0, 0.5))
    assert l2_loss(q, 0) == pytest.approx(-math.log(0.5))
    for n in (4, 8):
        u = np.full(n, 1 / n)
        assert l2_loss(u, n - 1) == pytest.approx(math.log(n))


def test_binary_examples():
    assert binary_loss(np.array([1.0, 0, 0, 0]), 0) == pytest.approx(0, abs=1e-8)
    assert binary_loss(np.full(4, 0.25), 2) == pytest.approx(1.3863, abs=1e-4)
    assert binary_loss(np.array([1.0, 0, 0, 0]), 1) == pytest.approx(-math.log(1e-9))


def test_uniform_losses():
    for n in (4, 8):
        u = np.full(n, 1 / n)
        for kind in ("l1", "l2", "binary"):
            assert loss(kind, u, 0) == pytest.approx(math.log(n), abs=1e-12)
    with pytest.raises(DomainError):
        loss("l3", np.full(4, 0.25), 0)


def test_input_validation():
    with pytest.raises(DomainError):
        l1_loss(np.array([0.5, 0.6]), 0)
    with pytest.raises(DomainError):
        l2_loss(np.array([0.5, 0.5]), 2)
    with pytest.raises(DomainError):
        oracle_min_cross_entropy(np.full(9, 1 / 9), 0)
    with pytest.raises(DomainError):
        oracle_min_cross_entropy(np.full(4, 0.25), 0, resolution=1e-4)
    with pytest.raises(DomainError):
        oracle_min_cross_entropy(np.full(4, 0.25), 0, direction="XY")


@given(dist_and_index())
def test_l1_properties(qi):
    q, i = qi
    p = l1_minimizer(q, i)
    assert abs(p.sum() - 1) < 1e-12
    assert (p[i] >= p - 1e-12).all()
    val = l1_loss(q, i)
    if q[i] >= q.max():
        assert val == pytest.approx(entropy(q), abs=1e-12)
    else:
        assert val > entropy(q) - 1e-12
    assert val >= entropy(q) - 1e-12


@given(dist_and_index(), st.randoms(use_true_random=False))
def test_losses_permutation_equivariant(qi, rnd):
    q, i = qi
    perm = list(range(q.size))
    rnd.shuffle(perm)
    qp = q[perm]
    ip = perm.index(i)
    assert l1_loss(qp, ip) == pytest.approx(l1_loss(q, i), abs=1e-12)
    assert l2_loss(qp, ip) == pytest.approx(l2_loss(q, i), abs=1e-12)


@given(dist_and_index())
def test_l2_feasible_and_no_worse_than_candidates(qi):
    q, i = qi
    p = l2_minimizer(q, i)
    assert abs(p.sum() - 1) < 1e-12 and (p[i] >= p - 1e-12).all()
    best = h_pq(p, q)
    for cand in (l2_uniform_qh(q, i), l2_sqrt_threshold(q, i)):
        assert cand[i] >= cand.max() - 1e-12
        assert best <= h_pq(cand, q) + 1e-12


@settings(max_examples=60, deadline=None)
@given(dist_and_index(max_n=8))
def test_l2_matches_linear_program(qi):
    q, i = qi
    n = q.size
    a = -np.log(np.maximum(q, 1e-9))
    A = np.zeros((n - 1, n))
    for r, k in enumerate(k for k in range(n) if k != i):
        A[r, k], A[r, i] = 1, -1
    res = linprog(a, A_ub=A, b_ub=np.zeros(n - 1), A_eq=np.ones((1, n)), b_eq=[1],
                  bounds=[(0, 1)] * n, method="highs")
    assert l2_loss(q, i) == pytest.approx(res.fun, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(dist_and_index(max_n=6))
def test_l1_matches_numerical_optimizer(qi):
    q, i = qi
    n = q.size
    cons = [{"type": "eq", "fun": lambda p: p.sum() - 1}]
    cons += [{"type": "ineq", "fun": (lambda p, k=k: p[i] - p[k])} for k in range(n) if k != i]
    res = minimize(lambda p: -(q * np.log(np.maximum(p, 1e-12))).sum(), np.full(n, 1 / n),
                   constraints=cons, bounds=[(1e-9, 1)] * n, method="SLSQP",
                   options={"ftol": 1e-12, "maxiter": 500})
    # the local solver can only do worse than the exact minimum
    assert l1_loss(q, i) <= res.fun + 1e-7
    assert l1_loss(q, i) == pytest.approx(res.fun, abs=1e-5)


def test_sqrt_candidate_never_worse_than_uniform_qh():
    rng = np.random.default_rng(11)
    for _ in range(2000):
        n = int(rng.choice([4, 8]))
        q = rng.dirichlet(np.ones(n))
        i = int(rng.integers(n))
        assert h_pq(l2_sqrt_threshold(q, i), q) <= h_pq(l2_uniform_qh(q, i), q) + 1e-12


def test_l2_prefix_is_vertex():
    q = np.array([0.1, 0.5, 0.25, 0.15])
    p = l2_prefix(q, 0)
    assert set(np.round(p[p > 0], 12)) == {round(1 / (p > 0).sum(), 12)}


def test_batches_match_scalar():
    rng = np.random.default_rng(3)
    for n in (4, 8):
        Q = rng.dirichlet(np.ones(n), size=300)
        Q[:20, 0] = 0.0
        Q[:20] /= Q[:20].sum(axis=1, keepdims=True)
        idx = rng.integers(0, n, size=300)
        for batch, one in ((l1_loss_batch, l1_loss), (l2_loss_batch, l2_loss),
                           (binary_loss_batch, binary_loss)):
            got = batch(Q, idx)
            want = np.array([one(q, i) for q, i in zip(Q, idx)])
            assert np.abs(got - want).max() <= 1e-12
        assert np.allclose(loss_batch("l1", Q, idx), l1_loss_batch(Q, idx))


def test_oracle_argmax_returns_q():
    q = np.array([0.5, 0.25, 0.125, 0.125])
    p, val = oracle_min_cross_entropy(q, 0, QP)
    assert np.allclose(p, q, atol=1e-3)
    assert val == pytest.approx(entropy(q), abs=1e-9)


def test_oracle_outputs_are_feasible_lattice_points():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.choice([4, 8]))
        q = rng.dirichlet(np.ones(n))
        i = int(rng.integers(n))
        for direction in (QP, PQ):
            p, val = oracle_min_cross_entropy(q, i, direction)
            units = p * 1000
            assert np.allclose(units, np.round(units), atol=1e-9)
            assert abs(p.sum() - 1) < 1e-9 and p[i] >= p.max() - 1e-12
            loss_at_p = -(q * np.log(np.maximum(p, 1e-300))).sum() if direction == QP else h_pq(p, q)
            assert val == pytest.approx(loss_at_p, abs=1e-9)


def test_oracle_agrees_with_closed_forms():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.choice([4, 8]))
        q = rng.dirichlet(np.ones(n))
        i = int(rng.integers(n))
        _, o1 = oracle_min_cross_entropy(q, i, QP)
        _, o2 = oracle_min_cross_entropy(q, i, PQ)
        assert -1e-9 <= o1 - l1_loss(q, i) <= 2e-3
        # the oracle searches a subset of the simplex, so it never beats the exact value
        assert o2 - l2_loss(q, i) >= -1e-9


def test_l2_debug_mode_cross_checks():
    q = np.array([0.5, 0.3, 0.2])
    assert np.allclose(l2_minimizer(q, 2, check_oracle=True), (0.5, 0, 0.5))


def test_averaging_lemmas():
    rng = np.random.default_rng(9)
    x = np.sort(rng.uniform(1e-6, 1, (10000, 2)), axis=1)
    y = -np.sort(-rng.uniform(1e-6, 1, (10000, 2)), axis=1)
    x1, x2 = x[:, 0], x[:, 1]
    y1, y2 = y[:, 0], y[:, 1]
    lhs = -(y1 * np.log(x1) + y2 * np.log(x2))
    rhs = -(y1 + y2) * np.log((x1 + x2) / 2)
    assert (lhs >= rhs - 1e-12).all()
    lhs = -(x1 * np.log(y1) + x2 * np.log(y2))
    rhs = -((x1 + x2) / 2) * (np.log(y1) + np.log(y2))
    assert (lhs >= rhs - 1e-12).all()


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=8), st.floats(0.1, 1))
def test_scaled_shape_minimizes_cross_entropy_at_fixed_mass(w, m_p):
    # among vectors of mass m_p, -sum q log p is minimal at p proportional to q
    q = np.array(w)
    best = m_p * q / q.sum()
    rng = np.random.default_rng(len(w))
    for _ in range(20):
        p = rng.dirichlet(np.ones(q.size)) * m_p
        assert -(q * np.log(best)).sum() <= -(q * np.log(p)).sum() + 1e-12
