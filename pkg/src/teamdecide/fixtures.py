"""Hand-computed reference scenarios and quick oracle spot checks.

Each check returns a list of mismatch messages; an empty list is a pass.
"""

from __future__ import annotations

import itertools

import numpy as np

from .appraisal import centrality, init_human_appraisal, observe
from .core import DEFAULT_SCHEME, RewardScheme, reward_for_agent, reward_for_option
from .fit_eval import wilcoxon_signed_rank
from .loss import PQ, QP, l1_loss, l2_loss, oracle_min_cross_entropy
from .models import (
    TeamBeliefState,
    cent_agent_accuracy,
    cent_option_probs,
    naive_bayes_posterior,
)

EXAMPLE1_PERFS = (0.5, 0.4, 0.8, 0.6)
EXAMPLE1_RESPONSES = (1, 2, 1, 3)
EXAMPLE1_POSTERIOR = (0.828, 0.046, 0.103, 0.023)
EXAMPLE1_REWARDS = (3.14, -0.77, -0.485, -0.885, 1.75, 1.75, 1.75, 1.75)

# two members on each of options 3 and 4; a (2, 2, 3, 3) profile gives the
# same numbers on options 2 and 3 instead
EXAMPLE2_RESPONSES = (3, 3, 4, 4)
EXAMPLE2_POSTERIOR = (0.05, 0.05, 0.45, 0.45)
EXAMPLE2_REWARDS = (-0.75, -0.75, 1.25, 1.25)

EXAMPLE3_DELTA = (0.4, 0.3, 0.2, 0.1)
EXAMPLE3_RESPONSES = (1, 2, 1, 3)
EXAMPLE3_RATINGS = ((0.45, 0.67, 0.85, 0.6),
                    (0.6, 0.75, 0.9, 0.55),
                    (0.8, 0.65, 0.7, 0.5),
                    (0.75, 0.75, 0.95, 0.1))  # 0.1 is the rating that yields 0.515
EXAMPLE3_AGGREGATE = (0.595, 0.698, 0.845, 0.515)
EXAMPLE3_REWARDS = (2.0, 0.5, -0.5, -1.0, 0.975, 1.49, 2.225, 0.575)


def _close(name, got, want, tol):
    got = np.atleast_1d(np.asarray(got, float))
    want = np.atleast_1d(np.asarray(want, float))
    if got.shape != want.shape or np.abs(got - want).max() > tol:
        return [f"{name}: got {np.round(got, 4).tolist()}, expected {want.tolist()}"]
    return []


def example1(scheme: RewardScheme = DEFAULT_SCHEME, tol=1e-2):
    post = naive_bayes_posterior(EXAMPLE1_PERFS, EXAMPLE1_RESPONSES)
    rewards = np.concatenate([reward_for_option(post, scheme), reward_for_agent(np.full(4, 0.75), scheme)])
    return (_close("example-1 posterior", post, EXAMPLE1_POSTERIOR, 1e-3)
            + _close("example-1 rewards", rewards, EXAMPLE1_REWARDS, tol))


def example2(scheme: RewardScheme = DEFAULT_SCHEME, tol=1e-2):
    post = naive_bayes_posterior((0.5,) * 4, EXAMPLE2_RESPONSES)
    right = observe(init_human_appraisal(), True).mean
    wrong = observe(init_human_appraisal(), False).mean
    return (_close("example-2 posterior", post, EXAMPLE2_POSTERIOR, 1e-3)
            + _close("example-2 rewards", reward_for_option(post, scheme), EXAMPLE2_REWARDS, tol)
            + _close("example-2 appraisal updates", (wrong, right), (0.33, 0.67), tol))


def example3(scheme: RewardScheme = DEFAULT_SCHEME, tol=1e-2):
    state = TeamBeliefState.from_values(delta=EXAMPLE3_DELTA, agent_ratings=EXAMPLE3_RATINGS,
                                        scheme=scheme)
    opt = cent_option_probs(state, EXAMPLE3_RESPONSES)
    pi = cent_agent_accuracy(state)
    rewards = np.concatenate([reward_for_option(opt, scheme), reward_for_agent(pi, scheme)])
    return (_close("example-3 aggregate ratings", pi, EXAMPLE3_AGGREGATE, 1e-3)
            + _close("example-3 rewards", rewards, EXAMPLE3_REWARDS, tol))


def enumerate_signed_rank_p(x, y):
    """Two-sided p by listing every sign assignment; small n only."""
    d = np.asarray(x, float) - np.asarray(y, float)
    d = d[d != 0]
    if d.size == 0:
        return 1.0
    a = np.abs(d)
    ranks = np.array([(a < v).sum() + ((a == v).sum() + 1) / 2.0 for v in a])
    w_obs = min(ranks[d > 0].sum(), ranks[d < 0].sum())
    hits = total = 0
    for signs in itertools.product((0, 1), repeat=d.size):
        wp = float(np.dot(signs, ranks))
        hits += min(wp, ranks.sum() - wp) <= w_obs + 1e-9
        total += 1
    return min(1.0, hits / total)


def oracle_spot_checks(seed=0, n=20):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        dim = (4, 8)[k % 2]
        q = rng.dirichlet(np.ones(dim))
        i = int(rng.integers(dim))
        _, o1 = oracle_min_cross_entropy(q, i, QP)
        _, o2 = oracle_min_cross_entropy(q, i, PQ)
        if not -1e-9 <= o1 - l1_loss(q, i) <= 2e-3:
            out.append(f"L1 oracle mismatch on case {k}")
        if not -1e-9 <= o2 - l2_loss(q, i) <= 2e-3:
            out.append(f"L2 oracle mismatch on case {k}")
    for k in range(5):
        W = rng.dirichlet(np.ones(4), size=4)
        d = centrality(W)
        if np.abs(d @ W - d).max() > 1e-8:
            out.append(f"centrality residual too large on case {k}")
    for k in range(5):
        m = 6 + k
        x, y = rng.normal(size=m), rng.normal(size=m)
        if abs(wilcoxon_signed_rank(x, y).p_value - enumerate_signed_rank_p(x, y)) > 1e-12:
            out.append(f"signed-rank exact p mismatch on case {k}")
    return out


FIXTURES = (
    ("example-1", example1),
    ("example-2", example2),
    ("example-3", example3),
)


def run_all(scheme: RewardScheme = DEFAULT_SCHEME, oracles=True):
    """(name, messages) for each fixture, in order."""
    results = [(name, fn(scheme)) for name, fn in FIXTURES]
    if oracles:
        results.append(("oracle-spot-checks", oracle_spot_checks()))
    return results
