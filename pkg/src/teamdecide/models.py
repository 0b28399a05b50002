"""NB and CENT decision models for both decision tasks.

DT1 distributions are length 8 (four options, then four agents); DT2
distributions are length 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .appraisal import (
    BetaAppraisal,
    InfluenceState,
    aggregate_agent_appraisal,
    init_agent_appraisal,
    init_human_appraisal,
)
from .core import (
    DEFAULT_SCHEME,
    N_AGENTS,
    N_OPTIONS,
    DomainError,
    RewardScheme,
    clamp_prob,
    responses_array,
    reward_for_agent,
    reward_for_option,
    softmax,
)

NB = "NB"
CENT = "CENT"
PT_NB = "PT-NB"
PT_CENT = "PT-CENT"
RANDOM = "RANDOM"
NB_H = "NB-H"
NB_A = "NB-A"
CENT_H = "CENT-H"
CENT_A = "CENT-A"

DT1_MODELS = (NB, CENT, PT_NB, PT_CENT, RANDOM)
DT2_MODELS = (NB, CENT, PT_NB, PT_CENT, RANDOM, NB_H, NB_A, CENT_H, CENT_A)
ALL_MODELS = DT2_MODELS

PRIOR_AGENT_RATING = 0.75


def base_kind(kind: str) -> str:
    """NB or CENT, the appraisal model underlying ``kind``."""
    if kind.endswith("CENT") or kind.startswith("CENT"):
        return CENT
    if kind.endswith("NB") or kind.startswith("NB"):
        return NB
    raise DomainError(f"{kind!r} has no underlying appraisal model")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TeamBeliefState:
    """Everything a model knows about a team just before a decision."""

    human_appraisals: tuple = field(
        default_factory=lambda: tuple(init_human_appraisal() for _ in range(4)))
    agent_appraisals: tuple = field(
        default_factory=lambda: tuple(init_agent_appraisal() for _ in range(N_AGENTS)))
    influence: InfluenceState = field(default_factory=InfluenceState.uniform)
    agent_ratings: np.ndarray = field(
        default_factory=lambda: np.full((4, N_AGENTS), PRIOR_AGENT_RATING))
    scheme: RewardScheme = DEFAULT_SCHEME

    def __post_init__(self):
        object.__setattr__(self, "human_appraisals", tuple(self.human_appraisals))
        object.__setattr__(self, "agent_appraisals", tuple(self.agent_appraisals))
        object.__setattr__(self, "agent_ratings", _frozen(self.agent_ratings))

    @property
    def human_means(self) -> np.ndarray:
        return np.array([h.mean for h in self.human_appraisals])

    @property
    def agent_means(self) -> np.ndarray:
        return np.array([g.mean for g in self.agent_appraisals])

    @classmethod
    def from_values(cls, human_means=None, agent_means=None, delta=None,
                    agent_ratings=None, scheme=DEFAULT_SCHEME) -> "TeamBeliefState":
        """Build a state from point values, for worked examples and tests.

        Means are encoded as Beta pseudo-counts with the same mean; ``delta``
        is realised as a rank-one influence matrix whose rows all equal it.
        """
        kw = {"scheme": scheme}
        if human_means is not None:
            kw["human_appraisals"] = tuple(_beta_with_mean(m, "unit") for m in human_means)
        if agent_means is not None:
            kw["agent_appraisals"] = tuple(_beta_with_mean(m, "upper") for m in agent_means)
        if delta is not None:
            d = np.asarray(delta, dtype=float)
            kw["influence"] = InfluenceState(_frozen(np.tile(d, (d.size, 1))), _frozen(d))
        if agent_ratings is not None:
            kw["agent_ratings"] = agent_ratings
        return cls(**kw)


def _beta_with_mean(m, support):
    frac = m if support == "unit" else (m - 0.5) / 0.5
    if not 0 < frac < 1:
        # limiting values are allowed for hand-built states only
        frac = float(np.clip(frac, 1e-12, 1 - 1e-12))
    return BetaAppraisal(frac * 1e6, (1 - frac) * 1e6, support)


@dataclass(frozen=True)
class Dt2Context:
    responses: tuple
    agent_id: int
    agent_response: int

    def __post_init__(self):
        if not 1 <= self.agent_id <= N_AGENTS or not 1 <= self.agent_response <= N_OPTIONS:
            raise DomainError("agent id and response must lie in 1..4")


# -- naive Bayes ------------------------------------------------------------

def _likelihood_matrix(perf, choice):
    """P(response | true option k) for one responder, as a length-4 vector."""
    row = np.full(N_OPTIONS, (1.0 - perf) / 3.0)
    row[choice] = perf
    return row


def naive_bayes_posterior(perfs, responses, extra=None) -> np.ndarray:
    """Posterior over the four options under a uniform prior.

    ``responses`` are 1-based options or None (abstain, contributes nothing).
    ``extra`` is an optional (accuracy, 1-based option) pair for one more
    independent responder, used for the consulted agent.
    """
    post = np.full(N_OPTIONS, 0.25)
    for perf, r in zip(perfs, responses):
        if r is None:
            continue
        post = post * _likelihood_matrix(perf, int(r) - 1)
    if extra is not None:
        perf, r = extra
        post = post * _likelihood_matrix(perf, int(r) - 1)
    return post / post.sum()


def nb_option_posterior(state: TeamBeliefState, responses) -> np.ndarray:
    return naive_bayes_posterior(state.human_means, responses)


def nb_agent_probs(state: TeamBeliefState) -> np.ndarray:
    m = state.agent_means
    return m / m.sum()


def nb_agent_accuracy(state: TeamBeliefState) -> np.ndarray:
    return state.agent_means


def nb_dt2_posterior(state: TeamBeliefState, ctx: Dt2Context) -> np.ndarray:
    m = state.agent_appraisals[ctx.agent_id - 1].mean
    return naive_bayes_posterior(state.human_means, ctx.responses,
                                 extra=(m, ctx.agent_response))


# -- centrality -------------------------------------------------------------

def centrality_option_mass(delta, responses) -> np.ndarray:
    """Unnormalised centrality mass behind each option."""
    r = responses_array(responses)
    mass = np.zeros(N_OPTIONS)
    for d, k in zip(delta, r):
        if k >= 0:
            mass[k] += d
    return mass


def cent_option_probs(state: TeamBeliefState, responses) -> np.ndarray:
    mass = centrality_option_mass(state.influence.delta, responses)
    total = mass.sum()
    if total <= 0:
        return np.full(N_OPTIONS, 0.25)
    return mass / total


def cent_agent_accuracy(state: TeamBeliefState) -> np.ndarray:
    return aggregate_agent_appraisal(state.influence.delta, state.agent_ratings)


def cent_agent_probs(state: TeamBeliefState) -> np.ndarray:
    pi = cent_agent_accuracy(state)
    total = pi.sum()
    if total <= 0:
        return np.full(N_AGENTS, 1.0 / N_AGENTS)
    return pi / total


def cent_dt2_posterior(state: TeamBeliefState, ctx: Dt2Context, w: float) -> np.ndarray:
    if not 0.0 <= w <= 1.0:
        raise DomainError(f"w must lie in [0,1], got {w}")
    pi_j = cent_agent_accuracy(state)[ctx.agent_id - 1]
    mass = centrality_option_mass(state.influence.delta, ctx.responses) * (1.0 - w)
    mass[ctx.agent_response - 1] += pi_j * w
    total = mass.sum()
    if total <= 0:
        return np.full(N_OPTIONS, 0.25)
    return mass / total


# -- distributions ----------------------------------------------------------

def dt1_rewards(option_post, agent_probs, scheme: RewardScheme = DEFAULT_SCHEME):
    return np.concatenate([reward_for_option(np.asarray(option_post, float), scheme),
                           reward_for_agent(np.asarray(agent_probs, float), scheme)])


def dt1_distribution(option_post, agent_probs, scheme: RewardScheme = DEFAULT_SCHEME):
    return softmax(dt1_rewards(option_post, agent_probs, scheme))


def dt2_rewards(posterior, scheme: RewardScheme = DEFAULT_SCHEME):
    # the consultation fee is already paid, so every option carries it
    return reward_for_agent(np.asarray(posterior, float), scheme)


def dt2_distribution(posterior, scheme: RewardScheme = DEFAULT_SCHEME):
    return softmax(dt2_rewards(posterior, scheme))


def dt1_inputs(kind: str, state: TeamBeliefState, responses, normalize_agents=False):
    """Option posterior and agent success probabilities feeding the DT1 rewards.

    Agent gambles use the appraised accuracy itself; ``normalize_agents``
    swaps in the across-agent normalised choice probabilities instead.
    """
    if base_kind(kind) == NB:
        opt = nb_option_posterior(state, responses)
        agents = nb_agent_probs(state) if normalize_agents else nb_agent_accuracy(state)
    else:
        opt = cent_option_probs(state, responses)
        agents = cent_agent_probs(state) if normalize_agents else cent_agent_accuracy(state)
    return opt, agents


def cent_dt2(state: TeamBeliefState, ctx: Dt2Context, w: float):
    post = cent_dt2_posterior(state, ctx, w)
    return post, dt2_distribution(post, state.scheme)


def nb_dt2(state: TeamBeliefState, ctx: Dt2Context):
    post = nb_dt2_posterior(state, ctx)
    return post, dt2_distribution(post, state.scheme)


def dt2_human_only(kind: str, state: TeamBeliefState, ctx: Dt2Context) -> np.ndarray:
    if base_kind(kind) == NB:
        post = nb_option_posterior(state, ctx.responses)
    else:
        post = cent_option_probs(state, ctx.responses)
    return dt2_distribution(post, state.scheme)


def agent_only_posterior(kind: str, state: TeamBeliefState, ctx: Dt2Context) -> np.ndarray:
    if base_kind(kind) == NB:
        m = state.agent_appraisals[ctx.agent_id - 1].mean
    else:
        m = cent_agent_accuracy(state)[ctx.agent_id - 1]
    m = float(clamp_prob(m))
    post = np.full(N_OPTIONS, (1.0 - m) / 3.0)
    post[ctx.agent_response - 1] = m
    return post


def dt2_agent_only(kind: str, state: TeamBeliefState, ctx: Dt2Context) -> np.ndarray:
    return dt2_distribution(agent_only_posterior(kind, state, ctx), state.scheme)


def random_baseline(n_actions: int) -> np.ndarray:
    if n_actions not in (4, 8):
        raise DomainError(f"random baseline is defined for 4 or 8 actions, not {n_actions}")
    return np.full(n_actions, 1.0 / n_actions)


def dt2_probabilities(kind: str, state: TeamBeliefState, ctx: Dt2Context, w=None):
    """DT2 distribution for any model kind.

    Prospect-theory variants share the base model here: every option carries
    the same gamble magnitudes after the fee is paid.
    """
    if kind == RANDOM:
        return random_baseline(4)
    if kind in (NB_H, CENT_H):
        return dt2_human_only(kind, state, ctx)
    if kind in (NB_A, CENT_A):
        return dt2_agent_only(kind, state, ctx)
    if base_kind(kind) == NB:
        return nb_dt2(state, ctx)[1]
    if w is None:
        raise DomainError("CENT decision task 2 needs the agent-trust weight w")
    return cent_dt2(state, ctx, w)[1]
