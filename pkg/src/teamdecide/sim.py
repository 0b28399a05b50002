"""Seeded synthetic sessions and score bookkeeping.

Every random draw for question q of team t comes from a generator seeded by
``SeedSequence(seed, spawn_key=(t, q))``; team-level draws use q = 0. Teams
and questions can therefore be generated in any order with identical output.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .core import (
    CONSULT,
    DEFAULT_SCHEME,
    NO_CONSENSUS,
    Consultation,
    DomainError,
    QuestionRecord,
    RewardScheme,
    SessionLog,
    SurveyRecord,
    TeamAction,
)
from .fit_eval import dt1_model_distribution
from .models import CENT, NB, PT_CENT, PT_NB, Dt2Context, base_kind, dt2_probabilities
from .prospect import PTParams
from .replay import apply_survey, initial_state, reveal

GENERATIVE_MODELS = (NB, CENT, PT_NB, PT_CENT)
SAMPLE = "sample"
ARGMAX = "argmax"
MODEL_POLICY = "model"


@dataclass(frozen=True)
class SimConfig:
    n_teams: int = 30
    n_questions: int = 45
    human_accuracies: tuple = (0.4, 0.5, 0.6, 0.7)
    agent_accuracies: tuple = (0.6, 0.7, 0.8, 0.9)
    generative_model: str = NB
    pt_params: Optional[PTParams] = None
    w: float = 0.9
    # "model" samples consultations from the model; a number is a fixed
    # per-question consultation probability
    consult_policy: Union[str, float] = MODEL_POLICY
    decision_rule: str = SAMPLE
    no_consensus_dt1: float = 0.02
    no_consensus_dt2: float = 0.18
    survey_every: int = 5
    survey_noise: float = 0.05
    rating_drift: float = 0.3
    scheme: RewardScheme = DEFAULT_SCHEME
    seed: int = 0

    def __post_init__(self):
        if self.n_teams < 1 or self.n_questions < 1:
            raise DomainError("need at least one team and one question")
        if len(self.human_accuracies) != 4 or len(self.agent_accuracies) != 4:
            raise DomainError("need four human and four agent accuracies")
        if any(not 0 <= a <= 1 for a in self.human_accuracies):
            raise DomainError("human accuracies must lie in [0,1]")
        if any(not 0.5 <= a <= 1 for a in self.agent_accuracies):
            raise DomainError("agent accuracies must lie in [0.5,1]")
        if self.generative_model not in GENERATIVE_MODELS:
            raise DomainError(f"generative model must be one of {GENERATIVE_MODELS}")
        if self.generative_model in (PT_NB, PT_CENT) and self.pt_params is None:
            raise DomainError("PT generative models need pt_params")
        if not 0 <= self.w <= 1:
            raise DomainError("w must lie in [0,1]")
        if self.consult_policy != MODEL_POLICY and not (
                isinstance(self.consult_policy, (int, float)) and 0 <= self.consult_policy <= 1):
            raise DomainError("consult_policy must be 'model' or a probability")
        if self.decision_rule not in (SAMPLE, ARGMAX):
            raise DomainError("decision_rule must be 'sample' or 'argmax'")
        for r in (self.no_consensus_dt1, self.no_consensus_dt2):
            if not 0 <= r <= 1:
                raise DomainError("no-consensus rates must lie in [0,1]")
        if self.survey_every < 1 or self.survey_noise < 0:
            raise DomainError("survey_every >= 1 and survey_noise >= 0 required")
        if not 0 <= self.rating_drift <= 1:
            raise DomainError("rating_drift must lie in [0,1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pt_params"] = None if self.pt_params is None else self.pt_params.to_dict()
        d["scheme"] = [self.scheme.c1, self.scheme.c2, self.scheme.c3]
        d["human_accuracies"] = list(self.human_accuracies)
        d["agent_accuracies"] = list(self.agent_accuracies)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if d.get("pt_params") is not None:
            d["pt_params"] = PTParams.from_dict(d["pt_params"])
        if "scheme" in d:
            s = d["scheme"]
            d["scheme"] = RewardScheme.parse(s) if isinstance(s, str) else RewardScheme(*s)
        for k in ("human_accuracies", "agent_accuracies"):
            if k in d:
                d[k] = tuple(float(v) for v in d[k])
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def _rng(seed, team, q):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(team, q)))


def _answer(rng, acc, correct):
    if rng.random() < acc:
        return correct
    wrong = [k for k in (1, 2, 3, 4) if k != correct]
    return int(wrong[rng.integers(3)])


def _choose(rng, probs, rule):
    if rule == ARGMAX:
        return int(np.argmax(probs))
    return int(rng.choice(probs.size, p=probs))


def _team_truth(cfg: SimConfig, team: int):
    rng = _rng(cfg.seed, team, 0)
    W = rng.dirichlet(np.full(4, 2.0), size=4)
    W = 0.5 * W + 0.5 * np.eye(4)  # members lean on themselves
    return W


def question_score(record: QuestionRecord, scheme: RewardScheme = DEFAULT_SCHEME) -> float:
    act = record.team_action
    if act.kind == CONSULT:
        final = None if record.consulted is None else record.consulted.final_option
        base = scheme.c1 if final == record.correct_option else -scheme.c2
        return base - scheme.c3
    if act.kind == NO_CONSENSUS:
        return -scheme.c2
    return scheme.c1 if act.value == record.correct_option else -scheme.c2


def realized_score(log: SessionLog, scheme: RewardScheme = DEFAULT_SCHEME) -> float:
    return float(sum(question_score(q, scheme) for q in log.questions))


def expected_score_explore_exploit(agent_accuracies, consults_per_agent: int, n_questions: int,
                                   scheme: RewardScheme = DEFAULT_SCHEME) -> float:
    """Expected points when every question is sent to an agent: each agent is
    tried ``consults_per_agent`` times, then the best one answers the rest."""
    accs = np.asarray(agent_accuracies, float)
    explore = consults_per_agent * accs.size
    if consults_per_agent < 0 or explore > n_questions:
        raise DomainError("exploration consults exceed the number of questions")
    ev = -scheme.c3 + accs * scheme.c1 - (1.0 - accs) * scheme.c2
    return float(consults_per_agent * ev.sum() + (n_questions - explore) * ev.max())


def simulate_team(cfg: SimConfig, team: int):
    """One team's log and the score tracked while generating it."""
    W_true = _team_truth(cfg, team)
    ratings = np.full((4, 4), 0.75)
    agent_hits = np.zeros(4)
    agent_seen = np.zeros(4)
    state = initial_state(cfg.scheme)
    questions, surveys = [], []
    score = 0.0
    for qi in range(1, cfg.n_questions + 1):
        rng = _rng(cfg.seed, team, qi)
        correct = int(rng.integers(1, 5))
        responses = tuple(_answer(rng, a, correct) for a in cfg.human_accuracies)
        consulted = None
        if rng.random() < cfg.no_consensus_dt1:
            action = TeamAction.no_consensus()
        else:
            dist = dt1_model_distribution(cfg.generative_model, state, responses, cfg.pt_params)
            if cfg.consult_policy != MODEL_POLICY:
                opts, ags = dist[:4] / dist[:4].sum(), dist[4:] / dist[4:].sum()
                if rng.random() < cfg.consult_policy:
                    action = TeamAction.consult(_choose(rng, ags, cfg.decision_rule) + 1)
                else:
                    action = TeamAction.option(_choose(rng, opts, cfg.decision_rule) + 1)
            else:
                action = TeamAction.from_dt1_index(_choose(rng, dist, cfg.decision_rule))
        if action.kind == CONSULT:
            j = action.value
            g = _answer(rng, cfg.agent_accuracies[j - 1], correct)
            agent_seen[j - 1] += 1
            agent_hits[j - 1] += g == correct
            if rng.random() < cfg.no_consensus_dt2:
                final = None
            else:
                ctx = Dt2Context(responses, j, g)
                d2 = dt2_probabilities(base_kind(cfg.generative_model), state, ctx, cfg.w)
                final = _choose(rng, d2, cfg.decision_rule) + 1
            consulted = Consultation(j, g, final)
        rec = QuestionRecord(qi, responses, action, correct, consulted)
        score += question_score(rec, cfg.scheme)
        questions.append(rec)
        state = reveal(state, rec)
        if qi % cfg.survey_every == 0:
            noisy = np.clip(W_true + rng.uniform(-cfg.survey_noise, cfg.survey_noise, (4, 4)),
                            0.0, None)
            noisy = noisy / noisy.sum(axis=1, keepdims=True)
            seen = agent_seen > 0
            target = np.where(seen, agent_hits / np.maximum(agent_seen, 1), ratings)
            ratings = ratings + cfg.rating_drift * (target - ratings)
            reported = np.clip(ratings + rng.normal(0, cfg.survey_noise, (4, 4)), 0.0, 1.0)
            survey = SurveyRecord(qi, noisy, reported)
            surveys.append(survey)
            state = apply_survey(state, survey)
    log = SessionLog(f"team{team:03d}", tuple(questions), tuple(surveys),
                     agent_true_accuracies=tuple(cfg.agent_accuracies))
    return log, score


def generate(cfg: SimConfig, n_jobs: int = 1):
    """All team logs, in team order."""
    with ThreadPoolExecutor(max_workers=max(1, n_jobs)) as ex:
        out = list(ex.map(lambda t: simulate_team(cfg, t)[0], range(cfg.n_teams)))
    return out


def manifest(cfg: SimConfig) -> str:
    return json.dumps({"config": cfg.to_dict(), "seed": cfg.seed,
                       "stream": "SeedSequence(seed, spawn_key=(team, question))"},
                      indent=2, sort_keys=True)
