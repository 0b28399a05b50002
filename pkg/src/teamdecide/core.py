"""Domain types, reward scheme, session-log schema and shared probability helpers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

N_MEMBERS = 4
N_AGENTS = 4
N_OPTIONS = 4
N_DT1_ACTIONS = N_OPTIONS + N_AGENTS
N_DT2_ACTIONS = N_OPTIONS

STOCHASTIC_TOL = 1e-9
PROB_EPS = 1e-9


class DomainError(ValueError):
    """Input outside the domain of an operation."""


class NumericError(ArithmeticError):
    """An iterative computation failed to converge."""


@dataclass(frozen=True)
class RewardScheme:
    """Points for a correct answer and the (positive) penalties for a wrong
    answer and for consulting an agent."""

    c1: float = 4.0
    c2: float = 1.0
    c3: float = 1.0

    def __post_init__(self):
        if not self.c1 > 0:
            raise DomainError(f"c1 must be positive, got {self.c1}")
        if self.c2 < 0 or self.c3 < 0:
            raise DomainError("c2 and c3 are stored as non-negative magnitudes")

    @classmethod
    def parse(cls, text: str) -> "RewardScheme":
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 3:
            raise DomainError(f"scheme needs three comma-separated values, got {text!r}")
        return cls(*parts)


DEFAULT_SCHEME = RewardScheme()


# -- team actions -----------------------------------------------------------

OPTION = "option"
CONSULT = "consult_agent"
NO_CONSENSUS = "no_consensus"


@dataclass(frozen=True)
class TeamAction:
    kind: str
    value: Optional[int] = None

    @classmethod
    def option(cls, k: int) -> "TeamAction":
        return cls(OPTION, int(k))

    @classmethod
    def consult(cls, j: int) -> "TeamAction":
        return cls(CONSULT, int(j))

    @classmethod
    def no_consensus(cls) -> "TeamAction":
        return cls(NO_CONSENSUS, None)

    @property
    def dt1_index(self) -> Optional[int]:
        """0-based index into the 8-action DT1 distribution, None for no consensus."""
        if self.kind == OPTION:
            return self.value - 1
        if self.kind == CONSULT:
            return N_OPTIONS + self.value - 1
        return None

    @classmethod
    def from_dt1_index(cls, idx: int) -> "TeamAction":
        if idx < N_OPTIONS:
            return cls.option(idx + 1)
        return cls.consult(idx - N_OPTIONS + 1)


@dataclass(frozen=True)
class Consultation:
    agent_id: int
    agent_response: int
    final_option: Optional[int]  # None means the team failed to agree


@dataclass(frozen=True)
class QuestionRecord:
    index: int
    responses: tuple  # per member option in 1..4, None for abstain
    team_action: TeamAction
    correct_option: int
    consulted: Optional[Consultation] = None


@dataclass(frozen=True)
class SurveyRecord:
    after_question: int
    influence: np.ndarray
    agent_ratings: np.ndarray

    def __post_init__(self):
        for name in ("influence", "agent_ratings"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class SessionLog:
    team_id: str
    questions: tuple
    surveys: tuple = ()
    n_members: int = N_MEMBERS
    n_agents: int = N_AGENTS
    agent_true_accuracies: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "questions", tuple(self.questions))
        object.__setattr__(self, "surveys", tuple(self.surveys))
        if self.agent_true_accuracies is not None:
            object.__setattr__(self, "agent_true_accuracies",
                               tuple(float(a) for a in self.agent_true_accuracies))


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


def _valid_option(x) -> bool:
    return isinstance(x, (int, np.integer)) and 1 <= x <= N_OPTIONS


def validate_session(log: SessionLog) -> list:
    """Return every invariant violation in ``log``; an empty list means valid."""
    out = []

    def bad(loc, msg):
        out.append(Violation(loc, msg))

    if log.n_members != N_MEMBERS or log.n_agents != N_AGENTS:
        bad("session", f"expected {N_MEMBERS} members and {N_AGENTS} agents")
    if log.agent_true_accuracies is not None:
        accs = log.agent_true_accuracies
        if len(accs) != log.n_agents or any(not 0 <= a <= 1 for a in accs):
            bad("session", "agent_true_accuracies must hold one value in [0,1] per agent")

    prev = 0
    for q in log.questions:
        loc = f"question {q.index}"
        if q.index <= prev:
            bad(loc, "question indices not strictly increasing")
        prev = q.index
        if len(q.responses) != log.n_members:
            bad(loc, f"expected {log.n_members} responses, got {len(q.responses)}")
        for m, r in enumerate(q.responses, start=1):
            if r is not None and not _valid_option(r):
                bad(loc, f"member {m} response {r!r} outside 1..4")
        if not _valid_option(q.correct_option):
            bad(loc, f"correct_option {q.correct_option!r} outside 1..4")
        act = q.team_action
        if act.kind == OPTION:
            if not _valid_option(act.value):
                bad(loc, f"option action {act.value!r} outside 1..4")
        elif act.kind == CONSULT:
            if not (isinstance(act.value, (int, np.integer)) and 1 <= act.value <= log.n_agents):
                bad(loc, f"agent action {act.value!r} outside 1..{log.n_agents}")
        elif act.kind != NO_CONSENSUS:
            bad(loc, f"unknown team action kind {act.kind!r}")
        if act.kind == CONSULT:
            c = q.consulted
            if c is None:
                bad(loc, f"ConsultAgent({act.value}) without a consulted record")
            else:
                if c.agent_id != act.value:
                    bad(loc, f"consulted agent {c.agent_id} differs from action agent {act.value}")
                if not _valid_option(c.agent_response):
                    bad(loc, f"agent response {c.agent_response!r} outside 1..4")
                if c.final_option is not None and not _valid_option(c.final_option):
                    bad(loc, f"final option {c.final_option!r} outside 1..4")
        elif q.consulted is not None:
            bad(loc, "consulted record present without a ConsultAgent action")

    prev = 0
    for s in log.surveys:
        loc = f"survey {s.after_question}"
        if s.after_question <= prev:
            bad(loc, "survey after_question values not strictly increasing")
        prev = s.after_question
        if s.after_question % 5 != 0:
            bad(loc, "after_question is not a multiple of 5")
        W = s.influence
        if W.shape != (log.n_members, log.n_members):
            bad(loc, f"influence shape {W.shape} is not {log.n_members}x{log.n_members}")
        else:
            if (W < 0).any():
                bad(loc, "influence has negative weights")
            for r, total in enumerate(W.sum(axis=1), start=1):
                if abs(total - 1.0) > STOCHASTIC_TOL:
                    bad(f"survey {s.after_question}, row {r}", "not stochastic")
        P = s.agent_ratings
        if P.shape != (log.n_members, log.n_agents):
            bad(loc, f"agent_ratings shape {P.shape} is not {log.n_members}x{log.n_agents}")
        elif ((P < 0) | (P > 1)).any():
            bad(loc, "agent ratings outside [0,1]")
    return out


def report_to_jsonl(report: Iterable[Violation]) -> str:
    return "".join(json.dumps({"location": v.location, "message": v.message}) + "\n"
                   for v in report)


# -- rewards and softmax ----------------------------------------------------

def _check_prob(p):
    arr = np.asarray(p, dtype=float)
    if np.isnan(arr).any() or (arr < 0).any() or (arr > 1).any():
        raise DomainError(f"probability outside [0,1]: {p!r}")
    return arr


def reward_for_option(p_correct, scheme: RewardScheme = DEFAULT_SCHEME):
    """Expected points for answering directly: c1*p - c2*(1-p)."""
    p = _check_prob(p_correct)
    out = scheme.c1 * p - scheme.c2 * (1.0 - p)
    return float(out) if out.ndim == 0 else out


def reward_for_agent(p_correct, scheme: RewardScheme = DEFAULT_SCHEME):
    """Expected points for consulting an agent whose answer is right w.p. ``p_correct``."""
    p = _check_prob(p_correct)
    out = (scheme.c1 - scheme.c3) * p - (scheme.c2 + scheme.c3) * (1.0 - p)
    return float(out) if out.ndim == 0 else out


def softmax(values, axis=-1) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("softmax of an empty vector")
    if np.isnan(v).any():
        raise DomainError("softmax input contains NaN")
    z = v - v.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def clamp_prob(p):
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def check_distribution(probs, n=None, atol=1e-9) -> np.ndarray:
    """Validate an action distribution and return it as a float array."""
    q = np.asarray(probs, dtype=float)
    if q.ndim != 1 or (n is not None and q.size != n):
        raise DomainError(f"expected a length-{n} probability vector, got shape {q.shape}")
    if np.isnan(q).any() or (q < 0).any() or abs(q.sum() - 1.0) > atol:
        raise DomainError("not a probability distribution")
    return q


# -- JSON schema ------------------------------------------------------------

def normalize_influence(rows) -> np.ndarray:
    """Rescale raw survey rows (e.g. out of 100) to sum to one; all-zero rows
    become uniform."""
    W = np.array(rows, dtype=float)
    if (W < 0).any():
        raise DomainError("influence weights must be non-negative")
    sums = W.sum(axis=1, keepdims=True)
    zero = sums[:, 0] <= 0
    # rows already stochastic are kept bit-for-bit so JSON round trips are exact
    off = ~zero & (np.abs(sums[:, 0] - 1.0) > STOCHASTIC_TOL)
    W[off] = W[off] / sums[off]
    W[zero] = 1.0 / W.shape[1]
    return W


def _action_to_dict(a: TeamAction) -> dict:
    return {"kind": a.kind, "value": a.value}


def session_to_dict(log: SessionLog) -> dict:
    return {
        "team_id": log.team_id,
        "n_members": log.n_members,
        "n_agents": log.n_agents,
        "questions": [
            {
                "index": q.index,
                "responses": list(q.responses),
                "team_action": _action_to_dict(q.team_action),
                "consulted": None if q.consulted is None else {
                    "agent_id": q.consulted.agent_id,
                    "agent_response": q.consulted.agent_response,
                    "final_option": q.consulted.final_option,
                },
                "correct_option": q.correct_option,
            }
            for q in log.questions
        ],
        "surveys": [
            {
                "after_question": s.after_question,
                "influence": s.influence.tolist(),
                "agent_ratings": s.agent_ratings.tolist(),
            }
            for s in log.surveys
        ],
        "agent_true_accuracies": (None if log.agent_true_accuracies is None
                                  else list(log.agent_true_accuracies)),
    }


def session_from_dict(d: dict, normalize: bool = True) -> SessionLog:
    """Build a SessionLog from its JSON form.

    With ``normalize`` the influence rows are rescaled to be stochastic, so raw
    survey exports (rows out of 100) load cleanly.
    """
    try:
        questions = []
        for q in d["questions"]:
            act = q["team_action"]
            c = q.get("consulted")
            questions.append(QuestionRecord(
                index=int(q["index"]),
                responses=tuple(None if r is None else int(r) for r in q["responses"]),
                team_action=TeamAction(act["kind"], None if act.get("value") is None
                                       else int(act["value"])),
                correct_option=int(q["correct_option"]),
                consulted=None if c is None else Consultation(
                    int(c["agent_id"]), int(c["agent_response"]),
                    None if c.get("final_option") is None else int(c["final_option"])),
            ))
        surveys = []
        for s in d.get("surveys", []):
            W = normalize_influence(s["influence"]) if normalize else s["influence"]
            surveys.append(SurveyRecord(int(s["after_question"]), W, s["agent_ratings"]))
        return SessionLog(
            team_id=str(d["team_id"]),
            questions=questions,
            surveys=surveys,
            n_members=int(d.get("n_members", N_MEMBERS)),
            n_agents=int(d.get("n_agents", N_AGENTS)),
            agent_true_accuracies=d.get("agent_true_accuracies"),
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed session JSON: {exc!r}") from exc


def dumps_session(log: SessionLog) -> str:
    return json.dumps(session_to_dict(log), indent=1, sort_keys=True)


def loads_session(text: str, normalize: bool = True) -> SessionLog:
    return session_from_dict(json.loads(text), normalize=normalize)


def responses_array(responses: Sequence) -> np.ndarray:
    """Responses as 0-based ints with -1 for abstain."""
    return np.array([-1 if r is None else int(r) - 1 for r in responses], dtype=int)
