"""Causal replay of a session: the belief state before each question.

The state used for question t only reflects answers revealed for questions
before t and surveys taken after an earlier question.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional

import numpy as np

from .appraisal import InfluenceState, observe
from .core import (
    CONSULT,
    DEFAULT_SCHEME,
    QuestionRecord,
    RewardScheme,
    SessionLog,
    SurveyRecord,
    normalize_influence,
)
from .models import Dt2Context, TeamBeliefState


def initial_state(scheme: RewardScheme = DEFAULT_SCHEME) -> TeamBeliefState:
    return TeamBeliefState(scheme=scheme)


def apply_survey(state: TeamBeliefState, survey: SurveyRecord) -> TeamBeliefState:
    influence = InfluenceState.from_matrix(normalize_influence(survey.influence))
    return replace(state, influence=influence,
                   agent_ratings=np.clip(np.asarray(survey.agent_ratings, float), 0.0, 1.0))


def reveal(state: TeamBeliefState, q: QuestionRecord) -> TeamBeliefState:
    """Update appraisals once the correct answer of ``q`` is known."""
    humans = tuple(h if r is None else observe(h, int(r) == q.correct_option)
                   for h, r in zip(state.human_appraisals, q.responses))
    agents = state.agent_appraisals
    if q.consulted is not None:
        j = q.consulted.agent_id - 1
        agents = list(agents)
        agents[j] = observe(agents[j], q.consulted.agent_response == q.correct_option)
        agents = tuple(agents)
    return replace(state, human_appraisals=humans, agent_appraisals=agents)


@dataclass(frozen=True)
class Step:
    position: int  # 1-based position in the log
    record: QuestionRecord
    state: TeamBeliefState

    @property
    def dt1_action(self) -> Optional[int]:
        """0-based DT1 action index, None for NoConsensus."""
        return self.record.team_action.dt1_index

    @property
    def dt2_context(self) -> Optional[Dt2Context]:
        c = self.record.consulted
        if self.record.team_action.kind != CONSULT or c is None:
            return None
        return Dt2Context(tuple(self.record.responses), c.agent_id, c.agent_response)

    @property
    def dt2_action(self) -> Optional[int]:
        c = self.record.consulted
        if c is None or c.final_option is None:
            return None
        return c.final_option - 1


def replay(log: SessionLog, scheme: RewardScheme = DEFAULT_SCHEME) -> Iterator[Step]:
    """Yield each question together with the state a model may use for it."""
    state = initial_state(scheme)
    surveys = sorted(log.surveys, key=lambda s: s.after_question)
    si = 0
    for pos, q in enumerate(log.questions, start=1):
        while si < len(surveys) and surveys[si].after_question < q.index:
            state = apply_survey(state, surveys[si])
            si += 1
        yield Step(pos, q, state)
        state = reveal(state, q)

