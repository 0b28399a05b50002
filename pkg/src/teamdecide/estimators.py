"""scikit-learn style wrapper around the team decision models.

``X`` is a sequence of SessionLog objects (one per team). ``fit`` learns
whatever the chosen model needs (per-team PT parameters, or the agent-trust
weight for CENT on task 2); ``predict_proba`` returns one array of action
distributions per team for the scored decisions of the chosen split.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import DomainError, RewardScheme, SessionLog, validate_session
from .fit_eval import (
    DT1,
    DT2,
    PT_KINDS,
    TEST,
    FitConfig,
    in_split,
    check_kind,
    dt1_model_distribution,
    evaluate,
    fit_pt,
    fit_w,
)
from .loss import LOSS_KINDS
from .models import CENT, PT_CENT, dt2_probabilities
from .replay import replay


def check_logs(X) -> list:
    """Return ``X`` as a list of valid SessionLogs or raise DomainError."""
    if isinstance(X, SessionLog):
        X = [X]
    logs = list(X)
    if not logs:
        raise DomainError("no session logs given")
    for log in logs:
        if not isinstance(log, SessionLog):
            raise DomainError(f"expected SessionLog, got {type(log).__name__}")
        problems = validate_session(log)
        if problems:
            raise DomainError(f"team {log.team_id}: {problems[0]}")
    ids = [log.team_id for log in logs]
    if len(set(ids)) != len(ids):
        raise DomainError("duplicate team ids")
    return logs


class TeamDecisionModel(BaseEstimator):
    def __init__(self, kind="NB", task=DT1, loss="l1", train_questions=30, w=None,
                 scheme="4,1,1", split=TEST, n_jobs=1):
        self.kind = kind
        self.task = task
        self.loss = loss
        self.train_questions = train_questions
        self.w = w
        self.scheme = scheme
        self.split = split
        self.n_jobs = n_jobs

    def _scheme(self):
        return self.scheme if isinstance(self.scheme, RewardScheme) else RewardScheme.parse(self.scheme)

    def _needs_w(self):
        return self.task == DT2 and self.kind in (CENT, PT_CENT)

    def fit(self, X, y=None):
        check_kind(self.kind, self.task)
        if self.loss not in LOSS_KINDS:
            raise DomainError(f"unknown loss {self.loss!r}")
        logs = check_logs(X)
        scheme = self._scheme()
        self.params_ = None
        self.w_ = self.w
        if self.task == DT1 and self.kind in PT_KINDS:
            self.params_ = fit_pt(logs, self.kind, self.loss,
                                  FitConfig(train_questions=self.train_questions),
                                  scheme, self.n_jobs)
        if self._needs_w() and self.w is None:
            self.w_ = fit_w(logs, CENT, self.loss, scheme=scheme)
        self.n_teams_ = len(logs)
        return self

    def predict_proba(self, X) -> list:
        check_is_fitted(self, "n_teams_")
        scheme = self._scheme()
        out = []
        for log in check_logs(X):
            prm = None if self.params_ is None else self.params_.get(log.team_id)
            if self.params_ is not None and prm is None:
                raise DomainError(f"no fitted parameters for team {log.team_id!r}")
            rows = []
            for step in replay(log, scheme):
                if not in_split(step.position, self.split, self.train_questions):
                    continue
                if self.task == DT1:
                    if step.dt1_action is None:
                        continue
                    rows.append(dt1_model_distribution(self.kind, step.state,
                                                       step.record.responses, prm))
                else:
                    if step.dt2_context is None or step.dt2_action is None:
                        continue
                    rows.append(dt2_probabilities(self.kind, step.state, step.dt2_context, self.w_))
            n = 8 if self.task == DT1 else 4
            out.append(np.asarray(rows, float).reshape(-1, n))
        return out

    def predict(self, X) -> list:
        """Most likely 0-based action index for every scored decision."""
        return [p.argmax(axis=1) for p in self.predict_proba(X)]

    def evaluate(self, X):
        check_is_fitted(self, "n_teams_")
        return evaluate(check_logs(X), self.kind, self.loss, self.task, params=self.params_,
                        w=self.w_, split=self.split, train_questions=self.train_questions,
                        scheme=self._scheme())

    def score(self, X, y=None) -> float:
        """Negative mean per-team loss, so larger is better."""
        return -self.evaluate(X).mean

