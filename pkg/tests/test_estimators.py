import numpy as np
import pytest
from sklearn.base import clone

from teamdecide.core import DomainError
from teamdecide.estimators import TeamDecisionModel, check_logs
from teamdecide.fit_eval import evaluate
from teamdecide.sim import SimConfig, generate


@pytest.fixture(scope="module")
def logs():
    return generate(SimConfig(n_teams=4, n_questions=40, seed=21))


def test_params_and_clone():
    m = TeamDecisionModel(kind="CENT", task="dt2", w=0.4)
    c = clone(m)
    assert c.get_params() == m.get_params()
    assert c.get_params()["w"] == 0.4
    c.set_params(loss="l2")
    assert c.loss == "l2" and m.loss == "l1"


def test_predict_proba_rows_are_distributions(logs):
    m = TeamDecisionModel(kind="NB").fit(logs)
    probs = m.predict_proba(logs)
    assert len(probs) == len(logs)
    for p in probs:
        assert p.shape[1] == 8
        assert np.allclose(p.sum(axis=1), 1)
    assert [x.shape[0] for x in m.predict(logs)] == [p.shape[0] for p in probs]


def test_score_is_negative_mean_loss(logs):
    m = TeamDecisionModel(kind="CENT", loss="l2").fit(logs)
    assert m.score(logs) == pytest.approx(-evaluate(logs, "CENT", "l2").mean)


def test_pt_fit_stores_team_params(logs):
    m = TeamDecisionModel(kind="PT-NB", loss="binary", n_jobs=2).fit(logs)
    assert sorted(m.params_) == sorted(x.team_id for x in logs)
    assert np.isfinite(m.score(logs))


def test_dt2_fits_w_when_missing(logs):
    m = TeamDecisionModel(kind="CENT", task="dt2", split="all").fit(logs)
    assert 0 <= m.w_ <= 1
    fixed = TeamDecisionModel(kind="CENT", task="dt2", w=0.3, split="all").fit(logs)
    assert fixed.w_ == 0.3
    for p in fixed.predict_proba(logs):
        assert p.shape[1] == 4


def test_bad_inputs(logs):
    with pytest.raises(DomainError):
        TeamDecisionModel(kind="NB-H").fit(logs)
    with pytest.raises(DomainError):
        TeamDecisionModel(loss="hinge").fit(logs)
    with pytest.raises(DomainError):
        check_logs([])
    with pytest.raises(DomainError):
        check_logs([logs[0], logs[0]])
    with pytest.raises(Exception):
        TeamDecisionModel().predict_proba(logs)
