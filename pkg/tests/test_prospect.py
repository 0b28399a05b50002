import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from teamdecide.core import DomainError, reward_for_agent, reward_for_option, softmax
from teamdecide.models import dt1_distribution
from teamdecide.prospect import (
    GAMMA_FLOOR,
    IDENTITY,
    Gamble,
    PTParams,
    grid_alpha,
    grid_gamma,
    grid_lambda,
    pt_dt1_distribution,
    pt_dt1_values,
    pt_value,
    weight,
)

unit = st.floats(0, 1)
gam = st.floats(0.01, 1)


def mp_value(gain, p, loss, alpha, beta, lam, gp, gm):
    mpmath.mp.dps = 50
    w = lambda q, g: mpmath.exp(-mpmath.power(mpmath.log(1 / mpmath.mpf(q)), g))
    return (mpmath.power(gain, alpha) * w(p, gp)
            - lam * mpmath.power(abs(loss), beta) * w(1 - mpmath.mpf(p), gm))


def test_weight_examples():
    assert weight(0.5, 1.0) == pytest.approx(0.5, abs=1e-15)
    for g in (0.1, 0.5, 0.9):
        assert weight(np.exp(-1), g) == pytest.approx(np.exp(-1), abs=1e-15)
    assert weight(0.05, 0.5) == pytest.approx(0.177, abs=1e-3)
    assert weight(0.0, 0.5) == 0.0 and weight(1.0, 0.5) == 1.0
    with pytest.raises(DomainError):
        weight(0.5, 0.0)
    with pytest.raises(DomainError):
        weight(1.5, 0.5)


@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999), gam)
def test_weight_increasing(p, q, g):
    if p < q:
        assert weight(p, g) < weight(q, g)


def test_pt_value_examples():
    assert pt_value(Gamble(4, 0.828, -1), IDENTITY) == pytest.approx(3.14, abs=0.01)
    assert pt_value(Gamble(3, 0.75, -2), IDENTITY) == pytest.approx(1.75, abs=1e-12)
    prm = PTParams(0.88, 0.88, 2.25, 0.61, 0.61)
    want = float(mp_value(4, 0.45, -1, 0.88, 0.88, 2.25, 0.61, 0.61))
    assert pt_value(Gamble(4, 0.45, -1), prm) == pytest.approx(want, abs=1e-12)


@given(st.floats(0, 10), unit, st.floats(0, 10), unit, st.floats(0, 10), gam, gam)
def test_pt_value_matches_high_precision(gain, p, loss, alpha, lam, gp, gm):
    prm = PTParams(alpha, alpha, lam, gp, gm)
    want = float(mp_value(gain, max(p, 1e-300), -loss, alpha, alpha, lam, gp, gm)) if p > 0 else \
        -lam * loss ** alpha
    assert pt_value(Gamble(gain, p, -loss), prm) == pytest.approx(want, rel=1e-9, abs=1e-9)


@given(unit)
def test_identity_reduces_to_expectation(p):
    assert pt_value(Gamble(4, p, -1), IDENTITY) == pytest.approx(reward_for_option(p), abs=1e-12)
    assert pt_value(Gamble(3, p, -2), IDENTITY) == pytest.approx(reward_for_agent(p), abs=1e-12)


@given(unit, unit, unit, st.floats(0, 10), gam, gam)
def test_pt_value_nondecreasing_in_p(p, q, alpha, lam, gp, gm):
    prm = PTParams(alpha, alpha, lam, gp, gm)
    lo, hi = sorted((p, q))
    assert pt_value(Gamble(4, lo, -1), prm) <= pt_value(Gamble(4, hi, -1), prm) + 1e-12


def test_identity_distribution_matches_base():
    rng = np.random.default_rng(0)
    for _ in range(200):
        opt = rng.dirichlet(np.ones(4))
        ag = rng.uniform(0.5, 1, 4)
        assert np.abs(pt_dt1_distribution(opt, ag, IDENTITY) - dt1_distribution(opt, ag)).max() <= 1e-12


def test_gamble_table_ordering():
    opt = np.array([0.05, 0.05, 0.45, 0.45])
    ag = np.full(4, 0.75)
    for prm in (IDENTITY, PTParams(0.88, 0.88, 2.25, 0.61, 0.69)):
        v = pt_dt1_values(opt, ag, prm)
        assert v[2] == v[3] and v[0] == v[1] and v[2] > v[0]
        assert np.all(v[4:] == v[4])


def test_loss_aversion_moves_mass_to_agents():
    opt = np.array([0.4, 0.3, 0.2, 0.1])
    ag = np.full(4, 0.75)
    base = pt_dt1_distribution(opt, ag, PTParams(1, 1, 1, 1, 1))
    averse = pt_dt1_distribution(opt, ag, PTParams(1, 1, 10, 1, 1))
    assert np.argmax(averse) >= 4
    assert averse[4:].sum() > base[4:].sum()


def test_params_validation_and_json():
    p = PTParams(0.5, 0.5, 2, 0.6, 0.6)
    assert PTParams.from_dict(p.to_dict()) == p
    assert set(p.to_dict()) == {"alpha", "beta", "lambda", "gamma_plus", "gamma_minus"}
    assert '"lambda": 2' in p.to_json()
    for bad in ((1.1, 1, 1, 1, 1), (1, 1, 11, 1, 1), (1, 1, 1, 0, 1), (1, 1, 1, 1, 1.2)):
        with pytest.raises(DomainError):
            PTParams(*bad)
    with pytest.raises(DomainError):
        Gamble(4, 1.2, -1)
    with pytest.raises(DomainError):
        Gamble(-4, 0.5, -1)


def test_grids():
    g = grid_gamma()
    assert g.size == 11 and g[0] == GAMMA_FLOOR and g[-1] == 1.0
    assert grid_alpha().size == 11 and grid_alpha()[0] == 0.0
    assert np.array_equal(grid_lambda(), np.arange(11.0))
    assert grid_alpha().size * g.size ** 2 * grid_lambda().size == 14641


@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8), st.floats(-50, 50))
def test_pt_argmax_shift_invariant(v, c):
    assert np.argmax(softmax(v)) == np.argmax(softmax(np.array(v) + c))
