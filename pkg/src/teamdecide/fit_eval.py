"""Parameter fitting, train/test evaluation and the Wilcoxon signed-rank test."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import DEFAULT_SCHEME, DomainError, RewardScheme, SessionLog, softmax
from .loss import LOSS_KINDS, loss_batch
from .models import (
    CENT,
    DT1_MODELS,
    DT2_MODELS,
    NB,
    PT_CENT,
    PT_NB,
    RANDOM,
    base_kind,
    centrality_option_mass,
    cent_agent_accuracy,
    dt1_distribution,
    dt1_inputs,
    dt2_probabilities,
    random_baseline,
)
from .prospect import (
    PTParams,
    dt1_gamble_magnitudes,
    grid_alpha,
    grid_gamma,
    grid_lambda,
    pt_dt1_distribution,
    weight,
)
from .replay import replay

DT1 = "dt1"
DT2 = "dt2"
TASKS = (DT1, DT2)
PT_KINDS = (PT_NB, PT_CENT)

TRAIN = "train"
TEST = "test"
ALL = "all"


@dataclass(frozen=True)
class FitConfig:
    train_questions: int = 30
    grid_alpha_step: float = 0.1
    grid_gamma_step: float = 0.1
    grid_lambda_step: float = 1.0
    w_step: float = 0.1
    w_train_teams: int = 20
    seed: int = 0

    def __post_init__(self):
        steps = (self.grid_alpha_step, self.grid_gamma_step, self.grid_lambda_step, self.w_step)
        if min(steps) <= 0:
            raise DomainError("grid steps must be positive")
        if self.train_questions < 1:
            raise DomainError("train_questions must be at least 1")
        if self.w_train_teams < 1:
            raise DomainError("w_train_teams must be at least 1")


def in_split(pos, split, train_questions):
    if split == ALL:
        return True
    if split == TRAIN:
        return pos <= train_questions
    if split == TEST:
        return pos > train_questions
    raise DomainError(f"unknown split {split!r}")


def check_kind(kind: str, task: str):
    if task not in TASKS:
        raise DomainError(f"unknown task {task!r}; expected one of {TASKS}")
    valid = DT1_MODELS if task == DT1 else DT2_MODELS
    if kind not in valid:
        raise DomainError(f"model {kind!r} is not defined for {task}; valid: {', '.join(valid)}")


# -- per-event model outputs ------------------------------------------------

def dt1_model_distribution(kind, state, responses, params: Optional[PTParams] = None):
    if kind == RANDOM:
        return random_baseline(8)
    opt, agents = dt1_inputs(kind, state, responses)
    if kind in PT_KINDS:
        if params is None:
            raise DomainError(f"{kind} needs prospect-theory parameters")
        return pt_dt1_distribution(opt, agents, params, state.scheme)
    return dt1_distribution(opt, agents, state.scheme)


def dt1_events(log: SessionLog, kind: str, scheme=DEFAULT_SCHEME, split=ALL,
               train_questions=30):
    """Gamble success probabilities (E, 8), observed action indices and positions."""
    probs, acts, pos = [], [], []
    for step in replay(log, scheme):
        a = step.dt1_action
        if a is None or not in_split(step.position, split, train_questions):
            continue
        opt, agents = dt1_inputs(kind, step.state, step.record.responses)
        probs.append(np.concatenate([opt, agents]))
        acts.append(a)
        pos.append(step.position)
    return (np.asarray(probs, float).reshape(-1, 8), np.asarray(acts, int),
            np.asarray(pos, int))


# -- prospect-theory grid search --------------------------------------------

def _pt_grid(config: FitConfig):
    return (grid_alpha(config.grid_alpha_step), grid_gamma(config.grid_gamma_step),
            grid_gamma(config.grid_gamma_step), grid_lambda(config.grid_lambda_step))


def pt_grid_losses(p, actions, loss_kind, config: FitConfig = FitConfig(),
                   scheme: RewardScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Mean loss at every grid point, shape (alpha, gamma+, gamma-, lambda).

    ``p`` holds the eight gamble success probabilities per event.
    """
    if len(actions) == 0:
        raise DomainError("empty training set")
    alphas, gps, gms, lams = _pt_grid(config)
    gains, losses = dt1_gamble_magnitudes(scheme)
    p = np.clip(np.asarray(p, float), 0.0, 1.0)
    wp = weight(p[None], gps[:, None, None])          # (G+, E, 8)
    wn = weight(1.0 - p[None], gms[:, None, None])    # (G-, E, 8)
    E = p.shape[0]
    out = np.empty((alphas.size, gps.size, gms.size, lams.size))
    idx = np.tile(actions, gps.size * gms.size * lams.size)
    for ai, a in enumerate(alphas):
        pos = np.power(gains, a) * wp
        neg = np.power(losses, a) * wn
        v = pos[:, None, None] - lams[None, None, :, None, None] * neg[None, :, None]
        q = softmax(v, axis=-1).reshape(-1, 8)
        out[ai] = loss_batch(loss_kind, q, idx).reshape(gps.size, gms.size, lams.size, E).mean(-1)
    return out


def fit_pt_team(log: SessionLog, model_kind: str, loss_kind: str,
                config: FitConfig = FitConfig(), scheme=DEFAULT_SCHEME):
    """Grid-search PT parameters for one team; returns (params, training loss).

    Ties go to the lexicographically smallest (alpha, gamma+, gamma-, lambda).
    """
    p, acts, _ = dt1_events(log, base_kind(model_kind), scheme, TRAIN, config.train_questions)
    grid = pt_grid_losses(p, acts, loss_kind, config, scheme)
    flat = int(np.argmin(grid.ravel()))  # first minimum in C order is lexicographic
    ai, gpi, gmi, li = np.unravel_index(flat, grid.shape)
    alphas, gps, gms, lams = _pt_grid(config)
    params = PTParams(float(alphas[ai]), float(alphas[ai]), float(lams[li]),
                      float(gps[gpi]), float(gms[gmi]))
    return params, float(grid.ravel()[flat])


def fit_pt(logs: Sequence[SessionLog], model_kind: str, loss_kind: str,
           config: FitConfig = FitConfig(), scheme=DEFAULT_SCHEME, n_jobs: int = 1):
    """Per-team PT parameters keyed by team id (sorted)."""
    if base_kind(model_kind) not in (NB, CENT):
        raise DomainError(f"cannot fit PT parameters for {model_kind!r}")
    if loss_kind not in LOSS_KINDS:
        raise DomainError(f"unknown loss {loss_kind!r}")

    def one(log):
        return fit_pt_team(log, model_kind, loss_kind, config, scheme)[0]

    with ThreadPoolExecutor(max_workers=max(1, n_jobs)) as ex:
        fitted = list(ex.map(one, logs))
    return {log.team_id: prm for log, prm in sorted(zip(logs, fitted), key=lambda t: t[0].team_id)}


# -- agent-trust weight -----------------------------------------------------

def split_teams(logs: Sequence[SessionLog], n_train: int, seed: int):
    """Seeded shuffle of teams into (train, rest)."""
    order = np.random.default_rng(seed).permutation(len(logs))
    train = [logs[k] for k in sorted(order[:n_train])]
    rest = [logs[k] for k in sorted(order[n_train:])]
    return train, rest


def _dt2_cent_parts(logs, scheme, split=ALL, train_questions=30):
    human, agent, acts = [], [], []
    for log in logs:
        for step in replay(log, scheme):
            ctx, a = step.dt2_context, step.dt2_action
            if ctx is None or a is None or not in_split(step.position, split, train_questions):
                continue
            human.append(centrality_option_mass(step.state.influence.delta, ctx.responses))
            g = np.zeros(4)
            g[ctx.agent_response - 1] = cent_agent_accuracy(step.state)[ctx.agent_id - 1]
            agent.append(g)
            acts.append(a)
    return np.asarray(human).reshape(-1, 4), np.asarray(agent).reshape(-1, 4), np.asarray(acts, int)


def w_grid_losses(logs, loss_kind, step=0.1, scheme=DEFAULT_SCHEME):
    """(grid, mean DT2 loss at each w) pooled over every consultation event."""
    human, agent, acts = _dt2_cent_parts(logs, scheme)
    if acts.size == 0:
        raise DomainError("no decision-task-2 events to fit w on")
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    vals = []
    for w in grid:
        mass = human * (1.0 - w) + agent * w
        tot = mass.sum(axis=1, keepdims=True)
        post = np.where(tot > 0, mass / np.where(tot > 0, tot, 1.0), 0.25)
        y = (scheme.c1 - scheme.c3) * post - (scheme.c2 + scheme.c3) * (1.0 - post)
        vals.append(loss_batch(loss_kind, softmax(y), acts).mean())
    return grid, np.asarray(vals)


def fit_w(logs: Sequence[SessionLog], model_kind: str = CENT, loss_kind: str = "l1",
          step: float = 0.1, scheme=DEFAULT_SCHEME) -> float:
    if base_kind(model_kind) != CENT:
        raise DomainError("w only enters the CENT decision-task-2 model")
    grid, vals = w_grid_losses(logs, loss_kind, step, scheme)
    return float(grid[int(np.argmin(vals))])


# -- evaluation -------------------------------------------------------------

@dataclass
class EvalReport:
    model_kind: str
    loss_kind: str
    task: str
    per_team_losses: dict
    event_losses: dict = field(default_factory=dict)  # team -> [(position, loss)]

    @property
    def mean(self) -> float:
        v = list(self.per_team_losses.values())
        return float(np.mean(v)) if v else float("nan")

    @property
    def std(self) -> float:
        v = list(self.per_team_losses.values())
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    def to_dict(self) -> dict:
        return {"model_kind": self.model_kind, "loss_kind": self.loss_kind, "task": self.task,
                "mean": self.mean, "std": self.std, "n_teams": len(self.per_team_losses),
                "per_team_losses": dict(self.per_team_losses)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\r\n")
        wr.writerow(["team_id", "model", "loss", "task", "mean_loss", "n_events"])
        for team, v in self.per_team_losses.items():
            wr.writerow([team, self.model_kind, self.loss_kind, self.task, repr(v),
                         len(self.event_losses.get(team, ()))])
        return buf.getvalue()


def _params_for(params, team_id):
    if params is None or isinstance(params, PTParams):
        return params
    if team_id not in params:
        raise DomainError(f"no PT parameters for team {team_id!r}")
    return params[team_id]


def evaluate(logs: Sequence[SessionLog], model_kind: str, loss_kind: str, task: str = DT1,
             params=None, w: Optional[float] = None, split: str = TEST,
             train_questions: int = 30, scheme=DEFAULT_SCHEME) -> EvalReport:
    """Score a model on every non-NoConsensus decision of the chosen split.

    ``params`` is one PTParams or a mapping team id -> PTParams (PT models
    only); ``w`` is the agent-trust weight for the CENT task-2 model. Teams
    without any scored event are left out of the report.
    """
    check_kind(model_kind, task)
    if loss_kind not in LOSS_KINDS:
        raise DomainError(f"unknown loss {loss_kind!r}")
    if task == DT1 and model_kind in PT_KINDS and params is None:
        raise DomainError(f"{model_kind} needs fitted parameters")
    if task == DT2 and model_kind in (CENT, PT_CENT) and w is None:
        raise DomainError("CENT task-2 evaluation needs w")
    per_team, per_event = {}, {}
    for log in sorted(logs, key=lambda lg: lg.team_id):
        prm = _params_for(params, log.team_id) if task == DT1 else None
        dists, acts, pos = [], [], []
        for step in replay(log, scheme):
            if not in_split(step.position, split, train_questions):
                continue
            if task == DT1:
                a = step.dt1_action
                if a is None:
                    continue
                dists.append(dt1_model_distribution(model_kind, step.state,
                                                    step.record.responses, prm))
            else:
                ctx, a = step.dt2_context, step.dt2_action
                if ctx is None or a is None:
                    continue
                dists.append(dt2_probabilities(model_kind, step.state, ctx, w))
            acts.append(a)
            pos.append(step.position)
        if not acts:
            continue
        vals = loss_batch(loss_kind, np.asarray(dists), np.asarray(acts))
        per_team[log.team_id] = float(vals.mean())
        per_event[log.team_id] = [(int(p), float(v)) for p, v in zip(pos, vals)]
    return EvalReport(model_kind, loss_kind, task, per_team, per_event)


# -- Wilcoxon signed-rank ---------------------------------------------------

@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n_effective: int


def _signed_ranks(x, y):
    d = np.asarray(x, float) - np.asarray(y, float)
    d = d[d != 0]
    if d.size == 0:
        return d, d
    absd = np.abs(d)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(d.size)
    s = absd[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and s[j + 1] == s[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return d, ranks


def _exact_null_counts(ranks):
    """Counts of sign assignments for each value of 2*W+ (ranks may be halves)."""
    r2 = np.round(2 * ranks).astype(int)
    counts = np.zeros(int(r2.sum()) + 1)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r] if r > 0 else counts
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y, alternative: str = "two-sided", exact_max_n: int = 25):
    """Paired signed-rank test; W = min(W+, W-).

    Exact null distribution (handles average ranks) for up to ``exact_max_n``
    nonzero differences, otherwise a normal approximation with tie and
    continuity corrections. ``alternative`` is "two-sided", "less" (x tends
    to be smaller than y) or "greater".
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be paired 1-D samples")
    if x.size < 5:
        raise DomainError("need at least 5 pairs")
    if alternative not in ("two-sided", "less", "greater"):
        raise DomainError(f"unknown alternative {alternative!r}")
    d, ranks = _signed_ranks(x, y)
    n = int(d.size)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0)
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if n <= exact_max_n:
        counts = _exact_null_counts(ranks)
        probs = counts / counts.sum()
        cdf = np.cumsum(probs)
        k_plus = int(round(2 * w_plus))
        if alternative == "two-sided":
            p = 2.0 * cdf[int(round(2 * stat))]
        elif alternative == "less":
            p = cdf[k_plus]
        else:
            p = 1.0 - (cdf[k_plus - 1] if k_plus > 0 else 0.0)
        return WilcoxonResult(stat, float(min(1.0, p)), n)
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts ** 3 - tie_counts).sum() / 48.0
    sd = math.sqrt(var)
    if alternative == "two-sided":
        z = (stat - mu + 0.5) / sd
        p = 2.0 * _norm_cdf(z)
    elif alternative == "less":
        p = _norm_cdf((w_plus - mu + 0.5) / sd)
    else:
        p = 1.0 - _norm_cdf((w_plus - mu - 0.5) / sd)
    return WilcoxonResult(stat, float(min(1.0, p)), n)


def _norm_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# -- reporting --------------------------------------------------------------

@dataclass
class Summary:
    models: list
    rows: list  # (model, mean, std, n_teams)
    pvalues: np.ndarray

    def table_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\r\n")
        wr.writerow(["model", "mean", "std", "n_teams"])
        for m, mean, std, n in self.rows:
            wr.writerow([m, f"{mean:.6f}", f"{std:.6f}", n])
        return buf.getvalue()

    def pvalues_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\r\n")
        wr.writerow(["model"] + self.models)
        for m, row in zip(self.models, self.pvalues):
            wr.writerow([m] + [f"{v:.6g}" for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"models": self.models,
                "table": [{"model": m, "mean": mean, "std": std, "n_teams": n}
                          for m, mean, std, n in self.rows],
                "pvalues": [[None if np.isnan(v) else float(v) for v in row] for row in self.pvalues]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def paired_test(a: EvalReport, b: EvalReport, alternative="two-sided") -> WilcoxonResult:
    teams = sorted(set(a.per_team_losses) & set(b.per_team_losses))
    x = [a.per_team_losses[t] for t in teams]
    y = [b.per_team_losses[t] for t in teams]
    return wilcoxon_signed_rank(x, y, alternative)


def summarize(reports: Sequence[EvalReport]) -> Summary:
    """Mean and std per report plus the pairwise two-sided p-value matrix,
    in the order the reports are given."""
    if len({(r.loss_kind, r.task) for r in reports}) > 1:
        raise DomainError("reports must share loss and task")
    models = [r.model_kind for r in reports]
    rows = [(r.model_kind, r.mean, r.std, len(r.per_team_losses)) for r in reports]
    k = len(reports)
    pv = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            common = set(reports[i].per_team_losses) & set(reports[j].per_team_losses)
            # too few paired teams for the test: reported as NaN
            p = paired_test(reports[i], reports[j]).p_value if len(common) >= 5 else float("nan")
            pv[i, j] = pv[j, i] = p
    return Summary(models, rows, pv)


def cumulative_loss_csv(reports: Sequence[EvalReport]) -> str:
    """Question position against the team-averaged cumulative loss per model."""
    positions = sorted({p for r in reports for ev in r.event_losses.values() for p, _ in ev})
    cols = []
    for r in reports:
        n = max(1, len(r.event_losses))
        per_pos = {}
        for ev in r.event_losses.values():
            for p, v in ev:
                per_pos[p] = per_pos.get(p, 0.0) + v
        acc, col = 0.0, []
        for p in positions:
            acc += per_pos.get(p, 0.0)
            col.append(acc / n)
        cols.append(col)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\r\n")
    wr.writerow(["question"] + [r.model_kind for r in reports])
    for k, p in enumerate(positions):
        wr.writerow([p] + [f"{c[k]:.6f}" for c in cols])
    return buf.getvalue()
