"""Decision models for human-AI teams."""

from .core import (
    DEFAULT_SCHEME,
    DomainError,
    NumericError,
    QuestionRecord,
    RewardScheme,
    SessionLog,
    SurveyRecord,
    TeamAction,
    validate_session,
)
from .estimators import TeamDecisionModel
from .fit_eval import FitConfig, evaluate, fit_pt, fit_w, summarize, wilcoxon_signed_rank
from .loss import binary_loss, l1_loss, l2_loss
from .models import TeamBeliefState
from .prospect import PTParams
from .sim import SimConfig, generate

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SCHEME", "DomainError", "NumericError", "QuestionRecord", "RewardScheme",
    "SessionLog", "SurveyRecord", "TeamAction", "validate_session", "FitConfig", "evaluate",
    "fit_pt", "fit_w", "summarize", "wilcoxon_signed_rank", "binary_loss", "l1_loss", "l2_loss",
    "TeamBeliefState", "PTParams", "SimConfig", "generate", "TeamDecisionModel",
]
