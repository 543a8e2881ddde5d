"""Language style matching scores from conversation transcripts.

Per-marker permutation z-scores for how closely a speaker's function-word
use tracks whoever spoke just before, plus the poll-window, regression and
temporal analyses built on them.
"""

from .errors import (
    ConfigurationError,
    InsufficientDataError,
    LsmError,
    NotFoundError,
    ParseError,
    UndefinedError,
    ValidationError,
)
from .lexicon import Lexicon, MarkerCategory, load_lexicon, marker_incidence, reference_lexicon
from .matching import MatchConfig, MatchScore, analytic_null, lsm_score, permutation_null, turn_lsm
from .polls import DebateSchedule, PollObservation, build_windows, load_polls, poll_diff
from .transcript import Conversation, Utterance, adjacent_pairs, parse_transcript, tokenize

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "Conversation",
    "DebateSchedule",
    "InsufficientDataError",
    "Lexicon",
    "LsmError",
    "MarkerCategory",
    "MatchConfig",
    "MatchScore",
    "NotFoundError",
    "ParseError",
    "PollObservation",
    "UndefinedError",
    "Utterance",
    "ValidationError",
    "adjacent_pairs",
    "analytic_null",
    "build_windows",
    "load_lexicon",
    "load_polls",
    "lsm_score",
    "marker_incidence",
    "parse_transcript",
    "permutation_null",
    "poll_diff",
    "reference_lexicon",
    "tokenize",
    "turn_lsm",
]
