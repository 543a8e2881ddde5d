"""Style-matching scores from marker incidence and a permutation null.

For a focal speaker, each of their turns that follows someone else's turn
forms a (predecessor, response) pair.  Per marker, the observed statistic
is the share of pairs whose response carries the marker among pairs whose
predecessor carries it.  The null redistributes the focal speaker's own
utterances over the focal speaker's own turn slots, everything else held
fixed, and the z-score compares the observed share with that null.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NotFoundError, UndefinedError, ValidationError
from .lexicon import Lexicon, category_counts, incidence_matrix
from .transcript import Conversation

METHODS = ("monte-carlo", "analytic", "exact")
METHOD_ALIASES = {"mc": "monte-carlo", "exact-enumeration": "exact"}
# "pooled" draws replacements from every utterance in the conversation.  It
# is not a valid null for this statistic; it exists so the calibration
# suite can demonstrate that it catches a misconfigured shuffle.
SCHEMES = ("focal", "pooled")
MAX_EXACT_UTTERANCES = 8
SEED_LIMIT = 2**64


def canonical_method(method: str) -> str:
    method = METHOD_ALIASES.get(method, method)
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; expected one of {METHODS} or {tuple(METHOD_ALIASES)}")
    return method


@dataclass(frozen=True)
class MatchConfig:
    n_permutations: int = 10_000
    seed: int = 0
    method: str = "monte-carlo"
    scheme: str = "focal"

    def __post_init__(self):
        object.__setattr__(self, "method", canonical_method(self.method))
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown shuffle scheme {self.scheme!r}")
        if self.n_permutations < 1:
            raise ValidationError("n_permutations must be at least 1")
        if not 0 <= self.seed < SEED_LIMIT:
            raise ValidationError("seed must lie in [0, 2**64)")


@dataclass(frozen=True)
class MarkerMatchStat:
    marker: str
    n_prev: int
    n_joint: int
    p_obs: float | None
    null_mean: float | None
    null_std: float | None
    z: float | None
    defined: bool


@dataclass(frozen=True)
class MatchScore:
    conversation_id: str
    focal_speaker: str
    per_marker: tuple[MarkerMatchStat, ...]
    mean_z: float | None
    n_permutations: int
    seed: int
    method: str
    scheme: str = "focal"

    @property
    def defined_markers(self) -> tuple[str, ...]:
        return tuple(s.marker for s in self.per_marker if s.defined)

    def marker(self, name: str) -> MarkerMatchStat:
        for s in self.per_marker:
            if s.marker == name:
                return s
        raise KeyError(name)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["per_marker"] = [asdict(s) for s in self.per_marker]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "MatchScore":
        rec = dict(rec)
        rec["per_marker"] = tuple(MarkerMatchStat(**s) for s in rec["per_marker"])
        return cls(**rec)


@dataclass(frozen=True)
class NullSummary:
    mean: float
    std: float
    samples: np.ndarray | None = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# focal-speaker view of a conversation


@dataclass(frozen=True)
class FocalView:
    """Incidence arrays arranged by the focal speaker's turn slots."""

    slots: np.ndarray  # utterance indices of the focal speaker
    donors: np.ndarray  # (n_focal, markers) incidence of focal utterances, slot order
    slot_prev: np.ndarray  # (n_focal, markers) predecessor incidence; zero for index 0
    pool: np.ndarray  # (n_utterances, markers) every utterance

    @property
    def n_focal(self) -> int:
        return len(self.slots)

    @property
    def n_prev(self) -> np.ndarray:
        return self.slot_prev.sum(axis=0)

    @property
    def n_joint(self) -> np.ndarray:
        return (self.slot_prev & self.donors).sum(axis=0)


def focal_view(incidence: np.ndarray, speakers: Sequence[str], focal_speaker: str) -> FocalView:
    speakers = list(speakers)
    slots = np.array([i for i, s in enumerate(speakers) if s == focal_speaker], dtype=np.int64)
    if slots.size == 0:
        raise NotFoundError(f"speaker {focal_speaker!r} not present")
    incidence = np.asarray(incidence, dtype=bool)
    donors = incidence[slots]
    slot_prev = np.zeros_like(donors)
    has_prev = slots > 0
    slot_prev[has_prev] = incidence[slots[has_prev] - 1]
    return FocalView(slots, donors, slot_prev, incidence)


def conversation_incidence(conversation: Conversation, lexicon: Lexicon) -> np.ndarray:
    return incidence_matrix(lexicon, (u.tokens for u in conversation.utterances))


def _view(conversation: Conversation, focal_speaker: str, lexicon: Lexicon) -> FocalView:
    speakers = [u.speaker for u in conversation.utterances]
    if focal_speaker not in speakers:
        raise NotFoundError(f"speaker {focal_speaker!r} not in conversation {conversation.id!r}")
    return focal_view(conversation_incidence(conversation, lexicon), speakers, focal_speaker)


def _marker_index(lexicon: Lexicon, marker: str) -> int:
    try:
        return lexicon.marker_names.index(marker)
    except ValueError:
        raise NotFoundError(f"{marker!r} is not one of the lexicon's markers {lexicon.marker_names}") from None


# ---------------------------------------------------------------------------
# null distributions


def _summarize_counts(counts: np.ndarray, n_prev: int) -> tuple[float, float]:
    """Mean and population std of ``counts / n_prev``, from exact integer sums."""
    c = [int(x) for x in counts]
    r = len(c)
    s1 = sum(c)
    s2 = sum(x * x for x in c)
    mean = s1 / (r * n_prev)
    var_num = r * s2 - s1 * s1
    std = math.sqrt(var_num / (r * r * n_prev * n_prev)) if var_num > 0 else 0.0
    return mean, std


def hypergeometric_null(population: int, successes: int, draws: int) -> tuple[float, float]:
    """Mean and std of (hits / draws) for ``draws`` taken without replacement.

    With ``successes`` marker-bearing items among ``population``, the number
    of hits is hypergeometric, so the share has mean K/N and variance
    (K/N)(1 - K/N)(N - n) / ((N - 1) n).
    """
    if draws < 1:
        raise UndefinedError("null undefined: predecessor never used the marker")
    if population < 2:
        raise UndefinedError("null undefined: fewer than two utterances to rearrange")
    if not 0 <= successes <= population or draws > population:
        raise ValueError("need 0 <= successes <= population and draws <= population")
    frac = successes / population
    var = frac * (1.0 - frac) * (population - draws) / ((population - 1) * draws)
    return frac, math.sqrt(var)


def _mc_counts(view: FocalView, config: MatchConfig, backend=None) -> np.ndarray:
    donors = view.donors if config.scheme == "focal" else view.pool
    return kernels.joint_counts(
        donors.astype(np.uint8), view.slot_prev.astype(np.uint8), config.seed, 0, config.n_permutations, backend
    )


def _exact_counts(view: FocalView) -> np.ndarray:
    n = view.n_focal
    if n > MAX_EXACT_UTTERANCES:
        raise ValidationError(
            f"exact enumeration needs at most {MAX_EXACT_UTTERANCES} focal utterances, got {n}"
        )
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    placed = view.donors[perms]
    return np.count_nonzero(placed & view.slot_prev[None, :, :], axis=1)


def _null_for_view(view: FocalView, config: MatchConfig, backend=None):
    """Per-marker (mean, std) pairs, None where the null is undefined."""
    n_prev = view.n_prev
    n_markers = len(n_prev)
    out: list[tuple[float, float] | None] = [None] * n_markers
    if config.method == "analytic":
        population = view.n_focal if config.scheme == "focal" else view.pool.shape[0]
        source = view.donors if config.scheme == "focal" else view.pool
        for m in range(n_markers):
            try:
                out[m] = hypergeometric_null(population, int(source[:, m].sum()), int(n_prev[m]))
            except UndefinedError:
                pass
        return out, None
    if config.method == "exact":
        if config.scheme != "focal":
            raise ValidationError("exact enumeration is only defined for the focal shuffle")
        counts = _exact_counts(view)
    else:
        counts = _mc_counts(view, config, backend)
    for m in range(n_markers):
        if n_prev[m] > 0:
            out[m] = _summarize_counts(counts[:, m], int(n_prev[m]))
    return out, counts


def permutation_null(
    conversation: Conversation,
    focal_speaker: str,
    marker: str,
    lexicon: Lexicon,
    n: int = 10_000,
    seed: int = 0,
    return_samples: bool = False,
    backend: str | None = None,
) -> NullSummary:
    """Monte Carlo summary of the marker's share under random slot assignment."""
    config = MatchConfig(n_permutations=n, seed=seed, method="monte-carlo")
    view = _view(conversation, focal_speaker, lexicon)
    m = _marker_index(lexicon, marker)
    n_prev = int(view.n_prev[m])
    if n_prev == 0:
        raise UndefinedError(f"null undefined for {marker!r}: predecessors never used it")
    counts = _mc_counts(view, config, backend)[:, m]
    mean, std = _summarize_counts(counts, n_prev)
    return NullSummary(mean, std, counts / n_prev if return_samples else None)


def exact_null(conversation: Conversation, focal_speaker: str, marker: str, lexicon: Lexicon) -> NullSummary:
    """Null summary by enumerating every arrangement of the focal utterances."""
    view = _view(conversation, focal_speaker, lexicon)
    m = _marker_index(lexicon, marker)
    n_prev = int(view.n_prev[m])
    if n_prev == 0:
        raise UndefinedError(f"null undefined for {marker!r}: predecessors never used it")
    counts = _exact_counts(view)[:, m]
    mean, std = _summarize_counts(counts, n_prev)
    return NullSummary(mean, std, counts / n_prev)


def analytic_null(conversation: Conversation, focal_speaker: str, marker: str, lexicon: Lexicon) -> tuple[float, float]:
    view = _view(conversation, focal_speaker, lexicon)
    m = _marker_index(lexicon, marker)
    return hypergeometric_null(view.n_focal, int(view.donors[:, m].sum()), int(view.n_prev[m]))


# ---------------------------------------------------------------------------
# scores


def observed_probability(
    conversation: Conversation, focal_speaker: str, marker: str, lexicon: Lexicon
) -> tuple[int, int, float | None]:
    """``(n_prev, n_joint, p_obs)``; ``p_obs`` is None when ``n_prev`` is 0."""
    view = _view(conversation, focal_speaker, lexicon)
    m = _marker_index(lexicon, marker)
    n_prev, n_joint = int(view.n_prev[m]), int(view.n_joint[m])
    return n_prev, n_joint, (n_joint / n_prev if n_prev else None)


def marker_z(p_obs: float, null_mean: float, null_std: float) -> float:
    """Positive when the observed share exceeds what the null expects."""
    if not null_std > 0:
        raise UndefinedError("degenerate marker: null standard deviation is zero")
    return (p_obs - null_mean) / null_std


def score_view(
    view: FocalView,
    marker_names: Sequence[str],
    config: MatchConfig,
    conversation_id: str = "",
    focal_speaker: str = "",
    backend: str | None = None,
) -> MatchScore:
    n_prev, n_joint = view.n_prev, view.n_joint
    nulls, _ = _null_for_view(view, config, backend)
    stats = []
    for m, name in enumerate(marker_names):
        np_, nj = int(n_prev[m]), int(n_joint[m])
        p_obs = nj / np_ if np_ else None
        mean = std = z = None
        if nulls[m] is not None:
            mean, std = nulls[m]
            if std > 0:
                z = marker_z(p_obs, mean, std)
        stats.append(MarkerMatchStat(name, np_, nj, p_obs, mean, std, z, z is not None))
    zs = [s.z for s in stats if s.defined]
    mean_z = math.fsum(zs) / len(zs) if zs else None
    return MatchScore(
        conversation_id,
        focal_speaker,
        tuple(stats),
        mean_z,
        config.n_permutations,
        config.seed,
        config.method,
        config.scheme,
    )


def lsm_score(
    conversation: Conversation,
    focal_speaker: str,
    lexicon: Lexicon,
    config: MatchConfig | None = None,
    backend: str | None = None,
) -> MatchScore:
    """Per-marker statistics and their mean z for one speaker.

    Markers whose predecessors never carry them, or whose null has zero
    spread, are reported but left out of ``mean_z``; ``mean_z`` is None when
    no marker qualifies.
    """
    config = config or MatchConfig()
    view = _view(conversation, focal_speaker, lexicon)
    return score_view(view, lexicon.marker_names, config, conversation.id, focal_speaker, backend)


def require_mean_z(score: MatchScore) -> float:
    if score.mean_z is None:
        raise UndefinedError(
            f"no defined markers for {score.focal_speaker!r} in {score.conversation_id!r}; score is empty"
        )
    return score.mean_z


def lsm_asymmetry(
    conversation: Conversation, speaker_a: str, speaker_b: str, lexicon: Lexicon, config: MatchConfig | None = None
) -> float:
    """How much more ``speaker_a`` matches than ``speaker_b`` (difference of mean z)."""
    za = require_mean_z(lsm_score(conversation, speaker_a, lexicon, config))
    zb = require_mean_z(lsm_score(conversation, speaker_b, lexicon, config))
    return za - zb


# ---------------------------------------------------------------------------
# turn-by-turn percentage similarity


def _marker_percentages(lexicon: Lexicon, tokens: Sequence[str]) -> np.ndarray:
    if not tokens:
        return np.zeros(len(lexicon.markers))
    counts = category_counts(lexicon, tokens, lexicon.marker_names)
    return np.array([100.0 * counts[n] / len(tokens) for n in lexicon.marker_names])


def percentage_similarity(p_a: np.ndarray, p_b: np.ndarray) -> np.ndarray:
    p_a, p_b = np.asarray(p_a, dtype=float), np.asarray(p_b, dtype=float)
    return 1.0 - np.abs(p_a - p_b) / (p_a + p_b + 0.0001)


def _turn_lsm_pairs(conversation: Conversation, pairs: Sequence[tuple[int, int]], lexicon: Lexicon) -> float:
    if not pairs:
        raise UndefinedError("turn-by-turn LSM is not computable: no adjacent turn pairs")
    cache: dict[int, np.ndarray] = {}

    def pct(i):
        if i not in cache:
            cache[i] = _marker_percentages(lexicon, conversation.utterances[i].tokens)
        return cache[i]

    per_pair = [float(np.mean(percentage_similarity(pct(i), pct(j)))) for i, j in pairs]
    return math.fsum(per_pair) / len(per_pair)


def turn_lsm(conversation: Conversation, speaker_a: str, speaker_b: str, lexicon: Lexicon) -> float:
    """Mean percentage similarity over adjacent turns exchanged by a and b.

    Both directions count (a answering b and b answering a).
    """
    speakers = conversation.speakers
    for s in (speaker_a, speaker_b):
        if s not in speakers:
            raise NotFoundError(f"speaker {s!r} not in conversation {conversation.id!r}")
    utts = conversation.utterances
    pair_set = {speaker_a, speaker_b}
    pairs = [(i - 1, i) for i in range(1, len(utts)) if {utts[i - 1].speaker, utts[i].speaker} == pair_set]
    return _turn_lsm_pairs(conversation, pairs, lexicon)


def responder_turn_lsm(conversation: Conversation, focal_speaker: str, lexicon: Lexicon) -> float:
    """Turn-by-turn similarity over the focal speaker's (predecessor, response) pairs.

    Uses the same pairs as ``lsm_score``, whoever the predecessor is.
    """
    utts = conversation.utterances
    if not any(u.speaker == focal_speaker for u in utts):
        raise NotFoundError(f"speaker {focal_speaker!r} not in conversation {conversation.id!r}")
    pairs = [(i - 1, i) for i in range(1, len(utts)) if utts[i].speaker == focal_speaker]
    return _turn_lsm_pairs(conversation, pairs, lexicon)
