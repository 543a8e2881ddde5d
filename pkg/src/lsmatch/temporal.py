"""Cumulative-prefix match scores over equal-size conversation parts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NotFoundError, ValidationError
from .lexicon import Lexicon
from .matching import MatchConfig, conversation_incidence, focal_view, score_view
from .polls import PollWindowDiff
from .stats import mean_ci
from .transcript import Conversation

DEFAULT_PARTS = 40


@dataclass(frozen=True)
class TemporalProfile:
    conversation_id: str
    focal_speaker: str
    parts: int
    curve: tuple[float | None, ...]  # mean z for prefixes of 1..parts parts


def segment(n_utterances: int | Conversation, parts: int = DEFAULT_PARTS) -> list[range]:
    """Split ``n_utterances`` into ``parts`` contiguous ranges.

    Sizes differ by at most one; the first ``n % parts`` ranges get the
    extra utterance.
    """
    n = len(n_utterances) if isinstance(n_utterances, Conversation) else int(n_utterances)
    if parts < 1:
        raise ValidationError("parts must be at least 1")
    if n < parts:
        raise ValidationError(f"cannot split {n} utterances into {parts} parts")
    base, extra = divmod(n, parts)
    out, start = [], 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        out.append(range(start, start + size))
        start += size
    return out


def prefix_curve(
    conversation: Conversation,
    focal_speaker: str,
    lexicon: Lexicon,
    parts: int = DEFAULT_PARTS,
    config: MatchConfig | None = None,
) -> TemporalProfile:
    """Mean z using only the first i parts, for i = 1..parts.

    The null is recomputed inside each prefix.  Prefixes where the focal
    speaker has not spoken, or no marker is defined yet, are None.
    """
    config = config or MatchConfig()
    if focal_speaker not in conversation.speakers:
        raise NotFoundError(f"speaker {focal_speaker!r} not in conversation {conversation.id!r}")
    ranges = segment(len(conversation), parts)
    incidence = conversation_incidence(conversation, lexicon)
    speakers = [u.speaker for u in conversation.utterances]
    curve: list[float | None] = []
    for r in ranges:
        end = r.stop
        if focal_speaker not in speakers[:end]:
            curve.append(None)
            continue
        view = focal_view(incidence[:end], speakers[:end], focal_speaker)
        score = score_view(view, lexicon.marker_names, config, conversation.id, focal_speaker)
        curve.append(score.mean_z)
    return TemporalProfile(conversation.id, focal_speaker, parts, tuple(curve))


@dataclass(frozen=True)
class CurvePoint:
    group: str
    prefix_index: int
    n: int
    mean: float | None
    ci_low: float | None
    ci_high: float | None


def grouped_curves(
    profiles: Iterable[TemporalProfile], diffs: Iterable[PollWindowDiff], confidence: float = 0.95
) -> list[CurvePoint]:
    """Per-prefix mean and CI of mean z, for poll gainers and losers.

    Rows with zero poll change are dropped.  Prefix indices are 1-based.
    """
    by_key = {(d.debate_id, d.candidate): d.p_diff for d in diffs}
    groups: dict[str, list[TemporalProfile]] = {"increase": [], "decrease": []}
    joined = 0
    for prof in profiles:
        p = by_key.get((prof.conversation_id, prof.focal_speaker))
        if p is None:
            continue
        joined += 1
        if p > 0:
            groups["increase"].append(prof)
        elif p < 0:
            groups["decrease"].append(prof)
    if not groups["increase"] and not groups["decrease"]:
        raise ValidationError(f"no profiles join a nonzero poll change ({joined} joined)")
    parts = {p.parts for g in groups.values() for p in g}
    if len(parts) != 1:
        raise ValidationError(f"profiles disagree on part count: {sorted(parts)}")
    (n_parts,) = parts
    points = []
    for name, members in groups.items():
        if not members:
            continue
        for i in range(n_parts):
            vals = [m.curve[i] for m in members if m.curve[i] is not None]
            if not vals:
                points.append(CurvePoint(name, i + 1, 0, None, None, None))
                continue
            mean, lo, hi = mean_ci(vals, confidence)
            points.append(CurvePoint(name, i + 1, len(vals), mean, lo, hi))
    return points


def curve_slope(values: Sequence[float | None]) -> float:
    """Least-squares slope of a curve against its 1-based index, gaps skipped."""
    pts = [(i + 1, v) for i, v in enumerate(values) if v is not None]
    if len(pts) < 2:
        raise ValidationError("slope needs at least two defined points")
    n = len(pts)
    xbar = sum(p[0] for p in pts) / n
    ybar = sum(p[1] for p in pts) / n
    sxx = sum((p[0] - xbar) ** 2 for p in pts)
    return sum((p[0] - xbar) * (p[1] - ybar) for p in pts) / sxx
