"""Conversation transcripts: tokenizing, parsing, turn merging, adjacency."""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field, replace
from typing import IO, Any, Iterable, Mapping, Sequence

from .errors import NotFoundError, ParseError, ValidationError

ROLES = ("candidate", "moderator", "questioner", "other")
FORMATS = ("json", "text")

_TOKEN_SPLIT = re.compile(r"[^\w']+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; apostrophes stay inside tokens.

    Any character other than a letter, digit or apostrophe separates tokens.
    """
    # \w also admits "_", which is not a word character here.
    text = text.lower().replace("_", " ").replace("\u2019", "'")
    return [t for t in _TOKEN_SPLIT.split(text) if t]


@dataclass(frozen=True)
class Utterance:
    index: int
    speaker: str
    role: str
    text: str
    tokens: tuple[str, ...] = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"utterance {self.index}: unknown role {self.role!r}; expected one of {ROLES}")
        object.__setattr__(self, "tokens", tuple(tokenize(self.text)))


@dataclass(frozen=True)
class AdjacentPair:
    predecessor_index: int
    response_index: int


@dataclass(frozen=True)
class Conversation:
    id: str
    utterances: tuple[Utterance, ...]
    date: dt.date | None = None
    election_year: int | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for i, u in enumerate(self.utterances):
            if u.index != i:
                raise ValidationError(f"{self.id}: utterance indices must be contiguous from 0 (found {u.index} at {i})")
            if i and u.speaker == self.utterances[i - 1].speaker:
                raise ValidationError(f"{self.id}: utterances {i - 1} and {i} share speaker {u.speaker!r}")

    def __len__(self):
        return len(self.utterances)

    @property
    def speakers(self) -> tuple[str, ...]:
        """Distinct speakers in order of first appearance."""
        return tuple(dict.fromkeys(u.speaker for u in self.utterances))

    def role_of(self, speaker: str) -> str:
        for u in self.utterances:
            if u.speaker == speaker:
                return u.role
        raise NotFoundError(f"speaker {speaker!r} not in conversation {self.id!r}")

    def speakers_with_role(self, role: str) -> tuple[str, ...]:
        return tuple(s for s in self.speakers if self.role_of(s) == role)

    def prefix(self, n_utterances: int) -> "Conversation":
        """The first ``n_utterances`` utterances as a conversation of its own."""
        return replace(self, utterances=self.utterances[:n_utterances], metadata=dict(self.metadata))


def merge_turns(turns: Iterable[tuple[str, str, str]]) -> list[tuple[str, str, str]]:
    """Collapse consecutive ``(speaker, role, text)`` turns by one speaker."""
    merged: list[tuple[str, str, str]] = []
    for speaker, role, text in turns:
        if merged and merged[-1][0] == speaker:
            prev = merged[-1]
            joined = f"{prev[2]} {text}" if prev[2] and text else (prev[2] or text)
            merged[-1] = (speaker, prev[1], joined)
        else:
            merged.append((speaker, role, text))
    return merged


def build_conversation(
    conv_id: str,
    turns: Iterable[tuple[str, str, str]],
    date: dt.date | None = None,
    election_year: int | None = None,
    metadata: Mapping[str, Any] | None = None,
    exclude: re.Pattern | None = None,
    min_speakers: int = 2,
) -> Conversation:
    turns = list(turns)
    roles: dict[str, str] = {}
    for speaker, role, _ in turns:
        if roles.setdefault(speaker, role) != role:
            raise ValidationError(f"{conv_id}: speaker {speaker!r} has roles {roles[speaker]!r} and {role!r}")
    if exclude is not None:
        turns = [t for t in turns if not exclude.search(t[2])]
    merged = merge_turns(turns)
    utterances = tuple(Utterance(i, s, r, t) for i, (s, r, t) in enumerate(merged))
    conv = Conversation(conv_id, utterances, date, election_year, dict(metadata or {}))
    if len(conv.speakers) < min_speakers:
        raise ValidationError(f"{conv_id}: needs at least {min_speakers} distinct speakers, found {len(conv.speakers)}")
    return conv


def _read_text(source) -> str:
    if isinstance(source, str):
        return source
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"transcript is not valid UTF-8: {exc}") from exc


def _parse_date(value, where) -> dt.date | None:
    if value is None:
        return None
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError as exc:
        raise ParseError(f"bad ISO-8601 date {value!r}", where) from exc


def _parse_json(text: str, exclude) -> Conversation:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", "line 1")
    for key in ("id", "utterances"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", "top level")
    if not isinstance(doc["utterances"], list):
        raise ParseError("'utterances' must be an array", "top level")
    turns = []
    for i, item in enumerate(doc["utterances"]):
        where = f"utterances[{i}]"
        if not isinstance(item, dict):
            raise ParseError("utterance must be an object", where)
        try:
            speaker, text = item["speaker"], item["text"]
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", where) from None
        if not isinstance(speaker, str) or not isinstance(text, str):
            raise ParseError("speaker and text must be strings", where)
        role = item.get("role", "other")
        if role not in ROLES:
            raise ParseError(f"unknown role {role!r}", where)
        turns.append((speaker, role, text))
    year = doc.get("election_year")
    if year is not None and not isinstance(year, int):
        raise ParseError("'election_year' must be an integer", "top level")
    return build_conversation(
        str(doc["id"]),
        turns,
        date=_parse_date(doc.get("date"), "field 'date'"),
        election_year=year,
        metadata=doc.get("metadata") or {},
        exclude=exclude,
    )


_HEADER = re.compile(r"^#\s*(id|date|election_year)\s*:\s*(.*?)\s*$")
_SPEAKER_LINE = re.compile(r"^\s*([^:\n]{1,60}?)\s*:\s*(.*)$")


def _parse_text(text: str, roles: Mapping[str, str] | None, conv_id: str | None, exclude) -> Conversation:
    header: dict[str, str] = {}
    turns: list[list[str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m and not turns:
            header[m.group(1)] = m.group(2)
            continue
        if line.startswith("#"):
            continue
        m = _SPEAKER_LINE.match(line)
        name = m.group(1) if m else None
        is_turn = name is not None and (name in roles if roles else name == name.upper() and any(c.isalpha() for c in name))
        if is_turn:
            role = roles.get(name, "other") if roles else "other"
            if role not in ROLES:
                raise ParseError(f"unknown role {role!r} for speaker {name!r} in mapping", f"line {lineno}")
            turns.append([name, role, m.group(2)])
        elif turns:
            turns[-1][2] = f"{turns[-1][2]} {line}" if turns[-1][2] else line
        else:
            raise ParseError(f"expected 'SPEAKER: text', got {raw!r}", f"line {lineno}")
    cid = header.get("id") or conv_id
    if not cid:
        raise ParseError("plain-text transcript needs an '# id:' header or an explicit id")
    year = header.get("election_year")
    if year is not None:
        try:
            year = int(year)
        except ValueError:
            raise ParseError(f"bad election_year {year!r}", "header") from None
    return build_conversation(
        cid,
        [tuple(t) for t in turns],
        date=_parse_date(header.get("date"), "header 'date'"),
        election_year=year,
        exclude=exclude,
    )


def parse_transcript(
    source: IO[bytes] | bytes | str,
    format: str = "json",
    roles: Mapping[str, str] | None = None,
    conv_id: str | None = None,
    exclude: str | re.Pattern | None = None,
) -> Conversation:
    """Parse a transcript; consecutive turns by one speaker are merged.

    ``roles`` maps speaker names to roles for the plain-text format.
    ``exclude`` drops raw turns whose text matches the regex before merging.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown transcript format {format!r}; expected one of {FORMATS}")
    if isinstance(exclude, str):
        exclude = re.compile(exclude)
    text = _read_text(source)
    if format == "json":
        return _parse_json(text, exclude)
    return _parse_text(text, roles, conv_id, exclude)


def load_transcript(path, format: str | None = None, roles=None, exclude=None) -> Conversation:
    path = str(path)
    if format is None:
        format = "json" if path.endswith(".json") else "text"
    stem = re.sub(r"\.[^./]*$", "", path.rsplit("/", 1)[-1])
    with open(path, "rb") as fh:
        try:
            return parse_transcript(fh, format, roles=roles, conv_id=stem, exclude=exclude)
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}") from exc


def to_document(conversation: Conversation) -> dict:
    doc: dict[str, Any] = {"id": conversation.id}
    if conversation.date is not None:
        doc["date"] = conversation.date.isoformat()
    if conversation.election_year is not None:
        doc["election_year"] = conversation.election_year
    doc["utterances"] = [{"speaker": u.speaker, "role": u.role, "text": u.text} for u in conversation.utterances]
    if conversation.metadata:
        doc["metadata"] = dict(conversation.metadata)
    return doc


def serialize_transcript(conversation: Conversation) -> str:
    """Canonical JSON form; ``parse_transcript`` inverts it."""
    return json.dumps(to_document(conversation), indent=2, ensure_ascii=False) + "\n"


def adjacent_pairs(conversation: Conversation, focal_speaker: str) -> list[AdjacentPair]:
    """(predecessor, response) index pairs for every non-opening focal turn."""
    utts = conversation.utterances
    if not any(u.speaker == focal_speaker for u in utts):
        raise NotFoundError(f"speaker {focal_speaker!r} not in conversation {conversation.id!r}")
    return [AdjacentPair(i - 1, i) for i in range(1, len(utts)) if utts[i].speaker == focal_speaker]


def focal_slots(conversation: Conversation, focal_speaker: str) -> list[int]:
    """Indices of every utterance by ``focal_speaker``, opening turn included."""
    slots = [u.index for u in conversation.utterances if u.speaker == focal_speaker]
    if not slots:
        raise NotFoundError(f"speaker {focal_speaker!r} not in conversation {conversation.id!r}")
    return slots


def relabel(conversation: Conversation, mapping: Mapping[str, str]) -> Conversation:
    utts = tuple(
        Utterance(u.index, mapping.get(u.speaker, u.speaker), u.role, u.text) for u in conversation.utterances
    )
    return replace(conversation, utterances=utts)


def turns_of(conversation: Conversation) -> Sequence[tuple[str, str, str]]:
    return [(u.speaker, u.role, u.text) for u in conversation.utterances]
