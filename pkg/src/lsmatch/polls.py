"""Poll series, debate schedules, and before/after median differences."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import statistics
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .errors import InsufficientDataError, ParseError, ValidationError

# Where polls dated on a debate day go.  "after": into the after-window of
# that debate (and the before-window of the next one).  "exclude": open
# intervals on both sides, so debate-day polls are dropped.
BOUNDARY_POLICIES = ("after", "exclude")


@dataclass(frozen=True, order=True)
class PollObservation:
    date: dt.date
    candidate: str
    percent: float

    def __post_init__(self):
        if not 0.0 <= self.percent <= 100.0:
            raise ValidationError(f"poll percent {self.percent} outside [0, 100]")


@dataclass(frozen=True)
class Debate:
    id: str
    date: dt.date


@dataclass(frozen=True)
class DebateSchedule:
    election_year: int
    election_day: dt.date
    debates: tuple[Debate, ...]
    window_start: dt.date | None = None

    def __post_init__(self):
        if self.window_start is None:
            object.__setattr__(self, "window_start", dt.date(self.election_year, 9, 1))
        if not self.debates:
            raise ValidationError(f"{self.election_year}: schedule lists no debates")
        ids = [d.id for d in self.debates]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"{self.election_year}: duplicate debate ids")
        dates = [self.window_start] + [d.date for d in self.debates] + [self.election_day]
        for a, b in zip(dates, dates[1:]):
            if not a < b:
                raise ValidationError(
                    f"{self.election_year}: schedule dates must increase strictly "
                    f"(window start < debates < election day); {a} !< {b}"
                )

    def index(self, debate_id: str) -> int:
        for i, d in enumerate(self.debates):
            if d.id == debate_id:
                return i
        raise KeyError(debate_id)


@dataclass(frozen=True)
class Window:
    """Date interval with explicit endpoint inclusion."""

    start: dt.date
    end: dt.date
    start_inclusive: bool = False
    end_inclusive: bool = False

    def __contains__(self, day: dt.date) -> bool:
        lo = day >= self.start if self.start_inclusive else day > self.start
        hi = day <= self.end if self.end_inclusive else day < self.end
        return lo and hi

    def __str__(self):
        return f"{'[' if self.start_inclusive else '('}{self.start}, {self.end}{']' if self.end_inclusive else ')'}"


@dataclass(frozen=True)
class PollWindowDiff:
    debate_id: str
    candidate: str
    median_before: float
    median_after: float
    p_diff: float
    n_before: int
    n_after: int


def _read_text(source) -> str:
    if isinstance(source, str):
        return source
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    if isinstance(data, str):
        return data
    return bytes(data).decode("utf-8-sig")


def load_polls(source: IO[bytes] | bytes | str) -> list[PollObservation]:
    """Read ``candidate,date,percent`` rows, sorted by date."""
    text = _read_text(source)
    if not text.strip():
        return []
    reader = csv.DictReader(io.StringIO(text))
    need = {"candidate", "date", "percent"}
    if not reader.fieldnames or not need <= {f.strip() for f in reader.fieldnames}:
        raise ParseError(f"poll header must contain {sorted(need)}, got {reader.fieldnames}", "row 1")
    out = []
    for rowno, row in enumerate(reader, start=2):
        row = {(k or "").strip(): (v or "").strip() for k, v in row.items()}
        try:
            day = dt.date.fromisoformat(row["date"])
            pct = float(row["percent"])
        except ValueError as exc:
            raise ParseError(f"bad poll row: {exc}", f"row {rowno}") from None
        if not row["candidate"]:
            raise ParseError("empty candidate", f"row {rowno}")
        try:
            out.append(PollObservation(day, row["candidate"], pct))
        except ValidationError as exc:
            raise ValidationError(f"row {rowno}: {exc}") from None
    out.sort(key=lambda o: o.date)
    return out


def dump_polls(observations: Iterable[PollObservation]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["candidate", "date", "percent"])
    for o in observations:
        w.writerow([o.candidate, o.date.isoformat(), repr(o.percent)])
    return buf.getvalue()


def load_schedule(source: IO[bytes] | bytes | str) -> DebateSchedule:
    try:
        doc = json.loads(_read_text(source))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    try:
        year = int(doc["election_year"])
        eday = dt.date.fromisoformat(doc["election_day"])
        debates = tuple(Debate(str(d["id"]), dt.date.fromisoformat(d["date"])) for d in doc["debates"])
        start = doc.get("window_start")
        start = dt.date.fromisoformat(start) if start else None
    except (KeyError, TypeError) as exc:
        raise ParseError(f"schedule missing or malformed field: {exc}") from None
    except ValueError as exc:
        raise ParseError(f"bad schedule date: {exc}") from None
    return DebateSchedule(year, eday, debates, start)


def build_windows(schedule: DebateSchedule, boundary: str = "after") -> dict[str, tuple[Window, Window]]:
    """Before- and after-windows for every debate.

    Debate i is bracketed by the previous event (window start or earlier
    debate) and the next one (later debate or election day, the latter
    inclusive).
    """
    if boundary not in BOUNDARY_POLICIES:
        raise ValueError(f"boundary must be one of {BOUNDARY_POLICIES}")
    marks = [schedule.window_start] + [d.date for d in schedule.debates] + [schedule.election_day]
    last = len(schedule.debates)
    on_debate_day = boundary == "after"
    windows = {}
    for i, debate in enumerate(schedule.debates, start=1):
        before = Window(marks[i - 1], marks[i], start_inclusive=on_debate_day and i > 1)
        after = Window(marks[i], marks[i + 1], start_inclusive=on_debate_day, end_inclusive=i == last)
        windows[debate.id] = (before, after)
    return windows


def poll_diff(
    observations: Sequence[PollObservation],
    schedule: DebateSchedule,
    debate_id: str,
    candidate: str,
    boundary: str = "after",
) -> PollWindowDiff:
    """Median poll level after the debate minus the median before it."""
    windows = build_windows(schedule, boundary)
    if debate_id not in windows:
        raise KeyError(f"debate {debate_id!r} not in the {schedule.election_year} schedule")
    before, after = windows[debate_id]
    mine = [o for o in observations if o.candidate == candidate]
    vals_b = [o.percent for o in mine if o.date in before]
    vals_a = [o.percent for o in mine if o.date in after]
    for name, vals, win in (("before", vals_b, before), ("after", vals_a, after)):
        if not vals:
            raise InsufficientDataError(f"no polls for {candidate!r} in the {name}-window {win} of debate {debate_id!r}")
    med_b, med_a = statistics.median(vals_b), statistics.median(vals_a)
    return PollWindowDiff(debate_id, candidate, med_b, med_a, med_a - med_b, len(vals_b), len(vals_a))
