import datetime as dt
import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lsmatch.errors import InsufficientDataError, ParseError, ValidationError
from lsmatch.polls import (
    Debate,
    DebateSchedule,
    PollObservation,
    build_windows,
    dump_polls,
    load_polls,
    load_schedule,
    poll_diff,
)

D = dt.date


def two_debates(year=2012):
    return DebateSchedule(year, D(year, 11, 6), (Debate("d1", D(year, 10, 3)), Debate("d2", D(year, 10, 16))))


def spans(win):
    return (win.start, win.end, win.start_inclusive, win.end_inclusive)


def test_windows_open_interval_policy():
    w = build_windows(two_debates(), "exclude")
    assert spans(w["d1"][0]) == (D(2012, 9, 1), D(2012, 10, 3), False, False)
    assert spans(w["d1"][1]) == (D(2012, 10, 3), D(2012, 10, 16), False, False)
    assert spans(w["d2"][0]) == (D(2012, 10, 3), D(2012, 10, 16), False, False)
    assert spans(w["d2"][1]) == (D(2012, 10, 16), D(2012, 11, 6), False, True)


def test_windows_debate_day_goes_after():
    w = build_windows(two_debates())
    before1, after1 = w["d1"]
    before2, after2 = w["d2"]
    assert D(2012, 10, 3) not in before1 and D(2012, 10, 3) in after1
    assert D(2012, 10, 16) not in after1 and D(2012, 10, 16) in after2
    assert D(2012, 9, 1) not in before1 and D(2012, 9, 2) in before1
    assert D(2012, 11, 6) in after2 and D(2012, 11, 7) not in after2
    assert spans(after1) == spans(before2)
    assert str(after2) == "[2012-10-16, 2012-11-06]"


def test_single_debate():
    s = DebateSchedule(2000, D(2000, 11, 7), (Debate("only", D(2000, 10, 3)),))
    before, after = build_windows(s, "exclude")["only"]
    assert spans(before) == (D(2000, 9, 1), D(2000, 10, 3), False, False)
    assert spans(after) == (D(2000, 10, 3), D(2000, 11, 7), False, True)


def test_unordered_schedule():
    with pytest.raises(ValidationError):
        DebateSchedule(2000, D(2000, 11, 7), (Debate("late", D(2000, 11, 20)),))
    with pytest.raises(ValidationError):
        DebateSchedule(2000, D(2000, 11, 7), (Debate("a", D(2000, 10, 9)), Debate("b", D(2000, 10, 3))))
    with pytest.raises(ValidationError):
        DebateSchedule(2000, D(2000, 11, 7), (Debate("early", D(2000, 8, 20)),))


def test_bad_boundary_policy():
    with pytest.raises(ValueError):
        build_windows(two_debates(), "before")


def obs(cand, pairs):
    return [PollObservation(day, cand, pct) for day, pct in pairs]


def test_median_example():
    polls = obs("C", [(D(2012, 9, 10), 45), (D(2012, 9, 20), 47), (D(2012, 9, 30), 46),
                      (D(2012, 10, 5), 48), (D(2012, 10, 10), 50)])
    d = poll_diff(polls, two_debates(), "d1", "C")
    assert (d.median_before, d.median_after, d.p_diff, d.n_before, d.n_after) == (46, 49, 3, 3, 2)


def test_identical_windows_zero():
    polls = obs("C", [(D(2012, 9, 10), 40), (D(2012, 10, 5), 40)])
    assert poll_diff(polls, two_debates(), "d1", "C").p_diff == 0


def test_empty_window_named():
    polls = obs("C", [(D(2012, 9, 10), 40)])
    with pytest.raises(InsufficientDataError, match="after-window"):
        poll_diff(polls, two_debates(), "d1", "C")
    with pytest.raises(InsufficientDataError, match="before-window"):
        poll_diff(obs("C", [(D(2012, 10, 20), 1)]), two_debates(), "d2", "C")


def test_unknown_debate():
    with pytest.raises(KeyError):
        poll_diff([], two_debates(), "d9", "C")


def test_debate_day_policy_changes_membership():
    polls = obs("C", [(D(2012, 9, 10), 40), (D(2012, 10, 3), 60), (D(2012, 10, 5), 40)])
    assert poll_diff(polls, two_debates(), "d1", "C", "after").n_after == 2
    assert poll_diff(polls, two_debates(), "d1", "C", "exclude").n_after == 1


def test_load_polls():
    text = "candidate,date,percent\nA,2012-10-05,45\nB,2012-09-05,40.5\nA,2012-09-30,44\n"
    rows = load_polls(io.BytesIO(text.encode()))
    assert [o.date for o in rows] == sorted(o.date for o in rows)
    assert len(rows) == 3
    assert load_polls(dump_polls(rows)) == rows
    assert load_polls(b"") == []


def test_load_polls_errors():
    with pytest.raises(ValidationError, match="row 2"):
        load_polls("candidate,date,percent\nA,2012-10-05,105\n")
    with pytest.raises(ParseError, match="row 3"):
        load_polls("candidate,date,percent\nA,2012-10-05,45\nA,10/05/2012,45\n")
    with pytest.raises(ParseError):
        load_polls("name,when,value\nA,2012-10-05,45\n")


def test_load_schedule():
    s = load_schedule('{"election_year": 2012, "election_day": "2012-11-06", "debates": '
                      '[{"id": "d1", "date": "2012-10-03"}]}')
    assert s.window_start == D(2012, 9, 1) and s.debates[0].id == "d1"
    with pytest.raises(ParseError):
        load_schedule('{"election_year": 2012}')


days = st.integers(min_value=1, max_value=66).map(lambda k: D(2012, 9, 1) + dt.timedelta(days=k))
polls = st.lists(st.tuples(days, st.integers(30, 60)), min_size=1, max_size=40)


@given(polls, st.integers(-20, 20))
def test_shift_invariance(pairs, k):
    shifted = obs("C", [(d, p + k + 20) for d, p in pairs])
    base = obs("C", [(d, p + 20) for d, p in pairs])
    for debate in ("d1", "d2"):
        try:
            a = poll_diff(base, two_debates(), debate, "C")
        except InsufficientDataError:
            continue
        b = poll_diff(shifted, two_debates(), debate, "C")
        assert a.p_diff == b.p_diff


@given(polls)
def test_duplicate_at_median_invariance(pairs):
    base = obs("C", pairs)
    try:
        d = poll_diff(base, two_debates(), "d1", "C")
    except InsufficientDataError:
        return
    before, after = build_windows(two_debates())["d1"]
    extra = [o for o in base if o.date in before and o.percent == d.median_before][:1]
    if extra:
        assert poll_diff(base + extra, two_debates(), "d1", "C").p_diff == d.p_diff


@given(days)
def test_each_day_in_at_most_one_window_per_side(day):
    w = build_windows(two_debates())
    assert sum(day in b for b, _ in w.values()) <= 1
    assert sum(day in a for _, a in w.values()) <= 1
    for b, a in w.values():
        assert not (day in b and day in a)
