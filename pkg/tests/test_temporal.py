import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lsmatch.errors import ValidationError
from lsmatch.matching import MatchConfig, lsm_score
from lsmatch.polls import PollWindowDiff
from lsmatch.synth import SynthConfig, generate
from lsmatch.temporal import TemporalProfile, curve_slope, grouped_curves, prefix_curve, segment


def test_segment_even():
    parts = segment(80, 40)
    assert len(parts) == 40 and all(len(r) == 2 for r in parts)


def test_segment_remainder_front_loaded():
    parts = segment(81, 40)
    assert len(parts[0]) == 3 and all(len(r) == 2 for r in parts[1:])


def test_segment_too_short():
    with pytest.raises(ValidationError):
        segment(10, 40)
    with pytest.raises(ValidationError):
        segment(10, 0)


@given(st.integers(1, 500), st.integers(1, 60))
def test_segment_partition(n, parts):
    if n < parts:
        return
    ranges = segment(n, parts)
    flat = [i for r in ranges for i in r]
    assert flat == list(range(n))
    sizes = [len(r) for r in ranges]
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes, reverse=True)


@pytest.fixture(scope="module")
def conv(lex):
    return generate(SynthConfig(90, base_rate=0.3, copy_rate=0.7, seed=2), lex)


def test_last_prefix_is_full_score(conv, lex):
    cfg = MatchConfig(n_permutations=2000, seed=7)
    prof = prefix_curve(conv, "B", lex, 10, cfg)
    assert len(prof.curve) == 10
    assert prof.curve[-1] == lsm_score(conv, "B", lex, cfg).mean_z


def test_prefix_matches_truncated_conversation(conv, lex):
    cfg = MatchConfig(n_permutations=1000, seed=1)
    prof = prefix_curve(conv, "A", lex, 9, cfg)
    ranges = segment(len(conv), 9)
    for i in (2, 5):
        assert prof.curve[i] == lsm_score(conv.prefix(ranges[i].stop), "A", lex, cfg).mean_z


def test_absent_before_first_turn(conv, lex):
    prof = prefix_curve(conv, "B", lex, 90, MatchConfig(method="analytic"))
    assert prof.curve[0] is None  # only speaker A has spoken
    assert prof.curve[-1] is not None


def test_parts_one(conv, lex):
    prof = prefix_curve(conv, "A", lex, 1, MatchConfig(method="analytic"))
    assert prof.curve == (lsm_score(conv, "A", lex, MatchConfig(method="analytic")).mean_z,)


def test_analytic_is_seed_free(conv, lex):
    a = prefix_curve(conv, "B", lex, 12, MatchConfig(method="analytic", seed=1))
    b = prefix_curve(conv, "B", lex, 12, MatchConfig(method="analytic", seed=2))
    assert a.curve == b.curve


def test_ramp_increases(lex):
    slopes = []
    for seed in range(12):
        c = generate(SynthConfig(400, base_rate=0.3, copy_rate=0.3, ramp=(0.3, 0.95), seed=seed), lex)
        slopes.append(curve_slope(prefix_curve(c, "B", lex, 20, MatchConfig(method="analytic")).curve))
    assert np.mean(np.array(slopes) > 0) >= 0.9


def test_curve_slope():
    assert curve_slope([1.0, None, 3.0, 4.0]) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        curve_slope([None, 2.0])


def prof(cid, spk, curve):
    return TemporalProfile(cid, spk, len(curve), tuple(curve))


def diff(cid, spk, p):
    return PollWindowDiff(cid, spk, 0.0, p, p, 1, 1)


def test_grouped_single_member_and_identical():
    profiles = [prof("d1", "A", [1.0, 2.0]), prof("d1", "B", [0.5, 0.5]), prof("d2", "B", [0.5, 0.5])]
    diffs = [diff("d1", "A", 2.0), diff("d1", "B", -1.0), diff("d2", "B", -3.0)]
    pts = {(p.group, p.prefix_index): p for p in grouped_curves(profiles, diffs)}
    inc = pts[("increase", 2)]
    assert (inc.mean, inc.ci_low, inc.ci_high, inc.n) == (2.0, None, None, 1)
    dec = pts[("decrease", 1)]
    assert (dec.mean, dec.ci_low, dec.ci_high) == (0.5, 0.5, 0.5)


def test_grouped_drops_zero_and_gaps():
    profiles = [prof("d1", "A", [None, 1.0]), prof("d1", "B", [3.0, 3.0])]
    pts = grouped_curves(profiles, [diff("d1", "A", 1.0), diff("d1", "B", 0.0)])
    assert {p.group for p in pts} == {"increase"}
    assert pts[0].mean is None and pts[0].n == 0


def test_grouped_empty_join():
    with pytest.raises(ValidationError):
        grouped_curves([prof("d1", "A", [1.0])], [diff("d2", "A", 1.0)])
