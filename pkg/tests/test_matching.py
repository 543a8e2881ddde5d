import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import conversation, incidence_conversation
from lsmatch import kernels
from lsmatch.errors import NotFoundError, UndefinedError, ValidationError
from lsmatch.matching import (
    MatchConfig,
    MatchScore,
    analytic_null,
    exact_null,
    hypergeometric_null,
    lsm_asymmetry,
    lsm_score,
    marker_z,
    observed_probability,
    percentage_similarity,
    permutation_null,
    require_mean_z,
    responder_turn_lsm,
    turn_lsm,
)
from lsmatch.synth import SynthConfig, generate
from lsmatch.transcript import relabel

# M,C,M,C,M,C; predecessors (M) carry articles (T,F,T), C carries (T,T,F)
WORKED = dict(speakers="MCMCMC", has_marker=[True, True, False, True, True, False])


@pytest.fixture
def worked():
    return incidence_conversation(**WORKED)


def brute_force_null(conv, focal, marker, lexicon):
    """Every arrangement of the focal speaker's utterances, scored from scratch."""
    utts = conv.utterances
    has = [lexicon.marker_names.index(marker) in {i for t in u.tokens for i in lexicon.category_ids(t)} for u in utts]
    slots = [u.index for u in utts if u.speaker == focal]
    values = []
    for arrangement in itertools.permutations([has[s] for s in slots]):
        placed = dict(zip(slots, arrangement))
        pairs = [(has[s - 1], placed[s]) for s in slots if s > 0]
        n_prev = sum(p for p, _ in pairs)
        values.append(sum(p and r for p, r in pairs) / n_prev)
    return float(np.mean(values)), float(np.std(values))


def test_worked_observed(worked, tiny):
    assert observed_probability(worked, "C", "articles", tiny) == (2, 1, 0.5)


def test_worked_nulls(worked, tiny):
    mean, std = analytic_null(worked, "C", "articles", tiny)
    assert mean == pytest.approx(2 / 3, abs=1e-15)
    assert std == pytest.approx(0.23570226039551584, abs=1e-12)
    ex = exact_null(worked, "C", "articles", tiny)
    assert sorted(set(np.round(ex.samples, 12))) == [0.5, 1.0]
    assert (ex.mean, ex.std) == pytest.approx((mean, std), abs=1e-12)
    assert brute_force_null(worked, "C", "articles", tiny) == pytest.approx((mean, std), abs=1e-12)


def test_worked_z(tiny, worked):
    assert marker_z(0.5, 2 / 3, 0.2357) == pytest.approx(-0.7071, abs=1e-4)
    score = lsm_score(worked, "C", tiny, MatchConfig(method="analytic"))
    assert score.defined_markers == ("articles",)
    assert score.mean_z == pytest.approx(-1 / math.sqrt(2), abs=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy kurtosis at degenerate sizes
def test_hypergeometric_matches_scipy():
    for n_pop, k, n in [(3, 2, 2), (10, 4, 3), (25, 12, 25), (7, 0, 3), (7, 7, 2), (50, 17, 9)]:
        dist = stats.hypergeom(n_pop, k, n)
        mean, std = hypergeometric_null(n_pop, k, n)
        assert mean == pytest.approx(dist.mean() / n, abs=1e-12)
        assert std == pytest.approx(dist.std() / n, abs=1e-12)


def test_degenerate_nulls(tiny):
    with pytest.raises(UndefinedError):
        hypergeometric_null(3, 1, 0)
    with pytest.raises(UndefinedError):
        hypergeometric_null(1, 1, 1)
    assert hypergeometric_null(4, 0, 2) == (0.0, 0.0)
    assert hypergeometric_null(4, 4, 2) == (1.0, 0.0)


def test_marker_absent(tiny):
    conv = incidence_conversation("ABAB", [False] * 4)
    assert observed_probability(conv, "B", "articles", tiny) == (0, 0, None)
    with pytest.raises(UndefinedError):
        permutation_null(conv, "B", "articles", tiny, n=100)
    score = lsm_score(conv, "B", tiny, MatchConfig(n_permutations=100))
    assert score.mean_z is None
    with pytest.raises(UndefinedError):
        require_mean_z(score)


def test_marker_everywhere_is_degenerate(tiny):
    conv = incidence_conversation("ABABAB", [True] * 6)
    n_prev, n_joint, p = observed_probability(conv, "B", "articles", tiny)
    assert p == 1.0
    null = permutation_null(conv, "B", "articles", tiny, n=200)
    assert null.std == 0.0
    stat = lsm_score(conv, "B", tiny, MatchConfig(n_permutations=200)).marker("articles")
    assert not stat.defined and stat.z is None
    with pytest.raises(UndefinedError):
        marker_z(1.0, 1.0, 0.0)


def test_marker_z_zero():
    assert marker_z(0.3, 0.3, 0.1) == 0.0


def test_unknown_speaker_and_marker(worked, tiny):
    with pytest.raises(NotFoundError):
        lsm_score(worked, "X", tiny)
    with pytest.raises(NotFoundError):
        observed_probability(worked, "C", "nouns", tiny)


def _random_conv(rng, lexicon, n, conv_id="r"):
    q = {m: float(rng.uniform(0.15, 0.85)) for m in lexicon.marker_names}
    return generate(SynthConfig(n, base_rate=q, copy_rate=q, seed=int(rng.integers(2**31)), conversation_id=conv_id), lexicon)


def test_two_seeds_within_four_se(rng, lex):
    conv = _random_conv(rng, lex, 40)
    for m in lex.marker_names:
        try:
            a = permutation_null(conv, "B", m, lex, n=10_000, seed=1)
        except UndefinedError:
            continue
        b = permutation_null(conv, "B", m, lex, n=10_000, seed=2)
        if a.std > 0:
            assert abs(a.mean - b.mean) < 4 * a.std / math.sqrt(10_000) * math.sqrt(2)


def test_analytic_vs_mc(rng, lex):
    conv = _random_conv(rng, lex, 60)
    an = lsm_score(conv, "B", lex, MatchConfig(method="analytic"))
    mc = lsm_score(conv, "B", lex, MatchConfig(n_permutations=10_000, seed=3))
    assert an.defined_markers == mc.defined_markers
    for a, b in zip(an.per_marker, mc.per_marker):
        if a.defined:
            assert abs(a.z - b.z) <= 0.1


def test_planted_copying_positive(lex):
    conv = generate(SynthConfig(120, base_rate=0.0, copy_rate=1.0, independent_rate=0.5, copiers=("B",), seed=4), lex)
    score = lsm_score(conv, "B", lex, MatchConfig(method="analytic"))
    assert all(s.p_obs == 1.0 for s in score.per_marker if s.n_prev)
    assert score.mean_z > 0


def test_asymmetry_direction(lex):
    conv = generate(SynthConfig(200, base_rate=0.2, copy_rate=0.9, independent_rate=0.5, copiers=("A",), seed=8), lex)
    assert lsm_asymmetry(conv, "A", "B", lex, MatchConfig(method="analytic")) > 0


def test_exact_limit(lex, rng):
    conv = _random_conv(rng, lex, 20)
    with pytest.raises(ValidationError, match="at most 8"):
        lsm_score(conv, "B", lex, MatchConfig(method="exact"))


def test_content_only_dependence(rng, lex):
    conv = _random_conv(rng, lex, 50)
    cfg = MatchConfig(n_permutations=2000, seed=5)
    base = lsm_score(conv, "B", lex, cfg)
    moved = relabel(conv, {"A": "Smith", "B": "Jones"})
    other = lsm_score(moved, "Jones", lex, cfg)
    assert other.per_marker == base.per_marker and other.mean_z == base.mean_z


def test_deterministic_and_backend_free(rng, lex):
    conv = _random_conv(rng, lex, 80)
    cfg = MatchConfig(n_permutations=3000, seed=99)
    runs = [lsm_score(conv, "A", lex, cfg, backend=b) for b in sorted(kernels.BACKENDS)]
    runs.append(lsm_score(conv, "A", lex, cfg))
    assert all(r == runs[0] for r in runs)


def test_record_round_trip(worked, tiny):
    score = lsm_score(worked, "C", tiny, MatchConfig(n_permutations=500, seed=1))
    assert MatchScore.from_record(score.to_record()) == score


def test_method_aliases():
    assert MatchConfig(method="mc").method == "monte-carlo"
    assert MatchConfig(method="exact-enumeration").method == "exact"
    with pytest.raises(ValidationError):
        MatchConfig(method="bootstrap")
    with pytest.raises(ValidationError):
        MatchConfig(seed=-1)


def test_pooled_scheme_differs(rng, lex):
    conv = _random_conv(rng, lex, 60)
    a = lsm_score(conv, "B", lex, MatchConfig(n_permutations=2000, method="analytic"))
    b = lsm_score(conv, "B", lex, MatchConfig(n_permutations=2000, method="analytic", scheme="pooled"))
    assert a.per_marker != b.per_marker


# turn-by-turn similarity


def test_similarity_formula():
    p_a = np.array([10.0] + [0.0] * 7)
    p_b = np.array([5.0] + [0.0] * 7)
    sim = percentage_similarity(p_a, p_b)
    assert sim[0] == pytest.approx(1 - 5 / 15.0001, abs=1e-15)
    assert np.all(sim[1:] == 1.0)


def test_turn_lsm_identical(tiny):
    conv = conversation("ABAB", ["the cat sat"] * 4)
    assert turn_lsm(conv, "A", "B", tiny) == 1.0
    assert responder_turn_lsm(conv, "B", tiny) == 1.0


def test_turn_lsm_hand_value(tiny):
    # A: one article in 10 tokens; B: one article in 20 tokens
    a = "the " + "x " * 9
    b = "the " + "x " * 19
    conv = conversation("AB", [a, b])
    want = (7 * 1.0 + (1 - 5 / 15.0001)) / 8
    assert turn_lsm(conv, "A", "B", tiny) == pytest.approx(want, abs=1e-12)


def test_turn_lsm_needs_pairs(tiny):
    conv = conversation("ABC", ["x", "y", "z"])
    with pytest.raises(UndefinedError):
        turn_lsm(conv, "A", "C", tiny)


# exact enumeration against the brute-force oracle


@settings(max_examples=60, deadline=None)
@given(st.lists(st.booleans(), min_size=4, max_size=12), st.sampled_from(["AB", "MAB"]))
def test_exact_equals_oracle_and_analytic(tiny, has, cycle):
    speakers = [cycle[i % len(cycle)] for i in range(len(has))]
    conv = incidence_conversation("".join(speakers), has)
    focal = "B"
    if focal not in speakers or sum(s == focal for s in speakers) > 7:
        return
    try:
        mean, std = analytic_null(conv, focal, "articles", tiny)
    except UndefinedError:
        return
    ex = exact_null(conv, focal, "articles", tiny)
    assert (ex.mean, ex.std) == pytest.approx((mean, std), abs=1e-9)
    assert brute_force_null(conv, focal, "articles", tiny) == pytest.approx((mean, std), abs=1e-9)
