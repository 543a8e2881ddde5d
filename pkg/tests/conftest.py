import numpy as np
import pytest

from lsmatch.lexicon import MARKER_NAMES, build_lexicon, reference_lexicon
from lsmatch.transcript import build_conversation

# one word per marker, so incidence in hand-built conversations is obvious
TINY_WORDS = {
    "quantifiers": "all",
    "conjunctions": "and",
    "adverbs": "very",
    "auxiliary verbs": "am",
    "prepositions": "near",
    "articles": "the",
    "personal pronouns": "she",
    "impersonal pronouns": "it",
}


@pytest.fixture(scope="session")
def tiny():
    sections = [(m, [TINY_WORDS[m]]) for m in MARKER_NAMES]
    sections.append(("assent", ["yes", "ok*"]))
    return build_lexicon(sections)


@pytest.fixture(scope="session")
def lex():
    return reference_lexicon()


def conversation(speakers, texts, conv_id="c", roles=None):
    roles = roles or {}
    turns = [(s, roles.get(s, "candidate"), t) for s, t in zip(speakers, texts)]
    return build_conversation(conv_id, turns)


def incidence_conversation(speakers, has_marker, word="the", filler="blah", conv_id="c"):
    """Alternating conversation where utterance i contains ``word`` iff has_marker[i]."""
    texts = [f"{filler} {word}" if h else filler for h in has_marker]
    return conversation(speakers, texts, conv_id)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report one line each, printed after the run
ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, passed, detail):
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number}: {detail}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
