"""Synthetic conversations with planted, known matching strength."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, ValidationError
from .lexicon import Lexicon
from .transcript import Conversation, build_conversation, tokenize

TOPOLOGIES = ("alternating", "moderated")
MODERATOR = "M"
TRUTH_KEY = "synthetic"

_ONSETS = ("bl", "br", "dr", "fl", "gl", "gr", "kr", "pl", "pr", "sk", "sl", "sn", "sp", "tr", "vr", "zl")
_NUCLEI = ("a", "e", "i", "o", "u", "oo", "ai")
_CODAS = ("b", "d", "g", "k", "m", "p", "rk", "sk", "v", "x", "z", "nt")


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    ``base_rate`` (q0) and ``copy_rate`` (q1) may be scalars or per-marker
    mappings.  Copiers respond with probability q1 when the predecessor
    carries the marker and q0 otherwise; other speakers (and the opening
    utterance) emit at ``independent_rate``, which defaults to q0.  A
    ``ramp`` (start, end) replaces q1 with a value moving linearly from
    start to end across the conversation.
    """

    n_utterances: int
    base_rate: float | Mapping[str, float] = 0.3
    copy_rate: float | Mapping[str, float] = 0.3
    speakers: tuple[str, ...] = ("A", "B")
    copiers: tuple[str, ...] | None = None
    independent_rate: float | Mapping[str, float] | None = None
    ramp: tuple[float, float] | None = None
    topology: str = "alternating"
    filler: tuple[int, int] = (2, 6)
    seed: int = 0
    conversation_id: str = "synthetic"

    def __post_init__(self):
        if self.n_utterances < 2:
            raise ValidationError("n_utterances must be at least 2")
        if self.topology not in TOPOLOGIES:
            raise ValidationError(f"topology must be one of {TOPOLOGIES}")
        if len(set(self.speakers)) < 2 and self.topology == "alternating":
            raise ValidationError("alternating topology needs at least two speakers")
        if self.topology == "moderated" and MODERATOR in self.speakers:
            raise ValidationError(f"speaker name {MODERATOR!r} is reserved for the moderator")
        for name in ("base_rate", "copy_rate", "independent_rate"):
            val = getattr(self, name)
            vals = [] if val is None else (val.values() if isinstance(val, Mapping) else [val])
            for v in vals:
                if not 0.0 <= float(v) <= 1.0:
                    raise ValidationError(f"{name} values must lie in [0, 1]")
        if self.ramp is not None:
            if len(self.ramp) != 2 or not all(0.0 <= float(v) <= 1.0 for v in self.ramp):
                raise ValidationError("ramp must be (start, end) with both in [0, 1]")
        lo, hi = self.filler
        if lo < 0 or hi < lo:
            raise ValidationError("filler must be (min, max) with 0 <= min <= max")


@dataclass(frozen=True)
class GroundTruth:
    rates: dict[str, tuple[float, float]]  # marker -> (q0, q1)
    independent_rate: dict[str, float]
    copiers: tuple[str, ...]
    ramp: tuple[float, float] | None
    topology: str
    seed: int


def _per_marker(value, markers) -> dict[str, float]:
    if isinstance(value, Mapping):
        missing = [m for m in markers if m not in value]
        if missing:
            raise ConfigurationError(f"rate missing for markers: {', '.join(missing)}")
        return {m: float(value[m]) for m in markers}
    return {m: float(value) for m in markers}


def marker_pools(lexicon: Lexicon) -> dict[str, tuple[str, ...]]:
    """Tokens that hit exactly one marker category each."""
    n_markers = len(lexicon.markers)
    pools = {}
    for i, cat in enumerate(lexicon.markers):
        pool = []
        for p in cat.patterns:
            tok = p[:-1] if p.endswith("*") else p
            if not tok or tokenize(tok) != [tok]:
                continue
            hits = {j for j in lexicon.category_ids(tok) if j < n_markers}
            if hits == {i}:
                pool.append(tok)
        pools[cat.name] = tuple(sorted(set(pool)))
    return pools


def filler_pool(lexicon: Lexicon, size: int = 200) -> tuple[str, ...]:
    words = []
    for o in _ONSETS:
        for n in _NUCLEI:
            for c in _CODAS:
                w = o + n + c
                if not lexicon.category_ids(w):
                    words.append(w)
    return tuple(words[:size])


def _speaker_sequence(config: SynthConfig) -> list[str]:
    if config.topology == "alternating":
        k = len(config.speakers)
        return [config.speakers[t % k] for t in range(config.n_utterances)]
    seq = []
    turn = 0
    for t in range(config.n_utterances):
        if t % 2 == 0:
            seq.append(MODERATOR)
        else:
            seq.append(config.speakers[turn % len(config.speakers)])
            turn += 1
    return seq


def generate(config: SynthConfig, lexicon: Lexicon) -> Conversation:
    """A conversation whose marker incidences follow the configured rates."""
    markers = lexicon.marker_names
    q0 = _per_marker(config.base_rate, markers)
    q1 = _per_marker(config.copy_rate, markers)
    indep = _per_marker(config.base_rate if config.independent_rate is None else config.independent_rate, markers)
    pools = marker_pools(lexicon)
    empty = [m for m in markers if not pools[m]]
    if empty:
        raise ConfigurationError(f"no tokens unique to marker(s): {', '.join(empty)}")
    fillers = filler_pool(lexicon)
    if not fillers and config.filler[1] > 0:
        raise ConfigurationError("no filler tokens avoid the lexicon")
    copiers = tuple(config.speakers) if config.copiers is None else tuple(config.copiers)
    seq = _speaker_sequence(config)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    n = config.n_utterances
    m_count = len(markers)
    q0v = np.array([q0[m] for m in markers])
    q1v = np.array([q1[m] for m in markers])
    indv = np.array([indep[m] for m in markers])
    present = np.zeros((n, m_count), dtype=bool)
    turns = []
    for t in range(n):
        u = rng.random(m_count)
        if t > 0 and seq[t] in copiers:
            if config.ramp is not None:
                frac = t / (n - 1)
                q1_now = np.full(m_count, config.ramp[0] + (config.ramp[1] - config.ramp[0]) * frac)
            else:
                q1_now = q1v
            prob = np.where(present[t - 1], q1_now, q0v)
        else:
            prob = indv
        present[t] = u < prob
        words = [pools[markers[j]][rng.integers(len(pools[markers[j]]))] for j in np.flatnonzero(present[t])]
        n_fill = int(rng.integers(config.filler[0], config.filler[1] + 1))
        words += [fillers[rng.integers(len(fillers))] for _ in range(n_fill)]
        order = rng.permutation(len(words))
        text = " ".join(words[i] for i in order)
        role = "moderator" if seq[t] == MODERATOR else "candidate"
        turns.append((seq[t], role, text))

    truth = {
        "rates": {m: [q0[m], q1[m]] for m in markers},
        "independent_rate": indep,
        "copiers": list(copiers),
        "ramp": None if config.ramp is None else [float(config.ramp[0]), float(config.ramp[1])],
        "topology": config.topology,
        "seed": config.seed,
    }
    return build_conversation(config.conversation_id, turns, metadata={TRUTH_KEY: truth})


def truth(conversation: Conversation) -> GroundTruth:
    """Generating parameters embedded by ``generate``."""
    meta = conversation.metadata.get(TRUTH_KEY) if conversation.metadata else None
    if not meta:
        raise ValidationError(f"conversation {conversation.id!r} carries no synthetic ground truth")
    return GroundTruth(
        rates={m: (float(v[0]), float(v[1])) for m, v in meta["rates"].items()},
        independent_rate={m: float(v) for m, v in meta["independent_rate"].items()},
        copiers=tuple(meta["copiers"]),
        ramp=None if meta["ramp"] is None else (float(meta["ramp"][0]), float(meta["ramp"][1])),
        topology=meta["topology"],
        seed=int(meta["seed"]),
    )


def truth_document(conversation: Conversation) -> str:
    """Ground-truth sidecar contents (JSON)."""
    gt = truth(conversation)
    doc = asdict(gt)
    doc["conversation_id"] = conversation.id
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def responder_frequency(q0: float, q1: float, predecessor_rate: float) -> float:
    """Expected marker frequency of a copier whose predecessor emits at ``predecessor_rate``."""
    return q0 + (q1 - q0) * predecessor_rate


def stationary_frequency(q0: float, q1: float) -> float:
    """Long-run frequency when every speaker copies with (q0, q1)."""
    denom = 1.0 - (q1 - q0)
    if denom <= 0:
        raise ValidationError("q1 = 1 with q0 = 0 has no unique long-run frequency")
    return q0 / denom
