"""Word-category dictionaries: loading, validation, and token lookup.

Two on-disk layouts are understood:

``lsm``
    UTF-8 text.  ``%category <name>`` opens a section, each following
    non-blank line is one pattern.  Lines starting with ``#`` are comments.
    A pattern may end in ``*`` to match every token with that prefix.

``liwc-dic``
    The two-part LIWC ``.dic`` layout: a ``%``-delimited header of
    ``<id> <name>`` lines, then ``word<TAB>id<TAB>id...`` lines.  Category
    abbreviations for the eight style markers are renamed on import.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ParseError, UndefinedError, ValidationError

MARKER_NAMES = (
    "quantifiers",
    "conjunctions",
    "adverbs",
    "auxiliary verbs",
    "prepositions",
    "articles",
    "personal pronouns",
    "impersonal pronouns",
)

# LIWC 2007/2015 abbreviations for the marker categories.
LIWC_MARKER_ALIASES = {
    "quant": "quantifiers",
    "conj": "conjunctions",
    "adverb": "adverbs",
    "adverbs": "adverbs",
    "auxverb": "auxiliary verbs",
    "preps": "prepositions",
    "prep": "prepositions",
    "article": "articles",
    "ppron": "personal pronouns",
    "ipron": "impersonal pronouns",
}

FORMATS = ("lsm", "liwc-dic")


@dataclass(frozen=True)
class MarkerCategory:
    name: str
    patterns: tuple[str, ...]

    def __post_init__(self):
        if not self.patterns:
            raise ValidationError(f"category {self.name!r} is empty")
        seen = set()
        for p in self.patterns:
            if p != p.lower():
                raise ValidationError(f"pattern {p!r} in {self.name!r} is not lowercase")
            if "*" in p[:-1] or p == "*":
                raise ValidationError(f"pattern {p!r} in {self.name!r}: '*' allowed only as a final character after a stem")
            if p in seen:
                raise ValidationError(f"duplicate pattern {p!r} in category {self.name!r}")
            seen.add(p)

    def __len__(self):
        return len(self.patterns)

    def __contains__(self, pattern):
        return pattern in self.patterns


@dataclass(frozen=True, eq=False)
class Lexicon:
    """An ordered marker set plus auxiliary reporting categories.

    Immutable once built; token lookups are cached, so a single instance
    can be shared freely between threads.
    """

    markers: tuple[MarkerCategory, ...]
    auxiliary: tuple[MarkerCategory, ...] = ()
    _literal: dict = field(init=False, repr=False, compare=False)
    _stems: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = [c.name for c in self.categories]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValidationError(f"category defined twice: {', '.join(dupes)}")
        literal: dict[str, set[int]] = {}
        stems: dict[str, set[int]] = {}
        for i, cat in enumerate(self.categories):
            for p in cat.patterns:
                if p.endswith("*"):
                    stems.setdefault(p[:-1], set()).add(i)
                else:
                    literal.setdefault(p, set()).add(i)
        object.__setattr__(self, "_literal", {k: frozenset(v) for k, v in literal.items()})
        object.__setattr__(self, "_stems", {k: frozenset(v) for k, v in stems.items()})

    @property
    def categories(self) -> tuple[MarkerCategory, ...]:
        return self.markers + self.auxiliary

    @property
    def marker_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.markers)

    @property
    def category_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.categories)

    def __getitem__(self, name: str) -> MarkerCategory:
        for cat in self.categories:
            if cat.name == name:
                return cat
        raise KeyError(name)

    def category_ids(self, token: str) -> frozenset[int]:
        """Indices (into ``categories``) of every category matching ``token``."""
        return _lookup(self, token)

    def matches(self, token: str) -> tuple[str, ...]:
        names = self.category_names
        return tuple(names[i] for i in sorted(self.category_ids(token)))


@lru_cache(maxsize=200_000)
def _lookup(lexicon: Lexicon, token: str) -> frozenset[int]:
    hits = set(lexicon._literal.get(token, ()))
    stems = lexicon._stems
    for end in range(1, len(token) + 1):
        ids = stems.get(token[:end])
        if ids:
            hits.update(ids)
    return frozenset(hits)


def build_lexicon(sections: Sequence[tuple[str, Sequence[str]]]) -> Lexicon:
    """Assemble a Lexicon from ``(name, patterns)`` pairs, marker order fixed."""
    by_name = {}
    order = []
    for name, patterns in sections:
        if name in by_name:
            raise ValidationError(f"category defined twice: {name}")
        by_name[name] = MarkerCategory(name, tuple(patterns))
        order.append(name)
    missing = [m for m in MARKER_NAMES if m not in by_name]
    if missing:
        raise ValidationError(f"missing marker categories: {', '.join(missing)}")
    markers = tuple(by_name[m] for m in MARKER_NAMES)
    auxiliary = tuple(by_name[n] for n in order if n not in MARKER_NAMES)
    return Lexicon(markers, auxiliary)


def _as_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str):
        return source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"lexicon is not valid UTF-8: {exc}") from exc


def parse_lsm_format(text: str) -> list[tuple[str, list[str]]]:
    sections: list[tuple[str, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("%"):
            head, _, name = line.partition(" ")
            name = " ".join(name.split()).lower()
            if head != "%category" or not name:
                raise ParseError(f"bad section header {raw!r}", f"line {lineno}")
            sections.append((name, []))
            continue
        if not sections:
            raise ParseError("pattern before first %category header", f"line {lineno}")
        if len(line.split()) != 1:
            raise ParseError(f"pattern {line!r} contains whitespace", f"line {lineno}")
        pattern = line.lower()
        if "*" in pattern[:-1] or pattern == "*":
            raise ParseError(f"'*' must be the final character of a stem: {line!r}", f"line {lineno}")
        name, patterns = sections[-1]
        if pattern in patterns:
            raise ValidationError(f"duplicate pattern {pattern!r} in category {name!r} (line {lineno})")
        patterns.append(pattern)
    return sections


_CONDITIONAL = re.compile(r"\([^)]*\)\s*(\d+)(?:/(\d+))?")


def convert_liwc_dic(text: str) -> str:
    """Rewrite a LIWC ``.dic`` file in the ``lsm`` layout.

    Conditional entries such as ``kind (02 134)125/464`` are reduced to
    their default (last) category id.
    """
    lines = text.splitlines()
    delims = [i for i, ln in enumerate(lines) if ln.strip() == "%"]
    if len(delims) < 2:
        raise ParseError("LIWC .dic file needs a %-delimited category header")
    start, end = delims[0], delims[1]
    names: dict[str, str] = {}
    for i in range(start + 1, end):
        parts = lines[i].split()
        if not parts:
            continue
        if len(parts) < 2:
            raise ParseError(f"bad category line {lines[i]!r}", f"line {i + 1}")
        cid, name = parts[0], parts[1].lower()
        names[cid.lstrip("0") or "0"] = LIWC_MARKER_ALIASES.get(name, name)
    members: dict[str, list[str]] = {n: [] for n in names.values()}
    for i in range(end + 1, len(lines)):
        row = lines[i].strip()
        if not row:
            continue
        parts = row.split("\t") if "\t" in row else row.split()
        word = parts[0].strip().lower()
        if "*" in word[:-1]:
            raise ParseError(f"'*' must be the final character of a stem: {word!r}", f"line {i + 1}")
        ids = _CONDITIONAL.sub(lambda m: m.group(2) or m.group(1), " ".join(parts[1:]))
        for field_ in ids.split():
            if not field_.isdigit():
                continue
            cid = field_.lstrip("0") or "0"
            if cid not in names:
                raise ParseError(f"unknown category id {field_}", f"line {i + 1}")
            bucket = members[names[cid]]
            if word not in bucket:
                bucket.append(word)
    out = io.StringIO()
    for name, words in members.items():
        if not words:
            continue
        out.write(f"%category {name}\n")
        for w in words:
            out.write(w + "\n")
    return out.getvalue()


def load_lexicon(source: IO[bytes] | bytes | str, format: str = "lsm") -> Lexicon:
    """Parse and validate a lexicon from a byte stream (or bytes/str)."""
    if format not in FORMATS:
        raise ValueError(f"unknown lexicon format {format!r}; expected one of {FORMATS}")
    text = _as_text(source)
    if format == "liwc-dic":
        text = convert_liwc_dic(text)
    return build_lexicon(parse_lsm_format(text))


def load_lexicon_path(path, format: str | None = None) -> Lexicon:
    path = str(path)
    if format is None:
        format = "liwc-dic" if path.endswith(".dic") else "lsm"
    with open(path, "rb") as fh:
        return load_lexicon(fh, format)


@lru_cache(maxsize=1)
def reference_lexicon() -> Lexicon:
    """The bundled open lexicon (marker sizes 20/28/68/147/60/4/71/46)."""
    data = resources.files("lsmatch").joinpath("data/reference_lexicon.txt").read_bytes()
    return load_lexicon(data, "lsm")


def dump_lexicon(lexicon: Lexicon) -> str:
    out = io.StringIO()
    for cat in lexicon.categories:
        out.write(f"%category {cat.name}\n")
        for p in cat.patterns:
            out.write(p + "\n")
    return out.getvalue()


def incidence_matrix(lexicon: Lexicon, token_lists: Iterable[Sequence[str]]) -> np.ndarray:
    """Boolean (utterance x marker) matrix of marker presence."""
    n_markers = len(lexicon.markers)
    rows = []
    for tokens in token_lists:
        row = np.zeros(n_markers, dtype=bool)
        for tok in tokens:
            for i in lexicon.category_ids(tok):
                if i < n_markers:
                    row[i] = True
        rows.append(row)
    if not rows:
        return np.zeros((0, n_markers), dtype=bool)
    return np.vstack(rows)


def marker_incidence(lexicon: Lexicon, tokens: Sequence[str]) -> dict[str, bool]:
    """Which marker categories occur at least once among ``tokens``."""
    row = incidence_matrix(lexicon, [tokens])[0]
    return dict(zip(lexicon.marker_names, map(bool, row)))


def category_counts(lexicon: Lexicon, tokens: Sequence[str], names: Sequence[str] | None = None) -> dict[str, int]:
    all_names = lexicon.category_names
    wanted = all_names if names is None else tuple(names)
    for n in wanted:
        if n not in all_names:
            raise KeyError(n)
    counts = dict.fromkeys(all_names, 0)
    for tok in tokens:
        for i in lexicon.category_ids(tok):
            counts[all_names[i]] += 1
    return {n: counts[n] for n in wanted}


def category_percentages(lexicon: Lexicon, tokens: Sequence[str], names: Sequence[str] | None = None) -> dict[str, float]:
    """Percent of tokens falling in each category.

    A token belonging to several categories counts once toward each.
    """
    if len(tokens) == 0:
        raise UndefinedError("category percentages are undefined for an empty token sequence")
    total = len(tokens)
    return {n: 100.0 * c / total for n, c in category_counts(lexicon, tokens, names).items()}
