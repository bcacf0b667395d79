"""Deterministic text normalization for social media posts.

All functions are pure and byte-stable across runs: the same input and config
always produce the same output, and ``normalize`` is idempotent. Rules are
applied in a fixed order so that placeholder tokens inserted by early stages
survive the later ones.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Mapping
from weakref import WeakKeyDictionary

__all__ = [
    "NormalizerConfig",
    "NormalizedText",
    "default_config",
    "is_english",
    "replace_entities",
    "demojize",
    "normalize",
]

_WS_SPLIT_RE = re.compile(r"(\s+)")
_TIME_RE = re.compile(r"(?<=\d)([ap]\.m\.)")
_URL_PREFIXES = ("http://", "https://", "www.")


def _data_text(filename: str) -> str:
    return resources.files("hatescan.data").joinpath(filename).read_text(encoding="utf-8")


def _unescape(fieldtext: str) -> str:
    """Decode the \\t, \\n, \\\\ and \\uXXXX escapes used in the data files."""
    if "\\" not in fieldtext:
        return fieldtext
    out: list[str] = []
    i = 0
    while i < len(fieldtext):
        ch = fieldtext[i]
        if ch == "\\" and i + 1 < len(fieldtext):
            nxt = fieldtext[i + 1]
            if nxt == "u" and i + 6 <= len(fieldtext):
                out.append(chr(int(fieldtext[i + 2 : i + 6], 16)))
                i += 6
                continue
            if nxt in "tn\\":
                out.append({"t": "\t", "n": "\n", "\\": "\\"}[nxt])
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _load_pairs(filename: str, allow_missing_value: bool = False) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(_data_text(filename).split("\n"), start=1):
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 1 and allow_missing_value:
            parts.append("")
        if len(parts) != 2:
            raise ValueError(f"{filename}:{lineno}: expected 2 tab-separated fields")
        pairs.append((_unescape(parts[0]), _unescape(parts[1])))
    return pairs


@lru_cache(maxsize=1)
def _default_emoji_table() -> Mapping[str, str]:
    return MappingProxyType(dict(_load_pairs("emoji_table.tsv")))


@lru_cache(maxsize=1)
def _default_folding_table() -> Mapping[str, str]:
    table = dict(_load_pairs("char_folding.tsv", allow_missing_value=True))
    for key, value in table.items():
        if len(key) != 1:
            raise ValueError("folding table keys must be single characters")
        if any(k in value for k in table):
            raise ValueError("folding table values must not contain keys")
    return MappingProxyType(table)


@lru_cache(maxsize=1)
def _default_contraction_table() -> Mapping[str, str]:
    return MappingProxyType(dict(_load_pairs("contractions.tsv")))


@lru_cache(maxsize=1)
def _default_stopwords() -> frozenset[str]:
    words = set()
    for line in _data_text("english_stopwords.txt").split("\n"):
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


@dataclass(frozen=True, eq=False)
class NormalizerConfig:
    """Immutable bundle of replacement tables and thresholds.

    ``extra_placeholders`` lists additional tokens (beyond the three standard
    ones) that the lowercasing stage must leave untouched, e.g. a topic
    separator inserted downstream.
    """

    placeholder_user: str = "<USER>"
    placeholder_url: str = "<URL>"
    placeholder_hashtag: str = "<HASHTAG>"
    emoji_table: Mapping[str, str] = field(default_factory=_default_emoji_table)
    contraction_table: Mapping[str, str] = field(default_factory=_default_contraction_table)
    english_stopword_set: frozenset = field(default_factory=_default_stopwords)
    english_threshold: float = 0.15
    folding_table: Mapping[str, str] = field(default_factory=_default_folding_table)
    extra_placeholders: tuple = ()

    def __post_init__(self):
        if not self.emoji_table or not self.contraction_table:
            raise ValueError("replacement tables must be non-empty")
        if not 0.0 <= self.english_threshold <= 1.0:
            raise ValueError("english_threshold must lie in [0, 1]")

    @property
    def placeholders(self) -> tuple:
        return (
            self.placeholder_user,
            self.placeholder_url,
            self.placeholder_hashtag,
        ) + tuple(self.extra_placeholders)


class NormalizedText(str):
    """A string known to be a fixed point of ``normalize``."""

    __slots__ = ()

    @property
    def text(self) -> str:
        return str(self)


class _CompiledRules:
    """Derived lookup structures for one config, built once and reused."""

    def __init__(self, config: NormalizerConfig):
        self.placeholders = frozenset(config.placeholders)
        self.fold_map = {ord(k): v for k, v in config.folding_table.items()}
        self.emoji_first_chars = frozenset(k[0] for k in config.emoji_table)
        self.emoji_max_len = max(len(k) for k in config.emoji_table)
        # longest clitic first so "n't" wins over a bare "'t"-style suffix
        self.clitics = sorted(config.contraction_table.items(), key=lambda kv: -len(kv[0]))


_COMPILED: "WeakKeyDictionary[NormalizerConfig, _CompiledRules]" = WeakKeyDictionary()


def _compiled(config: NormalizerConfig) -> _CompiledRules:
    rules = _COMPILED.get(config)
    if rules is None:
        rules = _CompiledRules(config)
        _COMPILED[config] = rules
    return rules


@lru_cache(maxsize=1)
def default_config() -> NormalizerConfig:
    return NormalizerConfig()


def is_english(text: str, config: NormalizerConfig | None = None) -> bool:
    """Heuristic language filter based on stopword density.

    A text is kept when at least ``english_threshold`` of its whitespace
    tokens are English stopwords. Texts under 3 tokens carry too little
    signal and default to True.
    """
    if config is None:
        config = default_config()
    tokens = text.split()
    if len(tokens) < 3:
        return True
    hits = sum(
        1 for t in tokens if t.strip(string.punctuation).lower() in config.english_stopword_set
    )
    return hits / len(tokens) >= config.english_threshold


def _map_tokens(text: str, fn) -> str:
    # preserves the original whitespace between tokens
    parts = _WS_SPLIT_RE.split(text)
    return "".join(p if i % 2 else fn(p) for i, p in enumerate(parts))


def replace_entities(text: str, config: NormalizerConfig | None = None) -> str:
    """Replace mention, hashtag and URL tokens with placeholder tokens.

    A mention is a whitespace token starting with "@", a hashtag one starting
    with "#" (both need at least one following character), and a URL any token
    with an http(s) scheme or "www." prefix, case-insensitively.
    """
    if config is None:
        config = default_config()

    def sub(token: str) -> str:
        if len(token) > 1 and token[0] == "@":
            return config.placeholder_user
        if len(token) > 1 and token[0] == "#":
            return config.placeholder_hashtag
        if token.lower().startswith(_URL_PREFIXES):
            return config.placeholder_url
        return token

    return _map_tokens(text, sub)


def _lowercase_exempt(text: str, rules: _CompiledRules) -> str:
    def sub(token: str) -> str:
        return token if token in rules.placeholders else token.lower()

    return _map_tokens(text, sub)


def demojize(text: str, config: NormalizerConfig | None = None) -> str:
    """Replace each known emoji sequence with its ":name:" token.

    Longest sequences match first, replacements are space-separated from
    adjacent non-space text, and unknown emoji pass through unchanged.
    """
    if config is None:
        config = default_config()
    rules = _compiled(config)
    table = config.emoji_table
    out: list[str] = []
    pending_space = False
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in rules.emoji_first_chars:
            for length in range(min(rules.emoji_max_len, n - i), 0, -1):
                name = table.get(text[i : i + length])
                if name is not None:
                    if out and not out[-1].isspace():
                        out.append(" ")
                    out.append(name)
                    pending_space = True
                    i += length
                    break
            else:
                if pending_space and not ch.isspace():
                    out.append(" ")
                out.append(ch)
                pending_space = False
                i += 1
        else:
            if pending_space and not ch.isspace():
                out.append(" ")
            out.append(ch)
            pending_space = False
            i += 1
    return "".join(out)


def _fold_chars(text: str, rules: _CompiledRules) -> str:
    return text.translate(rules.fold_map)


def _split_contractions(text: str, rules: _CompiledRules) -> str:
    def sub(token: str) -> str:
        for clitic, split_form in rules.clitics:
            if token.endswith(clitic) and len(token) > len(clitic):
                return token[: -len(clitic)] + " " + split_form
        return token

    return _map_tokens(text, sub)


def _space_times(text: str) -> str:
    return _TIME_RE.sub(r" \1", text)


def normalize(text: str, config: NormalizerConfig | None = None) -> NormalizedText:
    """Run the full normalization pipeline over one text.

    Stages, in order: entity replacement, lowercasing (placeholders exempt),
    emoji naming, character folding, contraction splitting, time-expression
    spacing, whitespace collapse. The result is a fixed point: normalizing it
    again returns it unchanged.
    """
    if config is None:
        config = default_config()
    rules = _compiled(config)
    text = replace_entities(text, config)
    text = _lowercase_exempt(text, rules)
    text = demojize(text, config)
    text = _fold_chars(text, rules)
    # emoji padding and zero-width deletion can expose mention/URL tokens that
    # were glued to other characters; resolve them now or a second run would
    # produce a different string
    text = replace_entities(text, config)
    text = _split_contractions(text, rules)
    text = _space_times(text)
    text = " ".join(text.split())
    return NormalizedText(text)
