"""Back-translation augmentation with failure detection.

A text is translated into a pivot language and back, cleaned of stuttered
words, re-normalized, and kept only when the round trip looks healthy:
non-empty, of comparable length, mostly ASCII, and actually different from
the original. Every (example, language) pair yields at most one augmented
copy; failures are counted per language instead of aborting the run.
"""

from __future__ import annotations

import json
import logging
import urllib.request
from abc import ABC, abstractmethod
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import groupby

from .normalize import NormalizerConfig, default_config, normalize

logger = logging.getLogger(__name__)

__all__ = [
    "AugmentConfig",
    "AugmentedData",
    "TranslationClient",
    "HttpTranslationClient",
    "ScriptedClient",
    "back_translate",
    "remove_duplicate_words",
    "detect_failed_translation",
    "augment_dataset",
]

DEFAULT_LANGUAGES = frozenset({"es", "de", "fr"})


@dataclass(frozen=True)
class AugmentConfig:
    languages: frozenset = DEFAULT_LANGUAGES
    max_parallel: int = 4
    length_ratio_bounds: tuple = (0.3, 3.0)
    max_nonascii_fraction: float = 0.2

    def __post_init__(self):
        lo, hi = self.length_ratio_bounds
        if not lo < 1 < hi:
            raise ValueError("length_ratio_bounds must straddle 1")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be at least 1")
        if not 0 <= self.max_nonascii_fraction <= 1:
            raise ValueError("max_nonascii_fraction must lie in [0, 1]")
        if any(not lang or not isinstance(lang, str) for lang in self.languages):
            raise ValueError("language codes must be non-empty strings")


def _bounded_map(fn, items, max_parallel: int):
    """Apply fn over items with bounded parallelism; per-item exceptions
    become result values so one failure never hides the others."""

    def guarded(item):
        try:
            return fn(item)
        except Exception as exc:  # noqa: BLE001 - flaky clients, by contract
            return exc

    if max_parallel == 1 or len(items) <= 1:
        return [guarded(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_parallel) as pool:
        return list(pool.map(guarded, items))


class TranslationClient(ABC):
    """Anything that can translate text between two language codes."""

    @abstractmethod
    def translate(self, text: str, source: str, target: str) -> str:
        ...

    def translate_batch(self, requests, max_parallel: int = 4):
        """Translate many (text, source, target) triples; results keep the
        input order and per-item failures come back as exception objects."""
        return _bounded_map(lambda req: self.translate(*req), list(requests),
                            max_parallel)


class HttpTranslationClient(TranslationClient):
    """POSTs {text, source, target} as JSON and expects {"text": ...} back."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def translate(self, text: str, source: str, target: str) -> str:
        payload = json.dumps(
            {"text": text, "source": source, "target": target}
        ).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=payload, headers={"Content-Type": "application/json"}
        )
        with urllib.request.urlopen(request, timeout=self.timeout) as response:
            body = json.load(response)
        return str(body["text"])


class ScriptedClient(TranslationClient):
    """Deterministic client backed by a TSV table of input, lang, output.

    Both legs of a round trip resolve through the same table: the pivot
    language keys the row whichever direction the call goes. Unknown pairs
    raise, which the augmenter records as a failure.
    """

    def __init__(self, path: str):
        self.table: dict[tuple[str, str], str] = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ValueError(
                        f"{path}:{line_no}: expected 3 tab-separated fields"
                    )
                text, lang, output = fields
                self.table[(text, lang)] = output

    def translate(self, text: str, source: str, target: str) -> str:
        pivot = target if source == "en" else source
        try:
            return self.table[(text, pivot)]
        except KeyError:
            raise LookupError(f"no scripted translation for {pivot!r}") from None


def remove_duplicate_words(text: str) -> str:
    """Collapse runs of consecutive identical tokens to one.

    Only adjacent repeats go; "the cat the" keeps both "the"s because
    non-adjacent repetition is usually grammatical, not stutter.
    """
    return " ".join(token for token, _ in groupby(text.split()))


def detect_failed_translation(original: str, roundtrip: str,
                              config: AugmentConfig | None = None) -> bool:
    """True when the round trip is unusable.

    Unusable means: empty, byte-identical to the original (no diversity
    gained), token count out of proportion, or too much non-ASCII text
    (a sign the return leg never happened).
    """
    if config is None:
        config = AugmentConfig()
    if not roundtrip:
        return True
    if roundtrip == original:
        return True
    original_tokens = len(original.split())
    roundtrip_tokens = len(roundtrip.split())
    if original_tokens == 0:
        return True
    lo, hi = config.length_ratio_bounds
    ratio = roundtrip_tokens / original_tokens
    if not lo <= ratio <= hi:
        return True
    nonascii = sum(1 for ch in roundtrip if ord(ch) > 127)
    if nonascii / len(roundtrip) > config.max_nonascii_fraction:
        return True
    return False


def back_translate(text: str, lang: str, client: TranslationClient,
                   normalizer_config: NormalizerConfig | None = None) -> str:
    """Round-trip text through a pivot language, dedup and re-normalize.

    Client failures propagate; callers that tolerate per-item failure
    catch them (augment_dataset does).
    """
    forward = client.translate(text, "en", lang)
    back = client.translate(forward, lang, "en")
    return str(normalize(remove_duplicate_words(back), normalizer_config))


class AugmentedData(list):
    """Augmented examples plus per-language failure accounting."""

    def __init__(self, examples=()):
        super().__init__(examples)
        self.failures: Counter = Counter()
        self.attempted: int = 0


def augment_dataset(data, config: AugmentConfig | None = None,
                    client: TranslationClient | None = None) -> AugmentedData:
    """One augmented copy per (example, language) pair that survives checks.

    Output keeps the originals first in their given order, then augmented
    copies grouped by language (languages sorted), example order within.
    Deterministic whenever the client is. Augmented copies carry the source
    example's label and augmented=True, so split() can keep them out of
    test data.
    """
    if config is None:
        config = AugmentConfig()
    if client is None:
        raise ValueError("a translation client is required")
    data = list(data)
    result = AugmentedData(data)
    if not data:
        return result

    languages = sorted(config.languages)
    tasks = [(lang, index) for lang in languages for index in range(len(data))]
    result.attempted = len(tasks)

    def run(task):
        lang, index = task
        return back_translate(data[index].text, lang, client)

    outcomes = _bounded_map(run, tasks, config.max_parallel)

    for (lang, index), outcome in zip(tasks, outcomes):
        if isinstance(outcome, Exception):
            result.failures[lang] += 1
            continue
        source = data[index]
        if detect_failed_translation(source.text, outcome, config):
            result.failures[lang] += 1
            continue
        result.append(replace(source, text=outcome, augmented=True))

    for lang in languages:
        if result.failures[lang]:
            logger.info("%s: %d of %d round trips failed",
                        lang, result.failures[lang], len(data))
    return result
