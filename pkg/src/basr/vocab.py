"""Vocabulary, special tokens, and text <-> token-id conversion.

Tokens are whole words of the synthetic language (one symbol per word).
Five special tokens occupy fixed ids 0-4 in the order PAD, UNK, CLS, SEP,
MASK so serialized vocabularies are deterministic. Every regular token
carries a syllable class: tokens sharing a class are homophones, and the
syllable error rate is computed after collapsing tokens to these classes.
Special tokens map to the reserved class -1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import VocabularyError

PAD, UNK, CLS, SEP, MASK = 0, 1, 2, 3, 4
SPECIAL_SYMBOLS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
SPECIAL_IDS = (PAD, UNK, CLS, SEP, MASK)
RESERVED_CLASS = -1


@dataclass(frozen=True)
class Vocabulary:
    """Immutable symbol table; safe to share across threads."""

    symbols: tuple[str, ...]
    syllable_class: tuple[int, ...]  # per token id; -1 for specials
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if self.symbols[: len(SPECIAL_SYMBOLS)] != SPECIAL_SYMBOLS:
            raise VocabularyError("special tokens must occupy ids 0-4 in fixed order")
        if len(set(self.symbols)) != len(self.symbols):
            dupes = {s for s in self.symbols if self.symbols.count(s) > 1}
            raise VocabularyError(f"duplicate symbols: {sorted(dupes)}")
        if len(self.syllable_class) != len(self.symbols):
            raise VocabularyError("syllable_class must cover every token id")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def n_syllable_classes(self) -> int:
        regular = set(self.syllable_class) - {RESERVED_CLASS}
        return len(regular)

    def id_of(self, symbol: str) -> int:
        return self._index.get(symbol, UNK)

    def symbol_of(self, token_id: int) -> str:
        return self.symbols[token_id]

    def is_special(self, token_id: int) -> bool:
        return token_id < len(SPECIAL_SYMBOLS)

    @property
    def regular_ids(self) -> tuple[int, ...]:
        return tuple(range(len(SPECIAL_SYMBOLS), self.size))

    def to_json(self) -> str:
        payload = {
            "symbols": list(self.symbols),
            "specials": {sym: i for sym, i in zip(SPECIAL_SYMBOLS, SPECIAL_IDS)},
            "syllable_classes": {sym: cls for sym, cls in zip(self.symbols, self.syllable_class)},
        }
        return json.dumps(payload, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        try:
            payload = json.loads(text)
            symbols = tuple(payload["symbols"])
            classes = tuple(payload["syllable_classes"][s] for s in symbols)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise VocabularyError(f"malformed vocabulary JSON: {exc}") from exc
        return cls(symbols, classes)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Transcript:
    """Token-id sequence with no special ids (UNK excepted)."""

    token_ids: tuple[int, ...]

    def __post_init__(self):
        banned = {PAD, CLS, SEP, MASK}
        bad = [t for t in self.token_ids if t in banned]
        if bad:
            raise VocabularyError(f"transcript contains special ids: {bad}")

    def __len__(self) -> int:
        return len(self.token_ids)


def from_symbols(regular_symbols: Sequence[str], homophone_groups: Sequence[Sequence[str]] | None = None) -> Vocabulary:
    """Build a vocabulary from regular symbols placed after the specials.

    homophone_groups partition (a subset of) the symbols into shared
    syllable classes; ungrouped symbols each get their own class. Class ids
    are assigned in symbol order, so construction is deterministic.
    """
    regular = list(regular_symbols)
    if len(set(regular)) != len(regular):
        dupes = sorted({s for s in regular if regular.count(s) > 1})
        raise VocabularyError(f"duplicate symbols: {dupes}")
    for sym in regular:
        if sym in SPECIAL_SYMBOLS:
            raise VocabularyError(f"symbol {sym!r} collides with a special token")

    group_of: dict[str, int] = {}
    if homophone_groups:
        known = set(regular)
        seen: set[str] = set()
        for g, group in enumerate(homophone_groups):
            for sym in group:
                if sym not in known:
                    raise VocabularyError(f"homophone group mentions unknown symbol {sym!r}")
                if sym in seen:
                    raise VocabularyError(f"symbol {sym!r} appears in more than one homophone group")
                seen.add(sym)
                group_of[sym] = g

    classes: list[int] = list((RESERVED_CLASS,) * len(SPECIAL_SYMBOLS))
    assigned: dict[object, int] = {}
    for sym in regular:
        key = ("group", group_of[sym]) if sym in group_of else ("solo", sym)
        if key not in assigned:
            assigned[key] = len(assigned)
        classes.append(assigned[key])
    return Vocabulary(SPECIAL_SYMBOLS + tuple(regular), tuple(classes))


def build_vocabulary(
    corpus: Iterable[Sequence[str]], homophone_groups: Sequence[Sequence[str]] | None = None
) -> Vocabulary:
    """Collect distinct symbols from a token-sequence corpus (sorted order)."""
    symbols: set[str] = set()
    empty = True
    for sentence in corpus:
        empty = False
        symbols.update(sentence)
    if empty:
        raise VocabularyError("corpus is empty")
    return from_symbols(sorted(symbols), homophone_groups)


def encode(text: Sequence[str], vocab: Vocabulary) -> Transcript:
    """Map symbols to ids; unknown symbols become UNK. Length preserved."""
    return Transcript(tuple(vocab.id_of(sym) for sym in text))


def decode(t: Transcript | Sequence[int], vocab: Vocabulary) -> list[str]:
    ids = t.token_ids if isinstance(t, Transcript) else t
    return [vocab.symbol_of(i) for i in ids]


def to_syllables(t: Transcript | Sequence[int], vocab: Vocabulary) -> tuple[int, ...]:
    """Collapse each token id to its syllable class (pointwise map)."""
    ids = t.token_ids if isinstance(t, Transcript) else t
    return tuple(vocab.syllable_class[i] for i in ids)
