"""Exact combinatorics of the free group on ``l`` generators.

Letters are small integers: generator ``i`` is ``2*i`` and its inverse is
``2*i + 1``, so ``c ^ 1`` inverts a letter and integer order is the fixed
total order h1 < h1^-1 < h2 < h2^-1 < ...  A word is a tuple of letters.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptyCore, NotVeryReduced, ParseError

Word = tuple

__all__ = [
    "Word",
    "ConjClass",
    "letter",
    "letter_index",
    "is_inverted",
    "reduce",
    "invert",
    "is_reduced",
    "is_very_reduced",
    "cyclic_reduce",
    "rotations",
    "smallest_period",
    "is_primitive",
    "canonical_class",
    "enumerate_words",
    "count_words",
    "format_word",
    "parse_word",
    "batch_canonical",
    "decode_key",
]


def letter(index: int, inverted: bool = False) -> int:
    if index < 0:
        raise ValueError("generator index must be non-negative")
    return 2 * index + int(inverted)


def letter_index(c: int) -> int:
    return c >> 1


def is_inverted(c: int) -> bool:
    return bool(c & 1)


def reduce(raw: Iterable[int]) -> Word:
    """Freely reduce a sequence of letters."""
    stack: list[int] = []
    for c in raw:
        if stack and stack[-1] == c ^ 1:
            stack.pop()
        else:
            stack.append(c)
    return tuple(stack)


def invert(w: Sequence[int]) -> Word:
    return tuple(c ^ 1 for c in reversed(w))


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i + 1] != w[i] ^ 1 for i in range(len(w) - 1))


def is_very_reduced(w: Sequence[int]) -> bool:
    """Reduced, and the last letter is not the inverse of the first.

    The empty word is not very reduced.
    """
    return len(w) > 0 and is_reduced(w) and w[-1] != w[0] ^ 1


def cyclic_reduce(w: Sequence[int]) -> tuple[Word, Word]:
    """Split a reduced word as ``conjugator . core . conjugator^-1``."""
    w = tuple(w)
    i, j = 0, len(w) - 1
    while i < j and w[j] == w[i] ^ 1:
        i += 1
        j -= 1
    return w[i:j + 1], w[:i]


def _require_very_reduced(w: Sequence[int]) -> None:
    if not is_very_reduced(w):
        raise NotVeryReduced(f"word {tuple(w)} is not very reduced")


def smallest_period(w: Sequence[int]) -> int:
    """Smallest p dividing len(w) such that w is invariant under rotation by p."""
    n = len(w)
    w = tuple(w)
    for p in range(1, n + 1):
        if n % p == 0 and w[p:] + w[:p] == w:
            return p
    return n


def rotations(w: Sequence[int]) -> set[Word]:
    _require_very_reduced(w)
    w = tuple(w)
    return {w[j:] + w[:j] for j in range(len(w))}


def is_primitive(w: Sequence[int]) -> bool:
    """True iff the very reduced word ``w`` is not a proper power."""
    _require_very_reduced(w)
    return smallest_period(w) == len(w)


@dataclass(frozen=True)
class ConjClass:
    canonical: Word
    primitive_root: Word
    power: int

    def key(self, l: int) -> str:
        return format_word(self.canonical, l)


def canonical_class(w: Sequence[int]) -> ConjClass:
    """Canonical representative of the class of ``w`` up to conjugation and inversion."""
    core, _ = cyclic_reduce(reduce(w))
    if not core:
        raise EmptyCore("word is conjugate to the identity")
    inv = invert(core)
    n = len(core)
    canon = min(min(core[j:] + core[:j] for j in range(n)),
                min(inv[j:] + inv[:j] for j in range(n)))
    p = smallest_period(canon)
    return ConjClass(canonical=canon, primitive_root=canon[:p], power=n // p)


def count_words(l: int, max_len: int) -> int:
    """Number of reduced words of length <= max_len on l generators."""
    if max_len < 0:
        return 0
    return 1 + sum(2 * l * (2 * l - 1) ** (k - 1) for k in range(1, max_len + 1))


def enumerate_words(l: int, max_len: int) -> Iterator[Word]:
    """Every reduced word of length <= max_len once, length-then-lexicographic."""
    if l < 1:
        raise ValueError("need at least one generator")
    level: list[Word] = [()]
    yield ()
    letters = range(2 * l)
    for _ in range(max_len):
        nxt = []
        for w in level:
            bad = w[-1] ^ 1 if w else -1
            nxt.extend(w + (c,) for c in letters if c != bad)
        yield from nxt
        level = nxt


_INDEXED = re.compile(r"g(\d+)(')?")


def _alphabet(l: int) -> bool:
    return l <= 26


def format_word(w: Sequence[int], l: int) -> str:
    """``"a b A"`` (capital = inverse) for l <= 26, else ``"g0 g1' g0"``."""
    if _alphabet(l):
        return " ".join(
            string.ascii_uppercase[c >> 1] if c & 1 else string.ascii_lowercase[c >> 1]
            for c in w
        )
    return " ".join(f"g{c >> 1}'" if c & 1 else f"g{c >> 1}" for c in w)


def parse_word(text: str, l: int) -> Word:
    """Inverse of :func:`format_word`; the result is freely reduced.

    Tokens may be separated by whitespace; with the letter alphabet a
    compact form like ``"abA"`` is accepted as well.
    """
    out = []
    for tok in text.split():
        m = _INDEXED.fullmatch(tok)
        if m:
            chars = [(int(m.group(1)), bool(m.group(2)))]
        elif _alphabet(l) and tok.isascii() and tok.isalpha():
            chars = [(string.ascii_lowercase.index(ch.lower()), ch.isupper()) for ch in tok]
        else:
            raise ParseError(f"bad letter token {tok!r}")
        for i, inv in chars:
            if i >= l:
                raise ParseError(f"letter {tok!r} out of range for {l} generators")
            out.append(letter(i, inv))
    return reduce(out)


def batch_canonical(cores: np.ndarray, l: int):
    """Canonical class data for a batch of very reduced words of equal length.

    ``cores`` has shape ``(n, m)``.  Returns ``(keys, period)`` where ``keys``
    are integer encodings (base ``2l``, most significant letter first) of the
    lexicographically least rotation of the word or its inverse, and
    ``period`` is the smallest cyclic period.  Words of equal length share
    a class iff their keys agree.
    """
    cores = np.asarray(cores, dtype=np.int64)
    n, m = cores.shape
    base = 2 * l
    if m * np.log2(base) >= 62:
        raise OverflowError("word too long for integer class keys")
    weights = base ** np.arange(m - 1, -1, -1, dtype=np.int64)
    inv = (cores ^ 1)[:, ::-1]
    best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    rot0 = cores @ weights
    period = np.full(n, m, dtype=np.int64)
    for j in range(m):
        enc = np.roll(cores, -j, axis=1) @ weights
        best = np.minimum(best, enc)
        best = np.minimum(best, np.roll(inv, -j, axis=1) @ weights)
        if j and m % j == 0:
            hit = (enc == rot0) & (period == m)
            period[hit] = j
    return best, period


def decode_key(key: int, m: int, l: int) -> Word:
    base = 2 * l
    out = []
    for _ in range(m):
        key, c = divmod(int(key), base)
        out.append(c)
    return tuple(reversed(out))

