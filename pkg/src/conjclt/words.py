"""Reduced words in the free group F_p.

Letters are stored as small integer codes so that words can be packed into
numpy arrays for bulk work.  Generator ``a_i`` has code ``2*(i-1)`` and its
inverse ``A_i`` has code ``2*(i-1) + 1``; the inverse of any code is
``code ^ 1``.  Code order gives the letter ordering used for lexicographic
enumeration::

    a1 < A1 < a2 < A2 < ... < ap < Ap

Text format: ``a1``/``A1`` for a letter and its inverse, joined with ``.``;
the identity is written ``e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class Letter(NamedTuple):
    index: int
    sign: int

    @property
    def code(self) -> int:
        return 2 * (self.index - 1) + (0 if self.sign > 0 else 1)

    @classmethod
    def from_code(cls, code: int) -> "Letter":
        return cls(code // 2 + 1, 1 if code % 2 == 0 else -1)

    def inverse(self) -> "Letter":
        return Letter(self.index, -self.sign)

    def __str__(self) -> str:
        return ("a" if self.sign > 0 else "A") + str(self.index)


def inverse_code(code: int) -> int:
    return code ^ 1


def letter_code(text: str) -> int:
    """Parse ``a3`` / ``A3`` into a letter code."""
    if len(text) < 2 or text[0] not in "aA" or not text[1:].isdigit():
        raise ValueError(f"bad letter {text!r}")
    index = int(text[1:])
    if index < 1:
        raise ValueError(f"bad letter {text!r}")
    return Letter(index, 1 if text[0] == "a" else -1).code


def letter_text(code: int) -> str:
    return str(Letter.from_code(code))


def is_reduced(codes: Sequence[int]) -> bool:
    return all(codes[i + 1] != codes[i] ^ 1 for i in range(len(codes) - 1))


@dataclass(frozen=True, slots=True)
class Word:
    """A freely reduced word.  The constructor refuses unreduced input."""

    codes: tuple[int, ...] = ()

    def __post_init__(self):
        codes = tuple(int(c) for c in self.codes)
        if any(c < 0 for c in codes):
            raise ValueError("negative letter code")
        if not is_reduced(codes):
            raise ValueError(f"word is not reduced: {_render(codes)}")
        object.__setattr__(self, "codes", codes)

    @classmethod
    def parse(cls, text: str) -> "Word":
        text = text.strip()
        if text in ("e", ""):
            return cls()
        return cls(tuple(letter_code(t) for t in text.split(".")))

    @classmethod
    def from_letters(cls, letters: Sequence[Letter]) -> "Word":
        return cls(tuple(l.code for l in letters))

    @property
    def letters(self) -> tuple[Letter, ...]:
        return tuple(Letter.from_code(c) for c in self.codes)

    @property
    def rank_needed(self) -> int:
        """Smallest p for which every letter is a generator of F_p."""
        return max((c // 2 + 1 for c in self.codes), default=0)

    def __len__(self) -> int:
        return len(self.codes)

    def __str__(self) -> str:
        return _render(self.codes)

    def __repr__(self) -> str:
        return f"Word({_render(self.codes)!r})"

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __invert__(self) -> "Word":
        return invert(self)

    def rotate(self, i: int) -> "Word":
        """Cyclic rotation (only meaningful for cyclically reduced words)."""
        i %= max(len(self.codes), 1)
        return Word(self.codes[i:] + self.codes[:i])


IDENTITY = Word()


def _render(codes: Sequence[int]) -> str:
    if not codes:
        return "e"
    return ".".join(letter_text(c) for c in codes)


def multiply(u: Word, v: Word) -> Word:
    a, b = u.codes, v.codes
    i = 0
    while i < min(len(a), len(b)) and a[len(a) - 1 - i] == b[i] ^ 1:
        i += 1
    return Word(a[: len(a) - i] + b[i:])


def invert(w: Word) -> Word:
    return Word(tuple(c ^ 1 for c in reversed(w.codes)))


def alphabet_size(p: int) -> int:
    _check_rank(p)
    return 2 * p


def _check_rank(p: int) -> None:
    if not isinstance(p, (int, np.integer)) or p < 2:
        raise ValueError(f"rank must be an integer >= 2, got {p!r}")


def sphere_size(p: int, n: int) -> int:
    """Number of reduced words of length n in F_p."""
    _check_rank(p)
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1
    return 2 * p * (2 * p - 1) ** (n - 1)


def enumerate_sphere(p: int, n: int, prefix: Word | None = None) -> Iterator[Word]:
    """Yield every reduced word of length n, lexicographically.

    If ``prefix`` is given only the words starting with it are produced;
    disjoint prefixes of equal length partition the sphere, which is how
    callers shard the stream across workers.
    """
    _check_rank(p)
    if n < 0:
        raise ValueError("n must be >= 0")
    start = prefix.codes if prefix is not None else ()
    if len(start) > n or any(c >= 2 * p for c in start):
        return
    L = 2 * p
    buf = list(start) + [0] * (n - len(start))

    def rec(pos: int, prev: int) -> Iterator[Word]:
        if pos == n:
            yield Word(tuple(buf))
            return
        for c in range(L):
            if c != prev ^ 1:
                buf[pos] = c
                yield from rec(pos + 1, c)

    prev = start[-1] if start else -2  # -2 ^ 1 == -1, never a code
    yield from rec(len(start), prev)


def _extend(arr: np.ndarray, L: int) -> np.ndarray:
    """Append every non-cancelling letter to each row (lexicographic)."""
    count, n = arr.shape
    last = arr[:, -1].astype(np.int16)
    # the 2p-1 successors of each row, in increasing code order
    r = np.arange(L - 1, dtype=np.int16)
    nxt = r[None, :] + (r[None, :] >= (last ^ 1)[:, None])
    out = np.empty((count, L - 1, n + 1), dtype=np.int8)
    out[:, :, :n] = arr[:, None, :]
    out[:, :, n] = nxt
    return out.reshape(count * (L - 1), n + 1)


def sphere_array(p: int, n: int, prefix: Word | None = None,
                 first_letters: Sequence[int] | None = None) -> np.ndarray:
    """The sphere as an ``(count, n)`` int8 array, rows in lexicographic order.

    ``first_letters`` restricts the first letter (used for the restricted
    spheres of the conjugacy module); ``prefix`` selects a shard.
    """
    _check_rank(p)
    L = 2 * p
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    if prefix is not None and len(prefix) > 0:
        if len(prefix) > n:
            return np.zeros((0, n), dtype=np.int8)
        arr = np.array([prefix.codes], dtype=np.int8)
    else:
        firsts = range(L) if first_letters is None else sorted(first_letters)
        arr = np.array([[c] for c in firsts], dtype=np.int8).reshape(-1, 1)
    while arr.shape[1] < n:
        arr = _extend(arr, L)
    return arr


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_sphere_array(p: int, n: int, count: int, seed,
                        first_letters: Sequence[int] | None = None) -> np.ndarray:
    """``count`` independent uniform draws from the (restricted) sphere.

    First letter uniform over the allowed set, then each letter uniform over
    the 2p-1 letters that do not cancel the previous one.  This is the exact
    uniform law, no rejection.
    """
    _check_rank(p)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    L = 2 * p
    out = np.empty((count, n), dtype=np.int8)
    firsts = np.arange(L) if first_letters is None else np.asarray(sorted(first_letters))
    out[:, 0] = firsts[rng.integers(0, len(firsts), size=count)]
    for j in range(1, n):
        r = rng.integers(0, L - 1, size=count).astype(np.int16)
        banned = out[:, j - 1].astype(np.int16) ^ 1
        out[:, j] = r + (r >= banned)
    return out


def sample_uniform_sphere(p: int, n: int, seed) -> Word:
    return Word(tuple(int(c) for c in sample_sphere_array(p, n, 1, seed)[0]))


def words_from_array(arr: np.ndarray) -> list[Word]:
    return [Word(tuple(int(c) for c in row)) for row in arr]


def render_rows(arr: np.ndarray) -> list[str]:
    return [_render(row.tolist()) for row in arr]


def array_is_reduced(arr: np.ndarray) -> np.ndarray:
    if arr.shape[1] < 2:
        return np.ones(arr.shape[0], dtype=bool)
    return np.all(arr[:, 1:] != (arr[:, :-1] ^ 1), axis=1)


def invert_array(arr: np.ndarray) -> np.ndarray:
    return arr[:, ::-1] ^ 1
