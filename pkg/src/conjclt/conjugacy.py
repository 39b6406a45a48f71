"""Conjugacy classes of F_p and the length spheres inside them.

Every element of length k+2m in a class with minimal length k is
``w^-1 g w`` for exactly one pair (g, w) with g a cyclic rotation of the
representative and w a reduced word of length m whose first letter is
neither g_1 nor g_k^-1.  Enumeration and sampling go through that pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .words import (
    Word,
    _check_rank,
    _rng,
    invert,
    multiply,
    sample_sphere_array,
    sphere_array,
    words_from_array,
)


class TrivialClassError(ValueError):
    pass


class EnumerationCapError(RuntimeError):
    pass


def cyclically_reduce(w: Word) -> Word:
    c = w.codes
    i, j = 0, len(c) - 1
    while i < j and c[i] == c[j] ^ 1:
        i += 1
        j -= 1
    return Word(c[i : j + 1])


def is_cyclically_reduced(w: Word) -> bool:
    return len(w) == 0 or w.codes[0] != w.codes[-1] ^ 1


@dataclass(frozen=True)
class ConjugacyClass:
    p: int
    representative: Word
    orbit: tuple[Word, ...]

    @property
    def k(self) -> int:
        return len(self.representative)

    def __str__(self) -> str:
        return str(self.representative)


def class_of(w: Word, p: int | None = None) -> ConjugacyClass:
    """Canonical class of w: cyclically reduce, then take the least rotation."""
    if len(w) == 0:
        raise TrivialClassError("trivial class")
    p = w.rank_needed if p is None else p
    p = max(p, 2)
    _check_rank(p)
    if w.rank_needed > p:
        raise ValueError(f"{w} uses generators beyond rank {p}")
    g = cyclically_reduce(w)
    orbit = tuple(sorted({g.rotate(i) for i in range(len(g))}, key=lambda x: x.codes))
    return ConjugacyClass(p, orbit[0], orbit)


def allowed_first_letters(p: int, g: Word) -> list[int]:
    """First letters of w in Gamma_m(g): everything except g_1 and g_k^-1."""
    banned = {g.codes[0], g.codes[-1] ^ 1}
    return [c for c in range(2 * p) if c not in banned]


def restricted_sphere_size(p: int, m: int) -> int:
    if m == 0:
        return 1
    return (2 * p - 2) * (2 * p - 1) ** (m - 1)


def in_restricted_sphere(p: int, g: Word, w: Word) -> bool:
    return len(w) == 0 or w.codes[0] in allowed_first_letters(p, g)


def restricted_sphere_array(p: int, g: Word, m: int) -> np.ndarray:
    if m == 0:
        return np.zeros((1, 0), dtype=np.int8)
    return sphere_array(p, m, first_letters=allowed_first_letters(p, g))


def conjugate(g: Word, w: Word) -> Word:
    return multiply(invert(w), multiply(g, w))


def class_sphere_size(C: ConjugacyClass, m: int) -> int:
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return len(C.orbit)
    return restricted_sphere_size(C.p, m) * len(C.orbit)


def _assemble(g: Word, w: np.ndarray) -> np.ndarray:
    count, m = w.shape
    out = np.empty((count, 2 * m + len(g)), dtype=np.int8)
    out[:, :m] = w[:, ::-1] ^ 1
    out[:, m : m + len(g)] = np.array(g.codes, dtype=np.int8)
    out[:, m + len(g) :] = w
    return out


def class_sphere_array(C: ConjugacyClass, m: int, cap: int | None = None) -> np.ndarray:
    """All of C_{k+2m} as rows, orbit-major then w lexicographic."""
    total = class_sphere_size(C, m)
    if cap is not None and total > cap:
        raise EnumerationCapError(
            f"enumeration cap exceeded: {total} elements > cap {cap}"
        )
    parts = [_assemble(g, restricted_sphere_array(C.p, g, m)) for g in C.orbit]
    return np.concatenate(parts, axis=0)


def enumerate_class_sphere(C: ConjugacyClass, m: int) -> Iterator[Word]:
    if m < 0:
        raise ValueError("m must be >= 0")
    for g in C.orbit:
        for w in words_from_array(restricted_sphere_array(C.p, g, m)):
            yield conjugate(g, w)


def sample_class_sphere_array(C: ConjugacyClass, m: int, count: int, seed) -> np.ndarray:
    """Uniform draws from C_{k+2m}: uniform g in the orbit, then uniform w."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = _rng(seed)
    which = rng.integers(0, len(C.orbit), size=count)
    out = np.empty((count, C.k + 2 * m), dtype=np.int8)
    for i, g in enumerate(C.orbit):
        rows = np.flatnonzero(which == i)
        w = sample_sphere_array(C.p, m, len(rows), rng,
                                first_letters=allowed_first_letters(C.p, g))
        out[rows] = _assemble(g, w)
    return out


def sample_uniform_class_sphere(C: ConjugacyClass, m: int, seed) -> Word:
    row = sample_class_sphere_array(C, m, 1, seed)[0]
    return Word(tuple(int(c) for c in row))


def decompose(C: ConjugacyClass, x: Word) -> tuple[Word, Word]:
    """Inverse of the (g, w) -> w^-1 g w bijection for x in C."""
    m = (len(x) - C.k) // 2
    if m < 0 or len(x) != C.k + 2 * m:
        raise ValueError(f"{x} has the wrong length for class {C}")
    g = Word(x.codes[m : m + C.k])
    w = Word(x.codes[m + C.k :])
    if g not in C.orbit or conjugate(g, w) != x:
        raise ValueError(f"{x} is not in class {C}")
    return g, w
