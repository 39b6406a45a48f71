"""The one-sided shift on reduced words and locally constant weights on it.

A finite word is treated as an infinite sequence padded on the right by the
terminal symbol (code ``2p``, written ``_`` in block text).  A depth-q weight
is a table on admissible q-blocks; the padded blocks let the same table
evaluate Birkhoff sums of finite words.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .words import (
    Word,
    _check_rank,
    invert_array,
    letter_code,
    letter_text,
    sample_sphere_array,
    sphere_array,
)

PAD_TEXT = "_"
MAX_DEPTH = 4


class WeightSpecError(ValueError):
    pass


def transition_matrix(p: int) -> np.ndarray:
    """A(a, b) = 0 iff b = a^-1, indexed by letter code."""
    _check_rank(p)
    L = 2 * p
    A = np.ones((L, L), dtype=np.int64)
    for a in range(L):
        A[a, a ^ 1] = 0
    return A


def entropy(p: int) -> float:
    _check_rank(p)
    return math.log(2 * p - 1)


def mu0_cylinder(p: int, w: Word) -> float:
    """Measure of maximal entropy of the cylinder [w]."""
    _check_rank(p)
    n = len(w)
    if n == 0:
        raise ValueError("cylinder of the empty word is the whole space")
    if w.rank_needed > p:
        raise ValueError(f"{w} uses generators beyond rank {p}")
    return 1.0 / (2 * p) / (2 * p - 1) ** (n - 1)


def sample_mu0_path(p: int, n: int, seed) -> Word:
    """First n symbols of a mu0-typical point of the shift."""
    row = sample_sphere_array(p, n, 1, seed)[0]
    return Word(tuple(int(c) for c in row))


def _admissible(block: tuple[int, ...], p: int) -> bool:
    pad = 2 * p
    for x, y in zip(block, block[1:]):
        if x == pad:
            if y != pad:
                return False
        elif y != pad and y == x ^ 1:
            return False
    return True


def all_blocks(p: int, q: int) -> list[tuple[int, ...]]:
    """Admissible q-blocks over letters and the pad, excluding the all-pad block."""
    syms = range(2 * p + 1)
    return [b for b in itertools.product(syms, repeat=q)
            if b[0] != 2 * p and _admissible(b, p)]


def block_text(block: Iterable[int], p: int) -> str:
    return ".".join(PAD_TEXT if c == 2 * p else letter_text(c) for c in block)


def parse_block(text: str, p: int) -> tuple[int, ...]:
    out = []
    for t in text.strip().split("."):
        if t == PAD_TEXT:
            out.append(2 * p)
        else:
            c = letter_code(t)
            if c >= 2 * p:
                raise WeightSpecError(f"letter {t} is beyond rank {p}")
            out.append(c)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Depth-q locally constant f on the padded shift space.

    ``table`` has shape ``(2p+1,) * q`` indexed by symbol codes (the pad is
    code 2p); inadmissible blocks hold NaN and the all-pad block holds 0.
    """

    p: int
    q: int
    table: np.ndarray
    theta: float = 0.5
    name: str = field(default="", compare=False)

    def __post_init__(self):
        _check_rank(self.p)
        if not 1 <= self.q <= MAX_DEPTH:
            raise WeightSpecError(f"depth must be in 1..{MAX_DEPTH}, got {self.q}")
        if not 0 < self.theta < 1:
            raise WeightSpecError("theta must lie in (0, 1)")
        shape = (2 * self.p + 1,) * self.q
        if self.table.shape != shape:
            raise WeightSpecError(f"table shape {self.table.shape} != {shape}")
        self.table.setflags(write=False)

    @property
    def pad(self) -> int:
        return 2 * self.p

    def value(self, block: tuple[int, ...]) -> float:
        return float(self.table[block])

    def padded_block(self, codes: tuple[int, ...], i: int) -> tuple[int, ...]:
        blk = codes[i : i + self.q]
        return blk + (self.pad,) * (self.q - len(blk))

    def letter_blocks(self) -> np.ndarray:
        """Admissible q-blocks made of letters only (the Sigma part)."""
        return sphere_array(self.p, self.q)

    def scaled(self, c: float) -> "WeightFunction":
        return WeightFunction(self.p, self.q, self.table * c, self.theta, self.name)

    def shifted(self, c: float) -> "WeightFunction":
        t = self.table + c
        t[(self.pad,) * self.q] = 0.0
        return WeightFunction(self.p, self.q, t, self.theta, self.name)

    @classmethod
    def from_entries(cls, p: int, q: int, entries: Mapping[str, float],
                     theta: float = 0.5, name: str = "") -> "WeightFunction":
        """Build from ``{"a1.a2": v, ...}``.

        Every admissible letter block of length q must be given.  Padded
        blocks may be given as ``"a1._"`` or by their truncation ``"a1"``;
        otherwise they take the average of f over the admissible letter
        blocks extending the truncation (the mu0 conditional mean).
        """
        _check_rank(p)
        if not 1 <= q <= MAX_DEPTH:
            raise WeightSpecError(f"depth must be in 1..{MAX_DEPTH}, got {q}")
        pad = 2 * p
        table = np.full((pad + 1,) * q, np.nan)
        table[(pad,) * q] = 0.0
        given: dict[tuple[int, ...], float] = {}
        for text, v in entries.items():
            blk = parse_block(text, p)
            if len(blk) < q and pad not in blk:
                blk = blk + (pad,) * (q - len(blk))
            if len(blk) != q or not _admissible(blk, p) or blk[0] == pad:
                raise WeightSpecError(f"block {text!r} is not an admissible {q}-block")
            if blk in given:
                raise WeightSpecError(f"block {text!r} given twice")
            given[blk] = float(v)
        full = [tuple(int(c) for c in row) for row in sphere_array(p, q)]
        missing = [b for b in full if b not in given]
        if missing:
            raise WeightSpecError(
                f"weight table missing {len(missing)} blocks, e.g. {block_text(missing[0], p)}"
            )
        for b in full:
            table[b] = given[b]
        for b in all_blocks(p, q):
            if pad not in b:
                continue
            if b in given:
                table[b] = given[b]
            else:
                j = b.index(pad)
                ext = [f for f in full if f[:j] == b[:j]]
                table[b] = float(np.mean([table[f] for f in ext]))
        return cls(p, q, table, theta, name)


def constant_weight(p: int, c: float = 1.0, theta: float = 0.5) -> WeightFunction:
    return WeightFunction.from_entries(
        p, 1, {letter_text(a): c for a in range(2 * p)}, theta, name=f"constant({c:g})"
    )


def tree_length_weight(p: int, lengths, theta: float = 0.5) -> WeightFunction:
    """Displacement on the Cayley tree with edge length ``lengths[i]`` for a_{i+1}.

    With base point o at a vertex, d(o, x o) is the sum of the edge lengths
    along the reduced word of x, i.e. the depth-1 Birkhoff sum.
    """
    lengths = [float(x) for x in lengths]
    if len(lengths) != p:
        raise WeightSpecError(f"need {p} lengths, got {len(lengths)}")
    if any(not x > 0 for x in lengths):
        raise WeightSpecError("edge lengths must be positive")
    entries = {}
    for i, ell in enumerate(lengths):
        entries[f"a{i + 1}"] = ell
        entries[f"A{i + 1}"] = ell
    return WeightFunction.from_entries(
        p, 1, entries, theta, name="tree(" + ",".join(f"{x:g}" for x in lengths) + ")"
    )


def symmetrize_depth1(f: WeightFunction) -> WeightFunction:
    """Replace f(a) by (f(a) + f(a^-1)) / 2; only defined tablewise for depth 1."""
    if f.q != 1:
        raise WeightSpecError("tablewise symmetrization needs a depth-1 weight")
    t = f.table.copy()
    for a in range(2 * f.p):
        t[a] = 0.5 * (f.table[a] + f.table[a ^ 1])
    return WeightFunction(f.p, 1, t, f.theta, f.name + "-sym")


def weight_from_spec(p: int, spec: Mapping) -> WeightFunction:
    """Weight from a config mapping (``kind`` = tree | table | constant)."""
    kind = spec.get("kind")
    theta = float(spec.get("theta", 0.5))
    if kind == "tree":
        return tree_length_weight(p, spec["lengths"], theta)
    if kind == "constant":
        return constant_weight(p, float(spec.get("value", 1.0)), theta)
    if kind == "table":
        q = int(spec["depth"])
        entries: dict[str, float] = {}
        for e in spec["entries"]:
            if e["block"] in entries:
                raise WeightSpecError(f"block {e['block']!r} given twice")
            entries[e["block"]] = float(e["value"])
        return WeightFunction.from_entries(p, q, entries, theta,
                                           name=spec.get("name", f"table(q={q})"))
    raise WeightSpecError(f"unknown weight kind {kind!r}")


def birkhoff(f: WeightFunction, w: Word) -> float:
    """f^n(w) = sum of f over the n shifts of w (padded), n = |w|."""
    codes = w.codes
    if any(c >= f.pad for c in codes):
        raise ValueError(f"{w} uses generators beyond rank {f.p}")
    return sum(f.table[f.padded_block(codes, i)] for i in range(len(codes)))


def birkhoff_array(f: WeightFunction, arr: np.ndarray) -> np.ndarray:
    """Row-wise Birkhoff sums of an ``(N, n)`` array of letter codes."""
    N, n = arr.shape
    if n == 0:
        return np.zeros(N)
    base = f.pad + 1
    padded = np.full((N, n + f.q - 1), f.pad, dtype=np.int64)
    padded[:, :n] = arr
    idx = np.zeros((N, n), dtype=np.int64)
    for j in range(f.q):
        idx = idx * base + padded[:, j : j + n]
    vals = f.table.ravel()[idx]
    return vals.sum(axis=1)


def check_symmetry_A2(f: WeightFunction, n_max: int) -> float:
    """max |F(x) - F(x^-1)| over all x with 1 <= |x| <= n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    worst = 0.0
    for n in range(1, n_max + 1):
        arr = sphere_array(f.p, n)
        d = np.abs(birkhoff_array(f, arr) - birkhoff_array(f, invert_array(arr)))
        worst = max(worst, float(d.max()))
    return worst


def holder_seminorm(f: WeightFunction) -> float:
    """|f|_theta for a locally constant f, blocks starting with the pad excluded.

    Two blocks first differing at position j are at distance theta^j.
    """
    blocks = all_blocks(f.p, f.q)
    best = 0.0
    for j in range(f.q):
        groups: dict[tuple, dict[int, list[float]]] = {}
        for b in blocks:
            groups.setdefault(b[:j], {}).setdefault(b[j], []).append(f.value(b))
        for by_sym in groups.values():
            if len(by_sym) < 2:
                continue
            hi = {c: max(v) for c, v in by_sym.items()}
            lo = {c: min(v) for c, v in by_sym.items()}
            for c, c2 in itertools.permutations(by_sym, 2):
                best = max(best, (hi[c] - lo[c2]) / f.theta**j)
    return best


def mean_over_mu0(f: WeightFunction) -> float:
    """Integral of f against mu0: letter blocks all have equal cylinder mass."""
    blocks = f.letter_blocks()
    vals = [f.value(tuple(int(c) for c in b)) for b in blocks]
    mass = 1.0 / (2 * f.p) / (2 * f.p - 1) ** (f.q - 1)
    return math.fsum(v * mass for v in vals)
