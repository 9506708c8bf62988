"""Prefix-free codes: Huffman construction, Kraft and prefix checks, block codes.

Distributions are mappings ``outcome -> probability`` with rational (or
integer-weight) masses.  Huffman merges run on integer weights obtained by
scaling to a common denominator, so ties are decided exactly and the
resulting code is reproducible.  Ties are broken by the smallest outcome
index (outcomes are ranked by sorted order), which coincides with comparing
the merged outcome sets lexicographically since they are disjoint.
"""
from __future__ import annotations

import csv
import heapq
import io
import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from .dyadic import DyadicRational, log2

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"
MAX_BLOCK_SUPPORT = 10**6


class CodingError(ValueError):
    pass


def _ordered(outcomes: Iterable[Hashable]) -> list:
    items = list(outcomes)
    try:
        return sorted(items)
    except TypeError:
        return sorted(items, key=repr)


def integer_weights(dist: Mapping[Hashable, Fraction | int]) -> dict:
    """Proportional integer weights over a common denominator; integer input is kept as is."""
    if all(type(v) is int for v in dist.values()):
        if any(v < 0 for v in dist.values()):
            raise CodingError("negative probability")
        return dict(dist)
    fracs = {k: Fraction(v) for k, v in dist.items()}
    if any(v < 0 for v in fracs.values()):
        raise CodingError("negative probability")
    den = math.lcm(*(v.denominator for v in fracs.values())) if fracs else 1
    return {k: int(v * den) for k, v in fracs.items()}


@dataclass(frozen=True)
class Code:
    """A map from outcomes to words over ``{0..sigma-1}`` (digits as characters)."""

    sigma: int
    codewords: dict

    def __getitem__(self, outcome):
        return self.codewords[outcome]

    def lengths(self) -> dict:
        return {k: len(w) for k, w in self.codewords.items()}

    def expected_length(self, dist: Mapping) -> Fraction:
        return sum((Fraction(p) * len(self.codewords[k]) for k, p in dist.items() if p), Fraction(0))

    def decode(self, text: str) -> list:
        """Split a concatenation of codewords back into outcomes."""
        inverse = {w: k for k, w in self.codewords.items()}
        out, start = [], 0
        for end in range(1, len(text) + 1):
            if text[start:end] in inverse:
                out.append(inverse[text[start:end]])
                start = end
        if start != len(text):
            raise CodingError(f"trailing symbols {text[start:]!r} do not form a codeword")
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "codeword"])
        for k in _ordered(self.codewords):
            w.writerow([k, self.codewords[k]])
        return buf.getvalue()


def huffman_build(dist: Mapping[Hashable, Fraction | int], sigma: int = 2) -> Code:
    """Optimal prefix-free ``sigma``-ary code for ``dist``.

    Zero-probability outcomes still get codewords.  A single outcome gets the
    empty codeword.
    """
    if sigma < 2 or sigma > len(DIGITS):
        raise CodingError(f"alphabet size must be in [2, {len(DIGITS)}]")
    if not dist:
        raise CodingError("empty distribution")
    outcomes = _ordered(dist)
    if len(outcomes) == 1:
        return Code(sigma, {outcomes[0]: ""})
    weights = integer_weights(dist)
    # heap items: (weight, smallest index, node id); node id indexes `children`
    heap = [(weights[o], i, i) for i, o in enumerate(outcomes)]
    children: list[list[int]] = [[] for _ in outcomes]
    dummies = (sigma - 1 - (len(outcomes) - 1) % (sigma - 1)) % (sigma - 1)
    for d in range(dummies):
        idx = len(outcomes) + d
        heap.append((0, idx, len(children)))
        children.append([])
    heapq.heapify(heap)
    while len(heap) > 1:
        group = [heapq.heappop(heap) for _ in range(sigma)]
        children.append([g[2] for g in group])
        heapq.heappush(heap, (sum(g[0] for g in group), min(g[1] for g in group), len(children) - 1))
    words: dict = {}
    stack = [(heap[0][2], "")]
    while stack:
        node, prefix = stack.pop()
        if node < len(outcomes):
            words[outcomes[node]] = prefix
        for digit, child in enumerate(children[node]):
            stack.append((child, prefix + DIGITS[digit]))
    return Code(sigma, {o: words[o] for o in outcomes})


def huffman_lengths(dist: Mapping, sigma: int = 2) -> dict:
    return huffman_build(dist, sigma).lengths()


def expected_length(code: Code, dist: Mapping) -> Fraction:
    return code.expected_length(dist)


def entropy(dist: Mapping, base: float = 2.0) -> float:
    total = Fraction(0)
    acc = 0.0
    for p in dist.values():
        p = Fraction(p)
        total += p
        if p:
            acc -= float(p) * log2(p)
    if total != 1:
        raise CodingError(f"probabilities sum to {total}, not 1")
    return acc / math.log2(base)


def kraft_sum(code: Code) -> Fraction:
    return sum((Fraction(1, code.sigma ** len(w)) for w in code.codewords.values()), Fraction(0))


def kraft_check(code: Code) -> bool:
    return kraft_sum(code) <= 1


def find_prefix_violation(code: Code) -> tuple | None:
    """A pair ``(a, b)`` whose codeword for ``a`` is a prefix of ``b``'s, or None."""
    items = sorted(code.codewords.items(), key=lambda kv: kv[1])
    for (ka, wa), (kb, wb) in zip(items, items[1:]):
        if wb.startswith(wa):
            return (ka, kb)
    return None


def is_prefix_free(code: Code) -> bool:
    return find_prefix_violation(code) is None


def product_distribution(dist: Mapping, t: int) -> dict:
    out = {}
    items = [(k, Fraction(v)) for k, v in dist.items() if v]
    for combo in itertools.product(items, repeat=t):
        p = Fraction(1)
        for _, q in combo:
            p *= q
        out[tuple(k for k, _ in combo)] = p
    return out


def block_code(dist: Mapping, t: int, sigma: int = 2) -> tuple[Code, dict]:
    """Huffman code over ``t`` independent copies; returns ``(code, product distribution)``."""
    if t < 1:
        raise CodingError("block length must be at least 1")
    support = sum(1 for v in dist.values() if v)
    if support ** t > MAX_BLOCK_SUPPORT:
        raise CodingError(f"block support {support}^{t} exceeds {MAX_BLOCK_SUPPORT}")
    prod = product_distribution(dist, t)
    return huffman_build(prod, sigma), prod


def block_expected_length(dist: Mapping, t: int, sigma: int = 2) -> Fraction:
    """Expected length of the ``t``-copy Huffman code, using integer weights throughout."""
    if t < 1:
        raise CodingError("block length must be at least 1")
    weights = {k: w for k, w in integer_weights(dist).items() if w}
    if len(weights) ** t > MAX_BLOCK_SUPPORT:
        raise CodingError(f"block support {len(weights)}^{t} exceeds {MAX_BLOCK_SUPPORT}")
    prod = {(): 1}
    for _ in range(t):
        prod = {key + (k,): w * v for key, w in prod.items() for k, v in weights.items()}
    lengths = huffman_build(prod, sigma).lengths()
    total = sum(weights.values()) ** t
    return Fraction(sum(w * lengths[key] for key, w in prod.items()), total)


def per_copy_length(dist: Mapping, t: int, sigma: int = 2) -> Fraction:
    return block_expected_length(dist, t, sigma) / t


def random_prefix_code(outcomes: Iterable, sigma: int, rng: random.Random) -> Code:
    """A prefix-free code from a random ``sigma``-ary splitting of the outcomes."""
    outcomes = _ordered(outcomes)
    words = {}
    stack = [(outcomes, "")]
    while stack:
        group, prefix = stack.pop()
        if len(group) == 1:
            words[group[0]] = prefix
            continue
        group = group[:]
        rng.shuffle(group)
        parts = rng.randint(2, min(sigma, len(group)))
        cuts = sorted(rng.sample(range(1, len(group)), parts - 1))
        for digit, (a, b) in enumerate(zip([0] + cuts, cuts + [len(group)])):
            stack.append((group[a:b], prefix + DIGITS[digit]))
    return Code(sigma, words)


# CSV helpers -----------------------------------------------------------------

def dist_to_csv(dist: Mapping) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["outcome", "numerator", "log2_denominator"])
    for k in _ordered(dist):
        d = DyadicRational.from_fraction(Fraction(dist[k]))
        w.writerow([k, d.numerator, d.log2_denominator])
    return buf.getvalue()


def dist_from_csv(text: str) -> dict:
    rows = csv.DictReader(io.StringIO(text))
    out = {}
    for row in rows:
        key = row["outcome"]
        try:
            key = int(key, 0)
        except ValueError:
            pass
        out[key] = Fraction(int(row["numerator"]), 1 << int(row["log2_denominator"]))
    return out
