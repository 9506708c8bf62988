"""The randomized decision-tree protocol for a spectral sample.

Given a tree ``T`` computing ``f`` and a set ``S`` with ``fhat(S) != 0``, the
encoder walks down from the root.  At a node querying ``x_i`` it emits ``1``
if ``i`` is in the remaining set and ``0`` otherwise, removes ``i``, and then
either emits ``BOT`` (remaining set empty) or steps to the left/right child,
emitting ``0``/``1``.  The child is chosen with probability proportional to
``ghat(S')**2`` versus ``hhat(S')**2``.  The empty set encodes to the empty
transcript.

Branch weights are exact integers (squares of ``2**n``-scaled
coefficients), and a branch is drawn with ``random.Random.randrange`` over
their sum, so every reachable transcript has exactly the intended
probability.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Iterable

import numpy as np

from .boolfn import Spectrum, spectral_entropy, weak_entropy_bound
from .checks import Check, eq, leq
from .dtree import DecisionTree, Leaf, Node, TreeSpectra, expected_depth, max_read, tree_covariance

LOG2_3 = math.log2(3)


class NotInSupportError(ValueError):
    """The protocol is only defined on sets with a nonzero Fourier coefficient."""


class TranscriptError(ValueError):
    """Transcript does not describe a walk in the tree."""


class Symbol(IntEnum):
    ZERO = 0
    ONE = 1
    BOT = 2


_CHARS = "01#"


@dataclass(frozen=True)
class Transcript:
    symbols: tuple[Symbol, ...] = ()

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        if not set(symbols) <= {0, 1, 2}:
            raise TranscriptError(f"symbols must be 0, 1 or 2 (BOT): {symbols}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def _trusted(cls, symbols: tuple) -> "Transcript":
        t = object.__new__(cls)
        object.__setattr__(t, "symbols", symbols)
        return t

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return self.text()

    def text(self) -> str:
        return "".join(_CHARS[s] for s in self.symbols)

    @classmethod
    def from_text(cls, text: str) -> "Transcript":
        try:
            return cls(tuple(Symbol(_CHARS.index(c)) for c in text.strip()))
        except ValueError:
            raise TranscriptError(f"transcript text may only contain 0, 1 and #: {text!r}") from None

    def to_bytes(self) -> bytes:
        """2 bits per symbol, first symbol in the high bits; padded with ``0b11``."""
        out = bytearray()
        for k in range(0, len(self.symbols), 4):
            chunk = list(self.symbols[k:k + 4]) + [3] * (4 - len(self.symbols[k:k + 4]))
            out.append((chunk[0] << 6) | (chunk[1] << 4) | (chunk[2] << 2) | chunk[3])
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Transcript":
        symbols = []
        for byte in data:
            for shift in (6, 4, 2, 0):
                code = (byte >> shift) & 3
                if code == 3:
                    return cls(tuple(symbols))
                symbols.append(Symbol(code))
        return cls(tuple(symbols))

    def is_well_formed(self) -> bool:
        s = self.symbols
        if not s:
            return True
        return (len(s) % 2 == 0 and s[-1] == Symbol.BOT
                and all(x != Symbol.BOT for x in s[:-1]))


@dataclass
class PathProbabilities:
    p: dict[int, Fraction]
    expected_path_len: Fraction
    expected_transcript_len: Fraction


class TreeProtocol:
    """Encoder/decoder bound to one tree, sharing its subtree spectra."""

    def __init__(self, tree: DecisionTree, n: int | None = None, spectra: TreeSpectra | None = None):
        self.spectra = spectra or TreeSpectra(tree, n)
        self.tree = tree
        self.n = self.spectra.n
        self._lists: dict[int, list[int]] = {}
        self._steps: dict[int, tuple] = {}

    def _step(self, node: Node) -> tuple:
        """``(bit, left, right, left coefficients, right coefficients)`` for a node."""
        key = id(node)
        step = self._steps.get(key)
        if step is None:
            if not isinstance(node, Node):
                raise AssertionError("walk reached a leaf with a nonempty remaining set")
            step = (1 << (node.var - 1), node.left, node.right,
                    self._coeffs(node.left), self._coeffs(node.right))
            self._steps[key] = step
        return step

    def _coeffs(self, node: DecisionTree) -> list[int]:
        key = id(node)
        if key not in self._lists:
            self._lists[key] = self.spectra.scaled(node).tolist()
        return self._lists[key]

    @property
    def spectrum(self) -> Spectrum:
        return self.spectra.spectrum()

    def in_support(self, mask: int) -> bool:
        return 0 <= mask < (1 << self.n) and self._coeffs(self.tree)[mask] != 0

    # encode / decode ----------------------------------------------------------

    def encode(self, mask: int, seed: int | random.Random = 0) -> Transcript:
        # the empty set is encoded as nothing, whatever fhat(empty) is
        if mask == 0:
            return Transcript()
        if not self.in_support(mask):
            raise NotInSupportError(f"fhat({mask:#b}) = 0; the set is not in the spectral support")
        rng = seed if isinstance(seed, random.Random) else random.Random(seed)
        out: list[int] = []
        node = self.tree
        remaining = mask
        while True:
            bit, left, right, G, H = self._step(node)
            out.append(1 if remaining & bit else 0)
            remaining &= ~bit
            if not remaining:
                out.append(Symbol.BOT)
                return Transcript._trusted(tuple(out))
            g, h = G[remaining], H[remaining]
            wg, wh = g * g, h * h
            if wg and wh:
                go_right = rng.randrange(wg + wh) >= wg
            elif wg or wh:
                go_right = not wg
            else:
                raise AssertionError("both branches have zero weight")
            out.append(1 if go_right else 0)
            node = right if go_right else left

    def decode(self, transcript: Transcript | str) -> int:
        return decode(self.tree, transcript)

    # exact distributions ------------------------------------------------------

    def transcript_distribution(self, mask: int) -> dict[Transcript, Fraction]:
        """Every transcript ``encode(mask, .)`` can produce, with its exact probability."""
        if not self.in_support(mask):
            raise NotInSupportError(f"fhat({mask:#b}) = 0")
        if mask == 0:
            return {Transcript(): Fraction(1)}
        out: dict[Transcript, Fraction] = {}
        # probabilities kept as unreduced integer pairs until the end
        stack = [(self.tree, mask, (), 1, 1)]
        while stack:
            node, remaining, prefix, num, den = stack.pop()
            bit = 1 << (node.var - 1)
            prefix = prefix + (1 if remaining & bit else 0,)
            remaining &= ~bit
            if not remaining:
                t = Transcript._trusted(prefix + (2,))
                out[t] = out.get(t, 0) + Fraction(num, den)
                continue
            _, _, _, G, H = self._step(node)
            g, h = G[remaining], H[remaining]
            total = g * g + h * h
            if g:
                stack.append((node.left, remaining, prefix + (0,), num * g * g, den * total))
            if h:
                stack.append((node.right, remaining, prefix + (1,), num * h * h, den * total))
        return out

    def support(self) -> list[int]:
        return [int(m) for m in np.flatnonzero(self.spectra.scaled(self.tree))]

    def expected_length_by_enumeration(self) -> Fraction:
        """``sum_S fhat(S)^2 E[|P(T,S)|]`` over the full branching expansion."""
        scale = 1 << (2 * self.n)
        coeffs = self._coeffs(self.tree)
        total = Fraction(0)
        for mask in self.support():
            if mask == 0:
                continue
            dist = self.transcript_distribution(mask)
            mean_len = sum((p * len(t) for t, p in dist.items()), Fraction(0))
            total += Fraction(coeffs[mask] ** 2, scale) * mean_len
        return total

    def path_probabilities(self) -> PathProbabilities:
        """Exact ``p_i(T)``: probability that ``x_i`` lies on the encoded path for ``S ~ fhat^2``.

        ``p_i(T) = Var[f]`` if ``x_i`` is the root, ``(p_i(T0) + p_i(T1))/2``
        if it occurs lower down, and 0 otherwise.
        """
        scale = 1 << (2 * self.n)
        memo: dict[int, dict[int, Fraction]] = {}

        def probs(node: DecisionTree) -> dict[int, Fraction]:
            if isinstance(node, Leaf):
                return {}
            key = id(node)
            if key not in memo:
                left, right = probs(node.left), probs(node.right)
                p = {i: (left.get(i, Fraction(0)) + right.get(i, Fraction(0))) / 2
                     for i in left.keys() | right.keys()}
                p[node.var] = Fraction(self.spectra.variance_scaled(node), scale)
                memo[key] = p
            return memo[key]

        p = dict(sorted(probs(self.tree).items()))
        path_len = sum(p.values(), Fraction(0))
        return PathProbabilities(p, path_len, 2 * path_len)


def path_of(tree: DecisionTree, transcript: Transcript | str) -> list[int]:
    """Variables visited by a transcript's walk."""
    if isinstance(transcript, str):
        transcript = Transcript.from_text(transcript)
    s = transcript.symbols
    node, out = tree, []
    for pos in range(0, len(s), 2):
        if not isinstance(node, Node):
            break
        out.append(node.var)
        if pos + 1 >= len(s) or s[pos + 1] == Symbol.BOT:
            break
        node = node.left if s[pos + 1] == Symbol.ZERO else node.right
    return out


def decode(tree: DecisionTree, transcript: Transcript | str) -> int:
    """Recover the encoded set from a transcript by walking ``tree``."""
    if isinstance(transcript, str):
        transcript = Transcript.from_text(transcript)
    s = transcript.symbols
    if not s:
        return 0
    node, mask, pos = tree, 0, 0
    while True:
        if not isinstance(node, Node):
            raise TranscriptError(f"transcript descends past a leaf at symbol {pos}")
        if pos >= len(s):
            raise TranscriptError("transcript is truncated")
        if s[pos] == Symbol.BOT:
            raise TranscriptError(f"BOT in a membership slot (symbol {pos})")
        if s[pos] == Symbol.ONE:
            mask |= 1 << (node.var - 1)
        if pos + 1 >= len(s):
            raise TranscriptError("transcript is truncated")
        step = s[pos + 1]
        pos += 2
        if step == Symbol.BOT:
            if pos != len(s):
                raise TranscriptError("symbols after the terminating BOT")
            return mask
        node = node.left if step == Symbol.ZERO else node.right


def encode(tree: DecisionTree, mask: int, seed: int = 0, n: int | None = None) -> Transcript:
    return TreeProtocol(tree, n).encode(mask, seed)


def path_probabilities(tree: DecisionTree, n: int | None = None) -> PathProbabilities:
    return TreeProtocol(tree, n).path_probabilities()


def round_trip(protocol: TreeProtocol, seeds: Iterable[int]) -> tuple[bool, tuple | None]:
    """``decode(encode(S)) == S`` and transcript shape, for every supported ``S`` and seed.

    Each seed drives one generator that encodes the whole support in mask
    order.  Returns ``(ok, witness)`` with witness ``(seed, mask, text)``.
    """
    decoded: dict[tuple, int] = {}
    masks = protocol.support()
    for seed in seeds:
        rng = random.Random(seed)
        for mask in masks:
            t = protocol.encode(mask, rng)
            got = decoded.get(t.symbols)
            if got is None:
                got = decoded[t.symbols] = protocol.decode(t)
                if not t.is_well_formed() or (len(t) == 0) != (mask == 0) \
                        or len(t) != 2 * len(path_of(protocol.tree, t)):
                    return False, (seed, mask, t.text())
            if got != mask:
                return False, (seed, mask, t.text())
    return True, None


def check_almost_prefix_free(protocol: TreeProtocol) -> tuple[bool, tuple | None]:
    """Enumerate all reachable transcripts and look for prefix collisions.

    Returns ``(ok, witness)``; the witness is ``(mask_a, text_a, mask_b, text_b)``
    with ``text_a`` a prefix of ``text_b``, or a transcript shared by two sets.
    The empty transcript of the empty set is exempt.
    """
    owner: dict[tuple, int] = {}
    for mask in protocol.support():
        for t in protocol.transcript_distribution(mask):
            if mask and not t.symbols:
                return False, (mask, "", None, None)
            if t.symbols in owner and owner[t.symbols] != mask:
                return False, (owner[t.symbols], t.text(), mask, t.text())
            owner[t.symbols] = mask
    words = sorted(w for w in owner if w)
    for a, b in zip(words, words[1:]):
        if b[:len(a)] == a:
            ta, tb = Transcript(a).text(), Transcript(b).text()
            return False, (owner[a], ta, owner[b], tb)
    return True, None


# ---------------------------------------------------------------------------
# Bound reports


@dataclass
class MainLemmaReport:
    p: dict[int, Fraction]
    bound: dict[int, Fraction]
    inf: dict[int, Fraction]
    cov: dict[int, Fraction]

    @property
    def slack(self) -> dict[int, Fraction]:
        return {i: self.bound[i] - self.p[i] for i in self.p}

    @property
    def ok(self) -> bool:
        return all(s >= 0 for s in self.slack.values())


def check_main_lemma(tree: DecisionTree, n: int | None = None, protocol: TreeProtocol | None = None) -> MainLemmaReport:
    """Per-variable ``p_i(T) <= 2 Inf_i[f] + Cov_i[T]``, exactly."""
    protocol = protocol or TreeProtocol(tree, n)
    spec = protocol.spectrum
    cov = tree_covariance(tree, spectra=protocol.spectra).per_variable
    p = protocol.path_probabilities().p
    inf = {i: spec.influence(i) for i in range(1, protocol.n + 1)}
    bound = {i: 2 * inf[i] + cov.get(i, Fraction(0)) for i in p}
    return MainLemmaReport(p=p, bound=bound, inf=inf, cov=cov)


@dataclass
class EntropyBoundReport:
    n: int
    k: int
    expected_depth: Fraction
    total_influence: Fraction
    variance: Fraction
    covariance: Fraction
    entropy: float
    expected_length: Fraction
    checks: list[Check] = field(default_factory=list)
    # length strictly below 4 Inf + 2 Cov; recorded, never a failure
    strict_length_bound: bool = False

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.holds]


def entropy_bound_report(tree: DecisionTree, n: int | None = None, protocol: TreeProtocol | None = None,
                         tol: float = 1e-9, expected_length: Fraction | None = None) -> EntropyBoundReport:
    """Assemble the length and entropy bounds for one tree.

    ``expected_length`` defaults to the exact path-probability value; pass the
    enumerated value to run the chain from transcripts instead.
    """
    protocol = protocol or TreeProtocol(tree, n)
    spec = protocol.spectrum
    inf = spec.total_influence()
    var = spec.variance()
    cov = tree_covariance(tree, spectra=protocol.spectra).total
    d = expected_depth(tree)
    k = max_read(tree)
    H = spectral_entropy(spec)
    E = protocol.path_probabilities().expected_transcript_len if expected_length is None else expected_length
    fi = float(inf)
    checks = [
        leq("length <= 4 Inf + 2 Cov", E, 4 * inf + 2 * cov),
        leq("length <= (2k+2) Inf", E, (2 * k + 2) * inf),
        leq("length <= 4 Inf + 2 d", E, 4 * inf + 2 * d),
        leq("H <= log2(3) length + 2 Inf", H, LOG2_3 * float(E) + 2 * fi, tol),
        leq("H <= (2 + (2k+2) log2 3) Inf", H, (2 + (2 * k + 2) * LOG2_3) * fi, tol),
        leq("H <= 9k Inf", H, 9 * k * fi, tol),
        leq("H <= log2(3)(ceil(log n) Inf + 1)", H, weak_entropy_bound(protocol.n, inf), tol),
    ]
    if inf >= 1:
        checks.append(leq("length <= 6d Inf", E, 6 * d * inf))
        checks.append(leq("H <= 12d Inf", H, 12 * float(d) * fi, tol))
    return EntropyBoundReport(
        n=protocol.n, k=k, expected_depth=d, total_influence=inf, variance=var,
        covariance=cov, entropy=H, expected_length=E, checks=checks,
        strict_length_bound=E < 4 * inf + 2 * cov,
    )


def length_equals_enumeration(protocol: TreeProtocol) -> Check:
    return eq("path DP length == enumerated length",
              protocol.path_probabilities().expected_transcript_len,
              protocol.expected_length_by_enumeration())
