"""Boolean functions on {-1,1}^n and their uniform-distribution Fourier data.

Conventions
-----------
Variables are 1-indexed.  Input ``x_j`` (``0 <= j < 2**n``) has
``x_{i+1} = -1`` iff bit ``i`` of ``j`` is set.  A subset ``S`` of variables
is an integer mask with bit ``i-1`` standing for variable ``i``; under this
convention ``chi_S(x_j) = (-1)**popcount(j & S)``.

A :class:`TruthTable` stores one bit per input, set iff ``f(x_j) = -1``.
A :class:`Spectrum` stores the integers ``2**n * fhat(S)``, which are exact
for every Boolean function on ``n`` variables.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .dyadic import DyadicRational
from .rng import numpy_rng

MAX_VARS = 20


def mask_of(variables: Iterable[int]) -> int:
    mask = 0
    for i in variables:
        if i < 1:
            raise ValueError(f"variable indices are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def variables_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    """popcount of every mask in ``range(2**n)``."""
    pc = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        pc.reshape(-1, 2, 1 << b)[:, 1, :] += 1
    pc.setflags(write=False)
    return pc


def _check_n(n: int) -> None:
    if not 0 <= n <= MAX_VARS:
        raise ValueError(f"n must be in [0, {MAX_VARS}], got {n}")


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Evaluation table of ``f: {-1,1}^n -> {-1,1}``."""

    n: int
    bits: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} entries, got shape {bits.shape}")
        if bits.size and bits.max() > 1:
            raise ValueError("truth table entries must be 0/1")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    # construction ---------------------------------------------------------

    @classmethod
    def from_values(cls, n: int, values: Sequence[int] | np.ndarray) -> "TruthTable":
        v = np.asarray(values)
        if not np.all((v == 1) | (v == -1)):
            raise ValueError("values must be +1/-1")
        return cls(n, (v == -1).astype(np.uint8))

    @classmethod
    def from_function(cls, n: int, func: Callable[[tuple[int, ...]], int]) -> "TruthTable":
        return cls.from_values(n, [func(input_point(n, j)) for j in range(1 << n)])

    @classmethod
    def constant(cls, n: int, value: int = 1) -> "TruthTable":
        if value not in (1, -1):
            raise ValueError("constant must be +1 or -1")
        return cls(n, np.full(1 << n, value == -1, dtype=np.uint8))

    @classmethod
    def dictator(cls, n: int, i: int = 1) -> "TruthTable":
        return cls.parity(n, mask_of([i]))

    @classmethod
    def parity(cls, n: int, mask: int | None = None) -> "TruthTable":
        mask = (1 << n) - 1 if mask is None else mask
        idx = np.arange(1 << n, dtype=np.int64)
        return cls(n, (popcounts(n)[idx & mask] & 1).astype(np.uint8))

    @classmethod
    def majority(cls, n: int) -> "TruthTable":
        if n % 2 == 0:
            raise ValueError("majority needs an odd number of inputs")
        return cls(n, (popcounts(n) > n // 2).astype(np.uint8))

    @classmethod
    def and_(cls, n: int) -> "TruthTable":
        """-1 iff every input is -1."""
        bits = np.zeros(1 << n, dtype=np.uint8)
        bits[-1] = 1
        return cls(n, bits)

    @classmethod
    def or_(cls, n: int) -> "TruthTable":
        """-1 iff some input is -1."""
        bits = np.ones(1 << n, dtype=np.uint8)
        bits[0] = 0
        return cls(n, bits)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, balanced: bool = False) -> "TruthTable":
        if balanced:
            if n == 0:
                raise ValueError("no balanced function on 0 variables")
            bits = np.zeros(1 << n, dtype=np.uint8)
            bits[rng.permutation(1 << n)[: 1 << (n - 1)]] = 1
            return cls(n, bits)
        return cls(n, rng.integers(0, 2, size=1 << n, dtype=np.uint8))

    # access ---------------------------------------------------------------

    def values(self) -> np.ndarray:
        """+1/-1 values as int64."""
        return 1 - 2 * self.bits.astype(np.int64)

    def __call__(self, x: Sequence[int]) -> int:
        return 1 - 2 * int(self.bits[input_index(x)])

    def __eq__(self, other):
        if not isinstance(other, TruthTable):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.n, self.bits.tobytes()))

    def is_constant(self) -> bool:
        return bool(self.bits.min() == self.bits.max())

    # serialization --------------------------------------------------------

    def to_hex(self) -> str:
        value = int.from_bytes(np.packbits(self.bits, bitorder="little").tobytes(), "little")
        width = max(1, (1 << self.n) // 4)
        return format(value, f"0{width}x")

    @classmethod
    def from_hex(cls, n: int, text: str) -> "TruthTable":
        _check_n(n)
        text = text.strip().lower().removeprefix("0x")
        value = int(text, 16)
        if value >> (1 << n):
            raise ValueError(f"hex string has bits beyond 2^{n} entries")
        size = 1 << n
        raw = np.frombuffer(value.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
        return cls(n, np.unpackbits(raw, bitorder="little")[:size])

    def dumps(self) -> str:
        return f"n={self.n}\n{self.to_hex()}\n"

    @classmethod
    def loads(cls, text: str) -> "TruthTable":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if len(lines) != 2 or not lines[0].startswith("n="):
            raise ValueError("truth-table file must be 'n=<int>' followed by one hex line")
        return cls.from_hex(int(lines[0][2:]), lines[1])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "TruthTable":
        return cls.loads(Path(path).read_text())


def input_point(n: int, j: int) -> tuple[int, ...]:
    return tuple(-1 if (j >> i) & 1 else 1 for i in range(n))


def input_index(x: Sequence[int]) -> int:
    j = 0
    for i, xi in enumerate(x):
        if xi == -1:
            j |= 1 << i
        elif xi != 1:
            raise ValueError("inputs must be +1/-1")
    return j


# ---------------------------------------------------------------------------
# Walsh-Hadamard transform


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    ``out[..., S] = sum_j a[..., j] * (-1)**popcount(j & S)``.  Integer input
    stays integer; the caller is responsible for overflow headroom.
    """
    a = np.array(a, copy=True)
    size = a.shape[-1]
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < size:
        v = a.reshape(*lead, -1, 2, h)
        lo = v[..., 0, :].copy()
        v[..., 0, :] += v[..., 1, :]
        v[..., 1, :] = lo - v[..., 1, :]
        h *= 2
    return a


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients ``fhat(S) = scaled[S] / 2**n``."""

    n: int
    scaled: np.ndarray

    def __post_init__(self):
        _check_n(self.n)
        s = np.asarray(self.scaled, dtype=np.int64)
        if s.shape != (1 << self.n,):
            raise ValueError("spectrum length must be 2**n")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "scaled", s)

    def coefficient(self, mask: int) -> Fraction:
        return Fraction(int(self.scaled[mask]), 1 << self.n)

    def dyadic(self, mask: int) -> DyadicRational:
        return DyadicRational.from_scaled(int(self.scaled[mask]), self.n)

    def weights(self) -> np.ndarray:
        """``4**n * fhat(S)**2`` as int64."""
        return self.scaled * self.scaled

    def probability(self, mask: int) -> Fraction:
        c = int(self.scaled[mask])
        return Fraction(c * c, 1 << (2 * self.n))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.scaled)

    def items(self) -> Iterable[tuple[int, Fraction]]:
        for mask in self.support():
            yield int(mask), self.coefficient(int(mask))

    def is_normalized(self) -> bool:
        return int(self.weights().sum()) == 1 << (2 * self.n)

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.scaled, other.scaled)

    __hash__ = None

    # Fourier-side formulas --------------------------------------------------

    def mean(self) -> Fraction:
        return self.coefficient(0)

    def variance(self) -> Fraction:
        w = self.weights()
        return Fraction(int(w.sum() - w[0]), 1 << (2 * self.n))

    def influence(self, i: int) -> Fraction:
        """``sum_{S contains i} fhat(S)**2``."""
        if not 1 <= i <= self.n:
            raise ValueError(f"variable {i} out of range 1..{self.n}")
        w = self.weights().reshape(-1, 2, 1 << (i - 1))
        return Fraction(int(w[:, 1, :].sum()), 1 << (2 * self.n))

    def influences(self) -> list[Fraction]:
        return [self.influence(i) for i in range(1, self.n + 1)]

    def total_influence(self) -> Fraction:
        """``sum_S |S| fhat(S)**2``."""
        return Fraction(int((popcounts(self.n) * self.weights()).sum()), 1 << (2 * self.n))

    def evaluate_all(self) -> np.ndarray:
        """``sum_S fhat(S) chi_S(x_j)`` for every input ``j``, as exact integers."""
        out = fwht(self.scaled)
        if np.any(out % (1 << self.n)):
            raise ArithmeticError("inverse transform is not integral")
        return out >> self.n

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mask", "numerator", "log2_denominator"])
        for mask in range(1 << self.n):
            d = self.dyadic(mask)
            w.writerow([mask, d.numerator, d.log2_denominator])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, n: int, text: str) -> "Spectrum":
        scaled = np.zeros(1 << n, dtype=np.int64)
        for row in csv.DictReader(io.StringIO(text)):
            num, e = int(row["numerator"]), int(row["log2_denominator"])
            if e > n:
                raise ValueError("coefficient finer than 2^-n")
            scaled[int(row["mask"])] = num << (n - e)
        return cls(n, scaled)


def fourier_transform(f: TruthTable) -> Spectrum:
    """Exact spectrum of ``f`` via the fast Walsh-Hadamard transform."""
    return Spectrum(f.n, fwht(f.values()))


# ---------------------------------------------------------------------------
# Definition-side quantities (flip counts and direct averages)


def influence(f: TruthTable, i: int) -> Fraction:
    """``Pr_x[f(x) != f(x with bit i flipped)]`` by counting."""
    if not 1 <= i <= f.n:
        raise ValueError(f"variable {i} out of range 1..{f.n}")
    v = f.bits.reshape(-1, 2, 1 << (i - 1))
    flips = int(np.count_nonzero(v[:, 0, :] != v[:, 1, :]))
    return Fraction(2 * flips, 1 << f.n)


def influences(f: TruthTable) -> list[Fraction]:
    return [influence(f, i) for i in range(1, f.n + 1)]


def total_influence(f: TruthTable) -> Fraction:
    return sum(influences(f), Fraction(0))


def mean(f: TruthTable) -> Fraction:
    return Fraction((1 << f.n) - 2 * int(f.bits.sum()), 1 << f.n)


def variance(f: TruthTable) -> Fraction:
    return 1 - mean(f) ** 2


# ---------------------------------------------------------------------------
# Spectral distribution


def entropy_of_weights(weights: np.ndarray | Sequence[int]) -> float:
    """Shannon entropy (bits) of integer weights, with ``0 log 1/0 = 0``."""
    w = np.asarray(weights, dtype=np.float64)
    w = w[w > 0]
    if w.size == 0:
        raise ValueError("empty distribution")
    total = w.sum()
    return float(max(0.0, np.log2(total) - (w * np.log2(w)).sum() / total))


def spectral_entropy(s: Spectrum) -> float:
    if not s.is_normalized():
        raise ValueError("spectrum squares do not sum to 1")
    return entropy_of_weights(s.weights())


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def spectral_samples(s: Spectrum, size: int, seed: int) -> np.ndarray:
    """``size`` independent draws of ``S`` with probability ``fhat(S)**2``.

    Exact: a uniform integer in ``[0, 4**n)`` is located among the cumulative
    integer weights.
    """
    if not s.is_normalized():
        raise ValueError("spectrum squares do not sum to 1")
    cum = np.cumsum(s.weights())
    r = numpy_rng(seed).integers(0, int(cum[-1]), size=size, dtype=np.int64)
    return np.searchsorted(cum, r, side="right")


def spectral_sample(s: Spectrum, seed: int) -> int:
    return int(spectral_samples(s, 1, seed)[0])


def conditional_nonempty(s: Spectrum) -> dict[int, Fraction]:
    """Law of a spectral sample conditioned on being nonempty."""
    w = s.weights()
    rest = int(w.sum() - w[0])
    if rest == 0:
        raise ValueError("fhat(empty)^2 = 1: the nonempty-conditioned law is undefined")
    return {int(m): Fraction(int(w[m]), rest) for m in np.flatnonzero(w) if m != 0}


def binary_entropy_influence_check(f: TruthTable, tol: float = 1e-12) -> bool:
    """``2 Inf[f] >= h(eps)`` where ``fhat(empty)^2 = 1 - eps``."""
    eps = 1 - mean(f) ** 2
    return 2 * float(total_influence(f)) >= binary_entropy(float(eps)) - tol


def weak_entropy_bound(n: int, total_inf: Fraction | float) -> float:
    """``log2(3) * (ceil(log2 n) * Inf + 1)``, from the index-listing code."""
    bits = math.ceil(math.log2(n)) if n > 1 else 0
    return math.log2(3) * (bits * float(total_inf) + 1)
