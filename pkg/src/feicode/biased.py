"""Fourier analysis under a product distribution and the FEI+ / C-good quantities.

Under bias ``mu`` (``E[x_i] = mu_i``) the orthonormal basis is
``phi_S = prod_{i in S} (x_i - mu_i) / sigma_i`` with ``sigma_i**2 = 1 - mu_i**2``.
Biases are exact rationals, but ``sigma_i`` usually is not, so coefficients
are stored in raw form

    a_S = E_mu[f * prod_{i in S} (x_i - mu_i)],     ftilde(S) = a_S / prod sigma_i,

which keeps ``ftilde(S)**2 = a_S**2 / prod sigma_i**2`` exact.  Only the
signed value ``ftilde(S)`` itself needs a square root.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .boolfn import TruthTable, popcounts, variables_of
from .dyadic import log2, parse_fraction


class BiasError(ValueError):
    pass


@dataclass(frozen=True)
class BiasVector:
    mu: tuple[Fraction, ...]

    def __post_init__(self):
        mu = tuple(parse_fraction(m) for m in self.mu)
        for i, m in enumerate(mu, 1):
            if not -1 < m < 1:
                raise BiasError(f"mu_{i} = {m} is not strictly inside (-1, 1)")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def uniform(cls, n: int) -> "BiasVector":
        return cls((Fraction(0),) * n)

    def __len__(self):
        return len(self.mu)

    def __getitem__(self, i):
        return self.mu[i]

    @property
    def sigma_sq(self) -> tuple[Fraction, ...]:
        return tuple(1 - m * m for m in self.mu)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "numerator", "denominator"])
        for i, m in enumerate(self.mu, 1):
            w.writerow([i, m.numerator, m.denominator])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "BiasVector":
        rows = sorted(csv.DictReader(io.StringIO(text)), key=lambda r: int(r["i"]))
        if [int(r["i"]) for r in rows] != list(range(1, len(rows) + 1)):
            raise BiasError("bias CSV must list every variable 1..n exactly once")
        return cls(tuple(Fraction(int(r["numerator"]), int(r["denominator"])) for r in rows))


@dataclass(frozen=True, eq=False)
class BiasedSpectrum:
    """Raw coefficients ``a_S`` indexed by mask, plus the bias they were taken under."""

    n: int
    raw: tuple[Fraction, ...]
    bias: BiasVector

    @cached_property
    def _scales(self) -> list[Fraction]:
        """``prod_{i in S} sigma_i^2`` for every mask, built one variable at a time."""
        out = [Fraction(1)]
        for s2 in self.bias.sigma_sq:
            out += [x * s2 for x in out]
        return out

    def _scale(self, mask: int) -> Fraction:
        return self._scales[mask]

    def squared(self, mask: int) -> Fraction:
        a = self.raw[mask]
        return a * a / self._scale(mask) if a else Fraction(0)

    def value(self, mask: int) -> float:
        a = self.raw[mask]
        if not a:
            return 0.0
        return math.copysign(math.sqrt(float(a * a / self._scale(mask))), a)

    def squared_all(self) -> list[Fraction]:
        return [self.squared(m) for m in range(1 << self.n)]

    def parseval(self) -> Fraction:
        return sum(self.squared_all(), Fraction(0))

    def mean(self) -> Fraction:
        return self.raw[0]

    def variance(self) -> Fraction:
        return 1 - self.raw[0] ** 2

    def nonempty_distribution(self) -> dict[int, Fraction]:
        """Law of ``Y ~ ftilde^2 minus the empty set``; raises on a constant function."""
        var = self.variance()
        if var == 0:
            raise BiasError("function is constant under this bias; Y is undefined")
        return {m: w / var for m in range(1, 1 << self.n) if (w := self.squared(m))}

    def marginals(self) -> dict[int, Fraction]:
        """``Pr[i in Y]`` for each variable ``i``."""
        out = {i: Fraction(0) for i in range(1, self.n + 1)}
        for m, p in self.nonempty_distribution().items():
            for i in variables_of(m):
                out[i] += p
        return out

    def expected_size(self) -> Fraction:
        pc = popcounts(self.n)
        return sum((p * int(pc[m]) for m, p in self.nonempty_distribution().items()), Fraction(0))

    def entropy(self) -> float:
        return -sum(float(p) * log2(p) for p in self.nonempty_distribution().values())


def biased_fourier(f: TruthTable, mu: BiasVector | Sequence) -> BiasedSpectrum:
    """Raw biased coefficients by a per-variable butterfly in exact arithmetic.

    For variable ``i`` with halves ``lo`` (``x_i = +1``) and ``hi``
    (``x_i = -1``): averaging gives ``p+ lo + p- hi`` and pairing with
    ``x_i - mu_i`` gives ``(sigma_i^2 / 2)(lo - hi)``.
    """
    if not isinstance(mu, BiasVector):
        mu = BiasVector(tuple(mu))
    if len(mu) != f.n:
        raise BiasError(f"bias has {len(mu)} entries for a function of {f.n} variables")
    v = np.array([Fraction(int(x)) for x in f.values()], dtype=object)
    for i in range(f.n):
        m = mu.mu[i]
        plus, minus, half_var = (1 + m) / 2, (1 - m) / 2, (1 - m * m) / 2
        h = 1 << i
        w = v.reshape(-1, 2, h)
        lo, hi = w[:, 0, :].copy(), w[:, 1, :].copy()
        w[:, 0, :] = lo * plus + hi * minus
        w[:, 1, :] = (lo - hi) * half_var
        v = w.reshape(-1)
    return BiasedSpectrum(f.n, tuple(v.tolist()), mu)


# ---------------------------------------------------------------------------
# FEI+ and C-good


@dataclass(frozen=True)
class FeiPlusSides:
    lhs: float
    rhs: Fraction

    @property
    def min_constant(self) -> float:
        return ratio_constant(self.lhs, self.rhs)


def ratio_constant(numer: float, denom: Fraction, tol: float = 1e-12) -> float:
    """Least ``C`` with ``numer <= C * denom`` for ``denom >= 0``; unclamped."""
    if denom > 0:
        return numer / float(denom)
    return math.inf if numer > tol else 0.0


def fei_plus_sides(spec: BiasedSpectrum) -> FeiPlusSides:
    """``sum_{S != 0} ft^2 log(prod sigma^2 / ft^2)`` and ``sum_{S != 0} ft^2 (|S| - 1)``."""
    if spec.variance() == 0:
        raise BiasError("function is constant under this bias")
    pc = popcounts(spec.n)
    lhs, rhs = 0.0, Fraction(0)
    for m in range(1, 1 << spec.n):
        w = spec.squared(m)
        if not w:
            continue
        lhs += float(w) * log2(spec._scale(m) / w)
        rhs += w * (int(pc[m]) - 1)
    return FeiPlusSides(lhs, rhs)


@dataclass(frozen=True)
class GoodnessTerms:
    """Pieces of the C-good inequality ``E[len] <= C (E|Y| - 1) + bias_term + log Var``."""

    expected_len: float
    expected_size: Fraction
    bias_term: float
    log_variance: float

    @property
    def residual(self) -> float:
        return self.expected_len - self.bias_term - self.log_variance

    def rhs(self, c: float) -> float:
        slope = c * float(self.expected_size - 1) if self.expected_size != 1 else 0.0
        return slope + self.bias_term + self.log_variance

    def holds(self, c: float, tol: float = 1e-9) -> bool:
        return self.expected_len <= self.rhs(c) + tol

    @property
    def min_c(self) -> float:
        return ratio_constant(self.residual, self.expected_size - 1, tol=1e-9)


def goodness_terms(spec: BiasedSpectrum, expected_len: float | Fraction,
                   marginals: Mapping[int, Fraction] | None = None) -> GoodnessTerms:
    marginals = spec.marginals() if marginals is None else marginals
    sig = spec.bias.sigma_sq
    bias_term = sum(float(p) * -log2(sig[i - 1]) for i, p in marginals.items() if p)
    return GoodnessTerms(float(expected_len), spec.expected_size(), bias_term, log2(spec.variance()))


def c_good_check(spec: BiasedSpectrum, expected_len: float | Fraction, c: float,
                 marginals: Mapping[int, Fraction] | None = None, tol: float = 1e-9) -> bool:
    return goodness_terms(spec, expected_len, marginals).holds(c, tol)


def min_good_c(spec: BiasedSpectrum, expected_len: float | Fraction) -> float:
    """Least ``C`` for which a code of this expected length is C-good.

    Negative values are returned as is; ``inf`` means no finite ``C`` works
    (``E|Y| = 1`` with a positive residual).
    """
    return goodness_terms(spec, expected_len).min_c


def entropy_min_c(spec: BiasedSpectrum) -> float:
    """``min_good_c`` evaluated at ``E[len] = H[Y]``; equals the FEI+ minimal constant."""
    return min_good_c(spec, spec.entropy())


def product_weights(mu: BiasVector | Sequence) -> list[Fraction]:
    """``Pr_mu[x_j]`` for every input index ``j``, built coordinate by coordinate."""
    mu = mu.mu if isinstance(mu, BiasVector) else tuple(parse_fraction(m) for m in mu)
    w = [Fraction(1)]
    for m in mu:
        plus, minus = (1 + m) / 2, (1 - m) / 2
        w = [p * plus for p in w] + [p * minus for p in w]
    return w


def expectation(f: TruthTable, mu: BiasVector | Sequence) -> Fraction:
    """``E_mu[f]`` by direct summation over inputs."""
    return sum((p * int(v) for p, v in zip(product_weights(mu), f.values())), Fraction(0))
