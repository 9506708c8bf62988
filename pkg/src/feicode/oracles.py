"""Brute-force reference computations.

These deliberately avoid the fast paths they are used to check: no
Walsh-Hadamard butterflies, no subtree-spectrum recursion, no dynamic
programs.  Everything is a direct average over all inputs in exact
arithmetic.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .boolfn import TruthTable, input_point


@lru_cache(maxsize=None)
def character_matrix(n: int) -> np.ndarray:
    """``M[j, S] = chi_S(x_j)`` built from the product definition (cached, read-only)."""
    size = 1 << n
    points = np.array([input_point(n, j) for j in range(size)], dtype=np.int64).reshape(size, n)
    M = np.ones((size, size), dtype=np.int64)
    for S in range(size):
        for i in range(n):
            if (S >> i) & 1:
                M[:, S] *= points[:, i]
    M.setflags(write=False)
    return M


def naive_fourier_scaled(values: np.ndarray) -> np.ndarray:
    """``2**n * E[f chi_S]`` for a batch of +1/-1 value rows (last axis)."""
    values = np.asarray(values, dtype=np.int64)
    n = values.shape[-1].bit_length() - 1
    return values @ character_matrix(n)


def naive_fourier(f: TruthTable) -> dict[int, Fraction]:
    coeffs = naive_fourier_scaled(f.values())
    return {S: Fraction(int(c), 1 << f.n) for S, c in enumerate(coeffs)}


def flip_influence(f: TruthTable, i: int) -> Fraction:
    """Influence by walking every input and flipping coordinate ``i``."""
    count = 0
    for j in range(1 << f.n):
        x = list(input_point(f.n, j))
        y = f(x)
        x[i - 1] = -x[i - 1]
        count += y != f(x)
    return Fraction(count, 1 << f.n)


def direct_covariance(g: TruthTable, h: TruthTable) -> Fraction:
    """``E[gh] - E[g]E[h]`` by summation over inputs."""
    gv, hv = g.values(), h.values()
    size = 1 << g.n
    return Fraction(int((gv * hv).sum()), size) - Fraction(int(gv.sum()), size) * Fraction(int(hv.sum()), size)


def product_probability(mu: Sequence[Fraction], x: Sequence[int]) -> Fraction:
    p = Fraction(1)
    for m, xi in zip(mu, x):
        p *= (1 + m) / 2 if xi == 1 else (1 - m) / 2
    return p


def naive_biased_raw(f: TruthTable, mu: Sequence[Fraction]) -> list[Fraction]:
    """``E_mu[f * prod_{i in S} (x_i - mu_i)]`` for every ``S`` by enumeration."""
    n = f.n
    out = []
    pts = [input_point(n, j) for j in range(1 << n)]
    probs = [product_probability(mu, x) for x in pts]
    for S in range(1 << n):
        total = Fraction(0)
        for x, p in zip(pts, probs):
            term = p * f(x)
            for i in range(n):
                if (S >> i) & 1:
                    term *= x[i] - mu[i]
            total += term
        out.append(total)
    return out


def biased_gram(mu: Sequence[Fraction]) -> list[list[Fraction]]:
    """``E_mu[prod_{i in S}(x_i-mu_i) prod_{i in T}(x_i-mu_i)]`` for all ``S, T``."""
    n = len(mu)
    pts = [input_point(n, j) for j in range(1 << n)]
    probs = [product_probability(mu, x) for x in pts]

    def basis(S, x):
        v = Fraction(1)
        for i in range(n):
            if (S >> i) & 1:
                v *= x[i] - mu[i]
        return v

    vals = [[basis(S, x) for x in pts] for S in range(1 << n)]
    return [[sum((p * a * b for p, a, b in zip(probs, vals[S], vals[T])), Fraction(0))
             for T in range(1 << n)] for S in range(1 << n)]
