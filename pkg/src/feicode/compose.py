"""Disjoint composition ``h = f(g_1(x^1), ..., g_k(x^k))`` and its composed code.

Under a product bias ``mu`` on the inputs of ``h``, the inner outputs are
independent bits with ``eta_i = E_mu[g_i]``.  Writing ``a`` for raw biased
coefficients (see :mod:`feicode.biased`), the coefficients of ``h`` factor as

    a^h(Y) = a^f(S) * prod_{i in S} a^{g_i}(Y_i) / (1 - eta_i^2),   S = {i : Y_i nonempty},

so the nonempty-conditioned spectral law of ``h`` is: draw ``S`` from ``f``'s
law under ``eta``, then each ``Y_i`` (``i`` in ``S``) from ``g_i``'s law.  The
composed code writes ``P_f(S)`` followed by ``P_i(Y_i)`` for ``i`` in ``S``
in increasing order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .biased import BiasedSpectrum, BiasVector, biased_fourier, expectation, goodness_terms
from .boolfn import MAX_VARS, TruthTable, variables_of
from .checks import Check, eq, leq
from .coding import Code, CodingError, MAX_BLOCK_SUPPORT, block_expected_length, huffman_build, is_prefix_free
from .dtree import parse_tree, to_truth_table
from .dyadic import parse_fraction


class CompositionError(ValueError):
    pass


def _check_blocks(blocks: Sequence[Sequence[int]]) -> int:
    flat = [v for b in blocks for v in b]
    if len(set(flat)) != len(flat):
        raise CompositionError("variable blocks overlap")
    total = len(flat)
    if sorted(flat) != list(range(1, total + 1)):
        raise CompositionError(f"blocks must partition variables 1..{total}")
    if total > MAX_VARS:
        raise CompositionError(f"composition has {total} variables; the limit is {MAX_VARS}")
    return total


def compose_functions(f: TruthTable, gs: Sequence[TruthTable], blocks: Sequence[Sequence[int]]) -> TruthTable:
    """Truth table of ``f(g_1(x restricted to block 1), ...)``."""
    if len(gs) != f.n or len(blocks) != f.n:
        raise CompositionError(f"outer function takes {f.n} inputs; got {len(gs)} inner functions, {len(blocks)} blocks")
    for i, (g, b) in enumerate(zip(gs, blocks), 1):
        if g.n != len(b):
            raise CompositionError(f"inner function {i} has {g.n} variables but its block has {len(b)}")
    total = _check_blocks(blocks)
    idx = np.arange(1 << total, dtype=np.int64)
    outer = np.zeros_like(idx)
    for i, (g, b) in enumerate(zip(gs, blocks)):
        sub = np.zeros_like(idx)
        for pos, v in enumerate(b):
            sub |= ((idx >> (v - 1)) & 1) << pos
        outer |= g.bits[sub].astype(np.int64) << i
    return TruthTable(total, f.bits[outer])


@dataclass(frozen=True, eq=False)
class Composition:
    outer: TruthTable
    inner: tuple[TruthTable, ...]
    blocks: tuple[tuple[int, ...], ...]
    bias: BiasVector

    def __post_init__(self):
        object.__setattr__(self, "inner", tuple(self.inner))
        object.__setattr__(self, "blocks", tuple(tuple(b) for b in self.blocks))
        if not isinstance(self.bias, BiasVector):
            object.__setattr__(self, "bias", BiasVector(tuple(self.bias)))
        if len(self.bias) != sum(len(b) for b in self.blocks):
            raise CompositionError("bias vector length does not match the number of variables")
        for i, g in enumerate(self.inner, 1):
            if g.is_constant():
                raise CompositionError(f"inner function {i} is constant")

    @property
    def k(self) -> int:
        return self.outer.n

    @cached_property
    def h(self) -> TruthTable:
        return compose_functions(self.outer, self.inner, self.blocks)

    def inner_bias(self, i: int) -> BiasVector:
        return BiasVector(tuple(self.bias.mu[v - 1] for v in self.blocks[i]))

    @cached_property
    def inner_spectra(self) -> tuple[BiasedSpectrum, ...]:
        return tuple(biased_fourier(g, self.inner_bias(i)) for i, g in enumerate(self.inner))

    @cached_property
    def eta(self) -> BiasVector:
        return BiasVector(tuple(s.mean() for s in self.inner_spectra))

    @cached_property
    def outer_spectrum(self) -> BiasedSpectrum:
        return biased_fourier(self.outer, self.eta)

    @cached_property
    def h_spectrum(self) -> BiasedSpectrum:
        return biased_fourier(self.h, self.bias)

    def split(self, mask: int) -> tuple[int, tuple[int, ...]]:
        """``(S, (Y_1, ..., Y_k))`` with each ``Y_i`` in block-local bit positions."""
        parts = []
        for b in self.blocks:
            y = 0
            for pos, v in enumerate(b):
                if (mask >> (v - 1)) & 1:
                    y |= 1 << pos
            parts.append(y)
        s = sum(1 << i for i, y in enumerate(parts) if y)
        return s, tuple(parts)

    def join(self, parts: Sequence[int]) -> int:
        mask = 0
        for y, b in zip(parts, self.blocks):
            for pos, v in enumerate(b):
                if (y >> pos) & 1:
                    mask |= 1 << (v - 1)
        return mask

    def predicted_raw(self, mask: int) -> Fraction:
        s, parts = self.split(mask)
        value = self.outer_spectrum.raw[s]
        for i in variables_of(s):
            eta = self.eta.mu[i - 1]
            value *= self.inner_spectra[i - 1].raw[parts[i - 1]] / (1 - eta * eta)
        return value

    def predicted_value(self, mask: int) -> float:
        s, parts = self.split(mask)
        value = self.outer_spectrum.value(s)
        for i in variables_of(s):
            eta = self.eta.mu[i - 1]
            value *= self.inner_spectra[i - 1].value(parts[i - 1]) / math.sqrt(float(1 - eta * eta))
        return value


# ---------------------------------------------------------------------------
# Identity and distribution checks


@dataclass
class IdentityReport:
    exact_ok: bool
    max_abs_error: float
    witness: int | None = None

    @property
    def ok(self) -> bool:
        return self.exact_ok and self.max_abs_error <= 1e-9


def verify_coefficient_identity(comp: Composition) -> IdentityReport:
    """Compare ``h``'s transform with the factored prediction on every ``Y``."""
    hs = comp.h_spectrum
    witness, worst = None, 0.0
    for mask in range(1 << comp.h.n):
        if hs.raw[mask] != comp.predicted_raw(mask) and witness is None:
            witness = mask
        worst = max(worst, abs(hs.value(mask) - comp.predicted_value(mask)))
    return IdentityReport(witness is None, worst, witness)


@dataclass
class DistributionReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)


def _max_gap(p: dict, q: dict) -> Fraction:
    return max((abs(p.get(k, 0) - q.get(k, 0)) for k in p.keys() | q.keys()), default=Fraction(0))


def verify_distribution_claims(comp: Composition) -> DistributionReport:
    """Law of ``S``, conditional laws of ``Y_i``, product law, and the mean/variance links."""
    law_h = comp.h_spectrum.nonempty_distribution()
    law_f = comp.outer_spectrum.nonempty_distribution()
    laws_g = [s.nonempty_distribution() for s in comp.inner_spectra]

    law_s: dict[int, Fraction] = {}
    cond: list[dict[int, Fraction]] = [{} for _ in range(comp.k)]
    mass_nonempty = [Fraction(0)] * comp.k
    product_gap = Fraction(0)
    for mask, p in law_h.items():
        s, parts = comp.split(mask)
        law_s[s] = law_s.get(s, Fraction(0)) + p
        predicted = law_f.get(s, Fraction(0))
        for i in variables_of(s):
            y = parts[i - 1]
            cond[i - 1][y] = cond[i - 1].get(y, Fraction(0)) + p
            mass_nonempty[i - 1] += p
            predicted *= laws_g[i - 1].get(y, Fraction(0))
        product_gap = max(product_gap, abs(p - predicted))
    report = DistributionReport()
    report.checks.append(eq("law of S equals outer nonempty law", _max_gap(law_s, law_f), Fraction(0)))
    for i in range(comp.k):
        if mass_nonempty[i]:
            normalized = {y: q / mass_nonempty[i] for y, q in cond[i].items()}
            gap = _max_gap(normalized, laws_g[i])
        else:
            gap = Fraction(0)
        report.checks.append(eq(f"conditional law of Y_{i + 1} equals inner nonempty law", gap, Fraction(0)))
    report.checks.append(eq("law of Y factors as outer times inner laws", product_gap, Fraction(0)))
    report.checks.append(eq("Var_eta[f] = Var_mu[h]", comp.outer_spectrum.variance(), comp.h_spectrum.variance()))
    for i, g in enumerate(comp.inner):
        direct = expectation(g, comp.inner_bias(i))
        report.checks.append(eq(f"eta_{i + 1} = E_mu[g_{i + 1}]", comp.eta.mu[i], direct))
        report.checks.append(eq(f"Var_eta[y_{i + 1}] = Var_mu[g_{i + 1}]",
                                1 - comp.eta.mu[i] ** 2, comp.inner_spectra[i].variance()))
    return report


# ---------------------------------------------------------------------------
# Composed code


class ComposedCode:
    """``P_f(S)`` followed by ``P_i(Y_i)`` for each ``i`` in ``S``, ascending."""

    def __init__(self, comp: Composition, outer_code: Code | None = None,
                 inner_codes: Sequence[Code] | None = None, sigma: int = 2):
        self.comp = comp
        self.sigma = sigma
        self.outer_law = comp.outer_spectrum.nonempty_distribution()
        self.inner_laws = [s.nonempty_distribution() for s in comp.inner_spectra]
        self.outer_code = outer_code or huffman_build(self.outer_law, sigma)
        self.inner_codes = list(inner_codes) if inner_codes is not None else [
            huffman_build(law, sigma) for law in self.inner_laws]

    def encode(self, mask: int) -> str:
        if mask == 0:
            raise CompositionError("the composed code is defined on nonempty sets only")
        s, parts = self.comp.split(mask)
        try:
            out = [self.outer_code[s]]
            out.extend(self.inner_codes[i - 1][parts[i - 1]] for i in variables_of(s))
        except KeyError:
            raise CompositionError(f"{mask:#b} is outside the composed spectral support") from None
        return "".join(out)

    @staticmethod
    def _read(code: Code, text: str, pos: int) -> tuple[object, int]:
        inverse = {w: k for k, w in code.codewords.items()}
        for end in range(pos, len(text) + 1):
            if text[pos:end] in inverse:
                return inverse[text[pos:end]], end
        raise CodingError(f"no codeword starts at position {pos}")

    def decode(self, text: str) -> int:
        s, pos = self._read(self.outer_code, text, 0)
        parts = [0] * self.comp.k
        for i in variables_of(s):
            parts[i - 1], pos = self._read(self.inner_codes[i - 1], text, pos)
        if pos != len(text):
            raise CodingError("trailing symbols after the last block")
        return self.comp.join(parts)

    def as_code(self) -> Code:
        return Code(self.sigma, {m: self.encode(m) for m in self.comp.h_spectrum.nonempty_distribution()})

    def expected_length_formula(self) -> Fraction:
        """``E|P_f(S)| + sum_i Pr[i in S] E|P_i(Y_i)|``."""
        total = self.outer_code.expected_length(self.outer_law)
        for i in range(self.comp.k):
            r = sum((p for s, p in self.outer_law.items() if (s >> i) & 1), Fraction(0))
            total += r * self.inner_codes[i].expected_length(self.inner_laws[i])
        return total

    def expected_length_enumerated(self) -> Fraction:
        law = self.comp.h_spectrum.nonempty_distribution()
        return sum((p * len(self.encode(m)) for m, p in law.items()), Fraction(0))


def composed_encode(comp: Composition, mask: int, code: ComposedCode | None = None) -> str:
    return (code or ComposedCode(comp)).encode(mask)


def composed_decode(comp: Composition, text: str, code: ComposedCode | None = None) -> int:
    return (code or ComposedCode(comp)).decode(text)


# ---------------------------------------------------------------------------
# Goodness of the composed code


@dataclass
class CompositionReport:
    c_star: float
    part_min_c: list[float]
    checks: list[Check] = field(default_factory=list)
    # finite-t block data: t -> (per-copy length, entropy) for the direct block code of h
    block: dict[int, tuple[Fraction, float]] = field(default_factory=dict)
    # finite-t data for the copy-parallel composed code: t -> (per-copy length, honest bound)
    parallel: dict[int, tuple[Fraction, float]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.holds]


def _binomial_pmf(t: int, r: Fraction) -> list[Fraction]:
    return [math.comb(t, m) * r**m * (1 - r) ** (t - m) for m in range(t + 1)]


def _block_length(law: dict, t: int, sigma: int) -> Fraction:
    return block_expected_length(law, t, sigma)


def verify_c_good_composition(comp: Composition, code: ComposedCode | None = None,
                              block_sizes: Sequence[int] = (1, 2, 4),
                              block_cap: int = MAX_BLOCK_SUPPORT, tol: float = 1e-9) -> CompositionReport:
    """Composed code is ``C*``-good, ``C*`` the largest of the parts' minimal constants.

    Also checks, at each block size ``t`` whose support fits ``block_cap``:

    * the entropy identity ``H[h] = H[f] + sum_i Pr[i in S] H[g_i]``
    * a Huffman code over ``t`` copies of ``h``'s law has per-copy excess in ``[0, 1/t]``
    * the copy-parallel composed code (one block code for the ``t`` outer
      samples, one per inner function for the copies that mention it) stays
      within ``(1 + sum_i Pr[copies mention i]) / t`` of that entropy.
    """
    code = code or ComposedCode(comp)
    sigma = code.sigma
    outer_terms = goodness_terms(comp.outer_spectrum, code.outer_code.expected_length(code.outer_law))
    inner_terms = [goodness_terms(s, c.expected_length(law))
                   for s, c, law in zip(comp.inner_spectra, code.inner_codes, code.inner_laws)]
    part_min = [outer_terms.min_c] + [t.min_c for t in inner_terms]
    c_star = max(part_min)

    formula = code.expected_length_formula()
    enumerated = code.expected_length_enumerated()
    h_terms = goodness_terms(comp.h_spectrum, enumerated)
    report = CompositionReport(c_star, part_min)
    add = report.checks.append
    add(eq("expected length formula equals enumeration", formula, enumerated))
    add(Check("composed code is prefix-free", 0, 0, is_prefix_free(code.as_code())))
    add(Check("outer code is C*-good", outer_terms.expected_len, outer_terms.rhs(c_star),
              outer_terms.holds(c_star, tol)))
    for i, terms in enumerate(inner_terms, 1):
        add(Check(f"inner code {i} is C*-good", terms.expected_len, terms.rhs(c_star), terms.holds(c_star, tol)))
    add(Check("composed code is C*-good for h", h_terms.expected_len, h_terms.rhs(c_star),
              h_terms.holds(c_star, tol)))

    law_h = comp.h_spectrum.nonempty_distribution()
    H_h = comp.h_spectrum.entropy()
    H_f = comp.outer_spectrum.entropy()
    H_g = [s.entropy() for s in comp.inner_spectra]
    r = [sum((p for s, p in code.outer_law.items() if (s >> i) & 1), Fraction(0)) for i in range(comp.k)]
    add(eq("H[h] = H[f] + sum_i Pr[i in S] H[g_i]", H_h, H_f + sum(float(ri) * h for ri, h in zip(r, H_g)), tol))

    for t in block_sizes:
        if len(law_h) ** t <= block_cap:
            per_copy = _block_length(law_h, t, sigma) / t
            report.block[t] = (per_copy, H_h)
            add(leq(f"t={t}: H[h] <= per-copy block length", H_h, float(per_copy) * math.log2(sigma), tol))
            add(leq(f"t={t}: per-copy block length <= H[h] + 1/t", float(per_copy) * math.log2(sigma),
                    H_h + 1 / t, tol))
        sizes = [len(code.outer_law)] + [len(law) for law in code.inner_laws]
        if max(sizes) ** t <= block_cap:
            length = _block_length(code.outer_law, t, sigma)
            slack = 1.0
            for i in range(comp.k):
                pmf = _binomial_pmf(t, r[i])
                for m in range(1, t + 1):
                    if pmf[m]:
                        length += pmf[m] * _block_length(code.inner_laws[i], m, sigma)
                slack += float(1 - pmf[0])
            per_copy = length / t
            bound = H_h + slack / t
            report.parallel[t] = (per_copy, bound)
            add(leq(f"t={t}: parallel composed per-copy length <= H[h] + (1 + sum_i Pr[m_i > 0])/t",
                    float(per_copy) * math.log2(sigma), bound, tol))
    return report


# ---------------------------------------------------------------------------
# Manifest IO


def _load_function(spec: dict) -> TruthTable:
    if "tree" in spec:
        tree = parse_tree(spec["tree"])
        return to_truth_table(tree, spec.get("n"))
    if "table" in spec:
        return TruthTable.from_hex(int(spec["n"]), spec["table"])
    raise CompositionError("function entries need a 'tree' or a 'table' field")


def load_manifest(text: str) -> Composition:
    """JSON with ``outer``, ``inner`` (list), ``blocks`` (list of variable lists) and ``bias``.

    Functions are ``{"tree": "(1 +1 -1)", "n": 1}`` or ``{"table": "<hex>", "n": 2}``;
    bias entries are strings such as ``"1/3"`` or numbers.  A missing bias means
    uniform.
    """
    data = json.loads(text)
    outer = _load_function(data["outer"])
    inner = [_load_function(g) for g in data["inner"]]
    blocks = [tuple(int(v) for v in b) for b in data["blocks"]]
    total = sum(len(b) for b in blocks)
    bias = [parse_fraction(str(m)) for m in data.get("bias", [0] * total)]
    return Composition(outer, tuple(inner), tuple(blocks), BiasVector(tuple(bias)))


def dump_manifest(comp: Composition) -> str:
    data = {
        "outer": {"n": comp.outer.n, "table": comp.outer.to_hex()},
        "inner": [{"n": g.n, "table": g.to_hex()} for g in comp.inner],
        "blocks": [list(b) for b in comp.blocks],
        "bias": [str(m) for m in comp.bias.mu],
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def read_manifest(path: str | Path) -> Composition:
    return load_manifest(Path(path).read_text())
