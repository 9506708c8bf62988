"""Instance generators and the property suites run by ``feicode verify``.

Every trial draws its instance from a seed derived from ``(seed, suite,
trial)``, so a report depends only on the configuration, never on worker
count or scheduling.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from . import boolfn, oracles
from .biased import (BiasVector, biased_fourier, c_good_check, entropy_min_c, fei_plus_sides,
                     min_good_c)
from .boolfn import MAX_VARS, TruthTable, fourier_transform, spectral_entropy
from .checks import Check, eq, leq
from .coding import huffman_build, integer_weights, is_prefix_free, kraft_check
from .compose import (ComposedCode, Composition, verify_c_good_composition,
                      verify_coefficient_identity, verify_distribution_claims)
from .dtree import (DecisionTree, Leaf, Node, TreeSpectra, check_covariance_bounds, eval_tree,
                    identity_checks, internal_nodes, max_read, num_vars,
                    root_influence_bound, to_sexpr, to_truth_table, tree_covariance,
                    tree_covariance_recursive)
from .rng import DEFAULT_SEED, derive_seed, numpy_rng
from .speccode import (TreeProtocol, check_almost_prefix_free, check_main_lemma,
                       entropy_bound_report, round_trip)

SUITES = ("fourier", "covariance", "protocol", "biased", "composition", "gadgets")
MAX_ATTEMPTS = 10_000
BAD_TREE_LAYERS = (0, 1, 2, 3, 4)
ENUMERATION_NODE_LIMIT = 15
COMPOSITION_BLOCK_CAP = 20_000


@dataclass(frozen=True)
class GenConfig:
    """Instance-generation settings shared by all suites.

    ``depth`` caps tree depth (default ``n``); ``leaf_bias`` is the
    probability that a leaf is ``+1``; ``stop_prob`` is the chance that a
    non-root position becomes a leaf before the cap is reached.
    """

    n: int = 8
    k: int = 3
    depth: int | None = None
    leaf_bias: float = 0.5
    stop_prob: float = 0.3
    seed: int = DEFAULT_SEED
    trials: int = 100
    codec_seeds: int = 2

    def __post_init__(self):
        if not 1 <= self.n <= MAX_VARS:
            raise ValueError(f"n must be in [1, {MAX_VARS}]")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be at least 1")
        if not 0 <= self.leaf_bias <= 1 or not 0 <= self.stop_prob < 1:
            raise ValueError("leaf_bias must be in [0, 1] and stop_prob in [0, 1)")


# ---------------------------------------------------------------------------
# Generators


def gen_random_tree(cfg: GenConfig, rng: random.Random | None = None) -> DecisionTree:
    """Random read-``k`` tree on ``x_1..x_n`` computing a nonconstant function.

    Grows depth first; each internal position picks uniformly among the
    variables that are off the current path and still below ``k`` reads.
    Whole trees computing a constant are rejected and regrown.
    """
    depth = cfg.n if cfg.depth is None else cfg.depth
    if depth > cfg.n:
        raise ValueError(f"depth {depth} exceeds n={cfg.n}: no path can avoid repeating a variable")
    rng = rng or random.Random(cfg.seed)

    def grow(on_path: frozenset, d: int, counts: Counter) -> DecisionTree:
        if d > 0 and (d >= depth or rng.random() < cfg.stop_prob):
            return Leaf(1 if rng.random() < cfg.leaf_bias else -1)
        choices = [v for v in range(1, cfg.n + 1) if v not in on_path and counts[v] < cfg.k]
        if not choices:
            return Leaf(1 if rng.random() < cfg.leaf_bias else -1)
        v = rng.choice(choices)
        counts[v] += 1
        left = grow(on_path | {v}, d + 1, counts)
        right = grow(on_path | {v}, d + 1, counts)
        return Node(v, left, right)

    for _ in range(MAX_ATTEMPTS):
        tree = grow(frozenset(), 0, Counter())
        if not to_truth_table(tree, cfg.n).is_constant():
            return tree
    raise RuntimeError(f"no nonconstant tree after {MAX_ATTEMPTS} attempts")


def gen_bad_tree(layers: int, inner: DecisionTree, distinct_dummies: bool = True) -> DecisionTree:
    """Complete tree of dummy queries with a copy of ``inner`` under every bottom node.

    Dummies get fresh indices above ``inner``'s variables: one per internal
    node by default, or one per level with ``distinct_dummies=False``.  All
    copies are the same object, so subtree spectra are shared.
    """
    if layers < 0:
        raise ValueError("layers must be non-negative")
    base = num_vars(inner)
    dummies = (1 << layers) - 1 if distinct_dummies else layers
    if base + dummies > MAX_VARS:
        raise ValueError(f"bad tree needs {base + dummies} variables; the limit is {MAX_VARS}")
    counter = iter(range(base + 1, base + dummies + 1))

    def build(level: int) -> DecisionTree:
        if level == layers:
            return inner
        var = next(counter) if distinct_dummies else base + 1 + level
        return Node(var, build(level + 1), build(level + 1))

    return build(0)


def check_bad_tree(tree: DecisionTree, layers: int, inner: DecisionTree, n: int | None = None) -> list[Check]:
    n = num_vars(tree) if n is None else n
    spectra = TreeSpectra(tree, n)
    var = Fraction(spectra.variance_scaled(tree), 1 << (2 * n))
    f = to_truth_table(tree, n)
    dummy_inf = [boolfn.influence(f, v) for v in range(num_vars(inner) + 1, n + 1)]
    checks = [
        eq("Cov[T] = l Var[f]", tree_covariance(tree, spectra=spectra).total, layers * var),
        eq("dummy influences vanish", sum(dummy_inf, Fraction(0)), Fraction(0)),
        leq("max_read >= 2^l", 1 << layers, max_read(tree)),
    ]
    # every nonempty transcript is the inner transcript behind 2l dummy symbols
    outer_p, inner_p = TreeProtocol(tree, n, spectra), TreeProtocol(inner, n)
    extra_ok = True
    for mask in outer_p.support():
        if not mask:
            continue
        lifted: dict = {}
        for t, p in outer_p.transcript_distribution(mask).items():
            head = t.symbols[:2 * layers]
            if len(t) < 2 * layers + 2 or any(head[j] != 0 for j in range(0, 2 * layers, 2)):
                extra_ok = False
            key = t.symbols[2 * layers:]
            lifted[key] = lifted.get(key, 0) + p
        if lifted != {t.symbols: p for t, p in inner_p.transcript_distribution(mask).items()}:
            extra_ok = False
    checks.append(Check("exactly 2l extra symbols per transcript", 0, 0, extra_ok))
    return checks


def gen_small_influence_gadget(f: TruthTable, k: int) -> TruthTable:
    """``g(x, y) = f(x)`` when every ``y_j = -1``, else ``+1``.

    ``x`` are variables ``1..n`` and ``y`` are ``n+1..n+k``.
    """
    if f.n + k > MAX_VARS:
        raise ValueError(f"gadget needs {f.n + k} variables; the limit is {MAX_VARS}")
    if k < 1:
        raise ValueError("k must be at least 1")
    if boolfn.mean(f) != 0:
        raise ValueError("gadget input must be balanced; multiply by a fresh variable first")
    bits = np.zeros(1 << (f.n + k), dtype=np.uint8)
    bits[((1 << k) - 1) << f.n:] = f.bits
    return TruthTable(f.n + k, bits)


def check_gadget(f: TruthTable, k: int, g: TruthTable | None = None) -> list[Check]:
    """Influence identities, the coefficient identity as computed, and as printed.

    For nonempty ``S`` over ``y`` and ``T`` over ``x`` the coefficient is
    ``(-1)^|S| fhat(T) / 2^k``; the printed form ``-fhat(T) / 2^(k+1)`` is
    evaluated too, as its own check.
    """
    g = gen_small_influence_gadget(f, k) if g is None else g
    n = f.n
    scale = Fraction(1, 1 << k)
    inf_f = boolfn.influences(f)
    inf_g = boolfn.influences(g)
    checks = [
        eq("Inf[g] = (k + Inf[f]) / 2^k", sum(inf_g, Fraction(0)), (k + sum(inf_f, Fraction(0))) * scale),
        eq("Inf_y[g] = 2^-k", max(abs(v - scale) for v in inf_g[n:]), Fraction(0)),
        eq("Inf_x[g] = Inf_x[f] / 2^k", max(abs(a - b * scale) for a, b in zip(inf_g[:n], inf_f)), Fraction(0)),
    ]
    fs = fourier_transform(f).scaled.astype(object)
    gs = fourier_transform(g).scaled.astype(object)
    # both scaled by 2^(n+k): fhat(T) 2^(n+k) = fs[T] 2^k
    pc = boolfn.popcounts(k)
    gap_true = gap_stated = Fraction(0)
    for s_mask in range(1, 1 << k):
        sign = -1 if pc[s_mask] & 1 else 1
        for t_mask in range(1, 1 << n):
            actual = Fraction(int(gs[(s_mask << n) | t_mask]), 1 << (n + k))
            fhat = Fraction(int(fs[t_mask]), 1 << n)
            gap_true = max(gap_true, abs(actual - sign * fhat * scale))
            gap_stated = max(gap_stated, abs(actual + fhat * scale / 2))
    checks.append(eq("ghat(S,T) = (-1)^|S| fhat(T) / 2^k", gap_true, Fraction(0)))
    checks.append(Check("ghat(S,T) = -fhat(T) / 2^(k+1)", gap_stated, Fraction(0), gap_stated == 0, equality=True))
    return checks


# ---------------------------------------------------------------------------
# Reports


@dataclass
class PropertyResult:
    name: str
    paper_ref: str
    passed: bool = True
    worst_slack: float | None = None
    instances: int = 0
    witness: dict | None = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "paper_ref": self.paper_ref, "pass": self.passed,
             "worst_slack": _finite(self.worst_slack), "instances": self.instances}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


def _finite(x):
    if x is None or math.isfinite(x):
        return x
    return None


@dataclass
class Report:
    suite: str
    config: dict
    trials: int
    properties: list[PropertyResult]
    observations: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(p.passed for p in self.properties)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "config": self.config,
            "trials": self.trials,
            "pass": self.ok,
            "properties": [p.to_dict() for p in self.properties],
            "observations": self.observations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite", "property", "pass", "worst_slack", "instances"])
        for p in self.properties:
            w.writerow([self.suite, p.name, int(p.passed), "" if p.worst_slack is None else repr(p.worst_slack),
                        p.instances])
        return buf.getvalue()


@dataclass
class TrialResult:
    checks: list[tuple[str, bool, float | None]] = field(default_factory=list)
    witness: dict = field(default_factory=dict)
    observations: dict[str, float] = field(default_factory=dict)

    def add(self, check: Check, name: str | None = None) -> None:
        slack = check.slack
        self.checks.append((name or check.name, bool(check.holds), slack if math.isfinite(slack) else None))

    def flag(self, name: str, holds: bool) -> None:
        self.checks.append((name, bool(holds), None))


# property name -> formula it checks
REFS = {
    "fwht equals naive transform": "fhat(S) = E[f chi_S], fast transform vs direct sum",
    "Parseval": "sum_S fhat(S)^2 = 1",
    "inverse transform reproduces f": "f(x) = sum_S fhat(S) chi_S(x)",
    "influence two ways": "Pr[f(x) != f(x^i)] = sum_{S contains i} fhat(S)^2",
    "mean and variance two ways": "E[f] = fhat(empty); Var[f] = sum_{S nonempty} fhat(S)^2",
    "Var <= Inf": "Var[f] <= Inf[f]",
    "H <= n": "H[fhat^2] <= n",
    "weak entropy bound": "H <= log2(3) (ceil(log2 n) Inf[f] + 1)",
    "binary entropy bound": "2 Inf[f] >= h(eps), fhat(empty)^2 = 1 - eps",
    "Huffman lower bound": "H(X) <= E[len] for a prefix-free binary code",
    "Huffman upper bound": "E[len] <= H(X) + 1 for the Huffman code",
    "Huffman code is prefix-free": "no codeword is a prefix of another; Kraft sum <= 1",
    "tree truth table matches walk": "truth table equals per-input tree evaluation",
    "covariance decompositions agree": "Cov[T] = sum_v Cov[v] 2^-d(v) = Cov[g,h] + (Cov[T0]+Cov[T1])/2 = sum_i Cov_i[T]",
    "Cov <= expected depth": "Cov[T] <= d",
    "Cov <= (k-1) Var": "Cov[T] <= (k-1) Var[f]",
    "Cov <= multiplicity bound": "Cov[T] <= sum_{S nonempty} (m_T(S)-1) fhat(S)^2",
    "root influence bound": "Inf_i[f] >= Var[f]/2 - Cov[root]/2",
    "root split identities": "fhat(S)^2 + fhat(S+i)^2 = (ghat(S)^2 + hhat(S)^2)/2; Inf_j[f] = (Inf_j[g]+Inf_j[h])/2",
    "read-k respected": "max_read(T) <= k",
    "Cov[T] = l Var[f]": "bad tree with l dummy layers: Cov[T] = l Var[f]",
    "dummy influences vanish": "bad tree: every dummy variable has influence 0",
    "max_read >= 2^l": "bad tree: inner variables are read 2^l times",
    "exactly 2l extra symbols per transcript": "bad tree: every nonempty transcript carries 2l dummy symbols",
    "path probability bound": "p_i(T) <= 2 Inf_i[f] + Cov_i[T] for every variable",
    "length <= 4 Inf + 2 Cov": "E|P(X)| <= 4 Inf[f] + 2 Cov[T]",
    "length <= (2k+2) Inf": "E|P(X)| <= (2k+2) Inf[f]",
    "length <= 4 Inf + 2 d": "E|P(X)| <= 4 Inf[f] + 2d",
    "length <= 6d Inf": "E|P(X)| <= 6d Inf[f] when Inf[f] >= 1",
    "H <= log2(3) length + 2 Inf": "H[X] <= log2(3) E|P(X)| + 2 Inf[f]",
    "H <= (2 + (2k+2) log2 3) Inf": "H[X] <= (2 + (2k+2) log2 3) Inf[f]",
    "H <= 9k Inf": "H[X] <= 9k Inf[f]",
    "H <= 12d Inf": "H[X] <= 12d Inf[f] when Inf[f] >= 1",
    "H <= log2(3)(ceil(log n) Inf + 1)": "H <= log2(3) (ceil(log2 n) Inf[f] + 1)",
    "decode(encode(S)) = S and transcript shape": "decode(T, encode(T, S, seed)) = S on the spectral support; "
                                                  "transcripts have length 2|path|, one final BOT, empty iff S empty",
    "path DP equals enumeration": "2 sum_i p_i(T) = sum_S fhat(S)^2 E[|P(T,S)|] by full branching expansion",
    "almost prefix-free": "no reachable transcript is a proper prefix of another, except the empty one",
    "entropy chain from transcripts": "H[X] <= log2(3) E|P(X)| + 2 Inf[f] with E|P(X)| from enumerated transcripts",
    "biased Parseval": "sum_S ftilde(S)^2 = 1 under mu",
    "biased transform matches enumeration": "ftilde(S) = E_mu[f phi_S] by direct summation",
    "biased basis orthonormal": "E_mu[phi_S phi_T] = [S = T]",
    "zero bias reduces to uniform": "mu = 0 gives fhat",
    "small bias continuity": "|ftilde(S) - fhat(S)| small at mu = 2^-10",
    "FEI+ constant matches entropy goodness": "FEI+ minimal C = least C with H[Y] in the C-good inequality",
    "good code implies FEI+": "FEI+ minimal C <= least C for which the Huffman code is C-good",
    "Huffman code is good at its constant": "E[len] <= C (E|Y|-1) + sum_i Pr[i in Y] log 1/(1-mu_i^2) + log Var_mu[f]",
    "coefficient identity": "htilde(Y) = ftilde(S) prod_{i in S} gtilde_i(Y_i)/sigma_i",
    "law of S equals outer nonempty law": "S = {i : Y_i nonempty} ~ ftilde^2 minus empty, under eta",
    "conditional laws of Y_i": "Y_i given Y_i nonempty ~ gtilde_i^2 minus empty",
    "law of Y factors as outer times inner laws": "Pr[Y] = Pr_f[S] prod_{i in S} Pr_{g_i}[Y_i]",
    "Var_eta[f] = Var_mu[h]": "Var_eta[f] = Var_mu[h]",
    "eta = E_mu[g]": "eta_i = E_mu[g_i] and Var_eta[y_i] = Var_mu[g_i]",
    "composed code round trip": "decode(encode(Y)) = Y over h's nonempty support",
    "expected length formula equals enumeration": "E|P_h| = E|P_f(S)| + sum_i Pr[i in S] E|P_i(Y_i)|",
    "composed code is prefix-free": "P_f(S) P_i1(Y_i1) ... is prefix-free",
    "parts are C*-good": "each part's Huffman code is C*-good, C* = max of their minimal constants",
    "composed code is C*-good for h": "P_h is C*-good for h under mu",
    "H[h] = H[f] + sum_i Pr[i in S] H[g_i]": "H[htilde^2 minus empty] = H[ftilde^2 minus empty] + sum_i Pr[i in S] H[gtilde_i^2 minus empty]",
    "block code excess within 1/t": "H <= E[len_t]/t <= H + 1/t for t copies of h's law",
    "parallel composed code within honest bound": "per-copy length <= H[h] + (1 + sum_i Pr[copies mention i]) / t",
    "Inf[g] = (k + Inf[f]) / 2^k": "Inf[g] = (k + Inf[f]) / 2^k",
    "Inf_y[g] = 2^-k": "each y_j has influence 2^-k",
    "Inf_x[g] = Inf_x[f] / 2^k": "Inf_{x_i}[g] = Inf_i[f] / 2^k",
    "ghat(S,T) = (-1)^|S| fhat(T) / 2^k": "gadget coefficient, S over y and T over x both nonempty, as computed",
    "ghat(S,T) = -fhat(T) / 2^(k+1)": "gadget coefficient in the printed form",
}


# ---------------------------------------------------------------------------
# Trials


def _tree_witness(tree: DecisionTree, n: int) -> dict:
    return {"tree": to_sexpr(tree), "n": n, "table": to_truth_table(tree, n).to_hex()}


def _table_witness(f: TruthTable) -> dict:
    return {"n": f.n, "table": f.to_hex()}


def _huffman_checks(res: TrialResult, weights: dict) -> None:
    """Huffman bounds for a law given as integer weights (or exact probabilities)."""
    weights = integer_weights(weights)
    code = huffman_build(weights, 2)
    lengths = code.lengths()
    H = boolfn.entropy_of_weights(list(weights.values()))
    E = float(Fraction(sum(w * lengths[k] for k, w in weights.items()), sum(weights.values())))
    res.add(leq("Huffman lower bound", H, E))
    res.add(leq("Huffman upper bound", E, H + 1.0))
    res.flag("Huffman code is prefix-free", is_prefix_free(code) and kraft_check(code))


def _spectral_dist(spec: boolfn.Spectrum) -> dict:
    w = spec.weights()
    return {int(m): int(w[m]) for m in np.flatnonzero(w)}


def _trial_tree(cfg: GenConfig, suite: int, t: int) -> tuple[DecisionTree, int, int]:
    """Instance for a tree trial: random trees first, then the bad-tree family."""
    if t >= cfg.trials:
        layers = BAD_TREE_LAYERS[t - cfg.trials]
        inner = gen_random_tree(GenConfig(n=3, k=1, seed=cfg.seed), random.Random(derive_seed(cfg.seed, suite, 99)))
        tree = gen_bad_tree(layers, inner)
        return tree, num_vars(tree), layers
    n = 2 + t % max(1, cfg.n - 1) if cfg.n >= 2 else 1
    k = 1 + (t // max(1, cfg.n - 1)) % cfg.k
    sub = replace(cfg, n=n, k=k, depth=min(cfg.depth or n, n))
    return gen_random_tree(sub, random.Random(derive_seed(cfg.seed, suite, t))), n, -1


def _bad_tree_checks(res: TrialResult, tree: DecisionTree, n: int, layers: int) -> None:
    inner = tree
    for _ in range(layers):
        inner = inner.left
    for c in check_bad_tree(tree, layers, inner, n):
        res.add(c)


def trial_fourier(cfg: GenConfig, t: int) -> TrialResult:
    n = 1 + t % cfg.n
    f = TruthTable.random(n, numpy_rng(cfg.seed, 0, t))
    res = TrialResult(witness=_table_witness(f))
    spec = fourier_transform(f)
    if n <= 8:
        res.flag("fwht equals naive transform", np.array_equal(spec.scaled, oracles.naive_fourier_scaled(f.values())))
    res.add(eq("Parseval", int(spec.weights().sum()), 1 << (2 * n)))
    res.flag("inverse transform reproduces f", np.array_equal(spec.evaluate_all(), f.values()))
    res.flag("influence two ways", all(spec.influence(i) == boolfn.influence(f, i) for i in range(1, n + 1)))
    res.flag("mean and variance two ways",
             spec.mean() == boolfn.mean(f) and spec.variance() == boolfn.variance(f)
             and spec.total_influence() == boolfn.total_influence(f))
    inf = spec.total_influence()
    H = spectral_entropy(spec)
    res.add(leq("Var <= Inf", spec.variance(), inf))
    res.add(leq("H <= n", H, float(n)))
    res.add(leq("weak entropy bound", H, boolfn.weak_entropy_bound(n, inf)))
    eps = float(spec.variance())
    res.add(leq("binary entropy bound", boolfn.binary_entropy(eps), 2 * float(inf), 1e-12))
    _huffman_checks(res, _spectral_dist(spec))
    return res


def trial_covariance(cfg: GenConfig, t: int) -> TrialResult:
    tree, n, layers = _trial_tree(cfg, 1, t)
    res = TrialResult(witness=_tree_witness(tree, n))
    spectra = TreeSpectra(tree, n)
    if n <= 6:
        f = to_truth_table(tree, n)
        walk = [eval_tree(tree, boolfn.input_point(n, j)) for j in range(1 << n)]
        res.flag("tree truth table matches walk", list(f.values()) == walk)
    rep = tree_covariance(tree, spectra=spectra)
    res.flag("covariance decompositions agree",
             rep.check() and rep.total == tree_covariance_recursive(tree, spectra=spectra))
    b = check_covariance_bounds(tree, spectra=spectra)
    res.add(leq("Cov <= expected depth", b.cov, b.expected_depth))
    res.add(leq("Cov <= (k-1) Var", b.cov, max(b.max_read - 1, 0) * b.variance))
    res.add(leq("Cov <= multiplicity bound", b.cov, b.multiplicity_bound))
    holds, slack = root_influence_bound(tree, spectra=spectra)
    res.add(Check("root influence bound", 0, slack, holds))
    if n <= 8:
        res.flag("root split identities", identity_checks(tree, n))
    if layers < 0:
        res.add(leq("read-k respected", b.max_read, 1 + (t // max(1, cfg.n - 1)) % cfg.k))
        if b.log_k_ratio is not None:
            res.observations["Cov / (log2 k Var)"] = b.log_k_ratio
    else:
        _bad_tree_checks(res, tree, n, layers)
        if b.log_k_ratio is not None:
            res.observations["bad tree Cov / (log2 k Var)"] = b.log_k_ratio
    return res


def trial_protocol(cfg: GenConfig, t: int) -> TrialResult:
    tree, n, layers = _trial_tree(cfg, 2, t)
    res = TrialResult(witness=_tree_witness(tree, n))
    proto = TreeProtocol(tree, n)
    main = check_main_lemma(tree, protocol=proto)
    res.add(Check("path probability bound", 0, min(main.slack.values(), default=Fraction(0)), main.ok))
    report = entropy_bound_report(tree, protocol=proto)
    for c in report.checks:
        res.add(c)
    res.observations["length strictly below 4 Inf + 2 Cov"] = float(report.strict_length_bound)

    ok, _ = round_trip(proto, [derive_seed(cfg.seed, 2, t, s) for s in range(cfg.codec_seeds)])
    res.flag("decode(encode(S)) = S and transcript shape", ok)

    if sum(1 for _ in internal_nodes(tree)) <= ENUMERATION_NODE_LIMIT:
        enumerated = proto.expected_length_by_enumeration()
        res.add(eq("path DP equals enumeration", report.expected_length, enumerated))
        ok, _ = check_almost_prefix_free(proto)
        res.flag("almost prefix-free", ok)
        H = report.entropy
        res.add(leq("entropy chain from transcripts", H,
                    math.log2(3) * float(enumerated) + 2 * float(report.total_influence)))
    _huffman_checks(res, _spectral_dist(proto.spectrum))
    if layers >= 0:
        _bad_tree_checks(res, tree, n, layers)
    return res


def _random_bias(rng: random.Random, n: int, cap: Fraction = Fraction(1)) -> BiasVector:
    out = []
    for _ in range(n):
        q = rng.choice((2, 3, 4, 5, 6, 8))
        lim = math.floor(cap * q) if cap < 1 else q - 1
        out.append(Fraction(rng.randint(-lim, lim), q))
    return BiasVector(tuple(out))


def _random_nonconstant(n: int, gen: np.random.Generator) -> TruthTable:
    while True:
        f = TruthTable.random(n, gen)
        if not f.is_constant():
            return f


def trial_biased(cfg: GenConfig, t: int) -> TrialResult:
    n = 1 + t % min(cfg.n, 6)
    gen = numpy_rng(cfg.seed, 3, t)
    rng = random.Random(derive_seed(cfg.seed, 3, t))
    f = _random_nonconstant(n, gen)
    mu = _random_bias(rng, n)
    res = TrialResult(witness={**_table_witness(f), "bias": [str(m) for m in mu.mu]})
    spec = biased_fourier(f, mu)
    res.add(eq("biased Parseval", spec.parseval(), Fraction(1)))
    if n <= 4:
        res.flag("biased transform matches enumeration", list(spec.raw) == oracles.naive_biased_raw(f, mu.mu))
    if n <= 3:
        gram = oracles.biased_gram(mu.mu)
        sig = mu.sigma_sq
        ok = True
        for S in range(1 << n):
            for T in range(1 << n):
                norm = Fraction(1)
                for v in boolfn.variables_of(S):
                    norm *= sig[v - 1]
                ok &= gram[S][T] == (norm if S == T else 0)
        res.flag("biased basis orthonormal", ok)
    uniform = fourier_transform(f)
    zero = biased_fourier(f, BiasVector.uniform(n))
    res.flag("zero bias reduces to uniform", all(zero.raw[m] == uniform.coefficient(m) for m in range(1 << n)))
    tiny = biased_fourier(f, BiasVector((Fraction(1, 1024),) * n))
    gap = max(abs(tiny.value(m) - float(uniform.coefficient(m))) for m in range(1 << n))
    res.add(leq("small bias continuity", gap, n / 256))

    sides = fei_plus_sides(spec)
    fei_c = sides.min_constant
    ent_c = entropy_min_c(spec)
    if math.isfinite(fei_c) and math.isfinite(ent_c):
        res.add(leq("FEI+ constant matches entropy goodness", abs(fei_c - ent_c), 1e-9 * max(1.0, abs(fei_c)), 0.0))
    else:
        res.flag("FEI+ constant matches entropy goodness", math.isinf(fei_c) == math.isinf(ent_c))
    law = spec.nonempty_distribution()
    code = huffman_build(law, 2)
    E = code.expected_length(law)
    code_c = min_good_c(spec, E)
    res.add(leq("good code implies FEI+", fei_c, code_c) if math.isfinite(code_c)
            else Check("good code implies FEI+", 0, 0, True))
    res.flag("Huffman code is good at its constant", c_good_check(spec, E, code_c))
    _huffman_checks(res, law)
    if math.isfinite(fei_c):
        res.observations["FEI+ minimal constant"] = fei_c
    return res


def random_composition(rng: random.Random, gen: np.random.Generator, k: int,
                       max_block: int = 3, bias_cap: Fraction = Fraction(3, 4)) -> Composition:
    outer = _random_nonconstant(k, gen)
    sizes = [rng.randint(1, max_block) for _ in range(k)]
    inner, blocks, start = [], [], 1
    for s in sizes:
        inner.append(_random_nonconstant(s, gen))
        blocks.append(tuple(range(start, start + s)))
        start += s
    return Composition(outer, tuple(inner), tuple(blocks), _random_bias(rng, start - 1, bias_cap))


def trial_composition(cfg: GenConfig, t: int) -> TrialResult:
    k = 1 + t % 3
    rng = random.Random(derive_seed(cfg.seed, 4, t))
    comp = random_composition(rng, numpy_rng(cfg.seed, 4, t), k)
    res = TrialResult(witness={
        "outer": _table_witness(comp.outer), "inner": [_table_witness(g) for g in comp.inner],
        "blocks": [list(b) for b in comp.blocks], "bias": [str(m) for m in comp.bias.mu]})
    ident = verify_coefficient_identity(comp)
    res.add(Check("coefficient identity", ident.max_abs_error, 1e-9, ident.ok))
    claims = verify_distribution_claims(comp).checks
    res.flag("law of S equals outer nonempty law", claims[0].holds)
    res.flag("conditional laws of Y_i", all(c.holds for c in claims[1:1 + comp.k]))
    res.flag("law of Y factors as outer times inner laws", claims[1 + comp.k].holds)
    res.flag("Var_eta[f] = Var_mu[h]", claims[2 + comp.k].holds)
    res.flag("eta = E_mu[g]", all(c.holds for c in claims[3 + comp.k:]))

    code = ComposedCode(comp)
    law = comp.h_spectrum.nonempty_distribution()
    res.flag("composed code round trip", all(code.decode(code.encode(m)) == m for m in law))
    rep = verify_c_good_composition(comp, code, block_cap=COMPOSITION_BLOCK_CAP)
    parts_ok = True
    for c in rep.checks:
        if c.name.startswith(("outer code", "inner code")):
            parts_ok &= c.holds
        elif "per-copy block length" in c.name:
            res.add(c, "block code excess within 1/t")
        elif c.name.startswith("t=") and "parallel" in c.name:
            res.add(c, "parallel composed code within honest bound")
        else:
            res.add(c)
    res.flag("parts are C*-good", parts_ok)
    if math.isfinite(rep.c_star):
        res.observations["C*"] = rep.c_star
    for t_, (per_copy, H) in rep.block.items():
        res.observations[f"block t={t_} per-copy excess"] = float(per_copy) - H
    for t_, (per_copy, bound) in rep.parallel.items():
        res.observations[f"parallel t={t_} per-copy excess over H[h]"] = \
            float(per_copy) - comp.h_spectrum.entropy()
    return res


def trial_gadgets(cfg: GenConfig, t: int) -> TrialResult:
    top = max(2, min(cfg.n, 10))
    n = 2 + t % (top - 1) if top > 2 else 2
    k = 1 + (t // (top - 1)) % 4
    while n + k > 14:
        k -= 1
    gen = numpy_rng(cfg.seed, 5, t)
    f = TruthTable.random(n, gen, balanced=True)
    g = gen_small_influence_gadget(f, k)
    res = TrialResult(witness={**_table_witness(f), "k": k})
    for c in check_gadget(f, k, g):
        res.add(c)
    res.add(leq("binary entropy bound", boolfn.binary_entropy(float(boolfn.variance(g))),
                2 * float(boolfn.total_influence(g)), 1e-12))
    gs = fourier_transform(g)
    res.observations["H[g] / Inf[g]"] = spectral_entropy(gs) / float(gs.total_influence())
    return res


TRIALS: dict[str, Callable[[GenConfig, int], TrialResult]] = {
    "fourier": trial_fourier,
    "covariance": trial_covariance,
    "protocol": trial_protocol,
    "biased": trial_biased,
    "composition": trial_composition,
    "gadgets": trial_gadgets,
}


def _extra_instances(name: str) -> int:
    return len(BAD_TREE_LAYERS) if name in ("covariance", "protocol") else 0


def _run_one(args: tuple[str, GenConfig, int]) -> TrialResult:
    name, cfg, t = args
    return TRIALS[name](cfg, t)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FEI_THREADS", "1")))
    except ValueError:
        return 1


def run_suite(name: str, cfg: GenConfig, workers: int | None = None) -> Report:
    """Run every trial of a suite and fold the results into a report."""
    if name not in TRIALS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    total = cfg.trials + _extra_instances(name)
    jobs = [(name, cfg, t) for t in range(total)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and total > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, total // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]

    props: dict[str, PropertyResult] = {}
    obs: dict[str, list[float]] = {}
    for t, res in enumerate(results):
        for pname, holds, slack in res.checks:
            p = props.setdefault(pname, PropertyResult(pname, REFS.get(pname, pname)))
            p.instances += 1
            if slack is not None:
                p.worst_slack = slack if p.worst_slack is None else min(p.worst_slack, slack)
            if not holds and p.passed:
                p.passed = False
                p.witness = {"trial": t, **res.witness}
        for key, value in res.observations.items():
            obs.setdefault(key, []).append(value)
    observations = {k: {"count": len(v), "min": min(v), "max": max(v), "mean": sum(v) / len(v)}
                    for k, v in sorted(obs.items())}
    return Report(name, asdict(cfg), cfg.trials, sorted(props.values(), key=lambda p: p.name), observations)
