"""Acceptance gate: one group of tests per criterion, summarized as PASS/FAIL lines.

Run with ``pytest -m acceptance``.  The large suites are computed once per
session and shared across criteria.
"""
from __future__ import annotations

import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from feicode import boolfn
from feicode.boolfn import TruthTable, conditional_nonempty, fourier_transform, fwht, spectral_samples
from feicode.cli import main
from feicode.coding import entropy, per_copy_length
from feicode.dtree import check_covariance_bounds, internal_nodes, max_read
from feicode.harness import GenConfig, gen_bad_tree, gen_random_tree, run_suite
from feicode.oracles import character_matrix
from feicode.rng import derive_seed, numpy_rng
from feicode.speccode import TreeProtocol, check_almost_prefix_free, path_of, round_trip

pytestmark = pytest.mark.acceptance

TREE_TRIALS = 10_000
BAD_TREE_INSTANCES = 5  # l = 0..4, appended by the tree suites


def crit(n):
    return pytest.mark.criterion(n)


@pytest.fixture(scope="session")
def protocol_report():
    return run_suite("protocol", GenConfig(n=10, k=3, trials=TREE_TRIALS))


@pytest.fixture(scope="session")
def covariance_report():
    return run_suite("covariance", GenConfig(n=10, k=3, trials=TREE_TRIALS))


@pytest.fixture(scope="session")
def fourier_report():
    return run_suite("fourier", GenConfig(n=10, trials=TREE_TRIALS))


def prop(report, name):
    found = [p for p in report.properties if p.name == name]
    assert found, f"{report.suite} has no property {name!r}"
    return found[0]


def assert_clean(report, name, instances=None):
    p = prop(report, name)
    assert p.passed, f"{name} failed on {p.witness}"
    if instances is not None:
        assert p.instances == instances, (name, p.instances)
    return p


# 1 -------------------------------------------------------------------------

@crit(1)
def test_fwht_matches_naive_on_every_four_variable_function():
    start = time.perf_counter()
    bits = ((np.arange(1 << 16)[:, None] >> np.arange(16)) & 1).astype(np.int64)
    values = 1 - 2 * bits
    fast = fwht(values)
    naive = values @ character_matrix(4)
    assert np.array_equal(fast, naive)
    assert np.all((fast * fast).sum(axis=1) == 1 << 8)  # Parseval, scaled by 4^n
    assert time.perf_counter() - start < 30


@crit(1)
def test_fwht_matches_naive_on_random_functions():
    start = time.perf_counter()
    for n in range(5, 9):
        for t in range(250):
            f = TruthTable.random(n, numpy_rng(11, n, t))
            s = fourier_transform(f)
            assert np.array_equal(s.scaled, f.values() @ character_matrix(n))
            assert sum((c * c for _, c in s.items()), Fraction(0)) == 1
    assert time.perf_counter() - start < 30


# 2 -------------------------------------------------------------------------

@crit(2)
def test_path_probability_bound(protocol_report):
    assert_clean(protocol_report, "path probability bound", TREE_TRIALS + BAD_TREE_INSTANCES)
    assert protocol_report.config["n"] == 10 and protocol_report.config["k"] == 3


# 3 -------------------------------------------------------------------------

@crit(3)
@pytest.mark.parametrize("name", ["length <= 4 Inf + 2 Cov", "length <= (2k+2) Inf", "length <= 4 Inf + 2 d"])
def test_expected_length_bounds(protocol_report, name):
    assert_clean(protocol_report, name, TREE_TRIALS + BAD_TREE_INSTANCES)


# 4 -------------------------------------------------------------------------

@crit(4)
def test_entropy_bound_read_k(protocol_report):
    assert_clean(protocol_report, "H <= 9k Inf", TREE_TRIALS + BAD_TREE_INSTANCES)
    assert_clean(protocol_report, "H <= (2 + (2k+2) log2 3) Inf", TREE_TRIALS + BAD_TREE_INSTANCES)


@crit(4)
def test_entropy_bound_expected_depth(protocol_report):
    p = assert_clean(protocol_report, "H <= 12d Inf")
    assert p.instances > 0


# 5 -------------------------------------------------------------------------

@crit(5)
@pytest.mark.parametrize("name", ["Cov <= (k-1) Var", "Cov <= multiplicity bound", "Cov <= expected depth",
                                  "covariance decompositions agree"])
def test_covariance_bounds(covariance_report, name):
    assert_clean(covariance_report, name, TREE_TRIALS + BAD_TREE_INSTANCES)


@crit(5)
@pytest.mark.parametrize("layers", [1, 2, 3, 4])
def test_bad_tree_covariance_is_l_var(layers):
    rng = random.Random(derive_seed(5, layers))
    inner = gen_random_tree(GenConfig(n=4, k=1), rng)
    tree = gen_bad_tree(layers, inner)
    b = check_covariance_bounds(tree)
    assert b.cov == layers * b.variance
    assert max_read(tree) >= 2 ** layers and b.ok


# 6 -------------------------------------------------------------------------

def _codec_tree(t):
    n = 2 + t % 7
    k = 1 + (t // 7) % 3
    return gen_random_tree(GenConfig(n=n, k=k), random.Random(derive_seed(6, t))), n


@crit(6)
def test_codec_round_trip_full_support():
    for t in range(1000):
        tree, n = _codec_tree(t)
        ok, witness = round_trip(TreeProtocol(tree, n), [derive_seed(6, t, s) for s in range(100)])
        assert ok, (t, witness)


@crit(6)
def test_almost_prefix_free_by_enumeration():
    checked = 0
    for t in range(1000):
        tree, n = _codec_tree(t)
        if sum(1 for _ in internal_nodes(tree)) <= 15:
            ok, witness = check_almost_prefix_free(TreeProtocol(tree, n))
            assert ok, (t, witness)
            checked += 1
    assert checked >= 500


@crit(6)
def test_monte_carlo_path_probabilities():
    tree = gen_random_tree(GenConfig(n=8, k=3), random.Random(derive_seed(6, 10_000)))
    proto = TreeProtocol(tree, 8)
    exact = proto.path_probabilities().p
    N = 100_000
    rng = random.Random(66)
    counts = dict.fromkeys(exact, 0)
    for S in spectral_samples(proto.spectrum, N, seed=66).tolist():
        for v in path_of(tree, proto.encode(S, rng)):
            counts[v] += 1
    for i, p in exact.items():
        sd = math.sqrt(float(p) * (1 - float(p)) / N)
        assert abs(counts[i] / N - float(p)) <= 4 * sd + 1e-12, (i, counts[i] / N, p)


# 7 -------------------------------------------------------------------------

@crit(7)
@pytest.mark.parametrize("suite", ["fourier", "protocol"])
def test_huffman_within_one_bit(suite, fourier_report, protocol_report):
    report = fourier_report if suite == "fourier" else protocol_report
    for name in ("Huffman lower bound", "Huffman upper bound", "Huffman code is prefix-free"):
        assert_clean(report, name)


@crit(7)
def test_block_code_excess():
    for t in range(200):
        n = 2 + t % 2
        f = TruthTable.random(n, numpy_rng(7, t))
        s = fourier_transform(f)
        laws = [{S: s.probability(S) for S in s.support().tolist()}]
        if not f.is_constant():
            laws.append(conditional_nonempty(s))
        for law in laws:
            H = entropy(law)
            for copies in (1, 2, 3, 4):
                per = float(per_copy_length(law, copies))
                assert H - 1e-9 <= per <= H + 1 / copies + 1e-9


# 8 -------------------------------------------------------------------------

@crit(8)
def test_composition_suite(tmp_path):
    out = tmp_path / "composition.json"
    assert main(["verify", "--suite", "composition", "--trials", "200", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    props = {p["name"]: p for p in data["properties"]}
    for name in ("coefficient identity", "law of S equals outer nonempty law", "conditional laws of Y_i",
                 "composed code is C*-good for h", "parts are C*-good", "Var_eta[f] = Var_mu[h]"):
        assert props[name]["pass"] and props[name]["instances"] == 200, name


# 9 -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def gadget_report():
    return run_suite("gadgets", GenConfig(n=10, k=4, trials=100))


@crit(9)
def test_gadget_total_influence(gadget_report):
    assert_clean(gadget_report, "Inf[g] = (k + Inf[f]) / 2^k", 100)


@crit(9)
def test_gadget_coefficient_printed_form(gadget_report):
    assert_clean(gadget_report, "ghat(S,T) = -fhat(T) / 2^(k+1)", 100)


@crit(9)
def test_binary_entropy_bound_on_random_functions():
    for t in range(10_000):
        f = TruthTable.random(1 + t % 8, numpy_rng(9, t))
        assert boolfn.binary_entropy_influence_check(f), t


# 10 ------------------------------------------------------------------------

@crit(10)
def test_weak_bound_every_instance(fourier_report, protocol_report):
    assert_clean(fourier_report, "weak entropy bound", TREE_TRIALS)
    assert_clean(protocol_report, "H <= log2(3)(ceil(log n) Inf + 1)", TREE_TRIALS + BAD_TREE_INSTANCES)


@crit(10)
def test_entropy_chain_from_enumerated_transcripts(protocol_report):
    p = assert_clean(protocol_report, "entropy chain from transcripts")
    assert p.instances >= TREE_TRIALS // 2
    assert_clean(protocol_report, "path DP equals enumeration", p.instances)


# 11 ------------------------------------------------------------------------

@crit(11)
@pytest.mark.parametrize("suite", ["fourier", "covariance", "protocol", "biased", "composition", "gadgets"])
def test_verify_is_byte_identical(suite, tmp_path, monkeypatch):
    args = ["verify", "--suite", suite, "--n", "6", "--trials", "20", "--seed", "314"]
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    main(args + ["--out", str(first)])
    monkeypatch.setenv("FEI_THREADS", "2")
    main(args + ["--out", str(second)])
    assert first.read_bytes() == second.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

