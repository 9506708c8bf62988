import json
import random
from fractions import Fraction

import numpy as np
import pytest

from feicode import harness
from feicode.boolfn import TruthTable
from feicode.dtree import max_read, num_vars, parse_tree, to_sexpr
from feicode.harness import (GenConfig, check_bad_tree, check_gadget, gen_bad_tree, gen_random_tree,
                             gen_small_influence_gadget, run_suite)
from feicode.oracles import flip_influence
from feicode.speccode import TreeProtocol


def test_config_validation():
    for bad in (dict(n=0), dict(n=21), dict(k=0), dict(trials=0), dict(depth=0), dict(stop_prob=1.0)):
        with pytest.raises(ValueError):
            GenConfig(**bad)


def test_read_once_generation():
    rng = random.Random(0)
    assert all(max_read(gen_random_tree(GenConfig(n=8, k=1), rng)) == 1 for _ in range(100))


def test_read_k_generation():
    rng = random.Random(1)
    cfg = GenConfig(n=10, k=3)
    assert all(max_read(gen_random_tree(cfg, rng)) <= 3 for _ in range(1000))


def test_generation_is_deterministic():
    cfg = GenConfig(n=9, k=2, seed=77)
    assert to_sexpr(gen_random_tree(cfg)) == to_sexpr(gen_random_tree(cfg))


def test_depth_beyond_n():
    with pytest.raises(ValueError):
        gen_random_tree(GenConfig(n=3, depth=4))


def test_bad_tree_zero_layers():
    inner = parse_tree("(1 (2 +1 -1) (3 -1 +1))")
    assert gen_bad_tree(0, inner) is inner
    assert all(c.holds for c in check_bad_tree(inner, 0, inner))


@pytest.mark.parametrize("layers", [1, 2, 3])
def test_bad_tree_checks(layers):
    inner = parse_tree("(1 (2 +1 -1) (3 -1 +1))")
    tree = gen_bad_tree(layers, inner)
    assert all(c.holds for c in check_bad_tree(tree, layers, inner)), check_bad_tree(tree, layers, inner)


def test_bad_tree_extra_symbols():
    inner = parse_tree("(1 (2 +1 -1) (3 -1 +1))")
    tree = gen_bad_tree(3, inner)
    outer, base = TreeProtocol(tree), TreeProtocol(inner, num_vars(tree))
    for mask in outer.support():
        if mask:
            assert len(outer.encode(mask, 5)) == len(base.encode(mask, 5)) + 6


def test_shared_dummies():
    tree = gen_bad_tree(2, parse_tree("(1 +1 -1)"), distinct_dummies=False)
    assert to_sexpr(tree) == "(2 (3 (1 +1 -1) (1 +1 -1)) (3 (1 +1 -1) (1 +1 -1)))"
    assert all(c.holds for c in check_bad_tree(tree, 2, parse_tree("(1 +1 -1)")))


def test_gadget_examples():
    g = gen_small_influence_gadget(TruthTable.parity(2), 1)
    assert sum(flip_influence(g, i) for i in range(1, 4)) == Fraction(3, 2)
    g = gen_small_influence_gadget(TruthTable.dictator(1), 2)
    assert sum(flip_influence(g, i) for i in range(1, 4)) == Fraction(3, 4)
    for y in (2, 3):
        assert flip_influence(g, y) == Fraction(1, 4)
    with pytest.raises(ValueError):
        gen_small_influence_gadget(TruthTable.and_(2), 1)


def test_gadget_check_names_and_outcomes():
    f = TruthTable.random(4, np.random.default_rng(3), balanced=True)
    result = {c.name: c.holds for c in check_gadget(f, 2)}
    assert result["Inf[g] = (k + Inf[f]) / 2^k"]
    assert result["ghat(S,T) = (-1)^|S| fhat(T) / 2^k"]
    # the printed -fhat(T)/2^(k+1) disagrees with the computed coefficient
    assert not result["ghat(S,T) = -fhat(T) / 2^(k+1)"]


def test_trivial_suite():
    report = run_suite("fourier", GenConfig(n=1, trials=1))
    assert report.ok
    data = json.loads(report.to_json())
    assert {"suite", "config", "trials", "properties"} <= data.keys()
    assert {"name", "paper_ref", "pass", "worst_slack"} <= data["properties"][0].keys()


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope", GenConfig())


@pytest.mark.parametrize("suite", ["fourier", "covariance", "protocol", "biased", "composition"])
def test_small_suites_pass(suite):
    report = run_suite(suite, GenConfig(n=6, trials=12))
    assert report.ok, [p.name for p in report.properties if not p.passed]


def test_failure_carries_witness():
    report = run_suite("gadgets", GenConfig(n=4, trials=3))
    failed = [p for p in report.properties if not p.passed]
    assert [p.name for p in failed] == ["ghat(S,T) = -fhat(T) / 2^(k+1)"]
    assert {"trial", "n", "table", "k"} <= failed[0].witness.keys()
    assert TruthTable.from_hex(failed[0].witness["n"], failed[0].witness["table"]).n == failed[0].witness["n"]


def test_worker_count_does_not_change_report():
    cfg = GenConfig(n=5, trials=8)
    assert run_suite("protocol", cfg, workers=1).to_json() == run_suite("protocol", cfg, workers=2).to_json()


def test_generation_gives_up(monkeypatch):
    # every leaf is +1, so no attempt yields a nonconstant tree
    monkeypatch.setattr(harness, "MAX_ATTEMPTS", 20)
    with pytest.raises(RuntimeError):
        gen_random_tree(GenConfig(n=3, leaf_bias=1.0))
