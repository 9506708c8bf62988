import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feicode.boolfn import TruthTable, fourier_transform, spectral_samples
from feicode.dtree import Leaf, Node, internal_nodes, parse_tree, to_truth_table
from feicode.harness import GenConfig, gen_random_tree
from feicode.speccode import (NotInSupportError, Transcript, TranscriptError, TreeProtocol,
                              check_almost_prefix_free, check_main_lemma, decode, encode,
                              entropy_bound_report, path_of, path_probabilities, round_trip)


def parity_tree(n, v=1, sign=1):
    if v > n:
        return Leaf(sign)
    return Node(v, parity_tree(n, v + 1, sign), parity_tree(n, v + 1, -sign))


def test_empty_set_gives_empty_transcript(fig1):
    assert len(encode(fig1, 0, seed=3, n=5)) == 0
    assert decode(fig1, "") == 0


def test_fig1_transcripts(fig1):
    # After x1 is emitted the remaining set is {3}.  The right subtree is -x3
    # (weight 1); the left one is 1/2 + x5/2 - x3/2 + x3 x5/2 (weight 1/4).
    proto = TreeProtocol(fig1, 5)
    dist = proto.transcript_distribution(0b00101)
    assert {t.text(): p for t, p in dist.items()} == {"111#": Fraction(4, 5), "10011#": Fraction(1, 5)}
    seen = {proto.encode(0b00101, s).text() for s in range(60)}
    assert seen == {"111#", "10011#"}
    assert decode(fig1, "10011#") == 0b00101
    assert decode(fig1, "111#") == 0b00101
    assert path_of(fig1, "10011#") == [1, 5, 3]


def test_not_in_support(fig1):
    proto = TreeProtocol(fig1, 5)
    missing = next(m for m in range(1, 32) if not proto.in_support(m))
    with pytest.raises(NotInSupportError):
        proto.encode(missing, 0)


@pytest.mark.parametrize("text", ["#", "1", "10", "1#1", "111#0", "1x1#"])
def test_malformed_transcripts(fig1, text):
    with pytest.raises(TranscriptError):
        decode(fig1, text)


def test_descent_past_leaf():
    with pytest.raises(TranscriptError):
        decode(parse_tree("(1 +1 -1)"), "1010#")


def test_binary_form():
    t = Transcript.from_text("10011#")
    assert t.to_bytes() == bytes([0b01000001, 0b0110_1111])
    assert Transcript.from_bytes(t.to_bytes()) == t
    assert Transcript.from_bytes(Transcript.from_text("0110").to_bytes()).text() == "0110"


def test_dictator_path_probability():
    pp = path_probabilities(parse_tree("(1 +1 -1)"))
    assert pp.p == {1: 1}
    assert pp.expected_transcript_len == 2 == 2 * pp.expected_path_len
    rep = check_main_lemma(parse_tree("(1 +1 -1)"))
    assert rep.bound[1] == 2 and rep.ok


def test_absent_variable_has_zero_probability():
    pp = path_probabilities(parse_tree("(2 +1 -1)"), n=3)
    assert pp.p.get(1, 0) == 0 and pp.p.get(3, 0) == 0 and pp.p[2] == 1


def test_fig1_path_probabilities(fig1):
    proto = TreeProtocol(fig1, 5)
    pp = proto.path_probabilities()
    assert pp.p[1] == fourier_transform(to_truth_table(fig1, 5)).variance()
    assert pp.expected_transcript_len == proto.expected_length_by_enumeration()


def test_read_once_main_lemma_without_covariance():
    rng = random.Random(1)
    for t in range(40):
        tree = gen_random_tree(GenConfig(n=7, k=1, seed=t), rng)
        rep = check_main_lemma(tree, 7)
        assert all(rep.cov.get(i, 0) == 0 for i in rep.p)
        assert all(rep.p[i] <= 2 * rep.inf[i] for i in rep.p)
        report = entropy_bound_report(tree, 7)
        assert report.ok and report.entropy <= 9 * float(report.total_influence) + 1e-9


def test_parity_and_constant_reports():
    rep = entropy_bound_report(parity_tree(4))
    assert rep.entropy == 0 and rep.ok
    assert to_truth_table(parity_tree(4)) == TruthTable.parity(4)
    assert entropy_bound_report(parse_tree("+1"), 3).ok


def test_monte_carlo_path_probabilities(fig1):
    proto = TreeProtocol(fig1, 5)
    exact = proto.path_probabilities().p
    N = 20_000
    draws = spectral_samples(proto.spectrum, N, seed=4)
    rng = random.Random(4)
    counts = {i: 0 for i in exact}
    for S in draws.tolist():
        for v in path_of(fig1, proto.encode(S, rng)):
            counts[v] += 1
    for i, p in exact.items():
        sd = np.sqrt(float(p) * (1 - float(p)) / N)
        assert abs(counts[i] / N - float(p)) <= 4 * sd + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 2**32))
def test_protocol_properties(n, k, seed):
    tree = gen_random_tree(GenConfig(n=n, k=k, seed=seed), random.Random(seed))
    proto = TreeProtocol(tree, n)
    assert round_trip(proto, range(5))[0]
    assert check_main_lemma(tree, protocol=proto).ok
    assert entropy_bound_report(tree, protocol=proto).ok
    if sum(1 for _ in internal_nodes(tree)) <= 15:
        assert check_almost_prefix_free(proto)[0]
        assert proto.path_probabilities().expected_transcript_len == proto.expected_length_by_enumeration()
