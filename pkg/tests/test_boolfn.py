import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feicode import boolfn
from feicode.boolfn import (TruthTable, conditional_nonempty, fourier_transform, input_index,
                            input_point, spectral_entropy, spectral_sample, spectral_samples)
from feicode.dyadic import DyadicRational


def direct_coefficient(f: TruthTable, S: int) -> Fraction:
    """E[f chi_S] by summing over every point."""
    total = 0
    for x in itertools.product((1, -1), repeat=f.n):
        chi = 1
        for i in range(f.n):
            if S >> i & 1:
                chi *= x[i]
        total += f(x) * chi
    return Fraction(total, 2 ** f.n)


def flips(f: TruthTable, i: int) -> Fraction:
    changed = 0
    for x in itertools.product((1, -1), repeat=f.n):
        y = list(x)
        y[i - 1] = -y[i - 1]
        changed += f(x) != f(tuple(y))
    return Fraction(changed, 2 ** f.n)


tables = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.sampled_from((1, -1)), min_size=2 ** n, max_size=2 ** n).map(
        lambda v, n=n: TruthTable.from_values(n, v)))


def test_input_convention():
    assert input_point(3, 0b101) == (-1, 1, -1)
    assert input_index((-1, 1, -1)) == 0b101


def test_majority_coefficients():
    s = fourier_transform(TruthTable.majority(3))
    expected = {0b001: Fraction(1, 2), 0b010: Fraction(1, 2), 0b100: Fraction(1, 2), 0b111: Fraction(-1, 2)}
    for S in range(8):
        assert s.coefficient(S) == expected.get(S, 0)
        assert s.coefficient(S) == direct_coefficient(TruthTable.majority(3), S)


def test_constant_and_parity():
    s = fourier_transform(TruthTable.constant(4))
    assert s.coefficient(0) == 1 and len(s.support()) == 1
    s = fourier_transform(TruthTable.parity(5))
    assert s.coefficient(0b11111) == 1 and len(s.support()) == 1
    assert s.total_influence() == 5 and s.variance() == 1


def test_influences_of_named_functions():
    assert boolfn.influences(TruthTable.dictator(3, 1)) == [1, 0, 0]
    assert boolfn.influences(TruthTable.parity(4)) == [1] * 4
    maj = TruthTable.majority(3)
    assert boolfn.influences(maj) == [Fraction(1, 2)] * 3
    assert [flips(maj, i) for i in (1, 2, 3)] == [Fraction(1, 2)] * 3
    assert boolfn.total_influence(maj) == Fraction(3, 2)
    assert boolfn.variance(maj) == 1 and boolfn.mean(maj) == 0
    const = TruthTable.constant(3, -1)
    assert boolfn.total_influence(const) == 0 and boolfn.variance(const) == 0


def test_influence_index_out_of_range():
    with pytest.raises(ValueError):
        boolfn.influence(TruthTable.majority(3), 4)


def test_spectral_entropy_values():
    assert spectral_entropy(fourier_transform(TruthTable.dictator(2))) == 0.0
    assert spectral_entropy(fourier_transform(TruthTable.majority(3))) == 2.0
    assert spectral_entropy(fourier_transform(TruthTable.constant(2))) == 0.0


def test_sampling_point_masses():
    assert spectral_sample(fourier_transform(TruthTable.dictator(3, 1)), 11) == 0b001
    assert spectral_sample(fourier_transform(TruthTable.parity(3)), 12) == 0b111


def test_majority_sampling_frequencies():
    draws = spectral_samples(fourier_transform(TruthTable.majority(3)), 10**6, seed=3)
    counts = np.bincount(draws, minlength=8)
    assert set(np.flatnonzero(counts)) == {1, 2, 4, 7}
    sigma = np.sqrt(10**6 * 0.25 * 0.75)
    for S in (1, 2, 4, 7):
        assert abs(counts[S] - 250_000) <= 3 * sigma


def test_sampling_is_reproducible():
    s = fourier_transform(TruthTable.majority(5))
    assert np.array_equal(spectral_samples(s, 100, 7), spectral_samples(s, 100, 7))


def test_conditional_nonempty():
    maj = fourier_transform(TruthTable.majority(3))
    assert conditional_nonempty(maj) == {S: maj.probability(S) for S in (1, 2, 4, 7)}
    and2 = fourier_transform(TruthTable.and_(2))
    # AND2 = (1 + x1 + x2 - x1 x2) / 2: three equal atoms once the empty set is removed
    assert conditional_nonempty(and2) == {1: Fraction(1, 3), 2: Fraction(1, 3), 3: Fraction(1, 3)}
    with pytest.raises(ValueError):
        conditional_nonempty(fourier_transform(TruthTable.constant(2)))


def test_binary_entropy_check_edges():
    assert boolfn.binary_entropy_influence_check(TruthTable.constant(3))
    assert boolfn.binary_entropy_influence_check(TruthTable.parity(3))


def test_dyadic_export_reduced():
    d = fourier_transform(TruthTable.majority(3)).dyadic(0b111)
    assert d == DyadicRational(-1, 1)
    assert DyadicRational.from_fraction(Fraction(6, 8)) == DyadicRational(3, 2)


def test_file_and_csv_round_trip(tmp_path):
    f = TruthTable.random(6, np.random.default_rng(0))
    path = tmp_path / "f.tt"
    f.save(path)
    assert TruthTable.load(path) == f
    assert path.read_text().splitlines()[0] == "n=6"
    s = fourier_transform(f)
    assert s.to_csv().splitlines()[0] == "mask,numerator,log2_denominator"
    assert boolfn.Spectrum.from_csv(6, s.to_csv()) == s


def test_hex_layout():
    # bit j of the table is entry j; most significant nibble first
    f = TruthTable(3, np.array([1, 0, 0, 0, 0, 0, 0, 1], dtype=np.uint8))
    assert f.to_hex() == "81"


def test_too_many_variables():
    with pytest.raises(ValueError):
        TruthTable.constant(boolfn.MAX_VARS + 1)


@settings(max_examples=150, deadline=None)
@given(tables)
def test_fourier_properties(f):
    s = fourier_transform(f)
    assert int(s.weights().sum()) == 1 << (2 * f.n)
    assert np.array_equal(s.evaluate_all(), f.values())
    assert all(s.influence(i) == boolfn.influence(f, i) for i in range(1, f.n + 1))
    assert s.variance() <= s.total_influence()
    assert spectral_entropy(s) <= f.n + 1e-12
    assert spectral_entropy(s) <= boolfn.weak_entropy_bound(f.n, s.total_influence()) + 1e-9
    assert boolfn.binary_entropy_influence_check(f)
    if f.n <= 3:
        assert all(s.coefficient(S) == direct_coefficient(f, S) for S in range(1 << f.n))
