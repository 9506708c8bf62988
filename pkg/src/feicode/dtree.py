"""Decision trees over {-1,1}^n and their tree-covariance statistics.

Trees are written as s-expressions: a leaf is ``+1`` or ``-1``; an internal
node is ``(v LEFT RIGHT)`` where ``LEFT`` is followed when ``x_v = +1`` and
``RIGHT`` when ``x_v = -1``.  A node's position is named by its path from
the root, a string over ``0`` (left) and ``1`` (right); the root is ``""``.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

import numpy as np

from .boolfn import MAX_VARS, Spectrum, TruthTable, fourier_transform, influence


class TreeError(ValueError):
    """Malformed tree, repeated variable on a path, or index out of range."""


@dataclass(frozen=True)
class Leaf:
    value: int

    def __post_init__(self):
        if self.value not in (1, -1):
            raise TreeError(f"leaf value must be +1 or -1, got {self.value!r}")

    @property
    def variables(self) -> frozenset:
        return frozenset()


@dataclass(frozen=True)
class Node:
    var: int
    left: "DecisionTree"
    right: "DecisionTree"
    variables: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.var, int) or self.var < 1:
            raise TreeError(f"variable index must be a positive integer, got {self.var!r}")
        below = self.left.variables | self.right.variables
        if self.var in below:
            raise TreeError(f"variable {self.var} repeats on a root-to-leaf path")
        object.__setattr__(self, "variables", below | {self.var})


DecisionTree = Union[Leaf, Node]


# ---------------------------------------------------------------------------
# Serialization

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_tree(text: str) -> DecisionTree:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise TreeError("empty tree description")
    pos = 0

    def leaf(tok: str) -> Leaf:
        if tok in ("+1", "1"):
            return Leaf(1)
        if tok == "-1":
            return Leaf(-1)
        raise TreeError(f"expected a leaf (+1/-1), got {tok!r}")

    def subtree() -> DecisionTree:
        nonlocal pos
        if pos >= len(tokens):
            raise TreeError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise TreeError("unexpected ')'")
        if tok != "(":
            return leaf(tok)
        if pos >= len(tokens) or not tokens[pos].isdigit():
            raise TreeError("expected a variable index after '('")
        var = int(tokens[pos])
        pos += 1
        left = subtree()
        right = subtree()
        if pos >= len(tokens) or tokens[pos] != ")":
            raise TreeError(f"expected ')' to close node for variable {var}")
        pos += 1
        return Node(var, left, right)

    tree = subtree()
    if pos != len(tokens):
        raise TreeError(f"trailing tokens: {' '.join(tokens[pos:])}")
    return tree


def to_sexpr(tree: DecisionTree) -> str:
    if isinstance(tree, Leaf):
        return "+1" if tree.value == 1 else "-1"
    return f"({tree.var} {to_sexpr(tree.left)} {to_sexpr(tree.right)})"


# ---------------------------------------------------------------------------
# Structure


def iter_nodes(tree: DecisionTree) -> Iterator[tuple[str, int, DecisionTree]]:
    """Pre-order ``(path, depth, node)`` over every node, leaves included."""
    stack = [("", tree)]
    while stack:
        path, node = stack.pop()
        yield path, len(path), node
        if isinstance(node, Node):
            stack.append((path + "1", node.right))
            stack.append((path + "0", node.left))


def internal_nodes(tree: DecisionTree) -> Iterator[tuple[str, int, Node]]:
    for path, depth, node in iter_nodes(tree):
        if isinstance(node, Node):
            yield path, depth, node


def subtree_at(tree: DecisionTree, path: str) -> DecisionTree:
    node = tree
    for step in path:
        if not isinstance(node, Node):
            raise TreeError(f"path {path!r} runs past a leaf")
        node = node.left if step == "0" else node.right
    return node


def size(tree: DecisionTree) -> int:
    return sum(1 for _ in iter_nodes(tree))


def depth(tree: DecisionTree) -> int:
    return max((d for _, d, node in iter_nodes(tree) if isinstance(node, Leaf)), default=0)


def num_vars(tree: DecisionTree) -> int:
    return max(tree.variables, default=0)


def eval_tree(tree: DecisionTree, x) -> int:
    node = tree
    while isinstance(node, Node):
        xi = x[node.var - 1]
        if xi == 1:
            node = node.left
        elif xi == -1:
            node = node.right
        else:
            raise ValueError("inputs must be +1/-1")
    return node.value


def _check_n(tree: DecisionTree, n: int) -> None:
    if n > MAX_VARS:
        raise TreeError(f"n={n} exceeds the {MAX_VARS}-variable limit")
    if num_vars(tree) > n:
        raise TreeError(f"tree uses variable {num_vars(tree)} but n={n}")


def to_truth_table(tree: DecisionTree, n: int | None = None) -> TruthTable:
    n = num_vars(tree) if n is None else n
    _check_n(tree, n)
    idx = np.arange(1 << n, dtype=np.int64)
    memo: dict[int, np.ndarray] = {}

    def bits(node: DecisionTree) -> np.ndarray:
        key = id(node)
        if key not in memo:
            if isinstance(node, Leaf):
                memo[key] = np.full(1 << n, node.value == -1, dtype=np.uint8)
            else:
                goes_right = ((idx >> (node.var - 1)) & 1).astype(bool)
                memo[key] = np.where(goes_right, bits(node.right), bits(node.left))
        return memo[key]

    return TruthTable(n, bits(tree))


def expected_depth(tree: DecisionTree) -> Fraction:
    """Average number of queries on a uniform input: ``sum_v 2^-d(v)`` over internal ``v``."""
    return sum((Fraction(1, 1 << d) for _, d, _ in internal_nodes(tree)), Fraction(0))


def read_counts(tree: DecisionTree) -> Counter:
    return Counter(node.var for _, _, node in internal_nodes(tree))


def read_multiplicity(tree: DecisionTree, mask: int) -> int:
    """Largest number of occurrences in ``tree`` among the variables of ``mask``."""
    if mask <= 0:
        raise ValueError("read multiplicity needs a nonempty set")
    counts = read_counts(tree)
    best, i = 0, 1
    while mask:
        if mask & 1:
            best = max(best, counts.get(i, 0))
        mask >>= 1
        i += 1
    return best


def max_read(tree: DecisionTree) -> int:
    return max(read_counts(tree).values(), default=0)


def multiplicity_array(tree: DecisionTree, n: int) -> np.ndarray:
    """``m_T(S)`` for every mask ``S < 2**n`` (0 at the empty set)."""
    counts = read_counts(tree)
    m = np.zeros(1 << n, dtype=np.int64)
    for i in range(1, n + 1):
        c = counts.get(i, 0)
        if c:
            v = m.reshape(-1, 2, 1 << (i - 1))
            np.maximum(v[:, 1, :], c, out=v[:, 1, :])
    return m


# ---------------------------------------------------------------------------
# Subtree spectra


class TreeSpectra:
    """Exact spectra of the function computed at every node of a tree.

    Spectra are built bottom-up.  With root variable ``x_i`` and child
    functions ``g`` (left) and ``h`` (right), ``f = (1+x_i)/2 g + (1-x_i)/2 h``
    gives, for ``S`` without ``i``::

        fhat(S) = (ghat(S) + hhat(S)) / 2,   fhat(S+i) = (ghat(S) - hhat(S)) / 2

    All spectra share the scale ``2**n`` so they are int64 arrays.
    """

    def __init__(self, tree: DecisionTree, n: int | None = None):
        n = num_vars(tree) if n is None else n
        _check_n(tree, n)
        self.tree = tree
        self.n = n
        self._memo: dict[int, np.ndarray] = {}
        self._build(tree)

    def _build(self, root: DecisionTree) -> None:
        # post-order without recursion limits
        stack = [(root, False)]
        while stack:
            node, ready = stack.pop()
            if id(node) in self._memo:
                continue
            if isinstance(node, Leaf):
                arr = np.zeros(1 << self.n, dtype=np.int64)
                arr[0] = node.value << self.n
                arr.setflags(write=False)
                self._memo[id(node)] = arr
            elif ready:
                self._memo[id(node)] = self._combine(node.var, self._memo[id(node.left)], self._memo[id(node.right)])
            else:
                stack.append((node, True))
                stack.append((node.right, False))
                stack.append((node.left, False))

    @staticmethod
    def _combine(var: int, G: np.ndarray, H: np.ndarray) -> np.ndarray:
        b = 1 << (var - 1)
        F = np.empty_like(G)
        Fv, Gv, Hv = F.reshape(-1, 2, b), G.reshape(-1, 2, b), H.reshape(-1, 2, b)
        np.right_shift(Gv[:, 0, :] + Hv[:, 0, :], 1, out=Fv[:, 0, :])
        np.right_shift(Gv[:, 0, :] - Hv[:, 0, :], 1, out=Fv[:, 1, :])
        F.setflags(write=False)
        return F

    def scaled(self, node: DecisionTree) -> np.ndarray:
        return self._memo[id(node)]

    def spectrum(self, node: DecisionTree | None = None) -> Spectrum:
        return Spectrum(self.n, self.scaled(self.tree if node is None else node))

    def variance_scaled(self, node: DecisionTree) -> int:
        """``4**n * Var`` of the node's function."""
        c0 = int(self.scaled(node)[0])
        return (1 << (2 * self.n)) - c0 * c0

    def node_covariance_scaled(self, node: Node) -> int:
        """``4**n * Cov[g, h] = 4**n * sum_{S nonempty} ghat(S) hhat(S)``."""
        G, H = self.scaled(node.left), self.scaled(node.right)
        return int(np.dot(G, H)) - int(G[0]) * int(H[0])


# ---------------------------------------------------------------------------
# Tree covariance


@dataclass
class CovReport:
    total: Fraction
    per_variable: dict[int, Fraction]
    per_node: dict[str, Fraction]

    def check(self) -> bool:
        """Both decompositions of the total agree."""
        weighted = sum((c / (1 << len(p)) for p, c in self.per_node.items()), Fraction(0))
        return self.total == sum(self.per_variable.values(), Fraction(0)) == weighted


def tree_covariance(tree: DecisionTree, n: int | None = None, spectra: TreeSpectra | None = None) -> CovReport:
    spectra = spectra or TreeSpectra(tree, n)
    scale = 1 << (2 * spectra.n)
    per_node: dict[str, Fraction] = {}
    per_var: dict[int, Fraction] = {}
    total = Fraction(0)
    for path, d, node in internal_nodes(tree):
        cov = Fraction(spectra.node_covariance_scaled(node), scale)
        per_node[path] = cov
        weighted = cov / (1 << d)
        per_var[node.var] = per_var.get(node.var, Fraction(0)) + weighted
        total += weighted
    return CovReport(total, per_var, per_node)


def tree_covariance_recursive(tree: DecisionTree, n: int | None = None, spectra: TreeSpectra | None = None) -> Fraction:
    """``Cov[T] = Cov[g, h] + (Cov[T0] + Cov[T1]) / 2``, 0 at leaves."""
    spectra = spectra or TreeSpectra(tree, n)
    scale = 1 << (2 * spectra.n)
    memo: dict[int, Fraction] = {}

    def cov(node):
        if isinstance(node, Leaf):
            return Fraction(0)
        if id(node) not in memo:
            memo[id(node)] = (Fraction(spectra.node_covariance_scaled(node), scale)
                              + (cov(node.left) + cov(node.right)) / 2)
        return memo[id(node)]

    return cov(tree)


@dataclass
class CovarianceBounds:
    cov: Fraction
    expected_depth: Fraction
    max_read: int
    variance: Fraction
    multiplicity_bound: Fraction
    depth_ok: bool
    read_k_ok: bool
    multiplicity_ok: bool
    log_k_ratio: float | None  # Cov / (log2 k * Var), exploratory only

    @property
    def ok(self) -> bool:
        return self.depth_ok and self.read_k_ok and self.multiplicity_ok


def check_covariance_bounds(tree: DecisionTree, n: int | None = None, spectra: TreeSpectra | None = None) -> CovarianceBounds:
    """Exact comparison of ``Cov[T]`` against expected depth, ``(k-1) Var`` and the ``m_T(S)`` bound."""
    spectra = spectra or TreeSpectra(tree, n)
    n = spectra.n
    scale = 1 << (2 * n)
    cov = tree_covariance(tree, spectra=spectra).total
    d = expected_depth(tree)
    k = max_read(tree)
    w = spectra.scaled(tree) ** 2
    var = Fraction(int(w.sum() - w[0]), scale)
    m = multiplicity_array(tree, n)
    m_bound = Fraction(int(((m[1:] - 1) * w[1:]).sum()), scale)
    ratio = None
    if k >= 2 and var > 0:
        ratio = float(cov) / (math.log2(k) * float(var))
    return CovarianceBounds(
        cov=cov,
        expected_depth=d,
        max_read=k,
        variance=var,
        multiplicity_bound=m_bound,
        depth_ok=cov <= d,
        read_k_ok=cov <= max(k - 1, 0) * var,
        multiplicity_ok=cov <= m_bound,
        log_k_ratio=ratio,
    )


# ---------------------------------------------------------------------------
# Root identities (checked against independent full transforms)


def identity_checks(tree: DecisionTree, n: int | None = None) -> bool:
    """Check the root-split identities for the spectrum and the influences.

    With root ``x_i`` and subfunctions ``g``, ``h``: for every ``S`` avoiding
    ``i``, ``fhat(S)^2 + fhat(S+i)^2 = (ghat(S)^2 + hhat(S)^2)/2``, and for
    every ``j != i``, ``Inf_j[f] = (Inf_j[g] + Inf_j[h])/2``.  All three
    spectra come from separate Walsh-Hadamard transforms of the truth tables
    and influences from flip counts.
    """
    if not isinstance(tree, Node):
        raise TreeError("identity checks need an internal root")
    n = num_vars(tree) if n is None else n
    f = to_truth_table(tree, n)
    g = to_truth_table(tree.left, n)
    h = to_truth_table(tree.right, n)
    F = fourier_transform(f).weights()
    G = fourier_transform(g).weights()
    H = fourier_transform(h).weights()
    b = 1 << (tree.var - 1)
    lhs = 2 * (F.reshape(-1, 2, b)[:, 0, :] + F.reshape(-1, 2, b)[:, 1, :])
    rhs = G.reshape(-1, 2, b)[:, 0, :] + H.reshape(-1, 2, b)[:, 0, :]
    if not np.array_equal(lhs, rhs):
        return False
    for j in range(1, n + 1):
        if j != tree.var and 2 * influence(f, j) != influence(g, j) + influence(h, j):
            return False
    return True


def root_influence_bound(tree: DecisionTree, n: int | None = None, spectra: TreeSpectra | None = None) -> tuple[bool, Fraction]:
    """``Inf_i[f] >= Var[f]/2 - Cov[root]/2`` for root variable ``x_i``; returns (holds, slack)."""
    if not isinstance(tree, Node):
        raise TreeError("root influence bound needs an internal root")
    spectra = spectra or TreeSpectra(tree, n)
    scale = 1 << (2 * spectra.n)
    inf = influence(to_truth_table(tree, spectra.n), tree.var)
    var = Fraction(spectra.variance_scaled(tree), scale)
    cov = Fraction(spectra.node_covariance_scaled(tree), scale)
    slack = inf - (var - cov) / 2
    return slack >= 0, slack

