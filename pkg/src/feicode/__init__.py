"""Exact Fourier analysis, decision-tree covariance and spectral encoding protocols.

Submodules: ``boolfn`` (truth tables and the Walsh-Hadamard spectrum),
``dtree`` (decision trees and tree covariance), ``speccode`` (the
transcript protocol over a tree), ``coding`` (Huffman and block codes),
``biased`` (product-measure spectra), ``compose`` (block composition),
``harness`` (randomized property suites) and ``cli``.
"""

__version__ = "0.1.0"
