"""``feicode`` command line: analyze, verify, encode, decode, gen.

Exit status: 0 success, 1 a verified property failed, 2 usage or input
error, 3 a set outside the spectral support was given to ``encode``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import boolfn
from .boolfn import TruthTable, fourier_transform, spectral_entropy
from .compose import (ComposedCode, dump_manifest, load_manifest, verify_c_good_composition,
                      verify_coefficient_identity, verify_distribution_claims)
from .dtree import (TreeError, check_covariance_bounds, expected_depth, max_read, num_vars,
                    parse_tree, to_sexpr, to_truth_table, tree_covariance)
from .harness import (SUITES, GenConfig, gen_bad_tree, gen_random_tree, gen_small_influence_gadget,
                      random_composition, run_suite)
from .rng import DEFAULT_SEED, derive_seed, numpy_rng
from .speccode import (NotInSupportError, TranscriptError, TreeProtocol, check_main_lemma,
                       entropy_bound_report)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONTRACT = 0, 1, 2, 3


class InputError(Exception):
    pass


def _num(x):
    """JSON form of an exact or float quantity."""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _read_tree(arg: str):
    path = Path(arg)
    text = path.read_text() if path.exists() else arg
    try:
        return parse_tree(text)
    except TreeError as e:
        raise InputError(f"cannot parse tree from {arg!r}: {e}") from None


def _read_table(arg: str) -> TruthTable:
    try:
        return TruthTable.load(arg)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read truth table {arg!r}: {e}") from None


def _tree_n(tree, n: int | None) -> int:
    n = num_vars(tree) if n is None else n
    if n < num_vars(tree):
        raise InputError(f"tree uses variable {num_vars(tree)} but --n is {n}")
    return max(n, 1)


# ---------------------------------------------------------------------------
# analyze


def analyze_function(f: TruthTable) -> dict:
    spec = fourier_transform(f)
    inf = spec.total_influence()
    return {
        "n": f.n,
        "mean": _num(spec.mean()),
        "variance": _num(spec.variance()),
        "total_influence": _num(inf),
        "influences": {str(i): _num(v) for i, v in enumerate(spec.influences(), 1)},
        "entropy": spectral_entropy(spec),
        "support_size": int(len(spec.support())),
        "spectrum": {str(m): _num(c) for m, c in spec.items()},
        "weak_entropy_bound": boolfn.weak_entropy_bound(f.n, inf) if f.n else 0.0,
        "binary_entropy_bound_holds": boolfn.binary_entropy_influence_check(f),
    }


def analyze_tree(tree, n: int) -> dict:
    out = analyze_function(to_truth_table(tree, n))
    proto = TreeProtocol(tree, n)
    cov = tree_covariance(tree, spectra=proto.spectra)
    bounds = check_covariance_bounds(tree, spectra=proto.spectra)
    paths = proto.path_probabilities()
    out.update({
        "tree": to_sexpr(tree),
        "expected_depth": _num(expected_depth(tree)),
        "max_read": max_read(tree),
        "covariance": {
            "total": _num(cov.total),
            "per_variable": {str(i): _num(v) for i, v in sorted(cov.per_variable.items())},
            "per_node": {p or "root": _num(v) for p, v in sorted(cov.per_node.items())},
        },
        "covariance_bounds": {
            "expected_depth": bounds.depth_ok,
            "read_k": bounds.read_k_ok,
            "multiplicity": bounds.multiplicity_ok,
            "multiplicity_bound": _num(bounds.multiplicity_bound),
            "cov_over_log2k_var": bounds.log_k_ratio,
        },
        "path_probabilities": {str(i): _num(p) for i, p in paths.p.items()},
        "expected_transcript_length": _num(paths.expected_transcript_len),
    })
    if not to_truth_table(tree, n).is_constant():
        main = check_main_lemma(tree, protocol=proto)
        out["path_probability_slack"] = {str(i): _num(s) for i, s in main.slack.items()}
        report = entropy_bound_report(tree, protocol=proto)
        out["bounds"] = [{"name": c.name, "lhs": _num(c.lhs), "rhs": _num(c.rhs), "holds": c.holds,
                          "slack": c.slack} for c in report.checks]
        out["length_strictly_below_4inf_2cov"] = report.strict_length_bound
    return out


def analyze_manifest(text: str) -> dict:
    comp = load_manifest(text)
    ident = verify_coefficient_identity(comp)
    claims = verify_distribution_claims(comp)
    rep = verify_c_good_composition(comp, ComposedCode(comp), block_sizes=(1, 2))
    return {
        "variables": comp.h.n,
        "eta": [_num(e) for e in comp.eta.mu],
        "h_variance": _num(comp.h_spectrum.variance()),
        "coefficient_identity": {"exact": ident.exact_ok, "max_abs_error": ident.max_abs_error},
        "distribution_claims": [{"name": c.name, "holds": c.holds} for c in claims.checks],
        "c_star": _num(rep.c_star),
        "part_min_c": [_num(c) for c in rep.part_min_c],
        "checks": [{"name": c.name, "holds": c.holds, "slack": _num(c.slack)} for c in rep.checks],
    }


def _flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, value))


def _render(data: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    rows: list = []
    _flatten("", data, rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    if args.tree:
        tree = _read_tree(args.tree)
        data = analyze_tree(tree, _tree_n(tree, args.n))
    elif args.table:
        data = analyze_function(_read_table(args.table))
    else:
        try:
            data = analyze_manifest(Path(args.manifest).read_text())
        except (OSError, ValueError, KeyError) as e:
            raise InputError(f"cannot load manifest {args.manifest!r}: {e}") from None
    _emit(_render(data, args.format), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    try:
        cfg = GenConfig(n=args.n, k=args.k, depth=args.depth, seed=args.seed, trials=args.trials,
                        codec_seeds=args.codec_seeds)
    except ValueError as e:
        raise InputError(str(e)) from None
    report = run_suite(args.suite, cfg)
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
        csv_path = Path(args.out).with_suffix(".csv")
        if args.format == "json" and csv_path != Path(args.out):
            csv_path.write_text(report.to_csv())
    else:
        sys.stdout.write(text)
    for p in report.properties:
        print(f"{'PASS' if p.passed else 'FAIL'}  {p.name}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# encode / decode


def cmd_encode(args) -> int:
    tree = _read_tree(args.tree)
    n = _tree_n(tree, args.n)
    try:
        mask = int(args.set, 0)
    except ValueError:
        raise InputError(f"--set must be an integer mask such as 5 or 0b101, got {args.set!r}") from None
    proto = TreeProtocol(tree, n)
    try:
        t = proto.encode(mask, derive_seed(args.seed, mask))
    except NotInSupportError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONTRACT
    if len(t):
        print(t.text())
    return EXIT_OK


def cmd_decode(args) -> int:
    tree = _read_tree(args.tree)
    try:
        mask = TreeProtocol(tree, _tree_n(tree, args.n)).decode(args.transcript)
    except TranscriptError as e:
        raise InputError(str(e)) from None
    print(mask)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(args.count):
        seed = derive_seed(args.seed, i)
        stem = out / f"{args.kind}_{i:03d}"
        if args.kind == "tree":
            cfg = GenConfig(n=args.n, k=args.k, depth=args.depth, seed=seed)
            tree = gen_random_tree(cfg, random.Random(seed))
            written += _write_tree(stem, tree, args.n)
        elif args.kind == "bad-tree":
            inner = (_read_tree(args.inner) if args.inner else
                     gen_random_tree(GenConfig(n=args.n, k=1, seed=seed), random.Random(seed)))
            tree = gen_bad_tree(args.layers, inner, distinct_dummies=not args.shared_dummies)
            written += _write_tree(stem, tree, num_vars(tree))
        elif args.kind == "table":
            f = TruthTable.random(args.n, numpy_rng(seed), balanced=args.balanced)
            f.save(stem.with_suffix(".tt"))
            written.append(stem.with_suffix(".tt"))
        elif args.kind == "gadget":
            f = (_read_table(args.table) if args.table else
                 TruthTable.random(args.n, numpy_rng(seed), balanced=True))
            g = gen_small_influence_gadget(f, args.k)
            g.save(stem.with_suffix(".tt"))
            written.append(stem.with_suffix(".tt"))
        else:
            comp = random_composition(random.Random(seed), numpy_rng(seed), args.k)
            stem.with_suffix(".json").write_text(dump_manifest(comp))
            written.append(stem.with_suffix(".json"))
    for p in written:
        print(p)
    return EXIT_OK


def _write_tree(stem: Path, tree, n: int) -> list[Path]:
    stem.with_suffix(".tree").write_text(to_sexpr(tree) + "\n")
    to_truth_table(tree, n).save(stem.with_suffix(".tt"))
    return [stem.with_suffix(".tree"), stem.with_suffix(".tt")]


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feicode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="Fourier, covariance and protocol quantities of one input")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tree", help="tree file (or an inline s-expression)")
    src.add_argument("--table", help="truth-table file")
    src.add_argument("--manifest", help="composition manifest (JSON)")
    p.add_argument("--n", type=int, help="number of variables (default: largest index in the tree)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run a property suite over generated instances")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--depth", type=int, default=None, help="maximum tree depth (default n)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--codec-seeds", type=int, default=2, help="encode seeds per set in the protocol suite")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="report path; a CSV summary is written next to a JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("encode", help="encode a set with the tree protocol")
    p.add_argument("--tree", required=True)
    p.add_argument("--set", required=True, help="bitmask, bit i-1 for variable i (e.g. 0b101)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode a transcript of 0, 1 and #")
    p.add_argument("--tree", required=True)
    p.add_argument("--transcript", required=True)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("gen", help="write generated instances to a directory")
    p.add_argument("--kind", choices=("tree", "bad-tree", "table", "gadget", "composition"), required=True)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--k", type=int, default=2, help="read bound, gadget width, or number of blocks")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--layers", type=int, default=2, help="dummy layers for bad-tree")
    p.add_argument("--inner", help="inner tree file for bad-tree (default: random read-once)")
    p.add_argument("--shared-dummies", action="store_true", help="one dummy variable per level")
    p.add_argument("--table", help="balanced input table for gadget")
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, TreeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
