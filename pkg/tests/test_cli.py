import itertools
import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from feicode.boolfn import TruthTable
from feicode.cli import main
from feicode.dtree import Node, parse_tree, to_truth_table
from feicode.oracles import flip_influence, naive_fourier

FIG1_LEAVES = "(1 (5 +1 (3 -1 +1)) (3 +1 -1))"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def tree_file(tmp_path):
    def write(text, name="t.tree"):
        path = tmp_path / name
        path.write_text(text + "\n")
        return str(path)
    return write


def test_analyze_dictator(capsys, tree_file):
    code, out, _ = run(capsys, "analyze", "--tree", tree_file("(1 +1 -1)"))
    data = json.loads(out)
    assert code == 0
    assert data["total_influence"] == 1 and data["entropy"] == 0 and data["covariance"]["total"] == 0


def test_analyze_fig1_against_brute_force(capsys, tree_file):
    tree = parse_tree(FIG1_LEAVES)
    code, out, _ = run(capsys, "analyze", "--tree", tree_file(FIG1_LEAVES), "--n", "5")
    data = json.loads(out)
    f = to_truth_table(tree, 5)
    spec = {str(S): str(c) for S, c in naive_fourier(f).items() if c}
    assert {k: str(v) for k, v in data["spectrum"].items()} == spec
    inf = sum(flip_influence(f, i) for i in range(1, 6))
    assert Fraction(data["total_influence"]) == inf
    queries = 0
    for x in itertools.product((1, -1), repeat=5):
        node = tree
        while isinstance(node, Node):
            queries += 1
            node = node.left if x[node.var - 1] == 1 else node.right
    assert Fraction(data["expected_depth"]) == Fraction(queries, 32)
    assert all(b["holds"] for b in data["bounds"])
    assert all(Fraction(s) >= 0 for s in data["path_probability_slack"].values())


def test_analyze_majority_table(capsys, tmp_path):
    path = tmp_path / "maj.tt"
    TruthTable.majority(3).save(path)
    data = json.loads(run(capsys, "analyze", "--table", str(path))[1])
    assert data["total_influence"] == "3/2" and data["entropy"] == 2.0
    _, out, _ = run(capsys, "analyze", "--table", str(path), "--format", "csv")
    assert out.splitlines()[0] == "key,value" and "total_influence,3/2" in out.splitlines()


def test_analyze_manifest(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"outer": {"table": TruthTable.or_(2).to_hex(), "n": 2},
                                "inner": [{"tree": "(1 (2 +1 -1) +1)"}, {"tree": "(1 (2 +1 -1) +1)"}],
                                "blocks": [[1, 2], [3, 4]], "bias": ["1/3", "0", "-1/2", "1/4"]}))
    data = json.loads(run(capsys, "analyze", "--manifest", str(path))[1])
    assert data["coefficient_identity"]["exact"]
    assert all(c["holds"] for c in data["checks"])


def test_analyze_bad_input(capsys, tree_file):
    code, _, err = run(capsys, "analyze", "--tree", tree_file("(1 (1 +1 -1) -1)"))
    assert code == 2 and "repeats" in err


def test_verify_covariance_exit_zero(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "verify", "--suite", "covariance", "--n", "8", "--k", "3",
                       "--trials", "1000", "--seed", "42", "--out", str(out))
    assert code == 0 and "FAIL" not in err
    data = json.loads(out.read_text())
    assert data["suite"] == "covariance" and data["trials"] == 1000
    assert (tmp_path / "r.csv").read_text().startswith("suite,property,pass")


def test_verify_failure_exit_one(capsys):
    code, out, err = run(capsys, "verify", "--suite", "gadgets", "--trials", "3")
    assert code == 1 and "FAIL  ghat(S,T) = -fhat(T) / 2^(k+1)" in err
    assert json.loads(out)["pass"] is False


def test_verify_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nope"])
    assert exc.value.code == 2


def test_verify_bad_numbers(capsys):
    assert run(capsys, "verify", "--suite", "fourier", "--n", "30")[0] == 2


def test_encode_fig1(capsys, tree_file, fig1):
    path = tree_file("(1 (5 +1 (3 -1 +1)) (3 -1 +1))")
    seen = set()
    for seed in range(40):
        code, out, _ = run(capsys, "encode", "--tree", path, "--set", "0b00101", "--seed", str(seed), "--n", "5")
        assert code == 0
        seen.add(out.strip())
    assert seen == {"10011#", "111#"}
    assert run(capsys, "encode", "--tree", path, "--set", "0", "--n", "5")[1] == ""


def test_encode_outside_support(capsys, tree_file):
    code, out, err = run(capsys, "encode", "--tree", tree_file("(1 +1 -1)"), "--set", "0b10", "--n", "2")
    assert code == 3 and out == "" and "not in the spectral support" in err


def test_decode_and_round_trip(capsys, tree_file):
    path = tree_file("(1 (5 +1 (3 -1 +1)) (3 -1 +1))")
    assert run(capsys, "decode", "--tree", path, "--transcript", "10011#")[1].strip() == "5"
    assert run(capsys, "decode", "--tree", path, "--transcript", "10#1")[0] == 2
    for seed in range(100):
        text = run(capsys, "encode", "--tree", path, "--set", "5", "--seed", str(seed))[1].strip()
        assert run(capsys, "decode", "--tree", path, "--transcript", text)[1].strip() == "5"


@pytest.mark.parametrize("kind", ["tree", "bad-tree", "table", "gadget", "composition"])
def test_gen(capsys, tmp_path, kind):
    code, out, _ = run(capsys, "gen", "--kind", kind, "--n", "4", "--k", "2", "--count", "2",
                       "--balanced", "--out", str(tmp_path))
    assert code == 0
    files = out.split()
    assert len(files) >= 2 and all(Path(f).exists() for f in files)


def test_gen_is_reproducible(capsys, tmp_path):
    run(capsys, "gen", "--kind", "tree", "--n", "7", "--out", str(tmp_path / "a"))
    run(capsys, "gen", "--kind", "tree", "--n", "7", "--out", str(tmp_path / "b"))
    assert (tmp_path / "a" / "tree_000.tree").read_text() == (tmp_path / "b" / "tree_000.tree").read_text()


def test_console_script_usage_error():
    proc = subprocess.run([sys.executable, "-m", "feicode.cli", "verify"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr
