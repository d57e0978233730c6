import io
import json
import os
from types import SimpleNamespace

import pytest

from edgeends.cli import cmd_play, main
from conftest import FIXTURES, ROOT

GOLDEN = ROOT / "tests" / "golden"
F = str(FIXTURES)

GOLDEN_CASES = {
    "ends_fig1": ["ends", f"{F}/fig1.egp"],
    "edge_ends_fig1": ["edge-ends", f"{F}/fig1.egp"],
    "verify_fig1_rho": ["verify", f"{F}/fig1.egp", "--rho"],
    "rayspace_omega2": ["rayspace", f"{F}/omega2.ots"],
    "check_subbase_fork": ["check-subbase", f"{F}/fork.ots"],
    "match_fork_descend": ["match", f"{F}/fork.ots", "--policy", "descend:l", "--rounds", "5"],
    "build_tc_three": ["build-tc", f"{F}/three.sets", "--ground", f"{F}/three.points"],
    "corpus_rho_small": ["corpus", "--seed", "7", "--n", "5", "--suite", "rho"],
}


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden(capsys, name):
    code, out, _ = run(capsys, GOLDEN_CASES[name])
    path = GOLDEN / f"{name}.json"
    # paths inside the output are made relative so the files are portable
    out = out.replace(F + "/", "fixtures/")
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(out)
    assert out == path.read_text()
    assert code == 0


def test_ends_fig1_two_points(capsys):
    code, out, _ = run(capsys, ["ends", f"{F}/fig1.egp"])
    assert code == 0 and json.loads(out)["descriptor"]["isolated"] == 2


def test_verify_tau_fig1_exit_1(capsys):
    code, out, _ = run(capsys, ["verify", f"{F}/fig1.egp", "--tau"])
    assert code == 1 and json.loads(out)["failures"] == ["precondition-violated"]


def test_duplicate_fig1_exit_1(capsys):
    code, out, _ = run(capsys, ["duplicate", f"{F}/fig1.egp"])
    assert code == 1 and json.loads(out)["error"] == "precondition-violated"


def test_corpus_rho_100(capsys):
    code, out, _ = run(capsys, ["corpus", "--seed", "7", "--n", "100", "--suite", "rho"])
    assert code == 0 and json.loads(out)["suites"]["rho"]["summary"] == "100/100 pass"


def test_usage_errors_exit_2(capsys, tmp_path):
    assert main(["ends", str(tmp_path / "missing.egp")]) == 2
    bad = tmp_path / "bad.egp"
    bad.write_text("[bogus]\n")
    assert main(["ends", str(bad)]) == 2
    assert main(["match", f"{F}/fork.ots", "--policy", "sideways"]) == 2
    assert main(["match", f"{F}/fork.ots", "--policy", "oscillate:PP"]) == 2
    assert main(["envelope", f"{F}/fig1.egp", "nowhere"]) == 2
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_global_flags_anywhere(capsys):
    code, out, _ = run(capsys, ["--human", "ends", f"{F}/fig1.egp"])
    assert code == 0 and out.startswith("file:")
    code, out, _ = run(capsys, ["ends", f"{F}/fig1.egp", "--human", "--seed", "3", "--budget", "100"])
    assert code == 0 and "isolated: 2" in out


def test_expand_and_tgraph_write_files(capsys, tmp_path):
    out = tmp_path / "h.egp"
    assert main(["expand", f"{F}/fig1.egp", "-o", str(out)]) == 0
    assert main(["ends", str(out)]) == 0
    capsys.readouterr()
    tg = tmp_path / "t.egp"
    assert main(["tgraph", f"{F}/omega2.ots", "-o", str(tg)]) == 0
    assert json.loads(capsys.readouterr().out)["ends_match_rayspace"] is True


def test_surgery_writes_scheme(capsys, tmp_path):
    out = tmp_path / "new.ots"
    s = FIXTURES / "surgery"
    assert main(["surgery", str(s / "01-omega2.ots"), str(s / "01-omega2.nmap"), "-o", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["descriptor_preserved"] is True
    assert main(["rayspace", str(out)]) == 0


def test_check_subbase_failures(capsys):
    code, out, _ = run(capsys, ["check-subbase", f"{F}/triangle.sets", "--hereditary"])
    rep = json.loads(out)
    assert code == 1 and not rep["nested"]["ok"] and not rep["hereditary_completeness"]["ok"]
    code, out, _ = run(capsys, ["check-subbase", f"{F}/three.sets", "--ground", f"{F}/three.points", "--hereditary"])
    assert code == 0


def _play(file, lines, rounds=50):
    out = io.StringIO()
    code = cmd_play(SimpleNamespace(file=file, rounds=rounds), io.StringIO("".join(l + "\n" for l in lines)), out)
    return code, out.getvalue()


def test_play_rejects_then_accepts():
    code, text = _play(f"{F}/omega2.ots", ["part 0", "part 9", "shrink s1[0]", "quit"])
    assert "rejected: illegal-move(not-contained)" in text
    final = json.loads(text.strip().splitlines()[-1])
    assert code == 0 and final["transcript"] == ["part 0", "shrink s1[0]", "quit"]
    assert final["result"]["x"] == "s1"


@pytest.mark.parametrize(
    "file,lines",
    [
        ("omega2.ots", ["part 0", "shrink s1[0]", "part 0", "quit"]),
        ("fork.ots", ["part 1", "part 0", "quit"]),
        ("combtree.ots", ["shrink b[0] b_tooth:0/u[0]", "part 0", "quit"]),
    ],
)
def test_play_replays_through_match_script(capsys, tmp_path, file, lines):
    code, text = _play(f"{F}/{file}", lines)
    final = json.loads(text.strip().splitlines()[-1])
    script = tmp_path / "moves.txt"
    script.write_text("\n".join(final["transcript"]) + "\n")
    argv = ["match", f"{F}/{file}", "--script", str(script), "--rounds", str(final["rounds"])]
    mcode, out, _ = run(capsys, argv)
    assert mcode == code
    assert json.loads(out)["result"] == final["result"]


def test_partition_tree_verdicts(capsys):
    P = FIXTURES / "partition"
    code, out, _ = run(capsys, ["partition-tree", str(P / "fat-top.egp"), str(P / "omega2.ots"), str(P / "fat-top.ptree")])
    assert code == 0 and json.loads(out)["theta"] == {"[s0]": "s0", "[s1]": "s1"}
    code, out, _ = run(capsys, ["partition-tree", str(P / "ladder.egp"), str(P / "omega2.ots"), str(P / "fat-top.ptree")])
    assert code == 1 and not json.loads(out)["ok"]
    code, _, err = run(capsys, ["partition-tree", str(P / "fat-top.egp"), str(P / "omega2.ots"), str(P / "fat-top.egp")])
    assert code == 2 and "partition-tree" in err


def test_tgraph_parts_are_accepted_by_the_checker(capsys, tmp_path):
    egp, parts = tmp_path / "c.egp", tmp_path / "c.ptree"
    code, _, _ = run(capsys, ["tgraph", str(FIXTURES / "combtree.ots"), "-o", str(egp), "--parts", str(parts)])
    assert code == 0
    code, out, _ = run(capsys, ["partition-tree", str(egp), str(FIXTURES / "combtree.ots"), str(parts)])
    assert code == 0 and json.loads(out)["theta"]["[b]"] == "b"
