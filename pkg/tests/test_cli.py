import json
from importlib import resources

from doomnet import cli

DATA = resources.files("doomnet.data")


def path(name):
    return str(DATA.joinpath(name))


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_unfold_running_example(capsys):
    code, out, _ = run(["unfold", "--net", path("fig1a.ll_net"), "--json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert sorted(e["label"] for e in doc["events"]) == sorted(
        ["alpha", "beta", "gamma", "delta", "xi", "theta", "zeta", "eta", "kappa"])
    assert doc["stats"]["cutoffs"] == 3


def test_unfold_text_and_dot(tmp_path, capsys):
    dot = tmp_path / "p.dot"
    code, out, _ = run(["unfold", "--net", path("fig3.json"), "--dot", str(dot)], capsys)
    assert code == 0
    assert "stats events=8 conditions=10 cutoffs=0" in out
    assert dot.read_text().count("shape=box") == 8


def test_unfold_depth(capsys):
    code, out, _ = run(["unfold", "--net", path("fig1a.ll_net"), "--depth", "1", "--json"], capsys)
    assert json.loads(out)["stats"]["events"] == 27


def test_missing_file(capsys):
    code, _, err = run(["unfold", "--net", "/nonexistent/net.ll_net"], capsys)
    assert code == 2
    assert "no such input" in err


def test_parse_error_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "broken.ll_net"
    bad.write_text("PEP\nPTNet\nFORMAT_N2\nPL\n1\"p\"M2\n")
    code, _, err = run(["unfold", "--net", str(bad)], capsys)
    assert code == 1 and "tokens" in err


def test_unsafe_net_exits_nonzero(tmp_path, capsys):
    net = tmp_path / "unsafe.json"
    net.write_text(json.dumps({"places": ["p", "q"], "initial": ["p", "q"],
                               "transitions": [{"name": "t", "pre": ["p"], "post": ["p", "q"]}]}))
    code, _, err = run(["unfold", "--net", str(net)], capsys)
    assert code == 1 and "not safe" in err


def test_attractors(capsys):
    code, out, _ = run(["attractors", "--net", path("fig1a.ll_net"), "--json"], capsys)
    doc = json.loads(out)
    assert doc["reachable"] == 11
    assert [a["bad_spec"] for a in doc["attractors"]] == [{"bad_markings": [["p8"]], "closure": "require"}]


def test_attractors_two_deadlocks(tmp_path, capsys):
    net = tmp_path / "fork.json"
    net.write_text(json.dumps({"places": ["s", "l", "r"], "initial": ["s"], "transitions": [
        {"name": "left", "pre": ["s"], "post": ["l"]}, {"name": "right", "pre": ["s"], "post": ["r"]}]}))
    code, out, _ = run(["attractors", "--net", str(net)], capsys)
    assert out.count("bad spec:") == 2


def test_doom_running_example(capsys):
    code, out, _ = run(["doom", "--net", path("fig1a.ll_net"), "--bad", path("fig1a_bad.json"),
                        "--json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert sorted(d["events"] for d in doc["mindoomed"]) == [["alpha", "gamma"], ["beta", "delta"]]
    assert sorted(d["transitions"] for d in doc["ridges"]) == [["alpha", "gamma"], ["beta", "delta"]]
    assert doc["protectedness"]["value"] == 2
    assert doc["markings"]["{p3,p5}"] == "doomed" and doc["markings"]["{p8}"] == "bad"
    assert set(doc["stats"]) == {"size_pi0", "size_pi1", "min_doomed", "doom_checks", "time"}


def test_doom_wreath(capsys):
    code, out, _ = run(["doom", "--net", path("fig3.json"), "--bad", path("fig3_bad.json"),
                        "--json"], capsys)
    doc = json.loads(out)
    assert len(doc["mindoomed"]) == 1
    assert [d["transitions"] for d in doc["ridges"]] == [["beta", "gamma"]]
    assert doc["protectedness"]["value"] == 2


def test_doom_without_bad_set(capsys):
    code, out, _ = run(["doom", "--net", path("fig1a.ll_net"), "--json"], capsys)
    doc = json.loads(out)
    assert set(doc["markings"].values()) == {"free"}
    assert doc["mindoomed"] == [] and doc["protectedness"]["value"] == "unbounded"


def test_doom_text_mentions_every_field(capsys):
    _, text, _ = run(["doom", "--net", path("fig1a.ll_net"), "--bad", path("fig1a_bad.json")], capsys)
    for word in ("markings:", "mindoomed:", "ridges:", "protectedness:", "size_pi0", "size_pi1",
                 "min_doomed", "doom_checks", "time"):
        assert word in text


def test_doom_protect_all_and_dot(tmp_path, capsys):
    dot = tmp_path / "d.dot"
    code, out, _ = run(["doom", "--net", path("fig1a.ll_net"), "--bad", path("fig1a_bad.json"),
                        "--protect-all", "--dot", str(dot), "--json"], capsys)
    doc = json.loads(out)
    table = {tuple(d["marking"]): d["value"] for d in doc["protectedness_table"]}
    assert table[("p2", "p3")] == 1
    assert "peripheries=2" in dot.read_text()


def test_doom_closure_violation(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text('{"bad_markings": [["p3", "p5"]], "closure": "require"}')
    code, _, err = run(["doom", "--net", path("fig1a.ll_net"), "--bad", str(spec)], capsys)
    assert code == 1 and "reachability-closed" in err


def test_oracle_check_pass(capsys):
    for net, bad in (("fig1a.ll_net", "fig1a_bad.json"), ("fig3.json", "fig3_bad.json")):
        code, out, _ = run(["oracle-check", "--net", path(net), "--bad", path(bad)], capsys)
        assert code == 0 and out.startswith("PASS")
    _, out, _ = run(["oracle-check", "--net", path("fig1a.ll_net"), "--bad", path("fig1a_bad.json")], capsys)
    assert "11/11" in out


def test_oracle_check_corrupted_memo(capsys):
    code, out, _ = run(["oracle-check", "--net", path("fig1a.ll_net"), "--bad", path("fig1a_bad.json"),
                        "--corrupt-memo", "--json"], capsys)
    doc = json.loads(out)
    assert code == 1 and doc["result"] == "FAIL"
    assert doc["first_divergent"]["marking"] == ["p1", "p2"]


def test_oracle_check_budget(capsys):
    code, _, err = run(["oracle-check", "--net", path("fig1a.ll_net"), "--max-nodes", "3"], capsys)
    assert code == 1 and "refusing" in err


def test_seeded_runs_agree(capsys):
    args = ["doom", "--net", path("fig1a.ll_net"), "--bad", path("fig1a_bad.json"), "--json"]
    _, a, _ = run(args + ["--seed", "7"], capsys)
    _, b, _ = run(args + ["--seed", "7"], capsys)
    strip = lambda s: {k: v for k, v in json.loads(s).items() if k != "stats"}
    assert strip(a) == strip(b)
