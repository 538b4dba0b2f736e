import json
import pathlib

import pytest

from doomnet import errors, gallery
from doomnet import net as N

CORPUS = pathlib.Path(__file__).parent / "corpus"
MANIFEST = json.loads((CORPUS / "manifest.json").read_text())


@pytest.fixture
def n1a():
    return gallery.load("fig1a")


def test_running_example_parses(n1a):
    assert len(n1a.places) == 8
    assert len(n1a.transitions) == 9
    assert n1a.initial == n1a.marking("p1", "p2")


@pytest.mark.parametrize("fname", sorted(MANIFEST))
def test_llnet_corpus(fname):
    exp = MANIFEST[fname]
    text = (CORPUS / fname).read_text()
    if "error" in exp:
        with pytest.raises(getattr(errors, exp["error"]), match=exp["match"]) as info:
            N.parse_llnet(text)
        if "line" in exp:
            assert info.value.line == exp["line"]
        return
    net = N.parse_llnet(text)
    assert list(net.places) == exp["places"]
    assert list(net.transitions) == exp["transitions"]
    assert net.names(net.initial) == exp["initial"]
    assert len(N.reach_graph(net).nodes) == exp["reachable"]


def test_llnet_round_trip(n1a):
    again = N.parse_llnet(N.to_llnet(n1a))
    assert again == n1a


def test_native_wreath_and_round_trip():
    net = gallery.load("fig3")
    assert len(net.places) == 10 and len(net.transitions) == 8
    assert N.parse_native(N.to_native(net)) == net


def test_native_duplicate_place():
    doc = {"places": ["a", "a"], "transitions": [], "initial": ["a"]}
    with pytest.raises(errors.NetSyntaxError, match="duplicate"):
        N.parse_native(json.dumps(doc))


def test_name_shared_by_place_and_transition():
    with pytest.raises(errors.NetValidationError):
        N.PetriNet.build(["a", "b"], [("a", ["a"], ["b"])], ["a"])


def test_empty_preset_rejected():
    with pytest.raises(errors.NetValidationError, match="preset"):
        N.PetriNet.build(["a"], [("src", [], ["a"])], [])


def test_enabled(n1a):
    names = lambda ts: sorted(n1a.label(t) for t in ts)
    assert names(N.enabled(n1a, n1a.marking("p1", "p2"))) == ["alpha", "beta", "delta", "gamma"]
    assert N.enabled(n1a, n1a.marking("p8")) == ()
    assert N.enabled(n1a, frozenset()) == ()


def test_fire(n1a):
    f = lambda m, t: n1a.names(N.fire(n1a, n1a.marking(*m), n1a.t(t)))
    assert f(["p1", "p2"], "alpha") == ["p2", "p3"]
    assert f(["p7"], "kappa") == ["p1", "p2"]
    assert f(["p3", "p5"], "xi") == ["p8"]
    with pytest.raises(errors.NotEnabledError):
        f(["p8"], "kappa")


def test_reach_graph_running_example(n1a):
    g = N.reach_graph(n1a)
    expected = [["p1", "p2"], ["p2", "p3"], ["p2", "p4"], ["p1", "p5"], ["p1", "p6"], ["p3", "p5"],
                ["p3", "p6"], ["p4", "p5"], ["p4", "p6"], ["p7"], ["p8"]]
    assert sorted(n1a.names(m) for m in g.nodes) == sorted(expected)
    edges = sorted((tuple(n1a.names(a)), n1a.label(t), tuple(n1a.names(b))) for a, t, b in g.edges)
    assert len(edges) == 4 + 4 * 2 + 4 + 1
    assert (("p3", "p5"), "xi", ("p8",)) in edges
    assert (("p7",), "kappa", ("p1", "p2")) in edges


def test_reach_graph_trivial():
    net = N.PetriNet.build(["p"], [], ["p"])
    g = N.reach_graph(net)
    assert len(g.nodes) == 1 and not g.edges


def test_unsafe_net_rejected():
    net = N.PetriNet.build(["p", "q"], [("t", ["p"], ["p", "q"])], ["p", "q"])
    with pytest.raises(errors.SafetyError):
        N.reach_graph(net)


def test_budget():
    net = gallery.load("fig1a")
    with pytest.raises(errors.BudgetExceeded):
        N.reach_graph(net, max_nodes=5)


def test_attractors(n1a):
    found = N.attractors(N.reach_graph(n1a))
    assert [sorted(n1a.names(m) for m in a) for a in found] == [[["p8"]]]


def test_attractor_of_a_cycle():
    net = N.PetriNet.build(["a", "b", "c"], [("ab", ["a"], ["b"]), ("bc", ["b"], ["c"]),
                                             ("ca", ["c"], ["a"])], ["a"])
    found = N.attractors(N.reach_graph(net))
    assert len(found) == 1 and len(list(found)[0]) == 3


def test_two_deadlocks():
    net = N.PetriNet.build(["s", "l", "r"], [("left", ["s"], ["l"]), ("right", ["s"], ["r"])], ["s"])
    found = N.attractors(N.reach_graph(net))
    assert sorted(net.names(m) for a in found for m in a) == [["l"], ["r"]]


def test_attractors_terminal_and_strongly_connected():
    net = gallery.load("fig1a")
    g = N.reach_graph(net)
    for comp in N.attractors(g):
        members = set(comp)
        assert all(m2 in members for m in comp for _, m2 in g.succ[m])
        for m in comp:
            assert members <= g.reachable_from([m])


def test_bad_spec_closure(n1a):
    g = N.reach_graph(n1a)
    spec = N.parse_bad_spec(gallery.bad_spec_text("fig1a"), n1a)
    assert N.validate_bad(spec, g, n1a) == {n1a.marking("p8")}
    strict = N.parse_bad_spec('{"bad_markings": [["p3", "p5"]], "closure": "require"}', n1a)
    with pytest.raises(errors.ClosureError):
        N.validate_bad(strict, g, n1a)
    auto = N.parse_bad_spec('{"bad_markings": [["p3", "p5"]], "closure": "auto"}', n1a)
    assert N.validate_bad(auto, g, n1a) == {n1a.marking("p3", "p5"), n1a.marking("p8")}


def test_unreachable_bad_marking_warns(n1a, caplog):
    g = N.reach_graph(n1a)
    spec = N.parse_bad_spec('{"bad_markings": [["p1", "p8"], ["p8"]]}', n1a)
    assert N.validate_bad(spec, g, n1a) == {n1a.marking("p8")}
    assert "not reachable" in caplog.text


def test_bad_spec_unknown_place(n1a):
    with pytest.raises(errors.NetSyntaxError):
        N.parse_bad_spec('{"bad_markings": [["p9"]]}', n1a)


def test_doom_oracle_running_example(n1a):
    g = N.reach_graph(n1a)
    res = N.doom_oracle(g, [n1a.marking("p8")], n1a)
    doomed = sorted(n1a.names(m) for m, v in res.items() if v == N.DOOMED)
    assert doomed == [["p3", "p5"], ["p4", "p6"]]
    assert [n1a.names(m) for m, v in res.items() if v == N.BAD] == [["p8"]]
    assert sum(v == N.FREE for v in res.values()) == 8


def test_doom_oracle_trivial_sets(n1a):
    g = N.reach_graph(n1a)
    assert set(N.doom_oracle(g, [], n1a).values()) == {N.FREE}
    assert set(N.doom_oracle(g, g.nodes, n1a).values()) == {N.BAD}


def test_oracle_progress_refinement():
    # The left component can spin forever, but an independent step towards
    # the bad place stays enabled all along; every maximal run takes it.
    net = N.PetriNet.build(["a", "b", "s", "x"],
                           [("ab", ["a"], ["b"]), ("ba", ["b"], ["a"]), ("sx", ["s"], ["x"])],
                           ["a", "s"])
    g = N.reach_graph(net)
    bad = frozenset(m for m in g.nodes if net.place_index["x"] in m)
    progress = N.doom_oracle(g, bad, net)
    literal = N.doom_oracle(g, bad, net, progress=False)
    assert progress[net.initial] == N.DOOMED
    assert literal[net.initial] == N.FREE


def test_oracle_status_properties():
    from doomnet import randnet
    for _, net, bad in randnet.corpus(11, 30):
        g = N.reach_graph(net)
        res = N.doom_oracle(g, bad, net)
        for m, v in res.items():
            succ = [res[m2] for _, m2 in g.succ[m]]
            if v == N.BAD:
                assert all(s == N.BAD for s in succ)
            if v == N.DOOMED:
                assert succ and all(s != N.FREE for s in succ)
