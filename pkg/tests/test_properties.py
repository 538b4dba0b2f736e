"""Property checks over randomly generated safe nets."""
import random

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from doomnet import randnet
from doomnet import doom as D
from doomnet import net as N
from doomnet import protect as P
from doomnet import unfold as U

from conftest import completeness_gaps

nets = st.integers(min_value=0, max_value=10**6).map(
    lambda seed: randnet.random_safe_net(random.Random(seed), max_nodes=150))
common = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@common
@given(nets)
def test_prefix_complete_for_both_orders(net):
    g = N.reach_graph(net)
    for order in U.ORDERS:
        p = U.build_prefix(net, order)
        assert completeness_gaps(p, g) == []
        assert sum(1 for e in p.events if not e.cutoff) <= len(g.nodes)


@common
@given(nets)
def test_every_event_is_executable(net):
    g = N.reach_graph(net)
    p = U.build_family(net, 1)
    for ev in p.events:
        cone = U.cone(p, ev.id)
        assert p.is_configuration(cone.mask)
        assert cone.mark() in g.nodes


@common
@given(nets)
def test_height_monotone(net):
    p = U.build_prefix(net)
    for events, cut in U.iter_configurations(p):
        c = p.config_of(events)
        for e in p.enabled_events(cut):
            bigger = p.config_of(events | 1 << e)
            for mode in P.HeightMode:
                assert P.height(c, mode) <= P.height(bigger, mode)


@common
@given(nets)
def test_relations_partition_event_pairs(net):
    p = U.build_prefix(net)
    for x in p.events:
        for y in p.events:
            rel = U.relations(p, x, y)
            if x.id == y.id:
                assert rel == "equal"
                continue
            assert rel == U.relations(p, y, x)
            ordered = bool(p.cone_mask(x.id) >> y.id & 1 or p.cone_mask(y.id) >> x.id & 1)
            assert (rel == "causal") == ordered
            together = p.is_configuration(p.cone_mask(x.id) | p.cone_mask(y.id))
            assert (rel == "conflict") == (not ordered and not together)


@common
@given(nets)
def test_dump_is_deterministic(net):
    assert U.dump(U.build_prefix(net)) == U.dump(U.build_prefix(net))
    assert U.to_dot(U.build_prefix(net)) == U.to_dot(U.build_prefix(net))


@common
@given(st.integers(min_value=0, max_value=10**6))
def test_checker_matches_oracle(seed):
    rng = random.Random(seed)
    net = randnet.random_safe_net(rng, max_nodes=150)
    bad = randnet.random_bad_set(rng, net)
    g = N.reach_graph(net)
    truth = N.doom_oracle(g, bad, net)
    checker = D.DoomChecker(net, bad)
    assert all(checker.status(m) == truth[m] for m in g.nodes)
    for c in D.mindoo(checker, rng):
        assert truth[c.mark()] != N.FREE
        assert all(truth[c.minus(e).mark()] == N.FREE for e in c.crest())
