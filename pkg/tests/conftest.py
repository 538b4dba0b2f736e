from dataclasses import dataclass

import pytest

from doomnet import doom, gallery
from doomnet import net as N
from doomnet import unfold as U


@dataclass
class Setup:
    net: N.PetriNet
    graph: N.ReachGraph
    bad: frozenset
    checker: doom.DoomChecker
    fam: U.Prefix

    def cfg(self, *labels, prefix=None):
        """Configuration of ``prefix`` (default: the family) made of the first event with each label."""
        p = prefix or self.fam
        return p.configuration(p.labelled(name)[0] for name in labels)


def make_setup(name: str, bad_text=None) -> Setup:
    net = gallery.load(name)
    g = N.reach_graph(net)
    if bad_text is None:
        try:
            bad_text = gallery.bad_spec_text(name)
        except KeyError:
            bad_text = '{"bad_markings": []}'
    bad = N.validate_bad(N.parse_bad_spec(bad_text, net), g, net)
    checker = doom.DoomChecker(net, bad)
    return Setup(net, g, bad, checker, checker.family(net.initial))


@pytest.fixture
def fig1a():
    return make_setup("fig1a")


@pytest.fixture
def fig3():
    return make_setup("fig3")


@pytest.fixture
def fig2_prefix():
    return U.build_prefix(gallery.load("fig2"))


@pytest.fixture
def fig4_prefix():
    return U.build_prefix(gallery.load("fig4"))


def completeness_gaps(p: U.Prefix, g: N.ReachGraph) -> list:
    """Reachable markings or enabled transitions that no cutoff-free configuration of ``p`` witnesses."""
    net = p.net
    free = sum(1 << e.id for e in p.events if not e.cutoff)
    seen: dict = {}
    for _, cut in U.iter_configurations(p, within=free):
        m = p.marking_of_cut(cut)
        seen.setdefault(m, set()).update(p.events[e].transition for e in p.enabled_events(cut))
    gaps = []
    for m in g.nodes:
        if m not in seen:
            gaps.append(("marking", net.names(m)))
            continue
        for t in N.enabled(net, m):
            if t not in seen[m]:
                gaps.append(("transition", net.names(m), net.label(t)))
    if set(seen) - set(g.nodes):
        gaps.append(("unreachable", sorted(map(net.names, set(seen) - set(g.nodes)))))
    return gaps
