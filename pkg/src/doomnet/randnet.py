"""Seeded generator of small safe nets and reachability-closed bad sets, for testing."""
from __future__ import annotations

import random

from .errors import BudgetExceeded, NetValidationError, SafetyError
from .net import PetriNet, attractors, reach_graph


def _candidate(rng: random.Random, max_places: int, max_transitions: int) -> PetriNet:
    n_places = rng.randint(3, max_places)
    places = [f"p{i}" for i in range(n_places)]
    # partition places into state-machine components, one token each
    n_comp = rng.randint(1, min(3, n_places))
    comp = [i % n_comp for i in range(n_places)]
    rng.shuffle(comp)
    members = [[p for p, c in enumerate(comp) if c == k] for k in range(n_comp)]
    members = [m for m in members if m]
    initial = [rng.choice(m) for m in members]
    transitions = []
    n_trans = rng.randint(3, max_transitions)
    # most places get a local successor so that components tend to cycle
    for m in members:
        if len(m) > 1:
            order = m[:]
            rng.shuffle(order)
            for a, b in zip(order, order[1:] + order[:1]):
                if len(transitions) < n_trans and rng.random() < 0.7:
                    transitions.append(([a], [b]))
    while len(transitions) < n_trans:
        kind = rng.random()
        if kind < 0.4 or len(members) == 1:
            m = rng.choice(members)
            pre, post = [rng.choice(m)], [rng.choice(m)]
        elif kind < 0.8:
            a, b = rng.sample(members, 2)
            pre = [rng.choice(a), rng.choice(b)]
            post = [rng.choice(a), rng.choice(b)]
        elif kind < 0.9:
            a, b = rng.sample(members, 2)
            pre, post = [rng.choice(a), rng.choice(b)], [rng.choice(a)]
        else:
            a, b = rng.sample(members, 2)
            pre, post = [rng.choice(a)], [rng.choice(a), rng.choice(b)]
        transitions.append((pre, post))
    transitions = [(f"t{i}", [places[p] for p in pre], [places[p] for p in post])
                   for i, (pre, post) in enumerate(transitions)]
    return PetriNet.build(places, transitions, [places[p] for p in initial])


def random_safe_net(rng: random.Random, max_places: int = 8, max_transitions: int = 10,
                    max_nodes: int = 400, min_nodes: int = 4, attempts: int = 1000) -> PetriNet:
    """A safe net with between ``min_nodes`` and ``max_nodes`` reachable markings."""
    for _ in range(attempts):
        try:
            net = _candidate(rng, max_places, max_transitions)
            g = reach_graph(net, max_nodes=max_nodes)
        except (SafetyError, BudgetExceeded, NetValidationError):
            continue
        if len(g.nodes) >= min_nodes:
            return net
    raise RuntimeError("no safe net found")


def random_bad_set(rng: random.Random, net: PetriNet, p_pick: float = 0.5) -> frozenset:
    """Reachability closure of a random union of attractors (possibly empty)."""
    g = reach_graph(net)
    chosen = [a for a in attractors(g) if rng.random() < p_pick]
    seeds: set = set()
    for a in chosen:
        seeds |= set(rng.sample(sorted(a, key=sorted), 1))
    return frozenset(g.reachable_from(seeds)) if seeds else frozenset()


def corpus(seed: int, count: int, **kw) -> list[tuple[int, PetriNet, frozenset]]:
    """``count`` (index, net, bad set) triples, reproducible from ``seed``."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        net = random_safe_net(rng, **kw)
        out.append((i, net, random_bad_set(rng, net)))
    return out
