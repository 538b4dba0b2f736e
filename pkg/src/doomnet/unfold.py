"""Occurrence-net prefixes of the unfolding of a safe net.

A :class:`Prefix` stores conditions and events densely indexed.  Event sets
and condition sets are handled internally as Python ``int`` bitmasks; the
public :class:`Configuration` exposes them as frozensets.

Events are added in ascending order of their cones under an adequate total
order (``ERV`` or ``HFIRST``), and an event is a cutoff when its cone
rediscovers the root marking or the marking of a cheaper non-cutoff cone.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Iterable, Iterator, Optional

from .errors import ConfigurationError
from .net import PetriNet

ERV = "erv"
HFIRST = "hfirst"
ORDERS = (ERV, HFIRST)


def bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def to_mask(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class Condition:
    id: int
    place: int
    producer: Optional[int]  # None for the initial cut


@dataclass(frozen=True)
class Event:
    id: int
    transition: int
    preset: tuple[int, ...]
    postset: tuple[int, ...]
    cutoff: bool
    generation: int


@dataclass(frozen=True)
class Configuration:
    """A finite configuration of ``prefix``.

    ``base`` is the cut the events are played from: the initial cut for an
    ordinary configuration, ``cut(C1)`` for a residual ``C ⊖ C1``, in which
    case ``context`` holds the events of ``C1``.
    """
    events: frozenset[int]
    prefix: "Prefix" = field(compare=False, repr=False)
    base: Optional[frozenset[int]] = None
    context: frozenset[int] = frozenset()

    @property
    def mask(self) -> int:
        return to_mask(self.events)

    @property
    def base_mask(self) -> int:
        return self.prefix.c0_mask if self.base is None else to_mask(self.base)

    def cut(self) -> frozenset[int]:
        return frozenset(bits(self.prefix.cut_mask(self.mask, self.base_mask)))

    def mark(self) -> frozenset[int]:
        return self.prefix.marking_of_cut(self.prefix.cut_mask(self.mask, self.base_mask))

    def crest(self) -> frozenset[int]:
        return frozenset(bits(self.prefix.crest_mask(self.mask)))

    def labels(self) -> list[str]:
        return sorted(self.prefix.label(e) for e in self.events)

    def minus(self, e: int) -> "Configuration":
        return replace(self, events=self.events - {e})

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(sorted(self.events))


class Prefix:
    def __init__(self, net: PetriNet, root: Optional[Iterable[int]] = None, order: str = ERV):
        if order not in ORDERS:
            raise ValueError(f"unknown order {order!r}")
        self.net = net
        self.root = frozenset(net.initial if root is None else root)
        self.order = order
        self.generation = 0
        self.conditions: list[Condition] = []
        self.events: list[Event] = []
        self._consumers: list[list[int]] = []
        self._co: list[int] = []
        self._by_place: list[list[int]] = [[] for _ in net.places]
        self._cone: list[int] = []
        self._depth: list[int] = []
        self._pre: list[int] = []
        self._post: list[int] = []
        self._by_key: dict[tuple[int, tuple[int, ...]], int] = {}
        for p in sorted(self.root):
            self._new_condition(p, None)
        self.c0 = tuple(range(len(self.conditions)))
        self.c0_mask = (1 << len(self.c0)) - 1
        for b in self.c0:
            self._co[b] = self.c0_mask & ~(1 << b)

    # -- construction -----------------------------------------------------

    def _new_condition(self, place: int, producer: Optional[int]) -> int:
        cid = len(self.conditions)
        self.conditions.append(Condition(cid, place, producer))
        self._consumers.append([])
        self._co.append(0)
        self._by_place[place].append(cid)
        return cid

    def add_event(self, transition: int, preset: Iterable[int], cutoff: bool = False,
                  generation: Optional[int] = None) -> int:
        """Append the event ``(preset, transition)``; the preset must be a co-set folding to its preset."""
        preset = tuple(sorted(preset))
        key = (transition, preset)
        if key in self._by_key:
            raise ConfigurationError(f"event {key} already present")
        if sorted(self.conditions[b].place for b in preset) != sorted(self.net.pre[transition]):
            raise ConfigurationError(f"preset does not fold to the preset of {self.net.label(transition)}")
        for i, b in enumerate(preset):
            for b2 in preset[i + 1:]:
                if not self._co[b] >> b2 & 1:
                    raise ConfigurationError(f"preset conditions {b}, {b2} are not concurrent")
        eid = len(self.events)
        pre_mask = to_mask(preset)
        cone = 1 << eid
        depth = 0
        common = -1
        for b in preset:
            self._consumers[b].append(eid)
            common &= self._co[b]
            prod = self.conditions[b].producer
            if prod is not None:
                cone |= self._cone[prod]
                depth = max(depth, self._depth[prod])
        common &= ~pre_mask
        post = tuple(self._new_condition(p, eid) for p in sorted(self.net.post[transition]))
        post_mask = to_mask(post)
        for c in post:
            self._co[c] = common | (post_mask & ~(1 << c))
        for b in bits(common):
            self._co[b] |= post_mask
        self.events.append(Event(eid, transition, preset, post, cutoff,
                                 self.generation if generation is None else generation))
        self._cone.append(cone)
        self._depth.append(depth + 1)
        self._pre.append(pre_mask)
        self._post.append(post_mask)
        self._by_key[key] = eid
        return eid

    def copy(self) -> "Prefix":
        other = Prefix.__new__(Prefix)
        other.__dict__.update(self.__dict__)
        other.conditions = list(self.conditions)
        other.events = list(self.events)
        other._consumers = [list(c) for c in self._consumers]
        other._co = list(self._co)
        other._by_place = [list(c) for c in self._by_place]
        for name in ("_cone", "_depth", "_pre", "_post"):
            setattr(other, name, list(getattr(self, name)))
        other._by_key = dict(self._by_key)
        return other

    # -- basic queries ------------------------------------------------------

    def label(self, e: int) -> str:
        return self.net.transitions[self.events[e].transition]

    def event_key(self, e: int) -> tuple[int, tuple[int, ...]]:
        ev = self.events[e]
        return ev.transition, ev.preset

    def find_event(self, transition: int, preset: Iterable[int]) -> Optional[int]:
        return self._by_key.get((transition, tuple(sorted(preset))))

    def labelled(self, label: str) -> list[int]:
        t = self.net.t(label)
        return [e.id for e in self.events if e.transition == t]

    def consumers(self, b: int) -> list[int]:
        return self._consumers[b]

    def co(self, b1: int, b2: int) -> bool:
        return bool(self._co[b1] >> b2 & 1)

    def depth(self, e: int) -> int:
        return self._depth[e]

    def cone_mask(self, e: int) -> int:
        return self._cone[e]

    def cutoffs(self) -> list[int]:
        return [e.id for e in self.events if e.cutoff]

    def open_conditions(self) -> int:
        """Conditions produced by cutoffs of the newest generation: the frontier left unexplored."""
        m = 0
        for ev in self.events:
            if ev.cutoff and ev.generation == self.generation:
                m |= self._post[ev.id]
        return m

    def cut_mask(self, events: int, base: Optional[int] = None) -> int:
        avail = self.c0_mask if base is None else base
        consumed = 0
        for e in bits(events):
            avail |= self._post[e]
            consumed |= self._pre[e]
        return avail & ~consumed

    def marking_of_cut(self, cut: int) -> frozenset[int]:
        return frozenset(self.conditions[b].place for b in bits(cut))

    def crest_mask(self, events: int) -> int:
        below = 0
        for e in bits(events):
            below |= self._cone[e] & ~(1 << e)
        return events & ~below

    def is_configuration(self, events: int, context: int = 0) -> bool:
        consumed = 0
        for e in bits(events):
            if self._cone[e] & ~(events | context):
                return False
            if consumed & self._pre[e]:
                return False
            consumed |= self._pre[e]
        return True

    def configuration(self, events: Iterable[int]) -> Configuration:
        events = frozenset(events)
        if not self.is_configuration(to_mask(events)):
            raise ConfigurationError(f"{sorted(events)} is not a configuration")
        return Configuration(events, self)

    def config_of(self, mask: int) -> Configuration:
        return Configuration(frozenset(bits(mask)), self)

    def enabled_events(self, cut: int, within: int = -1) -> list[int]:
        out = set()
        for b in bits(cut):
            for e in self._consumers[b]:
                if within >> e & 1 and self._pre[e] & ~cut == 0:
                    out.add(e)
        return sorted(out)

    # -- adequate orders --------------------------------------------------

    def _erv_key(self, items: list[tuple[int, int]]) -> tuple:
        """Items are ``(transition, depth)`` pairs of a configuration's events."""
        levels: dict[int, list[int]] = {}
        for t, d in items:
            levels.setdefault(d, []).append(t)
        foata = tuple(tuple(sorted(levels[d])) for d in sorted(levels))
        return len(items), tuple(sorted(t for t, _ in items)), foata

    def erv_key(self, events: int) -> tuple:
        return self._erv_key([(self.events[e].transition, self._depth[e]) for e in bits(events)])

    def order_key(self, events: int, order: Optional[str] = None) -> tuple:
        order = order or self.order
        key = self.erv_key(events)
        if order == HFIRST:
            return (len(self.decision_partners(events)),) + key
        return key

    def _pending_key(self, transition: int, preset: tuple[int, ...]) -> tuple[tuple, int]:
        past = 0
        depth = 0
        for b in preset:
            prod = self.conditions[b].producer
            if prod is not None:
                past |= self._cone[prod]
                depth = max(depth, self._depth[prod])
        items = [(self.events[e].transition, self._depth[e]) for e in bits(past)]
        items.append((transition, depth + 1))
        key = self._erv_key(items)
        if self.order == HFIRST:
            key = (len(self.decision_partners(past, pending=(transition, preset))),) + key
        return key, past

    # -- decisions ----------------------------------------------------------

    def decision_partners(self, events: int, base: Optional[int] = None,
                          pending: Optional[tuple[int, tuple[int, ...]]] = None
                          ) -> dict[tuple[int, tuple[int, ...]], set]:
        """Events of the unfolding in strict conflict with some member of ``events``.

        A partner is any event ``(t, B)`` of the unfolding, present in this
        prefix or not, that shares a preset condition with a member, is not a
        member itself, and whose preset lies in ``base`` plus the conditions
        produced by members (so its stump lies inside the configuration).
        Returns partner key -> set of members it conflicts with; the pending
        member, when given, is reported as ``-1``.
        """
        net = self.net
        base = self.c0_mask if base is None else base
        avail = base
        for e in bits(events):
            avail |= self._post[e]
        by_place: dict[int, list[int]] = {}
        for b in bits(avail):
            by_place.setdefault(self.conditions[b].place, []).append(b)
        members = [(e, self.events[e].transition, self.events[e].preset) for e in bits(events)]
        if pending is not None:
            members.append((-1, pending[0], tuple(pending[1])))
        own = {(t, pre) for _, t, pre in members}

        def coset(chosen):
            past = 0
            for b in chosen:
                prod = self.conditions[b].producer
                if prod is not None and events >> prod & 1:
                    past |= self._cone[prod] & events
            consumed = 0
            for d in bits(past):
                consumed |= self._pre[d]
            return not consumed & to_mask(chosen)

        partners: dict[tuple[int, tuple[int, ...]], set] = {}
        for e, _, pre in members:
            for b in pre:
                q = self.conditions[b].place
                for t in net.consumers[q]:
                    others = sorted(net.pre[t] - {q})
                    pools = [by_place.get(r, ()) for r in others]
                    for choice in product(*pools):
                        chosen = tuple(sorted((b,) + choice))
                        key = (t, chosen)
                        if key in own:
                            continue
                        if key not in partners and not coset(chosen):
                            continue
                        partners.setdefault(key, set()).add(e)
        return partners


# -- construction of complete prefixes ------------------------------------------

def _cosets_with(p: Prefix, c: int, allowed: int) -> Iterator[tuple[int, tuple[int, ...]]]:
    """Candidate events whose preset contains condition ``c`` and otherwise only ``allowed`` ones."""
    net = p.net
    q = p.conditions[c].place
    for t in net.consumers[q]:
        others = sorted(net.pre[t] - {q})
        pools = []
        for r in others:
            pools.append([b for b in p._by_place[r] if (p._co[c] & allowed) >> b & 1])
        for choice in product(*pools):
            if all(p.co(a, b) for i, a in enumerate(choice) for b in choice[i + 1:]):
                yield t, tuple(sorted((c,) + choice))


def build_prefix(net: PetriNet, order: str = ERV, root: Optional[Iterable[int]] = None) -> Prefix:
    """Complete finite prefix of the unfolding of ``net`` started at ``root``."""
    p = Prefix(net, root, order)
    heap: list = []
    queued: set = set()

    def push(cands):
        for t, preset in cands:
            if (t, preset) in queued or (t, preset) in p._by_key:
                continue
            queued.add((t, preset))
            key, _ = p._pending_key(t, preset)
            heapq.heappush(heap, (key, t, preset))

    usable = p.c0_mask
    for c in p.c0:
        push(_cosets_with(p, c, usable))
    discovered: dict[frozenset[int], tuple] = {}
    while heap:
        key, t, preset = heapq.heappop(heap)
        _, past = p._pending_key(t, preset)
        # marking reached by the cone, computed before the event exists
        cut = p.cut_mask(past) & ~to_mask(preset)
        mark = p.marking_of_cut(cut) | net.post[t]
        seen = discovered.get(mark)
        cutoff = mark == p.root or (seen is not None and seen < key)
        e = p.add_event(t, preset, cutoff=cutoff)
        if cutoff:
            continue
        discovered.setdefault(mark, key)
        usable |= p._post[e]
        for c in p.events[e].postset:
            push(_cosets_with(p, c, usable))
    return p


def truncated_unfolding(net: PetriNet, max_cone: int, root: Optional[Iterable[int]] = None) -> Prefix:
    """Every event of the unfolding whose cone has at most ``max_cone`` events; no cutoffs."""
    p = Prefix(net, root, ERV)
    everything = lambda: (1 << len(p.conditions)) - 1
    heap: list = []
    queued: set = set()

    def push(c):
        for t, preset in _cosets_with(p, c, everything()):
            if (t, preset) not in queued:
                queued.add((t, preset))
                key, _ = p._pending_key(t, preset)
                if key[0] <= max_cone:
                    heapq.heappush(heap, (key, t, preset))

    for c in p.c0:
        push(c)
    while heap:
        _, t, preset = heapq.heappop(heap)
        e = p.add_event(t, preset)
        for c in p.events[e].postset:
            push(c)
    return p


def possible_extensions(p: Prefix) -> list[tuple[int, tuple[int, ...]]]:
    """All events ``(t, B)`` with ``B`` a co-set of conditions of ``p`` that are not yet in ``p``."""
    found = set()
    everything = (1 << len(p.conditions)) - 1
    for c in range(len(p.conditions)):
        for cand in _cosets_with(p, c, everything):
            if cand not in p._by_key:
                found.add(cand)
    return sorted(found)


def order_compare(c1: Configuration, c2: Configuration, order: str = ERV) -> str:
    """``less``, ``greater`` or ``equal-keys`` under the chosen adequate order."""
    k1 = c1.prefix.order_key(c1.mask, order)
    k2 = c2.prefix.order_key(c2.mask, order)
    return "less" if k1 < k2 else "greater" if k1 > k2 else "equal-keys"


# -- configuration queries --------------------------------------------------

def cone(p: Prefix, e: int) -> Configuration:
    return p.config_of(p._cone[e])


def stump(p: Prefix, e: int) -> Configuration:
    return p.config_of(p._cone[e] & ~(1 << e))


def cut(c: Configuration) -> frozenset[int]:
    return c.cut()


def mark(c: Configuration) -> frozenset[int]:
    return c.mark()


def crest(c: Configuration) -> frozenset[int]:
    return c.crest()


def _past(p: Prefix, node) -> int:
    if isinstance(node, Event):
        return p._cone[node.id]
    prod = node.producer
    return 0 if prod is None else p._cone[prod]


def _precedes(p: Prefix, x, y) -> bool:
    past = _past(p, y)
    if isinstance(x, Event):
        if isinstance(y, Event):
            past &= ~(1 << y.id)
        return bool(past >> x.id & 1)
    return any(past >> e & 1 for e in p._consumers[x.id])


def relations(p: Prefix, x, y) -> str:
    """One of ``equal``, ``causal``, ``conflict``, ``concurrent`` for two nodes of ``p``."""
    if type(x) is type(y) and x.id == y.id:
        return "equal"
    if _precedes(p, x, y) or _precedes(p, y, x):
        return "causal"
    consumed = 0
    for e in bits(_past(p, x) | _past(p, y)):
        if consumed & p._pre[e]:
            return "conflict"
        consumed |= p._pre[e]
    return "concurrent"


def iter_configurations(p: Prefix, start: int = 0, within: int = -1, prune=None,
                        base: Optional[int] = None) -> Iterator[tuple[int, int]]:
    """Breadth-first enumeration of ``(events, cut)`` masks of configurations extending ``start``.

    Only events in ``within`` are used.  ``prune(events, cut)`` returning true
    stops the search from extending that configuration (it is still yielded).
    """
    first = (start, p.cut_mask(start, base))
    seen = {start}
    level = [first]
    while level:
        nxt = []
        for events, cut_ in level:
            yield events, cut_
            if prune is not None and prune(events, cut_):
                continue
            for e in p.enabled_events(cut_, within):
                ext = events | 1 << e
                if ext not in seen:
                    seen.add(ext)
                    nxt.append((ext, (cut_ & ~p._pre[e]) | p._post[e]))
        level = nxt


def configurations(p: Prefix, within: int = -1) -> Iterator[Configuration]:
    for events, _ in iter_configurations(p, within=within):
        yield p.config_of(events)


def maximal_configs(p: Prefix, within: int = -1) -> list[Configuration]:
    """All inclusion-maximal configurations of ``p`` (cutoff events included)."""
    out = []
    for events, cut_ in iter_configurations(p, within=within):
        if not p.enabled_events(cut_, within):
            out.append(events)
    return [p.config_of(m) for m in sorted(out)]


def generation_mask(p: Prefix, upto: int) -> int:
    return to_mask(e.id for e in p.events if e.generation <= upto)


def residual(c: Configuration, c1: Configuration) -> Configuration:
    """``c ⊖ c1``: the events of ``c`` beyond ``c1``, played from ``cut(c1)``."""
    if not c1.events <= c.events:
        raise ConfigurationError("residual needs c1 to be contained in c")
    return Configuration(c.events - c1.events, c.prefix, base=c1.cut(),
                         context=c1.events | c.context)


def extend_family(p: Prefix, net: Optional[PetriNet] = None, order: Optional[str] = None,
                  cache: Optional[dict] = None) -> Prefix:
    """Graft a complete prefix of the re-rooted net onto the cut of every maximal configuration."""
    net = net or p.net
    order = order or p.order
    cache = {} if cache is None else cache
    q = p.copy()
    q.generation = p.generation + 1
    fresh = set()
    for config in maximal_configs(p):
        cut_ = p.cut_mask(config.mask)
        m = p.marking_of_cut(cut_)
        template = cache.get((m, order))
        if template is None:
            template = cache[(m, order)] = build_prefix(net, order, root=m)
        host = {q.conditions[b].place: b for b in bits(cut_)}
        mapping = {b: host[template.conditions[b].place] for b in template.c0}
        for ev in template.events:
            preset = tuple(sorted(mapping[b] for b in ev.preset))
            eid = q.find_event(ev.transition, preset)
            if eid is None:
                eid = q.add_event(ev.transition, preset, cutoff=ev.cutoff, generation=q.generation)
                fresh.add(eid)
            elif eid in fresh and q.events[eid].cutoff and not ev.cutoff:
                q.events[eid] = replace(q.events[eid], cutoff=False)
            by_place = {q.conditions[c].place: c for c in q.events[eid].postset}
            for c in ev.postset:
                mapping[c] = by_place[template.conditions[c].place]
    return q


def build_family(net: PetriNet, depth: int, order: str = ERV, root=None,
                 cache: Optional[dict] = None) -> Prefix:
    """``Π_depth`` rooted at ``root``."""
    cache = {} if cache is None else cache
    p = build_prefix(net, order, root)
    cache.setdefault((p.root, order), p)
    for _ in range(depth):
        p = extend_family(p, net, order, cache)
    return p


# -- textual output ---------------------------------------------------------

def event_names(p: Prefix) -> list[str]:
    """``label#k`` names numbering the occurrences of each transition in insertion order."""
    seen: dict[int, int] = {}
    out = []
    for ev in p.events:
        seen[ev.transition] = seen.get(ev.transition, 0) + 1
        out.append(f"{p.net.transitions[ev.transition]}{seen[ev.transition]}")
    return out


def dump(p: Prefix) -> str:
    lines = ["c0 " + " ".join(f"b{b}:{p.net.places[p.conditions[b].place]}" for b in p.c0)]
    for ev in p.events:
        pre = ",".join(f"b{b}" for b in ev.preset)
        post = ",".join(f"b{b}" for b in ev.postset)
        lines.append(f"e{ev.id} {p.net.transitions[ev.transition]} pre={pre} post={post} "
                     f"cutoff={int(ev.cutoff)} gen={ev.generation}")
    return "\n".join(lines) + "\n"


def to_dot(p: Prefix, highlight: Iterable[int] = (), crest_events: Iterable[int] = ()) -> str:
    highlight = set(highlight)
    crest_events = set(crest_events)
    out = ["digraph prefix {", "  rankdir=TB;"]
    for c in p.conditions:
        out.append(f'  b{c.id} [shape=circle, label="{p.net.places[c.place]}"];')
    for ev in p.events:
        attrs = [f'shape=box, label="{p.net.transitions[ev.transition]}#{ev.generation}"']
        style = []
        if ev.cutoff:
            style.append("dashed")
        if ev.id in highlight:
            style.append("filled")
            attrs.append('fillcolor="#f4b6b6"')
        if style:
            attrs.append(f'style="{",".join(style)}"')
        if ev.id in crest_events:
            attrs.append("peripheries=2")
        out.append(f"  e{ev.id} [{', '.join(attrs)}];")
    for ev in p.events:
        out.extend(f"  b{b} -> e{ev.id};" for b in ev.preset)
        out.extend(f"  e{ev.id} -> b{b};" for b in ev.postset)
    out.append("}")
    return "\n".join(out) + "\n"
