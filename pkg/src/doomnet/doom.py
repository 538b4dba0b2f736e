"""Doom classification of configurations, shaving, and minimally doomed configurations.

A configuration is *bad* when its marking is in the bad set, *doomed* when
every maximal run extending it eventually enters the bad set, and *free*
otherwise.  Verdicts depend only on the marking, so :class:`DoomChecker`
memoizes them per marking.

Freeness is decided on a two-generation prefix family rooted at the marking:
``M`` is free iff some configuration ``C1`` of the first generation and an
extension ``C2`` in the family, neither bad, end in the same marking and no
event is enabled on the part of ``cut(C1)`` left untouched by ``C2 \\ C1``.
Repeating ``C2 \\ C1`` forever is then a maximal run avoiding the bad set.
A deadlocked non-bad ``C1`` is the special case ``C2 = C1``.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import FamilyMismatch
from .net import BAD, DOOMED, FREE, PetriNet
from .unfold import (ERV, Configuration, Prefix, bits, build_family, generation_mask,
                     iter_configurations)


def spoilers(net: PetriNet, t: int) -> set[int]:
    """Transitions sharing an input place with ``t`` (``t`` included)."""
    return {u for q in net.pre[t] for u in net.consumers[q]}


def event_spoilers(p: Prefix, e: int) -> set[int]:
    return {f for b in p.events[e].preset for f in p.consumers(b)}


@dataclass(frozen=True)
class DoomStatus:
    value: str
    witness: Optional[tuple] = None  # (C1, C2) event masks of the family for free verdicts

    @property
    def doomed(self) -> bool:
        """True for bad as well as doomed: both have no escaping run."""
        return self.value != FREE

    def __str__(self):
        return self.value


class DoomChecker:
    """Marking-memoized freeness test over prefix families of ``net``."""

    def __init__(self, net: PetriNet, bad: Iterable[frozenset[int]], order: str = ERV):
        self.net = net
        self.bad = frozenset(frozenset(m) for m in bad)
        self.order = order
        self.memo: dict[frozenset[int], str] = {}
        self.witnesses: dict[frozenset[int], tuple] = {}
        self.checks = 0
        self.templates: dict = {}
        self._families: dict[frozenset[int], Prefix] = {}

    def family(self, m: Iterable[int]) -> Prefix:
        m = frozenset(m)
        fam = self._families.get(m)
        if fam is None:
            fam = self._families[m] = build_family(self.net, 1, self.order, root=m,
                                                   cache=self.templates)
        return fam

    def status(self, m: Iterable[int]) -> str:
        m = frozenset(m)
        if m in self.bad:
            return BAD
        v = self.memo.get(m)
        if v is None:
            self.checks += 1
            witness = self._search(m)
            v = DOOMED if witness is None else FREE
            self.memo[m] = v
            if witness is not None:
                self.witnesses[m] = witness
        return v

    def is_free(self, c: Configuration, family: Optional[Prefix] = None) -> DoomStatus:
        m = c.mark()
        if family is not None and family.root != m:
            raise FamilyMismatch(f"family rooted at {self.net.names(family.root)}, "
                                 f"configuration marks {self.net.names(m)}")
        v = self.status(m)
        return DoomStatus(v, self.witnesses.get(m) if v == FREE else None)

    def doomed(self, c: Configuration) -> bool:
        return self.status(c.mark()) != FREE

    # -- witness search ------------------------------------------------------

    def _blocked(self, m: frozenset[int]) -> bool:
        return m in self.bad or self.memo.get(m) == DOOMED

    def _search(self, m: frozenset[int]) -> Optional[tuple]:
        fam = self.family(m)
        gen0 = generation_mask(fam, 0)
        start = (0, fam.c0_mask)
        seen = {0}
        level = [start]
        while level:
            level.sort(key=lambda s: fam.erv_key(s[0]))
            nxt = []
            for events, cut1 in level:
                m1 = fam.marking_of_cut(cut1)
                if self._blocked(m1):
                    continue
                if m1 != m and self.memo.get(m1) == FREE:
                    return events, None
                found = self._loop(fam, events, cut1, m1)
                if found is not None:
                    return events, found
                for e in fam.enabled_events(cut1, gen0):
                    ext = events | 1 << e
                    if ext not in seen:
                        seen.add(ext)
                        nxt.append((ext, (cut1 & ~fam._pre[e]) | fam._post[e]))
            level = nxt
        return None

    def _loop(self, fam: Prefix, events1: int, cut1: int, m1: frozenset[int]) -> Optional[int]:
        net = self.net
        for events2, cut2 in iter_configurations(
                fam, start=events1, prune=lambda ev, ct: self._blocked(fam.marking_of_cut(ct))):
            if events2 != events1 and self._blocked(fam.marking_of_cut(cut2)):
                continue
            if fam.marking_of_cut(cut2) != m1:
                continue
            idle = fam.marking_of_cut(cut1 & cut2)
            if not any(net.pre[t] <= idle for q in idle for t in net.consumers[q]):
                return events2
        return None


# -- shaving -------------------------------------------------------------------

def min_bad_configs(p: Prefix, bad: Iterable[frozenset[int]], within: int = -1) -> list[Configuration]:
    """Inclusion-minimal configurations of ``p`` whose marking is bad."""
    bad = frozenset(frozenset(m) for m in bad)
    if not bad:
        return []
    is_bad = lambda ct: p.marking_of_cut(ct) in bad
    out = []
    for events, cut_ in iter_configurations(p, within=within, prune=lambda ev, ct: is_bad(ct)):
        if not is_bad(cut_):
            continue
        if all(not is_bad(p.cut_mask(events & ~(1 << e))) for e in bits(p.crest_mask(events))):
            out.append(p.config_of(events))
    return out


def unchallenged(p: Prefix, e: int) -> bool:
    """No event of ``p``, nor any event beyond its cutoffs, can be in direct conflict with ``e``.

    Events past the newest cutoffs are not in ``p``; a preset condition of
    ``e`` concurrent with a condition they would consume is conservatively
    treated as challenged.
    """
    ev = p.events[e]
    frontier = p.open_conditions()
    for b in ev.preset:
        if any(f != e for f in p.consumers(b)):
            return False
        if p._co[b] & frontier:
            return False
    return True


def shave(c: Configuration) -> Configuration:
    p = c.prefix
    events = c.mask
    while True:
        drop = [e for e in bits(p.crest_mask(events)) if unchallenged(p, e)]
        if not drop:
            return Configuration(frozenset(bits(events)), p, c.base, c.context)
        for e in drop:
            events &= ~(1 << e)


# -- minimally doomed configurations -----------------------------------------------

@dataclass
class MdcSet:
    configs: list[Configuration] = field(default_factory=list)

    def crest(self, c: Configuration) -> frozenset[int]:
        return c.crest()

    def mark(self, c: Configuration) -> frozenset[int]:
        return c.mark()

    def label_sets(self) -> list[list[str]]:
        return sorted(c.labels() for c in self.configs)

    def __len__(self):
        return len(self.configs)

    def __iter__(self):
        return iter(self.configs)


def mindoo(checker: DoomChecker, rng: Optional[random.Random] = None) -> MdcSet:
    """Worklist search for minimally doomed configurations, seeded by shaved minimal bad ones.

    Operates on the first generation of the checker's family at the initial
    marking.  ``rng`` randomizes the pick order.
    """
    fam = checker.family(checker.net.initial)
    gen0 = generation_mask(fam, 0)
    worklist: deque = deque()
    queued: set = set()

    def push(c: Configuration):
        if c.events not in queued:
            queued.add(c.events)
            worklist.append(c)

    for seed in min_bad_configs(fam, checker.bad, within=gen0):
        push(shave(seed))
    out: list[Configuration] = []
    while worklist:
        if rng is not None:
            worklist.rotate(-rng.randrange(len(worklist)))
        c = worklist.popleft()
        if not c.events:
            return MdcSet([c])
        if checker.memo.get(c.mark()) == FREE:
            continue
        top = c.crest()
        lower = Configuration(c.events - top, fam)
        if checker.doomed(lower):
            push(shave(lower))
            continue
        reducible = False
        for e in sorted(top):
            rub = c.minus(e)
            if checker.doomed(rub):
                reducible = True
                push(shave(rub))
        if not reducible:
            out.append(c)
    return MdcSet(sorted(out, key=lambda c: fam.erv_key(c.mask)))


def iter_minimally_doomed(checker: DoomChecker, p: Prefix, base: Optional[int] = None,
                          bound=None):
    """Exhaustive enumeration of the minimally doomed configurations of ``p``, as event masks.

    Searches the free configurations breadth-first; a one-event extension
    that is doomed while each of its crest rubs is free is minimally doomed.
    ``bound(events)`` returning true cuts the search below that free
    configuration; it is consulted lazily, so it may tighten as results arrive.
    """
    base_mask = p.c0_mask if base is None else base
    doomed = lambda ct: checker.status(p.marking_of_cut(ct)) != FREE
    start_cut = p.cut_mask(0, base_mask)
    if doomed(start_cut):
        yield 0
        return
    seen = {0}
    level = [(0, start_cut)]
    while level:
        nxt = []
        for events, cut_ in level:
            if bound is not None and bound(events):
                continue
            for e in p.enabled_events(cut_):
                ext = events | 1 << e
                if ext in seen:
                    continue
                seen.add(ext)
                ext_cut = (cut_ & ~p._pre[e]) | p._post[e]
                if not doomed(ext_cut):
                    nxt.append((ext, ext_cut))
                    continue
                if all(not doomed(p.cut_mask(ext & ~(1 << f), base_mask))
                       for f in bits(p.crest_mask(ext)) if f != e):
                    yield ext
        level = nxt


def minimally_doomed(checker: DoomChecker, p: Prefix, base: Optional[int] = None) -> list[Configuration]:
    base_set = None if base is None else frozenset(bits(base))
    return [Configuration(frozenset(bits(m)), p, base_set)
            for m in sorted(iter_minimally_doomed(checker, p, base))]


@dataclass(frozen=True)
class Ridge:
    transitions: frozenset[int]
    witnesses: tuple[frozenset[int], ...]

    def labels(self, net: PetriNet) -> list[str]:
        return sorted(net.transitions[t] for t in self.transitions)


def _group(crests: Iterable[tuple[Prefix, frozenset[int]]]) -> list[Ridge]:
    groups: dict[frozenset[int], list] = {}
    for p, cr in crests:
        fold = frozenset(p.events[e].transition for e in cr)
        if cr not in groups.setdefault(fold, []):
            groups[fold].append(cr)
    return [Ridge(k, tuple(v)) for k, v in sorted(groups.items(), key=lambda kv: sorted(kv[0]))]


def ridges(m: MdcSet) -> list[Ridge]:
    return _group((c.prefix, c.crest()) for c in m)


def ridge_complete(checker: DoomChecker, m: Optional[MdcSet] = None) -> list[Ridge]:
    """Ridges of ``m`` plus those witnessed by any minimally doomed configuration of the family."""
    m = mindoo(checker) if m is None else m
    fam = checker.family(checker.net.initial)
    extra = minimally_doomed(checker, fam)
    return _group([(c.prefix, c.crest()) for c in m] + [(fam, c.crest()) for c in extra])
