"""Decisional height and protectedness.

The height of a configuration counts the decisions it embodies: the
alternatives it rejected whose causes were all present in it.  The
protectedness of a configuration is the least height of a path into doom,
i.e. the minimum residual height over the minimally doomed configurations
extending it.

Protectedness depends only on the marking, so it is evaluated on a prefix
rooted at that marking: the minimally doomed configurations of the
re-rooted prefix are exactly the residual paths into doom.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .doom import DoomChecker, iter_minimally_doomed
from .errors import ScopeInconclusive
from .net import FREE, reach_graph
from .unfold import (ERV, HFIRST, Configuration, Prefix, bits, build_family, build_prefix,
                     to_mask)

UNBOUNDED = "unbounded"


class HeightMode(str, Enum):
    DECIDED = "decided"   # distinct rejected alternatives
    LITERAL = "literal"   # members of C that rejected some alternative

    @classmethod
    def of(cls, mode) -> "HeightMode":
        return mode if isinstance(mode, cls) else cls(mode)


def _avail(c: Configuration) -> int:
    p = c.prefix
    avail = c.base_mask
    for e in c.events:
        avail |= p._post[e]
    return avail


def strict_conflict(c: Configuration, e: int, other: Union[int, tuple]) -> bool:
    """Whether member ``e`` of ``c`` rejected ``other`` within ``c``.

    ``other`` is an event id of the prefix or an event key ``(t, preset)``
    that need not be present in it.  Holds iff the two share a preset
    condition and every cause of ``other`` lies in ``c``.
    """
    p = c.prefix
    if e not in c.events:
        raise ValueError(f"event {e} is not in the configuration")
    preset = p.events[other].preset if isinstance(other, int) else tuple(other[1])
    if isinstance(other, int) and other == e:
        return False
    if not isinstance(other, int) and p.event_key(e) == (other[0], tuple(sorted(preset))):
        return False
    if not set(preset) & set(p.events[e].preset):
        return False
    return to_mask(preset) & ~_avail(c) == 0


def height(c: Configuration, mode=HeightMode.DECIDED) -> int:
    partners = c.prefix.decision_partners(c.mask, base=c.base_mask)
    if HeightMode.of(mode) is HeightMode.DECIDED:
        return len(partners)
    return len(set().union(*partners.values())) if partners else 0


@dataclass
class Protectedness:
    value: Union[int, str]
    witnesses: list[Configuration] = field(default_factory=list)
    scope: Optional[Prefix] = None

    @property
    def unbounded(self) -> bool:
        return self.value == UNBOUNDED


def scope_prefix(checker: DoomChecker, m, order: str = HFIRST, depth: int = 0) -> Prefix:
    if depth == 0:
        return build_prefix(checker.net, order, root=m)
    return build_family(checker.net, depth, order, root=m, cache=checker.templates)


def mdc_of(checker: DoomChecker, c: Configuration, order: str = HFIRST,
           depth: int = 0) -> list[Configuration]:
    """Minimally doomed extensions of ``c``.

    A doomed ``c`` yields ``[c]``.  For a free ``c`` the extensions are
    returned as configurations of the scope prefix rooted at ``mark(c)``;
    :func:`lift` maps them back onto ``c``'s prefix.
    """
    if checker.status(c.mark()) != FREE:
        return [c]
    q = scope_prefix(checker, c.mark(), order, depth)
    return [q.config_of(m) for m in sorted(iter_minimally_doomed(checker, q))]


def lift(c: Configuration, d: Configuration) -> Optional[Configuration]:
    """``c ⊕ d`` in ``c``'s prefix for ``d`` from a prefix rooted at ``mark(c)``, if present there."""
    p, q = c.prefix, d.prefix
    host = {p.conditions[b].place: b for b in bits(p.cut_mask(c.mask, c.base_mask))}
    mapping = {b: host[q.conditions[b].place] for b in q.c0}
    events = set(c.events)
    for e in sorted(d.events):  # ids ascend along causality
        ev = q.events[e]
        found = p.find_event(ev.transition, [mapping[b] for b in ev.preset])
        if found is None:
            return None
        events.add(found)
        by_place = {p.conditions[b].place: b for b in p.events[found].postset}
        for b in ev.postset:
            mapping[b] = by_place[q.conditions[b].place]
    return Configuration(frozenset(events), p, c.base, c.context)


def _doom_reachable(checker: DoomChecker, m) -> bool:
    g = reach_graph(checker.net, frozenset(m))
    return any(checker.status(x) != FREE for x in g.nodes)


def _minimize(checker: DoomChecker, q: Prefix, mode: HeightMode, prune: bool):
    best: list = [None]
    argmin: list[int] = []
    bound = (lambda ev: best[0] is not None and height(q.config_of(ev), mode) >= best[0]) if prune else None
    for m in iter_minimally_doomed(checker, q, bound=bound):
        h = height(q.config_of(m), mode)
        if best[0] is None or h < best[0]:
            best[0], argmin = h, [m]
        elif h == best[0]:
            argmin.append(m)
    return best[0], [q.config_of(m) for m in sorted(argmin)]


def protectedness(checker: DoomChecker, c: Configuration, mode=HeightMode.DECIDED,
                  order: str = HFIRST, depth: int = 0) -> Protectedness:
    """Least residual decisional height of a minimally doomed extension of ``c``."""
    mode = HeightMode.of(mode)
    m = c.mark()
    if checker.status(m) != FREE:
        return Protectedness(0, [c])
    q = scope_prefix(checker, m, order, depth)
    value, wits = _minimize(checker, q, mode, prune=False)
    if value is None:
        if _doom_reachable(checker, m):
            raise ScopeInconclusive(
                f"doom is reachable from {checker.net.names(m)} but no minimally doomed "
                "configuration lies in the analysed prefix; increase the prefix depth")
        return Protectedness(UNBOUNDED, [], q)
    return Protectedness(value, wits, q)


def protectedness_exhaustive(checker: DoomChecker, m, mode=HeightMode.DECIDED,
                             depth: int = 2) -> Union[int, str, None]:
    """Independent recomputation over the ``depth``-generation ERV family rooted at ``m``.

    Heights only grow along extensions, so the search is cut below any free
    configuration already as high as the best witness.  Returns ``None``
    when doom is reachable but no witness lies in the family.
    """
    mode = HeightMode.of(mode)
    m = frozenset(m)
    if checker.status(m) != FREE:
        return 0
    q = build_family(checker.net, depth, ERV, root=m, cache=checker.templates)
    value, _ = _minimize(checker, q, mode, prune=True)
    if value is None:
        return None if _doom_reachable(checker, m) else UNBOUNDED
    return value
