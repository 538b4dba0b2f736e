"""Safe Petri nets: data model, file formats, firing rule and the marking graph.

Markings are ``frozenset`` objects of place indices.  Transitions and places
are referred to by their declaration index everywhere inside the package;
names only appear at the I/O boundary (see :meth:`PetriNet.marking` and
:meth:`PetriNet.names`).
"""
from __future__ import annotations

import json
import logging
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

from .errors import (BudgetExceeded, ClosureError, NetSyntaxError,
                     NetValidationError, NotEnabledError, SafetyError)

log = logging.getLogger(__name__)

Marking = frozenset


@dataclass(frozen=True)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[str, ...]
    pre: tuple[frozenset[int], ...]
    post: tuple[frozenset[int], ...]
    initial: frozenset[int]

    def __post_init__(self):
        if len(set(self.places)) != len(self.places):
            raise NetValidationError(f"duplicate place name in {self.places}")
        if len(set(self.transitions)) != len(self.transitions):
            raise NetValidationError(f"duplicate transition name in {self.transitions}")
        shared = set(self.places) & set(self.transitions)
        if shared:
            raise NetValidationError(f"names used for both a place and a transition: {sorted(shared)}")
        if not (len(self.pre) == len(self.post) == len(self.transitions)):
            raise NetValidationError("pre/post arity does not match the transition count")
        n = len(self.places)
        for t, name in enumerate(self.transitions):
            if not self.pre[t]:
                raise NetValidationError(f"transition {name} has an empty preset")
            if not self.post[t]:
                raise NetValidationError(f"transition {name} has an empty postset")
            if any(not 0 <= p < n for p in self.pre[t] | self.post[t]):
                raise NetValidationError(f"transition {name} refers to an undeclared place")
        if any(not 0 <= p < n for p in self.initial):
            raise NetValidationError("initial marking refers to an undeclared place")

    @classmethod
    def build(cls, places: Iterable[str], transitions: Iterable[tuple[str, Iterable[str], Iterable[str]]],
              initial: Iterable[str]) -> "PetriNet":
        """Build a net from names: ``transitions`` holds ``(name, pre, post)`` triples."""
        places = tuple(places)
        index = {p: i for i, p in enumerate(places)}

        def lookup(p):
            try:
                return index[p]
            except KeyError:
                raise NetValidationError(f"arc to undeclared place {p!r}") from None

        names, pre, post = [], [], []
        for name, tpre, tpost in transitions:
            names.append(name)
            pre.append(frozenset(lookup(p) for p in tpre))
            post.append(frozenset(lookup(p) for p in tpost))
        return cls(places, tuple(names), tuple(pre), tuple(post),
                   frozenset(lookup(p) for p in initial))

    @cached_property
    def place_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.places)}

    @cached_property
    def transition_index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.transitions)}

    @cached_property
    def consumers(self) -> tuple[tuple[int, ...], ...]:
        """For each place, the transitions having it in their preset."""
        out = [[] for _ in self.places]
        for t, ps in enumerate(self.pre):
            for p in ps:
                out[p].append(t)
        return tuple(tuple(ts) for ts in out)

    def marking(self, *names: str) -> frozenset[int]:
        return frozenset(self.place_index[p] for p in names)

    def names(self, marking: Iterable[int]) -> list[str]:
        return [self.places[p] for p in sorted(marking)]

    def t(self, name: str) -> int:
        return self.transition_index[name]

    def label(self, t: int) -> str:
        return self.transitions[t]

    def with_initial(self, marking: Iterable[int]) -> "PetriNet":
        return PetriNet(self.places, self.transitions, self.pre, self.post, frozenset(marking))


# -- file formats -----------------------------------------------------------

_SECTION = re.compile(r"^[A-Z][A-Z0-9_]*$")
_NODE = re.compile(r'^(\d+)?"([^"]*)"(.*)$')
_TP = re.compile(r"(\d+)<(\d+)(\S*)")
_PT = re.compile(r"(\d+)>(\d+)(\S*)")
_HEADERS = {"PEP", "PTNet", "FORMAT_N", "FORMAT_N2"}
_UNSUPPORTED = {"RA": "read arcs", "RS": "reset arcs", "IA": "inhibitor arcs"}


def _arc_weight(suffix: str, line: int) -> None:
    m = re.search(r"w(\d+)", suffix)
    if m and int(m.group(1)) != 1:
        raise NetSyntaxError(f"weighted arc (w{m.group(1)}) is not supported", line)


def parse_llnet(text: str) -> PetriNet:
    """Parse the PEP ``ll_net`` dialect (places, transitions and plain arcs only)."""
    section = None
    places: dict[int, str] = {}
    marked: set[int] = set()
    transitions: dict[int, str] = {}
    arcs_tp: list[tuple[int, int, int]] = []
    arcs_pt: list[tuple[int, int, int]] = []
    names: dict[str, int] = {}
    seen_header = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line in _HEADERS:
            seen_header = True
            section = None
            continue
        if _SECTION.match(line):
            if line in _UNSUPPORTED:
                raise NetSyntaxError(f"{_UNSUPPORTED[line]} are not supported", lineno)
            section = line
            continue
        if not seen_header:
            raise NetSyntaxError(f"expected PEP header, got {line!r}", lineno)

        if section in ("PL", "TR"):
            m = _NODE.match(line)
            if not m:
                raise NetSyntaxError(f"malformed {section} entry {line!r}", lineno)
            table = places if section == "PL" else transitions
            ident = int(m.group(1)) if m.group(1) else max(table, default=0) + 1
            name = m.group(2)
            if ident in table:
                raise NetSyntaxError(f"duplicate identifier {ident} in {section}", lineno)
            if name in names:
                raise NetSyntaxError(f"duplicate name {name!r}", lineno)
            names[name] = lineno
            table[ident] = name
            if section == "PL":
                tokens = re.search(r"M(\d+)", m.group(3))
                count = int(tokens.group(1)) if tokens else 0
                if count > 1:
                    raise NetSyntaxError(f"place {name!r} holds {count} tokens; the net must be safe", lineno)
                if count:
                    marked.add(ident)
        elif section in ("TP", "PT"):
            pattern = _TP if section == "TP" else _PT
            found = list(pattern.finditer(line))
            if not found or pattern.sub("", line).strip():
                raise NetSyntaxError(f"malformed {section} arc {line!r}", lineno)
            for a in found:
                _arc_weight(a.group(3), lineno)
                (arcs_tp if section == "TP" else arcs_pt).append((int(a.group(1)), int(a.group(2)), lineno))
        elif section is None:
            raise NetSyntaxError(f"entry outside of any section: {line!r}", lineno)
        # entries of other sections (text blocks, layout data) carry no semantics for us

    place_ids = sorted(places)
    trans_ids = sorted(transitions)
    pidx = {pid: i for i, pid in enumerate(place_ids)}
    tidx = {tid: i for i, tid in enumerate(trans_ids)}
    pre = [set() for _ in trans_ids]
    post = [set() for _ in trans_ids]
    for tid, pid, lineno in arcs_tp:
        if tid not in tidx:
            raise NetSyntaxError(f"arc from undeclared transition {tid}", lineno)
        if pid not in pidx:
            raise NetSyntaxError(f"arc to undeclared place {pid}", lineno)
        post[tidx[tid]].add(pidx[pid])
    for pid, tid, lineno in arcs_pt:
        if pid not in pidx:
            raise NetSyntaxError(f"arc from undeclared place {pid}", lineno)
        if tid not in tidx:
            raise NetSyntaxError(f"arc to undeclared transition {tid}", lineno)
        pre[tidx[tid]].add(pidx[pid])
    return PetriNet(tuple(places[i] for i in place_ids), tuple(transitions[i] for i in trans_ids),
                    tuple(frozenset(s) for s in pre), tuple(frozenset(s) for s in post),
                    frozenset(pidx[i] for i in marked))


def to_llnet(net: PetriNet) -> str:
    lines = ["PEP", "PTNet", "FORMAT_N2", "PL"]
    for i, p in enumerate(net.places):
        lines.append(f'{i + 1}"{p}"' + ("M1" if i in net.initial else "M0"))
    lines.append("TR")
    lines.extend(f'{i + 1}"{t}"' for i, t in enumerate(net.transitions))
    lines.append("TP")
    lines.extend(f"{t + 1}<{p + 1}" for t in range(len(net.transitions)) for p in sorted(net.post[t]))
    lines.append("PT")
    lines.extend(f"{p + 1}>{t + 1}" for t in range(len(net.transitions)) for p in sorted(net.pre[t]))
    return "\n".join(lines) + "\n"


def parse_native(text: str) -> PetriNet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetSyntaxError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict) or not {"places", "transitions", "initial"} <= doc.keys():
        raise NetSyntaxError("native net needs 'places', 'transitions' and 'initial'")
    places = doc["places"]
    initial = doc["initial"]
    seen = set()
    for p in places:
        if p in seen:
            raise NetSyntaxError(f"duplicate place name {p!r}")
        seen.add(p)
    if len(set(initial)) != len(initial):
        raise NetSyntaxError("a place is listed twice in 'initial'; the net must be safe")
    transitions = []
    for entry in doc["transitions"]:
        try:
            transitions.append((entry["name"], entry.get("pre", []), entry.get("post", [])))
        except (KeyError, TypeError):
            raise NetSyntaxError(f"malformed transition entry {entry!r}") from None
    names = [t[0] for t in transitions]
    if len(set(names)) != len(names):
        raise NetSyntaxError("duplicate transition name")
    for name, tpre, tpost in transitions:
        for p in list(tpre) + list(tpost):
            if p not in seen:
                raise NetSyntaxError(f"transition {name!r} refers to undeclared place {p!r}")
    for p in initial:
        if p not in seen:
            raise NetSyntaxError(f"initial marking refers to undeclared place {p!r}")
    return PetriNet.build(places, transitions, initial)


def to_native(net: PetriNet) -> str:
    doc = {
        "places": list(net.places),
        "transitions": [{"name": name, "pre": net.names(net.pre[t]), "post": net.names(net.post[t])}
                        for t, name in enumerate(net.transitions)],
        "initial": net.names(net.initial),
    }
    return json.dumps(doc, indent=2) + "\n"


def load_net(text: str, fmt: str = "auto") -> PetriNet:
    if fmt == "auto":
        fmt = "native" if text.lstrip().startswith("{") else "llnet"
    if fmt == "native":
        return parse_native(text)
    if fmt == "llnet":
        return parse_llnet(text)
    raise ValueError(f"unknown net format {fmt!r}")


# -- firing rule ------------------------------------------------------------

def enabled(net: PetriNet, m: frozenset[int]) -> tuple[int, ...]:
    return tuple(t for t in range(len(net.transitions)) if net.pre[t] <= m)


def fire(net: PetriNet, m: frozenset[int], t: int) -> frozenset[int]:
    if not net.pre[t] <= m:
        raise NotEnabledError(f"{net.label(t)} is not enabled at {{{', '.join(net.names(m))}}}")
    return (m - net.pre[t]) | net.post[t]


@dataclass(frozen=True, eq=False)
class ReachGraph:
    root: frozenset[int]
    nodes: tuple[frozenset[int], ...]  # BFS discovery order
    edges: tuple[tuple[frozenset[int], int, frozenset[int]], ...]
    succ: dict = field(repr=False)

    def __contains__(self, m) -> bool:
        return m in self.succ

    def successors(self, m) -> list[tuple[int, frozenset[int]]]:
        return self.succ[m]

    def is_deadlock(self, m) -> bool:
        return not self.succ[m]

    def reachable_from(self, sources: Iterable[frozenset[int]]) -> set[frozenset[int]]:
        seen = set(sources)
        todo = deque(seen)
        while todo:
            m = todo.popleft()
            for _, m2 in self.succ[m]:
                if m2 not in seen:
                    seen.add(m2)
                    todo.append(m2)
        return seen


def reach_graph(net: PetriNet, root: Optional[frozenset[int]] = None,
                max_nodes: Optional[int] = None) -> ReachGraph:
    """Breadth-first marking graph, checking the safety condition on the way."""
    root = net.initial if root is None else frozenset(root)
    succ = {root: []}
    order = [root]
    edges = []
    todo = deque([root])
    while todo:
        m = todo.popleft()
        for t in enabled(net, m):
            if (m & net.post[t]) - net.pre[t]:
                raise SafetyError(net.names(m), net.label(t))
            m2 = (m - net.pre[t]) | net.post[t]
            succ[m].append((t, m2))
            edges.append((m, t, m2))
            if m2 not in succ:
                if max_nodes is not None and len(succ) >= max_nodes:
                    raise BudgetExceeded(f"reachability graph exceeds {max_nodes} markings")
                succ[m2] = []
                order.append(m2)
                todo.append(m2)
    return ReachGraph(root, tuple(order), tuple(edges), succ)


def _sccs(nodes, succ):
    """Tarjan's algorithm, iterative; components come out in reverse topological order."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    out = []
    counter = 0
    for start in nodes:
        if start in index:
            continue
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack.add(start)
        work = [(start, iter(succ(start)))]
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    out.append(comp)
    return out


@dataclass(frozen=True)
class AttractorSet:
    components: tuple[frozenset, ...]

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)


def attractors(g: ReachGraph) -> AttractorSet:
    """Terminal strongly connected components of the marking graph."""
    comps = _sccs(g.nodes, lambda m: [m2 for _, m2 in g.succ[m]])
    position = {m: i for i, m in enumerate(g.nodes)}
    terminal = []
    for comp in comps:
        members = frozenset(comp)
        if all(m2 in members for m in comp for _, m2 in g.succ[m]):
            terminal.append(members)
    terminal.sort(key=lambda c: min(position[m] for m in c))
    return AttractorSet(tuple(terminal))


# -- bad markings -----------------------------------------------------------

@dataclass(frozen=True)
class BadSpec:
    bad_markings: tuple[frozenset[int], ...]
    closure_mode: str = "require-closed"

    def __post_init__(self):
        if self.closure_mode not in ("require-closed", "auto-close"):
            raise ValueError(f"unknown closure mode {self.closure_mode!r}")


def parse_bad_spec(text: str, net: PetriNet) -> BadSpec:
    doc = json.loads(text)
    mode = {"require": "require-closed", "auto": "auto-close"}.get(doc.get("closure", "require"))
    if mode is None:
        raise NetSyntaxError(f"closure must be 'require' or 'auto', got {doc.get('closure')!r}")
    markings = []
    for names in doc.get("bad_markings", []):
        unknown = [p for p in names if p not in net.place_index]
        if unknown:
            raise NetSyntaxError(f"bad marking refers to undeclared place(s) {unknown}")
        markings.append(net.marking(*names))
    return BadSpec(tuple(markings), mode)


def bad_spec_json(net: PetriNet, markings: Iterable[frozenset[int]], closure: str = "require") -> str:
    ordered = sorted((net.names(m) for m in markings))
    return json.dumps({"bad_markings": ordered, "closure": closure})


def validate_bad(spec: BadSpec, g: ReachGraph, net: Optional[PetriNet] = None) -> frozenset:
    """Return the effective, reachability-closed bad set."""
    def show(m):
        return net.names(m) if net is not None else sorted(m)

    listed = []
    for m in spec.bad_markings:
        if m in g:
            listed.append(m)
        else:
            log.warning("bad marking %s is not reachable; dropped", show(m))
    if spec.closure_mode == "auto-close":
        return frozenset(g.reachable_from(listed))
    bad = frozenset(listed)
    for m in listed:
        for _, m2 in g.succ[m]:
            if m2 not in bad:
                raise ClosureError(show(m), show(m2))
    return bad


# -- brute-force doom classification ------------------------------------------

BAD, DOOMED, FREE = "bad", "doomed", "free"


def doom_oracle(g: ReachGraph, bad: Iterable[frozenset[int]], net: Optional[PetriNet] = None,
                *, progress: bool = True) -> dict[frozenset[int], str]:
    """Classify every reachable marking as bad, doomed or free on the marking graph.

    A non-bad marking is free iff, without entering a bad marking, it can reach
    a deadlock or a cycle that can be repeated forever as a maximal run.  With
    ``progress`` (the default) a repeated cycle only counts if every transition
    that stays enabled along it is eventually disabled by the cycle itself,
    which is the maximality required of runs in the partial-order semantics;
    this needs ``net``.  ``progress=False`` accepts any cycle.
    """
    bad = frozenset(bad)
    if progress and net is None:
        raise ValueError("progress-aware classification needs the net")
    good_nodes = [m for m in g.nodes if m not in bad]
    inside = set(good_nodes)

    def succ(m):
        return [m2 for _, m2 in g.succ[m] if m2 in inside]

    targets = set()
    for m in good_nodes:
        if g.is_deadlock(m):
            targets.add(m)
    for comp in _sccs(good_nodes, succ):
        members = set(comp)
        labels = {t for m in comp for t, m2 in g.succ[m] if m2 in members}
        if not labels:
            continue
        if progress:
            consumed = frozenset().union(*(net.pre[t] for t in labels))
            persistent = comp[0] - consumed
            if any(net.pre[t] <= persistent for t in range(len(net.transitions))):
                continue
        targets |= members

    pred = {m: [] for m in good_nodes}
    for m in good_nodes:
        for m2 in succ(m):
            pred[m2].append(m)
    free = set(targets)
    todo = deque(targets)
    while todo:
        m = todo.popleft()
        for m0 in pred[m]:
            if m0 not in free:
                free.add(m0)
                todo.append(m0)
    return {m: BAD if m in bad else FREE if m in free else DOOMED for m in g.nodes}
