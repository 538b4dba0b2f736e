"""Command-line front end: ``doomnet {unfold,attractors,doom,oracle-check}``."""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
import time
from dataclasses import dataclass
from typing import Optional

from . import doom as D
from . import net as N
from . import protect as P
from . import unfold as U
from .errors import DoomnetError, ScopeInconclusive


@dataclass
class RunConfig:
    net_path: str
    net_format: str = "auto"
    bad_spec_path: Optional[str] = None
    order: str = U.ERV
    height_mode: str = "decided"
    prefix_depth: int = 1
    output: str = "text"
    seed: int = 0
    dot_path: Optional[str] = None
    max_nodes: Optional[int] = None
    protect_all: bool = False
    corrupt_memo: bool = False


class InputMissing(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except FileNotFoundError:
        raise InputMissing(path) from None


def _load(cfg: RunConfig) -> N.PetriNet:
    return N.load_net(_read(cfg.net_path), cfg.net_format)


def _bad_set(cfg: RunConfig, net: N.PetriNet, g: N.ReachGraph) -> frozenset:
    if cfg.bad_spec_path is None:
        return frozenset()
    return N.validate_bad(N.parse_bad_spec(_read(cfg.bad_spec_path), net), g, net)


def _marking_key(net: N.PetriNet, m) -> str:
    return "{" + ",".join(net.names(m)) + "}"


def _emit(doc: dict, text_lines: list[str], cfg: RunConfig, out=None) -> None:
    out = out or sys.stdout
    if cfg.output == "json":
        json.dump(doc, out, indent=2)
        out.write("\n")
    else:
        out.write("\n".join(text_lines) + "\n")


def _write_dot(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


# -- subcommands ---------------------------------------------------------------

def cmd_unfold(cfg: RunConfig, out=None) -> int:
    net = _load(cfg)
    N.reach_graph(net, max_nodes=cfg.max_nodes)  # rejects unsafe nets up front
    p = U.build_family(net, cfg.prefix_depth, cfg.order)
    stats = {"events": len(p.events), "conditions": len(p.conditions),
             "cutoffs": len(p.cutoffs()), "generations": p.generation + 1}
    if cfg.dot_path:
        _write_dot(cfg.dot_path, U.to_dot(p))
    names = U.event_names(p)
    doc = {"order": cfg.order, "depth": cfg.prefix_depth, "stats": stats,
           "events": [{"id": ev.id, "name": names[ev.id], "label": net.transitions[ev.transition],
                       "preset": list(ev.preset), "postset": list(ev.postset),
                       "cutoff": ev.cutoff, "generation": ev.generation} for ev in p.events]}
    lines = [U.dump(p).rstrip("\n"),
             "stats " + " ".join(f"{k}={v}" for k, v in stats.items())]
    _emit(doc, lines, cfg, out)
    return 0


def cmd_attractors(cfg: RunConfig, out=None) -> int:
    net = _load(cfg)
    g = N.reach_graph(net, max_nodes=cfg.max_nodes)
    found = N.attractors(g)
    doc = {"reachable": len(g.nodes), "attractors": []}
    lines = [f"reachable markings: {len(g.nodes)}", f"attractors: {len(found)}"]
    for i, comp in enumerate(found):
        ms = sorted((net.names(m) for m in comp))
        stanza = N.bad_spec_json(net, comp, "require")
        doc["attractors"].append({"markings": ms, "bad_spec": json.loads(stanza)})
        lines.append(f"attractor {i}: " + " ".join("{" + ",".join(m) + "}" for m in ms))
        lines.append(f"  bad spec: {stanza}")
    _emit(doc, lines, cfg, out)
    return 0


def _protect_doc(value: P.Protectedness) -> dict:
    return {"config": [], "value": value.value,
            "witnesses": [w.labels() for w in value.witnesses]}


def cmd_doom(cfg: RunConfig, out=None) -> int:
    if cfg.prefix_depth < 1:
        raise DoomnetError("doom queries need --depth of at least 1")
    started = time.perf_counter()
    net = _load(cfg)
    g = N.reach_graph(net, max_nodes=cfg.max_nodes)
    bad = _bad_set(cfg, net, g)
    checker = D.DoomChecker(net, bad)
    fam = checker.family(net.initial)
    # the protectedness scope is the height-first prefix, grown by extra generations on demand
    scope_depth = cfg.prefix_depth - 1
    statuses = {m: checker.status(m) for m in g.nodes}
    mdc = D.mindoo(checker, random.Random(cfg.seed) if cfg.seed else None)
    ridge_list = D.ridge_complete(checker, mdc)
    root = fam.config_of(0)
    try:
        p_root = P.protectedness(checker, root, cfg.height_mode, depth=scope_depth)
    except ScopeInconclusive as exc:
        raise DoomnetError(f"{exc} (try a larger --depth)") from exc
    protect_docs = [_protect_doc(p_root)]
    if cfg.protect_all:
        for m in g.nodes:
            if statuses[m] == N.FREE and m != net.initial:
                v = P.protectedness(checker, checker.family(m).config_of(0), cfg.height_mode,
                                    depth=scope_depth)
                d = _protect_doc(v)
                d["marking"] = net.names(m)
                protect_docs.append(d)
    gen0 = U.generation_mask(fam, 0)
    stats = {"size_pi0": bin(gen0).count("1"), "size_pi1": len(fam.events),
             "min_doomed": len(mdc), "doom_checks": checker.checks,
             "time": round(time.perf_counter() - started, 4)}
    doc = {
        "markings": {_marking_key(net, m): statuses[m] for m in g.nodes},
        "mindoomed": [{"events": c.labels(), "crest": sorted(fam.label(e) for e in c.crest()),
                       "mark": net.names(c.mark())} for c in mdc],
        "ridges": [{"transitions": r.labels(net), "witnesses": len(r.witnesses)} for r in ridge_list],
        "protectedness": protect_docs[0],
        "stats": stats,
    }
    if cfg.protect_all:
        doc["protectedness_table"] = protect_docs[1:]
    if cfg.dot_path:
        tinted = set().union(*(c.events for c in mdc)) if len(mdc) else set()
        crests = set().union(*(c.crest() for c in mdc)) if len(mdc) else set()
        _write_dot(cfg.dot_path, U.to_dot(fam, tinted, crests))
    lines = ["markings:"]
    lines += [f"  {k} {v}" for k, v in doc["markings"].items()]
    lines.append(f"mindoomed: {len(mdc)}")
    lines += [f"  events={{{','.join(d['events'])}}} crest={{{','.join(d['crest'])}}} "
              f"mark={{{','.join(d['mark'])}}}" for d in doc["mindoomed"]]
    lines.append(f"ridges: {len(ridge_list)}")
    lines += [f"  {{{','.join(d['transitions'])}}} witnesses={d['witnesses']}" for d in doc["ridges"]]
    lines.append(f"protectedness: config={{}} value={p_root.value} witnesses="
                 + " ".join("{" + ",".join(w) + "}" for w in protect_docs[0]["witnesses"]))
    for d in protect_docs[1:]:
        lines.append(f"  marking={{{','.join(d['marking'])}}} value={d['value']}")
    lines.append("stats " + " ".join(f"{k}={v}" for k, v in stats.items()))
    _emit(doc, lines, cfg, out)
    return 0


def cmd_oracle_check(cfg: RunConfig, out=None) -> int:
    net = _load(cfg)
    g = N.reach_graph(net, max_nodes=cfg.max_nodes)
    bad = _bad_set(cfg, net, g)
    truth = N.doom_oracle(g, bad, net)
    checker = D.DoomChecker(net, bad)
    if cfg.corrupt_memo:
        victim = next((m for m in g.nodes if m not in bad), None)
        if victim is not None:
            checker.memo[victim] = N.DOOMED if truth[victim] == N.FREE else N.FREE
    mismatch = None
    agree = 0
    for m in g.nodes:
        if checker.status(m) == truth[m]:
            agree += 1
        elif mismatch is None:
            mismatch = m
    rng = random.Random(cfg.seed) if cfg.seed else None
    crest_fail = None
    if mismatch is None:
        for c in D.mindoo(checker, rng):
            fine = truth[c.mark()] != N.FREE and all(truth[c.minus(e).mark()] == N.FREE for e in c.crest())
            if not fine:
                crest_fail = c
                break
    ok = mismatch is None and crest_fail is None
    doc = {"result": "PASS" if ok else "FAIL", "agree": agree, "markings": len(g.nodes)}
    lines = [f"{doc['result']}: {agree}/{len(g.nodes)} markings agree"]
    if mismatch is not None:
        doc["first_divergent"] = {"marking": net.names(mismatch), "checker": checker.status(mismatch),
                                  "oracle": truth[mismatch]}
        lines.append(f"first divergent marking {_marking_key(net, mismatch)}: "
                     f"checker says {checker.status(mismatch)}, oracle says {truth[mismatch]}")
    if crest_fail is not None:
        doc["bad_mindoomed"] = crest_fail.labels()
        lines.append("minimally doomed configuration fails the oracle: {"
                     + ",".join(crest_fail.labels()) + "}")
    _emit(doc, lines, cfg, out)
    return 0 if ok else 1


COMMANDS = {"unfold": cmd_unfold, "attractors": cmd_attractors, "doom": cmd_doom,
            "oracle-check": cmd_oracle_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--net", required=True, help="net file (ll_net or JSON)")
    common.add_argument("--format", default="auto", choices=["auto", "llnet", "native"])
    common.add_argument("--bad", help="bad-marking specification (JSON)")
    common.add_argument("--order", default=U.ERV, choices=list(U.ORDERS))
    common.add_argument("--height", default="decided", choices=[m.value for m in P.HeightMode])
    common.add_argument("--json", action="store_true", help="emit JSON instead of text")
    common.add_argument("--dot", metavar="PATH", help="write the prefix as Graphviz DOT")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized pick orders")
    common.add_argument("--max-nodes", type=int, help="reachability graph budget")
    parser = argparse.ArgumentParser(prog="doomnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("unfold", parents=[common], help="build and dump a prefix")
    p.add_argument("--depth", type=int, default=0, help="number of grafted generations")
    sub.add_parser("attractors", parents=[common], help="list attractors as bad specs")
    p = sub.add_parser("doom", parents=[common], help="doom analysis report")
    p.add_argument("--depth", type=int, default=1,
                   help="at least 1; the protectedness scope gets depth-1 extra generations")
    p.add_argument("--protect-all", action="store_true",
                   help="also report protectedness of every free reachable marking")
    p = sub.add_parser("oracle-check", parents=[common], help="cross-check against the marking graph")
    p.add_argument("--corrupt-memo", action="store_true", help=argparse.SUPPRESS)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(net_path=args.net, net_format=args.format, bad_spec_path=args.bad,
                     order=args.order, height_mode=args.height,
                     prefix_depth=getattr(args, "depth", 1), output="json" if args.json else "text",
                     seed=args.seed, dot_path=args.dot, max_nodes=args.max_nodes,
                     protect_all=getattr(args, "protect_all", False),
                     corrupt_memo=getattr(args, "corrupt_memo", False))


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        return COMMANDS[args.command](cfg)
    except InputMissing as exc:
        print(f"doomnet: no such input: {exc}", file=sys.stderr)
        return 2
    except N.BudgetExceeded as exc:
        print(f"doomnet: refusing, reachability graph exceeds the budget: {exc}", file=sys.stderr)
        return 1
    except DoomnetError as exc:
        print(f"doomnet: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
