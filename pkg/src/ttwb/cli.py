"""Command-line workbench: parse the line-oriented input format, dispatch
subcommands to the library, and emit byte-stable JSON certificates.

Exit codes: 0 success, 1 a checked property fails, 2 parse or semantic
error, 3 inconclusive within the configured budgets.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
from dataclasses import dataclass, field

from . import dynamics, geometric_model, nielsen, splitting, stallings, strata
from .errors import Inconclusive, WorkbenchError
from .graphs import Circuit, MarkedGraph, Path, edge_name, reduce_word
from .maps import GraphMap, apply_sharp
from .strata import Filtration


class ParseError(WorkbenchError):
    def __init__(self, line, column, message):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SemanticError(WorkbenchError):
    pass


@dataclass
class WorkbenchInput:
    graph: MarkedGraph
    filtration: Filtration
    map: GraphMap
    declarations: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


_NAME = re.compile(r"^[a-z][a-z0-9_]*$")
_TOKEN = re.compile(r"^~?[a-z][a-z0-9_]*$")


def parse_input(text):
    vertices, edges = set(), {}
    levels = []
    images = {}
    declarations = {"strata": {}, "inps": []}
    warnings = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        indent = len(line) - len(line.lstrip())
        if stripped in ("graph", "filtration", "map", "declare"):
            section = stripped
            continue
        if section is None:
            raise ParseError(lineno, indent + 1, "content before any section header")
        parts = stripped.split()
        if section == "graph":
            if parts[0] == "vertex" and len(parts) == 2:
                vertices.add(parts[1])
            elif parts[0] == "edge" and len(parts) == 4:
                name, u, v = parts[1:]
                if not _NAME.match(name):
                    raise ParseError(lineno, line.find(name) + 1,
                                     f"bad edge name {name!r}")
                if name in edges:
                    raise ParseError(lineno, line.find(name) + 1,
                                     f"duplicate edge {name!r}")
                edges[name] = (u, v)
                vertices.update((u, v))
            else:
                raise ParseError(lineno, indent + 1,
                                 "expected 'vertex v' or 'edge name u v'")
        elif section == "filtration":
            m = re.match(r"^(\d+)\s*:\s*(.*)$", stripped)
            if not m:
                raise ParseError(lineno, indent + 1, "expected 'N: edge list'")
            if int(m.group(1)) != len(levels) + 1:
                raise ParseError(lineno, indent + 1,
                                 f"filtration levels must be numbered in order; "
                                 f"got {m.group(1)}")
            levels.append((lineno, m.group(2).split()))
        elif section == "map":
            if "->" not in stripped:
                raise ParseError(lineno, indent + 1, "expected 'edge -> image'")
            lhs, rhs = stripped.split("->", 1)
            name = lhs.strip()
            word = tuple(rhs.split())
            if word == (".",):
                word = ()
            images[name] = (lineno, word)
        elif section == "declare":
            if parts[0] == "stratum" and len(parts) == 3:
                declarations["strata"][int(parts[1])] = parts[2]
            elif parts[0] == "inp":
                declarations["inps"].append(tuple(parts[1:]))
            else:
                raise ParseError(lineno, indent + 1, "unknown declaration")
    if not edges:
        raise ParseError(1, 1, "no edges declared")
    graph = MarkedGraph(vertices, edges)
    cooked_levels = []
    for lineno, names in levels:
        for name in names:
            if name not in edges:
                raise SemanticError(f"line {lineno}: undeclared edge {name!r} "
                                    "in filtration")
        cooked_levels.append(set(names))
    if not cooked_levels:
        cooked_levels = [set(edges)]
    try:
        filtration = Filtration(graph, cooked_levels)
    except ValueError as exc:
        raise SemanticError(str(exc))
    cooked_images = {}
    for name, (lineno, word) in images.items():
        if name not in edges:
            raise SemanticError(f"line {lineno}: map image for undeclared "
                                f"edge {name!r}")
        for t in word:
            if not _TOKEN.match(t):
                raise ParseError(lineno, 1, f"bad token {t!r}")
            if edge_name(t) not in edges:
                raise SemanticError(f"line {lineno}: undeclared edge "
                                    f"{edge_name(t)!r} in image of {name!r}")
        reduced = reduce_word(word)
        if reduced != word:
            warnings.append(f"image of {name} tightened from {' '.join(word)}")
        cooked_images[name] = reduced
    missing = set(edges) - set(cooked_images)
    if missing:
        raise SemanticError(f"no image for edges {sorted(missing)}")
    try:
        f = GraphMap(graph, graph, cooked_images)
    except ValueError as exc:
        raise SemanticError(str(exc))
    return WorkbenchInput(graph, filtration, f, declarations, warnings)


def serialize_input(inp):
    lines = ["graph"]
    for v in sorted(inp.graph.vertices):
        lines.append(f"  vertex {v}")
    for e in sorted(inp.graph.edges):
        u, v = inp.graph.edges[e]
        lines.append(f"  edge {e} {u} {v}")
    lines.append("filtration")
    for i, level in enumerate(inp.filtration.levels, start=1):
        lines.append(f"  {i}: {' '.join(sorted(level))}")
    lines.append("map")
    for e in sorted(inp.map.edge_images):
        w = " ".join(inp.map.edge_images[e]) or "."
        lines.append(f"  {e} -> {w}")
    if inp.declarations.get("inps") or inp.declarations.get("strata"):
        lines.append("declare")
        for r, tag in sorted(inp.declarations.get("strata", {}).items()):
            lines.append(f"  stratum {r} {tag}")
        for w in inp.declarations.get("inps", []):
            lines.append(f"  inp {' '.join(w)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------

_FLOAT_MARK = "float:"


def _jsonable(x):
    if isinstance(x, float):
        return _FLOAT_MARK + format(x, ".12g")
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return [_jsonable(v) for v in sorted(x, key=str)]
    if isinstance(x, (Path, Circuit)):
        return list(x.tokens)
    return x


def emit(cert):
    """Canonical JSON: sorted keys, floats rendered %.12g, byte-stable."""
    text = json.dumps(_jsonable(cert), sort_keys=True, separators=(",", ":"))
    return re.sub(r'"\\u0001float:([^"]*)"', r"\1", text) + "\n"


def _digest(text):
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _find_all_inps(inp, length_bound, period_bound):
    records = []
    complete = True
    for r in range(1, inp.filtration.top + 1):
        found = nielsen.find_inps(inp.map, inp.filtration, r,
                                  length_bound=length_bound,
                                  period_bound=period_bound)
        records.extend(found)
        complete = complete and found.complete
    return records, complete


def _record_json(rec):
    return {
        "word": list(rec.path.tokens),
        "period": rec.period,
        "height": rec.height,
        "closed": rec.closed,
        "crossings": {e: c for e, c in rec.crossings},
        "indivisible": rec.indivisible,
    }


def _report_json(report):
    return [{"check": e.check, "stratum": e.stratum, "status": e.status,
             "witness": _jsonable(e.witness) if e.witness else None,
             "note": e.note} for e in report.entries]


def cmd_validate(inp, args):
    return 0, {
        "vertices": len(inp.graph.vertices),
        "edges": sorted(inp.graph.edges),
        "rank": inp.graph.rank(),
        "levels": [sorted(l) for l in inp.filtration.levels],
        "filtration_invariant": inp.filtration.is_invariant(inp.map),
        "warnings": inp.warnings,
    }


def cmd_strata(inp, args):
    out = []
    for r in range(1, inp.filtration.top + 1):
        cls = strata.classify_stratum(inp.map, inp.filtration, r)
        entry = {"stratum": r, "tag": cls.tag,
                 "edges": sorted(inp.filtration.stratum(r))}
        if cls.eigenvalue is not None:
            entry["eigenvalue"] = cls.eigenvalue
        if cls.aperiodic is not None:
            entry["aperiodic"] = cls.aperiodic
        if cls.neg_edges:
            entry["neg"] = {e: c.subtag for e, c in cls.neg_edges.items()}
        out.append(entry)
    return 0, {"strata": out}


def cmd_check_rtt(inp, args):
    report = strata.check_rtt(inp.map, inp.filtration)
    code = 0 if report.ok else 1
    return code, {"entries": _report_json(report), "ok": report.ok}


def cmd_check_ct(inp, args):
    records, complete = _find_all_inps(inp, args.length_bound, args.period_bound)
    report = strata.check_ct(inp.map, inp.filtration, records)
    code = 0 if report.ok else 1
    if code == 0 and not report.conclusive:
        code = 3
    return code, {"entries": _report_json(report), "ok": report.ok,
                  "conclusive": report.conclusive,
                  "inp_search_complete": complete}


def cmd_inp(inp, args):
    r = args.height or inp.filtration.top
    found = nielsen.find_inps(inp.map, inp.filtration, r,
                              length_bound=args.length_bound,
                              period_bound=args.period_bound)
    code = 0 if found.complete else 3
    cert = {"height": r, "records": [_record_json(rec) for rec in found],
            "complete": found.complete, "note": found.note}
    if not found.complete:
        cert["budget_exhausted"] = True
    return code, cert


def cmd_geometric(inp, args):
    r = args.height or inp.filtration.top
    verdict = nielsen.geometricity(inp.map, inp.filtration, r,
                                   length_bound=args.length_bound,
                                   period_bound=args.period_bound)
    cert = {"height": r, "verdict": verdict.tag, "reason": verdict.reason}
    if verdict.record is not None:
        cert["record"] = _record_json(verdict.record)
    if verdict.tag == "inconclusive":
        cert["budget_exhausted"] = True
        return 3, cert
    return 0, cert


def _built_model(inp, args):
    r = args.height or inp.filtration.top
    verdict = nielsen.geometricity(inp.map, inp.filtration, r,
                                   length_bound=args.length_bound,
                                   period_bound=args.period_bound)
    if verdict.tag == "inconclusive":
        raise Inconclusive("geometricity undecided within budgets")
    if verdict.tag != "geometric":
        return r, verdict, None
    return r, verdict, geometric_model.build_weak_model(
        inp.map, inp.filtration, r, verdict.record)


def _surface_json(surface):
    out = {
        "polygon": list(surface.polygon),
        "pairings": [list(p) for p in surface.pairings],
        "euler_characteristic": surface.euler_characteristic,
        "orientable": surface.orientable,
        "boundary_cycles": [[[s, d] for s, d in c]
                            for c in surface.boundary_cycles],
    }
    if surface.genus is not None:
        out["genus"] = surface.genus
    if surface.crosscaps is not None:
        out["crosscaps"] = surface.crosscaps
    return out


def cmd_model(inp, args):
    r, verdict, model = _built_model(inp, args)
    if model is None:
        return 1, {"height": r, "verdict": verdict.tag,
                   "reason": "no geometric model for a nongeometric stratum"}
    report = geometric_model.verify_model(model, inp.map)
    cert = {
        "height": r,
        "verdict": "geometric",
        "surface": _surface_json(model.surface),
        "base_point": model.base_point,
        "alphas_raw": [list(w) for w in model.alphas_raw],
        "alphas": [list(a.tokens) for a in model.alphas],
        "boundary_classes": [list(c.tokens) for c in model.boundary_classes],
        "attaching_points": list(model.attaching_points),
        "complement": {
            "edges": sorted(model.complementary.edges),
            "loop_at_base": model.complementary.loop_at_base,
            "components": [[sorted(e), flag]
                           for e, flag in model.complementary.components],
        },
        "verification": _report_json(report),
    }
    return (0 if report.ok else 1), cert


def cmd_peripheral(inp, args):
    r, verdict, model = _built_model(inp, args)
    if model is None:
        return 1, {"height": r, "verdict": verdict.tag,
                   "reason": "no peripheral splitting for a nongeometric stratum"}
    gog = geometric_model.peripheral_splitting(model)
    free = geometric_model.free_boundary_circles(model, gog)
    cert = {
        "height": r,
        "surface_vertex_rank": gog.s_rank,
        "l_vertex_ranks": [v.rank() for v in gog.l_vertices],
        "edges": [{"end": str(i), "kind": kind, "l_vertex": l,
                   "word": list(word)} for i, kind, l, word in gog.edges],
        "rank": gog.rank,
        "rank_matches": gog.rank == inp.graph.rank(),
        "free_boundary_circles": free,
    }
    return (0 if cert["rank_matches"] else 1), cert


def cmd_tiles(inp, args):
    r = args.height or inp.filtration.top
    stats = dynamics.tile_statistics(inp.map, inp.filtration, r,
                                     k_max=args.iterate_bound or 8)
    return 0, {
        "height": r,
        "edges": list(stats["edges"]),
        "eigenvalue": stats["eigenvalue"],
        "positive_power": stats["positive_power"],
        "lengths": stats["lengths"],
        "ratios": stats["ratios"],
        "nested": stats["nested"],
    }


def cmd_attract(inp, args):
    r = args.height or inp.filtration.top
    gammas, certs = dynamics.attracting_basis(inp.map, inp.filtration, r,
                                              depth=args.iterate_bound or 6)
    return 0, {
        "height": r,
        "paths": [list(g.tokens) for g in gammas],
        "occurrences": [list(c) for c in certs],
    }


def cmd_rays(inp, args):
    from .maps import DirectionMap
    dm = DirectionMap(inp.map)
    depth = args.iterate_bound or 5
    out = []
    for d in sorted(dm.fixed):
        ray = dynamics.ray_prefix(inp.map, d, depth)
        entry = {"seed": d, "classification": ray.classification,
                 "prefix": list(ray.path.tokens)}
        if ray.companion:
            e, w, sign = ray.companion
            entry["companion"] = {"edge": e, "axis": list(w), "sign": sign}
        out.append(entry)
    return 0, {"rays": out, "depth": depth}


def _parse_word(text):
    tokens = tuple(text.split())
    for t in tokens:
        if not _TOKEN.match(t):
            raise SemanticError(f"bad token {t!r}")
    return tokens


def _immersion_json(c):
    return {"rank": c.rank(),
            "edges": sorted([str(u), str(v), lab] for u, v, lab in c.edges),
            "basis": [list(w) for w in c.basis_words()]}


def cmd_subgroup(inp, args):
    graph = inp.graph
    if args.verb == "fold":
        words = [_parse_word(w) for w in args.words]
        c = stallings.from_generators(words, graph, keep_base=False)
        return 0, {"verb": "fold", "component": _immersion_json(c)}
    if args.verb == "carries":
        circuit = Circuit(graph, _parse_word(args.words[0]))
        words = [_parse_word(w) for w in args.words[1:]]
        system = stallings.SubgroupSystem(
            graph, [stallings.from_generators(words, graph, keep_base=False)])
        verdict = stallings.carries_class(system, circuit)
        return (0 if verdict else 1), {"verb": "carries", "carried": verdict}
    if args.verb == "intersect":
        a = stallings.from_generators([_parse_word(w) for w in args.left],
                                      graph, keep_base=False)
        b = stallings.from_generators([_parse_word(w) for w in args.right],
                                      graph, keep_base=False)
        system = stallings.intersect_components(a, b)
        return 0, {"verb": "intersect",
                   "components": [_immersion_json(c) for c in system.components]}
    if args.verb == "malnormal":
        words = [_parse_word(w) for w in args.words]
        system = stallings.SubgroupSystem(
            graph, [stallings.from_generators([w], graph, keep_base=False)
                    for w in words])
        ok, witness = stallings.is_malnormal(system)
        return (0 if ok else 1), {"verb": "malnormal", "malnormal": ok,
                                  "witness": list(witness) if witness else None}
    if args.verb == "meet":
        h1 = set(args.left[0].split()) if args.left else set()
        h2 = set(args.right[0].split()) if args.right else set()
        system = stallings.meet_subgraph_systems(graph, h1, h2)
        return 0, {"verb": "meet",
                   "components": [_immersion_json(c) for c in system.components]}
    raise SemanticError(f"unknown subgroup verb {args.verb!r}")


def cmd_verify_cert(inp, args):
    """Replay a certificate: recompute it and re-check replayable witnesses."""
    with open(args.certificate) as fh:
        recorded = fh.read()
    cert = json.loads(recorded)
    command = cert.get("command")
    handler = _HANDLERS.get(command)
    if handler is None:
        raise SemanticError(f"certificate for unknown command {command!r}")
    code, body = handler(inp, args)
    body["command"] = command
    body["input_digest"] = cert.get("input_digest")
    body["budgets"] = cert.get("budgets")
    replayed = emit(body)
    matches = replayed == recorded
    witness_checks = []
    for rec in body.get("records", []) or ([body["record"]] if "record" in body else []):
        p = Path(inp.graph, tuple(rec["word"]))
        from .maps import power
        ok = apply_sharp(power(inp.map, rec["period"]), p) == p
        witness_checks.append({"word": rec["word"], "nielsen": ok})
    ok = matches and all(w["nielsen"] for w in witness_checks)
    return (0 if ok else 1), {"replay_matches": matches,
                              "witness_checks": witness_checks}


_HANDLERS = {
    "validate": cmd_validate,
    "strata": cmd_strata,
    "check-rtt": cmd_check_rtt,
    "check-ct": cmd_check_ct,
    "inp": cmd_inp,
    "geometric": cmd_geometric,
    "model": cmd_model,
    "peripheral": cmd_peripheral,
    "tiles": cmd_tiles,
    "attract": cmd_attract,
    "rays": cmd_rays,
    "subgroup": cmd_subgroup,
}


def _text_render(cert, indent=0):
    lines = []
    pad = "  " * indent
    if isinstance(cert, dict):
        for k in sorted(cert):
            v = cert[k]
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.extend(_text_render(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(cert, list):
        for v in cert:
            if isinstance(v, (dict, list)):
                lines.extend(_text_render(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{cert}")
    return lines


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ttwb", description="train track workbench")
    parser.add_argument("command", choices=sorted(_HANDLERS) + ["verify-cert"])
    parser.add_argument("input", help="workbench input file")
    parser.add_argument("words", nargs="*",
                        help="subgroup verb and word arguments")
    parser.add_argument("--height", type=int, default=None)
    parser.add_argument("--iterate-bound", type=int, default=None)
    parser.add_argument("--length-bound", type=int, default=None)
    parser.add_argument("--period-bound", type=int, default=12)
    parser.add_argument("--left", action="append", default=[])
    parser.add_argument("--right", action="append", default=[])
    parser.add_argument("--certificate", default=None)
    output = parser.add_mutually_exclusive_group()
    output.add_argument("--json", dest="as_json", action="store_true",
                        default=True)
    output.add_argument("--text", dest="as_json", action="store_false")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    budget = os.environ.get("TTWB_BUDGET")
    if budget is not None:
        budget = int(budget)
        if args.iterate_bound is None:
            args.iterate_bound = budget
        if args.length_bound is None:
            args.length_bound = budget
    try:
        with open(args.input) as fh:
            text = fh.read()
        inp = parse_input(text)
    except (ParseError, SemanticError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    command = args.command
    if command == "subgroup":
        if not args.words:
            sys.stderr.write("error: subgroup needs a verb\n")
            return 2
        args.verb = args.words[0]
        args.words = args.words[1:]
    try:
        if command == "verify-cert":
            if not args.certificate:
                sys.stderr.write("error: verify-cert needs --certificate\n")
                return 2
            code, cert = cmd_verify_cert(inp, args)
        else:
            code, cert = _HANDLERS[command](inp, args)
    except Inconclusive as exc:
        cert = {"error": str(exc), "budget_exhausted": True}
        code = 3
    except (SemanticError, ParseError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except WorkbenchError as exc:
        cert = {"error": f"{type(exc).__name__}: {exc}"}
        code = 1
    cert["command"] = command
    cert["input_digest"] = _digest(text)
    cert["budgets"] = {
        "iterate_bound": args.iterate_bound,
        "length_bound": args.length_bound,
        "period_bound": args.period_bound,
    }
    if args.as_json:
        sys.stdout.write(emit(cert))
    else:
        sys.stdout.write("\n".join(_text_render(cert)) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
