"""The weak geometric model of a geometric EG stratum.

From a closed height-r Nielsen path crossing each H_r edge exactly
twice, build the surface S (a disc with the lower side subdivided by the
path's edge word and the two occurrences of each H_r label glued),
trace its boundary circles, read off the attaching maps into the lower
graph, and assemble the complementary subgraph and the bipartite
peripheral splitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import graphs, stallings, strata
from .graphs import (Circuit, Path, edge_name, inv, is_forward, reduce_word,
                     reverse_word, subgraph_vertices, tighten_circuit)
from .maps import apply_sharp
from .errors import (AttachingMapTrivial, BoundaryNotContained,
                     CrossingCountViolation, NotClosedINP, WorkbenchError)


@dataclass(frozen=True)
class SurfaceData:
    polygon: tuple  # the Nielsen path's tokens; side len(polygon) is the upper side
    pairings: tuple  # (i, j, "rev"|"pres") per H_r edge
    euler_characteristic: int
    orientable: bool
    genus: int | None
    crosscaps: int | None
    boundary_cycles: tuple  # cycles of (side, "+"|"-"); cycle 0 holds the upper side

    @property
    def upper_index(self):
        return len(self.polygon)

    @property
    def boundary_count(self):
        return len(self.boundary_cycles)


@dataclass(frozen=True)
class ComplementaryGraph:
    edges: frozenset  # edges of G outside H_r
    base: object  # p_r, the Nielsen path's base point
    loop_at_base: bool  # the extra circle is wedged onto a component at p_r
    components: tuple  # (edge frozenset, noncontractible flag)


@dataclass(frozen=True)
class GeometricModelData:
    graph: object
    filtration: object
    height: int
    record: object  # the closed Nielsen path record
    surface: SurfaceData
    base_point: object
    boundary_words: tuple  # image word of each boundary cycle in G
    alphas_raw: tuple  # raw attaching words, one per lower boundary cycle
    alphas: tuple  # tightened attaching circuits
    boundary_classes: tuple  # one circuit per boundary cycle (index 0: upper)
    attaching_points: tuple
    complementary: ComplementaryGraph


def _pairings(filtration, r, tokens):
    occurrences = {}
    for i, t in enumerate(tokens):
        occurrences.setdefault(edge_name(t), []).append(i)
    out = []
    for e in sorted(filtration.stratum(r)):
        pos = occurrences.get(e, [])
        if len(pos) != 2:
            raise CrossingCountViolation(f"{e} crossed {len(pos)} times, need 2")
        i, j = pos
        kind = "rev" if is_forward(tokens[i]) != is_forward(tokens[j]) else "pres"
        out.append((i, j, kind))
    return tuple(out)


def _surface(filtration, r, tokens):
    n = len(tokens)
    pairs = _pairings(filtration, r, tokens)
    glued, kind = {}, {}
    for i, j, k in pairs:
        glued[i], glued[j] = j, i
        kind[i] = kind[j] = k
    n_sides = n + 1  # sides 0..n-1 carry tokens; side n is the upper side

    # vertices: corner k sits between side k-1 and side k (indices mod n+1)
    parent = list(range(n_sides))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    for i, j, k in pairs:
        if k == "rev":
            union(i, (j + 1) % n_sides)
            union((i + 1) % n_sides, j)
        else:
            union(i, j)
            union((i + 1) % n_sides, (j + 1) % n_sides)
    v = len({find(x) for x in range(n_sides)})
    free = [s for s in range(n_sides) if s not in glued]
    e_cells = len(pairs) + len(free)
    chi = v - e_cells + 1
    assert chi == 1 - len(filtration.stratum(r)), (chi, r)
    assert chi <= -1, chi

    def succ(dart):
        side, dirn = dart
        arrived = (side, "E" if dirn == "+" else "S")
        while True:
            i, endp = arrived
            if endp == "E":
                cand, centry = (i + 1) % n_sides, "S"
            else:
                cand, centry = (i - 1) % n_sides, "E"
            if cand not in glued:
                return (cand, "+" if centry == "S" else "-")
            if kind[cand] == "rev":
                centry = "E" if centry == "S" else "S"
            arrived = (glued[cand], centry)

    visited = set()
    cycles = []
    for s0 in free:
        if s0 in visited:
            continue
        cycle = []
        dart = (s0, "+")
        while True:
            side, _ = dart
            assert side not in visited, "boundary walk revisited a side"
            visited.add(side)
            cycle.append(dart)
            dart = succ(dart)
            if dart[0] == s0:
                break
        cycles.append(tuple(cycle))
    assert visited == set(free), "boundary cycles must cover each free side once"
    cycles.sort(key=lambda c: 0 if any(s == n for s, _ in c) else 1)

    orientable = all(k == "rev" for _, _, k in pairs)
    b = len(cycles)
    if orientable:
        g2 = 2 - b - chi
        assert g2 % 2 == 0 and g2 >= 0, (chi, b)
        genus, crosscaps = g2 // 2, None
    else:
        genus, crosscaps = None, 2 - b - chi
    return SurfaceData(tuple(tokens), pairs, chi, orientable, genus, crosscaps,
                       tuple(cycles))


def _cycle_word(surface, cycle):
    """Image in G of a boundary cycle: upper side reads the Nielsen path."""
    n = len(surface.polygon)
    out = []
    for side, dirn in cycle:
        if side == n:
            out.extend(surface.polygon if dirn == "+"
                       else reverse_word(surface.polygon))
        else:
            t = surface.polygon[side]
            out.append(t if dirn == "+" else inv(t))
    return tuple(out)


def _complement(graph, filtration, r, base):
    edges = frozenset(graph.edges) - filtration.stratum(r)
    loop_at_base = base in subgraph_vertices(graph, edges)
    comps = []
    for comp in graphs.subgraph_components(graph, edges):
        comp = frozenset(comp)
        comps.append((comp, bool(graphs.core_subgraph(graph, comp))))
    return ComplementaryGraph(edges, base, loop_at_base, tuple(comps))


def build_weak_model(f, filtration, r, record):
    """Assemble the surface, attaching data, and complementary subgraph."""
    graph = filtration.graph
    if not record.closed or record.height != r:
        raise NotClosedINP(f"need a closed Nielsen path of height {r}")
    tokens = record.path.tokens
    surface = _surface(filtration, r, tokens)
    rtt = strata.check_rtt(f, filtration)
    bad = [e for e in rtt.entries
           if e.status == "fail" and (e.stratum is None or e.stratum <= r)]
    if bad:
        raise WorkbenchError(f"train track axioms fail up to height {r}: {bad[0]}")

    base = record.path.start
    words = tuple(_cycle_word(surface, c) for c in surface.boundary_cycles)
    classes = []
    for w in words:
        reduced = graphs.cyclic_reduce_word(w)
        if not reduced:
            raise AttachingMapTrivial(f"boundary cycle word {w} is trivial")
        classes.append(Circuit(graph, reduced))
    alphas_raw = words[1:]
    alphas = tuple(classes[1:])
    for a in alphas:
        if filtration.height_of_word(a.tokens) >= r:
            raise WorkbenchError(f"attaching circuit {a} is not lower than {r}")

    higher = set()
    for s in range(r + 1, filtration.top + 1):
        higher |= subgraph_vertices(graph, filtration.stratum(s))
    hr_vertices = subgraph_vertices(graph, filtration.stratum(r))
    lower_vertices = subgraph_vertices(graph, filtration.level_edges(r - 1))
    attaching = tuple(sorted((hr_vertices - lower_vertices) & higher - {base}))

    return GeometricModelData(
        graph=graph, filtration=filtration, height=r, record=record,
        surface=surface, base_point=base, boundary_words=words,
        alphas_raw=alphas_raw, alphas=alphas, boundary_classes=tuple(classes),
        attaching_points=attaching,
        complementary=_complement(graph, filtration, r, base))


def complementary_subgraph(model):
    return _complement(model.graph, model.filtration, model.height,
                       model.base_point)


def _loops_at(graph, edges, base):
    """Basis loops of a subgraph component, based at `base`."""
    reach = {base: ()}
    frontier = [base]
    while frontier:
        nxt = []
        for v in frontier:
            for d in graph.directions_at(v):
                if edge_name(d) not in edges:
                    continue
                w = graph.term_of(d)
                if w not in reach:
                    reach[w] = reach[v] + (d,)
                    nxt.append(w)
        frontier = nxt
    tree = {edge_name(t) for path in reach.values() for t in path}
    loops = []
    for e in sorted(edges):
        if e in tree or graph.edges[e][0] not in reach:
            continue
        u, v = graph.edges[e]
        loops.append(reduce_word(reach[u] + (e,) + reverse_word(reach[v])))
    return [w for w in loops if w]


def complementary_system(model):
    """[pi_1 L] as a SubgroupSystem, and the count of noncontractible
    components of L (the extra circle included)."""
    graph = model.graph
    comp = model.complementary
    rho = model.record.path.tokens
    components = []
    count = 0
    wedged = None
    if comp.loop_at_base:
        wedged = next(edges for edges, _ in comp.components
                      if model.base_point in subgraph_vertices(graph, edges))
    for edges, noncontractible in comp.components:
        if edges == wedged:
            continue
        if noncontractible:
            count += 1
            core = graphs.core_subgraph(graph, edges)
            components.extend(
                stallings.from_subgraph(graph, core).components)
    if wedged is not None:
        gens = _loops_at(graph, wedged, model.base_point) + [rho]
        components.append(stallings.from_generators(gens, graph, keep_base=False))
        count += 1
    else:
        components.append(
            stallings.from_generators([rho], graph, keep_base=False))
        count += 1
    return stallings.SubgroupSystem(graph, components), count


@dataclass(frozen=True)
class GraphOfGroups:
    s_rank: int  # rank of the surface vertex group, 1 - chi(S)
    peripheral_words: tuple  # boundary image words, indexing the S-vertex ends
    l_vertices: tuple  # CoreImmersion per complementary component
    edges: tuple  # (boundary_or_point, kind, l_index, word_toward_l)
    rank: int

    def valence(self, l_index):
        return sum(1 for e in self.edges if e[2] == l_index)


def _l_vertex_data(model):
    """L-vertex immersions plus which vertex carries the extra circle."""
    graph = model.graph
    comp = model.complementary
    rho = model.record.path.tokens
    vertices = []
    owners = {}  # edge frozenset -> l index
    wedged = None
    if comp.loop_at_base:
        wedged = next(edges for edges, _ in comp.components
                      if model.base_point in subgraph_vertices(graph, edges))
    for edges, noncontractible in comp.components:
        if edges == wedged:
            gens = _loops_at(graph, edges, model.base_point) + [rho]
            owners[edges] = len(vertices)
            vertices.append(stallings.from_generators(gens, graph, keep_base=False))
        elif noncontractible:
            core = graphs.core_subgraph(graph, edges)
            system = stallings.from_subgraph(graph, core)
            if len(system.components) != 1:
                raise WorkbenchError("complementary component splits unexpectedly")
            owners[edges] = len(vertices)
            vertices.append(system.components[0])
    rho_vertex = owners.get(wedged)
    if rho_vertex is None:
        rho_vertex = len(vertices)
        vertices.append(stallings.from_generators([rho], graph, keep_base=False))
    return tuple(vertices), owners, rho_vertex


def peripheral_splitting(model):
    """The bipartite graph of groups: one surface vertex, one vertex per
    complementary component, a cyclic edge per boundary circle, and a
    trivial edge per attaching point."""
    graph = model.graph
    s_rank = 1 - model.surface.euler_characteristic
    vertices, owners, rho_vertex = _l_vertex_data(model)

    def owner_of_word(tokens):
        for edges, idx in owners.items():
            if all(edge_name(t) in edges for t in tokens):
                return idx
        raise WorkbenchError(f"no complementary component carries {tokens}")

    def owner_of_vertex(v):
        for edges, idx in owners.items():
            if v in subgraph_vertices(graph, edges):
                return idx
        raise WorkbenchError(f"no complementary component contains {v}")

    edges = [(0, "cyclic", rho_vertex, model.record.path.tokens)]
    for i, alpha in enumerate(model.alphas, start=1):
        edges.append((i, "cyclic", owner_of_word(alpha.tokens), alpha.tokens))
    for p in model.attaching_points:
        edges.append((p, "trivial", owner_of_vertex(p), ()))

    chi_vertices = model.surface.euler_characteristic + sum(
        1 - v.rank() for v in vertices)
    chi_edges = sum(0 if kind == "cyclic" else 1 for _, kind, _, _ in edges)
    rank = 1 - (chi_vertices - chi_edges)
    n = model.graph.rank()
    assert rank == n, (rank, n)
    return GraphOfGroups(s_rank, model.boundary_words, vertices, tuple(edges), rank)


def free_boundary_circles(model, gog=None):
    """Boundary indices whose boundary curve is unattached on one side.

    This happens for the distinguished boundary circle whenever the surface
    stratum is the top stratum, and for any other boundary whose
    complementary vertex has valence one and is a circle traversed exactly
    once by the attaching map."""
    gog = gog or peripheral_splitting(model)
    out = []
    if model.height == model.filtration.top:
        out.append(0)
    for i, kind, l_index, word in gog.edges:
        if kind != "cyclic":
            continue
        if gog.valence(l_index) != 1:
            continue
        comp = gog.l_vertices[l_index]
        tight = graphs.cyclic_reduce_word(word)
        if comp.rank() == 1 and len(tight) == len(comp.edges):
            out.append(i)
    return sorted(set(out))


def verify_model(model, f):
    """Invariance and malnormality report for a built model."""
    entries = []
    # (a) f_# permutes the boundary classes up to inversion, fixing index 0
    keys = [c.unoriented_key() for c in model.boundary_classes]
    images = [apply_sharp(f, c).unoriented_key() for c in model.boundary_classes]
    perm_ok = sorted(images) == sorted(keys)
    fixed_ok = images[0] == keys[0]
    entries.append(strata.CheckEntry(
        "boundary-permutation", model.height,
        "pass" if perm_ok and fixed_ok else "fail",
        witness=None if perm_ok and fixed_ok else tuple(images)))
    # (b) the upper boundary class is not carried by the lower graph
    lower = model.filtration.level_edges(model.height - 1)
    carried = (bool(lower) and stallings.carries_class(
        stallings.from_subgraph(model.graph, lower), model.boundary_classes[0]))
    entries.append(strata.CheckEntry(
        "upper-boundary-height", model.height,
        "fail" if carried else "pass"))
    # (c) the complementary system is malnormal
    system, count = complementary_system(model)
    ok, witness = stallings.is_malnormal(system)
    entries.append(strata.CheckEntry(
        "complement-malnormal", model.height, "pass" if ok else "fail",
        witness=(witness,) if witness else None))
    # (d) component counts agree
    match = len(system.components) == count
    entries.append(strata.CheckEntry(
        "complement-components", model.height, "pass" if match else "fail",
        witness=None if match else (len(system.components), count)))
    return strata.Report(tuple(entries))


def vertex_group_system_report(model, k_edges):
    """[pi_1 K] for a subgraph K of the complement containing every
    boundary image, with malnormality and rank bounds asserted."""
    graph = model.graph
    k_edges = set(k_edges)
    has_rho = "E_rho" in k_edges
    k_edges.discard("E_rho")
    if not k_edges <= model.complementary.edges:
        raise WorkbenchError("K must be a subgraph of the complement")
    if not has_rho:
        raise BoundaryNotContained("the upper boundary image E_rho is not in K")
    for a in model.alphas:
        missing = [t for t in a.tokens if edge_name(t) not in k_edges]
        if missing:
            raise BoundaryNotContained(f"attaching circuit {a} leaves K at {missing}")
    rho = model.record.path.tokens
    components = []
    count = 0
    wedge_edges = None
    for comp in graphs.subgraph_components(graph, frozenset(k_edges)):
        if model.base_point in subgraph_vertices(graph, comp):
            wedge_edges = comp
            continue
        core = graphs.core_subgraph(graph, comp)
        if core:
            components.extend(stallings.from_subgraph(graph, core).components)
            count += 1
    if wedge_edges is not None:
        gens = _loops_at(graph, wedge_edges, model.base_point) + [rho]
        components.append(stallings.from_generators(gens, graph, keep_base=False))
    else:
        components.append(stallings.from_generators([rho], graph, keep_base=False))
    count += 1
    system = stallings.SubgroupSystem(graph, components)
    n = graph.rank()
    ranks = [c.rank() for c in system.components]
    assert all(k <= n for k in ranks), ranks
    ok, witness = stallings.is_malnormal(system)
    s_rank = 1 - model.surface.euler_characteristic
    return {
        "system": system,
        "component_ranks": ranks,
        "malnormal": ok,
        "malnormal_witness": witness,
        "surface_vertex_rank": s_rank,
        "nontrivial_vertex_classes": len(system.components) + 1,
    }
