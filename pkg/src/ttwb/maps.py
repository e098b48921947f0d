"""Topological representatives f: G -> G and their path operators.

Central objects: ``GraphMap`` (vertex/edge assignment with reduced edge
images), the tightened image operator ``apply_sharp`` (f_#), the stable
core ``double_sharp`` (f_##), direction maps / turn legality, and a
certified bounded-cancellation upper bound computed from a fold
decomposition.
"""

from __future__ import annotations

import itertools

from . import graphs
from .graphs import (Circuit, Path, edge_name, inv, is_forward, reduce_word,
                     reverse_word, tighten_circuit, tighten_path)
from .errors import (CollapsedEdge, DomainMismatch, ImageCollapsed,
                     Inconclusive, NotHomotopyEquivalence)


class GraphMap:
    """A map of graphs taking vertices to vertices and edges to reduced paths."""

    def __init__(self, domain, codomain, edge_images, vertex_map=None):
        self.domain = domain
        self.codomain = codomain
        self.edge_images = {e: tuple(w) for e, w in edge_images.items()}
        if set(self.edge_images) != set(domain.edges):
            raise ValueError("edge images must cover exactly the domain edges")
        for e, w in self.edge_images.items():
            if reduce_word(w) != w:
                raise ValueError(f"image of {e} is not reduced: {w}")
            if w and not codomain.is_path_word(w):
                raise ValueError(f"image of {e} does not concatenate")
        self.vertex_map = dict(vertex_map) if vertex_map else self._derive_vertex_map()
        for e, w in self.edge_images.items():
            u, v = domain.edges[e]
            if w:
                if (codomain.init_of(w[0]) != self.vertex_map[u]
                        or codomain.term_of(w[-1]) != self.vertex_map[v]):
                    raise ValueError(f"image of {e} does not respect the vertex map")
            elif self.vertex_map[u] != self.vertex_map[v]:
                raise ValueError(f"collapsed edge {e} with distinct vertex images")
        self.lipschitz = max((len(w) for w in self.edge_images.values()), default=0)

    def _derive_vertex_map(self):
        vm = {}
        for e, w in self.edge_images.items():
            if not w:
                continue
            u, v = self.domain.edges[e]
            vm.setdefault(u, self.codomain.init_of(w[0]))
            vm.setdefault(v, self.codomain.term_of(w[-1]))
        missing = self.domain.vertices - set(vm)
        if missing:
            raise ValueError(f"cannot derive vertex images for {sorted(missing)}")
        return vm

    def image(self, token):
        w = self.edge_images[edge_name(token)]
        return w if is_forward(token) else reverse_word(w)

    def apply_word(self, tokens):
        """Unreduced image word of a token sequence."""
        out = []
        for t in tokens:
            out.extend(self.image(t))
        return tuple(out)

    def __eq__(self, other):
        return (isinstance(other, GraphMap)
                and self.domain == other.domain
                and self.codomain == other.codomain
                and self.edge_images == other.edge_images
                and self.vertex_map == other.vertex_map)

    def __hash__(self):
        return hash(tuple(sorted(self.edge_images.items())))

    def __repr__(self):
        ims = ", ".join(f"{e}->{' '.join(w) or '.'}"
                        for e, w in sorted(self.edge_images.items()))
        return f"GraphMap({ims})"


def identity_map(graph):
    return GraphMap(graph, graph, {e: (e,) for e in graph.edges},
                    {v: v for v in graph.vertices})


def apply_sharp(f, p):
    """f_#: image with tightening; accepts a Path or a Circuit."""
    if isinstance(p, Circuit):
        word = f.apply_word(p.tokens)
        reduced = graphs.cyclic_reduce_word(word)
        if not reduced:
            raise ImageCollapsed(f"circuit image is trivial: {p}")
        return Circuit(f.codomain, reduced)
    if p.is_trivial():
        return Path(f.codomain, (), f.vertex_map[p.base])
    word = f.apply_word(p.tokens)
    reduced = reduce_word(word)
    if reduced:
        return Path(f.codomain, reduced)
    return Path(f.codomain, (), f.vertex_map[p.start])


def compose(g, f):
    """g after f."""
    if f.codomain != g.domain:
        raise DomainMismatch("codomain(f) != domain(g)")
    images = {e: reduce_word(g.apply_word(w)) for e, w in f.edge_images.items()}
    vm = {v: g.vertex_map[f.vertex_map[v]] for v in f.domain.vertices}
    return GraphMap(f.domain, g.codomain, images, vm)


def power(f, k):
    if f.domain != f.codomain:
        raise DomainMismatch("power needs a self-map")
    result = identity_map(f.domain)
    for _ in range(k):
        result = compose(f, result)
    return result


class DirectionMap:
    """The derivative map Df on oriented-edge tokens, with its orbit data."""

    def __init__(self, f):
        trivial = [e for e, w in f.edge_images.items() if not w]
        if trivial:
            raise CollapsedEdge(trivial)
        self.map = f
        self.table = {d: f.image(d)[0] for d in f.domain.directions()}
        self.periodic = self._periodic_directions()
        self.fixed = frozenset(d for d in self.table if self.table[d] == d)
        self.gates = self._gates()

    def __call__(self, d):
        return self.table[d]

    def iterate(self, d, k):
        for _ in range(k):
            d = self.table[d]
        return d

    def _periodic_directions(self):
        per = set()
        for d in self.table:
            seen = []
            x = d
            while x not in seen:
                seen.append(x)
                x = self.table[x]
            per.update(seen[seen.index(x):])
        return frozenset(per)

    def period_of(self, d):
        """Least k >= 1 with Df^k(d) = d, or None if d is not periodic."""
        x, k = self.table[d], 1
        while x != d:
            if k > len(self.table):
                return None
            x, k = self.table[x], k + 1
        return k

    def _gates(self):
        """Partition of directions: d ~ d' iff some Df-iterates coincide."""
        parent = {d: d for d in self.table}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        table = dict(self.table)
        for _ in range(len(table)):
            merged = False
            buckets = {}
            for d in table:
                buckets.setdefault((find(table[d]), self.map.domain.init_of(d)), []).append(d)
            for ds in buckets.values():
                for a, b in zip(ds, ds[1:]):
                    if find(a) != find(b):
                        parent[find(a)] = find(b)
                        merged = True
            if not merged:
                break
        groups = {}
        for d in table:
            groups.setdefault(find(d), []).append(d)
        return [frozenset(g) for g in groups.values()]


def direction_map(f):
    return DirectionMap(f)


def is_legal_turn(f, turn, dm=None):
    """A turn is legal iff no Df-iterate degenerates it.

    Decided in at most (#directions)^2 steps: the orbit of the pair is
    eventually periodic in a state space of that size.
    """
    d1, d2 = turn
    if d1 == d2:
        return False
    dm = dm or DirectionMap(f)
    bound = len(dm.table) ** 2
    seen = set()
    for _ in range(bound + 1):
        pair = frozenset((d1, d2))
        if len(pair) == 1:
            return False
        if pair in seen:
            return True
        seen.add(pair)
        d1, d2 = dm(d1), dm(d2)
    return d1 != d2


def turns_of_word(tokens):
    """The turns taken at the interior vertices of a reduced word."""
    return [(inv(a), b) for a, b in zip(tokens, tokens[1:])]


def illegal_turns_of(f, tokens, dm=None):
    dm = dm or DirectionMap(f)
    return [i for i, t in enumerate(turns_of_word(tokens))
            if not is_legal_turn(f, t, dm)]


# ---------------------------------------------------------------------------
# Homotopy equivalence and bounded cancellation
# ---------------------------------------------------------------------------

def _spanning_tree(graph):
    """Map vertex -> reduced token path from a fixed base vertex."""
    base = min(graph.vertices)
    reach = {base: ()}
    frontier = [base]
    while frontier:
        nxt = []
        for v in frontier:
            for d in graph.directions_at(v):
                w = graph.term_of(d)
                if w not in reach:
                    reach[w] = reach[v] + (d,)
                    nxt.append(w)
        frontier = nxt
    if set(reach) != set(graph.vertices):
        raise ValueError("graph is not connected")
    return base, reach


def pi1_word(graph, tokens, tree=None):
    """Collapse a closed edge word to a word in the non-tree-edge basis."""
    _, reach = tree or _spanning_tree(graph)
    tree_edges = {edge_name(t) for path in reach.values() for t in path}
    return reduce_word(tuple(t for t in tokens if edge_name(t) not in tree_edges))


def pi1_basis_loops(graph, tree=None):
    """Basis of pi_1(graph, base): one loop word per non-tree edge."""
    base, reach = tree or _spanning_tree(graph)
    tree_edges = {edge_name(t) for path in reach.values() for t in path}
    loops = {}
    for e in sorted(graph.edges):
        if e in tree_edges:
            continue
        u, v = graph.edges[e]
        loops[e] = reduce_word(reach[u] + (e,) + reverse_word(reach[v]))
    return base, loops


def is_homotopy_equivalence(f):
    """True iff f is pi_1-surjective (enough: free groups are Hopfian)."""
    if f.domain != f.codomain:
        return False
    from .stallings import from_generators
    graph = f.domain
    tree = _spanning_tree(graph)
    _, loops = pi1_basis_loops(graph, tree)
    rank = len(loops)
    if rank == 0:
        return True
    gens = []
    for loop in loops.values():
        w = pi1_word(graph, f.apply_word(loop), tree)
        if not w:
            return False
        gens.append(w)
    basis_rose = graphs.rose(sorted(loops))
    folded = from_generators(gens, basis_rose)
    return (len(folded.graph_vertices()) == 1
            and sorted(folded.labels()) == sorted(loops))


def _fold_count(domain, codomain, edge_images):
    """Number of elementary folds in the Stallings factorization of the
    subdivided simplicial map."""
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        parent[find(x)] = find(y)

    # subdivide: edge e of length n becomes n simplicial edges; collapsed
    # edges just identify their endpoints (each adds 1 to the bound)
    edges = {}
    collapsed = 0
    for e, w in edge_images.items():
        u, v = domain.edges[e]
        if not w:
            union(("v", u), ("v", v))
            collapsed += 1
            continue
        prev = ("v", u)
        for i, label in enumerate(w):
            nxt = ("v", v) if i == len(w) - 1 else ("m", e, i)
            edges[(e, i)] = (prev, nxt, label)
            prev = nxt
    folds = 0
    while True:
        darts = {}
        clash = None
        for eid, (u, v, label) in edges.items():
            for side, lab in ((0, label), (1, inv(label))):
                start = u if side == 0 else v
                key = (find(start), lab)
                if key in darts and darts[key][0] != eid:
                    clash = (darts[key], (eid, side))
                    break
                darts[key] = (eid, side)
            if clash:
                break
        if not clash:
            return folds + collapsed
        (e1, s1), (e2, s2) = clash
        u1, v1, _ = edges[e1]
        u2, v2, _ = edges[e2]
        far1 = v1 if s1 == 0 else u1
        far2 = v2 if s2 == 0 else u2
        union(far1, far2)
        del edges[e2]
        folds += 1


def bcc_bound(f):
    """Certified bounded-cancellation constant.

    Upper bound B: tightening any concatenation of f-images cancels at
    most B edges of each factor.  Computed by factoring the subdivided
    map into elementary folds; each fold contributes at most 1 and has
    Lipschitz constant 1, so the fold count bounds BCC(f).
    """
    if not is_homotopy_equivalence(f):
        raise NotHomotopyEquivalence(repr(f))
    return _fold_count(f.domain, f.codomain, f.edge_images)


# ---------------------------------------------------------------------------
# f_## : the stable core of f_#
# ---------------------------------------------------------------------------

def _extension_words(graph, vertex, forbidden, depth):
    """All reduced words of length <= depth leaving `vertex`, not starting
    with the forbidden token (which would cancel into the path)."""
    out = [()]
    layer = [((), vertex)]
    for _ in range(depth):
        nxt = []
        for word, at in layer:
            for d in graph.directions_at(at):
                if word and d == inv(word[-1]):
                    continue
                if not word and d == forbidden:
                    continue
                w2 = word + (d,)
                out.append(w2)
                nxt.append((w2, graph.term_of(d)))
        layer = nxt
    return out


def _head_cancellation(a_word, b_word):
    """Number of b-head letters consumed when tightening a_word . b_word."""
    stack = list(a_word)
    eaten = 0
    for i, t in enumerate(b_word):
        if stack and stack[-1] == inv(t):
            stack.pop()
            eaten = i + 1
        else:
            break
    return eaten


def double_sharp(f, p, budget=100000):
    """f_##(p): the maximal common subpath of f_#(d) over all extensions
    d of p, anchored in f_#(p).

    The left trim is the worst head-cancellation of f_#(l).f_#(p) over
    reduced left prolongations l, and symmetrically on the right; by
    bounded cancellation a per-side search depth of 2*bcc_bound(f)+2
    suffices.  May return a trivial path.
    """
    if p.is_trivial():
        raise ValueError("double_sharp needs a nontrivial path")
    fp = apply_sharp(f, p)
    if fp.is_trivial():
        return fp
    depth = 2 * bcc_bound(f) + 2
    b_word = fp.tokens
    graph = f.domain
    spent = 0

    def side_trim(rev):
        nonlocal spent
        path = p.reverse() if rev else p
        core = reverse_word(b_word) if rev else b_word
        vertex = path.start
        forbidden = path.tokens[0]
        by_depth = {}
        for word in _extension_words(graph, vertex, forbidden, depth):
            if word:
                by_depth.setdefault(len(word), []).append(word)
        trim, last = 0, 0
        for d in range(1, depth + 1):
            for word in by_depth.get(d, ()):
                spent += 1
                if spent > budget:
                    raise Inconclusive("double_sharp budget exhausted", budget)
                a_word = f.apply_word(reverse_word(word))
                trim = max(trim, _head_cancellation(reduce_word(a_word), core))
            if trim == last and d >= 2:
                break
            last = trim
        return trim

    left = side_trim(False)
    right = side_trim(True)
    if left + right >= len(b_word):
        cut = min(left, len(b_word))
        return fp.subpath(cut, cut)
    return fp.subpath(left, len(b_word) - right)


def juncture_cancellation(f, x, y):
    """Edges cancelled from each side when tightening f_#(x) . f_#(y)."""
    fx, fy = apply_sharp(f, x), apply_sharp(f, y)
    whole = reduce_word(fx.tokens + fy.tokens)
    assert (len(fx.tokens) + len(fy.tokens) - len(whole)) % 2 == 0
    return (len(fx.tokens) + len(fy.tokens) - len(whole)) // 2
