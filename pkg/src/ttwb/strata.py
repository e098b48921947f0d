"""Filtrations, transition matrices, stratum classification, and the
relative-train-track / CT axiom checkers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import graphs, maps
from .graphs import (Circuit, Path, edge_name, inv, is_root_free, reduce_word,
                     subgraph_vertices, tighten_circuit, core_subgraph)
from .maps import (DirectionMap, apply_sharp, compose, illegal_turns_of,
                   is_legal_turn, power, turns_of_word)
from .errors import NotInvariant, NotIrreducible, WorkbenchError


class Filtration:
    """Strictly increasing nested edge subsets G_1 c ... c G_K = G."""

    def __init__(self, graph, levels):
        self.graph = graph
        cum = []
        prev = frozenset()
        for i, level in enumerate(levels, start=1):
            cur = frozenset(level)
            if not cur > prev:
                raise ValueError(f"filtration level {i} does not strictly increase")
            if not cur <= set(graph.edges):
                raise ValueError(f"filtration level {i} has undeclared edges")
            cum.append(cur)
            prev = cur
        if not cum or cum[-1] != frozenset(graph.edges):
            raise ValueError("top filtration level must contain every edge")
        self.levels = cum

    @property
    def top(self):
        return len(self.levels)

    def level_edges(self, r):
        """Edge set of G_r (G_0 is empty)."""
        return frozenset() if r == 0 else self.levels[r - 1]

    def stratum(self, r):
        """Edge set of H_r = G_r minus G_{r-1}."""
        return self.level_edges(r) - self.level_edges(r - 1)

    def height_of_edge(self, token):
        e = edge_name(token)
        for r in range(1, self.top + 1):
            if e in self.stratum(r):
                return r
        raise KeyError(e)

    def height_of_word(self, tokens):
        return max((self.height_of_edge(t) for t in tokens), default=0)

    def check_invariant(self, f):
        """f(G_r) inside G_r for every r; returns None or raises."""
        for r in range(1, self.top + 1):
            edges = self.level_edges(r)
            for e in sorted(edges):
                img = f.edge_images[e]
                for t in img:
                    if edge_name(t) not in edges:
                        raise NotInvariant(r, witness=(e, t))

    def is_invariant(self, f):
        try:
            self.check_invariant(f)
            return True
        except NotInvariant:
            return False

    def __repr__(self):
        return f"Filtration({[sorted(l) for l in self.levels]})"


def single_level_filtration(graph):
    return Filtration(graph, [set(graph.edges)])


@dataclass(frozen=True)
class TransitionMatrix:
    edges: tuple
    rows: tuple  # rows[i][j] = crossings of edge i by the image of edge j

    def array(self):
        return np.array(self.rows, dtype=float)

    def is_zero(self):
        return all(all(x == 0 for x in row) for row in self.rows)

    def _bool(self):
        return np.array(self.rows, dtype=bool)

    def is_irreducible(self):
        n = len(self.edges)
        if n == 0:
            return False
        if self.is_zero():
            return False
        reach = np.eye(n, dtype=bool) | self._bool()
        closure = np.linalg.matrix_power(reach.astype(int), max(n - 1, 1)) > 0
        return bool(closure.all())

    def is_aperiodic(self):
        """Some power of the matrix is positive (primitivity)."""
        if not self.is_irreducible():
            return False
        n = len(self.edges)
        m = self._bool().astype(int)
        acc = m.copy()
        for _ in range((n - 1) ** 2 + 1):
            if (acc > 0).all():
                return True
            acc = np.clip(acc @ m, 0, 1)
        return bool((acc > 0).all())


def transition_matrix(f, filtration, r):
    """Crossing-count matrix of stratum H_r (both orientations counted)."""
    filtration.check_invariant(f)
    edges = tuple(sorted(filtration.stratum(r)))
    index = {e: i for i, e in enumerate(edges)}
    rows = [[0] * len(edges) for _ in edges]
    for j, e in enumerate(edges):
        for t in f.edge_images[e]:
            i = index.get(edge_name(t))
            if i is not None:
                rows[i][j] += 1
    return TransitionMatrix(edges, tuple(tuple(r_) for r_ in rows))


def pf_eigenvalue(matrix, tol=1e-9, max_iter=100000):
    """Perron-Frobenius eigenvalue of an irreducible nonnegative matrix.

    Power iteration on A + I (primitive) with Collatz-Wielandt
    bracketing; deterministic all-ones start.
    """
    if not matrix.is_irreducible():
        raise NotIrreducible(repr(matrix))
    a = matrix.array()
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])
    b = a + np.eye(n)
    x = np.ones(n)
    for _ in range(max_iter):
        y = b @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo < tol:
            return float((lo + hi) / 2 - 1.0)
        x = y / y.max()
    return float((lo + hi) / 2 - 1.0)


@dataclass(frozen=True)
class StratumClass:
    tag: str  # "zero" | "EG" | "NEG"
    eigenvalue: float | None = None
    aperiodic: bool | None = None
    neg_edges: dict = field(default_factory=dict)  # edge -> subtag record

    def is_eg(self):
        return self.tag == "EG"


@dataclass(frozen=True)
class NEGEdgeClass:
    subtag: str  # "fixed" | "periodic" | "linear" | "superlinear"
    axis: Circuit | None = None
    exponent: int | None = None


def _word_root(word):
    """(root, k) with word = root^k and root primitive."""
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d], n // d
    return word, 1


def _neg_edge_class(f, filtration, graph, e):
    img = f.edge_images[e]
    if img == (e,):
        return NEGEdgeClass("fixed")
    # periodic: the edge path E returns to itself under iteration
    p = Path(graph, (e,))
    q = p
    for _ in range(len(graph.edges)):
        q = apply_sharp(f, q)
        if q.tokens == (e,):
            return NEGEdgeClass("periodic")
    if img and img[0] == e:
        u = img[1:]
        if u and u[0] != inv(e) and graphs.cyclic_reduce_word(u) == u:
            root, k = _word_root(u)
            try:
                w = Circuit(graph, root)
            except WorkbenchError:
                w = None
            if w is not None and root == w.tokens * 1:
                pass
            if w is not None:
                fixed = apply_sharp(f, Path(graph, root)).tokens == root
                if fixed and is_root_free(w):
                    return NEGEdgeClass("linear", axis=w, exponent=k)
    return NEGEdgeClass("superlinear")


def classify_stratum(f, filtration, r):
    m = transition_matrix(f, filtration, r)
    if m.is_zero():
        return StratumClass("zero")
    if not m.is_irreducible():
        raise NotIrreducible(f"stratum {r} is neither zero nor irreducible")
    lam = pf_eigenvalue(m)
    if lam > 1 + 1e-7:
        return StratumClass("EG", eigenvalue=lam, aperiodic=m.is_aperiodic())
    neg = {e: _neg_edge_class(f, filtration, filtration.graph, e)
           for e in sorted(filtration.stratum(r))}
    return StratumClass("NEG", eigenvalue=lam, neg_edges=neg)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckEntry:
    check: str
    stratum: int | None
    status: str  # "pass" | "fail" | "inconclusive"
    witness: tuple | None = None
    note: str = ""


@dataclass(frozen=True)
class Report:
    entries: tuple

    @property
    def ok(self):
        return all(e.status != "fail" for e in self.entries)

    @property
    def conclusive(self):
        return all(e.status == "pass" for e in self.entries)

    def by_check(self, name):
        return [e for e in self.entries if e.check == name]


def neg_orientation(f, filtration, r):
    """Oriented/ordered NEG stratum edges with f(E_i) = E_{i+1} u_i.

    Returns a list of oriented tokens in cyclic order, or None if no
    consistent orientation exists.
    """
    stratum = sorted(filtration.stratum(r))
    lower = filtration.level_edges(r - 1)

    def first_step(tok):
        img = f.image(tok)
        if not img:
            return None
        head, rest = img[0], img[1:]
        if edge_name(head) not in stratum:
            return None
        if any(edge_name(t) not in lower for t in rest):
            return None
        return head

    for start in (stratum[0], "~" + stratum[0]):
        chain = [start]
        ok = True
        while True:
            nxt = first_step(chain[-1])
            if nxt is None:
                ok = False
                break
            if nxt == chain[0]:
                break
            if edge_name(nxt) in {edge_name(t) for t in chain}:
                ok = False
                break
            chain.append(nxt)
        if ok and len(chain) == len(stratum):
            return chain
    return None


def check_rtt(f, filtration, connecting_bound=4):
    """Relative train track axioms (i)-(iii) plus the two preconditions."""
    entries = []
    filtration.check_invariant(f)
    graph = filtration.graph
    dm = DirectionMap(f)
    classes = {}
    for r in range(1, filtration.top + 1):
        try:
            classes[r] = classify_stratum(f, filtration, r)
        except NotIrreducible:
            entries.append(CheckEntry("precondition-irreducible", r, "fail",
                                      note="stratum neither zero nor irreducible"))
            continue
        if classes[r].tag == "NEG" and neg_orientation(f, filtration, r) is None:
            entries.append(CheckEntry("precondition-neg-orientation", r, "fail"))

    for r, cls in classes.items():
        if cls.tag != "EG":
            continue
        stratum = filtration.stratum(r)
        hr_dirs = {d for d in dm.table if edge_name(d) in stratum}
        # (i) height-r directions stay height-r
        bad = [d for d in sorted(hr_dirs) if edge_name(dm(d)) not in stratum]
        entries.append(CheckEntry("rtt-i", r, "fail" if bad else "pass",
                                  witness=tuple(bad) or None))
        # (ii) connecting paths of H_r stay nontrivial
        entries.append(_check_connecting(f, filtration, r, connecting_bound))
        # (iii) edge images are r-legal
        bad = []
        for e in sorted(stratum):
            word = f.edge_images[e]
            for i, t in enumerate(turns_of_word(word)):
                if (edge_name(t[0]) in stratum and edge_name(t[1]) in stratum
                        and not is_legal_turn(f, t, dm)):
                    bad.append((e, i))
        entries.append(CheckEntry("rtt-iii", r, "fail" if bad else "pass",
                                  witness=tuple(bad) or None))
    return Report(tuple(entries))


def _check_connecting(f, filtration, r, bound):
    graph = filtration.graph
    lower = filtration.level_edges(r - 1)
    hr_vertices = subgraph_vertices(graph, filtration.stratum(r))
    lower_dirs = [d for d in graph.directions() if edge_name(d) in lower]
    paths = []
    frontier = [(d,) for d in lower_dirs if graph.init_of(d) in hr_vertices]
    for _ in range(bound):
        nxt = []
        for w in frontier:
            if graph.term_of(w[-1]) in hr_vertices:
                paths.append(w)
            for d in lower_dirs:
                if graph.init_of(d) == graph.term_of(w[-1]) and d != inv(w[-1]):
                    nxt.append(w + (d,))
        frontier = nxt
    bad = []
    for w in paths:
        if not reduce_word(f.apply_word(w)):
            bad.append(w)
    status = "fail" if bad else "pass"
    note = f"connecting paths checked to length {bound}"
    return CheckEntry("rtt-ii", r, status, witness=tuple(bad[:3]) or None, note=note)


def check_ct(f, filtration, inps, budget=8):
    """CT axioms 1-8 for a map that already passes check_rtt.

    Axiom 9 and the 'reduced' clause of (Filtration) are reported
    not-checked by design.
    """
    from . import dynamics, nielsen, splitting

    graph = filtration.graph
    entries = []
    dm = DirectionMap(f)
    classes = {r: classify_stratum(f, filtration, r)
               for r in range(1, filtration.top + 1)}
    ps = dynamics.principal_structure(f, filtration)

    # 1 (Rotationless)
    bad = [v for v in sorted(ps.principal_vertices) if f.vertex_map[v] != v]
    bad_dirs = [d for d in sorted(ps.periodic_directions)
                if graph.init_of(d) in ps.principal_vertices and dm(d) != d]
    status = "fail" if bad or bad_dirs else "pass"
    entries.append(CheckEntry("rotationless", None, status,
                              witness=tuple(bad + bad_dirs) or None))

    # 2 (Completely Split)
    witness = None
    status = "pass"
    for r, cls in classes.items():
        if cls.tag == "zero":
            continue
        for e in sorted(filtration.stratum(r)):
            p = apply_sharp(f, Path(graph, (e,)))
            try:
                splitting.complete_splitting(f, filtration, p, inps)
            except WorkbenchError as exc:
                status, witness = "fail", (e, str(exc))
                break
        if status == "fail":
            break
    if status == "pass":
        zero_note = _check_zero_taken_split(f, filtration, classes, inps, budget)
        if zero_note is not None:
            status, witness = zero_note
    entries.append(CheckEntry("completely-split", None, status, witness=witness))

    # 3 (Filtration): core of each filtration element is a filtration element
    level_sets = {filtration.level_edges(i) for i in range(filtration.top + 1)}
    bad = [i for i in range(1, filtration.top + 1)
           if core_subgraph(graph, filtration.level_edges(i)) not in level_sets]
    entries.append(CheckEntry("filtration", None, "fail" if bad else "pass",
                              witness=tuple(bad) or None,
                              note="'reduced' clause not checked by design"))

    # 4 (Vertices): INP endpoints are vertices (by representation); the
    # terminal vertex of each nonfixed NEG edge is principal
    bad = []
    for r, cls in classes.items():
        if cls.tag != "NEG":
            continue
        chain = neg_orientation(f, filtration, r)
        for tok in chain or ():
            if f.image(tok) != (tok,):
                v = graph.term_of(tok)
                if v not in ps.principal_vertices:
                    bad.append((tok, v))
    entries.append(CheckEntry("vertices", None, "fail" if bad else "pass",
                              witness=tuple(bad) or None))

    # 5 (Periodic Edges)
    bad = []
    for e in sorted(graph.edges):
        p = Path(graph, (e,))
        q = p
        period = None
        for k in range(1, len(graph.edges) + 1):
            q = apply_sharp(f, q)
            if q == p:
                period = k
                break
        if period is not None and period > 1:
            bad.append((e, f"periodic with period {period}, not fixed"))
        if period == 1:
            for v in graph.edges[e]:
                if v not in ps.principal_vertices:
                    bad.append((e, f"endpoint {v} not principal"))
            r = filtration.height_of_edge(e)
            if graph.edges[e][0] != graph.edges[e][1]:
                lower = filtration.level_edges(r - 1)
                lower_core = core_subgraph(graph, lower)
                if lower != lower_core:
                    bad.append((e, "lower filtration element not a core graph"))
                for v in graph.edges[e]:
                    if v not in subgraph_vertices(graph, lower):
                        bad.append((e, f"endpoint {v} not in lower filtration element"))
    entries.append(CheckEntry("periodic-edges", None, "fail" if bad else "pass",
                              witness=tuple(bad) or None))

    # 6 (Zero Strata)
    entries.append(_check_zero_strata(f, filtration, classes, budget))

    # 7 (Linear Edges)
    entries.append(_check_linear_edges(f, filtration, classes))

    # 8 (NEG Nielsen Paths)
    bad = []
    for rec in inps:
        cls = classes.get(rec.height)
        if cls is None or cls.tag != "NEG":
            continue
        ok = False
        w = rec.path.tokens
        if len(w) >= 2 and w[0] == inv(w[-1]):
            e = w[0]
            core = w[1:-1]
            ecls = cls.neg_edges.get(edge_name(e))
            if ecls is not None and ecls.subtag == "linear":
                axis = ecls.axis.tokens
                if edge_name(e) == e:
                    root, k = _word_root(core) if core else ((), 0)
                    if not core or root in (axis, graphs.reverse_word(axis)):
                        ok = True
        if not ok:
            bad.append(tuple(rec.path.tokens))
    entries.append(CheckEntry("neg-nielsen-paths", None, "fail" if bad else "pass",
                              witness=tuple(bad) or None))
    return Report(tuple(entries))


def _check_zero_taken_split(f, filtration, classes, inps, budget):
    """Completely-split clause for taken connecting paths of zero strata."""
    from . import splitting
    graph = filtration.graph
    zero = [r for r, c in classes.items() if c.tag == "zero"]
    if not zero:
        return None
    zero_edges = set().union(*(filtration.stratum(r) for r in zero))
    seen = set()
    for r, cls in classes.items():
        if cls.tag != "EG":
            continue
        for e in sorted(filtration.stratum(r)):
            p = Path(graph, (e,))
            for _ in range(budget):
                p = apply_sharp(f, p)
                for sub in _maximal_subwords(p.tokens, zero_edges):
                    seen.add(sub)
    for sub in sorted(seen):
        try:
            splitting.complete_splitting(f, filtration, apply_sharp(f, Path(graph, sub)), inps)
        except WorkbenchError as exc:
            return ("fail", (sub, str(exc)))
    return None


def _maximal_subwords(tokens, edge_set):
    out = []
    cur = []
    for t in tokens:
        if edge_name(t) in edge_set:
            cur.append(t)
        elif cur:
            out.append(tuple(cur))
            cur = []
    if cur:
        out.append(tuple(cur))
    return out


def _check_zero_strata(f, filtration, classes, budget):
    graph = filtration.graph
    bad = []
    note = f"taken-ness searched in tiles to depth {budget}"
    inconclusive = False
    for i, cls in classes.items():
        if cls.tag != "zero":
            continue
        hi = filtration.stratum(i)
        hi_vertices = subgraph_vertices(graph, hi)
        envelope = None
        for r in range(i + 1, filtration.top + 1):
            if classes[r].tag == "EG" and hi_vertices <= subgraph_vertices(
                    graph, filtration.stratum(r)):
                envelope = r
                break
        if envelope is None:
            bad.append((i, "no enveloping EG stratum"))
            continue
        allowed = hi | filtration.stratum(envelope)
        for v in sorted(hi_vertices):
            for d in graph.directions_at(v):
                if edge_name(d) not in allowed:
                    bad.append((i, f"link of {v} leaves H_i u H_r via {d}"))
        taken = set()
        for e in sorted(filtration.stratum(envelope)):
            p = Path(graph, (e,))
            for _ in range(budget):
                p = apply_sharp(f, p)
            taken.update(edge_name(t) for t in p.tokens)
        missing = sorted(hi - taken)
        if missing:
            inconclusive = True
    status = "fail" if bad else ("inconclusive" if inconclusive else "pass")
    return CheckEntry("zero-strata", None, status, witness=tuple(bad) or None, note=note)


def _check_linear_edges(f, filtration, classes):
    graph = filtration.graph
    bad = []
    linear = []
    for r, cls in classes.items():
        if cls.tag != "NEG":
            continue
        for e, ecls in cls.neg_edges.items():
            if ecls.subtag == "linear":
                linear.append((e, ecls))
            elif ecls.subtag == "superlinear":
                img = f.edge_images[e]
                if img and img[0] == e:
                    pass  # superlinear NEG is allowed by the axiom
    for e, ecls in linear:
        if not is_root_free(ecls.axis):
            bad.append((e, "axis not root free"))
        if apply_sharp(f, Path(graph, ecls.axis.tokens)).tokens != ecls.axis.tokens:
            bad.append((e, "axis not a Nielsen path"))
    for i in range(len(linear)):
        for j in range(i + 1, len(linear)):
            (e1, c1), (e2, c2) = linear[i], linear[j]
            if c1.axis.unoriented_key() == c2.axis.unoriented_key():
                if c1.axis.tokens != c2.axis.tokens:
                    bad.append((e1, e2, "freely homotopic axes differ"))
                elif c1.exponent == c2.exponent:
                    bad.append((e1, e2, "equal axes with equal exponents"))
    return CheckEntry("linear-edges", None, "fail" if bad else "pass",
                      witness=tuple(bad) or None)
