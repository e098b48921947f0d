"""Search for and certification of (indivisible) periodic Nielsen paths,
and the geometricity decision for exponentially growing strata.

The EG search exploits that a height-r INP fixed by g = f^period starts
and ends with g-fixed directions: both halves are prefixes of the
g-invariant rays generated by those directions, so candidates are found
by matching ray-prefix tails and then verified directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import graphs, strata
from .graphs import Circuit, Path, edge_name, inv, reverse_word, token_key
from .maps import DirectionMap, apply_sharp, power
from .errors import NotEG, WorkbenchError


@dataclass(frozen=True)
class NielsenRecord:
    path: Path
    period: int
    height: int
    closed: bool
    crossings: tuple  # sorted (edge, count) pairs over the height stratum
    decomposition: tuple | None = None  # (alpha, beta) for EG height
    indivisible: bool = True

    def verify(self, f):
        return apply_sharp(power(f, self.period), self.path) == self.path

    def crossing_dict(self):
        return dict(self.crossings)

    def unoriented_tokens(self):
        w = self.path.tokens
        rv = reverse_word(w)
        return min(w, rv, key=lambda t: tuple(token_key(x) for x in t))


class InpSearch(list):
    """List of NielsenRecords with search-completeness metadata."""

    def __init__(self, records=(), complete=True, note=""):
        super().__init__(records)
        self.complete = complete
        self.note = note


def is_nielsen_path(f, p, period_bound=12):
    """Least k <= period_bound with f^k_#(p) = p, or None."""
    if p.is_trivial() or p.start not in f.domain.vertices:
        raise ValueError("need a nontrivial path with vertex endpoints")
    q = p
    for k in range(1, period_bound + 1):
        q = apply_sharp(f, q)
        if q == p:
            return k
        if len(q) > 64 * max(len(p), 1) * max(f.lipschitz, 1):
            break
    return None


def _crossings(filtration, r, tokens):
    counts = {e: 0 for e in sorted(filtration.stratum(r))}
    for t in tokens:
        e = edge_name(t)
        if e in counts:
            counts[e] += 1
    return tuple(sorted(counts.items()))


def _make_record(f, filtration, p, period, period_bound, decomposition=None):
    r = filtration.height_of_word(p.tokens)
    indivisible = True
    for m in range(1, len(p.tokens)):
        left, right = p.subpath(0, m), p.subpath(m, len(p.tokens))
        if (is_nielsen_path(f, left, period_bound)
                and is_nielsen_path(f, right, period_bound)):
            indivisible = False
            break
    return NielsenRecord(
        path=p, period=period, height=r, closed=p.is_closed(),
        crossings=_crossings(filtration, r, p.tokens),
        decomposition=decomposition, indivisible=indivisible)


def _ray_prefix_word(g, graph, d, bound):
    """Longest g-invariant ray prefix from direction d, up to `bound` edges."""
    p = (d,)
    while len(p) < bound:
        q = apply_sharp(g, Path(graph, p)).tokens
        if q[:len(p)] != p or len(q) <= len(p):
            break
        p = q
    return p[:bound]


def _tails(g, graph, ray):
    """tails[i] = word with g_#(ray[:i]) = ray[:i] + tails[i]; None when the
    image does not extend the prefix."""
    tails = {}
    for i in range(1, len(ray) + 1):
        pre = ray[:i]
        img = apply_sharp(g, Path(graph, pre)).tokens
        if img[:i] == pre:
            tails[i] = img[i:]
    return tails


def find_inps(f, filtration, r, length_bound=None, period_bound=12):
    """All indivisible periodic Nielsen paths of height r, up to reversal."""
    graph = filtration.graph
    cls = strata.classify_stratum(f, filtration, r)
    if length_bound is None:
        length_bound = 64 * len(graph.edges)

    if cls.tag == "zero":
        return InpSearch([], complete=True, note="zero stratum has no INPs")
    if cls.tag == "NEG":
        return _find_neg_inps(f, filtration, r, cls, period_bound)

    stratum = filtration.stratum(r)
    found = {}
    # each half of an INP crosses each stratum edge at most twice, so a
    # generous ray bound makes the prefix enumeration exhaustive
    complete = length_bound >= 4 * len(graph.edges) + 4
    for period in _candidate_periods(f, stratum, period_bound):
        g = power(f, period)
        dm = DirectionMap(g)
        fixed = sorted((d for d in dm.fixed if edge_name(d) in stratum),
                       key=token_key)
        rays, tails = {}, {}
        for d in fixed:
            rays[d] = _ray_prefix_word(g, graph, d, length_bound)
            tails[d] = _tails(g, graph, rays[d])
        for ai, d1 in enumerate(fixed):
            for d2 in fixed[ai + 1:]:
                for rho in _match_ray_pair(g, graph, rays[d1], tails[d1],
                                           rays[d2], tails[d2]):
                    if filtration.height_of_word(rho.tokens) != r:
                        continue
                    least = is_nielsen_path(f, rho, period_bound)
                    if least is None:
                        continue
                    key = NielsenRecord(rho, least, r, rho.is_closed(),
                                        ()).unoriented_tokens()
                    if key in found:
                        continue
                    i = _junction_index(rho, rays[d1])
                    decomp = (rho.subpath(0, i), rho.subpath(i, len(rho.tokens)))
                    rec = _make_record(f, filtration, Path(graph, key), least,
                                       period_bound,
                                       decomposition=_oriented_decomp(graph, key, decomp))
                    if rec.indivisible:
                        found[key] = rec
    return InpSearch(sorted(found.values(),
                            key=lambda rec: rec.unoriented_tokens()),
                     complete=complete)


def _candidate_periods(f, stratum, period_bound):
    """Periods that can carry an INP: an endpoint direction of a period-p
    Nielsen path is Df^p-fixed, so p is an lcm of two direction periods."""
    import math
    dm = DirectionMap(f)
    dir_periods = {dm.period_of(d) for d in dm.periodic
                   if edge_name(d) in stratum}
    out = {math.lcm(p1, p2) for p1 in dir_periods for p2 in dir_periods}
    return sorted(p for p in out if p <= period_bound)


def _junction_index(rho, ray):
    i = 0
    while i < len(rho.tokens) and i < len(ray) and rho.tokens[i] == ray[i]:
        i += 1
    return i


def _oriented_decomp(graph, key, decomp):
    """Re-anchor the (alpha, beta) split on the normalized orientation."""
    alpha, beta = decomp
    rho = alpha.tokens + beta.tokens
    if rho == key:
        return (alpha, beta)
    i = len(beta.tokens)
    p = Path(graph, key)
    return (p.subpath(0, i), p.subpath(i, len(key)))


def _match_ray_pair(g, graph, ray1, tails1, ray2, tails2):
    """Candidate INPs rho = ray1[:i] . reverse(ray2[:j]) with equal tails."""
    by_tail = {}
    for j, s in tails2.items():
        by_tail.setdefault(s, []).append(j)
    out = []
    for i, t in sorted(tails1.items()):
        for j in by_tail.get(t, ()):
            a, b = ray1[:i], ray2[:j]
            if a[-1] == b[-1]:
                continue  # junction would cancel
            if graph.term_of(a[-1]) != graph.term_of(b[-1]):
                continue
            rho = Path(graph, a + reverse_word(b))
            if apply_sharp(g, rho) == rho:
                out.append(rho)
    return out


def _find_neg_inps(f, filtration, r, cls, period_bound):
    graph = filtration.graph
    records = []
    for e, ecls in sorted(cls.neg_edges.items()):
        if ecls.subtag == "fixed":
            continue
        if ecls.subtag != "linear":
            continue
        w = ecls.axis.tokens
        # rotate the axis to start at the terminal vertex of e
        rotations = [w[i:] + w[:i] for i in range(len(w))]
        based = next((v for v in rotations
                      if graph.init_of(v[0]) == graph.edges[e][1]), None)
        if based is None:
            continue
        for k in (1, -1):
            word = (e,) + (based if k == 1 else reverse_word(based)) + ("~" + e,)
            p = Path(graph, graphs.reduce_word(word))
            period = is_nielsen_path(f, p, period_bound)
            if period is not None:
                records.append(_make_record(f, filtration, p, period, period_bound))
    return InpSearch(records, complete=True,
                     note="NEG family represented by exponents +-1")


@dataclass(frozen=True)
class GeometricityDecision:
    tag: str  # "geometric" | "nongeometric" | "inconclusive"
    record: NielsenRecord | None = None
    reason: str = ""

    def is_geometric(self):
        return self.tag == "geometric"


def geometricity(f, filtration, r, length_bound=None, period_bound=12):
    """Decide whether the EG stratum H_r is geometric.

    Geometric iff a closed height-r INP exists; such an INP crosses each
    H_r edge exactly twice, and every component of G_{r-1} must be
    noncontractible.
    """
    graph = filtration.graph
    cls = strata.classify_stratum(f, filtration, r)
    if not cls.is_eg():
        raise NotEG(f"stratum {r} is not EG")
    rtt = strata.check_rtt(f, filtration)
    if not rtt.ok:
        raise WorkbenchError("map does not satisfy the train track axioms")
    inps = find_inps(f, filtration, r, length_bound, period_bound)
    closed = [rec for rec in inps if rec.closed and rec.height == r]
    open_ = [rec for rec in inps if not rec.closed and rec.height == r]
    for rec in inps:
        _assert_crossing_dichotomy(rec)
    if closed:
        rec = closed[0]
        if any(c != 2 for _, c in rec.crossings):
            raise WorkbenchError(f"closed INP with crossing counts {rec.crossings}")
        for comp_edges in graphs.subgraph_components(graph, filtration.level_edges(r - 1)):
            if not graphs.core_subgraph(graph, comp_edges):
                raise WorkbenchError("contractible component below a geometric stratum")
        return GeometricityDecision("geometric", record=rec)
    if inps.complete:
        if open_:
            return GeometricityDecision(
                "nongeometric",
                reason="only non-closed INPs; an endpoint misses the lower graph")
        return GeometricityDecision("nongeometric", reason="no height-r INP")
    return GeometricityDecision("inconclusive", reason="search bounds exhausted")


def _assert_crossing_dichotomy(rec):
    counts = [c for _, c in rec.crossings]
    if rec.closed:
        assert all(c == 2 for c in counts), rec
    else:
        assert any(c == 1 for c in counts), rec


def fixed_classes_of_height(f, filtration, r, length_bound=6):
    """All f_#-fixed circuits of height exactly r, up to the length bound."""
    graph = filtration.graph
    cls = strata.classify_stratum(f, filtration, r)
    if not cls.is_eg():
        raise NotEG(f"stratum {r} is not EG")
    seen = set()
    out = []
    words = [(d,) for d in graph.directions() if graph.is_path_word((d,))]
    for _ in range(length_bound):
        nxt = []
        for w in words:
            closes = graph.term_of(w[-1]) == graph.init_of(w[0]) and w[0] != inv(w[-1])
            if closes and len(w) <= length_bound:
                try:
                    c = Circuit(graph, w)
                except WorkbenchError:
                    c = None
                if c is not None and c.tokens not in seen:
                    seen.add(c.tokens)
                    if (filtration.height_of_word(c.tokens) == r
                            and apply_sharp(f, c) == c):
                        out.append(c)
            if len(w) < length_bound:
                for d in graph.directions():
                    if graph.init_of(d) == graph.term_of(w[-1]) and d != inv(w[-1]):
                        nxt.append(w + (d,))
        words = nxt
    return sorted(out, key=lambda c: (len(c.tokens),
                                      tuple(token_key(t) for t in c.tokens)))
