"""Splittings and complete splittings of paths and circuits.

A splitting marks breakpoints so that images under every iterate of f_#
concatenate without cancellation; a complete splitting additionally
classifies every term as an irreducible-stratum edge, an indivisible
periodic Nielsen path, an exceptional path E_i w^p ~E_j, or a maximal
taken zero-stratum subpath.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import strata
from .graphs import Circuit, Path, edge_name, inv, reverse_word
from .maps import DirectionMap, apply_sharp, is_legal_turn, power
from .errors import Inconclusive, NotCompletelySplit, NotEG


@dataclass(frozen=True)
class Splitting:
    base: object  # Path or Circuit
    breakpoints: tuple
    terms: tuple  # ((tokens, tag), ...)
    status: str  # "exact" | "certified(k)" | "failed"
    witness: int | None = None  # failing iterate when failed

    @property
    def ok(self):
        return self.status != "failed"

    def tags(self):
        return tuple(tag for _, tag in self.terms)


def _pieces(tokens, breakpoints, cyclic):
    cuts = list(breakpoints)
    if not cyclic:
        cuts = [0] + [c for c in cuts if 0 < c < len(tokens)] + [len(tokens)]
        cuts = sorted(set(cuts))
        return [tokens[a:b] for a, b in zip(cuts, cuts[1:])]
    cuts = sorted(set(c % len(tokens) for c in cuts))
    if not cuts:
        return [tokens]
    out = []
    for a, b in zip(cuts, cuts[1:] + [cuts[0] + len(tokens)]):
        piece = (tokens + tokens)[a:b]
        out.append(piece)
    return out


def verify_splitting(f, p, breakpoints, k_bound=8, tags=None):
    """Check the single-dot condition: f^i images concatenate reduced.

    Status is ``exact`` when every juncture turn is legal (a sufficient
    condition, additionally confirmed up to k_bound), ``certified(k)``
    when only the direct bounded check succeeds.
    """
    cyclic = isinstance(p, Circuit)
    tokens = p.tokens
    dm = DirectionMap(f)
    pieces = _pieces(tokens, breakpoints, cyclic)
    junctures = []
    for a, b in zip(pieces, pieces[1:] + ([pieces[0]] if cyclic else [])):
        if a and b:
            junctures.append((inv(a[-1]), b[0]))
    all_legal = all(is_legal_turn(f, t, dm) for t in junctures)
    g = f
    ok_to = 0
    witness = None
    for i in range(1, k_bound + 1):
        imgs = [apply_sharp(g, Path(f.domain, piece)).tokens for piece in pieces]
        total = sum(len(w) for w in imgs)
        whole = apply_sharp(g, p)
        if len(whole.tokens) != total:
            witness = i
            break
        ok_to = i
        g = None or _compose_next(f, g)
    terms = tuple((tuple(piece), (tags[k] if tags else "unclassified"))
                  for k, piece in enumerate(pieces))
    if witness is not None:
        return Splitting(p, tuple(breakpoints), terms, "failed", witness)
    status = "exact" if all_legal else f"certified({k_bound})"
    return Splitting(p, tuple(breakpoints), terms, status)


def _compose_next(f, g):
    from .maps import compose
    return compose(f, g)


def _linear_edges(f, filtration):
    out = {}
    for r in range(1, filtration.top + 1):
        cls = strata.classify_stratum(f, filtration, r)
        if cls.tag == "NEG":
            for e, ecls in cls.neg_edges.items():
                if ecls.subtag == "linear":
                    u = f.edge_images[e][1:]
                    root, k = strata._word_root(u)
                    out[e] = (root, k)
    return out


def _irreducible_edges(f, filtration):
    out = set()
    for r in range(1, filtration.top + 1):
        cls = strata.classify_stratum(f, filtration, r)
        if cls.tag != "zero":
            out |= filtration.stratum(r)
    return out


def _zero_edges(f, filtration):
    out = set()
    for r in range(1, filtration.top + 1):
        if strata.classify_stratum(f, filtration, r).tag == "zero":
            out |= filtration.stratum(r)
    return out


def _is_taken(f, filtration, tokens, depth=8):
    """Does the word occur inside some iterated EG edge image?"""
    graph = filtration.graph
    needle = Path(graph, tokens)
    for r in range(1, filtration.top + 1):
        cls = strata.classify_stratum(f, filtration, r)
        if cls.tag != "EG":
            continue
        for e in sorted(filtration.stratum(r)):
            p = Path(graph, (e,))
            for _ in range(depth):
                p = apply_sharp(f, p)
                if needle.is_subpath_of(p):
                    return True
    return False


def _candidates(f, filtration, tokens, pos, inps, linear, irreducible, zeros, depth):
    """Candidate (length, tag) terms starting at pos, in priority order."""
    out = []
    rest = tokens[pos:]
    # indivisible Nielsen paths, longest first
    for rec in inps:
        for w in (rec.path.tokens, reverse_word(rec.path.tokens)):
            n = len(w)
            if rest[:n] == w:
                out.append((n, "inp"))
    # exceptional paths E_i w^p ~E_j
    e1 = rest[0] if rest else None
    if e1 is not None and edge_name(e1) in linear and e1 == edge_name(e1):
        root, _ = linear[edge_name(e1)]
        for axis in (root, reverse_word(root)):
            n = len(axis)
            i = 1
            reps = 0
            while rest[i:i + n] == axis:
                i += n
                reps += 1
            if reps >= 1 and i < len(rest):
                tail = rest[i]
                e2 = edge_name(tail)
                if tail == "~" + e2 and e2 in linear and linear[e2][0] in (
                        root, reverse_word(root)):
                    out.append((i + 1, "exceptional"))
    # a single irreducible-stratum edge
    if rest and edge_name(rest[0]) in irreducible:
        out.append((1, "edge"))
    # maximal zero-stratum subpath, taken
    if rest and edge_name(rest[0]) in zeros:
        n = 0
        while n < len(rest) and edge_name(rest[n]) in zeros:
            n += 1
        if pos == 0 or edge_name(tokens[pos - 1]) not in zeros:
            if _is_taken(f, filtration, rest[:n], depth):
                out.append((n, "zero"))
            else:
                raise Inconclusive(
                    f"zero-stratum subpath {rest[:n]} not seen taken within depth {depth}")
    # priority: inp > exceptional > edge > zero; longest inp first
    order = {"inp": 0, "exceptional": 1, "edge": 2, "zero": 3}
    seen = set()
    ranked = []
    for n, tag in sorted(out, key=lambda x: (order[x[1]], -x[0])):
        if (n, tag) not in seen:
            seen.add((n, tag))
            ranked.append((n, tag))
    return ranked


def _split_word(f, filtration, tokens, inps, depth):
    linear = _linear_edges(f, filtration)
    irreducible = _irreducible_edges(f, filtration)
    zeros = _zero_edges(f, filtration)
    dead = set()

    def dfs(pos, acc):
        if pos == len(tokens):
            return acc
        if pos in dead:
            return None
        for n, tag in _candidates(f, filtration, tokens, pos, inps,
                                  linear, irreducible, zeros, depth):
            res = dfs(pos + n, acc + [(pos + n, tag)])
            if res is not None:
                return res
        dead.add(pos)
        return None

    return dfs(0, [])


def complete_splitting(f, filtration, p, inps, depth=8, k_bound=8):
    """The unique complete splitting of p, when one exists within bounds."""
    cyclic = isinstance(p, Circuit)
    if cyclic:
        last_exc = None
        for rot in range(len(p.tokens)):
            w = p.tokens[rot:] + p.tokens[:rot]
            res = _split_word(f, filtration, w, inps, depth)
            if res is None:
                continue
            cuts = [rot] + [(rot + c) % len(p.tokens) for c, _ in res[:-1]]
            tags = [tag for _, tag in res]
            s = verify_splitting(f, p, cuts, k_bound, tags=tags)
            if s.ok:
                return s
            last_exc = s
        raise NotCompletelySplit(0, f"no completely split rotation of {p}")
    res = _split_word(f, filtration, p.tokens, inps, depth)
    if res is None:
        raise NotCompletelySplit(0, f"no term decomposition of {p}")
    cuts = [c for c, _ in res[:-1]]
    tags = [tag for _, tag in res]
    s = verify_splitting(f, p, cuts, k_bound, tags=tags)
    if not s.ok:
        raise NotCompletelySplit(s.witness or 0, "terms cancel under iteration")
    return s


def eventual_complete_splitting(f, filtration, p, inps, iterate_bound=32,
                                depth=8, k_bound=8):
    """Least k with f^k_#(p) completely split, plus that splitting."""
    q = p
    for k in range(iterate_bound + 1):
        try:
            return k, complete_splitting(f, filtration, q, inps, depth, k_bound)
        except (NotCompletelySplit, Inconclusive):
            pass
        q = apply_sharp(f, q)
    raise Inconclusive(f"no complete splitting within {iterate_bound} iterates",
                       iterate_bound)


def count_r_illegal(f, filtration, r, p, dm=None):
    """Number of illegal height-r turns taken by a path or circuit."""
    dm = dm or DirectionMap(f)
    tokens = p.tokens
    stratum = filtration.stratum(r)
    pairs = list(zip(tokens, tokens[1:]))
    if isinstance(p, Circuit):
        pairs.append((tokens[-1], tokens[0]))
    count = 0
    for a, b in pairs:
        t = (inv(a), b)
        if (edge_name(t[0]) in stratum and edge_name(t[1]) in stratum
                and not is_legal_turn(f, t, dm)):
            count += 1
    return count


@dataclass(frozen=True)
class AttractionVerdict:
    attracted: bool
    iterate: int | None = None
    position: int | None = None

    def __bool__(self):
        return self.attracted


def weak_attraction_test(f, filtration, r, sigma, iterate_bound=32, k_bound=4):
    """Attracted(k) iff some iterate splits off an H_r-edge term."""
    cls = strata.classify_stratum(f, filtration, r)
    if not cls.is_eg():
        raise NotEG(f"stratum {r} is not EG")
    stratum = filtration.stratum(r)
    q = sigma
    for k in range(iterate_bound + 1):
        tokens = q.tokens
        for i, t in enumerate(tokens):
            if edge_name(t) not in stratum:
                continue
            if isinstance(q, Circuit):
                cuts = [i, (i + 1) % len(tokens)]
            else:
                cuts = [i, i + 1]
            s = verify_splitting(f, q, cuts, k_bound)
            if s.ok:
                return AttractionVerdict(True, k, i)
        q = apply_sharp(f, q)
    return AttractionVerdict(False)


def coarse_eg_split(f, filtration, r, sigma, inps, budget=64, k_bound=4):
    """Split a height-r path/circuit (after iterating until the r-illegal
    turn count stabilizes) into H_r edges, height-r INPs, and lower paths."""
    cls = strata.classify_stratum(f, filtration, r)
    if not cls.is_eg():
        raise NotEG(f"stratum {r} is not EG")
    dm = DirectionMap(f)
    stratum = filtration.stratum(r)
    counts = []
    q = sigma
    for step in range(budget):
        c = count_r_illegal(f, filtration, r, q, dm)
        if counts:
            assert c <= counts[-1], "r-illegal turn count increased"
        counts.append(c)
        stable = len(counts) >= 3 and counts[-1] == counts[-3] or c == 0
        if stable:
            s = _coarse_terms(f, filtration, r, q, inps, dm, k_bound)
            if s is not None:
                return step, s
        q = apply_sharp(f, q)
    raise Inconclusive("coarse splitting budget exhausted", budget)


def _coarse_terms(f, filtration, r, p, inps, dm, k_bound):
    tokens = p.tokens
    stratum = filtration.stratum(r)
    n = len(tokens)
    covered = [None] * n
    # lay INP spans over the remaining illegal height-r turns
    cyclic = isinstance(p, Circuit)
    doubled = tokens + tokens if cyclic else tokens
    for rec in inps:
        if rec.height != r:
            continue
        for w in (rec.path.tokens, reverse_word(rec.path.tokens)):
            m = len(w)
            limit = n if cyclic else n - m + 1
            for i in range(max(limit, 0)):
                if doubled[i:i + m] == w and all(covered[j % n] is None
                                                 for j in range(i, i + m)):
                    has_illegal = any(
                        not is_legal_turn(f, (inv(doubled[j]), doubled[j + 1]), dm)
                        for j in range(i, i + m - 1))
                    if has_illegal:
                        for j in range(i, i + m):
                            covered[j % n] = ("inp", i % n, m)
    cuts, tags = [], []
    pos = 0
    while pos < n:
        mark = covered[pos]
        if mark and mark[1] == pos:
            cuts.append(pos)
            tags.append("inp")
            pos += mark[2]
        elif mark:
            return None  # INP span out of phase; caller keeps iterating
        elif edge_name(tokens[pos]) in stratum:
            cuts.append(pos)
            tags.append("edge")
            pos += 1
        else:
            cuts.append(pos)
            tags.append("lower")
            while pos < n and edge_name(tokens[pos]) not in stratum and not covered[pos]:
                pos += 1
    if not cyclic:
        cuts = cuts[1:] if cuts and cuts[0] == 0 else cuts
    s = verify_splitting(f, p, cuts, k_bound, tags=tags)
    return s if s.ok else None
