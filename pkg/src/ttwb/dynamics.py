"""Iteration dynamics: tiles, nested attracting paths, principal vertices
and directions, and invariant ray prefixes with the exchange move across
an indivisible Nielsen path."""

from __future__ import annotations

from dataclasses import dataclass

from . import strata
from .graphs import Circuit, Path, edge_name, inv, reverse_word
from .maps import DirectionMap, apply_sharp, power
from .errors import (NoFixedInitialDirection, NoInteriorFixedPoint,
                     NoSharedInitialDirection, NotEG, NotEGEdge,
                     PrefixTooShort, WorkbenchError)


@dataclass(frozen=True)
class Tile:
    edge: str
    depth: int
    path: Path


def tile(f, filtration, r, edge, k):
    """The k-tile f^k_#(E) of an edge E in the EG stratum H_r."""
    cls = strata.classify_stratum(f, filtration, r)
    if not cls.is_eg() or edge not in filtration.stratum(r):
        raise NotEGEdge(f"{edge} is not an edge of an EG stratum {r}")
    p = Path(filtration.graph, (edge,))
    for _ in range(k):
        p = apply_sharp(f, p)
    return Tile(edge, k, p)


def _stratum_length(filtration, r, tokens):
    stratum = filtration.stratum(r)
    return sum(1 for t in tokens if edge_name(t) in stratum)


def tile_statistics(f, filtration, r, k_max=8):
    """Growth and nesting data for the tiles of H_r.

    Returns per-edge stratum-length sequences, successive ratios
    (converging to the stratum's expansion factor), the least power p
    with positive boolean transition matrix, and verified containments
    tile(k) inside tile(k+p).
    """
    cls = strata.classify_stratum(f, filtration, r)
    if not cls.is_eg():
        raise NotEG(f"stratum {r} is not EG")
    if not cls.aperiodic:
        raise WorkbenchError(f"stratum {r} transition matrix is not aperiodic")
    m = strata.transition_matrix(f, filtration, r)
    n = len(m.edges)
    mat = m._bool().astype(int)
    acc = mat.copy()
    p = 1
    while not (acc > 0).all():
        if p > (n - 1) ** 2 + 1:
            raise WorkbenchError("no positive power within the primitivity bound")
        acc = (acc @ mat > 0).astype(int)
        p += 1
    lengths, ratios, nesting = {}, {}, {}
    for e in m.edges:
        seq = [_stratum_length(filtration, r, tile(f, filtration, r, e, k).path.tokens)
               for k in range(k_max + 1)]
        lengths[e] = seq
        ratios[e] = [b / a for a, b in zip(seq, seq[1:]) if a]
        checks = []
        for k in range(max(k_max - p, 0) + 1):
            small = tile(f, filtration, r, e, k).path
            big = tile(f, filtration, r, e, k + p).path
            checks.append(small.is_subpath_of(big))
        nesting[e] = all(checks)
    return {
        "edges": m.edges,
        "eigenvalue": cls.eigenvalue,
        "positive_power": p,
        "lengths": lengths,
        "ratios": ratios,
        "nested": nesting,
    }


def attracting_basis(f, filtration, r, depth=6):
    """Nested paths gamma_0 c gamma_1 c ... attracting to the H_r lamination.

    Seeded at an edge E whose image crosses E in the same orientation
    (an interior fixed point); each successor is f_#, trimmed to start
    and end with H_r edges, with the nesting occurrence certified.
    """
    cls = strata.classify_stratum(f, filtration, r)
    if not cls.is_eg():
        raise NotEG(f"stratum {r} is not EG")
    graph = filtration.graph
    stratum = filtration.stratum(r)
    seed = next((e for e in sorted(stratum) if e in f.edge_images[e]), None)
    if seed is None:
        raise NoInteriorFixedPoint(f"no H_{r} edge image recrosses the edge forward")

    def trim(p):
        toks = p.tokens
        i, j = 0, len(toks)
        while i < j and edge_name(toks[i]) not in stratum:
            i += 1
        while j > i and edge_name(toks[j - 1]) not in stratum:
            j -= 1
        return p.subpath(i, j)

    gammas = [Path(graph, (seed,))]
    certificates = []
    for _ in range(depth):
        nxt = trim(apply_sharp(f, gammas[-1]))
        at = _occurrence(gammas[-1].tokens, nxt.tokens)
        if at is None:
            raise WorkbenchError("attracting paths failed to nest")
        certificates.append((at, at + len(gammas[-1])))
        gammas.append(nxt)
    return gammas, certificates


def _occurrence(small, big):
    n = len(small)
    for i in range(len(big) - n + 1):
        if big[i:i + n] == small:
            return i
    return None


@dataclass(frozen=True)
class PrincipalStructure:
    periodic_vertices: frozenset
    periodic_directions: frozenset
    principal_vertices: frozenset
    principal_directions: frozenset
    nonprincipal_reason: dict  # vertex -> reason string


def _periodic_vertices(f):
    out = set()
    for v in f.domain.vertices:
        seen = []
        x = v
        while x not in seen:
            seen.append(x)
            x = f.vertex_map[x]
        if v in seen[seen.index(x):]:
            out.add(v)
    return out


def principal_structure(f, filtration):
    """Principal vertices and directions.

    A periodic vertex is principal unless it has exactly two periodic
    directions, both in the same EG stratum.  Principal directions are
    the fixed initial directions of nonfixed nonlinear edges based at
    principal vertices.
    """
    graph = filtration.graph
    dm = DirectionMap(f)
    per_v = _periodic_vertices(f)
    classes = {r: strata.classify_stratum(f, filtration, r)
               for r in range(1, filtration.top + 1)}
    eg_strata = {e: r for r, cls in classes.items() if cls.is_eg()
                 for e in filtration.stratum(r)}
    linear = set()
    for cls in classes.values():
        for e, ecls in cls.neg_edges.items():
            if ecls.subtag == "linear":
                linear.add(e)
    principal = set()
    reasons = {}
    for v in per_v:
        pds = sorted(d for d in dm.periodic if graph.init_of(d) == v)
        if (len(pds) == 2
                and all(edge_name(d) in eg_strata for d in pds)
                and eg_strata[edge_name(pds[0])] == eg_strata[edge_name(pds[1])]):
            reasons[v] = "exactly two periodic directions in one EG stratum"
            continue
        principal.add(v)
    pdirs = set()
    for d in dm.fixed:
        e = edge_name(d)
        if f.edge_images[e] in ((e,), (inv(e),)):
            continue
        if e in linear:
            continue
        if graph.init_of(d) in principal:
            pdirs.add(d)
    return PrincipalStructure(frozenset(per_v), dm.periodic,
                              frozenset(principal), frozenset(pdirs), reasons)


@dataclass(frozen=True)
class RayPrefix:
    seed: str  # the initial fixed direction
    depth: int
    path: Path
    classification: str  # "fixed" | "linear" | "principal"
    companion: tuple | None = None  # (edge, axis tokens, sign) when linear


def ray_prefix(f, token, k):
    """Prefix E u f_#(u) ... f^{k-1}_#(u) of the invariant ray from a
    fixed direction E with f(E) = E u."""
    graph = f.domain
    img = f.image(token)
    if not img or img[0] != token:
        raise NoFixedInitialDirection(f"{token} is not a fixed direction")
    if img == (token,):
        return RayPrefix(token, k, Path(graph, (token,)), "fixed")
    u = img[1:]
    tokens = (token,)
    tail = u
    for _ in range(k):
        tokens = tokens + tail
        tail = apply_sharp(f, Path(graph, tail)).tokens
    from .graphs import reduce_word
    path = Path(graph, reduce_word(tokens))
    u_fixed = apply_sharp(f, Path(graph, u)).tokens == u
    if u_fixed:
        return RayPrefix(token, k, path, "linear",
                         companion=(edge_name(token), u, -1))
    return RayPrefix(token, k, path, "principal")


def exchange_across_inp(f, ray, rho):
    """Exchange a principal ray prefix across an indivisible Nielsen path.

    With rho = alpha . reverse(beta) meeting the ray exactly in alpha,
    the exchanged ray prefix is beta followed by (ray minus alpha).
    """
    if rho.decomposition is None:
        raise WorkbenchError("exchange needs an EG Nielsen path with decomposition")
    alpha, beta_rev = rho.decomposition
    a = alpha.tokens
    r_tokens = ray.path.tokens
    if r_tokens[:1] != a[:1]:
        raise NoSharedInitialDirection(f"{r_tokens[:1]} vs {a[:1]}")
    if len(r_tokens) <= len(a):
        raise PrefixTooShort(f"ray prefix of length {len(r_tokens)} "
                             f"inside alpha of length {len(a)}")
    if r_tokens[:len(a)] != a:
        raise WorkbenchError("ray leaves the Nielsen path before alpha ends")
    if r_tokens[len(a)] == rho.path.tokens[len(a)]:
        raise WorkbenchError("ray continues along the Nielsen path past alpha")
    beta = Path(ray.path.graph, reverse_word(beta_rev.tokens))
    new_tokens = beta.tokens + r_tokens[len(a):]
    from .graphs import reduce_word
    assert reduce_word(new_tokens) == new_tokens, "exchange created cancellation"
    return RayPrefix(new_tokens[0], ray.depth,
                     Path(ray.path.graph, new_tokens), "principal")
