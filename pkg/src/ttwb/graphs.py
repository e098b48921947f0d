"""Finite graphs, oriented edges, reduced edge paths, and circuits.

Oriented edges are plain string tokens: ``a`` traverses edge ``a``
forwards, ``~a`` traverses it backwards.  Paths and circuits are thin
immutable wrappers around token tuples, pinned to a graph so endpoints
are always available.  A trivial path carries an explicit base vertex so
concatenation stays total.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MismatchedEndpoints, TrivialCircuit


def inv(token):
    """Reverse of an oriented-edge token (an involution)."""
    return token[1:] if token.startswith("~") else "~" + token


def edge_name(token):
    return token[1:] if token.startswith("~") else token


def is_forward(token):
    return not token.startswith("~")


def token_key(token):
    """Fixed total order on oriented-edge tokens: by name, forward first."""
    return (edge_name(token), 0 if is_forward(token) else 1)


def reverse_word(tokens):
    return tuple(inv(t) for t in reversed(tokens))


def reduce_word(tokens):
    """Freely reduce a token sequence (stack scan)."""
    out = []
    for t in tokens:
        if out and out[-1] == inv(t):
            out.pop()
        else:
            out.append(t)
    return tuple(out)


def cyclic_reduce_word(tokens):
    w = list(reduce_word(tokens))
    while len(w) >= 2 and w[0] == inv(w[-1]):
        w = w[1:-1]
    return tuple(w)


def least_rotation(tokens):
    """Lexicographically least rotation under the fixed token order."""
    if not tokens:
        return tokens
    key = tuple(token_key(t) for t in tokens)
    best = min(range(len(tokens)), key=lambda r: key[r:] + key[:r])
    return tokens[best:] + tokens[:best]


class MarkedGraph:
    """Finite graph: named vertices and named edges with endpoints.

    ``edges`` maps edge name -> (initial vertex, terminal vertex).
    """

    def __init__(self, vertices, edges):
        self.vertices = frozenset(vertices)
        self.edges = dict(edges)
        for e, (u, v) in self.edges.items():
            if u not in self.vertices or v not in self.vertices:
                raise ValueError(f"edge {e} has undeclared endpoint")

    def init_of(self, token):
        u, v = self.edges[edge_name(token)]
        return u if is_forward(token) else v

    def term_of(self, token):
        u, v = self.edges[edge_name(token)]
        return v if is_forward(token) else u

    def directions(self):
        """All oriented-edge tokens, in canonical order."""
        out = []
        for e in sorted(self.edges):
            out.append(e)
            out.append("~" + e)
        return out

    def directions_at(self, vertex):
        return [d for d in self.directions() if self.init_of(d) == vertex]

    def rank(self):
        return len(self.edges) - len(self.vertices) + len(self.components())

    def components(self):
        """Vertex sets of connected components."""
        adj = {v: set() for v in self.vertices}
        for e, (u, v) in self.edges.items():
            adj[u].add(v)
            adj[v].add(u)
        seen, comps = set(), []
        for v in sorted(self.vertices):
            if v in seen:
                continue
            stack, comp = [v], set()
            while stack:
                x = stack.pop()
                if x in comp:
                    continue
                comp.add(x)
                stack.extend(adj[x] - comp)
            seen |= comp
            comps.append(frozenset(comp))
        return comps

    def is_path_word(self, tokens):
        for a, b in zip(tokens, tokens[1:]):
            if self.term_of(a) != self.init_of(b):
                return False
        return True

    def __eq__(self, other):
        return (isinstance(other, MarkedGraph)
                and self.vertices == other.vertices
                and self.edges == other.edges)

    def __hash__(self):
        return hash((self.vertices, tuple(sorted(self.edges.items()))))

    def __repr__(self):
        return f"MarkedGraph({len(self.vertices)} vertices, {len(self.edges)} edges)"


@dataclass(frozen=True)
class Path:
    """Reduced edge path.  Trivial paths store their base vertex."""

    graph: MarkedGraph = field(compare=False)
    tokens: tuple = ()
    base: str | None = None

    def __post_init__(self):
        if self.tokens:
            object.__setattr__(self, "base", None)
        elif self.base is None:
            raise ValueError("trivial path needs a base vertex")

    @property
    def start(self):
        return self.graph.init_of(self.tokens[0]) if self.tokens else self.base

    @property
    def end(self):
        return self.graph.term_of(self.tokens[-1]) if self.tokens else self.base

    def is_trivial(self):
        return not self.tokens

    def is_closed(self):
        return self.start == self.end

    def reverse(self):
        return Path(self.graph, reverse_word(self.tokens), self.base)

    def subpath(self, i, j):
        sub = self.tokens[i:j]
        if sub:
            return Path(self.graph, sub)
        pos = self.graph.term_of(self.tokens[i - 1]) if i > 0 else self.start
        return Path(self.graph, (), pos)

    def is_subpath_of(self, other):
        """Subpath as unoriented immersed segments: forward or reversed."""
        if not self.tokens:
            return True
        for w in (self.tokens, reverse_word(self.tokens)):
            n = len(w)
            for i in range(len(other.tokens) - n + 1):
                if other.tokens[i:i + n] == w:
                    return True
        return False

    def __len__(self):
        return len(self.tokens)

    def __repr__(self):
        return "Path(" + (" ".join(self.tokens) if self.tokens else f". at {self.base}") + ")"


@dataclass(frozen=True)
class Circuit:
    """Cyclically reduced circuit stored in canonical rotation."""

    graph: MarkedGraph = field(compare=False)
    tokens: tuple = ()

    def __post_init__(self):
        if not self.tokens:
            raise TrivialCircuit("empty circuit")
        object.__setattr__(self, "tokens", least_rotation(self.tokens))

    def reverse(self):
        return Circuit(self.graph, reverse_word(self.tokens))

    def unoriented_key(self):
        """Canonical token tuple minimized over both orientations."""
        rev = least_rotation(reverse_word(self.tokens))
        key = tuple(token_key(t) for t in self.tokens)
        rkey = tuple(token_key(t) for t in rev)
        return self.tokens if key <= rkey else rev

    def rotations(self):
        w = self.tokens
        return [w[i:] + w[:i] for i in range(len(w))]

    def power(self, m):
        return Circuit(self.graph, self.tokens * m)

    def __len__(self):
        return len(self.tokens)

    def __repr__(self):
        return "Circuit(" + " ".join(self.tokens) + ")"


def tighten_path(graph, word, base=None):
    """Reduce a token word to the unique reduced path rel endpoints."""
    word = tuple(word)
    if not graph.is_path_word(word):
        raise MismatchedEndpoints(f"word does not concatenate: {word}")
    reduced = reduce_word(word)
    if reduced:
        return Path(graph, reduced)
    pos = graph.init_of(word[0]) if word else base
    if pos is None:
        raise MismatchedEndpoints("trivial tightening with no base vertex")
    return Path(graph, (), pos)


def tighten_circuit(graph, word):
    """Cyclically reduce a closed token word to its canonical circuit."""
    word = tuple(word)
    if word and (not graph.is_path_word(word)
                 or graph.term_of(word[-1]) != graph.init_of(word[0])):
        raise MismatchedEndpoints(f"cyclic word does not concatenate: {word}")
    reduced = cyclic_reduce_word(word)
    if not reduced:
        raise TrivialCircuit(f"circuit reduces to a point: {word}")
    return Circuit(graph, reduced)


def is_root_free(circuit):
    """True iff the cyclic word is not a proper power."""
    w = circuit.tokens
    n = len(w)
    for d in range(1, n):
        if n % d == 0 and w[:d] * (n // d) == w:
            return False
    return True


def subgraph_vertices(graph, edge_set):
    verts = set()
    for e in edge_set:
        u, v = graph.edges[e]
        verts.update((u, v))
    return verts


def core_subgraph(graph, edge_set):
    """Iteratively delete valence-1 vertices; returns the surviving edge set."""
    edges = set(edge_set)
    while True:
        valence = {}
        for e in edges:
            u, v = graph.edges[e]
            valence[u] = valence.get(u, 0) + 1
            valence[v] = valence.get(v, 0) + 1
        hanging = {v for v, k in valence.items() if k == 1}
        if not hanging:
            return frozenset(edges)
        edges = {e for e in edges
                 if graph.edges[e][0] not in hanging and graph.edges[e][1] not in hanging}


def subgraph_components(graph, edge_set):
    """Connected components of a subgraph, as lists of edge names."""
    edge_set = set(edge_set)
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(x, y):
        parent.setdefault(x, x)
        parent.setdefault(y, y)
        parent[find(x)] = find(y)

    for e in edge_set:
        u, v = graph.edges[e]
        union(u, v)
    comps = {}
    for e in sorted(edge_set):
        comps.setdefault(find(graph.edges[e][0]), []).append(e)
    return list(comps.values())


def rose(labels):
    """Convenience: one-vertex graph with the given loop labels."""
    return MarkedGraph({"v"}, {x: ("v", "v") for x in labels})
