import importlib.resources
import random

import pytest

from ttwb import cli
from ttwb.graphs import inv, rose
from ttwb.maps import GraphMap, compose, identity_map


def fixture_text(name):
    return (importlib.resources.files("ttwb") / "fixtures" / name).read_text()


def load_fixture(name):
    return cli.parse_input(fixture_text(name))


@pytest.fixture(scope="session")
def ex1():
    return load_fixture("ex1.ttw")


@pytest.fixture(scope="session")
def ex1_power():
    return load_fixture("ex1_power.ttw")


@pytest.fixture(scope="session")
def ex2():
    return load_fixture("ex2.ttw")


@pytest.fixture(scope="session")
def ex3():
    return load_fixture("ex3.ttw")


@pytest.fixture(scope="session")
def ex4():
    return load_fixture("ex4.ttw")


@pytest.fixture(scope="session")
def synthetic():
    return load_fixture("synthetic_model.ttw")


def reduced_words(graph, max_len, closed_only=False, base=None):
    """All nonempty reduced edge words of length <= max_len."""
    out = []
    layer = [(d,) for d in sorted(graph.directions())
             if base is None or graph.init_of(d) == base]
    while layer:
        for w in layer:
            if not closed_only or graph.term_of(w[-1]) == graph.init_of(w[0]):
                out.append(w)
        nxt = []
        for w in layer:
            if len(w) >= max_len:
                continue
            for d in sorted(graph.directions()):
                if graph.init_of(d) == graph.term_of(w[-1]) and d != inv(w[-1]):
                    nxt.append(w + (d,))
        layer = nxt
    return out


def random_equivalence(rng, labels, moves=4):
    """Random self homotopy equivalence of a rose: a composition of inversions
    and elementary transvections x -> xy."""
    graph = rose(labels)
    f = identity_map(graph)
    for _ in range(moves):
        x = rng.choice(labels)
        kind = rng.randrange(3)
        images = {e: (e,) for e in labels}
        if kind == 0:
            images[x] = (inv(x),)
        else:
            y = rng.choice([l for l in labels if l != x] or [x])
            if y == x:
                continue
            t = y if rng.randrange(2) else inv(y)
            images[x] = (x, t) if kind == 1 else (t, x)
        f = compose(GraphMap(graph, graph, images), f)
    return f


def random_reduced_word(rng, graph, length):
    tokens = []
    while len(tokens) < length:
        options = [d for d in sorted(graph.directions())
                   if not tokens or d != inv(tokens[-1])]
        tokens.append(rng.choice(options))
    return tuple(tokens)
