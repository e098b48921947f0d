import itertools
import random

import pytest

from conftest import random_reduced_word, reduced_words
from ttwb import stallings
from ttwb.errors import UnsupportedRepresentation
from ttwb.graphs import Circuit, rose
from ttwb.stallings import (SubgroupSystem, carries_class, carries_system,
                            fiber_product, from_generators, from_subgraph,
                            intersect_components, is_malnormal,
                            meet_subgraph_systems)

F2 = rose(["a", "b"])
F3 = rose(["a", "b", "c"])


def based(words, ambient):
    return from_generators(words, ambient, keep_base=True)


def member(immersion, word):
    """Membership in the based subgroup via the unique lift."""
    return immersion.lift(immersion.base, word) == immersion.base


def test_fold_single_generator():
    c = based([("a",)], F2)
    assert c.rank() == 1
    assert member(c, ("a", "a", "a"))
    assert not member(c, ("b",))


def test_fold_confluence_generator_order():
    words = [("a", "b"), ("b", "a", "a"), ("~b", "a", "~b")]
    codes = set()
    for perm in itertools.permutations(words):
        codes.add(from_generators(list(perm), F2,
                                  keep_base=False).canonical_code())
    assert len(codes) == 1


def test_membership_matches_bruteforce():
    rng = random.Random(3)
    for _ in range(20):
        gens = [random_reduced_word(rng, F2, rng.randrange(1, 4))
                for _ in range(2)]
        c = based(gens, F2)
        # oracle: all products of <= 3 generator letters, freely reduced
        from ttwb.graphs import reduce_word
        elements = {()}
        for _ in range(3):
            elements |= {reduce_word(e + g) for e in elements
                         for w in gens for g in (w, tuple(reversed([
                             "~" + t if not t.startswith("~") else t[1:]
                             for t in w])))}
        for w in sorted(elements):
            assert member(c, w), (gens, w)


def test_carries_class_examples():
    sys_a = SubgroupSystem(F2, [from_generators([("a",)], F2, keep_base=False)])
    assert carries_class(sys_a, Circuit(F2, ("a",) * 3))
    assert not carries_class(sys_a, Circuit(F2, ("b",)))
    sys_sq = SubgroupSystem(F2, [from_generators([("a", "a"), ("b",)], F2,
                                                 keep_base=False)])
    # a itself is not in <a^2, b>, but a^2 is: carried via a power
    assert carries_class(sys_sq, Circuit(F2, ("a",)))


def test_intersect_examples():
    a = from_generators([("a",)], F2, keep_base=False)
    b = from_generators([("b",)], F2, keep_base=False)
    assert len(intersect_components(a, b)) == 0
    big = from_generators([("a", "a"), ("b",)], F2, keep_base=False)
    system = intersect_components(a, big)
    assert len(system) == 1
    assert system.components[0].basis_words() == [("a", "a")]
    diag = intersect_components(big, big)
    assert any(c == big for c in diag.components)


def test_intersection_matches_bruteforce_membership():
    rng = random.Random(9)
    words8 = reduced_words(F2, 6)
    for _ in range(20):
        ga = [random_reduced_word(rng, F2, rng.randrange(1, 4))]
        gb = [random_reduced_word(rng, F2, rng.randrange(1, 4)),
              random_reduced_word(rng, F2, rng.randrange(1, 4))]
        a, b = based(ga, F2), based(gb, F2)
        fp = fiber_product(a, b)
        base = (a.base, b.base)
        for w in words8:
            both = member(a, w) and member(b, w)
            lifted = fp.lift(base, w) == base
            assert both == lifted, (ga, gb, w)


def test_malnormal_examples():
    assert is_malnormal(SubgroupSystem(F2, []))[0]
    free_factors = SubgroupSystem(F2, [
        from_generators([("a",)], F2, keep_base=False),
        from_generators([("b",)], F2, keep_base=False)])
    ok, witness = is_malnormal(free_factors)
    assert ok and witness is None
    sq = SubgroupSystem(F2, [from_generators([("a", "a")], F2, keep_base=False)])
    ok, witness = is_malnormal(sq)
    assert not ok
    assert witness == ("a", "a")


def test_subgraph_free_factor_systems_malnormal():
    g = rose(["a", "b", "c"])
    for edges in [{"a"}, {"a", "b"}, {"b", "c"}]:
        system = from_subgraph(g, frozenset(edges))
        assert is_malnormal(system)[0], edges


def test_carries_system_partial_order():
    sa = SubgroupSystem(F2, [from_generators([("a",)], F2, keep_base=False)])
    sb = SubgroupSystem(F2, [from_generators([("b",)], F2, keep_base=False)])
    sab = SubgroupSystem(F2, [from_generators([("a",), ("b",)], F2,
                                              keep_base=False)])
    assert carries_system(sa, sa)
    assert carries_system(sa, sab)
    assert not carries_system(sa, sb)
    assert not carries_system(sab, sa)
    # transitivity on a chain
    s_aa = SubgroupSystem(F2, [from_generators([("a", "a")], F2,
                                               keep_base=False)])
    assert carries_system(s_aa, sa) and carries_system(sa, sab)
    assert carries_system(s_aa, sab)


def test_meet_examples():
    g = rose(["a", "b", "c"])
    m = meet_subgraph_systems(g, {"a", "b"}, {"b", "c"})
    assert len(m) == 1
    assert m.components[0].rank() == 1
    assert len(meet_subgraph_systems(g, {"a"}, {"c"})) == 0
    sub = meet_subgraph_systems(g, {"a"}, {"a", "b"})
    assert sub == from_subgraph(g, frozenset({"a"}))


def test_meet_rejects_non_subgraph():
    with pytest.raises(UnsupportedRepresentation):
        meet_subgraph_systems(F2, {"z"}, {"a"})


def test_component_ranks_bounded():
    rng = random.Random(17)
    for _ in range(10):
        gens = [random_reduced_word(rng, F3, rng.randrange(1, 5))
                for _ in range(rng.randrange(1, 4))]
        c = from_generators(gens, F3, keep_base=False)
        assert c.rank() <= F3.rank()
