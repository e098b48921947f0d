import pytest

from ttwb import maps, nielsen
from ttwb.errors import NotEG
from ttwb.graphs import Circuit, Path, reverse_word
from ttwb.maps import apply_sharp, power
from ttwb.nielsen import (find_inps, fixed_classes_of_height, geometricity,
                          is_nielsen_path)


def test_is_nielsen_path_ex1(ex1):
    f2 = power(ex1.map, 2)
    rho = Path(ex1.graph, ("~a", "~b", "a", "b"))
    assert is_nielsen_path(f2, rho) == 1
    assert is_nielsen_path(ex1.map, rho) == 2
    assert is_nielsen_path(f2, Path(ex1.graph, ("a",))) is None


def test_find_inps_ex1_square(ex1):
    f2 = power(ex1.map, 2)
    found = find_inps(f2, ex1.filtration, 1)
    assert found.complete
    assert len(found) == 1
    rec = found[0]
    assert rec.path.tokens == ("~a", "~b", "a", "b")
    assert rec.period == 1
    assert rec.closed
    assert rec.indivisible
    assert rec.crossing_dict() == {"a": 2, "b": 2}
    assert rec.verify(f2)
    alpha, beta = rec.decomposition
    assert alpha.tokens + beta.tokens == rec.path.tokens
    # the junction turn is the unique illegal turn of the path
    assert len(alpha.tokens) == 2


def test_find_inps_orientation_dedupe(ex1):
    f2 = power(ex1.map, 2)
    found = find_inps(f2, ex1.filtration, 1)
    keys = [rec.unoriented_tokens() for rec in found]
    assert len(keys) == len(set(keys))


def test_find_inps_ex2_none(ex2):
    found = find_inps(ex2.map, ex2.filtration, 1)
    assert found.complete
    assert len(found) == 0


def test_find_inps_ex3_linear_family(ex3):
    found = find_inps(ex3.map, ex3.filtration, 2)
    words = sorted(rec.path.tokens for rec in found)
    assert words == [("e", "a", "~e"), ("e", "~a", "~e")]
    for rec in found:
        assert rec.verify(ex3.map)
        assert rec.closed


def test_find_inps_ex4_period_two(ex4):
    found = find_inps(ex4.map, ex4.filtration, 2)
    assert found.complete
    assert len(found) == 1
    rec = found[0]
    assert rec.period == 2
    assert rec.closed
    assert rec.crossing_dict() == {"b": 2, "c": 2}
    assert rec.verify(ex4.map)


def test_crossing_dichotomy_holds_on_corpus(ex1, ex3, ex4):
    f2 = power(ex1.map, 2)
    for inp, f, r in ((ex1, f2, 1), (ex4, ex4.map, 2)):
        for rec in find_inps(f, inp.filtration, r):
            counts = [c for _, c in rec.crossings]
            if rec.closed:
                assert all(c == 2 for c in counts)
            else:
                assert any(c == 1 for c in counts)


def test_geometricity_verdicts(ex1, ex2, ex4):
    f2 = power(ex1.map, 2)
    assert geometricity(f2, ex1.filtration, 1).tag == "geometric"
    assert geometricity(ex1.map, ex1.filtration, 1).tag == "geometric"
    assert geometricity(ex2.map, ex2.filtration, 1).tag == "nongeometric"
    assert geometricity(ex4.map, ex4.filtration, 2).tag == "geometric"


def test_geometricity_requires_eg(ex3):
    with pytest.raises(NotEG):
        geometricity(ex3.map, ex3.filtration, 2)


def test_geometricity_inconclusive_under_small_budget(ex1):
    f2 = power(ex1.map, 2)
    verdict = geometricity(f2, ex1.filtration, 1, length_bound=3)
    assert verdict.tag in ("geometric", "inconclusive")


def test_fixed_classes_of_height(ex1):
    f2 = power(ex1.map, 2)
    fixed = fixed_classes_of_height(f2, ex1.filtration, 1, length_bound=4)
    keys = {c.unoriented_key() for c in fixed}
    rho = Circuit(ex1.graph, ("~a", "~b", "a", "b"))
    assert rho.unoriented_key() in keys
    for c in fixed:
        assert apply_sharp(f2, c) == c
