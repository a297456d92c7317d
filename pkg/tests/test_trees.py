import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from corpus import random_tree
from terlab import trees
from terlab.trees import TreeError

seeds = st.integers(0, 10 ** 6)


def aut_count(tree, x):
    """Automorphisms of the cone at x: permute identical child cones."""
    kids = tree.children(x)
    n = 1
    for c in kids:
        n *= aut_count(tree, c)
    for k in Counter(oracles.canon(tree, c) for c in kids).values():
        n *= math.factorial(k)
    return n


def test_full_tree_names():
    t = trees.full_tree([2, 2], "B2")
    assert t.nodes == ("root", "a", "b", "aa", "ab", "ba", "bb")
    assert t.level_sizes() == (1, 2, 4)
    assert t.frontier() == ("aa", "ab", "ba", "bb")
    assert t.chain("ab") == ("root", "a", "ab")
    assert t.cone("b") == ("b", "ba", "bb")


def test_validate_normal_b2():
    assert trees.validate_normal(trees.full_tree([2, 2])).valid


def test_splitting_violation():
    t = trees.full_tree([2, 1])
    rep = trees.validate_normal(t)
    assert rep.clauses() == ["splitting"]
    assert rep.violations[0].message == "node a has 1 child at level 1→2"
    assert trees.validate_normal(t, strict=False).valid


def test_bad_limit_level():
    t = trees.full_tree([2, 2], limits=(0, 3))
    assert trees.validate_normal(t).clauses() == ["limits"]


def test_construction_errors():
    with pytest.raises(TreeError, match="duplicate"):
        trees.LevelledTree([("r", 0, None), ("r", 1, "r")])
    with pytest.raises(TreeError, match="dangling"):
        trees.LevelledTree([("r", 0, None), ("x", 1, "y")])


def test_restrict_and_relativize():
    t = trees.full_tree([2, 2, 2], limits=(2,))
    r = trees.restrict(t, [0, 2, 3])
    assert r.level_sizes() == (1, 4, 8) and r.parent("aab") == "aa" and r.limits == {1}
    c = trees.relativize(t, "b")
    assert c.root == "b" and c.level_sizes() == (1, 2, 4) and c.limits == {1}
    with pytest.raises(TreeError):
        trees.restrict(t, [1, 2])


def test_product_and_sum():
    b = trees.full_tree([2, 2], "B2")
    t3 = trees.full_tree([3, 2], "T3")
    p = trees.tree_product(b, t3)
    assert p.level_sizes() == (1, 6, 24)
    assert p.parent("(ab*cb)") == "(a*c)"
    s = trees.tree_sum(b, t3)
    assert s.level_sizes() == (1, 2, 5, 10)
    assert s.parent("1.ca") == "1.c"
    with pytest.raises(TreeError):
        trees.tree_product(b, trees.full_tree([2]))


def test_b2_automorphisms():
    autos, truncated = trees.enumerate_automorphisms(trees.full_tree([2, 2]))
    assert len(autos) == 8 and not truncated
    assert autos[0].is_identity()


def test_automorphism_limit():
    autos, truncated = trees.enumerate_automorphisms(trees.full_tree([3, 3]), limit=10)
    assert len(autos) == 10 and truncated


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_automorphism_count_matches_oracle(seed):
    t = random_tree(random.Random(seed), random.Random(seed).randint(2, 4), 1, 3)
    autos, truncated = trees.enumerate_automorphisms(t, limit=5000)
    want = aut_count(t, t.root)
    assert truncated == (want > 5000)
    if not truncated:
        assert len(autos) == want
        keys = {a.key() for a in autos}
        assert len(keys) == want
        for a in autos[:6]:
            assert trees.is_automorphism(t, a.mapping)
            for b in autos[:6]:
                assert a.compose(b).key() in keys
            assert a.inverse().key() in keys


@settings(max_examples=60, deadline=None)
@given(seeds, seeds)
def test_shape_codes_match_canonical_forms(s1, s2):
    a = random_tree(random.Random(s1), 3, 1, 3, "A")
    b = random_tree(random.Random(s2), 3, 1, 3, "B")
    table = trees.ShapeTable()
    ca, cb = table.codes(a), table.codes(b)
    assert (ca[a.root] == cb[b.root]) == oracles.isomorphic(a, b)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_product_of_normal_trees_is_normal(seed):
    rng = random.Random(seed)
    h = rng.randint(2, 4)
    a = random_tree(rng, h, 2, 3 if h < 4 else 2, "A")
    b = random_tree(rng, h, 2, 2, "B")
    assert trees.validate_normal(a).valid and trees.validate_normal(b).valid
    assert trees.validate_normal(trees.tree_product(a, b)).valid
    assert trees.validate_normal(trees.tree_sum(a, b)).valid
