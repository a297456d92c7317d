import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from terlab import boolalg, largeness, ter, trees
from terlab.boolalg import BaAutomorphism, FiniteBooleanAlgebra, SubalgebraPartition


@pytest.fixture
def p4():
    B = FiniteBooleanAlgebra(["aa", "ab", "ba", "bb"], "P4")
    return B, SubalgebraPartition(B, [["aa", "ab"], ["ba", "bb"]])


def random_blocks(rng, n):
    B = FiniteBooleanAlgebra([f"x{i}" for i in range(n)])
    label = [rng.randrange(max(1, n // 2)) for _ in range(n)]
    blocks = {}
    for i, k in enumerate(label):
        blocks[k] = blocks.get(k, 0) | 1 << i
    return B, SubalgebraPartition(B, blocks.values())


def test_p4_local_equality(p4):
    B, A = p4
    le = largeness.local_equality_set(B, A)
    assert le.x_count == 9 and len(le.y) == 4 and le.ok
    assert le.h_of_y == (B.full,)


def test_p4_certificate(p4):
    B, A = p4
    cert = largeness.mu_large(B, A)
    assert [B.members(w) for w in cert.witness] == [("aa", "ba")]
    assert cert.generated and cert.size == 1
    assert not largeness.mu_large(B, A, 0)
    assert largeness.mu_large(B, A, 0).reason == "needs 1 > 0"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_certificate_size_is_optimal(seed, n):
    B, A = random_blocks(random.Random(seed), n)
    cert = largeness.mu_large(B, A)
    assert cert.generated and oracles.is_antichain(cert.witness)
    assert all(largeness.in_x(A, w) for w in cert.witness)
    need = cert.size
    if need:
        smaller = [w for w in itertools.combinations(range(1, 1 << n), need - 1) if oracles.is_antichain(w)]
        assert not any(oracles.generates(n, list(A.masks) + list(w)) for w in smaller)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 8))
def test_local_equality_checks_hold(seed, n):
    B, A = random_blocks(random.Random(seed), n)
    le = largeness.local_equality_set(B, A)
    assert le.ok
    assert le.x_count == sum(1 for x in range(1 << n) if all(bin(x & m).count("1") <= 1 for m in A.masks))


def test_frolik_cycle(p4):
    B, _ = p4
    f = BaAutomorphism(B, {"aa": "ab", "ab": "ba", "ba": "aa"})
    parts = largeness.frolik_partition(B, f)
    assert [B.members(p) for p in parts] == [("bb",), ("aa",), ("ab",), ("ba",)]
    assert all(largeness.frolik_clauses(B, f, parts).values())


def test_swap_fixed_points(p4):
    B, _ = p4
    swap = BaAutomorphism(B, {"aa": "ab", "ab": "aa"})
    fp = largeness.fixed_point_subalgebra(B, [swap])
    assert fp.partition.blocks == (("aa", "ab"), ("ba",), ("bb",))
    assert [B.members(w) for w in fp.certificate.witness] == [("aa",)]
    assert fp.group_size == 2 and fp.replay


@pytest.mark.parametrize("n, count", [(1, 1), (2, 2), (3, 6), (4, 30), (5, 156)])
def test_subgroup_counts(n, count):
    # every subgroup of Sym(n) for n <= 5 needs at most two generators
    _, groups = largeness.generated_subgroups(n)
    assert len(groups) == count


def test_group_closure_matches_generated_group():
    pt = largeness.PermutationTable(4)
    B = FiniteBooleanAlgebra(list("pqrs"))
    rng = random.Random(4)
    for _ in range(20):
        gens = [rng.randrange(len(pt)) for _ in range(2)]
        autos = [BaAutomorphism.from_perm(B, pt.perms[g].tolist()) for g in gens]
        want = sorted(tuple(a.perm) for a in largeness.generated_group(B, autos))
        got = sorted(tuple(pt.perms[i].tolist()) for i in pt.closure(gens))
        assert got == want


def test_decomposition_modes():
    B = FiniteBooleanAlgebra(list("pqrst"))
    A = SubalgebraPartition(B, [["p", "q", "r"], ["s", "t"]])
    assert not largeness.large_decomposition(B, A, "Y")
    d = largeness.large_decomposition(B, A, "X")
    assert d.iso and d.f == {B.mask(["s", "t"]): 2, B.mask(["p", "q", "r"]): 3}
    with pytest.raises(ValueError):
        largeness.large_decomposition(B, A, "Z")


def test_decomposition_detects_bad_witness(p4):
    B, A = p4
    assert largeness.verify_decomposition(B, A, [B.full], [(B.mask(["aa", "ba"]), B.mask(["ab", "bb"]))])
    assert not largeness.verify_decomposition(B, A, [B.full], [(B.mask(["aa", "ba"]), B.mask(["aa", "bb"]))])


def test_nice_part_split():
    t = trees.full_tree([4, 4, 4], limits=(2,))
    ns = largeness.nice_part_split(ter.block_ter(t))
    B = boolalg.ro_algebra(t)
    assert ns.b_nice == B.full and ns.b_rest == 0 and ns.hereditary
    ds = ter.dense_split(ter.block_ter(t), 2)
    ns = largeness.nice_part_split(ds.ter, gamma=1)
    assert ns.b_nice == 0 and ns.b_rest == B.full
