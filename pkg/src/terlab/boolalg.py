"""Finite complete Boolean algebras as powersets of atoms.

Elements are int bitmasks over the atom list.  A complete subalgebra is a
partition of the atoms (its blocks are the atoms of the subalgebra).
"""
from __future__ import annotations

from dataclasses import dataclass


class AlgebraError(ValueError):
    pass


def bits(mask):
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def popcount(mask):
    return bin(mask).count("1")


class FiniteBooleanAlgebra:
    __slots__ = ("name", "atoms", "index", "full", "embedding")

    def __init__(self, atoms, name="B", embedding=None):
        atoms = tuple(str(a) for a in atoms)
        if not atoms:
            raise AlgebraError("algebra needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise AlgebraError("atoms must be distinct")
        self.name = name
        self.atoms = atoms
        self.index = {a: i for i, a in enumerate(atoms)}
        self.full = (1 << len(atoms)) - 1
        self.embedding = embedding

    def __len__(self):
        return len(self.atoms)

    def mask(self, ids):
        m = 0
        for a in ids:
            try:
                m |= 1 << self.index[a]
            except KeyError:
                raise AlgebraError(f"unknown atom {a}") from None
        return m

    def members(self, mask):
        return tuple(self.atoms[i] for i in bits(mask))

    def atom(self, a):
        return 1 << self.index[a]

    def elements(self):
        return range(self.full + 1)

    def complement(self, m):
        return self.full & ~m

    def __eq__(self, other):
        return isinstance(other, FiniteBooleanAlgebra) and self.atoms == other.atoms

    def __hash__(self):
        return hash(self.atoms)

    def __repr__(self):
        return f"FiniteBooleanAlgebra({self.name!r}, {len(self.atoms)} atoms)"


class SubalgebraPartition:
    """A complete subalgebra given by the partition of atoms into its atoms."""

    __slots__ = ("algebra", "masks", "block_of")

    def __init__(self, algebra, blocks):
        masks = []
        for b in blocks:
            m = b if isinstance(b, int) else algebra.mask(b)
            if m == 0:
                raise AlgebraError("empty block")
            masks.append(m)
        seen = 0
        for m in masks:
            if seen & m:
                raise AlgebraError("blocks overlap")
            seen |= m
        # atoms not mentioned become singleton blocks
        for i in bits(algebra.full & ~seen):
            masks.append(1 << i)
        masks.sort(key=lambda m: (m & -m).bit_length())
        self.algebra = algebra
        self.masks = tuple(masks)
        self.block_of = [0] * len(algebra.atoms)
        for k, m in enumerate(self.masks):
            for i in bits(m):
                self.block_of[i] = k

    @property
    def blocks(self):
        return tuple(self.algebra.members(m) for m in self.masks)

    def __len__(self):
        return len(self.masks)

    def contains(self, element):
        """True if the element is a union of blocks."""
        return all((element & m) in (0, m) for m in self.masks)

    def elements(self):
        k = len(self.masks)
        for sel in range(1 << k):
            yield self.union(sel)

    def union(self, selector):
        out = 0
        for i in bits(selector):
            out |= self.masks[i]
        return out

    def refines(self, other):
        """Every block of self lies inside a block of other (self is the finer one)."""
        return all(any(m & o == m for o in other.masks) for m in self.masks)

    def __eq__(self, other):
        return isinstance(other, SubalgebraPartition) and self.masks == other.masks and self.algebra == other.algebra

    def __hash__(self):
        return hash(self.masks)

    def __repr__(self):
        return f"SubalgebraPartition({self.blocks})"


def ro_algebra(tree):
    """Atoms are the maximal nodes; a node embeds as its set of maximal descendants."""
    atoms = tree.maximal()
    idx = {a: i for i, a in enumerate(atoms)}
    emb = {}
    for x in reversed(tree.nodes):
        kids = tree.children(x)
        if kids:
            m = 0
            for c in kids:
                m |= emb[c]
            emb[x] = m
        else:
            emb[x] = 1 << idx[x]
    return FiniteBooleanAlgebra(atoms, name=f"RO({tree.name})", embedding=emb)


def complete_subalgebra(B, generators):
    """Partition into atoms of the subalgebra generated by ``generators``."""
    signature = {}
    for i in range(len(B.atoms)):
        sig = tuple((g >> i) & 1 for g in generators)
        signature.setdefault(sig, 0)
        signature[sig] |= 1 << i
    return SubalgebraPartition(B, signature.values())


def upper_projection(B, A, b):
    """Least element of A above b: the union of all blocks meeting b."""
    out = 0
    for m in A.masks:
        if m & b:
            out |= m
    return out


def lower_projection(B, A, b):
    """Greatest element of A below b (union of blocks contained in b)."""
    out = 0
    for m in A.masks:
        if m & b == m:
            out |= m
    return out


def relative_algebra(B, b, A=None):
    """The algebra B restricted to b, and, if given, the trace of A on b."""
    if b == 0:
        raise AlgebraError("relative algebra of the zero element")
    sub = FiniteBooleanAlgebra(B.members(b), name=f"{B.name}|b")
    if A is None:
        return sub, None
    traces = [sub.mask(B.members(m & b)) for m in A.masks if m & b]
    return sub, SubalgebraPartition(sub, traces)


@dataclass(frozen=True)
class ProductAlgebra:
    algebra: FiniteBooleanAlgebra
    factors: tuple
    offsets: tuple

    def inject(self, i, element):
        """Element of factor i placed in coordinate i (zero elsewhere)."""
        return element << self.offsets[i]

    def tuple_element(self, parts):
        out = 0
        for i, e in enumerate(parts):
            out |= self.inject(i, e)
        return out

    def diagonal(self):
        """Subalgebra {(b, b)} of a two-factor product with equal-size factors."""
        if len(self.factors) != 2 or len(self.factors[0]) != len(self.factors[1]):
            raise AlgebraError("diagonal needs two factors with the same number of atoms")
        n = len(self.factors[0])
        blocks = [(1 << i) | (1 << (n + i)) for i in range(n)]
        return SubalgebraPartition(self.algebra, blocks)


def product_algebra(factors, name=None):
    factors = tuple(factors)
    if not factors:
        raise AlgebraError("product of an empty list")
    atoms, offsets, off = [], [], 0
    for i, f in enumerate(factors):
        offsets.append(off)
        off += len(f)
        atoms.extend(a if len(factors) == 1 else f"{i}.{a}" for a in f.atoms)
    alg = FiniteBooleanAlgebra(atoms, name or "x".join(f.name for f in factors))
    return ProductAlgebra(alg, factors, tuple(offsets))


class BaAutomorphism:
    """Automorphism of a finite algebra induced by a permutation of its atoms."""

    __slots__ = ("algebra", "perm")

    def __init__(self, algebra, mapping):
        perm = list(range(len(algebra.atoms)))
        for a, b in mapping.items():
            perm[algebra.index[a]] = algebra.index[b]
        if sorted(perm) != list(range(len(perm))):
            raise AlgebraError("atom map is not a bijection")
        self.algebra = algebra
        self.perm = tuple(perm)

    @classmethod
    def from_perm(cls, algebra, perm):
        return cls(algebra, {algebra.atoms[i]: algebra.atoms[j] for i, j in enumerate(perm)})

    def __call__(self, element):
        out = 0
        for i in bits(element):
            out |= 1 << self.perm[i]
        return out

    def compose(self, other):
        """self after other."""
        return BaAutomorphism.from_perm(self.algebra, [self.perm[j] for j in other.perm])

    def inverse(self):
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return BaAutomorphism.from_perm(self.algebra, inv)

    def power(self, n):
        out = BaAutomorphism.from_perm(self.algebra, range(len(self.perm)))
        base = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            out = base.compose(out)
        return out

    def is_identity(self):
        return all(i == j for i, j in enumerate(self.perm))

    def cycles(self):
        seen, out = set(), []
        for i in range(len(self.perm)):
            if i in seen:
                continue
            cyc, j = [], i
            while j not in seen:
                seen.add(j)
                cyc.append(j)
                j = self.perm[j]
            out.append(tuple(cyc))
        return out

    def mapping(self):
        A = self.algebra.atoms
        return {A[i]: A[j] for i, j in enumerate(self.perm)}

    def __eq__(self, other):
        return isinstance(other, BaAutomorphism) and self.perm == other.perm

    def __hash__(self):
        return hash(self.perm)

    def __repr__(self):
        return f"BaAutomorphism({self.perm})"


def generates(A, extra):
    """Does A together with the elements ``extra`` completely generate B?"""
    B = A.algebra
    return len(complete_subalgebra(B, list(A.masks) + list(extra)).masks) == len(B.atoms)
