"""Large subalgebras of finite algebras.

Finite algebras are always large over any subalgebra; what carries content
is the least size of a witnessing antichain, which ``mu_large`` computes
exactly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .boolalg import (BaAutomorphism, SubalgebraPartition, bits, complete_subalgebra,
                      generates, popcount, ro_algebra, upper_projection)
from .trees import relativize


@dataclass(frozen=True)
class Refusal:
    reason: str

    def __bool__(self):
        return False


# -- the sets X and Y ---------------------------------------------------------------

def in_x(A, x):
    """x meets every block of A in at most one atom."""
    return all(popcount(x & m) <= 1 for m in A.masks)


def transversals(A, within=None):
    """Elements meeting every block of A (inside ``within``) in exactly one atom."""
    blocks = [m if within is None else m & within for m in A.masks]
    choices = [list(bits(m)) for m in blocks if m]
    for pick in itertools.product(*choices):
        yield sum(1 << i for i in pick)


@dataclass(frozen=True)
class LocalEquality:
    x_count: int
    y: tuple
    h_of_y: tuple
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())


def local_equality_set(B, A, max_atoms=16):
    """The maximal members Y of X and the finite checks on X and Y.

    X is scanned exhaustively, so ``B`` may have at most ``max_atoms`` atoms.
    """
    n = len(B.atoms)
    if n > max_atoms:
        raise ValueError(f"{n} atoms exceed the exhaustive bound {max_atoms}")
    elems = np.arange(1 << n, dtype=np.int64)
    member = np.ones(1 << n, dtype=bool)
    for m in A.masks:
        inter = elems & m
        member &= (inter & (inter - 1)) == 0
    xs = set(np.flatnonzero(member).tolist())
    ys = tuple(sorted(transversals(A)))
    checks = {}
    checks["downward"] = all((x & ~(1 << i)) in xs for x in xs for i in bits(x))
    checks["dense"] = all(any(popcount(b & (1 << i)) for i in bits(b) if (1 << i) in xs) for b in range(1, 1 << n))
    checks["maximal"] = all(y in xs for y in ys) and all(
        (y | (1 << i)) not in xs for y in ys for i in bits(B.full & ~y))
    hy = tuple(sorted({upper_projection(B, A, y) for y in ys}))
    if all(popcount(m) > 1 for m in A.masks):
        checks["h_antichain"] = _is_maximal_antichain(hy, B.full)
        cover = partition_by_transversals(A)
        if cover:
            checks["h_partition"] = tuple(sorted({upper_projection(B, A, y) for y in cover})) == hy
    return LocalEquality(len(xs), ys, hy, checks)


def _is_maximal_antichain(elems, full):
    acc = 0
    for e in elems:
        if e == 0 or acc & e:
            return False
        acc |= e
    return acc == full


def partition_by_transversals(A):
    """Transversals of equal-size blocks, the j-th taking the j-th atom of each block."""
    sizes = {popcount(m) for m in A.masks}
    if len(sizes) != 1:
        return ()
    k = sizes.pop()
    cols = [list(bits(m)) for m in A.masks]
    return tuple(sum(1 << c[j] for c in cols) for j in range(k))


# -- mu-largeness ---------------------------------------------------------------------

@dataclass(frozen=True)
class LargenessCertificate:
    witness: tuple
    generated: bool

    @property
    def size(self):
        return len(self.witness)


def minimal_witness_size(A):
    return max(popcount(m) for m in A.masks) - 1


def mu_large(B, A, m=None):
    """Least antichain M with A and M generating B, or a refusal if it needs more than ``m``.

    Member j collects the j-th atom of every block with more than j+1 atoms, so
    each member lies in X.  A block of s atoms cannot be separated by fewer than
    s-1 disjoint elements, so the size is optimal.
    """
    need = minimal_witness_size(A)
    if m is not None and need > m:
        return Refusal(f"needs {need} > {m}")
    cols = [list(bits(mask)) for mask in A.masks]
    witness = []
    for j in range(need):
        witness.append(sum(1 << c[j] for c in cols if len(c) > j + 1))
    w = tuple(witness)
    return LargenessCertificate(w, generates(A, w))


# -- Frolik -----------------------------------------------------------------------------

def frolik_partition(B, f):
    """(a0, a1, a2, a3): fixed atoms, then moved atoms coloured along cycles."""
    parts = [0, 0, 0, 0]
    for cyc in f.cycles():
        if len(cyc) == 1:
            parts[0] |= 1 << cyc[0]
            continue
        for j, i in enumerate(cyc):
            c = 1 + j % 2
            if j == len(cyc) - 1 and len(cyc) % 2:
                c = 3
            parts[c] |= 1 << i
    return tuple(parts)


def frolik_clauses(B, f, parts):
    a0, a1, a2, a3 = parts
    disjoint = all(parts[i] & parts[j] == 0 for i in range(4) for j in range(i + 1, 4))
    return {
        "unity": disjoint and (a0 | a1 | a2 | a3) == B.full,
        "fixed": all(f(1 << i) == 1 << i for i in bits(a0)),
        "moved": all(f(a) & a == 0 for a in (a1, a2, a3)),
        "disjoint": disjoint,
    }


# -- groups and fixed points ---------------------------------------------------------------

def orbit_partition(B, gens):
    parent = list(range(len(B.atoms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for g in gens:
        for i, j in enumerate(g.perm):
            a, b = find(i), find(j)
            if a != b:
                parent[max(a, b)] = min(a, b)
    blocks = {}
    for i in range(len(B.atoms)):
        blocks[find(i)] = blocks.get(find(i), 0) | (1 << i)
    return SubalgebraPartition(B, blocks.values())


def generated_group(B, gens):
    ident = BaAutomorphism.from_perm(B, range(len(B.atoms)))
    seen = {ident.perm: ident}
    todo = [ident]
    while todo:
        x = todo.pop()
        for g in gens:
            y = g.compose(x)
            if y.perm not in seen:
                seen[y.perm] = y
                todo.append(y)
    return [seen[p] for p in sorted(seen)]


def fixed_elements(B, gens):
    """Brute force: every element fixed by all generators."""
    return [b for b in B.elements() if all(g(b) == b for g in gens)]


@dataclass(frozen=True)
class FixedPoints:
    partition: SubalgebraPartition
    certificate: LargenessCertificate
    group_size: int
    replay: bool


def fixed_point_subalgebra(B, gens, group=None):
    gens = list(gens)
    A = orbit_partition(B, gens)
    cert = mu_large(B, A, len(B.atoms))
    group = group if group is not None else generated_group(B, gens)
    return FixedPoints(A, cert, len(group), replay_witness(B, A, group, gens))


def replay_witness(B, A, group, gens):
    """Frolik pieces of every group element, closed under the generators, must
    generate B together with A."""
    pieces = set()
    for f in group:
        pieces.update(p for p in frolik_partition(B, f) if p)
    todo = list(pieces)
    while todo:
        p = todo.pop()
        for g in gens:
            q = g(p)
            if q not in pieces:
                pieces.add(q)
                todo.append(q)
    C = complete_subalgebra(B, sorted(pieces))
    return generates(A, C.masks)


class PermutationTable:
    """All permutations of n points with their multiplication table."""

    def __init__(self, n):
        self.n = n
        self.perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
        N = len(self.perms)
        w = n ** np.arange(n - 1, -1, -1, dtype=np.int64)
        self.codes = self.perms @ w
        comp = self.perms[np.arange(N)[:, None, None], self.perms[None, :, :]]
        # table[i, j] = index of perms[i] after perms[j]
        self.table = np.searchsorted(self.codes, comp @ w).astype(np.int64)
        self.ident = 0

    def __len__(self):
        return len(self.perms)

    def closure(self, gens):
        return kernels.group_closure(self.table, np.asarray(gens, dtype=np.int64), self.ident)


def generated_subgroups(n, max_gens=2):
    """Distinct subgroups of Sym(n) generated by at most ``max_gens`` (1 or 2) permutations.

    Returns the table and a list of (generator indices, element indices).
    """
    pt = PermutationTable(n)
    N = len(pt)
    cyclic = {}
    for g in range(N):
        key = pt.closure([g]).tobytes()
        cyclic.setdefault(key, g)
    out = {}
    reps = sorted(cyclic.values())
    for g in reps:
        out.setdefault(pt.closure([g]).tobytes(), ((g,),))
    if max_gens >= 2:
        for g in reps:
            cg = np.frombuffer([k for k, v in cyclic.items() if v == g][0], dtype=np.int64)
            done = np.zeros(N, dtype=bool)
            for h in range(N):
                if done[h]:
                    continue
                # the double coset <g> h <g> gives the same group
                dc = pt.table[pt.table[cg, h][:, None], cg[None, :]].ravel()
                done[dc] = True
                key = pt.closure([g, h]).tobytes()
                out.setdefault(key, ((g, h),))
    groups = [(v[0], np.frombuffer(k, dtype=np.int64)) for k, v in out.items()]
    groups.sort(key=lambda t: (len(t[1]), t[1].tolist()))
    return pt, groups


# -- decomposition ------------------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    N: tuple
    f: dict
    witness: tuple
    iso: bool
    mode: str


def large_decomposition(B, A, mode="Y"):
    """Write B as a product of powers of relative algebras of A.

    Mode "Y" uses a single partition of unity by transversals, which exists iff
    all blocks have the same size.  Mode "X" groups blocks by size instead.
    """
    sizes = {}
    for m in A.masks:
        sizes.setdefault(popcount(m), []).append(m)
    if mode == "Y":
        if len(sizes) != 1:
            return Refusal("no partition of unity by transversals: block sizes " + ",".join(map(str, sorted(sizes))))
    elif mode != "X":
        raise ValueError(f"unknown mode {mode}")
    N, f, witness = [], {}, []
    for k in sorted(sizes):
        a = 0
        for m in sizes[k]:
            a |= m
        N.append(a)
        f[a] = k
        cols = [list(bits(m)) for m in sizes[k]]
        witness.append(tuple(sum(1 << c[j] for c in cols) for j in range(k)))
    return Decomposition(tuple(N), f, tuple(witness), verify_decomposition(B, A, N, witness), mode)


def decomposition_map(B, A, N, witness):
    """b -> (h(b·m)) over every witness member m, packed into one integer per b.

    Coordinate (a, j) stores h(b·m_{a,j}) as a bit set over the blocks below a.
    """
    n = len(B.atoms)
    coords = []
    for a, ms in zip(N, witness):
        blocks = [m for m in A.masks if m & a]
        for m in ms:
            coords.append((m, blocks))
    elems = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, dtype=np.int64)
    shift = 0
    for m, blocks in coords:
        for bl in blocks:
            out |= ((elems & m & bl) != 0).astype(np.int64) << shift
            shift += 1
    return out, shift


def verify_decomposition(B, A, N, witness):
    """The map is additive, injective and onto the product."""
    out, width = decomposition_map(B, A, N, witness)
    n = len(B.atoms)
    if width != n:
        return False
    atoms = out[[1 << i for i in range(n)]]
    if any(popcount(int(v)) != 1 for v in atoms):
        return False
    elems = np.arange(1 << n, dtype=np.int64)
    add = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        add |= np.where((elems >> i) & 1, atoms[i], 0)
    return bool((add == out).all()) and len(np.unique(out)) == 1 << n


# -- nice and large parts -------------------------------------------------------------------

@dataclass(frozen=True)
class NiceSplit:
    b_nice: int
    b_rest: int
    b_large: int
    nice_nodes: tuple
    large_nodes: tuple
    hereditary: bool
    sum_closed: bool


def nice_part_split(rel, gamma=None):
    """Union of the cones at levels up to ``gamma`` on which ``rel`` is nice.

    ``b_large`` is the analogous union of nodes whose element lies in X.
    """
    from .ter import represented_subalgebra

    tree = rel.tree
    gamma = max(0, tree.height - 3) if gamma is None else gamma
    B = ro_algebra(tree)
    A = represented_subalgebra(rel, B)
    nice = {}
    for x in tree.nodes:
        if tree.level(x) <= gamma:
            sub = rel.restricted(relativize(tree, x))
            nice[x] = not sub.disputes()
    b_nice = 0
    for x, ok in nice.items():
        if ok:
            b_nice |= B.embedding[x]
    large = [x for x in nice if in_x(A, B.embedding[x])]
    b_large = 0
    for x in large:
        b_large |= B.embedding[x]
    hereditary = all(nice[y] for x, ok in nice.items() if ok for y in tree.cone(x) if y in nice)
    sum_closed = all(
        ok or not tree.children(x) or not all(nice.get(c, False) for c in tree.children(x))
        for x, ok in nice.items())
    return NiceSplit(b_nice, B.full & ~b_nice, b_large,
                     tuple(x for x in tree.nodes if nice.get(x)), tuple(large), hereditary, sum_closed)
