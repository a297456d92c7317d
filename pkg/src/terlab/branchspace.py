"""Branch families at a fixed resolution.

A finite branch space is discrete, so density is measured against a coarser
level gamma: a family is (gamma, c)-dense when every level-gamma node carries at
least c of its branches.  Branches are named by their frontier node.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .trees import ShapeTable, TreeError


def default_gamma(tree, offset=2):
    return max(0, tree.frontier_level - offset)


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionRefusal:
    reason: str
    cone: str = None

    def __bool__(self):
        return False


@dataclass(frozen=True)
class FrontierFamily:
    tree: object = field(repr=False)
    branches: frozenset
    gamma: int
    c: int = 2

    def __post_init__(self):
        object.__setattr__(self, "branches", frozenset(self.branches))
        front = set(self.tree.frontier())
        bad = sorted(self.branches - front)
        if bad:
            raise SelectionError("not frontier nodes: " + ",".join(bad))
        top = self.tree.frontier_level
        if not (0 <= self.gamma < top or self.gamma == top == 0):
            raise SelectionError(f"resolution {self.gamma} must lie below the frontier level {top}")

    @classmethod
    def full(cls, tree, gamma=None, c=2):
        return cls(tree, frozenset(tree.frontier()), default_gamma(tree) if gamma is None else gamma, c)

    def sorted(self):
        return sorted(self.branches, key=self.tree.index)

    def with_branches(self, branches):
        return FrontierFamily(self.tree, frozenset(branches), self.gamma, self.c)

    def mask(self):
        return frontier_mask(self.tree, self.branches)


def frontier_mask(tree, ids):
    front = tree.frontier()
    pos = {x: i for i, x in enumerate(front)}
    m = 0
    for x in ids:
        m |= 1 << pos[x]
    return m


def frontier_ids(tree, mask):
    front = tree.frontier()
    return frozenset(front[i] for i in range(len(front)) if mask >> i & 1)


@dataclass(frozen=True)
class DensityVerdict:
    counts: tuple
    c: int

    @property
    def dense(self):
        return all(k >= self.c for _, k in self.counts)

    def failing(self):
        return [x for x, k in self.counts if k < self.c]


def is_dense(F):
    tree = F.tree
    count = {x: 0 for x in tree.level_nodes(F.gamma)}
    for y in F.branches:
        count[tree.ancestor(y, F.gamma)] += 1
    return DensityVerdict(tuple((x, count[x]) for x in tree.level_nodes(F.gamma)), F.c)


# -- suitability ---------------------------------------------------------------------

def suitability_tables(tree, rel, gamma):
    """Per frontier class: its mask and the masks of its traces on each level-gamma cone."""
    front = tree.frontier()
    pos = {x: i for i, x in enumerate(front)}
    class_masks, starts, reqs = [], [0], []
    for g in rel.level_classes(tree.frontier_level):
        cones = {}
        for x in g:
            a = tree.ancestor(x, gamma)
            cones[a] = cones.get(a, 0) | (1 << pos[x])
        m = 0
        for x in g:
            m |= 1 << pos[x]
        class_masks.append(m)
        reqs.extend(cones[a] for a in sorted(cones, key=tree.index))
        starts.append(len(reqs))
    return class_masks, starts, reqs


def reduce_mask(tables, fmask):
    class_masks, starts, reqs = tables
    out = 0
    for k, cm in enumerate(class_masks):
        if all(fmask & reqs[j] for j in range(starts[k], starts[k + 1])):
            out |= fmask & cm
    return out


def reduce_many(tables, families):
    """Vectorised reduction of many frontier masks (at most 64 frontier nodes)."""
    class_masks, starts, reqs = tables
    return kernels.reduce_masks(np.asarray(families, dtype=np.uint64),
                                np.array(class_masks, dtype=np.uint64),
                                np.array(starts, dtype=np.int64),
                                np.array(reqs, dtype=np.uint64))


def reduce_suitable(F, rel):
    """Keep the members of F whose class meets F in every cone the class meets."""
    tree = F.tree
    if rel.tree != tree:
        rel = rel.restricted(tree)
    tables = suitability_tables(tree, rel, F.gamma)
    if len(tree.frontier()) <= 64:
        out = int(reduce_many(tables, [F.mask()])[0])
    else:
        out = reduce_mask(tables, F.mask())
    return F.with_branches(frontier_ids(tree, out))


def is_suitable(F, rel):
    return reduce_suitable(F, rel).branches == F.branches


# -- diagonal selection --------------------------------------------------------------

@dataclass(frozen=True)
class Constraints:
    meet: tuple = ()
    include: tuple = ()
    exclude: tuple = ()
    suitable: tuple = ()
    gamma: int = None
    c: int = 2


def _check_antichain(tree, ids):
    for i, x in enumerate(ids):
        if x not in tree:
            raise SelectionError(f"unknown node {x}")
        for y in ids[i + 1:]:
            if tree.comparable(x, y):
                raise SelectionError(f"antichain members {x} and {y} are comparable")


def diagonal_select(tree, cons):
    """The largest family meeting all constraints, or a refusal.

    Exclusions are removed, then every branch must pass through each ``meet``
    antichain, then the pool is reduced to suitability for every relation until
    nothing changes.  Included branches must survive and the result must be
    (gamma, c)-dense.
    """
    gamma = default_gamma(tree) if cons.gamma is None else cons.gamma
    front = tree.frontier()
    for x in tuple(cons.include) + tuple(cons.exclude):
        if x not in front:
            raise SelectionError(f"{x} is not a frontier node")
    both = sorted(set(cons.include) & set(cons.exclude))
    if both:
        raise SelectionError("included and excluded: " + ",".join(both))
    pool = set(front) - set(cons.exclude)
    for A in cons.meet:
        A = tuple(A)
        _check_antichain(tree, A)
        aset = set(A)
        pool = {y for y in pool if any(tree.ancestor(y, tree.level(a)) == a for a in aset if tree.level(a) <= tree.level(y))}
    F = FrontierFamily(tree, frozenset(pool), gamma, cons.c)
    while True:
        G = F
        for rel in cons.suitable:
            G = reduce_suitable(G, rel)
        if G.branches == F.branches:
            break
        F = G
    for x in sorted(cons.include, key=tree.index):
        if x not in F.branches:
            cone = tree.ancestor(x, gamma)
            return SelectionRefusal(f"included branch {x} lost in cone {cone}", cone)
    verdict = is_dense(F)
    if not verdict.dense:
        cone = verdict.failing()[0]
        k = dict(verdict.counts)[cone]
        return SelectionRefusal(f"cone {cone} keeps {k} < {cons.c} branches", cone)
    return F


# -- back and forth ------------------------------------------------------------------

@dataclass(frozen=True)
class KurepaResult:
    mapping: dict
    steps: tuple
    refusal: str = None

    def __bool__(self):
        return self.mapping is not None


def _profiles(tree, codes):
    sizes = tree.level_sizes()
    split = tuple(tuple(sorted(len(tree.children(x)) for x in tree.level_nodes(lv))) for lv in range(tree.height))
    cones = tuple(tuple(sorted(codes[x] for x in tree.level_nodes(lv))) for lv in range(tree.height))
    return sizes, split, cones


def distinguishing_invariant(S, T, table=None):
    table = table or ShapeTable()
    cs, ct = table.codes(S), table.codes(T)
    a, b = _profiles(S, cs), _profiles(T, ct)
    for lv in range(S.height):
        if a[0][lv] != b[0][lv]:
            return f"level {lv} sizes {a[0][lv]} ≠ {b[0][lv]}"
    for lv in range(S.height):
        if a[1][lv] != b[1][lv]:
            return f"level {lv} splitting {_fmt(a[1][lv])} ≠ {_fmt(b[1][lv])}"
    for lv in reversed(range(S.height)):
        if a[2][lv] != b[2][lv]:
            return f"level {lv} cone types differ"
    return None


def _fmt(ms):
    return "{" + ",".join(map(str, ms)) + "}"


def kurepa_backforth(S, T, seed=0):
    """Build an isomorphism S -> T one branch at a time, alternating sides.

    Each new branch is sent to the least branch through an unused node above
    the image of its highest mapped node whose cones have matching shapes level
    by level.  Maps built this way never need revising.
    """
    if S.height != T.height:
        raise TreeError(f"height mismatch {S.height} ≠ {T.height}")
    table = ShapeTable()
    cs, ct = table.codes(S), table.codes(T)
    if cs[S.root] != ct[T.root]:
        return KurepaResult(None, (), distinguishing_invariant(S, T, table))
    bs, bt = list(S.maximal()), list(T.maximal())
    if seed:
        rng = random.Random(seed)
        rng.shuffle(bs)
        rng.shuffle(bt)
    fwd, back = {S.root: T.root}, {T.root: S.root}
    steps = []
    sides = ((S, T, cs, ct, bs, bt, fwd, back), (T, S, ct, cs, bt, bs, back, fwd))
    done = [set(), set()]
    k = 0
    while len(done[0]) < len(bs) or len(done[1]) < len(bt):
        side = k % 2
        X, Y, cx, cy, bx, by, f, g = sides[side]
        k += 1
        x = next((b for b in bx if b not in f), None)
        if x is None:
            continue
        chain = X.chain(x)
        top = max(i for i, n in enumerate(chain) if n in f)
        base = f[chain[top]]
        target = None
        for z in by:
            if z in g or Y.level(z) != X.level(x):
                continue
            zc = Y.chain(z)
            if zc[top] != base or zc[top + 1] in g:
                continue
            if all(cx[chain[i]] == cy[zc[i]] for i in range(top + 1, len(chain))):
                target = zc
                break
        if target is None:
            raise AssertionError(f"no extension for branch {x}")
        for i in range(top + 1, len(chain)):
            f[chain[i]] = target[i]
            g[target[i]] = chain[i]
        steps.append(("forth" if side == 0 else "back", x, target[-1]))
        done[0] = {b for b in bs if b in fwd}
        done[1] = {b for b in bt if b in back}
    return KurepaResult(dict(sorted(fwd.items(), key=lambda kv: S.index(kv[0]))), tuple(steps))
