"""Tree equivalence relations.

A relation is stored as a per-level partition of node ids.  Every node gets a
global class number (classes are numbered level by level), which is what the
dispute kernel consumes.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .boolalg import (BaAutomorphism, FiniteBooleanAlgebra, SubalgebraPartition,
                      ro_algebra, upper_projection)
from .trees import (LevelledTree, ShapeTable, restrict, tree_product,
                    validate_normal)


class TerError(ValueError):
    pass


class Ter:
    __slots__ = ("tree", "name", "classes", "_cls", "_disputes")

    def __init__(self, tree, classes=(), name="E"):
        """``classes`` is an iterable of id lists; unmentioned nodes are singletons."""
        cls_of = {}
        groups = []
        for members in classes:
            members = [str(x) for x in members]
            if not members:
                continue
            for x in members:
                if x not in tree:
                    raise TerError(f"unknown node {x}")
                if x in cls_of:
                    raise TerError(f"node {x} listed in two classes")
            lv = {tree.level(x) for x in members}
            if len(lv) != 1:
                raise TerError("class mixes levels: " + ",".join(members))
            k = len(groups)
            groups.append(members)
            for x in members:
                cls_of[x] = k
        for x in tree.nodes:
            if x not in cls_of:
                cls_of[x] = len(groups)
                groups.append([x])
        per_level = [[] for _ in range(tree.height)]
        for g in groups:
            g = sorted(g, key=tree.index)
            per_level[tree.level(g[0])].append(tuple(g))
        for lv in per_level:
            lv.sort(key=lambda g: tree.index(g[0]))
        self.tree = tree
        self.name = name
        self.classes = tuple(tuple(lv) for lv in per_level)
        self._cls = {}
        k = 0
        for lv in self.classes:
            for g in lv:
                for x in g:
                    self._cls[x] = k
                k += 1
        self._disputes = None

    @classmethod
    def identity(cls, tree, name="id"):
        return cls(tree, (), name)

    @classmethod
    def from_key(cls, tree, key, name="E"):
        """Nodes are equivalent iff they share a level and ``key`` value."""
        groups = {}
        for x in tree.nodes:
            groups.setdefault((tree.level(x), key(x)), []).append(x)
        return cls(tree, groups.values(), name)

    def cls(self, x):
        return self._cls[x]

    def members(self, x):
        return self.level_classes(self.tree.level(x))[self._local(x)]

    def _local(self, x):
        lv = self.tree.level(x)
        first = self._cls[self.classes[lv][0][0]]
        return self._cls[x] - first

    def equiv(self, x, y):
        return self._cls[x] == self._cls[y]

    def level_classes(self, lvl):
        return self.classes[lvl]

    def all_classes(self):
        return tuple(g for lv in self.classes for g in lv)

    def restricted(self, tree, name=None):
        """The same classes on a subtree; ids missing from ``tree`` are dropped."""
        groups = [[x for x in g if x in tree] for g in self.all_classes()]
        return Ter(tree, [g for g in groups if g], name or self.name)

    def key(self):
        return self.classes

    def __eq__(self, other):
        return isinstance(other, Ter) and self.tree == other.tree and self.classes == other.classes

    def __hash__(self):
        return hash(self.classes)

    def __repr__(self):
        return f"Ter({self.name!r} on {self.tree.name!r})"

    def disputes(self):
        if self._disputes is None:
            self._disputes = _compute_disputes(self)
        return self._disputes


@dataclass(frozen=True)
class Dispute:
    s: str
    s_prime: str
    t: str
    witnessed_at_successor: bool

    def label(self):
        return f"s={self.s} s'={self.s_prime} t={self.t}"


def _arrays(rel):
    tree = rel.tree
    idx = tree.index
    parent = np.array([-1 if tree.parent(x) is None else idx(tree.parent(x)) for x in tree.nodes], dtype=np.int64)
    level = np.array([tree.level(x) for x in tree.nodes], dtype=np.int64)
    cls = np.array([rel.cls(x) for x in tree.nodes], dtype=np.int64)
    return parent, level, cls


def _compute_disputes(rel):
    tree = rel.tree
    parent, level, cls = _arrays(rel)
    raw = kernels.disputes(parent, level, cls, tree.height)
    nodes = tree.nodes
    return tuple(Dispute(nodes[s], nodes[sp], nodes[t], bool(w)) for s, sp, t, w in raw)


def disputes(rel):
    return rel.disputes()


def is_honest(rel):
    return all(d.witnessed_at_successor for d in rel.disputes())


def compatibility_violations(rel):
    """Pairs of equivalent nodes whose parents are not equivalent."""
    tree = rel.tree
    out = []
    for g in rel.all_classes():
        if tree.level(g[0]) == 0:
            continue
        p0 = tree.parent(g[0])
        for x in g[1:]:
            if not rel.equiv(tree.parent(x), p0):
                out.append((g[0], x))
    return out


def quotient_tree(rel, name=None):
    """The quotient tree and the node -> quotient-node map.

    A quotient node is named after the least member of its class.
    """
    tree = rel.tree
    if compatibility_violations(rel):
        raise TerError("relation is not compatible with the tree order")
    cmap, recs = {}, []
    for g in rel.all_classes():
        q = min(g)
        for x in g:
            cmap[x] = q
    for g in rel.all_classes():
        p = tree.parent(g[0])
        recs.append((cmap[g[0]], tree.level(g[0]), None if p is None else cmap[p]))
    q = LevelledTree(recs, tree.height, tree.limits, name or f"{tree.name}/{rel.name}")
    return q, cmap


@dataclass(frozen=True)
class TerReport:
    compat: tuple
    quotient_report: object
    disputes: tuple
    honest: bool

    @property
    def unwitnessed(self):
        return tuple(d for d in self.disputes if not d.witnessed_at_successor)

    @property
    def valid(self):
        return not self.compat and self.quotient_report is not None and self.quotient_report.valid and self.honest


def validate_ter(rel):
    compat = tuple(compatibility_violations(rel))
    qrep = None
    if not compat:
        qrep = validate_normal(quotient_tree(rel)[0], strict=True)
    ds = rel.disputes()
    return TerReport(compat, qrep, ds, all(d.witnessed_at_successor for d in ds))


# -- niceness ------------------------------------------------------------------

GRADES = ("nice", "almost_nice", "honest_only", "dishonest")


@dataclass(frozen=True)
class Grade:
    grade: str
    m: int
    m_nice: bool
    successor_disputes: int


def successor_levels(tree):
    return [lv for lv in range(1, tree.height) if lv not in tree.limits]


def m_nice(rel, m):
    """Nice, and every class projects (>= m)-to-one onto each lower level."""
    if rel.disputes():
        return False
    return not m_nice_failures(rel, m, first=True)


def m_nice_failures(rel, m, first=False):
    tree = rel.tree
    out = []
    for beta in range(1, tree.height):
        for g in rel.level_classes(beta):
            for alpha in range(beta):
                count = {}
                for x in g:
                    a = tree.ancestor(x, alpha)
                    count[a] = count.get(a, 0) + 1
                for a, k in count.items():
                    if k < m:
                        out.append((g[0], alpha, a, k))
                        if first:
                            return out
    return out


def niceness_grade(rel, m=2):
    ds = rel.disputes()
    succ = set(successor_levels(rel.tree))
    n_succ = sum(1 for d in ds if rel.tree.level(d.s) in succ)
    honest = all(d.witnessed_at_successor for d in ds)
    if not ds:
        grade = "nice"
    elif not honest:
        grade = "dishonest"
    elif n_succ == 0:
        grade = "almost_nice"
    else:
        grade = "honest_only"
    return Grade(grade, m, grade == "nice" and not m_nice_failures(rel, m, first=True), n_succ)


# -- algebra side --------------------------------------------------------------

def represented_subalgebra(rel, B=None):
    """Partition of the maximal nodes: same block iff same class at every level of the chain."""
    tree = rel.tree
    B = B or ro_algebra(tree)
    blocks = {}
    for i, y in enumerate(B.atoms):
        sig = tuple(rel.cls(c) for c in tree.chain(y))
        blocks[sig] = blocks.get(sig, 0) | (1 << i)
    return SubalgebraPartition(B, blocks.values())


def class_sum(rel, x, B=None):
    B = B or ro_algebra(rel.tree)
    out = 0
    for y in rel.members(x):
        out |= B.embedding[y]
    return out


@dataclass(frozen=True)
class ProjectionReport:
    pi: dict
    h: dict
    agree: frozenset
    nice: bool
    no_successor_disputes: bool

    @property
    def everywhere(self):
        return len(self.agree) == len(self.pi)

    def disagreements(self):
        return sorted(set(self.pi) - self.agree)


def projection_vs_h(rel):
    tree = rel.tree
    B = ro_algebra(tree)
    A = represented_subalgebra(rel, B)
    pi, h = {}, {}
    sums = {}
    for g in rel.all_classes():
        m = 0
        for y in g:
            m |= B.embedding[y]
        for y in g:
            sums[y] = m
    for x in tree.nodes:
        pi[x] = sums[x]
        h[x] = upper_projection(B, A, B.embedding[x])
    agree = frozenset(x for x in tree.nodes if pi[x] == h[x])
    ds = rel.disputes()
    succ = set(successor_levels(tree))
    return ProjectionReport(pi, h, agree, not ds, not any(tree.level(d.s) in succ for d in ds))


def agreement_matches(report, tree):
    """The two characterisations the projection report must satisfy."""
    succ = set(successor_levels(tree))
    on_succ = all(x in report.agree for x in tree.nodes if tree.level(x) in succ)
    return report.everywhere == report.nice and on_succ == report.no_successor_disputes


# -- limit-level density -------------------------------------------------------

@dataclass(frozen=True)
class ClassTrace:
    level: int
    members: tuple
    missing: tuple

    @property
    def ok(self):
        return not self.missing


def class_trace_density(rel, alpha, gamma):
    """For every class at the limit level ``alpha``: which level-``gamma`` cones
    reached by the class of its parents does it miss?"""
    tree = rel.tree
    if alpha not in tree.limits:
        raise TerError(f"level {alpha} is not a limit level")
    if not 0 <= gamma < alpha:
        raise TerError(f"resolution {gamma} must lie below {alpha}")
    out = []
    for g in rel.level_classes(alpha):
        parents = rel.members(tree.parent(g[0]))
        want = {tree.ancestor(p, gamma) for p in parents if tree.children(p)}
        have = {tree.ancestor(x, gamma) for x in g}
        missing = tuple(sorted(want - have, key=tree.index))
        out.append(ClassTrace(alpha, g, missing))
    return out


# -- building relations ----------------------------------------------------------

def positions(tree):
    """Index of each node among its sorted siblings."""
    pos = {tree.root: 0}
    for x in tree.nodes:
        for i, c in enumerate(sorted(tree.children(x))):
            pos[c] = i
    return pos


def block_ter(tree, ways=2, name="E"):
    """x ~ y iff their parents are equivalent and their sibling positions fall
    into the same of ``ways`` contiguous chunks."""
    pos = positions(tree)
    key = {tree.root: ()}
    for x in tree.nodes:
        kids = sorted(tree.children(x))
        for c in kids:
            key[c] = key[x] + (pos[c] * ways // len(kids),)
    return Ter.from_key(tree, key.__getitem__, name)


def product_ter(S, T, name="P"):
    """The product tree and the relation (s,t) ~ (u,v) iff s = u."""
    P = tree_product(S, T)
    groups = {}
    for g in range(P.height):
        for s in S.level_nodes(g):
            groups[s] = [f"({s}*{t})" for t in T.level_nodes(g)]
    return P, Ter(P, groups.values(), name)


def restrict_ter(rel, levels, name=None):
    R = restrict(rel.tree, levels)
    return Ter(R, [g for g in rel.all_classes() if g[0] in R], name or rel.name)


def descend(fine, coarse, name=None):
    """The relation induced by ``coarse`` on the quotient by ``fine``.

    ``fine`` must refine ``coarse``.  Returns the quotient tree and the relation.
    """
    for g in fine.all_classes():
        if any(not coarse.equiv(g[0], x) for x in g[1:]):
            raise TerError(f"{fine.name} does not refine {coarse.name}")
    Q, cmap = quotient_tree(fine)
    groups = {}
    for x in fine.tree.nodes:
        groups.setdefault(coarse.cls(x), set()).add(cmap[x])
    return Q, Ter(Q, [sorted(v) for v in groups.values()], name or coarse.name)


# -- dense split -----------------------------------------------------------------

@dataclass(frozen=True)
class DenseSplit:
    coarse: Ter
    ter: Ter
    alpha: int
    gamma: int
    colour: dict
    algebra: FiniteBooleanAlgebra = field(repr=False)
    blocks: tuple = field(repr=False)
    swap: BaAutomorphism = field(repr=False)
    witness: int = 0

    def lift(self, partition):
        """A partition of the split algebra's atoms, as a partition of RO(tree)."""
        B = ro_algebra(self.ter.tree)
        masks = []
        for m in partition.masks:
            out = 0
            for i in range(len(self.blocks)):
                if m >> i & 1:
                    out |= self.blocks[i]
            masks.append(out)
        return SubalgebraPartition(B, masks)


def dense_colouring(rel, alpha, gamma, seed=0):
    """Two colours on level ``alpha`` that both meet every level-``gamma`` cone
    met by a class: members above the same cone alternate in id order."""
    tree = rel.tree
    if not 0 <= gamma < alpha:
        raise TerError(f"resolution {gamma} must lie below {alpha}")
    colour = {}
    for g in rel.level_classes(alpha):
        cones = {}
        for x in g:
            cones.setdefault(tree.ancestor(x, gamma), []).append(x)
        for c in sorted(cones, key=tree.index):
            part = cones[c]
            if len(part) < 2:
                raise TerError(f"unsplittable class {','.join(g)}: one member above {c}")
            for j, x in enumerate(sorted(part, key=tree.index)):
                colour[x] = (j + seed) % 2
    return colour


def dense_split(rel, alpha, seed=0, gamma=None, name=None):
    """Refine ``rel`` above the limit level ``alpha`` by a two-colouring of its classes there.

    Inside every level-``gamma`` cone, the members of a class at ``alpha`` are
    coloured alternately in id order (``seed`` flips the start), so both colours
    meet every cone the class meets.  Above ``alpha`` two nodes stay equivalent
    only if their ``alpha``-ancestors carry the same colour.
    """
    tree = rel.tree
    if alpha not in tree.limits:
        raise TerError(f"level {alpha} is not a limit level")
    if alpha >= tree.height - 1:
        raise TerError(f"level {alpha} has nothing above it")
    gamma = alpha - 1 if gamma is None else gamma
    colour = dense_colouring(rel, alpha, gamma, seed)

    def key(x):
        lv = tree.level(x)
        if lv <= alpha:
            return rel.cls(x)
        return (rel.cls(x), colour[tree.ancestor(x, alpha)])

    sim = Ter.from_key(tree, key, name or f"{rel.name}~")
    B = ro_algebra(tree)
    fine = represented_subalgebra(sim, B)
    coarse = represented_subalgebra(rel, B)
    names = tuple(B.atoms[(m & -m).bit_length() - 1] for m in fine.masks)
    alg = FiniteBooleanAlgebra(names, name=f"{B.name}/{sim.name}")
    mapping, witness = {}, 0
    for cm in coarse.masks:
        inside = [i for i, fm in enumerate(fine.masks) if fm & cm]
        if len(inside) != 2:
            raise TerError(f"block at {B.atoms[(cm & -cm).bit_length() - 1]} splits into {len(inside)} parts, not 2")
        i, j = inside
        mapping[names[i]], mapping[names[j]] = names[j], names[i]
        for k in inside:
            y = B.atoms[(fine.masks[k] & -fine.masks[k]).bit_length() - 1]
            if colour[tree.ancestor(y, alpha)] == 0:
                witness |= 1 << k
    swap = BaAutomorphism(alg, mapping)
    return DenseSplit(rel, sim, alpha, gamma, colour, alg, fine.masks, swap, witness)


# -- homogeneous trees -------------------------------------------------------------

def is_level_homogeneous(tree):
    codes = ShapeTable().codes(tree)
    return all(len({codes[x] for x in tree.level_nodes(lv)}) <= 1 for lv in range(tree.height))


@dataclass(frozen=True)
class PhiFamily:
    """Cone isomorphisms between equivalent nodes, given by relative position paths."""

    ter: Ter
    pos: dict = field(repr=False)

    def phi(self, s, t):
        if not self.ter.equiv(s, t):
            raise TerError(f"{s} and {t} are not equivalent")
        tree = self.ter.tree
        out = {s: t}
        for x in tree.cone(s):
            if x == s:
                continue
            base = out[tree.parent(x)]
            out[x] = sorted(tree.children(base))[self.pos[x]]
        return out

    def check(self):
        """Exhaustive check of identity, composition, coherence and φ(x) ≡ x."""
        rel, tree = self.ter, self.ter.tree
        bad = []
        maps = {}
        for g in rel.all_classes():
            for s in g:
                for t in g:
                    maps[s, t] = self.phi(s, t)
        for (s, t), f in maps.items():
            if s == t and any(k != v for k, v in f.items()):
                bad.append(("identity", s, t))
            if any(not rel.equiv(k, v) for k, v in f.items()):
                bad.append(("equivalence", s, t))
            for r in rel.members(s):
                g1, g2 = maps[s, r], maps[r, t]
                if any(g2[g1[x]] != f[x] for x in f):
                    bad.append(("composition", s, r, t))
            p = tree.parent(s)
            if p is not None:
                for q in rel.members(p):
                    up = maps[p, q]
                    if up[s] == t and any(up[x] != f[x] for x in f):
                        bad.append(("coherence", p, q, s, t))
        return bad


def homogeneous_2nice(tree, seed=0, name="H"):
    """A 2-nice relation on a level-homogeneous tree with at least 4 children per node.

    Siblings are split into two halves by position (``seed`` permutes which
    positions go together); nodes are equivalent iff their position halves
    agree along the whole chain.
    """
    if not is_level_homogeneous(tree):
        raise TerError("tree is not level-homogeneous")
    for x in tree.nodes:
        if tree.level(x) < tree.height - 1 and len(tree.children(x)) < 4:
            raise TerError(f"node {x} has {len(tree.children(x))} children; need at least 4")
    rng = random.Random(seed)
    pos = positions(tree)
    half = {}
    for lv in range(tree.height - 1):
        kids = len(tree.children(tree.level_nodes(lv)[0]))
        order = list(range(kids))
        if seed:
            rng.shuffle(order)
        half[lv + 1] = {p: int(i >= kids // 2) for i, p in enumerate(order)}
    key = {tree.root: ()}
    for x in tree.nodes:
        for c in tree.children(x):
            key[c] = key[x] + (half[tree.level(c)][pos[c]],)
    rel = Ter.from_key(tree, key.__getitem__, name)
    return rel, PhiFamily(rel, pos)


__all__ = [
    "Ter", "TerError", "Dispute", "TerReport", "Grade", "GRADES", "ClassTrace",
    "DenseSplit", "PhiFamily", "validate_ter", "niceness_grade", "m_nice",
    "quotient_tree", "represented_subalgebra", "projection_vs_h",
    "class_trace_density", "dense_split", "homogeneous_2nice", "block_ter",
    "product_ter", "restrict_ter", "descend", "disputes", "is_honest",
]
