"""Finite levelled trees.

A tree is stored level by level with parent references; everything else
(children, ancestors, cones) is derived once at construction and never
mutated afterwards.  Node ids are strings and are ordered by ``(level, id)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from string import ascii_lowercase


class TreeError(ValueError):
    pass


class LevelledTree:
    __slots__ = ("name", "height", "limits", "nodes", "_level", "_parent",
                 "_children", "_levels", "_index", "_anc")

    def __init__(self, nodes, height=None, limits=(), name="T"):
        level, parent = {}, {}
        for nid, lvl, par in nodes:
            nid = str(nid)
            if nid in level:
                raise TreeError(f"duplicate node id {nid}")
            level[nid] = int(lvl)
            parent[nid] = None if par is None else str(par)
        for nid, par in parent.items():
            if par is not None and par not in level:
                raise TreeError(f"node {nid} has dangling parent {par}")
        if not level:
            raise TreeError("tree has no nodes")
        top = max(level.values())
        self.height = top + 1 if height is None else int(height)
        self.name = name
        self.limits = frozenset(int(x) for x in limits)
        self.nodes = tuple(sorted(level, key=lambda x: (level[x], x)))
        self._index = {x: i for i, x in enumerate(self.nodes)}
        self._level = level
        self._parent = parent
        kids = {x: [] for x in self.nodes}
        for x in self.nodes:
            p = parent[x]
            if p is not None:
                kids[p].append(x)
        self._children = {x: tuple(v) for x, v in kids.items()}
        levels = [[] for _ in range(max(self.height, top + 1))]
        for x in self.nodes:
            if level[x] >= 0:
                levels[level[x]].append(x)
        self._levels = tuple(tuple(v) for v in levels)
        self._anc = {}

    # basic accessors
    def __contains__(self, x):
        return x in self._level

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def level(self, x):
        return self._level[x]

    def parent(self, x):
        return self._parent[x]

    def children(self, x):
        return self._children[x]

    def level_nodes(self, lvl):
        if 0 <= lvl < len(self._levels):
            return self._levels[lvl]
        return ()

    def index(self, x):
        return self._index[x]

    @property
    def root(self):
        roots = [x for x in self.nodes if self._parent[x] is None]
        if len(roots) != 1:
            raise TreeError("root not unique")
        return roots[0]

    @property
    def frontier_level(self):
        return self.height - 1

    def frontier(self):
        return self.level_nodes(self.height - 1)

    def maximal(self):
        return tuple(x for x in self.nodes if not self._children[x])

    def level_sizes(self):
        return tuple(len(self.level_nodes(i)) for i in range(self.height))

    def chain(self, x):
        """Ids from the root up to and including ``x``."""
        out = []
        while x is not None:
            out.append(x)
            x = self._parent[x]
        return tuple(reversed(out))

    def ancestor(self, x, lvl):
        """The predecessor of ``x`` on level ``lvl`` (``x`` itself if equal)."""
        key = (x, lvl)
        hit = self._anc.get(key)
        if hit is not None:
            return hit
        d = self._level[x] - lvl
        if d < 0:
            raise TreeError(f"node {x} lies below level {lvl}")
        y = x
        for _ in range(d):
            y = self._parent[y]
        self._anc[key] = y
        return y

    def below(self, s, t):
        """Strict tree order s < t."""
        ls, lt = self._level[s], self._level[t]
        return ls < lt and self.ancestor(t, ls) == s

    def comparable(self, s, t):
        return s == t or self.below(s, t) or self.below(t, s)

    def cone(self, x):
        """All nodes t with x <= t, in tree order."""
        out, todo = [], [x]
        while todo:
            y = todo.pop()
            out.append(y)
            todo.extend(self._children[y])
        return tuple(sorted(out, key=self._index.__getitem__))

    def cone_at(self, x, lvl):
        """Nodes of level ``lvl`` above (or equal to) ``x``."""
        return tuple(t for t in self.level_nodes(lvl) if self.ancestor(t, self._level[x]) == x)

    def leaves_above(self, x):
        return tuple(t for t in self.cone(x) if not self._children[t])

    def records(self):
        return tuple((x, self._level[x], self._parent[x]) for x in self.nodes)

    def renamed(self, name):
        return LevelledTree(self.records(), self.height, self.limits, name)

    def with_limits(self, limits):
        return LevelledTree(self.records(), self.height, limits, self.name)

    def key(self):
        return (self.height, self.limits, self.records())

    def __eq__(self, other):
        return isinstance(other, LevelledTree) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"LevelledTree({self.name!r}, sizes={self.level_sizes()})"


@dataclass(frozen=True)
class Violation:
    clause: str
    nodes: tuple
    message: str


@dataclass(frozen=True)
class ValidationReport:
    strict: bool
    violations: tuple = ()

    @property
    def valid(self):
        return not self.violations

    def clauses(self):
        return sorted({v.clause for v in self.violations})


CLAUSES = ("root", "parent", "splitting", "limits")


def validate_normal(tree, strict=True):
    out = []
    roots = [x for x in tree.nodes if tree.parent(x) is None]
    lvl0 = [x for x in tree.nodes if tree.level(x) == 0]
    if len(roots) != 1 or len(lvl0) != 1 or roots != lvl0:
        out.append(Violation("root", tuple(sorted(set(roots) | set(lvl0))), "root not unique"))
    for x in tree.nodes:
        lvl = tree.level(x)
        if not 0 <= lvl < tree.height:
            out.append(Violation("parent", (x,), f"node {x} at level {lvl} outside 0..{tree.height - 1}"))
        p = tree.parent(x)
        if p is not None and tree.level(p) != lvl - 1:
            out.append(Violation("parent", (x, p), f"node {x} at level {lvl} has parent {p} at level {tree.level(p)}"))
    bad_limits = sorted(a for a in tree.limits if not 1 <= a < tree.height)
    if bad_limits:
        out.append(Violation("limits", (), "limit levels outside 1..H-1: " + ",".join(map(str, bad_limits))))
    for a in sorted(tree.limits):
        seen = {}
        for x in tree.level_nodes(a):
            c = tree.chain(x)
            if c in seen:
                out.append(Violation("limits", (seen[c], x), f"nodes {seen[c]} and {x} share a branch at limit level {a}"))
            seen[c] = x
    if strict:
        for x in tree.nodes:
            lvl = tree.level(x)
            if lvl < tree.height - 1:
                k = len(tree.children(x))
                if k < 2:
                    word = "child" if k == 1 else "children"
                    out.append(Violation("splitting", (x,), f"node {x} has {k} {word} at level {lvl}→{lvl + 1}"))
    out.sort(key=lambda v: (v.clause, tree.index(v.nodes[0]) if v.nodes and v.nodes[0] in tree else -1, v.message))
    return ValidationReport(strict, tuple(out))


def restrict(tree, levels, name=None):
    """Keep only the levels in ``levels`` and renumber them consecutively."""
    keep = sorted(set(int(c) for c in levels))
    if not keep or keep[0] != 0:
        raise TreeError("level set must be nonempty and contain 0")
    if keep[-1] >= tree.height:
        raise TreeError(f"level {keep[-1]} outside tree of height {tree.height}")
    recs = []
    for i, c in enumerate(keep):
        for x in tree.level_nodes(c):
            par = None if i == 0 else tree.ancestor(x, keep[i - 1])
            recs.append((x, i, par))
    limits = [i for i, c in enumerate(keep) if c in tree.limits]
    return LevelledTree(recs, len(keep), limits, name or tree.name)


def relativize(tree, t, name=None):
    if t not in tree:
        raise TreeError(f"unknown node {t}")
    base = tree.level(t)
    recs = [(x, tree.level(x) - base, None if x == t else tree.parent(x)) for x in tree.cone(t)]
    limits = [a - base for a in tree.limits if a > base]
    return LevelledTree(recs, tree.height - base, limits, name or tree.name)


def pair_id(s, t):
    return f"({s}*{t})"


def tree_product(S, T, name=None):
    if S.height != T.height:
        raise TreeError(f"height mismatch {S.height} ≠ {T.height}")
    recs = []
    for g in range(S.height):
        for s in S.level_nodes(g):
            for t in T.level_nodes(g):
                par = None if g == 0 else pair_id(S.parent(s), T.parent(t))
                recs.append((pair_id(s, t), g, par))
    return LevelledTree(recs, S.height, S.limits | T.limits, name or f"{S.name}x{T.name}")


def tree_sum(S, T, name=None, root="root"):
    if S.height != T.height:
        raise TreeError(f"height mismatch {S.height} ≠ {T.height}")
    recs = [(root, 0, None)]
    for tag, tr in (("0", S), ("1", T)):
        for x in tr.nodes:
            p = tr.parent(x)
            recs.append((f"{tag}.{x}", tr.level(x) + 1, root if p is None else f"{tag}.{p}"))
    limits = {a + 1 for a in S.limits | T.limits}
    return LevelledTree(recs, S.height + 1, limits, name or f"{S.name}+{T.name}")


def full_tree(splitting, name="T", limits=(), root="root"):
    """Full tree whose level-i nodes have ``splitting[i]`` children.

    Children get letter suffixes, so the binary tree of height 3 has nodes
    root, a, b, aa, ab, ba, bb.
    """
    recs = [(root, 0, None)]
    frontier = [root]
    for lvl, k in enumerate(splitting, start=1):
        if not 1 <= k <= 26:
            raise TreeError("splitting must be within 1..26")
        nxt = []
        for p in frontier:
            for c in ascii_lowercase[:k]:
                x = c if p == root else p + c
                recs.append((x, lvl, p))
                nxt.append(x)
        frontier = nxt
    return LevelledTree(recs, len(splitting) + 1, limits, name)


def chain_tree(height, name="chain"):
    return full_tree([1] * (height - 1), name)


# -- shapes and automorphisms ------------------------------------------------

class ShapeTable:
    """Interns cone shapes so that equal codes mean isomorphic cones."""

    def __init__(self):
        self._codes = {}

    def code(self, key):
        c = self._codes.get(key)
        if c is None:
            c = self._codes[key] = len(self._codes)
        return c

    def codes(self, tree):
        out = {}
        for x in reversed(tree.nodes):
            out[x] = self.code(tuple(sorted(out[c] for c in tree.children(x))))
        return out


@dataclass(frozen=True)
class TreeAutomorphism:
    mapping: dict = field(hash=False)
    tree: LevelledTree = field(repr=False, compare=False)

    def __call__(self, x):
        return self.mapping[x]

    def is_identity(self):
        return all(k == v for k, v in self.mapping.items())

    def compose(self, other):
        """self after other."""
        return TreeAutomorphism({x: self.mapping[other.mapping[x]] for x in self.tree.nodes}, self.tree)

    def inverse(self):
        return TreeAutomorphism({v: k for k, v in self.mapping.items()}, self.tree)

    def key(self):
        return tuple(self.mapping[x] for x in self.tree.nodes)


def is_automorphism(tree, mapping):
    if set(mapping) != set(tree.nodes) or len(set(mapping.values())) != len(tree.nodes):
        return False
    for x, y in mapping.items():
        if y not in tree or tree.level(x) != tree.level(y):
            return False
        p = tree.parent(x)
        if p is not None and mapping[p] != tree.parent(y):
            return False
    return True


def _isos(tree_a, a, tree_b, b, codes_a, codes_b):
    """Generate every isomorphism cone(a) -> cone(b) as a list of pairs."""
    ka, kb = tree_a.children(a), tree_b.children(b)
    if codes_a[a] != codes_b[b]:
        return
    if not ka:
        yield [(a, b)]
        return

    def match(i, used):
        if i == len(ka):
            yield []
            return
        x = ka[i]
        for y in kb:
            if y in used or codes_a[x] != codes_b[y]:
                continue
            for sub in _isos(tree_a, x, tree_b, y, codes_a, codes_b):
                for rest in match(i + 1, used | {y}):
                    yield sub + rest

    for pairs in match(0, frozenset()):
        yield [(a, b)] + pairs


def enumerate_automorphisms(tree, limit=1000):
    """All automorphisms in a deterministic order, identity first.

    Returns ``(autos, truncated)``.
    """
    codes = ShapeTable().codes(tree)
    out, truncated = [], False
    for pairs in _isos(tree, tree.root, tree, tree.root, codes, codes):
        if len(out) >= limit:
            truncated = True
            break
        out.append(TreeAutomorphism(dict(pairs), tree))
    return out, truncated


def isomorphisms(S, T, limit=1):
    table = ShapeTable()
    cs, ct = table.codes(S), table.codes(T)
    return [dict(p) for p in itertools.islice(_isos(S, S.root, T, T.root, cs, ct), limit)]


def branches(tree):
    """Root-to-maximal-node chains, ordered by the maximal node."""
    return tuple(tree.chain(x) for x in tree.maximal())
