"""Brute-force reference implementations used as test oracles.

Nothing here calls into the library code under test except for the plain
data structures (trees, relations, algebras).
"""
import itertools
from collections import Counter


def above(tree, x):
    """Strict descendants of x, by level."""
    out = {}
    todo = list(tree.children(x))
    while todo:
        y = todo.pop()
        out.setdefault(tree.level(y), []).append(y)
        todo.extend(tree.children(y))
    return out


def ancestor(tree, x, lvl):
    while tree.level(x) > lvl:
        x = tree.parent(x)
    return x


def disputes(rel):
    """Every (s, s', t, witnessed) found by direct search."""
    tree = rel.tree
    out = []
    for s in tree.nodes:
        for t in tree.nodes:
            if s == t or not rel.equiv(s, t):
                continue
            ups, upt = above(tree, s), above(tree, t)
            for lv, xs in ups.items():
                for sp in xs:
                    if not any(rel.equiv(sp, y) for y in upt.get(lv, ())):
                        a = ancestor(tree, sp, tree.level(s) + 1)
                        w = not any(rel.equiv(a, y) for y in upt.get(tree.level(s) + 1, ()))
                        out.append((s, sp, t, w))
    return sorted(out)


def honest(rel):
    return all(w for *_, w in disputes(rel))


def leaves_under(tree, x):
    return frozenset(y for y in tree.maximal() if ancestor(tree, y, tree.level(x)) == x)


def represented_blocks(rel):
    tree = rel.tree
    sig = {}
    for y in tree.maximal():
        chain = [ancestor(tree, y, lv) for lv in range(tree.level(y) + 1)]
        key = tuple(min(rel.members(c)) for c in chain)
        sig.setdefault(key, set()).add(y)
    return [frozenset(v) for v in sig.values()]


def pi_equals_h(rel):
    """For every node: the join of its class equals the least represented element above it."""
    tree = rel.tree
    blocks = represented_blocks(rel)
    out = {}
    for x in tree.nodes:
        pi = frozenset().union(*(leaves_under(tree, y) for y in rel.members(x)))
        e = leaves_under(tree, x)
        h = frozenset().union(*(b for b in blocks if b & e))
        out[x] = pi == h
    return out


def canon(tree, x):
    return "(" + "".join(sorted(canon(tree, c) for c in tree.children(x))) + ")"


def isomorphic(S, T):
    return S.height == T.height and canon(S, S.root) == canon(T, T.root)


def is_tree_iso(S, T, f):
    if sorted(f) != sorted(S.nodes) or sorted(f.values()) != sorted(T.nodes):
        return False
    for x in S.nodes:
        if T.level(f[x]) != S.level(x):
            return False
        p = S.parent(x)
        if p is not None and T.parent(f[x]) != f[p]:
            return False
    return True


def invariant_holds(S, T, msg):
    """Does the refusal message name an invariant on which S and T really differ?"""
    w = msg.split()
    lv = int(w[1])
    if w[2] == "sizes":
        return len(S.level_nodes(lv)) != len(T.level_nodes(lv)) and w[3] == str(len(S.level_nodes(lv)))
    if w[2] == "splitting":
        a = sorted(len(S.children(x)) for x in S.level_nodes(lv))
        b = sorted(len(T.children(x)) for x in T.level_nodes(lv))
        return a != b
    if w[2:] == ["cone", "types", "differ"]:
        a = Counter(canon(S, x) for x in S.level_nodes(lv))
        b = Counter(canon(T, x) for x in T.level_nodes(lv))
        return a != b
    return False


# -- algebras -------------------------------------------------------------------------

def popcount(m):
    return bin(m).count("1")


def frolik_ok(n, perm, parts):
    """The four clauses, checked atom by atom."""
    a0, a1, a2, a3 = parts
    img = lambda m: sum(1 << perm[i] for i in range(n) if m >> i & 1)
    if any(parts[i] & parts[j] for i in range(4) for j in range(i + 1, 4)):
        return False
    if a0 | a1 | a2 | a3 != (1 << n) - 1:
        return False
    if any(perm[i] != i for i in range(n) if a0 >> i & 1):
        return False
    return all(img(a) & a == 0 for a in (a1, a2, a3))


def fixed_elements(n, perms):
    out = []
    for b in range(1 << n):
        if all(sum(1 << p[i] for i in range(n) if b >> i & 1) == b for p in perms):
            out.append(b)
    return out


def generates(n, elems):
    """Do these elements separate all n atoms?"""
    sigs = {tuple(e >> i & 1 for e in elems) for i in range(n)}
    return len(sigs) == n


def is_antichain(elems):
    acc = 0
    for e in elems:
        if e == 0 or acc & e:
            return False
        acc |= e
    return True


def transversal_partition_size(n, blocks):
    """Size of the largest family of pairwise disjoint transversals covering all atoms, or 0."""
    trans = [x for x in range(1, 1 << n) if all(popcount(x & b) == 1 for b in blocks)]
    best = 0

    def go(used, count, start):
        nonlocal best
        if used == (1 << n) - 1:
            best = max(best, count)
            return
        for i in range(start, len(trans)):
            if trans[i] & used == 0:
                go(used | trans[i], count + 1, i + 1)

    go(0, 0, 0)
    return best


def boolean_iso(n, table):
    """``table[b]`` for all b: bijective and additive over disjoint joins."""
    if len(set(table)) != 1 << n:
        return False
    return all(table[a | b] == table[a] | table[b] for a in range(1 << n) for b in range(1 << n) if a & b == 0)


# -- branch families ------------------------------------------------------------------

def reduce(tree, rel, fam, gamma):
    """Members of ``fam`` whose class meets ``fam`` in every gamma-cone the class meets."""
    keep = set()
    for g in rel.level_classes(tree.frontier_level):
        cones = {ancestor(tree, x, gamma) for x in g}
        hit = {ancestor(tree, x, gamma) for x in g if x in fam}
        if cones == hit:
            keep.update(x for x in g if x in fam)
    return keep


def subsets(xs):
    for r in range(len(xs) + 1):
        yield from itertools.combinations(xs, r)
