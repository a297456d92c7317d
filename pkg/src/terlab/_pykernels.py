"""Pure-Python kernels; the compiled module mirrors these signatures."""
import numpy as np


def _ancestors(parent, level, height):
    n = len(parent)
    anc = np.full((n, height), -1, dtype=np.int64)
    for x in range(n):
        anc[x, level[x]] = x
        y, lv = x, level[x]
        while lv > 0:
            y = parent[y]
            lv -= 1
            anc[x, lv] = y
    return anc


def disputes(parent, level, cls, height):
    """All disputes (s, s', t, witnessed) over node indices.

    Nodes are indexed in (level, id) order; ``cls`` gives the class number of
    every node.  ``witnessed`` says whether (s, s' restricted to lvl(s)+1, t)
    is a dispute too.
    """
    parent = [int(p) for p in parent]
    level = [int(v) for v in level]
    cls = [int(c) for c in cls]
    n = len(parent)
    anc = _ancestors(parent, level, height).tolist()
    above = [dict() for _ in range(n)]
    desc = [dict() for _ in range(n)]
    for x in range(n):
        lx = level[x]
        for lv in range(lx):
            a = anc[x][lv]
            above[a].setdefault(lx, set()).add(cls[x])
            desc[a].setdefault(lx, []).append(x)
    members = {}
    for x in range(n):
        members.setdefault(cls[x], []).append(x)
    out = []
    for group in members.values():
        if len(group) < 2:
            continue
        for s in group:
            ls = level[s]
            for t in group:
                if t == s:
                    continue
                at = above[t]
                for lv, xs in desc[s].items():
                    have = at.get(lv, ())
                    nxt = at.get(ls + 1, ())
                    for sp in xs:
                        if cls[sp] not in have:
                            w = cls[anc[sp][ls + 1]] not in nxt
                            out.append((s, sp, t, w))
    out.sort()
    return out


def reduce_masks(families, class_masks, req_start, req_masks):
    """Suitability filter on many families at once.

    ``families`` is a uint64 array of frontier bitmasks.  Class k owns the
    requirement masks ``req_masks[req_start[k]:req_start[k+1]]`` (its trace on
    each cone it meets); a family keeps class k iff it meets all of them.
    """
    fam = np.asarray(families, dtype=np.uint64)
    out = np.zeros_like(fam)
    for k in range(len(class_masks)):
        ok = np.ones(fam.shape, dtype=bool)
        for j in range(req_start[k], req_start[k + 1]):
            ok &= (fam & np.uint64(req_masks[j])) != 0
        out |= np.where(ok, fam & np.uint64(class_masks[k]), np.uint64(0))
    return out


_rows = {}


def group_closure(table, gens, ident):
    """Indices of the group generated by ``gens`` under the product ``table``."""
    key = id(table)
    hit = _rows.get(key)
    if hit is None or hit[0] is not table:
        _rows.clear()
        hit = _rows[key] = (table, np.asarray(table).tolist())
    rows = hit[1]
    seen = {int(ident)}
    todo = [int(ident)]
    gens = [int(g) for g in gens]
    while todo:
        x = todo.pop()
        for g in gens:
            y = rows[x][g]
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return np.array(sorted(seen), dtype=np.int64)
