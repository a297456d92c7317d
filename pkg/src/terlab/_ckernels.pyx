# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def disputes(parent, level, cls, int height):
    cdef cnp.int64_t[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef cnp.int64_t[:] lev = np.ascontiguousarray(level, dtype=np.int64)
    cdef cnp.int64_t[:] cl = np.ascontiguousarray(cls, dtype=np.int64)
    cdef Py_ssize_t n = par.shape[0]
    cdef Py_ssize_t x, y, lv, s, t, sp, i, j, k, a, b
    cdef cnp.int64_t ncls = 0
    for x in range(n):
        if cl[x] + 1 > ncls:
            ncls = cl[x] + 1
    anc_arr = np.full((n, height), -1, dtype=np.int64)
    cdef cnp.int64_t[:, :] anc = anc_arr
    for x in range(n):
        y = x
        lv = lev[x]
        anc[x, lv] = x
        while lv > 0:
            y = par[y]
            lv -= 1
            anc[x, lv] = y
    # present[t, c] = 1 iff some node of class c lies strictly above t
    pres_arr = np.zeros((n, ncls), dtype=np.uint8)
    cdef cnp.uint8_t[:, :] present = pres_arr
    for x in range(n):
        for lv in range(lev[x]):
            present[anc[x, lv], cl[x]] = 1
    # descendants of each node, grouped by node order (levels are contiguous)
    order = np.argsort(np.asarray(cl), kind="stable")
    cdef cnp.int64_t[:] ordv = order
    cdef cnp.int64_t[:] cstart = np.searchsorted(np.asarray(cl)[order], np.arange(ncls + 1)).astype(np.int64)
    desc_count = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.int64_t[:] dc = desc_count
    for x in range(n):
        for lv in range(lev[x]):
            dc[anc[x, lv] + 1] += 1
    dstart_arr = np.cumsum(desc_count)
    cdef cnp.int64_t[:] dstart = dstart_arr
    dlist_arr = np.zeros(max(1, dstart_arr[n]), dtype=np.int64)
    cdef cnp.int64_t[:] dlist = dlist_arr
    fill = dstart_arr[:n].copy()
    cdef cnp.int64_t[:] fl = fill
    for x in range(n):
        for lv in range(lev[x]):
            a = anc[x, lv]
            dlist[fl[a]] = x
            fl[a] += 1
    out = []
    cdef int w
    for k in range(ncls):
        if cstart[k + 1] - cstart[k] < 2:
            continue
        for i in range(cstart[k], cstart[k + 1]):
            s = ordv[i]
            for j in range(cstart[k], cstart[k + 1]):
                t = ordv[j]
                if t == s:
                    continue
                for a in range(dstart[s], dstart[s + 1]):
                    sp = dlist[a]
                    if present[t, cl[sp]] == 0:
                        b = anc[sp, lev[s] + 1]
                        w = present[t, cl[b]] == 0
                        out.append((s, sp, t, bool(w)))
    out.sort()
    return out


def reduce_masks(families, class_masks, req_start, req_masks):
    cdef cnp.uint64_t[:] fam = np.ascontiguousarray(families, dtype=np.uint64)
    cdef cnp.uint64_t[:] cm = np.ascontiguousarray(class_masks, dtype=np.uint64)
    cdef cnp.int64_t[:] rs = np.ascontiguousarray(req_start, dtype=np.int64)
    cdef cnp.uint64_t[:] rm = np.ascontiguousarray(req_masks, dtype=np.uint64)
    out_arr = np.zeros(fam.shape[0], dtype=np.uint64)
    cdef cnp.uint64_t[:] out = out_arr
    cdef Py_ssize_t i, k, j
    cdef cnp.uint64_t f, acc
    cdef int ok
    for i in range(fam.shape[0]):
        f = fam[i]
        acc = 0
        for k in range(cm.shape[0]):
            # branch-free so the inner loop vectorises
            ok = 1
            for j in range(rs[k], rs[k + 1]):
                ok &= (f & rm[j]) != 0
            acc |= (f & cm[k]) * <cnp.uint64_t>ok
        out[i] = acc
    return out_arr


def group_closure(table, gens, ident):
    cdef cnp.int64_t[:, :] tab = np.ascontiguousarray(table, dtype=np.int64)
    cdef cnp.int64_t[:] g = np.ascontiguousarray(gens, dtype=np.int64)
    cdef Py_ssize_t n = tab.shape[0]
    seen_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[:] seen = seen_arr
    stack_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[:] stack = stack_arr
    cdef Py_ssize_t top = 0, x, y, k
    seen[ident] = 1
    stack[0] = ident
    top = 1
    while top > 0:
        top -= 1
        x = stack[top]
        for k in range(g.shape[0]):
            y = tab[x, g[k]]
            if not seen[y]:
                seen[y] = 1
                stack[top] = y
                top += 1
    return np.flatnonzero(seen_arr).astype(np.int64)
