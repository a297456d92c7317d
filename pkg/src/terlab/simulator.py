"""Staged construction of a tree from an explicit oracle schedule.

Successor stages grow every frontier node; a limit stage marks the current
frontier level as a limit level, picks a family of frontier nodes with
``branchspace.diagonal_select`` and prunes the rest.  The run is recorded in a
``Transcript`` that ``verify_transcript`` re-checks from scratch.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from string import ascii_lowercase

import numpy as np

from .branchspace import Constraints, SelectionRefusal, diagonal_select
from .report import Report
from .ter import (Ter, TerError, class_trace_density, dense_colouring,
                  is_honest, m_nice, positions)
from .trees import LevelledTree, enumerate_automorphisms, restrict, validate_normal

NICE_M = 2
EVENTS = ("seal", "kill-ter", "kill-auto", "preserve", "noop")


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class TerPayload:
    name: str
    classes: tuple


@dataclass(frozen=True)
class AutoPayload:
    name: str
    mapping: dict = field(hash=False)


@dataclass(frozen=True)
class Stage:
    kind: str
    levels: int = 0
    splitting: int = 0
    event: str = None
    payload: object = None


@dataclass(frozen=True)
class Schedule:
    name: str
    seed: int
    offset: int
    c: int
    stages: tuple

    def __post_init__(self):
        if not self.stages or self.stages[0].kind != "grow":
            raise ScheduleError("a schedule starts with a grow stage")
        prev = None
        for st in self.stages:
            if st.kind == "limit":
                if prev != "grow":
                    raise ScheduleError("a limit stage must follow a grow stage")
                if st.event not in EVENTS:
                    raise ScheduleError(f"unknown event {st.event}")
            elif st.kind == "grow":
                if st.levels < 1 or not 1 <= st.splitting <= 26:
                    raise ScheduleError("grow needs at least one level and splitting 1..26")
            else:
                raise ScheduleError(f"unknown stage kind {st.kind}")
            prev = st.kind


@dataclass(frozen=True)
class Kill:
    stage: int
    kind: str
    name: str
    level: int
    gamma: int
    include: str
    exclude: tuple


@dataclass
class Transcript:
    name: str
    seed: int
    offset: int
    c: int
    stages: list = field(default_factory=list)
    seals: list = field(default_factory=list)
    kills: list = field(default_factory=list)
    preserved: list = field(default_factory=list)
    tree: LevelledTree = None
    ters: dict = field(default_factory=dict)
    autos: dict = field(default_factory=dict)
    refusal: tuple = None
    prefix_ok: bool = True


class _Run:
    def __init__(self, sched):
        self.sched = sched
        self.level = {"root": 0}
        self.parent = {"root": None}
        self.alive = {"root"}
        self.limits = set()
        self.height = 1
        self.keys = {}
        self.snapshots = []

    def tree(self):
        recs = [(x, self.level[x], self.parent[x]) for x in self.alive]
        return LevelledTree(recs, self.height, self.limits, self.sched.name)

    def grow(self, levels, m):
        for _ in range(levels):
            front = sorted(x for x in self.alive if self.level[x] == self.height - 1)
            for p in front:
                for i, ch in enumerate(ascii_lowercase[:m]):
                    x = ch if p == "root" else p + ch
                    self.level[x] = self.height
                    self.parent[x] = p
                    self.alive.add(x)
                    for key in self.keys.values():
                        # block rule: halves of the sibling positions
                        key[x] = (key[p], i * 2 // m)
            self.height += 1

    def ter(self, name):
        tree = self.tree()
        return Ter.from_key(tree, lambda x: self.keys[name][x], name)

    def full_classes(self, name):
        groups = {}
        for x, k in self.keys[name].items():
            groups.setdefault((self.level[x], k), []).append(x)
        return tuple((lv, tuple(sorted(g))) for (lv, _), g in sorted(groups.items(), key=lambda kv: (kv[0][0], min(kv[1]))))


def run_construction(sched):
    """Run the schedule and return its transcript (halting at the first refusal)."""
    run = _Run(sched)
    tr = Transcript(sched.name, sched.seed, sched.offset, sched.c)
    killed = {}
    for k, st in enumerate(sched.stages, start=1):
        if st.kind == "grow":
            run.grow(st.levels, st.splitting)
            tr.stages.append(f"stage {k} grow {st.levels} {st.splitting} sizes {_sizes(run.tree())}")
        else:
            L = run.height - 1
            gamma = max(0, L - sched.offset)
            run.limits.add(L)
            before = run.tree()
            try:
                outcome = _limit(run, st, k, L, gamma, before, tr, killed)
            except (TerError, ScheduleError) as exc:
                outcome = SelectionRefusal(str(exc))
            if isinstance(outcome, SelectionRefusal):
                tr.refusal = (k, outcome.reason)
                tr.stages.append(f"stage {k} limit {st.event} level {L} refused")
                break
            F = outcome
            run.alive -= set(before.frontier()) - F.branches
            after = run.tree()
            lost = [x for x in after.nodes if after.level(x) < L and not after.children(x)]
            if lost:
                tr.refusal = (k, f"node {lost[0]} loses all its branches")
                tr.stages.append(f"stage {k} limit {st.event} level {L} refused")
                break
            run.snapshots.append((L, before))
            tr.stages.append(f"stage {k} limit {st.event} level {L} gamma {gamma} kept {len(F.branches)}/{len(before.frontier())}")
        bad = [n for n in run.keys if not (is_honest(run.ter(n)) and m_nice(run.ter(n), NICE_M))]
        if bad:
            tr.refusal = (k, f"preserved relation {bad[0]} is no longer honest and {NICE_M}-nice")
            break
    final = run.tree()
    tr.tree = final
    tr.preserved = sorted(run.keys)
    for n in tr.preserved:
        tr.ters[n] = run.full_classes(n)
    tr.ters.update(killed)
    tr.prefix_ok = all(_prefix(final, L, snap) for L, snap in run.snapshots)
    return tr


def _sizes(tree):
    return ",".join(map(str, tree.level_sizes()))


def _prefix(final, L, snap):
    low = list(range(L))
    if restrict(final, low).key()[2] != restrict(snap, low).key()[2]:
        return False
    return set(final.level_nodes(L)) <= set(snap.level_nodes(L))


def _limit(run, st, k, L, gamma, tree, tr, killed):
    c = run.sched.c
    if st.event == "preserve":
        p = st.payload
        rel = Ter(tree, p.classes, p.name)
        if p.name in run.keys:
            raise ScheduleError(f"relation {p.name} is already preserved")
        run.keys[p.name] = {x: rel.cls(x) for x in tree.nodes}
    suitable = tuple(run.ter(n).restricted(tree) for n in sorted(run.keys))
    base = dict(gamma=gamma, c=c, suitable=suitable)
    if st.event in ("preserve", "noop"):
        return diagonal_select(tree, Constraints(**base))
    if st.event == "seal":
        ids = tuple(st.payload)
        missing = [x for x in ids if x not in tree]
        if missing:
            raise ScheduleError(f"sealed node {missing[0]} does not exist")
        F = diagonal_select(tree, Constraints(meet=(ids,), **base))
        if F:
            tr.seals.append((k, ids))
        return F
    if st.event == "kill-ter":
        p = st.payload
        K = Ter(tree, p.classes, p.name)
        last = None
        for g in K.level_classes(L):
            if len(g) < 2 or len({tree.ancestor(x, gamma) for x in g}) < 2:
                continue
            x, rest = g[0], tuple(g[1:])
            F = diagonal_select(tree, Constraints(include=(x,), exclude=rest, **base))
            if F:
                tr.kills.append(Kill(k, "ter", p.name, L, gamma, x, rest))
                killed[p.name] = tuple((tree.level(g[0]), g) for g in K.all_classes())
                return F
            last = F
        return last or SelectionRefusal(f"relation {p.name} has no class to kill at level {L}")
    if st.event == "kill-auto":
        p = st.payload
        front = tree.frontier()
        f = {x: p.mapping.get(x, x) for x in front}
        if sorted(f.values()) != sorted(front):
            raise ScheduleError(f"map {p.name} is not a bijection of level {L}")
        last = None
        for x in front:
            if f[x] == x:
                continue
            F = diagonal_select(tree, Constraints(include=(x,), exclude=(f[x],), **base))
            if F:
                tr.kills.append(Kill(k, "auto", p.name, L, gamma, x, (f[x],)))
                tr.autos[p.name] = {a: b for a, b in f.items() if a != b}
                return F
            last = F
        return last or SelectionRefusal(f"map {p.name} moves nothing at level {L}")
    raise ScheduleError(f"unknown event {st.event}")


def verify_transcript(tr, max_autos=1000):
    """Re-check every recorded event against the final tree."""
    tree = tr.tree
    rep = Report()
    v = validate_normal(tree, strict=False)
    rep.add("tree.normal", v.valid, "; ".join(x.message for x in v.violations) or f"sizes {_sizes(tree)}")
    if tr.refusal:
        rep.add("run.complete", False, f"refused at stage {tr.refusal[0]}: {tr.refusal[1]}")
    else:
        rep.add("run.complete", True, f"{len(tr.stages)} stages")
    for k, ids in tr.seals:
        live = [x for x in ids if x in tree]
        uncovered = [y for y in tree.maximal() if not any(tree.ancestor(y, tree.level(a)) == a for a in live if tree.level(a) <= tree.level(y))]
        rep.add(f"seal.{k}", not uncovered, "maximal antichain" if not uncovered else "branch through " + uncovered[0] + " misses it")
    for kl in tr.kills:
        if kl.kind == "ter":
            K = _bind(tree, tr.ters[kl.name], kl.name)
            bad = [ct for ct in class_trace_density(K, kl.level, kl.gamma) if not ct.ok]
            if bad:
                detail = f"class {bad[0].members[0]} misses cone {','.join(bad[0].missing)}"
            else:
                detail = f"every class of {kl.name} at level {kl.level} is dense"
            rep.add(f"kill.{kl.stage}", bool(bad), detail)
        else:
            f = tr.autos[kl.name]
            level = tree.level_nodes(kl.level)
            autos, truncated = enumerate_automorphisms(tree, max_autos)
            hits = [a for a in autos if all(f.get(y, y) in tree and a(y) == f.get(y, y) for y in level)]
            detail = f"no extension among {len(autos)} automorphisms" + (" (truncated)" if truncated else "")
            if hits:
                detail = f"extends to an automorphism of {tree.name}"
            rep.add(f"kill.{kl.stage}", not hits, detail)
    for name in tr.preserved:
        rel = _bind(tree, tr.ters[name], name)
        ok_h, ok_m = is_honest(rel), m_nice(rel, NICE_M)
        rep.add(f"preserve.{name}", ok_h and ok_m, f"honest={'yes' if ok_h else 'no'} {NICE_M}-nice={'yes' if ok_m else 'no'}")
    return rep


def _bind(tree, classes, name):
    return Ter(tree, [[x for x in g if x in tree] for _, g in classes], name)


# -- red/green step ---------------------------------------------------------------------

@dataclass(frozen=True)
class RedGreen:
    ter: Ter
    colour: dict
    clauses: dict


def red_green_stage(rel, alpha, ways=2, seed=0):
    """Colour the classes at ``alpha`` and rebuild the relation above it.

    Above ``alpha`` nodes are equivalent iff their parents are, their
    ``alpha``-ancestors share a colour and their sibling positions fall in the
    same of ``ways`` chunks.
    """
    tree = rel.tree
    if alpha >= tree.height - 1:
        raise TerError(f"level {alpha} has nothing above it")
    colour = dense_colouring(rel, alpha, alpha - 1, seed)
    pos = positions(tree)
    key = {}
    for x in tree.nodes:
        lv = tree.level(x)
        if lv <= alpha:
            key[x] = rel.cls(x)
        else:
            n = len(tree.children(tree.parent(x)))
            key[x] = (key[tree.parent(x)], colour[tree.ancestor(x, alpha)], pos[x] * ways // n)
    out = Ter.from_key(tree, key.__getitem__, f"{rel.name}*")
    clauses = {"partition": True, "transfer": True, "separation": True}
    for lv in range(alpha, tree.height - 1):
        for g in out.level_classes(lv):
            for s in g:
                kids = {out.cls(c) for c in tree.children(s)}
                if len(kids) != ways:
                    clauses["partition"] = False
        for g in rel.level_classes(lv) if lv == alpha else out.level_classes(lv):
            for s in g:
                ks = {out.cls(c) for c in tree.children(s)}
                for t in g:
                    kt = {out.cls(c) for c in tree.children(t)}
                    same = colour[tree.ancestor(s, alpha)] == colour[tree.ancestor(t, alpha)]
                    if same and ks != kt:
                        clauses["transfer"] = False
                    if not same and ks & kt:
                        clauses["separation"] = False
    return RedGreen(out, colour, clauses)


# -- successor calculus on a comparison prefix --------------------------------------------

@dataclass(frozen=True)
class Calculus:
    n: int
    depth: int
    blocks: tuple
    checks: dict
    pairs: int

    @property
    def ok(self):
        return all(self.checks.values())


def parse_partition(n, blocks):
    """Validate a two-level partition of 0..n-1 given as blocks of sub-blocks."""
    seen = sorted(i for b in blocks for sb in b for i in sb)
    if seen != list(range(n)) or any(not sb for b in blocks for sb in b) or any(not b for b in blocks):
        raise ScheduleError(f"not a two-level partition of 0..{n - 1}")
    return tuple(tuple(tuple(sorted(sb)) for sb in b) for b in blocks)


def successor_calculus_52(n, blocks, depth=4):
    """Grow the full n-ary prefix ``depth`` times and check the local calculus.

    Children r^nu and t^lam of equivalent nodes are equivalent iff nu and lam
    share a block (a sub-block for the finer relation), and phi sends r^nu to
    phi(r)^xi for nu in block xi, onto the full k-ary prefix.  For equivalent
    s, t the map phi_st swaps s_j with t_j in each coordinate j below the
    height of s and fixes every higher coordinate.
    """
    blocks = parse_partition(n, blocks)
    k = len(blocks)
    block_of = np.zeros(n, dtype=np.int64)
    sub_of = np.zeros(n, dtype=np.int64)
    j = 0
    for xi, b in enumerate(blocks):
        for sb in b:
            for v in sb:
                block_of[v] = xi
                sub_of[v] = j
            j += 1
    # node at level lv has code sum(d_q n^(lv-1-q)); its parent is code // n
    digits = [np.zeros((1, 0), dtype=np.int64)]
    eq, sim, phi = [np.zeros(1, dtype=np.int64)], [np.zeros(1, dtype=np.int64)], [np.zeros(1, dtype=np.int64)]
    for lv in range(1, depth + 1):
        prev = digits[-1]
        digits.append(np.concatenate([np.repeat(prev, n, axis=0),
                                      np.tile(np.arange(n), len(prev))[:, None]], axis=1))
        last = np.tile(np.arange(n), len(prev))
        par = np.arange(len(last)) // n
        eq.append(np.unique(np.stack([eq[-1][par], block_of[last]]), axis=1, return_inverse=True)[1].ravel())
        sim.append(np.unique(np.stack([sim[-1][par], sub_of[last]]), axis=1, return_inverse=True)[1].ravel())
        phi.append(phi[-1][par] * k + block_of[last])
    checks = dict.fromkeys(("refines", "invariant", "hits", "automorphism", "preserves", "quotient"), True)
    pairs = 0
    for lv in range(depth + 1):
        e, s_, f = eq[lv], sim[lv], phi[lv]
        if any(len(np.unique(e[s_ == c])) != 1 for c in np.unique(s_)):
            checks["refines"] = False
        if any(len(np.unique(f[e == c])) != 1 for c in np.unique(e)):
            checks["invariant"] = False
        # classes correspond one to one with the k-ary level, parents to parents
        reps = np.unique(e, return_index=True)[1]
        if sorted(f[reps].tolist()) != list(range(k ** lv)):
            checks["quotient"] = False
        if lv and not (f // k == phi[lv - 1][np.arange(len(f)) // n]).all():
            checks["quotient"] = False
        for c in np.unique(e):
            members = np.flatnonzero(e == c)
            for a in members:
                for b in members:
                    pairs += 1
                    perm = np.tile(np.arange(n), (depth, 1))
                    for q in range(lv):
                        x, y = digits[lv][a, q], digits[lv][b, q]
                        perm[q, x], perm[q, y] = y, x
                    maps = []
                    for lw in range(depth + 1):
                        dw = digits[lw]
                        img = perm[np.arange(lw), dw]
                        m = img @ (n ** np.arange(lw - 1, -1, -1, dtype=np.int64))
                        maps.append(m)
                        if len(np.unique(m)) != len(m):
                            checks["automorphism"] = False
                        if lw and not (m // n == maps[lw - 1][np.arange(len(m)) // n]).all():
                            checks["automorphism"] = False
                        if not (eq[lw][m] == eq[lw]).all():
                            checks["preserves"] = False
                    if maps[lv][a] != b:
                        checks["hits"] = False
    return Calculus(n, depth, blocks, checks, pairs)
