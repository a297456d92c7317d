"""Acceptance criteria 1-12.

Each criterion is a function returning (ok, detail).  Under pytest every
criterion is one test and a PASS/FAIL summary line per criterion is printed
at the end of the session; run this file directly to get just the lines.
"""
import json
import os
import random
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

import oracles
from corpus import random_ter, random_tree, relation_corpus
from terlab import boolalg, branchspace, formats, largeness, simulator, ter, trees

ROOT = Path(__file__).resolve().parent.parent
SAMPLES = ROOT / "samples"
RESULTS = {}


def c1_honesty():
    corpus = relation_corpus()
    kinds = {"honest": 0, "dishonest": 0}
    bad = 0
    for rel in corpus:
        want = oracles.honest(rel)
        kinds["honest" if want else "dishonest"] += 1
        if ter.validate_ter(rel).honest != want:
            bad += 1
    ok = bad == 0 and len(corpus) >= 200 and kinds["dishonest"] > 0
    return ok, f"{len(corpus)} relations ({kinds['honest']} honest, {kinds['dishonest']} dishonest), {bad} mismatches"


def c2_niceness():
    corpus = relation_corpus()
    bad = 0
    for rel in corpus:
        everywhere = all(oracles.pi_equals_h(rel).values())
        nice = not oracles.disputes(rel)
        report = ter.projection_vs_h(rel)
        if everywhere != nice or report.everywhere != everywhere or report.nice != nice:
            bad += 1
    return bad == 0, f"{len(corpus)} relations, {bad} mismatches"


def c3_product():
    rng = random.Random(3)
    B2 = trees.full_tree([2, 2], "B2")
    pairs = [(B2, B2)]
    for k in range(2):
        pairs.append((random_tree(rng, 3, 2, 3, f"S{k}"), random_tree(rng, 3, 2, 3, f"T{k}")))
    fails = []
    for S, T in pairs:
        P, rel = ter.product_ter(S, T)
        g = ter.niceness_grade(rel, 2)
        Q, _ = ter.quotient_tree(rel)
        iso = branchspace.kurepa_backforth(S, Q)
        if not (g.grade == "nice" and g.m_nice and iso and oracles.is_tree_iso(S, Q, iso.mapping)):
            fails.append(f"{S.name}x{T.name}")
    return not fails, f"{len(pairs)} products" + (f", failing {','.join(fails)}" if fails else ", all nice, 2-nice, quotient iso to left factor")


def c4_frolik():
    total = bad = 0
    for n in range(1, 7):
        B = boolalg.FiniteBooleanAlgebra([f"x{i}" for i in range(n)])
        pt = largeness.PermutationTable(n)
        for perm in pt.perms.tolist():
            f = boolalg.BaAutomorphism.from_perm(B, perm)
            parts = largeness.frolik_partition(B, f)
            total += 1
            if not oracles.frolik_ok(n, perm, parts) or not all(largeness.frolik_clauses(B, f, parts).values()):
                bad += 1
    return bad == 0 and total == 873, f"{total} permutations of 1..6 atoms, {bad} failures"


def c5_fixed_points():
    groups = bad = 0
    for n in range(1, 7):
        B = boolalg.FiniteBooleanAlgebra([f"x{i}" for i in range(n)])
        pt, subgroups = largeness.generated_subgroups(n)
        perms = pt.perms.tolist()
        for gens, elems in subgroups:
            groups += 1
            autos = [boolalg.BaAutomorphism.from_perm(B, perms[g]) for g in gens]
            group = [boolalg.BaAutomorphism.from_perm(B, perms[e]) for e in elems.tolist()]
            fp = largeness.fixed_point_subalgebra(B, autos, group)
            want = oracles.fixed_elements(n, [perms[g] for g in gens])
            w = fp.certificate.witness
            ok = (sorted(fp.partition.elements()) == want
                  and fp.certificate.generated and fp.certificate.size <= n
                  and oracles.is_antichain(w) and oracles.generates(n, list(fp.partition.masks) + list(w)))
            bad += not ok
    return bad == 0, f"{groups} groups on 1..6 atoms, {bad} failures"


def _random_blocks(rng, n, k):
    atoms = list(range(n))
    rng.shuffle(atoms)
    return [sum(1 << a for a in atoms[i:i + k]) for i in range(0, n, k)]


def c6_decomposition():
    rng = random.Random(6)
    cases = bad = 0
    shapes = [(k, nb) for k in range(1, 7) for nb in range(1, 13) if k * nb <= 12]
    while cases < 60:
        k, nb = shapes[cases % len(shapes)]
        n = k * nb
        B = boolalg.FiniteBooleanAlgebra([f"x{i}" for i in range(n)])
        A = boolalg.SubalgebraPartition(B, _random_blocks(rng, n, k))
        d = largeness.large_decomposition(B, A, "Y")
        cases += 1
        if not d:
            bad += 1
            continue
        table, _ = largeness.decomposition_map(B, A, d.N, d.witness)
        count = oracles.transversal_partition_size(n, list(A.masks))
        ok = (d.iso and oracles.boolean_iso(n, table.tolist())
              and d.N == (B.full,) and d.f[B.full] == count)
        bad += not ok
    return bad == 0, f"{cases} pairs with 1..12 atoms, {bad} failures"


def c7_dense_split():
    cases = []
    for sp, alpha in (([4, 4, 4], 2), ([4, 4, 4, 4], 2), ([4, 4, 4, 4], 3), ([4, 4, 4, 2], 2)):
        cases.append((trees.full_tree(sp, limits=(alpha,)), alpha))
    fails = []
    for tree, alpha in cases:
        rel = ter.block_ter(tree)
        ds = ter.dense_split(rel, alpha)
        ds_d = ds.ter.disputes()
        grade = ter.niceness_grade(ds.ter).grade
        at_alpha = all(tree.level(d.s) == alpha for d in ds_d)
        B = boolalg.ro_algebra(tree)
        fine = ter.represented_subalgebra(ds.ter, B)
        coarse = ter.represented_subalgebra(rel, B)
        fp = largeness.fixed_point_subalgebra(ds.algebra, [ds.swap])
        n = len(ds.algebra)
        exact = n > 16 or sorted(fp.partition.elements()) == oracles.fixed_elements(n, [ds.swap.perm])
        ok = (grade == "almost_nice" and ds_d and at_alpha and fine.refines(coarse)
              and ds.lift(fp.partition) == coarse and exact)
        if not ok:
            fails.append(f"{tree.level_sizes()}@{alpha}")
    return not fails, f"{len(cases)} block trees" + (f", failing {' '.join(fails)}" if fails else ", almost nice with disputes only at the split level")


def _reduction_pairs(tree, rels, gammas, fams):
    front = tree.frontier()
    bad = checked = 0
    for rel in rels:
        for gamma in gammas:
            tables = branchspace.suitability_tables(tree, rel, gamma)
            red = branchspace.reduce_many(tables, fams)
            again = branchspace.reduce_many(tables, red)
            idx = np.arange(len(fams)) % len(front)
            bigger = fams | (np.uint64(1) << idx.astype(np.uint64))
            red_big = branchspace.reduce_many(tables, bigger)
            bad += int((again != red).sum()) + int((red & ~red_big).any())
            for f, r in zip(fams.tolist(), red.tolist()):
                fam = {front[i] for i in range(len(front)) if f >> i & 1}
                want = oracles.reduce(tree, rel, fam, gamma)
                got = {front[i] for i in range(len(front)) if r >> i & 1}
                checked += 1
                bad += want != got
            F = branchspace.FrontierFamily(tree, {front[i] for i in range(len(front)) if int(fams[-1]) >> i & 1}, gamma)
            bad += branchspace.reduce_suitable(F, rel).mask() != int(red[-1])
    return checked, bad


def c8_reduction():
    rng = random.Random(8)
    small = trees.full_tree([4, 4])
    rels = [ter.block_ter(small), ter.Ter.identity(small), ter.homogeneous_2nice(small, 1)[0]]
    rels += [random_ter(rng, small, p) for p in (0.4, 0.7, 0.9)]
    fams = np.arange(1 << 16, dtype=np.uint64)
    n1, b1 = _reduction_pairs(small, rels, (0, 1), fams)
    big = trees.full_tree([4, 4, 4])
    rels = [ter.block_ter(big), ter.homogeneous_2nice(big, 2)[0], random_ter(rng, big, 0.8)]
    sample = np.random.default_rng(8).integers(0, 2 ** 63, size=10000, dtype=np.uint64)
    sample |= np.random.default_rng(9).integers(0, 2, size=10000, dtype=np.uint64) << np.uint64(63)
    n2, b2 = _reduction_pairs(big, rels, (1,), sample)
    return b1 + b2 == 0, f"{n1} exhaustive + {n2} sampled (F, rel) pairs, {b1 + b2} mismatches"


def c9_simulator():
    sched = formats.load_schedule(SAMPLES / "canon.sched")
    tr = simulator.run_construction(sched)
    rep = simulator.verify_transcript(tr)
    ids = {c.id for c in rep.checks}
    want = {"seal.4", "kill.6", "preserve.E", "run.complete", "tree.normal"}
    good = rep.ok and want <= ids and tr.prefix_ok
    text = formats.write_transcript(tr)
    tampered = text.replace("node bab 3 ba\n", "node baa 3 ba\nnode bab 3 ba\n")
    bad_rep = simulator.verify_transcript(formats.parse_transcript(tampered))
    failed = [c.id for c in bad_rep.failed()]
    ok = good and tampered != text and failed == ["kill.6"]
    return ok, f"canonical run passes {len(rep.checks)} checks; tampered run fails {','.join(failed) or 'nothing'}"


def _relabel(rng, tree, name):
    """An isomorphic copy with shuffled sibling order and fresh ids."""
    new = {tree.root: "r"}
    recs = [("r", 0, None)]
    for x in tree.nodes:
        kids = list(tree.children(x))
        rng.shuffle(kids)
        for i, c in enumerate(kids):
            new[c] = new[x] + "xyzuvw"[i]
            recs.append((new[c], tree.level(c), new[x]))
    return trees.LevelledTree(recs, tree.height, tree.limits, name)


def c10_kurepa():
    rng = random.Random(10)
    iso_ok = iso_n = non_ok = non_n = 0
    for k in range(100):
        h = rng.randint(2, 5)
        if k % 2:
            S = trees.full_tree([rng.randint(1, 3) for _ in range(h - 1)], "S")
        else:
            S = random_tree(rng, h, 1, 3 if h < 5 else 2, "S")
        T = _relabel(rng, S, "T")
        r = branchspace.kurepa_backforth(S, T, seed=k)
        iso_n += 1
        iso_ok += bool(r) and oracles.is_tree_iso(S, T, r.mapping)
    while non_n < 100:
        h = rng.randint(2, 4)
        S, T = random_tree(rng, h, 1, 3, "S"), random_tree(rng, h, 1, 3, "T")
        if oracles.isomorphic(S, T):
            continue
        r = branchspace.kurepa_backforth(S, T, seed=non_n)
        non_n += 1
        non_ok += (not r) and oracles.invariant_holds(S, T, r.refusal)
    return iso_ok == iso_n and non_ok == non_n, f"isomorphic {iso_ok}/{iso_n}, refused correctly {non_ok}/{non_n}"


def c11_calculus():
    res = simulator.successor_calculus_52(4, (((0,), (1,)), ((2,), (3,))), depth=4)
    named = ("refines", "invariant", "hits", "automorphism", "quotient")
    ok = res.ok and all(res.checks[c] for c in named)
    return ok, f"n=4 after 4 steps, {res.pairs} equivalent pairs: " + " ".join(f"{c}={'ok' if v else 'FAIL'}" for c, v in res.checks.items())


def cli_invocations(out):
    s = str(SAMPLES)
    j = lambda name: os.path.join(s, name)
    return [
        ["validate-tree", j("B2.tree"), "--autos"],
        ["validate-tree", j("B2.tree"), "--product", j("B2.tree"), "--out", os.path.join(out, "p.tree")],
        ["validate-tree", j("Q4.tree"), "--restrict", "0,1,3"],
        ["validate-tree", j("B2.tree"), "--relativize", "a"],
        ["validate-tree", j("B2.tree"), "--sum", j("T3.tree")],
        ["validate-ter", j("D.tree"), j("D.ter")],
        ["validate-ter", j("Q4.tree"), j("Q.ter"), "--trace", "2:1"],
        ["quotient", j("Q4.tree"), j("Q.ter"), "--split", "2", "--out", os.path.join(out, "q")],
        ["--seed", "7", "quotient", j("Q4.tree"), "--homogeneous"],
        ["project", j("D.tree"), j("D.ter"), "--element", "aaa", "--relative", "aaa,aab,baa"],
        ["project", j("Q4.tree"), j("Q.ter")],
        ["large", j("P4.alg")],
        ["large", j("P4.alg"), "--square"],
        ["large", j("M5.alg"), "--m", "1"],
        ["large", j("B4.alg"), "--generate", "aa,ab", "--generate", "aa,ba"],
        ["frolik", j("P4.alg"), j("cycle.auto")],
        ["fixed-points", j("P4.alg"), j("swap.auto"), j("cycle.auto")],
        ["decompose", j("P4.alg")],
        ["decompose", j("M5.alg"), "--mode", "X"],
        ["--density", "1:2", "reduce", j("Q4.tree"), j("Q.ter"), "--drop", "aaa,aab,aba"],
        ["select", j("Q4.tree"), j("flip.sel"), j("Q.ter")],
        ["--seed", "5", "kurepa", j("B2.tree"), j("B2.tree")],
        ["kurepa", j("T3.tree"), j("T3b.tree")],
        ["simulate", j("canon.sched"), j("flip.sched"), "--jobs", "2", "--out", os.path.join(out, "sim")],
        ["--seed", "3", "simulate", "--red-green", j("Q4.tree"), j("Q.ter"), "2", "--out", os.path.join(out, "rg")],
        ["simulate", "--calculus", "0|1;2|3", "--steps", "3"],
        ["verify", j("canon.transcript")],
        ["--porcelain", "validate-ter", j("D.tree"), j("D.ter")],
        ["validate-tree", j("missing.tree")],
    ]


RUNNER = """
import contextlib, io, json, sys
from terlab.cli import main
out = []
for argv in json.loads(sys.argv[1]):
    buf, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(err):
        code = main(argv)
    out.append([code, buf.getvalue(), err.getvalue()])
print(json.dumps(out))
"""


def run_cli_batch(out, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed), PYTHONPATH=str(ROOT / "src"))
    proc = subprocess.run([sys.executable, "-c", RUNNER, json.dumps(cli_invocations(out))],
                          capture_output=True, text=True, env=env, check=True)
    files = {}
    for p in sorted(Path(out).rglob("*")):
        if p.is_file():
            files[str(p.relative_to(out))] = p.read_bytes()
    return json.loads(proc.stdout), files


def c12_determinism():
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        ra, fa = run_cli_batch(a, 1)
        rb, fb = run_cli_batch(b, 2)
    same = [x == y for x, y in zip(ra, rb)]
    ok = all(same) and fa == fb and len(ra) == len(cli_invocations("."))
    return ok, f"{sum(same)}/{len(same)} invocations and {len(fa)} output files byte-identical across runs"


CRITERIA = {
    1: c1_honesty, 2: c2_niceness, 3: c3_product, 4: c4_frolik, 5: c5_fixed_points, 6: c6_decomposition,
    7: c7_dense_split, 8: c8_reduction, 9: c9_simulator, 10: c10_kurepa, 11: c11_calculus, 12: c12_determinism,
}


def line(k):
    ok, detail = RESULTS[k]
    return f"{'PASS' if ok else 'FAIL'} criterion {k:>2}: {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    ok, detail = CRITERIA[k]()
    RESULTS[k] = (bool(ok), detail)
    assert ok, detail


if __name__ == "__main__":
    for k in sorted(CRITERIA):
        RESULTS[k] = CRITERIA[k]()
        print(line(k), flush=True)
