"""Command-line front end.

Every subcommand prints a sorted ``PASS|FAIL <check-id> <detail>`` report and
exits 0 when all checks pass, 1 when one fails and 2 on bad input.  Library
functions are called through their modules so that the dispatch can be
audited.
"""
from __future__ import annotations

import os
import sys
from concurrent.futures import ProcessPoolExecutor

import click

from . import boolalg, branchspace, formats, largeness, simulator, ter, trees
from .report import Report

INPUT_ERRORS = (formats.FormatError, trees.TreeError, ter.TerError, boolalg.AlgebraError,
                branchspace.SelectionError, simulator.ScheduleError)


class Opts:
    def __init__(self, seed, density, max_autos, porcelain):
        self.seed = seed
        self.offset, self.c = density
        self.max_autos = max_autos
        self.porcelain = porcelain


def _density(ctx, param, value):
    try:
        off, c = value.split(":")
        off, c = int(off), int(c)
    except ValueError:
        raise click.BadParameter("expected <gamma-offset>:<c>") from None
    if off < 0 or c < 0:
        raise click.BadParameter("offset and c must be non-negative")
    return off, c


def _emit(rep):
    opts = click.get_current_context().find_object(Opts)
    click.echo(rep.render(opts.porcelain), nl=False)
    return 0 if rep.ok else 1


def _set(B, mask):
    return "{" + ",".join(B.members(mask)) + "}"


def _load_tree(path):
    return formats.parse_tree(formats.read_text(path))


def _load_ter(path, tree):
    return formats.parse_ter(formats.read_text(path), tree)


def _load_algebra(path):
    return formats.parse_algebra(formats.read_text(path))


def _ids(value):
    return tuple(x for x in value.split(",") if x) if value else ()


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise formats.FormatError(f"cannot write {path}: {exc.strerror}") from None


def _sizes(tree):
    return ",".join(map(str, tree.level_sizes()))


@click.group()
@click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=0, help="Seed for every seeded choice.")
@click.option("--density", default="2:2", callback=_density, help="Resolution offset and multiplicity, as off:c.")
@click.option("--max-autos", type=click.IntRange(1), default=1000, help="Bound on enumerated automorphisms.")
@click.option("--porcelain", is_flag=True, help="Emit key=value lines.")
@click.pass_context
def cli(ctx, seed, density, max_autos, porcelain):
    """Normal trees, tree equivalence relations and their algebras."""
    ctx.obj = Opts(seed, density, max_autos, porcelain)


# -- trees ------------------------------------------------------------------------------

def _normal_checks(rep, tree, strict, prefix=""):
    v = trees.validate_normal(tree, strict)
    clauses = trees.CLAUSES if strict else tuple(c for c in trees.CLAUSES if c != "splitting")
    for clause in clauses:
        bad = [x for x in v.violations if x.clause == clause]
        if bad:
            for x in bad:
                rep.add(f"{prefix}normal.{clause}", False, x.message)
        else:
            rep.add(f"{prefix}normal.{clause}", True)
    return v


@cli.command("validate-tree")
@click.argument("tree_file")
@click.option("--lenient", is_flag=True, help="Skip the splitting clause.")
@click.option("--restrict", "levels", help="Keep these levels (comma list containing 0).")
@click.option("--relativize", "node", help="Cone above this node.")
@click.option("--product", "other_p", help="Tree product with this tree.")
@click.option("--sum", "other_s", help="Tree sum with this tree.")
@click.option("--autos", is_flag=True, help="Enumerate automorphisms.")
@click.option("--out", help="Write the transformed tree here.")
def validate_tree(tree_file, lenient, levels, node, other_p, other_s, autos, out):
    """Check normality; optionally transform the tree or count its automorphisms."""
    opts = click.get_current_context().find_object(Opts)
    tree = _load_tree(tree_file)
    rep = Report()
    _normal_checks(rep, tree, not lenient)
    given = [x for x in (levels, node, other_p, other_s) if x is not None]
    if len(given) > 1:
        raise click.UsageError("give at most one of --restrict, --relativize, --product, --sum")
    result = None
    if levels is not None:
        try:
            lv = [int(x) for x in _ids(levels)]
        except ValueError:
            raise click.BadParameter("levels must be integers") from None
        result = trees.restrict(tree, lv)
    elif node is not None:
        result = trees.relativize(tree, node)
    elif other_p is not None:
        result = trees.tree_product(tree, _load_tree(other_p))
    elif other_s is not None:
        result = trees.tree_sum(tree, _load_tree(other_s))
    if result is not None:
        rep.add("result.sizes", True, _sizes(result))
        _normal_checks(rep, result, not lenient, "result.")
        if out:
            _write(out, formats.write_tree(result))
    elif out:
        raise click.UsageError("--out needs a transformation")
    if autos:
        found, truncated = trees.enumerate_automorphisms(tree, opts.max_autos)
        rep.add("autos.count", True, f"{len(found)}" + (" (truncated)" if truncated else ""))
        rep.add("autos.identity-first", found[0].is_identity())
        if len(found) <= 64 and not truncated:
            keys = {a.key() for a in found}
            closed = all(a.compose(b).key() in keys for a in found for b in found)
            closed = closed and all(a.inverse().key() in keys for a in found)
            rep.add("autos.group", closed, "closed under composition and inverse" if closed else "not closed")
    return _emit(rep)


# -- relations --------------------------------------------------------------------------

@cli.command("validate-ter")
@click.argument("tree_file")
@click.argument("ter_file")
@click.option("--m", "m", type=click.IntRange(1), default=2, help="Multiplicity for m-niceness.")
@click.option("--trace", help="Check class traces at a limit level, as alpha:gamma.")
def validate_ter(tree_file, ter_file, m, trace):
    """Clauses of a tree equivalence relation, disputes and niceness."""
    tree = _load_tree(tree_file)
    rel = _load_ter(ter_file, tree)
    rep = Report()
    r = ter.validate_ter(rel)
    if r.compat:
        for a, b in r.compat:
            rep.add("ter.compatible", False, f"{a} ~ {b} but their parents are not")
    else:
        rep.add("ter.compatible", True)
        q = r.quotient_report
        rep.add("ter.quotient", q.valid, "; ".join(v.message for v in q.violations) or "normal")
    rep.add("disputes.count", True, f"{len(r.disputes)}")
    if r.unwitnessed:
        for d in r.unwitnessed:
            rep.add("honest.dispute", False, d.label())
    else:
        rep.add("honest", True)
    g = ter.niceness_grade(rel, m)
    rep.add("grade", True, f"{g.grade} {m}-nice={'yes' if g.m_nice else 'no'}")
    if trace:
        try:
            alpha, gamma = (int(x) for x in trace.split(":"))
        except ValueError:
            raise click.BadParameter("expected alpha:gamma", param_hint="--trace") from None
        for ct in ter.class_trace_density(rel, alpha, gamma):
            detail = f"class {ct.members[0]}" + (f" misses {','.join(ct.missing)}" if ct.missing else "")
            rep.add(f"trace.{alpha}", ct.ok, detail)
    return _emit(rep)


@cli.command("quotient")
@click.argument("tree_file")
@click.argument("ter_file", required=False)
@click.option("--split", "alpha", type=int, help="Dense split above this limit level.")
@click.option("--gamma", type=int, help="Resolution for --split (default alpha-1).")
@click.option("--homogeneous", is_flag=True, help="Build the 2-nice relation of a homogeneous tree.")
@click.option("--out", help="Directory for the resulting tree and relation files.")
def quotient(tree_file, ter_file, alpha, gamma, homogeneous, out):
    """Quotient trees, dense splits and relations on homogeneous trees."""
    opts = click.get_current_context().find_object(Opts)
    tree = _load_tree(tree_file)
    rep = Report()
    files = {}
    if homogeneous:
        rel, phi = ter.homogeneous_2nice(tree, opts.seed)
        bad = phi.check()
        rep.add("homogeneous.classes", True, f"{len(rel.all_classes())}")
        rep.add("homogeneous.phi", not bad, "identity, composition, coherence hold" if not bad else " ".join(bad[0]))
        files[f"{rel.name}.ter"] = formats.write_ter(rel)
    elif ter_file is None:
        raise click.UsageError("a relation file is needed unless --homogeneous is given")
    else:
        rel = _load_ter(ter_file, tree)
    if alpha is not None:
        ds = ter.dense_split(rel, alpha, opts.seed, gamma)
        fixed = ds.lift(largeness.orbit_partition(ds.algebra, [ds.swap]))
        rep.add("split.classes", True, f"{len(ds.ter.all_classes())} from {len(rel.all_classes())}")
        rep.add("split.fixed", fixed == boolalg.SubalgebraPartition(fixed.algebra, _rep_masks(rel)),
                "swap fixes exactly the original subalgebra")
        w = ds.witness
        rep.add("split.witness", ds.swap(w) == ds.algebra.complement(w), f"{bin(w).count('1')} of {len(ds.algebra)} blocks")
        files[f"{ds.ter.name}.ter"] = formats.write_ter(ds.ter)
        rel = ds.ter
    q, _ = ter.quotient_tree(rel)
    rep.add("quotient.sizes", True, _sizes(q))
    files[f"{q.name.replace('/', '_')}.tree"] = formats.write_tree(q)
    if out:
        os.makedirs(out, exist_ok=True)
        for name, text in sorted(files.items()):
            _write(os.path.join(out, name), text)
    return _emit(rep)


def _rep_masks(rel):
    # blocks of the represented subalgebra, by chain signature
    tree = rel.tree
    atoms = tree.maximal()
    sig = {}
    for i, y in enumerate(atoms):
        key = tuple(rel.cls(c) for c in tree.chain(y))
        sig[key] = sig.get(key, 0) | (1 << i)
    return list(sig.values())


@cli.command("project")
@click.argument("tree_file")
@click.argument("ter_file")
@click.option("--element", help="Upper projection of this set of maximal nodes.")
@click.option("--relative", help="Trace of the subalgebra on this set of maximal nodes.")
@click.option("--gamma", type=int, help="Resolution for the nice part (default frontier-2).")
@click.option("--out", help="Write the represented subalgebra here.")
def project(tree_file, ter_file, element, relative, gamma, out):
    """The represented subalgebra, the projections and the nice part."""
    tree = _load_tree(tree_file)
    rel = _load_ter(ter_file, tree)
    rep = Report()
    B = boolalg.ro_algebra(tree)
    A = ter.represented_subalgebra(rel, B)
    rep.add("represented.blocks", True, f"{len(A)} of {len(B)} atoms")
    pr = ter.projection_vs_h(rel)
    dis = pr.disagreements()
    rep.add("projection.agree", True, f"{len(pr.agree)}/{len(pr.pi)}" + (f" differ at {','.join(dis)}" if dis else ""))
    rep.add("projection.nice", pr.everywhere == pr.nice,
            f"agreement everywhere={'yes' if pr.everywhere else 'no'} nice={'yes' if pr.nice else 'no'}")
    succ = ter.successor_levels(tree)
    on_succ = all(x in pr.agree for x in tree.nodes if tree.level(x) in succ)
    rep.add("projection.successor", on_succ == pr.no_successor_disputes,
            f"agreement on successor levels={'yes' if on_succ else 'no'}")
    if element is not None:
        b = B.mask(_ids(element))
        rep.add("projection.h", True, f"{_set(B, b)} -> {_set(B, boolalg.upper_projection(B, A, b))}")
    if relative is not None:
        b = B.mask(_ids(relative))
        sub, trace = boolalg.relative_algebra(B, b, A)
        rep.add("relative.blocks", True, " ".join(_set(sub, m) for m in trace.masks))
    ns = largeness.nice_part_split(rel, gamma)
    rep.add("nice.part", True, f"nice={_set(B, ns.b_nice)} rest={_set(B, ns.b_rest)} large={_set(B, ns.b_large)}")
    rep.add("nice.hereditary", ns.hereditary)
    rep.add("nice.sum-closed", True, "yes" if ns.sum_closed else "no")
    if out:
        _write(out, formats.write_algebra(B, A))
    return _emit(rep)


# -- algebras ---------------------------------------------------------------------------

@cli.command("large")
@click.argument("algebra_file")
@click.option("--generate", multiple=True, help="Generate the subalgebra from these elements instead of the blocks.")
@click.option("--square", is_flag=True, help="Use the diagonal of the algebra squared.")
@click.option("--m", "m", type=click.IntRange(0), help="Refuse witnesses larger than this.")
def large(algebra_file, generate, square, m):
    """Local equality set, optimal witnesses and largeness certificates."""
    B, A = _load_algebra(algebra_file)
    rep = Report()
    if generate:
        if A is not None:
            raise click.UsageError("--generate conflicts with block lines in the algebra file")
        A = boolalg.complete_subalgebra(B, [B.mask(_ids(g)) for g in generate])
    if square:
        P = boolalg.product_algebra([B, B])
        B, A = P.algebra, P.diagonal()
    if A is None:
        raise formats.FormatError("the algebra file has no block lines")
    rep.add("subalgebra.blocks", True, " ".join(_set(B, b) for b in A.masks))
    le = largeness.local_equality_set(B, A)
    rep.add("x.count", True, f"{le.x_count}")
    rep.add("y.count", True, f"{len(le.y)}")
    rep.add("y.image", True, " ".join(_set(B, h) for h in le.h_of_y))
    for name, ok in sorted(le.checks.items()):
        rep.add(f"x.{name}", ok)
    cert = largeness.mu_large(B, A, m)
    if cert:
        rep.add("large.certificate", cert.generated,
                f"size {cert.size} M=[{' '.join(_set(B, w) for w in cert.witness)}]")
    else:
        rep.add("large.certificate", False, cert.reason)
    return _emit(rep)


def _load_autos(B, paths):
    return [formats.parse_auto(formats.read_text(p), B) for p in paths]


@cli.command("frolik")
@click.argument("algebra_file")
@click.argument("auto_file")
def frolik(algebra_file, auto_file):
    """Frolik partition of an automorphism."""
    B, _ = _load_algebra(algebra_file)
    (f,) = _load_autos(B, [auto_file])
    parts = largeness.frolik_partition(B, f)
    rep = Report()
    rep.add("frolik.parts", True, " ".join(f"a{i}={_set(B, p)}" for i, p in enumerate(parts)))
    for name, ok in sorted(largeness.frolik_clauses(B, f, parts).items()):
        rep.add(f"frolik.{name}", ok)
    return _emit(rep)


@cli.command("fixed-points")
@click.argument("algebra_file")
@click.argument("auto_files", nargs=-1, required=True)
def fixed_points(algebra_file, auto_files):
    """Subalgebra of elements fixed by a group of automorphisms."""
    B, _ = _load_algebra(algebra_file)
    gens = _load_autos(B, auto_files)
    fp = largeness.fixed_point_subalgebra(B, gens)
    rep = Report()
    rep.add("fixed.blocks", True, " ".join(_set(B, b) for b in fp.partition.masks))
    rep.add("fixed.group", True, f"order {fp.group_size}")
    if len(B) <= 16:
        brute = largeness.fixed_elements(B, gens)
        rep.add("fixed.exact", sorted(fp.partition.elements()) == brute, f"{len(brute)} fixed elements")
    rep.add("fixed.certificate", fp.certificate.generated,
            f"size {fp.certificate.size} M=[{' '.join(_set(B, w) for w in fp.certificate.witness)}]")
    rep.add("fixed.replay", fp.replay, "Frolik pieces generate with the fixed points")
    return _emit(rep)


@cli.command("decompose")
@click.argument("algebra_file")
@click.option("--mode", type=click.Choice(["Y", "X"]), default="Y", show_default=True)
def decompose(algebra_file, mode):
    """Product decomposition of the algebra over its subalgebra."""
    B, A = _load_algebra(algebra_file)
    if A is None:
        raise formats.FormatError("the algebra file has no block lines")
    d = largeness.large_decomposition(B, A, mode)
    rep = Report()
    if not d:
        rep.add("decompose.refused", False, d.reason)
        return _emit(rep)
    rep.add("decompose.factors", True, " ".join(f"{_set(B, a)}^{d.f[a]}" for a in d.N))
    rep.add("decompose.iso", d.iso, "the map is a Boolean isomorphism" if d.iso else "the map is not an isomorphism")
    return _emit(rep)


# -- branch families ----------------------------------------------------------------------

@cli.command("reduce")
@click.argument("tree_file")
@click.argument("ter_file")
@click.option("--drop", help="Frontier nodes missing from the family.")
def reduce(tree_file, ter_file, drop):
    """Density of a frontier family and its reduction to suitability."""
    opts = click.get_current_context().find_object(Opts)
    tree = _load_tree(tree_file)
    rel = _load_ter(ter_file, tree)
    gamma = branchspace.default_gamma(tree, opts.offset)
    F = branchspace.FrontierFamily.full(tree, gamma, opts.c)
    gone = set(_ids(drop))
    unknown = sorted(gone - set(tree.frontier()))
    if unknown:
        raise formats.FormatError(f"{unknown[0]} is not a frontier node")
    F = F.with_branches(F.branches - gone)
    rep = Report()
    for x, k in branchspace.is_dense(F).counts:
        rep.add(f"dense.{gamma}", k >= opts.c, f"{x} carries {k}")
    R = branchspace.reduce_suitable(F, rel)
    removed = sorted(F.branches - R.branches, key=tree.index)
    rep.add("reduce.kept", True, f"{len(R.branches)}/{len(F.branches)}" + (f" removed {','.join(removed)}" if removed else ""))
    return _emit(rep)


@cli.command("select")
@click.argument("tree_file")
@click.argument("select_file")
@click.argument("ter_files", nargs=-1)
def select(tree_file, select_file, ter_files):
    """Diagonal selection of frontier nodes under constraints."""
    tree = _load_tree(tree_file)
    treename, level, cons, wanted = formats.parse_select(formats.read_text(select_file))
    if treename != tree.name:
        raise formats.FormatError(f"selection is for tree {treename}, not {tree.name}")
    if level != tree.frontier_level:
        raise formats.FormatError(f"selection level {level} is not the frontier level {tree.frontier_level}")
    rels = {r.name: r for r in (_load_ter(p, tree) for p in ter_files)}
    missing = [n for n in wanted if n not in rels]
    if missing:
        raise formats.FormatError(f"no relation file for {missing[0]}")
    cons = branchspace.Constraints(cons.meet, cons.include, cons.exclude,
                                   tuple(rels[n] for n in wanted), cons.gamma, cons.c)
    F = branchspace.diagonal_select(tree, cons)
    rep = Report()
    if not F:
        rep.add("select.refused", False, F.reason)
    else:
        rep.add("select.size", True, f"{len(F.branches)}/{len(tree.frontier())}")
        dropped = sorted(set(tree.frontier()) - F.branches, key=tree.index)
        rep.add("select.dropped", True, ",".join(dropped) or "-")
    return _emit(rep)


@cli.command("kurepa")
@click.argument("tree_a")
@click.argument("tree_b")
def kurepa(tree_a, tree_b):
    """Back-and-forth isomorphism between two trees."""
    opts = click.get_current_context().find_object(Opts)
    S, T = _load_tree(tree_a), _load_tree(tree_b)
    r = branchspace.kurepa_backforth(S, T, opts.seed)
    rep = Report()
    if not r:
        rep.add("kurepa.refused", False, r.refusal)
        return _emit(rep)
    rep.add("kurepa.iso", True, f"{len(r.steps)} steps")
    ok = (sorted(r.mapping.values()) == sorted(T.nodes) and
          all(T.level(r.mapping[x]) == S.level(x) and
              (S.parent(x) is None or r.mapping[S.parent(x)] == T.parent(r.mapping[x])) for x in S.nodes))
    rep.add("kurepa.verified", ok)
    return _emit(rep)


# -- simulation ---------------------------------------------------------------------------

def _simulate_one(path, out):
    sched = formats.load_schedule(path)
    tr = simulator.run_construction(sched)
    text = formats.write_transcript(tr)
    if out:
        d = os.path.join(out, sched.name)
        os.makedirs(d, exist_ok=True)
        _write(os.path.join(d, f"{sched.name}.transcript"), text)
        _write(os.path.join(d, f"{sched.name}.tree"), formats.write_tree(tr.tree))
        for name in sorted(tr.ters):
            rel = simulator._bind(tr.tree, tr.ters[name], name)
            _write(os.path.join(d, f"{name}.ter"), formats.write_ter(rel))
    rep = Report()
    for line in tr.stages:
        w = line.split()
        rep.add(f"{sched.name}.stage.{int(w[1]):03d}", "refused" not in w, " ".join(w[2:]))
    if tr.refusal:
        rep.add(f"{sched.name}.complete", False, f"refused at stage {tr.refusal[0]}: {tr.refusal[1]}")
    else:
        rep.add(f"{sched.name}.complete", True)
    rep.add(f"{sched.name}.prefix", tr.prefix_ok)
    return rep.checks


@cli.command("simulate")
@click.argument("schedules", nargs=-1)
@click.option("--out", help="Directory for transcripts and final files (one subdirectory per run).")
@click.option("--jobs", type=click.IntRange(1), default=1, help="Run schedules in parallel.")
@click.option("--red-green", "red_green", nargs=3, help="TREE TER ALPHA: the red/green step.")
@click.option("--calculus", help="Blocks for the successor calculus, e.g. '0|1;2|3'.")
@click.option("--steps", type=click.IntRange(0), default=4, help="Successor steps for --calculus.")
def simulate(schedules, out, jobs, red_green, calculus, steps):
    """Run construction schedules and the local construction steps."""
    opts = click.get_current_context().find_object(Opts)
    if not (schedules or red_green or calculus):
        raise click.UsageError("nothing to simulate")
    names = [formats.load_schedule(p).name for p in schedules]
    if len(set(names)) != len(names):
        raise click.UsageError("schedule names must be distinct")
    rep = Report()
    if jobs > 1 and len(schedules) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_simulate_one, schedules, [out] * len(schedules)))
    else:
        results = [_simulate_one(p, out) for p in schedules]
    for checks in results:
        rep.checks.extend(checks)
    if red_green:
        tree = _load_tree(red_green[0])
        rel = _load_ter(red_green[1], tree)
        try:
            alpha = int(red_green[2])
        except ValueError:
            raise click.BadParameter("ALPHA must be an integer", param_hint="--red-green") from None
        rg = simulator.red_green_stage(rel, alpha, seed=opts.seed)
        for name, ok in sorted(rg.clauses.items()):
            rep.add(f"redgreen.{name}", ok)
        levels = sorted({tree.level(d.s) for d in rg.ter.disputes()})
        rep.add("redgreen.disputes", True, f"{len(rg.ter.disputes())} at levels {','.join(map(str, levels)) or '-'}")
        if out:
            os.makedirs(out, exist_ok=True)
            _write(os.path.join(out, f"{rel.name}-rg.ter"), formats.write_ter(rg.ter))
    if calculus:
        try:
            blocks = [[[int(v) for v in sb.split(",")] for sb in b.split("|")] for b in calculus.split(";")]
        except ValueError:
            raise click.BadParameter("expected blocks like '0|1;2|3'", param_hint="--calculus") from None
        n = sum(len(sb) for b in blocks for sb in b)
        res = simulator.successor_calculus_52(n, blocks, steps)
        for name, ok in sorted(res.checks.items()):
            rep.add(f"calculus.{name}", ok, f"n={n} steps={steps} pairs={res.pairs}")
    return _emit(rep)


@cli.command("verify")
@click.argument("transcript_file")
def verify(transcript_file):
    """Re-check a transcript from scratch."""
    opts = click.get_current_context().find_object(Opts)
    tr = formats.parse_transcript(formats.read_text(transcript_file))
    return _emit(simulator.verify_transcript(tr, opts.max_autos))


def main(argv=None):
    try:
        rv = cli.main(args=argv, prog_name="terlab", standalone_mode=False)
    except click.ClickException as exc:
        click.echo(f"terlab: {exc.format_message()}", err=True)
        return 2
    except click.exceptions.Abort:
        click.echo("terlab: aborted", err=True)
        return 2
    except INPUT_ERRORS as exc:
        click.echo(f"terlab: {exc}", err=True)
        return 2
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
