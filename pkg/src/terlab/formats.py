"""Text formats: trees, relations, algebras, automorphisms, selections,
schedules and transcripts.

Every format is UTF-8, one record per line, with a header line first.  Blank
lines and lines starting with ``#`` are ignored.  A ``-`` stands for an empty
list.
"""
from __future__ import annotations

import os

from .boolalg import AlgebraError, BaAutomorphism, FiniteBooleanAlgebra, SubalgebraPartition
from .branchspace import Constraints
from .simulator import (AutoPayload, Kill, Schedule, ScheduleError, Stage, TerPayload,
                        Transcript)
from .ter import Ter, TerError
from .trees import LevelledTree, TreeError


class FormatError(ValueError):
    pass


def read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from None


def _lines(text):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield no, line.split()


def _ids(field):
    if field == "-":
        return ()
    out = tuple(x for x in field.split(","))
    if any(not x for x in out):
        raise FormatError(f"empty id in list {field!r}")
    return out


def _list(items):
    return ",".join(items) if items else "-"


def _int(word, no):
    try:
        return int(word)
    except ValueError:
        raise FormatError(f"line {no}: expected an integer, got {word!r}") from None


def _expect(words, shape, no):
    """Check fixed keywords: ``shape`` holds a keyword or None per position."""
    if len(words) != len(shape) or any(k is not None and w != k for w, k in zip(words, shape)):
        want = " ".join(k or "<value>" for k in shape)
        raise FormatError(f"line {no}: expected '{want}'")


def _split_sections(text, heads):
    """Group lines into sections started by a header keyword."""
    sections, cur = [], None
    for no, w in _lines(text):
        if w[0] in heads:
            cur = (no, w, [])
            sections.append(cur)
        elif cur is None:
            raise FormatError(f"line {no}: record before any header")
        else:
            cur[2].append((no, w))
    return sections


# -- trees ----------------------------------------------------------------------------

def _tree_from(no, head, body):
    _expect(head, ("tree", None, "height", None, "limits", None), no)
    name, height = head[1], _int(head[3], no)
    limits = [_int(x, no) for x in _ids(head[5])]
    recs = []
    for n, w in body:
        _expect(w, ("node", None, None, None), n)
        recs.append((w[1], _int(w[2], n), None if w[3] == "-" else w[3]))
    try:
        tree = LevelledTree(recs, height, limits, name)
    except TreeError as exc:
        raise FormatError(str(exc)) from None
    for x in tree.nodes:
        p = tree.parent(x)
        if not 0 <= tree.level(x) < height:
            raise FormatError(f"node {x} at level {tree.level(x)} outside height {height}")
        if p is not None and tree.level(p) != tree.level(x) - 1:
            raise FormatError(f"node {x} at level {tree.level(x)} has parent {p} at level {tree.level(p)}")
    return tree


def parse_tree(text):
    secs = _split_sections(text, {"tree"})
    if len(secs) != 1:
        raise FormatError("expected exactly one tree")
    return _tree_from(*secs[0])


def write_tree(tree):
    lim = _list([str(a) for a in sorted(tree.limits)])
    out = [f"tree {tree.name} height {tree.height} limits {lim}"]
    for x in tree.nodes:
        p = tree.parent(x)
        out.append(f"node {x} {tree.level(x)} {'-' if p is None else p}")
    return "\n".join(out) + "\n"


# -- relations ------------------------------------------------------------------------

def _ter_raw(no, head, body):
    _expect(head, ("ter", None, "tree", None), no)
    classes = []
    for n, w in body:
        _expect(w, ("class", None, None), n)
        classes.append((_int(w[1], n), _ids(w[2])))
    return head[1], head[3], tuple(classes)


def parse_ter_raw(text):
    secs = _split_sections(text, {"ter"})
    if len(secs) != 1:
        raise FormatError("expected exactly one relation")
    return _ter_raw(*secs[0])


def bind_ter(tree, name, classes, treename=None):
    if treename is not None and treename != tree.name:
        raise FormatError(f"relation {name} is on tree {treename}, not {tree.name}")
    for lv, ids in classes:
        for x in ids:
            if x in tree and tree.level(x) != lv:
                raise FormatError(f"class at level {lv} lists {x} from level {tree.level(x)}")
    try:
        return Ter(tree, [ids for _, ids in classes], name)
    except TerError as exc:
        raise FormatError(str(exc)) from None


def parse_ter(text, tree):
    name, treename, classes = parse_ter_raw(text)
    return bind_ter(tree, name, classes, treename)


def _class_lines(classes):
    out = []
    for lv, ids in sorted(classes, key=lambda c: (c[0], sorted(c[1]))):
        if len(ids) > 1:
            out.append(f"class {lv} {_list(sorted(ids))}")
    return out


def write_ter(rel):
    tree = rel.tree
    classes = [(tree.level(g[0]), g) for g in rel.all_classes()]
    return "\n".join([f"ter {rel.name} tree {tree.name}"] + _class_lines(classes)) + "\n"


# -- algebras and automorphisms -------------------------------------------------------

def parse_algebra(text):
    """Returns the algebra and its subalgebra (None if no block lines)."""
    secs = _split_sections(text, {"algebra"})
    if len(secs) != 1:
        raise FormatError("expected exactly one algebra")
    no, head, body = secs[0]
    _expect(head, ("algebra", None, "atoms", None), no)
    try:
        B = FiniteBooleanAlgebra(_ids(head[3]), head[1])
        blocks = []
        for n, w in body:
            _expect(w, ("block", None), n)
            blocks.append(_ids(w[1]))
        return B, (SubalgebraPartition(B, blocks) if blocks else None)
    except AlgebraError as exc:
        raise FormatError(str(exc)) from None


def write_algebra(B, A=None):
    out = [f"algebra {B.name} atoms {_list(B.atoms)}"]
    if A is not None:
        out.extend(f"block {_list(b)}" for b in A.blocks)
    return "\n".join(out) + "\n"


def _auto_raw(no, head, body):
    _expect(head, ("auto", None, "algebra", None), no)
    mapping = {}
    for n, w in body:
        _expect(w, ("map", None, None), n)
        if w[1] in mapping:
            raise FormatError(f"line {n}: {w[1]} mapped twice")
        mapping[w[1]] = w[2]
    return head[1], head[3], mapping


def parse_auto_raw(text):
    secs = _split_sections(text, {"auto"})
    if len(secs) != 1:
        raise FormatError("expected exactly one automorphism")
    return _auto_raw(*secs[0])


def parse_auto(text, B):
    name, alg, mapping = parse_auto_raw(text)
    if alg != B.name:
        raise FormatError(f"automorphism {name} is on algebra {alg}, not {B.name}")
    unknown = sorted(set(mapping) - set(B.atoms) | set(mapping.values()) - set(B.atoms))
    if unknown:
        raise FormatError(f"unknown atom {unknown[0]} in automorphism {name}")
    try:
        return BaAutomorphism(B, mapping)
    except AlgebraError as exc:
        raise FormatError(f"automorphism {name}: {exc}") from None


def write_auto(name, algname, mapping):
    out = [f"auto {name} algebra {algname}"]
    out.extend(f"map {a} {b}" for a, b in sorted(mapping.items()) if a != b)
    return "\n".join(out) + "\n"


# -- selections -----------------------------------------------------------------------

def parse_select(text):
    """Returns (tree name, level, constraints, names of relations to stay suitable for)."""
    secs = _split_sections(text, {"select"})
    if len(secs) != 1:
        raise FormatError("expected exactly one selection")
    no, head, body = secs[0]
    _expect(head, ("select", "tree", None, "level", None, "density", None, None), no)
    meet, include, exclude, suitable = [], [], [], []
    for n, w in body:
        if w[0] not in ("meet", "include", "exclude", "suitable") or len(w) != 2:
            raise FormatError(f"line {n}: expected meet/include/exclude/suitable with one argument")
        {"meet": meet, "include": include, "exclude": exclude, "suitable": suitable}[w[0]].append(w[1])
    cons = Constraints(meet=tuple(_ids(m) for m in meet),
                       include=tuple(x for i in include for x in _ids(i)),
                       exclude=tuple(x for e in exclude for x in _ids(e)),
                       gamma=_int(head[6], no), c=_int(head[7], no))
    return head[2], _int(head[4], no), cons, tuple(suitable)


# -- schedules ------------------------------------------------------------------------

def parse_schedule(text, base=".", loader=read_text):
    secs = _split_sections(text, {"schedule"})
    if len(secs) != 1:
        raise FormatError("expected exactly one schedule")
    no, head, body = secs[0]
    _expect(head, ("schedule", None, "seed", None, "density", None, None), no)
    name = head[1]
    stages = []
    for n, w in body:
        if w[0] == "grow":
            _expect(w, ("grow", None, None), n)
            stages.append(Stage("grow", _int(w[1], n), _int(w[2], n)))
        elif w[0] == "limit":
            if len(w) not in (2, 3):
                raise FormatError(f"line {n}: expected 'limit <event> <payload>'")
            event, ref = w[1], (w[2] if len(w) == 3 else "-")
            stages.append(Stage("limit", event=event, payload=_payload(event, ref, name, base, loader, n)))
        else:
            raise FormatError(f"line {n}: unknown stage {w[0]}")
    try:
        return Schedule(name, _int(head[3], no), _int(head[5], no), _int(head[6], no), tuple(stages))
    except ScheduleError as exc:
        raise FormatError(str(exc)) from None


def _payload(event, ref, name, base, loader, no):
    if event == "seal":
        ids = _ids(ref)
        if not ids:
            raise FormatError(f"line {no}: seal needs node ids")
        return ids
    if event == "noop":
        return None
    if ref == "-":
        raise FormatError(f"line {no}: {event} needs a payload file")
    text = loader(os.path.join(base, ref))
    if event in ("preserve", "kill-ter"):
        tname, treename, classes = parse_ter_raw(text)
        if treename != name:
            raise FormatError(f"relation {tname} is on tree {treename}, not {name}")
        return TerPayload(tname, tuple(ids for _, ids in classes))
    if event == "kill-auto":
        aname, alg, mapping = parse_auto_raw(text)
        if alg != name:
            raise FormatError(f"map {aname} is on {alg}, not {name}")
        return AutoPayload(aname, mapping)
    raise FormatError(f"line {no}: unknown event {event}")


def load_schedule(path):
    return parse_schedule(read_text(path), os.path.dirname(os.path.abspath(path)))


# -- transcripts ----------------------------------------------------------------------

def write_transcript(tr):
    out = [f"transcript {tr.name} seed {tr.seed} density {tr.offset} {tr.c}"]
    out.extend(tr.stages)
    if tr.refusal:
        out.append(f"refusal {tr.refusal[0]} {tr.refusal[1]}")
    for k, ids in tr.seals:
        out.append(f"seal {k} {_list(ids)}")
    for kl in tr.kills:
        out.append(f"kill {kl.stage} {kl.kind} {kl.name} level {kl.level} gamma {kl.gamma} "
                   f"include {kl.include} exclude {_list(kl.exclude)}")
    for name in tr.preserved:
        out.append(f"preserve {name}")
    out.append(write_tree(tr.tree).rstrip("\n"))
    for name in sorted(tr.ters):
        out.append(f"ter {name} tree {tr.tree.name}")
        out.extend(_class_lines(tr.ters[name]))
    for name in sorted(tr.autos):
        out.append(write_auto(name, tr.tree.name, tr.autos[name]).rstrip("\n"))
    return "\n".join(out) + "\n"


def parse_transcript(text):
    secs = _split_sections(text, {"transcript", "tree", "ter", "auto"})
    if not secs or secs[0][1][0] != "transcript":
        raise FormatError("expected a transcript header")
    no, head, body = secs[0]
    _expect(head, ("transcript", None, "seed", None, "density", None, None), no)
    tr = Transcript(head[1], _int(head[3], no), _int(head[5], no), _int(head[6], no))
    for n, w in body:
        if w[0] == "stage":
            tr.stages.append(" ".join(w))
        elif w[0] == "refusal":
            tr.refusal = (_int(w[1], n), " ".join(w[2:]))
        elif w[0] == "seal":
            _expect(w, ("seal", None, None), n)
            tr.seals.append((_int(w[1], n), _ids(w[2])))
        elif w[0] == "kill":
            _expect(w, ("kill", None, None, None, "level", None, "gamma", None, "include", None, "exclude", None), n)
            if w[2] not in ("ter", "auto"):
                raise FormatError(f"line {n}: unknown kill kind {w[2]}")
            tr.kills.append(Kill(_int(w[1], n), w[2], w[3], _int(w[5], n), _int(w[7], n), w[9], _ids(w[11])))
        elif w[0] == "preserve":
            _expect(w, ("preserve", None), n)
            tr.preserved.append(w[1])
        else:
            raise FormatError(f"line {n}: unknown transcript record {w[0]}")
    for no, head, body in secs[1:]:
        if head[0] == "tree":
            if tr.tree is not None:
                raise FormatError(f"line {no}: second tree")
            tr.tree = _tree_from(no, head, body)
        elif head[0] == "ter":
            name, _, classes = _ter_raw(no, head, body)
            tr.ters[name] = classes
        else:
            name, _, mapping = _auto_raw(no, head, body)
            tr.autos[name] = mapping
    if tr.tree is None:
        raise FormatError("transcript has no tree")
    for kl in tr.kills:
        if kl.name not in (tr.ters if kl.kind == "ter" else tr.autos):
            raise FormatError(f"kill at stage {kl.stage} names missing {kl.kind} {kl.name}")
    for name in tr.preserved:
        if name not in tr.ters:
            raise FormatError(f"preserved relation {name} is missing")
    return tr
