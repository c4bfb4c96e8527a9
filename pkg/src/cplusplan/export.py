"""Dumps and readers for the intermediate program forms.

Two flavors:

* ``native``: a line-oriented format that round-trips losslessly (up to id
  interning).  Header lines declare the constants with their domains; every
  rule or law is one line, formulas fully parenthesized; a final ``#end.``
  line guards against truncation.
* ``asp-normal``: a best-effort rendering of the normal-rule fragment in
  conventional logic-program syntax, one atom name per timed constant/value
  pair.  Rules whose bodies are not conjunctions of literals are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import mvpf
from .ground import GroundLaw, GroundLawSet, GroundQuery, SymbolTable
from .syntax import LawShape, TimeRef
from .translate import (
    IncrementalProgram,
    PAtom,
    PropProgram,
    PropRule,
    TAtom,
    TemplateRule,
    _timed_consts,
    formula_leaves,
    query_rules,
)


class ExportError(Exception):
    pass


class FormatError(ExportError):
    """Malformed or truncated dump; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class OutsideNormalFragment(ExportError):
    """The program does not fit the normal-rule fragment."""

    def __init__(self, rule_id: int, message: str):
        self.rule_id = rule_id
        super().__init__(f"rule {rule_id}: {message}")


@dataclass(frozen=True)
class ExportProfile:
    flavor: str = "native"  # "native" or "asp-normal"
    include_uec: bool = True
    symbol_table: bool = True


# ---------------------------------------------------------------------------
# Shared text helpers

_SHAPE_TEXT = {
    LawShape.STATIC: "static",
    LawShape.ACTION_DYNAMIC: "action-dynamic",
    LawShape.FLUENT_DYNAMIC: "fluent-dynamic",
}
_TEXT_SHAPE = {v: k for k, v in _SHAPE_TEXT.items()}

_OPS = {mvpf.And: "&", mvpf.Or: "|", mvpf.Impl: "->"}


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _fmt(f, leaf) -> str:
    if isinstance(f, mvpf.Bot):
        return "false"
    if isinstance(f, mvpf.Neg):
        return "-" + _fmt(f.sub, leaf)
    op = _OPS.get(type(f))
    if op is not None:
        return f"({_fmt(f.left, leaf)} {op} {_fmt(f.right, leaf)})"
    return leaf(f)


def _decode_label(label: str):
    """Invert the printable form of a value (booleans, ints, names)."""
    if label == "false":
        return False
    if label == "true":
        return True
    if re.fullmatch(r"-?\d+", label):
        return int(label)
    return label


# ---------------------------------------------------------------------------
# Native writer

def _mv_leaf(symbols: SymbolTable):
    def leaf(a) -> str:
        name = symbols.by_id[a.const].name
        return f"{_q(name)}={_q(symbols.value_label(a.value))}"

    return leaf


def _timed_leaf(symbols: SymbolTable):
    def leaf(a) -> str:
        name = symbols.by_id[a.const].name
        return f"{a.step}:{_q(name)}={_q(symbols.value_label(a.value))}"

    return leaf


def _template_leaf(symbols: SymbolTable):
    def leaf(a) -> str:
        step = "t" if a.rel == 0 else "t-1"
        name = symbols.by_id[a.const].name
        return f"{step}:{_q(name)}={_q(symbols.value_label(a.value))}"

    return leaf


def _const_lines(symbols: SymbolTable) -> list[str]:
    lines = []
    for gc in symbols.order:
        dom = ", ".join(_q(symbols.value_label(v)) for v in gc.dom)
        lines.append(f"#const {_q(gc.name)} {gc.kind} ({dom}).")
    return lines


def _timeref_text(tr: TimeRef) -> str:
    sign = "-" if tr.offset < 0 else "+"
    return f"{tr.base}{sign}{abs(tr.offset)}"


def _query_lines(q: GroundQuery, symbols: SymbolTable) -> list[str]:
    leaf = _mv_leaf(symbols)
    hi = "inf" if q.max_step is None else str(q.max_step)
    lines = [f"#query {_q(q.label)} {q.min_step} {hi}."]
    for tr, f in q.lines:
        lines.append(f"#qline {_q(q.label)} at {_timeref_text(tr)} {_fmt(f, leaf)}.")
    return lines


def export_ground(gls: GroundLawSet, profile: ExportProfile = ExportProfile()) -> str:
    if profile.flavor != "native":
        raise ExportError("ground laws only have a native form")
    leaf = _mv_leaf(gls.symbols)
    out = ["#format ground-laws 1."]
    out.extend(_const_lines(gls.symbols))
    for law in gls.laws:
        head = "false" if law.head is None else leaf(mvpf.MvAtom(*law.head))
        line = f"#law {_SHAPE_TEXT[law.shape]} {head} <- {_fmt(law.cond, leaf)}"
        if law.after is not None:
            line += f" after {_fmt(law.after, leaf)}"
        out.append(line + ".")
    for label in sorted(gls.queries):
        out.extend(_query_lines(gls.queries[label], gls.symbols))
    out.append("#end.")
    return "\n".join(out) + "\n"


def _rule_line(rule: PropRule, leaf) -> str:
    head = "false" if rule.head is None else leaf(rule.head)
    return f"#rule {rule.tag} {head} <- {_fmt(rule.body, leaf)}."


def export_prop(prog: PropProgram, profile: ExportProfile = ExportProfile()) -> str:
    if profile.flavor == "asp-normal":
        return _export_normal_prop(prog, profile)
    symbols = prog.gls.symbols
    leaf = _timed_leaf(symbols)
    out = ["#format prop-program 1.", f"#horizon {prog.horizon}."]
    out.extend(_const_lines(symbols))
    for rule in prog.rules:
        if not profile.include_uec and rule.tag.startswith("uec-"):
            continue
        out.append(_rule_line(rule, leaf))
    out.append("#end.")
    return "\n".join(out) + "\n"


def export_incremental(
    inc: IncrementalProgram, profile: ExportProfile = ExportProfile()
) -> str:
    if profile.flavor == "asp-normal":
        return _export_normal_incremental(inc, profile)
    symbols = inc.gls.symbols
    tleaf = _timed_leaf(symbols)
    hi = "inf" if inc.max_step is None else str(inc.max_step)
    out = [
        "#format incremental-program 1.",
        f"#range {inc.min_step} {hi}.",
        f"#query {_q(inc.query.label)}.",
    ]
    out.extend(_const_lines(symbols))
    out.append("#section base.")
    for rule in inc.base:
        if not profile.include_uec and rule.tag.startswith("uec-"):
            continue
        out.append(_rule_line(rule, tleaf))
    out.append("#section cumulative.")
    sleaf = _template_leaf(symbols)
    for rule in inc.template:
        if not profile.include_uec and rule.tag.startswith("uec-"):
            continue
        head = "false" if rule.head is None else sleaf(rule.head)
        out.append(f"#rule {rule.tag} {head} <- {_fmt(rule.body, sleaf)}.")
    out.append("#section volatile.")
    mleaf = _mv_leaf(symbols)
    for tr, f in inc.query.lines:
        out.append(f"#qline at {_timeref_text(tr)} {_fmt(f, mleaf)}.")
    out.append("#end.")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Native reader

# Ints are unsigned: a leading '-' always tokenizes alone, so negation in
# front of a step number ("-1:...") cannot fuse into a negative integer.
# Words may contain '-' (law shapes, rule tags, "t-1", "maxstep-1").
_TOKEN = re.compile(
    r"""\s*(?:
        (?P<str>"(?:[^"\\]|\\.)*") |
        (?P<arrow><-|->) |
        (?P<int>\d+) |
        (?P<word>[A-Za-z][A-Za-z0-9_-]*) |
        (?P<punct>[()&|:=.,;#+-])
    )""",
    re.VERBOSE,
)


def _tokenize(line: str, lineno: int) -> list[tuple[str, str]]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            if line[pos:].strip() == "":
                break
            raise FormatError(lineno, f"bad character {line[pos]!r}")
        pos = m.end()
        for kind in ("str", "arrow", "int", "word", "punct"):
            text = m.group(kind)
            if text is not None:
                toks.append((kind, text))
                break
    return toks


class _Line:
    def __init__(self, toks: list[tuple[str, str]], lineno: int):
        self.toks = toks
        self.pos = 0
        self.lineno = lineno

    def peek(self) -> tuple[str, str]:
        if self.pos >= len(self.toks):
            raise FormatError(self.lineno, "unexpected end of line")
        return self.toks[self.pos]

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        kind, got = self.next()
        if got != text:
            raise FormatError(self.lineno, f"expected {text!r}, found {got!r}")

    def take_str(self) -> str:
        kind, text = self.next()
        if kind != "str":
            raise FormatError(self.lineno, f"expected a quoted name, found {text!r}")
        body = text[1:-1]
        return body.replace('\\"', '"').replace("\\\\", "\\")

    def take_int(self) -> int:
        kind, text = self.next()
        if kind != "int":
            raise FormatError(self.lineno, f"expected an integer, found {text!r}")
        return int(text)

    def take_word(self) -> str:
        kind, text = self.next()
        if kind != "word":
            raise FormatError(self.lineno, f"expected a word, found {text!r}")
        return text

    def done(self) -> bool:
        return self.pos >= len(self.toks)


def _parse_formula(ln: _Line, atom):
    kind, text = ln.peek()
    if text == "-":
        ln.next()
        return mvpf.Neg(_parse_formula(ln, atom))
    if text == "(":
        ln.next()
        left = _parse_formula(ln, atom)
        okind, op = ln.next()
        right = _parse_formula(ln, atom)
        ln.expect(")")
        if op == "&":
            return mvpf.And(left, right)
        if op == "|":
            return mvpf.Or(left, right)
        if op == "->":
            return mvpf.Impl(left, right)
        raise FormatError(ln.lineno, f"unknown connective {op!r}")
    if text == "false":
        ln.next()
        return mvpf.BOT
    return atom(ln)


def _parse_step(ln: _Line):
    """Concrete step, or 0/-1 relative to t.  Returns ('abs'|'rel', n)."""
    kind, text = ln.peek()
    if kind == "int":
        ln.next()
        ln.expect(":")
        return ("abs", int(text))
    if text in ("t", "t-1"):
        ln.next()
        ln.expect(":")
        return ("rel", 0 if text == "t" else -1)
    raise FormatError(ln.lineno, f"expected a step, found {text!r}")


class _Interner:
    """Rebuilds a symbol table from #const lines and resolves atoms."""

    def __init__(self):
        self.symbols = SymbolTable()
        self.by_name: dict[str, object] = {}

    def add_const(self, name: str, kind: str, labels: list[str], lineno: int):
        if name in self.by_name:
            raise FormatError(lineno, f"constant {name!r} declared twice")
        dom = tuple(self.symbols.intern_value(_decode_label(l)) for l in labels)
        gc = self.symbols.add_const(name, (), kind, dom)
        self.by_name[name] = gc
        return gc

    def atom_ids(self, name: str, label: str, lineno: int) -> tuple[int, int]:
        gc = self.by_name.get(name)
        if gc is None:
            raise FormatError(lineno, f"undeclared constant {name!r}")
        vid = self.symbols.vid_of(_decode_label(label))
        if vid is None or vid not in gc.dom:
            raise FormatError(lineno, f"value {label!r} not in domain of {name!r}")
        return gc.cid, vid

    def mv_atom(self, ln: _Line):
        name = ln.take_str()
        ln.expect("=")
        label = ln.take_str()
        return mvpf.MvAtom(*self.atom_ids(name, label, ln.lineno))

    def timed_atom(self, ln: _Line):
        mode, step = _parse_step(ln)
        name = ln.take_str()
        ln.expect("=")
        label = ln.take_str()
        cid, vid = self.atom_ids(name, label, ln.lineno)
        if mode == "abs":
            return PAtom(step, cid, vid)
        return TAtom(step, cid, vid)

    def signature(self) -> mvpf.Signature:
        order = self.symbols.order
        return mvpf.Signature(
            tuple(gc.cid for gc in order), {gc.cid: gc.dom for gc in order}
        )

    def ground_law_set(self) -> GroundLawSet:
        return GroundLawSet(self.symbols, self.signature(), [], [], [], {})


def _parse_timeref(ln: _Line) -> TimeRef:
    kind, text = ln.peek()
    if kind == "word" and re.fullmatch(r"maxstep-\d+", text):
        # "maxstep-N" lexes as a single word; unpack it
        ln.next()
        return TimeRef("maxstep", -int(text.split("-")[1]))
    if kind == "int":
        base: object = ln.take_int()
    else:
        word = ln.take_word()
        if word != "maxstep":
            raise FormatError(ln.lineno, f"expected a step base, found {word!r}")
        base = "maxstep"
    kind, sign = ln.next()
    if sign not in ("+", "-"):
        raise FormatError(ln.lineno, f"expected an offset sign, found {sign!r}")
    off = ln.take_int()
    return TimeRef(base, off if sign == "+" else -off)


def _split_lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        yield i, line


def _read_native(text: str, expect_format: str):
    """Yields (_Line, directive) pairs after checking the format header."""
    rows = []
    saw_end = False
    fmt = None
    for lineno, line in _split_lines(text):
        if saw_end:
            raise FormatError(lineno, "content after #end")
        toks = _tokenize(line, lineno)
        if not toks or toks[-1][1] != ".":
            raise FormatError(lineno, "missing final period")
        ln = _Line(toks[:-1], lineno)
        ln.expect("#")
        directive = ln.take_word()
        if fmt is None:
            if directive != "format":
                raise FormatError(lineno, "missing #format header")
            fmt = ln.take_word()
            if fmt != expect_format:
                raise FormatError(lineno, f"expected {expect_format}, found {fmt}")
            ln.take_int()  # version
            continue
        if directive == "end":
            saw_end = True
            continue
        rows.append((ln, directive))
    if fmt is None:
        raise FormatError(1, "empty file")
    if not saw_end:
        raise FormatError(len(text.splitlines()) + 1, "truncated file: no #end")
    return rows


def import_ground(text: str) -> GroundLawSet:
    interner = _Interner()
    static: list[GroundLaw] = []
    action_dynamic: list[GroundLaw] = []
    fluent_dynamic: list[GroundLaw] = []
    queries: dict[str, GroundQuery] = {}
    qlines: dict[str, list] = {}
    for ln, directive in _read_native(text, "ground-laws"):
        if directive == "const":
            _read_const(ln, interner)
        elif directive == "law":
            shape_text = ln.take_word()
            shape = _TEXT_SHAPE.get(shape_text)
            if shape is None:
                raise FormatError(ln.lineno, f"unknown law shape {shape_text!r}")
            if ln.peek()[1] == "false":
                ln.next()
                head = None
            else:
                a = interner.mv_atom(ln)
                head = (a.const, a.value)
            ln.expect("<-")
            cond = _parse_formula(ln, interner.mv_atom)
            after = None
            if not ln.done() and ln.peek()[1] == "after":
                ln.next()
                after = _parse_formula(ln, interner.mv_atom)
            law = GroundLaw(shape, head, cond, after)
            if shape is LawShape.STATIC:
                static.append(law)
            elif shape is LawShape.ACTION_DYNAMIC:
                action_dynamic.append(law)
            else:
                fluent_dynamic.append(law)
        elif directive == "query":
            label = ln.take_str()
            lo = ln.take_int()
            kind, text_hi = ln.peek()
            if text_hi == "inf":
                ln.next()
                hi = None
            else:
                hi = ln.take_int()
            queries[label] = GroundQuery(label, lo, hi, ())
            qlines[label] = []
        elif directive == "qline":
            label = ln.take_str()
            if label not in queries:
                raise FormatError(ln.lineno, f"#qline before #query for {label!r}")
            ln.expect("at")
            tr = _parse_timeref(ln)
            f = _parse_formula(ln, interner.mv_atom)
            qlines[label].append((tr, f))
        else:
            raise FormatError(ln.lineno, f"unknown directive #{directive}")
        if not ln.done():
            raise FormatError(ln.lineno, "trailing tokens")
    for label, lines in qlines.items():
        q = queries[label]
        queries[label] = GroundQuery(q.label, q.min_step, q.max_step, tuple(lines))
    gls = interner.ground_law_set()
    gls.static = static
    gls.action_dynamic = action_dynamic
    gls.fluent_dynamic = fluent_dynamic
    gls.queries = queries
    return gls


def _read_rule(ln: _Line, interner: _Interner) -> PropRule:
    tag = ln.take_word()
    if ln.peek()[1] == "false":
        ln.next()
        head = None
    else:
        head = interner.timed_atom(ln)
    ln.expect("<-")
    body = _parse_formula(ln, interner.timed_atom)
    if not ln.done():
        raise FormatError(ln.lineno, "trailing tokens")
    return PropRule(head, body, tag)


def import_prop(text: str) -> PropProgram:
    interner = _Interner()
    horizon = None
    rules: list[PropRule] = []
    for ln, directive in _read_native(text, "prop-program"):
        if directive == "horizon":
            horizon = ln.take_int()
        elif directive == "const":
            _read_const(ln, interner)
        elif directive == "rule":
            rules.append(_read_rule(ln, interner))
        else:
            raise FormatError(ln.lineno, f"unknown directive #{directive}")
    if horizon is None:
        raise FormatError(1, "missing #horizon")
    gls = interner.ground_law_set()
    return PropProgram(horizon, rules, _timed_consts(gls, horizon), gls)


def _read_const(ln: _Line, interner: _Interner):
    name = ln.take_str()
    kind = ln.take_word()
    if kind not in ("simple", "sdet", "action"):
        raise FormatError(ln.lineno, f"unknown constant kind {kind!r}")
    ln.expect("(")
    labels = [ln.take_str()]
    while ln.peek()[1] == ",":
        ln.next()
        labels.append(ln.take_str())
    ln.expect(")")
    interner.add_const(name, kind, labels, ln.lineno)
    if not ln.done():
        raise FormatError(ln.lineno, "trailing tokens")


def import_incremental(text: str) -> IncrementalProgram:
    interner = _Interner()
    lo = hi = None
    label = None
    base: list[PropRule] = []
    template: list[TemplateRule] = []
    qlines: list = []
    section = None
    for ln, directive in _read_native(text, "incremental-program"):
        if directive == "range":
            lo = ln.take_int()
            if ln.peek()[1] == "inf":
                ln.next()
                hi = None
            else:
                hi = ln.take_int()
        elif directive == "query":
            label = ln.take_str()
        elif directive == "const":
            _read_const(ln, interner)
        elif directive == "section":
            section = ln.take_word()
            if section not in ("base", "cumulative", "volatile"):
                raise FormatError(ln.lineno, f"unknown section {section!r}")
        elif directive == "rule":
            if section == "base":
                rule = _read_rule(ln, interner)
                if not all(
                    isinstance(a, PAtom)
                    for a in _rule_leaves(rule)
                ):
                    raise FormatError(ln.lineno, "base rules take concrete steps")
                base.append(rule)
            elif section == "cumulative":
                rule = _read_rule(ln, interner)
                if not all(isinstance(a, TAtom) for a in _rule_leaves(rule)):
                    raise FormatError(ln.lineno, "cumulative rules take t / t-1")
                template.append(TemplateRule(rule.head, rule.body, rule.tag))
            else:
                raise FormatError(ln.lineno, "#rule outside base/cumulative")
        elif directive == "qline":
            if section != "volatile":
                raise FormatError(ln.lineno, "#qline outside the volatile section")
            ln.expect("at")
            tr = _parse_timeref(ln)
            qlines.append((tr, _parse_formula(ln, interner.mv_atom)))
        else:
            raise FormatError(ln.lineno, f"unknown directive #{directive}")
    if lo is None or label is None:
        raise FormatError(1, "missing #range or #query header")
    gls = interner.ground_law_set()
    query = GroundQuery(label, lo, hi, tuple(qlines))
    gls.queries = {label: query}
    return IncrementalProgram(gls, query, base, template, lo, hi)


def _rule_leaves(rule: PropRule):
    if rule.head is not None:
        yield rule.head
    yield from formula_leaves(rule.body)


def sniff_format(text: str) -> str:
    for lineno, line in _split_lines(text):
        toks = _tokenize(line, lineno)
        ln = _Line(toks, lineno)
        ln.expect("#")
        if ln.take_word() != "format":
            raise FormatError(lineno, "missing #format header")
        return ln.take_word()
    raise FormatError(1, "empty file")


# ---------------------------------------------------------------------------
# asp-normal writer

_TRUE = ("true",)
_FALSE = ("false",)


def _fold(f):
    """Classical constant folding; sound for stable models too."""
    if isinstance(f, mvpf.Bot):
        return _FALSE
    if isinstance(f, mvpf.Neg):
        s = _fold(f.sub)
        if s is _TRUE:
            return _FALSE
        if s is _FALSE:
            return _TRUE
        return mvpf.Neg(s)
    if isinstance(f, mvpf.And):
        a, b = _fold(f.left), _fold(f.right)
        if a is _FALSE or b is _FALSE:
            return _FALSE
        if a is _TRUE:
            return b
        if b is _TRUE:
            return a
        return mvpf.And(a, b)
    if isinstance(f, mvpf.Or):
        a, b = _fold(f.left), _fold(f.right)
        if a is _TRUE or b is _TRUE:
            return _TRUE
        if a is _FALSE:
            return b
        if b is _FALSE:
            return a
        return mvpf.Or(a, b)
    if isinstance(f, mvpf.Impl):
        a, b = _fold(f.left), _fold(f.right)
        if a is _FALSE or b is _TRUE:
            return _TRUE
        if a is _TRUE:
            return b
        if b is _FALSE:
            return mvpf.Neg(a) if a is not _TRUE else _FALSE
        return mvpf.Impl(a, b)
    return f


def _conjuncts(f) -> list:
    if isinstance(f, mvpf.And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    return [f]


def _sanitize(s: str) -> str:
    out = re.sub(r"[^A-Za-z0-9]+", "_", s).strip("_")
    return out or "x"


class _Namer:
    def __init__(self, symbols: SymbolTable):
        self.symbols = symbols
        self.names: dict[PAtom, str] = {}
        self.taken: set[str] = set()

    def name(self, atom: PAtom) -> str:
        got = self.names.get(atom)
        if got is not None:
            return got
        gc = self.symbols.by_id[atom.const]
        base = (
            f"{_sanitize(gc.name)}_"
            f"{_sanitize(self.symbols.value_label(atom.value))}_{atom.step}"
        )
        if not base[0].islower():
            base = "a" + base
        name, n = base, 1
        while name in self.taken:
            n += 1
            name = f"{base}_{n}"
        self.taken.add(name)
        self.names[atom] = name
        return name

    def mapping_lines(self) -> list[str]:
        rows = sorted(
            (a.step, a.const, a.value, name) for a, name in self.names.items()
        )
        out = ["% atoms:"]
        for step, cid, vid, name in rows:
            gc = self.symbols.by_id[cid]
            label = self.symbols.value_label(vid)
            out.append(f"%   {name} = {step}:{gc.name}={label}")
        return out


def _literal(f, namer: _Namer, rule_id: int) -> str:
    depth = 0
    while isinstance(f, mvpf.Neg):
        depth += 1
        f = f.sub
    if depth > 2:
        raise OutsideNormalFragment(rule_id, "more than two negations on a literal")
    if not isinstance(f, PAtom):
        raise OutsideNormalFragment(rule_id, "body is not a conjunction of literals")
    return "not " * depth + namer.name(f)


def _normal_rule_lines(
    rules: list[PropRule], namer: _Namer, profile: ExportProfile, start_id: int = 0
) -> list[str]:
    out = []
    for i, rule in enumerate(rules, start=start_id):
        if not profile.include_uec and rule.tag.startswith("uec-"):
            continue
        if rule.tag == "uec-exists":
            # one value must hold: a disjunction over the domain
            inner = rule.body
            assert isinstance(inner, mvpf.Neg)
            atoms = [namer.name(a) for a in _disjuncts(inner.sub, i)]
            out.append(" ; ".join(atoms) + ".")
            continue
        body = _fold(rule.body)
        if body is _FALSE:
            continue  # vacuous
        if body is _TRUE:
            if rule.head is None:
                raise OutsideNormalFragment(i, "constraint with an empty body")
            out.append(namer.name(rule.head) + ".")
            continue
        lits = [_literal(c, namer, i) for c in _conjuncts(body)]
        if rule.head is None:
            out.append(":- " + ", ".join(lits) + ".")
        else:
            out.append(namer.name(rule.head) + " :- " + ", ".join(lits) + ".")
    return out


def _disjuncts(f, rule_id: int) -> list[PAtom]:
    if isinstance(f, mvpf.Or):
        return _disjuncts(f.left, rule_id) + _disjuncts(f.right, rule_id)
    if not isinstance(f, PAtom):
        raise OutsideNormalFragment(rule_id, "existence rule over non-atoms")
    return [f]


@dataclass
class NormalExport:
    text: str
    atom_names: dict[PAtom, str]


def normal_export(
    prog: PropProgram, profile: ExportProfile = ExportProfile(flavor="asp-normal")
) -> NormalExport:
    namer = _Namer(prog.gls.symbols)
    lines = _normal_rule_lines(list(prog.rules), namer, profile)
    out = ["% format: asp-normal 1"]
    if profile.symbol_table:
        out.extend(namer.mapping_lines())
    out.extend(lines)
    return NormalExport("\n".join(out) + "\n", dict(namer.names))


def _export_normal_prop(prog: PropProgram, profile: ExportProfile) -> str:
    return normal_export(prog, profile).text


def _export_normal_incremental(inc: IncrementalProgram, profile: ExportProfile) -> str:
    """Grounds the program out to its bound; sections label the origin."""
    if inc.max_step is None:
        raise ExportError("cannot ground an unbounded incremental program")
    namer = _Namer(inc.gls.symbols)
    sections: list[tuple[str, list[str]]] = []
    rid = 0
    lines = _normal_rule_lines(inc.base, namer, profile, rid)
    rid += len(inc.base)
    sections.append(("base", lines))
    for t in range(max(inc.min_step, 1), inc.max_step + 1):
        step = inc.step_rules(t)
        sections.append(
            (f"cumulative t={t}", _normal_rule_lines(step, namer, profile, rid))
        )
        rid += len(step)
    volatile = query_rules(inc.query, inc.gls, inc.max_step)
    sections.append(
        (
            f"volatile k={inc.max_step}",
            _normal_rule_lines(volatile, namer, profile, rid),
        )
    )
    out = ["% format: asp-normal 1"]
    if profile.symbol_table:
        out.extend(namer.mapping_lines())
    for title, lines in sections:
        out.append(f"% section: {title}")
        out.extend(lines)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Normal-rule reader (exact inverse of the asp-normal writer)

_NORMAL_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*")


class _NormalLine:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def eat(self, s: str) -> bool:
        self.skip_ws()
        if self.text.startswith(s, self.pos):
            self.pos += len(s)
            return True
        return False

    def atom(self) -> str:
        self.skip_ws()
        m = _NORMAL_ATOM.match(self.text, self.pos)
        if not m:
            raise FormatError(self.lineno, f"expected an atom at {self.text[self.pos:]!r}")
        self.pos = m.end()
        return m.group()

    def literal(self):
        depth = 0
        while self.eat("not "):
            depth += 1
        if depth > 2:
            raise FormatError(self.lineno, "more than two negations")
        a = self.atom()
        f = a
        for _ in range(depth):
            f = mvpf.Neg(f)
        return f


def import_normal(text: str) -> tuple[list[PropRule], list[str]]:
    """Reads asp-normal text into rules over plain string atoms."""
    rules: list[PropRule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not line.endswith("."):
            raise FormatError(lineno, "missing final period")
        ln = _NormalLine(line[:-1], lineno)
        ln.skip_ws()
        if ln.eat(":-"):
            rules.append(PropRule(None, _read_normal_body(ln), "constraint"))
        else:
            head = ln.atom()
            if ln.eat(";"):
                disj = [head, ln.atom()]
                while ln.eat(";"):
                    disj.append(ln.atom())
                rules.append(PropRule(None, mvpf.Neg(_fold_or(disj)), "uec-exists"))
            elif ln.eat(":-"):
                rules.append(PropRule(head, _read_normal_body(ln), "normal"))
            else:
                rules.append(PropRule(head, mvpf.TOP, "fact"))
        ln.skip_ws()
        if ln.pos != len(ln.text):
            raise FormatError(lineno, f"trailing text {ln.text[ln.pos:]!r}")
    atoms: set[str] = set()
    for rule in rules:
        atoms.update(_string_leaves(rule))
    return rules, sorted(atoms)


def _read_normal_body(ln: _NormalLine):
    lits = [ln.literal()]
    while ln.eat(","):
        lits.append(ln.literal())
    body = lits[0]
    for lit in lits[1:]:
        body = mvpf.And(body, lit)
    return body


def _fold_or(names: list[str]):
    f = names[-1]
    for name in reversed(names[:-1]):
        f = mvpf.Or(name, f)
    return f


def _string_leaves(rule: PropRule):
    if rule.head is not None:
        yield rule.head
    for leaf in formula_leaves(rule.body):
        if isinstance(leaf, str):
            yield leaf
