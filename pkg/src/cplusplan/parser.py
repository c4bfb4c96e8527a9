"""Reader for CCalc-style action description files.

Hand rolled tokenizer plus recursive descent.  A file is a sequence of
statements, each terminated by a period: section directives introduced by
``:-`` (sorts, objects, constants, variables, query, include) and causal
laws in shorthand form.  ``%`` starts a line comment.

Includes are resolved eagerly relative to the including file and each file
is read at most once.  After all files are in, identifiers inside formulas
are resolved against the declarations: a name that matches a declared
constant becomes a constant reference, everything else stays an object or
variable symbol.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

from .syntax import (
    ActionDescription,
    AlwaysLaw,
    Arith,
    Atom,
    AndF,
    CausedLaw,
    CausesLaw,
    ConstantDecl,
    ConstRef,
    ConstraintLaw,
    DefaultLaw,
    DuplicateDeclaration,
    ExogenousLaw,
    ExternalCall,
    FalseF,
    Formula,
    ImplF,
    InertialLaw,
    KIND_SPELLINGS,
    LangError,
    NonexecutableLaw,
    Not,
    OrF,
    QuerySpec,
    RESERVED_WORDS,
    RigidLaw,
    Span,
    Sym,
    Term,
    TimeRef,
    TRUE,
    TrueF,
    WhereAnd,
    WhereCmp,
    WhereExpr,
)


class ParseError(LangError):
    pass


class MalformedOverride(Exception):
    pass


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<string>'[^']*')
  | (?P<sym>:-|::|\.\.|->>|>>|=<|>=|\\=|\+\+|[-&=<>+*/(),;.:@])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # ident, int, string, sym, eof
    text: str
    span: Span


def tokenize(text: str, path: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = Span(path, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        lexeme = m.group()
        if kind in ("ws", "comment"):
            line += lexeme.count("\n")
            if "\n" in lexeme:
                line_start = m.start() + lexeme.rfind("\n") + 1
        else:
            span = Span(path, line, m.start() - line_start + 1)
            tokens.append(Token(kind, lexeme, span))
        pos = m.end()
    tokens.append(Token("eof", "", Span(path, line, pos - line_start + 1)))
    return tokens


# ---------------------------------------------------------------------------
# Parser proper

LAW_KEYWORDS = {
    "caused", "constraint", "default", "inertial", "exogenous",
    "nonexecutable", "always", "rigid",
}


class _Parser:
    def __init__(self, tokens: list[Token], desc: ActionDescription):
        self.tokens = tokens
        self.i = 0
        self.desc = desc

    # Cursor helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def at_sym(self, text: str) -> bool:
        return self.tok.kind == "sym" and self.tok.text == text

    def at_word(self, text: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text == text

    def eat_sym(self, text: str) -> Token:
        if not self.at_sym(text):
            raise ParseError(f"expected '{text}', found '{self.tok.text}'", self.tok.span)
        return self.advance()

    def eat_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            raise ParseError(f"expected {what}, found '{self.tok.text}'", self.tok.span)
        return self.advance()

    def eat_int(self) -> int:
        if self.tok.kind != "int":
            raise ParseError(f"expected integer, found '{self.tok.text}'", self.tok.span)
        return int(self.advance().text)

    def eat_name(self, what: str) -> str:
        tok = self.eat_ident(what)
        if tok.text in RESERVED_WORDS:
            raise ParseError(f"'{tok.text}' is a reserved word", tok.span)
        return tok.text

    # Statements

    def parse_statements(self, include_cb) -> None:
        while self.tok.kind != "eof":
            if self.at_sym(":-"):
                self.advance()
                self.directive(include_cb)
            else:
                self.desc.laws.append(self.law())

    def directive(self, include_cb) -> None:
        kw = self.eat_ident("directive name")
        if kw.text == "sorts":
            self.sorts_section()
        elif kw.text == "objects":
            self.objects_section()
        elif kw.text == "constants":
            self.constants_section()
        elif kw.text == "variables":
            self.variables_section()
        elif kw.text == "query":
            self.query_section(kw.span)
        elif kw.text == "include":
            if self.tok.kind != "string":
                raise ParseError("expected quoted file name", self.tok.span)
            name = self.advance().text[1:-1]
            self.eat_sym(".")
            include_cb(name, kw.span)
        else:
            raise ParseError(f"unknown directive '{kw.text}'", kw.span)

    def sorts_section(self) -> None:
        while True:
            first = self.eat_name("sort name")
            self.desc.declare_sort(first, (), self.tok.span)
            parent = first
            while self.at_sym(">>"):
                self.advance()
                child = self.eat_name("sort name")
                self.desc.declare_sort(child, (parent,), self.tok.span)
                parent = child
            if self.at_sym(";"):
                self.advance()
                continue
            self.eat_sym(".")
            return

    def objects_section(self) -> None:
        while True:
            specs: list[str | int | tuple[int, int]] = []
            while True:
                if self.tok.kind == "int":
                    lo = self.eat_int()
                    if self.at_sym(".."):
                        self.advance()
                        hi = self.eat_int()
                        if hi < lo:
                            raise ParseError(f"empty range {lo}..{hi}", self.tok.span)
                        specs.append((lo, hi))
                    else:
                        specs.append(lo)
                else:
                    specs.append(self.eat_name("object name"))
                if self.at_sym(","):
                    self.advance()
                    continue
                break
            self.eat_sym("::")
            sort_tok = self.eat_ident("sort name")
            sort = sort_tok.text
            if sort not in self.desc.sorts:
                raise ParseError(f"unknown sort '{sort}'", sort_tok.span)
            bucket = self.desc.objects.setdefault(sort, [])
            for spec in specs:
                if isinstance(spec, tuple):
                    for v in range(spec[0], spec[1] + 1):
                        if v not in bucket:
                            bucket.append(v)
                elif spec not in bucket:
                    bucket.append(spec)
            if self.at_sym(";"):
                self.advance()
                continue
            self.eat_sym(".")
            return

    def constants_section(self) -> None:
        while True:
            sigs: list[tuple[str, tuple[str, ...], Span]] = []
            while True:
                name_tok = self.eat_ident("constant name")
                name = name_tok.text
                if name in RESERVED_WORDS:
                    raise ParseError(f"'{name}' is a reserved word", name_tok.span)
                argsorts: tuple[str, ...] = ()
                if self.at_sym("("):
                    self.advance()
                    sort_names = [self.eat_ident("sort name").text]
                    while self.at_sym(","):
                        self.advance()
                        sort_names.append(self.eat_ident("sort name").text)
                    self.eat_sym(")")
                    argsorts = tuple(sort_names)
                sigs.append((name, argsorts, name_tok.span))
                if self.at_sym(","):
                    self.advance()
                    continue
                break
            self.eat_sym("::")
            kind_tok = self.eat_ident("constant kind")
            if kind_tok.text not in KIND_SPELLINGS:
                raise ParseError(
                    f"unknown constant kind '{kind_tok.text}' (one of: "
                    + ", ".join(sorted(set(KIND_SPELLINGS))) + ")",
                    kind_tok.span,
                )
            kind = KIND_SPELLINGS[kind_tok.text]
            valuesort: str | None = None
            if self.at_sym("("):
                self.advance()
                valuesort = self.eat_ident("value sort").text
                self.eat_sym(")")
            for name, argsorts, span in sigs:
                if name in self.desc.constants:
                    raise DuplicateDeclaration(
                        f"constant '{name}' declared twice", span
                    )
                self.desc.constants[name] = ConstantDecl(
                    name, argsorts, kind, valuesort, span
                )
            if self.at_sym(";"):
                self.advance()
                continue
            self.eat_sym(".")
            return

    def variables_section(self) -> None:
        while True:
            names = [self.eat_name("variable name")]
            while self.at_sym(","):
                self.advance()
                names.append(self.eat_name("variable name"))
            self.eat_sym("::")
            sort = self.eat_ident("sort name").text
            for n in names:
                if n in self.desc.variables:
                    raise DuplicateDeclaration(f"variable '{n}' declared twice")
                self.desc.variables[n] = sort
            if self.at_sym(";"):
                self.advance()
                continue
            self.eat_sym(".")
            return

    def query_section(self, span: Span) -> None:
        label: str | None = None
        min_step = 0
        max_step: int | None = None
        have_bounds = False
        lines: list[tuple[TimeRef, Formula]] = []
        while True:
            if self.at_word("label"):
                self.advance()
                self.eat_sym("::")
                if self.tok.kind == "int":
                    label = str(self.eat_int())
                else:
                    label = self.eat_ident("query label").text
            elif self.at_word("maxstep") and self.peek().text == "::":
                self.advance()
                self.eat_sym("::")
                lo = self.eat_int()
                if self.at_sym(".."):
                    self.advance()
                    if self.at_word("infinity"):
                        self.advance()
                        min_step, max_step = lo, None
                    else:
                        hi = self.eat_int()
                        if hi < lo:
                            raise ParseError(f"empty step range {lo}..{hi}", self.tok.span)
                        min_step, max_step = lo, hi
                else:
                    min_step = max_step = lo
                have_bounds = True
            else:
                tref = self.time_ref()
                self.eat_sym(":")
                f = self.formula()
                while self.at_sym(","):
                    self.advance()
                    f = AndF(f, self.formula())
                lines.append((tref, f))
            if self.at_sym(";"):
                self.advance()
                continue
            self.eat_sym(".")
            break
        if label is None:
            raise ParseError("query has no label", span)
        if not have_bounds:
            raise ParseError(f"query '{label}' has no maxstep", span)
        if label in self.desc.queries:
            raise DuplicateDeclaration(f"query '{label}' declared twice", span)
        self.desc.queries[label] = QuerySpec(
            label, min_step, max_step, tuple(lines), span
        )

    def time_ref(self) -> TimeRef:
        if self.tok.kind == "int":
            return TimeRef(self.eat_int())
        if self.at_word("maxstep"):
            self.advance()
            offset = 0
            if self.at_sym("+") or self.at_sym("-"):
                sign = -1 if self.advance().text == "-" else 1
                offset = sign * self.eat_int()
            return TimeRef("maxstep", offset)
        raise ParseError(
            f"expected step index or 'maxstep', found '{self.tok.text}'",
            self.tok.span,
        )

    # Laws

    def law(self):
        span = self.tok.span
        if self.at_word("caused"):
            self.advance()
            head = self.formula()
            cond: Formula = TRUE
            after: Formula | None = None
            if self.at_word("if"):
                self.advance()
                cond = self.formula()
            if self.at_word("after"):
                self.advance()
                after = self.formula()
            return CausedLaw(head, cond, after, self.opt_where(), span)
        if self.at_word("constraint"):
            self.advance()
            return ConstraintLaw(self.formula(), self.opt_where(), span)
        if self.at_word("default"):
            self.advance()
            head = self.formula()
            cond = TRUE
            if self.at_word("if"):
                self.advance()
                cond = self.formula()
            return DefaultLaw(head, cond, self.opt_where(), span)
        if self.at_word("inertial"):
            self.advance()
            return InertialLaw(self.term_list(), self.opt_where(), span)
        if self.at_word("exogenous"):
            self.advance()
            return ExogenousLaw(self.term_list(), self.opt_where(), span)
        if self.at_word("rigid"):
            self.advance()
            return RigidLaw(self.term_list(), self.opt_where(), span)
        if self.at_word("nonexecutable"):
            self.advance()
            action = self.formula()
            cond = TRUE
            if self.at_word("if"):
                self.advance()
                cond = self.formula()
            return NonexecutableLaw(action, cond, self.opt_where(), span)
        if self.at_word("always"):
            self.advance()
            return AlwaysLaw(self.formula(), self.opt_where(), span)
        action = self.formula()
        if not self.at_word("causes"):
            raise ParseError(
                f"expected 'causes' after action formula, found '{self.tok.text}'",
                self.tok.span,
            )
        self.advance()
        effect = self.formula()
        cond = TRUE
        if self.at_word("if"):
            self.advance()
            cond = self.formula()
        return CausesLaw(action, effect, cond, self.opt_where(), span)

    def term_list(self) -> tuple[Term, ...]:
        terms = [self.term()]
        while self.at_sym(","):
            self.advance()
            terms.append(self.term())
        law_end = self.tok
        if law_end.kind == "ident" and law_end.text not in ("where",):
            raise ParseError(f"unexpected '{law_end.text}'", law_end.span)
        for t in terms:
            if isinstance(t, Arith):
                raise ParseError("expected a constant name", law_end.span)
        result = tuple(terms)
        self.expect_law_end()
        return result

    def expect_law_end(self) -> None:
        if not (self.at_sym(".") or self.at_word("where")):
            raise ParseError(
                f"expected '.' or 'where', found '{self.tok.text}'", self.tok.span
            )

    def opt_where(self) -> WhereExpr | None:
        w: WhereExpr | None = None
        if self.at_word("where"):
            self.advance()
            w = self.where_expr()
        self.eat_sym(".")
        return w

    def where_expr(self) -> WhereExpr:
        expr = self.where_atom()
        while self.at_sym("&"):
            self.advance()
            expr = WhereAnd(expr, self.where_atom())
        return expr

    def where_atom(self) -> WhereExpr:
        if self.at_sym("@"):
            self.advance()
            name = self.eat_ident("external function name").text
            args: list[Term] = []
            self.eat_sym("(")
            if not self.at_sym(")"):
                args.append(self.term())
                while self.at_sym(","):
                    self.advance()
                    args.append(self.term())
            self.eat_sym(")")
            return ExternalCall(name, tuple(args))
        left = self.term()
        op_tok = self.tok
        if op_tok.kind != "sym" or op_tok.text not in ("=", "\\=", "<", ">", "=<", ">="):
            raise ParseError(
                f"expected comparison in where clause, found '{op_tok.text}'",
                op_tok.span,
            )
        self.advance()
        right = self.term()
        return WhereCmp(op_tok.text, left, right)

    # Formulas: impl is right associative and binds loosest, then ++, then &.

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.at_sym("->>"):
            self.advance()
            return ImplF(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at_sym("++"):
            self.advance()
            f = OrF(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.at_sym("&"):
            self.advance()
            f = AndF(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.at_sym("-"):
            self.advance()
            return Not(self.unary())
        if self.at_sym("("):
            self.advance()
            f = self.formula()
            self.eat_sym(")")
            return f
        if self.at_word("true"):
            self.advance()
            return TRUE
        if self.at_word("false"):
            self.advance()
            return FalseF()
        return self.atom()

    def atom(self) -> Formula:
        left = self.term()
        if self.tok.kind == "sym" and self.tok.text in ("=", "\\=", "<", ">", "=<", ">="):
            op = self.advance().text
            right = self.term()
            return Atom(left, op, right)
        return Atom(left, "=", None)

    # Terms, with integer arithmetic.

    def term(self) -> Term:
        t = self.arith_prod()
        while self.tok.kind == "sym" and self.tok.text in ("+", "-"):
            op = self.advance().text
            t = Arith(op, t, self.arith_prod())
        return t

    def arith_prod(self) -> Term:
        t = self.arith_atom()
        while (self.tok.kind == "sym" and self.tok.text in ("*", "/")) or self.at_word("mod"):
            op = self.advance().text
            t = Arith(op, t, self.arith_atom())
        return t

    def arith_atom(self) -> Term:
        if self.tok.kind == "int":
            return Sym(self.eat_int())
        if self.at_sym("("):
            self.advance()
            t = self.term()
            self.eat_sym(")")
            return t
        if self.at_word("true"):
            self.advance()
            return Sym(True)
        if self.at_word("false"):
            self.advance()
            return Sym(False)
        tok = self.eat_ident("term")
        if tok.text in RESERVED_WORDS:
            raise ParseError(f"'{tok.text}' is a reserved word", tok.span)
        if self.at_sym("("):
            self.advance()
            args = [self.term()]
            while self.at_sym(","):
                self.advance()
                args.append(self.term())
            self.eat_sym(")")
            return ConstRef(tok.text, tuple(args))
        return Sym(tok.text)


# ---------------------------------------------------------------------------
# Identifier resolution

def _resolve_term(t: Term, desc: ActionDescription) -> Term:
    if isinstance(t, Sym):
        if isinstance(t.name, str) and t.name in desc.constants:
            return ConstRef(t.name)
        return t
    if isinstance(t, ConstRef):
        return ConstRef(t.name, tuple(_resolve_term(a, desc) for a in t.args))
    if isinstance(t, Arith):
        return Arith(t.op, _resolve_term(t.left, desc), _resolve_term(t.right, desc))
    raise TypeError(f"not a term: {t!r}")


def _resolve_formula(f: Formula, desc: ActionDescription) -> Formula:
    if isinstance(f, Atom):
        left = _resolve_term(f.left, desc)
        right = None if f.right is None else _resolve_term(f.right, desc)
        return Atom(left, f.op, right)
    if isinstance(f, Not):
        sub = _resolve_formula(f.sub, desc)
        # A negated bare boolean constant means the constant takes the
        # value false; this keeps such heads definite.
        if isinstance(sub, Atom) and sub.right is None and isinstance(sub.left, ConstRef):
            return Atom(sub.left, "=", Sym(False))
        return Not(sub)
    if isinstance(f, AndF):
        return AndF(_resolve_formula(f.left, desc), _resolve_formula(f.right, desc))
    if isinstance(f, OrF):
        return OrF(_resolve_formula(f.left, desc), _resolve_formula(f.right, desc))
    if isinstance(f, ImplF):
        return ImplF(_resolve_formula(f.left, desc), _resolve_formula(f.right, desc))
    return f


def _resolve_where(w: WhereExpr | None, desc: ActionDescription) -> WhereExpr | None:
    if w is None:
        return None
    if isinstance(w, WhereCmp):
        return WhereCmp(w.op, _resolve_term(w.left, desc), _resolve_term(w.right, desc))
    if isinstance(w, WhereAnd):
        return WhereAnd(_resolve_where(w.left, desc), _resolve_where(w.right, desc))
    return w


def _resolve_description(desc: ActionDescription) -> None:
    resolved = []
    for law in desc.laws:
        kw = {}
        for name in ("head", "cond", "after", "formula", "action", "effect"):
            if hasattr(law, name):
                val = getattr(law, name)
                if val is not None:
                    val = _resolve_formula(val, desc)
                kw[name] = val
        if hasattr(law, "consts"):
            kw["consts"] = tuple(_resolve_term(t, desc) for t in law.consts)
        kw["where"] = _resolve_where(law.where, desc)
        kw["span"] = law.span
        resolved.append(type(law)(**kw))
    desc.laws[:] = resolved
    for label, q in list(desc.queries.items()):
        desc.queries[label] = QuerySpec(
            q.label,
            q.min_step,
            q.max_step,
            tuple((t, _resolve_formula(f, desc)) for t, f in q.lines),
            q.span,
        )


# ---------------------------------------------------------------------------
# Entry points

def parse_text(text: str, path: str = "<string>") -> ActionDescription:
    desc = ActionDescription()
    _parse_into(desc, text, path, seen=set(), base_dir=os.path.dirname(path) or ".")
    _resolve_description(desc)
    desc.validate()
    return desc


def parse_files(paths: list[str]) -> ActionDescription:
    desc = ActionDescription()
    seen: set[str] = set()
    for path in paths:
        real = os.path.realpath(path)
        if real in seen:
            continue
        seen.add(real)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        _parse_into(desc, text, path, seen, os.path.dirname(path) or ".")
    _resolve_description(desc)
    desc.validate()
    return desc


def _parse_into(
    desc: ActionDescription,
    text: str,
    path: str,
    seen: set[str],
    base_dir: str,
) -> None:
    def include_cb(name: str, span: Span) -> None:
        inc_path = os.path.join(base_dir, name)
        real = os.path.realpath(inc_path)
        if real in seen:
            return
        seen.add(real)
        try:
            with open(inc_path, encoding="utf-8") as fh:
                inc_text = fh.read()
        except OSError as err:
            raise ParseError(f"cannot include '{name}': {err}", span) from err
        _parse_into(desc, inc_text, inc_path, seen, os.path.dirname(inc_path) or ".")

    parser = _Parser(tokenize(text, path), desc)
    parser.parse_statements(include_cb)


# ---------------------------------------------------------------------------
# Command-line query overrides

@dataclass
class QueryOverride:
    label: str | None = None
    min_step: int | None = None
    max_step: int | None = None
    have_range: bool = False
    solutions: int | None = None  # 0 means all
    warnings: list[str] = field(default_factory=list)


_RANGE_RE = re.compile(r"^(\d+)\.\.(\d+|infinity)$")


def parse_query_override(args: list[str]) -> QueryOverride:
    """Digest query=, maxstep=, minstep= and solution-count tokens."""
    ov = QueryOverride()

    def set_solutions(n: int, token: str) -> None:
        if ov.solutions is not None:
            ov.warnings.append(
                f"solution count given more than once, using '{token}'"
            )
        ov.solutions = n

    for raw in args:
        if raw.startswith("query="):
            label = raw[len("query="):]
            if not label:
                raise MalformedOverride("query= needs a label")
            ov.label = label
        elif raw.startswith("maxstep="):
            value = raw[len("maxstep="):]
            m = _RANGE_RE.match(value)
            if m:
                ov.min_step = int(m.group(1))
                ov.max_step = None if m.group(2) == "infinity" else int(m.group(2))
                if ov.max_step is not None and ov.max_step < ov.min_step:
                    raise MalformedOverride(f"empty step range '{value}'")
                ov.have_range = True
            elif value.isdigit():
                ov.min_step = ov.max_step = int(value)
                ov.have_range = True
            else:
                raise MalformedOverride(f"bad maxstep '{value}'")
        elif raw.startswith("minstep="):
            value = raw[len("minstep="):]
            if not value.isdigit():
                raise MalformedOverride(f"bad minstep '{value}'")
            ov.min_step = int(value)
            ov.have_range = True
            if ov.max_step is not None and ov.max_step < ov.min_step:
                raise MalformedOverride("minstep exceeds maxstep")
        elif raw.startswith("sol="):
            value = raw[len("sol="):]
            if value == "all":
                set_solutions(0, raw)
            elif value.isdigit():
                set_solutions(int(value), raw)
            else:
                raise MalformedOverride(f"bad solution count '{value}'")
        elif raw == "all":
            set_solutions(0, raw)
        elif raw.isdigit():
            set_solutions(int(raw), raw)
        else:
            raise MalformedOverride(f"unrecognized token '{raw}'")
    return ov
