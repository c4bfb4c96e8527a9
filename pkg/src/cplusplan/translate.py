"""Horizon translation: ground causal laws to timed rule programs.

Two parallel routes produce the same models by design, and tests compare
them rather than trusting either implementation alone:

* a timed multi-valued theory, fed to the exhaustive semantics in
  :mod:`cplusplan.mvpf` (slow, trustworthy);
* a propositional program over one atom per timed constant/value pair,
  fed to the search in :mod:`cplusplan.solve` (fast).

Fluent constants live at steps 0..m, action constants at 0..m-1.  Laws
become rules with the condition part double-negated, which keeps every
rule head free of circular justification except through the previous
step.  Initial states are opened up by choice rules over simple fluents.

The propositional route additionally pins each timed constant to exactly
one value (uniqueness and existence constraints); that reduction needs
at least two values per domain to be a bijection on stable models, so
smaller domains are rejected here and only here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import mvpf
from .ground import GroundLawSet, GroundQuery
from .syntax import LangError, NO_SPAN, Span, TimeRef


class TranslateError(LangError):
    pass


class SingletonDomain(TranslateError):
    pass


class QueryStepOutOfRange(TranslateError):
    pass


class UnboundedRange(TranslateError):
    """A solve was requested over a range with no upper bound."""


# ---------------------------------------------------------------------------
# Propositional atoms and rules

@dataclass(frozen=True, slots=True)
class PAtom:
    """The propositional atom for `constant = value` at a time step."""

    step: int
    const: int
    value: int


@dataclass(frozen=True, slots=True)
class TAtom:
    """Template atom, relative to the step being instantiated.

    rel is 0 for the current step and -1 for the previous one.
    """

    rel: int
    const: int
    value: int


@dataclass(frozen=True, slots=True)
class PropRule:
    """head <- body.  head None is a constraint (`false <- body`)."""

    head: PAtom | None
    body: object  # formula over PAtom leaves, mvpf connective nodes
    tag: str


@dataclass(frozen=True, slots=True)
class TemplateRule:
    head: TAtom | None
    body: object  # formula over TAtom leaves
    tag: str


def rule_formula(rule: PropRule):
    head = mvpf.BOT if rule.head is None else rule.head
    return mvpf.Impl(rule.body, head)


def map_leaves(f, fn):
    """Rebuild a connective tree, applying fn to every non-connective leaf."""
    if isinstance(f, mvpf.Bot):
        return f
    if isinstance(f, mvpf.Neg):
        return mvpf.Neg(map_leaves(f.sub, fn))
    if isinstance(f, mvpf.And):
        return mvpf.And(map_leaves(f.left, fn), map_leaves(f.right, fn))
    if isinstance(f, mvpf.Or):
        return mvpf.Or(map_leaves(f.left, fn), map_leaves(f.right, fn))
    if isinstance(f, mvpf.Impl):
        return mvpf.Impl(map_leaves(f.left, fn), map_leaves(f.right, fn))
    return fn(f)


def formula_leaves(f):
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, mvpf.Neg):
            stack.append(g.sub)
        elif isinstance(g, (mvpf.And, mvpf.Or, mvpf.Impl)):
            stack.append(g.right)
            stack.append(g.left)
        elif not isinstance(g, mvpf.Bot):
            yield g


def _rule_atoms(rule):
    if rule.head is not None:
        yield rule.head
    yield from formula_leaves(rule.body)


def at_step(f, step: int):
    return map_leaves(f, lambda a: PAtom(step, a.const, a.value))


def at_rel(f, rel: int):
    return map_leaves(f, lambda a: TAtom(rel, a.const, a.value))


def instantiate(f, step: int):
    return map_leaves(f, lambda a: PAtom(step + a.rel, a.const, a.value))


# ---------------------------------------------------------------------------
# Timed constants

@dataclass(frozen=True)
class TimedConst:
    step: int
    const: int
    values: tuple[PAtom, ...]


def _timed_consts(gls: GroundLawSet, m: int) -> list[TimedConst]:
    out = []
    for step in range(m + 1):
        for gc in gls.symbols.order:
            if gc.kind == "action" and step == m:
                continue
            out.append(
                TimedConst(step, gc.cid, tuple(PAtom(step, gc.cid, v) for v in gc.dom))
            )
    return out


# ---------------------------------------------------------------------------
# Propositional program, static (whole-horizon) form

@dataclass
class PropProgram:
    horizon: int
    rules: list[PropRule]
    timed_consts: list[TimedConst]
    gls: GroundLawSet

    def atoms(self) -> list[PAtom]:
        return [a for tc in self.timed_consts for a in tc.values]


def _check_domains(gls: GroundLawSet) -> None:
    for gc in gls.symbols.order:
        if len(gc.dom) < 2:
            raise SingletonDomain(
                f"'{gc.name}' has a single-value domain; the propositional "
                "reduction needs at least two values per constant",
                NO_SPAN,
            )


def _uec_rules(tc: TimedConst) -> list[PropRule]:
    rules = []
    vals = tc.values
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            rules.append(PropRule(None, mvpf.And(vals[i], vals[j]), "uec-unique"))
    rules.append(PropRule(None, mvpf.Neg(mvpf.disj_all(list(vals))), "uec-exists"))
    return rules


def _static_rules_at(gls: GroundLawSet, step: int) -> list[PropRule]:
    out = []
    for law in gls.static:
        head = None if law.head is None else PAtom(step, *law.head)
        out.append(PropRule(head, mvpf.Neg(mvpf.Neg(at_step(law.cond, step))), "static"))
    return out


def _action_rules_at(gls: GroundLawSet, step: int) -> list[PropRule]:
    out = []
    for law in gls.action_dynamic:
        head = None if law.head is None else PAtom(step, *law.head)
        out.append(PropRule(head, mvpf.Neg(mvpf.Neg(at_step(law.cond, step))), "action"))
    return out


def _transition_rules_at(gls: GroundLawSet, step: int) -> list[PropRule]:
    # the law `caused F if G after H` fires at `step` from `step - 1`
    out = []
    for law in gls.fluent_dynamic:
        head = None if law.head is None else PAtom(step, *law.head)
        body = mvpf.And(
            mvpf.Neg(mvpf.Neg(at_step(law.cond, step))),
            at_step(law.after, step - 1),
        )
        out.append(PropRule(head, body, "transition"))
    return out


def _choice_rules(gls: GroundLawSet) -> list[PropRule]:
    out = []
    simple = set(gls.simple_fluent_ids())
    for gc in gls.symbols.order:
        if gc.cid not in simple:
            continue
        for v in gc.dom:
            a = PAtom(0, gc.cid, v)
            out.append(PropRule(a, mvpf.Neg(mvpf.Neg(a)), "choice"))
    return out


def _mentions_action(f, gls: GroundLawSet) -> bool:
    actions = set(gls.action_ids())
    return any(leaf.const in actions for leaf in formula_leaves(f))


def query_rules(query: GroundQuery, gls: GroundLawSet, m: int) -> list[PropRule]:
    out = []
    for tref, f in query.lines:
        step = tref.resolve(m)
        is_action = _mentions_action(f, gls)
        limit = m - 1 if is_action else m
        if step < 0 or step > limit:
            what = "action" if is_action else "fluent"
            detail = (
                f"step {step} is out of range 0..{limit} for a {what} "
                f"condition at horizon {m}"
            )
            if is_action and step == m:
                detail += " (actions do not exist at the final step)"
            raise QueryStepOutOfRange(f"query '{query.label}': {detail}", NO_SPAN)
        out.append(PropRule(None, mvpf.Neg(at_step(f, step)), "query"))
    return out


def to_prop(gls: GroundLawSet, m: int, query: GroundQuery | None = None) -> PropProgram:
    """Whole-horizon propositional program for steps 0..m."""
    if m < 0:
        raise TranslateError(f"horizon must be at least 0, got {m}", NO_SPAN)
    _check_domains(gls)
    tcs = _timed_consts(gls, m)
    rules: list[PropRule] = []
    for tc in tcs:
        rules.extend(_uec_rules(tc))
    rules.extend(_choice_rules(gls))
    for step in range(m + 1):
        rules.extend(_static_rules_at(gls, step))
    for step in range(m):
        rules.extend(_action_rules_at(gls, step))
    for step in range(1, m + 1):
        rules.extend(_transition_rules_at(gls, step))
    if query is not None:
        rules.extend(query_rules(query, gls, m))
    return PropProgram(m, rules, tcs, gls)


# ---------------------------------------------------------------------------
# Incremental program

@dataclass
class IncrementalProgram:
    """Base rules, a per-step template, and a volatile query template.

    base covers step 0.  step_rules(t) yields the rules that extend the
    horizon from t-1 to t; they are meant to be instantiated once each and
    accumulated.  query_rules_at(t) yields the constraints that commit the
    accumulated program to horizon t; they hold only for that horizon and
    must be retracted before moving on.
    """

    gls: GroundLawSet
    query: GroundQuery
    base: list[PropRule]
    template: list[TemplateRule]
    min_step: int
    max_step: int | None  # None is unbounded

    def step_rules(self, t: int) -> list[PropRule]:
        if t < 1:
            raise TranslateError(f"step rules start at 1, got {t}", NO_SPAN)
        rules = [
            PropRule(
                None if r.head is None else PAtom(t + r.head.rel, r.head.const, r.head.value),
                instantiate(r.body, t),
                r.tag,
            )
            for r in self.template
        ]
        # Cumulative rules for step t may only mention steps 0..t; anything
        # later would let a later increment retroactively change this one.
        for rule in rules:
            for atom in _rule_atoms(rule):
                assert 0 <= atom.step <= t, (
                    f"rule at step {t} mentions step {atom.step}: {rule.tag}"
                )
        return rules

    def query_rules_at(self, t: int) -> list[PropRule]:
        return query_rules(self.query, self.gls, t)

    def timed_consts(self, m: int) -> list[TimedConst]:
        return _timed_consts(self.gls, m)


def incremental_program(gls: GroundLawSet, query: GroundQuery) -> IncrementalProgram:
    _check_domains(gls)
    base: list[PropRule] = []
    for tc in _timed_consts(gls, 0):
        base.extend(_uec_rules(tc))
    base.extend(_choice_rules(gls))
    base.extend(_static_rules_at(gls, 0))

    template: list[TemplateRule] = []
    actions = set(gls.action_ids())
    for gc in gls.symbols.order:
        rel = -1 if gc.cid in actions else 0
        atoms = tuple(TAtom(rel, gc.cid, v) for v in gc.dom)
        for i in range(len(atoms)):
            for j in range(i + 1, len(atoms)):
                template.append(
                    TemplateRule(None, mvpf.And(atoms[i], atoms[j]), "uec-unique")
                )
        template.append(
            TemplateRule(None, mvpf.Neg(mvpf.disj_all(list(atoms))), "uec-exists")
        )
    for law in gls.static:
        head = None if law.head is None else TAtom(0, *law.head)
        template.append(
            TemplateRule(head, mvpf.Neg(mvpf.Neg(at_rel(law.cond, 0))), "static")
        )
    for law in gls.action_dynamic:
        head = None if law.head is None else TAtom(-1, *law.head)
        template.append(
            TemplateRule(head, mvpf.Neg(mvpf.Neg(at_rel(law.cond, -1))), "action")
        )
    for law in gls.fluent_dynamic:
        head = None if law.head is None else TAtom(0, *law.head)
        body = mvpf.And(
            mvpf.Neg(mvpf.Neg(at_rel(law.cond, 0))), at_rel(law.after, -1)
        )
        template.append(TemplateRule(head, body, "transition"))

    return IncrementalProgram(
        gls, query, base, template, query.min_step, query.max_step
    )


# ---------------------------------------------------------------------------
# Oracle route: the same translation as a timed multi-valued theory

class TimedIndex:
    """Interns (step, constant) pairs as fresh multi-valued constants."""

    def __init__(self) -> None:
        self._fwd: dict[tuple[int, int], int] = {}
        self._rev: dict[int, tuple[int, int]] = {}
        self._dom: dict[int, tuple[int, ...]] = {}
        self._next = 0

    def timed(self, step: int, const: int, dom: tuple[int, ...]) -> int:
        key = (step, const)
        if key not in self._fwd:
            tid = self._next
            self._next += 1
            self._fwd[key] = tid
            self._rev[tid] = key
            self._dom[tid] = dom
        return self._fwd[key]

    def decode(self, tid: int) -> tuple[int, int]:
        return self._rev[tid]

    def signature(self) -> mvpf.Signature:
        consts = tuple(sorted(self._rev))
        return mvpf.Signature(consts, {c: self._dom[c] for c in consts})


def horizon_theory(
    gls: GroundLawSet, m: int, query: GroundQuery | None = None
) -> tuple[mvpf.MvTheory, TimedIndex]:
    """The translation as an MvTheory, for the exhaustive-semantics route.

    Identical rule structure to to_prop minus the uniqueness/existence
    constraints, which the multi-valued signature makes redundant.
    """
    if m < 0:
        raise TranslateError(f"horizon must be at least 0, got {m}", NO_SPAN)
    index = TimedIndex()
    doms = {gc.cid: gc.dom for gc in gls.symbols.order}

    def timed_f(f, step: int):
        return map_leaves(
            f,
            lambda a: mvpf.MvAtom(index.timed(step, a.const, doms[a.const]), a.value),
        )

    def timed_head(head, step: int):
        if head is None:
            return mvpf.BOT
        cid, vid = head
        return mvpf.MvAtom(index.timed(step, cid, doms[cid]), vid)

    # intern in the same step-major order as the propositional route
    for tc in _timed_consts(gls, m):
        index.timed(tc.step, tc.const, doms[tc.const])

    formulas: list = []
    simple = set(gls.simple_fluent_ids())
    for gc in gls.symbols.order:
        if gc.cid not in simple:
            continue
        for v in gc.dom:
            a = mvpf.MvAtom(index.timed(0, gc.cid, gc.dom), v)
            formulas.append(mvpf.Impl(mvpf.Neg(mvpf.Neg(a)), a))
    for step in range(m + 1):
        for law in gls.static:
            formulas.append(
                mvpf.Impl(
                    mvpf.Neg(mvpf.Neg(timed_f(law.cond, step))),
                    timed_head(law.head, step),
                )
            )
    for step in range(m):
        for law in gls.action_dynamic:
            formulas.append(
                mvpf.Impl(
                    mvpf.Neg(mvpf.Neg(timed_f(law.cond, step))),
                    timed_head(law.head, step),
                )
            )
    for step in range(1, m + 1):
        for law in gls.fluent_dynamic:
            formulas.append(
                mvpf.Impl(
                    mvpf.And(
                        mvpf.Neg(mvpf.Neg(timed_f(law.cond, step))),
                        timed_f(law.after, step - 1),
                    ),
                    timed_head(law.head, step),
                )
            )
    if query is not None:
        for tref, f in query.lines:
            step = tref.resolve(m)
            is_action = _mentions_action(f, gls)
            limit = m - 1 if is_action else m
            if step < 0 or step > limit:
                raise QueryStepOutOfRange(
                    f"query '{query.label}': step {step} out of range 0..{limit}",
                    NO_SPAN,
                )
            formulas.append(mvpf.Impl(mvpf.Neg(timed_f(f, step)), mvpf.BOT))

    theory = mvpf.MvTheory(index.signature(), tuple(formulas))
    return theory, index


# ---------------------------------------------------------------------------
# Direct theory reduction, for semantics-level comparisons

def theory_to_prop(theory: mvpf.MvTheory) -> tuple[list, list[PAtom]]:
    """Reduce an arbitrary multi-valued theory to propositional formulas.

    Every constant/value pair becomes an atom at step 0; uniqueness and
    existence constraints pin one value per constant.  Returns the formula
    list and the atom universe.  Domains of fewer than two values are
    rejected, as in to_prop.
    """
    sig = theory.signature
    atoms: list[PAtom] = []
    formulas: list = []
    for c in sig.constants:
        dom = sig.dom[c]
        if len(dom) < 2:
            raise SingletonDomain(
                f"constant {c} has a single-value domain; the propositional "
                "reduction needs at least two values per constant",
                NO_SPAN,
            )
        catoms = [PAtom(0, c, v) for v in dom]
        atoms.extend(catoms)
        for i in range(len(catoms)):
            for j in range(i + 1, len(catoms)):
                formulas.append(mvpf.Impl(mvpf.And(catoms[i], catoms[j]), mvpf.BOT))
        formulas.append(mvpf.Impl(mvpf.Neg(mvpf.disj_all(catoms)), mvpf.BOT))
    for f in theory.formulas:
        formulas.append(map_leaves(f, lambda a: PAtom(0, a.const, a.value)))
    return formulas, atoms


def prop_model_to_interp(model: frozenset[PAtom]) -> dict[int, int]:
    return {a.const: a.value for a in model}


def interp_to_prop_model(interp, sig: mvpf.Signature) -> frozenset[PAtom]:
    return frozenset(PAtom(0, c, interp[c]) for c in sig.constants)


# ---------------------------------------------------------------------------
# Model decoding

def decode_prop_model(model: frozenset[PAtom]) -> dict[tuple[int, int], int]:
    return {(a.step, a.const): a.value for a in model}


def decode_mv_model(interp, index: TimedIndex) -> dict[tuple[int, int], int]:
    return {index.decode(tid): vid for tid, vid in interp.items()}


def model_key(traj: dict[tuple[int, int], int]) -> tuple:
    return tuple(sorted(traj.items()))
