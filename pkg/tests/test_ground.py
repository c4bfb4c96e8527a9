"""Shorthand expansion, instantiation, where clauses, atom resolution."""

import pytest

from cplusplan import mvpf
from cplusplan.ground import (
    EmptySort,
    GroundError,
    WhereEvalError,
    expand_shorthand,
    ground_description,
)
from cplusplan.parser import parse_text
from cplusplan.syntax import LawShape, check_definite


def desc_of(text):
    return parse_text(text, "<t>")


BW = """
:- sorts location >> block.
:- objects a, b :: block; table :: location.
:- constants
  loc(block) :: inertialFluent(location);
  move(block, location) :: exogenousAction.
:- variables B, B1 :: block; L :: location.
"""


def ground(text):
    return ground_description(desc_of(text))


def const(gls, name):
    for c in gls.symbols.order:
        if c.name == name:
            return c
    raise KeyError(name)


def atom(gls, cname, value):
    gc = const(gls, cname)
    return mvpf.MvAtom(gc.cid, gls.symbols.vid_of(value))


class TestExpansionShapes:
    def shapes(self, text, law_index=-1):
        d = desc_of(BW + text)
        return [c.shape for c in expand_shorthand(d.laws[law_index], d)]

    def test_constraint_is_static(self):
        assert self.shapes("constraint loc(a) \\= a.") == [LawShape.STATIC]

    def test_caused_fluent_no_after_is_static(self):
        assert self.shapes("caused loc(a) = table if loc(a) = b.") == [LawShape.STATIC]

    def test_caused_action_head_is_action_dynamic(self):
        assert self.shapes("caused move(a, table) if loc(a) = b.") == [
            LawShape.ACTION_DYNAMIC
        ]

    def test_caused_after_is_fluent_dynamic(self):
        assert self.shapes("caused loc(a) = table after move(a, table).") == [
            LawShape.FLUENT_DYNAMIC
        ]

    def test_causes_nonexecutable_always(self):
        assert self.shapes("move(B, L) causes loc(B) = L.") == [LawShape.FLUENT_DYNAMIC]
        assert self.shapes("nonexecutable move(B, L) if loc(B1) = B.") == [
            LawShape.FLUENT_DYNAMIC
        ]
        assert self.shapes("always loc(a) \\= a.") == [LawShape.FLUENT_DYNAMIC]

    def test_inertial_expands_per_value(self):
        # 3 locations means 3 laws per constant mentioned
        assert len(self.shapes("inertial loc(B).")) == 3

    def test_exogenous_expands_per_value(self):
        assert len(self.shapes("exogenous move(a, table).")) == 2

    def test_default_fluent_vs_action(self):
        d = desc_of(
            BW + ":- constants go :: action. default loc(a) = table. default go."
        )
        assert expand_shorthand(d.laws[-2], d)[0].shape is LawShape.STATIC
        assert expand_shorthand(d.laws[-1], d)[0].shape is LawShape.ACTION_DYNAMIC

    def test_default_body_conjoins_condition(self):
        d = desc_of(BW + "default loc(a) = table if loc(b) = table.")
        core = expand_shorthand(d.laws[-1], d)[0]
        # body is head & condition, making the head self-supporting
        gls = ground(BW + "default loc(a) = table if loc(b) = table.")
        (law,) = gls.static
        a_table = atom(gls, "loc(a)", "table")
        assert law.head == (a_table.const, a_table.value)
        assert law.cond == mvpf.conj(
            atom(gls, "loc(a)", "table"), atom(gls, "loc(b)", "table")
        )

    def test_rigid_rejected_with_hint(self):
        d = desc_of(BW + "rigid loc(a).")
        with pytest.raises(GroundError, match="statDetFluent"):
            expand_shorthand(d.laws[-1], d)


class TestExpansionErrors:
    def e(self, text, match):
        d = desc_of(BW + text)
        with pytest.raises(GroundError, match=match):
            for law in d.laws:
                expand_shorthand(law, d)

    def test_inertial_on_action(self):
        self.e("inertial move(a, table).", "action")

    def test_exogenous_on_fluent(self):
        self.e("exogenous loc(a).", "fluent")

    def test_static_condition_with_action(self):
        self.e("caused loc(a) = table if move(a, table).", "nonexecutable")

    def test_constraint_on_actions_redirected(self):
        self.e("constraint -move(a, table).", "nonexecutable")

    def test_dynamic_head_with_action(self):
        self.e("caused move(a, table) after loc(a) = table.", "fluent formula")

    def test_statdet_in_dynamic_head(self):
        d = desc_of(
            ":- constants p :: sdFluent; go :: exogenousAction. go causes p."
        )
        with pytest.raises(GroundError, match="statically determined"):
            expand_shorthand(d.laws[-1], d)

    def test_statdet_inertial_rejected(self):
        d = desc_of(":- constants p :: sdFluent. inertial p.")
        with pytest.raises(GroundError, match="statically determined"):
            expand_shorthand(d.laws[-1], d)

    def test_definiteness_violation_reported(self):
        d = desc_of(BW + "caused loc(a) = table ++ loc(b) = table.")
        violations = check_definite(d)
        assert violations and "head" in violations[0].reason


class TestInstantiation:
    def test_instance_count_is_product_of_sort_sizes(self):
        gls = ground(BW + "nonexecutable move(B, L) if loc(B1) = B.")
        # B, L, B1 free: 2 * 3 * 2
        explicit = [l for l in gls.fluent_dynamic if l.shape is LawShape.FLUENT_DYNAMIC]
        # implied inertia contributes 2 consts * 3 values
        assert len(explicit) == 12 + 6

    def test_where_filters_instances(self):
        gls = ground(
            ":- sorts n. :- objects 1..4 :: n. :- constants p(n) :: simpleFluent."
            " :- variables N :: n. caused p(N) if p(N) where N < 3."
        )
        assert len(gls.static) == 2
        assert [l.inst for l in gls.static] == [(1,), (2,)]

    def test_folded_condition_instances_kept(self):
        # B = B1 = a folds the condition to false, but the instance stays
        gls = ground(BW + "constraint B \\= B1 & loc(B) = loc(B1) ->> loc(B) = table.")
        assert len(gls.static) == 4

    def test_empty_sort_for_variable(self):
        with pytest.raises(EmptySort):
            ground(
                ":- sorts s; t. :- objects o :: s."
                " :- constants p :: simpleFluent(s). :- variables X :: t."
                " caused p = o if p = X."
            )

    def test_empty_value_sort(self):
        with pytest.raises(EmptySort):
            ground(":- sorts s. :- constants p :: simpleFluent(s).")

    def test_empty_argument_sort(self):
        with pytest.raises(EmptySort):
            ground(":- sorts s; t. :- objects o :: t. :- constants p(s) :: simpleFluent(t).")

    def test_deterministic(self):
        text = BW + "move(B, L) causes loc(B) = L.\nnonexecutable move(B, L) if loc(B1) = B."
        a, b = ground(text), ground(text)
        assert a.laws == b.laws
        assert [c.name for c in a.symbols.order] == [c.name for c in b.symbols.order]


class TestWhereClauses:
    def test_arithmetic(self):
        gls = ground(
            ":- sorts n. :- objects 1..6 :: n. :- constants p(n) :: simpleFluent."
            " :- variables N :: n. caused p(N) where N mod 2 = 0 & N / 2 < 3."
        )
        assert [l.inst for l in gls.static] == [(2,), (4,)]

    def test_non_integer_rejected(self):
        with pytest.raises(WhereEvalError, match="integer"):
            ground(BW + "nonexecutable move(B, L) where B < 2.")

    def test_constant_inspection_rejected(self):
        with pytest.raises(WhereEvalError, match="inspect"):
            ground(BW + "nonexecutable move(B, L) where loc(B) = 2.")

    def test_external_call_rejected(self):
        with pytest.raises(WhereEvalError, match="@f"):
            ground(BW + "nonexecutable move(B, L) where @f(B).")

    def test_division_by_zero(self):
        with pytest.raises(GroundError, match="zero"):
            ground(
                ":- sorts n. :- objects 0..1 :: n. :- constants p(n) :: simpleFluent."
                " :- variables N :: n. caused p(N) where 1 / N > 0."
            )


class TestAtomResolution:
    def test_equality_with_object(self):
        gls = ground(BW + "constraint loc(a) = table.")
        (law,) = gls.static
        assert law.head is None
        assert law.cond == mvpf.neg(atom(gls, "loc(a)", "table"))

    def test_inequality(self):
        gls = ground(BW + "caused loc(a) = table if loc(a) \\= b.")
        (law,) = gls.static
        assert law.cond == mvpf.neg(atom(gls, "loc(a)", "b"))

    def test_const_to_const_equality_expands(self):
        gls = ground(BW + "caused false if loc(a) = loc(b).")
        (law,) = gls.static
        # disjunction over the shared domain {table, a, b}
        expect = mvpf.disj_all(
            [
                mvpf.conj(atom(gls, "loc(a)", v), atom(gls, "loc(b)", v))
                for v in ("table", "a", "b")
            ]
        )
        assert law.cond == expect

    def test_order_comparison_expands_over_domain(self):
        gls = ground(
            ":- sorts n. :- objects 1..3 :: n. :- constants p :: simpleFluent(n)."
            " caused false if p < 2."
        )
        (law,) = gls.static
        assert law.cond == atom(gls, "p", 1)

    def test_order_comparison_needs_integers(self):
        with pytest.raises(GroundError, match="integers"):
            ground(BW + "caused false if loc(a) < b.")

    def test_bare_boolean_atoms(self):
        gls = ground(
            ":- constants p :: simpleFluent; go :: action. go causes p if -p."
        )
        (law,) = gls.fluent_dynamic
        assert law.head == (const(gls, "p").cid, gls.symbols.vid_of(True))
        # the `if` part of causes lands in the after-formula with the action
        assert mvpf.is_top(law.cond)
        assert law.after == mvpf.conj(atom(gls, "go", True), atom(gls, "p", False))

    def test_out_of_domain_value(self):
        with pytest.raises(GroundError, match="possible value"):
            ground(BW + "constraint loc(a) = 5.")

    def test_argument_sort_mismatch(self):
        with pytest.raises(GroundError, match="sort"):
            ground(BW + "constraint loc(table) = table.")

    def test_unknown_name(self):
        with pytest.raises(GroundError, match="unknown name"):
            ground(BW + "constraint loc(a) = elsewhere.")

    def test_arithmetic_in_formula_terms(self):
        gls = ground(
            ":- sorts n. :- objects 0..3 :: n. :- constants p :: simpleFluent(n)."
            " :- variables N :: n. caused p = N + 1 if p = N where N < 3."
        )
        assert len(gls.static) == 3
        assert gls.static[0].head == (const(gls, "p").cid, gls.symbols.vid_of(1))

    def test_object_only_atom_folds(self):
        gls = ground(BW + "caused loc(a) = table if a = a & 1 < 2.")
        (law,) = gls.static
        assert mvpf.is_top(law.cond)


class TestImpliedLaws:
    def test_inertial_fluent_kind(self):
        gls = ground(BW)
        # no explicit laws: everything comes from the declarations
        assert len(gls.fluent_dynamic) == 2 * 3
        for law in gls.fluent_dynamic:
            assert isinstance(law.cond, mvpf.MvAtom)
            assert law.cond == law.after
            assert law.head == (law.cond.const, law.cond.value)

    def test_exogenous_action_kind(self):
        gls = ground(BW)
        assert len(gls.action_dynamic) == 6 * 2
        for law in gls.action_dynamic:
            assert law.after is None

    def test_plain_kinds_add_nothing(self):
        gls = ground(
            ":- constants p :: simpleFluent; q :: sdFluent; go :: action."
            " caused q if p."
        )
        assert gls.fluent_dynamic == []
        assert gls.action_dynamic == []
        assert len(gls.static) == 1


class TestQueryGrounding:
    def test_lines_resolved(self):
        gls = ground(
            BW
            + ":- query label :: q; maxstep :: 2; 0: loc(a) = table, loc(b) = table; maxstep: loc(a) = b."
        )
        q = gls.queries["q"]
        assert (q.min_step, q.max_step) == (2, 2)
        (t0, f0), (t1, f1) = q.lines
        assert f0 == mvpf.conj(atom(gls, "loc(a)", "table"), atom(gls, "loc(b)", "table"))
        assert f1 == atom(gls, "loc(a)", "b")
        assert t1.base == "maxstep"

    def test_variables_rejected_in_queries(self):
        with pytest.raises(GroundError, match="variable"):
            ground(BW + ":- query label :: q; maxstep :: 1; 0: loc(B) = table.")


class TestSignature:
    def test_signature_matches_symbols(self):
        gls = ground(BW)
        sig = gls.signature
        assert len(sig.constants) == 8
        loc_a = const(gls, "loc(a)")
        assert sig.dom[loc_a.cid] == loc_a.dom
        assert gls.simple_fluent_ids() == [const(gls, "loc(a)").cid, const(gls, "loc(b)").cid]
        assert len(gls.action_ids()) == 6

    def test_value_and_const_ids_disjoint(self):
        gls = ground(BW)
        vids = set(gls.symbols.values)
        cids = {c.cid for c in gls.symbols.order}
        assert not (vids & cids)
