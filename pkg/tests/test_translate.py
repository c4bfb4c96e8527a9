"""Horizon translation: rule families, step placement, both routes."""

import pytest

from cplusplan import mvpf
from cplusplan.ground import ground_description
from cplusplan.parser import parse_text
from cplusplan.translate import (
    PAtom,
    QueryStepOutOfRange,
    SingletonDomain,
    TranslateError,
    horizon_theory,
    incremental_program,
    theory_to_prop,
    to_prop,
)

BW = """
:- sorts location >> block.
:- objects a, b :: block; table :: location.
:- constants
  loc(block) :: inertialFluent(location);
  move(block, location) :: exogenousAction.
:- variables B, B1 :: block; L :: location.
constraint B \\= B1 & loc(B) = loc(B1) ->> loc(B) = table.
move(B, L) causes loc(B) = L.
nonexecutable move(B, L) if loc(B1) = B.
:- query label :: q; maxstep :: 0..5; 0: loc(a) = table; maxstep: loc(a) = b.
"""


@pytest.fixture(scope="module")
def bw():
    return ground_description(parse_text(BW, "<t>"))


def tags(rules):
    out = {}
    for r in rules:
        out[r.tag] = out.get(r.tag, 0) + 1
    return out


class TestStaticTranslation:
    def test_rule_counts_by_tag(self, bw):
        m = 2
        prog = to_prop(bw, m)
        t = tags(prog.rules)
        # 2 fluents at 3 steps, 6 actions at 2 steps
        n_consts = 2 * 3 + 6 * 2
        # fluent domains have 3 values, action domains 2
        assert t["uec-unique"] == 2 * 3 * 3 + 6 * 2 * 1
        assert t["uec-exists"] == n_consts
        assert t["choice"] == 2 * 3  # simple fluents at step 0, every value
        assert t["static"] == len(bw.static) * (m + 1)
        assert t["action"] == len(bw.action_dynamic) * m
        assert t["transition"] == len(bw.fluent_dynamic) * m

    def test_atom_steps(self, bw):
        prog = to_prop(bw, 2)
        fluents = set(bw.fluent_ids())
        steps = {}
        for tc in prog.timed_consts:
            steps.setdefault(tc.const in fluents, set()).add(tc.step)
        assert steps[True] == {0, 1, 2}
        assert steps[False] == {0, 1}

    def test_transition_spans_two_steps(self, bw):
        prog = to_prop(bw, 1)
        for r in prog.rules:
            if r.tag != "transition":
                continue
            # head at step 1, after-part at step 0
            assert r.head is None or r.head.step == 1

    def test_negative_horizon(self, bw):
        with pytest.raises(TranslateError):
            to_prop(bw, -1)

    def test_choice_rule_shape(self, bw):
        prog = to_prop(bw, 0)
        choice = [r for r in prog.rules if r.tag == "choice"]
        for r in choice:
            assert r.body == mvpf.Neg(mvpf.Neg(r.head))
            assert r.head.step == 0


class TestSingletonDomains:
    ONE = (
        ":- sorts s. :- objects o :: s. :- constants p :: simpleFluent(s)."
        " :- query label :: q; maxstep :: 0."
    )

    def test_to_prop_rejects(self):
        gls = ground_description(parse_text(self.ONE, "<t>"))
        with pytest.raises(SingletonDomain, match="p"):
            to_prop(gls, 1)

    def test_incremental_rejects(self):
        gls = ground_description(parse_text(self.ONE, "<t>"))
        with pytest.raises(SingletonDomain):
            incremental_program(gls, gls.queries["q"])

    def test_mv_route_accepts(self):
        gls = ground_description(parse_text(self.ONE, "<t>"))
        theory, _ = horizon_theory(gls, 1)
        assert theory.signature.space() == 1


class TestQueryPlacement:
    def q(self, line, maxstep="2"):
        text = BW.replace(
            ":- query label :: q; maxstep :: 0..5; 0: loc(a) = table; maxstep: loc(a) = b.",
            f":- query label :: q; maxstep :: {maxstep}; {line}.",
        )
        return ground_description(parse_text(text, "<t>"))

    def test_action_at_final_step_rejected(self):
        gls = self.q("maxstep: move(a, b)")
        with pytest.raises(QueryStepOutOfRange, match="final step"):
            to_prop(gls, 2, gls.queries["q"])

    def test_action_before_final_step_fine(self):
        gls = self.q("maxstep-1: move(a, b)")
        prog = to_prop(gls, 2, gls.queries["q"])
        assert tags(prog.rules)["query"] == 1

    def test_fluent_beyond_horizon_rejected(self):
        gls = self.q("3: loc(a) = b")
        with pytest.raises(QueryStepOutOfRange):
            to_prop(gls, 2, gls.queries["q"])

    def test_negative_resolved_step_rejected(self):
        gls = self.q("maxstep-3: loc(a) = b")
        with pytest.raises(QueryStepOutOfRange):
            to_prop(gls, 2, gls.queries["q"])

    def test_mv_route_same_rejection(self):
        gls = self.q("maxstep: move(a, b)")
        with pytest.raises(QueryStepOutOfRange):
            horizon_theory(gls, 2, gls.queries["q"])


class TestIncrementalStructure:
    def test_accumulated_equals_static(self, bw):
        """Base plus step rules 1..k is the same rule set as the whole-
        horizon translation, reordered."""
        q = bw.queries["q"]
        inc = incremental_program(bw, q)
        for k in range(0, 4):
            acc = list(inc.base)
            for t in range(1, k + 1):
                acc.extend(inc.step_rules(t))
            acc.extend(inc.query_rules_at(k))
            static = to_prop(bw, k, q).rules
            assert sorted(map(repr, acc)) == sorted(map(repr, static)), k

    def test_step_rules_start_at_one(self, bw):
        inc = incremental_program(bw, bw.queries["q"])
        with pytest.raises(TranslateError):
            inc.step_rules(0)

    def test_base_has_no_action_rules(self, bw):
        inc = incremental_program(bw, bw.queries["q"])
        actions = set(bw.action_ids())
        for r in inc.base:
            if r.head is not None:
                assert r.head.const not in actions
            for tc in [r.head] if r.head else []:
                assert tc.step == 0


class TestOracleRoute:
    def test_signature_size(self, bw):
        theory, index = horizon_theory(bw, 2)
        assert len(theory.signature.constants) == 2 * 3 + 6 * 2

    def test_formula_count(self, bw):
        m = 2
        theory, _ = horizon_theory(bw, m)
        expect = (
            2 * 3  # choice over simple fluents
            + len(bw.static) * (m + 1)
            + len(bw.action_dynamic) * m
            + len(bw.fluent_dynamic) * m
        )
        assert len(theory.formulas) == expect

    def test_decode_round_trip(self, bw):
        theory, index = horizon_theory(bw, 1)
        for tid in theory.signature.constants:
            step, cid = index.decode(tid)
            assert index.timed(step, cid, bw.signature.dom[cid]) == tid


class TestTheoryToProp:
    def test_uec_and_formula_shapes(self):
        sig = mvpf.Signature((0,), {0: (10, 11)})
        theory = mvpf.MvTheory(sig, (mvpf.MvAtom(0, 10),))
        formulas, atoms = theory_to_prop(theory)
        assert atoms == [PAtom(0, 0, 10), PAtom(0, 0, 11)]
        # 1 uniqueness + 1 existence + the theory formula
        assert len(formulas) == 3

    def test_singleton_rejected(self):
        sig = mvpf.Signature((0,), {0: (10,)})
        with pytest.raises(SingletonDomain):
            theory_to_prop(mvpf.MvTheory(sig, ()))
