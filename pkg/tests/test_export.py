"""Dump round trips, the normal-rule rendering, and format errors."""

import pytest

from cplusplan import export, mvpf
from cplusplan.export import (
    ExportError,
    ExportProfile,
    FormatError,
    OutsideNormalFragment,
)
from cplusplan.ground import SymbolTable, ground_description
from cplusplan.parser import parse_text
from cplusplan.plans import model_atom_names
from cplusplan.solve import (
    SolveConfig,
    Stats,
    brute_force_models,
    enumerate_models,
    solve_incremental,
)
from cplusplan.translate import (
    incremental_program,
    rule_formula,
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
nonexecutable move(B, L) if loc(B1) = L & L \\= table.
:- query label :: tower; maxstep :: 0..4;
   0: loc(a) = table, loc(b) = table; maxstep: loc(a) = b.
:- query label :: open; maxstep :: 0..infinity; maxstep: loc(a) = b.
"""

CHAIN = """
:- sorts s.
:- objects 1, 2 :: s.
:- constants c :: inertialFluent(s).
:- query label :: q; maxstep :: 0..1; 0: c = 1.
"""

ALL = SolveConfig(max_solutions=0)


@pytest.fixture(scope="module")
def bw():
    return ground_description(parse_text(BW, "<t>"))


@pytest.fixture(scope="module")
def chain():
    return ground_description(parse_text(CHAIN, "<t>"))


def signature_fingerprint(gls):
    return [
        (gc.name, gc.kind, tuple(gls.symbols.value_label(v) for v in gc.dom))
        for gc in gls.symbols.order
    ]


class TestNativeGround:
    def test_round_trip_is_identity_on_text(self, bw):
        text = export.export_ground(bw)
        again = export.export_ground(export.import_ground(text))
        assert text == again

    def test_signature_and_counts_survive(self, bw):
        gls2 = export.import_ground(export.export_ground(bw))
        assert signature_fingerprint(gls2) == signature_fingerprint(bw)
        assert len(gls2.static) == len(bw.static)
        assert len(gls2.action_dynamic) == len(bw.action_dynamic)
        assert len(gls2.fluent_dynamic) == len(bw.fluent_dynamic)

    def test_queries_survive_including_unbounded(self, bw):
        gls2 = export.import_ground(export.export_ground(bw))
        assert set(gls2.queries) == {"tower", "open"}
        assert gls2.queries["tower"].max_step == 4
        assert gls2.queries["open"].max_step is None
        assert len(gls2.queries["tower"].lines) == len(bw.queries["tower"].lines)

    def test_reimported_dump_solves_identically(self, bw):
        res = solve_incremental(incremental_program(bw, bw.queries["tower"]), ALL)
        gls2 = export.import_ground(export.export_ground(bw))
        res2 = solve_incremental(incremental_program(gls2, gls2.queries["tower"]), ALL)
        assert res2.found_step == res.found_step == 1
        assert sorted(model_atom_names(m, gls2) for m in res2.models) == sorted(
            model_atom_names(m, bw) for m in res.models
        )

    def test_zero_law_program_header_only(self):
        gls = ground_description(
            parse_text(":- sorts s. :- objects 1, 2 :: s. :- constants c :: simpleFluent(s).", "<t>")
        )
        text = export.export_ground(gls)
        body = [l for l in text.splitlines() if not l.startswith(("#format", "#const", "#end"))]
        assert body == []
        gls2 = export.import_ground(text)
        assert gls2.laws == []
        assert gls2.queries == {}
        assert signature_fingerprint(gls2) == signature_fingerprint(gls)

    def test_ground_has_no_asp_normal_form(self, bw):
        with pytest.raises(ExportError):
            export.export_ground(bw, ExportProfile(flavor="asp-normal"))


class TestFormatErrors:
    def test_truncated_file(self, bw):
        text = export.export_ground(bw)
        cut = "\n".join(text.splitlines()[:-1])
        with pytest.raises(FormatError):
            export.import_ground(cut)

    def test_truncated_line(self, bw):
        text = export.export_ground(bw)
        lines = text.splitlines()
        lines[3] = lines[3].rstrip(".")
        with pytest.raises(FormatError) as e:
            export.import_ground("\n".join(lines))
        assert e.value.line == 4

    def test_content_after_end(self, bw):
        text = export.export_ground(bw) + "#law static false <- false.\n"
        with pytest.raises(FormatError):
            export.import_ground(text)

    def test_missing_format_header(self):
        with pytest.raises(FormatError):
            export.import_ground('#const "c" simple ("1", "2").\n#end.\n')

    def test_wrong_format_name(self, bw):
        with pytest.raises(FormatError):
            export.import_prop(export.export_ground(bw))

    def test_undeclared_constant(self):
        text = (
            "#format ground-laws 1.\n"
            '#law static "c"="1" <- false.\n'
            "#end.\n"
        )
        with pytest.raises(FormatError) as e:
            export.import_ground(text)
        assert e.value.line == 2

    def test_value_outside_domain(self):
        text = (
            "#format ground-laws 1.\n"
            '#const "c" simple ("1", "2").\n'
            '#law static "c"="3" <- false.\n'
            "#end.\n"
        )
        with pytest.raises(FormatError):
            export.import_ground(text)

    def test_bad_character(self):
        with pytest.raises(FormatError):
            export.import_ground("#format ground-laws 1.\n#law ?!.\n#end.\n")

    def test_empty_file(self):
        with pytest.raises(FormatError):
            export.import_ground("")


class TestNativeProp:
    def test_round_trip(self, bw):
        prog = to_prop(bw, 2, bw.queries["tower"])
        text = export.export_prop(prog)
        again = export.export_prop(export.import_prop(text))
        assert text == again

    def test_horizon_and_rule_count(self, bw):
        prog = to_prop(bw, 2, bw.queries["tower"])
        prog2 = export.import_prop(export.export_prop(prog))
        assert prog2.horizon == 2
        assert len(prog2.rules) == len(prog.rules)
        assert [r.tag for r in prog2.rules] == [r.tag for r in prog.rules]

    def test_include_uec_off(self, bw):
        prog = to_prop(bw, 1, bw.queries["tower"])
        text = export.export_prop(prog, ExportProfile(include_uec=False))
        assert "uec-" not in text
        kept = export.import_prop(text)
        assert len(kept.rules) == sum(
            1 for r in prog.rules if not r.tag.startswith("uec-")
        )

    def test_reimported_prop_enumerates_identically(self, chain):
        prog = to_prop(chain, 1, chain.queries["q"])
        prog2 = export.import_prop(export.export_prop(prog))
        a = {
            model_atom_names(m, prog.gls)
            for m in enumerate_models(list(prog.rules), prog.timed_consts, ALL, Stats())
        }
        b = {
            model_atom_names(m, prog2.gls)
            for m in enumerate_models(list(prog2.rules), prog2.timed_consts, ALL, Stats())
        }
        assert a == b


class TestNativeIncremental:
    def test_round_trip(self, bw):
        inc = incremental_program(bw, bw.queries["tower"])
        text = export.export_incremental(inc)
        again = export.export_incremental(export.import_incremental(text))
        assert text == again

    def test_sections_present(self, bw):
        text = export.export_incremental(incremental_program(bw, bw.queries["tower"]))
        lines = text.splitlines()
        assert "#section base." in lines
        assert "#section cumulative." in lines
        assert "#section volatile." in lines

    def test_reimported_incremental_solves_identically(self, bw):
        inc = incremental_program(bw, bw.queries["tower"])
        res = solve_incremental(inc, ALL)
        inc2 = export.import_incremental(export.export_incremental(inc))
        res2 = solve_incremental(inc2, ALL)
        assert res2.found_step == res.found_step
        assert sorted(model_atom_names(m, inc2.gls) for m in res2.models) == sorted(
            model_atom_names(m, inc.gls) for m in res.models
        )

    def test_unbounded_range_survives(self, bw):
        inc = incremental_program(bw, bw.queries["open"])
        inc2 = export.import_incremental(export.export_incremental(inc))
        assert inc2.max_step is None


class TestAspNormal:
    def test_inertia_rendering(self, chain):
        prog = to_prop(chain, 1, chain.queries["q"])
        text = export.export_prop(prog, ExportProfile(flavor="asp-normal"))
        assert "c_1_1 :- not not c_1_1, c_1_0." in text
        assert ":- c_1_0, c_2_0." in text
        assert "c_1_0 ; c_2_0." in text
        assert ":- not c_1_0." in text

    def test_mapping_comments(self, chain):
        prog = to_prop(chain, 1, chain.queries["q"])
        with_map = export.export_prop(prog, ExportProfile(flavor="asp-normal"))
        assert "%   c_1_0 = 0:c=1" in with_map
        without = export.export_prop(
            prog, ExportProfile(flavor="asp-normal", symbol_table=False)
        )
        assert "c_1_0 = " not in without

    def test_include_uec_off(self, chain):
        prog = to_prop(chain, 1, chain.queries["q"])
        text = export.export_prop(
            prog, ExportProfile(flavor="asp-normal", include_uec=False)
        )
        assert ";" not in text
        assert ":- c_1_0, c_2_0." not in text

    def test_outside_fragment_on_nested_connectives(self, bw):
        prog = to_prop(bw, 1, bw.queries["tower"])
        with pytest.raises(OutsideNormalFragment) as e:
            export.export_prop(prog, ExportProfile(flavor="asp-normal"))
        assert e.value.rule_id >= 0

    def test_normal_reader_model_sets_match(self, chain):
        prog = to_prop(chain, 1, chain.queries["q"])
        ne = export.normal_export(prog)
        rules, atoms = export.import_normal(ne.text)
        got = {frozenset(m) for m in brute_force_models([rule_formula(r) for r in rules], atoms)}
        want = {
            frozenset(ne.atom_names[a] for a in m)
            for m in enumerate_models(list(prog.rules), prog.timed_consts, ALL, Stats())
        }
        assert got == want
        assert len(got) == 1

    def test_normal_reader_inverts_disjunction(self):
        rules, atoms = export.import_normal("a_1 ; a_2.\n")
        assert atoms == ["a_1", "a_2"]
        assert rules[0].head is None
        assert rules[0].body == mvpf.Neg(mvpf.Or("a_1", "a_2"))

    def test_normal_reader_rejects_junk(self):
        with pytest.raises(FormatError):
            export.import_normal("a :- b\n")  # no period
        with pytest.raises(FormatError):
            export.import_normal("a :- not not not b.\n")

    def test_incremental_sections_labeled(self, chain):
        inc = incremental_program(chain, chain.queries["q"])
        text = export.export_incremental(inc, ExportProfile(flavor="asp-normal"))
        assert "% section: base" in text
        assert "% section: cumulative t=1" in text
        assert "% section: volatile k=1" in text

    def test_incremental_needs_bound(self, bw):
        inc = incremental_program(bw, bw.queries["open"])
        with pytest.raises(ExportError):
            export.export_incremental(inc, ExportProfile(flavor="asp-normal"))

    def test_name_collisions_get_suffixes(self):
        sym = SymbolTable()
        f = sym.intern_value(False)
        t = sym.intern_value(True)
        a = sym.add_const("p(a,b)", (), "simple", (f, t))
        b = sym.add_const("p(a_b)", (), "simple", (f, t))
        namer = export._Namer(sym)
        from cplusplan.translate import PAtom

        n1 = namer.name(PAtom(0, a.cid, t))
        n2 = namer.name(PAtom(0, b.cid, t))
        assert n1 == "p_a_b_true_0"
        assert n2 == "p_a_b_true_0_2"


def test_sniff_format(bw, chain):
    prog = to_prop(chain, 1, chain.queries["q"])
    inc = incremental_program(bw, bw.queries["tower"])
    assert export.sniff_format(export.export_ground(bw)) == "ground-laws"
    assert export.sniff_format(export.export_prop(prog)) == "prop-program"
    assert (
        export.sniff_format(export.export_incremental(inc)) == "incremental-program"
    )
    with pytest.raises(FormatError):
        export.sniff_format("")
