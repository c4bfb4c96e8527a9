"""Command line behavior: classification, stage cuts, exit codes, REPL."""

import io

import pytest

from cplusplan.cli import UsageError, main, parse_args
from cplusplan.suite import EXAMPLES_DIR


def run(args, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    rc = main(args, out, err, io.StringIO(stdin))
    return rc, out.getvalue(), err.getvalue()


def ex(name):
    return str(EXAMPLES_DIR / name)


class TestParseArgs:
    def test_defaults(self):
        cfg, warnings = parse_args(["somefile", "query=q"])
        assert cfg.mode == "incremental"
        assert cfg.language == "cplus"
        assert cfg.stage_from == "pre-processor"
        assert cfg.stage_to == "post-processor"
        assert cfg.input_files == ["somefile"]
        assert cfg.override.label == "q"
        assert not cfg.override.have_range
        assert cfg.override.solutions is None
        assert warnings == []

    def test_every_override_kind(self):
        cfg, _ = parse_args(["f", "minstep=2", "sol=all", "query=go"])
        ov = cfg.override
        assert ov.label == "go"
        assert (ov.min_step, ov.max_step) == (2, None)
        assert ov.have_range
        assert ov.solutions == 0

    def test_maxstep_pins_both_ends(self):
        cfg, _ = parse_args(["f", "query=q", "maxstep=5"])
        ov = cfg.override
        assert (ov.min_step, ov.max_step) == (5, 5)
        assert ov.have_range

    def test_maxstep_window(self):
        cfg, _ = parse_args(["f", "query=q", "maxstep=2..9"])
        assert (cfg.override.min_step, cfg.override.max_step) == (2, 9)

    def test_maxstep_window_open_end(self):
        cfg, _ = parse_args(["f", "query=q", "maxstep=2..infinity"])
        ov = cfg.override
        assert (ov.min_step, ov.max_step) == (2, None)
        assert ov.have_range

    def test_later_maxstep_clobbers_minstep(self):
        cfg, _ = parse_args(["f", "query=q", "minstep=2", "maxstep=9"])
        assert (cfg.override.min_step, cfg.override.max_step) == (9, 9)

    def test_minstep_narrows_a_window(self):
        cfg, _ = parse_args(["f", "query=q", "maxstep=0..9", "minstep=3"])
        assert (cfg.override.min_step, cfg.override.max_step) == (3, 9)

    def test_trailing_count_is_sol(self):
        cfg, warnings = parse_args(["f", "query=q", "3"])
        assert cfg.override.solutions == 3
        assert warnings == []

    def test_count_last_wins_with_warning(self):
        cfg, warnings = parse_args(["f", "query=q", "2", "all"])
        assert cfg.override.solutions == 0
        assert len(warnings) == 1 and "more than once" in warnings[0]

    def test_zero_count_means_every_model(self):
        cfg, _ = parse_args(["f", "query=q", "0"])
        assert cfg.override.solutions == 0

    def test_from_aliases_shift_the_start(self):
        cfg, _ = parse_args(["--from-pre-processor", "d", "query=q"])
        assert cfg.stage_from == "grounder"
        cfg, _ = parse_args(["--from-grounder", "d"])
        assert cfg.stage_from == "solver"

    def test_to_stage_claims_stdout(self):
        cfg, _ = parse_args(["--to-grounder", "f", "query=q"])
        assert cfg.stage_to == "grounder"
        assert cfg.stage_outputs == {"grounder": None}

    def test_stage_output_files(self):
        cfg, _ = parse_args(
            ["--solver-output=m.txt", "--post-processor-output", "f", "query=q"]
        )
        assert cfg.stage_outputs == {"solver": "m.txt", "post-processor": None}

    @pytest.mark.parametrize(
        "argv,fragment",
        [
            (["--bogus", "f"], "unknown flag"),
            (["--mode=fast", "f"], "unknown mode"),
            (["--to-linker", "f"], "unknown stage"),
            (["--from-solver", "f"], "cannot start from"),
            (["f", "minstep=x"], "bad minstep"),
            (["f", "sol=some"], "bad solution count"),
            (["f", "maxstep=5..2"], "empty step range"),
            (["f", "maxstep=1", "minstep=3"], "minstep exceeds maxstep"),
            (["f", "speed=9"], "unknown override"),
            (["--from-grounder", "--to-pre-processor", "f"], "stage order"),
            (["--all-steps", "f"], "requires --mode=static"),
            ([], "no input files"),
            (["--language=bc", "f"], "language mode not supported in this build"),
        ],
    )
    def test_usage_errors(self, argv, fragment):
        with pytest.raises(UsageError, match=fragment):
            parse_args(argv)

    def test_help_skips_validation(self):
        cfg, _ = parse_args(["--help"])
        assert cfg.want_help


class TestExitCodes:
    def test_models_found_is_zero(self):
        rc, out, _ = run([ex("bw-pair"), "query=tower"])
        assert rc == 0
        assert "found step 1, 1 model" in out

    def test_exhaustion_is_one(self):
        rc, out, _ = run([ex("bw-test"), "query=impossible"])
        assert rc == 1
        assert "no models in steps 0..1" in out

    def test_usage_problem_is_two(self):
        rc, _, err = run(["--bogus"])
        assert rc == 2
        assert "unknown flag" in err and "usage:" in err

    def test_parse_problem_is_two(self, tmp_path):
        bad = tmp_path / "bad"
        bad.write_text(":- sorts\nblock(\n")
        rc, _, err = run([str(bad), "query=q"])
        assert rc == 2
        assert "error:" in err

    def test_unknown_query_is_two(self):
        rc, _, err = run([ex("bw-pair"), "query=nope"])
        assert rc == 2
        assert "no query named 'nope'" in err
        assert "tower" in err

    def test_other_language_is_two(self):
        rc, _, err = run(["--language=bc", ex("hanoi"), "query=transfer"])
        assert rc == 2
        assert "language mode not supported in this build" in err

    def test_help_is_zero(self):
        rc, out, _ = run(["--help"])
        assert rc == 0
        assert out.startswith("usage:")


class TestBatchOutput:
    def test_plans_hide_false_booleans(self):
        rc, out, _ = run([ex("bw-pair"), "query=tower"])
        assert rc == 0
        assert "SOLUTION 1 (step 1)" in out
        assert "ACTIONS:  move(a,b)" in out
        assert "-move(" not in out

    def test_summary_has_timings_per_stage(self):
        _, out, _ = run([ex("bw-pair"), "query=tower"])
        (line,) = [l for l in out.splitlines() if l.startswith("timings:")]
        for stage in ("pre-processor", "grounder", "solver", "post-processor"):
            assert stage in line

    def test_solution_count_override(self):
        rc, out, _ = run([ex("ferryman"), "query=cross", "all"])
        assert rc == 0
        assert out.count("SOLUTION") == 2
        assert "found step 7, 2 models" in out

    def test_maxstep_pins_the_exact_step(self):
        rc, out, _ = run([ex("ferryman"), "query=cross", "maxstep=3"])
        assert rc == 1
        assert "no models in steps 3..3" in out

    def test_maxstep_window_truncates(self):
        rc, out, _ = run([ex("ferryman"), "query=cross", "maxstep=0..3"])
        assert rc == 1
        assert "no models in steps 0..3" in out

    def test_minstep_above_maxstep_rejected(self):
        rc, _, err = run([ex("bw-pair"), "query=tower", "maxstep=1", "minstep=3"])
        assert rc == 2
        assert "exceeds" in err

    def test_static_mode_matches_incremental(self):
        rc_i, out_i, _ = run([ex("bw-test"), "query=simple"])
        rc_s, out_s, _ = run(["--mode=static", ex("bw-test"), "query=simple"])
        assert rc_i == rc_s == 0
        pick = lambda t: [l for l in t.splitlines() if l.startswith("query")]
        assert pick(out_i) == pick(out_s)

    def test_all_steps_reports_every_horizon(self):
        rc, out, _ = run(
            ["--mode=static", "--all-steps", ex("bw-pair"), "query=tower", "all"]
        )
        assert rc == 0
        steps = [l for l in out.splitlines() if l.startswith("step ")]
        assert steps[0] == "step 0: no models"
        assert steps[1] == "step 1: 1 model"
        assert len(steps) == 5


class TestStageCuts:
    def test_to_pre_processor_needs_no_query(self):
        rc, out, err = run(["--to-pre-processor", ex("bw-pair")])
        assert rc == 0
        assert out.startswith("#format ground-laws 1.")
        assert out.rstrip().endswith("#end.")
        assert err == ""

    def test_ground_dump_refeeds_identically(self, tmp_path):
        _, dump, _ = run(["--to-pre-processor", ex("bw-pair")])
        path = tmp_path / "pre.dump"
        path.write_text(dump)
        rc, out, _ = run(["--from-grounder", str(path), "query=tower"])
        assert rc == 0
        assert "found step 1, 1 model" in out

    def test_incremental_dump_carries_its_query(self, tmp_path):
        _, dump, _ = run(["--to-grounder", ex("hanoi"), "query=transfer"])
        assert dump.startswith("#format incremental-program 1.")
        path = tmp_path / "inc.dump"
        path.write_text(dump)
        rc, out, _ = run(["--from-grounder", str(path)])
        assert rc == 0
        assert "query 'transfer': found step 7, 1 model" in out

    def test_static_grounder_dump_is_fixed_horizon(self, tmp_path):
        _, dump, _ = run(
            ["--mode=static", "--to-grounder", ex("bw-pair"),
             "query=tower", "maxstep=1"]
        )
        assert dump.startswith("#format prop-program 1.")
        path = tmp_path / "prop.dump"
        path.write_text(dump)
        rc, out, _ = run(["--from-grounder", str(path)])
        assert rc == 0
        assert "found step 1, 1 model" in out

    def test_to_solver_splits_payload_from_summary(self):
        rc, out, err = run(["--to-solver", ex("bw-pair"), "query=tower"])
        assert rc == 0
        (line,) = out.splitlines()
        assert line.startswith("0:loc(a)=table ")
        assert "1:loc(a)=b" in line
        assert "found step 1" in err

    def test_solver_and_plan_files(self, tmp_path):
        mfile = tmp_path / "models.txt"
        pfile = tmp_path / "plans.txt"
        rc, out, _ = run(
            [f"--solver-output={mfile}", f"--post-processor-output={pfile}",
             ex("bw-pair"), "query=tower"]
        )
        assert rc == 0
        assert mfile.read_text().startswith("0:loc(a)=table ")
        assert pfile.read_text() in out  # same plans, file and stdout

    def test_to_grounder_without_query_is_usage_error(self):
        rc, _, err = run(["--to-grounder", ex("bw-pair")])
        assert rc == 2
        assert "requires a query" in err

    def test_dump_refeed_wants_one_file(self, tmp_path):
        a = tmp_path / "a"
        a.write_text("x")
        rc, _, err = run(["--from-grounder", str(a), str(a)])
        assert rc == 2
        assert "exactly one dump file" in err


REPL_SCRIPT = """\
help
config
queries
frobnicate
sol=all
maxstep=1
minstep=0
query=nosuch
query=tower
exit
"""

REPL_GOLDEN = """\
interactive mode; 'help' lists commands, 'exit' leaves
> help
Commands:
  help            Displays the list of available commands
  config          Displays the current configuration
  queries         Displays the list of available queries to run
  minstep=[#]     Moves the lower end of the step range
  maxstep=[#]     Sets the step range to #, or to a window with lo..hi
  sol=[#]         Sets how many solutions to report; 0 or 'all' for every one
  query=[QUERY]   Runs the named query with the session overrides
  exit            Leaves interactive mode
> config
  minstep   (query default)
  maxstep   (query default)
  sol       1
  mode      incremental
  language  cplus
> queries
  tower  steps 0..4
> frobnicate
unknown command 'frobnicate'; try 'help'
> sol=all
sol set to 0
> maxstep=1
step range set to 1..1
> minstep=0
minstep set to 0
> query=nosuch
error: no query named 'nosuch'; 'queries' lists them
> query=tower
SOLUTION 1 (step 1)
0:  loc(a)=table  loc(b)=table
ACTIONS:  move(a,b)
1:  loc(a)=b  loc(b)=table
query 'tower': found step 1, 1 model
> exit
"""


class TestRepl:
    def test_enters_when_no_query_given(self):
        rc, out, _ = run([ex("bw-pair")], stdin="exit\n")
        assert rc == 0
        assert out.startswith("interactive mode")

    def test_golden_session(self):
        rc, out, err = run([ex("bw-pair")], stdin=REPL_SCRIPT)
        assert rc == 0
        assert err == ""
        assert out == REPL_GOLDEN

    def test_unknown_command_does_not_terminate(self):
        rc, out, _ = run(
            [ex("bw-pair")], stdin="nonsense\nquery=tower\nexit\n"
        )
        assert rc == 0
        assert "unknown command 'nonsense'" in out
        assert "found step 1" in out

    def test_eof_leaves_cleanly(self):
        rc, out, _ = run([ex("bw-pair")], stdin="help\n")
        assert rc == 0
        assert out.endswith("> \n")

    def test_overrides_do_not_leak_into_the_description(self):
        # maxstep=0 starves the first run; a later window override must
        # search the file's full range again
        script = "maxstep=0\nquery=tower\nmaxstep=0..4\nquery=tower\nexit\n"
        rc, out, _ = run([ex("bw-pair")], stdin=script)
        assert rc == 0
        assert "no models in steps 0..0" in out
        assert "found step 1, 1 model" in out

    def test_bad_value_reports_and_continues(self):
        rc, out, _ = run(
            [ex("bw-pair")], stdin="minstep=soon\nexit\n"
        )
        assert rc == 0
        assert "error: bad minstep 'soon'" in out

    def test_unbounded_query_asks_for_maxstep(self, tmp_path):
        (tmp_path / "bw").write_text((EXAMPLES_DIR / "bw").read_text())
        src = (EXAMPLES_DIR / "bw-pair").read_text()
        src += "\n:- query\n  label :: open;\n  maxstep :: 0..infinity;\n  maxstep: loc(a) = b.\n"
        f = tmp_path / "open-range"
        f.write_text(src)
        script = "query=open\nmaxstep=1\nquery=open\nexit\n"
        rc, out, _ = run([str(f)], stdin=script)
        assert rc == 0
        assert "no upper step bound" in out
        # the initial state is unconstrained, so pinning step 1 works
        assert "found step 1, 1 model" in out
