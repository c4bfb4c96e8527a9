"""Command line front end for the planning pipeline.

The pipeline has four stages:

  pre-processor    parse and ground the description
  grounder         translate to timed rules
  solver           enumerate stable models
  post-processor   render plans

``--to-STAGE`` stops after a stage and emits its payload on stdout;
``--from-STAGE`` starts from a dump produced earlier; ``--STAGE-output=FILE``
writes a stage's payload without stopping there.  When no query is named
on the command line the tool drops into an interactive loop instead.
"""

from __future__ import annotations

import dataclasses
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .export import (
    ExportError,
    export_ground,
    export_incremental,
    export_prop,
    import_ground,
    import_incremental,
    import_prop,
    sniff_format,
)
from .ground import GroundLawSet, GroundQuery, ground_description
from .parser import (
    MalformedOverride,
    QueryOverride,
    parse_files,
    parse_query_override,
)
from .plans import model_atom_names, render_plan_view, to_plan_view
from .solve import SolveConfig, Stats, enumerate_models, solve_incremental
from .syntax import LangError
from .translate import (
    IncrementalProgram,
    PropProgram,
    incremental_program,
    to_prop,
)

STAGES = ("pre-processor", "grounder", "solver", "post-processor")

USAGE = """\
usage: cplusplan [FLAGS] FILE... [OVERRIDE...] [COUNT]

Finds shortest plans for multi-valued action descriptions.

flags:
  --mode=incremental|static   search strategy (default incremental)
  --language=cplus            input language (only cplus in this build)
  --to-STAGE                  stop after STAGE; its payload goes to stdout
  --from-STAGE                treat FILE as a STAGE dump
                              (pre-processor and grounder dumps are accepted)
  --STAGE-output[=FILE]       also write STAGE's payload to FILE
  --all-steps                 with --mode=static, report every step in range
  --help                      print this text

overrides (doubling as interactive commands):
  query=LABEL    run the named query
  maxstep=N      solve at step N exactly; lo..hi searches that window
  minstep=N      move the lower end of the step range
  sol=N          solutions to report; 0 or 'all' for every one

A trailing bare number is shorthand for sol=N.  Without query=LABEL the
tool enters an interactive loop; 'help' there lists the commands.
stages: pre-processor, grounder, solver, post-processor
"""

REPL_HELP = """\
Commands:
  help            Displays the list of available commands
  config          Displays the current configuration
  queries         Displays the list of available queries to run
  minstep=[#]     Moves the lower end of the step range
  maxstep=[#]     Sets the step range to #, or to a window with lo..hi
  sol=[#]         Sets how many solutions to report; 0 or 'all' for every one
  query=[QUERY]   Runs the named query with the session overrides
  exit            Leaves interactive mode\
"""


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    input_files: list[str] = field(default_factory=list)
    override: QueryOverride = field(default_factory=QueryOverride)
    stage_from: str = "pre-processor"
    stage_to: str = "post-processor"
    stage_outputs: dict = field(default_factory=dict)  # stage -> path | None
    mode: str = "incremental"
    language: str = "cplus"
    all_steps: bool = False
    want_help: bool = False


# ---------------------------------------------------------------------------
# Argument classification

# reading a stage's dump means starting at the stage after it
_FROM_ALIASES = {"pre-processor": "grounder", "grounder": "solver"}

_OVERRIDE_PREFIXES = ("query=", "minstep=", "maxstep=", "sol=")


def parse_args(argv: list[str]) -> tuple[RunConfig, list[str]]:
    cfg = RunConfig()
    override_tokens: list[str] = []
    for tok in argv:
        if tok == "--help":
            cfg.want_help = True
        elif tok == "--all-steps":
            cfg.all_steps = True
        elif tok.startswith("--mode="):
            mode = tok[len("--mode=") :]
            if mode not in ("incremental", "static"):
                raise UsageError(f"unknown mode '{mode}'")
            cfg.mode = mode
        elif tok.startswith("--language="):
            cfg.language = tok[len("--language=") :]
        elif tok.startswith("--to-"):
            stage = tok[len("--to-") :]
            if stage not in STAGES:
                raise UsageError(f"unknown stage '{stage}'")
            cfg.stage_to = stage
            cfg.stage_outputs.setdefault(stage, None)
        elif tok.startswith("--from-"):
            stage = tok[len("--from-") :]
            if stage not in _FROM_ALIASES:
                raise UsageError(f"cannot start from '{stage}' output")
            cfg.stage_from = _FROM_ALIASES[stage]
        elif tok.startswith("--") and "-output" in tok:
            head, sep, path = tok.partition("=")
            stage = head[2 : -len("-output")]
            if stage not in STAGES:
                raise UsageError(f"unknown stage '{stage}'")
            cfg.stage_outputs[stage] = path if sep else None
        elif tok.startswith("--"):
            raise UsageError(f"unknown flag '{tok}'")
        elif tok.startswith(_OVERRIDE_PREFIXES) or tok == "all" or tok.isdigit():
            override_tokens.append(tok)
        elif "=" in tok and tok[: tok.index("=")].isidentifier():
            raise UsageError(f"unknown override '{tok[: tok.index('=')]}'")
        else:
            cfg.input_files.append(tok)

    try:
        cfg.override = parse_query_override(override_tokens)
    except MalformedOverride as e:
        raise UsageError(str(e)) from e

    if cfg.want_help:
        return cfg, cfg.override.warnings
    if cfg.language != "cplus":
        raise UsageError("language mode not supported in this build")
    if STAGES.index(cfg.stage_from) > STAGES.index(cfg.stage_to):
        raise UsageError(
            f"stage order: cannot run from '{cfg.stage_from}' to '{cfg.stage_to}'"
        )
    if cfg.all_steps and cfg.mode != "static":
        raise UsageError("--all-steps requires --mode=static")
    if not cfg.input_files:
        raise UsageError("no input files")
    return cfg, cfg.override.warnings


# ---------------------------------------------------------------------------
# Stage plumbing

def _emit(cfg: RunConfig, stage: str, text: str, out) -> None:
    if stage not in cfg.stage_outputs:
        return
    target = cfg.stage_outputs[stage]
    if target is None:
        out.write(text)
    else:
        Path(target).write_text(text)


def _solve_config(ov: QueryOverride) -> SolveConfig:
    return SolveConfig(max_solutions=ov.solutions if ov.solutions is not None else 1)


def _apply_range(query: GroundQuery, ov: QueryOverride, need_bound: bool) -> GroundQuery:
    q = query
    if ov.have_range:
        # an explicit 'lo..infinity' cannot unbound a query that has a bound
        lo = ov.min_step if ov.min_step is not None else q.min_step
        hi = ov.max_step if ov.max_step is not None else q.max_step
        q = dataclasses.replace(q, min_step=lo, max_step=hi)
    if q.max_step is not None and q.min_step > q.max_step:
        raise UsageError(f"minstep {q.min_step} exceeds maxstep {q.max_step}")
    if need_bound and q.max_step is None:
        raise UsageError(
            f"query '{q.label}' has no upper step bound; set maxstep=N"
        )
    return q


@dataclass
class Outcome:
    label: str
    found_step: int | None
    solved: list  # (step, models) pairs, every step that was reported
    range_lo: int
    range_hi: int


def _run_query(
    gls: GroundLawSet,
    query: GroundQuery,
    cfg: RunConfig,
    ov: QueryOverride,
    timings: dict,
    out,
    pre_inc: IncrementalProgram | None = None,
) -> Outcome:
    """Grounder and solver stages for one query."""
    solving = STAGES.index(cfg.stage_to) >= STAGES.index("solver")
    q = _apply_range(query, ov, need_bound=solving)
    config = _solve_config(ov)

    if cfg.mode == "incremental":
        t0 = time.perf_counter()
        if pre_inc is not None:
            inc = dataclasses.replace(pre_inc, min_step=q.min_step, max_step=q.max_step)
        else:
            inc = incremental_program(gls, q)
        timings["grounder"] = timings.get("grounder", 0.0) + time.perf_counter() - t0
        _emit(cfg, "grounder", export_incremental(inc), out)
        if STAGES.index(cfg.stage_to) < STAGES.index("solver"):
            return Outcome(q.label, None, [], q.min_step, q.max_step)
        t0 = time.perf_counter()
        res = solve_incremental(inc, config)
        timings["solver"] = timings.get("solver", 0.0) + time.perf_counter() - t0
        solved = [(res.found_step, res.models)] if res.models else []
        return Outcome(q.label, res.found_step, solved, q.min_step, q.max_step)

    # static mode: one full program per horizon
    stats = Stats()
    solved = []
    found = None
    emitted = False
    k = q.min_step
    while True:
        t0 = time.perf_counter()
        prog = to_prop(gls, k, q)
        timings["grounder"] = timings.get("grounder", 0.0) + time.perf_counter() - t0
        if not emitted:
            _emit(cfg, "grounder", export_prop(prog), out)
            emitted = True
        if STAGES.index(cfg.stage_to) < STAGES.index("solver"):
            return Outcome(q.label, None, [], q.min_step, q.max_step)
        t0 = time.perf_counter()
        models = list(
            enumerate_models(prog.rules, prog.timed_consts, config, stats)
        )
        timings["solver"] = timings.get("solver", 0.0) + time.perf_counter() - t0
        if cfg.all_steps:
            solved.append((k, models))
        elif models:
            solved.append((k, models))
        if models and found is None:
            found = k
            if not cfg.all_steps:
                break
        if k >= q.max_step:
            break
        k += 1
    return Outcome(q.label, found, solved, q.min_step, q.max_step)


def _model_lines(outcome: Outcome, gls: GroundLawSet) -> str:
    lines = []
    for _, models in outcome.solved:
        for m in models:
            lines.append(model_atom_names(m, gls))
    return "".join(line + "\n" for line in lines)


def _plan_text(outcome: Outcome, gls: GroundLawSet) -> str:
    parts = []
    n = 0
    for step, models in outcome.solved:
        for m in models:
            n += 1
            view = to_plan_view(m, gls, step, outcome.label)
            parts.append(
                f"SOLUTION {n} (step {step})\n"
                + render_plan_view(view, hide_false=True)
            )
    return "\n".join(parts)


def _summary_lines(outcome: Outcome, cfg: RunConfig) -> list[str]:
    lines = []
    if cfg.all_steps:
        for step, models in outcome.solved:
            word = "model" if len(models) == 1 else "models"
            shown = f"{len(models)} {word}" if models else "no models"
            lines.append(f"step {step}: {shown}")
    total = sum(len(m) for _, m in outcome.solved)
    word = "model" if total == 1 else "models"
    if outcome.found_step is None:
        lines.append(
            f"query '{outcome.label}': no models in steps "
            f"{outcome.range_lo}..{outcome.range_hi}"
        )
    else:
        lines.append(
            f"query '{outcome.label}': found step {outcome.found_step}, {total} {word}"
        )
    return lines


def _timing_line(timings: dict) -> str:
    parts = [f"{s} {timings[s]:.3f}s" for s in STAGES if s in timings]
    return "timings: " + "  ".join(parts)


def _finish_query(
    gls, outcome: Outcome, cfg: RunConfig, timings: dict, out, err, quiet: bool
) -> int:
    """Solver and post-processor payloads, then the summary."""
    _emit(cfg, "solver", _model_lines(outcome, gls), out)
    if STAGES.index(cfg.stage_to) >= STAGES.index("post-processor"):
        t0 = time.perf_counter()
        text = _plan_text(outcome, gls)
        timings["post-processor"] = (
            timings.get("post-processor", 0.0) + time.perf_counter() - t0
        )
        if text:
            out.write(text)
        # stdout already has the plans; only a named file needs a copy
        if cfg.stage_outputs.get("post-processor") is not None:
            _emit(cfg, "post-processor", text, out)
    summary_to = out if cfg.stage_to == "post-processor" else err
    for line in _summary_lines(outcome, cfg):
        print(line, file=summary_to)
    if not quiet:
        print(_timing_line(timings), file=summary_to)
    return 0 if outcome.found_step is not None else 1


# ---------------------------------------------------------------------------
# Interactive loop

def _repl(gls, cfg, timings, out, err, source) -> int:
    session = dataclasses.replace(cfg.override, warnings=[])
    print("interactive mode; 'help' lists commands, 'exit' leaves", file=out)
    echo = not getattr(source, "isatty", lambda: False)()
    while True:
        out.write("> ")
        out.flush()
        raw = source.readline()
        if not raw:
            out.write("\n")
            return 0
        line = raw.strip()
        if echo:
            print(line, file=out)
        if not line:
            continue
        if line == "exit":
            return 0
        if line == "help":
            print(REPL_HELP, file=out)
        elif line == "config":
            for key, val in (("minstep", session.min_step), ("maxstep", session.max_step)):
                shown = "(query default)" if val is None else val
                print(f"  {key:9} {shown}", file=out)
            sol = session.solutions if session.solutions is not None else 1
            print(f"  {'sol':9} {sol}", file=out)
            print(f"  {'mode':9} {cfg.mode}", file=out)
            print(f"  {'language':9} {cfg.language}", file=out)
        elif line == "queries":
            for label, q in gls.queries.items():
                hi = "infinity" if q.max_step is None else q.max_step
                print(f"  {label}  steps {q.min_step}..{hi}", file=out)
        elif line.startswith(_OVERRIDE_PREFIXES):
            try:
                ov = parse_query_override([line])
            except MalformedOverride as e:
                print(f"error: {e}; try 'help'", file=out)
                continue
            if ov.label is None:
                if ov.solutions is not None:
                    session.solutions = ov.solutions
                    print(f"sol set to {ov.solutions}", file=out)
                elif line.startswith("minstep="):
                    session.min_step = ov.min_step
                    session.have_range = True
                    print(f"minstep set to {ov.min_step}", file=out)
                else:
                    session.min_step = ov.min_step
                    session.max_step = ov.max_step
                    session.have_range = True
                    hi = "infinity" if ov.max_step is None else ov.max_step
                    print(f"step range set to {ov.min_step}..{hi}", file=out)
                continue
            query = gls.queries.get(ov.label)
            if query is None:
                print(f"error: no query named '{ov.label}'; 'queries' lists them", file=out)
                continue
            try:
                outcome = _run_query(gls, query, cfg, session, timings, out)
                _finish_query(gls, outcome, cfg, timings, out, err, quiet=True)
            except (UsageError, LangError) as e:
                print(f"error: {e}", file=out)
        elif "=" in line and line[: line.index("=")].strip().isidentifier():
            print(f"error: unknown override '{line[: line.index('=')].strip()}'; try 'help'", file=out)
        else:
            print(f"unknown command '{line}'; try 'help'", file=out)


# ---------------------------------------------------------------------------
# Entry points

def _load(cfg: RunConfig, timings: dict):
    """Returns (gls, pre-translated program or None)."""
    if cfg.stage_from == "pre-processor":
        t0 = time.perf_counter()
        gls = ground_description(parse_files(cfg.input_files))
        timings["pre-processor"] = time.perf_counter() - t0
        return gls, None
    if len(cfg.input_files) != 1:
        raise UsageError("exactly one dump file when starting from a stage output")
    text = Path(cfg.input_files[0]).read_text()
    kind = sniff_format(text)
    if kind == "ground-laws":
        return import_ground(text), None
    if kind == "prop-program":
        prog = import_prop(text)
        return prog.gls, prog
    if kind == "incremental-program":
        inc = import_incremental(text)
        return inc.gls, inc
    raise UsageError(f"unrecognized dump format '{kind}'")


def _run(cfg: RunConfig, out, err, repl_source) -> int:
    timings: dict[str, float] = {}
    gls, pre = _load(cfg, timings)
    _emit(cfg, "pre-processor", export_ground(gls), out)
    if cfg.stage_to == "pre-processor":
        return 0

    if isinstance(pre, PropProgram):
        # a fixed-horizon program: solve it as it stands
        config = _solve_config(cfg.override)
        stats = Stats()
        t0 = time.perf_counter()
        models = list(
            enumerate_models(pre.rules, pre.timed_consts, config, stats)
        )
        timings["solver"] = time.perf_counter() - t0
        found = pre.horizon if models else None
        solved = [(pre.horizon, models)] if models else []
        outcome = Outcome("program", found, solved, pre.horizon, pre.horizon)
        return _finish_query(gls, outcome, cfg, timings, out, err, quiet=False)

    label = cfg.override.label
    if label is None and isinstance(pre, IncrementalProgram):
        label = pre.query.label
    if label is None:
        if cfg.stage_to in ("solver", "post-processor"):
            return _repl(gls, cfg, timings, out, err, repl_source)
        raise UsageError("translation requires a query; pass query=LABEL")
    query = gls.queries.get(label)
    if query is None:
        known = ", ".join(sorted(gls.queries)) or "none"
        raise UsageError(f"no query named '{label}' (available: {known})")
    outcome = _run_query(
        gls, query, cfg, cfg.override, timings, out,
        pre_inc=pre if isinstance(pre, IncrementalProgram) else None,
    )
    if STAGES.index(cfg.stage_to) < STAGES.index("solver"):
        return 0
    return _finish_query(gls, outcome, cfg, timings, out, err, quiet=False)


def main(argv: list[str], out=None, err=None, repl_source=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    repl_source = repl_source if repl_source is not None else sys.stdin
    try:
        cfg, warnings = parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=err)
        print(USAGE.rstrip(), file=err)
        return 2
    for w in warnings:
        print(f"warning: {w}", file=err)
    if cfg.want_help:
        print(USAGE.rstrip(), file=out)
        return 0
    try:
        return _run(cfg, out, err, repl_source)
    except UsageError as e:
        print(f"error: {e}", file=err)
        return 2
    except (LangError, ExportError, OSError) as e:
        print(f"error: {e}", file=err)
        return 2


def console_main() -> int:
    return main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(console_main())
