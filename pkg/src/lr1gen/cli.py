"""Command line frontend: analyze, parse, inject, report.

Analysis results go to table files; parses print the paper-style error
listings to stderr and traces/trees to stdout.  Exit codes are part of the
contract: analyze 0/1/2 (ok / grammar or conflict errors / I-O), parse
0/1/2/3 (clean / recovered / aborted / I-O), inject 0/1/2.
"""

import argparse
import sys

from .diagnostics import GrammarError, TableError
from .grammar import parse_grammar, augment, validate, RESERVED
from .analysis import (build_canonical, build_pager, resolve_conflicts,
                       check_error_ambiguity, format_report, production_display)
from .tables import make_tables, serialize, inject, load_tables
from .scanner import derive_spec, tokenize
from .engine import run


def _read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _print_diags(diags, out=None):
    for d in diags:
        print(d.format(), file=out or sys.stderr)


def _analyze_pipeline(grammar_path, canonical=False, force=False):
    """Shared by analyze and report: returns (model, machine) or an exit code."""
    try:
        text = _read(grammar_path)
    except OSError as e:
        print('#E "%s": %s' % (grammar_path, e.strerror), file=sys.stderr)
        return 2
    try:
        model = parse_grammar(text, grammar_path)
    except GrammarError as e:
        print(e.diagnostic.format(), file=sys.stderr)
        return 1
    diags = validate(model)
    _print_diags(diags)
    if any(d.severity == "error" for d in diags) and not force:
        return 1
    try:
        model = augment(model)
        machine = build_canonical(model) if canonical else build_pager(model)
    except GrammarError as e:
        print(e.diagnostic.format(), file=sys.stderr)
        return 1
    resolve_conflicts(machine, model, force=force)
    _print_diags(machine.warnings)
    error_diags = check_error_ambiguity(machine)
    _print_diags(error_diags)
    if machine.conflicts:
        for c in machine.conflicts:
            st = machine.states[c.state]
            print('#E "%s": %s conflict in state %d on %s'
                  % (grammar_path, c.kind(), c.state,
                     model.sym(c.terminal).display()), file=sys.stderr)
            for (pi, dot) in sorted(st.kernel):
                print("#N   %s , { %s }"
                      % (production_display(model, pi, dot),
                         " ".join(model.sym(t).display()
                                  for t in sorted(st.kernel[(pi, dot)]))),
                      file=sys.stderr)
    if (machine.conflicts or error_diags) and not force:
        return 1
    return model, machine


def cmd_analyze(args) -> int:
    result = _analyze_pipeline(args.grammar, args.canonical, args.force)
    if isinstance(result, int):
        return result
    model, machine = result
    tables = make_tables(machine, model)
    out_path = args.out or (args.grammar + ".tables.json")
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(serialize(tables))
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                fh.write(format_report(machine, model))
    except OSError as e:
        print('#E "%s": %s' % (e.filename, e.strerror), file=sys.stderr)
        return 2
    return 0


def cmd_report(args) -> int:
    result = _analyze_pipeline(args.grammar, args.canonical, force=True)
    if isinstance(result, int):
        return result
    model, machine = result
    sys.stdout.write(format_report(machine, model))
    return 0


# ---------------------------------------------------------------------------
# parse

def _builtin_callbacks(tables):
    """Oracle handlers selected by body text convention.

    ``@typedef`` answers membership in a symbol table filled by a reduce
    hook watching productions that contain the reserved terminal 'typedef';
    empty or ``@always`` answers TRUE, ``@never`` FALSE.  Anything else is
    host-language code this runner cannot execute and is treated as TRUE.
    """
    context = {"typedefs": set()}
    callbacks = {}
    warnings = []
    for o in tables.oracles:
        body = o.body.strip()
        if body == "@typedef":
            callbacks[o.index] = lambda _i, text, ctx: text in ctx["typedefs"]
        elif body in ("", "@always"):
            callbacks[o.index] = lambda _i, _text, _ctx: True
        elif body == "@never":
            callbacks[o.index] = lambda _i, _text, _ctx: False
        else:
            callbacks[o.index] = lambda _i, _text, _ctx: True
            warnings.append('#W oracle %d body is host code; answering TRUE' % o.index)

    typedef_prods = set()
    for i, p in enumerate(tables.productions):
        if any(tables.sym(s).kind == RESERVED and tables.sym(s).name == "typedef"
               for s in p.rhs):
            typedef_prods.add(i)

    def collect_ids(tree, out):
        if tree.name == "id" and tree.text is not None and not tree.children:
            out.append(tree.text)
        for child in tree.children:
            collect_ids(child, out)

    def on_reduce(pi, popped):
        if pi not in typedef_prods:
            return
        names = []
        for entry in popped:
            if entry[1] is not None:
                collect_ids(entry[1], names)
        if names:
            context["typedefs"].add(names[-1])

    return callbacks, context, (on_reduce if typedef_prods else None), warnings


def _echo_token(lines, tok, out):
    text = lines[tok.line - 1] if 0 < tok.line <= len(lines) else ""
    print("### %6d | %s" % (tok.line, text), file=out)
    print("###%s^" % (" " * (9 + tok.col)), file=out)


def _render_listings(events, tables, source_text, path, out):
    lines = source_text.split("\n")
    pending_note = None
    for ev in events:
        if ev[0] == "dyn_error":
            pending_note = ev[1]
        elif ev[0] == "error":
            _state, tok, expected = ev[1], ev[2], ev[3]
            _echo_token(lines, tok, out)
            print('#E "%s", line %d/%d: syntax error' % (path, tok.line, tok.col), file=out)
            print("### Saw token: %s"
                  % tables.display_token(tok.symbol, tok.subtoken, tok.text), file=out)
            print("### expected: %s"
                  % " ".join(tables.sym(t).name for t in expected), file=out)
            if pending_note:
                print("### %s" % pending_note, file=out)
                pending_note = None
            print("###", file=out)
        elif ev[0] == "recover":
            tok = ev[2]
            _echo_token(lines, tok, out)
            print("### Resuming parse with token: %s"
                  % tables.display_token(tok.symbol, tok.subtoken, tok.text), file=out)
        elif ev[0] == "abort":
            print("### Parse terminated: %s" % ev[1], file=out)


def cmd_parse(args) -> int:
    try:
        tables = load_tables(args.tables)
        text = _read(args.input)
    except (OSError, TableError) as e:
        print('#E %s' % e, file=sys.stderr)
        return 3
    spec = derive_spec(tables)
    _print_diags(spec.warnings)
    tokens, lex_diags = tokenize(text, spec, args.input, tables.eof_id)
    _print_diags(lex_diags)
    callbacks, context, on_reduce, cb_warnings = _builtin_callbacks(tables)
    for w in cb_warnings:
        print(w, file=sys.stderr)
    outcome = run(tables, iter(tokens), callbacks,
                  context=context, on_reduce=on_reduce,
                  collect_events=True,
                  trace=sys.stdout if args.trace_tokens else None,
                  max_errors=args.max_errors)
    _render_listings(outcome.events, tables, text, args.input, sys.stderr)
    if args.tree and outcome.tree is not None:
        print(outcome.tree.sexpr())
    return {"accepted": 0, "recovered": 1, "aborted": 2}[outcome.status]


def cmd_inject(args) -> int:
    try:
        tables = load_tables(args.tables)
    except (OSError, TableError) as e:
        print("#E %s" % e, file=sys.stderr)
        return 2
    try:
        skeleton = _read(args.skeleton)
    except OSError as e:
        print('#E "%s": %s' % (args.skeleton, e.strerror), file=sys.stderr)
        return 2
    try:
        out = inject(skeleton, tables)
    except TableError as e:
        print("#E %s" % e, file=sys.stderr)
        return 1
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    except OSError as e:
        print('#E "%s": %s' % (args.out, e.strerror), file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="lr1gen",
                                 description="LR(1) parser generation toolchain")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze a grammar and write parse tables")
    a.add_argument("grammar")
    a.add_argument("--out", help="table file path (default: GRAMMAR.tables.json)")
    a.add_argument("--report", help="also write a state report to this path")
    a.add_argument("--canonical", action="store_true",
                   help="build the canonical machine instead of the merged one")
    a.add_argument("--force", action="store_true",
                   help="emit tables even with unresolved conflicts")
    a.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("parse", help="parse an input file with generated tables")
    p.add_argument("tables")
    p.add_argument("input")
    p.add_argument("--trace-tokens", action="store_true",
                   help="print the token stream and oracle activity")
    p.add_argument("--tree", action="store_true", help="print the parse tree")
    p.add_argument("--max-errors", type=int, default=None, metavar="N",
                   help="abort after N syntax errors")
    p.set_defaults(fn=cmd_parse)

    i = sub.add_parser("inject", help="inject tables into a skeleton parser file")
    i.add_argument("tables")
    i.add_argument("skeleton")
    i.add_argument("out")
    i.set_defaults(fn=cmd_inject)

    r = sub.add_parser("report", help="print the state report for a grammar")
    r.add_argument("grammar")
    r.add_argument("--canonical", action="store_true")
    r.set_defaults(fn=cmd_report)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
