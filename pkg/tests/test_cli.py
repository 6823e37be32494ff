"""Command surface: exit codes, listings, traces, tree printing."""

import json

import pytest

from lr1gen.cli import main

from conftest import grammar_path

LISTING1 = """\
###      2 | int e f,g;
###                ^
#E "{input}", line 2/7: syntax error
### Saw token: id='f'
### expected: ; ,
###
###      2 | int e f,g;
###                ^
### Resuming parse with token: id='f'
"""


@pytest.fixture
def workspace(tmp_path):
    return tmp_path


def analyze(workspace, name, *flags):
    out = workspace / (name + ".tables.json")
    code = main(["analyze", grammar_path(name), "--out", str(out), *flags])
    return code, out


def test_analyze_writes_tables(workspace):
    code, out = analyze(workspace, "idlist")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["version"] == 1 and doc["start_state"] == 0


def test_analyze_missing_file_exit_2(workspace, capsys):
    code = main(["analyze", str(workspace / "nope.g")])
    assert code == 2
    assert "#E" in capsys.readouterr().err


def test_analyze_error_ambiguous_grammar_exit_1(workspace, capsys):
    g = workspace / "dup.g"
    g.write_text("<a> : ERROR id | ERROR num ;\n")
    code = main(["analyze", str(g), "--out", str(workspace / "t.json")])
    assert code == 1
    assert "ERROR" in capsys.readouterr().err


def test_analyze_conflicts_exit_1_unless_forced(workspace, capsys):
    g = workspace / "amb.g"
    g.write_text("<e> : <e> '+' <e> | id ;\n")
    out = workspace / "amb.json"
    assert main(["analyze", str(g), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "conflict in state" in err
    assert main(["analyze", str(g), "--out", str(out), "--force"]) == 0
    assert out.exists()


def test_analyze_canonical_flag(workspace):
    code, out = analyze(workspace, "test5", "--canonical")
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["actions"]) == 149  # canonical blows up where pager merges


def test_analyze_report_flag(workspace):
    report = workspace / "r.txt"
    out = workspace / "t.json"
    code = main(["analyze", grammar_path("idlist"), "--out", str(out),
                 "--report", str(report)])
    assert code == 0
    assert report.read_text().startswith("machine: pager")


def test_report_command(workspace, capsys):
    assert main(["report", grammar_path("idlist")]) == 0
    assert "state 0:" in capsys.readouterr().out


def _parse(workspace, grammar, source, *flags):
    _, tables = analyze(workspace, grammar)
    inp = workspace / "input.txt"
    inp.write_text(source)
    code = main(["parse", str(tables), str(inp), *flags])
    return code, inp


def test_listing_one_byte_exact(workspace, capsys):
    code, inp = _parse(workspace, "test4", "\nint e f,g;\n")
    assert code == 1
    captured = capsys.readouterr()
    assert captured.err == LISTING1.format(input=inp)


def test_listing_two_lines(workspace, capsys):
    code, _ = _parse(workspace, "test5", "\n\n\n\n     a = = b+c;\n")
    assert code == 1
    err = capsys.readouterr().err
    assert '"line 5/10: syntax error' not in err  # path precedes it
    assert "line 5/10: syntax error" in err
    assert "### Saw token: =" in err
    assert ("### expected: ( sizeof constant ++ -- & * + - id string_literal ! ~"
            in err)
    assert "### Resuming parse with token: ;" in err


def test_parse_clean_input_quiet_exit_0(workspace, capsys):
    code, _ = _parse(workspace, "test4", "int e,f,g;\n")
    assert code == 0
    captured = capsys.readouterr()
    assert captured.err == "" and captured.out == ""


def test_parse_abort_exit_2(workspace, capsys):
    code, _ = _parse(workspace, "idlist", ",\n")
    assert code == 2
    assert "Parse terminated: cannot discard EOF" in capsys.readouterr().err


def test_parse_missing_tables_exit_3(workspace, capsys):
    inp = workspace / "x.txt"
    inp.write_text("a")
    assert main(["parse", str(workspace / "none.json"), str(inp)]) == 3


def test_parse_tree_output(workspace, capsys):
    code, _ = _parse(workspace, "c_subset", "a = b + c;\n", "--tree")
    assert code == 0
    assert capsys.readouterr().out.strip() == "(n_assign 'a' (n_plus 'b' 'c'))"


def test_trace_tokens_output(workspace, capsys):
    code, _ = _parse(workspace, "c_subset",
                     "typedef unsigned int foo;\nfoo b;\n", "--trace-tokens")
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("Token: id changed to Token: TYPENAME") == 1
    assert out.count("id not changed") == 2
    assert "In ask_oracle with state" in out


def test_max_errors_flag(workspace, capsys):
    code, _ = _parse(workspace, "test4", "int e f f f,g;\n", "--max-errors", "1")
    assert code == 2
    assert "error limit" in capsys.readouterr().err


def test_inject_roundtrip(workspace):
    _, tables = analyze(workspace, "c_subset")
    skel = workspace / "skel.c.in"
    skel.write_text("/* @VERSION@ */\n@TOKEN_DEFS@\n/* bodies */\n@ORACLE_BODIES@\n")
    out = workspace / "parser.c"
    assert main(["inject", str(tables), str(skel), str(out)]) == 0
    text = out.read_text()
    assert text.startswith("/* 1 */\n")
    assert "/* oracle 0 begin */" in text and "@typedef" in text


def test_inject_unknown_placeholder_exit_1(workspace, capsys):
    _, tables = analyze(workspace, "idlist")
    skel = workspace / "skel.in"
    skel.write_text("@BOGUS@")
    assert main(["inject", str(tables), str(skel), str(workspace / "o")]) == 1
    assert "@BOGUS@" in capsys.readouterr().err


def test_inject_missing_input_exit_2(workspace):
    _, tables = analyze(workspace, "idlist")
    assert main(["inject", str(tables), str(workspace / "nope.in"),
                 str(workspace / "o")]) == 2


def test_analyze_twice_byte_identical(workspace):
    _, out1 = analyze(workspace, "c_subset")
    first = out1.read_bytes()
    _, out2 = analyze(workspace, "c_subset")
    assert out2.read_bytes() == first
