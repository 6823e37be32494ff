"""Grammar language: parsing, augmentation, validation, round trips."""

import pytest

from lr1gen import parse_grammar, augment, validate, GrammarError
from lr1gen.grammar import (format_grammar, Grammar, Element, Production,
                            TokenRef, MapRule, GENERIC, PLAIN, RESERVED)

from conftest import grammar_text, SUITE

IDLIST = """
<idlist> : <idlist> ',' id
         | <idlist> ERROR id
         | id ;
"""

PREFIX_MAP = """
%map prefix : dualop.'&' => n_addr
| dualop.'-' => n_uminus
| dualop.'*' => n_indirect ;
"""


def test_idlist_productions():
    m = parse_grammar(IDLIST)
    assert len(m.productions) == 3
    lhs = {m.sym(p.lhs).name for p in m.productions}
    assert lhs == {"<idlist>"}
    second = m.productions[1]
    assert [m.sym(e.symbol).name for e in second.rhs] == ["<idlist>", "ERROR", "id"]
    assert m.sym(second.rhs[1].symbol).kind == "error"


def test_alternative_flattening_counts():
    m = parse_grammar("<x> : id | id id | id id id | ;")
    assert len(m.productions) == 4
    assert all(m.sym(p.lhs).name == "<x>" for p in m.productions)
    assert [len(p.rhs) for p in m.productions] == [1, 2, 3, 0]


def test_map_rule_from_listing():
    m = parse_grammar(PREFIX_MAP)
    assert list(m.maps) == ["prefix"]
    mp = m.maps["prefix"]
    assert len(mp.entries) == 3
    dualop = m.find("dualop")
    assert dualop.kind == GENERIC
    assert dualop.subtokens == ["&", "-", "*"]
    assert [(m.ref_display(r), n) for r, n in mp.entries] == [
        ("dualop.'&'", "n_addr"), ("dualop.'-'", "n_uminus"), ("dualop.'*'", "n_indirect")]


def test_empty_input_flagged_by_validate():
    m = parse_grammar("")
    assert len(m.productions) == 0
    diags = validate(m)
    assert any("no productions" in d.message for d in diags)


def test_builtins_always_present():
    m = parse_grammar("")
    kinds = [s.kind for s in m.symbols]
    assert kinds.count("eof") == 1 and kinds.count("error") == 1


def test_subtoken_numbering_first_appearance():
    src = """
%map a : op.'+' => n1 | op.'*' => n2 ;
%left : op.'-' ;
%generic op : '+' '%' ;
%oracle op.'^' : '^' ;
"""
    m = parse_grammar(src)
    assert m.find("op").subtokens == ["+", "*", "-", "%", "^"]
    again = parse_grammar(src)
    assert again.find("op").subtokens == m.find("op").subtokens


def test_augment_shape():
    m = augment(parse_grammar(IDLIST))
    goal = m.productions[0]
    assert m.sym(goal.lhs).name == "<GOAL>"
    assert [m.sym(e.symbol).name for e in goal.rhs] == ["EOF", "<idlist>", "EOF"]
    assert len(m.productions) == 4
    assert m.user_goal == m.find("<idlist>").id


def test_augment_idempotent():
    m = augment(parse_grammar(IDLIST))
    assert augment(m) is m


def test_augment_single_production_grammar():
    m = augment(parse_grammar("<s> : id ;"))
    assert len(m.productions) == 2


def test_augment_requires_a_production():
    with pytest.raises(GrammarError):
        augment(parse_grammar(""))


def test_comments_and_forward_references():
    m = parse_grammar("// leading comment\n<a> : <b> ; // trailing\n<b> : id ;")
    assert len(m.productions) == 2
    assert not validate(m)


# -- validation --------------------------------------------------------------

def test_oracle_spelling_legal_identical():
    m = parse_grammar("%generic dualop : '*' ;\n%oracle dualop.'*' : '*' ;\n<p> : '*' id ;")
    assert validate(m) == []


def test_oracle_spelling_violation():
    m = parse_grammar("%generic dualop : '*' ;\n%oracle dualop.'*' : '+' ;\n<p> : '+' id ;")
    diags = validate(m)
    assert any("'*' cannot be changed to '+'" in d.message for d in diags)


def test_oracle_spelling_matrix():
    # plain -> plain is the typedef case; reserved -> generic needs an
    # identical subtoken literal; anything else with a fixed spelling on
    # either side must agree exactly.
    ok = "%generic op : '*' '+' ;\n%oracle '*' : op ;\n%oracle id : TYPENAME ;\n<p> : '*' id %use op ;"
    assert validate(parse_grammar(ok)) == []
    bad = "%generic op : '+' ;\n%oracle '*' : op ;\n<p> : '*' id %use op ;"
    assert any("cannot be changed" in d.message for d in validate(parse_grammar(bad)))
    # subtoken -> subtoken with the same literal is allowed
    m = parse_grammar("%generic a : '*' ;\n%generic b : '*' '/' ;\n%oracle a.'*' : b.'*' ;\n<p> : id ;")
    assert validate(m) == []
    m = parse_grammar("%generic a : '*' ;\n%generic b : '/' ;\n%oracle a.'*' : b.'/' ;\n<p> : id ;")
    assert any("cannot be changed" in d.message for d in validate(m))


def test_subtoken_in_production_rejected_at_parse():
    with pytest.raises(GrammarError, match="cannot appear in productions"):
        parse_grammar("%generic dualop : '*' ;\n<s> : dualop.'*' ;")


def test_error_as_lhs_flagged():
    m = parse_grammar("<s> : id ;")
    m.productions.append(Production(1, m.error.id, [Element(m.find("id").id)]))
    assert any("left hand side" in d.message for d in validate(m))


def test_undefined_nonterminal_flagged():
    m = parse_grammar("<s> : <ghost> ;")
    assert any("has no productions" in d.message for d in validate(m))


def test_prec_target_needs_level():
    m = parse_grammar("<s> : id %prec '+' ;")
    assert any("%prec target" in d.message for d in validate(m))


def test_map_coverage_warning():
    src = """
%generic op : '+' '-' ;
%map half : op.'+' => n_plus ;
<s> : <s> %use op <s> => %map half | id ;
"""
    diags = validate(parse_grammar(src))
    assert any(d.severity == "warning" and "does not cover" in d.message for d in diags)


def test_map_action_requires_selector():
    src = "%generic op : '+' ;\n%map mm : op.'+' => n ;\n<s> : id => %map mm ;"
    assert any("requires a %use or %ref" in d.message for d in validate(parse_grammar(src)))


def test_map_action_unknown_map():
    src = "%generic op : '+' ;\n<s> : %use op => %map nope ;"
    assert any("undeclared map" in d.message for d in validate(parse_grammar(src)))


def test_duplicate_precedence_membership():
    src = "%left : '+' ;\n%right : '+' ;\n<s> : id '+' id ;"
    assert any("more than one precedence level" in d.message
               for d in validate(parse_grammar(src)))


def test_map_entry_undeclared_subtoken_programmatic():
    m = parse_grammar("%generic op : '+' ;\n<s> : %use op ;")
    m.maps["bogus"] = MapRule("bogus", [(TokenRef(m.find("op").id, 7), "n")])
    assert any("does not reference a declared subtoken" in d.message for d in validate(m))


# -- parse errors ------------------------------------------------------------

@pytest.mark.parametrize("src,msg", [
    ("<s> : id", "expected ';'"),
    ("<s> ; id ;", "expected ':'"),
    ("%map m : op.'+' => n ;\n%map m : op.'-' => n2 ;", "duplicate map"),
    ("%bogus : x ;", "unknown keyword"),
    ("<s> : 'unterminated ;", "unterminated literal"),
    ("<s> : %use id ;", "not a generic token"),
    ("<s> : %use ERROR ;", "cannot follow"),
    ("%oracle ERROR : id ;", "cannot be used as a token reference"),
    ("%map m : op.'+' => n | op.'+' => n2 ;", "listed twice"),
    ("%generic g : ;", "at least one literal"),
    ("<s> : %use op %ref op2 ;", "more than one"),
])
def test_parse_diagnostics(src, msg):
    with pytest.raises(GrammarError) as exc:
        parse_grammar(src)
    assert msg in str(exc.value)


def test_diagnostic_carries_position():
    with pytest.raises(GrammarError) as exc:
        parse_grammar("<ok> : id ;\n<bad> : id")
    d = exc.value.diagnostic
    assert d.line == 2 and d.col > 0


# -- round trips -------------------------------------------------------------

def _normalize(m):
    return (
        [(m.sym(p.lhs).name,
          tuple((m.sym(e.symbol).name, e.selector) for e in p.rhs),
          m.ref_display(p.prec) if p.prec else None, p.action)
         for p in m.productions],
        {name: [(m.ref_display(r), n) for r, n in mp.entries]
         for name, mp in m.maps.items()},
        [(pl.assoc, [m.ref_display(r) for r in pl.members]) for pl in m.prec_levels],
        [(m.ref_display(o.x), m.ref_display(o.y), o.body.strip()) for o in m.oracles],
        {s.name: list(s.subtokens) for s in m.symbols if s.kind == GENERIC},
    )


@pytest.mark.parametrize("name", SUITE)
def test_pretty_print_round_trip(name):
    m1 = parse_grammar(grammar_text(name), name)
    m2 = parse_grammar(format_grammar(m1), name)
    assert _normalize(m1) == _normalize(m2)


@pytest.mark.parametrize("name", SUITE)
def test_suite_grammars_validate_clean(name):
    m = parse_grammar(grammar_text(name), name)
    assert not [d for d in validate(m) if d.severity == "error"]
