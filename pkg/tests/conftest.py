"""Shared fixtures and oracles for the test suite.

The heavyweight helpers live here: cached machine builds for the grammar
suite, the test-only full-core (LALR-style) merge used as a counterexample
generator, and the stack-simulation oracle that independently decides
which single tokens a state can consume.
"""

import itertools
import random
from collections import defaultdict
from pathlib import Path

import pytest

from lr1gen import (parse_grammar, augment, validate, build_pager,
                    build_canonical, resolve_conflicts, make_tables, run)
from lr1gen.analysis import _build
from lr1gen.engine import Token
from lr1gen.grammar import NONTERMINAL, PLAIN, RESERVED, GENERIC

GRAMMAR_DIR = Path(__file__).parent / "grammars"

SUITE = ["idlist", "test4", "test5", "c_subset", "expr_dyn", "expr_ref", "goal_error"]

# Grammars where every same-core merge is safe (used for the LALR
# state-count comparison); g1 is the deliberate counterexample.
LALR_CLEAN = ["idlist", "test4", "test5", "expr_ref", "goal_error"]

G1_TEXT = """
<s> : 'a' <e> 'c' | 'a' <f> 'd' | 'b' <f> 'c' | 'b' <e> 'd' ;
<e> : 'e' ;
<f> : 'e' ;
"""


def grammar_text(name):
    if name == "g1":
        return G1_TEXT
    return (GRAMMAR_DIR / (name + ".g")).read_text()


def grammar_path(name):
    return str(GRAMMAR_DIR / (name + ".g"))


def load_model(name, augmented=True):
    model = parse_grammar(grammar_text(name), name + ".g")
    assert not [d for d in validate(model) if d.severity == "error"]
    return augment(model) if augmented else model


def build_fullcore(model):
    """LALR-style merge: same core always merges, no conflict safety net.
    Test-only; the product never builds this machine."""
    return _build(model, "merge", compatible=lambda a, b: True, safety=False)


class Build:
    def __init__(self, name):
        self.name = name
        self.model = load_model(name)
        self.pager = resolve_conflicts(build_pager(self.model), self.model)
        self.canonical = resolve_conflicts(build_canonical(self.model), self.model)
        self.tables = make_tables(self.pager, self.model)
        self.canonical_tables = make_tables(self.canonical, self.model)


_CACHE = {}


def build(name) -> Build:
    if name not in _CACHE:
        _CACHE[name] = Build(name)
    return _CACHE[name]


@pytest.fixture(scope="session")
def suite():
    return {name: build(name) for name in SUITE}


# ---------------------------------------------------------------------------
# Token construction.

_SAMPLE_TEXT = {"id": "a", "constant": "1", "string_literal": '"s"', "TYPENAME": "T"}


def terminal_alphabet(tables):
    """(symbol, subtoken, text) templates for every scanner-producible
    terminal: reserved literals, each generic subtoken, and plain classes."""
    out = []
    for s in tables.symbols:
        if s.kind == RESERVED:
            out.append((s.id, None, s.name))
        elif s.kind == GENERIC:
            out.extend((s.id, num, lit) for num, lit in enumerate(s.subtokens))
        elif s.kind == PLAIN:
            out.append((s.id, None, _SAMPLE_TEXT.get(s.name, "x")))
    return out


def tokens_from(templates, tables):
    toks = [Token(sym, text, sub, 1, i + 1)
            for i, (sym, sub, text) in enumerate(templates)]
    toks.append(Token(tables.eof_id, None, None, 1, len(templates) + 1))
    return toks


def spelling_tokens(tables, spellings):
    """Build a token list from spellings like 'id', "';'", "dualop.'*'"."""
    lookup = {}
    for s in tables.symbols:
        if s.kind == RESERVED:
            lookup[s.name] = (s.id, None, s.name)
        elif s.kind == GENERIC:
            for num, lit in enumerate(s.subtokens):
                lookup.setdefault(lit, (s.id, num, lit))
        elif s.kind == PLAIN:
            lookup[s.name] = (s.id, None, _SAMPLE_TEXT.get(s.name, "x"))
    return tokens_from([lookup[sp] for sp in spellings], tables)


def outcome_key(outcome):
    return (outcome.status, outcome.recoveries, outcome.tree)


# ---------------------------------------------------------------------------
# Independent oracle: which single tokens can a state consume?

def predecessors(machine):
    preds = defaultdict(set)
    for st in machine.states:
        for tgt in st.transitions.values():
            preds[tgt].add(st.id)
    return preds


def simulate_consumable(machine, model, preds, start, terminal):
    """Brute-force check that `terminal` can be consumed starting in `start`
    for some viable stack: follow reductions (extending the unknown stack
    bottom through predecessor chains) until the token is shifted."""
    prods = model.productions
    seen = set()
    work = [(start,)]
    while work:
        suffix = work.pop()
        if suffix in seen:
            continue
        seen.add(suffix)
        st = machine.states[suffix[-1]]
        if terminal in st.transitions:
            return True
        for pi, ctx in st.reductions.items():
            if terminal not in ctx:
                continue
            k = len(prods[pi].rhs)
            lhs = prods[pi].lhs
            if k < len(suffix):
                base = suffix[:len(suffix) - k]
                g = machine.states[base[-1]].transitions.get(lhs)
                if g is not None:
                    work.append(base + (g,))
            else:
                bases = {suffix[0]}
                for _ in range(k - len(suffix) + 1):
                    step = set()
                    for b in bases:
                        step |= preds[b]
                    bases = step
                for b in bases:
                    g = machine.states[b].transitions.get(lhs)
                    if g is not None:
                        work.append((b, g))
    return False


def simulated_first1(machine, model, state_id, preds=None):
    preds = preds if preds is not None else predecessors(machine)
    terms = [s.id for s in model.symbols
             if s.kind != NONTERMINAL and s.id != model.error.id]
    return frozenset(t for t in terms
                     if simulate_consumable(machine, model, preds, state_id, t))


# ---------------------------------------------------------------------------
# String generation.

def exhaustive_count(n_templates, maxlen):
    return sum(n_templates ** k for k in range(1, maxlen + 1))


def all_strings(templates, maxlen):
    for n in range(1, maxlen + 1):
        yield from itertools.product(templates, repeat=n)


def random_strings(templates, count, maxlen, seed):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(1, maxlen)
        yield tuple(rng.choice(templates) for _ in range(n))
