"""Grammar input language: tokenizer, parser, model types, and validation.

The input language is rule based.  A file is a sequence of productions,
oracle rules, map rules, precedence rules, and generic-token declarations:

    <idlist> : <idlist> ',' id | <idlist> ERROR id | id ;
    %oracle id : TYPENAME %{ ... %} ;
    %map prefix : dualop.'&' => n_addr | dualop.'*' => n_indirect ;
    %left : dualop.'+' dualop.'-' ;
    %generic dualop : '+' '-' '*' '&' ;

Nonterminals are written ``<name>``, reserved terminals are quoted
literals, and bare identifiers are plain (possibly generic) terminals.
``ERROR`` and ``EOF`` are built-in terminals present in every grammar.
Line comments start with ``//``.
"""

from dataclasses import dataclass, field

from .diagnostics import GrammarError, error, warning

# Symbol kinds.
NONTERMINAL = "nonterminal"
PLAIN = "plain"
RESERVED = "reserved"
GENERIC = "generic"
ERROR_KIND = "error"
EOF_KIND = "eof"

TERMINAL_KINDS = (PLAIN, RESERVED, GENERIC, ERROR_KIND, EOF_KIND)

GOAL_NAME = "<GOAL>"

_KEYWORDS = {
    "%oracle", "%map", "%left", "%right", "%noassoc",
    "%prec", "%use", "%ref", "%generic",
}

_ASSOC = {"%left": "left", "%right": "right", "%noassoc": "nonassoc"}


@dataclass
class Symbol:
    id: int
    name: str
    kind: str
    subtokens: list = field(default_factory=list)  # literals, generic terminals only

    def display(self) -> str:
        """Name as shown in diagnostics and token listings."""
        return self.name

    def source_form(self) -> str:
        """Name as written in a grammar file."""
        if self.kind == RESERVED:
            return "'%s'" % self.name
        return self.name


@dataclass(frozen=True)
class TokenRef:
    """A token or subtoken reference, e.g. ``id`` or ``dualop.'*'``."""
    symbol: int
    subtoken: int | None = None


@dataclass
class Element:
    symbol: int
    selector: str | None = None  # None | "use" | "ref"


@dataclass
class Production:
    index: int
    lhs: int
    rhs: list  # of Element
    prec: TokenRef | None = None
    action: tuple | None = None  # ("node", name) | ("map", name)
    line: int = 0
    col: int = 0


@dataclass
class OracleRule:
    index: int
    x: TokenRef
    y: TokenRef
    body: str = ""
    line: int = 0
    col: int = 0


@dataclass
class MapRule:
    name: str
    entries: list  # of (TokenRef, node name)
    line: int = 0
    col: int = 0


@dataclass
class PrecLevel:
    assoc: str
    members: list  # of TokenRef
    line: int = 0
    col: int = 0


class Grammar:
    """The analyzed model of a grammar file.

    Immutable by convention once `parse_grammar` returns: all later
    passes (augment, table construction) build new data rather than
    mutating the model.
    """

    def __init__(self, path="<grammar>"):
        self.path = path
        self.symbols = []
        self.productions = []
        self.oracles = []
        self.maps = {}  # name -> MapRule, insertion ordered
        self.prec_levels = []
        self._nonterms = {}
        self._literals = {}
        self._idents = {}
        self.eof = self._new_symbol("EOF", EOF_KIND)
        self.error = self._new_symbol("ERROR", ERROR_KIND)

    # -- symbol registry -------------------------------------------------

    def _new_symbol(self, name, kind):
        sym = Symbol(len(self.symbols), name, kind)
        self.symbols.append(sym)
        if kind == NONTERMINAL:
            self._nonterms[name] = sym
        elif kind == RESERVED:
            self._literals[name] = sym
        elif kind in (PLAIN, GENERIC):
            self._idents[name] = sym
        return sym

    def nonterminal(self, name):
        return self._nonterms.get(name) or self._new_symbol(name, NONTERMINAL)

    def reserved(self, literal):
        return self._literals.get(literal) or self._new_symbol(literal, RESERVED)

    def ident(self, name):
        return self._idents.get(name) or self._new_symbol(name, PLAIN)

    def subtoken_ref(self, ident_name, literal) -> TokenRef:
        """Register (if needed) and return the subtoken ``ident.'literal'``."""
        sym = self.ident(ident_name)
        sym.kind = GENERIC
        if literal not in sym.subtokens:
            sym.subtokens.append(literal)
        return TokenRef(sym.id, sym.subtokens.index(literal))

    def sym(self, sid) -> Symbol:
        return self.symbols[sid]

    def find(self, name) -> Symbol | None:
        if name == "EOF":
            return self.eof
        if name == "ERROR":
            return self.error
        return self._nonterms.get(name) or self._idents.get(name) or self._literals.get(name)

    def is_terminal(self, sid) -> bool:
        return self.symbols[sid].kind != NONTERMINAL

    def terminals(self):
        return [s for s in self.symbols if s.kind != NONTERMINAL]

    def ref_display(self, ref: TokenRef) -> str:
        sym = self.symbols[ref.symbol]
        if ref.subtoken is None:
            return sym.display()
        return "%s.'%s'" % (sym.name, sym.subtokens[ref.subtoken])

    def ref_source(self, ref: TokenRef) -> str:
        sym = self.symbols[ref.symbol]
        if ref.subtoken is None:
            return sym.source_form()
        return "%s.'%s'" % (sym.name, sym.subtokens[ref.subtoken])

    # -- derived views ---------------------------------------------------

    @property
    def augmented(self) -> bool:
        return bool(self.productions) and self.symbols[self.productions[0].lhs].name == GOAL_NAME

    @property
    def user_goal(self) -> int | None:
        prods = self.productions
        if not prods:
            return None
        return prods[1].lhs if self.augmented else prods[0].lhs

    def productions_of(self, nt):
        return [p for p in self.productions if p.lhs == nt]

    def prec_of(self, ref: TokenRef):
        """(level, assoc) declared for this exact token or subtoken ref."""
        for level, pl in enumerate(self.prec_levels):
            if ref in pl.members:
                return level, pl.assoc
        return None


# ---------------------------------------------------------------------------
# Tokenizer for the grammar language.

class _Tok:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col


def _tokenize_grammar(text, path):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)

    def fail(msg, l=None, c=None):
        raise GrammarError(error(msg, path, l or line, c or col))

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == "<":
            j = text.find(">", i + 1)
            if j < 0 or "\n" in text[i:j]:
                fail("unterminated '<...>' nonterminal name")
            name = text[i + 1:j]
            if not name.strip():
                fail("empty nonterminal name")
            toks.append(_Tok("nonterm", "<%s>" % name, start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch == "'":
            j = text.find("'", i + 1)
            if j < 0 or "\n" in text[i:j]:
                fail("unterminated literal")
            if j == i + 1:
                fail("empty literal")
            toks.append(_Tok("literal", text[i + 1:j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if text.startswith("%{", i):
            j = text.find("%}", i + 2)
            if j < 0:
                fail("unterminated '%{' block")
            body = text[i + 2:j]
            toks.append(_Tok("body", body, start_line, start_col))
            line += body.count("\n")
            col = (j + 2 - (text.rfind("\n", i, j + 2) + 1)) + 1 if "\n" in text[i:j] else col + (j + 2 - i)
            i = j + 2
            continue
        if ch == "%":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word not in _KEYWORDS:
                fail("unknown keyword '%s'" % word)
            toks.append(_Tok("kw", word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if text.startswith("=>", i):
            toks.append(_Tok("op", "=>", start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in ":;|.":
            toks.append(_Tok("op", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        fail("unexpected character %r" % ch)
    toks.append(_Tok("end", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser.

class _GrammarParser:
    def __init__(self, text, path):
        self.path = path
        self.toks = _tokenize_grammar(text, path)
        self.pos = 0
        self.model = Grammar(path)

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        if t.kind != "end":
            self.pos += 1
        return t

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise GrammarError(error(msg, self.path, tok.line, tok.col))

    def expect(self, kind, value=None):
        t = self.peek()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            got = t.value if t.kind != "end" else "end of file"
            self.fail("expected '%s', found '%s'" % (want, got))
        return self.next()

    def at_op(self, value):
        t = self.peek()
        return t.kind == "op" and t.value == value

    def at_kw(self, value):
        t = self.peek()
        return t.kind == "kw" and t.value == value

    # -- rules ------------------------------------------------------------

    def parse(self) -> Grammar:
        while True:
            t = self.peek()
            if t.kind == "end":
                break
            if t.kind == "nonterm":
                self.rule_production()
            elif t.kind == "kw" and t.value == "%oracle":
                self.rule_oracle()
            elif t.kind == "kw" and t.value == "%map":
                self.rule_map()
            elif t.kind == "kw" and t.value in _ASSOC:
                self.rule_prec()
            elif t.kind == "kw" and t.value == "%generic":
                self.rule_generic()
            else:
                self.fail("expected a rule, found '%s'" % t.value)
        self.check_selectors()
        return self.model

    def rule_production(self):
        m = self.model
        head = self.expect("nonterm")
        lhs = m.nonterminal(head.value)
        self.expect("op", ":")
        while True:
            elems, prec, action, line, col = self.parse_alt(head)
            m.productions.append(Production(len(m.productions), lhs.id, elems,
                                            prec, action, line, col))
            if self.at_op("|"):
                self.next()
                continue
            break
        self.expect("op", ";")

    def parse_alt(self, head):
        m = self.model
        elems = []
        prec = None
        action = None
        line, col = head.line, head.col
        while True:
            t = self.peek()
            if t.kind == "nonterm":
                self.next()
                elems.append(Element(m.nonterminal(t.value).id))
            elif t.kind == "literal":
                self.next()
                elems.append(Element(m.reserved(t.value).id))
            elif t.kind == "ident":
                self.next()
                if self.at_op("."):
                    self.fail("subtokens cannot appear in productions", t)
                if t.value == "ERROR":
                    elems.append(Element(m.error.id))
                elif t.value == "EOF":
                    elems.append(Element(m.eof.id))
                else:
                    elems.append(Element(m.ident(t.value).id))
            elif t.kind == "kw" and t.value in ("%use", "%ref"):
                self.next()
                name = self.expect("ident")
                if name.value in ("ERROR", "EOF"):
                    self.fail("'%s' cannot follow %s" % (name.value, t.value), name)
                elems.append(Element(m.ident(name.value).id, t.value[1:]))
            else:
                break
        if self.at_kw("%prec"):
            self.next()
            prec = self.parse_tokref()
        if self.at_op("=>"):
            self.next()
            if self.at_kw("%map"):
                self.next()
                action = ("map", self.expect("ident").value)
            else:
                action = ("node", self.expect("ident").value)
        return elems, prec, action, line, col

    def parse_tokref(self) -> TokenRef:
        m = self.model
        t = self.peek()
        if t.kind == "literal":
            self.next()
            return TokenRef(m.reserved(t.value).id)
        if t.kind == "ident":
            if t.value in ("ERROR", "EOF"):
                self.fail("'%s' cannot be used as a token reference here" % t.value)
            self.next()
            if self.at_op("."):
                self.next()
                lit = self.expect("literal")
                return self.model.subtoken_ref(t.value, lit.value)
            return TokenRef(m.ident(t.value).id)
        self.fail("expected a token or subtoken reference")

    def rule_oracle(self):
        m = self.model
        kw = self.expect("kw", "%oracle")
        x = self.parse_tokref()
        self.expect("op", ":")
        y = self.parse_tokref()
        body = ""
        if self.peek().kind == "body":
            body = self.next().value
        self.expect("op", ";")
        m.oracles.append(OracleRule(len(m.oracles), x, y, body, kw.line, kw.col))

    def rule_map(self):
        m = self.model
        kw = self.expect("kw", "%map")
        name = self.expect("ident").value
        if name in m.maps:
            self.fail("duplicate map name '%s'" % name, kw)
        self.expect("op", ":")
        entries = []
        while True:
            ident = self.expect("ident")
            self.expect("op", ".")
            lit = self.expect("literal")
            ref = m.subtoken_ref(ident.value, lit.value)
            self.expect("op", "=>")
            node = self.expect("ident").value
            if any(r == ref for r, _ in entries):
                self.fail("subtoken %s listed twice in map '%s'"
                          % (m.ref_display(ref), name), ident)
            entries.append((ref, node))
            if self.at_op("|"):
                self.next()
                continue
            break
        self.expect("op", ";")
        m.maps[name] = MapRule(name, entries, kw.line, kw.col)

    def rule_prec(self):
        m = self.model
        kw = self.next()
        self.expect("op", ":")
        members = []
        while self.peek().kind in ("ident", "literal"):
            members.append(self.parse_tokref())
        if not members:
            self.fail("precedence rule with no members", kw)
        self.expect("op", ";")
        m.prec_levels.append(PrecLevel(_ASSOC[kw.value], members, kw.line, kw.col))

    def rule_generic(self):
        m = self.model
        self.expect("kw", "%generic")
        name = self.expect("ident")
        if name.value in ("ERROR", "EOF"):
            self.fail("'%s' cannot be declared generic" % name.value, name)
        self.expect("op", ":")
        saw = False
        while self.peek().kind == "literal":
            m.subtoken_ref(name.value, self.next().value)
            saw = True
        if not saw:
            self.fail("generic declaration needs at least one literal")
        self.expect("op", ";")

    def check_selectors(self):
        """%use/%ref must name generic tokens; at most one selector per production."""
        m = self.model
        for p in m.productions:
            selected = [e for e in p.rhs if e.selector]
            if len(selected) > 1:
                raise GrammarError(error(
                    "more than one %use/%ref element in a production",
                    self.path, p.line, p.col))
            for e in selected:
                sym = m.sym(e.symbol)
                if sym.kind != GENERIC:
                    raise GrammarError(error(
                        "%%%s applied to '%s', which is not a generic token"
                        % (e.selector, sym.name), self.path, p.line, p.col))


def parse_grammar(text, path="<grammar>") -> Grammar:
    """Parse grammar source text into a model; raises GrammarError on bad input."""
    return _GrammarParser(text, path).parse()


# ---------------------------------------------------------------------------
# Goal augmentation.

def augment(model: Grammar) -> Grammar:
    """Prepend the built-in goal production ``<GOAL> : EOF <goal> EOF``.

    Idempotent; requires at least one user production.
    """
    if model.augmented:
        return model
    if not model.productions:
        raise GrammarError(error("grammar has no productions", model.path))
    if model.find(GOAL_NAME) is not None:
        raise GrammarError(error("the nonterminal %s is reserved" % GOAL_NAME, model.path))

    out = Grammar.__new__(Grammar)
    out.__dict__.update(model.__dict__)
    out.symbols = list(model.symbols)
    out._nonterms = dict(model._nonterms)
    out._idents = dict(model._idents)
    out._literals = dict(model._literals)
    goal = out._new_symbol(GOAL_NAME, NONTERMINAL)
    user_goal = model.productions[0].lhs
    rhs = [Element(out.eof.id), Element(user_goal), Element(out.eof.id)]
    prods = [Production(0, goal.id, rhs)]
    for p in model.productions:
        prods.append(Production(len(prods), p.lhs, p.rhs, p.prec, p.action, p.line, p.col))
    out.productions = prods
    return out


# ---------------------------------------------------------------------------
# Whole-model validation.

def _spelling_compatible(model: Grammar, x: TokenRef, y: TokenRef) -> bool:
    """The scanner's input text is immutable, so an oracle may only swap
    symbols whose concrete spellings agree."""
    xs, ys = model.sym(x.symbol), model.sym(y.symbol)
    x_lit = xs.subtokens[x.subtoken] if x.subtoken is not None else None
    if y.subtoken is not None:
        y_lit = ys.subtokens[y.subtoken]
        if x_lit is not None:
            return x_lit == y_lit
        return xs.kind == RESERVED and xs.name == y_lit
    if ys.kind == PLAIN:
        # A plain terminal accepts any spelling.
        return x.subtoken is None and xs.kind in (PLAIN, GENERIC)
    if ys.kind == RESERVED:
        if x_lit is not None:
            return x_lit == ys.name
        return False
    if ys.kind == GENERIC:
        if x_lit is not None:
            return x_lit in ys.subtokens
        return xs.kind == RESERVED and xs.name in ys.subtokens
    return False


def validate(model: Grammar) -> list:
    """Collect all model-level violations as diagnostics (empty when clean)."""
    diags = []
    path = model.path

    def err(msg, line=0, col=0):
        diags.append(error(msg, path, line, col))

    if not model.productions or (model.augmented and len(model.productions) == 1):
        err("grammar has no productions")
        return diags

    defined = {p.lhs for p in model.productions}
    for p in model.productions:
        if p.lhs == model.error.id or model.sym(p.lhs).kind != NONTERMINAL:
            err("'%s' cannot be the left hand side of a production"
                % model.sym(p.lhs).display(), p.line, p.col)
        for e in p.rhs:
            sym = model.sym(e.symbol)
            if sym.kind == NONTERMINAL and e.symbol not in defined:
                err("nonterminal %s has no productions" % sym.display(), p.line, p.col)

    def spelling(ref):
        sym = model.sym(ref.symbol)
        if ref.subtoken is not None:
            return "'%s'" % sym.subtokens[ref.subtoken]
        if sym.kind == RESERVED:
            return "'%s'" % sym.name
        return sym.name

    for rule in model.oracles:
        for ref in (rule.x, rule.y):
            sym = model.sym(ref.symbol)
            if ref.subtoken is not None and ref.subtoken >= len(sym.subtokens):
                err("oracle %d references unknown subtoken of '%s'"
                    % (rule.index, sym.name), rule.line, rule.col)
                break
        else:
            if not _spelling_compatible(model, rule.x, rule.y):
                err("oracle %d: %s cannot be changed to %s"
                    % (rule.index, spelling(rule.x), spelling(rule.y)),
                    rule.line, rule.col)

    for mp in model.maps.values():
        for ref, _node in mp.entries:
            sym = model.sym(ref.symbol)
            if sym.kind != GENERIC or ref.subtoken is None \
                    or ref.subtoken >= len(sym.subtokens):
                err("map '%s' entry does not reference a declared subtoken" % mp.name,
                    mp.line, mp.col)

    seen_prec = {}
    for level, pl in enumerate(model.prec_levels):
        for ref in pl.members:
            if ref in seen_prec:
                err("'%s' appears in more than one precedence level"
                    % model.ref_display(ref), pl.line, pl.col)
            seen_prec[ref] = level

    for p in model.productions:
        if p.prec is not None and model.prec_of(p.prec) is None:
            err("%%prec target '%s' has no declared precedence level"
                % model.ref_display(p.prec), p.line, p.col)
        if p.action and p.action[0] == "map":
            name = p.action[1]
            mp = model.maps.get(name)
            if mp is None:
                err("tree action names undeclared map '%s'" % name, p.line, p.col)
                continue
            selected = [e for e in p.rhs if e.selector]
            if not selected:
                err("tree action '%%map %s' requires a %%use or %%ref element" % name,
                    p.line, p.col)
                continue
            sym = model.sym(selected[0].symbol)
            covered = {r.subtoken for r, _ in mp.entries if r.symbol == sym.id}
            missing = [lit for num, lit in enumerate(sym.subtokens) if num not in covered]
            if missing:
                diags.append(warning(
                    "map '%s' does not cover subtoken(s) %s of '%s'"
                    % (name, " ".join("'%s'" % m for m in missing), sym.name),
                    path, p.line, p.col))
    return diags


# ---------------------------------------------------------------------------
# Pretty printer (round-trip support and reports).

def format_grammar(model: Grammar) -> str:
    """Render a model back to grammar-language source."""
    out = []
    for sym in model.symbols:
        if sym.kind == GENERIC:
            out.append("%%generic %s : %s ;"
                       % (sym.name, " ".join("'%s'" % s for s in sym.subtokens)))
    for pl in model.prec_levels:
        kw = {"left": "%left", "right": "%right", "nonassoc": "%noassoc"}[pl.assoc]
        out.append("%s : %s ;" % (kw, " ".join(model.ref_source(r) for r in pl.members)))
    for mp in model.maps.values():
        body = " | ".join("%s => %s" % (model.ref_source(r), node) for r, node in mp.entries)
        out.append("%%map %s : %s ;" % (mp.name, body))
    for rule in model.oracles:
        text = "%%oracle %s : %s" % (model.ref_source(rule.x), model.ref_source(rule.y))
        if rule.body:
            text += " %{" + rule.body + "%}"
        out.append(text + " ;")
    for p in model.productions:
        parts = [model.sym(p.lhs).name, ":"]
        for e in p.rhs:
            if e.selector:
                parts.append("%" + e.selector)
            parts.append(model.sym(e.symbol).source_form())
        if p.prec is not None:
            parts.append("%prec")
            parts.append(model.ref_source(p.prec))
        if p.action:
            parts.append("=>")
            if p.action[0] == "map":
                parts.append("%map")
            parts.append(p.action[1])
        parts.append(";")
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"
