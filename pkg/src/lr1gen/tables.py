"""Self-contained parse tables: construction from a machine, a versioned
JSON-compatible text format, and skeleton injection.

The table file carries everything the runtime needs (symbol registry,
production metadata, action/goto tables, per-state FIRST(1), oracle gate
list, node maps, precedence levels), so a parser can run without the
grammar model.  The encoding is deterministic: sorted keys, dense ids.
"""

import json
import re
from dataclasses import dataclass, field

from .diagnostics import TableError
from .grammar import (Grammar, Symbol, TokenRef, OracleRule,
                      NONTERMINAL, PLAIN, RESERVED, GENERIC, ERROR_KIND, EOF_KIND)
from .analysis import Machine

FORMAT_VERSION = 1

PLACEHOLDERS = ("@TABLES@", "@TOKEN_DEFS@", "@ORACLE_BODIES@", "@VERSION@")

_KINDS = (NONTERMINAL, PLAIN, RESERVED, GENERIC, ERROR_KIND, EOF_KIND)


@dataclass
class ProdMeta:
    lhs: int
    rhs: tuple            # symbol ids
    selectors: tuple      # None | "use" | "ref" per rhs element
    action: tuple | None  # ("node", name) | ("map", name)
    prec: tuple | None    # (symbol, subtoken or None)

    @property
    def use_pos(self):
        for i, sel in enumerate(self.selectors):
            if sel:
                return i
        return None


@dataclass
class ParseTables:
    version: int
    symbols: list          # of Symbol
    productions: list      # of ProdMeta
    actions: list          # per state: {terminal id -> action tuple}
    gotos: list            # per state: {nonterminal id -> state id}
    first1: list           # per state: frozenset of terminal ids
    oracles: list          # of OracleRule
    maps: dict             # name -> {(symbol, subtoken) -> node name}
    precedence: list       # of (assoc, [(symbol, subtoken or None), ...])
    start_state: int = 0
    eof_id: int = field(init=False, default=0)
    error_id: int = field(init=False, default=0)

    def __post_init__(self):
        for s in self.symbols:
            if s.kind == EOF_KIND:
                self.eof_id = s.id
            elif s.kind == ERROR_KIND:
                self.error_id = s.id
        self._prec_of = {}
        for level, (assoc, members) in enumerate(self.precedence):
            for ref in members:
                self._prec_of.setdefault(ref, (level, assoc))
        self.oracles_by_symbol = {}
        for o in self.oracles:
            self.oracles_by_symbol.setdefault(o.x.symbol, []).append(o)

    def prec_of(self, symbol, subtoken=None):
        return self._prec_of.get((symbol, subtoken))

    def sym(self, sid) -> Symbol:
        return self.symbols[sid]

    def sym_id(self, name) -> int:
        for s in self.symbols:
            if s.name == name:
                return s.id
        raise KeyError(name)

    def terminals(self):
        return [s for s in self.symbols if s.kind != NONTERMINAL]

    def display_token(self, symbol, subtoken=None, text=None):
        """Compact form used in diagnostics: ``id='f'``, ``;``, ``dualop.'*'``."""
        sym = self.symbols[symbol]
        if sym.kind == GENERIC and subtoken is not None:
            return "%s.'%s'" % (sym.name, sym.subtokens[subtoken])
        if sym.kind == PLAIN and text is not None:
            return "%s='%s'" % (sym.name, text)
        return sym.name


def make_tables(machine: Machine, model: Grammar) -> ParseTables:
    """Package a resolved machine into self-contained runtime tables."""
    if machine.actions is None:
        raise TableError("machine has no action table; run resolve_conflicts first")
    symbols = [Symbol(s.id, s.name, s.kind, list(s.subtokens)) for s in model.symbols]
    prods = []
    for p in model.productions:
        prec = (p.prec.symbol, p.prec.subtoken) if p.prec is not None else None
        prods.append(ProdMeta(p.lhs,
                              tuple(e.symbol for e in p.rhs),
                              tuple(e.selector for e in p.rhs),
                              p.action, prec))
    maps = {}
    for mp in model.maps.values():
        maps[mp.name] = {(r.symbol, r.subtoken): node for r, node in mp.entries}
    precedence = [(pl.assoc, [(r.symbol, r.subtoken) for r in pl.members])
                  for pl in model.prec_levels]
    oracles = [OracleRule(o.index, o.x, o.y, o.body) for o in model.oracles]
    return ParseTables(FORMAT_VERSION, symbols, prods,
                       [dict(a) for a in machine.actions],
                       [dict(g) for g in machine.gotos],
                       [frozenset(f) for f in machine.first1],
                       oracles, maps, precedence, machine.start_state)


# ---------------------------------------------------------------------------
# Serialization.

def _ref_doc(ref):
    if isinstance(ref, TokenRef):
        return [ref.symbol, ref.subtoken]
    return [ref[0], ref[1]]


def _action_doc(a):
    if a[0] == "dyn":
        return ["dyn", a[1], a[2], list(a[3]), list(a[4])]
    return list(a)


def _to_doc(tables: ParseTables) -> dict:
    return {
        "version": tables.version,
        "symbols": [{"name": s.name, "kind": s.kind, "subtokens": list(s.subtokens)}
                    for s in tables.symbols],
        "productions": [{
            "lhs": p.lhs,
            "rhs": list(p.rhs),
            "selectors": list(p.selectors),
            "action": list(p.action) if p.action else None,
            "prec": list(p.prec) if p.prec else None,
        } for p in tables.productions],
        "actions": [{str(t): _action_doc(a) for t, a in sorted(row.items())}
                    for row in tables.actions],
        "gotos": [{str(nt): tgt for nt, tgt in sorted(row.items())}
                  for row in tables.gotos],
        "first1": [sorted(f) for f in tables.first1],
        "oracles": [{"x": _ref_doc(o.x), "y": _ref_doc(o.y), "body": o.body}
                    for o in tables.oracles],
        "maps": {name: [[sym, sub, node] for (sym, sub), node in entries.items()]
                 for name, entries in tables.maps.items()},
        "precedence": [[assoc, [list(m) for m in members]]
                       for assoc, members in tables.precedence],
        "start_state": tables.start_state,
    }


def serialize(tables: ParseTables) -> str:
    """Canonical text encoding; byte-deterministic for equal tables."""
    return json.dumps(_to_doc(tables), sort_keys=True, indent=1) + "\n"


def _action_tuple(doc, where, n_states, n_prods, prods):
    def fail(msg):
        raise TableError("%s: %s" % (where, msg))
    if not isinstance(doc, list) or not doc:
        fail("malformed action")
    op = doc[0]
    if op == "s":
        if doc[1] not in range(n_states):
            fail("shift to nonexistent state %r" % (doc[1],))
        return ("s", doc[1])
    if op == "r":
        if doc[1] not in range(n_prods):
            fail("reduce by nonexistent production %r" % (doc[1],))
        return ("r", doc[1])
    if op == "acc":
        return ("acc",)
    if op == "dyn":
        _, shift_state, prod, rp, lp = doc
        if shift_state not in range(n_states):
            fail("dynamic entry shifts to nonexistent state %r" % (shift_state,))
        if prod not in range(n_prods):
            fail("dynamic entry reduces by nonexistent production %r" % (prod,))
        rp, lp = tuple(rp), tuple(lp)
        for src in (rp, lp):
            if src[0] not in ("lvl", "off", "la"):
                fail("unknown precedence source %r" % (src,))
        if rp[0] == "off" and rp[1] >= len(prods[prod]["rhs"]):
            fail("stack offset %d not below rhs length %d"
                 % (rp[1], len(prods[prod]["rhs"])))
        return ("dyn", shift_state, prod, rp, lp)
    fail("unknown action %r" % (op,))


def deserialize(text: str) -> ParseTables:
    """Load and revalidate a table file; raises TableError naming the fault."""
    try:
        doc = json.loads(text)
    except (ValueError, TypeError) as e:
        raise TableError("not a valid table file: %s" % e)
    if not isinstance(doc, dict):
        raise TableError("not a valid table file: top level is not an object")
    if doc.get("version") != FORMAT_VERSION:
        raise TableError("table format version %r, expected %d"
                         % (doc.get("version"), FORMAT_VERSION))
    required = ("symbols", "productions", "actions", "gotos", "first1",
                "oracles", "maps", "precedence", "start_state")
    for key in required:
        if key not in doc:
            raise TableError("table file is missing '%s'" % key)

    symbols = []
    for i, s in enumerate(doc["symbols"]):
        if s.get("kind") not in _KINDS:
            raise TableError("symbols[%d]: unknown kind %r" % (i, s.get("kind")))
        symbols.append(Symbol(i, s["name"], s["kind"], list(s.get("subtokens", []))))
    n_syms = len(symbols)

    def check_sym(sid, where, terminal=None):
        if not isinstance(sid, int) or sid not in range(n_syms):
            raise TableError("%s: nonexistent symbol %r" % (where, sid))
        if terminal is True and symbols[sid].kind == NONTERMINAL:
            raise TableError("%s: symbol %d is not a terminal" % (where, sid))
        if terminal is False and symbols[sid].kind != NONTERMINAL:
            raise TableError("%s: symbol %d is not a nonterminal" % (where, sid))

    def check_ref(ref, where):
        sym, sub = ref
        check_sym(sym, where)
        if sub is not None and sub not in range(len(symbols[sym].subtokens)):
            raise TableError("%s: symbol %d has no subtoken %r" % (where, sym, sub))
        return (sym, sub)

    prods = []
    for i, p in enumerate(doc["productions"]):
        check_sym(p["lhs"], "productions[%d].lhs" % i, terminal=False)
        for sid in p["rhs"]:
            check_sym(sid, "productions[%d].rhs" % i)
        selectors = tuple(p.get("selectors") or [None] * len(p["rhs"]))
        if len(selectors) != len(p["rhs"]):
            raise TableError("productions[%d]: selector list length mismatch" % i)
        action = tuple(p["action"]) if p.get("action") else None
        prec = tuple(check_ref(p["prec"], "productions[%d].prec" % i)) if p.get("prec") else None
        prods.append(ProdMeta(p["lhs"], tuple(p["rhs"]), selectors, action, prec))

    n_states = len(doc["actions"])
    if len(doc["gotos"]) != n_states or len(doc["first1"]) != n_states:
        raise TableError("actions, gotos, and first1 must cover the same states")
    actions = []
    for si, row in enumerate(doc["actions"]):
        out = {}
        for t, a in row.items():
            tid = int(t)
            check_sym(tid, "actions[%d]" % si, terminal=True)
            out[tid] = _action_tuple(a, "actions[%d][%s]" % (si, t),
                                     n_states, len(prods), doc["productions"])
        actions.append(out)
    gotos = []
    for si, row in enumerate(doc["gotos"]):
        out = {}
        for nt, tgt in row.items():
            check_sym(int(nt), "gotos[%d]" % si, terminal=False)
            if tgt not in range(n_states):
                raise TableError("gotos[%d][%s]: nonexistent state %r" % (si, nt, tgt))
            out[int(nt)] = tgt
        gotos.append(out)
    first1 = []
    for si, row in enumerate(doc["first1"]):
        for t in row:
            check_sym(t, "first1[%d]" % si, terminal=True)
        first1.append(frozenset(row))

    oracles = []
    for i, o in enumerate(doc["oracles"]):
        x = TokenRef(*check_ref(o["x"], "oracles[%d].x" % i))
        y = TokenRef(*check_ref(o["y"], "oracles[%d].y" % i))
        oracles.append(OracleRule(i, x, y, o.get("body", "")))

    maps = {}
    for name, entries in doc["maps"].items():
        table = {}
        for sym, sub, node in entries:
            check_ref((sym, sub), "maps[%s]" % name)
            if not isinstance(node, str):
                raise TableError("maps[%s]: node name %r is not a string" % (name, node))
            table[(sym, sub)] = node
        maps[name] = table

    precedence = []
    for li, (assoc, members) in enumerate(doc["precedence"]):
        if assoc not in ("left", "right", "nonassoc"):
            raise TableError("precedence[%d]: unknown associativity %r" % (li, assoc))
        precedence.append((assoc, [check_ref(m, "precedence[%d]" % li) for m in members]))

    start = doc["start_state"]
    if start not in range(max(n_states, 1)):
        raise TableError("start_state %r is not a state" % (start,))

    return ParseTables(FORMAT_VERSION, symbols, prods, actions, gotos,
                       first1, oracles, maps, precedence, start)


def load_tables(path) -> ParseTables:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(fh.read())


def save_tables(tables: ParseTables, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(tables))


# ---------------------------------------------------------------------------
# Skeleton injection.

_PLACEHOLDER_RE = re.compile(r"@[A-Z_]+@")


def inject(skeleton: str, tables: ParseTables) -> str:
    """Substitute analyzer output into a skeleton parser source.

    Pure text substitution; everything outside the placeholders passes
    through byte-exact.  Partial skeletons (missing placeholders) are fine;
    unknown or repeated placeholders are errors.
    """
    found = _PLACEHOLDER_RE.findall(skeleton)
    unknown = sorted(set(found) - set(PLACEHOLDERS))
    if unknown:
        raise TableError("unknown placeholder(s) in skeleton: %s" % " ".join(unknown))
    for ph in PLACEHOLDERS:
        if found.count(ph) > 1:
            raise TableError("placeholder %s appears more than once" % ph)

    out = skeleton
    if "@TABLES@" in out:
        constant = json.dumps(_to_doc(tables), sort_keys=True, separators=(",", ":"))
        out = out.replace("@TABLES@", constant)
    if "@TOKEN_DEFS@" in out:
        defs = "\n".join("%s = %d" % (s.source_form(), s.id) for s in tables.terminals())
        out = out.replace("@TOKEN_DEFS@", defs)
    if "@ORACLE_BODIES@" in out:
        parts = []
        for o in tables.oracles:
            parts.append("/* oracle %d begin */\n%s\n/* oracle %d end */"
                         % (o.index, o.body, o.index))
        out = out.replace("@ORACLE_BODIES@", "\n".join(parts))
    if "@VERSION@" in out:
        out = out.replace("@VERSION@", str(tables.version))
    return out
