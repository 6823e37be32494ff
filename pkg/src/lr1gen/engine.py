"""Table-driven LR(1) runtime.

The driver is a standard shift/reduce loop with four extras:

* oracles: before a freshly read token is acted on, the oracle rules are
  consulted; a rule fires only when the token matches its X side and its Y
  token is in FIRST(1) of the current state, and the rule's callback then
  decides whether Y replaces X.
* error recovery: on a syntax error the parser first performs every
  reduction whose right context contains ERROR, then scans down the stack
  for a state with an ERROR transition whose successor can accept the
  current token, discarding tokens (but never EOF) until one is found.
* dynamic precedence: shift/reduce decisions whose operator precedence
  depends on a generic token's runtime subtoken are settled here, reading
  the subtoken from the parse stack or the lookahead.
* tree building: reductions build named nodes, with node names chosen
  through maps when the production's operator is a generic token.

Reductions that need no lookahead (a state whose only action is a single
reduction) are performed before requesting the next token, so that reduce
hooks such as typedef recording run before the following token is scanned.
"""

from dataclasses import dataclass

from .grammar import PLAIN, GENERIC
from .tables import ParseTables


@dataclass
class Token:
    """Scanner output unit.  `subtoken` is only meaningful when the symbol
    is a generic terminal."""
    symbol: int
    text: str | None = None
    subtoken: int | None = None
    line: int = 1
    col: int = 1


class Tree:
    """Parse tree node: a name over an ordered run of children, or a leaf
    carrying token text."""

    __slots__ = ("name", "children", "text", "line", "col")

    def __init__(self, name, children=(), text=None, line=0, col=0):
        self.name = name
        self.children = tuple(children)
        self.text = text
        self.line = line
        self.col = col

    def __eq__(self, other):
        return (isinstance(other, Tree) and self.name == other.name
                and self.text == other.text and self.children == other.children)

    def __hash__(self):
        return hash((self.name, self.text, self.children))

    def sexpr(self) -> str:
        if not self.children and self.text is not None:
            return "'%s'" % self.text
        inner = " ".join(c.sexpr() for c in self.children)
        return "(%s%s)" % (self.name, " " + inner if inner else "")

    def __repr__(self):
        return self.sexpr()


@dataclass
class Outcome:
    status: str            # "accepted" | "recovered" | "aborted"
    recoveries: int
    tree: Tree | None
    events: list | None
    abort_reason: str | None = None

    @property
    def accepted(self):
        return self.status in ("accepted", "recovered")


class EngineFault(Exception):
    """Unrecoverable runtime fault (missing callback, map miss)."""


def format_trace_token(tables: ParseTables, tok: Token) -> str:
    sym = tables.sym(tok.symbol)
    out = "Token: %s" % sym.name
    if sym.kind == PLAIN and tok.text is not None:
        out += " = '%s'" % tok.text
    elif sym.kind == GENERIC and tok.subtoken is not None:
        out += " Subtoken: %s" % sym.subtokens[tok.subtoken]
    return out + " [%d:%d]" % (tok.line, tok.col)


def ask_oracle(tables: ParseTables, state: int, token: Token, callbacks=None,
               context=None, events=None, trace=None) -> Token:
    """Consult the oracle rules for a scanner token in the given state.

    Rules are scanned in declaration order; the first rule whose gate
    matches (token is X, and Y is in the state's FIRST(1) set) has its
    callback decide whether Y replaces X, and no further rules are
    consulted.  Rules with empty bodies and no registered callback answer
    TRUE.  Returns the (possibly replaced) token.
    """
    relevant = tables.oracles_by_symbol.get(token.symbol)
    if not relevant:
        return token
    name = tables.sym(token.symbol).name
    if events is not None:
        events.append(("oracle_asked", state, token))
    if trace is not None:
        trace.write("In ask_oracle with state %d and token %s\n" % (state, name))
    first1 = tables.first1[state]
    for rule in relevant:
        if rule.x.subtoken is not None and token.subtoken != rule.x.subtoken:
            continue
        if rule.y.symbol not in first1:
            continue
        callback = (callbacks or {}).get(rule.index)
        if callback is not None:
            verdict = bool(callback(rule.index, token.text, context))
        elif not rule.body.strip():
            verdict = True
        else:
            raise EngineFault("no callback registered for oracle %d" % rule.index)
        if not verdict:
            break
        y_sym = tables.sym(rule.y.symbol)
        subtoken = rule.y.subtoken
        if subtoken is None and y_sym.kind == GENERIC:
            x_sym = tables.sym(token.symbol)
            literal = (x_sym.subtokens[token.subtoken]
                       if token.subtoken is not None else x_sym.name)
            subtoken = y_sym.subtokens.index(literal)
        new = Token(rule.y.symbol, token.text, subtoken, token.line, token.col)
        if events is not None:
            events.append(("oracle_changed", token, new))
        if trace is not None:
            trace.write("Token: %s changed to Token: %s\n" % (name, y_sym.name))
        return new
    if events is not None:
        events.append(("oracle_unchanged", token))
    if trace is not None:
        trace.write("%s not changed\n" % name)
    return token


def dynamic_resolve(entry, stack, lookahead: Token, tables: ParseTables):
    """Settle a dynamic shift/reduce entry.  Returns (verdict, reason) with
    verdict one of "shift", "reduce", "error"."""
    _, _shift_state, _prod, rule_src, la_src = entry

    def precedence(src):
        if src[0] == "lvl":
            return (src[1], src[2]), None
        if src[0] == "off":
            _state, _tree, sym, sub = stack[-1 - src[1]]
        else:
            sym, sub = lookahead.symbol, lookahead.subtoken
        got = tables.prec_of(sym, sub)
        if got is None:
            return None, ("no precedence declared for %s"
                          % tables.display_token(sym, sub))
        return got, None

    rule, err = precedence(rule_src)
    if err is None and rule is not None:
        la, err = precedence(la_src)
    if err is not None:
        return "error", err
    if rule[0] > la[0]:
        return "reduce", None
    if rule[0] < la[0]:
        return "shift", None
    assoc = rule[1]
    if assoc == "left":
        return "reduce", None
    if assoc == "right":
        return "shift", None
    return "error", "nonassociative operator at this precedence level"


def build_node(prod, popped, tables: ParseTables) -> Tree | None:
    """Construct the tree for a reduction from the popped stack entries.

    Entries without trees (reserved and generic terminals, ERROR) contribute
    no child.  A map action picks the node name from the recorded %use/%ref
    element's runtime subtoken.  Without a tree action, a single child
    passes through unchanged and anything else becomes an unnamed run.
    """
    children = [e[1] for e in popped if e[1] is not None]
    action = prod.action
    if action is None:
        if len(children) == 1:
            return children[0]
        return Tree("_", children)
    if action[0] == "node":
        return Tree(action[1], children)
    pos = prod.use_pos
    entry = popped[pos]
    sym, sub = entry[2], entry[3]
    node = tables.maps.get(action[1], {}).get((sym, sub))
    if node is None:
        raise EngineFault("map '%s' has no entry for %s"
                          % (action[1], tables.display_token(sym, sub)))
    return Tree(node, children)


class Parser:
    """One runtime instance; owns its stack.  ParseTables are immutable and
    may be shared between concurrent Parser instances."""

    def __init__(self, tables: ParseTables, callbacks=None, context=None,
                 on_reduce=None, build_tree=True, collect_events=False,
                 trace=None, max_errors=None, keep_error_trees=False):
        self.tables = tables
        self.callbacks = callbacks or {}
        self.context = context
        self.on_reduce = on_reduce
        self.build_tree = build_tree
        self.events = [] if collect_events else None
        self.trace = trace
        self.max_errors = max_errors
        self.keep_error_trees = keep_error_trees
        self.stack = []
        self.errors = 0
        self.abort_reason = None

    def _emit(self, *event):
        if self.events is not None:
            self.events.append(event)

    def _read(self, source) -> Token:
        tok = next(source, None)
        if tok is None:
            tok = Token(self.tables.eof_id)
        if self.events is not None:
            self.events.append(("token", tok))
        if self.trace is not None and tok.symbol != self.tables.eof_id:
            self.trace.write(format_trace_token(self.tables, tok) + "\n")
        return tok

    def _shift(self, target, tok):
        tree = None
        if self.build_tree:
            sym = self.tables.symbols[tok.symbol]
            if sym.kind == PLAIN:
                tree = Tree(sym.name, (), tok.text, tok.line, tok.col)
        self.stack.append((target, tree, tok.symbol, tok.subtoken))
        if self.events is not None:
            self.events.append(("shift", target))

    def _reduce(self, pi):
        stack = self.stack
        prod = self.tables.productions[pi]
        k = len(prod.rhs)
        if k:
            popped = stack[-k:]
            del stack[-k:]
        else:
            popped = []
        tree = build_node(prod, popped, self.tables) if self.build_tree else None
        if self.on_reduce is not None:
            self.on_reduce(pi, popped)
        goto = self.tables.gotos[stack[-1][0]].get(prod.lhs)
        if goto is None:
            raise EngineFault("no goto from state %d on symbol %d"
                              % (stack[-1][0], prod.lhs))
        stack.append((goto, tree, None, None))
        if self.events is not None:
            self.events.append(("reduce", pi))

    def _eager_reduces(self):
        """Perform reductions that need no lookahead so that reduce hooks run
        before the next token is scanned.

        Only safe when the action row still covers the whole FIRST(1) set of
        the state: a nonassociativity resolution can blank individual cells,
        and reducing past such a cell would hide the error."""
        actions = self.tables.actions
        first1 = self.tables.first1
        while True:
            state = self.stack[-1][0]
            row = actions[state]
            if not row or len(row) != len(first1[state]):
                return
            it = iter(row.values())
            first = next(it)
            if first[0] != "r" or any(a != first for a in it):
                return
            self._reduce(first[1])

    def _expected(self, state):
        out = self.tables.first1[state] - {self.tables.error_id}
        return tuple(sorted(out))

    def _recover(self, t: Token, consulted: bool, source):
        """Returns the resume token, or None when the parse must abort."""
        tables = self.tables
        err = tables.error_id
        state = self.stack[-1][0]
        self._emit("error", state, t, self._expected(state))
        self.errors += 1
        if self.max_errors is not None and self.errors > self.max_errors:
            self.abort_reason = "error limit reached"
            self._emit("abort", self.abort_reason)
            return None

        # All reductions with ERROR in their right context happen first, by
        # normal parser actions.
        while True:
            act = tables.actions[self.stack[-1][0]].get(err)
            if act is None or act[0] != "r":
                break
            self._reduce(act[1])

        # Scan down the stack for a recoverable state; discard tokens until
        # one appears, but never discard EOF.
        while True:
            found = None
            for i in range(len(self.stack) - 1, -1, -1):
                act = tables.actions[self.stack[i][0]].get(err)
                if act is not None and act[0] == "s" \
                        and t.symbol in tables.first1[act[1]]:
                    found = (i, act[1])
                    break
            if found is not None:
                break
            if t.symbol == tables.eof_id:
                self.abort_reason = "cannot discard EOF"
                self._emit("abort", self.abort_reason)
                return None
            self._emit("discard", t)
            t = self._read(source)
            consulted = False

        # Take the read transition on ERROR and resume with t.
        i, succ = found
        dropped = [e[1] for e in self.stack[i + 1:] if e[1] is not None]
        del self.stack[i + 1:]
        err_tree = Tree("error", dropped) if (self.keep_error_trees and self.build_tree) else None
        self.stack.append((succ, err_tree, err, None))
        self._emit("recover", self.stack[i][0], t)
        if not consulted:
            t = ask_oracle(tables, succ, t, self.callbacks, self.context,
                           self.events, self.trace)
        return t

    def run(self, tokens) -> Outcome:
        tables = self.tables
        source = iter(tokens)
        recoveries = 0
        self.stack = [(tables.start_state, None, None, None)]

        # Production 0 opens with EOF; inject it so scanners stay unaware.
        lead = tables.actions[tables.start_state].get(tables.eof_id)
        if lead is None or lead[0] != "s":
            raise EngineFault("start state has no EOF transition; corrupt tables")
        self.stack.append((lead[1], None, tables.eof_id, None))

        la = None
        actions = tables.actions
        has_oracles = bool(tables.oracles_by_symbol)
        try:
            while True:
                if la is None:
                    self._eager_reduces()
                    la = self._read(source)
                    if has_oracles:
                        la = ask_oracle(tables, self.stack[-1][0], la, self.callbacks,
                                        self.context, self.events, self.trace)
                act = actions[self.stack[-1][0]].get(la.symbol)
                if act is None:
                    la = self._recover(la, True, source)
                    if la is None:
                        return Outcome("aborted", recoveries, None, self.events,
                                       self.abort_reason)
                    recoveries += 1
                    continue
                kind = act[0]
                if kind == "s":
                    self._shift(act[1], la)
                    la = None
                elif kind == "r":
                    self._reduce(act[1])
                elif kind == "acc":
                    self._emit("accept")
                    status = "accepted" if recoveries == 0 else "recovered"
                    return Outcome(status, recoveries, self.stack[-1][1], self.events)
                else:
                    verdict, reason = dynamic_resolve(act, self.stack, la, tables)
                    self._emit("dyn", verdict)
                    if verdict == "shift":
                        self._shift(act[1], la)
                        la = None
                    elif verdict == "reduce":
                        self._reduce(act[2])
                    else:
                        self._emit("dyn_error", reason)
                        la = self._recover(la, True, source)
                        if la is None:
                            return Outcome("aborted", recoveries, None, self.events,
                                           self.abort_reason)
                        recoveries += 1
        except EngineFault as fault:
            self.abort_reason = str(fault)
            self._emit("abort", self.abort_reason)
            return Outcome("aborted", recoveries, None, self.events, self.abort_reason)


def run(tables: ParseTables, tokens, callbacks=None, **options) -> Outcome:
    """Parse a token stream against loaded tables; see Parser for options."""
    return Parser(tables, callbacks, **options).run(tokens)
