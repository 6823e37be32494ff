"""LR(1) machine construction: canonical, and Pager-merged for production use.

The canonical build keeps every distinct item set and serves as the
correctness oracle.  The production build merges same-core states on the
fly whenever Pager's weak-compatibility condition holds, with lookahead
growth propagated to successors until a fixpoint, and a conservative
fallback that regenerates a state unmerged if a merge would introduce a
conflict that neither constituent had.

Shift/reduce conflicts are resolved by operator precedence.  When either
side's precedence depends on a generic token's runtime subtoken, the
decision is deferred to the parser as a dynamic shift/reduce entry that
records where the deciding subtoken lives (parse stack offset or
lookahead).
"""

from collections import deque
from dataclasses import dataclass, field

from .diagnostics import GrammarError, error, warning
from .grammar import Grammar, TokenRef, NONTERMINAL, GENERIC

ACCEPT = ("acc",)


@dataclass
class State:
    id: int
    kernel: dict                 # (prod index, dot) -> frozenset of lookahead ids
    transitions: dict = field(default_factory=dict)   # symbol id -> state id
    reductions: dict = field(default_factory=dict)    # prod index -> frozenset (right context)

    def core(self):
        return frozenset(self.kernel)


@dataclass
class Conflict:
    state: int
    terminal: int
    candidates: list   # action tuples

    def kind(self):
        reduces = sum(1 for c in self.candidates if c[0] == "r")
        return "reduce/reduce" if reduces > 1 else "shift/reduce"


class Machine:
    """A finished characteristic machine plus (after resolve_conflicts)
    the action/goto tables."""

    def __init__(self, mode, states, model):
        self.mode = mode
        self.states = states
        self.model = model
        self.eof_id = model.eof.id
        self.error_id = model.error.id
        self.first1 = [state_first1(s, model) for s in states]
        self.actions = None      # list of {terminal -> action tuple}
        self.gotos = None        # list of {nonterminal -> state id}
        self.conflicts = []      # residual Conflicts after precedence resolution
        self.warnings = []
        self.merges = 0
        self.regenerated = 0

    @property
    def start_state(self):
        return 0


# ---------------------------------------------------------------------------
# FIRST sets.

def first_sets(model: Grammar):
    """Classical FIRST computation. Returns (first, nullable): a map from
    nonterminal id to a terminal-id set, and the set of nullable nonterminals."""
    first = {s.id: set() for s in model.symbols if s.kind == NONTERMINAL}
    nullable = set()
    changed = True
    while changed:
        changed = False
        for p in model.productions:
            target = first[p.lhs]
            before = len(target)
            all_nullable = True
            for e in p.rhs:
                if model.is_terminal(e.symbol):
                    target.add(e.symbol)
                    all_nullable = False
                    break
                target |= first[e.symbol]
                if e.symbol not in nullable:
                    all_nullable = False
                    break
            if all_nullable and p.lhs not in nullable:
                nullable.add(p.lhs)
                changed = True
            if len(target) != before:
                changed = True
    return {nt: frozenset(ts) for nt, ts in first.items()}, nullable


def _first_of_seq(model, first, nullable, seq, tail):
    """FIRST of a symbol sequence followed by the lookahead set `tail`."""
    out = set()
    for e in seq:
        if model.is_terminal(e.symbol):
            out.add(e.symbol)
            return out
        out |= first[e.symbol]
        if e.symbol not in nullable:
            return out
    out |= tail
    return out


# ---------------------------------------------------------------------------
# Items, closure, goto.

def _prods_by_lhs(model):
    cache = getattr(model, "_prods_by_lhs", None)
    if cache is None:
        cache = {}
        for p in model.productions:
            cache.setdefault(p.lhs, []).append(p)
        model._prods_by_lhs = cache
    return cache


def closure(items, model: Grammar, first):
    """Canonical LR(1) closure of an item dict {(prod, dot): lookahead set}.

    For an item A -> alpha . B beta with lookahead L, every production of B
    is added with lookahead FIRST(beta L).
    """
    first_map, nullable = first
    by_lhs = _prods_by_lhs(model)
    prods = model.productions
    out = {k: set(v) for k, v in items.items()}
    work = deque(out)
    while work:
        pi, dot = work.popleft()
        rhs = prods[pi].rhs
        if dot >= len(rhs):
            continue
        nxt = rhs[dot]
        if model.is_terminal(nxt.symbol):
            continue
        la = _first_of_seq(model, first_map, nullable, rhs[dot + 1:], out[(pi, dot)])
        for q in by_lhs.get(nxt.symbol, ()):
            key = (q.index, 0)
            have = out.get(key)
            if have is None:
                out[key] = set(la)
                work.append(key)
            elif not la <= have:
                have |= la
                work.append(key)
    return out


def goto_step(items, symbol, model: Grammar):
    """Kernel of the successor reached by reading `symbol`: dots advanced,
    lookaheads carried unchanged."""
    prods = model.productions
    out = {}
    for (pi, dot), la in items.items():
        rhs = prods[pi].rhs
        if dot < len(rhs) and rhs[dot].symbol == symbol:
            out[(pi, dot + 1)] = set(la)
    return out


def weak_compatible(a_kernel, b_kernel) -> bool:
    """Pager's weak compatibility for two same-core lookahead assignments."""
    keys = list(a_kernel)
    for i in range(len(keys) - 1):
        u_i = a_kernel[keys[i]]
        v_i = b_kernel[keys[i]]
        for j in range(i + 1, len(keys)):
            u_j = a_kernel[keys[j]]
            v_j = b_kernel[keys[j]]
            if (u_i & v_j) or (u_j & v_i):
                if not (u_i & u_j) and not (v_i & v_j):
                    return False
    return True


# ---------------------------------------------------------------------------
# Machine construction.

def _local_conflicts(model, first, kernel):
    """Conflict fingerprints visible within one state: (terminal, a, b) where
    a and b are competing actions (production indexes or 'shift')."""
    items = closure({k: set(v) for k, v in kernel.items()}, model, first)
    prods = model.productions
    shift_terms = set()
    reduce_las = {}
    for (pi, dot), la in items.items():
        rhs = prods[pi].rhs
        if dot < len(rhs):
            if model.is_terminal(rhs[dot].symbol):
                shift_terms.add(rhs[dot].symbol)
        elif pi != 0:
            reduce_las[pi] = la
    out = set()
    reduce_list = sorted(reduce_las)
    for i, p in enumerate(reduce_list):
        for t in reduce_las[p] & shift_terms:
            out.add((t, "shift", p))
        for q in reduce_list[i + 1:]:
            for t in reduce_las[p] & reduce_las[q]:
                out.add((t, p, q))
    return out


def _build(model: Grammar, mode, compatible=None, state_cap=20000, safety=True):
    """Work-list LR(1) construction.

    mode "canonical": states keyed by exact item sets (no merging).
    mode "merge": states keyed by core; a new kernel is merged into an
    existing same-core state when `compatible` accepts the pair and (with
    `safety` on) the merge introduces no conflict absent from both
    constituents; grown states are re-enqueued so lookaheads propagate to
    successors.
    """
    if not model.augmented:
        raise GrammarError(error("grammar must be augmented before analysis", model.path))
    first = first_sets(model)
    prods = model.productions
    states = []
    queue = deque()
    by_kernel = {}
    by_core = {}
    stats = {"merges": 0, "regenerated": 0}

    def kernel_key(kernel):
        return tuple(sorted((pi, dot, tuple(sorted(la)))
                            for (pi, dot), la in kernel.items()))

    def new_state(kernel):
        if len(states) >= state_cap:
            raise GrammarError(error(
                "state cap (%d) exceeded while building the %s machine"
                % (state_cap, mode), model.path))
        st = State(len(states), kernel)
        states.append(st)
        queue.append(st.id)
        return st.id

    def ensure_state(kernel):
        if mode == "canonical":
            key = kernel_key(kernel)
            sid = by_kernel.get(key)
            if sid is None:
                sid = new_state(kernel)
                by_kernel[key] = sid
            return sid
        core = frozenset(kernel)
        for sid in by_core.setdefault(core, []):
            cand = states[sid]
            if not compatible(cand.kernel, kernel):
                continue
            grown = {k for k, la in kernel.items() if not la <= cand.kernel[k]}
            if not grown:
                return sid
            merged = {k: set(cand.kernel[k]) for k in cand.kernel}
            for k in grown:
                merged[k] |= kernel[k]
            if safety:
                introduced = _local_conflicts(model, first, merged) \
                    - _local_conflicts(model, first, cand.kernel) \
                    - _local_conflicts(model, first, kernel)
                if introduced:
                    stats["regenerated"] += 1
                    continue
            cand.kernel = merged
            stats["merges"] += 1
            if sid not in queue:
                queue.append(sid)
            return sid
        sid = new_state(kernel)
        by_core[core].append(sid)
        return sid

    start = {(0, 0): {model.eof.id}}
    ensure_state(start)

    while queue:
        sid = queue.popleft()
        st = states[sid]
        items = closure(st.kernel, model, first)
        st.reductions = {}
        st.transitions = {}
        by_symbol = {}
        for (pi, dot), la in items.items():
            rhs = prods[pi].rhs
            if dot == len(rhs):
                if pi != 0:
                    st.reductions[pi] = frozenset(la)
            else:
                by_symbol.setdefault(rhs[dot].symbol, []).append((pi, dot))
        for sym in sorted(by_symbol):
            kernel = {(pi, dot + 1): set(items[(pi, dot)]) for pi, dot in by_symbol[sym]}
            st.transitions[sym] = ensure_state(kernel)

    machine = Machine("canonical" if mode == "canonical" else "pager",
                      _prune(states), model)
    machine.merges = stats["merges"]
    machine.regenerated = stats["regenerated"]
    return machine


def _prune(states):
    """Drop states orphaned by re-merging and renumber breadth-first, with
    ties broken by the symbol id of the inbound transition."""
    order = [0]
    remap = {0: 0}
    qi = 0
    while qi < len(order):
        st = states[order[qi]]
        qi += 1
        for sym in sorted(st.transitions):
            tgt = st.transitions[sym]
            if tgt not in remap:
                remap[tgt] = len(order)
                order.append(tgt)
    out = []
    for old in order:
        st = states[old]
        out.append(State(
            remap[old],
            {k: frozenset(v) for k, v in st.kernel.items()},
            {sym: remap[t] for sym, t in st.transitions.items()},
            dict(st.reductions)))
    return out


def build_canonical(model: Grammar, state_cap=20000) -> Machine:
    """Full canonical LR(1) machine; the reference the merged build is tested against."""
    return _build(model, "canonical", state_cap=state_cap)


def build_pager(model: Grammar, state_cap=20000) -> Machine:
    """LR(1) machine with same-core states merged under weak compatibility."""
    return _build(model, "merge", compatible=weak_compatible, state_cap=state_cap)


def state_first1(state: State, model: Grammar) -> frozenset:
    """FIRST(1) of a state: exactly the union of its read-transition tokens
    and the right context sets of its reductions."""
    out = set()
    for sym in state.transitions:
        if model.is_terminal(sym):
            out.add(sym)
    for la in state.reductions.values():
        out |= la
    return frozenset(out)


# ---------------------------------------------------------------------------
# Precedence and conflict resolution.

def rule_prec_source(model: Grammar, prod):
    """Where the reducing production's precedence comes from, if anywhere."""
    if prod.prec is not None:
        lv = model.prec_of(prod.prec)
        if lv is not None:
            return ("lvl", lv[0], lv[1])
        return None
    for i, e in enumerate(prod.rhs):
        if e.selector == "use":
            return ("off", len(prod.rhs) - (i + 1))
    for e in reversed(prod.rhs):
        sym = model.sym(e.symbol)
        if sym.kind != NONTERMINAL:
            lv = model.prec_of(TokenRef(e.symbol))
            if lv is not None:
                return ("lvl", lv[0], lv[1])
    return None


def lookahead_prec_source(model: Grammar, terminal):
    lv = model.prec_of(TokenRef(terminal))
    if lv is not None:
        return ("lvl", lv[0], lv[1])
    sym = model.sym(terminal)
    if sym.kind == GENERIC:
        if any(model.prec_of(TokenRef(terminal, n)) is not None
               for n in range(len(sym.subtokens))):
            return ("la",)
    return None


def _undeclared_subtokens(model, terminal):
    sym = model.sym(terminal)
    return [lit for n, lit in enumerate(sym.subtokens)
            if model.prec_of(TokenRef(terminal, n)) is None]


def resolve_conflicts(machine: Machine, model: Grammar, force=False) -> Machine:
    """Fill the action and goto tables, resolving shift/reduce conflicts by
    precedence (statically when both sides are static, dynamically when a
    generic token is involved).  Residual conflicts are recorded on the
    machine; reduce/reduce conflicts are never precedence-resolved.
    """
    prods = model.productions
    machine.actions = []
    machine.gotos = []
    machine.conflicts = []
    machine.warnings = []

    for st in machine.states:
        cands = {}
        gotos = {}
        for sym, tgt in st.transitions.items():
            if model.is_terminal(sym):
                if sym == model.eof.id and (0, 3) in machine.states[tgt].kernel:
                    cands.setdefault(sym, []).append(ACCEPT)
                else:
                    cands.setdefault(sym, []).append(("s", tgt))
            else:
                gotos[sym] = tgt
        for pi, ctx in sorted(st.reductions.items()):
            for t in ctx:
                cands.setdefault(t, []).append(("r", pi))

        actions = {}
        for t, options in cands.items():
            if len(options) == 1:
                actions[t] = options[0]
                continue
            shifts = [o for o in options if o[0] in ("s", "acc")]
            reduces = [o for o in options if o[0] == "r"]
            if len(shifts) == 1 and len(reduces) == 1 and shifts[0][0] == "s":
                shift_tgt = shifts[0][1]
                pi = reduces[0][1]
                rp = rule_prec_source(model, prods[pi])
                lp = lookahead_prec_source(model, t)
                if rp is not None and lp is not None:
                    if rp[0] == "lvl" and lp[0] == "lvl":
                        resolved = _static_resolution(rp, lp, shifts[0], reduces[0])
                        if resolved is not None:  # nonassoc leaves an error cell
                            actions[t] = resolved
                        continue
                    if rp[0] == "off":
                        use_sym = next(e.symbol for e in prods[pi].rhs if e.selector == "use")
                        missing = _undeclared_subtokens(model, use_sym)
                        if missing:
                            machine.warnings.append(warning(
                                "state %d: dynamic precedence may meet undeclared "
                                "subtoken(s) %s of '%s' at runtime"
                                % (st.id, " ".join("'%s'" % m for m in missing),
                                   model.sym(use_sym).name), model.path))
                    if lp[0] == "la":
                        missing = _undeclared_subtokens(model, t)
                        if missing:
                            machine.warnings.append(warning(
                                "state %d: dynamic precedence may meet undeclared "
                                "subtoken(s) %s of '%s' at runtime"
                                % (st.id, " ".join("'%s'" % m for m in missing),
                                   model.sym(t).name), model.path))
                    actions[t] = ("dyn", shift_tgt, pi, rp, lp)
                    continue
            conflict = Conflict(st.id, t, options)
            machine.conflicts.append(conflict)
            if force:
                actions[t] = shifts[0] if shifts else min(reduces, key=lambda o: o[1])
        machine.actions.append(actions)
        machine.gotos.append(gotos)
    return machine


def _static_resolution(rp, lp, shift, reduce):
    _, rule_level, assoc = rp
    _, la_level, _ = lp
    if rule_level > la_level:
        return reduce
    if rule_level < la_level:
        return shift
    if assoc == "left":
        return reduce
    if assoc == "right":
        return shift
    return None  # nonassoc: the action cell becomes an error


def check_error_ambiguity(machine: Machine) -> list:
    """Reject grammars whose states are ambiguous on ERROR.

    Two situations are reported: conflicting actions in a state's ERROR
    column (which the recovery algorithm cannot arbitrate), and an ERROR
    read transition whose successor mixes items of more than one error
    production (the recovery point would not identify a unique recovery)."""
    model = machine.model
    err = machine.error_id
    diags = []
    for c in machine.conflicts:
        if c.terminal == err:
            diags.append(error(
                "state %d is ambiguous on ERROR (%s)" % (c.state, c.kind()),
                model.path))
    for st in machine.states:
        tgt = st.transitions.get(err)
        if tgt is None:
            continue
        succ = machine.states[tgt]
        prods_after = {pi for pi, _dot in succ.kernel}
        if len(prods_after) > 1:
            names = ", ".join(sorted(production_display(model, pi) for pi in prods_after))
            diags.append(error(
                "state %d: ERROR transition covers more than one error production (%s)"
                % (st.id, names), model.path))
    return diags


# ---------------------------------------------------------------------------
# Human-readable state report.

def production_display(model: Grammar, pi, dot=None):
    p = model.productions[pi]
    parts = []
    for i, e in enumerate(p.rhs):
        if dot is not None and i == dot:
            parts.append(".")
        if e.selector:
            parts.append("%" + e.selector)
        parts.append(model.sym(e.symbol).source_form())
    if dot is not None and dot == len(p.rhs):
        parts.append(".")
    return "%s : %s" % (model.sym(p.lhs).name, " ".join(parts))


def _la_display(model, la):
    return "{ %s }" % " ".join(model.sym(t).display() for t in sorted(la))


def format_report(machine: Machine, model: Grammar) -> str:
    """Per-state dump: kernel items, transitions, reductions with right
    context sets, the FIRST(1) line, and conflict annotations."""
    lines = ["machine: %s, %d states, %d conflicts"
             % (machine.mode, len(machine.states), len(machine.conflicts)), ""]
    conflicts_by_state = {}
    for c in machine.conflicts:
        conflicts_by_state.setdefault(c.state, []).append(c)
    for st in machine.states:
        lines.append("state %d:" % st.id)
        for (pi, dot) in sorted(st.kernel):
            lines.append("    %s , %s"
                         % (production_display(model, pi, dot),
                            _la_display(model, st.kernel[(pi, dot)])))
        for sym in sorted(st.transitions):
            lines.append("    %s -> %d" % (model.sym(sym).display(), st.transitions[sym]))
        for pi in sorted(st.reductions):
            lines.append("    reduce %s , %s"
                         % (production_display(model, pi), _la_display(model, st.reductions[pi])))
        first1 = machine.first1[st.id]
        lines.append("    first1: %s"
                     % (" ".join(model.sym(t).display() for t in sorted(first1)) or "(none)"))
        for c in conflicts_by_state.get(st.id, ()):
            cand = ", ".join(_action_display(model, a) for a in c.candidates)
            lines.append("    conflict: %s on %s (%s)"
                         % (c.kind(), model.sym(c.terminal).display(), cand))
        lines.append("")
    return "\n".join(lines)


def _action_display(model, action):
    if action[0] == "s":
        return "shift %d" % action[1]
    if action[0] == "r":
        return "reduce [%s]" % production_display(model, action[1])
    if action[0] == "acc":
        return "accept"
    return repr(action)
