"""Demonstration scanner derived from a grammar's terminal inventory.

Good enough to run every grammar in this repository: reserved literals and
generic subtoken literals are matched directly (longest match first, and a
literal that is both a reserved terminal and a generic subtoken is always
returned as the subtoken; an oracle converts it back where the grammar
wants the reserved form).  Three plain-terminal names are wired to lexical
classes when the grammar uses them: ``id``, ``constant``, and
``string_literal``.  Anything else must come from an external token source
implementing the same contract: yield Tokens, finish with EOF, never yield
ERROR.
"""

from dataclasses import dataclass, field

from .diagnostics import warning
from .engine import Token
from .grammar import PLAIN, RESERVED, GENERIC

_CLASS_NAMES = ("id", "constant", "string_literal")


@dataclass
class ScannerSpec:
    literals: dict = field(default_factory=dict)   # text -> (symbol, subtoken or None)
    keywords: set = field(default_factory=set)     # identifier-shaped literals
    id_symbol: int | None = None
    constant_symbol: int | None = None
    string_symbol: int | None = None
    punct: list = field(default_factory=list)      # non-keyword literals, longest first
    warnings: list = field(default_factory=list)


def derive_spec(source) -> ScannerSpec:
    """Build a ScannerSpec from ParseTables (or a Grammar model; anything
    with `symbols` and `oracles`)."""
    spec = ScannerSpec()
    oracle_targets = {o.y.symbol for o in source.oracles}
    for sym in source.symbols:
        if sym.kind == GENERIC:
            for num, lit in enumerate(sym.subtokens):
                if lit not in spec.literals:
                    spec.literals[lit] = (sym.id, num)
                else:
                    spec.warnings.append(warning(
                        "literal '%s' already scanned as another token; "
                        "'%s' needs an external token source" % (lit, sym.name)))
    for sym in source.symbols:
        if sym.kind == RESERVED and sym.name not in spec.literals:
            spec.literals[sym.name] = (sym.id, None)
    for sym in source.symbols:
        if sym.kind != PLAIN:
            continue
        if sym.name == "id":
            spec.id_symbol = sym.id
        elif sym.name == "constant":
            spec.constant_symbol = sym.id
        elif sym.name == "string_literal":
            spec.string_symbol = sym.id
        elif sym.id not in oracle_targets:
            spec.warnings.append(warning(
                "plain terminal '%s' is not produced by the built-in scanner; "
                "an external token source is required" % sym.name))
    for lit in spec.literals:
        if (lit[0].isalpha() or lit[0] == "_") and lit.replace("_", "a").isalnum():
            spec.keywords.add(lit)
    spec.punct = sorted((l for l in spec.literals if l not in spec.keywords),
                        key=len, reverse=True)
    return spec


def tokenize(text, spec: ScannerSpec, path="<input>", eof_symbol=0):
    """Scan `text` into a Token list ending in EOF.

    Positions are 1-based line/column of each token's first character.
    Whitespace and comments (// and /* */) are skipped; unrecognized
    characters are reported and skipped so the scan continues.
    """
    tokens = []
    diags = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(span):
        nonlocal i, line, col
        chunk = text[i:i + span]
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = span - chunk.rfind("\n")
        else:
            col += span
        i += span

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            end = text.find("\n", i)
            advance((end if end >= 0 else n) - i)
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                diags.append(warning("unterminated comment", path, line, col))
                advance(n - i)
                continue
            advance(end + 2 - i)
            continue
        tline, tcol = line, col
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in spec.keywords:
                sym, sub = spec.literals[word]
                tokens.append(Token(sym, word, sub, tline, tcol))
            elif spec.id_symbol is not None:
                tokens.append(Token(spec.id_symbol, word, None, tline, tcol))
            else:
                diags.append(warning("no token for identifier '%s'" % word,
                                     path, tline, tcol))
            advance(j - i)
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            word = text[i:j]
            if spec.constant_symbol is not None:
                tokens.append(Token(spec.constant_symbol, word, None, tline, tcol))
            else:
                diags.append(warning("no token for number '%s'" % word,
                                     path, tline, tcol))
            advance(j - i)
            continue
        if ch == '"':
            j = text.find('"', i + 1)
            if j < 0 or "\n" in text[i + 1:j]:
                diags.append(warning("unterminated string literal", path, tline, tcol))
                advance(1)
                continue
            word = text[i:j + 1]
            if spec.string_symbol is not None:
                tokens.append(Token(spec.string_symbol, word, None, tline, tcol))
            else:
                diags.append(warning("no token for string literal", path, tline, tcol))
            advance(j + 1 - i)
            continue
        for lit in spec.punct:
            if text.startswith(lit, i):
                sym, sub = spec.literals[lit]
                tokens.append(Token(sym, lit, sub, tline, tcol))
                advance(len(lit))
                break
        else:
            diags.append(warning("unrecognized character %r" % ch, path, tline, tcol))
            advance(1)
    tokens.append(Token(eof_symbol, None, None, line, col))
    return tokens, diags
