"""lr1gen: a full LR(1) parser generation toolchain.

Grammar analysis with Pager state merging, table files with skeleton
injection, and a runtime engine with grammar-specified error recovery,
scanner/parser oracles, generic tokens with map-driven tree building, and
dynamic operator precedence.
"""

from .diagnostics import Diagnostic, GrammarError, TableError
from .grammar import (Grammar, Symbol, TokenRef, Element, Production,
                      OracleRule, MapRule, PrecLevel,
                      parse_grammar, augment, validate, format_grammar)
from .analysis import (Machine, State, first_sets, closure, goto_step,
                       build_canonical, build_pager, resolve_conflicts,
                       check_error_ambiguity, state_first1, weak_compatible,
                       format_report)
from .tables import (ParseTables, ProdMeta, make_tables, serialize,
                     deserialize, inject, load_tables, save_tables)
from .engine import (Token, Tree, Outcome, Parser, EngineFault,
                     run, ask_oracle, dynamic_resolve, build_node,
                     format_trace_token)
from .scanner import ScannerSpec, derive_spec, tokenize

__version__ = "0.1.0"

__all__ = [
    "Diagnostic", "GrammarError", "TableError",
    "Grammar", "Symbol", "TokenRef", "Element", "Production",
    "OracleRule", "MapRule", "PrecLevel",
    "parse_grammar", "augment", "validate", "format_grammar",
    "Machine", "State", "first_sets", "closure", "goto_step",
    "build_canonical", "build_pager", "resolve_conflicts",
    "check_error_ambiguity", "state_first1", "weak_compatible",
    "format_report",
    "ParseTables", "ProdMeta", "make_tables", "serialize", "deserialize",
    "inject", "load_tables", "save_tables",
    "Token", "Tree", "Outcome", "Parser", "EngineFault",
    "run", "ask_oracle", "dynamic_resolve", "build_node", "format_trace_token",
    "ScannerSpec", "derive_spec", "tokenize",
    "__version__",
]
