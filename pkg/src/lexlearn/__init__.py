"""Incremental lexical acquisition over a small German unification grammar.

Sentences are parsed with a typed-feature-structure chart parser whose
lexical lookup never fails: unknown surface forms fall back to a
disjunction of maximally underspecified noun/adjective/verb entries.
After each parse, grammar-declared revisability clauses locate the
slots a context can teach something about, and the persistent lexicon
is revised in place: generalizable slots grow by type union,
specializable slots narrow, and nothing changes unless the context is
actually informative.
"""

from .errors import ConfigError, LexlearnError
from .fstruct import (FeaturePath, FeatureStructure, copy_fs, parse_fs,
                      parse_path, render_fs, resolve_path, revise_type_at,
                      unify_fs)
from .grammar import Grammar, LexicalEntry, RevisabilityClause, load_clauses
from .lexstore import Lexicon, load_lexicon, load_lexicon_file, replay_audit
from .parser import ParseSolution, Token, parse, tokenize
from .revision import (AcquisitionEngine, PendingHypothesis, UpdateCandidate,
                       UpdateReport)
from .typelattice import (LeafSet, TypeHierarchy, load_hierarchy, subsumes,
                          union_types, unify_types)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionEngine", "ConfigError", "FeaturePath", "FeatureStructure",
    "Grammar", "LeafSet", "LexicalEntry", "Lexicon", "LexlearnError",
    "ParseSolution", "PendingHypothesis", "RevisabilityClause", "Token",
    "TypeHierarchy", "UpdateCandidate", "UpdateReport", "copy_fs",
    "load_clauses", "load_hierarchy", "load_lexicon", "load_lexicon_file",
    "parse", "parse_fs", "parse_path", "render_fs", "replay_audit",
    "resolve_path", "revise_type_at", "subsumes", "tokenize", "unify_fs",
    "union_types", "unify_types",
]
