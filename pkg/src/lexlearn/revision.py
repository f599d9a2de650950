"""Post-parse lexicon update pipeline.

After a sentence parses, each word's in-solution sign is matched against
the revisability clauses.  Matching generalizable slots receive the type
union of the stored ``gen`` value with the context's ``ctxt`` value;
matching specializable slots receive the (narrower) parse value, kept
eligible by the ``u_s`` marker.  Candidates that would not change the
entry are rejected.  With several parse solutions, only candidates
identical across all of them are applied; the rest are kept as pending
hypotheses awaiting later contexts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import fstruct
from .fstruct import (FeaturePath, FeatureStructure, Node, UnificationFailure,
                      copy_nodes, is_acyclic, list_elements, merge_nodes,
                      resolve_node)
from .grammar import Grammar, RevisabilityClause, ensure_slot
from .parser import ParseSolution, parse, tokenize
from .typelattice import LeafSet


@dataclass(frozen=True)
class UpdateCandidate:
    """One proposed slot revision, fully resolved against the lexical entry."""

    form: str
    disjunct: int
    clause: str
    kind: str  # "generalizable" | "specializable"
    path: str  # absolute path within the lexical disjunct
    slot: str  # abbreviated slot name for reports
    old: LeafSet
    new: LeafSet
    collapsed: bool = False  # entry was first materialized from the generic one
    generic_disjunct: int | None = None  # pre-collapse index, for log replay

    def key(self) -> tuple:
        return (self.form, self.disjunct, self.clause, self.path, self.new.mask)


@dataclass
class PendingHypothesis:
    """Solution-specific candidates that could not be applied outright."""

    form: str
    sentence: str
    solution: int
    candidates: list[UpdateCandidate]


@dataclass
class EntryChange:
    form: str
    before: str
    after: str
    diff: str


@dataclass
class UpdateReport:
    sentence: str
    solutions: int = 0
    ungrammatical: bool = False
    applied: list[UpdateCandidate] = field(default_factory=list)
    rejected: list[UpdateCandidate] = field(default_factory=list)
    pending: list[PendingHypothesis] = field(default_factory=list)
    changes: list[EntryChange] = field(default_factory=list)
    version: int | None = None

    def audit_records(self, grammar: Grammar) -> list[dict]:
        """Lossless JSON-ready records; one per candidate plus sentence status."""
        h = grammar.hier
        records: list[dict] = []
        if self.ungrammatical:
            return [{"sentence": self.sentence, "status": "ungrammatical"}]

        def base(c: UpdateCandidate, status: str) -> dict:
            return {
                "sentence": self.sentence,
                "status": status,
                "form": c.form,
                "disjunct": c.disjunct,
                "collapsed": c.collapsed,
                "generic_disjunct": c.generic_disjunct,
                "clause": c.clause,
                "kind": c.kind,
                "path": c.path,
                "slot": c.slot,
                "old": h.display(c.old),
                "new": h.display(c.new),
                "version": self.version,
            }

        records.extend(base(c, "applied") for c in self.applied)
        records.extend(base(c, "rejected") for c in self.rejected)
        for hyp in self.pending:
            for c in hyp.candidates:
                record = base(c, "pending")
                record["solution"] = hyp.solution
                records.append(record)
        return records


# ---------------------------------------------------------------------------
# step 1: clause filtering


def _unifiable(node: Node, pattern: FeatureStructure) -> bool:
    """Does the (copied) sign unify with the clause pattern?"""
    mapping = copy_nodes([node])
    candidate = mapping[id(node.deref())]
    pattern_copy = fstruct.copy_fs(pattern)
    try:
        merge_nodes(candidate, pattern_copy.root, pattern.hier.top)
    except UnificationFailure:
        return False
    return is_acyclic([candidate])


def match_revisability(
    word_fs: Node | FeatureStructure,
    clauses: list[RevisabilityClause],
    bound: frozenset[int] | None = None,
) -> list[tuple[RevisabilityClause, int | None]]:
    """Clauses whose anchor unifies with the word sign.

    For element-scoped clauses one match is reported per list element;
    ``bound`` (when given) restricts matches to argument slots the parse
    actually bound, so untouched lexical slots are not revised.
    """
    root = word_fs.root if isinstance(word_fs, FeatureStructure) else word_fs
    matches: list[tuple[RevisabilityClause, int | None]] = []
    for clause in clauses:
        if clause.scope is None:
            if _unifiable(root, clause.anchor):
                matches.append((clause, None))
            continue
        spine = resolve_node(root, clause.scope)
        if spine is None:
            continue
        for index, element in enumerate(list_elements(spine)):
            if bound is not None and index not in bound:
                continue
            if _unifiable(element, clause.anchor):
                matches.append((clause, index))
    return matches


# ---------------------------------------------------------------------------
# step 2: update values


def _absolute(clause: RevisabilityClause, index: int | None,
              relative: FeaturePath) -> FeaturePath:
    if index is None:
        return relative
    return FeaturePath(clause.scope.steps + (index,) + relative.steps)


def _short_slot(path: FeaturePath) -> str:
    """Abbreviated display name: strip sign-internal plumbing features."""
    steps = [s for s in path.steps
             if not (isinstance(s, str) and s in ("cont", "arg-st", "head", "loc", "ind"))]
    out: list[str] = []
    for step in steps:
        if isinstance(step, int):
            out[-1] += f"[{step}]"
        else:
            out.append(step)
    return ".".join(out)


def compute_updates(solution: ParseSolution, lexicon, grammar: Grammar,
                    ) -> list[UpdateCandidate]:
    """Concrete update values for every clause match in one solution."""
    h = grammar.hier
    candidates: list[UpdateCandidate] = []
    for pos in sorted(solution.projections):
        node, disjunct = solution.projections[pos]
        form = solution.tokens[pos].text
        entry, seen = lexicon.entry_or_generic(form)
        lexical = entry.disjuncts[disjunct]
        bound = solution.bound_args.get(pos)
        for clause, index in match_revisability(node, grammar.clauses, bound):
            if clause.kind == "generalizable":
                gen_path = _absolute(clause, index, clause.gen_path)
                ctxt_path = _absolute(clause, index, clause.ctxt_path)
                ctxt_node = resolve_node(node, ctxt_path)
                if ctxt_node is None or ctxt_node.is_atom():
                    continue
                lex_node = resolve_node(lexical.root, gen_path)
                old = lex_node.typ if lex_node is not None else h.u_g
                new = old | h.strip_markers(ctxt_node.typ)
                slot = _short_slot(gen_path)
            else:
                spec_path = _absolute(clause, index, clause.spec_path)
                lex_node = resolve_node(lexical.root, spec_path)
                if lex_node is None or lex_node.is_atom():
                    continue
                if not (h.u_s <= lex_node.typ):
                    continue  # slot is certain knowledge: never specialized
                parse_node = resolve_node(node, spec_path)
                if parse_node is None or parse_node.is_atom():
                    continue
                core = h.strip_markers(parse_node.typ)
                if core.is_bottom():
                    continue
                old = lex_node.typ
                new = core | h.u_s
                slot = _short_slot(spec_path)
            candidates.append(UpdateCandidate(
                form=form, disjunct=disjunct, clause=clause.name,
                kind=clause.kind, path=str(_absolute(
                    clause, index,
                    clause.gen_path if clause.kind == "generalizable" else clause.spec_path)),
                slot=slot, old=old, new=new,
            ))
    return candidates


# ---------------------------------------------------------------------------
# step 3: informativeness


def informative(candidate: UpdateCandidate, grammar: Grammar) -> bool:
    """Would this update actually change the entry?

    Generalizable values must strictly grow; specializable values must
    strictly shrink once the eligibility marker is ignored.
    """
    h = grammar.hier
    if candidate.kind == "generalizable":
        return candidate.old < candidate.new
    return h.strip_markers(candidate.new) < h.strip_markers(candidate.old)


# ---------------------------------------------------------------------------
# multi-solution reconciliation


def reconcile_solutions(
    per_solution: list[list[UpdateCandidate]], sentence: str,
) -> tuple[list[UpdateCandidate], list[PendingHypothesis]]:
    """Split candidates into solution-invariant ones and pending hypotheses."""
    keyed: list[dict[tuple, UpdateCandidate]] = []
    for candidates in per_solution:
        by_key: dict[tuple, UpdateCandidate] = {}
        for c in candidates:
            by_key.setdefault(c.key(), c)
        keyed.append(by_key)
    common = [key for key in keyed[0]
              if all(key in others for others in keyed[1:])]
    agreed = [keyed[0][key] for key in common]
    pending: list[PendingHypothesis] = []
    for sol_index, by_key in enumerate(keyed):
        leftovers: dict[str, list[UpdateCandidate]] = {}
        for key, c in by_key.items():
            if key not in common:
                leftovers.setdefault(c.form, []).append(c)
        for form, candidates in leftovers.items():
            pending.append(PendingHypothesis(form, sentence, sol_index, candidates))
    return agreed, pending


# ---------------------------------------------------------------------------
# step 4: destructive entry revision


def apply_updates(lexicon, agreed: list[UpdateCandidate], sentence: str,
                  ) -> tuple[list[UpdateCandidate], list[EntryChange]]:
    """Revise entries in place, all-or-nothing per entry."""
    grammar = lexicon.grammar
    by_form: dict[str, list[UpdateCandidate]] = {}
    for c in agreed:
        by_form.setdefault(c.form, []).append(c)
    applied: list[UpdateCandidate] = []
    changes: list[EntryChange] = []
    for form, candidates in by_form.items():
        entry, seen = lexicon.entry_or_generic(form)
        before = entry  # the generic template doubles as baseline for new forms
        work = entry.copy()
        resolved: list[UpdateCandidate] = []
        if not seen:
            work.origin = "acquired"
            chosen = {c.disjunct for c in candidates}
            if len(chosen) == 1:
                # keep only the contextually selected disjunct
                keep = chosen.pop()
                work.disjuncts = [work.disjuncts[keep]]
                baseline = entry.copy()
                baseline.disjuncts = [baseline.disjuncts[keep]]
                before = baseline
                resolved = [_with_disjunct(c, 0, collapsed=True, generic=keep)
                            for c in candidates]
            else:
                resolved = list(candidates)
        else:
            resolved = list(candidates)
        for c in resolved:
            target = work.disjuncts[c.disjunct]
            ensure_slot(target, c.path, grammar)
            fstruct.revise_type_at(target, c.path, c.new)
        before_text = lexicon.render_entry_text(before)
        lexicon.assert_entry(work)
        after_text = lexicon.render_entry_text(work)
        changes.append(EntryChange(
            form=form,
            before=before_text,
            after=after_text,
            diff=lexicon.diff(form, before, work),
        ))
        applied.extend(resolved)
    return applied, changes


def _with_disjunct(c: UpdateCandidate, disjunct: int, collapsed: bool,
                   generic: int | None) -> UpdateCandidate:
    return UpdateCandidate(
        form=c.form, disjunct=disjunct, clause=c.clause, kind=c.kind,
        path=c.path, slot=c.slot, old=c.old, new=c.new, collapsed=collapsed,
        generic_disjunct=generic)


# ---------------------------------------------------------------------------
# whole pipeline


class AcquisitionEngine:
    """Parses sentences and keeps the lexicon up to date afterwards."""

    def __init__(self, grammar: Grammar, lexicon):
        self.grammar = grammar
        self.lexicon = lexicon

    def process_sentence(self, sentence: str, dry_run: bool = False) -> UpdateReport:
        tokens = tokenize(sentence)
        solutions = parse(tokens, self.lexicon, self.grammar)
        report = UpdateReport(sentence=sentence, solutions=len(solutions))
        if not solutions:
            report.ungrammatical = True
            return report
        per_solution: list[list[UpdateCandidate]] = []
        rejected_keys: set[tuple] = set()
        for solution in solutions:
            candidates = compute_updates(solution, self.lexicon, self.grammar)
            keep: list[UpdateCandidate] = []
            for c in candidates:
                if informative(c, self.grammar):
                    keep.append(c)
                elif c.key() not in rejected_keys:
                    rejected_keys.add(c.key())
                    report.rejected.append(c)
            per_solution.append(keep)
        agreed, pending = reconcile_solutions(per_solution, sentence)
        lexicon = self.lexicon.clone() if dry_run else self.lexicon
        applied, changes = apply_updates(lexicon, agreed, sentence)
        collapsed = {c.form: c.generic_disjunct for c in applied if c.collapsed}
        for hypothesis in pending:
            if hypothesis.form in collapsed:
                hypothesis.candidates = [
                    _with_disjunct(c, 0, collapsed=True,
                                   generic=collapsed[hypothesis.form])
                    for c in hypothesis.candidates]
            lexicon.attach_pending(hypothesis)
        if applied or pending:
            lexicon.version += 1
        report.applied = applied
        report.pending = pending
        report.changes = changes
        report.version = lexicon.version
        lexicon.audit_records.extend(report.audit_records(self.grammar))
        return report
