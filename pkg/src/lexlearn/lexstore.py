"""Persistent lexicon: assert/retract, text store, diffs, audit log.

The store format is the lexicon source format plus two extensions: an
``origin acquired`` flag and one ``pending {...}`` JSON clause per open
hypothesis.  Rendering is deterministic (canonical feature order, tags
numbered in render order, entries kept in insertion order), so saving a
loaded store reproduces it byte for byte.

The audit log is a JSON-lines file with one record per applied,
rejected or pending update candidate.  Replaying the applied and
pending records against the initial lexicon reproduces the final store
exactly; values in records use the lossless display form, marker leaves
included.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from . import fstruct
from .errors import LexlearnError
from .fstruct import FeatureStructure, Node, parse_fs
from .grammar import Grammar, LexicalEntry, _statements, ensure_slot
from .revision import PendingHypothesis, UpdateCandidate


class StoreError(LexlearnError):
    """Malformed lexicon/store file or inconsistent store operation."""


_ENTRY_HEAD_RE = re.compile(
    r'^entry\s+"(?P<form>[^"]*)"\s*(?:origin\s+(?P<origin>[a-z]+)\s*)?:=\s*',
    re.DOTALL,
)
_VERSION_RE = re.compile(r"^version\s+(\d+)$")


class Lexicon:
    """Mapping form -> entry, with a version counter and audit buffer."""

    def __init__(self, grammar: Grammar):
        self.grammar = grammar
        self.entries: dict[str, LexicalEntry] = {}
        self.version = 0
        self.audit_records: list[dict] = []

    # -- basic store operations ----------------------------------------------

    def __contains__(self, form: str) -> bool:
        return form in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def assert_entry(self, entry: LexicalEntry) -> None:
        for disjunct in entry.disjuncts:
            phon = fstruct.resolve_path(disjunct, "phon")
            if phon is None:
                disjunct.root.feats["phon"] = Node(atom=entry.form)
            elif phon.atom != entry.form:
                raise StoreError(
                    f"disjunct phonology {phon.atom!r} does not match form {entry.form!r}")
        if not entry.disjuncts:
            raise StoreError(f"entry {entry.form!r} needs at least one disjunct")
        self.entries[entry.form] = entry

    def retract(self, form: str) -> LexicalEntry:
        if form not in self.entries:
            raise StoreError(f"cannot retract unknown form {form!r}")
        return self.entries.pop(form)

    def entry_or_generic(self, form: str) -> tuple[LexicalEntry, bool]:
        """The stored entry, or a fresh generic unknown entry for the form."""
        entry = self.entries.get(form)
        if entry is not None:
            return entry, True
        return self.grammar.generic_unknown_entry(form), False

    def lookup(self, form: str) -> list[FeatureStructure]:
        """Copies of the form's disjuncts; never fails for unknown forms."""
        entry, _ = self.entry_or_generic(form)
        return [fstruct.copy_fs(d) for d in entry.disjuncts]

    def attach_pending(self, hypothesis: PendingHypothesis) -> None:
        entry = self.entries.get(hypothesis.form)
        if entry is None:
            entry, _ = self.entry_or_generic(hypothesis.form)
            self.entries[hypothesis.form] = entry
        entry.pending.append(hypothesis)

    def clone(self) -> "Lexicon":
        fresh = Lexicon(self.grammar)
        fresh.version = self.version
        for form, entry in self.entries.items():
            fresh.entries[form] = entry.copy()
        return fresh

    def all_pending(self) -> list[PendingHypothesis]:
        out: list[PendingHypothesis] = []
        for entry in self.entries.values():
            out.extend(entry.pending)
        return out

    # -- rendering -----------------------------------------------------------

    def render_entry_text(self, entry: LexicalEntry) -> str:
        parts = [f'entry "{entry.form}"']
        if entry.origin != "known":
            parts.append(f"origin {entry.origin}")
        parts.append(":=")
        body = "\n  | ".join(fstruct.render_fs(d) for d in entry.disjuncts)
        lines = [" ".join(parts), f"    {body}"]
        for hypothesis in entry.pending:
            lines.append(f"  pending {self._pending_json(hypothesis)}")
        return "\n".join(lines) + " ."

    def _pending_json(self, hypothesis: PendingHypothesis) -> str:
        h = self.grammar.hier
        payload = {
            "sentence": hypothesis.sentence.replace('"', "'"),
            "solution": hypothesis.solution,
            "candidates": [
                {
                    "disjunct": c.disjunct,
                    "clause": c.clause,
                    "kind": c.kind,
                    "path": c.path,
                    "slot": c.slot,
                    "old": h.display(c.old),
                    "new": h.display(c.new),
                }
                for c in hypothesis.candidates
            ],
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True)

    def save_text(self) -> str:
        chunks = [f"version {self.version} ."]
        chunks.extend(self.render_entry_text(e) for e in self.entries.values())
        return "\n\n".join(chunks) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.save_text(), encoding="utf-8")

    # -- diff ------------------------------------------------------------------

    def diff(self, form: str, before: LexicalEntry | None,
             after: LexicalEntry) -> str:
        """Changed snapshot slots, one ``slot: old -> new`` line each.

        Slots that first appear with their grammar-default value (the
        materialized argument-slot skeleton) are not reported.
        """
        g = self.grammar
        lines: list[str] = []
        many = len(after.disjuncts) > 1
        for index, disjunct in enumerate(after.disjuncts):
            after_slots = {s.name: s for s in g.entry_snapshot(disjunct)}
            before_slots = {}
            if before is not None and index < len(before.disjuncts):
                before_slots = {s.name: s
                                for s in g.entry_snapshot(before.disjuncts[index])}
            for name, slot in after_slots.items():
                prefix = f"[{index + 1}] " if many else ""
                old = before_slots.get(name)
                if old is None:
                    default = g.slot_default(name)
                    if default is not None and slot.value == default:
                        continue
                    old_shown = g.display_value(default) if default is not None else "-"
                    lines.append(f"{prefix}{name}: {old_shown} → {slot.shown}")
                elif old.value != slot.value:
                    lines.append(f"{prefix}{name}: {old.shown} → {slot.shown}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# loading


def load_lexicon(text: str, grammar: Grammar) -> Lexicon:
    """Parse a lexicon source or store file."""
    lexicon = Lexicon(grammar)
    for statement, lineno in _statements(text):
        version_match = _VERSION_RE.match(statement.strip())
        if version_match:
            lexicon.version = int(version_match.group(1))
            continue
        head = _ENTRY_HEAD_RE.match(statement)
        if not head:
            raise StoreError(f"line {lineno}: malformed statement")
        form = head.group("form")
        if not form:
            raise StoreError(f"line {lineno}: empty form")
        if form in lexicon.entries:
            raise StoreError(f"line {lineno}: duplicate entry for form {form!r}")
        origin = head.group("origin") or "known"
        if origin not in ("known", "acquired"):
            raise StoreError(f"line {lineno}: unknown origin {origin!r}")
        disjunct_texts, pending_payloads = _split_entry_body(
            statement[head.end():], lineno)
        disjuncts = []
        for chunk in disjunct_texts:
            try:
                disjuncts.append(parse_fs(chunk, grammar.hier))
            except LexlearnError as err:
                raise StoreError(f"line {lineno}: {err}") from err
        entry = LexicalEntry(form=form, disjuncts=disjuncts, origin=origin)
        for payload in pending_payloads:
            entry.pending.append(_pending_from_json(payload, form, grammar, lineno))
        lexicon.assert_entry(entry)
    return lexicon


def load_lexicon_file(path: str | Path, grammar: Grammar) -> Lexicon:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise StoreError(f"cannot read lexicon {path}: {err}") from err
    return load_lexicon(text, grammar)


def _split_entry_body(text: str, lineno: int) -> tuple[list[str], list[dict]]:
    """Split an entry body into disjunct AVMs and pending JSON payloads."""
    disjuncts: list[str] = []
    pendings: list[dict] = []
    rest = text.strip()
    if rest.endswith("."):
        rest = rest[:-1].rstrip()
    while rest:
        if rest.startswith("|"):
            rest = rest[1:].lstrip()
            continue
        if rest.startswith("pending"):
            rest = rest[len("pending"):].lstrip()
            payload, rest = _balanced_json(rest, lineno)
            try:
                pendings.append(json.loads(payload))
            except json.JSONDecodeError as err:
                raise StoreError(f"line {lineno}: bad pending payload: {err}") from err
            rest = rest.lstrip()
            continue
        if rest.startswith("["):
            chunk, rest = _balanced_brackets(rest, lineno)
            disjuncts.append(chunk)
            rest = rest.lstrip()
            continue
        raise StoreError(f"line {lineno}: unexpected entry content {rest[:20]!r}")
    if not disjuncts:
        raise StoreError(f"line {lineno}: entry has no disjuncts")
    return disjuncts, pendings


def _balanced_brackets(text: str, lineno: int) -> tuple[str, str]:
    depth = 0
    in_string = False
    for i, ch in enumerate(text):
        if in_string:
            if ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "[<":
            depth += 1
        elif ch in "]>":
            depth -= 1
            if depth == 0:
                return text[: i + 1], text[i + 1:]
    raise StoreError(f"line {lineno}: unbalanced brackets")


def _balanced_json(text: str, lineno: int) -> tuple[str, str]:
    if not text.startswith("{"):
        raise StoreError(f"line {lineno}: pending clause needs a JSON object")
    depth = 0
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[: i + 1], text[i + 1:]
    raise StoreError(f"line {lineno}: unbalanced pending payload")


def _pending_from_json(payload: dict, form: str, grammar: Grammar,
                       lineno: int) -> PendingHypothesis:
    h = grammar.hier
    try:
        candidates = [
            UpdateCandidate(
                form=form,
                disjunct=int(c["disjunct"]),
                clause=c["clause"],
                kind=c["kind"],
                path=c["path"],
                slot=c["slot"],
                old=h.parse_expr(c["old"]),
                new=h.parse_expr(c["new"]),
            )
            for c in payload["candidates"]
        ]
        return PendingHypothesis(
            form=form,
            sentence=payload["sentence"],
            solution=int(payload["solution"]),
            candidates=candidates,
        )
    except (KeyError, ValueError, LexlearnError) as err:
        raise StoreError(f"line {lineno}: bad pending payload: {err}") from err


# ---------------------------------------------------------------------------
# audit log


def append_audit(path: str | Path, records: list[dict]) -> None:
    if not records:
        return
    with open(path, "a", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def read_audit(path: str | Path) -> list[dict]:
    source = Path(path)
    if not source.exists():
        return []
    records = []
    for line in source.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            records.append(json.loads(line))
    return records


def replay_audit(lexicon: Lexicon, records: list[dict]) -> None:
    """Re-apply logged applied/pending records to an initial lexicon."""
    grammar = lexicon.grammar
    h = grammar.hier
    for record in records:
        status = record.get("status")
        if status == "applied":
            form = record["form"]
            if form not in lexicon.entries:
                entry = grammar.generic_unknown_entry(form)
                if record.get("collapsed"):
                    entry.disjuncts = [entry.disjuncts[_original_disjunct(record)]]
                lexicon.assert_entry(entry)
            entry = lexicon.entries[form]
            target = entry.disjuncts[record["disjunct"]]
            ensure_slot(target, record["path"], grammar)
            fstruct.revise_type_at(target, record["path"], h.parse_expr(record["new"]))
        elif status == "pending":
            form = record["form"]
            candidate = UpdateCandidate(
                form=form,
                disjunct=record["disjunct"],
                clause=record["clause"],
                kind=record["kind"],
                path=record["path"],
                slot=record["slot"],
                old=h.parse_expr(record["old"]),
                new=h.parse_expr(record["new"]),
                collapsed=record.get("collapsed", False),
            )
            hypothesis = _find_or_new_hypothesis(lexicon, record)
            hypothesis.candidates.append(candidate)
        if record.get("version") is not None:
            lexicon.version = max(lexicon.version, record["version"])


def _original_disjunct(record: dict) -> int:
    # collapsed records store the post-collapse index (0); the original
    # generic disjunct is recoverable from the clause kind
    hint = record.get("generic_disjunct")
    if hint is not None:
        return hint
    return 0


def _find_or_new_hypothesis(lexicon: Lexicon, record: dict) -> PendingHypothesis:
    form = record["form"]
    entry = lexicon.entries.get(form)
    if entry is None:
        entry, _ = lexicon.entry_or_generic(form)
        lexicon.entries[form] = entry
    for hypothesis in entry.pending:
        if (hypothesis.sentence == record["sentence"]
                and hypothesis.solution == record.get("solution")):
            return hypothesis
    hypothesis = PendingHypothesis(
        form=form, sentence=record["sentence"],
        solution=record.get("solution", 0), candidates=[])
    entry.pending.append(hypothesis)
    return hypothesis
