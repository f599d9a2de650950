"""Sign geometry, generic unknown entries, revisability clauses, valence map.

All signs share one geometry.  ``head`` carries the part of speech as
its node type plus the head features; nouns keep their semantics under
``cont`` (``ind`` with ``gend``/``num``, plus the ``gen``/``ctxt``
pair); verbs keep valence bookkeeping under ``arg-st`` with an open
``args`` list whose elements look like ``[loc: [cont: [gen, ctxt]],
case]``.  The leading sign-internal prefix found in full grammars is
flattened away.

Revisable slots come in two flavours.  ``gen`` slots always contain the
``u_g`` marker and only ever grow (by type union after parsing).
Specializable slots of acquired entries carry the ``u_s`` marker; the
marker makes them eligible for narrowing and persists across updates,
while hand-authored entries lack it and are never specialized.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from . import fstruct
from .errors import LexlearnError
from .fstruct import FeaturePath, FeatureStructure, Node, parse_fs, parse_path
from .typelattice import LeafSet, TypeHierarchy

if TYPE_CHECKING:  # pragma: no cover
    from .revision import PendingHypothesis

POS_NOUN = "noun"
POS_ADJ = "adj"
POS_DET = "det"
POS_MAIN_VERB = "vmain"
POS_COPULA = "cop"
VERB_TYPE = "verb"

GENERIC_DISJUNCT_ORDER = ("noun", "adj", "verb")


class GrammarError(LexlearnError):
    """Grammar-level contract violation (bad clause file, unmapped frame)."""


@dataclass
class RevisabilityClause:
    """Grammar-declared pattern locating revisable slots in word signs.

    ``scope`` is None for whole-sign anchors; otherwise it names a list
    whose elements are matched one by one against the anchor pattern.
    """

    name: str
    kind: str  # "generalizable" | "specializable"
    anchor: FeatureStructure
    scope: FeaturePath | None = None
    gen_path: FeaturePath | None = None
    ctxt_path: FeaturePath | None = None
    spec_path: FeaturePath | None = None

    def validate(self) -> None:
        paths = ((self.gen_path, self.ctxt_path) if self.kind == "generalizable"
                 else (self.spec_path,))
        for path in paths:
            if path is None:
                raise GrammarError(f"clause {self.name}: missing access path")
            if fstruct.resolve_path(self.anchor, path) is None:
                raise GrammarError(
                    f"clause {self.name}: path {path} does not resolve in anchor")


@dataclass
class LexicalEntry:
    """Full-form keyed entry: an explicit list of disjunct signs."""

    form: str
    disjuncts: list[FeatureStructure]
    origin: str = "known"  # "known" | "acquired"
    pending: list["PendingHypothesis"] = field(default_factory=list)

    def copy(self) -> "LexicalEntry":
        return LexicalEntry(
            form=self.form,
            disjuncts=[fstruct.copy_fs(d) for d in self.disjuncts],
            origin=self.origin,
            pending=list(self.pending),
        )


@dataclass(frozen=True)
class SnapshotSlot:
    """One line of the abbreviated entry view used by reports and diffs."""

    name: str
    value: LeafSet
    shown: str


_CLAUSE_HEAD_RE = re.compile(
    r"^clause\s+(?P<name>[\w-]+)\s+(?P<kind>generalizable|specializable)\s+anchor\s*",
    re.DOTALL,
)


def _balanced_avm(text: str, lineno: int) -> tuple[str, str]:
    """Split off a leading bracket-balanced AVM from ``text``."""
    if not text.startswith("["):
        raise GrammarError(f"line {lineno}: expected '[' to open an anchor pattern")
    depth = 0
    for i, ch in enumerate(text):
        if ch in "[<":
            depth += 1
        elif ch in "]>":
            depth -= 1
            if depth == 0:
                return text[: i + 1], text[i + 1:]
    raise GrammarError(f"line {lineno}: unbalanced brackets in anchor pattern")


def load_clauses(text: str, hier: TypeHierarchy) -> list[RevisabilityClause]:
    """Parse a clause declaration file (one ``clause ... .`` per statement)."""
    clauses: list[RevisabilityClause] = []
    names: set[str] = set()
    for statement, lineno in _statements(text):
        head = _CLAUSE_HEAD_RE.match(statement)
        if not head:
            raise GrammarError(f"line {lineno}: malformed clause declaration")
        anchor_text, rest = _balanced_avm(statement[head.end():], lineno)
        anchor = parse_fs(anchor_text, hier)
        scope: FeaturePath | None = None
        fields = rest.rstrip(". \t\n").split()
        if fields[:2] == ["scope", "each"]:
            if len(fields) < 3:
                raise GrammarError(f"line {lineno}: scope needs a list path")
            scope = parse_path(fields[2])
            fields = fields[3:]
        paths: dict[str, FeaturePath] = {}
        for assignment in fields:
            if "=" not in assignment:
                raise GrammarError(
                    f"line {lineno}: expected key=path, found {assignment!r}")
            key, value = assignment.split("=", 1)
            if key not in ("gen", "ctxt", "spec"):
                raise GrammarError(f"line {lineno}: unknown path key {key!r}")
            paths[key] = parse_path(value)
        name = head.group("name")
        if name in names:
            raise GrammarError(f"line {lineno}: duplicate clause name {name!r}")
        names.add(name)
        clause = RevisabilityClause(
            name=name,
            kind=head.group("kind"),
            anchor=anchor,
            scope=scope,
            gen_path=paths.get("gen"),
            ctxt_path=paths.get("ctxt"),
            spec_path=paths.get("spec"),
        )
        clause.validate()
        clauses.append(clause)
    return clauses


def _statements(text: str):
    """Split a file into '.'-terminated statements, honouring strings/brackets.

    A ``#`` outside a string starts a comment unless a digit follows (that
    is a reentrancy tag).
    """
    statement: list[str] = []
    depth = 0
    in_string = False
    in_comment = False
    start_line = 1
    line = 1
    for i, ch in enumerate(text):
        if ch == "\n":
            line += 1
            in_comment = False
        if in_comment:
            continue
        if in_string:
            statement.append(ch)
            if ch == '"':
                in_string = False
            continue
        if ch == "#" and not (i + 1 < len(text) and text[i + 1].isdigit()):
            in_comment = True
            continue
        if not statement:
            if ch.isspace():
                continue
            start_line = line
        statement.append(ch)
        if ch == '"':
            in_string = True
        elif ch in "[<":
            depth += 1
        elif ch in "]>":
            depth -= 1
        elif ch == "." and depth == 0:
            chunk = "".join(statement).strip()
            if chunk != ".":
                yield chunk, start_line
            statement = []
            start_line = line
    tail = "".join(statement).strip()
    if tail:
        raise GrammarError(f"line {start_line}: unterminated statement (missing '.')")


class Grammar:
    """Demo grammar: geometry constructors, valence mapping, entry snapshots."""

    def __init__(self, hier: TypeHierarchy, clauses: list[RevisabilityClause]):
        self.hier = hier
        self.clauses = clauses
        h = hier
        self.noun = h.denote(POS_NOUN)
        self.adj = h.denote(POS_ADJ)
        self.det = h.denote(POS_DET)
        self.main_verb = h.denote(POS_MAIN_VERB)
        self.copula = h.denote(POS_COPULA)
        self.verb = h.denote(VERB_TYPE)
        self.attr = h.denote("attr")
        self.pred = h.denote("pred")
        self.nom = h.denote("nom")
        self.obj_case = h.denote("acc") | h.denote("dat")
        self.valence_rules: dict[tuple[str, ...], LeafSet] = {
            ("nom",): h.denote("npnom"),
            ("nom", "acc"): h.denote("npnom_npacc"),
            ("nom", "dat"): h.denote("npnom_npdat"),
        }

    # -- generic entries ----------------------------------------------------

    def generic_unknown_entry(self, form: str) -> LexicalEntry:
        """Maximally underspecified noun/adjective/verb disjunction."""
        if not form:
            raise GrammarError("generic entry needs a nonempty form")
        h = self.hier
        noun = parse_fs(
            "[head: [noun, case: case, num: #1=num],"
            " cont: [ind: [gend: u_s\\/gender, num: #1], gen: u_g, ctxt: u_s\\/nom_sem]]",
            h)
        adj = parse_fs(
            "[head: [adj, prd: [gen: u_g, ctxt: prd], mod_sem: nom_sem]]", h)
        verb = parse_fs(
            "[head: [vmain], arg-st: [gen: u_g, ctxt: arg_struc, args: <|_>]]", h)
        disjuncts = [noun, adj, verb]
        for d in disjuncts:
            d.root.feats["phon"] = Node(atom=form)
        return LexicalEntry(form=form, disjuncts=disjuncts, origin="acquired")

    def args_element_skeleton(self) -> FeatureStructure:
        """Lexical shape of one argument slot, with slot defaults filled in."""
        return parse_fs("[loc: [cont: [gen: u_g, ctxt: nom_sem]], case: case]",
                        self.hier)

    # -- classification -----------------------------------------------------

    def pos_of(self, sign: FeatureStructure | Node) -> str | None:
        """Part of speech read off the head type; None for unheaded signs."""
        root = sign.root if isinstance(sign, FeatureStructure) else sign
        head = fstruct.resolve_node(root, "head")
        if head is None or head.is_atom():
            return None
        for name, mask in ((POS_NOUN, self.noun), (POS_ADJ, self.adj),
                           (POS_DET, self.det), (POS_MAIN_VERB, self.main_verb),
                           (POS_COPULA, self.copula)):
            if head.typ <= mask:
                return name
        return None

    # -- valence ------------------------------------------------------------

    def valence_type_of(self, cases: Sequence[str]) -> LeafSet:
        """Map an instantiated argument frame to its valence type leaf."""
        frame = tuple(cases)
        value = self.valence_rules.get(frame)
        if value is None:
            raise GrammarError(f"no valence type for argument frame {frame!r}")
        return value

    # -- snapshot view ------------------------------------------------------

    def entry_snapshot(self, sign: FeatureStructure) -> list[SnapshotSlot]:
        """Abbreviated slot view of one disjunct, marker ``u_s`` suppressed."""
        pos = self.pos_of(sign)
        slots: list[tuple[str, str]] = []
        if pos == POS_NOUN:
            slots = [("gend", "cont.ind.gend"), ("gen", "cont.gen"),
                     ("ctxt", "cont.ctxt")]
        elif pos in (POS_MAIN_VERB, POS_COPULA):
            slots = [("gen", "arg-st.gen"), ("ctxt", "arg-st.ctxt")]
            args = fstruct.resolve_path(sign, "arg-st.args")
            count = len(fstruct.list_elements(args)) if args is not None else 0
            for k in range(count):
                slots.append((f"args[{k}].gen", f"arg-st.args[{k}].loc.cont.gen"))
                slots.append((f"args[{k}].ctxt", f"arg-st.args[{k}].loc.cont.ctxt"))
        elif pos == POS_ADJ:
            slots = [("prd.gen", "head.prd.gen"), ("prd.ctxt", "head.prd.ctxt"),
                     ("mod_sem", "head.mod_sem")]
        elif pos == POS_DET:
            slots = [("gend", "head.gend"), ("num", "head.num"),
                     ("case", "head.case")]
        out: list[SnapshotSlot] = []
        for name, path in slots:
            node = fstruct.resolve_path(sign, path)
            if node is None or node.is_atom():
                continue
            out.append(SnapshotSlot(name, node.typ, self.display_value(node.typ)))
        return out

    def display_value(self, value: LeafSet) -> str:
        """Display with the specializable marker hidden (it is bookkeeping)."""
        stripped = value.minus(self.hier.u_s)
        return self.hier.display(stripped if stripped else value)

    def slot_default(self, slot_name: str) -> LeafSet | None:
        """Default value a snapshot slot takes when first materialized."""
        if slot_name.endswith(".gen"):
            return self.hier.u_g
        if slot_name.endswith(".ctxt"):
            return self.hier.denote("nom_sem")
        return None

    # -- gen-slot scan ------------------------------------------------------

    def gen_slots_of(self, sign: FeatureStructure) -> list[tuple[str, LeafSet]]:
        """All ``gen`` feature values in a sign, with their paths."""
        found: list[tuple[str, LeafSet]] = []
        seen: set[int] = set()

        def visit(node: Node, path: str) -> None:
            node = node.deref()
            if id(node) in seen or node.is_atom():
                return
            seen.add(id(node))
            for feat, child in node.feats.items():
                child = child.deref()
                sub = f"{path}.{feat}" if path else feat
                if feat == "gen" and not child.is_atom():
                    found.append((sub, child.typ))
                visit(child, sub)

        visit(sign.root, "")
        return found


def ensure_slot(fs: FeatureStructure, path: "str | FeaturePath",
                grammar: Grammar) -> Node:
    """Resolve ``path`` in a lexical sign, materializing argument slots.

    Missing list elements are filled with the grammar's argument-slot
    skeleton so sibling slots get their declared defaults; other missing
    structure is created unconstrained.
    """
    steps = parse_path(path).steps if isinstance(path, str) else path.steps
    h = grammar.hier
    cons = h.denote(fstruct.CONS_TYPE)
    open_list = h.denote(fstruct.LIST_TYPE)
    current = fs.root.deref()
    for pos, step in enumerate(steps):
        last = pos == len(steps) - 1
        if current.is_atom():
            raise GrammarError(f"cannot extend through atom at step {step!r}")
        if isinstance(step, str):
            child = current.feats.get(step)
            if child is None:
                nxt = steps[pos + 1] if not last else None
                child = Node(typ=open_list if isinstance(nxt, int) else h.top)
                current.feats[step] = child
            current = child.deref()
        else:
            for hop in range(step + 1):
                target = "first" if hop == step else "rest"
                if "first" not in current.feats:
                    if current.is_atom() or not current.typ.overlaps(cons):
                        raise GrammarError(
                            f"cannot extend past a closed list tail at index {step}")
                    current.typ = current.typ & cons
                    current.feats["first"] = grammar.args_element_skeleton().root
                    current.feats["rest"] = Node(typ=open_list)
                current = current.feats[target].deref()
    return current
