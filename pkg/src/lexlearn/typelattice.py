"""Closed-world type lattice over a finite leaf alphabet.

Every type denotes a set of leaf types.  Unifying two types intersects
their denotations, taking the union generalizes them, and subsumption is
set inclusion.  The empty set plays the role of bottom: it is a value,
not an error, and callers decide whether it means failure.

Two leaf names are reserved as revisability markers: ``u_g`` flags a
generalizable slot whose value must stay unifiable with anything, and
``u_s`` flags a specializable slot that is still open to narrowing.
Declared content types may not include either marker.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import LexlearnError

OR_SIGN = "∨"
ASCII_OR = "\\/"
BOTTOM_SIGN = "⊥"

MARKER_GEN = "u_g"
MARKER_SPEC = "u_s"


class HierarchyError(LexlearnError):
    """Raised for malformed hierarchy declarations; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True, slots=True)
class LeafSet:
    """Canonical denotation of a type expression: a bit set of leaf indices."""

    mask: int

    def __bool__(self) -> bool:
        return self.mask != 0

    def is_bottom(self) -> bool:
        return self.mask == 0

    def __and__(self, other: "LeafSet") -> "LeafSet":
        return LeafSet(self.mask & other.mask)

    def __or__(self, other: "LeafSet") -> "LeafSet":
        return LeafSet(self.mask | other.mask)

    def minus(self, other: "LeafSet") -> "LeafSet":
        return LeafSet(self.mask & ~other.mask)

    def __le__(self, other: "LeafSet") -> bool:
        return self.mask & ~other.mask == 0

    def __lt__(self, other: "LeafSet") -> bool:
        return self <= other and self.mask != other.mask

    def overlaps(self, other: "LeafSet") -> bool:
        return self.mask & other.mask != 0

    def indices(self) -> Iterator[int]:
        mask = self.mask
        i = 0
        while mask:
            if mask & 1:
                yield i
            mask >>= 1
            i += 1

    def size(self) -> int:
        return bin(self.mask).count("1")


BOTTOM = LeafSet(0)


class TypeHierarchy:
    """Immutable closed-world hierarchy: a leaf alphabet plus named unions."""

    def __init__(self, leaves: Iterable[str], named: dict[str, LeafSet]):
        self.leaves: tuple[str, ...] = tuple(leaves)
        self._index = {name: i for i, name in enumerate(self.leaves)}
        self.named = dict(named)
        self.top = LeafSet((1 << len(self.leaves)) - 1)
        self.u_g = self.leaf(MARKER_GEN) if MARKER_GEN in self._index else BOTTOM
        self.u_s = self.leaf(MARKER_SPEC) if MARKER_SPEC in self._index else BOTTOM
        self.markers = self.u_g | self.u_s

    def leaf(self, name: str) -> LeafSet:
        return LeafSet(1 << self._index[name])

    def has_name(self, name: str) -> bool:
        return name in self._index or name in self.named

    def denote(self, name: str) -> LeafSet:
        """Denotation of a leaf or declared type name."""
        if name in self.named:
            return self.named[name]
        if name in self._index:
            return self.leaf(name)
        raise HierarchyError(f"unknown type name {name!r}")

    def leaf_names(self, s: LeafSet) -> list[str]:
        return [self.leaves[i] for i in s.indices()]

    def strip_markers(self, s: LeafSet) -> LeafSet:
        return s.minus(self.markers)

    def parse_expr(self, text: str) -> LeafSet:
        """Parse a type expression: names joined by ``∨`` (or ASCII ``\\/``)."""
        text = text.replace(ASCII_OR, OR_SIGN).strip()
        if text in (BOTTOM_SIGN, "bottom"):
            return BOTTOM
        result = BOTTOM
        for part in text.split(OR_SIGN):
            result = result | self.denote(part.strip())
        return result

    def display(self, s: LeafSet) -> str:
        """Render a LeafSet as a type expression.

        A set matching a declared name (or single leaf) exactly is shown
        by that name.  Otherwise the marker leaves come first, followed
        by a greedy exact cover of the content part: repeatedly the
        largest name whose denotation fits inside what is still
        uncovered, ties broken lexicographically.
        """
        if s.is_bottom():
            return BOTTOM_SIGN
        exact = sorted(n for n in self._all_names() if self.denote(n) == s)
        if exact:
            return exact[0]
        parts: list[str] = []
        rest = s
        for marker in (MARKER_GEN, MARKER_SPEC):
            if marker in self._index and self.leaf(marker) <= rest:
                parts.append(marker)
                rest = rest.minus(self.leaf(marker))
        while rest:
            best: tuple[int, str] | None = None
            for name in self._all_names():
                d = self.denote(name)
                if d and d <= rest:
                    key = (-d.size(), name)
                    if best is None or key < best:
                        best = key
            if best is None:  # cannot happen: every leaf is a name
                raise HierarchyError(f"no cover for leaf set {self.leaf_names(rest)}")
            parts.append(best[1])
            rest = rest.minus(self.denote(best[1]))
        return OR_SIGN.join(parts)

    def _all_names(self) -> Iterator[str]:
        yield from self.named
        yield from self.leaves


def unify_types(a: LeafSet, b: LeafSet) -> LeafSet:
    """Greatest lower bound: intersection; empty result means failure."""
    return a & b


def union_types(a: LeafSet, b: LeafSet) -> LeafSet:
    """Least upper bound: set union."""
    return a | b


def subsumes(a: LeafSet, b: LeafSet, strict: bool = False) -> bool:
    """True iff ``b`` fits inside ``a`` (strictly, if requested)."""
    if strict:
        return b < a
    return b <= a


def load_hierarchy(text: str) -> TypeHierarchy:
    """Load a hierarchy declaration file.

    Syntax, one declaration per line:

        leaf <name>+
        type <name> = <operand> ( '|' <operand> )*
        # comment

    Operands may refer to names declared later in the file; references
    are resolved in a second pass and must be acyclic.
    """
    leaves: list[str] = []
    decls: dict[str, tuple[list[str], int]] = {}
    seen_leaves: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "leaf":
            if len(fields) < 2:
                raise HierarchyError("leaf declaration needs at least one name", lineno)
            for name in fields[1:]:
                if name in seen_leaves or name in decls:
                    raise HierarchyError(f"duplicate name {name!r}", lineno)
                seen_leaves.add(name)
                leaves.append(name)
        elif fields[0] == "type":
            rest = line[len("type"):].strip()
            if "=" not in rest:
                raise HierarchyError("type declaration needs '='", lineno)
            name, rhs = (part.strip() for part in rest.split("=", 1))
            if not name or any(ch.isspace() for ch in name):
                raise HierarchyError("malformed type name", lineno)
            if name in decls or name in seen_leaves:
                raise HierarchyError(f"duplicate name {name!r}", lineno)
            operands = [op.strip() for op in rhs.split("|")]
            if not all(operands):
                raise HierarchyError("empty operand in type declaration", lineno)
            decls[name] = (operands, lineno)
        else:
            raise HierarchyError(f"unknown declaration {fields[0]!r}", lineno)

    index = {name: i for i, name in enumerate(leaves)}
    resolved: dict[str, LeafSet] = {}
    resolving: list[str] = []

    def resolve(name: str, at_line: int) -> LeafSet:
        if name in index:
            return LeafSet(1 << index[name])
        if name in resolved:
            return resolved[name]
        if name not in decls:
            raise HierarchyError(f"unknown name {name!r}", at_line)
        if name in resolving:
            raise HierarchyError(f"cyclic definition of {name!r}", decls[name][1])
        operands, lineno = decls[name]
        resolving.append(name)
        value = BOTTOM
        for op in operands:
            value = value | resolve(op, lineno)
        resolving.pop()
        if value.is_bottom():
            raise HierarchyError(f"type {name!r} denotes the empty set", lineno)
        resolved[name] = value
        return value

    for name in decls:
        resolve(name, decls[name][1])

    hierarchy = TypeHierarchy(leaves, resolved)
    for marker in (MARKER_GEN, MARKER_SPEC):
        if marker in index:
            mset = LeafSet(1 << index[marker])
            for name, value in resolved.items():
                if mset <= value:
                    raise HierarchyError(
                        f"content type {name!r} must not include marker {marker!r}",
                        decls[name][1],
                    )
    return hierarchy
