"""Typed feature structures: rooted attribute-value graphs with reentrancy.

Nodes carry a LeafSet type and named features; shared nodes encode
reentrancy.  Graphs are acyclic by contract.  Unification merges node
pairs destructively through forwarding pointers, so public entry points
work on copies and leave their inputs untouched.  String-valued atom
nodes (used for surface forms) unify only with equal atoms or with
bare, unconstrained nodes.

Lists use the ``first``/``rest`` encoding: a cons cell is typed
``nelist``, a closed end ``elist``, and an open tail carries the full
``list`` type with no features, so plain node unification extends and
closes lists with no special cases.

The text format is a conventional AVM notation::

    [phon: "Ohr", head: [noun, case: case, num: #1=sg],
     cont: [ind: [gend: neut, num: #1], gen: u_g, ctxt: ear]]

A bare type expression inside brackets types the node itself; ``#n=``
defines a reentrancy tag and ``#n`` refers back to it; lists are
written ``<a, b | _>`` with ``| _`` marking an open tail.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LexlearnError
from .typelattice import ASCII_OR, BOTTOM_SIGN, OR_SIGN, LeafSet, TypeHierarchy

LIST_TYPE = "list"
CONS_TYPE = "nelist"
NIL_TYPE = "elist"

FEATURE_ORDER = (
    "phon", "head", "cont", "arg-st", "ind", "gend", "num", "case",
    "prd", "mod_sem", "gen", "ctxt", "args", "loc", "first", "rest",
)
_FEATURE_RANK = {name: i for i, name in enumerate(FEATURE_ORDER)}


class AvmSyntaxError(LexlearnError):
    """Malformed AVM or path text; message carries line:column."""


class FsOperationError(LexlearnError):
    """A structural operation hit a contract violation (bad path, bottom type)."""


class UnificationFailure(Exception):
    """Internal signal: a merge produced bottom or would close a cycle."""


class Node:
    """One graph node: either typed (LeafSet + features) or a string atom."""

    __slots__ = ("typ", "atom", "feats", "_fwd")

    def __init__(self, typ: LeafSet | None = None, atom: str | None = None):
        self.typ = typ
        self.atom = atom
        self.feats: dict[str, "Node"] = {}
        self._fwd: "Node" | None = None

    def deref(self) -> "Node":
        node = self
        while node._fwd is not None:
            node = node._fwd
        if node is not self:
            self._fwd = node  # path compression
        return node

    def is_atom(self) -> bool:
        return self.atom is not None

    def __repr__(self) -> str:  # debugging aid only
        node = self.deref()
        if node.is_atom():
            return f"Node(atom={node.atom!r})"
        return f"Node(typ={node.typ}, feats={sorted(node.feats)})"


@dataclass
class FeatureStructure:
    """A rooted feature graph tied to the hierarchy its types live in."""

    root: Node
    hier: TypeHierarchy

    def resolve(self, path: "FeaturePath | str") -> Node | None:
        return resolve_path(self, path)


@dataclass(frozen=True)
class FeaturePath:
    """Dotted feature path with optional list indices: ``arg-st.args[1].loc``."""

    steps: tuple[str | int, ...]

    def __str__(self) -> str:
        out: list[str] = []
        for step in self.steps:
            if isinstance(step, int):
                out[-1] += f"[{step}]"
            else:
                out.append(step)
        return ".".join(out)

    def __add__(self, other: "FeaturePath") -> "FeaturePath":
        return FeaturePath(self.steps + other.steps)


_PATH_SEGMENT = re.compile(r"^([A-Za-z_][A-Za-z0-9_-]*)((?:\[\d+\])*)$")


def parse_path(text: str) -> FeaturePath:
    steps: list[str | int] = []
    if not text.strip():
        raise AvmSyntaxError("empty feature path")
    for segment in text.strip().split("."):
        m = _PATH_SEGMENT.match(segment)
        if not m:
            raise AvmSyntaxError(f"malformed path segment {segment!r}")
        steps.append(m.group(1))
        for idx in re.findall(r"\[(\d+)\]", m.group(2)):
            steps.append(int(idx))
    return FeaturePath(tuple(steps))


def _as_path(path: FeaturePath | str) -> FeaturePath:
    return path if isinstance(path, FeaturePath) else parse_path(path)


# ---------------------------------------------------------------------------
# structural access


def resolve_node(node: Node, path: FeaturePath | str) -> Node | None:
    """Follow features and list indices from ``node``; None if a step is missing."""
    current = node.deref()
    for step in _as_path(path).steps:
        if isinstance(step, str):
            child = current.feats.get(step)
            if child is None:
                return None
            current = child.deref()
        else:
            for _ in range(step):
                rest = current.feats.get("rest")
                if rest is None:
                    return None
                current = rest.deref()
            first = current.feats.get("first")
            if first is None:
                return None
            current = first.deref()
    return current


def resolve_path(fs: FeatureStructure, path: FeaturePath | str) -> Node | None:
    return resolve_node(fs.root, path)


def list_elements(node: Node) -> list[Node]:
    """Elements along a list spine, stopping at the first node without ``first``."""
    elements = []
    current = node.deref()
    while "first" in current.feats:
        elements.append(current.feats["first"].deref())
        rest = current.feats.get("rest")
        if rest is None:
            break
        current = rest.deref()
    return elements


def extend_node(node: Node, path: FeaturePath | str, default: LeafSet,
                hier: TypeHierarchy) -> Node:
    """Resolve ``path``, creating missing structure.

    New intermediate nodes are unconstrained (or list-typed along a list
    spine); the final node gets ``default`` as its type.  Extending a
    list walks open tails into fresh cons cells and fails on a closed
    tail.
    """
    steps = _as_path(path).steps
    cons = hier.denote(CONS_TYPE)
    open_list = hier.denote(LIST_TYPE)
    current = node.deref()
    for pos, step in enumerate(steps):
        last = pos == len(steps) - 1
        if current.is_atom():
            raise FsOperationError(f"cannot extend through atom at step {step!r}")
        if isinstance(step, str):
            child = current.feats.get(step)
            if child is None:
                nxt = steps[pos + 1] if not last else None
                if isinstance(nxt, int):
                    child = Node(typ=open_list)
                else:
                    child = Node(typ=default if last else hier.top)
                current.feats[step] = child
            current = child.deref()
        else:
            for hop in range(step + 1):
                target = "first" if hop == step else "rest"
                # materialize a cons cell if this spine node is still an open tail
                if "first" not in current.feats:
                    if current.is_atom() or not current.typ.overlaps(cons):
                        raise FsOperationError(
                            f"cannot extend past a closed list tail at index {step}")
                    current.typ = current.typ & cons
                    current.feats["first"] = Node(
                        typ=default if (last and target == "first") else hier.top)
                    current.feats["rest"] = Node(typ=open_list)
                current = current.feats[target].deref()
    return current


def extend_path(fs: FeatureStructure, path: FeaturePath | str,
                default: LeafSet) -> Node:
    return extend_node(fs.root, path, default, fs.hier)


def revise_type_at(fs: FeatureStructure, path: FeaturePath | str,
                   value: LeafSet) -> None:
    """Replace the type at ``path`` in place; reentrant views see the change."""
    if value.is_bottom():
        raise FsOperationError(f"refusing to revise {path} to {BOTTOM_SIGN}")
    node = resolve_path(fs, path)
    if node is None:
        raise FsOperationError(f"path {path} does not resolve")
    if node.is_atom():
        raise FsOperationError(f"path {path} names an atom, not a typed node")
    node.typ = value


# ---------------------------------------------------------------------------
# copying and unification


def copy_nodes(roots: list[Node]) -> dict[int, Node]:
    """Deep-copy the graph reachable from ``roots``; mapping preserves sharing."""
    mapping: dict[int, Node] = {}

    def visit(node: Node) -> Node:
        node = node.deref()
        found = mapping.get(id(node))
        if found is not None:
            return found
        fresh = Node(typ=node.typ, atom=node.atom)
        mapping[id(node)] = fresh
        for feat, child in node.feats.items():
            fresh.feats[feat] = visit(child)
        return fresh

    for root in roots:
        visit(root)
    return mapping


def copy_fs(fs: FeatureStructure) -> FeatureStructure:
    mapping = copy_nodes([fs.root])
    return FeatureStructure(mapping[id(fs.root.deref())], fs.hier)


def merge_nodes(a: Node, b: Node, top: LeafSet) -> None:
    """Destructively merge two nodes of one graph; raises UnificationFailure."""
    worklist = [(a, b)]
    while worklist:
        x, y = worklist.pop()
        x = x.deref()
        y = y.deref()
        if x is y:
            continue
        if x.is_atom() or y.is_atom():
            if x.is_atom() and y.is_atom():
                if x.atom != y.atom:
                    raise UnificationFailure(f"atoms {x.atom!r} vs {y.atom!r}")
                y._fwd = x
                continue
            atom, other = (x, y) if x.is_atom() else (y, x)
            if other.feats or other.typ != top:
                raise UnificationFailure("atom against constrained node")
            other._fwd = atom
            continue
        merged = x.typ & y.typ
        if merged.is_bottom():
            raise UnificationFailure("type clash")
        x.typ = merged
        y._fwd = x
        for feat, child in y.feats.items():
            mine = x.feats.get(feat)
            if mine is None:
                x.feats[feat] = child
            else:
                worklist.append((mine, child))


def constrain_node(node: Node, value: LeafSet) -> None:
    """Intersect a node's type with ``value``; raises on bottom."""
    node = node.deref()
    if node.is_atom():
        raise UnificationFailure("cannot type-constrain an atom")
    merged = node.typ & value
    if merged.is_bottom():
        raise UnificationFailure("type clash")
    node.typ = merged


def is_acyclic(roots: list[Node]) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[int, int] = {}

    def visit(node: Node) -> bool:
        node = node.deref()
        state = color.get(id(node), WHITE)
        if state == GRAY:
            return False
        if state == BLACK:
            return True
        color[id(node)] = GRAY
        for child in node.feats.values():
            if not visit(child):
                return False
        color[id(node)] = BLACK
        return True

    return all(visit(root) for root in roots)


def unify_fs(a: FeatureStructure, b: FeatureStructure) -> FeatureStructure | None:
    """Unify two feature structures on copies; None signals failure."""
    mapping_a = copy_nodes([a.root])
    mapping_b = copy_nodes([b.root])
    root_a = mapping_a[id(a.root.deref())]
    root_b = mapping_b[id(b.root.deref())]
    try:
        merge_nodes(root_a, root_b, a.hier.top)
    except UnificationFailure:
        return None
    if not is_acyclic([root_a]):
        return None
    return FeatureStructure(root_a, a.hier)


# ---------------------------------------------------------------------------
# text format


def _feature_sort_key(name: str) -> tuple[int, str]:
    return (_FEATURE_RANK.get(name, len(FEATURE_ORDER)), name)


def render_node(node: Node, hier: TypeHierarchy) -> str:
    """Canonical AVM text: fixed feature order, tags numbered in render order."""
    shared = _shared_nodes(node)
    tags: dict[int, int] = {}
    emitted: set[int] = set()

    def emit(current: Node) -> str:
        current = current.deref()
        key = id(current)
        if key in shared:
            if key in emitted:
                return f"#{tags[key]}"
            tags[key] = len(tags) + 1
            emitted.add(key)
            return f"#{tags[key]}={body(current)}"
        return body(current)

    def body(current: Node) -> str:
        if current.is_atom():
            return f'"{current.atom}"'
        if _renders_as_list(current, hier, shared):
            return render_list(current)
        parts: list[str] = []
        if current.typ != hier.top:
            parts.append(hier.display(current.typ))
        if not current.feats:
            return parts[0] if parts else "[]"
        for feat in sorted(current.feats, key=_feature_sort_key):
            parts.append(f"{feat}: {emit(current.feats[feat])}")
        return "[" + ", ".join(parts) + "]"

    def render_list(current: Node) -> str:
        elements: list[str] = []
        spine = current
        while "first" in spine.feats:
            elements.append(emit(spine.feats["first"]))
            spine = spine.feats["rest"].deref()
        closed = spine.typ == hier.denote(NIL_TYPE)
        inner = ", ".join(elements)
        if closed:
            return f"<{inner}>"
        return f"<{inner} | _>" if elements else "<|_>"

    return emit(node)


def _renders_as_list(node: Node, hier: TypeHierarchy, shared: set[int]) -> bool:
    if node.is_atom() or not hier.has_name(LIST_TYPE):
        return False
    if not node.typ or not node.typ <= hier.denote(LIST_TYPE):
        return False
    # fall back to raw first/rest features if any spine node is reentrant,
    # so tags stay expressible
    spine = node
    while "first" in spine.feats:
        if set(spine.feats) != {"first", "rest"}:
            return False
        rest = spine.feats["rest"].deref()
        if id(rest) in shared:
            return False
        spine = rest
    return not spine.feats


def _shared_nodes(root: Node) -> set[int]:
    seen: set[int] = set()
    shared: set[int] = set()

    def visit(node: Node) -> None:
        node = node.deref()
        if id(node) in seen:
            shared.add(id(node))
            return
        seen.add(id(node))
        for child in node.feats.values():
            visit(child)

    visit(root)
    return shared


def render_fs(fs: FeatureStructure) -> str:
    return render_node(fs.root, fs.hier)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"[^"\n]*")
  | (?P<tag>\#\d+)
  | (?P<or>∨|\\/)
  | (?P<name>[A-Za-z_][A-Za-z0-9_-]*|⊥)
  | (?P<punct>[\[\]<>,:=|_])
    """,
    re.VERBOSE,
)


class _AvmParser:
    def __init__(self, text: str, hier: TypeHierarchy):
        self.hier = hier
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise AvmSyntaxError(f"{self._where(pos)}: unexpected character {text[pos]!r}")
            pos = m.end()
            kind = m.lastgroup
            if kind != "ws":
                self.tokens.append((kind, m.group(), m.start()))
        self.cursor = 0
        self.tags: dict[int, Node] = {}

    def _where(self, pos: int) -> str:
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return f"{line}:{col}"

    def peek(self) -> tuple[str, str, int] | None:
        if self.cursor < len(self.tokens):
            return self.tokens[self.cursor]
        return None

    def next(self) -> tuple[str, str, int]:
        token = self.peek()
        if token is None:
            raise AvmSyntaxError("unexpected end of input")
        self.cursor += 1
        return token

    def expect(self, value: str) -> None:
        kind, text, pos = self.next()
        if text != value:
            raise AvmSyntaxError(f"{self._where(pos)}: expected {value!r}, found {text!r}")

    def at_end(self) -> bool:
        return self.cursor >= len(self.tokens)

    def parse_value(self) -> Node:
        kind, text, pos = self.next()
        if kind == "string":
            return Node(atom=text[1:-1])
        if kind == "tag":
            number = int(text[1:])
            nxt = self.peek()
            if nxt is not None and nxt[1] == "=":
                self.next()
                node = self.parse_value()
                if number in self.tags:
                    raise AvmSyntaxError(f"{self._where(pos)}: tag #{number} defined twice")
                self.tags[number] = node
                return node
            if number not in self.tags:
                raise AvmSyntaxError(
                    f"{self._where(pos)}: tag #{number} referenced before definition")
            return self.tags[number]
        if text == "[":
            return self.parse_avm()
        if text == "<":
            return self.parse_list()
        if kind == "name":
            return Node(typ=self.parse_type_expr(text, pos))
        raise AvmSyntaxError(f"{self._where(pos)}: unexpected {text!r}")

    def parse_type_expr(self, first: str, pos: int) -> LeafSet:
        value = self._denote(first, pos)
        while True:
            nxt = self.peek()
            if nxt is None or nxt[0] != "or":
                return value
            self.next()
            kind, text, pos = self.next()
            if kind != "name":
                raise AvmSyntaxError(f"{self._where(pos)}: expected type name after ∨")
            value = value | self._denote(text, pos)

    def _denote(self, name: str, pos: int) -> LeafSet:
        if name == BOTTOM_SIGN or name == "bottom":
            return LeafSet(0)
        try:
            return self.hier.denote(name)
        except LexlearnError:
            raise AvmSyntaxError(f"{self._where(pos)}: unknown type name {name!r}") from None

    def parse_avm(self) -> Node:
        node = Node(typ=self.hier.top)
        nxt = self.peek()
        if nxt is not None and nxt[1] == "]":
            self.next()
            return node
        while True:
            kind, text, pos = self.next()
            if kind != "name":
                raise AvmSyntaxError(f"{self._where(pos)}: expected feature or type, found {text!r}")
            nxt = self.peek()
            if nxt is not None and nxt[1] == ":":
                self.next()
                if text in node.feats:
                    raise AvmSyntaxError(f"{self._where(pos)}: duplicate feature {text!r}")
                node.feats[text] = self.parse_value()
            else:
                node.typ = node.typ & self.parse_type_expr(text, pos)
                if node.typ.is_bottom():
                    raise AvmSyntaxError(f"{self._where(pos)}: node typed {BOTTOM_SIGN}")
            kind, text, pos = self.next()
            if text == "]":
                return node
            if text != ",":
                raise AvmSyntaxError(f"{self._where(pos)}: expected ',' or ']', found {text!r}")

    def parse_list(self) -> Node:
        elements: list[Node] = []
        open_tail = False
        nxt = self.peek()
        if nxt is not None and nxt[1] == ">":
            self.next()
            return Node(typ=self.hier.denote(NIL_TYPE))
        while True:
            nxt = self.peek()
            if nxt is not None and nxt[1] == "|":
                self.next()
                self.expect("_")
                self.expect(">")
                open_tail = True
                break
            elements.append(self.parse_value())
            kind, text, pos = self.next()
            if text == ">":
                break
            if text == "|":
                self.expect("_")
                self.expect(">")
                open_tail = True
                break
            if text != ",":
                raise AvmSyntaxError(f"{self._where(pos)}: expected ',', '|' or '>' in list")
        tail_type = LIST_TYPE if open_tail else NIL_TYPE
        tail = Node(typ=self.hier.denote(tail_type))
        for element in reversed(elements):
            cell = Node(typ=self.hier.denote(CONS_TYPE))
            cell.feats["first"] = element
            cell.feats["rest"] = tail
            tail = cell
        return tail


def parse_fs(text: str, hier: TypeHierarchy) -> FeatureStructure:
    """Parse one AVM value; raises AvmSyntaxError with line:column context."""
    parser = _AvmParser(text, hier)
    node = parser.parse_value()
    if not parser.at_end():
        kind, tok, pos = parser.peek()
        raise AvmSyntaxError(f"{parser._where(pos)}: trailing input {tok!r}")
    if not is_acyclic([node]):
        raise AvmSyntaxError("feature structure is cyclic")
    return FeatureStructure(node, hier)
