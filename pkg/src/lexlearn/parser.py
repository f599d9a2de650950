"""Tokenizer and bottom-up chart parser for simplex sentences.

The rule inventory is the smallest one covering canonical German main
clauses of the demo corpus:

* DET + N -> NP: determiner and noun agree in case, number and gender.
* ADJ + N -> N: attributive use; the adjective's usage slot is unified
  with ``attr`` and its selectional slot with the noun's semantic type.
* V + NP -> VP: transitive verb takes an acc/dat object coindexed with
  the second argument slot.
* COP + NP / COP + ADJ -> VP: predicative complement; its semantic type
  (or the adjective's selectional slot) is unified into the subject
  argument slot, and a predicative adjective must allow ``pred`` usage.
* NP + VP -> S: nominative subject coindexed with the first argument
  slot; on completion the instantiated argument frame is mapped to a
  valence type which is unified into the verb's ``arg-st.ctxt``.

Verbs are not required to saturate argument slots that happen to sit in
their lexical entry: only slots actually bound by a rule count towards
the valence frame, and the solution records which slots those were.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import fstruct
from .errors import LexlearnError
from .fstruct import (FeatureStructure, Node, UnificationFailure, constrain_node,
                      copy_nodes, is_acyclic, list_elements, merge_nodes,
                      resolve_node)
from .grammar import (POS_ADJ, POS_COPULA, POS_DET, POS_MAIN_VERB, POS_NOUN,
                      Grammar)

MAX_EDGES = 10_000

TERMINAL_PUNCT = ".!?"


class SentenceError(LexlearnError):
    """The input contains no parseable tokens."""


class ChartOverflow(LexlearnError):
    """The chart exceeded its hard edge cap; almost certainly a grammar bug."""


@dataclass(frozen=True)
class Token:
    text: str
    pos: int


@dataclass
class ParseSolution:
    """One complete analysis: root sign plus per-token projections.

    ``projections`` maps token positions to the fully instantiated sign
    of that word inside this solution's graph, together with the index
    of the lexical disjunct it came from.  ``bound_args`` records, per
    verb position, which argument slots the rules actually bound.
    """

    root: FeatureStructure
    tokens: list[Token]
    projections: dict[int, tuple[Node, int]]
    bound_args: dict[int, frozenset[int]] = field(default_factory=dict)


def tokenize(sentence: str) -> list[Token]:
    """Whitespace tokenization; sentence-final punctuation is stripped."""
    if not sentence.strip():
        raise SentenceError("empty sentence")
    words = sentence.split()
    words[-1] = words[-1].rstrip(TERMINAL_PUNCT)
    if not words[-1]:
        words.pop()
    if not words:
        raise SentenceError("sentence contains no words")
    return [Token(text, i) for i, text in enumerate(words)]


@dataclass
class _Edge:
    cat: str
    start: int
    end: int
    root: Node
    words: dict[int, tuple[Node, int]]
    bound: dict[int, frozenset[int]]
    verb_pos: int | None = None


_LEX_CATS = {
    POS_NOUN: "N",
    POS_ADJ: "ADJ",
    POS_DET: "DET",
    POS_MAIN_VERB: "V",
    POS_COPULA: "COP",
}


class _Chart:
    def __init__(self, tokens: list[Token], lexicon, grammar: Grammar):
        self.tokens = tokens
        self.grammar = grammar
        self.hier = grammar.hier
        self.lexicon = lexicon
        self.cells: dict[tuple[int, int], list[_Edge]] = {}
        self.edge_count = 0

    def add(self, edge: _Edge) -> None:
        self.edge_count += 1
        if self.edge_count > MAX_EDGES:
            raise ChartOverflow(f"chart exceeded {MAX_EDGES} edges")
        self.cells.setdefault((edge.start, edge.end), []).append(edge)
        if edge.cat == "V":
            # unary promotion: a bare main verb is a complete VP
            self.add(_Edge("VP", edge.start, edge.end, edge.root, edge.words,
                           edge.bound, edge.verb_pos))

    def run(self) -> list[ParseSolution]:
        n = len(self.tokens)
        for token in self.tokens:
            for disjunct, sign in enumerate(self.lexicon.lookup(token.text)):
                pos = self.grammar.pos_of(sign)
                cat = _LEX_CATS.get(pos) if pos else None
                if cat is None:
                    continue
                bound = {token.pos: frozenset()} if cat in ("V", "COP") else {}
                verb_pos = token.pos if cat in ("V", "COP") else None
                self.add(_Edge(cat, token.pos, token.pos + 1, sign.root,
                               {token.pos: (sign.root, disjunct)}, bound, verb_pos))
        for length in range(2, n + 1):
            for start in range(0, n - length + 1):
                end = start + length
                for split in range(start + 1, end):
                    for left in self.cells.get((start, split), []):
                        for right in self.cells.get((split, end), []):
                            self.combine(left, right)
        return [
            ParseSolution(
                root=FeatureStructure(edge.root, self.hier),
                tokens=self.tokens,
                projections=edge.words,
                bound_args=edge.bound,
            )
            for edge in self.cells.get((0, n), [])
            if edge.cat == "S"
        ]

    # -- combination ---------------------------------------------------------

    def combine(self, left: _Edge, right: _Edge) -> None:
        rule = _RULES.get((left.cat, right.cat))
        if rule is None:
            return
        lroot, rroot, words, bound = self._copy_pair(left, right)
        try:
            result = rule(self, lroot, rroot, bound,
                          left.verb_pos if left.verb_pos is not None else right.verb_pos)
        except UnificationFailure:
            return
        if result is None:
            return
        cat, root, verb_pos = result
        if not is_acyclic([node for node, _ in words.values()]):
            return
        self.add(_Edge(cat, left.start, right.end, root, words, bound, verb_pos))

    def _copy_pair(self, left: _Edge, right: _Edge):
        roots: list[Node] = []
        for edge in (left, right):
            roots.append(edge.root)
            roots.extend(node for node, _ in edge.words.values())
        mapping = copy_nodes(roots)
        words: dict[int, tuple[Node, int]] = {}
        bound: dict[int, frozenset[int]] = {}
        for edge in (left, right):
            for pos, (node, disjunct) in edge.words.items():
                words[pos] = (mapping[id(node.deref())], disjunct)
            bound.update(edge.bound)
        return (mapping[id(left.root.deref())], mapping[id(right.root.deref())],
                words, bound)

    def _need(self, node: Node, path: str) -> Node:
        found = resolve_node(node, path)
        if found is None:
            raise UnificationFailure(f"missing {path}")
        return found

    def _bind_arg(self, verb: Node, index: int, np: Node) -> None:
        top = self.hier.top
        slot_cont = fstruct.extend_node(verb, f"arg-st.args[{index}].loc.cont",
                                        top, self.hier)
        merge_nodes(slot_cont, self._need(np, "cont"), top)
        slot_case = fstruct.extend_node(verb, f"arg-st.args[{index}].case",
                                        top, self.hier)
        merge_nodes(slot_case, self._need(np, "head.case"), top)

    # -- rules ---------------------------------------------------------------

    def rule_np(self, det: Node, noun: Node, bound, verb_pos):
        top = self.hier.top
        merge_nodes(self._need(det, "head.case"), self._need(noun, "head.case"), top)
        merge_nodes(self._need(det, "head.num"), self._need(noun, "head.num"), top)
        merge_nodes(self._need(det, "head.gend"),
                    self._need(noun, "cont.ind.gend"), top)
        return ("NP", noun, None)

    def rule_nbar(self, adj: Node, noun: Node, bound, verb_pos):
        constrain_node(self._need(adj, "head.prd.ctxt"), self.grammar.attr)
        merge_nodes(self._need(adj, "head.mod_sem"),
                    self._need(noun, "cont.ctxt"), self.hier.top)
        return ("N", noun, None)

    def rule_vp_trans(self, verb: Node, np: Node, bound, verb_pos):
        constrain_node(self._need(np, "head.case"), self.grammar.obj_case)
        self._bind_arg(verb, 1, np)
        bound[verb_pos] = bound[verb_pos] | {1}
        return ("VP", verb, verb_pos)

    def rule_vp_copula_np(self, cop: Node, np: Node, bound, verb_pos):
        constrain_node(self._need(np, "head.case"), self.grammar.nom)
        merge_nodes(self._need(cop, "arg-st.args[0].loc.cont.ctxt"),
                    self._need(np, "cont.ctxt"), self.hier.top)
        return ("VP", cop, verb_pos)

    def rule_vp_copula_adj(self, cop: Node, adj: Node, bound, verb_pos):
        constrain_node(self._need(adj, "head.prd.ctxt"), self.grammar.pred)
        merge_nodes(self._need(cop, "arg-st.args[0].loc.cont.ctxt"),
                    self._need(adj, "head.mod_sem"), self.hier.top)
        return ("VP", cop, verb_pos)

    def rule_s(self, np: Node, vp: Node, bound, verb_pos):
        constrain_node(self._need(np, "head.case"), self.grammar.nom)
        self._bind_arg(vp, 0, np)
        bound[verb_pos] = bound[verb_pos] | {0}
        if not self._complete_valence(vp, bound[verb_pos]):
            return None
        return ("S", vp, verb_pos)

    def _complete_valence(self, verb: Node, indices: frozenset[int]) -> bool:
        """Map the bound argument frame to a valence type; False discards."""
        frame: list[str] = []
        for index in sorted(indices):
            case = resolve_node(verb, f"arg-st.args[{index}].case")
            if case is None or case.is_atom():
                return False
            names = self.hier.leaf_names(case.typ)
            if len(names) != 1:
                return False
            frame.append(names[0])
        value = self.grammar.valence_rules.get(tuple(frame))
        if value is None:
            return False
        try:
            constrain_node(self._need(verb, "arg-st.ctxt"), value)
        except UnificationFailure:
            return False
        return True


_RULES = {
    ("DET", "N"): _Chart.rule_np,
    ("ADJ", "N"): _Chart.rule_nbar,
    ("V", "NP"): _Chart.rule_vp_trans,
    ("COP", "NP"): _Chart.rule_vp_copula_np,
    ("COP", "ADJ"): _Chart.rule_vp_copula_adj,
    ("NP", "VP"): _Chart.rule_s,
}


def parse(tokens: list[Token], lexicon, grammar: Grammar) -> list[ParseSolution]:
    """Exhaustive chart parse; an empty result means the input is ungrammatical."""
    return _Chart(tokens, lexicon, grammar).run()
