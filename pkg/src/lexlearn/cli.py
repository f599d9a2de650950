"""Command-line front end.

Subcommands: ``process`` one sentence, ``batch`` a file of sentences,
``show`` an entry, ``diff`` the last recorded change of a form,
``pending`` hypotheses, ``demo`` (the three walkthrough sentences with
entry snapshots), and ``check`` (validate the configured files).

Exit codes: 0 on success, 1 when ``process`` finds no parse, 2 for
configuration or file errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import lexstore
from .errors import ConfigError, LexlearnError
from .grammar import Grammar, LexicalEntry, load_clauses
from .lexstore import Lexicon, append_audit, load_lexicon, read_audit
from .revision import AcquisitionEngine, UpdateReport
from .typelattice import load_hierarchy

ENV_CONFIG = "LEXLEARN_CONFIG"
DEFAULT_STORE = "lexlearn.store"

DEMO_SENTENCES = (
    "Die Nase ist ein Sinnesorgan.",
    "Das Ohr perzipiert.",
    "Eine verschnupfte Nase perzipiert den Gestank.",
)
DEMO_WORDS = ("Nase", "perzipiert")


@dataclass
class Config:
    types: str | None = None
    clauses: str | None = None
    lexicon: str | None = None
    store: str = DEFAULT_STORE

    def audit_path(self) -> str:
        return self.store + ".audit.jsonl"


def _data_text(name: str) -> str:
    return resources.files("lexlearn").joinpath(f"data/{name}").read_text("utf-8")


def default_types_text() -> str:
    return _data_text("types.lat")


def default_clauses_text() -> str:
    return _data_text("clauses.rvc")


def default_lexicon_text() -> str:
    return _data_text("lexicon.lex")


def default_script_text() -> str:
    return _data_text("demo_script.txt")


def load_config(args: argparse.Namespace) -> Config:
    config = Config()
    env_path = os.environ.get(ENV_CONFIG)
    if env_path:
        try:
            text = Path(env_path).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read {ENV_CONFIG} file: {err}") from err
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{env_path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in ("types", "clauses", "lexicon", "store"):
                raise ConfigError(f"{env_path}:{lineno}: unknown key {key!r}")
            setattr(config, key, value)
    for key in ("types", "clauses", "lexicon", "store"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    return config


def build_grammar(config: Config) -> Grammar:
    def read(path: str | None, fallback, label: str) -> str:
        if path is None:
            return fallback()
        try:
            return Path(path).read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read {label} file {path}: {err}") from err

    hier = load_hierarchy(read(config.types, default_types_text, "type hierarchy"))
    clauses = load_clauses(read(config.clauses, default_clauses_text, "clause"), hier)
    return Grammar(hier, clauses)


def build_engine(config: Config, use_store: bool = True) -> AcquisitionEngine:
    grammar = build_grammar(config)
    if use_store and config.store and Path(config.store).exists():
        text = Path(config.store).read_text(encoding="utf-8")
        lexicon = load_lexicon(text, grammar)
    elif config.lexicon is not None:
        lexicon = lexstore.load_lexicon_file(config.lexicon, grammar)
    else:
        lexicon = load_lexicon(default_lexicon_text(), grammar)
    return AcquisitionEngine(grammar, lexicon)


# ---------------------------------------------------------------------------
# output formatting


def format_entry(entry: LexicalEntry, grammar: Grammar) -> str:
    """Snapshot block: form plus the abbreviated slot view per disjunct."""
    lines = [entry.form]
    many = len(entry.disjuncts) > 1
    for index, disjunct in enumerate(entry.disjuncts):
        prefix = f"  [{index + 1}] " if many else "  "
        follow = "      " if many else "  "
        slots = grammar.entry_snapshot(disjunct)
        if not slots:
            lines.append(f"{prefix}(no displayable slots)")
            continue
        for i, slot in enumerate(slots):
            lead = prefix if i == 0 else follow
            lines.append(f"{lead}{slot.name}: {slot.shown}")
    if entry.pending:
        lines.append(f"  pending hypotheses: {len(entry.pending)}")
    return "\n".join(lines)


def format_report(report: UpdateReport, grammar: Grammar) -> str:
    lines = [f"sentence: {report.sentence}"]
    if report.ungrammatical:
        lines.append("no parse: sentence rejected, lexicon unchanged")
        return "\n".join(lines)
    lines.append(f"solutions: {report.solutions}")
    if report.applied:
        lines.append("applied:")
        for c in report.applied:
            lines.append(f"  {c.form} {c.slot}: {grammar.display_value(c.old)}"
                         f" → {grammar.display_value(c.new)} [{c.clause}]")
    else:
        lines.append("applied: none")
    if report.rejected:
        lines.append("rejected (uninformative):")
        for c in report.rejected:
            lines.append(f"  {c.form} {c.slot}: {grammar.display_value(c.new)}"
                         f" [{c.clause}]")
    if report.pending:
        lines.append("pending:")
        for hyp in report.pending:
            for c in hyp.candidates:
                lines.append(f"  {c.form} {c.slot}: {grammar.display_value(c.old)}"
                             f" → {grammar.display_value(c.new)}"
                             f" [{c.clause}, solution {hyp.solution + 1}]")
    for change in report.changes:
        if change.diff:
            lines.append(f"changed {change.form}:")
            for diff_line in change.diff.splitlines():
                lines.append(f"  {diff_line}")
    return "\n".join(lines)


def _emit_report(report: UpdateReport, engine: AcquisitionEngine,
                 as_json: bool, out) -> None:
    if as_json:
        for record in report.audit_records(engine.grammar):
            print(json.dumps(record, ensure_ascii=False, sort_keys=True), file=out)
    else:
        print(format_report(report, engine.grammar), file=out)


def _persist(engine: AcquisitionEngine, config: Config, report: UpdateReport) -> None:
    engine.lexicon.save(config.store)
    append_audit(config.audit_path(), engine.lexicon.audit_records)
    engine.lexicon.audit_records.clear()


# ---------------------------------------------------------------------------
# subcommands


def cmd_process(args, config: Config, out) -> int:
    engine = build_engine(config)
    report = engine.process_sentence(args.sentence, dry_run=args.dry_run)
    _emit_report(report, engine, args.json, out)
    if report.ungrammatical:
        return 1
    if not args.dry_run:
        _persist(engine, config, report)
    return 0


def cmd_batch(args, config: Config, out) -> int:
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read batch file {args.file}: {err}") from err
    engine = build_engine(config)
    for raw in text.splitlines():
        sentence = raw.strip()
        if not sentence or sentence.startswith("#"):
            continue
        report = engine.process_sentence(sentence)
        _emit_report(report, engine, args.json, out)
        if not args.json:
            print("", file=out)
    engine.lexicon.save(config.store)
    append_audit(config.audit_path(), engine.lexicon.audit_records)
    engine.lexicon.audit_records.clear()
    return 0


def cmd_show(args, config: Config, out) -> int:
    engine = build_engine(config)
    entry, seen = engine.lexicon.entry_or_generic(args.form)
    if not seen:
        print(f"{args.form!r} is not in the lexicon; generic unknown entry:",
              file=out)
    print(format_entry(entry, engine.grammar), file=out)
    return 0


def cmd_diff(args, config: Config, out) -> int:
    records = [r for r in read_audit(config.audit_path())
               if r.get("form") == args.form and r.get("status") == "applied"]
    if not records:
        print(f"no recorded changes for {args.form!r}", file=out)
        return 0
    last_version = records[-1].get("version")
    lines = [f"{r['slot']}: {r['old']} → {r['new']}"
             for r in records if r.get("version") == last_version]
    print(f"{args.form} (version {last_version}):", file=out)
    for line in lines:
        print(f"  {line}", file=out)
    return 0


def cmd_pending(args, config: Config, out) -> int:
    engine = build_engine(config)
    hypotheses = engine.lexicon.all_pending()
    if not hypotheses:
        print("no pending hypotheses", file=out)
        return 0
    for hyp in hypotheses:
        print(f"{hyp.form}  (solution {hyp.solution + 1} of: {hyp.sentence})",
              file=out)
        for c in hyp.candidates:
            print(f"  {c.slot}: {engine.grammar.display_value(c.old)}"
                  f" → {engine.grammar.display_value(c.new)} [{c.clause}]",
                  file=out)
    return 0


def cmd_demo(args, config: Config, out) -> int:
    engine = build_engine(config, use_store=False)
    grammar = engine.grammar
    for sentence in DEMO_SENTENCES:
        report = engine.process_sentence(sentence)
        print(f"== after: {sentence}", file=out)
        if report.ungrammatical:
            print("no parse", file=out)
            continue
        for form in DEMO_WORDS:
            entry, seen = engine.lexicon.entry_or_generic(form)
            if not seen:
                print(f"{form} (not yet in lexicon; generic entry shown)", file=out)
                verb = entry.disjuncts[2]
                shown = LexicalEntry(form=form, disjuncts=[verb])
                print(format_entry(shown, grammar), file=out)
            else:
                print(format_entry(entry, grammar), file=out)
        print("", file=out)
    return 0


def cmd_check(args, config: Config, out) -> int:
    grammar = build_grammar(config)
    engine = build_engine(config, use_store=False)
    lexicon = engine.lexicon
    problems: list[str] = []
    for entry in lexicon.entries.values():
        for disjunct in entry.disjuncts:
            for path, value in grammar.gen_slots_of(disjunct):
                if not (grammar.hier.u_g <= value):
                    problems.append(
                        f"{entry.form}: gen slot {path} lacks the u_g marker")
    print(f"type hierarchy: {len(grammar.hier.leaves)} leaves,"
          f" {len(grammar.hier.named)} named types", file=out)
    print(f"clauses: {len(grammar.clauses)}", file=out)
    print(f"lexicon: {len(lexicon)} entries", file=out)
    if problems:
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return 2
    print("ok", file=out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def make_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexlearn",
        description="Parse simplex German sentences and learn lexical "
                    "properties of unknown words from each context.")
    parser.add_argument("--types", help="type hierarchy file")
    parser.add_argument("--clauses", help="revisability clause file")
    parser.add_argument("--lexicon", help="initial lexicon file")
    parser.add_argument("--store", help="persistent lexicon store path")
    parser.add_argument("--json", action="store_true",
                        help="emit machine-readable JSON records")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="process one sentence and update the lexicon")
    p.add_argument("sentence")
    p.add_argument("--dry-run", action="store_true",
                   help="run the full pipeline without persisting anything")

    p = sub.add_parser("batch", help="process a file with one sentence per line")
    p.add_argument("file")

    p = sub.add_parser("show", help="show an entry (or the generic unknown entry)")
    p.add_argument("form")

    p = sub.add_parser("diff", help="show the last recorded change of a form")
    p.add_argument("form")

    sub.add_parser("pending", help="list pending update hypotheses")
    sub.add_parser("demo", help="run the three walkthrough sentences")
    sub.add_parser("check", help="validate the configured grammar files")
    return parser


_COMMANDS = {
    "process": cmd_process,
    "batch": cmd_batch,
    "show": cmd_show,
    "diff": cmd_diff,
    "pending": cmd_pending,
    "demo": cmd_demo,
    "check": cmd_check,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = make_arg_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        return _COMMANDS[args.command](args, config, out)
    except LexlearnError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main_entry() -> None:  # console script hook
    sys.exit(main())
