"""Programming word problem records: parsing, rendering, text assembly.

Corpus wire format
------------------
A corpus file is UTF-8 JSON Lines: one record per line with fields

    id               string, unique within the file
    title            string
    time_limit_s     number > 0 (seconds)
    memory_limit_mb  integer > 0 (megabytes)
    statement        string (natural-language narrative)
    input_spec       string
    output_spec      string
    notes            string, optional
    tags             array of strings

Unknown fields are ignored with a warning. Blank lines are skipped.
Raw dumps may contain records with empty statements or empty tag lists;
those are legal at parse time and are dropped later by
:func:`pwptag.datasets.filter_raw`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusFormatError
from ._util import atomic_write_text

log = logging.getLogger(__name__)

REQUIRED_FIELDS = (
    "id",
    "title",
    "time_limit_s",
    "memory_limit_mb",
    "statement",
    "input_spec",
    "output_spec",
    "tags",
)
OPTIONAL_FIELDS = ("notes",)


class TextPart(str, Enum):
    """Which portion of a problem a piece of assembled text covers."""

    FULL = "full"
    STATEMENT_ONLY = "statement"
    IO_AND_CONSTRAINTS = "io"


@dataclass(frozen=True)
class Problem:
    """One programming word problem.

    Immutable after construction and safe to share across threads.
    """

    id: str
    title: str
    time_limit_s: float
    memory_limit_mb: int
    statement: str
    input_spec: str
    output_spec: str
    tags: frozenset[str] = field(default_factory=frozenset)
    notes: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "tags", frozenset(self.tags))
        if not self.id:
            raise CorpusFormatError("problem id must be non-empty")
        if not (isinstance(self.time_limit_s, (int, float))
                and not isinstance(self.time_limit_s, bool)
                and self.time_limit_s > 0):
            raise CorpusFormatError(f"problem {self.id}: time_limit_s must be > 0")
        if not (isinstance(self.memory_limit_mb, int)
                and not isinstance(self.memory_limit_mb, bool)
                and self.memory_limit_mb > 0):
            raise CorpusFormatError(
                f"problem {self.id}: memory_limit_mb must be a positive integer"
            )


@dataclass(frozen=True)
class ProblemText:
    text: str
    part: TextPart


def _format_seconds(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return f"{value:g}"


def constraint_text(problem: Problem) -> str:
    """Render the time/memory limits as canonical English lines so they
    tokenize like ordinary prose."""
    return (
        f"time limit per test: {_format_seconds(problem.time_limit_s)} seconds\n"
        f"memory limit per test: {problem.memory_limit_mb} megabytes"
    )


def _require_prose(problem: Problem) -> None:
    for name in ("statement", "input_spec", "output_spec"):
        if not getattr(problem, name).strip():
            raise CorpusFormatError(f"problem {problem.id}: empty {name}")


def full_text(problem: Problem) -> ProblemText:
    """Assemble the complete problem text:

    title, constraint lines, statement, input format, output format and,
    when present, the notes, joined by newlines.
    """
    _require_prose(problem)
    pieces = [
        problem.title,
        constraint_text(problem),
        problem.statement,
        problem.input_spec,
        problem.output_spec,
    ]
    if problem.notes is not None:
        pieces.append(problem.notes)
    return ProblemText("\n".join(pieces), TextPart.FULL)


def component_split(
    problem: Problem, include_title: bool = False
) -> tuple[ProblemText, ProblemText]:
    """Split a problem into its two analyzable components.

    Returns (statement part, I/O-and-constraints part). The title belongs
    to neither component by default; notes are narrative, so they stay
    with the statement. Set `include_title` to prepend the title to the
    statement part when re-running ablations with titles.
    """
    _require_prose(problem)
    statement_pieces = []
    if include_title:
        statement_pieces.append(problem.title)
    statement_pieces.append(problem.statement)
    if problem.notes is not None:
        statement_pieces.append(problem.notes)
    io_pieces = [constraint_text(problem), problem.input_spec, problem.output_spec]
    return (
        ProblemText("\n".join(statement_pieces), TextPart.STATEMENT_ONLY),
        ProblemText("\n".join(io_pieces), TextPart.IO_AND_CONSTRAINTS),
    )


def part_text(problem: Problem, part: TextPart) -> str:
    """Text of `problem` restricted to `part`."""
    if part is TextPart.FULL:
        return full_text(problem).text
    statement, io = component_split(problem)
    return statement.text if part is TextPart.STATEMENT_ONLY else io.text


def _parse_record(line: str, lineno: int, warned_fields: set[str]) -> Problem:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"malformed record at line {lineno}: {exc.msg}") from exc
    if not isinstance(record, dict):
        raise CorpusFormatError(f"malformed record at line {lineno}: not an object")

    for name in REQUIRED_FIELDS:
        if name not in record:
            raise CorpusFormatError(f"missing field {name} at line {lineno}")
    for name in record:
        if name not in REQUIRED_FIELDS and name not in OPTIONAL_FIELDS:
            if name not in warned_fields:
                warned_fields.add(name)
                log.warning("ignoring unknown corpus field %r (line %d)", name, lineno)

    def _string(name: str) -> str:
        value = record[name]
        if not isinstance(value, str):
            raise CorpusFormatError(f"field {name} must be a string at line {lineno}")
        return value

    tags = record["tags"]
    if not isinstance(tags, list) or any(not isinstance(t, str) for t in tags):
        raise CorpusFormatError(f"field tags must be an array of strings at line {lineno}")
    notes = record.get("notes")
    if notes is not None and not isinstance(notes, str):
        raise CorpusFormatError(f"field notes must be a string at line {lineno}")

    try:
        return Problem(
            id=_string("id"),
            title=_string("title"),
            time_limit_s=record["time_limit_s"],
            memory_limit_mb=record["memory_limit_mb"],
            statement=_string("statement"),
            input_spec=_string("input_spec"),
            output_spec=_string("output_spec"),
            tags=frozenset(tags),
            notes=notes,
        )
    except CorpusFormatError as exc:
        raise CorpusFormatError(f"{exc} (line {lineno})") from None


def parse_corpus(path: str | Path) -> list[Problem]:
    """Parse a corpus file into problems, preserving file order.

    Raises CorpusFormatError naming the offending line, field, or id.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"corpus file not found: {path}")
    problems: list[Problem] = []
    seen: set[str] = set()
    warned: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            problem = _parse_record(line, lineno, warned)
            if problem.id in seen:
                raise CorpusFormatError(f'duplicate id "{problem.id}" at line {lineno}')
            seen.add(problem.id)
            problems.append(problem)
    return problems


def render_record(problem: Problem) -> str:
    """Serialize one problem as a single JSON line (canonical key order,
    tags sorted)."""
    record = {
        "id": problem.id,
        "title": problem.title,
        "time_limit_s": problem.time_limit_s,
        "memory_limit_mb": problem.memory_limit_mb,
        "statement": problem.statement,
        "input_spec": problem.input_spec,
        "output_spec": problem.output_spec,
        "tags": sorted(problem.tags),
    }
    if problem.notes is not None:
        record["notes"] = problem.notes
    return json.dumps(record, ensure_ascii=False)


def write_corpus(problems: Iterable[Problem], path: str | Path) -> None:
    atomic_write_text(path, "".join(render_record(p) + "\n" for p in problems))


def word_count(text: str) -> int:
    return len(text.split())
