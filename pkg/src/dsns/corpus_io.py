"""File formats: PGN with variations, attribute CSV, config files and the bundled corpus."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import TYPE_CHECKING, Iterable, Optional, TextIO

from .chess_core import Position, emit_fen, parse_fen, parse_san
from .engine import DsnsString, EngineError, Sample

if TYPE_CHECKING:
    from .composer import Composition
    from .mate_solver import SolutionTree

NULL_TOKEN = "NULL"
SOURCE_LABELS = ("comp3.5", "tg1500+photo", "tg2500+photo")
SEVEN_TAG_ROSTER = ("Event", "Site", "Date", "Round", "White", "Black", "Result")


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# bundled corpus


@dataclass(frozen=True)
class CorpusEntry:
    index: int
    fen: str
    printed_fen: str
    printed_solution: str
    source: str

    @property
    def position(self) -> Position:
        return parse_fen(self.fen)

    @property
    def printed_key(self) -> str:
        """Key move text exactly as printed, typos included."""
        return self.printed_solution.split()[1]


def load_corpus() -> list[CorpusEntry]:
    """The 90 bundled three-movers, with board fields repaired where needed.

    ``printed_fen`` keeps the original text; ``fen`` is what the solver uses.
    """
    text = resources.files("dsns").joinpath("data/appendix_c.csv").read_text(encoding="utf-8")
    entries = []
    for row in csv.DictReader(io.StringIO(text)):
        entry = CorpusEntry(int(row["index"]), row["fen"], row["printed_fen"],
                            row["solution"], row["source"])
        if entry.source not in SOURCE_LABELS:
            raise FormatError(f"entry {entry.index}: unknown source {entry.source!r}")
        parse_fen(entry.fen)
        entries.append(entry)
    if [e.index for e in entries] != list(range(1, 91)):
        raise FormatError("bundled corpus is incomplete")
    return entries


def printed_line(entry: CorpusEntry) -> list[str]:
    """SAN tokens of the printed solution, without move numbers or result."""
    return [t for t in entry.printed_solution.split()
            if not t[0].isdigit() and t not in ("1-0", "0-1", "1/2-1/2", "*")]


def corpus_sequences() -> list:
    """Chess sequences for every corpus entry whose printed line replays legally.

    A few printed lines contain impossible or ambiguous moves; those
    entries are left out rather than guessed at.
    """
    from .attributes import sequence_from_sans

    out = []
    for e in load_corpus():
        try:
            out.append(sequence_from_sans(e.position, printed_line(e), object_id=f"#{e.index}"))
        except ValueError:
            continue
    return out


def load_chess_fixture() -> Sample:
    """Bundled sample of chess strings extracted from the corpus."""
    text = resources.files("dsns").joinpath("data/chess_fixture.csv").read_text(encoding="utf-8")
    return read_attribute_csv(io.StringIO(text), domain="chess")


# ---------------------------------------------------------------------------
# attribute CSV


def _parse_cell(cell: str, where: str) -> Optional[float]:
    cell = cell.strip()
    if cell == NULL_TOKEN:
        return None
    try:
        return float(cell)
    except ValueError:
        raise FormatError(f"non-numeric value {cell!r} at {where}") from None


def _format_cell(v: Optional[float]) -> str:
    if v is None:
        return NULL_TOKEN
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def read_attribute_csv(
    stream: TextIO, expected_schema: Optional[Iterable[str]] = None, domain: str = "sample"
) -> Sample:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("attribute CSV is empty") from None
    schema = tuple(h.strip() for h in header[1:])
    if not schema:
        raise FormatError("attribute CSV has no attribute columns")
    if len(set(schema)) != len(schema):
        raise FormatError("duplicate attribute names in header")
    if expected_schema is not None and tuple(expected_schema) != schema:
        raise FormatError(f"schema mismatch: expected {tuple(expected_schema)}, got {schema}")
    strings = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise FormatError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        values = tuple(_parse_cell(c, f"line {lineno}") for c in row[1:])
        strings.append(DsnsString(row[0].strip(), schema, values))
    if not strings:
        raise FormatError("attribute CSV has no data rows")
    try:
        return Sample(domain, schema, tuple(strings))
    except EngineError as exc:
        raise FormatError(str(exc)) from None


def write_attribute_csv(sample: Sample | Iterable[DsnsString], stream: TextIO,
                        id_column: str = "id") -> None:
    strings = list(sample.strings if isinstance(sample, Sample) else sample)
    if not strings:
        raise FormatError("nothing to write")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow([id_column, *strings[0].schema])
    for s in strings:
        w.writerow([s.object_id, *(_format_cell(v) for v in s.values)])


# ---------------------------------------------------------------------------
# config files


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use underscores."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"config line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        key = key.strip().lstrip("-").replace("-", "_")
        if not key:
            raise FormatError(f"config line {lineno}: empty key")
        out[key] = value.strip()
    return out


# ---------------------------------------------------------------------------
# PGN


@dataclass
class MoveNode:
    """A move in a PGN game tree; ``children[0]`` continues the main line."""

    san: str
    children: list["MoveNode"] = field(default_factory=list)

    def shape(self) -> tuple:
        return (self.san.rstrip("+#"), tuple(c.shape() for c in self.children))


@dataclass
class PgnGame:
    tags: dict
    moves: list[MoveNode]  # alternatives for the first move, main first
    result: str = "*"

    @property
    def position(self) -> Position:
        return parse_fen(self.tags["FEN"])

    def main_line(self) -> list[str]:
        line, nodes = [], self.moves
        while nodes:
            line.append(nodes[0].san)
            nodes = nodes[0].children
        return line


def solution_nodes(tree: "SolutionTree") -> MoveNode:
    """The full solution tree as PGN move nodes, main lines first."""

    def white(c) -> MoveNode:
        node = MoveNode(c.san)
        for d in c.defenses:
            node.children.append(MoveNode(d.san, [white(k) for k in d.continuations]))
        return node

    return white(tree.root)


def _number(ply: int, start_number: int, white_first: bool) -> tuple[int, bool]:
    offset = ply + (0 if white_first else 1)
    return start_number + offset // 2, offset % 2 == 0


def format_movetext(first: list[MoveNode], start_number: int = 1,
                    white_first: bool = True) -> str:
    out: list[str] = []

    def token(node: MoveNode, ply: int, force: bool) -> str:
        num, is_white = _number(ply, start_number, white_first)
        if is_white:
            return f"{num}. {node.san}"
        return f"{num}... {node.san}" if force else node.san

    def line(alternatives: list[MoveNode], ply: int, force: bool) -> None:
        while alternatives:
            main, rest = alternatives[0], alternatives[1:]
            out.append(token(main, ply, force))
            for alt in rest:
                out.append("(")
                out.append(token(alt, ply, True))
                line(alt.children, ply + 1, False)
                out.append(")")
            force = bool(rest)
            alternatives = main.children
            ply += 1

    line(first, 0, True)
    text = " ".join(out)
    return text.replace("( ", "(").replace(" )", ")")


def write_pgn_game(game: PgnGame, stream: TextIO) -> None:
    tags = dict(game.tags)
    tags.setdefault("Result", game.result)
    ordered = [k for k in SEVEN_TAG_ROSTER if k in tags] + \
              [k for k in tags if k not in SEVEN_TAG_ROSTER]
    for k in ordered:
        value = str(tags[k]).replace("\\", "\\\\").replace('"', '\\"')
        stream.write(f'[{k} "{value}"]\n')
    stream.write("\n")
    pos = parse_fen(tags["FEN"]) if "FEN" in tags else None
    number = pos.fullmove if pos else 1
    white_first = pos.turn == "w" if pos else True
    body = format_movetext(game.moves, number, white_first)
    stream.write(_wrap(f"{body} {game.result}".strip()) + "\n\n")


def _wrap(text: str, width: int = 79) -> str:
    lines, current = [], ""
    for word in text.split(" "):
        if current and len(current) + 1 + len(word) > width:
            lines.append(current)
            current = word
        else:
            current = f"{current} {word}" if current else word
    lines.append(current)
    return "\n".join(lines)


def composition_game(c: "Composition") -> PgnGame:
    pos = c.position
    tags = {
        "Event": "Composed mate in 3",
        "Site": "?",
        "Date": "????.??.??",
        "Round": "-",
        "White": "#3",
        "Black": "?",
        "Result": "*",
        "SetUp": "1",
        "FEN": emit_fen(pos),
        "Strategy": c.provenance.strategy,
        "SourceIds": " | ".join(c.provenance.source_ids),
        "Seed": str(c.provenance.seed),
        "Variations": str(c.report.variations),
        "Duals": f"{c.report.dual_count_move2}/{c.report.dual_count_move3}",
    }
    return PgnGame(tags, [solution_nodes(c.solution)])


def write_pgn(c: "Composition", stream: TextIO) -> None:
    write_pgn_game(composition_game(c), stream)


_TOKEN = re.compile(
    r"""\[\s*(?P<tag>[A-Za-z0-9_]+)\s+"(?P<val>(?:[^"\\]|\\.)*)"\s*\]
      | \{[^}]*\}
      | ;[^\n]*
      | (?P<open>\()
      | (?P<close>\))
      | (?P<result>1-0|0-1|1/2-1/2|\*)
      | \d+\.(?:\.\.)?
      | \$\d+
      | (?P<san>[A-Za-z0-9][A-Za-z0-9=+#\-x/]*[!?]*)
    """,
    re.VERBOSE,
)


def read_pgn(stream: TextIO | str) -> list[PgnGame]:
    """Parse one or more PGN games, keeping recursive variations.

    Moves are checked against the position given by the FEN tag (or the
    standard start), so a game that parses is also legal.
    """
    text = stream if isinstance(stream, str) else stream.read()
    games: list[PgnGame] = []
    tags: dict = {}
    root: list[MoveNode] = []
    # each frame: (list the next move is appended to, last node added)
    stack: list = []
    siblings, last = root, None
    in_movetext = False

    def finish(result: str) -> None:
        nonlocal tags, root, siblings, last, stack, in_movetext
        if stack:
            raise FormatError("unbalanced variation parentheses")
        if tags or root:
            games.append(PgnGame(tags, root, result))
        tags, root, stack, last, in_movetext = {}, [], [], None, False
        siblings = root

    for m in _TOKEN.finditer(text):
        if m.group("tag"):
            if in_movetext:
                finish("*")
            tags[m.group("tag")] = re.sub(r"\\(.)", r"\1", m.group("val"))
        elif m.group("open"):
            if last is None:
                raise FormatError("variation before any move")
            stack.append((siblings, last))
            # the variation is an alternative to the last move played
            siblings = last_parent_children(root, last)
            last = None
        elif m.group("close"):
            if not stack:
                raise FormatError("unbalanced variation parentheses")
            siblings, last = stack.pop()
        elif m.group("result"):
            finish(m.group("result"))
        elif m.group("san"):
            in_movetext = True
            node = MoveNode(m.group("san").rstrip("!?"))
            if last is None:
                siblings.append(node)
            else:
                last.children.append(node)
                siblings = last.children
            last = node
    if tags or root:
        finish("*")
    for g in games:
        _validate(g)
    return games


def last_parent_children(root: list[MoveNode], target: MoveNode) -> list[MoveNode]:
    """The sibling list that contains ``target``."""
    todo = [root]
    while todo:
        group = todo.pop()
        for n in group:
            if n is target:
                return group
            todo.append(n.children)
    raise FormatError("variation anchor not found")


def _validate(game: PgnGame) -> None:
    start = parse_fen(game.tags["FEN"]) if "FEN" in game.tags else parse_fen(
        "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1")

    def walk(pos: Position, nodes: list[MoveNode]) -> None:
        for n in nodes:
            try:
                mv = parse_san(pos, n.san)
            except ValueError as exc:
                raise FormatError(str(exc)) from None
            walk(pos.push(mv), n.children)

    walk(start, game.moves)
