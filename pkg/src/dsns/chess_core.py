"""Chess positions, FEN, legal move generation and position metrics.

Two representations live here. ``Position`` is an immutable value keyed by
FEN and is what the rest of the package passes around. ``Board`` is a
mutable 0x88 board with make/unmake and an incremental Zobrist hash; the
mate solver runs on it directly because it is several times faster than
rebuilding positions at every node.

Squares are integers 0..63 with a1 = 0, b1 = 1, ..., h8 = 63.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional

WHITE = "w"
BLACK = "b"
COLORS = (WHITE, BLACK)

PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6
KIND_LETTERS = "PNBRQK"

# Piece kind codes used by the DSNS chess attributes.
PIECE_KIND_CODE = {"P": 1, "N": 2, "B": 3, "R": 4, "Q": 5, "K": 6}
SHANNON_WEIGHTS = {"P": 1, "N": 3, "B": 3, "R": 5, "Q": 9, "K": 0}

FILES = "abcdefgh"
SQUARE_NAMES = [f + r for r in "12345678" for f in FILES]


class FenError(ValueError):
    """Base class for FEN parsing failures."""


class FieldCountError(FenError):
    pass


class RankCountError(FenError):
    pass


class RankWidthError(FenError):
    pass


class PieceLetterError(FenError):
    pass


class IllegalPositionError(FenError):
    """The FEN is well formed but describes a position that cannot be played."""


class Piece(NamedTuple):
    color: str
    kind: str

    def symbol(self) -> str:
        return self.kind if self.color == WHITE else self.kind.lower()

    @classmethod
    def from_symbol(cls, ch: str) -> "Piece":
        if ch.upper() not in KIND_LETTERS:
            raise PieceLetterError(f"invalid piece letter {ch!r}")
        return cls(WHITE if ch.isupper() else BLACK, ch.upper())


def square(name: str) -> int:
    if len(name) != 2 or name[0] not in FILES or name[1] not in "12345678":
        raise ValueError(f"bad square name {name!r}")
    return FILES.index(name[0]) + 8 * (int(name[1]) - 1)


def square_name(sq: int) -> str:
    return SQUARE_NAMES[sq]


def square_file(sq: int) -> int:
    return sq & 7


def square_rank(sq: int) -> int:
    return sq >> 3


def opposite(color: str) -> str:
    return BLACK if color == WHITE else WHITE


@dataclass(frozen=True)
class Move:
    """A move between two squares.

    The flags are descriptive only and do not take part in equality, so a
    bare ``Move(from, to)`` compares equal to the generated move.
    """

    from_square: int
    to_square: int
    promotion: Optional[str] = None
    capture: bool = field(default=False, compare=False)
    check: bool = field(default=False, compare=False)
    castle: bool = field(default=False, compare=False)
    en_passant: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.from_square == self.to_square:
            raise ValueError("from and to squares must differ")
        if self.promotion is not None and self.promotion not in "NBRQ":
            raise ValueError(f"bad promotion kind {self.promotion!r}")

    def uci(self) -> str:
        promo = self.promotion.lower() if self.promotion else ""
        return SQUARE_NAMES[self.from_square] + SQUARE_NAMES[self.to_square] + promo

    @classmethod
    def from_uci(cls, text: str) -> "Move":
        promo = text[4].upper() if len(text) == 5 else None
        return cls(square(text[:2]), square(text[2:4]), promo)

    def __str__(self) -> str:
        return self.uci()


@dataclass(frozen=True)
class Position:
    """An immutable chess position.

    ``placement`` holds 64 entries indexed by square (a1 first); each entry
    is a ``Piece`` or None. Construction validates the position, so every
    instance satisfies the usual playability rules.
    """

    placement: tuple
    turn: str = WHITE
    castling: tuple = (False, False, False, False)  # K, Q, k, q
    ep_square: Optional[int] = None
    halfmove: int = 0
    fullmove: int = 1

    def __post_init__(self) -> None:
        if len(self.placement) != 64:
            raise ValueError("placement must have 64 entries")
        if self.turn not in COLORS:
            raise ValueError(f"bad side to move {self.turn!r}")
        if len(self.castling) != 4:
            raise ValueError("castling must be four booleans")
        self._validate()

    def _validate(self) -> None:
        kings = {WHITE: [], BLACK: []}
        for sq, p in enumerate(self.placement):
            if p is None:
                continue
            if p.kind == "K":
                kings[p.color].append(sq)
            elif p.kind == "P" and square_rank(sq) in (0, 7):
                raise IllegalPositionError(f"pawn on back rank at {square_name(sq)}")
        for color in COLORS:
            if len(kings[color]) != 1:
                raise IllegalPositionError(
                    f"{'white' if color == WHITE else 'black'} must have exactly one king"
                )
        wk, bk = kings[WHITE][0], kings[BLACK][0]
        if max(abs(square_file(wk) - square_file(bk)), abs(square_rank(wk) - square_rank(bk))) <= 1:
            raise IllegalPositionError("kings on adjacent squares")
        homes = [("K", WHITE, 4, 7), ("Q", WHITE, 4, 0), ("K", BLACK, 60, 63), ("Q", BLACK, 60, 56)]
        for flag, (_, color, ksq, rsq) in zip(self.castling, homes):
            if flag and (self.placement[ksq] != Piece(color, "K")
                         or self.placement[rsq] != Piece(color, "R")):
                raise IllegalPositionError("castling right without king and rook at home")
        if self.ep_square is not None:
            rank = square_rank(self.ep_square)
            mover = opposite(self.turn)
            want_rank = 5 if self.turn == WHITE else 2
            pawn_sq = self.ep_square - 8 if self.turn == WHITE else self.ep_square + 8
            if (rank != want_rank or self.placement[self.ep_square] is not None
                    or self.placement[pawn_sq] != Piece(mover, "P")):
                raise IllegalPositionError("inconsistent en passant square")
        board = Board.from_position(self, validate=False)
        if board.attacked(board.kings[-board.turn], board.turn):
            raise IllegalPositionError("side not to move is in check")

    def piece_at(self, sq: int) -> Optional[Piece]:
        return self.placement[sq]

    def pieces(self, color: Optional[str] = None) -> Iterator[tuple[int, Piece]]:
        for sq, p in enumerate(self.placement):
            if p is not None and (color is None or p.color == color):
                yield sq, p

    def king_square(self, color: str) -> int:
        for sq, p in self.pieces(color):
            if p.kind == "K":
                return sq
        raise IllegalPositionError("no king")  # unreachable for valid positions

    def piece_count(self, color: str) -> int:
        return sum(1 for _ in self.pieces(color))

    def fen(self) -> str:
        return emit_fen(self)

    def board(self) -> "Board":
        return Board.from_position(self)

    def push(self, move: Move) -> "Position":
        """Return the position after a legal move."""
        board = self.board()
        board.make(board.find_move(move))
        return board.to_position()

    def is_check(self) -> bool:
        return self.board().in_check()

    def is_checkmate(self) -> bool:
        b = self.board()
        return b.in_check() and not b.has_legal_move()

    def is_stalemate(self) -> bool:
        b = self.board()
        return not b.in_check() and not b.has_legal_move()

    def with_pieces(self, changes: dict) -> "Position":
        """Copy with some squares replaced (None clears a square)."""
        placement = list(self.placement)
        for sq, p in changes.items():
            placement[sq] = p
        return Position(tuple(placement), self.turn, self.castling, self.ep_square,
                        self.halfmove, self.fullmove)

    def __str__(self) -> str:
        rows = []
        for rank in range(7, -1, -1):
            row = []
            for f in range(8):
                p = self.placement[rank * 8 + f]
                row.append(p.symbol() if p else ".")
            rows.append(" ".join(row))
        return "\n".join(rows)


# ---------------------------------------------------------------------------
# FEN


def parse_fen(text: str) -> Position:
    """Parse a FEN string.

    Only the board and side-to-move fields are required; missing castling,
    en passant and counter fields default to ``- - 0 1``.
    """
    fields = text.split()
    if len(fields) < 2 or len(fields) > 6:
        raise FieldCountError(f"expected 2 to 6 fields, got {len(fields)}")
    fields += ["-", "-", "0", "1"][len(fields) - 2:]
    board_field, turn, castle_field, ep_field, half, full = fields

    ranks = board_field.split("/")
    if len(ranks) != 8:
        raise RankCountError(f"expected 8 ranks, got {len(ranks)}")
    placement: list = [None] * 64
    for i, row in enumerate(ranks):
        rank = 7 - i
        f = 0
        for ch in row:
            if ch.isdigit():
                if ch == "0":
                    raise RankWidthError(f"zero run length in rank {row!r}")
                f += int(ch)
            else:
                piece = Piece.from_symbol(ch)
                if f < 8:
                    placement[rank * 8 + f] = piece
                f += 1
        if f != 8:
            raise RankWidthError(f"rank {row!r} has width {f}")

    if turn not in COLORS:
        raise FieldCountError(f"bad side to move {turn!r}")
    if castle_field != "-" and (not castle_field or any(c not in "KQkq" for c in castle_field)):
        raise FieldCountError(f"bad castling field {castle_field!r}")
    castling = tuple(c in castle_field for c in "KQkq")
    ep = None
    if ep_field != "-":
        try:
            ep = square(ep_field)
        except ValueError:
            raise FieldCountError(f"bad en passant field {ep_field!r}") from None
    try:
        halfmove, fullmove = int(half), int(full)
    except ValueError:
        raise FieldCountError("move counters must be integers") from None
    return Position(tuple(placement), turn, castling, ep, halfmove, fullmove)


def emit_fen(pos: Position) -> str:
    rows = []
    for rank in range(7, -1, -1):
        row, empty = "", 0
        for f in range(8):
            p = pos.placement[rank * 8 + f]
            if p is None:
                empty += 1
                continue
            if empty:
                row += str(empty)
                empty = 0
            row += p.symbol()
        if empty:
            row += str(empty)
        rows.append(row)
    castle = "".join(c for c, ok in zip("KQkq", pos.castling) if ok) or "-"
    ep = square_name(pos.ep_square) if pos.ep_square is not None else "-"
    return f"{'/'.join(rows)} {pos.turn} {castle} {ep} {pos.halfmove} {pos.fullmove}"


def normalize_fen(text: str) -> str:
    return emit_fen(parse_fen(text))


STARTING_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"


# ---------------------------------------------------------------------------
# 0x88 board

N, S, E, W = 16, -16, 1, -1
KNIGHT_STEPS = (33, 31, 18, 14, -14, -18, -31, -33)
KING_STEPS = (17, 16, 15, 1, -1, -15, -16, -17)
DIAG_STEPS = (17, 15, -15, -17)
ORTHO_STEPS = (16, -16, 1, -1)

# internal move tuple: (from88, to88, promotion_kind_or_0, flag)
NORMAL, DOUBLE_PUSH, EP_CAPTURE, CASTLE = 0, 1, 2, 3

CASTLE_K, CASTLE_Q, CASTLE_k, CASTLE_q = 1, 2, 4, 8


def to88(sq: int) -> int:
    return sq + (sq & ~7)


def from88(s: int) -> int:
    return (s & 7) + ((s >> 4) << 3)


_rng = random.Random(0x5EED)
ZOBRIST = {
    (piece, s): _rng.getrandbits(64)
    for piece in (1, 2, 3, 4, 5, 6, -1, -2, -3, -4, -5, -6)
    for s in range(128)
    if not s & 0x88
}
ZOBRIST_SIDE = _rng.getrandbits(64)
ZOBRIST_CASTLE = [_rng.getrandbits(64) for _ in range(16)]
ZOBRIST_EP = [_rng.getrandbits(64) for _ in range(128)]

# unit step along a line between two 0x88 squares, keyed by their difference
_RAY_STEP = {}
for _d in KING_STEPS:
    for _n in range(1, 8):
        _RAY_STEP[_d * _n] = _d

_KNIGHT_DIFFS = frozenset(KNIGHT_STEPS)

# kinds (as bit 1 << kind) that can reach a square at a given 0x88 difference,
# indexed by diff + 119; sliders still need the path to be clear
_REACH = [0] * 239
for _d in KNIGHT_STEPS:
    _REACH[_d + 119] |= 1 << 2
for _d in KING_STEPS:
    _REACH[_d + 119] |= 1 << 6
for _diff, _d in _RAY_STEP.items():
    _REACH[_diff + 119] |= (1 << 3 if _d in (17, 15, -15, -17) else 1 << 4) | 1 << 5

# castling rights that survive a move touching each square
_CASTLE_MASK = [15] * 128
_CASTLE_MASK[to88(4)] = 15 & ~(CASTLE_K | CASTLE_Q)
_CASTLE_MASK[to88(7)] = 15 & ~CASTLE_K
_CASTLE_MASK[to88(0)] = 15 & ~CASTLE_Q
_CASTLE_MASK[to88(60)] = 15 & ~(CASTLE_k | CASTLE_q)
_CASTLE_MASK[to88(63)] = 15 & ~CASTLE_k
_CASTLE_MASK[to88(56)] = 15 & ~CASTLE_q


class Board:
    """Mutable 0x88 board used for search.

    Pieces are signed ints: 1..6 for white P N B R Q K, negated for black.
    ``turn`` is 1 for white and -1 for black. ``kings`` is indexed by turn
    (index -1 aliases the black slot).
    """

    __slots__ = ("sq", "turn", "castling", "ep", "kings", "pieces", "hash",
                 "stack", "halfmove", "fullmove", "nodes")

    def __init__(self) -> None:
        self.sq = [0] * 128
        self.turn = 1
        self.castling = 0
        self.ep = -1
        self.kings = [0, -1, -1]
        self.pieces = {1: set(), -1: set()}
        self.hash = 0
        self.stack: list = []
        self.halfmove = 0
        self.fullmove = 1
        self.nodes = 0

    # -- conversion -------------------------------------------------------

    @classmethod
    def from_position(cls, pos: Position, validate: bool = True) -> "Board":
        b = cls()
        for sq64, p in enumerate(pos.placement):
            if p is not None:
                v = PIECE_KIND_CODE[p.kind] * (1 if p.color == WHITE else -1)
                b._put(to88(sq64), v)
        b.turn = 1 if pos.turn == WHITE else -1
        b.castling = sum(bit for bit, ok in zip((1, 2, 4, 8), pos.castling) if ok)
        b.ep = to88(pos.ep_square) if pos.ep_square is not None else -1
        b.halfmove, b.fullmove = pos.halfmove, pos.fullmove
        b.hash ^= ZOBRIST_CASTLE[b.castling]
        if b.ep >= 0:
            b.hash ^= ZOBRIST_EP[b.ep]
        if b.turn == -1:
            b.hash ^= ZOBRIST_SIDE
        return b

    def to_position(self) -> Position:
        placement: list = [None] * 64
        for side in (1, -1):
            for s in self.pieces[side]:
                v = self.sq[s]
                placement[from88(s)] = Piece(WHITE if v > 0 else BLACK, KIND_LETTERS[abs(v) - 1])
        castling = tuple(bool(self.castling & bit) for bit in (1, 2, 4, 8))
        ep = from88(self.ep) if self.ep >= 0 else None
        # an ep square with no capturing pawn is dropped, as FEN writers usually do
        if ep is not None and not self._ep_capturable():
            ep = None
        return Position(tuple(placement), WHITE if self.turn == 1 else BLACK, castling, ep,
                        self.halfmove, self.fullmove)

    def _ep_capturable(self) -> bool:
        for m in self.pseudo_moves():
            if m[3] == EP_CAPTURE and self.is_legal(m):
                return True
        return False

    def copy(self) -> "Board":
        b = Board()
        b.sq = self.sq[:]
        b.turn, b.castling, b.ep = self.turn, self.castling, self.ep
        b.kings = self.kings[:]
        b.pieces = {1: set(self.pieces[1]), -1: set(self.pieces[-1])}
        b.hash = self.hash
        b.halfmove, b.fullmove = self.halfmove, self.fullmove
        return b

    def _put(self, s: int, v: int) -> None:
        self.sq[s] = v
        side = 1 if v > 0 else -1
        self.pieces[side].add(s)
        self.hash ^= ZOBRIST[(v, s)]
        if abs(v) == KING:
            self.kings[side] = s

    def _remove(self, s: int) -> None:
        v = self.sq[s]
        self.sq[s] = 0
        self.pieces[1 if v > 0 else -1].discard(s)
        self.hash ^= ZOBRIST[(v, s)]

    # -- attacks ------------------------------------------------------------

    def attacked(self, target: int, by: int) -> bool:
        """True if side ``by`` attacks square ``target`` (0x88 index)."""
        sq = self.sq
        for s in self.pieces[by]:
            diff = target - s
            kind = sq[s] * by
            if kind == 1:
                if diff == 15 * by or diff == 17 * by:
                    return True
                continue
            if not _REACH[diff + 119] >> kind & 1:
                continue
            if kind == 2 or kind == 6:
                return True
            step = _RAY_STEP[diff]
            s += step
            while s != target:
                if sq[s]:
                    break
                s += step
            else:
                return True
        return False

    def in_check(self) -> bool:
        return self.attacked(self.kings[self.turn], -self.turn)

    # -- move generation ----------------------------------------------------

    def pseudo_moves(self) -> list:
        moves: list = []
        add = moves.append
        us = self.turn
        sq = self.sq
        for frm in self.pieces[us]:
            v = sq[frm] * us
            if v == PAWN:
                fwd = 16 * us
                to = frm + fwd
                last_rank = (to >> 4) == (7 if us == 1 else 0)
                if not to & 0x88 and sq[to] == 0:
                    if last_rank:
                        for k in (5, 4, 3, 2):
                            add((frm, to, k, NORMAL))
                    else:
                        add((frm, to, 0, NORMAL))
                        start = (frm >> 4) == (1 if us == 1 else 6)
                        if start and sq[to + fwd] == 0:
                            add((frm, to + fwd, 0, DOUBLE_PUSH))
                for to in (frm + fwd - 1, frm + fwd + 1):
                    if to & 0x88:
                        continue
                    t = sq[to]
                    if t * us < 0:
                        if last_rank:
                            for k in (5, 4, 3, 2):
                                add((frm, to, k, NORMAL))
                        else:
                            add((frm, to, 0, NORMAL))
                    elif to == self.ep and t == 0:
                        add((frm, to, 0, EP_CAPTURE))
            elif v == KNIGHT or v == KING:
                for d in (KNIGHT_STEPS if v == KNIGHT else KING_STEPS):
                    to = frm + d
                    if not to & 0x88 and sq[to] * us <= 0:
                        add((frm, to, 0, NORMAL))
                if v == KING:
                    self._castle_moves(frm, add)
            else:
                steps = DIAG_STEPS if v == BISHOP else ORTHO_STEPS if v == ROOK else KING_STEPS
                for d in steps:
                    to = frm + d
                    while not to & 0x88:
                        t = sq[to]
                        if t == 0:
                            add((frm, to, 0, NORMAL))
                        else:
                            if t * us < 0:
                                add((frm, to, 0, NORMAL))
                            break
                        to += d
        return moves

    def _castle_moves(self, frm: int, add) -> None:
        us = self.turn
        rights = self.castling & (3 if us == 1 else 12)
        if not rights:
            return
        home = 4 if us == 1 else 0x74
        if frm != home or self.attacked(home, -us):
            return
        sq = self.sq
        if rights & (CASTLE_K | CASTLE_k):
            if (sq[home + 1] == 0 and sq[home + 2] == 0 and sq[home + 3] == ROOK * us
                    and not self.attacked(home + 1, -us) and not self.attacked(home + 2, -us)):
                add((home, home + 2, 0, CASTLE))
        if rights & (CASTLE_Q | CASTLE_q):
            if (sq[home - 1] == 0 and sq[home - 2] == 0 and sq[home - 3] == 0
                    and sq[home - 4] == ROOK * us
                    and not self.attacked(home - 1, -us) and not self.attacked(home - 2, -us)):
                add((home, home - 2, 0, CASTLE))

    def make(self, m: tuple) -> None:
        frm, to, promo, flag = m
        sq = self.sq
        us = self.turn
        piece = sq[frm]
        captured = sq[to]
        z = ZOBRIST
        h = self.hash ^ ZOBRIST_CASTLE[self.castling] ^ ZOBRIST_SIDE
        if self.ep >= 0:
            h ^= ZOBRIST_EP[self.ep]
        self.stack.append((m, captured, self.castling, self.ep, self.hash, self.halfmove))
        self.nodes += 1
        if captured:
            self.pieces[-us].discard(to)
            h ^= z[(captured, to)]
        elif flag == EP_CAPTURE:
            cap_sq = to - 16 * us
            h ^= z[(sq[cap_sq], cap_sq)]
            sq[cap_sq] = 0
            self.pieces[-us].discard(cap_sq)
        h ^= z[(piece, frm)]
        sq[frm] = 0
        placed = promo * us if promo else piece
        sq[to] = placed
        h ^= z[(placed, to)]
        mine = self.pieces[us]
        mine.discard(frm)
        mine.add(to)
        if piece == KING * us:
            self.kings[us] = to
            if flag == CASTLE:
                rf, rt = (to + 1, to - 1) if to > frm else (to - 2, to + 1)
                rook = sq[rf]
                sq[rf] = 0
                sq[rt] = rook
                mine.discard(rf)
                mine.add(rt)
                h ^= z[(rook, rf)] ^ z[(rook, rt)]
        self.castling &= _CASTLE_MASK[frm] & _CASTLE_MASK[to]
        self.ep = (frm + to) >> 1 if flag == DOUBLE_PUSH else -1
        if self.ep >= 0:
            h ^= ZOBRIST_EP[self.ep]
        h ^= ZOBRIST_CASTLE[self.castling]
        self.hash = h
        self.halfmove = 0 if (captured or abs(piece) == PAWN) else self.halfmove + 1
        if us == -1:
            self.fullmove += 1
        self.turn = -us

    def unmake(self) -> None:
        m, captured, castling, ep, h, halfmove = self.stack.pop()
        frm, to, promo, flag = m
        sq = self.sq
        self.turn = us = -self.turn
        placed = sq[to]
        piece = PAWN * us if promo else placed
        sq[frm] = piece
        sq[to] = captured
        mine = self.pieces[us]
        mine.discard(to)
        mine.add(frm)
        if captured:
            self.pieces[-us].add(to)
        elif flag == EP_CAPTURE:
            cap_sq = to - 16 * us
            sq[cap_sq] = -PAWN * us
            self.pieces[-us].add(cap_sq)
        if piece == KING * us:
            self.kings[us] = frm
            if flag == CASTLE:
                rf, rt = (to + 1, to - 1) if to > frm else (to - 2, to + 1)
                sq[rf] = sq[rt]
                sq[rt] = 0
                mine.discard(rt)
                mine.add(rf)
        self.castling, self.ep, self.hash, self.halfmove = castling, ep, h, halfmove
        if us == -1:
            self.fullmove -= 1

    def is_legal(self, m: tuple) -> bool:
        self.make(m)
        ok = not self.attacked(self.kings[-self.turn], self.turn)
        self.unmake()
        return ok

    def legal_moves_slow(self) -> list:
        """Reference generator: make every pseudo-legal move and test it."""
        return [m for m in self.pseudo_moves() if self.is_legal(m)]

    def _pins_and_checkers(self) -> tuple:
        """Squares of our pinned pieces, and enemy pieces giving check."""
        us, sq = self.turn, self.sq
        ksq = self.kings[us]
        pinned = set()
        checkers = []
        for d in KING_STEPS:
            diag = d in DIAG_STEPS
            s = ksq + d
            own = -1
            while not s & 0x88:
                v = sq[s]
                if v:
                    if v * us > 0:
                        if own >= 0:
                            break
                        own = s
                    else:
                        k = -v * us
                        if k == QUEEN or k == (BISHOP if diag else ROOK):
                            if own >= 0:
                                pinned.add(own)
                            else:
                                checkers.append(s)
                        break
                s += d
        them = -us
        for d in KNIGHT_STEPS:
            s = ksq + d
            if not s & 0x88 and sq[s] == KNIGHT * them:
                checkers.append(s)
        for d in ((15, 17) if us == 1 else (-15, -17)):
            s = ksq + d
            if not s & 0x88 and sq[s] == PAWN * them:
                checkers.append(s)
        return pinned, checkers

    def legal_filter(self):
        """Return a predicate deciding legality of pseudo-legal moves."""
        us, sq = self.turn, self.sq
        ksq = self.kings[us]
        pinned, checkers = self._pins_and_checkers()
        targets = None
        if len(checkers) == 1:
            c = checkers[0]
            targets = {c}
            if abs(sq[c]) in (BISHOP, ROOK, QUEEN):
                diff = c - ksq
                step = _RAY_STEP.get(diff)
                s = ksq + step
                while s != c:
                    targets.add(s)
                    s += step
        double = len(checkers) > 1

        def ok(m: tuple) -> bool:
            frm, to, _, flag = m
            if frm == ksq:
                if flag == CASTLE:
                    return True  # attack tests are done during generation
                sq[ksq] = 0
                bad = self.attacked(to, -us)
                sq[ksq] = KING * us
                return not bad
            if double:
                return False
            if flag == EP_CAPTURE or frm in pinned:
                return self.is_legal(m)
            return targets is None or to in targets

        return ok

    def legal_moves(self) -> list:
        ok = self.legal_filter()
        return [m for m in self.pseudo_moves() if ok(m)]

    def has_legal_move(self) -> bool:
        us, sq = self.turn, self.sq
        ksq = self.kings[us]
        # a plain king step is the usual escape and avoids full generation
        sq[ksq] = 0
        try:
            for d in KING_STEPS:
                s = ksq + d
                if not s & 0x88 and sq[s] * us <= 0 and not self.attacked(s, -us):
                    return True
        finally:
            sq[ksq] = KING * us
        ok = self.legal_filter()
        for m in self.pseudo_moves():
            if ok(m):
                return True
        return False

    def check_filter(self):
        """Return a cheap predicate that is True for every move that gives check.

        It may also accept some moves that do not; callers confirm with
        ``gives_check`` after making the move.
        """
        us, sq = self.turn, self.sq
        ksq = self.kings[-us]
        # our pieces that would uncover a slider on the enemy king by moving
        discoverers = set()
        for d in KING_STEPS:
            s = ksq + d
            own = -1
            while not s & 0x88:
                v = sq[s]
                if v:
                    if v * us < 0:
                        break
                    if own < 0:
                        own = s
                    else:
                        kind = v * us
                        if kind == QUEEN or kind == (BISHOP if d in DIAG_STEPS else ROOK):
                            discoverers.add(own)
                        break
                s += d

        def may(m: tuple) -> bool:
            frm, to, promo, flag = m
            if promo or flag == EP_CAPTURE or flag == CASTLE or frm in discoverers:
                return True
            kind = sq[frm] * us
            diff = ksq - to
            if kind == KNIGHT:
                return diff in _KNIGHT_DIFFS
            if kind == PAWN:
                return diff == 15 * us or diff == 17 * us
            if kind == KING:
                return False
            if not _REACH[diff + 119] >> kind & 1:
                return False
            step = _RAY_STEP[diff]
            s = to + step
            while s != ksq:
                if sq[s] and s != frm:
                    return False
                s += step
            return True

        return may

    def may_check(self, m: tuple) -> bool:
        """Cheap superset test: could this move give check?"""
        return self.check_filter()(m)

    def gives_check(self) -> bool:
        """After a move: is the side now to move in check?"""
        return self.attacked(self.kings[self.turn], -self.turn)

    def find_move(self, move: Move) -> tuple:
        frm, to = to88(move.from_square), to88(move.to_square)
        promo = PIECE_KIND_CODE[move.promotion] if move.promotion else 0
        for m in self.legal_moves():
            if m[0] == frm and m[1] == to and m[2] == promo:
                return m
        raise ValueError(f"illegal move {move.uci()}")

    def to_move(self, m: tuple) -> Move:
        """Wrap an internal move with its descriptive flags."""
        frm, to, promo, flag = m
        capture = bool(self.sq[to]) or flag == EP_CAPTURE
        self.make(m)
        check = self.in_check()
        self.unmake()
        return Move(from88(frm), from88(to), KIND_LETTERS[promo - 1] if promo else None,
                    capture=capture, check=check, castle=flag == CASTLE,
                    en_passant=flag == EP_CAPTURE)

    def perft(self, depth: int) -> int:
        if depth == 0:
            return 1
        moves = self.legal_moves()
        if depth == 1:
            return len(moves)
        total = 0
        for m in moves:
            self.make(m)
            total += self.perft(depth - 1)
            self.unmake()
        return total


# ---------------------------------------------------------------------------
# public move generation and notation


def legal_moves(pos: Position) -> list[Move]:
    b = Board.from_position(pos)
    return [b.to_move(m) for m in b.legal_moves()]


def perft(pos: Position, depth: int) -> int:
    return Board.from_position(pos).perft(depth)


def san(pos: Position, move: Move) -> str:
    """Standard algebraic notation for a legal move, with +/# suffix."""
    b = Board.from_position(pos)
    return board_san(b, b.find_move(move))


def board_san(b: Board, m: tuple) -> str:
    frm, to, promo, flag = m
    piece = abs(b.sq[frm])
    if flag == CASTLE:
        text = "O-O" if to > frm else "O-O-O"
    else:
        capture = bool(b.sq[to]) or flag == EP_CAPTURE
        dest = SQUARE_NAMES[from88(to)]
        if piece == PAWN:
            text = (FILES[frm & 7] + "x" if capture else "") + dest
            if promo:
                text += "=" + KIND_LETTERS[promo - 1]
        else:
            rivals = [o for o in b.legal_moves()
                      if o[1] == to and o[0] != frm and abs(b.sq[o[0]]) == piece]
            disamb = ""
            if rivals:
                same_file = any((o[0] & 7) == (frm & 7) for o in rivals)
                same_rank = any((o[0] >> 4) == (frm >> 4) for o in rivals)
                name = SQUARE_NAMES[from88(frm)]
                if not same_file:
                    disamb = name[0]
                elif not same_rank:
                    disamb = name[1]
                else:
                    disamb = name
            text = KIND_LETTERS[piece - 1] + disamb + ("x" if capture else "") + dest
    b.make(m)
    if b.in_check():
        text += "#" if not b.has_legal_move() else "+"
    b.unmake()
    return text


def parse_san(pos: Position, text: str) -> Move:
    """Resolve SAN text against the legal moves of ``pos``.

    Check and annotation suffixes are ignored; ``N`` and ``S`` both mean a
    knight, and ``0-0`` castling is accepted.
    """
    want = text.strip().rstrip("+#!?").replace("0-0-0", "O-O-O").replace("0-0", "O-O")
    want = want.replace("S", "N")
    b = Board.from_position(pos)
    matches = []
    for m in b.legal_moves():
        cand = board_san(b, m).rstrip("+#")
        if cand == want or cand.replace("=", "") == want.replace("=", ""):
            matches.append(m)
    if len(matches) != 1:
        # tolerate over-specified moves such as "Rhxh4" or "Ng1f3"
        loose = [m for m in b.legal_moves() if _san_loose_match(b, m, want)]
        if len(loose) == 1:
            matches = loose
    if len(matches) != 1:
        raise ValueError(f"cannot resolve move {text!r} in {emit_fen(pos)}")
    return b.to_move(matches[0])


def _san_loose_match(b: Board, m: tuple, want: str) -> bool:
    frm, to, promo, flag = m
    piece = abs(b.sq[frm])
    body = want.replace("x", "").replace("=", "")
    if flag == CASTLE or len(body) < 2:
        return False
    promo_letter = ""
    if body[-1] in "NBRQ" and piece == PAWN:
        promo_letter, body = body[-1], body[:-1]
    if (KIND_LETTERS[promo - 1] if promo else "") != promo_letter:
        return False
    if body[-2:] != SQUARE_NAMES[from88(to)]:
        return False
    head = body[:-2]
    letter = "P"
    if head and head[0] in "NBRQK":
        letter, head = head[0], head[1:]
    if KIND_LETTERS[piece - 1] != letter:
        return False
    name = SQUARE_NAMES[from88(frm)]
    return all(ch in name for ch in head)


# ---------------------------------------------------------------------------
# position metrics


def shannon_value(pos: Position, color: str) -> int:
    return sum(SHANNON_WEIGHTS[p.kind] for _, p in pos.pieces(color))


def material_difference(pos: Position) -> int:
    return abs(shannon_value(pos, WHITE) - shannon_value(pos, BLACK))


def neighbours(sq: int) -> Iterator[int]:
    f, r = square_file(sq), square_rank(sq)
    for df in (-1, 0, 1):
        for dr in (-1, 0, 1):
            if (df or dr) and 0 <= f + df < 8 and 0 <= r + dr < 8:
                yield (r + dr) * 8 + f + df


def sparsity_of(occupied: Iterable[int]) -> float:
    occ = set(occupied)
    if not occ:
        raise ValueError("sparsity needs at least one piece")
    field_total = sum(1 for s in occ for t in neighbours(s) if t in occ)
    return 1.0 / (field_total / len(occ) + 1.0)


def sparsity(pos: Position) -> float:
    """Inverse of one plus the mean number of occupied neighbour squares."""
    return sparsity_of(sq for sq, _ in pos.pieces())


def flight_squares(pos: Position, color: str) -> set[int]:
    """Squares the king of ``color`` could move to if it were that side's turn."""
    b = Board.from_position(pos, validate=False)
    side = 1 if color == WHITE else -1
    if b.turn != side:
        b.turn = side
        b.ep = -1
    ksq = b.kings[side]
    out = set()
    for m in b.pseudo_moves():
        if m[0] == ksq and m[3] != CASTLE and b.is_legal(m):
            out.add(from88(m[1]))
    return out
