"""Attribute extraction for chess sequences, raster images and PCM audio.

Each extractor returns a ``DsnsString`` with a fixed ten-attribute schema.
Image and audio features use common textbook definitions:

* brightness: mean luma, 0.299 R + 0.587 G + 0.114 B (0..255 scale)
* contrast: RMS contrast, the population standard deviation of luma
* noisiness: mean absolute response of the 4-neighbour Laplacian on luma,
  with edge pixels replicated
* lightness: mean HSL lightness, (max + min) / 2 over the channels
* average loudness: mean peak-to-peak amplitude over 1024-frame windows
* sound energy: zero-crossing rate
* dynamic range: peak level minus noise floor in dB, the floor being the
  5th percentile of window RMS
* sound efficiency: crest factor, peak over RMS
"""

from __future__ import annotations

import io
import struct
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Optional, Sequence

import numpy as np

from .chess_core import (
    BLACK,
    PIECE_KIND_CODE,
    WHITE,
    Move,
    Position,
    material_difference,
    parse_san,
    shannon_value,
    sparsity,
)
from .engine import DsnsString

CHESS_SCHEMA = (
    "white_pieces",
    "black_pieces",
    "white_shannon",
    "black_shannon",
    "material_difference",
    "moves",
    "year",
    "first_mover",
    "last_mover",
    "sparsity",
)

IMAGE_SCHEMA = (
    "pixels",
    "colors",
    "objects",
    "year",
    "aspect_ratio",
    "brightness",
    "contrast",
    "noisiness",
    "lightness",
    "file_size_bits",
)

AUDIO_SCHEMA = (
    "channels",
    "sample_rate",
    "file_size_bytes",
    "year",
    "average_loudness",
    "sound_energy",
    "dynamic_range",
    "bitrate",
    "sample_size",
    "sound_efficiency",
)

LOUDNESS_WINDOW = 1024
NOISE_FLOOR_PERCENTILE = 5.0


class ExtractionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# chess


@dataclass
class ChessSequence:
    start: Position
    moves: list
    year: Optional[int] = None
    object_id: Optional[str] = None


def chess_attributes(seq: ChessSequence) -> DsnsString:
    pos = seq.start
    if not seq.moves:
        raise ExtractionError("a sequence needs at least one move")
    movers = []
    current = pos
    for move in seq.moves:
        piece = current.piece_at(move.from_square)
        if piece is None or piece.color != current.turn:
            raise ExtractionError(f"move {move.uci()} does not move a piece of the side to move")
        try:
            current = current.push(move)
        except ValueError as exc:
            raise ExtractionError(str(exc)) from None
        movers.append(piece)
    white_moves = sum(1 for p in movers if p.color == WHITE)
    values = (
        pos.piece_count(WHITE),
        pos.piece_count(BLACK),
        shannon_value(pos, WHITE),
        shannon_value(pos, BLACK),
        material_difference(pos),
        white_moves,
        seq.year,
        PIECE_KIND_CODE[movers[0].kind],
        PIECE_KIND_CODE[movers[-1].kind],
        sparsity(pos),
    )
    return DsnsString(seq.object_id or pos.fen(), CHESS_SCHEMA, values)


# ---------------------------------------------------------------------------
# images


@dataclass
class RasterImage:
    width: int
    height: int
    channels: int
    samples: np.ndarray  # uint8, row-major, length width * height * channels
    year: Optional[int] = None
    file_size_bits: Optional[int] = None
    object_count: Optional[int] = None
    object_id: str = "image"

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.uint8).ravel()
        if self.width <= 0 or self.height <= 0:
            raise ExtractionError("image has a zero dimension")
        if self.channels not in (1, 3):
            raise ExtractionError("images must have 1 or 3 channels")
        if self.samples.size != self.width * self.height * self.channels:
            raise ExtractionError("sample count does not match the image dimensions")

    def pixels(self) -> np.ndarray:
        """(height, width, channels) float array."""
        return self.samples.reshape(self.height, self.width, self.channels).astype(float)


def luma(img: RasterImage) -> np.ndarray:
    px = img.pixels()
    if img.channels == 1:
        return px[:, :, 0]
    return 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]


def laplacian_noise(y: np.ndarray) -> float:
    padded = np.pad(y, 1, mode="edge")
    lap = (padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
           - 4.0 * y)
    return float(np.mean(np.abs(lap)))


def image_attributes(img: RasterImage) -> DsnsString:
    px = img.pixels()
    y = luma(img)
    flat = img.samples.reshape(-1, img.channels)
    colors = len(np.unique(flat, axis=0))
    lightness = (px.max(axis=2) + px.min(axis=2)) / 2.0
    size_bits = img.file_size_bits
    if size_bits is None:
        size_bits = img.samples.size * 8
    values = (
        img.width * img.height,
        colors,
        img.object_count,
        img.year,
        img.width / img.height,
        float(y.mean()),
        float(y.std()),
        laplacian_noise(y),
        float(lightness.mean()),
        size_bits,
    )
    return DsnsString(img.object_id, IMAGE_SCHEMA, values)


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def read_pnm(source: str | Path | bytes, year: Optional[int] = None) -> RasterImage:
    """Read a binary PGM (P5) or PPM (P6) image with 8-bit samples."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        data = path.read_bytes()
        oid = path.name
    else:
        data, oid = source, "image"
    magic, pos = _read_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise ExtractionError(f"unsupported image format {magic!r}")
    w, pos = _read_token(data, pos)
    h, pos = _read_token(data, pos)
    maxval, pos = _read_token(data, pos)
    width, height, maxv = int(w), int(h), int(maxval)
    if maxv > 255:
        raise ExtractionError("only 8-bit PGM/PPM images are supported")
    channels = 1 if magic == b"P5" else 3
    body = data[pos + 1: pos + 1 + width * height * channels]
    samples = np.frombuffer(body, dtype=np.uint8)
    if maxv != 255:
        samples = np.round(samples.astype(float) * 255.0 / maxv).astype(np.uint8)
    return RasterImage(width, height, channels, samples, year, len(data) * 8, object_id=oid)


def write_pnm(img: RasterImage) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = magic + f"\n{img.width} {img.height}\n255\n".encode()
    return header + img.samples.tobytes()


# ---------------------------------------------------------------------------
# audio


@dataclass
class PcmAudio:
    channels: int
    sample_rate: int
    bit_depth: int
    frames: np.ndarray  # signed integer samples, interleaved by channel
    year: Optional[int] = None
    file_size_bytes: Optional[int] = None
    bitrate: Optional[int] = None
    object_id: str = "audio"

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.int64).ravel()
        if self.bit_depth not in (8, 16, 24):
            raise ExtractionError("bit depth must be 8, 16 or 24")
        if self.channels < 1 or self.frames.size % self.channels:
            raise ExtractionError("frame data is not divisible by the channel count")

    def mono(self) -> np.ndarray:
        """Channel-averaged signal scaled so that full scale is 1.0."""
        data = self.frames.reshape(-1, self.channels).astype(float).mean(axis=1)
        return data / float(2 ** (self.bit_depth - 1))


def _window_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # a trailing partial window is ignored unless it is the only one
    n = max(1, len(x) // LOUDNESS_WINDOW)
    windows = [x[i * LOUDNESS_WINDOW:(i + 1) * LOUDNESS_WINDOW] for i in range(n)]
    p2p = np.array([w.max() - w.min() for w in windows])
    rms = np.array([np.sqrt(np.mean(w * w)) for w in windows])
    return p2p, rms


def zero_crossing_rate(x: np.ndarray) -> float:
    if len(x) < 2:
        return 0.0
    s = np.sign(x)
    s = s[s != 0]  # passing through an exact zero sample still counts once
    return float(np.count_nonzero(s[:-1] * s[1:] < 0)) / (len(x) - 1)


def crest_factor(x: np.ndarray) -> Optional[float]:
    rms = float(np.sqrt(np.mean(x * x)))
    if rms == 0.0:
        return None
    return float(np.max(np.abs(x))) / rms


def peak_db(a: PcmAudio) -> float:
    """Peak level in dB relative to full scale, floored at one quantization step."""
    lsb = 1.0 / 2 ** (a.bit_depth - 1)
    return 20.0 * np.log10(max(float(np.max(np.abs(a.mono()))), lsb))


def dynamic_range(a: PcmAudio) -> float:
    x = a.mono()
    lsb = 1.0 / 2 ** (a.bit_depth - 1)
    _, rms = _window_stats(x)
    floor = max(float(np.percentile(rms, NOISE_FLOOR_PERCENTILE)), lsb)
    return peak_db(a) - 20.0 * np.log10(floor)


def audio_attributes(a: PcmAudio) -> DsnsString:
    if a.frames.size == 0:
        raise ExtractionError("audio has no frames")
    x = a.mono()
    p2p, _ = _window_stats(x)
    size = a.file_size_bytes
    if size is None:
        size = 44 + a.frames.size * a.bit_depth // 8
    bitrate = a.bitrate if a.bitrate is not None else a.sample_rate * a.channels * a.bit_depth
    values = (
        a.channels,
        a.sample_rate,
        size,
        a.year,
        float(p2p.mean()),
        zero_crossing_rate(x),
        dynamic_range(a),
        bitrate,
        a.bit_depth,
        crest_factor(x),
    )
    return DsnsString(a.object_id, AUDIO_SCHEMA, values)


def read_wav(source: str | Path | BinaryIO, year: Optional[int] = None) -> PcmAudio:
    """Read an uncompressed PCM WAV file (8, 16 or 24 bit)."""
    oid = Path(source).name if isinstance(source, (str, Path)) else "audio"
    size = Path(source).stat().st_size if isinstance(source, (str, Path)) else None
    try:
        with wave.open(str(source) if isinstance(source, Path) else source, "rb") as w:
            channels, width, rate = w.getnchannels(), w.getsampwidth(), w.getframerate()
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise ExtractionError(f"cannot read WAV: {exc}") from None
    if width == 1:
        frames = np.frombuffer(raw, dtype=np.uint8).astype(np.int64) - 128
    elif width == 2:
        frames = np.frombuffer(raw, dtype="<i2").astype(np.int64)
    elif width == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int64)
        frames = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        frames = np.where(frames >= 1 << 23, frames - (1 << 24), frames)
    else:
        raise ExtractionError(f"unsupported sample width {width * 8} bits")
    return PcmAudio(channels, rate, width * 8, frames, year, size, object_id=oid)


def write_wav(a: PcmAudio) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(a.channels)
        w.setsampwidth(a.bit_depth // 8)
        w.setframerate(a.sample_rate)
        if a.bit_depth == 8:
            raw = (a.frames + 128).astype(np.uint8).tobytes()
        elif a.bit_depth == 16:
            raw = a.frames.astype("<i2").tobytes()
        else:
            v = a.frames & 0xFFFFFF
            raw = b"".join(struct.pack("<I", int(x))[:3] for x in v)
        w.writeframes(raw)
    return buf.getvalue()


def extract_file(path: str | Path, year: Optional[int] = None) -> DsnsString:
    """Dispatch on file extension for image and audio files."""
    p = Path(path)
    ext = p.suffix.lower()
    if ext in (".pgm", ".ppm", ".pnm"):
        return image_attributes(read_pnm(p, year))
    if ext == ".wav":
        return audio_attributes(read_wav(p, year))
    raise ExtractionError(f"unsupported file type {ext!r}")


def schema_for(kind: str) -> tuple:
    return {"chess": CHESS_SCHEMA, "image": IMAGE_SCHEMA, "audio": AUDIO_SCHEMA}[kind]


def sequence_from_sans(start: Position, sans: Sequence[str], year: Optional[int] = None,
                         object_id: Optional[str] = None) -> ChessSequence:
    """Build a sequence from SAN text such as ["Kc6", "Ka7", "c8=R", "Ka6", "Ra8#"]."""
    moves: list[Move] = []
    pos = start
    for text in sans:
        mv = parse_san(pos, text)
        moves.append(mv)
        pos = pos.push(mv)
    return ChessSequence(start, moves, year, object_id)
