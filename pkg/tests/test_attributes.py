import io
import math

import numpy as np
import pytest

from dsns.attributes import (
    AUDIO_SCHEMA,
    CHESS_SCHEMA,
    IMAGE_SCHEMA,
    ExtractionError,
    PcmAudio,
    RasterImage,
    audio_attributes,
    chess_attributes,
    crest_factor,
    extract_file,
    image_attributes,
    peak_db,
    read_pnm,
    read_wav,
    sequence_from_sans,
    write_pnm,
    write_wav,
    zero_crossing_rate,
)
from dsns.chess_core import parse_fen, legal_moves
from dsns.attributes import ChessSequence
from dsns.corpus_io import corpus_sequences, load_chess_fixture, load_corpus

CORPUS = {e.index: e for e in load_corpus()}


def rgb(width, height, pixels):
    return RasterImage(width, height, 3, np.array(pixels, dtype=np.uint8))


def sine(n=48_000, freq=1000, rate=48_000):
    return np.sin(2 * np.pi * freq * np.arange(n) / rate)


@pytest.mark.parametrize("fen, expected", [
    ("8/1p2BN1K/4Qp2/n1R4p/3k2P1/P5n1/4P3/1r6 w - - 0 1", (8, 7, 23, 14, 9)),
    ("5rk1/5qpn/8/3N4/3B4/1B6/1KP3R1/8 w - - 0 1", (6, 5, 15, 18, 3)),
    ("5Q2/b2k1P2/1n1NNn2/1P1p4/6P1/8/8/7K w - - 0 1", (7, 5, 18, 10, 8)),
])
def test_chess_leading_values(fen, expected):
    pos = parse_fen(fen)
    # the leading values depend only on the start position, so any line will do
    moves, cur = [], pos
    for _ in range(5):
        mv = sorted(legal_moves(cur), key=lambda m: m.uci())[0]
        moves.append(mv)
        cur = cur.push(mv)
    s = chess_attributes(ChessSequence(pos, moves))
    assert s.schema == CHESS_SCHEMA
    assert s.values[:5] == expected


def test_chess_movers_moves_and_year():
    seq = sequence_from_sans(CORPUS[68].position, ["Kc6", "Ka7", "c8=R", "Ka6", "Ra8#"])
    s = chess_attributes(seq)
    assert s["moves"] == 3
    assert s["first_mover"] == 6 and s["last_mover"] == 4
    assert s["year"] is None
    assert chess_attributes(sequence_from_sans(CORPUS[68].position, ["Kc6"], year=1999))["year"] == 1999


def test_chess_sequence_errors():
    with pytest.raises(ExtractionError):
        chess_attributes(ChessSequence(CORPUS[68].position, []))


def test_every_replayable_corpus_line_has_three_white_moves():
    seqs = corpus_sequences()
    assert len(seqs) >= 85
    for seq in seqs:
        assert chess_attributes(seq)["moves"] == 3


def test_bundled_fixture_matches_fresh_extraction():
    fixture = {s.object_id: s for s in load_chess_fixture().strings}
    for seq in corpus_sequences():
        assert chess_attributes(seq).values == fixture[seq.object_id].values


def test_uniform_white_image():
    s = image_attributes(rgb(2, 2, [255] * 12))
    assert s.schema == IMAGE_SCHEMA
    assert s["pixels"] == 4 and s["colors"] == 1 and s["aspect_ratio"] == 1.0
    assert s["contrast"] == 0 and s["noisiness"] == 0
    assert s["brightness"] == pytest.approx(255.0) and s["lightness"] == 255.0
    assert s["objects"] is None and s["year"] is None


def test_checkerboard_image():
    s = image_attributes(RasterImage(2, 2, 1, np.array([0, 255, 255, 0], dtype=np.uint8)))
    assert s["brightness"] == 127.5
    assert s["contrast"] == 127.5  # the largest standard deviation two levels can give
    assert s["colors"] == 2


def test_image_flip_invariance():
    rng = np.random.default_rng(3)
    data = rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
    base = image_attributes(RasterImage(7, 5, 3, data))
    for flipped in (data[::-1], data[:, ::-1]):
        s = image_attributes(RasterImage(7, 5, 3, np.ascontiguousarray(flipped)))
        for name in ("brightness", "contrast", "noisiness", "lightness"):
            assert s[name] == pytest.approx(base[name], rel=1e-12)


def test_image_validation():
    with pytest.raises(ExtractionError):
        RasterImage(2, 2, 3, np.zeros(5, dtype=np.uint8))
    with pytest.raises(ExtractionError):
        RasterImage(0, 2, 1, np.zeros(0, dtype=np.uint8))


@pytest.mark.parametrize("channels", [1, 3])
def test_pnm_round_trip(tmp_path, channels):
    rng = np.random.default_rng(channels)
    img = RasterImage(4, 3, channels, rng.integers(0, 256, 12 * channels, dtype=np.uint8))
    data = write_pnm(img)
    back = read_pnm(data)
    assert (back.width, back.height, back.channels) == (4, 3, channels)
    assert np.array_equal(back.samples, img.samples)
    path = tmp_path / ("x.pgm" if channels == 1 else "x.ppm")
    path.write_bytes(data)
    s = extract_file(path, year=1917)
    assert s["year"] == 1917 and s["file_size_bits"] == len(data) * 8


def test_pnm_header_comments_and_bad_magic():
    img = read_pnm(b"P5\n# comment\n2 1\n255\n\x00\xff")
    assert list(img.samples) == [0, 255]
    with pytest.raises(ExtractionError):
        read_pnm(b"P3\n1 1\n255\n0 0 0")


def test_zero_signal():
    x = np.zeros(4096)
    assert zero_crossing_rate(x) == 0.0
    assert crest_factor(x) is None
    s = audio_attributes(PcmAudio(1, 8000, 16, np.zeros(4096, dtype=np.int64)))
    assert s["sound_energy"] == 0.0 and s["sound_efficiency"] is None


def test_sine_crest_factor():
    assert crest_factor(sine()) == pytest.approx(math.sqrt(2), abs=1e-6)


def test_square_wave_crest_factor():
    x = np.where(np.arange(4800) % 48 < 24, 1.0, -1.0)
    assert crest_factor(x) == 1.0


def test_scaling_invariance():
    frames = np.round(sine(4800) * 8000).astype(np.int64)
    a = PcmAudio(1, 48_000, 16, frames)
    b = PcmAudio(1, 48_000, 16, frames * 2)
    sa, sb = audio_attributes(a), audio_attributes(b)
    assert sa["sound_energy"] == sb["sound_energy"]
    assert sa["sound_efficiency"] == pytest.approx(sb["sound_efficiency"], rel=1e-12)
    assert peak_db(b) - peak_db(a) == pytest.approx(20 * math.log10(2), abs=1e-9)


def test_audio_values_and_schema():
    frames = np.round(sine(48_000) * 0.5 * (2 ** 23 - 1)).astype(np.int64)
    s = audio_attributes(PcmAudio(1, 48_000, 24, frames, year=1801))
    assert s.schema == AUDIO_SCHEMA
    assert s["channels"] == 1 and s["sample_rate"] == 48_000 and s["sample_size"] == 24
    assert s["bitrate"] == 48_000 * 24 and s["year"] == 1801
    assert s["sound_efficiency"] == pytest.approx(math.sqrt(2), abs=1e-5)
    assert s["average_loudness"] == pytest.approx(1.0, abs=1e-4)  # peak to peak of a half-scale sine
    # two crossings per cycle, 1000 cycles over 47,999 sample gaps
    assert s["sound_energy"] == pytest.approx(2000 / 47_999, abs=2 / 47_999)


@pytest.mark.parametrize("depth", [8, 16, 24])
def test_wav_round_trip(tmp_path, depth):
    rng = np.random.default_rng(depth)
    top = 2 ** (depth - 1)
    frames = rng.integers(-top, top, 600)
    a = PcmAudio(2, 22_050, depth, frames)
    data = write_wav(a)
    back = read_wav(io.BytesIO(data))
    assert (back.channels, back.sample_rate, back.bit_depth) == (2, 22_050, depth)
    assert np.array_equal(back.frames, frames)
    path = tmp_path / "x.wav"
    path.write_bytes(data)
    assert extract_file(path)["file_size_bytes"] == len(data)


def test_audio_errors(tmp_path):
    with pytest.raises(ExtractionError):
        PcmAudio(2, 8000, 16, np.zeros(3, dtype=np.int64))
    with pytest.raises(ExtractionError):
        PcmAudio(1, 8000, 12, np.zeros(4, dtype=np.int64))
    with pytest.raises(ExtractionError):
        audio_attributes(PcmAudio(1, 8000, 16, np.zeros(0, dtype=np.int64)))
    with pytest.raises(ExtractionError):
        read_wav(io.BytesIO(b"not a wav file at all"))
    bad = tmp_path / "x.mp3"
    bad.write_bytes(b"")
    with pytest.raises(ExtractionError):
        extract_file(bad)
