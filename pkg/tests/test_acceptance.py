"""Acceptance checks, one group per criterion.

Run with plain pytest (``pytest tests/test_acceptance.py``) or as a script
(``python3 tests/test_acceptance.py``); either way the run ends with one
PASS/FAIL line per criterion. The 50,000-attempt composing run (criterion
5) takes 20 to 25 minutes on one core.
"""

import io
import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import test_properties
from dsns.attributes import ChessSequence, PcmAudio, RasterImage, audio_attributes, chess_attributes
from dsns.attributes import crest_factor, image_attributes, zero_crossing_rate
from dsns.chess_core import STARTING_FEN, legal_moves, parse_fen, perft
from dsns.cli import main as cli_main
from dsns.composer import (
    CONVENTIONS,
    STRATEGIES,
    BASELINE_BLACK_COUNT,
    BASELINE_WHITE_COUNT,
    ComposerConfig,
    CycleSources,
    check_conventions,
    compose_cycle,
    optimize,
)
from dsns.corpus_io import load_chess_fixture, load_corpus
from dsns.engine import DsnsString, deviation, merge_digits, summative_division
from dsns.mate_solver import SolveLimits, find_keys
from oracles import chess_oracle, constraints as constraint_oracle, position_metrics
from oracles.arithmetic import deviation_exact, merge_walk, term_3dp

ORACLE_KEYS = json.loads((Path(__file__).parent / "data" / "oracle_keys.json").read_text())
COOKED = (3, 7, 15, 21, 39, 50, 67, 82, 87, 90)
SOLVE_LIMITS = SolveLimits(max_nodes=10_000_000)
COMPOSE_SEED = 2024
COMPOSE_ATTEMPTS = 50_000


def criterion(n):
    return pytest.mark.criterion(n)


def full_validation(c, config, sources=None):
    """Problems found by re-checking a composition through both routes."""
    problems = []
    report = find_keys(c.position, SOLVE_LIMITS)
    if report.shortest_mate_depth != 3:
        problems.append(f"re-solve depth {report.shortest_mate_depth}")
    if chess_oracle.shortest_mate(c.fen) != 3:
        problems.append("reference search does not find an exact mate in 3")
    if optimize(c.position, config.solve_limits, config.passes) != c.position:
        problems.append("optimizing again removes a piece")
    verdict = check_conventions(c, config.conventions, config.strict_duals)
    problems += [f"convention {k} fails" for k, ok in verdict.items() if not ok]
    for line in c.solution.leaves():
        board = chess_oracle.chess.Board(c.fen)
        for san in line:
            board.push_san(san)
        if not board.is_checkmate():
            problems.append(f"line {' '.join(line)} does not end in mate")
    if sources is not None:
        problems += constraint_oracle.violations(c.fen, sources[0].as_dict(), sources[1].as_dict())
    return problems


# -- 1 ---------------------------------------------------------------------------

@criterion(1)
def test_worked_deviation(note):
    d = deviation(DsnsString("1", ("a", "b", "c"), (6, 5, 13)), DsnsString("2", ("a", "b", "c"), (7, 7, 9)))
    assert abs(d.value - 7.275) <= 1e-9
    note(f"deviation = {d.value!r}")


@criterion(1)
@pytest.mark.parametrize("a, b, shown", [(6, 7, "2.024"), (5, 7, "2.114"), (13, 9, "2.137")])
def test_worked_summative_divisions(a, b, shown):
    assert f"{summative_division(a, b):.3f}" == shown
    assert str(term_3dp(Fraction(a, b) + Fraction(b, a))) == shown


# -- 2 ---------------------------------------------------------------------------

@criterion(2)
def test_worked_merge(note):
    forward = merge_digits("126.21", "35722.11")
    reverse = merge_digits("35722.11", "126.21")
    assert forward == "122.11" == merge_walk("126.21", "35722.11")
    assert reverse == "35122.11" == merge_walk("35722.11", "126.21")
    note(f"merge = {forward}, reverse = {reverse}")


# -- 3 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def corpus_solutions():
    out = {}
    for e in load_corpus():
        start = time.perf_counter()
        report = find_keys(e.position, SOLVE_LIMITS)
        out[e.index] = (report, time.perf_counter() - start)
    return out


@criterion(3)
def test_every_corpus_position_has_a_key(corpus_solutions, note):
    missing = [i for i, (r, _) in corpus_solutions.items() if not r.keys]
    assert missing == []
    times = [t for _, t in corpus_solutions.values()]
    note(f"90/90 solved; slowest {max(times):.2f}s, total {sum(times):.1f}s")
    assert max(times) <= 5.0 and sum(times) <= 600.0


@criterion(3)
def test_cooked_corpus_positions_have_two_keys(corpus_solutions):
    short = {i: corpus_solutions[i][0].key_sans for i in COOKED if len(corpus_solutions[i][0].keys) < 2}
    assert short == {}


@criterion(3)
def test_corpus_keys_match_reference_search(corpus_solutions):
    diff = {i: r.key_sans for i, (r, _) in corpus_solutions.items()
            if sorted(r.key_sans) != ORACLE_KEYS[str(i)]}
    assert diff == {}


# -- 4 ---------------------------------------------------------------------------

@criterion(4)
def test_initial_perft():
    pos = parse_fen(STARTING_FEN)
    assert [perft(pos, d) for d in (1, 2, 3)] == [20, 400, 8902]
    board = chess_oracle.chess.Board()
    assert [chess_oracle.perft(board, d) for d in (1, 2, 3)] == [20, 400, 8902]


# -- 5 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def dsns_run():
    config = ComposerConfig(strategy="dsns", conventions={"no-check-key"}, seed=COMPOSE_SEED)
    sample = load_chess_fixture()
    start = time.monotonic()
    comps, stats = compose_cycle(CycleSources(chess=sample), config, attempts=COMPOSE_ATTEMPTS)
    return config, sample, comps, stats, time.monotonic() - start


@criterion(5)
def test_dsns_run_emits(dsns_run, note):
    config, sample, comps, stats, elapsed = dsns_run
    assert len(sample) >= 20
    note(f"{stats.attempts} attempts over {stats.pairs} string pairs, {len(comps)} emitted, "
         f"{elapsed / 60:.1f} min")
    assert stats.attempts == COMPOSE_ATTEMPTS
    assert comps
    assert elapsed <= 30 * 60


@criterion(5)
def test_dsns_emissions_validate(dsns_run):
    config, _, comps, _, _ = dsns_run
    failures = {}
    for c in comps:
        assert len(c.sources) == 2
        problems = full_validation(c, config, c.sources)
        if problems:
            failures[c.fen] = problems
    assert failures == {}


# -- 6 ---------------------------------------------------------------------------

@criterion(6)
def test_bench_matrix(capsys, note):
    sets = ["none", *CONVENTIONS, ",".join(sorted(CONVENTIONS))]
    code = cli_main(["bench", "--convention-sets", ";".join(sets), "--budget-attempts", "8",
                     "--cycles", "1", "--seed", "5"])
    out = capsys.readouterr().out
    assert code == 0
    lines = out.strip().splitlines()
    header = lines[0].split()
    assert header == ["strategy", "conventions", "cycles", "attempts", "emitted", "cph",
                      "pieces", "variations", "duals", "sparsity", "valid"]
    rows = [line.split() for line in lines[1:]]
    assert {(r[0], r[1]) for r in rows} == {(s, c) for s in STRATEGIES for c in sets}
    for r in rows:
        assert r[3] == "8"
        emitted, (valid, total) = int(r[4]), map(int, r[10].split("/"))
        assert valid == total == emitted
    note(f"{len(rows)} rows ({len(STRATEGIES)} strategies x {len(sets)} convention sets)")


@criterion(6)
def test_random_emissions_pass_the_same_validation(note):
    config = ComposerConfig(strategy="random", conventions={"no-check-key"}, seed=7)
    comps, stats = compose_cycle(CycleSources(), config, attempts=150)
    assert comps
    failures = {c.fen: p for c in comps if (p := full_validation(c, config))}
    assert failures == {}
    for c in comps:
        white, black = position_metrics.counts(c.fen)
        assert white <= BASELINE_WHITE_COUNT[1] and black <= BASELINE_BLACK_COUNT[1]
    note(f"random strategy: {len(comps)} emissions from {stats.attempts} attempts, all valid")


# -- 7 ---------------------------------------------------------------------------

@criterion(7)
def test_property_suites_within_a_minute(note):
    suites = (test_properties.test_deviation_arithmetic_properties,
              test_properties.test_merge_properties,
              test_properties.test_search_properties)
    start = time.perf_counter()
    for suite in suites:
        suite()
    elapsed = time.perf_counter() - start
    note(f"{len(suites)} suites x {test_properties.EXAMPLES} cases in {elapsed:.1f}s")
    assert elapsed <= 60.0


# -- 8 ---------------------------------------------------------------------------

@criterion(8)
def test_uniform_image_has_no_contrast_or_noise():
    s = image_attributes(RasterImage(4, 3, 3, np.full(36, 200, dtype=np.uint8)))
    assert s["contrast"] == 0 and s["noisiness"] == 0


@criterion(8)
def test_sine_crest_factor():
    x = np.sin(2 * np.pi * 1000 * np.arange(48_000) / 48_000)
    assert abs(crest_factor(x) - math.sqrt(2)) <= 1e-6


@criterion(8)
def test_silence_has_no_zero_crossings():
    assert zero_crossing_rate(np.zeros(1000)) == 0
    assert audio_attributes(PcmAudio(1, 8000, 16, np.zeros(1000, dtype=np.int64)))["sound_energy"] == 0


@criterion(8)
@pytest.mark.parametrize("fen, expected", [
    ("8/1p2BN1K/4Qp2/n1R4p/3k2P1/P5n1/4P3/1r6 w - - 0 1", (8, 7, 23, 14, 9)),
    ("5rk1/5qpn/8/3N4/3B4/1B6/1KP3R1/8 w - - 0 1", (6, 5, 15, 18, 3)),
])
def test_chess_attributes_on_worked_rows(fen, expected):
    pos = parse_fen(fen)
    move = sorted(legal_moves(pos), key=lambda m: m.uci())[0]
    assert chess_attributes(ChessSequence(pos, [move])).values[:5] == expected


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
