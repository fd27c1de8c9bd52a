import json
from pathlib import Path

import pytest

from dsns.chess_core import IllegalPositionError, Position, parse_fen
from dsns.corpus_io import load_corpus
from dsns.mate_solver import (
    BudgetExhausted,
    MateSearch,
    SolveLimits,
    count_variations,
    detect_duals,
    find_keys,
    shortest_mate,
    solve_mate3,
    verify_tree,
)
from oracles import chess_oracle

ORACLE_KEYS = json.loads((Path(__file__).parent / "data" / "oracle_keys.json").read_text())
CORPUS = {e.index: e for e in load_corpus()}
LIMITS = SolveLimits(max_nodes=10_000_000)


def test_limits_validation():
    with pytest.raises(ValueError):
        SolveLimits()
    with pytest.raises(ValueError):
        SolveLimits(max_nodes=0)
    with pytest.raises(ValueError):
        SolveLimits(max_time=-1.0)


def test_mate_in_one():
    pos = parse_fen("7k/8/5K2/8/8/8/8/6Q1 w - - 0 1")
    assert shortest_mate(pos, LIMITS) == 1
    report = find_keys(pos, LIMITS)
    assert report.shortest_mate_depth == 1
    assert report.tree.root.san == "Qg7#"
    assert set(report.key_sans) == set(chess_oracle.keys(pos.fen()))


def test_published_one_mover_is_not_a_legal_position():
    with pytest.raises(IllegalPositionError):
        parse_fen("8/8/8/8/8/5k2/8/5K1Q w - - 0 1")


def test_bare_kings_have_no_mate():
    pos = parse_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1")
    assert solve_mate3(pos, LIMITS) is None
    report = find_keys(pos, LIMITS)
    assert report.keys == [] and report.shortest_mate_depth == 0 and not report.is_cooked


def test_black_to_move_is_rejected():
    with pytest.raises(ValueError):
        MateSearch(parse_fen("4k3/8/8/8/8/8/8/4K3 b - - 0 1"), LIMITS)


def test_promotion_line_underpromotes():
    report = find_keys(CORPUS[68].position, LIMITS)
    assert report.key_sans == ["Kc6"]
    assert report.tree.main_line() == ["Kc6", "Ka7", "c8=R", "Ka6", "Ra8#"]
    assert report.variations == 1
    assert (report.dual_count_move2, report.dual_count_move3) == (0, 0)
    assert not report.is_cooked
    assert verify_tree(report.tree) == []


def test_move_three_duals_are_counted():
    report = find_keys(CORPUS[4].position, LIMITS)
    assert report.key_sans == ["Rxf3"]
    assert report.dual_count_move3 == 2
    assert detect_duals(report.tree) == (report.dual_count_move2, report.dual_count_move3)
    assert count_variations(report.tree) == report.variations == len(report.tree.leaves())


def test_cooked_problem_has_two_keys():
    report = find_keys(CORPUS[3].position, LIMITS)
    assert report.is_cooked
    assert sorted(report.key_sans) == ORACLE_KEYS["3"]


@pytest.mark.parametrize("index", [1, 2, 5, 10, 20, 42, 50, 60, 75, 90])
def test_keys_match_reference_search(index):
    report = find_keys(CORPUS[index].position, LIMITS)
    assert sorted(report.key_sans) == ORACLE_KEYS[str(index)]
    assert report.shortest_mate_depth == chess_oracle.shortest_mate(CORPUS[index].fen)


@pytest.mark.parametrize("index", [4, 12, 30, 68])
def test_tree_leaves_are_mates_on_reference_board(index):
    import chess

    tree = solve_mate3(CORPUS[index].position, LIMITS)
    assert verify_tree(tree) == []
    for line in tree.leaves():
        board = chess.Board(CORPUS[index].fen)
        for text in line:
            board.push_san(text)
        assert board.is_checkmate()
        assert len(line) <= 5


def test_tree_defenses_cover_every_reply():
    import chess

    tree = solve_mate3(CORPUS[12].position, LIMITS)
    board = chess.Board(CORPUS[12].fen)
    board.push_san(tree.root.san)
    assert sorted(d.move.uci() for d in tree.defenses) == sorted(m.uci() for m in board.legal_moves)


def test_node_budget_exhaustion_raises():
    with pytest.raises(BudgetExhausted):
        find_keys(CORPUS[29].position, SolveLimits(max_nodes=100))


def test_time_budget_exhaustion_raises():
    with pytest.raises(BudgetExhausted):
        find_keys(CORPUS[29].position, SolveLimits(max_time=1e-6))


def test_verify_tree_reports_broken_trees():
    tree = solve_mate3(CORPUS[68].position, LIMITS)
    tree.root.defenses[0].continuations[0].defenses = []  # c8=R is not mate by itself
    problems = verify_tree(tree)
    assert problems and "not mate" in problems[0]


def test_mate_depth_is_exact_in_iterative_search():
    # a mate in two must not be reported as a three-mover
    fen = "k7/8/1K6/8/8/8/8/1R6 w - - 0 1"
    assert shortest_mate(parse_fen(fen), LIMITS) == chess_oracle.shortest_mate(fen)


def test_search_on_position_with_castling_rights():
    pos = parse_fen("4k3/8/8/8/8/8/8/R3K2R w KQ - 0 1")
    assert isinstance(pos, Position)
    report = find_keys(pos, LIMITS)
    assert sorted(report.key_sans) == sorted(chess_oracle.keys(pos.fen()))
