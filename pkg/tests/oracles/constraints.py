"""Constraint check for a composed position, written apart from the composer.

Reads the two source strings' raw values and measures the position with
python-chess, so nothing is shared with the composer's own bookkeeping.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal

from . import position_metrics


def _round(v: float) -> int:
    return int(Decimal(repr(float(v))).quantize(Decimal(1), ROUND_HALF_UP))


def violations(fen: str, first: dict, second: dict) -> list[str]:
    problems = []
    white, black = position_metrics.counts(fen)
    for name, have in (("white_pieces", white), ("black_pieces", black)):
        vals = [_round(s[name]) for s in (first, second) if s.get(name) is not None]
        if vals and not min(vals) <= have <= max(vals):
            problems.append(f"{name} {have} outside {min(vals)}..{max(vals)}")
    caps = [s["material_difference"] for s in (first, second) if s.get("material_difference") is not None]
    if caps and position_metrics.material_difference(fen) > max(caps):
        problems.append("material difference above the larger source value")
    if first.get("sparsity") is not None and second.get("sparsity") is not None:
        total = first["sparsity"] + second["sparsity"]
        value = position_metrics.sparsity(fen)
        if total >= 1 and value < 0.25:
            problems.append(f"sparsity {value:.3f} below 0.25 with source sum {total:.3f}")
        if total < 1 and value > 0.75:
            problems.append(f"sparsity {value:.3f} above 0.75 with source sum {total:.3f}")
    return problems
