"""DSNS core: attribute strings, deviation arithmetic, merging and pair search.

An object is reduced to a ``DsnsString``: an ordered list of numeric
attribute values, any of which may be missing (None, written NULL in
files). Two strings are compared by their *deviation*: the sum of the
absolute attribute differences plus the sum of summative divisions
(a/b + b/a), minus 2n so that identical strings deviate by exactly 0.

``search_pair`` then looks for a new pair of strings whose deviation
matches a target, first drawing values seen in the sample, then values
from each attribute's numeric range, and finally settling for the closest
pair found. ``merge_deviations`` combines deviations from different
domains digit by digit so a foreign domain can steer the target.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

EPSILON = 1e-6
DEFAULT_PRECISION = 2
# summative-division terms are rounded to this many places before summing
DEFAULT_TERM_PLACES = 3
BATCH_SIZE = 4096


class EngineError(ValueError):
    pass


class NoCommonAttributes(EngineError):
    """Every attribute was NULL in at least one of the two strings."""


class EmptyPool(EngineError):
    """No attribute of the sample has an observed value, so nothing can be drawn."""


@dataclass(frozen=True)
class DsnsString:
    object_id: str
    schema: tuple
    values: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(
            self, "values", tuple(None if v is None else float(v) for v in self.values)
        )
        if len(self.schema) != len(self.values):
            raise EngineError("schema and values differ in length")
        if len(set(self.schema)) != len(self.schema):
            raise EngineError("attribute names must be unique")

    def __getitem__(self, name: str) -> Optional[float]:
        return self.values[self.schema.index(name)]

    def as_dict(self) -> dict:
        return dict(zip(self.schema, self.values))


@dataclass(frozen=True)
class Sample:
    domain: str
    schema: tuple
    strings: tuple
    pools: dict = field(init=False, repr=False, compare=False)
    ranges: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "strings", tuple(self.strings))
        for s in self.strings:
            if s.schema != self.schema:
                raise EngineError(f"string {s.object_id!r} does not match the sample schema")
        pools, ranges = {}, {}
        for i, name in enumerate(self.schema):
            seen = sorted({s.values[i] for s in self.strings if s.values[i] is not None})
            pools[name] = tuple(seen)
            ranges[name] = (seen[0], seen[-1]) if seen else None
        object.__setattr__(self, "pools", pools)
        object.__setattr__(self, "ranges", ranges)

    def __len__(self) -> int:
        return len(self.strings)


@dataclass(frozen=True)
class Deviation:
    """A deviation value and the number of decimal places used to match it."""

    value: float
    precision: int = DEFAULT_PRECISION
    n_attributes: int = 0

    @property
    def rounded(self) -> Decimal:
        return round_half_up(self.value, self.precision)

    @property
    def text(self) -> str:
        return format(self.rounded, "f")

    def matches(self, value: float) -> bool:
        return round_half_up(value, self.precision) == self.rounded

    def __str__(self) -> str:
        return self.text


def round_half_up(value: float, places: int) -> Decimal:
    return Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-places), ROUND_HALF_UP)


def _round_term(x, places: Optional[int]):
    # identical float operations for scalars and numpy arrays
    if places is None:
        return x
    scale = 10.0 ** places
    if isinstance(x, np.ndarray):
        return np.floor(x * scale + 0.5) / scale
    return math.floor(x * scale + 0.5) / scale


def summative_division(a: float, b: float) -> float:
    """a/b + b/a, with 2 for a pair of zeros and a tiny stand-in for a single zero."""
    if a == 0 and b == 0:
        return 2.0
    if a == 0:
        a = EPSILON
    elif b == 0:
        b = EPSILON
    return a / b + b / a


def _summative_division_vec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    both = (a == 0) & (b == 0)
    a2 = np.where(a == 0, EPSILON, a)
    b2 = np.where(b == 0, EPSILON, b)
    out = a2 / b2 + b2 / a2
    return np.where(both, 2.0, out)


def reduce_nulls(s1: DsnsString, s2: DsnsString) -> tuple[list, list, list]:
    """Names and values of the attributes present in both strings."""
    if s1.schema != s2.schema:
        raise EngineError("strings have different schemas")
    names, left, right = [], [], []
    for name, a, b in zip(s1.schema, s1.values, s2.values):
        if a is not None and b is not None:
            names.append(name)
            left.append(a)
            right.append(b)
    return names, left, right


def deviation_of(
    left: Sequence[float], right: Sequence[float], term_places: Optional[int] = DEFAULT_TERM_PLACES
) -> float:
    """Deviation of two equal-length value vectors with no missing entries."""
    n = len(left)
    if n == 0:
        raise NoCommonAttributes("no attribute is present in both strings")
    acc = 0.0
    for a, b in zip(left, right):
        acc += abs(a - b)
    for a, b in zip(left, right):
        acc += _round_term(summative_division(a, b), term_places)
    return acc - 2.0 * n


def deviation(
    s1: DsnsString,
    s2: DsnsString,
    precision: int = DEFAULT_PRECISION,
    term_places: Optional[int] = DEFAULT_TERM_PLACES,
) -> Deviation:
    names, left, right = reduce_nulls(s1, s2)
    if not names:
        raise NoCommonAttributes(
            f"{s1.object_id!r} and {s2.object_id!r} share no non-NULL attribute"
        )
    return Deviation(deviation_of(left, right, term_places), precision, len(names))


def deviation_batch(
    left: np.ndarray, right: np.ndarray, term_places: Optional[int] = DEFAULT_TERM_PLACES
) -> np.ndarray:
    """Row-wise deviation of two (rows, attributes) arrays.

    Column-by-column accumulation keeps every row bit-identical to
    ``deviation_of`` on the same values.
    """
    rows, n = left.shape
    acc = np.zeros(rows)
    for j in range(n):
        acc = acc + np.abs(left[:, j] - right[:, j])
    for j in range(n):
        acc = acc + _round_term(_summative_division_vec(left[:, j], right[:, j]), term_places)
    return acc - 2.0 * n


# ---------------------------------------------------------------------------
# merging


def _split_digits(text: str) -> tuple[str, str, str]:
    sign = ""
    if text.startswith("-"):
        sign, text = "-", text[1:]
    whole, _, frac = text.partition(".")
    return sign, whole, frac


def merge_digits(top: str, bottom: str) -> str:
    """Digit-wise merge of two decimal strings; the result is shaped like ``top``.

    Digits are aligned on the decimal point. Where both rows have a digit,
    the bottom digit wins if it divides the top digit, otherwise the top
    digit is kept (a bottom 0 never divides). Top digits with no partner
    are kept and bottom digits with no partner are dropped.
    """
    sign, t_whole, t_frac = _split_digits(top)
    _, b_whole, b_frac = _split_digits(bottom)

    def pick(t: str, b: Optional[str]) -> str:
        if b is None or b == "0":
            return t
        return b if int(t) % int(b) == 0 else t

    whole = []
    for i in range(1, len(t_whole) + 1):
        b = b_whole[-i] if i <= len(b_whole) else None
        whole.append(pick(t_whole[-i], b))
    frac = [pick(t, b_frac[i] if i < len(b_frac) else None) for i, t in enumerate(t_frac)]
    out = sign + "".join(reversed(whole))
    if t_frac:
        out += "." + "".join(frac)
    return out


def merge_deviations(target: Deviation, other: Deviation) -> Deviation:
    """Merge ``other`` into ``target``, both rendered at the target's precision."""
    bottom = Deviation(other.value, target.precision)
    text = merge_digits(target.text, bottom.text)
    return Deviation(float(text), target.precision, target.n_attributes)


def chain_merge(target: Deviation, others: Sequence[Deviation]) -> Deviation:
    """Fold several foreign deviations into the target, innermost last.

    ``chain_merge(chess, [music, painting])`` is ``chess <- (music <- painting)``.
    """
    if not others:
        return target
    acc = others[-1]
    for dev in reversed(others[:-1]):
        acc = merge_deviations(dev, acc)
    return merge_deviations(target, acc)


# ---------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class SearchBudget:
    """Per-stage limits for ``search_pair``.

    Each stage stops at whichever of its iteration count or wall-clock
    seconds runs out first; leave one of them None to use the other alone.
    """

    stage1_iterations: Optional[int] = 200_000
    stage2_iterations: Optional[int] = 200_000
    stage1_seconds: Optional[float] = None
    stage2_seconds: Optional[float] = None
    granularity: float = 0.1
    granularity_overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for it, sec in ((self.stage1_iterations, self.stage1_seconds),
                        (self.stage2_iterations, self.stage2_seconds)):
            if it is None and sec is None:
                raise EngineError("each stage needs an iteration or time budget")
            if (it is not None and it <= 0) or (sec is not None and sec <= 0):
                raise EngineError("budgets must be positive")
        if self.granularity <= 0:
            raise EngineError("granularity must be positive")

    @classmethod
    def timed(cls, seconds: float = 30.0, granularity: float = 0.1) -> "SearchBudget":
        return cls(None, None, seconds, seconds, granularity)


@dataclass
class SearchResult:
    first: DsnsString
    second: DsnsString
    achieved: Deviation
    stage: int  # 1 or 2 for an exact match, 3 for the closest pair
    target: Deviation
    candidates: int = 0


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 10)


def _stage_values(sample: Sample, stage: int, budget: SearchBudget) -> list:
    """(attribute index, candidate values) for every attribute with observations."""
    tables = []
    for i, name in enumerate(sample.schema):
        pool = sample.pools[name]
        if not pool:
            continue  # never observed: generated strings carry NULL here
        if stage == 1:
            tables.append((i, np.asarray(pool, dtype=float)))
        else:
            lo, hi = sample.ranges[name]
            step = budget.granularity_overrides.get(name, budget.granularity)
            tables.append((i, _grid(lo, hi, step)))
    if not tables:
        raise EmptyPool("no attribute of the sample has an observed value")
    return tables


def search_pair(
    sample: Sample,
    target: Deviation,
    budget: SearchBudget = SearchBudget(),
    seed: Optional[int] = None,
    term_places: Optional[int] = DEFAULT_TERM_PLACES,
    trace: Optional[Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]] = None,
) -> SearchResult:
    """Find two new strings whose deviation matches ``target``.

    Stage 1 draws every attribute uniformly from its observed values,
    stage 2 from a grid over its observed [min, max]. The first candidate
    whose deviation rounds to the target wins; if none does, the closest
    candidate seen in either stage is returned as stage 3. ``trace``, when
    given, receives (stage, left, right, deviations) for every batch.
    """
    if len(sample) == 0:
        raise EngineError("sample is empty")
    rng = np.random.default_rng(seed)
    want = float(target.rounded)
    tolerance = 10.0 ** -target.precision
    best_gap = math.inf
    best = None
    examined = 0

    for stage, iterations, seconds in ((1, budget.stage1_iterations, budget.stage1_seconds),
                                       (2, budget.stage2_iterations, budget.stage2_seconds)):
        tables = _stage_values(sample, stage, budget)
        k = len(tables)
        columns = [i for i, _ in tables]
        deadline = time.monotonic() + seconds if seconds is not None else None
        done = 0
        while True:
            if iterations is not None and done >= iterations:
                break
            if deadline is not None and time.monotonic() >= deadline:
                break
            rows = BATCH_SIZE if iterations is None else min(BATCH_SIZE, iterations - done)
            left = np.empty((rows, k))
            right = np.empty((rows, k))
            for j, (_, table) in enumerate(tables):
                left[:, j] = table[rng.integers(0, len(table), rows)]
                right[:, j] = table[rng.integers(0, len(table), rows)]
            devs = deviation_batch(left, right, term_places)
            if trace is not None:
                trace(stage, left, right, devs)
            done += rows
            examined += rows
            gaps = np.abs(devs - want)
            for i in np.flatnonzero(gaps <= tolerance):
                if target.matches(devs[i]):
                    return _result(sample, columns, left[i], right[i], devs[i], stage,
                                   target, examined - rows + int(i) + 1)
            i = int(np.argmin(gaps))
            if gaps[i] < best_gap:
                best_gap = float(gaps[i])
                best = (columns, left[i].copy(), right[i].copy(), float(devs[i]))

    assert best is not None
    return _result(sample, *best, 3, target, examined)


def _result(sample: Sample, columns: list, left, right, dev: float, stage: int,
            target: Deviation, examined: int) -> SearchResult:
    tag = {1: "pool", 2: "range", 3: "closest"}[stage]

    def build(values, suffix: str) -> DsnsString:
        full: list = [None] * len(sample.schema)
        for col, v in zip(columns, values):
            full[col] = float(v)
        return DsnsString(f"{sample.domain}:{tag}:{suffix}", sample.schema, tuple(full))

    first, second = build(left, "a"), build(right, "b")
    achieved = Deviation(float(dev), target.precision, len(columns))
    return SearchResult(first, second, achieved, stage, target, examined)


def pick_two(sample: Sample, rng: np.random.Generator) -> tuple[DsnsString, DsnsString]:
    """Two strings drawn without replacement (the same one twice for a singleton)."""
    if len(sample) == 0:
        raise EngineError("sample is empty")
    if len(sample) == 1:
        return sample.strings[0], sample.strings[0]
    i, j = rng.choice(len(sample), size=2, replace=False)
    return sample.strings[int(i)], sample.strings[int(j)]


@dataclass
class CrossDomainResult:
    search: SearchResult
    merged_target: Deviation
    source_deviations: list
    source_ids: list

    @property
    def first(self) -> DsnsString:
        return self.search.first

    @property
    def second(self) -> DsnsString:
        return self.search.second


def cross_domain_pair(
    target_sample: Sample,
    other_samples: Sample | Sequence[Sample],
    budget: SearchBudget = SearchBudget(),
    seed: Optional[int] = None,
    precision: int = DEFAULT_PRECISION,
    term_places: Optional[int] = DEFAULT_TERM_PLACES,
) -> CrossDomainResult:
    """Search the target domain for a pair matching a deviation steered by other domains.

    With several foreign samples the merges nest from the last one inward,
    so ``[music, painting]`` merges painting into music, then that into the
    target domain's deviation.
    """
    if isinstance(other_samples, Sample):
        other_samples = [other_samples]
    rng = np.random.default_rng(seed)
    devs, ids = [], []
    for s in [target_sample, *other_samples]:
        a, b = pick_two(s, rng)
        devs.append(deviation(a, b, precision, term_places))
        ids += [a.object_id, b.object_id]
    merged = chain_merge(devs[0], devs[1:])
    sub_seed = int(rng.integers(0, 2**63 - 1))
    found = search_pair(target_sample, merged, budget, sub_seed, term_places)
    return CrossDomainResult(found, merged, devs, ids)


def single_domain_pair(
    sample: Sample,
    budget: SearchBudget = SearchBudget(),
    seed: Optional[int] = None,
    precision: int = DEFAULT_PRECISION,
    term_places: Optional[int] = DEFAULT_TERM_PLACES,
) -> CrossDomainResult:
    """Same flow as ``cross_domain_pair`` with no foreign domain involved."""
    return cross_domain_pair(sample, [], budget, seed, precision, term_places)


def strings_from_rows(domain: str, schema: Sequence[str], rows: Iterable[tuple]) -> Sample:
    """Build a sample from (object_id, values) rows."""
    return Sample(domain, tuple(schema),
                  tuple(DsnsString(oid, tuple(schema), tuple(vals)) for oid, vals in rows))
