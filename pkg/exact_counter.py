"""
Exact solution counts for single-beam (all d_k = 1) tight scenarios.

With rank-one channels every alignment equation factors into a decoder term
and a precoder term, and a solution picks one factor per equation. Writing
a 1 in cell (k, l) of a K x K table when link (k, l) is aligned by the
precoder of user l, a solution is a 0-1 table with an excluded diagonal,
exactly M_l - 1 ones in column l and exactly N_k - 1 zeros in row k.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import List, Optional, Sequence, Tuple

from scenario import HypothesisError, Scenario, render, require_tight

logger = logging.getLogger(__name__)


class CountMethod(str, Enum):
    BACKTRACKING = "backtracking"
    DYNAMIC_PROGRAMMING = "dynamic_programming"
    DERANGEMENT_FORMULA = "derangement_formula"
    TWO_REGULAR_FORMULA = "two_regular_formula"


@dataclass(frozen=True)
class ExactCount:
    value: int
    method: CountMethod


@dataclass(frozen=True)
class MarginTable:
    """Required ones per column and per row of a K x K table, diagonal excluded."""
    K: int
    col_ones: Tuple[int, ...]
    row_ones: Tuple[int, ...]

    def __post_init__(self):
        if len(self.col_ones) != self.K or len(self.row_ones) != self.K:
            raise ValueError("margin lengths must equal K")
        for name, margins in (("column", self.col_ones), ("row", self.row_ones)):
            for i, m in enumerate(margins, 1):
                if not 0 <= m <= self.K - 1:
                    raise HypothesisError(f"{name} {i} needs {m} ones, outside 0..{self.K - 1}")
        if sum(self.col_ones) != sum(self.row_ones):
            raise HypothesisError(
                f"column margins sum to {sum(self.col_ones)}, row margins to {sum(self.row_ones)}"
            )

    @classmethod
    def from_scenario(cls, sc: Scenario) -> "MarginTable":
        return cls(
            K=sc.K,
            col_ones=tuple(u.M - 1 for u in sc.users),
            row_ones=tuple(sc.K - u.N for u in sc.users),
        )


def _require_single_beam(sc: Scenario) -> MarginTable:
    if not sc.is_single_beam:
        raise HypothesisError(f"exact counting needs single-beam users, got {render(sc)}")
    require_tight(sc, "exact counting")
    return MarginTable.from_scenario(sc)


# ---------------------------------------------------------------------------
# Backtracking
# ---------------------------------------------------------------------------

class TableBacktracker:
    """
    Fill the table cell by cell, row-major from the top-left corner. A one
    goes into a cell only while its row and column still need ones; a zero
    only while the cells left in the row and in the column below can still
    take the ones they need.
    """

    def __init__(self, margins: MarginTable):
        self.margins = margins
        K = margins.K
        self.cells = [(r, c) for r in range(K) for c in range(K) if r != c]
        self.row_after = [
            sum(1 for cc in range(c + 1, K) if cc != r) for r, c in self.cells
        ]
        self.col_after = [
            sum(1 for rr in range(r + 1, K) if rr != c) for r, c in self.cells
        ]
        self.first_of_row = [
            next(i for i, (r, _) in enumerate(self.cells) if r == row) for row in range(K)
        ] + [len(self.cells)]

    def first_row_choices(self) -> List[Tuple[int, ...]]:
        K = self.margins.K
        return [
            cols for cols in combinations(range(1, K), self.margins.row_ones[0])
            if all(self.margins.col_ones[c] > 0 for c in cols)
        ]

    def count(self, first_row: Optional[Sequence[int]] = None) -> int:
        """Number of valid tables, optionally with the ones of row 0 fixed."""
        row_left = list(self.margins.row_ones)
        col_left = list(self.margins.col_ones)
        start = 0
        if first_row is not None:
            for c in first_row:
                col_left[c] -= 1
            row_left[0] = 0
            start = self.first_of_row[1]
            K = self.margins.K
            if any(col_left[c] > sum(1 for r in range(1, K) if r != c) for c in range(K)):
                return 0
            if min(col_left) < 0:
                return 0

        cells, row_after, col_after = self.cells, self.row_after, self.col_after
        last = len(cells)

        def visit(i: int) -> int:
            if i == last:
                return 1
            r, c = cells[i]
            rl, cl = row_left[r], col_left[c]
            total = 0
            if rl and cl and rl - 1 <= row_after[i] and cl - 1 <= col_after[i]:
                row_left[r] = rl - 1
                col_left[c] = cl - 1
                total += visit(i + 1)
                row_left[r] = rl
                col_left[c] = cl
            if rl <= row_after[i] and cl <= col_after[i]:
                total += visit(i + 1)
            return total

        return visit(start)


def _count_subtree(margins: MarginTable, first_row: Tuple[int, ...]) -> int:
    return TableBacktracker(margins).count(first_row)


def count_tables_backtracking(margins: MarginTable, workers: int = 1) -> int:
    tracker = TableBacktracker(margins)
    if workers <= 1:
        return tracker.count()
    choices = tracker.first_row_choices()
    logger.debug("splitting the search over %d first-row choices", len(choices))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_count_subtree, [margins] * len(choices), choices))


# ---------------------------------------------------------------------------
# Row-by-row counting over remaining column capacities
# ---------------------------------------------------------------------------

def count_tables_dp(margins: MarginTable) -> int:
    """
    Same count, memoised on (row, remaining ones per column). Used for the
    larger symmetric tables where enumerating every table is too slow.
    """
    K = margins.K
    rows_below = [[sum(1 for rr in range(r + 1, K) if rr != c) for c in range(K)] for r in range(K)]

    @lru_cache(maxsize=None)
    def fill(r: int, col_left: Tuple[int, ...]) -> int:
        if r == K:
            return 1
        total = 0
        options = [c for c in range(K) if c != r and col_left[c] > 0]
        for cols in combinations(options, margins.row_ones[r]):
            left = list(col_left)
            for c in cols:
                left[c] -= 1
            if all(left[c] <= rows_below[r][c] for c in range(K)):
                total += fill(r + 1, tuple(left))
        return total

    return fill(0, tuple(margins.col_ones))


def count_single_beam(sc: Scenario, strategy: str = "backtracking", workers: int = 1) -> ExactCount:
    """
    Exact number of alignment solutions of a tight single-beam scenario.

    Args:
        sc: scenario with every d_k = 1 and s = 0
        strategy: ``backtracking`` (cell-by-cell search) or ``dp``
            (memoised row-by-row count)
        workers: processes for the backtracking search

    Raises:
        HypothesisError: multi-beam input or s != 0.
    """
    margins = _require_single_beam(sc)
    if strategy == "backtracking":
        value = count_tables_backtracking(margins, workers=workers)
        method = CountMethod.BACKTRACKING
    elif strategy == "dp":
        value = count_tables_dp(margins)
        method = CountMethod.DYNAMIC_PROGRAMMING
    else:
        raise ValueError(f"unknown strategy {strategy!r}, expected 'backtracking' or 'dp'")
    logger.info("%s: %d solutions (%s)", render(sc), value, method.value)
    return ExactCount(value=value, method=method)


# ---------------------------------------------------------------------------
# Closed forms and bounds
# ---------------------------------------------------------------------------

def derangement_count(K: int) -> ExactCount:
    """Permutations of K elements without fixed points: D_K = (K-1)(D_{K-1} + D_{K-2})."""
    if K < 2:
        raise HypothesisError(f"derangement count needs K >= 2, got {K}")
    prev, cur = 0, 1  # D_1, D_2
    for n in range(3, K + 1):
        prev, cur = cur, (n - 1) * (cur + prev)
    return ExactCount(value=cur, method=CountMethod.DERANGEMENT_FORMULA)


def two_regular_count(K: int) -> ExactCount:
    """Labeled 2-regular digraphs on K nodes, by the known triple sum."""
    if K < 3:
        raise HypothesisError(f"2-regular digraph count needs K >= 3, got {K}")
    total = Fraction(0)
    for k in range(K + 1):
        for s in range(k + 1):
            for j in range(K - k + 1):
                num = factorial(K) * factorial(K - k) * factorial(2 * K - k - 2 * j - s)
                den = (
                    factorial(s) * factorial(k - s) * factorial(K - k - j) ** 2
                    * factorial(j) * 2 ** (2 * K - 2 * k - j)
                )
                total += (-1) ** (k + j - s) * Fraction(num, den)
    if total.denominator != 1:
        raise ArithmeticError(f"2-regular digraph sum for K={K} is not an integer: {total}")
    return ExactCount(value=int(total), method=CountMethod.TWO_REGULAR_FORMULA)


def closed_form_count(sc: Scenario) -> Optional[ExactCount]:
    """Closed-form count for (2 x (K-1), 1)^K and (3 x (K-2), 1)^K, else None."""
    if not sc.is_single_beam or len(set(sc.users)) != 1:
        return None
    u, K = sc.users[0], sc.K
    if u.M == 2 and u.N == K - 1:
        return derangement_count(K)
    if u.M == 3 and u.N == K - 2 and K >= 3:
        return two_regular_count(K)
    return None


def bezout_bound(sc: Scenario) -> int:
    """2^(K(K-1)): one of two factors per bilinear equation."""
    return 2 ** len(sc.links)


def binomial_bound(sc: Scenario) -> int:
    """C(K(K-1), sum_l (M_l - 1)): where the precoder factors can go."""
    return comb(len(sc.links), sum(u.M - 1 for u in sc.users))
