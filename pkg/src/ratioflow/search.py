"""Locating a bounded rational threshold with monotone yes/no queries.

The unknown ``x`` lies in ``(0, 1]`` and has denominator at most ``bound``.
We can only ask whether ``x <= p/q``.  A Stern-Brocot descent answers this in
``O(log bound)`` queries: runs of equal moves are sized by galloping followed
by bisection, and the descent stops once the two enclosing fractions are
Farey neighbours of order ``bound``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable


class BudgetExceeded(RuntimeError):
    pass


class QueryBudget:
    """Counts oracle calls and fails loudly past ``limit``."""

    def __init__(self, bound: int, limit: int | None = None):
        self.bound = bound
        self.limit = limit
        self.queries_used = 0

    def charge(self):
        self.queries_used += 1
        if self.limit is not None and self.queries_used > self.limit:
            raise BudgetExceeded(
                f"{self.queries_used} queries exceed limit {self.limit} "
                f"(bound {self.bound})")


def _largest_true(test: Callable[[int], bool], kmax: int) -> int:
    """Largest ``k`` in ``[1, kmax]`` with ``test(k)``; ``test(1)`` holds."""
    good, k = 1, 2
    while k <= kmax and test(k):
        good, k = k, 2 * k
    bad = k
    if bad > kmax:
        if good == kmax:
            return good
        if test(kmax):
            return kmax
        bad = kmax
    while bad - good > 1:
        mid = (good + bad) // 2
        if test(mid):
            good = mid
        else:
            bad = mid
    return good


def least_upper_fraction(at_most: Callable[[Fraction], bool], bound: int
                         ) -> tuple[Fraction, Fraction]:
    """Find ``x`` from the oracle ``at_most(q) == (x <= q)``.

    ``x`` must lie in ``(0, 1]`` with denominator ``<= bound``; neither end
    point is queried.  Returns ``(x, below)`` where ``below`` is the Farey
    predecessor of ``x`` of order ``bound`` (so ``at_most(below)`` is false).
    """
    a, b, c, d = 0, 1, 1, 1  # x in (a/b, c/d]
    while b + d <= bound:
        if at_most(Fraction(a + c, b + d)):
            # Left run: shrink the upper end towards a/b.
            kmax = (bound - d) // b
            k = _largest_true(
                lambda k: at_most(Fraction(k * a + c, k * b + d)), kmax)
            c, d = k * a + c, k * b + d
            if k < kmax:
                a, b = a + c, b + d
        else:
            kmax = (bound - b) // d
            if kmax < 1:
                break
            k = _largest_true(
                lambda k: not at_most(Fraction(a + k * c, b + k * d)), kmax)
            a, b = a + k * c, b + k * d
            if k < kmax:
                c, d = a + c, b + d
    return Fraction(c, d), Fraction(a, b)
