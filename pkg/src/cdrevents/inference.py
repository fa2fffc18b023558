"""Attendance-probability inference from contact structure.

Given the contact graph and the set U of users seen at an event, estimate
how likely a user was there given how many of their contacts were, both for
exactly k contacts and for at least K contacts, and fit a line through the
per-k probabilities.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import ContactGraph


@dataclass(frozen=True)
class AttendanceRow:
    """numerator = attending users with this contact count, denominator =
    all graph users with it."""

    k: int
    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        if not 0 <= self.numerator <= self.denominator:
            raise ValueError(
                f"bad row k={self.k}: {self.numerator}/{self.denominator}"
            )

    @property
    def p(self) -> float:
        return self.numerator / self.denominator


@dataclass(frozen=True)
class AttendanceTable:
    """Per-k rows, k >= 1 only; k values nobody reaches are absent."""

    rows: Mapping[int, AttendanceRow]

    def points(self, min_denominator: int = 1) -> list[tuple[int, float]]:
        """(k, p) pairs for regression, dropping rows whose denominator is
        below ``min_denominator`` (small samples make noisy probabilities)."""
        return [
            (k, row.p)
            for k, row in sorted(self.rows.items())
            if row.denominator >= min_denominator
        ]


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r: float
    degenerate: bool = False


def contact_counts(graph: ContactGraph, attendees: Iterable[str]) -> dict[str, int]:
    """Number of attending contacts per graph user; zero-count users omitted.

    A user never counts as their own contact, so attending users are scored
    only on their neighbors.
    """
    attendee_set = set(attendees)
    counts: Counter[str] = Counter()
    for u in attendee_set:
        for v in graph.neighbors(u):
            counts[v] += 1
    return dict(counts)


def _tally(
    graph: ContactGraph,
    attendees: Iterable[str],
    population: Iterable[str] | None,
) -> tuple[Counter[int], Counter[int]]:
    attendee_set = set(attendees)
    if not attendee_set:
        raise ValueError("attendee set is empty")
    allowed = None if population is None else set(population)
    numerators: Counter[int] = Counter()
    denominators: Counter[int] = Counter()
    for user, k in contact_counts(graph, attendee_set).items():
        if allowed is not None and user not in allowed:
            continue
        denominators[k] += 1
        if user in attendee_set:
            numerators[k] += 1
    return numerators, denominators


def attendance_probability(
    graph: ContactGraph,
    attendees: Iterable[str],
    population: Iterable[str] | None = None,
) -> AttendanceTable:
    """Probability of attending given exactly k attending contacts.

    The denominator population defaults to every graph user, clients or not;
    pass ``population`` (e.g. the client roster) to restrict it.
    """
    numerators, denominators = _tally(graph, attendees, population)
    rows = {
        k: AttendanceRow(k, numerators.get(k, 0), denominators[k])
        for k in sorted(denominators)
    }
    return AttendanceTable(rows)


def cumulative_attendance_probability(
    graph: ContactGraph,
    attendees: Iterable[str],
    population: Iterable[str] | None = None,
) -> dict[int, AttendanceRow]:
    """Probability of attending given at least K attending contacts.

    The population is re-taken for every K: row K counts all users with
    k >= K, so rows equal the suffix sums of the exact-k table.
    """
    numerators, denominators = _tally(graph, attendees, population)
    max_k = max(denominators)
    rows: dict[int, AttendanceRow] = {}
    num_sum = 0
    den_sum = 0
    for k in range(max_k, 0, -1):
        num_sum += numerators.get(k, 0)
        den_sum += denominators.get(k, 0)
        rows[k] = AttendanceRow(k, num_sum, den_sum)
    return dict(sorted(rows.items()))


def linear_fit(points: Sequence[tuple[float, float]]) -> LinearFit:
    """Ordinary least squares of p on k plus the Pearson correlation.

    A response with zero variance has no meaningful correlation; the fit is
    returned with r = 0 and flagged degenerate instead of raising or lying
    with a perfect score.
    """
    if len(points) < 2 or len({x for x, _ in points}) < 2:
        raise ValueError("need at least 2 points with 2 distinct k values")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    n = len(points)
    x_mean = math.fsum(xs) / n
    y_mean = math.fsum(ys) / n
    sxx = math.fsum((x - x_mean) ** 2 for x in xs)
    syy = math.fsum((y - y_mean) ** 2 for y in ys)
    sxy = math.fsum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    if syy == 0.0:
        return LinearFit(slope, intercept, 0.0, degenerate=True)
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return LinearFit(slope, intercept, r)
