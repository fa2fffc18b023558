"""Per-antenna hourly activity cube, the seasonally normalized event index,
and percentile-threshold event detection.

The index divides each (antenna, week, day-of-week, hour) call count by the
mean count of the same (day-of-week, hour) slot across every week of the
dataset, including the current one; a value of 1 means typical traffic.
Slots whose across-week total is zero have no meaningful baseline and carry
an undefined index (stored as None), which is excluded from thresholding and
can never be flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .model import (
    DAYS_PER_WEEK,
    SECONDS_PER_DAY,
    SECONDS_PER_HOUR,
    CalendarRangeError,
    CallRecord,
    DatasetCalendar,
)

HOURS_PER_DAY = 24
SLOTS_PER_WEEK = DAYS_PER_WEEK * HOURS_PER_DAY

# (antenna, week, day-of-week, hour)
SlotKey = tuple[str, int, int, int]


class SilentAntennaError(ValueError):
    """An antenna has no defined index values at all (zero traffic)."""


@dataclass(frozen=True)
class ActivityCube:
    """Sparse per-antenna hourly call counts; absent keys mean zero."""

    counts: Mapping[SlotKey, int]
    calendar: DatasetCalendar
    antennas: frozenset[str]

    def count(self, antenna: str, week: int, dow: int, hour: int) -> int:
        return self.counts.get((antenna, week, dow, hour), 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def aggregate(
    records: Sequence[CallRecord],
    calendar: DatasetCalendar,
    extra_antennas: Iterable[str] = (),
) -> ActivityCube:
    """Count located records per (antenna, week, day-of-week, hour) slot.

    Every record must fall inside the calendar; an out-of-range timestamp
    raises CalendarRangeError since it indicates a misconfigured calendar.
    ``extra_antennas`` adds antennas known to exist even if no record ever
    used them (they stay all-zero and are later reported as silent).
    """
    n = len(records)
    antenna_codes: dict[str, int] = {}
    if n == 0:
        return ActivityCube({}, calendar, frozenset(extra_antennas))

    timestamps = np.fromiter(
        (r.timestamp for r in records), dtype=np.int64, count=n
    )
    codes = np.fromiter(
        (antenna_codes.setdefault(r.antenna, len(antenna_codes)) for r in records),
        dtype=np.int64,
        count=n,
    )
    shifted = timestamps + calendar.utc_offset_minutes * 60
    day = shifted // SECONDS_PER_DAY - calendar._start_day
    out_of_range = (day < 0) | (day >= calendar.n_weeks * DAYS_PER_WEEK)
    if out_of_range.any():
        bad = int(timestamps[out_of_range][0])
        raise CalendarRangeError(
            f"record timestamp {bad} outside calendar starting "
            f"{calendar.epoch_start} ({calendar.n_weeks} weeks)"
        )
    hour = shifted % SECONDS_PER_DAY // SECONDS_PER_HOUR
    slot = day * HOURS_PER_DAY + hour  # hour slot within the calendar
    slots_total = calendar.n_weeks * SLOTS_PER_WEEK
    flat = codes * slots_total + slot
    binned = np.bincount(flat, minlength=len(antenna_codes) * slots_total)

    antenna_ids = list(antenna_codes)
    counts: dict[SlotKey, int] = {}
    for idx in np.nonzero(binned)[0].tolist():
        code, slot_idx = divmod(idx, slots_total)
        day_idx, hour_idx = divmod(slot_idx, HOURS_PER_DAY)
        week_idx, dow_idx = divmod(day_idx, DAYS_PER_WEEK)
        counts[(antenna_ids[code], week_idx, dow_idx, hour_idx)] = int(binned[idx])
    universe = frozenset(antenna_ids) | frozenset(extra_antennas)
    return ActivityCube(counts, calendar, universe)


@dataclass(frozen=True)
class EventIndexSeries:
    """Normalized index per slot for every antenna; None marks slots whose
    (day-of-week, hour) family never saw a call."""

    values: Mapping[SlotKey, float | None]
    n_weeks: int
    antennas: tuple[str, ...]

    def value(self, antenna: str, week: int, dow: int, hour: int) -> float | None:
        return self.values[(antenna, week, dow, hour)]

    def defined_values(self, antenna: str) -> list[float]:
        """All defined index values of one antenna over the whole period."""
        out = []
        for week in range(self.n_weeks):
            for dow in range(DAYS_PER_WEEK):
                for hour in range(HOURS_PER_DAY):
                    v = self.values[(antenna, week, dow, hour)]
                    if v is not None:
                        out.append(v)
        return out

    def antenna_rows(self, antenna: str) -> Iterator[tuple[int, int, int, float | None]]:
        """(week, dow, hour, value) rows for one antenna, in calendar order."""
        if antenna not in self.antennas:
            raise KeyError(f"unknown antenna {antenna!r}")
        for week in range(self.n_weeks):
            for dow in range(DAYS_PER_WEEK):
                for hour in range(HOURS_PER_DAY):
                    yield week, dow, hour, self.values[(antenna, week, dow, hour)]

    def silent_antennas(self) -> list[str]:
        """Antennas with no defined values anywhere (nothing to threshold)."""
        return [a for a in self.antennas if not self.defined_values(a)]


def event_index(cube: ActivityCube) -> EventIndexSeries:
    """Compute the normalized index for every slot of every antenna.

    For each (antenna, day-of-week, hour) family the baseline is the mean
    count over all weeks, current week included, so the largest attainable
    value is the number of weeks.  Each value is computed as a single
    division count*n_weeks/total, which keeps the result invariant under
    scaling all counts by a common factor.
    """
    n = cube.calendar.n_weeks
    values: dict[SlotKey, float | None] = {}
    get = cube.counts.get
    for antenna in sorted(cube.antennas):
        for dow in range(DAYS_PER_WEEK):
            for hour in range(HOURS_PER_DAY):
                weekly = [get((antenna, week, dow, hour), 0) for week in range(n)]
                total = sum(weekly)
                if total == 0:
                    for week in range(n):
                        values[(antenna, week, dow, hour)] = None
                else:
                    for week, c in enumerate(weekly):
                        values[(antenna, week, dow, hour)] = (c * n) / total
    return EventIndexSeries(values, n, tuple(sorted(cube.antennas)))


def percentile_threshold(values: Iterable[float | None], p: float) -> float:
    """Nearest-rank percentile: the ceil(p*N)-th smallest defined value.

    Undefined entries (None) are excluded first; an empty defined set raises
    SilentAntennaError.  The rank is computed in exact rational arithmetic so
    that the number of values strictly above the threshold never exceeds
    floor((1-p)*N), whatever float p is passed.
    """
    if not 0 < p <= 1:
        raise ValueError(f"percentile must be in (0, 1], got {p}")
    defined = sorted(v for v in values if v is not None)
    if not defined:
        raise SilentAntennaError("no defined values to take a percentile of")
    rank = math.ceil(Fraction(p) * len(defined))
    return defined[max(rank, 1) - 1]


@dataclass(frozen=True)
class DetectedEvent:
    """A contiguous run of flagged hours at one antenna on one calendar day."""

    antenna: str
    week: int
    dow: int
    start_hour: int
    end_hour: int  # exclusive
    peak_index: float
    slots: tuple[SlotKey, ...]


def detect_events(series: EventIndexSeries, p: float = 0.99) -> list[DetectedEvent]:
    """Flag slots whose index strictly exceeds the per-antenna percentile
    threshold and merge runs of adjacent hours on the same day.

    The threshold is computed per antenna over its whole defined series, so
    antennas with very different traffic volumes are judged against their own
    history.  Antennas with no defined values are skipped (see
    EventIndexSeries.silent_antennas for the list).
    """
    events: list[DetectedEvent] = []
    for antenna in series.antennas:
        defined = series.defined_values(antenna)
        if not defined:
            continue
        threshold = percentile_threshold(defined, p)
        for week in range(series.n_weeks):
            for dow in range(DAYS_PER_WEEK):
                run: list[tuple[int, float]] = []
                for hour in range(HOURS_PER_DAY):
                    v = series.values[(antenna, week, dow, hour)]
                    if v is not None and v > threshold:
                        run.append((hour, v))
                        continue
                    if run:
                        events.append(_merge_run(antenna, week, dow, run))
                        run = []
                if run:
                    events.append(_merge_run(antenna, week, dow, run))
    events.sort(key=lambda e: (e.antenna, e.week, e.dow, e.start_hour))
    return events


def _merge_run(
    antenna: str, week: int, dow: int, run: list[tuple[int, float]]
) -> DetectedEvent:
    hours = [h for h, _ in run]
    return DetectedEvent(
        antenna=antenna,
        week=week,
        dow=dow,
        start_hour=hours[0],
        end_hour=hours[-1] + 1,
        peak_index=max(v for _, v in run),
        slots=tuple((antenna, week, dow, h) for h in hours),
    )
