"""Footfall and conversion arithmetic plus daily rollups.

The raw people count tallies every crossing of the camera view, in or out.
Since everyone who walks in also walks out, visitor traffic is half the raw
count; an odd raw count leaves an `unpaired` residual of 1 so the identity
``traffic * 2 + unpaired == people_counted`` always holds and violations of
the in-equals-out assumption stay auditable rather than silently rounded
away.

Conversion rate is transactions divided by traffic, times 100. It is not
capped at 100: a visitor may transact more than once, and capping would
hide data-entry errors. Rates are carried at full precision internally and
only rounded to 2 decimals at export time.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Sequence


class NoTraffic(ValueError):
    """Conversion rate is undefined for zero traffic."""


class DateMismatch(ValueError):
    """An event timestamp falls outside the date being rolled up."""


def traffic_from_count(people_counted: int) -> tuple[int, int]:
    """Split a raw crossing count into (visitor traffic, unpaired residual)."""
    if people_counted < 0:
        raise ValueError(f"people_counted must be >= 0: {people_counted}")
    return people_counted // 2, people_counted % 2


def conversion_rate(transactions: int, traffic: int) -> float:
    """Percentage of visitors that transacted: transactions / traffic * 100."""
    if transactions < 0:
        raise ValueError(f"transactions must be >= 0: {transactions}")
    if traffic <= 0:
        raise NoTraffic(f"traffic must be positive: {traffic}")
    return transactions / traffic * 100.0


@dataclass(frozen=True)
class DailyRecord:
    """One persisted day: date, raw count, traffic, transactions, rate."""

    date: dt.date
    people_counted: int
    traffic: int
    unpaired: int
    transactions: int | None = None
    conversion_rate_percent: float | None = None

    def __post_init__(self) -> None:
        if self.traffic * 2 + self.unpaired != self.people_counted:
            raise ValueError(
                f"traffic*2+unpaired must equal people_counted: "
                f"{self.traffic}*2+{self.unpaired} != {self.people_counted}"
            )
        if self.unpaired not in (0, 1):
            raise ValueError(f"unpaired must be 0 or 1: {self.unpaired}")
        should_have_rate = self.transactions is not None and self.traffic > 0
        if should_have_rate != (self.conversion_rate_percent is not None):
            raise ValueError(
                "conversion_rate_percent must be present exactly when "
                "transactions are present and traffic > 0"
            )


def build_daily_record(
    date: dt.date, people_counted: int, transactions: int | None = None
) -> DailyRecord:
    """Assemble a consistent DailyRecord from the raw count and transactions."""
    traffic, unpaired = traffic_from_count(people_counted)
    rate = None
    if transactions is not None and traffic > 0:
        rate = conversion_rate(transactions, traffic)
    return DailyRecord(date, people_counted, traffic, unpaired, transactions, rate)


@dataclass(frozen=True)
class HourlyHistogram:
    """Track finalizations per local hour; bucket sum equals the day's count."""

    date: dt.date
    buckets: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.buckets) != 24:
            raise ValueError(f"need 24 buckets, got {len(self.buckets)}")
        if any(b < 0 for b in self.buckets):
            raise ValueError("buckets must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.buckets)


def local_datetime(timestamp_ms: int, tz: dt.tzinfo) -> dt.datetime:
    return dt.datetime.fromtimestamp(timestamp_ms / 1000.0, tz)


def local_date(timestamp_ms: int, tz: dt.tzinfo) -> dt.date:
    return local_datetime(timestamp_ms, tz).date()


def rollup_day(
    date: dt.date,
    event_timestamps_ms: Iterable[int],
    transactions: int | None = None,
    *,
    tz: dt.tzinfo = dt.timezone.utc,
) -> tuple[DailyRecord, HourlyHistogram]:
    """Fold one day's finalization timestamps into its record and histogram.

    Every timestamp must fall on `date` in the given timezone; otherwise
    DateMismatch is raised.
    """
    buckets = [0] * 24
    count = 0
    for ts in event_timestamps_ms:
        when = local_datetime(ts, tz)
        if when.date() != date:
            raise DateMismatch(f"event at {when.isoformat()} is not on {date.isoformat()}")
        buckets[when.hour] += 1
        count += 1
    record = build_daily_record(date, count, transactions)
    return record, HourlyHistogram(date, tuple(buckets))


@dataclass(frozen=True)
class TrendPoint:
    date: dt.date
    traffic_avg: float
    conversion_avg: float | None


def trend(records: Sequence[DailyRecord], window: int) -> list[TrendPoint]:
    """Trailing moving averages over date-sorted daily records.

    The window is shorter at the head. Days without a conversion rate are
    excluded from the conversion average, and the divisor counts only the
    included days; a window with no rates yields None.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1: {window}")
    points: list[TrendPoint] = []
    for i, record in enumerate(records):
        tail = records[max(0, i - window + 1) : i + 1]
        traffic_avg = sum(r.traffic for r in tail) / len(tail)
        rates = [r.conversion_rate_percent for r in tail if r.conversion_rate_percent is not None]
        conversion_avg = sum(rates) / len(rates) if rates else None
        points.append(TrendPoint(record.date, traffic_avg, conversion_avg))
    return points
