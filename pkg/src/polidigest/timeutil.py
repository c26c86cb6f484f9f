"""UTC timestamp parsing/formatting shared across the pipeline.

All stored timestamps are ISO-8601 in UTC; bucket arithmetic is calendar
arithmetic on UTC datetimes.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone


def parse_iso8601(value: str) -> datetime:
    """Parse an ISO-8601 timestamp, tolerating a trailing 'Z'; result is UTC.

    Naive timestamps are taken to be UTC already.
    """
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_iso8601(dt: datetime) -> str:
    """Render a UTC datetime as ISO-8601 with a 'Z' suffix."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


BUCKETS = ("day", "week", "month", "quarter", "year")


def bucket_floor(dt: datetime, bucket: str) -> datetime:
    """Start of the UTC calendar bucket containing `dt`."""
    dt = dt.astimezone(timezone.utc)
    day = dt.replace(hour=0, minute=0, second=0, microsecond=0)
    if bucket == "day":
        return day
    if bucket == "week":
        return day - timedelta(days=day.weekday())
    if bucket == "month":
        return day.replace(day=1)
    if bucket == "quarter":
        return day.replace(month=(day.month - 1) // 3 * 3 + 1, day=1)
    if bucket == "year":
        return day.replace(month=1, day=1)
    raise ValueError(f"unknown bucket {bucket!r}; expected one of {BUCKETS}")


def bucket_next(start: datetime, bucket: str) -> datetime:
    """Start of the bucket following the one starting at `start`."""
    if bucket == "day":
        return start + timedelta(days=1)
    if bucket == "week":
        return start + timedelta(days=7)
    if bucket in ("month", "quarter", "year"):
        months = {"month": 1, "quarter": 3, "year": 12}[bucket]
        month0 = start.year * 12 + (start.month - 1) + months
        return start.replace(year=month0 // 12, month=month0 % 12 + 1)
    raise ValueError(f"unknown bucket {bucket!r}; expected one of {BUCKETS}")
