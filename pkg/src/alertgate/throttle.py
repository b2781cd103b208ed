"""Token bucket filtering with run-length accounting of dropped alerts.

Refill is driven by alert timestamps rather than the wall clock, so a
replayed capture produces the same verdicts every time.  Alerts that
find the bucket empty are counted into a pending
:class:`RunLengthRecord`; the record is handed back with the next
admitted alert, or by :meth:`Throttle.flush` at end of stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from alertgate.attack_graph import Alert
from alertgate.errors import InvalidParameterError, TimeRegressionError

__all__ = [
    "ADMITTED",
    "SUPPRESSED",
    "REGRESSION_TOLERANCE",
    "RunLengthRecord",
    "Throttle",
    "TokenBucket",
    "Verdict",
]

#: Seconds an alert may run behind the bucket clock before it is rejected.
REGRESSION_TOLERANCE = 1.0


class TokenBucket:
    """Rate/capacity token bucket with a fractional balance.

    Parameters
    ----------
    rate : float
        Tokens generated per second.  Must be positive.
    capacity : float
        Bucket size, i.e. the largest burst admitted at one instant.
        Must be at least 1.
    start_ts : float
        Timestamp the bucket clock starts at.  The bucket starts full.
    """

    __slots__ = ("rate", "capacity", "tokens", "last_ts")

    def __init__(self, rate: float, capacity: float, start_ts: float = 0.0):
        if not rate > 0:
            raise InvalidParameterError(f"token rate must be positive, got {rate!r}")
        if not capacity >= 1:
            raise InvalidParameterError(f"bucket capacity must be >= 1, got {capacity!r}")
        self.rate = float(rate)
        self.capacity = float(capacity)
        self.tokens = self.capacity
        self.last_ts = float(start_ts)

    def refill(self, ts: float) -> None:
        elapsed = ts - self.last_ts
        if elapsed > 0:
            tokens = self.tokens + self.rate * elapsed
            self.tokens = tokens if tokens < self.capacity else self.capacity
            self.last_ts = ts
        elif elapsed < -REGRESSION_TOLERANCE:
            raise TimeRegressionError(
                f"timestamp {ts} is {-elapsed:.3f}s behind bucket clock {self.last_ts}"
            )

    def admit(self, ts: float) -> bool:
        """Refill up to ``ts`` and take one token if a whole one is available.

        Small regressions (up to ``REGRESSION_TOLERANCE`` seconds) are
        treated as zero elapsed time.
        """
        self.refill(ts)
        if self.tokens >= 1.0:
            self.tokens -= 1.0
            return True
        return False

    def __repr__(self) -> str:
        return (f"TokenBucket(rate={self.rate}, capacity={self.capacity}, "
                f"tokens={self.tokens:.3f}, last_ts={self.last_ts})")


@dataclass
class RunLengthRecord:
    """A run of ``count`` suppressed alerts, represented by the latest one."""

    count: int
    first_ts: float
    last_ts: float
    exemplar: Alert

    @property
    def message(self) -> str:
        return f"last message repeated {self.count} times"


@dataclass(frozen=True)
class Verdict:
    """Outcome of submitting one alert to a :class:`Throttle`.

    ``backlog`` is set only when an admitted alert releases a pending
    run of suppressions.
    """

    admitted: bool
    backlog: Optional[RunLengthRecord] = None

    @property
    def kind(self) -> str:
        if not self.admitted:
            return "suppressed"
        return "admitted_with_backlog" if self.backlog is not None else "admitted"


ADMITTED = Verdict(True)
SUPPRESSED = Verdict(False)


class Throttle:
    """A token bucket plus its pending run-length record."""

    __slots__ = ("bucket", "pending", "admitted", "submitted")

    def __init__(self, rate: float, capacity: float, start_ts: float = 0.0):
        self.bucket = TokenBucket(rate, capacity, start_ts)
        self.pending: Optional[RunLengthRecord] = None
        self.admitted = 0
        self.submitted = 0

    def submit(self, alert: Alert) -> Verdict:
        self.submitted += 1
        if self.bucket.admit(alert.ts):
            self.admitted += 1
            pending = self.pending
            if pending is None:
                return ADMITTED
            self.pending = None
            return Verdict(True, pending)
        pending = self.pending
        if pending is None:
            self.pending = RunLengthRecord(1, alert.ts, alert.ts, alert)
        else:
            pending.count += 1
            pending.exemplar = alert
            if alert.ts > pending.last_ts:
                pending.last_ts = alert.ts
            elif alert.ts < pending.first_ts:
                pending.first_ts = alert.ts
        return SUPPRESSED

    def flush(self) -> Optional[RunLengthRecord]:
        """Return and clear the pending record, if any."""
        pending, self.pending = self.pending, None
        return pending
