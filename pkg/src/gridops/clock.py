"""Injectable clocks. Every TTL, trigger and retry decision reads one of these."""

import threading
import time


class SystemClock:
    """Wall clock."""

    virtual = False

    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock:
    """Manually advanced clock; sleep() advances it instead of blocking.

    Thread-safe: scenario drivers advance it while reader threads poll now().
    """

    virtual = True

    def __init__(self, start: float = 0.0):
        self._now = float(start)
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._now

    def sleep(self, seconds: float) -> None:
        self.advance(seconds)

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("cannot advance a clock backwards")
        with self._lock:
            self._now += seconds
            return self._now

    def advance_to(self, timestamp: float) -> float:
        with self._lock:
            if timestamp < self._now:
                raise ValueError(
                    f"cannot move clock back from {self._now} to {timestamp}")
            self._now = float(timestamp)
            return self._now
