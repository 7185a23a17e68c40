"""Trading-session clock: windows, discrete steps, and minute mapping.

Simulation time is the concatenation of the configured trading windows,
discretised into fixed-length steps (20 ms default). Wall-clock minutes are
needed for the per-minute rate profiles and the time-of-day sampling buckets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def _parse_hhmm(text: str) -> int:
    parts = text.strip().split(":")
    if len(parts) != 2:
        raise ConfigurationError(f"bad time of day: {text!r} (expected HH:MM)")
    h, m = int(parts[0]), int(parts[1])
    if not (0 <= h < 24 and 0 <= m < 60):
        raise ConfigurationError(f"time of day out of range: {text!r}")
    return h * 3600 + m * 60


@dataclass(frozen=True)
class SessionSpec:
    """Trading windows as (start, end) seconds-from-midnight pairs."""

    windows: tuple[tuple[int, int], ...] = ((9 * 3600 + 15 * 60, 16 * 3600 + 30 * 60),)
    step_ms: int = 20

    def __post_init__(self):
        if self.step_ms <= 0:
            raise ConfigurationError("step_ms must be positive")
        if 60000 % self.step_ms != 0:
            raise ConfigurationError("step_ms must divide one minute")
        prev_end = -1
        for start, end in self.windows:
            if end <= start:
                raise ConfigurationError("session window end must be after start")
            if start <= prev_end:
                raise ConfigurationError("session windows must be ordered and non-overlapping")
            prev_end = end

    @classmethod
    def from_strings(cls, windows, step_ms: int = 20) -> "SessionSpec":
        parsed = tuple((_parse_hhmm(a), _parse_hhmm(b)) for a, b in windows)
        return cls(windows=parsed, step_ms=step_ms)

    @property
    def steps_per_second(self) -> int:
        return 1000 // self.step_ms

    @property
    def steps_per_minute(self) -> int:
        return 60000 // self.step_ms

    @property
    def seconds_per_day(self) -> int:
        return sum(end - start for start, end in self.windows)

    @property
    def steps_per_day(self) -> int:
        return self.seconds_per_day * 1000 // self.step_ms

    @property
    def minutes_per_day(self) -> int:
        return self.seconds_per_day // 60

    def session_minutes(self) -> np.ndarray:
        """Wall-clock minute-of-day for each session minute, in session order."""
        out = []
        for start, end in self.windows:
            out.extend(range(start // 60, end // 60))
        return np.asarray(out, dtype=np.int32)

    def minute_of_step(self) -> np.ndarray:
        """Wall-clock minute-of-day for each step within one day (int16)."""
        spm = self.steps_per_minute
        mins = self.session_minutes()
        return np.repeat(mins.astype(np.int16), spm)

    def second_of_step(self) -> np.ndarray:
        """Wall-clock second-of-day for each step within one day (int32)."""
        sps = self.steps_per_second
        out = []
        for start, end in self.windows:
            out.append(np.repeat(np.arange(start, end, dtype=np.int32), sps))
        return np.concatenate(out)

    def step_start_ns(self) -> np.ndarray:
        """Nanoseconds-since-midnight at the start of each day step (int64)."""
        sps = self.steps_per_second
        step_ns = self.step_ms * 1_000_000
        out = []
        for start, end in self.windows:
            secs = np.arange(start, end, dtype=np.int64)
            base = np.repeat(secs, sps) * 1_000_000_000
            base += np.tile(np.arange(sps, dtype=np.int64) * step_ns, len(secs))
            out.append(base)
        return np.concatenate(out)

    def step_of_timestamp_ns(self, ts_ns: np.ndarray) -> np.ndarray:
        """Map nanoseconds-since-midnight to day-step indices.

        Timestamps outside all windows are clipped to the nearest window edge.
        """
        ts_s = np.asarray(ts_ns, dtype=np.float64) / 1e9
        offsets = np.zeros_like(ts_s)
        cum = 0.0
        done = np.zeros(ts_s.shape, dtype=bool)
        for start, end in self.windows:
            within = (~done) & (ts_s >= start) & (ts_s < end)
            offsets[within] = cum + (ts_s[within] - start)
            before = (~done) & (ts_s < start)
            offsets[before] = cum
            done |= within | before
            cum += end - start
        offsets[~done] = cum  # after the last window
        steps = np.floor(offsets * 1000.0 / self.step_ms).astype(np.int64)
        return np.clip(steps, 0, self.steps_per_day - 1)
