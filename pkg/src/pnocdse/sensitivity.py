"""Baud-rate-dependent detector sensitivity and the baud/bitrate conversion."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .params import ConfigError, GLOBALS


def baud_rate(bitrate_gbps: float, levels_m: int) -> float:
    """Symbol rate in Gbaud for a bitrate carried on M-level symbols: BR/(M/2)."""
    if bitrate_gbps <= 0:
        raise ValueError(f"bitrate must be positive, got {bitrate_gbps}")
    if levels_m not in (2, 4):
        raise ValueError(f"levels_m must be 2 or 4, got {levels_m}")
    return bitrate_gbps / (levels_m / 2)


def bitrate(baud_gbaud: float, levels_m: int) -> float:
    if baud_gbaud <= 0:
        raise ValueError(f"baud rate must be positive, got {baud_gbaud}")
    return baud_gbaud * (levels_m / 2)


# Calibration anchors (Gbaud -> dBm) read off the published design tables.
# The 16.5 -> -18.5 pair implied by one table row is non-monotone against
# 17 -> -18.6 and is dropped during regularization (reported by the
# calibration verb); interpolation is used at 16.5 instead.
DEFAULT_ANCHORS: tuple[tuple[float, float], ...] = (
    (10.0, -22.5), (10.5, -22.3), (11.0, -22.1), (12.0, -21.7), (13.5, -21.0),
    (15.0, -20.35), (16.0, -19.1), (17.0, -18.6), (17.5, -17.9), (18.0, -17.8),
    (19.0, -17.1), (20.0, -16.1), (21.0, -15.3), (23.0, -13.4), (24.0, -12.3),
    (25.0, -11.5), (27.0, -10.1), (30.0, -8.2), (32.0, -6.6),
)


@dataclass
class SensitivityCurve:
    """Monotone piecewise-linear S(BaR) over calibration anchors.

    Below the first anchor the curve clamps to the 10-Gbaud baseline; above
    the last anchor it extrapolates the final segment and raises the
    `extrapolated` flag on the result.
    """

    anchors: tuple[tuple[float, float], ...] = DEFAULT_ANCHORS
    dropped: tuple[tuple[float, float], ...] = field(default=(), init=False)

    def __post_init__(self):
        if not self.anchors:
            raise ConfigError("sensitivity curve needs at least one anchor")
        pts = sorted((float(b), float(s)) for b, s in self.anchors)
        for i in range(1, len(pts)):
            if pts[i][0] == pts[i - 1][0]:
                raise ConfigError(f"duplicate anchor baud {pts[i][0]}")
        kept, dropped = _monotone_regularize(pts)
        self.anchors = tuple(kept)
        self.dropped = tuple(dropped)

    def sensitivity_at(self, baud_gbaud: float) -> float:
        return self.evaluate(baud_gbaud)[0]

    def evaluate(self, baud_gbaud: float) -> tuple[float, bool]:
        """Return (S dBm, extrapolated flag)."""
        if baud_gbaud <= 0:
            raise ValueError(f"baud rate must be positive, got {baud_gbaud}")
        pts = self.anchors
        if baud_gbaud <= pts[0][0]:
            return pts[0][1], False
        if baud_gbaud >= pts[-1][0]:
            if baud_gbaud == pts[-1][0]:
                return pts[-1][1], False
            (b0, s0), (b1, s1) = pts[-2], pts[-1]
            slope = (s1 - s0) / (b1 - b0)
            return s1 + slope * (baud_gbaud - b1), True
        for (b0, s0), (b1, s1) in zip(pts, pts[1:]):
            if b0 <= baud_gbaud <= b1:
                t = (baud_gbaud - b0) / (b1 - b0)
                return s0 + t * (s1 - s0), False
        raise AssertionError("unreachable")

    def power_budget_db(self, baud_gbaud: float, p_max_dbm: float | None = None) -> float:
        """Link power budget: P_Max minus detector sensitivity."""
        p_max = GLOBALS.p_max_dbm if p_max_dbm is None else p_max_dbm
        return p_max - self.sensitivity_at(baud_gbaud)

    # -- CSV interchange ----------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["baud_gbaud", "sensitivity_dbm"])
        for baud, s in self.anchors:
            writer.writerow([f"{baud:g}", f"{s:g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text_or_path: str | Path) -> "SensitivityCurve":
        if isinstance(text_or_path, Path) or (
                isinstance(text_or_path, str) and "\n" not in text_or_path
                and Path(text_or_path).exists()):
            text = Path(text_or_path).read_text()
        else:
            text = str(text_or_path)
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] and not _is_number(rows[0][0]):
            rows = rows[1:]
        anchors = [(float(r[0]), float(r[1])) for r in rows if r]
        if not anchors:
            raise ConfigError("empty sensitivity calibration set")
        return cls(anchors=tuple(anchors))


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _monotone_regularize(pts):
    """Drop anchors that break the non-decreasing S(BaR) trend.

    Walks left to right keeping the longest non-decreasing chain; an anchor
    whose S falls below its predecessor's is discarded (and reported).
    """
    kept = [pts[0]]
    dropped = []
    for p in pts[1:]:
        if p[1] >= kept[-1][1]:
            kept.append(p)
        else:
            # prefer dropping whichever point restores monotonicity against
            # the remaining neighbours; dropping the earlier point is only
            # better when it is itself a local spike
            prev = kept[-1]
            if len(kept) >= 2 and prev[1] > p[1] and kept[-2][1] <= p[1]:
                dropped.append(kept.pop())
                kept.append(p)
            else:
                dropped.append(p)
    return kept, dropped
