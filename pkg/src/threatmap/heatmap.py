"""Day-by-hour activity grids and their color-coded raster images.

Events are bucketed into weekly or monthly grids of 24-hour days; each cell
is painted with the color of its dominant activity. Rasters are a fixed
31 rows (days) by 24 columns (hours) regardless of window kind, so one
classifier accepts both; day rows a window does not cover stay empty-white.
"""

from __future__ import annotations

import calendar
import csv
import io
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from PIL import Image

from .common import DateRange, InvalidRange, PipelineError
from .ingest import LogEvent
from .tagger import TaggedEvent, ThreatCategory

# An interval with no days in it; same failure whether the caller is
# enumerating windows or generating logs.
EmptyRange = InvalidRange

GRID_ROWS = 31
GRID_COLS = 24


class WindowKind(Enum):
    WEEKLY = "weekly"
    MONTHLY = "monthly"


@dataclass(frozen=True)
class TimeWindow:
    """One aggregation span: a Monday-started week or a calendar month."""

    kind: WindowKind
    start_date: date
    day_count: int

    def __post_init__(self) -> None:
        if self.kind is WindowKind.WEEKLY:
            if self.start_date.weekday() != 0:
                raise ValueError(f"weekly window must start on a Monday: {self.start_date}")
            if self.day_count != 7:
                raise ValueError("weekly window must span 7 days")
        else:
            if self.start_date.day != 1:
                raise ValueError(f"monthly window must start on day 1: {self.start_date}")
            month_days = calendar.monthrange(self.start_date.year, self.start_date.month)[1]
            if self.day_count != month_days:
                raise ValueError(
                    f"{self.start_date:%Y-%m} has {month_days} days, not {self.day_count}"
                )

    @classmethod
    def weekly_of(cls, day: date) -> "TimeWindow":
        monday = day - timedelta(days=day.weekday())
        return cls(WindowKind.WEEKLY, monday, 7)

    @classmethod
    def monthly_of(cls, day: date) -> "TimeWindow":
        first = day.replace(day=1)
        return cls(WindowKind.MONTHLY, first, calendar.monthrange(day.year, day.month)[1])

    @property
    def end_date(self) -> date:
        return self.start_date + timedelta(days=self.day_count - 1)

    def contains(self, ts: date | datetime) -> bool:
        d = ts.date() if isinstance(ts, datetime) else ts
        return self.start_date <= d <= self.end_date

    def day_index(self, ts: date | datetime) -> int:
        d = ts.date() if isinstance(ts, datetime) else ts
        return (d - self.start_date).days


def enumerate_windows(date_range: DateRange, kind: WindowKind) -> list[TimeWindow]:
    """All windows of the kind intersecting the range, in chronological order.

    Partial boundary windows are included, so the first window may start
    before the range and the last may end after it.
    """
    windows = []
    if kind is WindowKind.WEEKLY:
        window = TimeWindow.weekly_of(date_range.start)
        while window.start_date <= date_range.end:
            windows.append(window)
            window = TimeWindow.weekly_of(window.start_date + timedelta(days=7))
    else:
        window = TimeWindow.monthly_of(date_range.start)
        while window.start_date <= date_range.end:
            windows.append(window)
            windows_next = window.end_date + timedelta(days=1)
            window = TimeWindow.monthly_of(windows_next)
    return windows


# Cell count vector layout: slots 0..6 hold threat categories 1..7,
# slot 7 holds the benign count.
N_SLOTS = 8
BENIGN_SLOT = 7


@dataclass(frozen=True)
class ActivityGrid:
    """Per-user event counts for one window: day_count x 24 x 8."""

    user_id: str
    window: TimeWindow
    counts: np.ndarray

    def __post_init__(self) -> None:
        expected = (self.window.day_count, GRID_COLS, N_SLOTS)
        if self.counts.shape != expected:
            raise ValueError(f"counts shape {self.counts.shape} != {expected}")

    def cell(self, day: int, hour: int) -> np.ndarray:
        return self.counts[day, hour]

    @property
    def total_events(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class CellState:
    """What a cell shows: nothing, benign activity, or a threat category."""

    kind: str  # "empty" | "benign" | "threat"
    category: Optional[ThreatCategory] = None


EMPTY_CELL = CellState("empty")
BENIGN_CELL = CellState("benign")


def threat_cell(category: ThreatCategory) -> CellState:
    return CellState("threat", category)


CATEGORY_COLORS: dict[ThreatCategory, tuple[int, int, int]] = {
    ThreatCategory.SOCIAL_OR_JOB: (0, 0, 255),       # blue
    ThreatCategory.FILE_SHARING_SITE: (255, 0, 0),   # red
    ThreatCategory.EMAIL_THREAT: (255, 105, 180),    # pink
    ThreatCategory.FILE_THREAT: (0, 128, 0),         # green
    ThreatCategory.ATTACH_SMALL: (255, 255, 0),      # yellow
    ThreatCategory.ATTACH_MEDIUM: (255, 165, 0),     # orange
    ThreatCategory.ATTACH_LARGE: (139, 69, 19),      # brown
}
BENIGN_COLOR = (211, 211, 211)  # light gray
EMPTY_COLOR = (255, 255, 255)   # white

PALETTE: dict[CellState, tuple[int, int, int]] = {
    EMPTY_CELL: EMPTY_COLOR,
    BENIGN_CELL: BENIGN_COLOR,
    **{threat_cell(c): rgb for c, rgb in CATEGORY_COLORS.items()},
}
PALETTE_COLORS = frozenset(PALETTE.values())


class ImageFormatError(PipelineError):
    pass


@dataclass(frozen=True, eq=False)
class HeatmapImage:
    """Fixed 31x24 RGB raster; every pixel is one of the palette colors."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.pixels.shape != (GRID_ROWS, GRID_COLS, 3) or self.pixels.dtype != np.uint8:
            raise ValueError(
                f"pixels must be uint8 of shape ({GRID_ROWS}, {GRID_COLS}, 3), "
                f"got {self.pixels.dtype} {self.pixels.shape}"
            )

    def same_pixels(self, other: "HeatmapImage") -> bool:
        return bool(np.array_equal(self.pixels, other.pixels))


def bucket_events(
    tags: Iterable[TaggedEvent],
    benign: Iterable[LogEvent],
    window: TimeWindow,
    user_id: str,
) -> ActivityGrid:
    """Count the user's tags per category and benign events per cell.

    Events outside the window or belonging to other users are dropped.
    """
    counts = np.zeros((window.day_count, GRID_COLS, N_SLOTS), dtype=np.int64)
    for tag in tags:
        if tag.user_id == user_id and window.contains(tag.date):
            counts[window.day_index(tag.date), tag.date.hour, int(tag.category) - 1] += 1
    for event in benign:
        if event.user_id == user_id and window.contains(event.timestamp):
            counts[window.day_index(event.timestamp), event.timestamp.hour, BENIGN_SLOT] += 1
    return ActivityGrid(user_id=user_id, window=window, counts=counts)


def dominant_cell(cell_counts: Sequence[int] | np.ndarray) -> CellState:
    """Resolve a cell's color: threats outrank benign, ties pick the lower index."""
    counts = np.asarray(cell_counts)
    if counts.shape != (N_SLOTS,):
        raise ValueError(f"expected {N_SLOTS} slots, got shape {counts.shape}")
    threat_counts = counts[:BENIGN_SLOT]
    if threat_counts.max(initial=0) > 0:
        winner = int(np.argmax(threat_counts))  # first max = smallest index
        return threat_cell(ThreatCategory(winner + 1))
    if counts[BENIGN_SLOT] > 0:
        return BENIGN_CELL
    return EMPTY_CELL


def render_grid(grid: ActivityGrid, palette: dict[CellState, tuple[int, int, int]] = PALETTE) -> HeatmapImage:
    """Paint each cell with its dominant-activity color; uncovered rows stay empty."""
    pixels = np.empty((GRID_ROWS, GRID_COLS, 3), dtype=np.uint8)
    pixels[:, :] = palette[EMPTY_CELL]
    for day in range(grid.window.day_count):
        for hour in range(GRID_COLS):
            pixels[day, hour] = palette[dominant_cell(grid.counts[day, hour])]
    return HeatmapImage(pixels)


def export_png(image: HeatmapImage, scale: int, path) -> None:
    """Write a nearest-neighbor upscaled PNG, 24*scale wide by 31*scale tall."""
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    upscaled = np.repeat(np.repeat(image.pixels, scale, axis=0), scale, axis=1)
    Image.fromarray(upscaled, mode="RGB").save(path, format="PNG")


def load_png(path) -> HeatmapImage:
    """Read an exported PNG back to its 31x24 raster (any integer scale)."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"))
    height, width = arr.shape[:2]
    if width % GRID_COLS != 0 or height != (width // GRID_COLS) * GRID_ROWS:
        raise ImageFormatError(f"{path}: {width}x{height} is not a scaled {GRID_COLS}x{GRID_ROWS} raster")
    scale = width // GRID_COLS
    small = arr[::scale, ::scale]
    if not np.array_equal(np.repeat(np.repeat(small, scale, axis=0), scale, axis=1), arr):
        raise ImageFormatError(f"{path}: not a uniform nearest-neighbor upscale")
    return HeatmapImage(np.ascontiguousarray(small))


def to_tensor(image: HeatmapImage) -> np.ndarray:
    """Channel-first float32 tensor of shape (3, 31, 24), intensities / 255."""
    return (image.pixels.astype(np.float32) / 255.0).transpose(2, 0, 1)


def image_filename(user_id: str, kind: WindowKind, window_start: date) -> str:
    return f"{user_id}_{kind.value}_{window_start.isoformat()}.png"


IMAGE_INDEX_HEADER = ("path", "user", "kind", "window_start")


def image_index_to_csv(entries: Iterable[tuple[str, str, WindowKind, date]]) -> str:
    """Sidecar index rows: (path, user, kind, window_start)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(IMAGE_INDEX_HEADER)
    for path, user_id, kind, window_start in entries:
        writer.writerow([path, user_id, kind.value, window_start.isoformat()])
    return out.getvalue()


def write_image_index(entries: Iterable[tuple[str, str, WindowKind, date]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(image_index_to_csv(entries))


def read_image_index(path) -> list[tuple[str, str, WindowKind, date]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != IMAGE_INDEX_HEADER:
            raise ImageFormatError(f"{path}: bad image index header {header!r}")
        return [
            (row[0], row[1], WindowKind(row[2]), date.fromisoformat(row[3]))
            for row in reader
            if row
        ]
