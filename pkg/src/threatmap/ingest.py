"""Parsing of CERT-style activity logs into per-user, per-channel profiles.

Five comma-separated channel files share the record prefix ``date,user,pc``
and differ in their payload columns; a sixth file maps users to their
organizational role. All parsing is pure: the same bytes always produce the
same events and report.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Union

from .common import DEFAULT_OBSERVATION_RANGE, DateRange, PipelineError

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


class Channel(Enum):
    LOGON = "logon"
    DEVICE = "device"
    FILE = "file"
    EMAIL = "email"
    HTTP = "http"


# The tagging rules act on these; logon/device only add benign density.
ANALYSIS_CHANNELS = (Channel.FILE, Channel.EMAIL, Channel.HTTP)
AUXILIARY_CHANNELS = (Channel.LOGON, Channel.DEVICE)


class UserRole(Enum):
    SALESMAN = "salesman"
    IT_ADMIN = "it admin"
    ELECTRICAL_ENGINEER = "electrical engineer"
    MECHANICAL_ENGINEER = "mechanical engineer"
    ADMINISTRATOR = "administrator"
    PRODUCTION_LINE_WORKER = "production line worker"
    COMPUTER_SCIENTIST = "computer scientist"
    SOFTWARE_QUALITY_ENGINEER = "software quality engineer"

    @classmethod
    def parse(cls, text: str) -> "UserRole":
        """Match a role label case-insensitively, ignoring extra whitespace,
        hyphens, and underscores."""
        normalized = " ".join(text.strip().lower().replace("_", " ").replace("-", " ").split())
        for role in cls:
            if role.value == normalized:
                return role
        raise UnknownRole(text)


@dataclass(frozen=True)
class LogonDetail:
    action: str  # "logon" | "logoff"


@dataclass(frozen=True)
class DeviceDetail:
    action: str  # "connect" | "disconnect"


@dataclass(frozen=True)
class FileDetail:
    filename: str
    content: str


@dataclass(frozen=True)
class EmailDetail:
    to: str
    sender: str
    size_bytes: int
    attachment_count: int
    content: str


@dataclass(frozen=True)
class HttpDetail:
    url: str
    content: str


Detail = Union[LogonDetail, DeviceDetail, FileDetail, EmailDetail, HttpDetail]


@dataclass(frozen=True)
class LogEvent:
    """One timestamped row from a channel log."""

    timestamp: datetime
    user_id: str
    host_id: str
    channel: Channel
    detail: Detail

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if not self.host_id:
            raise ValueError("host_id must be non-empty")
        if isinstance(self.detail, EmailDetail):
            if self.detail.size_bytes < 0 or self.detail.attachment_count < 0:
                raise ValueError("email size and attachment count must be >= 0")


@dataclass(frozen=True)
class UserProfile:
    """All of one user's events, split per channel and sorted by time."""

    user_id: str
    role: UserRole
    streams: dict[Channel, tuple[LogEvent, ...]]

    def events(self, channel: Channel) -> tuple[LogEvent, ...]:
        return self.streams[channel]

    def analysis_events(self) -> Iterable[LogEvent]:
        """File, email, and http events, in that channel order."""
        for channel in ANALYSIS_CHANNELS:
            yield from self.streams[channel]

    def auxiliary_events(self) -> Iterable[LogEvent]:
        for channel in AUXILIARY_CHANNELS:
            yield from self.streams[channel]

    @property
    def event_count(self) -> int:
        return sum(len(s) for s in self.streams.values())


@dataclass
class ParseReport:
    """Row accounting for one parsed stream; rows_read = accepted + skipped."""

    rows_read: int = 0
    rows_accepted: int = 0
    rows_skipped: int = 0
    first_errors: list[tuple[int, str]] = field(default_factory=list)

    MAX_RECORDED_ERRORS = 10

    def record_error(self, line: int, reason: str) -> None:
        if len(self.first_errors) < self.MAX_RECORDED_ERRORS:
            self.first_errors.append((line, reason))


class MalformedHeader(PipelineError):
    pass


class MalformedRow(PipelineError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateUser(PipelineError):
    pass


class UnknownRole(PipelineError):
    pass


class UnknownUser(PipelineError):
    pass


CHANNEL_HEADERS: dict[Channel, tuple[str, ...]] = {
    Channel.LOGON: ("date", "user", "pc", "activity"),
    Channel.DEVICE: ("date", "user", "pc", "activity"),
    Channel.FILE: ("date", "user", "pc", "filename", "content"),
    Channel.EMAIL: ("date", "user", "pc", "to", "from", "size", "attachments", "content"),
    Channel.HTTP: ("date", "user", "pc", "url", "content"),
}

ROSTER_HEADER = ("user", "role")

_LOGON_ACTIONS = ("logon", "logoff")
_DEVICE_ACTIONS = ("connect", "disconnect")


def _iter_lines(stream: Union[str, Iterable[str]]) -> Iterable[str]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for line in stream:
        yield line.rstrip("\r\n")


def _split_row(line: str) -> list[str]:
    return next(csv.reader([line]))


def _parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, TIMESTAMP_FORMAT)


def _parse_row(
    fields: list[str],
    channel: Channel,
    line: int,
    observation_range: DateRange,
) -> LogEvent:
    expected = CHANNEL_HEADERS[channel]
    if len(fields) != len(expected):
        raise MalformedRow(line, f"expected {len(expected)} fields, got {len(fields)}")
    try:
        timestamp = _parse_timestamp(fields[0])
    except ValueError:
        raise MalformedRow(line, f"bad timestamp {fields[0]!r}") from None
    if not observation_range.contains(timestamp):
        raise MalformedRow(line, f"timestamp {fields[0]} outside observation range")
    user_id, host_id = fields[1], fields[2]
    if not user_id:
        raise MalformedRow(line, "empty user")
    if not host_id:
        raise MalformedRow(line, "empty pc")

    detail: Detail
    if channel in (Channel.LOGON, Channel.DEVICE):
        action = fields[3].strip().lower()
        allowed = _LOGON_ACTIONS if channel is Channel.LOGON else _DEVICE_ACTIONS
        if action not in allowed:
            raise MalformedRow(line, f"bad activity {fields[3]!r}")
        detail = LogonDetail(action) if channel is Channel.LOGON else DeviceDetail(action)
    elif channel is Channel.FILE:
        detail = FileDetail(filename=fields[3], content=fields[4])
    elif channel is Channel.EMAIL:
        try:
            size = int(fields[5])
            attachments = int(fields[6])
        except ValueError:
            raise MalformedRow(line, "size and attachments must be integers") from None
        if size < 0 or attachments < 0:
            raise MalformedRow(line, "size and attachments must be >= 0")
        detail = EmailDetail(
            to=fields[3], sender=fields[4], size_bytes=size,
            attachment_count=attachments, content=fields[7],
        )
    else:
        detail = HttpDetail(url=fields[3], content=fields[4])
    return LogEvent(timestamp, user_id, host_id, channel, detail)


def parse_log_stream(
    stream: Union[str, Iterable[str]],
    channel: Channel,
    mode: str = "lenient",
    observation_range: DateRange = DEFAULT_OBSERVATION_RANGE,
) -> tuple[list[LogEvent], ParseReport]:
    """Parse one channel's CSV stream into events plus a row-accounting report.

    Args:
        stream: the file text, or an iterable of lines. The first line must
            be the channel's header row.
        channel: which channel schema to apply.
        mode: "lenient" skips malformed rows and counts them; "strict" raises
            MalformedRow at the first bad row.
        observation_range: rows with timestamps outside this inclusive date
            range count as malformed.

    Returns:
        (events in file order, ParseReport). Blank lines are ignored and not
        counted as rows.

    Raises:
        MalformedHeader: missing or wrong header row.
        MalformedRow: in strict mode only.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    lines = _iter_lines(stream)
    header_line = next(lines, None)
    if header_line is None:
        raise MalformedHeader(f"empty stream, expected {channel.value} header")
    header = tuple(f.strip().lower() for f in _split_row(header_line))
    if header != CHANNEL_HEADERS[channel]:
        raise MalformedHeader(
            f"expected header {','.join(CHANNEL_HEADERS[channel])!r}, got {header_line!r}"
        )

    events: list[LogEvent] = []
    report = ParseReport()
    for line_no, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        report.rows_read += 1
        try:
            events.append(_parse_row(_split_row(line), channel, line_no, observation_range))
        except MalformedRow as exc:
            if mode == "strict":
                raise
            report.rows_skipped += 1
            report.record_error(exc.line, exc.reason)
        else:
            report.rows_accepted += 1
    return events, report


def load_roster(stream: Union[str, Iterable[str]]) -> dict[str, UserRole]:
    """Read the two-column user/role CSV into a user_id -> UserRole map.

    Raises DuplicateUser for repeated user ids and UnknownRole for role
    strings outside the eight-role vocabulary.
    """
    lines = _iter_lines(stream)
    header_line = next(lines, None)
    if header_line is None:
        raise MalformedHeader("empty roster stream")
    header = tuple(f.strip().lower() for f in _split_row(header_line))
    if header != ROSTER_HEADER:
        raise MalformedHeader(f"expected header 'user,role', got {header_line!r}")
    roster: dict[str, UserRole] = {}
    for line_no, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        fields = _split_row(line)
        if len(fields) != 2 or not fields[0]:
            raise MalformedRow(line_no, f"expected user,role, got {line!r}")
        user_id = fields[0]
        if user_id in roster:
            raise DuplicateUser(user_id)
        roster[user_id] = UserRole.parse(fields[1])
    return roster


def build_profiles(events: Iterable[LogEvent], roster: dict[str, UserRole]) -> list[UserProfile]:
    """Group events into one profile per roster user, sorted by user id.

    Streams are sorted by timestamp with ties kept in input order. An event
    whose user is not in the roster raises UnknownUser.
    """
    grouped: dict[str, dict[Channel, list[LogEvent]]] = {
        user: {channel: [] for channel in Channel} for user in roster
    }
    for event in events:
        if event.user_id not in grouped:
            raise UnknownUser(event.user_id)
        grouped[event.user_id][event.channel].append(event)

    profiles = []
    for user_id in sorted(roster):
        streams = {
            channel: tuple(sorted(stream, key=lambda e: e.timestamp))
            for channel, stream in grouped[user_id].items()
        }
        profiles.append(UserProfile(user_id=user_id, role=roster[user_id], streams=streams))
    return profiles


def header_line(channel: Channel) -> str:
    return ",".join(CHANNEL_HEADERS[channel])


def event_to_fields(event: LogEvent) -> list[str]:
    """Render an event back to its CSV fields (inverse of row parsing)."""
    prefix = [event.timestamp.strftime(TIMESTAMP_FORMAT), event.user_id, event.host_id]
    d = event.detail
    if isinstance(d, LogonDetail) or isinstance(d, DeviceDetail):
        return prefix + [d.action.capitalize()]
    if isinstance(d, FileDetail):
        return prefix + [d.filename, d.content]
    if isinstance(d, EmailDetail):
        return prefix + [d.to, d.sender, str(d.size_bytes), str(d.attachment_count), d.content]
    return prefix + [d.url, d.content]


def events_to_csv(events: Iterable[LogEvent], channel: Channel) -> str:
    """Serialize events to the channel's CSV text, header included."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CHANNEL_HEADERS[channel])
    for event in events:
        if event.channel is not channel:
            raise ValueError(f"{event.channel.value} event in {channel.value} stream")
        writer.writerow(event_to_fields(event))
    return out.getvalue()


def write_channel_csv(events: Iterable[LogEvent], channel: Channel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(events_to_csv(events, channel))


def roster_to_csv(roster: dict[str, UserRole]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ROSTER_HEADER)
    for user_id, role in roster.items():
        writer.writerow([user_id, role.value])
    return out.getvalue()
