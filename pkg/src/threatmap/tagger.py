"""Keyword and attachment-size rules that turn raw events into threat records.

Each rule hit becomes a TaggedEvent carrying the matched term (or size-bin
name), a category, and that category's fixed numeric index. Matching is
case-insensitive substring search over an event's url/content/filename;
email sizes additionally fall into three attachment bins. Categories can be
suppressed per organizational role.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from enum import IntEnum
from importlib import resources
from typing import Iterable, Optional

import yaml

from .common import PipelineError
from .ingest import (
    ANALYSIS_CHANNELS,
    Channel,
    EmailDetail,
    FileDetail,
    HttpDetail,
    LogEvent,
    UserProfile,
    UserRole,
)


class ThreatCategory(IntEnum):
    """The seven threat categories; the numeric value is the threat index."""

    SOCIAL_OR_JOB = 1
    FILE_SHARING_SITE = 2
    EMAIL_THREAT = 3
    FILE_THREAT = 4
    ATTACH_SMALL = 5
    ATTACH_MEDIUM = 6
    ATTACH_LARGE = 7


# Categories driven by keyword lists vs. by the attachment-size bins.
KEYWORD_CATEGORIES = (
    ThreatCategory.SOCIAL_OR_JOB,
    ThreatCategory.FILE_SHARING_SITE,
    ThreatCategory.EMAIL_THREAT,
    ThreatCategory.FILE_THREAT,
)
BIN_CATEGORIES = (
    ThreatCategory.ATTACH_SMALL,
    ThreatCategory.ATTACH_MEDIUM,
    ThreatCategory.ATTACH_LARGE,
)

BIN_KEYWORDS = {
    ThreatCategory.ATTACH_SMALL: "attachment:small",
    ThreatCategory.ATTACH_MEDIUM: "attachment:medium",
    ThreatCategory.ATTACH_LARGE: "attachment:large",
}

DEFAULT_BINS = (50_000, 100_000, 200_000)  # bytes; 1 KB = 1000 B


class WrongChannel(PipelineError):
    pass


class RulesFileError(PipelineError):
    pass


@dataclass(frozen=True)
class RuleSet:
    """Keyword lists per category, attachment bins, and per-role suppression."""

    keywords: dict[ThreatCategory, tuple[str, ...]]
    bins: tuple[int, int, int] = DEFAULT_BINS
    role_overrides: dict[UserRole, frozenset[ThreatCategory]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.bins[0] < self.bins[1] < self.bins[2]):
            raise ValueError(f"bins must be strictly increasing, got {self.bins}")
        for category in KEYWORD_CATEGORIES:
            terms = self.keywords.get(category, ())
            if not terms:
                raise ValueError(f"keyword list for {category.name} must be non-empty")
            for term in terms:
                if term != term.lower():
                    raise ValueError(f"keyword {term!r} must be lowercase")

    def suppressed_for(self, role: UserRole) -> frozenset[ThreatCategory]:
        return self.role_overrides.get(role, frozenset())


@dataclass(frozen=True)
class TaggedEvent:
    """One threat record: when, who, from where, what matched, and its index."""

    date: datetime
    user_id: str
    host_id: str
    keyword: str
    category: ThreatCategory
    threat_index: int
    source_channel: Channel

    def __post_init__(self) -> None:
        if self.threat_index != int(self.category):
            raise ValueError(
                f"threat_index {self.threat_index} does not match {self.category.name}"
            )
        if not self.keyword:
            raise ValueError("keyword must be non-empty")


def attachment_bin(size_bytes: int, ruleset: RuleSet) -> Optional[ThreatCategory]:
    """Half-open size bins: [b0,b1) small, [b1,b2) medium, [b2,inf) large."""
    b0, b1, b2 = ruleset.bins
    if size_bytes >= b2:
        return ThreatCategory.ATTACH_LARGE
    if size_bytes >= b1:
        return ThreatCategory.ATTACH_MEDIUM
    if size_bytes >= b0:
        return ThreatCategory.ATTACH_SMALL
    return None


def _searchable_text(event: LogEvent) -> str:
    d = event.detail
    if isinstance(d, HttpDetail):
        return f"{d.url}\n{d.content}".lower()
    if isinstance(d, FileDetail):
        return f"{d.filename}\n{d.content}".lower()
    if isinstance(d, EmailDetail):
        return d.content.lower()
    raise WrongChannel(f"cannot tag {event.channel.value} events")


def _tag(event: LogEvent, keyword: str, category: ThreatCategory) -> TaggedEvent:
    return TaggedEvent(
        date=event.timestamp,
        user_id=event.user_id,
        host_id=event.host_id,
        keyword=keyword,
        category=category,
        threat_index=int(category),
        source_channel=event.channel,
    )


def classify_event(event: LogEvent, role: UserRole, ruleset: RuleSet) -> list[TaggedEvent]:
    """All rule hits for one file/email/http event, ordered by threat index.

    Every matching keyword yields its own tag (so extending a keyword list
    never removes tags), and an email can carry both keyword tags and one
    attachment-bin tag. Categories suppressed for the role are dropped.
    """
    if event.channel not in ANALYSIS_CHANNELS:
        raise WrongChannel(f"cannot tag {event.channel.value} events")
    text = _searchable_text(event)
    suppressed = ruleset.suppressed_for(role)
    tags: list[TaggedEvent] = []
    for category in KEYWORD_CATEGORIES:
        if category in suppressed:
            continue
        for keyword in ruleset.keywords[category]:
            if keyword in text:
                tags.append(_tag(event, keyword, category))
    if isinstance(event.detail, EmailDetail):
        bin_category = attachment_bin(event.detail.size_bytes, ruleset)
        if bin_category is not None and bin_category not in suppressed:
            tags.append(_tag(event, BIN_KEYWORDS[bin_category], bin_category))
    # keyword categories are scanned in index order and bins come last,
    # so tags are already sorted by ascending threat_index
    return tags


def tag_profile(profile: UserProfile, ruleset: RuleSet) -> list[TaggedEvent]:
    """Classify the profile's file/email/http streams; sort by (date, index)."""
    tags: list[TaggedEvent] = []
    for event in profile.analysis_events():
        tags.extend(classify_event(event, profile.role, ruleset))
    tags.sort(key=lambda t: (t.date, t.threat_index))
    return tags


def tag_and_partition(
    profile: UserProfile, ruleset: RuleSet
) -> tuple[list[TaggedEvent], list[LogEvent]]:
    """Split a profile into threat tags and the events that matched nothing.

    Logon and device events are always benign; a file/email/http event is
    benign when classify_event returns no tags for it.
    """
    tags: list[TaggedEvent] = []
    benign: list[LogEvent] = list(profile.auxiliary_events())
    for event in profile.analysis_events():
        event_tags = classify_event(event, profile.role, ruleset)
        if event_tags:
            tags.extend(event_tags)
        else:
            benign.append(event)
    tags.sort(key=lambda t: (t.date, t.threat_index))
    return tags, benign


_CATEGORY_KEYS = {category.name.lower(): category for category in ThreatCategory}


def _parse_category(key: str) -> ThreatCategory:
    try:
        return _CATEGORY_KEYS[key.strip().lower()]
    except KeyError:
        raise RulesFileError(f"unknown threat category {key!r}") from None


def parse_rules(text: str) -> RuleSet:
    """Build a RuleSet from the YAML rules document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise RulesFileError(f"rules file is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise RulesFileError("rules file must be a mapping")

    raw_keywords = doc.get("keywords")
    if not isinstance(raw_keywords, dict):
        raise RulesFileError("rules file needs a 'keywords' mapping")
    keywords: dict[ThreatCategory, tuple[str, ...]] = {}
    for key, terms in raw_keywords.items():
        category = _parse_category(str(key))
        if not isinstance(terms, list):
            raise RulesFileError(f"keywords for {key!r} must be a list")
        keywords[category] = tuple(str(t).lower() for t in terms)

    bins = doc.get("bins", list(DEFAULT_BINS))
    if not (isinstance(bins, list) and len(bins) == 3):
        raise RulesFileError("'bins' must be a list of three byte counts")

    role_overrides: dict[UserRole, frozenset[ThreatCategory]] = {}
    for role_key, categories in (doc.get("role_overrides") or {}).items():
        role = UserRole.parse(str(role_key))
        if not isinstance(categories, list):
            raise RulesFileError(f"role_overrides for {role_key!r} must be a list")
        role_overrides[role] = frozenset(_parse_category(str(c)) for c in categories)

    try:
        return RuleSet(
            keywords=keywords,
            bins=(int(bins[0]), int(bins[1]), int(bins[2])),
            role_overrides=role_overrides,
        )
    except (TypeError, ValueError) as exc:
        raise RulesFileError(str(exc)) from None


def load_rules(path) -> RuleSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_rules(fh.read())


def default_rules() -> RuleSet:
    """The ruleset shipped with the package (data/default_rules.yaml)."""
    text = resources.files("threatmap.data").joinpath("default_rules.yaml").read_text("utf-8")
    return parse_rules(text)


TAGGED_CSV_HEADER = ("date", "user", "host", "keyword", "threat_index", "channel")


def tagged_events_to_csv(tags: Iterable[TaggedEvent]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TAGGED_CSV_HEADER)
    for tag in tags:
        writer.writerow(
            [
                tag.date.strftime("%Y-%m-%d %H:%M:%S"),
                tag.user_id,
                tag.host_id,
                tag.keyword,
                str(tag.threat_index),
                tag.source_channel.value,
            ]
        )
    return out.getvalue()


def write_tagged_csv(tags: Iterable[TaggedEvent], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(tagged_events_to_csv(tags))
