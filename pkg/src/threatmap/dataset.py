"""Labeling, class balancing, and the seeded validation/train/test split.

All randomized selection runs on the portable splitmix stream, so a manifest
is a pure function of (sample set, seed) and reproduces bit-for-bit on any
platform. Manifests store image identifiers rather than tensors, so a split
survives re-rendering.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union

import numpy as np

from .common import PipelineError, SplitMix64
from .heatmap import TimeWindow


class Label(Enum):
    NORMAL = "normal"
    MALICIOUS = "malicious"


# Class indices used by the classifier; argmax ties resolve to the first
# index, i.e. toward NORMAL.
CLASS_INDEX = {Label.NORMAL: 0, Label.MALICIOUS: 1}
CLASS_NAMES = (Label.NORMAL.value, Label.MALICIOUS.value)

PARTITIONS = ("validation", "train", "test")


class UnknownLabel(PipelineError):
    pass


class DuplicatePath(PipelineError):
    pass


class SingleClass(PipelineError):
    pass


class InsufficientSamples(PipelineError):
    pass


class CorruptManifest(PipelineError):
    pass


@dataclass(frozen=True)
class LabeledSample:
    """An image reference with its class label; the tensor is optional."""

    image_ref: str
    label: Label
    user_id: str = ""
    window: Optional[TimeWindow] = None
    tensor: Optional[np.ndarray] = None


LABELS_HEADER = ("path", "label")


def _parse_label(text: str) -> Label:
    try:
        return Label(text.strip().lower())
    except ValueError:
        raise UnknownLabel(text) from None


def load_labels(stream: Union[str, Iterable[str]]) -> dict[str, Label]:
    """Read the two-column path/label CSV into a path -> Label map."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(line.rstrip("\r\n") for line in stream)
    header = tuple(f.strip().lower() for f in next(reader, ()))
    if header != LABELS_HEADER:
        raise CorruptManifest(f"expected header 'path,label', got {header!r}")
    labels: dict[str, Label] = {}
    for row in reader:
        if not row:
            continue
        if len(row) != 2 or not row[0]:
            raise CorruptManifest(f"expected path,label row, got {row!r}")
        path, label_text = row
        if path in labels:
            raise DuplicatePath(path)
        labels[path] = _parse_label(label_text)
    return labels


def labels_to_csv(labels: dict[str, Label]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LABELS_HEADER)
    for path in sorted(labels):
        writer.writerow([path, labels[path].value])
    return out.getvalue()


def _by_class(samples: Iterable[LabeledSample]) -> dict[Label, list[LabeledSample]]:
    groups: dict[Label, list[LabeledSample]] = {Label.NORMAL: [], Label.MALICIOUS: []}
    for sample in samples:
        groups[sample.label].append(sample)
    for group in groups.values():
        group.sort(key=lambda s: s.image_ref)
    return groups


def balance_classes(samples: Iterable[LabeledSample], seed: int) -> list[LabeledSample]:
    """Downsample the majority class to the minority count, uniformly at random.

    Selection depends only on the sample set and the seed (candidates are
    ordered by image_ref before drawing). The result is sorted by image_ref.
    """
    groups = _by_class(samples)
    normal, malicious = groups[Label.NORMAL], groups[Label.MALICIOUS]
    if not normal or not malicious:
        raise SingleClass("balancing requires both classes to be present")
    minority_count = min(len(normal), len(malicious))
    rng = SplitMix64(seed)
    kept: list[LabeledSample] = []
    for group in (normal, malicious):
        if len(group) > minority_count:
            kept.extend(rng.sample(group, minority_count))
        else:
            kept.extend(group)
    kept.sort(key=lambda s: s.image_ref)
    return kept


@dataclass(frozen=True)
class SplitManifest:
    """The three disjoint partitions as (image_ref, label) pairs, plus the seed."""

    seed: int
    validation: tuple[tuple[str, Label], ...]
    train: tuple[tuple[str, Label], ...]
    test: tuple[tuple[str, Label], ...]

    def partition(self, name: str) -> tuple[tuple[str, Label], ...]:
        if name not in PARTITIONS:
            raise ValueError(f"unknown partition {name!r}")
        return getattr(self, name)

    def class_counts(self, name: str) -> dict[Label, int]:
        counts = {Label.NORMAL: 0, Label.MALICIOUS: 0}
        for _, label in self.partition(name):
            counts[label] += 1
        return counts

    def check_consistent(self) -> None:
        """Raise CorruptManifest if partitions overlap or validation is skewed."""
        seen: set[str] = set()
        for name in PARTITIONS:
            for ref, _ in self.partition(name):
                if ref in seen:
                    raise CorruptManifest(f"sample {ref!r} appears in two partitions")
                seen.add(ref)
        counts = self.class_counts("validation")
        if counts[Label.NORMAL] != counts[Label.MALICIOUS]:
            raise CorruptManifest(
                "validation partition is not class-balanced: "
                f"{counts[Label.NORMAL]} normal vs {counts[Label.MALICIOUS]} malicious"
            )


def make_split(
    balanced: list[LabeledSample],
    n_validation: int = 20,
    test_fraction: float = 0.20,
    seed: int = 0,
) -> SplitManifest:
    """Stratified validation pick, then a seeded shuffle split of the rest.

    Validation takes n_validation/2 samples of each class; the remainder is
    shuffled and cut so that round(test_fraction * remainder) samples land in
    test and the rest in train. Partition listings are sorted by image_ref.
    """
    if n_validation < 0 or n_validation % 2 != 0:
        raise ValueError(f"n_validation must be a non-negative even integer, got {n_validation}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if n_validation > len(balanced):
        raise InsufficientSamples(
            f"need {n_validation} samples for validation, have {len(balanced)}"
        )
    groups = _by_class(balanced)
    per_class = n_validation // 2
    for label, group in groups.items():
        if len(group) < per_class:
            raise InsufficientSamples(
                f"need {per_class} {label.value} samples for validation, have {len(group)}"
            )

    rng = SplitMix64(seed)
    validation: list[LabeledSample] = []
    for label in (Label.NORMAL, Label.MALICIOUS):
        validation.extend(rng.sample(groups[label], per_class))
    chosen = {s.image_ref for s in validation}

    remainder = sorted(
        (s for s in balanced if s.image_ref not in chosen), key=lambda s: s.image_ref
    )
    rng.shuffle(remainder)
    n_test = int(test_fraction * len(remainder) + 0.5)  # round half up
    train, test = remainder[: len(remainder) - n_test], remainder[len(remainder) - n_test:]

    def listing(samples: list[LabeledSample]) -> tuple[tuple[str, Label], ...]:
        return tuple(sorted((s.image_ref, s.label) for s in samples))

    manifest = SplitManifest(
        seed=seed, validation=listing(validation), train=listing(train), test=listing(test)
    )
    manifest.check_consistent()
    return manifest


def manifest_to_text(manifest: SplitManifest) -> str:
    """Serialize: a seed line, per-partition class-count lines, then one
    partition,path,label line per sample."""
    out = io.StringIO()
    out.write(f"seed={manifest.seed}\n")
    writer = csv.writer(out, lineterminator="\n")
    for name in PARTITIONS:
        counts = manifest.class_counts(name)
        for label in (Label.NORMAL, Label.MALICIOUS):
            writer.writerow(["#count", name, label.value, str(counts[label])])
    for name in PARTITIONS:
        for ref, label in manifest.partition(name):
            writer.writerow([name, ref, label.value])
    return out.getvalue()


def persist_manifest(manifest: SplitManifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(manifest_to_text(manifest))


def parse_manifest(text: str) -> SplitManifest:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("seed="):
        raise CorruptManifest("manifest must start with a seed= line")
    try:
        seed = int(lines[0][len("seed="):])
    except ValueError:
        raise CorruptManifest(f"bad seed line {lines[0]!r}") from None

    declared: dict[tuple[str, Label], int] = {}
    samples: dict[str, list[tuple[str, Label]]] = {name: [] for name in PARTITIONS}
    for row in csv.reader(lines[1:]):
        if not row:
            continue
        if row[0] == "#count":
            if len(row) != 4 or row[1] not in PARTITIONS:
                raise CorruptManifest(f"bad count line {row!r}")
            try:
                declared[(row[1], _parse_label(row[2]))] = int(row[3])
            except (UnknownLabel, ValueError):
                raise CorruptManifest(f"bad count line {row!r}") from None
        else:
            if len(row) != 3 or row[0] not in PARTITIONS:
                raise CorruptManifest(f"bad sample line {row!r}")
            try:
                samples[row[0]].append((row[1], _parse_label(row[2])))
            except UnknownLabel:
                raise CorruptManifest(f"unknown label in line {row!r}") from None

    manifest = SplitManifest(
        seed=seed,
        validation=tuple(samples["validation"]),
        train=tuple(samples["train"]),
        test=tuple(samples["test"]),
    )
    for name in PARTITIONS:
        counts = manifest.class_counts(name)
        for label in (Label.NORMAL, Label.MALICIOUS):
            expected = declared.get((name, label))
            if expected is None:
                raise CorruptManifest(f"missing count for {name}/{label.value}")
            if expected != counts[label]:
                raise CorruptManifest(
                    f"{name}/{label.value} count {expected} does not match "
                    f"{counts[label]} listed samples"
                )
    manifest.check_consistent()
    return manifest


def load_manifest(path) -> SplitManifest:
    """Load and verify a persisted manifest; missing files raise the usual
    FileNotFoundError, inconsistent contents raise CorruptManifest."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_manifest(fh.read())
