"""Domain types shared by every module: patterns, label vectors, annotations."""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .errors import BadVectorLength, DuplicateAnnotation, NonBinaryValue, ValidationError


class Pattern(enum.IntEnum):
    """The seven dermoscopic patterns, in serialization order.

    Pigment network is the only negative criterion; the other six argue for BCC.
    """

    PIGMENT_NETWORK = 0
    ULCERATION = 1
    OVOID_NESTS = 2
    MULTIGLOBULES = 3
    MAPLE_LEAF_LIKE = 4
    SPOKE_WHEEL = 5
    ARBORIZING_TELANGIECTASIA = 6

    @property
    def code(self) -> str:
        return PATTERN_CODES[self]

    @property
    def title(self) -> str:
        return PATTERN_TITLES[self]

    @property
    def is_negative_criterion(self) -> bool:
        return self is Pattern.PIGMENT_NETWORK


PATTERN_CODES = ("PN", "U", "ON", "MG", "ML", "SW", "AT")
PATTERN_TITLES = (
    "Pigment Network",
    "Ulceration",
    "Ovoid Nests",
    "Multiglobules",
    "Maple Leaf-like",
    "Spoke Wheel",
    "Arborizing Telangiectasia",
)
# CSV column names, same order as Pattern
PATTERN_COLUMNS = tuple(c.lower() for c in PATTERN_CODES)
N_PATTERNS = len(Pattern)
POSITIVE_PATTERNS = tuple(p for p in Pattern if not p.is_negative_criterion)


class DiagnosisGroup(enum.Enum):
    NO_PATTERN = "NoPattern"
    PIGMENT_NETWORK_ONLY = "PigmentNetworkOnly"
    BCC_PATTERN = "BccPattern"


_TRUE = {1, "1", True}
_FALSE = {0, "0", False}


def _as_bool(value, row=None) -> bool:
    if isinstance(value, str):
        value = value.strip()
    # bool is an int subclass, so 1.0/0.0 floats are the only leak; reject them
    if isinstance(value, float):
        raise NonBinaryValue(f"non-binary label value {value!r}", row=row, value=repr(value))
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise NonBinaryValue(f"non-binary label value {value!r}", row=row, value=repr(value))


class PatternVector(tuple):
    """Immutable 7-bit presence vector indexed by :class:`Pattern`."""

    __slots__ = ()

    def __new__(cls, bits: Iterable = (), *, row=None):
        bits = tuple(bits)
        if len(bits) != N_PATTERNS:
            raise BadVectorLength(
                f"expected {N_PATTERNS} labels, got {len(bits)}", row=row, length=len(bits)
            )
        return super().__new__(cls, (_as_bool(b, row) for b in bits))

    @classmethod
    def from_string(cls, s: str) -> "PatternVector":
        """Parse ``"0101101"`` or ``"[0 1 0 1 1 0 1]"``."""
        digits = [c for c in s if not c.isspace() and c not in "[],"]
        return cls(digits)

    @classmethod
    def from_patterns(cls, patterns: Iterable[Pattern]) -> "PatternVector":
        on = set(patterns)
        return cls(p in on for p in Pattern)

    @classmethod
    def zeros(cls) -> "PatternVector":
        return cls((False,) * N_PATTERNS)

    def present(self) -> list[Pattern]:
        return [p for p in Pattern if self[p]]

    def to_ints(self) -> list[int]:
        return [int(b) for b in self]

    def to_string(self) -> str:
        return "".join(str(int(b)) for b in self)

    def __repr__(self):
        return f"PatternVector('{self.to_string()}')"


@dataclass(frozen=True)
class AnnotationRecord:
    image_id: str
    rater_id: str
    labels: PatternVector


@dataclass(frozen=True)
class AnnotationDataset:
    """Sparse rater-by-image annotation set.

    ``images`` and ``raters`` default to the ids seen in ``records``; an image
    may lack annotations from some raters.
    """

    records: tuple[AnnotationRecord, ...]
    images: frozenset[str] = field(default=None)
    raters: frozenset[str] = field(default=None)

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        if self.images is None:
            object.__setattr__(self, "images", frozenset(r.image_id for r in records))
        else:
            object.__setattr__(self, "images", frozenset(self.images))
        if self.raters is None:
            object.__setattr__(self, "raters", frozenset(r.rater_id for r in records))
        else:
            object.__setattr__(self, "raters", frozenset(self.raters))
        seen = set()
        for rec in records:
            key = (rec.image_id, rec.rater_id)
            if key in seen:
                raise DuplicateAnnotation(
                    f"duplicate annotation for image {rec.image_id!r} by rater {rec.rater_id!r}",
                    image=rec.image_id,
                    rater=rec.rater_id,
                )
            seen.add(key)
            if rec.image_id not in self.images or rec.rater_id not in self.raters:
                raise ValidationError(
                    "record references an unknown image or rater",
                    image=rec.image_id,
                    rater=rec.rater_id,
                )

    def __len__(self):
        return len(self.records)

    def sorted_images(self) -> list[str]:
        return sorted(self.images)

    def sorted_raters(self) -> list[str]:
        return sorted(self.raters)

    def by_image(self) -> dict[str, dict[str, PatternVector]]:
        out: dict[str, dict[str, PatternVector]] = {i: {} for i in self.sorted_images()}
        for rec in self.records:
            out[rec.image_id][rec.rater_id] = rec.labels
        return out

    def canonical(self) -> "AnnotationDataset":
        """Same dataset with records sorted by (image, rater)."""
        recs = sorted(self.records, key=lambda r: (r.image_id, r.rater_id))
        return AnnotationDataset(tuple(recs), self.images, self.raters)


def validate_dataset(raw: Iterable) -> AnnotationDataset:
    """Build an :class:`AnnotationDataset` from parsed rows.

    Each row is either a mapping with ``image_id``, ``rater_id`` and either a
    ``labels`` sequence or one column per pattern code (``pn`` ... ``at``), or
    a ``(image_id, rater_id, labels)`` triple. Row numbers in error details are
    1-based positions in ``raw``.
    """
    records = []
    for n, row in enumerate(raw, start=1):
        if isinstance(row, Mapping):
            try:
                image_id, rater_id = row["image_id"], row["rater_id"]
            except KeyError as exc:
                raise ValidationError(f"row {n} lacks {exc.args[0]!r}", row=n) from None
            if "labels" in row:
                labels = row["labels"]
            else:
                missing = [c for c in PATTERN_COLUMNS if c not in row]
                if missing:
                    raise BadVectorLength(
                        f"row {n} lacks pattern columns {missing}", row=n, length=N_PATTERNS - len(missing)
                    )
                labels = [row[c] for c in PATTERN_COLUMNS]
        else:
            image_id, rater_id, labels = row
        if isinstance(labels, str):
            labels = [c for c in labels if not c.isspace() and c not in "[],"]
        if not isinstance(labels, PatternVector):
            labels = PatternVector(labels, row=n)
        records.append(AnnotationRecord(str(image_id), str(rater_id), labels))
    return AnnotationDataset(tuple(records))


def as_vector(v: Sequence) -> PatternVector:
    return v if isinstance(v, PatternVector) else PatternVector(v)
