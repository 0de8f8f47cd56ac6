"""Clinical decision rules mapping pattern vectors to a diagnosis.

A lesion is BCC as soon as one of the six positive patterns is present.
Pigment network alone, or no pattern at all, means non-BCC. When pigment
network co-occurs with a positive pattern the positive pattern wins.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import DiagnosisGroup, Pattern, PatternVector, POSITIVE_PATTERNS, as_vector


class Diagnosis(enum.Enum):
    BCC = "BCC"
    NON_BCC = "NonBCC"

    def as_bit(self) -> int:
        return int(self is Diagnosis.BCC)


def has_positive_pattern(v) -> bool:
    v = as_vector(v)
    return any(v[p] for p in POSITIVE_PATTERNS)


def binary_of(v) -> Diagnosis:
    return Diagnosis.BCC if has_positive_pattern(v) else Diagnosis.NON_BCC


def group_of(v) -> DiagnosisGroup:
    v = as_vector(v)
    if has_positive_pattern(v):
        return DiagnosisGroup.BCC_PATTERN
    if v[Pattern.PIGMENT_NETWORK]:
        return DiagnosisGroup.PIGMENT_NETWORK_ONLY
    return DiagnosisGroup.NO_PATTERN


@dataclass(frozen=True)
class Explanation:
    diagnosis: Diagnosis
    group: DiagnosisGroup
    present_patterns: tuple[Pattern, ...]

    def to_dict(self) -> dict:
        return {
            "diagnosis": self.diagnosis.value,
            "group": self.group.value,
            "present_patterns": [p.code for p in self.present_patterns],
        }


def explain(v) -> Explanation:
    v = as_vector(v)
    return Explanation(binary_of(v), group_of(v), tuple(v.present()))


def all_vectors() -> list[PatternVector]:
    """All 128 possible vectors, PN as the most significant bit."""
    n = len(Pattern)
    return [PatternVector((k >> (n - 1 - i)) & 1 for i in range(n)) for k in range(2**n)]
