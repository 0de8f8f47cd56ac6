"""Multilabel stratified k-fold assignment (iterative stratification)."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .core import N_PATTERNS, Pattern, as_vector
from .errors import TooFewSamples, UnknownImage, ValidationError


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: dict[str, int]

    def folds(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.k)]
        for img in sorted(self.assignment):
            out[self.assignment[img]].append(img)
        return out

    def sizes(self) -> list[int]:
        return [len(f) for f in self.folds()]


def stratified_kfold(labels: Mapping[str, object], k: int = 5, seed: int = 0) -> FoldAssignment:
    """Assign each image to one of ``k`` folds, balancing every pattern.

    Iterative stratification: repeatedly take the pattern with the fewest
    still-unassigned positives (lowest pattern index on ties) and hand each of
    its samples to a fold that is not yet full. The fold is the one that most
    wants that pattern; ties go to the fold that most wants the sample's other
    patterns, then to the one with the most free capacity, then to a seeded
    random pick. Samples are visited in a seeded shuffled order. Images with
    no pattern fill the remaining capacity at the end.
    """
    if k < 2:
        raise ValidationError("k must be >= 2", k=k)
    images = sorted(labels)
    n = len(images)
    if n < k:
        raise TooFewSamples(f"{n} images cannot fill {k} folds", images=n, k=k)

    Y = np.array([as_vector(labels[i]) for i in images], dtype=bool).reshape(n, N_PATTERNS)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    Y = Y[order]

    capacity = np.full(k, n / k)
    size = np.zeros(k, dtype=np.int64)
    base, extra = divmod(n, k)
    demand = np.tile(Y.sum(axis=0) / k, (k, 1))  # (fold, pattern)
    fold_of = np.full(n, -1)
    remaining = Y.copy()

    def place(idx, label=None):
        # fold sizes end up floor(n/k) or ceil(n/k)
        open_ = (size < base) | ((size == base) & (np.count_nonzero(size > base) < extra))
        cand = np.flatnonzero(open_)
        if label is None:
            cap = capacity[cand]
            best = cand[cap == cap.max()]
        else:
            d = demand[cand, label]
            best = cand[d == d.max()]
            if len(best) > 1:
                # then the folds that still want this sample's other patterns
                other = demand[best][:, Y[idx]].sum(axis=1)
                best = best[np.isclose(other, other.max())]
            if len(best) > 1:
                cap = capacity[best]
                best = best[cap == cap.max()]
        f = int(best[0]) if len(best) == 1 else int(rng.permutation(best)[0])
        fold_of[idx] = f
        capacity[f] -= 1
        size[f] += 1
        demand[f] -= Y[idx]
        remaining[idx] = False

    while remaining.any():
        counts = remaining.sum(axis=0)
        counts = np.where(counts > 0, counts, np.iinfo(np.int64).max)
        label = int(np.argmin(counts))
        for idx in np.flatnonzero(remaining[:, label]):
            place(idx, label)
    for idx in np.flatnonzero(fold_of < 0):
        place(idx)

    return FoldAssignment(k, {images[order[j]]: int(fold_of[j]) for j in range(n)})


def fold_balance_report(fa: FoldAssignment, labels: Mapping[str, object]) -> dict:
    """Per-fold positive counts and proportions for every pattern.

    ``max_deviation`` is the largest absolute gap between a fold's
    proportion and the global prevalence, over non-empty folds.
    """
    unknown = sorted(set(fa.assignment) - set(labels))
    if unknown:
        raise UnknownImage("assigned images missing from labels", images=unknown[:20], count=len(unknown))
    images = sorted(fa.assignment)
    n = len(images)
    Y = np.array([as_vector(labels[i]) for i in images], dtype=int).reshape(n, N_PATTERNS)
    fold = np.array([fa.assignment[i] for i in images], dtype=int)
    prevalence = Y.mean(axis=0) if n else np.zeros(N_PATTERNS)

    folds = []
    max_dev = 0.0
    for f in range(fa.k):
        rows = Y[fold == f]
        size = len(rows)
        pos = rows.sum(axis=0)
        props = (pos / size).tolist() if size else [None] * N_PATTERNS
        if size:
            max_dev = max(max_dev, float(np.abs(pos / size - prevalence).max()))
        folds.append(
            {
                "fold": f,
                "size": size,
                "positives": {p.code: int(pos[p]) for p in Pattern},
                "proportions": {p.code: props[p] for p in Pattern},
            }
        )
    return {
        "k": fa.k,
        "n_images": n,
        "prevalence": {p.code: float(prevalence[p]) for p in Pattern},
        "folds": folds,
        "max_deviation": max_dev,
    }
