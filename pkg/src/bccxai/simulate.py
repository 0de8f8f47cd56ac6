"""Synthetic multi-rater annotation sets with planted rater parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import N_PATTERNS, AnnotationDataset, AnnotationRecord, Pattern, PatternVector
from .errors import BadParams


@dataclass(frozen=True)
class Simulation:
    dataset: AnnotationDataset
    truth: dict[str, PatternVector]
    priors: np.ndarray  # (patterns,)
    sensitivity: np.ndarray  # (raters, patterns)
    specificity: np.ndarray  # (raters, patterns)
    raters: tuple[str, ...]

    def planted_confusion(self, rater: str) -> np.ndarray:
        """(patterns, 2, 2) matrices in the same layout as the EM output."""
        j = self.raters.index(rater)
        cm = np.empty((N_PATTERNS, 2, 2))
        cm[:, 0, 0] = self.specificity[j]
        cm[:, 0, 1] = 1 - self.specificity[j]
        cm[:, 1, 1] = self.sensitivity[j]
        cm[:, 1, 0] = 1 - self.sensitivity[j]
        return cm

    def planted_dict(self) -> dict:
        codes = [p.code for p in Pattern]
        return {
            "priors": dict(zip(codes, self.priors.tolist())),
            "sensitivity": {r: dict(zip(codes, self.sensitivity[j].tolist())) for j, r in enumerate(self.raters)},
            "specificity": {r: dict(zip(codes, self.specificity[j].tolist())) for j, r in enumerate(self.raters)},
        }


def _check_range(name, rng):
    lo, hi = rng
    if not (0.0 <= lo <= hi <= 1.0):
        raise BadParams(f"{name} range must satisfy 0 <= lo <= hi <= 1", name=name, lo=lo, hi=hi)
    return float(lo), float(hi)


def simulate(
    n_raters: int = 5,
    n_images: int = 500,
    sensitivity=(0.7, 0.95),
    specificity=(0.7, 0.95),
    prior=(0.1, 0.5),
    seed: int = 0,
    missing_rate: float = 0.0,
) -> Simulation:
    """Sample truth from per-pattern priors and rater reports from planted confusions.

    Each range is ``(lo, hi)``; per-rater, per-pattern values are drawn
    uniformly from it, so ``(x, x)`` plants the same value everywhere.
    ``missing_rate`` drops each (image, rater) annotation independently, but
    every image keeps at least one rater.
    """
    if n_raters < 1 or n_images < 1:
        raise BadParams("rater and image counts must be >= 1", raters=n_raters, images=n_images)
    if not 0.0 <= missing_rate < 1.0:
        raise BadParams("missing_rate must be in [0, 1)", missing_rate=missing_rate)
    sens_lo, sens_hi = _check_range("sensitivity", sensitivity)
    spec_lo, spec_hi = _check_range("specificity", specificity)
    pri_lo, pri_hi = _check_range("prior", prior)

    rng = np.random.default_rng(seed)
    priors = rng.uniform(pri_lo, pri_hi, N_PATTERNS)
    sens = rng.uniform(sens_lo, sens_hi, (n_raters, N_PATTERNS))
    spec = rng.uniform(spec_lo, spec_hi, (n_raters, N_PATTERNS))
    truth = rng.random((n_images, N_PATTERNS)) < priors
    u = rng.random((n_images, n_raters, N_PATTERNS))
    reports = np.where(truth[:, None, :], u < sens[None], u >= spec[None])
    keep = np.ones((n_images, n_raters), dtype=bool)
    if missing_rate > 0:
        keep = rng.random((n_images, n_raters)) >= missing_rate
        # an image nobody saw would carry no information; give it back one rater
        orphan = ~keep.any(axis=1)
        keep[orphan, rng.integers(0, n_raters, orphan.sum())] = True

    iw = len(str(n_images))
    rw = len(str(n_raters))
    images = [f"img{i + 1:0{iw}d}" for i in range(n_images)]
    raters = tuple(f"rater{j + 1:0{rw}d}" for j in range(n_raters))
    records = [
        AnnotationRecord(images[i], raters[j], PatternVector(reports[i, j]))
        for i in range(n_images)
        for j in range(n_raters)
        if keep[i, j]
    ]
    return Simulation(
        dataset=AnnotationDataset(tuple(records)),
        truth={img: PatternVector(truth[i]) for i, img in enumerate(images)},
        priors=priors,
        sensitivity=sens,
        specificity=spec,
        raters=raters,
    )
