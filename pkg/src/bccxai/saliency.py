"""Agreement between a Grad-CAM heatmap and an expert segmentation mask.

Activations are min-max normalized per image, then split into pixels inside
the expert mask (foreground, Fg) and outside it (background, Bg). The two
conditional densities are estimated with a fixed-bin histogram on [0, 1] and
compared through their overlap area; per-region mean and population standard
deviation of the normalized activation are reported alongside.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import BccXaiError, DimensionMismatch, EmptyRegion, GridMismatch

log = logging.getLogger(__name__)

DEFAULT_BINS = 64
DEFAULT_THRESHOLD = 0.5
GROUP_COLUMNS = ("intersection", "mean_fg", "mean_bg", "std_fg", "std_bg")


@dataclass(frozen=True)
class Heatmap:
    z: np.ndarray
    constant: bool = False

    @property
    def shape(self):
        return self.z.shape


def normalize_heatmap(raw) -> Heatmap:
    """Min-max scale to [0, 1]; a constant map becomes all zeros, flagged."""
    z = np.asarray(raw.z if isinstance(raw, Heatmap) else raw, dtype=float)
    if z.size == 0:
        raise ValueError("heatmap has no pixels")
    lo, hi = z.min(), z.max()
    if hi == lo:
        return Heatmap(np.zeros_like(z), constant=True)
    return Heatmap((z - lo) / (hi - lo))


def _arrays(h, m):
    z = np.asarray(h.z if isinstance(h, Heatmap) else h, dtype=float)
    mask = np.asarray(m, dtype=bool)
    if z.shape != mask.shape:
        raise DimensionMismatch("heatmap and mask shapes differ", heatmap=list(z.shape), mask=list(mask.shape))
    return z, mask


def _regions(z, mask):
    fg, bg = z[mask], z[~mask]
    if fg.size == 0:
        raise EmptyRegion("mask has no foreground pixels", region="Fg")
    if bg.size == 0:
        raise EmptyRegion("mask covers every pixel", region="Bg")
    return fg, bg


def bin_index(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width bins on [0, 1]; bin ``i`` is [i/bins, (i+1)/bins), last one closed."""
    return np.minimum(np.floor(values * bins).astype(np.int64), bins - 1)


def _density(values, bins):
    counts = np.bincount(bin_index(values, bins), minlength=bins)
    return counts * bins / values.size


def conditional_pdfs(h, m, bins: int = DEFAULT_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Histogram densities of z over Fg and over Bg; each integrates to 1."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    z, mask = _arrays(h, m)
    fg, bg = _regions(z, mask)
    return _density(fg, bins), _density(bg, bins)


def bin_centers(bins: int) -> np.ndarray:
    return (np.arange(bins) + 0.5) / bins


def region_stats(h, m) -> dict[str, float]:
    z, mask = _arrays(h, m)
    fg, bg = _regions(z, mask)
    return {
        "mean_fg": float(fg.mean()),
        "mean_bg": float(bg.mean()),
        "std_fg": float(fg.std()),
        "std_bg": float(bg.std()),
    }


def pdf_intersection(pdf_fg, pdf_bg) -> float:
    a, b = np.asarray(pdf_fg, dtype=float), np.asarray(pdf_bg, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise GridMismatch("densities are on different bin grids", fg=list(a.shape), bg=list(b.shape))
    width = 1.0 / a.size
    for name, d in (("fg", a), ("bg", b)):
        if abs(d.sum() * width - 1.0) > 1e-9:
            raise ValueError(f"pdf_{name} does not integrate to 1")
    return float(min(1.0, np.minimum(a, b).sum() * width))


def dice_jaccard(h, m, threshold: float = DEFAULT_THRESHOLD) -> dict[str, float]:
    """Overlap of the thresholded heatmap (z >= threshold) with the mask.

    Both coefficients are 1 when the two regions are empty.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    z, mask = _arrays(h, m)
    a = z >= threshold
    inter = int(np.count_nonzero(a & mask))
    union = int(np.count_nonzero(a | mask))
    size = int(np.count_nonzero(a)) + int(np.count_nonzero(mask))
    if union == 0:
        return {"dice": 1.0, "jaccard": 1.0}
    return {"dice": 2 * inter / size, "jaccard": inter / union}


@dataclass
class SaliencyStats:
    mean_fg: float
    mean_bg: float
    std_fg: float
    std_bg: float
    intersection: float
    n_fg: int
    n_bg: int
    pdf_fg: np.ndarray
    pdf_bg: np.ndarray
    dice: float
    jaccard: float
    constant_map: bool = False

    def summary(self) -> dict:
        return {
            "intersection": self.intersection,
            "mean_fg": self.mean_fg,
            "mean_bg": self.mean_bg,
            "std_fg": self.std_fg,
            "std_bg": self.std_bg,
            "n_fg": self.n_fg,
            "n_bg": self.n_bg,
            "dice": self.dice,
            "jaccard": self.jaccard,
            "constant_map": self.constant_map,
        }


def analyze(raw_heatmap, mask, bins: int = DEFAULT_BINS, threshold: float = DEFAULT_THRESHOLD) -> SaliencyStats:
    """Normalize the heatmap and compute every statistic for one pair."""
    h = normalize_heatmap(raw_heatmap)
    if h.constant:
        log.warning("constant heatmap; all activations map to 0")
    z, m = _arrays(h, mask)
    pdf_fg, pdf_bg = conditional_pdfs(z, m, bins)
    stats = region_stats(z, m)
    dj = dice_jaccard(z, m, threshold)
    n_fg = int(np.count_nonzero(m))
    return SaliencyStats(
        **stats,
        intersection=pdf_intersection(pdf_fg, pdf_bg),
        n_fg=n_fg,
        n_bg=m.size - n_fg,
        pdf_fg=pdf_fg,
        pdf_bg=pdf_bg,
        dice=dj["dice"],
        jaccard=dj["jaccard"],
        constant_map=h.constant,
    )


@dataclass(frozen=True)
class SaliencyPair:
    image_id: str
    heatmap: object  # path or array
    mask: object  # path or array
    correct: bool


@dataclass
class SaliencyReport:
    bins: int
    pairs: dict[str, SaliencyStats] = field(default_factory=dict)
    correct: dict[str, bool] = field(default_factory=dict)
    errors: dict[str, dict] = field(default_factory=dict)
    groups: dict[str, dict | None] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "n_pairs": len(self.pairs),
            "n_errors": len(self.errors),
            "warnings": self.warnings,
            "groups": self.groups,
            "pairs": {
                k: {"correct": self.correct[k], **self.pairs[k].summary()} for k in sorted(self.pairs)
            },
            "errors": {k: self.errors[k] for k in sorted(self.errors)},
        }


def group_means(stats: Sequence[SaliencyStats]) -> dict | None:
    if not stats:
        return None
    out = {c: float(np.mean([getattr(s, c) for s in stats])) for c in GROUP_COLUMNS}
    out["n"] = len(stats)
    return out


def batch_saliency(
    pairs: Iterable[SaliencyPair],
    bins: int = DEFAULT_BINS,
    threshold: float = DEFAULT_THRESHOLD,
    loader=None,
) -> SaliencyReport:
    """Per-pair statistics plus Correct / Incorrect group means.

    ``loader(pair) -> (heatmap_array, mask_array)`` resolves file paths; by
    default the pair's fields are used as arrays directly. A pair that fails
    to load or analyze is recorded in ``errors`` and left out of the means.
    """
    report = SaliencyReport(bins=bins)
    for pair in pairs:
        try:
            if pair.image_id in report.pairs or pair.image_id in report.errors:
                raise BccXaiError("duplicate image_id in manifest", image_id=pair.image_id)
            hm, mk = loader(pair) if loader else (pair.heatmap, pair.mask)
            report.pairs[pair.image_id] = analyze(hm, mk, bins, threshold)
            report.correct[pair.image_id] = bool(pair.correct)
        except (BccXaiError, OSError, ValueError) as exc:
            detail = exc.to_dict() if isinstance(exc, BccXaiError) else {"error": type(exc).__name__, "message": str(exc)}
            report.errors.setdefault(pair.image_id, detail)
    if not report.pairs:
        report.warnings.append("no pairs were analyzed")
    ids = sorted(report.pairs)
    report.groups = {
        "Correct": group_means([report.pairs[i] for i in ids if report.correct[i]]),
        "Incorrect": group_means([report.pairs[i] for i in ids if not report.correct[i]]),
    }
    return report
