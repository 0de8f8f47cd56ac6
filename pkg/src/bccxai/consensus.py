"""Standard-reference inference from several raters' pattern annotations.

Each pattern is treated as an independent binary Dawid-Skene problem: a latent
true state per image, a 2x2 confusion matrix per rater, and a class prior.
Parameters are fitted by EM starting from the majority vote. The M-step adds
``smoothing`` pseudo-counts to every cell, which makes it the MAP update under
a symmetric Dirichlet prior; the quantity EM is guaranteed not to decrease is
therefore the penalized log-likelihood

    log p(data | theta) + smoothing * sum(log theta)

and that is what ``loglik_trace`` records. The plain marginal log-likelihood
of the final parameters is reported separately as ``loglik``.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .core import N_PATTERNS, AnnotationDataset, Pattern, PatternVector
from .errors import BadParams, EmptyPatternColumn

TIE_RULE = "posterior == 0.5 -> present"


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 100
    tol: float = 1e-6
    smoothing: float = 0.01
    # EM here is deterministic (majority-vote start); the seed is carried for the run manifest
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise BadParams("max_iters must be >= 1", max_iters=self.max_iters)
        if not self.tol > 0:
            raise BadParams("tol must be > 0", tol=self.tol)
        if not self.smoothing > 0:
            raise BadParams("smoothing must be > 0", smoothing=self.smoothing)


@dataclass(frozen=True)
class ConsensusResult:
    """Fitted model.

    ``posteriors[i, p]`` is P(pattern p present | annotations) for
    ``images[i]``. ``confusions[rater][p]`` is a 2x2 row-stochastic matrix,
    rows = true state (absent, present), columns = reported state.
    """

    images: tuple[str, ...]
    raters: tuple[str, ...]
    posteriors: np.ndarray
    hard_labels: dict[str, PatternVector]
    confusions: dict[str, np.ndarray]
    priors: np.ndarray
    loglik_trace: tuple[float, ...]
    pattern_traces: tuple[tuple[float, ...], ...]
    iterations: int
    pattern_iterations: tuple[int, ...]
    converged: bool
    loglik: float
    config: EmConfig = field(default_factory=EmConfig)

    def posterior(self, image_id: str) -> np.ndarray:
        return self.posteriors[self.images.index(image_id)]

    def to_dict(self) -> dict:
        codes = [p.code for p in Pattern]
        return {
            "model": "binary Dawid-Skene EM, independent per pattern",
            "patterns": codes,
            "tie_rule": TIE_RULE,
            "config": {
                "max_iters": self.config.max_iters,
                "tol": self.config.tol,
                "smoothing": self.config.smoothing,
                "seed": self.config.seed,
            },
            "converged": self.converged,
            "iterations": self.iterations,
            "pattern_iterations": dict(zip(codes, self.pattern_iterations)),
            "loglik": self.loglik,
            "objective": "log-likelihood + smoothing * sum of log parameters",
            "loglik_trace": list(self.loglik_trace),
            "priors": dict(zip(codes, self.priors.tolist())),
            "confusions": {
                r: {code: self.confusions[r][p].tolist() for p, code in enumerate(codes)}
                for r in self.raters
            },
            "posteriors": {
                img: dict(zip(codes, self.posteriors[i].tolist())) for i, img in enumerate(self.images)
            },
            "hard_labels": {img: self.hard_labels[img].to_string() for img in self.images},
        }


def label_tensor(ds: AnnotationDataset) -> tuple[list[str], list[str], np.ndarray]:
    """Dense (image, rater, pattern) array with -1 where a rater did not annotate.

    Images and raters are sorted so that results do not depend on record order.
    """
    images, raters = ds.sorted_images(), ds.sorted_raters()
    i_of = {k: n for n, k in enumerate(images)}
    r_of = {k: n for n, k in enumerate(raters)}
    L = np.full((len(images), len(raters), N_PATTERNS), -1, dtype=np.int8)
    for rec in ds.records:
        L[i_of[rec.image_id], r_of[rec.rater_id]] = rec.labels
    return images, raters, L


def _vote_start(L: np.ndarray) -> np.ndarray:
    # soft majority start: 1 / 0 for a strict majority, 0.5 on an exact tie
    pos = (L == 1).sum(axis=1)
    tot = (L >= 0).sum(axis=1)
    return np.where(2 * pos > tot, 1.0, np.where(2 * pos < tot, 0.0, 0.5))


def majority_vote(ds: AnnotationDataset) -> dict[str, PatternVector]:
    """Per-image strict majority; exact ties count as present."""
    images, _, L = label_tensor(ds)
    pos = (L == 1).sum(axis=1)
    tot = (L >= 0).sum(axis=1)
    present = (2 * pos >= tot) & (tot > 0)
    return {img: PatternVector(present[i]) for i, img in enumerate(images)}


def _m_step(T, m1, m0, eps):
    n = T.shape[0]
    c11, c10 = T @ m1, T @ m0
    c01, c00 = (1 - T) @ m1, (1 - T) @ m0
    # theta[r, t, l]: P(report l | true t) for rater r
    theta = np.empty((m1.shape[1], 2, 2))
    d0 = c00 + c01 + 2 * eps
    d1 = c10 + c11 + 2 * eps
    theta[:, 0, 0] = (c00 + eps) / d0
    theta[:, 0, 1] = (c01 + eps) / d0
    theta[:, 1, 0] = (c10 + eps) / d1
    theta[:, 1, 1] = (c11 + eps) / d1
    prior = (T.sum() + eps) / (n + 2 * eps)
    return theta, prior


def _joint(theta, prior, m1, m0):
    log_t = np.log(theta)
    a1 = math.log(prior) + m1 @ log_t[:, 1, 1] + m0 @ log_t[:, 1, 0]
    a0 = math.log1p(-prior) + m1 @ log_t[:, 0, 1] + m0 @ log_t[:, 0, 0]
    return a1, a0


def _fit_pattern(L: np.ndarray, cfg: EmConfig):
    """EM for one pattern. ``L`` is (images, raters) with -1 for missing."""
    eps = cfg.smoothing
    m1 = (L == 1).astype(float)
    m0 = (L == 0).astype(float)
    T = _vote_start(L[:, :, None])[:, 0]
    trace: list[float] = []
    converged = False
    for _ in range(cfg.max_iters):
        theta, prior = _m_step(T, m1, m0, eps)
        a1, a0 = _joint(theta, prior, m1, m0)
        ll = float(np.logaddexp(a1, a0).sum())
        penalty = eps * (float(np.log(theta).sum()) + math.log(prior) + math.log1p(-prior))
        trace.append(ll + penalty)
        T = 1.0 / (1.0 + np.exp(a0 - a1))
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < cfg.tol:
            converged = True
            break
    return T, theta, prior, trace, converged


def infer_sr(ds: AnnotationDataset, cfg: EmConfig | None = None) -> ConsensusResult:
    """Fit the per-pattern EM model and return posteriors and rater parameters.

    Raises :class:`EmptyPatternColumn` if a pattern has no annotation at all.
    Hitting ``max_iters`` is not an error; ``converged`` is then False.
    """
    cfg = cfg or EmConfig()
    images, raters, L = label_tensor(ds)
    for p in Pattern:
        if not (L[:, :, p] >= 0).any():
            raise EmptyPatternColumn(f"pattern {p.code} has no annotations", pattern=p.code)

    n_img, n_rat = len(images), len(raters)
    posteriors = np.empty((n_img, N_PATTERNS))
    thetas = np.empty((n_rat, N_PATTERNS, 2, 2))
    priors = np.empty(N_PATTERNS)
    traces, iters, conv = [], [], []
    for p in Pattern:
        T, theta, prior, trace, ok = _fit_pattern(L[:, :, p], cfg)
        posteriors[:, p] = T
        thetas[:, p] = theta
        priors[p] = prior
        traces.append(tuple(trace))
        iters.append(len(trace))
        conv.append(ok)

    # converged patterns hold their last value so the sum stays monotone
    n_steps = max(iters)
    combined = tuple(
        float(sum(tr[min(k, len(tr) - 1)] for tr in traces)) for k in range(n_steps)
    )
    hard = {img: PatternVector(posteriors[i] >= 0.5) for i, img in enumerate(images)}
    confusions = {r: thetas[j] for j, r in enumerate(raters)}
    return ConsensusResult(
        images=tuple(images),
        raters=tuple(raters),
        posteriors=posteriors,
        hard_labels=hard,
        confusions=confusions,
        priors=priors,
        loglik_trace=combined,
        pattern_traces=tuple(traces),
        iterations=n_steps,
        pattern_iterations=tuple(iters),
        converged=all(conv),
        loglik=loglikelihood(ds, confusions, priors),
        config=cfg,
    )


def loglikelihood(
    ds: AnnotationDataset,
    confusions: Mapping[str, np.ndarray],
    priors,
) -> float:
    """Observed-data log-likelihood, summed over patterns and images.

    For each image and pattern: log(prior * prod_r P(obs_r | present)
    + (1 - prior) * prod_r P(obs_r | absent)).
    """
    total = 0.0
    for image_id, ratings in ds.by_image().items():
        for p in Pattern:
            log_present = math.log(float(priors[p]))
            log_absent = math.log1p(-float(priors[p]))
            for rater_id, labels in ratings.items():
                obs = int(labels[p])
                cm = confusions[rater_id][p]
                log_present += math.log(cm[1][obs])
                log_absent += math.log(cm[0][obs])
            hi = max(log_present, log_absent)
            total += hi + math.log(math.exp(log_present - hi) + math.exp(log_absent - hi))
    return total
