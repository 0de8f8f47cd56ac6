"""Seeded geometric and blur augmentation for dermoscopic images.

Transforms run in a fixed order: rotation, random perspective, Gaussian blur.
Every parameter is drawn on every call, applied or not, so the random stream
for a given ``(seed, index)`` never shifts when probabilities change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BadParams, EmptyImage


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = 0
    rotation_max_deg: float = 180.0
    # overrides the random angle when set
    rotation_deg: float | None = None
    perspective_distortion: float = 0.3
    blur_sigma_range: tuple[float, float] = (0.5, 1.5)
    p_rotation: float = 0.5
    p_perspective: float = 0.5
    p_blur: float = 0.5

    def __post_init__(self):
        if self.seed < 0:
            raise BadParams("seed must be non-negative", seed=self.seed)
        if self.rotation_max_deg < 0:
            raise BadParams("rotation_max_deg must be >= 0", rotation_max_deg=self.rotation_max_deg)
        if not 0.0 <= self.perspective_distortion < 1.0:
            raise BadParams("perspective_distortion must be in [0, 1)", value=self.perspective_distortion)
        lo, hi = self.blur_sigma_range
        if not 0.0 <= lo <= hi:
            raise BadParams("blur_sigma_range must satisfy 0 <= lo <= hi", lo=lo, hi=hi)
        for name in ("p_rotation", "p_perspective", "p_blur"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise BadParams(f"{name} must be in [0, 1]", **{name: getattr(self, name)})


@dataclass(frozen=True)
class AugmentParams:
    rotate: bool
    angle_deg: float
    perspective: bool
    corner_shift: np.ndarray  # (4, 2) fractions of the half-size, in [0, 1)
    blur: bool
    sigma: float


def draw_params(cfg: AugmentConfig, index: int) -> AugmentParams:
    if index < 0:
        raise BadParams("index must be non-negative", index=index)
    rng = np.random.default_rng([cfg.seed, index])
    u_rot, angle = rng.random(), rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg)
    u_persp, shift = rng.random(), rng.random((4, 2))
    u_blur, sigma = rng.random(), rng.uniform(*cfg.blur_sigma_range)
    return AugmentParams(
        rotate=u_rot < cfg.p_rotation,
        angle_deg=cfg.rotation_deg if cfg.rotation_deg is not None else float(angle),
        perspective=u_persp < cfg.p_perspective,
        corner_shift=shift * cfg.perspective_distortion,
        blur=u_blur < cfg.p_blur,
        sigma=float(sigma),
    )


def _warp(img: np.ndarray, src_rows: np.ndarray, src_cols: np.ndarray) -> np.ndarray:
    """Bilinear resampling at source coordinates, black outside the image."""
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        out[..., c] = ndimage.map_coordinates(
            img[..., c], [src_rows, src_cols], order=1, mode="constant", cval=0.0
        )
    return out


def rotate(img: np.ndarray, angle_deg: float) -> np.ndarray:
    """Rotate about the image center; positive angles turn counter-clockwise."""
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rows, cols = np.mgrid[0:h, 0:w].astype(float)
    t = math.radians(angle_deg)
    ct, st = math.cos(t), math.sin(t)
    dy, dx = rows - cy, cols - cx
    # inverse map: output pixel -> source pixel
    src_cols = cx + ct * dx - st * dy
    src_rows = cy + st * dx + ct * dy
    return _warp(img, src_rows, src_cols)


def _homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """3x3 H with H @ [x, y, 1] ~ [x', y', 1] for the four (x, y) -> (x', y') pairs."""
    A, b = [], []
    for (x, y), (u, v) in zip(src, dst):
        A.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        A.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        b.extend([u, v])
    coef = np.linalg.solve(np.array(A, dtype=float), np.array(b, dtype=float))
    return np.append(coef, 1.0).reshape(3, 3)


def perspective(img: np.ndarray, corner_shift: np.ndarray) -> np.ndarray:
    """Pull each corner inward by ``corner_shift`` times the half-size.

    Corners are (top-left, top-right, bottom-right, bottom-left), shifts are
    (x, y) fractions.
    """
    h, w = img.shape[:2]
    hw, hh = (w - 1) / 2.0, (h - 1) / 2.0
    corners = np.array([[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]], dtype=float)
    inward = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    moved = corners + inward * corner_shift * [hw, hh]
    # map output coordinates back to the source
    H = _homography(moved, corners)
    rows, cols = np.mgrid[0:h, 0:w].astype(float)
    pts = H @ np.stack([cols.ravel(), rows.ravel(), np.ones(h * w)])
    src_cols = (pts[0] / pts[2]).reshape(h, w)
    src_rows = (pts[1] / pts[2]).reshape(h, w)
    return _warp(img, src_rows, src_cols)


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return img.copy()
    # border clamp; channels are not mixed
    return ndimage.gaussian_filter(img, sigma=(sigma, sigma, 0), mode="nearest")


def augment(image: np.ndarray, cfg: AugmentConfig, index: int) -> np.ndarray:
    """Return the augmented copy of ``image`` for sample number ``index``.

    Accepts HxW or HxWxC arrays; the output has the input's shape and dtype.
    Integer images are rounded and clipped back to their dtype range.
    """
    image = np.asarray(image)
    if image.size == 0 or image.ndim not in (2, 3):
        raise EmptyImage("image must be a non-empty HxW or HxWxC array", shape=list(image.shape))
    params = draw_params(cfg, index)
    if not (params.rotate or params.perspective or params.blur):
        return image.copy()

    work = image.astype(float)
    if work.ndim == 2:
        work = work[..., None]
    if params.rotate:
        work = rotate(work, params.angle_deg)
    if params.perspective and np.any(params.corner_shift):
        work = perspective(work, params.corner_shift)
    if params.blur:
        work = gaussian_blur(work, params.sigma)
    if image.ndim == 2:
        work = work[..., 0]
    if np.issubdtype(image.dtype, np.integer):
        info = np.iinfo(image.dtype)
        work = np.clip(np.rint(work), info.min, info.max)
    return work.astype(image.dtype)
