"""Binary focal loss with a closed-form derivative.

    FL(p_t) = -alpha * (1 - p_t)**gamma * log(p_t),   p_t = p if y else 1 - p

``alpha`` is a single scalar weight applied to both classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class FocalLossParams:
    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError("alpha must be in (0, 1]", alpha=self.alpha)
        if not self.gamma >= 0.0:
            raise DomainError("gamma must be >= 0", gamma=self.gamma)


def _check(p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability {p!r} outside (0, 1)", p=p)


def focal_loss(p: float, y: bool, params: FocalLossParams = FocalLossParams()) -> float:
    _check(p)
    pt = p if y else 1.0 - p
    return -params.alpha * (1.0 - pt) ** params.gamma * math.log(pt)


def focal_loss_grad(p: float, y: bool, params: FocalLossParams = FocalLossParams()) -> float:
    """d FL / d p."""
    _check(p)
    pt = p if y else 1.0 - p
    a, g = params.alpha, params.gamma
    # d/dpt of -a (1-pt)^g log(pt)
    d_pt = -a * (1.0 - pt) ** g / pt
    if g != 0.0:
        d_pt += a * g * (1.0 - pt) ** (g - 1.0) * math.log(pt)
    return d_pt if y else -d_pt
