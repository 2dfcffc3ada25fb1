"""SCAD, MCP and LASSO penalties and their group thresholding operators.

``group_threshold`` returns the exact global minimiser of

    0.5 * ||delta - eta||^2 + (1 / theta) * P(||eta||)

for any ``theta > 0``. Because the penalty is isotropic the minimiser is a
nonnegative multiple of ``delta``, so everything reduces to a scalar
problem in ``z = ||delta||``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import InvalidGamma, KinkPoint, NonPositiveTheta, ValidationError


class PenaltyKind(str, Enum):
    SCAD = "scad"
    MCP = "mcp"
    LASSO = "lasso"


DEFAULT_GAMMA = {PenaltyKind.SCAD: 3.7, PenaltyKind.MCP: 3.0, PenaltyKind.LASSO: None}


@dataclass(frozen=True)
class PenaltyConfig:
    kind: PenaltyKind
    lam: float
    gamma: float | None = None

    def __post_init__(self):
        kind = PenaltyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.gamma is None:
            object.__setattr__(self, "gamma", DEFAULT_GAMMA[kind])
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValidationError(f"lambda must be positive and finite, got {self.lam}")
        if kind is PenaltyKind.SCAD and not self.gamma > 2:
            raise InvalidGamma(f"SCAD needs gamma > 2, got {self.gamma}")
        if kind is PenaltyKind.MCP and not self.gamma > 1:
            raise InvalidGamma(f"MCP needs gamma > 1, got {self.gamma}")

    def with_lambda(self, lam: float) -> "PenaltyConfig":
        return PenaltyConfig(self.kind, lam, self.gamma)


def scad(lam, gamma=3.7):
    return PenaltyConfig(PenaltyKind.SCAD, lam, gamma)


def mcp(lam, gamma=3.0):
    return PenaltyConfig(PenaltyKind.MCP, lam, gamma)


def lasso(lam):
    return PenaltyConfig(PenaltyKind.LASSO, lam)


def penalty_value(config: PenaltyConfig, t):
    """Penalty at ``t >= 0`` (vectorised)."""
    t = np.abs(np.asarray(t, dtype=float))
    lam, g = config.lam, config.gamma
    if config.kind is PenaltyKind.LASSO:
        return lam * t
    if config.kind is PenaltyKind.MCP:
        return np.where(t <= g * lam, lam * t - t**2 / (2 * g), 0.5 * g * lam**2)
    mid = (2 * g * lam * t - t**2 - lam**2) / (2 * (g - 1))
    return np.where(
        t <= lam, lam * t, np.where(t < g * lam, mid, lam**2 * (g + 1) / 2)
    )


def penalty_derivative(config: PenaltyConfig, t: float) -> float:
    if not t > 0:
        raise ValidationError("derivative is defined for t > 0 only")
    lam, g = config.lam, config.gamma
    if config.kind is PenaltyKind.LASSO:
        return lam
    if config.kind is PenaltyKind.MCP:
        if t == g * lam:
            raise KinkPoint(f"t = gamma*lambda = {t} is a branch boundary")
        return max(lam - t / g, 0.0)
    if t == lam or t == g * lam:
        raise KinkPoint(f"t = {t} is a SCAD branch boundary")
    if t < lam:
        return lam
    if t < g * lam:
        return (g * lam - t) / (g - 1)
    return 0.0


def _shrink_norm(config: PenaltyConfig, z: np.ndarray, w: float) -> np.ndarray:
    """Minimiser ``x >= 0`` of ``0.5 (z - x)^2 + w P(x)`` for each ``z >= 0``."""
    lam, g = config.lam, config.gamma
    if config.kind is PenaltyKind.LASSO:
        return np.maximum(z - w * lam, 0.0)

    if config.kind is PenaltyKind.MCP:
        if w < g:
            inner = (z - w * lam) / (1.0 - w / g)
            return np.where(z <= w * lam, 0.0, np.where(z <= g * lam, inner, z))
        cands = [np.zeros_like(z), np.full_like(z, g * lam), np.maximum(z, g * lam)]
    else:
        if w < g - 1:
            second = ((g - 1) * z - w * g * lam) / (g - 1 - w)
            return np.where(
                z <= w * lam,
                0.0,
                np.where(
                    z <= (1 + w) * lam,
                    z - w * lam,
                    np.where(z <= g * lam, second, z),
                ),
            )
        cands = [
            np.zeros_like(z),
            np.clip(z - w * lam, 0.0, lam),
            np.full_like(z, lam),
            np.full_like(z, g * lam),
            np.maximum(z, g * lam),
        ]
    # nonconvex scalar problem: compare every piecewise stationary/endpoint candidate
    cands = np.stack(cands)
    obj = 0.5 * (z - cands) ** 2 + w * penalty_value(config, cands)
    best = np.argmin(obj, axis=0)
    return np.take_along_axis(cands, best[None], axis=0)[0]


def group_threshold(config: PenaltyConfig, delta, theta: float = 1.0) -> np.ndarray:
    """Exact proximal map of ``P(||.||) / theta`` at ``delta``.

    ``delta`` may be a single vector or an ``(m, L)`` stack of vectors,
    each thresholded independently.
    """
    if not theta > 0:
        raise NonPositiveTheta(f"theta must be positive, got {theta}")
    delta = np.asarray(delta, dtype=float)
    single = delta.ndim == 1
    d = delta[None, :] if single else delta
    z = np.linalg.norm(d, axis=1)
    x = _shrink_norm(config, z, 1.0 / theta)
    keep = x == z
    scale = np.divide(x, z, out=np.zeros_like(z), where=z > 0)
    out = np.where(keep[:, None], d, d * scale[:, None])
    out[x == 0] = 0.0
    return out[0] if single else out


def threshold_objective(config: PenaltyConfig, delta, eta, theta: float = 1.0) -> float:
    delta = np.asarray(delta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return float(0.5 * np.sum((delta - eta) ** 2) + penalty_value(config, np.linalg.norm(eta)) / theta)
