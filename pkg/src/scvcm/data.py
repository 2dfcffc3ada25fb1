"""Spatial dataset container."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class SpatialDataset:
    """``n`` planar locations with ``p`` covariates and one response.

    The first covariate column is the intercept and should be all ones;
    this is checked with :meth:`validate` but not enforced, so baselines can
    run on arbitrary designs.
    """

    coords: np.ndarray  # (n, 2)
    X: np.ndarray  # (n, p)
    y: np.ndarray  # (n,)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValidationError("coords must have shape (n, 2)")
        if X.shape[0] != coords.shape[0] or y.shape[0] != coords.shape[0]:
            raise ValidationError("coords, X and y disagree on n")
        for name, arr in (("coords", coords), ("X", X), ("y", y)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    def validate(self) -> "SpatialDataset":
        if not np.allclose(self.X[:, 0], 1.0):
            raise ValidationError("first covariate must be the constant 1")
        return self

    def rescaled(self, h: float, v: float) -> "SpatialDataset":
        """Divide the two coordinate axes by ``h`` and ``v``."""
        if h <= 0 or v <= 0:
            raise ValidationError("rescale factors must be positive")
        return SpatialDataset(self.coords / np.array([h, v]), self.X, self.y)

    def take(self, index) -> "SpatialDataset":
        index = np.asarray(index)
        return SpatialDataset(self.coords[index], self.X[index], self.y[index])
