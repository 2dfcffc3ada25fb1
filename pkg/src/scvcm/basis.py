"""Low-rank thin-plate radial basis with space-filling knot selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import DegenerateColumn, TooManyKnots, ValidationError

MAX_SWAP_ROUNDS = 200


def num_knots(n: int) -> int:
    """Knot count ``max(20, min(n // 4, 40))``."""
    if n < 1:
        raise ValidationError("sample size must be positive")
    return max(20, min(n // 4, 40))


def thin_plate(r):
    """``r**2 log r`` with the removable singularity at 0 filled in."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = r[pos] ** 2 * np.log(r[pos])
    return out


def coverage(points: np.ndarray, knots: np.ndarray) -> float:
    d2 = cdist(points, knots, "sqeuclidean")
    return float(d2.min(axis=1).sum())


def select_knots_sfd(locations, n_knots: int, seed: int = 0) -> np.ndarray:
    """Pick ``n_knots`` observed locations as a space-filling design.

    Farthest-point initialisation from the point nearest the centroid,
    then single-point swap descent on ``sum_x min_d ||x - d||^2``.
    The search itself is deterministic; ``seed`` only permutes the order
    in which knots are visited during the swap rounds.

    Returns the indices (into ``locations``) of the chosen knots, sorted.
    """
    pts = np.asarray(locations, dtype=float)
    n = pts.shape[0]
    if n_knots > n:
        raise TooManyKnots(f"cannot place {n_knots} knots on {n} locations")
    if n_knots < 1:
        raise ValidationError("need at least one knot")
    if n_knots == n:
        return np.arange(n)

    d2 = cdist(pts, pts, "sqeuclidean")
    centroid = pts.mean(axis=0)
    first = int(np.argmin(((pts - centroid) ** 2).sum(axis=1)))
    chosen = [first]
    mind = d2[first].copy()
    while len(chosen) < n_knots:
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, d2[nxt])
    chosen = np.array(chosen)

    rng = np.random.default_rng(seed)
    in_design = np.zeros(n, dtype=bool)
    in_design[chosen] = True
    for _ in range(MAX_SWAP_ROUNDS):
        improved = False
        for slot in rng.permutation(n_knots):
            others = np.delete(chosen, slot)
            base = d2[:, others].min(axis=1) if others.size else np.full(n, np.inf)
            current = np.minimum(base, d2[:, chosen[slot]]).sum()
            cand = np.flatnonzero(~in_design)
            # column c: criterion after replacing chosen[slot] by c
            crit = np.minimum(d2[:, cand], base[:, None]).sum(axis=0)
            best = int(np.argmin(crit))
            if crit[best] < current - 1e-12 * max(current, 1.0):
                in_design[chosen[slot]] = False
                chosen[slot] = cand[best]
                in_design[cand[best]] = True
                improved = True
        if not improved:
            break
    return np.sort(chosen)


def _raw_basis(points: np.ndarray, knots: np.ndarray) -> np.ndarray:
    r = cdist(points, knots)
    return np.column_stack([np.ones(points.shape[0]), points, thin_plate(r)])


@dataclass(frozen=True)
class BasisSystem:
    """Normalised radial basis evaluated at the observed locations.

    ``matrix[i]`` is ``B(s_i)``; columns are the raw basis divided by
    ``norm_factors``, the mean absolute value of each raw column.
    """

    knots: np.ndarray
    norm_factors: np.ndarray
    matrix: np.ndarray

    @property
    def L(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def n_knots(self) -> int:
        return int(self.knots.shape[0])

    def evaluate(self, points) -> np.ndarray:
        """Basis rows at arbitrary points, using the stored normalisation."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return _raw_basis(pts, self.knots) / self.norm_factors

    def smoothing_diag(self) -> np.ndarray:
        return smoothing_matrix(self.n_knots)


def radial_basis_matrix(locations, knots) -> BasisSystem:
    pts = np.atleast_2d(np.asarray(locations, dtype=float))
    knots = np.atleast_2d(np.asarray(knots, dtype=float))
    if pts.shape[0] == 0 or knots.shape[0] == 0:
        raise ValidationError("need at least one location and one knot")
    raw = _raw_basis(pts, knots)
    norm = np.abs(raw).mean(axis=0)
    if np.any(norm <= 0):
        bad = np.flatnonzero(norm <= 0).tolist()
        raise DegenerateColumn(f"basis columns {bad} vanish at every observed location")
    return BasisSystem(knots=knots, norm_factors=norm, matrix=raw / norm)


def smoothing_matrix(n_knots: int) -> np.ndarray:
    """Diagonal of the smoothing penalty: three zeros then ``n_knots`` ones."""
    return np.r_[np.zeros(3), np.ones(int(n_knots))]


def build_basis(locations, n_knots: int | None = None, seed: int = 0) -> BasisSystem:
    pts = np.asarray(locations, dtype=float)
    if n_knots is None:
        n_knots = num_knots(pts.shape[0])
    n_knots = min(n_knots, pts.shape[0])
    idx = select_knots_sfd(pts, n_knots, seed=seed)
    return radial_basis_matrix(pts, pts[idx])
