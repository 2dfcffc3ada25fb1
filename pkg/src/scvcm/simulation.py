"""Synthetic spatial datasets with banded coefficient clusters.

Locations are uniform on the unit square, kept away from the three
diagonal lines ``s2 = s1 + 0.5``, ``s2 = s1`` and ``s2 = s1 - 0.5`` that
cut the square into four bands (numbered 0..3 from top-left to
bottom-right).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from .data import SpatialDataset
from .exceptions import FactorizationFailure, RejectionOverflow, ValidationError
from .graph import MstGraph, Partition, euclidean_mst, spaneigh_true_clusters

MAX_DRAWS = 10**6
MIN_N = 10
LINE_OFFSETS = (0.5, 0.0, -0.5)  # lines s2 = s1 + c
GP_JITTERS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)

# band values (band 0..3) for the constant study; also the offsets of the smooth study
_BETA2_LEVELS = np.array([1.0, -1.0, 0.5, -0.5])
_BETA1_LEVELS = np.array([-0.5, 1.0, -1.0, 0.5])
_BETA1_POWERS = np.array([1.5, 2.0, 1.7, 1.5])


class Pattern(str, Enum):
    MST_EQUAL = "mst-equal"
    MST_UNEQUAL = "mst-unequal"
    GLOBAL_SMOOTH = "global-smooth"


class Study(str, Enum):
    CONSTANT = "constant"
    SMOOTH_VARYING = "smooth-varying"


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 300
    pattern: Pattern = Pattern.MST_EQUAL
    study: Study = Study.CONSTANT
    phi: float = 0.1
    noise_sd: float = 0.1
    delta_tol: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern(self.pattern))
        object.__setattr__(self, "study", Study(self.study))
        if self.delta_tol is None:
            tol = 0.01 if self.pattern is Pattern.MST_UNEQUAL else 0.02
            object.__setattr__(self, "delta_tol", tol)
        if self.n < MIN_N:
            raise ValidationError(f"n must be at least {MIN_N}, got {self.n}")
        if not self.phi > 0:
            raise ValidationError("phi must be positive")
        if self.noise_sd < 0 or self.delta_tol < 0:
            raise ValidationError("noise_sd and delta_tol must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pattern"] = self.pattern.value
        d["study"] = self.study.value
        return d


@dataclass
class GroundTruth:
    beta: np.ndarray  # (n, p)
    bands: np.ndarray  # (n,) band index 0..3 after any relabelling
    subregions: list  # Partition per covariate
    spaneigh: list  # Partition per covariate
    mst: MstGraph = field(repr=False)
    seed: int = 0


def line_distances(points: np.ndarray) -> np.ndarray:
    """Distance of each point to each boundary line, shape ``(n, 3)``."""
    s1, s2 = points[:, 0], points[:, 1]
    # line s2 - s1 - c = 0, i.e. a=-1, b=1
    return np.abs(s2[:, None] - s1[:, None] - np.array(LINE_OFFSETS)[None, :]) / np.sqrt(2.0)


def band_of(points: np.ndarray) -> np.ndarray:
    s1, s2 = points[:, 0], points[:, 1]
    return np.select(
        [s2 > s1 + 0.5, s2 > s1, s2 > s1 - 0.5],
        [0, 1, 2],
        default=3,
    )


def _streams(seed: int):
    loc, gp, noise = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(loc), np.random.default_rng(gp), np.random.default_rng(noise)


def sample_locations(n: int, delta_tol: float, rng) -> np.ndarray:
    """Rejection-sample ``n`` points at distance >= ``delta_tol`` from every line."""
    kept = []
    have = 0
    draws = 0
    batch = max(2 * n, 256)
    while have < n:
        if draws >= MAX_DRAWS:
            raise RejectionOverflow(
                f"only {have} of {n} points accepted after {draws} draws (delta_tol={delta_tol})"
            )
        pts = rng.uniform(size=(batch, 2))
        draws += batch
        ok = line_distances(pts).min(axis=1) >= delta_tol
        kept.append(pts[ok])
        have += int(ok.sum())
    return np.concatenate(kept)[:n]


def absorb_small_components(bands: np.ndarray, mst: MstGraph, max_size: int = 2) -> np.ndarray:
    """Relabel tiny within-band MST components to their largest neighbour.

    A component of size ``<= max_size`` takes the band of the largest
    MST-adjacent component (ties to the smaller component id). Repeated
    until no tiny component with a neighbour remains.
    """
    bands = bands.copy()
    for _ in range(mst.n):
        comp = spaneigh_true_clusters(Partition(bands), mst).labels
        sizes = np.bincount(comp)
        changed = False
        for c in np.flatnonzero(sizes <= max_size):
            members = np.flatnonzero(comp == c)
            nbrs = np.unique(np.concatenate([mst.adjacency[i] for i in members]))
            nbr_comps = np.unique(comp[nbrs])
            nbr_comps = nbr_comps[nbr_comps != c]
            if nbr_comps.size == 0:
                continue
            donor = nbr_comps[np.lexsort((nbr_comps, -sizes[nbr_comps]))[0]]
            bands[members] = bands[np.flatnonzero(comp == donor)[0]]
            changed = True
            break  # component ids change after each relabel
        if not changed:
            break
    return bands


def generate_locations(config: ScenarioConfig, rng=None):
    """Locations, band labels and their MST.

    Returns ``(coords, bands, mst)``; for the unequal pattern the bands are
    already post-processed so no within-band MST component has size <= 2.
    """
    if rng is None:
        rng = _streams(config.seed)[0]
    coords = sample_locations(config.n, config.delta_tol, rng)
    bands = band_of(coords)
    mst = euclidean_mst(coords)
    if config.pattern is Pattern.MST_UNEQUAL:
        bands = absorb_small_components(bands, mst)
    return coords, bands, mst


def exponential_covariance(coords: np.ndarray, phi: float) -> np.ndarray:
    return np.exp(-cdist(coords, coords) / phi)


def gp_covariate(coords, phi: float, rng) -> np.ndarray:
    """One draw of a zero-mean GP with covariance ``exp(-d / phi)``."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    cov = exponential_covariance(np.asarray(coords, dtype=float), phi)
    for jit in GP_JITTERS:
        try:
            chol = np.linalg.cholesky(cov + jit * np.eye(cov.shape[0]))
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise FactorizationFailure("GP covariance not positive definite after jitter")
    return chol @ rng.standard_normal(cov.shape[0])


def coefficient_surface(config: ScenarioConfig, coords: np.ndarray, bands: np.ndarray) -> np.ndarray:
    """True ``(beta_1, beta_2)`` at each location, shape ``(n, 2)``."""
    shv = coords[:, 0] + coords[:, 1]
    if config.pattern is Pattern.GLOBAL_SMOOTH:
        return np.column_stack([shv**1.7, shv**2])
    if config.study is Study.CONSTANT:
        return np.column_stack([_BETA1_LEVELS[bands], _BETA2_LEVELS[bands]])
    beta1 = _BETA1_LEVELS[bands] + shv ** _BETA1_POWERS[bands]
    beta2 = _BETA2_LEVELS[bands] + shv**2
    return np.column_stack([beta1, beta2])


def make_dataset(config: ScenarioConfig) -> tuple[SpatialDataset, GroundTruth]:
    """Simulate ``y = beta_1 + x_2 beta_2 + noise`` with ``x_2`` a GP draw."""
    loc_rng, gp_rng, noise_rng = _streams(config.seed)
    coords, bands, mst = generate_locations(config, loc_rng)
    beta = coefficient_surface(config, coords, bands)
    x2 = gp_covariate(coords, config.phi, gp_rng)
    X = np.column_stack([np.ones(config.n), x2])
    y = (X * beta).sum(axis=1) + config.noise_sd * noise_rng.standard_normal(config.n)
    if config.pattern is Pattern.GLOBAL_SMOOTH:
        truth_part = Partition(np.zeros(config.n, dtype=int))
    else:
        truth_part = Partition(bands)
    spaneigh = spaneigh_true_clusters(truth_part, mst)
    truth = GroundTruth(
        beta=beta,
        bands=bands,
        subregions=[truth_part, truth_part],
        spaneigh=[spaneigh, spaneigh],
        mst=mst,
        seed=config.seed,
    )
    return SpatialDataset(coords, X, y), truth


def is_mst_equal(truth: GroundTruth) -> bool:
    return all(a == b for a, b in zip(truth.subregions, truth.spaneigh))


def make_mst_equal_dataset(config: ScenarioConfig, max_tries: int = 2000, seed_stride: int = 100_003):
    """Like :func:`make_dataset` but redraws the seed until SpaNeigh equals the bands.

    Returns ``(dataset, truth, seed_used)``.
    """
    seed = config.seed
    for _ in range(max_tries):
        cfg = ScenarioConfig(config.n, config.pattern, config.study, config.phi,
                             config.noise_sd, config.delta_tol, seed)
        data, truth = make_dataset(cfg)
        if is_mst_equal(truth):
            return data, truth, seed
        seed += seed_stride
    raise RejectionOverflow(f"no MST-equal draw in {max_tries} seeds")


__all__ = [
    "Pattern",
    "Study",
    "ScenarioConfig",
    "GroundTruth",
    "band_of",
    "line_distances",
    "sample_locations",
    "generate_locations",
    "absorb_small_components",
    "gp_covariate",
    "exponential_covariance",
    "coefficient_surface",
    "make_dataset",
    "make_mst_equal_dataset",
    "is_mst_equal",
]
