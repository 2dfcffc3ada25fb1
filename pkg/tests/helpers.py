"""Small synthetic instances shared by the unit tests."""
import numpy as np

from scvcm.basis import radial_basis_matrix, select_knots_sfd
from scvcm.data import SpatialDataset
from scvcm.graph import Partition, euclidean_mst


def two_region_data(seed, n=60, gap=2.0, noise=0.05, p=2):
    """Left/right halves of the unit square with a coefficient jump of ``gap``.

    The halves are separated by an empty strip so the MST joins them by one edge.
    """
    rng = np.random.default_rng(seed)
    coords = rng.uniform(size=(n, 2))
    coords[:, 0] = np.where(coords[:, 0] < 0.5, 0.8 * coords[:, 0], 0.2 + 0.8 * coords[:, 0])
    region = (coords[:, 0] > 0.5).astype(int)
    X = np.column_stack([np.ones(n)] + [rng.normal(size=n) for _ in range(p - 1)])
    beta = np.column_stack([gap * region + 0.5 * (k + 1) for k in range(p)])
    y = np.sum(X * beta, axis=1) + noise * rng.normal(size=n)
    return SpatialDataset(coords, X, y), Partition(region), beta


def small_system(data, n_knots=4):
    """Basis and MST for ``data`` with a handful of knots."""
    idx = select_knots_sfd(data.coords, n_knots)
    return radial_basis_matrix(data.coords, data.coords[idx]), euclidean_mst(data.coords)
