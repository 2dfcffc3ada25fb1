"""The linear system solved in every ADMM coefficient update.

Arrays of spline coefficients use the layout ``(n, p, L)``: location,
covariate, basis function. The sparse matrix returned by
:func:`assemble_pi` uses the flat ordering ``(k, i, l)`` (covariate-major),
see :func:`to_flat` / :func:`from_flat`.

Two solvers are provided:

``SparsePiSolver``
    One sparse LU factorisation of the assembled matrix, reused for every
    right-hand side.

``TreeWoodburySolver``
    Splits the matrix as ``tree Laplacian + diagonal`` (cheap, fill-free
    sparse factorisations, one per distinct diagonal value) plus the
    rank-``n`` data term, and applies the Woodbury identity with an
    ``(n + 3p)``-sized dense capacitance matrix. The Laplacian blocks that
    are singular (unpenalised basis functions) are grounded at one vertex
    and the grounding is removed again through the low-rank correction.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import SingularSystem
from .graph import MstGraph

log = logging.getLogger(__name__)

JITTER = 1e-10
STRUCTURED_MAX_N = 2500


def design_tensor(X: np.ndarray, basis_matrix: np.ndarray) -> np.ndarray:
    """``Z[i, k, l] = x_k(s_i) * B_l(s_i)``."""
    return X[:, :, None] * basis_matrix[:, None, :]


def to_flat(a: np.ndarray) -> np.ndarray:
    """``(n, p, L)`` array to the covariate-major flat vector."""
    return np.ascontiguousarray(a.transpose(1, 0, 2)).ravel()


def from_flat(v: np.ndarray, n: int, p: int, L: int) -> np.ndarray:
    return np.ascontiguousarray(v.reshape(p, n, L).transpose(1, 0, 2))


def fitted_values(Z: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.einsum("ikl,ikl->i", Z, a)


def smoothing_diagonal(rho, gamma_diag) -> np.ndarray:
    """``2 * rho_k * Gamma_l`` as a ``(p, L)`` array."""
    return 2.0 * np.outer(np.asarray(rho, dtype=float), gamma_diag)


@dataclass
class PiSystem:
    matrix: sp.csc_matrix
    rhs_base: np.ndarray  # flat, covariate-major
    nnz_fraction: float


def assemble_pi(Z, y, mst: MstGraph, theta: float, rho, gamma_diag) -> PiSystem:
    """Assemble the sparse coefficient-update matrix in covariate-major order.

    ``Pi = B'B / n + theta * (I_p kron Lap kron I_L) + 2 * diag(rho_k Gamma)``
    and ``rhs_base = B'y / n``.
    """
    n, p, L = Z.shape
    N = n * p * L
    pl = p * L
    # flat index of (k, i, l) for location i and local index k*L + l
    local = np.arange(pl)
    kk, ll = np.divmod(local, L)
    idx = (kk[None, :] * n + np.arange(n)[:, None]) * L + ll[None, :]  # (n, pL)

    zf = Z.reshape(n, pl)
    blocks = zf[:, :, None] * zf[:, None, :] / n
    rows = np.broadcast_to(idx[:, :, None], blocks.shape).ravel()
    cols = np.broadcast_to(idx[:, None, :], blocks.shape).ravel()
    data_term = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(N, N))

    lap = sp.kron(sp.identity(p), sp.kron(mst.laplacian(), sp.identity(L)))
    diag = sp.diags(np.repeat(smoothing_diagonal(rho, gamma_diag), n, axis=0).ravel())
    pi = (data_term.tocsc() + theta * lap + diag).tocsc()
    pi.sum_duplicates()
    pi.eliminate_zeros()
    rhs = to_flat(Z * y[:, None, None] / n)
    return PiSystem(matrix=pi, rhs_base=rhs, nnz_fraction=pi.nnz / float(N) ** 2)


class _PiOperator:
    """Shared matrix-free product with the coefficient-update matrix."""

    def __init__(self, Z, mst: MstGraph, theta, rho, gamma_diag):
        self.Z = Z
        self.n, self.p, self.L = Z.shape
        self.mst = mst
        self.theta = float(theta)
        self.dvals = smoothing_diagonal(rho, gamma_diag)  # (p, L)
        self.lap = mst.laplacian().tocsr()

    def matvec(self, a: np.ndarray) -> np.ndarray:
        n = self.n
        af = a.reshape(n, -1)
        zf = self.Z.reshape(n, -1)
        out = zf * ((zf * af).sum(axis=1) / n)[:, None]
        out += self.theta * (self.lap @ af)
        out += af * self.dvals.ravel()[None, :]
        return out.reshape(a.shape)


class SparsePiSolver(_PiOperator):
    method = "sparse"

    def __init__(self, Z, mst, theta, rho, gamma_diag, y=None):
        super().__init__(Z, mst, theta, rho, gamma_diag)
        y = np.zeros(self.n) if y is None else y
        self.system = assemble_pi(Z, y, mst, theta, rho, gamma_diag)
        mat = self.system.matrix
        try:
            self._lu = spla.splu(mat, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        except RuntimeError:
            scale = JITTER * max(abs(mat.diagonal()).max(), 1.0)
            log.info("coefficient system singular; retrying with jitter %.2g", scale)
            try:
                self._lu = spla.splu(
                    (mat + scale * sp.identity(mat.shape[0], format="csc")).tocsc(),
                    permc_spec="MMD_AT_PLUS_A",
                    options={"SymmetricMode": True},
                )
            except RuntimeError as exc:
                raise SingularSystem("coefficient system is singular after jitter") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        n, p, L = self.n, self.p, self.L
        x = self._lu.solve(to_flat(rhs))
        if not np.all(np.isfinite(x)):
            raise SingularSystem("non-finite solution of the coefficient system")
        return from_flat(x, n, p, L)


class TreeWoodburySolver(_PiOperator):
    method = "structured"

    def __init__(self, Z, mst, theta, rho, gamma_diag, root: int = 0, refine_tol: float = 1e-13):
        super().__init__(Z, mst, theta, rho, gamma_diag)
        if self.theta <= 0:
            raise SingularSystem("structured solver needs theta > 0")
        n, pl = self.n, self.p * self.L
        self.root = int(root)
        self.refine_tol = refine_tol
        self.tau = self.theta
        dflat = self.dvals.ravel()
        zf = self.Z.reshape(n, pl)
        self._zf = zf

        self._groups = []  # (column mask, lu, dense inverse)
        eye = sp.identity(n, format="csc")
        ground = sp.csc_matrix(([self.tau], ([self.root], [self.root])), shape=(n, n))
        for d in np.unique(dflat):
            mask = dflat == d
            mat = self.theta * self.lap + d * eye
            if d == 0:
                mat = mat + ground
            lu = spla.splu(mat.tocsc(), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
            inv = lu.solve(np.eye(n))
            self._groups.append((mask, lu, inv, d == 0))

        self._zero_cols = np.flatnonzero(dflat == 0)
        nz = self._zero_cols.size
        K = np.zeros((n + nz, n + nz))
        K[np.diag_indices(n)] = n
        for mask, _, inv, _ in self._groups:
            zg = zf[:, mask]
            K[:n, :n] += (zg @ zg.T) * inv
        if nz:
            inv0 = next(g[2] for g in self._groups if g[3])
            cross = zf[:, self._zero_cols] * inv0[:, self.root][:, None]
            K[:n, n:] = cross
            K[n:, :n] = cross.T
            K[n:, n:] = (inv0[self.root, self.root] - 1.0 / self.tau) * np.eye(nz)
        try:
            self._K = sla.lu_factor(K, check_finite=True)
        except (ValueError, sla.LinAlgError) as exc:
            raise SingularSystem("capacitance matrix could not be factorised") from exc
        if np.any(np.abs(np.diag(self._K[0])) < 1e-14 * np.abs(K).max()):
            raise SingularSystem("capacitance matrix is singular")

    def _minv(self, rf: np.ndarray) -> np.ndarray:
        out = np.empty_like(rf)
        for mask, lu, _, _ in self._groups:
            out[:, mask] = lu.solve(np.ascontiguousarray(rf[:, mask]))
        return out

    def _solve_once(self, rf: np.ndarray) -> np.ndarray:
        n = self.n
        z = self._minv(rf)
        w = np.empty(n + self._zero_cols.size)
        w[:n] = (self._zf * z).sum(axis=1)
        w[n:] = z[self.root, self._zero_cols]
        c = sla.lu_solve(self._K, w)
        wc = self._zf * c[:n, None]
        wc[self.root, self._zero_cols] += c[n:]
        return z - self._minv(wc)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        shape = rhs.shape
        rf = rhs.reshape(self.n, -1)
        x = self._solve_once(rf)
        norm = np.linalg.norm(rf)
        for _ in range(3):
            res = rf - self.matvec(x.reshape(shape)).reshape(self.n, -1)
            if np.linalg.norm(res) <= self.refine_tol * max(norm, 1e-300):
                break
            x = x + self._solve_once(res)
        if not np.all(np.isfinite(x)):
            raise SingularSystem("non-finite solution of the coefficient system")
        return x.reshape(shape)


def make_solver(Z, mst, theta, rho, gamma_diag, method: str = "auto"):
    """Pick and factorise a solver for the coefficient-update system."""
    if method == "auto":
        method = "structured" if (theta > 0 and Z.shape[0] <= STRUCTURED_MAX_N) else "sparse"
    if method == "structured":
        try:
            return TreeWoodburySolver(Z, mst, theta, rho, gamma_diag)
        except SingularSystem:
            log.info("structured solver unavailable; falling back to sparse LU")
            return SparsePiSolver(Z, mst, theta, rho, gamma_diag)
    if method == "sparse":
        return SparsePiSolver(Z, mst, theta, rho, gamma_diag)
    raise ValueError(f"unknown solver method {method!r}")
