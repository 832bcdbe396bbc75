"""Dense linear algebra and statistics used by the separation algorithms.

Signals are plain 2-D ``float64`` arrays laid out channels x samples.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class DimensionError(ValueError):
    """Input has the wrong shape or too few samples."""


class SingularDataError(np.linalg.LinAlgError):
    """Covariance is rank deficient, so the data cannot be whitened."""

    def __init__(self, deficient, n):
        self.deficient = deficient
        self.n = n
        super().__init__(
            f"covariance is rank deficient: {deficient} of {n} dimensions "
            "have (near-)zero variance"
        )


class ContractError(ValueError):
    """A documented precondition does not hold."""


def as_signal(x, name="x"):
    """Validate and return ``x`` as a finite 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class Whitening:
    """Affine map taking centered data to unit covariance.

    ``z = whitener @ (x - mean[:, None])`` and
    ``x = dewhitener @ z + mean[:, None]``.
    """

    whitener: np.ndarray
    dewhitener: np.ndarray
    mean: np.ndarray

    def apply(self, x):
        return self.whitener @ (x - self.mean[:, np.newaxis])

    def invert(self, z):
        return self.dewhitener @ z + self.mean[:, np.newaxis]


@dataclass
class CumulantSet:
    """Leading eigen-matrices of a fourth-order cumulant tensor.

    ``matrices`` has shape ``(count, n, n)``; each slice is symmetric with
    unit Frobenius norm. ``weights`` are the matching eigenvalues, sorted by
    decreasing magnitude.
    """

    matrices: np.ndarray
    weights: np.ndarray
    undersampled: bool = False
    quadricovariance: np.ndarray = field(default=None, repr=False)

    def weighted(self):
        return self.matrices * self.weights[:, np.newaxis, np.newaxis]


def covariance(x):
    """Sample covariance with ``1/cols`` normalization."""
    x = as_signal(x)
    if x.shape[1] < 2:
        raise DimensionError("covariance needs at least 2 samples")
    xc = x - x.mean(axis=1, keepdims=True)
    c = xc @ xc.T / x.shape[1]
    return 0.5 * (c + c.T)


def sym_eig(m, *, backend=None):
    """Symmetric eigen-decomposition by cyclic Jacobi.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Symmetric to within ``1e-10`` relative to its largest entry.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        In descending order.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns matching ``eigenvalues``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-10 * scale:
        raise ContractError("sym_eig requires a symmetric matrix")
    w, v, _ = _kernels.jacobi_eig(0.5 * (m + m.T), backend=backend)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def whiten(x, *, floor=1e-12):
    """Center ``x`` and map it to identity sample covariance.

    The whitener is ``diag(lambda)^(-1/2) @ E.T`` from the eigen-decomposition
    of the covariance, so output rows are principal components in
    decreasing-variance order.

    Raises
    ------
    SingularDataError
        When any covariance eigenvalue is at or below ``floor`` times the
        largest one.
    """
    x = as_signal(x)
    c = covariance(x)
    lam, vecs = sym_eig(c)
    top = lam[0]
    deficient = int(np.sum(lam <= floor * max(top, 0.0))) if top > 0 else len(lam)
    if deficient:
        raise SingularDataError(deficient, len(lam))
    scale = np.sqrt(lam)
    whitener = vecs.T / scale[:, np.newaxis]
    dewhitener = vecs * scale[np.newaxis, :]
    mean = x.mean(axis=1)
    w = Whitening(whitener, dewhitener, mean)
    return w.apply(x), w


def _pair_index(n):
    ii, jj = np.triu_indices(n)
    scale = np.where(ii == jj, 1.0, np.sqrt(2.0))
    return ii, jj, scale


def quadricovariance(z):
    """Fourth-order cumulants of whitened ``z`` as a symmetric matrix.

    Rows and columns run over the ``n(n+1)/2`` index pairs ``i <= j`` with
    off-diagonal pairs scaled by ``sqrt(2)``, which makes the map an isometry
    from symmetric ``n x n`` matrices with the Frobenius inner product. Unit
    covariance is assumed when subtracting the Gaussian part.
    """
    z = as_signal(z, "z")
    n, m = z.shape
    ii, jj, scale = _pair_index(n)
    prods = z[ii] * z[jj] * scale[:, np.newaxis]
    q = prods @ prods.T / m
    diag = (ii == jj).astype(float)
    q -= np.outer(diag, diag)
    q -= 2.0 * np.eye(len(ii))
    return 0.5 * (q + q.T)


def cum4_tensor(z):
    """Full ``n^4`` sample cumulant tensor of whitened ``z`` (test oracle sized)."""
    z = as_signal(z, "z")
    n, m = z.shape
    moment = np.einsum("it,jt,kt,lt->ijkl", z, z, z, z) / m
    eye = np.eye(n)
    return (
        moment
        - np.einsum("ij,kl->ijkl", eye, eye)
        - np.einsum("ik,jl->ijkl", eye, eye)
        - np.einsum("il,jk->ijkl", eye, eye)
    )


def cum4_eigenmatrices(z, count):
    """Return the ``count`` most significant cumulant eigen-matrices of ``z``.

    ``z`` must already be white. When ``z`` has fewer than ``10 n^2`` samples
    the estimate is noisy; the result is still returned with
    ``undersampled=True``.
    """
    z = as_signal(z, "z")
    n, m = z.shape
    npairs = n * (n + 1) // 2
    if not 1 <= count <= npairs:
        raise ContractError(f"count must be in [1, {npairs}], got {count}")
    c = covariance(z) if m >= 2 else np.eye(n)
    if np.max(np.abs(c - np.eye(n))) > 1e-3:
        raise ContractError("cum4_eigenmatrices expects whitened input")
    undersampled = m < 10 * n * n
    q = quadricovariance(z)
    lam, vecs = np.linalg.eigh(q)
    order = np.argsort(-np.abs(lam), kind="stable")[:count]
    ii, jj, scale = _pair_index(n)
    mats = np.zeros((count, n, n))
    for r, k in enumerate(order):
        vals = vecs[:, k] / scale
        mats[r, ii, jj] = vals
        mats[r, jj, ii] = vals
    return CumulantSet(mats, lam[order].copy(), undersampled, q)


@dataclass
class JointDiagonalization:
    rotation: np.ndarray
    converged: bool
    sweeps: int
    history: np.ndarray


def joint_diagonalize(matrices, *, eps=1e-8, max_sweeps=100, backend=None):
    """Orthogonal joint diagonalization by Jacobi sweeps.

    ``matrices`` is a :class:`CumulantSet` (its weighted matrices are used)
    or an array of shape ``(k, n, n)`` of symmetric matrices. The returned
    ``rotation`` ``U`` minimizes the summed off-diagonal energy of
    ``U.T @ M @ U``. Sweeps stop once every rotation in a sweep has
    ``|sin| <= eps``; hitting ``max_sweeps`` leaves ``converged`` false.
    """
    if isinstance(matrices, CumulantSet):
        mats = matrices.weighted()
    else:
        mats = np.asarray(matrices, dtype=np.float64)
    if mats.ndim == 2:
        mats = mats[np.newaxis]
    if mats.ndim != 3 or mats.shape[0] == 0 or mats.shape[1] != mats.shape[2]:
        raise DimensionError(f"expected a non-empty (k, n, n) stack, got shape {mats.shape}")
    v, _, sweeps, converged, history = _kernels.joint_diag(mats, eps, max_sweeps, backend=backend)
    return JointDiagonalization(v, bool(converged), int(sweeps), history)


def offdiag_energy(matrices, rotation=None):
    """Summed squared off-diagonal entries, optionally after ``U.T M U``."""
    mats = np.asarray(matrices, dtype=np.float64)
    if rotation is not None:
        mats = np.einsum("ji,rjk,kl->ril", rotation, mats, rotation)
    mask = ~np.eye(mats.shape[-1], dtype=bool)
    return float(np.sum(mats[..., mask] ** 2))


def cross_cumulant_energy(z):
    """Sum of squared fourth-order cross-cumulants ``cum(z_i, z_j, z_k, z_l)``
    over all index tuples with ``i != j``. Zero for independent rows."""
    z = as_signal(z, "z")
    ii, jj, _ = _pair_index(z.shape[0])
    q = quadricovariance(z)
    return float(np.sum(q[ii != jj] ** 2))
