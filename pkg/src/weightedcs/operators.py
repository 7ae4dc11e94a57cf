"""Linear measurement operators.

Every operator is a :class:`scipy.sparse.linalg.LinearOperator` with an
extra :meth:`MeasurementOperator.columns` method, which the solver uses to
pull out the few columns it needs when polishing a solution on its support.
"""
from __future__ import annotations

import numpy as np
from scipy import fft
from scipy.sparse.linalg import LinearOperator

from .errors import DimensionError, DomainError, ResourceError
from .model import SupportSet

__all__ = [
    "MeasurementOperator",
    "DenseOperator",
    "DenseGaussianOperator",
    "IdentityTransform",
    "DCT1Synthesis",
    "DCT2Synthesis",
    "RestrictedTransformOperator",
    "gaussian_operator",
    "restriction_operator",
    "dct_1d",
    "idct_1d",
    "dct_2d",
    "idct_2d",
    "materialize",
    "as_operator",
    "MATERIALIZE_CAP",
]

MATERIALIZE_CAP = 40_000_000


def dct_1d(x):
    """Orthonormal DCT-II."""
    return fft.dct(np.asarray(x, dtype=float), type=2, norm="ortho")


def idct_1d(c):
    """Inverse of :func:`dct_1d` (orthonormal DCT-III)."""
    return fft.idct(np.asarray(c, dtype=float), type=2, norm="ortho")


def dct_2d(frame):
    """Separable orthonormal DCT-II along both axes of a 2-D array."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2:
        raise DimensionError(f"expected a 2-D frame, got shape {frame.shape}")
    return fft.dctn(frame, type=2, norm="ortho")


def idct_2d(coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2:
        raise DimensionError(f"expected a 2-D coefficient array, got shape {coeffs.shape}")
    return fft.idctn(coeffs, type=2, norm="ortho")


class MeasurementOperator(LinearOperator):
    """Real linear map R^N -> R^n with forward and adjoint application."""

    def __init__(self, shape):
        super().__init__(dtype=np.float64, shape=tuple(int(s) for s in shape))

    def columns(self, idx) -> np.ndarray:
        """Dense ``n x len(idx)`` block of the selected columns."""
        idx = np.asarray(idx, dtype=np.int64)
        E = np.zeros((self.shape[1], idx.size))
        E[idx, np.arange(idx.size)] = 1.0
        return np.asarray(self.matmat(E))

    def _adjoint(self):
        return _AdjointOperator(self)


class _AdjointOperator(LinearOperator):
    def __init__(self, op):
        self.op = op
        super().__init__(dtype=np.float64, shape=(op.shape[1], op.shape[0]))

    def _matvec(self, v):
        return self.op.rmatvec(v)

    def _rmatvec(self, x):
        return self.op.matvec(x)


class DenseOperator(MeasurementOperator):
    """Operator backed by an explicit matrix."""

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float, ndmin=2)
        if matrix.ndim != 2:
            raise DimensionError("matrix must be two-dimensional")
        matrix.setflags(write=False)
        self.matrix = matrix
        super().__init__(matrix.shape)

    def _matvec(self, x):
        return self.matrix @ np.ravel(x)

    def _rmatvec(self, v):
        return self.matrix.T @ np.ravel(v)

    def _matmat(self, X):
        return self.matrix @ X

    def _rmatmat(self, V):
        return self.matrix.T @ V

    def columns(self, idx):
        return self.matrix[:, np.asarray(idx, dtype=np.int64)]


class DenseGaussianOperator(DenseOperator):
    """I.i.d. N(0, 1/n) entries."""

    def __init__(self, n, N, seed):
        self.seed = seed
        rng = np.random.default_rng(seed)
        super().__init__(rng.standard_normal((n, N)) / np.sqrt(n))


def gaussian_operator(n: int, N: int, seed) -> DenseGaussianOperator:
    if n < 1 or N < 1:
        raise DomainError(f"need n >= 1 and N >= 1, got n={n}, N={N}")
    return DenseGaussianOperator(n, N, seed)


class IdentityTransform:
    """Trivial synthesis map, mostly for tests."""

    def __init__(self, N):
        self.size = int(N)

    def synthesize(self, c):
        return np.asarray(c, dtype=float).copy()

    def analyze(self, x):
        return np.asarray(x, dtype=float).copy()

    def basis_rows(self, rows, cols):
        rows = np.asarray(rows)[:, None]
        cols = np.asarray(cols)[None, :]
        return (rows == cols).astype(float)


class DCT1Synthesis:
    """Orthonormal inverse DCT: coefficients of length N -> samples."""

    def __init__(self, N):
        self.size = int(N)

    def synthesize(self, c):
        return idct_1d(c)

    def analyze(self, x):
        return dct_1d(x)

    def basis_rows(self, rows, cols):
        # entry (t, i) of the synthesis matrix is the i-th DCT-II basis at sample t
        N = self.size
        t = np.asarray(rows, dtype=float)[:, None]
        i = np.asarray(cols, dtype=float)[None, :]
        scale = np.where(i == 0, np.sqrt(1.0 / N), np.sqrt(2.0 / N))
        return scale * np.cos(np.pi * (2 * t + 1) * i / (2 * N))


class DCT2Synthesis:
    """Orthonormal 2-D inverse DCT on H x W blocks, flattened row-major."""

    def __init__(self, H, W):
        self.H, self.W = int(H), int(W)
        self.size = self.H * self.W
        self._rows = DCT1Synthesis(self.H)
        self._cols = DCT1Synthesis(self.W)

    def synthesize(self, c):
        return idct_2d(np.reshape(c, (self.H, self.W))).ravel()

    def analyze(self, x):
        return dct_2d(np.reshape(x, (self.H, self.W))).ravel()

    def basis_rows(self, rows, cols):
        pr, qr = np.divmod(np.asarray(rows, dtype=np.int64), self.W)
        pc, qc = np.divmod(np.asarray(cols, dtype=np.int64), self.W)
        return (self._rows.basis_rows(pr, pc) * self._cols.basis_rows(qr, qc))


class RestrictedTransformOperator(MeasurementOperator):
    """Synthesize from transform coefficients, then keep selected samples."""

    def __init__(self, kept_indices, transform):
        N = transform.size
        kept = SupportSet(kept_indices, N) if not isinstance(kept_indices, SupportSet) else kept_indices
        if kept.ambient_dim != N:
            raise DimensionError("kept indices and transform sizes disagree")
        self.kept = kept
        self._kept = kept.as_array()
        self.transform = transform
        super().__init__((len(kept), N))

    def _matvec(self, c):
        return self.transform.synthesize(np.ravel(c))[self._kept]

    def _rmatvec(self, v):
        full = np.zeros(self.shape[1])
        full[self._kept] = np.ravel(v)
        return self.transform.analyze(full)

    def columns(self, idx):
        return self.transform.basis_rows(self._kept, np.asarray(idx, dtype=np.int64))


def restriction_operator(kept_indices, transform) -> RestrictedTransformOperator:
    """Build the composite ``R @ D`` where ``D`` is ``transform`` synthesis.

    Raises :class:`DomainError` for duplicate or out-of-range indices.
    """
    return RestrictedTransformOperator(kept_indices, transform)


def as_operator(A) -> MeasurementOperator:
    if isinstance(A, MeasurementOperator):
        return A
    if isinstance(A, LinearOperator):
        return _WrappedOperator(A)
    return DenseOperator(A)


class _WrappedOperator(MeasurementOperator):
    def __init__(self, op):
        self.op = op
        super().__init__(op.shape)

    def _matvec(self, x):
        return self.op.matvec(x)

    def _rmatvec(self, v):
        return self.op.rmatvec(v)


def materialize(op, cap: int = MATERIALIZE_CAP) -> np.ndarray:
    """Dense matrix of ``op``; refuses when ``n*N`` exceeds ``cap``."""
    op = as_operator(op)
    n, N = op.shape
    if n * N > cap:
        raise ResourceError(f"materializing a {n}x{N} operator exceeds the cap of {cap} entries")
    if isinstance(op, DenseOperator):
        return np.array(op.matrix)
    return np.asarray(op.columns(np.arange(N)), dtype=float)
