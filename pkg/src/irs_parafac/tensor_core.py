"""Dense complex matrix and third-order tensor algebra.

Matrices and tensors are plain :class:`numpy.ndarray` objects. Every
vectorization and unfolding in this module is column-major (Fortran order),
which is the layout under which the CP unfolding identities

    [X]_(1) = A (C^T kr B)^T
    [X]_(2) = B (C^T kr A)^T
    [X]_(3) = C^T (B kr A)^T

hold exactly for ``X = cp_build(CPFactors(A, B, C))`` with no index
permutations (``kr`` is the Khatri-Rao product).
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ColumnMismatch,
    DimMismatch,
    IndexOutOfRange,
    InvalidMode,
    LengthMismatch,
    SvdFailure,
)

PINV_RTOL = 1e-12


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise DimMismatch(f"expected a matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def kron(a, b) -> np.ndarray:
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Kronecker product; column j is ``kron(a[:, j], b[:, j])``."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise ColumnMismatch(
            f"Khatri-Rao needs equal column counts, got {a.shape[1]} and {b.shape[1]}"
        )
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def vec(m) -> np.ndarray:
    """Stack the columns of ``m`` into one column vector of shape (rows*cols, 1)."""
    m = np.atleast_2d(m)
    return m.reshape(-1, 1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v)
    if v.size != rows * cols:
        raise LengthMismatch(f"cannot unvec {v.size} entries into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def diag(v) -> np.ndarray:
    v = np.asarray(v).ravel()
    return np.diag(v)


def diag_row(b, j: int) -> np.ndarray:
    """Diagonal matrix built from row ``j`` of ``b``."""
    b = np.atleast_2d(b)
    if not 0 <= j < b.shape[0]:
        raise IndexOutOfRange(f"row {j} out of range for {b.shape[0]} rows")
    return np.diag(b[j])


# Axis order placed in front of the column-major reshape for each mode.
_UNFOLD_AXES = {1: (0, 1, 2), 2: (1, 0, 2), 3: (2, 0, 1)}


def unfold(t, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding of a third-order tensor (modes are 1-based).

    Returns shapes ``(I1, I2*I3)``, ``(I2, I1*I3)`` and ``(I3, I1*I2)``.
    """
    if mode not in _UNFOLD_AXES:
        raise InvalidMode(f"mode must be 1, 2 or 3, got {mode!r}")
    t = np.asarray(t)
    if t.ndim != 3:
        raise DimMismatch(f"expected a third-order tensor, got shape {t.shape}")
    p = np.transpose(t, _UNFOLD_AXES[mode])
    return p.reshape(p.shape[0], -1, order="F")


def fold(m, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    if mode not in _UNFOLD_AXES:
        raise InvalidMode(f"mode must be 1, 2 or 3, got {mode!r}")
    dims = tuple(int(d) for d in dims)
    axes = _UNFOLD_AXES[mode]
    permuted = tuple(dims[a] for a in axes)
    m = np.asarray(m)
    if m.shape != (permuted[0], permuted[1] * permuted[2]):
        raise DimMismatch(f"unfolding of shape {m.shape} does not match dims {dims}")
    return np.transpose(m.reshape(permuted, order="F"), np.argsort(axes))


@dataclass(frozen=True)
class CPFactors:
    """Factor matrices of a third-order CP model.

    ``A`` is I1 x R, ``B`` is I2 x R and ``F`` is R x I3, so the third-mode
    factor enters the model transposed (entry ``(i, j, k)`` is
    ``sum_r A[i, r] B[j, r] F[r, k]``).
    """

    A: np.ndarray
    B: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "F"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name))))
        r = self.A.shape[1]
        if self.B.shape[1] != r or self.F.shape[0] != r:
            raise DimMismatch(
                f"inconsistent CP rank: A {self.A.shape}, B {self.B.shape}, F {self.F.shape}"
            )

    @property
    def rank(self) -> int:
        return self.A.shape[1]

    @property
    def dims(self) -> tuple:
        return (self.A.shape[0], self.B.shape[0], self.F.shape[1])


def cp_build(f: CPFactors) -> np.ndarray:
    return np.einsum("ir,jr,rk->ijk", f.A, f.B, f.F)


def pinv(m, tol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero.
    """
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        raise DimMismatch("pinv of an empty matrix")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    if s.size == 0 or s[0] == 0:
        return np.zeros(m.shape[::-1], dtype=np.result_type(m, float))
    keep = s > tol * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * s_inv) @ u.conj().T


def fro_norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x).ravel()))
