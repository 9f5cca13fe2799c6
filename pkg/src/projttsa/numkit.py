"""Small dense linear-algebra primitives.

Everything works on float64 numpy arrays. Problem sizes here are a few
dozen at most, so the routines favour robustness (SVD-based checks) over
speed.
"""
import numpy as np

from .errors import DimensionMismatch, NonConvergence, RankDeficient, Singular

# relative sigma_min cutoff used wherever a matrix must be invertible
SINGULAR_RTOL = 1e-10
# absolute condition-number ceiling for solve_linear
COND_MAX = 1e12
# Hurwitz iff spectral abscissa < -HURWITZ_MARGIN
HURWITZ_MARGIN = 1e-9


def as_matrix(M, name="matrix"):
    A = np.array(M, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def as_vector(v, name="vector"):
    x = np.array(v, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def singular_values(M):
    A = np.asarray(M, dtype=np.float64)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def min_singular_value(M):
    s = singular_values(M)
    if s.size == 0:
        return 0.0
    return float(s[-1])


def operator_norm(M):
    """Spectral norm (largest singular value); 0 for empty matrices."""
    s = singular_values(M)
    return float(s[0]) if s.size else 0.0


def is_numerically_singular(M, rtol=SINGULAR_RTOL):
    s = singular_values(M)
    if s.size == 0:
        return False
    return bool(s[-1] <= rtol * s[0]) or s[0] == 0.0


def qr_orthonormalize(M):
    """Orthonormal basis for range(M), with columns sign-fixed so R has a
    positive diagonal (makes the output unique for full-rank input)."""
    A = as_matrix(M)
    rows, cols = A.shape
    if cols > rows:
        raise RankDeficient(f"{cols} columns cannot be independent in R^{rows}")
    s = singular_values(A)
    if s.size == 0 or s[0] == 0.0 or s[-1] < SINGULAR_RTOL * s[0]:
        raise RankDeficient("matrix does not have full column rank")
    Q, R = np.linalg.qr(A, mode="reduced")
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def solve_linear(A, b):
    """Solve ``A x = b`` for square ``A``; ``b`` may be a vector or a matrix
    of right-hand sides."""
    A = as_matrix(A, "A")
    b = np.asarray(b, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, A has {A.shape[0]}")
    if A.shape[0] == 0:
        return np.zeros_like(b)
    s = singular_values(A)
    if s[-1] == 0.0 or s[0] / s[-1] > COND_MAX:
        raise Singular(f"matrix is numerically singular (sigma_min={s[-1]:.3e})")
    return np.linalg.solve(A, b)


def spectral_abscissa(M):
    """max Re(lambda) over the eigenvalues of a square matrix."""
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {A.shape}")
    if A.shape[0] == 0:
        return -np.inf
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(ev.real))


def is_hurwitz(M):
    return spectral_abscissa(M) < -HURWITZ_MARGIN
