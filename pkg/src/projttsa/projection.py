"""Linear subspaces, orthogonal projection and projected linear solves."""
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import numkit
from .errors import DimensionMismatch, ProjectedSingular
from .system import SOLUTION_RTOL, drift

ORTHONORMAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of R^ambient_dim given by an orthonormal basis ``U``.

    Use :meth:`from_spanning` for arbitrary spanning sets (e.g. feature
    matrices); the constructor insists on orthonormal columns.
    """

    U: np.ndarray

    def __post_init__(self):
        U = numkit.as_matrix(self.U, "U")
        if U.shape[1] > U.shape[0]:
            raise DimensionMismatch(f"basis has more columns than rows: {U.shape}")
        err = np.max(np.abs(U.T @ U - np.eye(U.shape[1]))) if U.size else 0.0
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"basis columns are not orthonormal (max |U^T U - I| = {err:.2e})")
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    @classmethod
    def from_spanning(cls, M):
        return cls(numkit.qr_orthonormalize(M))

    @classmethod
    def full(cls, dim):
        return cls(np.eye(dim))

    @property
    def ambient_dim(self):
        return self.U.shape[0]

    @property
    def rank(self):
        return self.U.shape[1]

    @cached_property
    def projector(self):
        P = self.U @ self.U.T
        P = 0.5 * (P + P.T)
        P.setflags(write=False)
        return P

    def to_dict(self):
        return {"U": self.U.tolist()}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["U"])
        except ValueError:
            return cls.from_spanning(d["U"])


def save_subspace(sub, path):
    with open(path, "w") as f:
        json.dump(sub.to_dict(), f)


def load_subspace(path):
    with open(path) as f:
        return Subspace.from_dict(json.load(f))


def project(sub, v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != sub.ambient_dim:
        raise DimensionMismatch(f"vector has dim {v.shape[-1]}, subspace lives in R^{sub.ambient_dim}")
    # coordinates first, then lift: keeps the result exactly in range(U)
    return (v @ sub.U) @ sub.U.T


def _reduced_solve(R, rhs, name):
    if numkit.is_numerically_singular(R):
        raise ProjectedSingular(f"reduced matrix {name} is numerically singular", name)
    return numkit.solve_linear(R, rhs)


def projected_linear_solve(sub, A, b, name="U^T A U"):
    """Unique z in the subspace with Pi (A z) = Pi b, i.e. U (U^T A U)^{-1} U^T b."""
    A = numkit.as_matrix(A, "A")
    b = np.asarray(b, dtype=np.float64)
    U = sub.U
    if A.shape != (sub.ambient_dim, sub.ambient_dim) or b.shape[0] != sub.ambient_dim:
        raise DimensionMismatch("A, b and subspace dimensions disagree")
    return U @ _reduced_solve(U.T @ A @ U, U.T @ b, name)


def x_p_of_y(sys, sub_x, y):
    """Fast constrained solution for a frozen slow variable ``y``."""
    y = numkit.as_vector(y, "y")
    return projected_linear_solve(sub_x, sys.A_ff, sys.b1 - sys.A_fs @ y, "U_X^T A_ff U_X")


@dataclass(frozen=True, eq=False)
class ConstrainedSolution:
    x_p: np.ndarray
    y_p: np.ndarray
    x_reduced: np.ndarray
    y_reduced: np.ndarray
    residual_fast: float
    residual_slow: float


def constrained_solution(sys, sub_x, sub_y):
    """Solve both projected equations at once through the reduced
    (d + r)-dimensional block system."""
    if sub_x.ambient_dim != sys.n or sub_y.ambient_dim != sys.m:
        raise DimensionMismatch("subspace ambient dimensions do not match the system")
    Ux, Uy = sub_x.U, sub_y.U
    K = np.block([
        [Ux.T @ sys.A_ff @ Ux, Ux.T @ sys.A_fs @ Uy],
        [Uy.T @ sys.A_sf @ Ux, Uy.T @ sys.A_ss @ Uy],
    ])
    rhs = np.concatenate([Ux.T @ sys.b1, Uy.T @ sys.b2])
    z = _reduced_solve(K, rhs, "reduced block matrix")
    d = Ux.shape[1]
    xr, yr = z[:d], z[d:]
    x_p, y_p = Ux @ xr, Uy @ yr
    g, h = drift(sys, x_p, y_p)
    res_f = float(np.linalg.norm(project(sub_x, g)))
    res_s = float(np.linalg.norm(project(sub_y, h)))
    tol = SOLUTION_RTOL * sys.scale
    if res_f > tol or res_s > tol:
        raise ProjectedSingular(
            f"reduced block solve inaccurate (residuals {res_f:.2e}, {res_s:.2e})",
            "reduced block matrix",
        )
    return ConstrainedSolution(x_p, y_p, xr, yr, res_f, res_s)


def approximation_errors(sol, sub_x, sub_y):
    """Squared distances of (x*, y*) to the subspaces."""
    ex = sol.x_star - project(sub_x, sol.x_star)
    ey = sol.y_star - project(sub_y, sol.y_star)
    return float(ex @ ex), float(ey @ ey)
