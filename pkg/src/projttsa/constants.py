"""Resolvent constants and the finite-time error bound.

Notation follows the bound being evaluated:

* ``c1 = U_X (U_X^T A_ff U_X)^{-1} U_X^T``
* ``c2 = U_Y (U_Y^T S_p U_Y)^{-1} U_Y^T`` with the slow projected operator
  ``S_p = A_ss - A_sf c1 A_fs``
* ``c3, c4`` the reduced resolvents of ``I - A_ff`` and ``I - A_ss``
* ``m_x, m_y`` smallest singular values of the reduced fast/slow operators
* ``mu_x, mu_y`` smallest singular values of the reduced ``I - A`` blocks
* ``kappa_xy, kappa_yx`` norms of the inverse coupled resolvents
"""
from dataclasses import asdict, dataclass

import numpy as np

from . import numkit
from .errors import ProjectedSingular, Singular
from .projection import approximation_errors


@dataclass(frozen=True, eq=False)
class ResolventConstants:
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    mu_x: float
    mu_y: float
    m_x: float
    m_y: float
    kappa_xy: float
    kappa_yx: float
    # same quantity with the slow operator A_ss + A_sf c1 A_fs, for reference
    m_y_plus: float = float("nan")

    def scalars(self):
        return {k: float(getattr(self, k)) for k in
                ("mu_x", "mu_y", "m_x", "m_y", "kappa_xy", "kappa_yx", "m_y_plus")}


@dataclass(frozen=True)
class TheoremConstants:
    L_x: float
    L_y: float
    B_xx: float
    B_xy: float
    B_yx: float
    B_yy: float
    C_eps: float
    C_psi: float

    def to_dict(self):
        return {k: float(v) for k, v in asdict(self).items()}


def _reduced_inverse(U, A, name):
    R = U.T @ A @ U
    if numkit.is_numerically_singular(R):
        raise ProjectedSingular(f"{name} is numerically singular", name)
    return U @ numkit.solve_linear(R, U.T), numkit.min_singular_value(R)


def slow_projected_operator(sys, c1):
    """A_ss - A_sf c1 A_fs (ambient-sized)."""
    return sys.A_ss - sys.A_sf @ c1 @ sys.A_fs


def resolvent_constants(sys, sub_x, sub_y):
    Ux, Uy = sub_x.U, sub_y.U
    In, Im = np.eye(sys.n), np.eye(sys.m)

    c1, m_x = _reduced_inverse(Ux, sys.A_ff, "U_X^T A_ff U_X")
    c2, m_y = _reduced_inverse(Uy, slow_projected_operator(sys, c1),
                               "U_Y^T (A_ss - A_sf c1 A_fs) U_Y")
    c3, mu_x = _reduced_inverse(Ux, In - sys.A_ff, "U_X^T (I - A_ff) U_X")
    c4, mu_y = _reduced_inverse(Uy, Im - sys.A_ss, "U_Y^T (I - A_ss) U_Y")
    m_y_plus = numkit.min_singular_value(Uy.T @ (sys.A_ss + sys.A_sf @ c1 @ sys.A_fs) @ Uy)

    kappas = []
    for K, name in ((In - c3 @ sys.A_fs @ c4 @ sys.A_sf, "I - c3 A_fs c4 A_sf"),
                    (Im - c4 @ sys.A_sf @ c3 @ sys.A_fs, "I - c4 A_sf c3 A_fs")):
        if numkit.is_numerically_singular(K):
            raise ProjectedSingular(f"{name} is numerically singular", name)
        try:
            kappas.append(numkit.operator_norm(numkit.solve_linear(K, np.eye(K.shape[0]))))
        except Singular as exc:
            raise ProjectedSingular(str(exc), name) from None

    return ResolventConstants(c1, c2, c3, c4, mu_x, mu_y, m_x, m_y, kappas[0], kappas[1], m_y_plus)


def theorem_constants(rc, sys, C_eps, C_psi):
    """Statistical constants L_x, L_y and approximation constants B_.. ."""
    if min(rc.m_x, rc.m_y, rc.mu_x, rc.mu_y) <= 0:
        raise ValueError("stability margins must be positive")
    if C_eps < 0 or C_psi < 0:
        raise ValueError("noise variance bounds must be nonnegative")
    n_ff = numkit.operator_norm(sys.A_ff)
    n_fs = numkit.operator_norm(sys.A_fs)
    n_sf = numkit.operator_norm(sys.A_sf)
    n_ss = numkit.operator_norm(sys.A_ss)
    mx2, my2 = rc.m_x ** 2, rc.m_y ** 2

    L_y = 2 * C_psi / my2 + 2 * n_sf ** 2 / (my2 * mx2) * C_eps
    L_x = (2 * n_fs ** 2 / (mx2 * my2) * C_psi
           + (4 * n_fs ** 2 * n_sf ** 2 / (my2 * mx2 ** 2) + 1 / mx2) * C_eps)

    fx = (1 + n_ff / rc.mu_x) ** 2
    fy = (1 + n_ss / rc.mu_y) ** 2
    B_xx = 2 * rc.kappa_xy ** 2 * fx
    B_xy = 2 * rc.kappa_xy ** 2 * (n_fs / rc.mu_x) ** 2 * fy
    B_yy = 2 * rc.kappa_yx ** 2 * fy
    B_yx = 2 * rc.kappa_yx ** 2 * (n_sf / rc.mu_y) ** 2 * fx
    return TheoremConstants(L_x, L_y, B_xx, B_xy, B_yx, B_yy, float(C_eps), float(C_psi))


def bound_floor(tc, eps_x_sq, eps_y_sq):
    return (2 * tc.B_xx * eps_x_sq + 2 * tc.B_xy * eps_y_sq,
            2 * tc.B_yx * eps_x_sq + 2 * tc.B_yy * eps_y_sq)


def bound_curve(tc, eps_x_sq, eps_y_sq, T_values):
    """[(T, bound_x(T), bound_y(T)), ...]; the O(1/T^2) remainder is not included."""
    fx, fy = bound_floor(tc, eps_x_sq, eps_y_sq)
    out = []
    for T in T_values:
        if T < 1:
            raise ValueError("T must be >= 1")
        out.append((int(T), fx + 2 * tc.L_x / T, fy + 2 * tc.L_y / T))
    return out


def approximation_bound_check(sys, sub_x, sub_y, rc, sol, csol):
    """Compare ||x_p - x*||^2, ||y_p - y*||^2 with their B-constant bounds.

    Returns a dict of lhs/rhs values and holds flags; nothing is asserted
    here.
    """
    tc = theorem_constants(rc, sys, 0.0, 0.0)
    ex, ey = approximation_errors(sol, sub_x, sub_y)
    lhs_x = float(np.sum((csol.x_p - sol.x_star) ** 2))
    lhs_y = float(np.sum((csol.y_p - sol.y_star) ** 2))
    rhs_x = tc.B_xx * ex + tc.B_xy * ey
    rhs_y = tc.B_yx * ex + tc.B_yy * ey
    return {
        "lhs_x": lhs_x, "rhs_x": rhs_x, "lhs_y": lhs_y, "rhs_y": rhs_y,
        # absolute slack covers rounding when a subspace contains the solution
        "holds_x": lhs_x <= rhs_x + 1e-14,
        "holds_y": lhs_y <= rhs_y + 1e-14,
    }
