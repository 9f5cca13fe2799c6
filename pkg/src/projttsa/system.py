"""Coupled linear root-finding problem

    g(x, y) = A_ff x + A_fs y - b1 = 0
    h(x, y) = A_sf x + A_ss y - b2 = 0

together with its unconstrained solution and an assumption checker.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .errors import DimensionMismatch, Singular

SOLUTION_RTOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TwoTimeScaleSystem:
    A_ff: np.ndarray
    A_fs: np.ndarray
    A_sf: np.ndarray
    A_ss: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("A_ff", "A_fs", "A_sf", "A_ss"):
            object.__setattr__(self, name, _frozen(numkit.as_matrix(getattr(self, name), name)))
        for name in ("b1", "b2"):
            object.__setattr__(self, name, _frozen(numkit.as_vector(getattr(self, name), name)))
        n, m = self.b1.shape[0], self.b2.shape[0]
        expected = {"A_ff": (n, n), "A_fs": (n, m), "A_sf": (m, n), "A_ss": (m, m)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionMismatch(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )

    @property
    def n(self):
        return self.b1.shape[0]

    @property
    def m(self):
        return self.b2.shape[0]

    @property
    def scale(self):
        """Residual scale 1 + ||b1|| + ||b2|| used by every tolerance."""
        return 1.0 + float(np.linalg.norm(self.b1)) + float(np.linalg.norm(self.b2))

    def block_matrix(self):
        return np.block([[self.A_ff, self.A_fs], [self.A_sf, self.A_ss]])

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("A_ff", "A_fs", "A_sf", "A_ss", "b1", "b2")}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**{k: d[k] for k in ("A_ff", "A_fs", "A_sf", "A_ss", "b1", "b2")})
        except KeyError as exc:
            raise DimensionMismatch(f"system file missing key {exc.args[0]!r}") from None


def save_system(sys, path):
    with open(path, "w") as f:
        json.dump(sys.to_dict(), f)


def load_system(path):
    with open(path) as f:
        return TwoTimeScaleSystem.from_dict(json.load(f))


@dataclass(frozen=True, eq=False)
class SolutionPair:
    x_star: np.ndarray
    y_star: np.ndarray


def drift(sys, x, y):
    """(g(x, y), h(x, y)). Accepts single vectors or row-stacked batches."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] != sys.n or y.shape[-1] != sys.m:
        raise DimensionMismatch(
            f"drift expects x in R^{sys.n}, y in R^{sys.m}; got {x.shape}, {y.shape}"
        )
    g = x @ sys.A_ff.T + y @ sys.A_fs.T - sys.b1
    h = x @ sys.A_sf.T + y @ sys.A_ss.T - sys.b2
    return g, h


def unconstrained_solution(sys):
    z = numkit.solve_linear(sys.block_matrix(), np.concatenate([sys.b1, sys.b2]))
    sol = SolutionPair(_frozen(z[: sys.n]), _frozen(z[sys.n:]))
    g, h = drift(sys, sol.x_star, sol.y_star)
    tol = SOLUTION_RTOL * sys.scale
    if np.linalg.norm(g) > tol or np.linalg.norm(h) > tol:
        raise Singular("block system too ill-conditioned for an accurate solution")
    return sol


def schur_complement(sys):
    """A_ss - A_sf A_ff^{-1} A_fs."""
    return sys.A_ss - sys.A_sf @ numkit.solve_linear(sys.A_ff, sys.A_fs)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    value: float

    def to_dict(self):
        return {"passed": bool(self.passed), "value": float(self.value)}


@dataclass(frozen=True)
class AssumptionReport:
    a1_Aff_hurwitz: Verdict
    a1_schur_hurwitz: Verdict
    a2_fast_hurwitz: Verdict
    a2_slow_hurwitz: Verdict
    a2_slow_hurwitz_plus: Verdict
    a3_mu_y_positive: Verdict
    a3_resolvents_invertible: tuple
    step_sizes_ok: Verdict
    step_details: dict = field(default_factory=dict)

    @property
    def structural_ok(self):
        """Assumptions 1-3 (the "+"-sign variant is informational only)."""
        return all(v.passed for v in (
            self.a1_Aff_hurwitz, self.a1_schur_hurwitz, self.a2_fast_hurwitz,
            self.a2_slow_hurwitz, self.a3_mu_y_positive, *self.a3_resolvents_invertible,
        ))

    @property
    def all_ok(self):
        return self.structural_ok and self.step_sizes_ok.passed

    def failures(self):
        out = []
        for name in ("a1_Aff_hurwitz", "a1_schur_hurwitz", "a2_fast_hurwitz",
                     "a2_slow_hurwitz", "a3_mu_y_positive", "step_sizes_ok"):
            if not getattr(self, name).passed:
                out.append(name)
        for label, v in zip(("xy", "yx"), self.a3_resolvents_invertible):
            if not v.passed:
                out.append(f"a3_resolvent_{label}_invertible")
        return out

    def to_dict(self):
        d = {}
        for name in ("a1_Aff_hurwitz", "a1_schur_hurwitz", "a2_fast_hurwitz",
                     "a2_slow_hurwitz", "a2_slow_hurwitz_plus", "a3_mu_y_positive",
                     "step_sizes_ok"):
            d[name] = getattr(self, name).to_dict()
        xy, yx = self.a3_resolvents_invertible
        d["a3_resolvents_invertible"] = {"xy": xy.to_dict(), "yx": yx.to_dict()}
        d["step_details"] = {k: float(v) for k, v in self.step_details.items()}
        d["structural_ok"] = self.structural_ok
        d["all_ok"] = self.all_ok
        return d


def _hurwitz_verdict(M):
    try:
        a = numkit.spectral_abscissa(M)
    except Exception:
        return Verdict(False, float("nan"))
    return Verdict(a < -numkit.HURWITZ_MARGIN, a)


def _sigma_ratio(M):
    s = numkit.singular_values(M)
    if s.size == 0:
        return 1.0
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def _reduced_resolvent(U, A):
    """U (U^T (I - A) U)^{-1} U^T, or None when the reduced matrix is singular."""
    R = U.T @ (np.eye(A.shape[0]) - A) @ U
    if numkit.is_numerically_singular(R):
        return None
    return U @ numkit.solve_linear(R, U.T)


def check_assumptions(sys, sub_x, sub_y, alpha, beta):
    """Evaluate Assumptions 1-3 and the step-size conditions.

    Failures are reported as verdicts, never raised. The slow projected
    operator uses U_Y^T (A_ss - A_sf c1 A_fs) U_Y; the variant with a plus
    sign is reported alongside in ``a2_slow_hurwitz_plus``.
    """
    Ux, Uy = sub_x.U, sub_y.U
    nan = float("nan")

    a1_ff = _hurwitz_verdict(sys.A_ff)
    try:
        a1_schur = _hurwitz_verdict(schur_complement(sys))
    except Singular:
        a1_schur = Verdict(False, nan)

    Rx = Ux.T @ sys.A_ff @ Ux
    a2_fast = _hurwitz_verdict(Rx)
    if numkit.is_numerically_singular(Rx):
        a2_slow = a2_plus = Verdict(False, nan)
    else:
        c1 = Ux @ numkit.solve_linear(Rx, Ux.T)
        coupling = sys.A_sf @ c1 @ sys.A_fs
        a2_slow = _hurwitz_verdict(Uy.T @ (sys.A_ss - coupling) @ Uy)
        a2_plus = _hurwitz_verdict(Uy.T @ (sys.A_ss + coupling) @ Uy)

    Ry = Uy.T @ (np.eye(sys.m) - sys.A_ss) @ Uy
    a3_mu = Verdict(not numkit.is_numerically_singular(Ry), numkit.min_singular_value(Ry))

    c3 = _reduced_resolvent(Ux, sys.A_ff)
    c4 = _reduced_resolvent(Uy, sys.A_ss)
    if c3 is None or c4 is None:
        res = (Verdict(False, nan), Verdict(False, nan))
    else:
        Kxy = np.eye(sys.n) - c3 @ sys.A_fs @ c4 @ sys.A_sf
        Kyx = np.eye(sys.m) - c4 @ sys.A_sf @ c3 @ sys.A_fs
        res = tuple(
            Verdict(not numkit.is_numerically_singular(K), _sigma_ratio(K)) for K in (Kxy, Kyx)
        )

    norm_ff = numkit.operator_norm(sys.A_ff)
    norm_ss = numkit.operator_norm(sys.A_ss)
    alpha_ok = alpha > 0 and alpha * norm_ff < 1
    beta_ok = beta > 0 and (norm_ss == 0 or beta * norm_ss < 1)
    ratio = beta / alpha if alpha > 0 else float("inf")
    steps_ok = Verdict(bool(alpha_ok and beta_ok and ratio <= 0.1), ratio)
    details = {
        "alpha_times_norm_Aff": alpha * norm_ff,
        "beta_times_norm_Ass": beta * norm_ss,
        "beta_over_alpha": ratio,
    }
    return AssumptionReport(a1_ff, a1_schur, a2_fast, a2_slow, a2_plus, a3_mu, res,
                            steps_ok, details)
