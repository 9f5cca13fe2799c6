"""Random stable coupled systems with a planted solution.

A_ff and A_ss are diagonal in random orthonormal bases with strictly
negative spectra; the couplings are scaled Gaussian matrices. The planted
solution has coordinates exp(-decay_rate * k), k = 1, 2, ..., in those
bases, and the feasible subspaces are spanned by the first r basis
vectors.
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import numkit
from .errors import AssumptionViolated
from .projection import Subspace
from .system import SolutionPair, TwoTimeScaleSystem, check_assumptions


@dataclass(frozen=True)
class SyntheticConfig:
    n: int = 20
    m: int = 16
    r: int = 6
    coupling_scale: float = 0.08
    spectrum_fast: Optional[Sequence[float]] = None
    spectrum_slow: Optional[Sequence[float]] = None
    decay_rate: float = 0.35
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("dimensions must be positive")
        if not 1 <= self.r <= min(self.n, self.m):
            raise ValueError(f"rank r={self.r} must lie in [1, min(n, m)]")
        if self.coupling_scale < 0:
            raise ValueError("coupling_scale must be nonnegative")
        for name, dim in (("spectrum_fast", self.n), ("spectrum_slow", self.m)):
            spec = getattr(self, name)
            if spec is not None:
                spec = tuple(float(v) for v in spec)
                if len(spec) != dim or max(spec) >= 0:
                    raise ValueError(f"{name} must hold {dim} strictly negative values")
                object.__setattr__(self, name, spec)

    def fast_spectrum(self):
        if self.spectrum_fast is not None:
            return np.array(self.spectrum_fast)
        return -np.linspace(0.5, 2.0, self.n)

    def slow_spectrum(self):
        if self.spectrum_slow is not None:
            return np.array(self.spectrum_slow)
        return -np.linspace(0.5, 2.0, self.m)


class SyntheticInstance(NamedTuple):
    system: TwoTimeScaleSystem
    solution: SolutionPair
    sub_x: Subspace
    sub_y: Subspace


def planted_coefficients(dim, decay_rate):
    return np.exp(-decay_rate * np.arange(1, dim + 1))


def generate(cfg, alpha=0.2, beta=0.01, check=True):
    """Build the instance; raises AssumptionViolated if it fails the
    assumption checker at step sizes (alpha, beta) and ``check`` is set."""
    rng = np.random.default_rng(cfg.seed)
    Ux = numkit.qr_orthonormalize(rng.standard_normal((cfg.n, cfg.n)))
    Uy = numkit.qr_orthonormalize(rng.standard_normal((cfg.m, cfg.m)))
    A_fs = cfg.coupling_scale * rng.standard_normal((cfg.n, cfg.m))
    A_sf = cfg.coupling_scale * rng.standard_normal((cfg.m, cfg.n))
    A_ff = (Ux * cfg.fast_spectrum()) @ Ux.T
    A_ss = (Uy * cfg.slow_spectrum()) @ Uy.T
    # exact symmetry: the spectra must be real in floating point too
    A_ff = 0.5 * (A_ff + A_ff.T)
    A_ss = 0.5 * (A_ss + A_ss.T)

    x_star = Ux @ planted_coefficients(cfg.n, cfg.decay_rate)
    y_star = Uy @ planted_coefficients(cfg.m, cfg.decay_rate)
    b1 = A_ff @ x_star + A_fs @ y_star
    b2 = A_sf @ x_star + A_ss @ y_star

    sys = TwoTimeScaleSystem(A_ff, A_fs, A_sf, A_ss, b1, b2)
    inst = SyntheticInstance(sys, SolutionPair(x_star, y_star),
                             Subspace(Ux[:, :cfg.r]), Subspace(Uy[:, :cfg.r]))
    if check:
        report = check_assumptions(sys, inst.sub_x, inst.sub_y, alpha, beta)
        if not report.all_ok:
            raise AssumptionViolated(
                f"generated instance fails: {', '.join(report.failures())}", report
            )
    return inst
