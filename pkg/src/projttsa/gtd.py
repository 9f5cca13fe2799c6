"""Tabular GTD policy evaluation cast as a two-time-scale linear system.

The fast variable u tracks the TD error, the slow variable V is the value
estimate:

    g(u, V) = (r + gamma P V - V) - u
    h(u, V) = (I - gamma P)^T u

so the root is (0, V_pi). Restricting both variables to span(Phi) gives the
linear-function-approximation version.
"""
from dataclasses import dataclass

import numpy as np

from . import numkit
from .system import TwoTimeScaleSystem

N_STATES = 9
GAMMA = 0.9
VALUE_COEFFICIENTS = np.array([3.0, 2.4, 1.8, 1.4, 1.1, 0.5, 1e-3, 5e-4, 1e-4])
FEATURE_LABELS = ("well", "medium", "poor")


@dataclass(frozen=True, eq=False)
class Mdp:
    P: np.ndarray
    reward: np.ndarray
    gamma: float

    def __post_init__(self):
        P = numkit.as_matrix(self.P, "P")
        if P.shape[0] != P.shape[1] or np.any(P < 0):
            raise ValueError("P must be a square nonnegative matrix")
        if np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
            raise ValueError("rows of P must sum to 1")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")

    @property
    def S(self):
        return self.P.shape[0]


@dataclass(frozen=True, eq=False)
class ValueSpec:
    W: np.ndarray
    c: np.ndarray

    @property
    def V_pi(self):
        return self.W @ self.c


@dataclass(frozen=True, eq=False)
class FeatureFamily:
    label: str
    Phi: np.ndarray


def build_mdp(seed=0, gamma=GAMMA):
    """Random 9-state chain whose value function is W c for a random
    orthonormal W; the reward is reverse-engineered from the Bellman
    equation."""
    rng = np.random.default_rng(seed)
    S = N_STATES
    W = numkit.qr_orthonormalize(rng.standard_normal((S, S)))
    raw = rng.random((S, S))
    raw /= raw.sum(axis=1, keepdims=True)
    P = 0.9 * raw + 0.1 / S
    P /= P.sum(axis=1, keepdims=True)
    vs = ValueSpec(W, VALUE_COEFFICIENTS.copy())
    reward = (np.eye(S) - gamma * P) @ vs.V_pi
    return Mdp(P, reward, gamma), vs


def bellman_residual(mdp, V):
    return mdp.reward + mdp.gamma * mdp.P @ V - V


def gtd_system(mdp):
    S = mdp.S
    M = np.eye(S) - mdp.gamma * mdp.P
    return TwoTimeScaleSystem(
        A_ff=-np.eye(S), A_fs=-M, A_sf=M.T, A_ss=np.zeros((S, S)),
        b1=-mdp.reward, b2=np.zeros(S),
    )


def feature_families(vs, seed=1):
    """Well-aligned [w1, w2, w3], a random orthonormal 9x3 basis, and the
    poorly aligned [w7, w8, w9]."""
    rng = np.random.default_rng(seed)
    medium = numkit.qr_orthonormalize(rng.standard_normal((vs.W.shape[0], 3)))
    return (
        FeatureFamily("well", vs.W[:, 0:3].copy()),
        FeatureFamily("medium", medium),
        FeatureFamily("poor", vs.W[:, 6:9].copy()),
    )


@dataclass(frozen=True, eq=False)
class GtdErrors:
    t: np.ndarray
    approx: float
    stat: np.ndarray
    total: np.ndarray


def gtd_errors(trace, V_pi, value_solution):
    """Value-space error curves from a trace run on the projected GTD system.

    ``value_solution`` is the slow constrained solution Phi theta*; the
    trace's slow records already measure ||Phi theta_bar_t - Phi theta*||^2
    and ||Phi theta_bar_t - V_pi||^2.
    """
    approx = float(np.sum((np.asarray(V_pi) - np.asarray(value_solution)) ** 2))
    return GtdErrors(trace.t.copy(), approx, trace.stat_y.copy(), trace.total_y.copy())
