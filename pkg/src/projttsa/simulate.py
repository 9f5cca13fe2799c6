"""Projected two-time-scale iteration with Polyak-Ruppert averaging.

    x_{t+1} = Pi_X [x_t + alpha (g(x_t, y_t) + eps_t)]
    y_{t+1} = Pi_Y [y_t + beta  (h(x_t, y_t) + psi_t)]

``step`` is the literal ambient-space update. ``run_trial`` and
``run_experiment`` use an equivalent batched engine that works in the
reduced coordinates of the two subspaces and advances all trials at once;
each trial still owns its random stream and consumes it in exactly the
order ``step`` would (eps_t, then psi_t, for t = 0, 1, ...).
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, NonFinite
from .projection import constrained_solution, project, x_p_of_y
from .system import drift, unconstrained_solution

NOISE_KINDS = ("none", "gaussian_iid")
DRAW_MODES = ("ambient", "projected")
_CHUNK = 2048
_IN_SUBSPACE_TOL = 1e-10


@dataclass(frozen=True)
class StepSizes:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("step sizes must be positive")
        if self.beta > self.alpha:
            raise ValueError(f"slow step beta={self.beta} exceeds fast step alpha={self.alpha}")


@dataclass(frozen=True)
class NoiseModel:
    """Martingale-difference noise. ``gaussian_iid`` draws every coordinate
    of eps_t and psi_t independently from N(0, sigma^2)."""

    kind: str = "gaussian_iid"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def C_eps(self, n):
        return 0.0 if self.kind == "none" else n * self.sigma ** 2

    def C_psi(self, m):
        return 0.0 if self.kind == "none" else m * self.sigma ** 2

    def draw(self, rng, n, m):
        if self.kind == "none":
            return np.zeros(n), np.zeros(m)
        eps = self.sigma * rng.standard_normal(n)
        psi = self.sigma * rng.standard_normal(m)
        return eps, psi

    def draw_block(self, rng, steps, n, m):
        """Noise for ``steps`` consecutive iterations as a (steps, n+m) array;
        row t is [eps_t, psi_t], the same stream ``draw`` would produce."""
        if self.kind == "none":
            return np.zeros((steps, n + m))
        return self.sigma * rng.standard_normal((steps, n + m))


def trial_rng(master_seed, index):
    """Private random stream of trial ``index``."""
    return np.random.default_rng([int(master_seed), int(index)])


@dataclass(frozen=True, eq=False)
class IterateState:
    t: int
    x: np.ndarray
    y: np.ndarray
    x_sum: np.ndarray
    y_sum: np.ndarray
    eps_sum: np.ndarray
    psi_sum: np.ndarray
    x0: np.ndarray
    y0: np.ndarray

    @classmethod
    def initial(cls, x0, y0):
        x0 = np.array(x0, dtype=np.float64)
        y0 = np.array(y0, dtype=np.float64)
        return cls(0, x0.copy(), y0.copy(), np.zeros_like(x0), np.zeros_like(y0),
                   np.zeros_like(x0), np.zeros_like(y0), x0, y0)

    @property
    def xbar(self):
        """(1/t) sum_{s<t} x_s."""
        return self.x_sum / self.t

    @property
    def ybar(self):
        return self.y_sum / self.t


def step(sys, sub_x, sub_y, steps, noise, state, rng):
    eps, psi = noise.draw(rng, sys.n, sys.m)
    g, h = drift(sys, state.x, state.y)
    x_new = project(sub_x, state.x + steps.alpha * (g + eps))
    y_new = project(sub_y, state.y + steps.beta * (h + psi))
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(y_new))):
        raise NonFinite(f"iterate became non-finite at t={state.t + 1}", state.t + 1)
    return replace(
        state,
        t=state.t + 1, x=x_new, y=y_new,
        x_sum=state.x_sum + state.x, y_sum=state.y_sum + state.y,
        eps_sum=state.eps_sum + eps, psi_sum=state.psi_sum + psi,
    )


def checkpoint_grid(T, points=50, extra=()):
    """Geometric grid on [1, T] (always containing T) merged with ``extra``."""
    T = int(T)
    if T < 1:
        raise ValueError("T must be >= 1")
    g = np.unique(np.round(np.geomspace(1, T, points)).astype(np.int64))
    g = np.union1d(g, np.array([int(e) for e in extra if 1 <= int(e) <= T], dtype=np.int64))
    return np.union1d(g, np.array([T], dtype=np.int64))


@dataclass(eq=False)
class TrialTrace:
    """Error records at checkpoints (mean over ``trials`` when aggregated)."""

    t: np.ndarray
    stat_x: np.ndarray
    stat_y: np.ndarray
    total_x: np.ndarray
    total_y: np.ndarray
    last_x: np.ndarray
    last_y: np.ndarray
    trials: int = 1
    final_states: tuple = field(default=(), repr=False)

    FIELDS = ("stat_x", "stat_y", "total_x", "total_y", "last_x", "last_y")

    def at(self, t):
        i = int(np.searchsorted(self.t, t))
        if i >= len(self.t) or self.t[i] != t:
            raise KeyError(f"t={t} is not a checkpoint")
        return {k: float(getattr(self, k)[i]) for k in self.FIELDS}

    @property
    def final_state(self):
        return self.final_states[0] if self.final_states else None


def _check_start(sub, v, name):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (sub.ambient_dim,):
        raise DimensionMismatch(f"{name} must have shape ({sub.ambient_dim},)")
    if np.linalg.norm(v - project(sub, v)) > _IN_SUBSPACE_TOL * (1 + np.linalg.norm(v)):
        raise ValueError(f"{name} is not in its subspace")
    return v


def _reduced_dynamics(sys, sub_x, sub_y, steps):
    """Affine map of the iteration in subspace coordinates z = [U_X^T x, U_Y^T y]:
    z_{t+1} = M z_t + c + diag(rates) [U_X^T eps_t, U_Y^T psi_t]."""
    Ux, Uy = sub_x.U, sub_y.U
    d, r = Ux.shape[1], Uy.shape[1]
    K = np.block([[Ux.T @ sys.A_ff @ Ux, Ux.T @ sys.A_fs @ Uy],
                  [Uy.T @ sys.A_sf @ Ux, Uy.T @ sys.A_ss @ Uy]])
    rates = np.concatenate([np.full(d, steps.alpha), np.full(r, steps.beta)])
    M = np.eye(d + r) + rates[:, None] * K
    c = -rates * np.concatenate([Ux.T @ sys.b1, Uy.T @ sys.b2])
    return M, c, rates


def _run_batch(sys, sub_x, sub_y, steps, noise, T, x0, y0, grid, rngs, draws="ambient"):
    """Advance len(rngs) independent trajectories; returns per-trial records
    of shape (trials, checkpoints) and the final IterateStates.

    ``draws="projected"`` samples U^T eps and U^T psi directly (d + r normals
    per step instead of n + m). For isotropic Gaussian noise this leaves the
    law of every iterate unchanged, since only the projected noise enters the
    recursion, but the random stream no longer matches ``step``. The
    recorded noise sums are then the projected ones.
    """
    Ux, Uy = sub_x.U, sub_y.U
    d, r = Ux.shape[1], Uy.shape[1]
    n, m = sys.n, sys.m
    N = len(rngs)

    sol = unconstrained_solution(sys)
    csol = constrained_solution(sys, sub_x, sub_y)
    M, c, rates = _reduced_dynamics(sys, sub_x, sub_y, steps)
    Mt = M.T
    G = np.zeros((d + r, n + m))
    G[:d, :n] = steps.alpha * Ux.T
    G[d:, n:] = steps.beta * Uy.T
    Gt = G.T

    z = np.tile(np.concatenate([Ux.T @ x0, Uy.T @ y0]), (N, 1))
    zsum = np.zeros((N, d + r))
    xi_sum = np.zeros((N, d + r) if draws == "projected" else (N, n + m))

    grid = np.asarray(grid, dtype=np.int64)
    rec = {k: np.empty((N, len(grid))) for k in TrialTrace.FIELDS}
    t = 0
    for ci, target in enumerate(grid):
        while t < target:
            K_steps = int(min(_CHUNK, target - t))
            if noise.kind == "none":
                drive = np.broadcast_to(c, (N, K_steps, d + r))
            elif draws == "projected":
                xi = np.stack([noise.draw_block(g, K_steps, d, r) for g in rngs])
                xi_sum += xi.sum(axis=1)
                drive = xi * rates + c
            else:
                xi = np.stack([noise.draw_block(g, K_steps, n, m) for g in rngs])
                xi_sum += xi.sum(axis=1)
                drive = xi @ Gt + c
            z_start = z.copy()
            for k in range(K_steps):
                zsum += z
                z = z @ Mt + drive[:, k]
            if not np.all(np.isfinite(z)):
                _locate_blowup(z_start, Mt, drive, t)
            t += K_steps
        xbar = (zsum[:, :d] / t) @ Ux.T
        ybar = (zsum[:, d:] / t) @ Uy.T
        x_t = z[:, :d] @ Ux.T
        y_t = z[:, d:] @ Uy.T
        rec["stat_x"][:, ci] = np.sum((xbar - csol.x_p) ** 2, axis=1)
        rec["stat_y"][:, ci] = np.sum((ybar - csol.y_p) ** 2, axis=1)
        rec["total_x"][:, ci] = np.sum((xbar - sol.x_star) ** 2, axis=1)
        rec["total_y"][:, ci] = np.sum((ybar - sol.y_star) ** 2, axis=1)
        rec["last_x"][:, ci] = np.sum((x_t - csol.x_p) ** 2, axis=1)
        rec["last_y"][:, ci] = np.sum((y_t - csol.y_p) ** 2, axis=1)

    if draws == "projected":
        eps_sums, psi_sums = xi_sum[:, :d] @ Ux.T, xi_sum[:, d:] @ Uy.T
    else:
        eps_sums, psi_sums = xi_sum[:, :n], xi_sum[:, n:]
    finals = tuple(
        IterateState(
            int(t), z[i, :d] @ Ux.T, z[i, d:] @ Uy.T,
            zsum[i, :d] @ Ux.T, zsum[i, d:] @ Uy.T,
            eps_sums[i].copy(), psi_sums[i].copy(), x0, y0,
        )
        for i in range(N)
    )
    return rec, finals


def _locate_blowup(z, Mt, drive, t0):
    for k in range(drive.shape[1]):
        z = z @ Mt + drive[:, k]
        bad = ~np.all(np.isfinite(z), axis=1)
        if bad.any():
            trial = int(np.flatnonzero(bad)[0])
            raise NonFinite(f"iterate became non-finite at t={t0 + k + 1} (trial {trial})",
                            t0 + k + 1, trial)
    raise NonFinite(f"iterate became non-finite after t={t0}", t0)


def _prepare(sys, sub_x, sub_y, T, x0, y0, checkpoint_grid_, draws):
    if T < 1:
        raise ValueError("T must be >= 1")
    if draws not in DRAW_MODES:
        raise ValueError(f"draws must be one of {DRAW_MODES}")
    x0 = np.zeros(sys.n) if x0 is None else _check_start(sub_x, x0, "x0")
    y0 = np.zeros(sys.m) if y0 is None else _check_start(sub_y, y0, "y0")
    grid = checkpoint_grid(T) if checkpoint_grid_ is None else np.asarray(checkpoint_grid_, dtype=np.int64)
    if len(grid) == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 1 or grid[-1] > T:
        raise ValueError("checkpoint grid must be strictly increasing within [1, T]")
    return x0, y0, grid


def run_trial(sys, sub_x, sub_y, steps, noise, T, x0=None, y0=None, checkpoint_grid=None,
              seed=0, draws="ambient"):
    """One trajectory of T steps; identical to trial 0 of ``run_experiment``
    with ``master_seed=seed``."""
    x0, y0, grid = _prepare(sys, sub_x, sub_y, T, x0, y0, checkpoint_grid, draws)
    rec, finals = _run_batch(sys, sub_x, sub_y, steps, noise, T, x0, y0, grid,
                             [trial_rng(seed, 0)], draws)
    return TrialTrace(grid.copy(), *(rec[k][0] for k in TrialTrace.FIELDS), 1, finals)


def run_experiment(sys, sub_x, sub_y, steps, noise, T, trials, master_seed=0,
                   checkpoint_grid=None, x0=None, y0=None, keep_trials=False, draws="ambient"):
    """Mean of ``trials`` independent trajectories at each checkpoint.

    Trial i draws from ``trial_rng(master_seed, i)``; the reduction is in
    trial-index order, so output is reproducible bit for bit. With
    ``keep_trials`` the per-trial records are returned as a second value.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x0, y0, grid = _prepare(sys, sub_x, sub_y, T, x0, y0, checkpoint_grid, draws)
    rngs = [trial_rng(master_seed, i) for i in range(trials)]
    rec, finals = _run_batch(sys, sub_x, sub_y, steps, noise, T, x0, y0, grid, rngs, draws)
    trace = TrialTrace(grid.copy(), *(rec[k].mean(axis=0) for k in TrialTrace.FIELDS),
                       trials, finals)
    return (trace, rec) if keep_trials else trace


def noiseless_iterate(sys, sub_x, sub_y, steps, T, x0=None, y0=None):
    """(x_T, y_T) of the noise-free projected iteration, by binary powering of
    its affine map in ambient coordinates."""
    n, m = sys.n, sys.m
    Px, Py = sub_x.projector, sub_y.projector
    a, b = steps.alpha, steps.beta
    E = np.zeros((n + m + 1, n + m + 1))
    E[:n, :n] = Px @ (np.eye(n) + a * sys.A_ff)
    E[:n, n:n + m] = a * Px @ sys.A_fs
    E[:n, -1] = -a * Px @ sys.b1
    E[n:n + m, :n] = b * Py @ sys.A_sf
    E[n:n + m, n:n + m] = Py @ (np.eye(m) + b * sys.A_ss)
    E[n:n + m, -1] = -b * Py @ sys.b2
    E[-1, -1] = 1.0
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64)
    y0 = np.zeros(m) if y0 is None else np.asarray(y0, dtype=np.float64)
    w = np.linalg.matrix_power(E, int(T)) @ np.concatenate([x0, y0, [1.0]])
    return w[:n], w[n:n + m]


def telescoping_residuals(sys, sub_x, sub_y, steps, final_state, csol=None):
    """Norm of the gap in the two summed-recursion identities

        Pi_X A_ff (xbar - x_p(ybar)) = (x_T - x_0)/(alpha T) - Pi_X eps_sum / T
        Pi_Y (A_ss (ybar - y_p) + A_sf (xbar - x_p)) = (y_T - y_0)/(beta T) - Pi_Y psi_sum / T

    Both hold exactly for every realised trajectory.
    """
    s = final_state
    if s.t < 1:
        raise ValueError("need at least one step")
    if csol is None:
        csol = constrained_solution(sys, sub_x, sub_y)
    T = s.t
    xbar, ybar = s.xbar, s.ybar
    lhs_f = project(sub_x, sys.A_ff @ (xbar - x_p_of_y(sys, sub_x, ybar)))
    rhs_f = (s.x - s.x0) / (steps.alpha * T) - project(sub_x, s.eps_sum) / T
    lhs_s = project(sub_y, sys.A_ss @ (ybar - csol.y_p) + sys.A_sf @ (xbar - csol.x_p))
    rhs_s = (s.y - s.y0) / (steps.beta * T) - project(sub_y, s.psi_sum) / T
    return float(np.linalg.norm(lhs_f - rhs_f)), float(np.linalg.norm(lhs_s - rhs_s))


def expected_trace(sys, sub_x, sub_y, steps, noise, T, x0=None, y0=None, checkpoint_grid=None):
    """Exact expectations of the TrialTrace records (the infinite-trial mean).

    Propagates the mean and covariance of the reduced state together with
    its running sum; valid for ``none`` and ``gaussian_iid`` noise.
    """
    x0, y0, grid = _prepare(sys, sub_x, sub_y, T, x0, y0, checkpoint_grid, "ambient")
    Ux, Uy = sub_x.U, sub_y.U
    d, r = Ux.shape[1], Uy.shape[1]
    k = d + r
    sol = unconstrained_solution(sys)
    csol = constrained_solution(sys, sub_x, sub_y)
    M, c, rates = _reduced_dynamics(sys, sub_x, sub_y, steps)
    var = 0.0 if noise.kind == "none" else noise.sigma ** 2

    # augmented state w = [z_t, sum_{s<t} z_s]
    A = np.zeros((2 * k, 2 * k))
    A[:k, :k] = M
    A[k:, :k] = np.eye(k)
    A[k:, k:] = np.eye(k)
    Q = np.zeros((2 * k, 2 * k))
    Q[:k, :k] = np.diag(rates ** 2 * var)
    shift = np.concatenate([c, np.zeros(k)])
    mean = np.concatenate([Ux.T @ x0, Uy.T @ y0, np.zeros(k)])
    cov = np.zeros((2 * k, 2 * k))

    targets = {
        "stat_x": (slice(k, k + d), Ux.T @ csol.x_p, True, sol.x_star - csol.x_p, Ux),
        "stat_y": (slice(k + d, 2 * k), Uy.T @ csol.y_p, True, sol.y_star - csol.y_p, Uy),
        "last_x": (slice(0, d), Ux.T @ csol.x_p, False, None, Ux),
        "last_y": (slice(d, k), Uy.T @ csol.y_p, False, None, Uy),
    }
    rec = {f: np.empty(len(grid)) for f in TrialTrace.FIELDS}
    t = 0
    for ci, target in enumerate(grid):
        while t < target:
            mean = A @ mean + shift
            cov = A @ cov @ A.T + Q
            t += 1
        for name, (sl, ref, averaged, offset, U) in targets.items():
            scale = 1.0 / t if averaged else 1.0
            mu = mean[sl] * scale
            tr = float(np.trace(cov[sl, sl])) * scale ** 2
            rec[name][ci] = float(np.sum((mu - ref) ** 2)) + tr
            if averaged:
                # total error: distance to the unconstrained solution in ambient space
                gap = U @ mu - (U @ ref + offset)
                rec["total_" + name[-1]][ci] = float(gap @ gap) + tr
    return TrialTrace(grid.copy(), *(rec[f] for f in TrialTrace.FIELDS), trials=0)
