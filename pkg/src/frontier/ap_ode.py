"""Spatially flat positive almost-periodic solution of u' = u f(t, u).

The attractor trajectory, its long-time mean, and the shifted problems
u' = u (f(t, u) +/- eps) that bracket it.  Transients are detected by
integrating a second trajectory from a doubled initial value and waiting
for the two to merge, which certifies the attractor without assuming a
convergence rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NonPositive
from .forcing import GrowthLaw


@dataclass
class ApSolution:
    """Sampled trajectory with its transient cut and post-transient mean."""

    sample_times: np.ndarray
    values: np.ndarray
    transient_cut: float
    mean_estimate: float
    mean_ci_width: float

    def value_at(self, t):
        """Linear interpolation of the trajectory (clamped at the ends)."""
        return np.interp(t, self.sample_times, self.values)


def _dt_bound(growth: GrowthLaw, epsilon_shift: float, u_top: float) -> float:
    sup_a = max(abs(growth.a.sup), abs(growth.a.inf))
    return 0.01 / (sup_a + abs(epsilon_shift) + growth.b.sup * max(u_top, growth.M))


def _stage_coefficients(growth: GrowthLaw, steps: int, dt: float):
    ts = np.arange(2 * steps + 1) * (0.5 * dt)
    return growth.a(ts), growth.b(ts)


def solve_scalar(
    growth: GrowthLaw,
    epsilon_shift: float = 0.0,
    u_init: float = 1.0,
    horizon: float = 200.0,
    dt: float | None = None,
    merge_tol: float = 1e-6,
) -> ApSolution:
    """Integrate u' = u (f(t, u) + epsilon_shift) with classical RK4.

    Two trajectories (from u_init and 2 u_init) run side by side; the
    transient cut is the first time beyond which they stay within
    ``merge_tol`` of each other.  Raises NoConvergence if they never merge
    and NonPositive if the solution dips to zero or below.
    """
    if u_init <= 0:
        raise ValueError("u_init must be positive")
    bound = _dt_bound(growth, epsilon_shift, 2.0 * u_init)
    if dt is None:
        dt = bound
    elif dt > bound * (1 + 1e-9):
        raise ValueError(f"dt={dt} exceeds the stability rule bound {bound:.3g}")
    steps = max(1, int(np.ceil(horizon / dt)))
    dt = horizon / steps

    av, bv = _stage_coefficients(growth, steps, dt)
    al = av.tolist()
    bl = bv.tolist()
    s = float(epsilon_shift)
    half = 0.5 * dt
    sixth = dt / 6.0

    u = float(u_init)
    v = 2.0 * u
    us = np.empty(steps + 1)
    vs = np.empty(steps + 1)
    us[0] = u
    vs[0] = v
    for n in range(steps):
        j = 2 * n
        a0 = al[j]
        b0 = bl[j]
        ah = al[j + 1]
        bh = bl[j + 1]
        a1 = al[j + 2]
        b1 = bl[j + 2]

        k1 = u * (a0 - b0 * u + s)
        w = u + half * k1
        k2 = w * (ah - bh * w + s)
        w = u + half * k2
        k3 = w * (ah - bh * w + s)
        w = u + dt * k3
        k4 = w * (a1 - b1 * w + s)
        u = u + sixth * (k1 + 2.0 * (k2 + k3) + k4)

        k1 = v * (a0 - b0 * v + s)
        w = v + half * k1
        k2 = w * (ah - bh * w + s)
        w = v + half * k2
        k3 = w * (ah - bh * w + s)
        w = v + dt * k3
        k4 = w * (a1 - b1 * w + s)
        v = v + sixth * (k1 + 2.0 * (k2 + k3) + k4)

        us[n + 1] = u
        vs[n + 1] = v

    times = np.arange(steps + 1) * dt
    if not np.all(np.isfinite(us)) or np.min(us) <= 0 or not np.all(np.isfinite(vs)):
        raise NonPositive("trajectory left the positive cone; decrease dt")

    diff = np.abs(us - vs)
    suffix_max = np.maximum.accumulate(diff[::-1])[::-1]
    merged = suffix_max <= merge_tol
    if not merged.any() or not merged[:-1].any():
        raise NoConvergence("trajectories from distinct initial data did not merge")
    cut_idx = int(np.argmax(merged))
    cut = float(times[cut_idx])

    tail_t = times[cut_idx:]
    tail_u = us[cut_idx:]
    mean = float(np.trapezoid(tail_u, tail_t) / (tail_t[-1] - tail_t[0]))
    ci = 0.0
    if tail_u.size >= 8:
        parts = np.array_split(tail_u, 4)
        wmeans = np.array([p.mean() for p in parts])
        ci = float(2.0 * wmeans.std(ddof=1) / 2.0)
    return ApSolution(times, us, cut, mean, ci)


def _solve_batch(growth: GrowthLaw, shifts, u0s, horizon: float, dt: float):
    """Vectorized RK4 for several (shift, u0) columns on a common grid."""
    shifts = np.asarray(shifts, dtype=float)
    u = np.asarray(u0s, dtype=float).copy()
    steps = max(1, int(np.ceil(horizon / dt)))
    dt = horizon / steps
    av, bv = _stage_coefficients(growth, steps, dt)
    out = np.empty((steps + 1, u.size))
    out[0] = u
    half = 0.5 * dt
    sixth = dt / 6.0
    for n in range(steps):
        j = 2 * n
        a0 = av[j]
        ah = av[j + 1]
        a1 = av[j + 2]
        b0 = bv[j]
        bh = bv[j + 1]
        b1 = bv[j + 2]
        k1 = u * (a0 - b0 * u + shifts)
        w = u + half * k1
        k2 = w * (ah - bh * w + shifts)
        w = u + half * k2
        k3 = w * (ah - bh * w + shifts)
        w = u + dt * k3
        k4 = w * (a1 - b1 * w + shifts)
        u = u + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        out[n + 1] = u
    times = np.arange(steps + 1) * dt
    if not np.all(np.isfinite(out)) or np.min(out) <= 0:
        raise NonPositive("a bracketing trajectory left the positive cone; decrease dt")
    return times, out


def bracket_check(
    growth: GrowthLaw,
    eps: float,
    horizon: float = 200.0,
    dt: float | None = None,
    u_init: float | None = None,
    merge_tol: float = 1e-6,
) -> float:
    """Maximum ordering violation of lower <= unshifted <= upper past transients.

    Solves the three shifted problems (-eps, 0, +eps) on one time grid, each
    with a doubled-initial twin for transient detection, and returns the
    largest violation of the ordering (0 when the bracketing holds).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if u_init is None:
        u_init = growth.a.mean_level / growth.b.mean_level
        if u_init <= 0:
            u_init = 0.5 * growth.M
    if dt is None:
        dt = _dt_bound(growth, eps, 2.0 * u_init)

    shifts = np.array([-eps, -eps, 0.0, 0.0, eps, eps])
    u0s = np.array([u_init, 2 * u_init] * 3)
    times, traj = _solve_batch(growth, shifts, u0s, horizon, dt)

    cut_idx = 0
    for pair in range(3):
        diff = np.abs(traj[:, 2 * pair] - traj[:, 2 * pair + 1])
        suffix_max = np.maximum.accumulate(diff[::-1])[::-1]
        merged = suffix_max <= merge_tol
        if not merged.any() or not merged[:-1].any():
            raise NoConvergence("bracketing trajectories did not merge before the horizon")
        cut_idx = max(cut_idx, int(np.argmax(merged)))

    lower = traj[cut_idx:, 0]
    mid = traj[cut_idx:, 2]
    upper = traj[cut_idx:, 4]
    violation = max(np.max(lower - mid, initial=0.0), np.max(mid - upper, initial=0.0))
    return float(max(0.0, violation))


def ap_mean(sol: ApSolution, window_doublings: int = 6) -> tuple[float, bool]:
    """Post-transient mean via window doubling T, 2T, 4T, ...

    The estimate is declared converged when the last two window means agree
    to 1e-3 relative.  Returns (mean over the largest window, converged).
    """
    if window_doublings < 1:
        raise ValueError("need at least one doubling")
    mask = sol.sample_times >= sol.transient_cut
    ts = sol.sample_times[mask]
    vals = sol.values[mask]
    if ts.size < 2:
        raise ValueError("solution holds no post-transient samples")
    span = ts[-1] - ts[0]
    base = span / 2**window_doublings
    means = []
    for j in range(window_doublings + 1):
        window = ts[0] + base * 2**j
        sel = ts <= window * (1 + 1e-12)
        if sel.sum() < 2:
            continue
        means.append(float(np.trapezoid(vals[sel], ts[sel]) / (ts[sel][-1] - ts[0])))
    if len(means) < 2:
        raise ValueError("window doubling produced fewer than two windows")
    converged = abs(means[-1] - means[-2]) < 1e-3 * max(abs(means[-1]), 1e-300)
    return means[-1], converged
