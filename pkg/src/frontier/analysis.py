"""Regime-level verdicts from run records.

Computes the target spreading speed from the kernel moment and the mean of
the almost-periodic attractor, fits empirical front speeds two independent
ways, classifies spreading versus vanishing with explicit desk-scale
thresholds, measures how the density flattens onto the attractor inside
the spreading cone, detects superlinear front growth, and builds the
truncated-kernel speed ladder that documents divergence for fat tails.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ap_ode import ApSolution, ap_mean, solve_scalar
from .errors import InsufficientData, NumericsError
from .fb_solver import RunRecord
from .forcing import GrowthLaw
from .kernels import INFINITE, thin_tail_identity_check, truncate


class Outcome(str, enum.Enum):
    SPREADING = "spreading"
    VANISHING = "vanishing"
    UNDETERMINED = "undetermined"


@dataclass
class SpeedFit:
    """Empirical front speed over a late-time window."""

    c_hat: float
    stderr: float
    window: tuple[float, float]
    method: str  # "slope_fit" | "endpoint_ratio"

    def __post_init__(self):
        t_lo, t_hi = self.window
        if t_lo < 0.5 * t_hi - 1e-9:
            raise ValueError("speed fits must use a late-time window (t_lo >= t_hi/2)")


@dataclass
class SpeedTarget:
    """Predicted spreading speed mu * u_mean * m1, infinite for fat tails."""

    c_star: float
    mu: float
    u_mean: float
    m1: float


@lru_cache(maxsize=32)
def _attractor_mean(growth: GrowthLaw) -> tuple[float, ApSolution]:
    """Post-transient mean of the flat attractor (cached per growth law)."""
    u_init = growth.a.mean_level / growth.b.mean_level
    if u_init <= 0:
        u_init = 0.5 * growth.M
    # constant coefficients sit on the fixed point immediately; quasi-periodic
    # forcing needs a long window for the 1e-3 Cauchy certificate
    horizon = 150.0 if not growth.a.modes and not growth.b.modes else 2200.0
    sol = solve_scalar(growth, 0.0, u_init=u_init, horizon=horizon)
    mean, _ = ap_mean(sol)
    return mean, sol


def attractor_solution(growth: GrowthLaw, horizon: float) -> ApSolution:
    """Flat attractor trajectory covering [0, horizon] (for flattening checks)."""
    mean, sol = _attractor_mean(growth)
    if sol.sample_times[-1] >= horizon:
        return sol
    u_init = growth.a.mean_level / growth.b.mean_level
    if u_init <= 0:
        u_init = 0.5 * growth.M
    return solve_scalar(growth, 0.0, u_init=u_init, horizon=horizon)


def compute_cstar(mu: float, growth: GrowthLaw, kernel) -> SpeedTarget:
    """Target speed mu * u_mean * m1, cross-checked against the double integral.

    The direct 2-D quadrature of the defining corner integral (times mu and
    the attractor mean) must agree with the closed form to 1e-5 relative;
    a fat-tailed kernel yields the distinguished infinite target.
    """
    u_mean, _ = _attractor_mean(growth)
    m1 = kernel.half_first_moment()
    if not math.isfinite(m1):
        return SpeedTarget(c_star=INFINITE, mu=mu, u_mean=u_mean, m1=INFINITE)
    box = max(60.0, kernel.effective_radius(1e-11))
    residual = thin_tail_identity_check(kernel, quad_box=box)
    if residual >= 1e-5:
        raise NumericsError(f"corner-integral cross-check failed: residual {residual:.3e}")
    return SpeedTarget(c_star=mu * u_mean * m1, mu=mu, u_mean=u_mean, m1=m1)


def _ols_slope(ts: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    tbar = ts.mean()
    ybar = ys.mean()
    sxx = float(np.sum((ts - tbar) ** 2))
    slope = float(np.sum((ts - tbar) * (ys - ybar)) / sxx)
    resid = ys - ybar - slope * (ts - tbar)
    dof = max(ts.size - 2, 1)
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx)
    return slope, stderr


def estimate_speed(
    record: RunRecord,
    which: str = "right",
    window_fraction: float = 0.5,
) -> tuple[SpeedFit, SpeedFit]:
    """Front speed by late-window least squares and by the endpoint ratio.

    Returns (slope_fit, endpoint_ratio); disagreement between the two flags
    pre-asymptotic data.
    """
    if which not in ("right", "left"):
        raise ValueError("which must be 'right' or 'left'")
    if not 0 < window_fraction <= 0.5:
        raise ValueError("window_fraction must lie in (0, 0.5] (late-time window only)")
    ts = record.times
    ys = record.hs if which == "right" else -record.gs
    t_hi = float(ts[-1])
    if t_hi <= 0:
        raise InsufficientData("record holds no positive times")
    mask = ts >= (1 - window_fraction) * t_hi - 1e-12
    if int(mask.sum()) < 20:
        raise InsufficientData(f"only {int(mask.sum())} samples in the speed window; need 20")
    tw = ts[mask]
    yw = ys[mask]
    slope, stderr = _ols_slope(tw, yw)
    window = (float(tw[0]), t_hi)
    slope_fit = SpeedFit(c_hat=slope, stderr=stderr, window=window, method="slope_fit")
    endpoint = SpeedFit(c_hat=float(ys[-1] / t_hi), stderr=0.0, window=window, method="endpoint_ratio")
    return slope_fit, endpoint


def classify_outcome(
    record: RunRecord,
    width_threshold: float = 50.0,
    decay_tol: float = 1e-4,
) -> Outcome:
    """Spreading/vanishing verdict with explicit finite-horizon thresholds.

    Vanishing: final sup norm below decay_tol and the width grew by less
    than 1% over the last half.  Spreading: width beyond width_threshold
    and still growing at >= 10% of its mean rate.  Anything else is
    undetermined.
    """
    T = float(record.times[-1])
    if record.termination == "window_exhausted" and T < 0.5 * record.config.horizon:
        raise InsufficientData("record was window-truncated before half the horizon")
    if record.times.size < 4 or T <= 0:
        raise InsufficientData("record too short to classify")
    widths = record.widths
    half_idx = int(np.argmax(record.times >= 0.5 * T))
    width_growth = float(widths[-1] - widths[half_idx])
    if float(record.umaxes[-1]) < decay_tol and width_growth < 0.01 * float(widths[half_idx]):
        return Outcome.VANISHING
    mean_rate = float((widths[-1] - widths[0]) / T)
    qmask = record.times >= 0.75 * T
    recent_rate = _ols_slope(record.times[qmask], widths[qmask])[0] if int(qmask.sum()) >= 3 else 0.0
    if float(widths[-1]) > width_threshold and mean_rate > 0 and recent_rate >= 0.1 * mean_rate:
        return Outcome.SPREADING
    return Outcome.UNDETERMINED


def flattening_metric(
    record: RunRecord,
    target: SpeedTarget,
    eps_fraction: float,
    ap: ApSolution,
) -> list[tuple[float, float]]:
    """Sup deviation |u(t, x) - attractor(t)| over |x| <= (c* - eps) t per snapshot.

    eps = eps_fraction * c*; a window that contains no grid node degenerates
    to the origin.
    """
    if not math.isfinite(target.c_star):
        raise ValueError("flattening window needs a finite target speed")
    if not 0 < eps_fraction < 1:
        raise ValueError("eps_fraction must lie in (0, 1)")
    cone_rate = target.c_star * (1.0 - eps_fraction)
    origin = int(np.argmin(np.abs(record.x)))
    out = []
    for t, u in zip(record.snapshot_times, record.snapshots):
        radius = cone_rate * float(t)
        mask = np.abs(record.x) <= radius
        if not mask.any():
            mask = np.zeros_like(record.x, dtype=bool)
            mask[origin] = True
        ustar = float(ap.value_at(t))
        out.append((float(t), float(np.max(np.abs(u[mask] - ustar)))))
    return out


def acceleration_check(record: RunRecord) -> tuple[bool, float]:
    """Superlinear growth test: h(T)/T against h(T/4)/(T/4), verdict at ratio 1.5."""
    T = float(record.times[-1])
    if T <= 0 or record.times.size < 8:
        raise InsufficientData("record too short for an acceleration ratio")
    h_quarter = float(np.interp(0.25 * T, record.times, record.hs))
    early = h_quarter / (0.25 * T)
    late = float(record.hs[-1]) / T
    if early <= 0:
        raise InsufficientData("right front never moved")
    ratio = late / early
    return ratio >= 1.5, ratio


def truncation_ladder(
    mu: float,
    growth: GrowthLaw,
    base,
    cutoffs: list[float],
    width: float = 1.0,
) -> list[SpeedTarget]:
    """Target speeds of the smoothly truncated kernels, one per cutoff.

    Every truncation has a finite moment, so the ladder is always finite;
    for a fat-tailed base it grows without bound as the cutoff does.
    """
    if len(cutoffs) < 1 or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be strictly increasing")
    return [compute_cstar(mu, growth, truncate(base, c, width)) for c in cutoffs]
