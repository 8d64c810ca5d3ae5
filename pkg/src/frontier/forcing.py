"""Quasi-periodic coefficient signals and the KPP growth law they compose.

Almost-periodic forcing is realized as finite sums of sines with rationally
independent frequencies (1 and sqrt(2) in the stock experiments), which gives
genuinely non-periodic recurrence while keeping evaluation exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Mode = tuple[float, float, float]  # (amplitude, frequency, phase)


@dataclass(frozen=True)
class QuasiPeriodicSignal:
    """mean_level + sum of amplitude * sin(frequency * t + phase) terms."""

    mean_level: float
    modes: tuple[Mode, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(tuple(float(v) for v in m) for m in self.modes))
        for amp, freq, _ in self.modes:
            if freq <= 0:
                raise ValueError("mode frequencies must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.mean_level)
        for amp, freq, phase in self.modes:
            out = out + amp * np.sin(freq * t + phase)
        if out.ndim == 0:
            return float(out)
        return out

    def at(self, t: float) -> float:
        """Scalar fast path used inside time-stepping loops."""
        val = self.mean_level
        for amp, freq, phase in self.modes:
            val += amp * math.sin(freq * t + phase)
        return val

    @property
    def sup(self) -> float:
        return self.mean_level + sum(abs(m[0]) for m in self.modes)

    @property
    def inf(self) -> float:
        return self.mean_level - sum(abs(m[0]) for m in self.modes)

    @property
    def max_frequency(self) -> float:
        return max((m[1] for m in self.modes), default=0.0)

    def empirical_mean(self, horizon: float) -> float:
        """Time average over [0, horizon] by composite trapezoid quadrature.

        Step is capped at 0.01 / max_frequency so that each oscillation is
        resolved far below the O(1/horizon) averaging error this converges at.
        """
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        if not self.modes:
            return self.mean_level
        step = min(0.01 / self.max_frequency, horizon / 100.0)
        n = int(math.ceil(horizon / step))
        ts = np.linspace(0.0, horizon, n + 1)
        return float(np.trapezoid(self(ts), ts) / horizon)


def constant(level: float) -> QuasiPeriodicSignal:
    return QuasiPeriodicSignal(mean_level=float(level))


def signal_from_mapping(mapping: dict) -> QuasiPeriodicSignal:
    """Build a signal from config data like {"mean": 1.0, "modes": [[0.5, 1.0, 0.0]]}."""
    data = dict(mapping)
    mean = float(data.pop("mean"))
    modes = data.pop("modes", [])
    if data:
        raise ValueError(f"unknown signal keys {sorted(data)}")
    parsed = []
    for mode in modes:
        if len(mode) != 3:
            raise ValueError("each mode must be [amplitude, frequency, phase]")
        parsed.append(tuple(float(v) for v in mode))
    return QuasiPeriodicSignal(mean_level=mean, modes=tuple(parsed))


@dataclass(frozen=True)
class GrowthLaw:
    """KPP reaction f(t, u) = a(t) - b(t) u with inf b > 0.

    The saturation level M = sup a / inf b makes f(t, u) < 0 for all u > M,
    so densities are trapped below max(initial sup, M).
    """

    a: QuasiPeriodicSignal
    b: QuasiPeriodicSignal = field(default_factory=lambda: constant(1.0))

    def __post_init__(self):
        if self.b.inf <= 0:
            raise ValueError("crowding signal b must be bounded away from zero")
        if self.a.sup <= 0:
            raise ValueError("intrinsic rate a must be positive somewhere")

    @property
    def M(self) -> float:
        return self.a.sup / self.b.inf

    def rate(self, t, u):
        """f(t, u)."""
        return self.a(t) - self.b(t) * u

    def reaction(self, t, u):
        """u f(t, u), the growth term of the density equation."""
        return u * self.rate(t, u)
