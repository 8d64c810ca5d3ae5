"""Experiment configuration: TOML parsing, validation, defaults.

A config file holds the physical and discretization parameters of a run,
the analysis settings, and an optional sweep axis:

    mu = 2.0
    h0 = 2.0
    kernel = { family = "laplace", beta = 1.0 }
    a = { mean = 1.0, modes = [[0.5, 1.0, 0.0], [0.3, 1.4142135623, 0.0]] }
    b = { mean = 1.0 }
    sweep = { parameter = "mu", values = [0.001, 0.01, 0.1, 1.0] }

Unknown keys are rejected with the offending line; every field except
kernel, a/b (the growth law), mu, and h0 has a default.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .fb_solver import InitialData, RunConfig
from .forcing import GrowthLaw, constant, signal_from_mapping
from .kernels import kernel_from_mapping

_RUN_DEFAULTS = {
    "d": 1.0,
    "dx": 0.1,
    "dt": 0.01,
    "window_halfwidth": 400.0,
    "horizon": 300.0,
    "snapshot_every": 5.0,
    "convolution": "fft",
}

_ANALYSIS_DEFAULTS = {
    "window_fraction": 0.5,
    "eps_fraction": 0.5,
    "decay_tol": 1e-4,
    "width_threshold": 50.0,
    "lyap_L": 20.0,
    "lyap_horizon": 100.0,
    "lyap_renorm_every": 1.0,
    "lstar_Lmax": 60.0,
}

_REQUIRED = ("kernel", "a", "mu", "h0")

_KNOWN_KEYS = (
    set(_RUN_DEFAULTS)
    | set(_ANALYSIS_DEFAULTS)
    | {"kernel", "a", "b", "mu", "h0", "u0", "sweep"}
)


@dataclass
class SweepAxis:
    parameter: str
    values: list[float]


@dataclass
class ExperimentConfig:
    """A validated RunConfig plus analysis settings and an optional sweep axis."""

    run: RunConfig
    window_fraction: float = 0.5
    eps_fraction: float = 0.5
    decay_tol: float = 1e-4
    width_threshold: float = 50.0
    lyap_L: float = 20.0
    lyap_horizon: float = 100.0
    lyap_renorm_every: float = 1.0
    lstar_Lmax: float = 60.0
    sweep: SweepAxis | None = None

    def with_run_value(self, parameter: str, value: float) -> "ExperimentConfig":
        """Copy with one RunConfig field replaced (used by the sweep driver)."""
        run_kwargs = {f.name: getattr(self.run, f.name) for f in fields(RunConfig)}
        if parameter not in run_kwargs:
            raise ValidationError(f"sweep parameter {parameter!r} is not a run parameter")
        run_kwargs[parameter] = value
        out = ExperimentConfig(**{f.name: getattr(self, f.name) for f in fields(ExperimentConfig)})
        out.run = RunConfig(**run_kwargs)
        return out


def _key_line(text: str, key: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.lstrip()
        if stripped.startswith(f"{key}") and stripped[len(key):].lstrip().startswith("="):
            return lineno
    return None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config document; errors carry line references."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"config is not valid TOML: {exc}") from exc

    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        key = unknown[0]
        line = _key_line(text, key)
        where = f" (line {line})" if line else ""
        raise ParseError(f"unknown config key {key!r}{where}")

    missing = [key for key in _REQUIRED if key not in data]
    if missing:
        raise ValidationError(f"missing required config keys: {', '.join(missing)}")

    def bad(key: str, why: str) -> ValidationError:
        line = _key_line(text, key)
        where = f" (line {line})" if line else ""
        return ValidationError(f"{key}{where}: {why}")

    try:
        kernel = kernel_from_mapping(data["kernel"])
    except (ValueError, TypeError) as exc:
        raise bad("kernel", str(exc)) from exc
    try:
        a = signal_from_mapping(data["a"])
        b = signal_from_mapping(data["b"]) if "b" in data else constant(1.0)
        growth = GrowthLaw(a=a, b=b)
    except (ValueError, TypeError, KeyError) as exc:
        raise bad("a" if "b" not in data else "b", str(exc)) from exc

    u0 = InitialData()
    if "u0" in data:
        u0_data = dict(data["u0"])
        shape = str(u0_data.pop("shape", "parabolic"))
        amplitude = float(u0_data.pop("amplitude", 0.5))
        if u0_data:
            raise bad("u0", f"unknown keys {sorted(u0_data)}")
        u0 = InitialData(shape=shape, amplitude=amplitude)

    run_kwargs = {"kernel": kernel, "growth": growth, "u0": u0}
    for key in ("mu", "h0"):
        try:
            run_kwargs[key] = float(data[key])
        except (TypeError, ValueError) as exc:
            raise bad(key, "must be a number") from exc
    for key, default in _RUN_DEFAULTS.items():
        raw = data.get(key, default)
        if key == "convolution":
            run_kwargs[key] = str(raw)
        else:
            try:
                run_kwargs[key] = float(raw)
            except (TypeError, ValueError) as exc:
                raise bad(key, "must be a number") from exc

    try:
        run = RunConfig(**run_kwargs)
    except ValidationError as exc:
        for key in list(_RUN_DEFAULTS) + ["mu", "h0"]:
            if key in str(exc):
                raise bad(key, str(exc)) from exc
        raise

    extras = {}
    for key, default in _ANALYSIS_DEFAULTS.items():
        try:
            extras[key] = float(data.get(key, default))
        except (TypeError, ValueError) as exc:
            raise bad(key, "must be a number") from exc
    if not 0 < extras["window_fraction"] <= 0.5:
        raise bad("window_fraction", "must lie in (0, 0.5]")
    if not 0 < extras["eps_fraction"] < 1:
        raise bad("eps_fraction", "must lie in (0, 1)")

    sweep = None
    if "sweep" in data:
        sweep_data = dict(data["sweep"])
        parameter = str(sweep_data.pop("parameter", ""))
        values = sweep_data.pop("values", [])
        if sweep_data:
            raise bad("sweep", f"unknown keys {sorted(sweep_data)}")
        if not parameter:
            raise bad("sweep", "needs a 'parameter' name")
        if len(values) < 2:
            raise bad("sweep", "needs at least 2 values")
        sweep = SweepAxis(parameter=parameter, values=[float(v) for v in values])

    return ExperimentConfig(run=run, sweep=sweep, **extras)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
