import math

import numpy as np
import pytest

from frontier.analysis import (
    Outcome,
    SpeedFit,
    SpeedTarget,
    acceleration_check,
    attractor_solution,
    classify_outcome,
    compute_cstar,
    estimate_speed,
    flattening_metric,
    truncation_ladder,
)
from frontier.errors import InsufficientData
from frontier.fb_solver import RunConfig, RunRecord, run
from frontier.forcing import GrowthLaw, QuasiPeriodicSignal, constant
from frontier.kernels import INFINITE, Gaussian, Laplace, PowerLawTail

LOGISTIC = GrowthLaw(a=constant(1.0), b=constant(1.0))
AP_LAW = GrowthLaw(
    a=QuasiPeriodicSignal(1.0, ((0.5, 1.0, 0.0), (0.3, math.sqrt(2.0), 0.0))),
    b=constant(1.0),
)


def synthetic_record(ts, hs, umaxes=None, config=None, termination="horizon"):
    ts = np.asarray(ts, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if umaxes is None:
        umaxes = np.ones_like(ts)
    if config is None:
        config = RunConfig(
            kernel=Laplace(1.0),
            growth=LOGISTIC,
            mu=1.0,
            h0=max(float(hs[0]), 0.1),
            window_halfwidth=40.0,
            horizon=float(ts[-1]),
        )
    x = np.linspace(-40.0, 40.0, 801)
    return RunRecord(
        times=ts,
        gs=-hs,
        hs=hs,
        umaxes=np.asarray(umaxes, dtype=float),
        masses=np.ones_like(ts),
        snapshot_times=ts[:0],
        snapshots=[],
        x=x,
        config=config,
        termination=termination,
        wall_time=0.0,
    )


class TestComputeCstar:
    def test_laplace_closed_form(self):
        target = compute_cstar(2.0, LOGISTIC, Laplace(1.0))
        assert target.c_star == 1.0
        assert target.u_mean == 1.0
        assert target.m1 == 0.5

    def test_gaussian_closed_form(self):
        target = compute_cstar(1.0, LOGISTIC, Gaussian(1.0))
        assert target.c_star == pytest.approx(0.3989423, abs=5e-8)

    def test_fat_tail_is_infinite(self):
        target = compute_cstar(2.0, LOGISTIC, PowerLawTail(2.0, 1.0))
        assert target.c_star == INFINITE
        assert target.m1 == INFINITE

    def test_ap_forcing_enters_through_mean(self):
        target = compute_cstar(2.0, AP_LAW, Laplace(1.0))
        assert target.c_star == pytest.approx(1.0, abs=1e-3)


class TestEstimateSpeed:
    def test_linear_front(self):
        ts = np.linspace(0.0, 100.0, 201)
        slope_fit, endpoint = estimate_speed(synthetic_record(ts, 2.0 + 3.0 * ts), "right", 0.5)
        assert slope_fit.c_hat == pytest.approx(3.0, abs=1e-12)
        assert slope_fit.stderr == pytest.approx(0.0, abs=1e-12)
        assert endpoint.c_hat == pytest.approx((2.0 + 300.0) / 100.0, rel=1e-12)

    def test_sqrt_correction_against_closed_form_ols(self):
        ts = np.linspace(0.0, 1e4, 2001)
        hs = ts + np.sqrt(ts)
        slope_fit, _ = estimate_speed(synthetic_record(ts, hs), "right", 0.5)

        # oracle: closed-form least squares on the same window
        m = ts >= 5000.0
        tw, hw = ts[m], hs[m]
        slope_oracle = np.sum((tw - tw.mean()) * (hw - hw.mean())) / np.sum((tw - tw.mean()) ** 2)
        assert slope_fit.c_hat == pytest.approx(slope_oracle, rel=1e-12)
        assert 1.00 < slope_fit.c_hat < 1.01

    def test_left_right_symmetric(self):
        ts = np.linspace(0.0, 50.0, 101)
        rec = synthetic_record(ts, 1.0 + 0.5 * ts)
        right = estimate_speed(rec, "right", 0.5)[0]
        left = estimate_speed(rec, "left", 0.5)[0]
        assert right.c_hat == pytest.approx(left.c_hat, rel=1e-12)

    def test_requires_enough_samples(self):
        ts = np.linspace(0.0, 10.0, 12)
        with pytest.raises(InsufficientData):
            estimate_speed(synthetic_record(ts, 2.0 + ts), "right", 0.5)

    def test_window_must_be_late(self):
        with pytest.raises(ValueError):
            estimate_speed(synthetic_record(np.linspace(0, 10, 100), np.linspace(2, 12, 100)), "right", 0.9)
        with pytest.raises(ValueError):
            SpeedFit(c_hat=1.0, stderr=0.0, window=(1.0, 10.0), method="slope_fit")


class TestClassifyOutcome:
    def test_vanishing_rule(self):
        ts = np.linspace(0.0, 100.0, 201)
        hs = np.full_like(ts, 1.55)
        umaxes = 0.5 * np.exp(-0.2 * ts)
        rec = synthetic_record(ts, hs, umaxes)
        assert classify_outcome(rec, width_threshold=50.0, decay_tol=1e-4) is Outcome.VANISHING

    def test_spreading_rule(self):
        ts = np.linspace(0.0, 100.0, 201)
        rec = synthetic_record(ts, 2.0 + 2.5 * ts)
        assert classify_outcome(rec, width_threshold=50.0, decay_tol=1e-4) is Outcome.SPREADING

    def test_short_noisy_record_undetermined(self):
        ts = np.linspace(0.0, 20.0, 41)
        hs = 2.0 + 0.05 * ts + 0.02 * np.sin(5 * ts)
        rec = synthetic_record(ts, hs, umaxes=np.full_like(ts, 0.3))
        assert classify_outcome(rec, width_threshold=50.0, decay_tol=1e-4) is Outcome.UNDETERMINED

    def test_early_truncation_rejected(self):
        ts = np.linspace(0.0, 20.0, 41)
        cfg = RunConfig(
            kernel=Laplace(1.0), growth=LOGISTIC, mu=1.0, h0=2.0, window_halfwidth=40.0, horizon=100.0
        )
        rec = synthetic_record(ts, 2.0 + ts, config=cfg, termination="window_exhausted")
        with pytest.raises(InsufficientData):
            classify_outcome(rec)

    def test_real_vanishing_run(self):
        # small habitat, weak growth: density collapses and fronts barely move
        law = GrowthLaw(a=constant(0.2), b=constant(1.0))
        cfg = RunConfig(
            kernel=Laplace(1.0),
            growth=law,
            mu=1e-4,
            h0=0.2,
            window_halfwidth=40.0,
            horizon=30.0,
            snapshot_every=0.5,
        )
        rec = run(cfg)
        assert rec.umaxes[-1] < 1e-4
        assert classify_outcome(rec, width_threshold=50.0, decay_tol=1e-4) is Outcome.VANISHING


class TestFlattening:
    def test_zero_when_snapshot_equals_attractor(self):
        cfg = RunConfig(
            kernel=Laplace(1.0), growth=LOGISTIC, mu=1.0, h0=1.0, window_halfwidth=40.0, horizon=2.0
        )
        rec = run(cfg)
        ap = attractor_solution(LOGISTIC, rec.horizon)
        # overwrite snapshots with the attractor value inside a wide cone
        target = SpeedTarget(c_star=1.0, mu=1.0, u_mean=1.0, m1=0.5)
        for i, t in enumerate(rec.snapshot_times):
            rec.snapshots[i] = np.full_like(rec.snapshots[i], float(ap.value_at(t)))
        series = flattening_metric(rec, target, eps_fraction=0.5, ap=ap)
        assert all(dev == 0.0 for _, dev in series)

    def test_degenerate_window_at_t0(self):
        cfg = RunConfig(
            kernel=Laplace(1.0), growth=LOGISTIC, mu=1.0, h0=1.0, window_halfwidth=40.0, horizon=1.0
        )
        rec = run(cfg)
        ap = attractor_solution(LOGISTIC, rec.horizon)
        series = flattening_metric(rec, SpeedTarget(1.0, 1.0, 1.0, 0.5), 0.5, ap)
        t0, dev0 = series[0]
        assert t0 == 0.0
        assert dev0 == pytest.approx(abs(0.5 - float(ap.value_at(0.0))), abs=1e-12)

    def test_density_locks_onto_attractor_inside_empirical_cone(self):
        # the real spreading cone (measured speed) shows the flattening content
        cfg = RunConfig(
            kernel=Laplace(1.0),
            growth=LOGISTIC,
            mu=2.0,
            h0=2.0,
            window_halfwidth=100.0,
            horizon=60.0,
            snapshot_every=1.0,
        )
        rec = run(cfg)
        ap = attractor_solution(LOGISTIC, rec.horizon)
        c_emp = estimate_speed(rec, "right", 0.5)[0].c_hat
        target = SpeedTarget(c_star=c_emp, mu=2.0, u_mean=1.0, m1=0.5)
        series = flattening_metric(rec, target, eps_fraction=0.5, ap=ap)
        assert series[-1][1] < 0.05
        last3 = [dev for _, dev in series[-3:]]
        assert last3[0] >= last3[1] >= last3[2] or max(last3) < 0.05

    def test_infinite_target_rejected(self):
        rec = synthetic_record(np.linspace(0, 10, 30), np.linspace(2, 12, 30))
        ap = attractor_solution(LOGISTIC, 15.0)
        with pytest.raises(ValueError):
            flattening_metric(rec, SpeedTarget(INFINITE, 2.0, 1.0, INFINITE), 0.5, ap)


class TestAcceleration:
    def test_linear_growth_not_accelerated(self):
        ts = np.linspace(0.0, 100.0, 201)
        verdict, ratio = acceleration_check(synthetic_record(ts, 3.0 * ts + 1e-9))
        assert not verdict
        assert ratio == pytest.approx(1.0, abs=1e-6)

    def test_quadratic_growth_detected(self):
        ts = np.linspace(0.0, 100.0, 201)
        verdict, ratio = acceleration_check(synthetic_record(ts, ts**2 / 100.0 + 1e-9))
        assert verdict
        assert ratio == pytest.approx(4.0, abs=1e-3)

    def test_too_short_record(self):
        with pytest.raises(InsufficientData):
            acceleration_check(synthetic_record(np.linspace(0, 1, 4), np.linspace(2, 3, 4)))


class TestTruncationLadder:
    def test_fat_tail_ladder_strictly_increasing(self):
        targets = truncation_ladder(2.0, LOGISTIC, PowerLawTail(2.0, 1.0), [10.0, 20.0])
        speeds = [t.c_star for t in targets]
        assert speeds[0] < speeds[1] < INFINITE
        assert all(math.isfinite(s) for s in speeds)

    def test_thin_tail_ladder_matches_untruncated(self):
        base = compute_cstar(2.0, LOGISTIC, Laplace(1.0)).c_star
        targets = truncation_ladder(2.0, LOGISTIC, Laplace(1.0), [20.0, 40.0])
        for t in targets:
            assert t.c_star == pytest.approx(base, abs=1e-4)

    def test_tiny_cutoff_gives_tiny_speed(self):
        targets = truncation_ladder(2.0, LOGISTIC, PowerLawTail(2.0, 1.0), [0.2], width=0.1)
        assert 0.0 < targets[0].c_star < 0.05

    def test_cutoffs_must_increase(self):
        with pytest.raises(ValueError):
            truncation_ladder(2.0, LOGISTIC, PowerLawTail(2.0, 1.0), [20.0, 10.0])
