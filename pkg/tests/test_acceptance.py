"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

from fractions import Fraction
import math
import time

import numpy as np
import pytest

from threedvar.dynamics import CLASSICAL
from threedvar.harness import verify
from threedvar.harness.config import ExperimentSpec
from threedvar.harness.experiments import run_decay, run_slope, write_decay, write_slope


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return _report


def _all_pass(results):
    return all(r.status == "pass" for r in results)


def _describe(results):
    return "; ".join(f"{r.name}={r.statistic:.4g} <= {r.bound:.4g}"
                     + (f" [{r.detail}]" if "t > 0" in r.detail else "") for r in results)


def test_c01_operator_properties(report):
    t = time.perf_counter()
    results = verify.operator_properties(seed=0, n=10_000, radius=100.0)
    elapsed = time.perf_counter() - t
    report(1, _all_pass(results) and elapsed < 1.0, f"{_describe(results)}; {elapsed:.2f}s < 1s")


def test_c02_constants(report):
    K = Fraction(8, 3) ** 2 * (28 + 10) ** 2 / (4 * (Fraction(8, 3) - 1))
    beta = 2 * (math.sqrt(K) - 1)
    rel = [abs(CLASSICAL.K - float(K)) / float(K), abs(CLASSICAL.beta - beta) / beta,
           abs(CLASSICAL.eta_c - 4 / float(K)) / (4 / float(K))]
    ok = (max(rel) <= 1e-9 and _all_pass(verify.constants())
          and f"{CLASSICAL.K:.3f}" == "1540.267" and f"{CLASSICAL.beta:.4f}" == "76.4925")
    report(2, ok, f"K={CLASSICAL.K!r} beta={CLASSICAL.beta!r} eta_c={CLASSICAL.eta_c!r} max rel err {max(rel):.1e}")


def test_c03_pathwise_separation(report):
    t = time.perf_counter()
    results = verify.separation(seed=0, n_pairs=100, T=0.05, dt=1e-5, slack=1.01)
    elapsed = time.perf_counter() - t
    report(3, _all_pass(results) and elapsed < 30, f"{_describe(results)}; {elapsed:.1f}s < 30s")


def test_c04_discrete_recursion(report):
    t = time.perf_counter()
    results = verify.discrete_recursion(seed=0, eta=0.01, eps=0.1, n_members=1000, n_steps=200,
                                      h_fraction=0.5)
    elapsed = time.perf_counter() - t
    (r,) = results
    report(4, r.status == "pass" and elapsed < 60,
           f"max excess over (1-lambda h)E_k + 2eps^2 + 3SE = {r.statistic:.4g} ({r.detail}); {elapsed:.1f}s < 60s")


def test_c05_discrete_decay(report):
    rows = []
    for seed in range(10):
        res = run_decay(ExperimentSpec(kind="decay_discrete", eta=0.1, eps=1.0, horizon=100.0, seed=seed))
        e = res.errors
        window = (e.t >= 10.0) & (e.t <= 100.0)
        frac = float((np.sqrt(e.delta_sq[window]) < 3.0).mean())
        rows.append((res.time_to_threshold <= 10.0 and frac >= 0.8, res.time_to_threshold, frac))
    good = sum(r[0] for r in rows)
    worst_t = max(r[1] for r in rows)
    worst_f = min(r[2] for r in rows)
    report(5, good >= 9, f"{good}/10 seeds ok (need 9); slowest hit t={worst_t:.3g}, lowest share below 3eps={worst_f:.4f}")


def test_c06_slopes(report):
    t = time.perf_counter()
    parts, ok = [], True
    for kind in ("slope_discrete", "slope_continuous"):
        res = run_slope(ExperimentSpec(kind=kind, eps_grid=(1e-3, 1e-2, 1e-1, 1.0), averaging="both"))
        for mode in ("time", "ensemble"):
            s = res.fits[mode][0]
            ok &= 1.7 <= s <= 2.3
            parts.append(f"{kind}/{mode} slope={s:.4f}")
    elapsed = time.perf_counter() - t
    report(6, ok and elapsed < 300, f"{', '.join(parts)}; {elapsed:.0f}s < 300s")


def test_c07_continuous_bound(report):
    t = time.perf_counter()
    (r,) = verify.continuous_curve(seed=0, eta=2.0 / CLASSICAL.K, eps=0.01, n_members=500, T=20.0)
    elapsed = time.perf_counter() - t
    report(7, r.status == "pass" and elapsed < 60,
           f"max(mean - bound - 3SE) = {r.statistic:.4g} ({r.detail}); {elapsed:.1f}s < 60s")


def test_c08_beyond_certificate(report):
    eta, eps = 10 * CLASSICAL.eta_c, 0.01

    def share(seed):
        e = run_decay(ExperimentSpec(kind="decay_continuous", eta=eta, eps=eps, horizon=100.0, seed=seed)).errors
        window = e.t >= 10.0
        return np.sqrt(e.delta_sq[window]) < 10 * eps

    primary = float(share(0).mean())
    pooled = float(np.concatenate([share(s) for s in range(10)]).mean())
    report(8, primary >= 0.8 and pooled >= 0.8,
           f"|delta| < 10eps on {primary:.4f} of t in [10,100] (seed 0), {pooled:.4f} pooled over 10 seeds; need 0.8")


def test_c09_variational(report):
    results = verify.variational(seed=0, n=100, n_dirs=100, radius=0.1)
    report(9, _all_pass(results), _describe(results))


def test_c10_determinism(report, tmp_path):
    runs = [
        ExperimentSpec(kind="decay_discrete"),
        ExperimentSpec(kind="decay_continuous"),
        ExperimentSpec(kind="slope_discrete"),
        ExperimentSpec(kind="slope_continuous", ensemble=100),
    ]
    same = []
    for i, spec in enumerate(runs):
        blobs = []
        for workers in (1, 8):
            path = tmp_path / f"{i}_{workers}.csv"
            if spec.kind.startswith("slope"):
                write_slope(run_slope(spec, workers), spec, path)
            else:
                write_decay(run_decay(spec, workers), spec, path)
            blobs.append(path.read_bytes())
        same.append(blobs[0] == blobs[1])
    report(10, all(same), ", ".join(f"{s.kind}: {'identical' if ok else 'DIFFERENT'}" for s, ok in zip(runs, same)))
