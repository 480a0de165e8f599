"""Randomized and Monte Carlo checks of the operator properties and bounds.

Each check returns a :class:`CheckResult` with the worst-case statistic it
measured and the bound it was compared against. A check passes when
``statistic <= bound``.
"""

from dataclasses import dataclass
import math

import numpy as np

from ..bounds import find_lambda_discrete, lambda_continuous, lemma_sim_bounds, pathwise_separation_bound
from ..dynamics import CLASSICAL, apply_A, bilinear_B, solve, spin_up
from ..errors import NoContraction
from ..filter_continuous import FilterConfigContinuous, error_form
from ..filter_continuous import ensemble_errors as continuous_ensemble
from ..filter_discrete import (
    FilterConfigDiscrete,
    analysis_update,
    ensemble_errors as discrete_ensemble,
    kalman_gain,
    perturbed_start,
    variational_objective,
)
from ..observation import derive_seed, make_rng

PASS, FAIL, SKIP = "pass", "fail", "skipped"


@dataclass(frozen=True)
class CheckResult:
    name: str
    statistic: float
    bound: float
    status: str
    detail: str = ""

    @property
    def ok(self):
        return self.status != FAIL

    def line(self):
        extra = f" ({self.detail})" if self.detail else ""
        return f"{self.name} {self.statistic!r} {self.bound!r} {self.status}{extra}"


def _check(name, statistic, bound, detail=""):
    statistic = float(statistic)
    status = PASS if statistic <= bound else FAIL
    return CheckResult(name, statistic, float(bound), status, detail)


def uniform_ball(rng, n, radius):
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * (radius * rng.random(n) ** (1.0 / 3.0))[:, None]


def _norm(u):
    return np.linalg.norm(u, axis=-1)


def operator_properties(seed=0, n=10_000, radius=100.0, p=CLASSICAL, B=bilinear_B):
    """The five structural properties of ``A`` and ``B``; statistics count or measure violations."""
    rng = make_rng(seed, "probe")
    u = uniform_ball(rng, n, radius)
    v = uniform_ball(rng, n, radius)
    nu, nv = _norm(u), _norm(v)
    out = []
    Au_u = np.sum(apply_A(u, p) * u, axis=1)
    out.append(_check("properties.A_coercive", np.count_nonzero(~(Au_u > nu**2)), 0,
                      "violations of <Au,u> > |u|^2"))
    energy = np.abs(np.sum(B(u, u) * u, axis=1)) / np.maximum(nu, 1e-300) ** 3
    out.append(_check("properties.B_energy", energy.max(), 1e-10, "max |<B(u,u),u>| / |u|^3"))
    out.append(_check("properties.B_symmetric", np.abs(B(u, v) - B(v, u)).max(), 0.0,
                      "max |B(u,v) - B(v,u)|"))
    rel = 1.0 + 1e-12  # rounding slack only; the bounds are attained on a measure-zero set
    out.append(_check("properties.B_bounded",
                      np.count_nonzero(_norm(B(u, v)) > 0.5 * nu * nv * rel), 0,
                      "violations of |B(u,v)| <= |u||v|/2"))
    lhs = np.abs(np.sum(B(u, v) * v, axis=1))
    out.append(_check("properties.B_projected",
                      np.count_nonzero(lhs > 0.5 * nu * nv * np.abs(v[:, 0]) * rel), 0,
                      "violations of |<B(u,v),v>| <= |u||v||Pv|/2"))
    return out


def constants(p=CLASSICAL):
    K = p.b**2 * (p.r + p.alpha) ** 2 / (4 * (p.b - 1))
    beta = 2 * (math.sqrt(K) - 1)
    return [
        _check("constants.K", abs(p.K - K) / K, 1e-9),
        _check("constants.beta", abs(p.beta - beta) / beta, 1e-9),
        _check("constants.eta_c", abs(p.eta_c - 4 / K) / (4 / K), 1e-9),
    ]


def attractor_points(n, seed=0, p=CLASSICAL, T=100.0, dt=1e-4):
    """``n`` states sampled from a long trajectory after spin-up."""
    traj = solve(spin_up(p=p), T, dt, p, stride=100)
    idx = make_rng(seed, "probe").choice(len(traj), size=n, replace=False)
    return traj.states[np.sort(idx)]


def attractor_bound(p=CLASSICAL, T=100.0, dt=1e-4):
    traj = solve(spin_up(T_burn=50.0, dt=dt, p=p), T, dt, p)
    return [_check("attractor.radius", np.max(np.sum(traj.states**2, axis=1)), p.K, "max |u|^2 vs K")]


def separation(seed=0, n_pairs=100, delta0=0.1, T=0.05, dt=1e-5, p=CLASSICAL, slack=1.01):
    """Closed-form separation bounds against integrated pairs of nearby solutions."""
    rng = make_rng(seed, "probe")
    starts = attractor_points(n_pairs, seed, p)
    worst = np.zeros(3)
    worst_later = np.zeros(3)  # excluding t = 0, where every bound is an identity
    for v0 in starts:
        d = rng.standard_normal(3)
        d *= delta0 / np.linalg.norm(d)
        v = solve(v0, T, dt, p, scheme="rk4")
        w = solve(v0 + d, T, dt, p, scheme="rk4")
        t = v.times
        delta = w.states - v.states
        dsq = np.sum(delta**2, axis=1)
        pdsq = delta[:, 0] ** 2
        d0, pd0 = dsq[0], pdsq[0]
        sep = pathwise_separation_bound(d0, t, p)
        p_bound, full = lemma_sim_bounds(d0, pd0, t, p)
        ratios = np.array([dsq / sep, pdsq / p_bound, dsq / full])
        worst = np.maximum(worst, ratios.max(axis=1))
        worst_later = np.maximum(worst_later, ratios[:, 1:].max(axis=1))
    names = ("separation.exponential", "separation.observed", "separation.full")
    return [_check(nm, w, slack, f"max ratio to bound; {w1:.6g} over t > 0")
            for nm, w, w1 in zip(names, worst, worst_later)]


def discrete_recursion(seed=0, eta=0.01, eps=0.1, n_members=1000, n_steps=200, h_fraction=0.5,
                     p=CLASSICAL, init_error=10.0):
    """Mean-square one-step recursion at ``h = h_fraction * h_c``."""
    name = f"meansquare.discrete_recursion[h={h_fraction:g}h_c]"
    try:
        lam, h_c = find_lambda_discrete(eta, p)
    except NoContraction as exc:
        return [CheckResult(name, math.nan, math.nan, SKIP, f"no certificate: {exc}")]
    h = h_fraction * h_c
    v0 = spin_up(p=p)
    truth = solve(v0, n_steps * h, h, p)
    cfg = FilterConfigDiscrete(eta=eta, eps=eps, h=h, dt_model=h)
    m0 = perturbed_start(v0, init_error, seed)
    seeds = [derive_seed(seed, i) for i in range(n_members)]
    d, pd = discrete_ensemble(truth, cfg, seeds, m0, p=p)
    norm = d + pd
    mean = norm.mean(axis=0)
    se = norm.std(axis=0, ddof=1) / math.sqrt(n_members)
    excess = mean[1:] - ((1 - lam * h) * mean[:-1] + 2 * eps**2 + 3 * se[1:])
    return [_check(name, excess.max(), 0.0, f"lambda={lam:.6g}, h={h:.6g}")]


def continuous_coercivity(seed=0, eta=None, n=10_000, radius=100.0, p=CLASSICAL):
    eta = 2.0 / p.K if eta is None else eta
    rng = make_rng(seed, "probe")
    delta = uniform_ball(rng, n, radius)
    v = uniform_ball(rng, n, math.sqrt(p.K))
    lhs = error_form(delta, v, eta, p)
    rhs = (1 - eta * p.K / 4) * np.sum(delta**2, axis=1)
    scale = np.maximum(np.sum(delta**2, axis=1), 1e-300)
    return [_check("coercivity.continuous", np.max((rhs - lhs) / scale), 1e-12,
                   "max (rhs - lhs) / |delta|^2")]


def continuous_curve(seed=0, eta=None, eps=0.01, n_members=500, T=20.0, dt=1e-4,
                       record_every=0.1, p=CLASSICAL, init_error=10.0):
    """Ensemble ``E|delta(t)|^2`` under the continuous-time mean-square bound."""
    eta = 2.0 / p.K if eta is None else eta
    name = "meansquare.continuous_bound"
    lam = lambda_continuous(eta, p)
    if not lam > 0:
        return [CheckResult(name, math.nan, math.nan, SKIP, f"no certificate: eta*K = {eta * p.K:.4g} >= 4")]
    v0 = spin_up(p=p)
    truth = solve(v0, T, dt, p)
    m0 = perturbed_start(v0, init_error, seed)
    stride = int(round(record_every / dt))
    cfg = FilterConfigContinuous(eta=eta, eps=eps, dt=dt)
    seeds = [derive_seed(seed, i) for i in range(n_members)]
    t, d = continuous_ensemble(truth, cfg, seeds, m0, p, stride=stride)
    mean = d.mean(axis=0)
    se = d.std(axis=0, ddof=1) / math.sqrt(n_members)
    d0 = float(np.sum((m0 - v0) ** 2))
    bound = np.exp(-lam * t) * d0 + eps**2 / (eta**2 * lam) * (1 - np.exp(-lam * t))
    excess = mean - bound - 3 * se
    return [_check(name, np.max(excess), 0.0,
                   f"lambda={lam:.6g}; {np.max(excess[1:]):.6g} over t > 0")]


def variational(seed=0, n=100, n_dirs=100, step=1e-6, radius=0.1):
    rng = make_rng(seed, "probe")
    worst_grad = 0.0
    worst_drop = -math.inf
    for _ in range(n):
        eta = rng.uniform(0.05, 1.0)
        eps = rng.uniform(0.5, 2.0)
        cfg = FilterConfigDiscrete(eta=eta, eps=eps)
        mf = rng.uniform(-20, 20, 3)
        y = mf[0] + eps * math.sqrt(1 + 1 / eta) * rng.standard_normal()
        m = analysis_update(mf, y, kalman_gain(cfg.model_cov, Gamma=cfg.gamma))
        J = lambda x: variational_objective(x, mf, y, cfg)
        grad = np.array([(J(m + step * e) - J(m - step * e)) / (2 * step) for e in np.eye(3)])
        worst_grad = max(worst_grad, float(np.linalg.norm(grad)))
        dirs = rng.standard_normal((n_dirs, 3))
        dirs *= radius / np.linalg.norm(dirs, axis=1, keepdims=True)
        J0 = J(m)
        worst_drop = max(worst_drop, max(J0 - J(m + dv) for dv in dirs))
    return [
        _check("variational.gradient", worst_grad, 1e-8, "max |grad J| at the analysis"),
        _check("variational.minimum", worst_drop, 0.0, "max decrease of J under perturbation"),
    ]


def run_verify(spec=None, B=bilinear_B):
    """Run every suite; returns the list of CheckResults in a fixed order."""
    seed = 0 if spec is None else spec.seed
    p = CLASSICAL if spec is None else spec.params
    eta = None if spec is None else spec.eta
    eps = None if spec is None else spec.eps
    results = []
    results += operator_properties(seed, p=p, B=B)
    results += constants(p)
    results += attractor_bound(p)
    results += separation(seed, p=p)
    results += discrete_recursion(seed, eta=0.01 if eta is None else eta, eps=0.1 if eps is None else eps, p=p)
    results += continuous_coercivity(seed, eta=eta, p=p)
    results += continuous_curve(seed, eta=eta, eps=0.01 if eps is None else eps, p=p)
    results += variational(seed)
    return results


def render_report(results):
    return "".join(r.line() + "\n" for r in results)
