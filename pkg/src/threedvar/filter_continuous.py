"""Continuous-time 3DVAR, integrated with Euler-Maruyama.

With ``C = eps**2 / eta * I`` and ``Gamma_0 = eps**2`` the filter is the nudged SDE

    dm = (-A m - B(m, m) + f + P (v - m) / eta) dt + (eps / eta) P dw

The noise is a scalar Brownian motion entering through the observed (x)
component only.
"""

from dataclasses import dataclass, replace
import math

import numpy as np
from numba import njit

from . import csvio
from .dynamics import (
    CLASSICAL,
    OVERFLOW_GUARD,
    Trajectory,
    _escaped,
    _params_tuple,
    _rhs,
    apply_A,
    as_state,
    bilinear_B,
    grid_ratio,
    vector_field,
)
from .errors import ConfigError, Divergence, GridMismatch
from .filter_discrete import ErrorSeries
from .observation import ContinuousData, ObsConfig, observe_continuous, project_P
from .parallel import ordered_map


@dataclass(frozen=True)
class FilterConfigContinuous:
    eta: float = 0.1
    eps: float = 0.01
    dt: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError(f"eta must be positive and finite, got {self.eta}")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be >= 0, got {self.eps}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")

    @property
    def nudging_rate(self):
        return 1.0 / self.eta

    @property
    def noise_amplitude(self):
        return self.eps / self.eta


def drift(m, v, p=CLASSICAL, cfg=None, *, eta=None):
    """``-A m - B(m, m) + f + P (v - m) / eta``."""
    eta = cfg.eta if eta is None else eta
    m = np.asarray(m, dtype=np.float64)
    return vector_field(m, p) + project_P(np.asarray(v, dtype=np.float64) - m) / eta


def em_step(m, v, dt, cfg, rng=None, p=CLASSICAL, xi=None, guard=OVERFLOW_GUARD):
    """One Euler-Maruyama step; ``xi`` (standard normal) is drawn from ``rng`` if omitted."""
    m = as_state(m)
    if xi is None:
        xi = rng.standard_normal(m.shape[:-1])
    out = m + dt * drift(m, v, p, cfg)
    out[..., 0] += cfg.noise_amplitude * math.sqrt(dt) * np.asarray(xi)
    if not np.all(np.abs(out) <= guard):
        raise Divergence(f"filter state escaped |m_i| <= {guard:g}", step=1)
    return out


@njit(cache=True, nogil=True)
def _em_kernel(m0, truth, dz, dt, inv_eta, alpha, b, r, guard, stride, means, dsq, pdsq):
    """Integrate the data-driven form ``dm = F(m) dt + (dz - m_x dt) / eta``.

    ``truth`` is only used for scoring; results are stored every ``stride`` steps.
    """
    x, y, z = m0[0], m0[1], m0[2]
    j = 0
    for n in range(len(dz) + 1):
        if n % stride == 0:
            means[j, 0] = x
            means[j, 1] = y
            means[j, 2] = z
            ex = x - truth[n, 0]
            ey = y - truth[n, 1]
            ez = z - truth[n, 2]
            dsq[j] = ex * ex + ey * ey + ez * ez
            pdsq[j] = ex * ex
            j += 1
        if n == len(dz):
            break
        fx, fy, fz = _rhs(x, y, z, alpha, b, r)
        x = x + dt * fx + inv_eta * (dz[n] - dt * x)
        y = y + dt * fy
        z = z + dt * fz
        if _escaped(x, y, z, guard):
            return n + 1
    return -1


@dataclass(frozen=True)
class ContinuousRun:
    times: np.ndarray
    means: np.ndarray
    errors: ErrorSeries

    def means_csv(self, path, comments=()):
        cols = {"t": self.times, "mx": self.means[:, 0], "my": self.means[:, 1],
                "mz": self.means[:, 2]}
        return csvio.write_csv(path, ["t", "mx", "my", "mz"], cols, comments)


def run_continuous(truth: Trajectory, m0, cfg: FilterConfigContinuous, p=CLASSICAL,
                   data: ContinuousData | None = None, stride=1,
                   guard=OVERFLOW_GUARD) -> ContinuousRun:
    """Run the filter along ``truth``.

    Without ``data``, observations are synthesized from the truth with
    ``cfg.seed``: ``dz_k = dt v_x(t_k) + eps sqrt(dt) xi_k``, which is the
    truth-substituted SDE with Brownian increments ``sqrt(dt) xi_k``.
    """
    if abs(truth.dt - cfg.dt) > 1e-12 * cfg.dt:
        raise GridMismatch(f"truth dt {truth.dt!r} differs from filter dt {cfg.dt!r}")
    if data is None:
        data = observe_continuous(truth, ObsConfig(cfg.eps, cfg.dt, cfg.seed))
    elif abs(data.dt - cfg.dt) > 1e-12 * cfg.dt:
        raise GridMismatch(f"data dt {data.dt!r} differs from filter dt {cfg.dt!r}")
    dz = np.ascontiguousarray(data.increments, dtype=np.float64)
    if len(truth) < len(dz) + 1:
        raise GridMismatch(f"truth has {len(truth)} states, data needs {len(dz) + 1}")
    if len(dz) % stride:
        raise ConfigError(f"{len(dz)} steps is not a multiple of stride {stride}")
    n_out = len(dz) // stride + 1
    means = np.empty((n_out, 3))
    dsq = np.empty(n_out)
    pdsq = np.empty(n_out)
    bad = _em_kernel(as_state(m0), truth.states, dz, cfg.dt, 1.0 / cfg.eta,
                     *_params_tuple(p), guard, stride, means, dsq, pdsq)
    if bad >= 0:
        raise Divergence(f"filter escaped the guard at step {bad} (dt={cfg.dt:g}, eta={cfg.eta:g})",
                         step=bad)
    times = truth.t0 + cfg.dt * stride * np.arange(n_out)
    return ContinuousRun(times, means, ErrorSeries(times, dsq, pdsq))


def ensemble_errors(truth, cfg, seeds, m0, p=CLASSICAL, stride=1, workers=1):
    """``|delta(t)|^2`` per member at every ``stride``-th step, shape (N, n_out).

    All members share the truth and ``m0``; member ``i`` uses noise seed ``seeds[i]``.
    """
    def member(seed):
        return run_continuous(truth, m0, replace(cfg, seed=int(seed)), p, stride=stride).errors

    runs = ordered_map(member, seeds, workers)
    return runs[0].t, np.array([e.delta_sq for e in runs])


def error_form(delta, v, eta, p=CLASSICAL):
    """``<A d + 2 B(v, d) + B(d, d) + P d / eta, d>`` for error ``d`` about truth ``v``."""
    d = np.asarray(delta, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = apply_A(d, p) + 2.0 * bilinear_B(v, d) + bilinear_B(d, d) + project_P(d) / eta
    return np.sum(w * d, axis=-1)
