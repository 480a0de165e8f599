"""Discrete-time 3DVAR with a fixed forecast covariance.

With ``H = (1, 0, 0)``, ``C = eps**2 / eta * I`` and ``Gamma = eps**2`` the gain
is ``H* / (1 + eta)`` and the analysis reduces to

    m+ = (eta / (1 + eta)) P m_f + Q m_f + y / (1 + eta) H*

so the unobserved components pass through the analysis untouched and only
the model dynamics can correct them.
"""

from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np
from numba import njit

from . import csvio
from .dynamics import (
    CLASSICAL,
    OVERFLOW_GUARD,
    Trajectory,
    _escaped,
    _params_tuple,
    _scheme_code,
    _step,
    as_state,
    grid_ratio,
)
from .errors import ConfigError, Divergence, GridMismatch, SingularInnovation
from .observation import H, DiscreteData, ObsConfig, make_rng, observe_discrete, project_P
from .parallel import ordered_map


@dataclass(frozen=True)
class FilterConfigDiscrete:
    """3DVAR instance.

    ``obs_var`` overrides the observation variance ``Gamma`` (default ``eps**2``);
    the small-``h`` limit uses ``eps**2 / h``.
    """

    eta: float = 0.1
    eps: float = 0.01
    h: float = 0.01
    dt_model: float = 1e-4
    obs_var: float | None = None
    scheme: str = "explicit_euler"

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be >= 0, got {self.eps}")
        if not (self.h > 0 and self.dt_model > 0):
            raise ConfigError("h and dt_model must be positive")
        if self.obs_var is not None and not self.obs_var > 0:
            raise ConfigError("obs_var must be positive")
        grid_ratio(self.h, self.dt_model)
        _scheme_code(self.scheme)

    @property
    def steps_per_obs(self):
        return grid_ratio(self.h, self.dt_model)

    @property
    def gain(self):
        """Scalar ``g`` with ``G = g H*``."""
        if self.obs_var is None:
            return 1.0 / (1.0 + self.eta)
        c = self.eps**2 / self.eta
        return c / (self.obs_var + c)

    @property
    def model_cov(self):
        return self.eps**2 / self.eta * np.eye(3)

    @property
    def gamma(self):
        return self.eps**2 if self.obs_var is None else self.obs_var


class ErrorRecord(NamedTuple):
    t: float
    delta_sq: float
    p_delta_sq: float
    norm_sq: float


@dataclass(frozen=True)
class ErrorSeries:
    """Columns of ErrorRecords; ``norm_sq = |delta|^2 + |P delta|^2``."""

    t: np.ndarray
    delta_sq: np.ndarray
    p_delta_sq: np.ndarray

    @classmethod
    def from_states(cls, t, means, truth_states):
        d = np.asarray(means) - np.asarray(truth_states)
        return cls(np.asarray(t, dtype=np.float64), np.sum(d * d, axis=-1), d[..., 0] ** 2)

    @property
    def norm_sq(self):
        return self.delta_sq + self.p_delta_sq

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k):
        return ErrorRecord(float(self.t[k]), float(self.delta_sq[k]),
                           float(self.p_delta_sq[k]), float(self.norm_sq[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    COLUMNS = ("t", "delta_sq", "p_delta_sq", "norm_sq")

    def columns(self):
        return {"t": self.t, "delta_sq": self.delta_sq, "p_delta_sq": self.p_delta_sq,
                "norm_sq": self.norm_sq}

    def to_csv(self, path, comments=()):
        return csvio.write_csv(path, self.COLUMNS, self.columns(), comments)


def kalman_gain(C, H=H, Gamma=1.0):
    """``G = C H* (Gamma + H C H*)^-1`` for a single scalar observation."""
    C = np.asarray(C, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    S = float(Gamma) + H @ C @ H
    if not S > 0:
        raise SingularInnovation(f"innovation variance {S} is not positive")
    return C @ H / S


def analysis_update(forecast_mean, y, G, H=H):
    """``(I - G H) m_f + G y``; broadcasts over leading axes of ``forecast_mean``."""
    mf = np.asarray(forecast_mean, dtype=np.float64)
    innovation = np.asarray(y, dtype=np.float64) - mf @ np.asarray(H)
    return mf + np.multiply.outer(innovation, np.asarray(G))


def analysis_update_lorenz(forecast_mean, y, eta):
    """Closed form of the analysis for the x-observed model."""
    mf = np.asarray(forecast_mean, dtype=np.float64)
    out = mf.copy()
    out[..., 0] = (eta / (1.0 + eta)) * mf[..., 0] + np.asarray(y) / (1.0 + eta)
    return out


def variational_objective(m, forecast_mean, y, cfg=None, *, C=None, Gamma=None, H=H):
    """``1/2 |C^-1/2 (m - m_f)|^2 + 1/2 |Gamma^-1/2 (y - H m)|^2``.

    Covariances come from ``cfg`` unless given explicitly.
    """
    if C is None:
        C = cfg.model_cov
    if Gamma is None:
        Gamma = cfg.gamma
    d = np.asarray(m, dtype=np.float64) - np.asarray(forecast_mean, dtype=np.float64)
    r = float(y) - float(np.asarray(H) @ np.asarray(m, dtype=np.float64))
    return 0.5 * float(d @ np.linalg.solve(np.asarray(C), d)) + 0.5 * r * r / float(Gamma)


@njit(cache=True, nogil=True)
def _filter_kernel(m0, y, steps, dt, alpha, b, r, scheme, gain, guard, means, forecasts):
    x, yy, z = m0[0], m0[1], m0[2]
    means[0, 0] = x
    means[0, 1] = yy
    means[0, 2] = z
    for k in range(len(y)):
        for _ in range(steps):
            x, yy, z = _step(x, yy, z, dt, alpha, b, r, scheme)
        if _escaped(x, yy, z, guard):
            return k + 1
        forecasts[k, 0] = x
        forecasts[k, 1] = yy
        forecasts[k, 2] = z
        x = x + gain * (y[k] - x)
        means[k + 1, 0] = x
        means[k + 1, 1] = yy
        means[k + 1, 2] = z
    return -1


@dataclass(frozen=True)
class DiscreteRun:
    times: np.ndarray  # analysis times t_0 .. t_n
    means: np.ndarray  # m_0 .. m_n
    forecasts: np.ndarray  # Psi(m_0) .. Psi(m_{n-1}), i.e. states at t_1^- .. t_n^-
    errors: ErrorSeries  # post-analysis delta(t_k), k = 0..n
    forecast_errors: ErrorSeries  # pre-analysis delta(t_k^-), k = 1..n

    def means_csv(self, path, comments=()):
        cols = {"t": self.times, "mx": self.means[:, 0], "my": self.means[:, 1],
                "mz": self.means[:, 2]}
        return csvio.write_csv(path, ["t", "mx", "my", "mz"], cols, comments)


def _observation_truth(truth, h, n_data):
    stride = grid_ratio(h, truth.dt)
    obs = truth.states[::stride]
    if len(obs) < n_data + 1:
        raise GridMismatch(f"truth covers {len(obs) - 1} observation times, data has {n_data}")
    return obs[: n_data + 1]


def run_filter(truth: Trajectory, data: DiscreteData, m0, cfg: FilterConfigDiscrete,
               p=CLASSICAL, guard=OVERFLOW_GUARD) -> DiscreteRun:
    """Iterate forecast/analysis over the data and score against ``truth``."""
    m0 = as_state(m0)
    y = np.ascontiguousarray(data.values, dtype=np.float64)
    v = _observation_truth(truth, cfg.h, len(y))
    times = truth.t0 + cfg.h * np.arange(len(y) + 1)
    if len(y) and not np.allclose(data.times, times[1:], rtol=0, atol=1e-9 * cfg.h + 1e-12 * abs(times[-1])):
        raise GridMismatch("data times are not aligned with the observation grid of the truth")
    means = np.empty((len(y) + 1, 3))
    forecasts = np.empty((len(y), 3))
    bad = _filter_kernel(m0, y, cfg.steps_per_obs, cfg.dt_model, *_params_tuple(p),
                         _scheme_code(cfg.scheme), cfg.gain, guard, means, forecasts)
    if bad >= 0:
        raise Divergence(f"filter forecast escaped the guard before observation {bad}", step=bad)
    return DiscreteRun(
        times=times,
        means=means,
        forecasts=forecasts,
        errors=ErrorSeries.from_states(times, means, v),
        forecast_errors=ErrorSeries.from_states(times[1:], forecasts, v[1:]),
    )


def perturbed_start(v0, size=10.0, seed=0):
    """``v0`` plus a perturbation of norm ``size`` in a uniformly random direction."""
    d = make_rng(seed, "init").standard_normal(3)
    return as_state(v0) + size * d / np.linalg.norm(d)


def assimilate(truth, cfg, seed, m0=None, init_size=10.0, p=CLASSICAL):
    """Synthesize data from ``truth`` with ``seed`` and run the filter."""
    data = observe_discrete(truth, ObsConfig(cfg.eps, cfg.h, seed))
    if m0 is None:
        m0 = perturbed_start(truth.states[0], init_size, seed)
    return run_filter(truth, data, m0, cfg, p)


def ensemble_errors(truth, cfg, seeds, m0=None, init_size=10.0, p=CLASSICAL, workers=1):
    """Post-analysis ``|delta_k|^2`` and ``|P delta_k|^2`` per member, shape (N, n + 1).

    Each member draws its own noise (and initial perturbation, unless ``m0``
    is shared) from its seed; the truth is common to all members.
    """

    def member(seed):
        e = assimilate(truth, cfg, seed, m0, init_size, p).errors
        return e.delta_sq, e.p_delta_sq

    out = ordered_map(member, seeds, workers)
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])

