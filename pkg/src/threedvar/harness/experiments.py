"""Reference experiments: error decay runs and log-log slope studies."""

from dataclasses import dataclass, replace

import numpy as np

from .. import csvio
from ..dynamics import DEFAULT_START, grid_ratio, solve, spin_up
from ..errors import ConfigError
from ..filter_continuous import FilterConfigContinuous, run_continuous
from ..filter_continuous import ensemble_errors as continuous_ensemble
from ..filter_discrete import FilterConfigDiscrete, assimilate, perturbed_start
from ..filter_discrete import ensemble_errors as discrete_ensemble
from ..observation import derive_seed
from ..parallel import ordered_map

THRESHOLD_FACTOR = 3.0


def initial_truth_state(spec):
    return spin_up(DEFAULT_START, spec.t_burn, spec.dt, spec.params)


def make_truth(spec, horizon=None, v0=None):
    if v0 is None:
        v0 = initial_truth_state(spec)
    return solve(v0, spec.horizon if horizon is None else horizon, spec.dt, spec.params)


def discrete_config(spec, eps=None):
    return FilterConfigDiscrete(eta=spec.resolved("eta"), eps=spec.resolved("eps") if eps is None else eps,
                                h=spec.h, dt_model=spec.dt)


def continuous_config(spec, eps=None, seed=None):
    return FilterConfigContinuous(eta=spec.resolved("eta"),
                                  eps=spec.resolved("eps") if eps is None else eps,
                                  dt=spec.dt, seed=spec.seed if seed is None else seed)


def _record_stride(spec):
    return grid_ratio(spec.record_every, spec.dt)


def run_filter_once(spec, truth, eps=None, seed=None):
    """ErrorSeries for one filter path (discrete or continuous per ``spec.kind``)."""
    seed = spec.seed if seed is None else seed
    if spec.continuous:
        m0 = perturbed_start(truth.states[0], spec.init_error, seed)
        cfg = continuous_config(spec, eps, seed)
        stride = _record_stride(spec)
        n = len(truth) - 1
        if n % stride:
            raise ConfigError("horizon must be a multiple of record_every")
        return run_continuous(truth, m0, cfg, spec.params, stride=stride).errors
    return assimilate(truth, discrete_config(spec, eps), seed, None, spec.init_error, spec.params).errors


def envelope_is_monotone(t, err, window=1.0, floor=1e-10):
    """True if maxima of ``err`` over consecutive windows never increase above ``floor``."""
    t = np.asarray(t)
    err = np.asarray(err)
    edges = np.arange(t[0], t[-1] + window, window)
    idx = np.searchsorted(t, edges)
    peaks = [err[a:b].max() for a, b in zip(idx[:-1], idx[1:]) if b > a]
    peaks = np.maximum(peaks, floor)
    return bool(np.all(np.diff(peaks) <= 1e-12 * peaks[:-1]))


@dataclass(frozen=True)
class DecayResult:
    errors: object  # ErrorSeries
    eps: float
    eta: float
    time_to_threshold: float  # first t with |delta| < 3 eps (nan if never)
    fraction_below: float  # share of records after the threshold time that stay below
    tail_mse: float  # time average of |delta|^2 over the burn-in tail
    monotone_envelope: bool

    def summary(self):
        return (
            f"eps={self.eps!r} eta={self.eta!r} time_to_threshold={self.time_to_threshold!r} "
            f"fraction_below={self.fraction_below!r} tail_mse={self.tail_mse!r} "
            f"monotone_envelope={str(self.monotone_envelope).lower()}"
        )


def run_decay(spec, workers=1, truth=None):
    if not spec.kind.startswith("decay"):
        raise ConfigError(f"run_decay needs a decay kind, got {spec.kind!r}")
    truth = make_truth(spec) if truth is None else truth
    eps = spec.resolved("eps")
    errors = run_filter_once(spec, truth)
    d = np.sqrt(errors.delta_sq)
    below = d < THRESHOLD_FACTOR * eps
    if below.any():
        k = int(np.argmax(below))
        t_hit = float(errors.t[k])
        frac = float(below[k:].mean())
    else:
        t_hit, frac = float("nan"), 0.0
    tail = errors.t >= errors.t[0] + spec.burn_in * spec.horizon
    return DecayResult(errors, eps, spec.resolved("eta"), t_hit, frac,
                       float(errors.delta_sq[tail].mean()), envelope_is_monotone(errors.t, d))


def write_decay(result, spec, path):
    comments = spec.header_lines() + [result.summary()]
    return result.errors.to_csv(path, comments)


@dataclass(frozen=True)
class SlopeResult:
    eps: np.ndarray
    mse_time: np.ndarray | None
    mse_ensemble: np.ndarray | None
    se_ensemble: np.ndarray | None
    fits: dict  # mode -> (slope, intercept, residual_norm)
    averaging: str

    COLUMNS = ("eps", "mse_time", "mse_ensemble", "se_ensemble")

    def columns(self):
        nan = np.full(len(self.eps), np.nan)
        return {
            "eps": self.eps,
            "mse_time": nan if self.mse_time is None else self.mse_time,
            "mse_ensemble": nan if self.mse_ensemble is None else self.mse_ensemble,
            "se_ensemble": nan if self.se_ensemble is None else self.se_ensemble,
        }

    def summary_lines(self):
        return [f"fit {mode}: slope={s!r} intercept={c!r} residual={res!r}"
                for mode, (s, c, res) in self.fits.items()]

    def to_csv(self, path, comments=()):
        return csvio.write_csv(path, self.COLUMNS, self.columns(), list(comments) + self.summary_lines())


def loglog_fit(eps, mse):
    """Least-squares line through ``(log eps, log mse)``: ``(slope, intercept, residual norm)``."""
    x = np.log(np.asarray(eps, dtype=np.float64))
    y = np.log(np.asarray(mse, dtype=np.float64))
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.linalg.norm(y - X @ coef))
    return float(coef[0]), float(coef[1]), resid


def time_averaged_mse(spec, truth, eps, seed):
    errors = run_filter_once(spec, truth, eps, seed)
    tail = errors.t >= errors.t[0] + spec.burn_in * spec.horizon
    return float(errors.delta_sq[tail].mean())


def ensemble_mse(spec, truth, eps, seeds, workers=1):
    """Mean and standard error of ``|delta|^2`` at the final record time.

    Members share the truth and the initial estimate and differ only in
    their observation noise.
    """
    m0 = perturbed_start(truth.states[0], spec.init_error, spec.seed)
    if spec.continuous:
        n = len(truth) - 1
        _, d = continuous_ensemble(truth, continuous_config(spec, eps), seeds, m0, spec.params,
                                   stride=n, workers=workers)
    else:
        d, _ = discrete_ensemble(truth, discrete_config(spec, eps), seeds, m0, spec.init_error,
                                 spec.params, workers)
    final = d[:, -1]
    se = final.std(ddof=1) / np.sqrt(len(final)) if len(final) > 1 else np.nan
    return float(final.mean()), float(se)


def member_seeds(master_seed, n, offset=0):
    return [derive_seed(master_seed, offset + i) for i in range(n)]


def run_slope(spec, workers=1):
    if not spec.kind.startswith("slope"):
        raise ConfigError(f"run_slope needs a slope kind, got {spec.kind!r}")
    v0 = initial_truth_state(spec)
    eps = np.array(spec.eps_grid)
    mse_t = mse_e = se_e = None
    fits = {}
    if spec.averaging in ("time", "both"):
        truth = make_truth(spec, v0=v0)
        seeds = member_seeds(spec.seed, len(eps), offset=10**6)
        mse_t = np.array(ordered_map(lambda j: time_averaged_mse(spec, truth, eps[j], seeds[j]),
                                     range(len(eps)), workers))
        fits["time"] = loglog_fit(eps, mse_t)
    if spec.averaging in ("ensemble", "both"):
        ens_spec = replace(spec, horizon=spec.ensemble_horizon)
        truth = make_truth(ens_spec, v0=v0)
        seeds = member_seeds(spec.seed, spec.ensemble)
        stats = [ensemble_mse(ens_spec, truth, e, seeds, workers) for e in eps]
        mse_e = np.array([s[0] for s in stats])
        se_e = np.array([s[1] for s in stats])
        fits["ensemble"] = loglog_fit(eps, mse_e)
    return SlopeResult(eps, mse_t, mse_e, se_e, fits, spec.averaging)


def write_slope(result, spec, path):
    return result.to_csv(path, spec.header_lines())
