"""Observation operators and synthetic data for the x-observed Lorenz model.

Only the first component is observed: ``H = (1, 0, 0)``. Data are scalars and
are embedded back into state space through ``H* = (1, 0, 0)^T``.

Random numbers
--------------
Every random draw comes from ``numpy.random.Generator`` on the PCG64 bit
generator, and Gaussian variates from ``Generator.standard_normal``, which
uses the ziggurat method.  Streams are addressed by ``(seed, stream)``
through ``SeedSequence`` spawn keys, so observation noise and initial-state
perturbations never share draws. Ensemble members get their own integer seed
from :func:`derive_seed`.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import csvio
from .dynamics import Trajectory, grid_ratio
from .errors import ConfigError

H = np.array([1.0, 0.0, 0.0])
P = np.diag([1.0, 0.0, 0.0])
Q = np.diag([0.0, 1.0, 1.0])

STREAMS = {"obs": 0, "init": 1, "probe": 2}


def project_P(u):
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    out[..., 0] = u[..., 0]
    return out


def project_Q(u):
    u = np.asarray(u, dtype=np.float64)
    out = u.copy()
    out[..., 0] = 0.0
    return out


def make_rng(seed, stream="obs"):
    """Generator for one named random stream of a seed."""
    key = STREAMS[stream] if isinstance(stream, str) else int(stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))


def derive_seed(master_seed, index):
    """Deterministic per-task seed from ``(master_seed, index)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(1000, int(index)))
    return int(ss.generate_state(1, np.uint64)[0])


def standard_normals(seed, n, stream="obs"):
    return make_rng(seed, stream).standard_normal(n)


@dataclass(frozen=True)
class ObsConfig:
    eps: float
    h: float
    seed: int = 0

    def __post_init__(self):
        # eps == 0 is accepted: it gives noiseless data, used for synchronisation checks
        if not (math.isfinite(self.eps) and self.eps >= 0):
            raise ConfigError(f"eps must be >= 0, got {self.eps}")
        if not self.h > 0:
            raise ConfigError(f"h must be > 0, got {self.h}")


@dataclass(frozen=True)
class DiscreteData:
    """Observations ``y_k = v_x(t_k) + eps xi_k`` for ``k = 1..n``."""

    times: np.ndarray
    values: np.ndarray

    @property
    def h(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else float(self.times[0])

    def __len__(self):
        return len(self.values)

    def to_csv(self, path, comments=()):
        return csvio.write_csv(path, ["t", "y"], {"t": self.times, "y": self.values}, comments)

    @classmethod
    def from_csv(cls, path):
        d = csvio.read_csv(path, required=("t", "y"))
        return cls(d["t"], d["y"])


@dataclass(frozen=True)
class ContinuousData:
    """Integrated observation increments on a grid of spacing ``dt``.

    ``increments[k]`` is ``z(t_{k+1}) - z(t_k)``, and ``z(t_0) = 0``.
    """

    t0: float
    dt: float
    increments: np.ndarray

    @property
    def z(self):
        return np.concatenate([[0.0], np.cumsum(self.increments)])

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.increments) + 1)

    def __len__(self):
        return len(self.increments)

    def to_csv(self, path, comments=()):
        return csvio.write_csv(path, ["t", "z"], {"t": self.times, "z": self.z}, comments)

    @classmethod
    def from_csv(cls, path):
        d = csvio.read_csv(path, required=("t", "z"))
        t, z = d["t"], d["z"]
        if len(t) < 2:
            raise ConfigError("continuous data needs at least two records")
        return cls(float(t[0]), float(t[1] - t[0]), np.diff(z))


def observe_discrete(truth: Trajectory, cfg: ObsConfig) -> DiscreteData:
    stride = grid_ratio(cfg.h, truth.dt)
    states = truth.states[stride::stride]
    if len(states) == 0:
        raise ConfigError("truth is shorter than one observation interval")
    times = truth.t0 + truth.dt * stride * np.arange(1, len(states) + 1)
    xi = standard_normals(cfg.seed, len(states))
    return DiscreteData(times, states[:, 0] + cfg.eps * xi)


def observe_continuous(truth: Trajectory, cfg: ObsConfig) -> ContinuousData:
    """Increments ``dt v_x(t_k) + eps sqrt(dt) gamma_k`` on the grid ``cfg.h``.

    ``cfg.h`` plays the role of the integration step ``dt`` here.
    """
    stride = grid_ratio(cfg.h, truth.dt)
    vx = truth.states[::stride, 0]
    if len(vx) < 2:
        raise ConfigError("truth is shorter than one observation interval")
    dt = truth.dt * stride
    gamma = standard_normals(cfg.seed, len(vx) - 1)
    return ContinuousData(truth.t0, dt, dt * vx[:-1] + cfg.eps * math.sqrt(dt) * gamma)
