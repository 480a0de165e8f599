"""Lorenz '63 in shifted operator form.

The shifted coordinates move the origin to ``(0, 0, -(r + alpha))`` so that
the model reads ``du/dt + A u + B(u, u) = f`` with

    A = [[alpha, -alpha, 0], [alpha, 1, 0], [0, 0, b]]
    f = (0, 0, -b (r + alpha))
    B(u, v) = (0, (u_x v_z + u_z v_x) / 2, -(u_x v_y + u_y v_x) / 2)

States are plain float64 arrays whose last axis has length 3. All the
array-level functions broadcast over leading axes, which is how ensembles
are handled outside the compiled kernels.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from numba import njit

from .errors import ConfigError, Divergence, GridMismatch

OVERFLOW_GUARD = 1.0e6
DEFAULT_DT = 1.0e-4
DEFAULT_BURN = 50.0
DEFAULT_START = (1.0, 1.0, 1.0)

SCHEMES = {"explicit_euler": 0, "rk4": 1}


@dataclass(frozen=True)
class LorenzParams:
    alpha: float = 10.0
    b: float = 8.0 / 3.0
    r: float = 28.0
    K: float = field(init=False, repr=False)
    beta: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("alpha", "b", "r"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value}")
        if not (self.alpha > 1 and self.b > 1 and self.r > 0):
            raise ConfigError(
                f"need alpha > 1, b > 1, r > 0; got alpha={self.alpha}, b={self.b}, r={self.r}"
            )
        K = self.b**2 * (self.r + self.alpha) ** 2 / (4.0 * (self.b - 1.0))
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "beta", 2.0 * (math.sqrt(K) - 1.0))

    @property
    def A(self):
        return np.array(
            [[self.alpha, -self.alpha, 0.0], [self.alpha, 1.0, 0.0], [0.0, 0.0, self.b]]
        )

    @property
    def f(self):
        return np.array([0.0, 0.0, -self.b * (self.r + self.alpha)])

    @property
    def equilibrium(self):
        """The shifted-origin fixed point ``(0, 0, -(r + alpha))``."""
        return np.array([0.0, 0.0, -(self.r + self.alpha)])

    @property
    def eta_c(self):
        """Critical inflation ratio ``4 / K`` of the continuous-time theory."""
        return 4.0 / self.K


CLASSICAL = LorenzParams()


def as_state(u):
    """Coerce to a float64 array with trailing axis 3, rejecting non-finite values."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1:] != (3,):
        raise ValueError(f"state must have trailing dimension 3, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("state has non-finite components")
    return u


@dataclass(frozen=True)
class Trajectory:
    """States sampled on the uniform grid ``t0 + k dt``."""

    t0: float
    dt: float
    states: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("trajectory dt must be positive")
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != 3 or len(states) < 1:
            raise ValueError(f"states must have shape (n >= 1, 3), got {states.shape}")
        object.__setattr__(self, "states", states)

    def __len__(self):
        return len(self.states)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.states))

    @property
    def end(self):
        return self.states[-1].copy()

    @property
    def duration(self):
        return self.dt * (len(self.states) - 1)

    def subsample(self, h):
        """Return the trajectory on the coarser grid of spacing ``h``."""
        stride = grid_ratio(h, self.dt)
        return Trajectory(self.t0, stride * self.dt, self.states[::stride])


def grid_ratio(coarse, fine, rtol=1e-12):
    """Integer ``n`` with ``coarse == n * fine``, else raise GridMismatch."""
    if coarse <= 0 or fine <= 0:
        raise GridMismatch(f"grid spacings must be positive (got {coarse}, {fine})")
    n = round(coarse / fine)
    if n < 1 or abs(n * fine - coarse) > rtol * coarse:
        raise GridMismatch(f"spacing {coarse!r} is not an integer multiple of {fine!r}")
    return int(n)


def n_steps(T, dt):
    """Number of ``dt`` steps covering ``T``; tolerant of float noise in ``T / dt``."""
    return int(math.ceil(T / dt - 1e-9))


# --- operators ---------------------------------------------------------------


def apply_A(u, p=CLASSICAL):
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    out[..., 0] = p.alpha * (u[..., 0] - u[..., 1])
    out[..., 1] = p.alpha * u[..., 0] + u[..., 1]
    out[..., 2] = p.b * u[..., 2]
    return out


def bilinear_B(u, v):
    """Symmetric bilinear term ``B(u, v)``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    ux, uy, uz = u[..., 0], u[..., 1], u[..., 2]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    out = np.empty(np.broadcast_shapes(u.shape, v.shape))
    out[..., 0] = 0.0
    out[..., 1] = 0.5 * (ux * vz + uz * vx)
    out[..., 2] = -0.5 * (ux * vy + uy * vx)
    return out


def vector_field(u, p=CLASSICAL):
    """Return ``f - A u - B(u, u)``."""
    u = np.asarray(u, dtype=np.float64)
    return p.f - apply_A(u, p) - bilinear_B(u, u)


def vector_field_components(u, p=CLASSICAL):
    """Componentwise right-hand side in the shifted coordinates."""
    u = np.asarray(u, dtype=np.float64)
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    return np.stack(
        [
            p.alpha * (y - x),
            -p.alpha * x - y - x * z,
            x * y - p.b * z - p.b * (p.r + p.alpha),
        ],
        axis=-1,
    )


# --- compiled kernels --------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _rhs(x, y, z, alpha, b, r):
    return alpha * (y - x), -alpha * x - y - x * z, x * y - b * z - b * (r + alpha)


@njit(cache=True, nogil=True, inline="always")
def _step(x, y, z, dt, alpha, b, r, scheme):
    if scheme == 0:
        fx, fy, fz = _rhs(x, y, z, alpha, b, r)
        return x + dt * fx, y + dt * fy, z + dt * fz
    k1x, k1y, k1z = _rhs(x, y, z, alpha, b, r)
    h2 = 0.5 * dt
    k2x, k2y, k2z = _rhs(x + h2 * k1x, y + h2 * k1y, z + h2 * k1z, alpha, b, r)
    k3x, k3y, k3z = _rhs(x + h2 * k2x, y + h2 * k2y, z + h2 * k2z, alpha, b, r)
    k4x, k4y, k4z = _rhs(x + dt * k3x, y + dt * k3y, z + dt * k3z, alpha, b, r)
    s = dt / 6.0
    return (
        x + s * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + s * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        z + s * (k1z + 2.0 * k2z + 2.0 * k3z + k4z),
    )


@njit(cache=True, nogil=True, inline="always")
def _escaped(x, y, z, guard):
    # also catches NaN, since comparisons with NaN are false
    return not (abs(x) <= guard and abs(y) <= guard and abs(z) <= guard)


@njit(cache=True, nogil=True)
def _integrate(u0, nsteps, dt, alpha, b, r, scheme, guard, stride, out):
    """Fill ``out[j]`` with the state after ``j * stride`` steps.

    Returns the index of the first escaping step, or -1.
    """
    x, y, z = u0[0], u0[1], u0[2]
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    j = 1
    for n in range(1, nsteps + 1):
        x, y, z = _step(x, y, z, dt, alpha, b, r, scheme)
        if _escaped(x, y, z, guard):
            return n
        if n % stride == 0:
            out[j, 0] = x
            out[j, 1] = y
            out[j, 2] = z
            j += 1
    return -1


def _scheme_code(scheme):
    try:
        return SCHEMES[scheme]
    except KeyError:
        raise ConfigError(f"unknown scheme {scheme!r}; expected one of {sorted(SCHEMES)}") from None


def _params_tuple(p):
    return float(p.alpha), float(p.b), float(p.r)


# --- integration -------------------------------------------------------------


def step(u, dt, p=CLASSICAL, scheme="explicit_euler", guard=OVERFLOW_GUARD):
    """Advance a state (or a stack of states) by one step of size ``dt``."""
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    u = as_state(u)
    code = _scheme_code(scheme)
    if code == 0:
        out = u + dt * vector_field(u, p)
    else:
        k1 = vector_field(u, p)
        k2 = vector_field(u + 0.5 * dt * k1, p)
        k3 = vector_field(u + 0.5 * dt * k2, p)
        k4 = vector_field(u + dt * k3, p)
        out = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.abs(out) <= guard):
        raise Divergence(f"state escaped |u_i| <= {guard:g} with dt={dt:g}", step=1)
    return out


def solve(u0, T, dt=DEFAULT_DT, p=CLASSICAL, scheme="explicit_euler", t0=0.0,
          stride=1, guard=OVERFLOW_GUARD):
    """Integrate from ``u0`` over ``[t0, t0 + T]`` with fixed step ``dt``.

    Returns a Trajectory of ``ceil(T / dt) + 1`` states (fewer if ``stride`` > 1,
    in which case every ``stride``-th state is kept and the step count must be
    a multiple of ``stride``).
    """
    if not (T > 0 and dt > 0):
        raise ConfigError(f"need T > 0 and dt > 0, got T={T}, dt={dt}")
    if dt > T * (1 + 1e-12):
        raise ConfigError(f"dt={dt} exceeds the horizon T={T}")
    u0 = as_state(u0)
    n = n_steps(T, dt)
    if n % stride:
        raise ConfigError(f"{n} steps is not a multiple of stride {stride}")
    out = np.empty((n // stride + 1, 3))
    bad = _integrate(u0, n, dt, *_params_tuple(p), _scheme_code(scheme), guard, stride, out)
    if bad >= 0:
        raise Divergence(f"state escaped |u_i| <= {guard:g} at step {bad} (dt={dt:g})", step=bad)
    return Trajectory(t0, dt * stride, out)


@njit(cache=True, nogil=True)
def _advance(u0, nsteps, dt, alpha, b, r, scheme, guard, out):
    x, y, z = u0[0], u0[1], u0[2]
    for n in range(1, nsteps + 1):
        x, y, z = _step(x, y, z, dt, alpha, b, r, scheme)
        if _escaped(x, y, z, guard):
            return n
    out[0] = x
    out[1] = y
    out[2] = z
    return -1


def advance(u0, nsteps, dt, p=CLASSICAL, scheme="explicit_euler", guard=OVERFLOW_GUARD):
    """End state after ``nsteps`` steps, without storing the path."""
    u0 = as_state(u0)
    out = np.empty(3)
    bad = _advance(u0, int(nsteps), dt, *_params_tuple(p), _scheme_code(scheme), guard, out)
    if bad >= 0:
        raise Divergence(f"state escaped |u_i| <= {guard:g} at step {bad} (dt={dt:g})", step=bad)
    return out


def spin_up(u_init=DEFAULT_START, T_burn=DEFAULT_BURN, dt=DEFAULT_DT, p=CLASSICAL,
            scheme="explicit_euler"):
    """Integrate for ``T_burn`` and return the endpoint, treated as lying on the attractor."""
    u_init = as_state(u_init)
    if T_burn < 0:
        raise ConfigError("T_burn must be non-negative")
    if T_burn == 0:
        return u_init.copy()
    return advance(u_init, n_steps(T_burn, dt), dt, p, scheme)
