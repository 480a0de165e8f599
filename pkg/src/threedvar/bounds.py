"""Closed-form stability and accuracy bounds for 3DVAR on Lorenz '63.

Notation: ``g = eta / (1 + eta)``, ``c = alpha / (beta + alpha)``. Over one
observation interval of length ``tau`` the discrete filter satisfies

    E||delta_{k+1}||^2 <= M1(tau) E|delta_k|^2 + M2(tau) E|P delta_k|^2 + 2 eps^2 / (1 + eta)^2

with ``||u||^2 = |u|^2 + |P u|^2`` and

    M1 = K c [(e^{beta tau} - e^{-tau}) / (beta + 1) - (e^{-alpha tau} - e^{-tau}) / (1 - alpha)]
         + e^{-tau} + 2 g^2 c (e^{beta tau} - e^{-alpha tau})
    M2 = K (e^{-alpha tau} - e^{-tau}) / (1 - alpha) + 2 g^2 e^{-alpha tau}

Exponential differences are evaluated with ``expm1`` so that ``M1 - 1`` is
accurate down to ``tau ~ 1e-10``. The exponent ``beta tau`` with
``beta ~ 76`` overflows quickly, so ``tau`` is restricted to ``[0, 10]``.
"""

from dataclasses import asdict, dataclass
import math

import numpy as np

from .dynamics import CLASSICAL
from .errors import ConfigError, DegenerateParams, NoContraction

TAU_MAX = 10.0
LAMBDA_MARGIN = 1e-9


def _check(p, tau):
    if p.alpha == 1:
        raise DegenerateParams("bound formulas need alpha != 1")
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0) or np.any(tau > TAU_MAX):
        raise ConfigError(f"tau must lie in [0, {TAU_MAX}]")
    return tau


def _gain_sq(eta):
    return (eta / (1.0 + eta)) ** 2


def _bracket(tau, p):
    """``(e^{beta t} - e^{-t}) / (beta + 1) - (e^{-alpha t} - e^{-t}) / (1 - alpha)``."""
    a, be = p.alpha, p.beta
    em = np.expm1(-tau)
    return (np.expm1(be * tau) - em) / (be + 1.0) - (np.expm1(-a * tau) - em) / (1.0 - a)


def _m1_excess(tau, eta, p):
    """``M1(tau) - 1``."""
    c = p.alpha / (p.beta + p.alpha)
    growth = np.expm1(p.beta * tau) - np.expm1(-p.alpha * tau)
    return p.K * c * _bracket(tau, p) + np.expm1(-tau) + 2.0 * _gain_sq(eta) * c * growth


def m1(tau, eta, p=CLASSICAL):
    tau = _check(p, tau)
    return 1.0 + _m1_excess(tau, eta, p)


def m2(tau, eta, p=CLASSICAL):
    tau = _check(p, tau)
    a = p.alpha
    return p.K * (np.expm1(-a * tau) - np.expm1(-tau)) / (1.0 - a) + 2.0 * _gain_sq(eta) * np.exp(-a * tau)


def m_max(tau, eta, p=CLASSICAL):
    return np.maximum(m1(tau, eta, p), m2(tau, eta, p))


def _contraction(tau, eta, p):
    """``(1 - M(tau)) / tau`` without forming ``1 - M1`` by subtraction."""
    tau = _check(p, tau)
    return np.minimum(-_m1_excess(tau, eta, p), 1.0 - m2(tau, eta, p)) / tau


def find_lambda_discrete(eta, p=CLASSICAL, h_max=0.1, n_grid=10_000):
    """Grid-certified ``(lambda, h_c)`` with ``M(tau) <= 1 - lambda tau`` on ``(0, h_c]``.

    First the end ``h0`` of the contracting interval ``{M < 1}`` is bracketed on
    a log grid and refined by bisection. Then, on ``n_grid`` uniform points of
    ``(0, h0]``, ``h_c`` is taken where the one-step factor ``M`` is smallest,
    and ``lambda`` is the minimum of ``(1 - M) / tau`` up to ``h_c`` less a small
    safety margin. Returns ``(lambda, h_c)``; ``h0`` is available from
    :func:`contracting_interval`.
    """
    h0 = contracting_interval(eta, p, h_max)
    tau = h0 * np.arange(1, n_grid + 1) / n_grid
    rate = _contraction(tau, eta, p)
    i_star = int(np.argmax(tau * rate))
    lam = float(np.min(rate[: i_star + 1])) - LAMBDA_MARGIN
    if not lam > 0:
        raise NoContraction(f"no positive certified rate for eta={eta}")
    return lam, float(tau[i_star])


def contracting_interval(eta, p=CLASSICAL, h_max=0.1, n_probe=2000, tol=1e-15):
    """``sup{h <= h_max : M(tau) < 1 for all tau in (0, h]}``."""
    if not eta > 0:
        raise ConfigError("eta must be positive")
    if not 0 < h_max <= TAU_MAX:
        raise ConfigError(f"h_max must lie in (0, {TAU_MAX}]")
    probe = np.geomspace(min(1e-12, h_max / 10), h_max, n_probe)
    ok = _contraction(probe, eta, p) > 0
    if not ok[0]:
        raise NoContraction(
            f"M(tau) >= 1 at tau={probe[0]:.1e} for eta={eta}: no contracting interval"
        )
    if ok.all():
        return float(h_max)
    j = int(np.argmin(ok))  # first failing probe
    lo, hi = probe[j - 1], probe[j]
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _contraction(np.array([mid]), eta, p)[0] > 0:
            lo = mid
        else:
            hi = mid
    return float(lo)


@dataclass(frozen=True)
class BoundReport:
    K: float
    beta: float
    eta: float
    eps: float
    h: float
    m1: float
    m2: float
    m_max: float
    lambda_discrete: float  # nan when no contraction certificate exists
    h_c: float
    h_zero: float
    discrete_certified: bool  # h <= h_c
    asymptotic_discrete: float  # 2 eps^2 / (lambda h)
    asymptotic_discrete_sharp: float  # 2 eps^2 / ((1 + eta)^2 lambda h)
    lambda_continuous: float
    continuous_certified: bool  # eta K < 4
    asymptotic_continuous: float  # eps^2 / (lambda eta^2), inf without certificate
    eta_c: float

    def rows(self):
        return list(asdict(self).items())

    def render(self):
        rows = self.rows()
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)} = {_fmt(v)}" for k, v in rows) + "\n"

    def render_csv(self):
        return "key,value\n" + "".join(f"{k},{_fmt(v)}\n" for k, v in self.rows())


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    return repr(float(v))


def lambda_continuous(eta, p=CLASSICAL):
    return 2.0 * (1.0 - eta * p.K / 4.0)


def asymptotic_bounds(eta, eps, h, p=CLASSICAL, h_max=0.1, strict=True):
    """Evaluate every constant and bound for one configuration.

    With ``strict`` a missing discrete certificate raises NoContraction;
    otherwise the discrete fields are reported as nan.
    """
    if not (eta > 0 and eps >= 0 and h > 0):
        raise ConfigError("need eta > 0, eps >= 0, h > 0")
    try:
        h0 = contracting_interval(eta, p, h_max)
        lam, h_c = find_lambda_discrete(eta, p, h_max)
    except NoContraction:
        if strict:
            raise
        lam = h_c = h0 = math.nan
    lam_c = lambda_continuous(eta, p)
    cont_ok = lam_c > 0
    return BoundReport(
        K=p.K,
        beta=p.beta,
        eta=eta,
        eps=eps,
        h=h,
        m1=float(m1(h, eta, p)),
        m2=float(m2(h, eta, p)),
        m_max=float(m_max(h, eta, p)),
        lambda_discrete=lam,
        h_c=h_c,
        h_zero=h0,
        discrete_certified=bool(h <= h_c),
        asymptotic_discrete=2 * eps**2 / (lam * h),
        asymptotic_discrete_sharp=2 * eps**2 / ((1 + eta) ** 2 * lam * h),
        lambda_continuous=lam_c,
        continuous_certified=cont_ok,
        asymptotic_continuous=eps**2 / (lam_c * eta**2) if cont_ok else math.inf,
        eta_c=4.0 / p.K,
    )


def pathwise_separation_bound(delta0_sq, t, p=CLASSICAL):
    """``|delta(t)|^2 <= |delta_0|^2 e^{beta t}`` for two solutions on the attractor."""
    t = _check(p, t)
    return np.asarray(delta0_sq) * np.exp(p.beta * t)


def lemma_sim_bounds(delta0_sq, p_delta0_sq, t, p=CLASSICAL):
    """Bounds on ``|P delta(t)|^2`` and ``|delta(t)|^2`` between observations.

    Returns ``(p_bound, full_bound)``.
    """
    t = _check(p, t)
    a, be = p.alpha, p.beta
    d0 = np.asarray(delta0_sq, dtype=np.float64)
    pd0 = np.asarray(p_delta0_sq, dtype=np.float64)
    sep = np.expm1(be * t) - np.expm1(-a * t)
    p_bound = a * d0 / (be + a) * sep + pd0 * np.exp(-a * t)
    full = (
        p.K * a * d0 / (be + a) * _bracket(t, p)
        + p.K * pd0 / (1.0 - a) * (np.expm1(-a * t) - np.expm1(-t))
        + d0 * np.exp(-t)
    )
    return p_bound, full
