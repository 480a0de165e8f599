from types import SimpleNamespace
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from threedvar.bounds import (
    BoundReport,
    asymptotic_bounds,
    contracting_interval,
    find_lambda_discrete,
    lambda_continuous,
    lemma_sim_bounds,
    m1,
    m2,
    m_max,
    pathwise_separation_bound,
)
from threedvar.dynamics import CLASSICAL, LorenzParams
from threedvar.errors import ConfigError, DegenerateParams, NoContraction

mp.mp.dps = 50


def oracle_m(tau, eta, alpha=10, b=mp.mpf(8) / 3, r=28):
    """Second transcription of M1 and M2 at 50 digits."""
    tau, eta = mp.mpf(tau), mp.mpf(eta)
    K = b**2 * (r + alpha) ** 2 / (4 * (b - 1))
    beta = 2 * (mp.sqrt(K) - 1)
    g2 = (eta / (1 + eta)) ** 2
    e = mp.exp
    M1 = (K * alpha / (beta + alpha) * ((e(beta * tau) - e(-tau)) / (beta + 1)
                                        - (e(-alpha * tau) - e(-tau)) / (1 - alpha))
          + e(-tau) + 2 * g2 * alpha / (beta + alpha) * (e(beta * tau) - e(-alpha * tau)))
    M2 = K / (1 - alpha) * (e(-alpha * tau) - e(-tau)) + 2 * g2 * e(-alpha * tau)
    return M1, M2


@pytest.mark.parametrize("eta", [1e-3, 0.01, 0.1, 1.0])
@pytest.mark.parametrize("tau", [1e-9, 1e-6, 1e-4, 1e-2, 0.1, 1.0, 5.0])
def test_m_against_high_precision_oracle(tau, eta):
    M1, M2 = oracle_m(tau, eta)
    assert float(m1(tau, eta)) == pytest.approx(float(M1), rel=1e-12)
    assert float(m2(tau, eta)) == pytest.approx(float(M2), rel=1e-12, abs=1e-300)
    # M1 - 1 in particular must be accurate for small tau
    excess = float(m1(tau, eta)) - 1.0
    if tau >= 1e-4:
        assert excess == pytest.approx(float(M1 - 1), rel=1e-8)


@pytest.mark.parametrize("eta", [0.01, 0.1, 0.5])
def test_values_at_zero(eta):
    g2 = (eta / (1 + eta)) ** 2
    assert float(m1(0.0, eta)) == 1.0
    assert float(m2(0.0, eta)) == pytest.approx(2 * g2)


@pytest.mark.parametrize("eta", [0.01, 0.1, 0.5])
def test_initial_slope(eta):
    # d/dtau M1 at 0 equals -1 + 2 g^2 alpha
    g2 = (eta / (1 + eta)) ** 2
    # Richardson-extrapolated forward differences; M1'' is of order K beta
    h = 1e-8
    d = lambda s: (float(m1(s, eta)) - float(m1(0.0, eta))) / s
    fd = 2 * d(h / 2) - d(h)
    assert fd == pytest.approx(-1 + 2 * g2 * CLASSICAL.alpha, rel=1e-4, abs=1e-4)


@given(st.floats(1e-3, 0.2))
def test_certificate_is_sound(eta):
    lam, h_c = find_lambda_discrete(eta)
    assert lam > 0 and h_c > 0
    tau = np.linspace(h_c / 20000, h_c, 20000)
    assert np.all(m_max(tau, eta) <= 1 - lam * tau + 1e-14)


def test_certificate_endpoints():
    lam, h_c = find_lambda_discrete(0.01)
    h0 = contracting_interval(0.01)
    assert 0 < h_c < h0
    assert float(m_max(h0 * (1 - 1e-9), 0.01)) < 1 <= float(m_max(h0 * (1 + 1e-6), 0.01))


def test_no_contraction_for_large_eta():
    with pytest.raises(NoContraction):
        find_lambda_discrete(1.0)
    report = asymptotic_bounds(1.0, 0.1, 0.01, strict=False)
    assert math.isnan(report.lambda_discrete) and not report.discrete_certified
    with pytest.raises(NoContraction):
        asymptotic_bounds(1.0, 0.1, 0.01)


def test_degenerate_and_range():
    fake = SimpleNamespace(alpha=1.0, beta=76.0, K=1540.0)
    with pytest.raises(DegenerateParams):
        m1(0.01, 0.1, fake)
    with pytest.raises(ConfigError):
        m1(11.0, 0.1)
    with pytest.raises(ConfigError):
        m2(-0.1, 0.1)


def test_continuous_constants():
    assert lambda_continuous(2 / CLASSICAL.K) == pytest.approx(1.0)
    assert lambda_continuous(4 / CLASSICAL.K) == pytest.approx(0.0, abs=1e-15)
    r = asymptotic_bounds(2 / CLASSICAL.K, 0.01, 0.01)
    assert r.continuous_certified
    assert r.asymptotic_continuous == pytest.approx(1e-4 / (2 / CLASSICAL.K) ** 2)
    r = asymptotic_bounds(1.0 / 100, 0.01, 0.01)
    assert not r.continuous_certified and r.asymptotic_continuous == math.inf


def test_discrete_asymptote():
    r = asymptotic_bounds(0.01, 0.1, 3e-5)
    assert r.discrete_certified
    assert r.asymptotic_discrete == pytest.approx(2 * 0.01 / (r.lambda_discrete * 3e-5))
    assert r.asymptotic_discrete_sharp == pytest.approx(r.asymptotic_discrete / 1.01**2)


@given(st.floats(0, 0.1), st.floats(1e-6, 10), st.floats(0, 1), st.floats(1e-3, 1))
def test_contraction_identity(tau, d0, frac, eta):
    """M1 |d|^2 + M2 |Pd|^2 is the separation bound plus 2 g^2 times the observed bound."""
    pd0 = frac * d0
    g2 = (eta / (1 + eta)) ** 2
    p_b, full = lemma_sim_bounds(d0, pd0, tau)
    lhs = float(m1(tau, eta)) * d0 + float(m2(tau, eta)) * pd0
    rhs = float(full) + 2 * g2 * float(p_b)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def test_separation_bounds_at_zero():
    p_b, full = lemma_sim_bounds(4.0, 1.0, 0.0)
    assert float(p_b) == pytest.approx(1.0)
    assert float(full) == pytest.approx(4.0)
    assert float(pathwise_separation_bound(4.0, 0.0)) == 4.0
    assert float(pathwise_separation_bound(1.0, 0.01)) == pytest.approx(math.exp(CLASSICAL.beta * 0.01))


def test_report_render():
    r = asymptotic_bounds(0.01, 0.1, 0.01, LorenzParams())
    text = r.render()
    assert "lambda_discrete" in text
    assert any(ln.split("=")[0].strip() == "discrete_certified" and ln.endswith("= false")
               for ln in text.splitlines())
    lines = r.render_csv().splitlines()
    assert lines[0] == "key,value"
    keys = [ln.split(",")[0] for ln in lines[1:]]
    assert keys == [k for k, _ in r.rows()]
    assert dict(ln.split(",") for ln in lines[1:])["discrete_certified"] == "false"
    widths = {ln.index("=") for ln in text.splitlines()}
    assert len(widths) == 1
