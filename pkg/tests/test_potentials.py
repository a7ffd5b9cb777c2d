import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from fracch.oracle import resolvent_bisection
from fracch.potentials import (
    CertificateError,
    canonical,
    coercivity_certificate,
    default_delta0,
    trick_constant,
)

WELLS = [canonical("regular"), canonical("logarithmic", c1=2.0), canonical("double_obstacle", c2=1.0)]
LAMS = (0.1, 0.05, 0.025, 0.0125)
# J + 0.1 ln((1+J)/(1-J)) = 0.9, solved with scipy.optimize.brentq at xtol 1e-16
LOG_J_AT_0_9 = 0.718919141460179
# int_0^1.5 beta_0.2(s) ds for the regular well, scipy.integrate.quad over a brentq resolvent
REGULAR_ENVELOPE_0_2_AT_1_5 = 0.740593429356563


def test_canonical_examples():
    reg, log, obs = WELLS
    assert reg.beta(2.0) == 8.0 and reg.beta_min(2.0) == 8.0
    assert log.beta(0.0) == 0.0
    assert log.pi(0.5) == pytest.approx(-2.0)
    assert obs.domain == (-1.0, 1.0, True)
    assert obs.beta_min(1.0) == 0.0
    assert reg.L_pi == 1.0 and log.L_pi == 4.0 and obs.L_pi == 2.0
    assert all(p.L_pi_prime == p.L_pi + 1 for p in WELLS)


def test_regular_split_reassembles_quartic():
    s = np.linspace(-3, 3, 101)
    assert np.allclose(canonical("regular").f(s), (s * s - 1) ** 2 / 4)


def test_log_endpoint_value():
    log = WELLS[1]
    assert log.beta_hat(1.0) == pytest.approx(2 * np.log(2))
    assert np.isinf(log.beta_hat(1.2))


@pytest.mark.parametrize("kind, params", [("logarithmic", {"c1": 1.0}), ("double_obstacle", {"c2": 0.0}),
                                          ("quartic", {})])
def test_parameter_constraints(kind, params):
    with pytest.raises(ValueError):
        canonical(kind, **params)


def test_convex_and_normalized():
    s = np.linspace(-0.99, 0.99, 199)
    for p in WELLS[:2]:
        bh = p.beta_hat(s)
        assert p.beta_hat(0.0) == 0.0
        assert np.all(bh[:-2] + bh[2:] - 2 * bh[1:-1] >= -1e-14)


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_pi_lipschitz(a, b):
    for p in WELLS:
        assert abs(p.pi(a) - p.pi(b)) <= p.L_pi * abs(a - b) * (1 + 1e-12) + 1e-300


def test_resolvent_examples():
    reg, log, obs = WELLS
    assert reg.yosida(1.0).resolvent(2.0) == pytest.approx(1.0, abs=1e-14)
    for lam in LAMS:
        assert obs.yosida(lam).resolvent(2.0) == 1.0
    assert log.yosida(0.1).resolvent(0.9) == pytest.approx(LOG_J_AT_0_9, abs=1e-13)
    assert resolvent_bisection(log, 0.1, 0.9) == pytest.approx(LOG_J_AT_0_9, abs=1e-13)


def test_resolvent_matches_bisection(rng):
    for p in WELLS:
        for s in rng.uniform(-4, 4, 200):
            for lam in (0.1, 0.01):
                assert p.yosida(lam).resolvent(s) == pytest.approx(resolvent_bisection(p, lam, s), abs=1e-12)


def test_resolvent_residual_1e_12():
    s = np.linspace(-50, 50, 20001)
    for p in WELLS:
        for lam in LAMS:
            assert p.yosida(lam).resolvent_residual(s).max() <= 1e-12 * (1 + np.abs(s)).min() + 1e-12


def test_yosida_examples():
    reg, _, obs = WELLS
    assert reg.yosida(1.0).beta(2.0) == pytest.approx(1.0)
    assert obs.yosida(0.5).beta(2.0) == pytest.approx(2.0)
    assert obs.yosida(0.5).beta(0.3) == 0.0
    for p in WELLS:
        assert p.yosida(0.1).beta(0.0) == 0.0


def test_envelope_examples():
    _, _, obs = WELLS
    for p in WELLS:
        assert p.yosida(0.3).envelope(0.0) == pytest.approx(0.0, abs=1e-15)
    assert obs.yosida(0.5).envelope(2.0) == pytest.approx(1.0)
    assert canonical("regular").yosida(0.2).envelope(1.5) == pytest.approx(REGULAR_ENVELOPE_0_2_AT_1_5, abs=1e-8)


def test_envelope_is_integral_of_yosida():
    for p in WELLS:
        v = p.yosida(0.05)
        for s in (-2.0, -0.7, 0.4, 0.95, 1.8):
            integral, _ = quad(lambda t: float(v.beta(t)), 0.0, s, epsabs=1e-12, limit=200)
            assert v.envelope(s) == pytest.approx(integral, abs=1e-8)


def test_yosida_properties(rng):
    for p in WELLS:
        a, b = rng.uniform(-3, 3, (2, 10_000))
        s = np.concatenate([rng.uniform(-3, 3, 1000), [-1.0, 1.0]])
        for lam in LAMS:
            v = p.yosida(lam)
            assert np.all(np.abs(v.resolvent(a) - v.resolvent(b)) <= np.abs(a - b) * (1 + 1e-12) + 1e-15)
            assert np.all(np.abs(v.beta(a) - v.beta(b)) <= np.abs(a - b) / lam * (1 + 1e-10) + 1e-12)
            srt = np.sort(s)
            assert np.all(np.diff(v.beta(srt)) >= -1e-12)
            env = v.envelope(s)
            assert np.all(env >= -1e-14) and np.all(env <= p.beta_hat(s) * (1 + 1e-12) + 1e-14)
            inside = p.in_domain(s)
            assert np.all(np.abs(v.beta(s[inside])) <= np.abs(p.beta_min(s[inside])) * (1 + 1e-12) + 1e-14)


def test_lambda_monotone_convergence():
    s_int = np.array([-0.8, -0.3, 0.5, 0.9])
    for p in WELLS[:2]:
        envs = np.array([p.yosida(lam).envelope(s_int) for lam in LAMS])
        assert np.all(np.diff(envs, axis=0) > 0)
        gaps = p.beta_hat(s_int) - envs
        assert np.all(gaps[:-1] / gaps[1:] >= 1.5)
    obs = WELLS[2]
    s = np.array([-2.0, 1.5])
    envs = np.array([obs.yosida(lam).envelope(s) for lam in LAMS])
    assert np.all(np.diff(envs, axis=0) > 0)


def test_derivative_consistency():
    eps = 1e-5
    for p in WELLS:
        v = p.yosida(0.1)
        for s in (-1.7, -0.4, 0.2, 0.8, 2.3):
            fd = (v.envelope(s + eps) - v.envelope(s - eps)) / (2 * eps)
            assert abs(fd - v.beta(s)) <= 1e-4 * (1 + abs(v.beta(s)))


def test_coercivity_certificates():
    for p, lam in [(WELLS[0], 0.1), (WELLS[2], 0.01), (WELLS[1], 0.05)]:
        v = p.yosida(lam)
        alpha, C = coercivity_certificate(v)
        assert alpha > 0
        s = np.linspace(-1e3, 1e3, 20001)
        assert np.all(v.G(s) >= alpha * s * s - C - 1e-9)
        assert v.G(0.0) >= -C


def test_coercivity_fails_for_large_lambda():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(CertificateError):
            coercivity_certificate(canonical("double_obstacle", c2=1.0).yosida(1.0))


def test_trick_constant():
    obs = WELLS[2]
    for lam in (0.1, 0.01):
        v = obs.yosida(lam)
        C0 = trick_constant(v, 0.0, 0.5)
        s = np.linspace(-20, 20, 4001)
        b = v.beta(s)
        assert np.all(b * s >= 0.5 * np.abs(b) - C0 - 1e-12)
    assert default_delta0(obs, 0.0) == 0.5
    assert default_delta0(WELLS[0], 3.0) == 1.0
    with pytest.raises(ValueError):
        trick_constant(obs.yosida(0.1), 0.8, 0.5)
