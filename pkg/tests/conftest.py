import numpy as np
import pytest

from measint.haarstats import sample_haar_unitary
from measint.symplectic import passive_to_symplectic, squeeze_transform

# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: dict = {}


def random_symplectic(n, rng, r_max=1.0):
    o1 = passive_to_symplectic(sample_haar_unitary(n, rng))
    o2 = passive_to_symplectic(sample_haar_unitary(n, rng))
    return o1 @ squeeze_transform(rng.uniform(-r_max, r_max, n)) @ o2


def random_pure_cov(n, rng, r_max=1.0):
    s = random_symplectic(n, rng, r_max)
    return s @ s.T


def random_mixed_cov(n, rng, r_max=1.0, nu_max=3.0):
    s = random_symplectic(n, rng, r_max)
    nu = rng.uniform(1.0, nu_max, n)
    return s @ np.diag(np.concatenate([nu, nu])) @ s.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def monte_carlo_condition(cov, plan, rng, n_samples=1_000_000):
    """Conditional covariance of the retained quadratures estimated from samples.

    Draw phase-space points from the Wigner function, form the measured
    quadratures, regress the retained quadratures on them and take the
    residual covariance. Returns ``(estimate, standard_error)``.
    """
    n = cov.shape[0] // 2
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((n_samples, 2 * n)) @ chol.T
    meas = np.stack([np.cos(th) * z[:, k] + np.sin(th) * z[:, k + n] for k, th in plan.entries], axis=1)
    keep = list(plan.outputs) + [k + n for k in plan.outputs]
    y = z[:, keep]
    coef, *_ = np.linalg.lstsq(meas, y, rcond=None)
    resid = y - meas @ coef
    est = resid.T @ resid / (n_samples - meas.shape[1])
    se = np.sqrt((np.outer(np.diag(est), np.diag(est)) + est**2) / n_samples)
    return est, se


def random_plan(n, rng):
    from measint.conditioning import MeasurementPlan

    order = rng.permutation(n)
    n_meas = int(rng.integers(1, n))
    measured = order[:n_meas]
    outputs = sorted(order[n_meas:].tolist()) if rng.random() < 0.5 else order[n_meas:].tolist()
    angles = rng.uniform(-np.pi / 2, np.pi / 2, n_meas)
    return MeasurementPlan(tuple(zip(measured.tolist(), angles)), tuple(outputs))
