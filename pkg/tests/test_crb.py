import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scsid.crb import (ccrb_d, ccrb_theta, crb_report, fisher, per_submodel, regressor)
from scsid.errors import DegenerateDesignError, OutOfScopeError
from scsid.model import example1, example1_inputs


def neg_loglik(params, X, Y, n_y, n_d, s_e2, s_w2):
    """-log p(X, Y | theta, D) up to a constant."""
    p = n_y * n_d
    Theta = params[:p].reshape(n_y, n_d)
    D = params[p:].reshape(-1, n_d).T
    return (np.sum((X - D) ** 2) / (2 * s_e2) + np.sum((Y - Theta @ D) ** 2) / (2 * s_w2))


def fd_hessian(f, x, h=1e-4):
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            def at(a, b):
                y = x.copy()
                y[i] += a
                y[j] += b
                return f(y)
            H[i, j] = H[j, i] = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h)
    return H


def random_instance(rng, n_y=None, n_d=None, n=None):
    n_y = n_y or int(rng.integers(1, 3))
    n_d = n_d or int(rng.integers(1, 3))
    n = n or int(rng.integers(n_d + 2, 7))
    theta = rng.standard_normal((n_y, n_d))
    D = rng.standard_normal((n_d, n))
    s_e2, s_w2 = rng.uniform(0.05, 1.0, 2)
    return theta, D, s_e2, s_w2


def test_scalar_fisher_theta():
    fb = fisher([[0.7]], [[1.0, 1.0]], 0.01, 0.01)
    assert fb.F_theta.item() == pytest.approx(200.0)


def test_zero_theta_decouples():
    D = np.array([[1.0, 2.0, -1.0], [0.5, 0.0, 1.0]])
    fb = fisher(np.zeros((2, 2)), D, 0.3, 0.1)
    assert all(np.all(C == 0) for C in fb.F_theta_d)
    np.testing.assert_allclose(fb.F_d, np.eye(2) / 0.3)
    np.testing.assert_allclose(ccrb_theta(np.zeros((2, 2)), D, 0.3, 0.1),
                               0.1 * np.linalg.inv(np.kron(np.eye(2), D @ D.T)), rtol=1e-12)
    np.testing.assert_allclose(ccrb_d(1, np.zeros((2, 2)), D, 0.3, 0.1), 0.3 * np.eye(2),
                               rtol=1e-12)


def test_cross_block_layout():
    theta = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    d = np.array([0.5, -1.0])
    fb = fisher(theta, d[:, None], 1.0, 2.0)
    expected = np.hstack([np.outer(theta[j], d) for j in range(3)]) / 2.0
    np.testing.assert_allclose(fb.F_theta_d[0].T, expected)
    np.testing.assert_allclose(regressor(d, 3) @ theta.ravel(), theta @ d)


def test_fisher_matches_fd_hessian(rng):
    theta, D, s_e2, s_w2 = random_instance(rng, 2, 2, 4)
    F = fisher(theta, D, s_e2, s_w2).full()
    params = np.concatenate([theta.ravel(), D.T.ravel()])
    H = fd_hessian(lambda x: neg_loglik(x, D, theta @ D, 2, 2, s_e2, s_w2), params)
    assert np.max(np.abs(H - F)) / np.max(np.abs(F)) < 1e-4
    assert np.all(np.linalg.eigvalsh(F) > 0)


def test_scalar_closed_form():
    D = np.ones((1, 100))
    b = ccrb_theta([[0.7]], D, 0.01, 0.01).item()
    assert b == pytest.approx((0.01 + 0.01 * 0.49) / 100, rel=1e-12)
    assert b == pytest.approx(1.49e-4, rel=1e-12)


def test_scalar_input_bound_vs_full_inverse():
    D = np.ones((1, 100))
    F = fisher([[0.7]], D, 0.01, 0.01).full()
    ref = np.linalg.inv(F)[1, 1]
    assert ccrb_d(0, [[0.7]], D, 0.01, 0.01).item() == pytest.approx(ref, rel=1e-10)


def test_conventional_limit(rng):
    theta, D, _, s_w2 = random_instance(rng, 2, 2, 6)
    conv = s_w2 * np.linalg.inv(np.kron(np.eye(2), D @ D.T))
    np.testing.assert_allclose(ccrb_theta(theta, D, 1e-12 * s_w2, s_w2), conv, rtol=1e-6,
                               atol=1e-9 * np.abs(conv).max())
    np.testing.assert_allclose(ccrb_theta(theta, D, 0.0, s_w2), conv, rtol=1e-12)
    np.testing.assert_allclose(ccrb_d(0, theta, D, 0.0, s_w2), 0)
    assert np.max(np.abs(ccrb_d(0, theta, D, 1e-12, s_w2))) < 1e-11


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_closed_form_equals_schur(seed):
    rng = np.random.default_rng(seed)
    theta, D, s_e2, s_w2 = random_instance(rng)
    Finv = np.linalg.inv(fisher(theta, D, s_e2, s_w2).full())
    p = theta.size
    n_d = theta.shape[1]
    cov = ccrb_theta(theta, D, s_e2, s_w2, verify=False)
    np.testing.assert_allclose(cov, Finv[:p, :p], rtol=1e-9, atol=1e-9 * np.abs(Finv[:p, :p]).max())
    i = int(rng.integers(D.shape[1]))
    blk = Finv[p + i * n_d:p + (i + 1) * n_d, p + i * n_d:p + (i + 1) * n_d]
    np.testing.assert_allclose(ccrb_d(i, theta, D, s_e2, s_w2), blk, rtol=1e-9,
                               atol=1e-9 * np.abs(blk).max())
    for M in (cov, blk):
        assert np.all(np.linalg.eigvalsh(M) > 0)


def test_bound_monotone_in_output_noise(rng):
    for _ in range(20):
        theta, D, s_e2, s_w2 = random_instance(rng)
        diff = ccrb_theta(theta, D, s_e2, 2 * s_w2) - ccrb_theta(theta, D, s_e2, s_w2)
        assert np.linalg.eigvalsh(diff).min() >= -1e-12


def test_error_cases():
    D = np.ones((1, 5))
    with pytest.raises(OutOfScopeError):
        ccrb_theta([[0.7]], D, 0.01, 0.0)
    with pytest.raises(DegenerateDesignError):
        ccrb_theta(np.eye(2), np.ones((2, 5)), 0.01, 0.01)
    with pytest.raises(DegenerateDesignError):
        ccrb_d(0, [[0.7]], np.ones((1, 1)), 0.01, 0.01)
    with pytest.raises(ValueError):
        fisher([[0.7]], D, 0.0, 0.01)


def test_report_and_per_submodel():
    spec = example1(sigma2=0.01)
    D = example1_inputs()
    labels = spec.labels_for(D)
    reps = per_submodel(spec, D, labels, d_indices=[0, 250])
    assert [r.entries for r in reps] == [("theta1[0,0]",), ("theta2[0,0]",)]
    for k, r in enumerate(reps):
        Dk = D[:, labels == k]
        assert r.cov_theta.item() == pytest.approx(
            (0.01 + 0.01 * spec.thetas[k].item() ** 2) / np.sum(Dk ** 2), rel=1e-12)
    assert set(reps[0].cov_d) == {0} and set(reps[1].cov_d) == {250}
    rep = crb_report([[0.7]], D[:, :10], 0.01, 0.01, d_indices=[3])
    assert rep.diagonal().shape == (1,)
