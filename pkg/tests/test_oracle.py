import numpy as np
import pytest

from lq_explore import (
    ModelParams,
    a_of_phi,
    f_of_a,
    g_of_a,
    gamma_star_n,
    instant_regret,
    jbar,
    phi_star,
    solve_k1,
    solve_k3,
    unit_model,
    validate_model,
)
from lq_explore.errors import BadCGamma


def test_phi_star_unit(unit):
    p, d = unit
    assert phi_star(p, d) == pytest.approx([-2.0])


def test_phi_star_zero_numerator():
    p = ModelParams.scalar(B=0.0, C=0.0)
    d = validate_model(p)
    assert phi_star(p, d) == pytest.approx([0.0])


def test_phi_star_formula():
    p = ModelParams.scalar(B=3.0, C=1.0, D=2.0)
    d = validate_model(p)
    # -(B + C D) / D^2 = -(3 + 2) / 4
    assert phi_star(p, d) == pytest.approx([-1.25])


def test_a_of_phi_values(unit):
    p, d = unit
    assert a_of_phi([-2.0], p, d) == pytest.approx(-1.0)
    assert a_of_phi([0.0], p, d) == pytest.approx(3.0)  # 2A + sum C^2 = 2 + 1


def test_f_g_zero_branch(unit):
    p, _ = unit
    assert f_of_a(0.0, p) == pytest.approx(-1.0)    # x0^2 (-H - QT)/2
    assert g_of_a(0.0, p) == pytest.approx(-0.75)   # T (-2H - QT)/4


def test_f_g_at_minus_one(unit):
    p, _ = unit
    assert f_of_a(-1.0, p) == pytest.approx(-0.5)
    assert g_of_a(-1.0, p) == pytest.approx(-0.5)


def test_f_g_zero_weights():
    p = ModelParams.scalar(Q=0.0, H=0.0)
    for a in (-2.0, 0.0, 1.3):
        assert f_of_a(a, p) == 0.0
        assert g_of_a(a, p) == 0.0


def test_f_g_branch_continuity(unit):
    p, _ = unit
    for eps in (1e-8, -1e-8):
        assert abs(f_of_a(eps, p) - f_of_a(0.0, p)) < 1e-6
        assert abs(g_of_a(eps, p) - g_of_a(0.0, p)) < 1e-6


def test_f_g_nonincreasing(unit):
    p, _ = unit
    grid = np.linspace(-5.0, 5.0, 2001)
    f = np.array([f_of_a(a, p) for a in grid])
    g = np.array([g_of_a(a, p) for a in grid])
    assert np.all(np.diff(f) / np.diff(grid) <= 1e-10)
    assert np.all(np.diff(g) / np.diff(grid) <= 1e-10)
    assert np.all(f < 0) and np.all(g < 0)


def test_jbar_values(unit):
    p, d = unit
    assert jbar([-2.0], [[0.0]], p, d) == pytest.approx(-0.5)
    assert jbar([-2.0], [[0.1]], p, d) == pytest.approx(-0.55)
    p0 = ModelParams.scalar(Q=0.0, H=0.0)
    d0 = validate_model(p0)
    assert jbar([0.7], [[0.0]], p0, d0) == 0.0


def test_jbar_affine_in_Gamma(unit, rng):
    p, d = unit
    for _ in range(50):
        phi = rng.uniform(-3, 1)
        g1, g2 = rng.uniform(0, 2, size=2)
        base = jbar([phi], [[0.0]], p, d)
        lhs = jbar([phi], [[g1 + g2]], p, d) - base
        rhs = (jbar([phi], [[g1]], p, d) - base) + (jbar([phi], [[g2]], p, d) - base)
        assert abs(lhs - rhs) < 1e-12


def test_instant_regret_values(unit):
    p, d = unit
    assert instant_regret([-2.0], [[0.0]], p, d) == pytest.approx(0.0, abs=1e-15)
    assert instant_regret([-2.0], [[0.1]], p, d) == pytest.approx(0.05)


def test_instant_regret_nonnegative(unit, rng):
    p, d = unit
    for _ in range(10_000):
        phi = rng.uniform(-3.0, 0.0)
        G = rng.uniform(0.0, 2.0)
        assert instant_regret([phi], [[G]], p, d) >= -1e-12


def test_optimality_sweep(unit, rng):
    p, d = unit
    jopt = jbar([-2.0], [[0.0]], p, d)
    phis = rng.uniform(-5.0, 1.0, size=10_000)
    vals = np.array([jbar([ph], [[0.0]], p, d) for ph in phis])
    assert np.all(jopt >= vals - 1e-12)


def test_k1_unit_identity(unit):
    p, d = unit
    k1 = solve_k1(p, d)
    grid = np.linspace(0.0, 1.0, 1000)
    assert np.allclose(k1(grid), 1.0, atol=1e-12)
    # residual k1' + a k1 + Q with a = -1
    resid = k1.derivative(grid) + (-1.0) * k1(grid) + p.Q
    assert np.max(np.abs(resid)) < 1e-12
    # central finite differences of k1 itself
    h = 1e-5
    fd = (k1(grid[1:-1] + h) - k1(grid[1:-1] - h)) / (2 * h)
    assert np.max(np.abs(fd + (-1.0) * k1(grid[1:-1]) + p.Q)) < 1e-8


def test_k1_homogeneous():
    p = ModelParams.scalar(Q=0.0, H=2.0)
    d = validate_model(p)
    phi_ref = [0.5]
    a = a_of_phi(phi_ref, p, d)
    k1 = solve_k1(p, d, phi_ref)
    t = np.linspace(0, 1, 7)
    assert k1(t) == pytest.approx(2.0 * np.exp(a * (1.0 - t)))


def test_k1_zero_a_branch():
    # pick B so that a(phi_ref) = 0: a = 2A + C^2 + 2(B + CD) phi + D^2 phi^2
    p = ModelParams.scalar(A=-0.5, B=1.0, C=0.0, D=1.0, Q=1.0, H=1.0)
    d = validate_model(p)
    # a = -1 + 2 phi + phi^2 ; root at phi = sqrt(2) - 1
    phi_ref = [np.sqrt(2.0) - 1.0]
    assert abs(a_of_phi(phi_ref, p, d)) < 1e-12
    k1 = solve_k1(p, d, phi_ref)
    assert k1(0.0) == pytest.approx(2.0)  # H + Q T
    resid = k1.derivative(0.3) + 0.0 * k1(0.3) + p.Q
    assert abs(resid) < 1e-12


def test_k1_residual_random_models(rng):
    for _ in range(20):
        p = ModelParams.scalar(A=rng.uniform(-2, 2), B=rng.uniform(-2, 2),
                               C=rng.uniform(-2, 2), D=rng.uniform(0.3, 2),
                               Q=rng.uniform(0, 2), H=rng.uniform(0, 2))
        d = validate_model(p)
        k1 = solve_k1(p, d)
        a = a_of_phi(phi_star(p, d), p, d)
        grid = np.linspace(0.0, p.T, 1000)
        resid = k1.derivative(grid) + a * k1(grid) + p.Q
        scale = max(1.0, np.max(np.abs(k1(grid))))
        assert np.max(np.abs(resid)) < 1e-8 * scale
        assert np.all(k1(grid) > 0)
        assert k1(p.T) == pytest.approx(p.H, abs=1e-12)


def test_k3_conventions(unit):
    p, d = unit
    k0 = solve_k3(p, d, 0.0)
    assert np.allclose(k0(np.linspace(0, 1, 9)), 0.0)
    k1 = solve_k3(p, d, 1.0)
    assert k1(1.0) == pytest.approx(0.0, abs=1e-12)


def test_k3_monte_carlo(unit, rng):
    # Entropy-regularized value at (t=0, x=x0) under the optimal policy
    # N(phi* x, Sigma(t)) with Sigma = (gamma/k1) ddt^{-1}; here k1 == 1 so
    # Sigma == gamma.  Independent Euler simulation of the exploratory SDE.
    p, d = unit
    gamma = 1.0
    expected = -0.5 * 1.0 * p.x0 ** 2 + solve_k3(p, d, gamma)(0.0)
    dt = 0.0025
    K = 400
    n_paths = 300_000
    sigma_cov = gamma  # Sigma(t) = gamma / k1(t), constant here
    entropy = 0.5 * np.log(2 * np.pi * np.e * sigma_cov)
    total = np.zeros(0)
    for _ in range(6):
        x = np.full(n_paths // 6, p.x0)
        reward = np.zeros_like(x)
        for _ in range(K):
            drift = (p.A - 2.0 * p.B[0]) * x  # A x + B phi* x
            sig = np.sqrt((p.C[0] * x - 2.0 * p.D[0, 0] * x) ** 2 + sigma_cov)
            reward += (-0.5 * p.Q * x * x + gamma * entropy) * dt
            x = x + drift * dt + sig * (np.sqrt(dt) * rng.standard_normal(x.shape))
        reward += -0.5 * p.H * x * x
        total = np.concatenate([total, reward])
    se = total.std() / np.sqrt(len(total))
    assert abs(total.mean() - expected) < 3 * se + 2e-3  # 3 s.e. plus O(dt) slack


def test_gamma_star(unit):
    p, d = unit
    assert gamma_star_n(4.0, 2.0, d)[0, 0] == pytest.approx(0.5)
    assert gamma_star_n(1e9, 2.0, d)[0, 0] == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(BadCGamma):
        gamma_star_n(1.0, 0.5, d)
    # result - (1/b) I positive definite
    G = gamma_star_n(7.0, 1.5, d)
    assert np.all(np.linalg.eigvalsh(G - np.eye(1) / 7.0) > 0)


def _simulate_jbar(p, phi, Gamma, n_paths, dt, rng):
    """Test-local brute-force oracle: Euler paths with sampled actions."""
    K = int(round(p.T / dt))
    out = np.zeros(n_paths)
    chunk = 100_000
    done = 0
    while done < n_paths:
        n = min(chunk, n_paths - done)
        x = np.full(n, p.x0)
        reward = np.zeros(n)
        for _ in range(K):
            u = phi * x + np.sqrt(Gamma) * rng.standard_normal(n)
            reward += -0.5 * p.Q * x * x * dt
            x = (x + (p.A * x + p.B[0] * u) * dt
                 + (p.C[0] * x + p.D[0, 0] * u) * np.sqrt(dt) * rng.standard_normal(n))
        reward += -0.5 * p.H * x * x
        out[done:done + n] = reward
        done += n
    return out


@pytest.mark.parametrize("phi,Gamma", [(-2.0, 0.0), (-1.5, 0.5), (-1.1, 0.2)])
def test_jbar_monte_carlo(unit, phi, Gamma):
    p, d = unit
    rng = np.random.default_rng(hash((phi, Gamma)) % 2 ** 32)
    samples = _simulate_jbar(p, phi, Gamma, 1_000_000, 0.002, rng)
    se = samples.std() / 1000.0
    expected = jbar([phi], [[Gamma]], p, d)
    assert abs(samples.mean() - expected) < 4 * se
