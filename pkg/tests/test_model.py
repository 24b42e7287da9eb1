import numpy as np
import pytest
import scipy.linalg
from scipy import stats

from lq_explore import ModelParams, PolicyParams, unit_model, validate_model
from lq_explore.errors import BadHorizon, NegativeWeight, NotPositiveDefinite
from lq_explore.model import model_from_config, parse_config, sample_random_model


def test_unit_model_sums(unit):
    p, d = unit
    assert d.ddt == pytest.approx(np.array([[1.0]]))
    assert d.cd == pytest.approx([1.0])
    assert d.lambda_max_ddt == pytest.approx(1.0)


def test_zero_diffusion_rejected():
    p = ModelParams.scalar(D=0.0)
    with pytest.raises(NotPositiveDefinite):
        validate_model(p)


def test_two_channel_sum():
    # l=1, m=2, D1=2, D2=1: sum D_j D_j^T = 4 + 1
    p = ModelParams(A=1.0, B=[1.0], C=[1.0, 1.0], D=[[2.0], [1.0]],
                    Q=1.0, H=1.0, x0=1.0, T=1.0)
    d = validate_model(p)
    assert d.ddt == pytest.approx(np.array([[5.0]]))
    assert d.cd == pytest.approx([3.0])


def test_negative_weights_and_horizon():
    with pytest.raises(NegativeWeight):
        validate_model(ModelParams.scalar(Q=-0.1))
    with pytest.raises(NegativeWeight):
        validate_model(ModelParams.scalar(H=-1.0))
    with pytest.raises(BadHorizon):
        validate_model(ModelParams.scalar(T=0.0))


def test_validate_idempotent(unit):
    p, d = unit
    d2 = validate_model(p)
    assert np.array_equal(d.ddt, d2.ddt)
    assert np.array_equal(d.cd, d2.cd)
    assert d.lambda_max_ddt == d2.lambda_max_ddt


def test_lambda_max_against_independent_eigensolver(rng):
    for _ in range(25):
        l = int(rng.integers(1, 4))
        m = l + int(rng.integers(0, 3))  # need m >= l for a full-rank sum
        D = rng.normal(size=(m, l))
        while np.linalg.matrix_rank(D.T @ D) < l:
            D = rng.normal(size=(m, l))
        p = ModelParams(A=0.3, B=rng.normal(size=l), C=rng.normal(size=m), D=D,
                        Q=1.0, H=2.0, x0=1.0, T=1.0)
        d = validate_model(p)
        ref = np.max(np.real(scipy.linalg.eigvals(d.ddt)))
        assert abs(d.lambda_max_ddt - ref) <= 1e-10 * max(1.0, abs(ref))


def test_random_model_deterministic():
    a = sample_random_model(77)
    b = sample_random_model(77)
    assert a.A == b.A and a.B[0] == b.B[0] and a.C[0] == b.C[0] and a.D[0, 0] == b.D[0, 0]
    assert sample_random_model(78).A != a.A


def test_random_model_always_validates():
    for seed in range(300):
        m = sample_random_model(seed)
        d = validate_model(m)
        assert d.ddt[0, 0] >= 1e-3
        assert (m.Q, m.H, m.x0, m.T) == (1.0, 1.0, 1.0, 1.0)


def test_random_model_marginal_uniform():
    # A is independent of the D-degeneracy rejection, so its marginal is exact
    draws = np.array([sample_random_model(s).A for s in range(10_000)])
    res = stats.kstest(draws, stats.uniform(loc=-5, scale=10).cdf)
    assert res.pvalue > 0.01


def test_policy_params_shapes():
    pol = PolicyParams.scalar(-2.0, 0.5)
    assert pol.phi.shape == (1,) and pol.Gamma.shape == (1, 1)
    pol2 = PolicyParams(phi=[1.0, 2.0], Gamma=np.eye(2))
    assert pol2.Gamma.shape == (2, 2)
    assert not pol2.Gamma.flags.writeable


def test_config_parsing(tmp_path):
    cfg_file = tmp_path / "model.cfg"
    cfg_file.write_text(
        "# fixed-model experiment\n"
        "A = 1.5\nB=0.5\nC=2.0\nD=1.25\nQ=1\nH=0\nx0=0.5\nT=2\n"
        "phi0 = -1.1\ndt_mode = fixed\n"
    )
    cfg = parse_config(str(cfg_file))
    m = model_from_config(cfg)
    assert m.A == 1.5 and m.B[0] == 0.5 and m.C[0] == 2.0 and m.D[0, 0] == 1.25
    assert m.Q == 1.0 and m.H == 0.0 and m.x0 == 0.5 and m.T == 2.0
    assert cfg["phi0"] == -1.1 and cfg["dt_mode"] == "fixed"
    validate_model(m)


def test_config_vector_forms():
    cfg = parse_config("B=1,2\nC=0.5;0.25\nD=1,0;0,1\n", is_text=True)
    m = model_from_config(cfg)
    assert m.l == 2 and m.m == 2
    d = validate_model(m)
    assert d.ddt == pytest.approx(np.eye(2))
    assert d.cd == pytest.approx([0.5, 0.25])


def test_unit_model_helper():
    p = unit_model()
    assert (p.A, p.Q, p.H, p.x0, p.T) == (1.0, 1.0, 1.0, 1.0, 1.0)
    assert p.l == 1 and p.m == 1
