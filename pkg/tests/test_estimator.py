import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flr.errors import DomainError, IllConditionedError, ShapeError
from flr.estimator import (Dataset, SlopeEstimate, assemble, estimation_error_W, estimation_error_gram,
                           factor_gram, fit_local, gram_factor, predict, prediction_risk)
from flr.filters import FilterSpec
from flr.grid import Grid, SamplingScheme, equispaced, make_grid
from flr.kernelcore import SobolevKernelSpec, kernel_matrix, sobolev_kernel_eval
from flr.operators import DiscretizedOperator, discretize, eigendecompose, sobolev_norm
from flr.synth import NoiseSpec, build_ground_truth, gen_dataset, sample_X

from oracles import tikhonov_direct

K1, K2 = SobolevKernelSpec(1), SobolevKernelSpec(2)


def random_instance(seed, n_max=8, m_max=6, alpha=1):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(1, n_max + 1)), int(rng.integers(1, m_max + 1))
    grid = make_grid(SamplingScheme("iid_density", seed=seed), m)
    return Dataset(grid, rng.standard_normal((n, m + 1)), rng.standard_normal(n)), SobolevKernelSpec(alpha)


@pytest.fixture(scope="module")
def world():
    g = equispaced(64)
    lk = eigendecompose(discretize(kernel_matrix(K2, g), g))
    gt = build_ground_truth(lk, 0.5, 1.0, 16, seed=3, kernel=K2, sigma=0.1)
    return g, lk, gt


def test_dataset_validation_and_csv(tmp_path):
    g = equispaced(3)
    with pytest.raises(ShapeError):
        Dataset(g, np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ShapeError):
        Dataset(g, np.zeros((2, 4)), np.zeros(3))
    with pytest.raises(DomainError):
        Dataset(g, np.full((1, 4), np.nan), np.zeros(1))
    d = Dataset(g, np.random.default_rng(0).standard_normal((5, 4)), np.arange(5.0))
    assert d.to_csv().splitlines()[0] == "r_1,r_2,r_3,r_4,y"
    d.save(tmp_path / "d.csv", tmp_path / "g.csv")
    back = Dataset.load(tmp_path / "d.csv", tmp_path / "g.csv")
    assert np.array_equal(back.X, d.X) and np.array_equal(back.y, d.y)


def test_assemble_examples():
    data, k = random_instance(0)
    sys0 = assemble(Dataset(data.grid, data.X, np.zeros(data.n)), k)
    assert np.all(sys0.b == 0)
    g = Grid(np.array([0.0, 1.0]))
    x = 1.7
    s = assemble(Dataset(g, np.array([[x, 0.3]]), np.array([1.0])), K2)
    assert s.A_sym[0, 0] == pytest.approx(x**2 * sobolev_kernel_eval(K2, 0, 0) * 1.0, rel=1e-14)
    twice = Dataset(data.grid, np.vstack([data.X, data.X]), np.r_[data.y, data.y])
    a, b = assemble(data, k), assemble(twice, k)
    assert np.allclose(a.A_sym, b.A_sym, rtol=1e-14, atol=1e-15)
    assert np.allclose(a.b, b.b, rtol=1e-14, atol=1e-15)
    ev = np.linalg.eigvalsh(a.A_sym)
    assert ev[0] >= -1e-10 * max(ev[-1], 1e-300)


def test_zero_response_gives_zero_estimate():
    data, k = random_instance(1)
    est = fit_local(Dataset(data.grid, data.X, np.zeros(data.n)), k, "gf", 0.1)
    assert np.all(est.coeffs == 0)
    assert predict(est, data.X[0]) == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_tikhonov_matches_direct_solve(seed):
    data, k = random_instance(seed, alpha=1 + seed % 2)
    lam = 0.05 + 0.9 * np.random.default_rng(seed + 100).random()
    est = fit_local(data, k, "tr", lam)
    G = kernel_matrix(k, data.grid).values
    ref = tikhonov_direct(data.X, data.y, data.grid.weights, G, lam)
    assert np.linalg.norm(est.coeffs - ref) <= 1e-8 * max(np.linalg.norm(ref), 1e-300)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 100), st.sampled_from(["tr", "itr:s=3", "gf"]))
def test_scaling_covariance(seed, a, filt):
    data, k = random_instance(seed)
    c1 = fit_local(data, k, filt, 0.2).coeffs
    c2 = fit_local(Dataset(data.grid, data.X, a * data.y), k, filt, 0.2).coeffs
    assert np.allclose(c2, a * c1, rtol=1e-10, atol=1e-12 * a * np.abs(c1).max())


def test_large_lambda_bound():
    data, k = random_instance(5)
    lam = 0.99
    small = Dataset(data.grid, data.X, 1e-6 * data.y)
    sys = assemble(small, k)
    est = fit_local(small, k, "tr", lam)
    # ||G^{1/2} c|| <= ||G^{1/2} b|| / lam since |Psi| <= 1/lam
    assert np.linalg.norm(sys.G_half @ est.coeffs) <= np.linalg.norm(sys.G_half @ sys.b) / lam * (1 + 1e-9)


def test_spectral_safety_and_lambda_domain():
    data, k = random_instance(6)
    est = fit_local(data, k, "gf", 0.3)
    assert est.diagnostics["min_filtered_eigenvalue"] >= 0.0
    with pytest.raises(DomainError):
        fit_local(data, k, "gf", 1.0)


def test_ill_conditioned_gram():
    nodes = np.array([0.0, 0.5, 0.5 + 1e-9, 1.0])
    with pytest.raises(IllConditionedError) as info:
        gram_factor(K2, Grid(nodes))
    assert info.value.condition_number > 1e12
    with pytest.raises(IllConditionedError):
        factor_gram(np.diag([1.0, 1e-14]))


def test_predict_linear_and_shapes():
    data, k = random_instance(7)
    est = fit_local(data, k, "tr", 0.1)
    x1, x2 = data.X[0], data.X[-1]
    assert predict(est, 2 * x1 - x2) == pytest.approx(2 * predict(est, x1) - predict(est, x2), abs=1e-12)
    assert np.allclose(predict(est, data.X), [predict(est, r) for r in data.X])
    with pytest.raises(ShapeError):
        predict(est, np.zeros(data.grid.m + 2))


def test_predict_matches_fine_quadrature():
    # beta_hat and x are both smooth closed forms; compare the Riemann rule with adaptive quadrature
    from scipy import integrate
    g = equispaced(256)
    c = np.zeros(256)
    c[::32] = 1.0
    est = SlopeEstimate(g, c, K1)
    nodes = g.interior
    beta = lambda t: sum(ck * sobolev_kernel_eval(K1, t, r) for ck, r in zip(c, nodes) if ck)
    x = lambda t: np.cos(3 * t)
    ref = integrate.quad(lambda t: beta(t) * x(t), 0, 1, limit=400, points=nodes[::32])[0]
    assert abs(predict(est, x(g.nodes)) - ref) <= 10 * 256 ** -0.5


def test_error_functionals(world):
    g, lk, gt = world
    truth = SlopeEstimate(g, np.zeros(g.m), K2)
    assert estimation_error_W(truth, np.zeros(gt.J), lk) == 0.0
    assert estimation_error_W(truth, gt.f0_coeffs, lk) == pytest.approx(gt.f0_norm_sq, rel=1e-10)
    data = gen_dataset(gt, g, 400, NoiseSpec(0.1), seed=1)
    est = fit_local(data, K2, "gf", 0.05)
    e_w = estimation_error_W(est, gt.f0_coeffs, lk)
    e_g = estimation_error_gram(est, gt.beta0, gt.f0_norm_sq)
    assert e_g == pytest.approx(e_w, rel=1e-6)
    assert prediction_risk(truth, np.zeros(g.m), gt.lc) == 0.0
    ident = DiscretizedOperator(g, np.eye(g.m), "other")
    d = est.beta_at_nodes() - gt.beta0
    assert prediction_risk(est, gt.beta0, ident) == pytest.approx(float(g.weights @ d**2), rel=1e-12)


def test_estimation_error_matches_sobolev_norm():
    g = equispaced(512)
    lk = eigendecompose(discretize(kernel_matrix(K1, g), g))
    gt = build_ground_truth(lk, 0.5, 0.5, 32, seed=2, kernel=K1)
    est = fit_local(gen_dataset(gt, g, 300, NoiseSpec(0.2), 4), K1, "tr", 0.05)
    route1 = estimation_error_W(est, gt.f0_coeffs, lk)
    route2 = sobolev_norm(lk, est.beta_at_nodes() - gt.beta0, inv_cutoff=1e-12) ** 2
    assert route2 == pytest.approx(route1, rel=0.02)


def test_prediction_risk_monte_carlo(world):
    g, lk, gt = world
    est = fit_local(gen_dataset(gt, g, 200, NoiseSpec(0.1), 9), K2, "gf", 0.05)
    risk = prediction_risk(est, gt.beta0, gt.lc)
    X = sample_X(gt, 10_000, seed=11)
    d = est.beta_at_nodes() - gt.beta0
    vals = (X[:, :-1] @ (g.weights * d)) ** 2
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - risk) <= 3 * se


def test_error_decreases_with_n(world):
    g, lk, gt = world
    med = []
    for n in (100, 400, 1600):
        errs = [estimation_error_W(fit_local(gen_dataset(gt, g, n, NoiseSpec(0.1), s), K2, "gf", 0.02),
                                   gt.f0_coeffs, lk) for s in range(5)]
        med.append(np.median(errs))
    print("median errors", med)
    assert med[-1] < med[0]


def test_slope_estimate_json():
    data, k = random_instance(8)
    est = fit_local(data, k, "itr:s=2", 0.1)
    back = SlopeEstimate.from_json(est.to_json())
    assert np.array_equal(back.coeffs, est.coeffs)
    assert back.grid == est.grid and back.lam == est.lam and back.filter == "itr:s=2"
    assert set(est.to_dict()) == {"alpha", "nodes", "coeffs", "lambda", "filter"}
