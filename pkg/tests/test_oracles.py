import math

import numpy as np
import pytest

from cgkit.core import FIRST_ORDER, ZEROTH_ORDER, NonFiniteError, OracleCounters, RngStream
from cgkit.feasible_sets import L1Ball
from cgkit.oracles import (effective_nu, growth_probe, growth_ratio, minibatch_gradient, zo_samples,
                           zo_gradient, zo_mse_probe, zo_mse_samples)
from cgkit.problems import (BlobsConfig, HingeSquaredObjective, InterpolatingQuadratic,
                            QuarticObjective, default_x_star, generate_blobs)
from cgkit.rates import loglog_slope


def identical_quadratic(n=5, d=4, seed=0):
    A0 = RngStream(seed, 9).generator.standard_normal((d, d))
    return InterpolatingQuadratic(np.repeat(A0[None], n, axis=0), default_x_star(d))


class NanObjective(InterpolatingQuadratic):
    def component_values_at(self, X, idx):
        out = super().component_values_at(X, idx)
        out[idx == 2] = np.nan
        return out


def test_objective_contract_finite_sum_and_gradients(quad20):
    g = RngStream(2, 0).generator
    for obj in (quad20, QuarticObjective(g.uniform(0, 1, (7, 20)), 1.0)):
        for _ in range(5):
            x = g.uniform(-0.5, 0.5, obj.d)
            vals = obj.component_values(x, np.arange(obj.n))
            assert math.isclose(vals.mean(), obj.value(x), rel_tol=1e-10)
            assert np.allclose(obj.all_component_grads(x).mean(axis=0), obj.grad(x), rtol=1e-10,
                               atol=1e-14)
            i = int(g.integers(obj.n))
            h = 1e-6
            fd = np.array([(obj.component_value(x + h * e, i) - obj.component_value(x - h * e, i))
                           / (2 * h) for e in np.eye(obj.d)])
            ref = obj.component_grads(x, [i])[0]
            assert np.linalg.norm(fd - ref) <= 1e-5 * max(1.0, np.linalg.norm(ref))


def test_minibatch_identical_components_is_exact():
    obj = identical_quadratic()
    x = np.array([0.1, -0.2, 0.3, 0.0])
    est = minibatch_gradient(obj, x, 3 * obj.n, RngStream(0), OracleCounters())
    assert np.allclose(est.vector, obj.grad(x), rtol=1e-14, atol=1e-15)
    assert est.mode == FIRST_ORDER and est.batch_size == 15 and est.nu == 0.0


def test_minibatch_unbiased_z_scores(quad20):
    x = L1Ball(20).random_point(RngStream(1))
    rng, c = RngStream(3), OracleCounters()
    G = np.stack([minibatch_gradient(quad20, x, 4, rng, c).vector for _ in range(10_000)])
    z = (G.mean(axis=0) - quad20.grad(x)) / (G.std(axis=0, ddof=1) / 100)
    assert np.all(np.abs(z) <= 4)
    assert c.sfo_calls == 40_000 and c.szo_calls == 0


def test_minibatch_counts_and_rejects():
    c = OracleCounters()
    obj = identical_quadratic()
    minibatch_gradient(obj, np.zeros(4), 7, RngStream(0), c)
    assert c.sfo_calls == 7
    with pytest.raises(ValueError):
        minibatch_gradient(obj, np.zeros(4), 0, RngStream(0), c)


def test_zo_counts_and_errors():
    obj = identical_quadratic()
    c = OracleCounters()
    est = zo_gradient(obj, np.zeros(4), 5, 1e-3, RngStream(0), c)
    assert c.szo_calls == 10 and c.sfo_calls == 0
    assert est.mode == ZEROTH_ORDER and est.nu == 1e-3
    with pytest.raises(ValueError):
        zo_gradient(obj, np.zeros(4), 5, 0.0, RngStream(0), c)
    with pytest.raises(ValueError):
        zo_gradient(obj, np.zeros(4), 0, 1e-3, RngStream(0), c)


def test_zo_non_finite_names_sample():
    A = np.repeat(np.eye(3)[None], 4, axis=0)
    obj = NanObjective(A, np.zeros(3))
    with pytest.raises(NonFiniteError, match="sample .* \\(component 2\\)"):
        zo_gradient(obj, np.ones(3), 50, 1e-3, RngStream(0), OracleCounters())


def test_zo_chunked_equals_direct_sum():
    # batch larger than one chunk must still be the plain average
    obj = identical_quadratic(n=2, d=3)
    x = np.array([0.2, 0.1, -0.1])
    big = zo_gradient(obj, x, 20_000, 1e-2, RngStream(5), OracleCounters()).vector
    g = RngStream(5).generator
    u = g.standard_normal((16384, 3))
    i1 = g.integers(0, 2, 16384)
    u2 = g.standard_normal((20_000 - 16384, 3))
    i2 = g.integers(0, 2, 20_000 - 16384)
    U, I = np.vstack([u, u2]), np.concatenate([i1, i2])
    q = (obj.component_values_at(x + 1e-2 * U, I) - obj.component_values(x, I)) / 1e-2
    assert np.allclose(big, (q @ U) / 20_000, rtol=1e-12, atol=1e-15)


def test_zo_quadratic_is_unbiased(quad20):
    x = L1Ball(20).random_point(RngStream(2))
    rng = RngStream(4)
    S = np.stack([zo_gradient(quad20, x, 1, 0.05, rng, OracleCounters()).vector
                  for _ in range(100_000)])
    se = S.std(axis=0, ddof=1) / math.sqrt(len(S))
    assert np.all(np.abs(S.mean(axis=0) - quad20.grad(x)) <= 4 * se)


def test_zo_quartic_mean_is_smoothed_gradient():
    g = RngStream(11).generator
    obj = QuarticObjective(g.uniform(0, 1, (5, 6)), 2.0)
    x = g.uniform(-0.5, 0.5, 6)
    nu = 0.2
    S = np.stack([zo_gradient(obj, x, 1, nu, RngStream(12, k), OracleCounters()).vector
                  for k in range(40_000)])
    se = S.std(axis=0, ddof=1) / math.sqrt(len(S))
    assert np.all(np.abs(S.mean(axis=0) - obj.smoothed_grad(x, nu)) <= 4.5 * se)


def test_quartic_smoothed_gradient_bias_bound():
    g = RngStream(13).generator
    obj = QuarticObjective(g.uniform(0, 1, (5, 8)), 1.0)
    for nu in (1e-1, 1e-2, 1e-3):
        x = g.uniform(-1, 1, 8)
        bias = np.linalg.norm(obj.smoothed_grad(x, nu) - obj.grad(x))
        assert bias <= nu / 2 * obj.L * (obj.d + 3) ** 1.5


def test_effective_nu_floor():
    assert effective_nu(1e-3, np.zeros(3)) == 1e-3
    assert effective_nu(1e-12, np.array([0.0, -4.0])) == pytest.approx(5e-7)


def test_mse_probe_needs_trials_and_f_star(quad20):
    with pytest.raises(ValueError, match="100"):
        zo_mse_probe(quad20, np.zeros(20), 1, 1e-3, 50, RngStream(0))
    obj = HingeSquaredObjective(np.eye(3), np.ones(3))
    with pytest.raises(ValueError, match="f_star"):
        zo_mse_probe(obj, np.zeros(3), 1, 1e-3, 200, RngStream(0))


def test_mse_probe_at_optimum_below_smoothing_term(quad20):
    nu = 1e-3
    mse = zo_mse_probe(quad20, quad20.x_star, 4, nu, 500, RngStream(1))
    assert mse <= nu**2 * quad20.L_max**2 * (quad20.d + 6) ** 3


def test_mse_probe_halves_when_batch_doubles(quad20):
    x = L1Ball(20).random_point(RngStream(6))
    m8 = zo_mse_probe(quad20, x, 8, 1e-4, 4000, RngStream(7))
    m16 = zo_mse_probe(quad20, x, 16, 1e-4, 4000, RngStream(8))
    assert abs(m16 / m8 - 0.5) <= 0.25 * 0.5


def test_mse_probe_insensitive_to_nu_on_quadratic(quad20):
    x = L1Ball(20).random_point(RngStream(9))
    a = zo_mse_probe(quad20, x, 1, 1e-2, 40_000, RngStream(10))
    b = zo_mse_probe(quad20, x, 1, 1e-3, 40_000, RngStream(10))
    assert abs(a - b) / b < 0.05


def test_mse_variance_term_scales_inverse_batch(quad20):
    x = L1Ball(20).random_point(RngStream(14))
    bs = [1, 2, 4, 8, 16, 32, 64]
    m = [zo_mse_probe(quad20, x, b, 1e-5, 1500, RngStream(15, b)) for b in bs]
    assert abs(loglog_slope(bs, m) + 1) <= 0.15


def test_mse_samples_shape(quad20):
    s = zo_mse_samples(quad20, np.zeros(20), 2, 1e-3, 100, RngStream(0))
    assert s.shape == (100,) and np.all(s >= 0)


def test_growth_probe_zero_for_identical_components():
    obj = identical_quadratic()
    assert growth_probe(obj, L1Ball(4), 20, RngStream(0)) <= 1e-20


def test_growth_probe_validates(quad20):
    with pytest.raises(ValueError):
        growth_probe(quad20, L1Ball(20), 5, RngStream(0))
    with pytest.raises(ValueError):
        growth_ratio(quad20, np.zeros(20), kind="other")
    assert math.isnan(growth_ratio(quad20, quad20.x_star))


def test_growth_probe_within_analytic_rho(quad20):
    probe = growth_probe(quad20, L1Ball(20), 200, RngStream(3))
    assert 0 < probe <= 1.05 * quad20.rho


def test_variance_probe_below_moment_probe(quad20):
    rng = RngStream(4)
    for x in (L1Ball(20).random_point(rng) for _ in range(50)):
        assert growth_ratio(quad20, x, "variance") <= growth_ratio(quad20, x, "moment") + 1e-12


def test_hinge_growth_probe_bounded_by_lmax_over_l():
    X, y, _ = generate_blobs(BlobsConfig(n=300, d=10, seed=3))
    obj = HingeSquaredObjective(X, y, f_star=0.0)
    probe = growth_probe(obj, L1Ball(10), 50, RngStream(5))
    assert probe <= 1.1 * obj.L_max / obj.L


def test_zo_samples_average_is_the_estimator():
    obj = identical_quadratic(n=3, d=4)
    x = np.array([0.3, -0.1, 0.2, 0.0])
    S = zo_samples(obj, x, 300, 1e-2, RngStream(2))
    est = zo_gradient(obj, x, 300, 1e-2, RngStream(2), OracleCounters())
    assert S.shape == (300, 4)
    assert np.allclose(S.mean(axis=0), est.vector, rtol=1e-12, atol=1e-15)
