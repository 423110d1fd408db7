"""Mean-path estimate, projection coefficients, transforms, and MISE."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from driftlab import (
    AliasingError,
    EstimateFn,
    GridMismatchError,
    MeanDriftEstimator,
    PathEnsemble,
    ProjectionDerivativeEstimator,
    SampledPath,
    TimeGrid,
    TrigBasis,
    compute_coefficients,
    derivative_estimate,
    estimate_b,
    gbm_drift_estimate,
    ips_backtransform,
    mise,
)


def ensemble_from(grid, *value_rows):
    return PathEnsemble(grid, np.vstack(value_rows))


# --- mean-path estimate --------------------------------------------------------


def test_estimate_b_is_the_copy_average():
    grid = TimeGrid(1.0, 20)
    t = grid.points
    ens = ensemble_from(grid, t, 3 * t)
    est = estimate_b(ens)
    np.testing.assert_allclose(est.values, 2 * t, atol=1e-14)
    assert est.kind == "mean-path"


def test_estimate_b_cancels_symmetric_noise():
    grid = TimeGrid(1.0, 20)
    f = np.sin(3 * grid.points)
    ens = ensemble_from(grid, f, -f)
    np.testing.assert_allclose(estimate_b(ens).values, 0.0, atol=1e-14)


def test_estimate_b_validates_input():
    with pytest.raises(TypeError):
        estimate_b(np.zeros((3, 5)))


# --- projection coefficients ----------------------------------------------------


def test_coefficients_of_linear_mean_path():
    # mean path t has increment dt at every step, so a_1 recovers the full
    # telescoping increment exactly and the oscillating terms vanish
    grid = TimeGrid(1.0, 1000)
    basis = TrigBasis(1.0, 12)
    coeffs = compute_coefficients(SampledPath(grid, grid.points), basis, 12)
    assert coeffs.coefficient(1) == pytest.approx(1.0, abs=1e-12)
    assert np.abs(coeffs.values[1:]).max() <= 1e-12


def test_coefficients_of_quadratic_mean_path_match_analytic_values():
    # X = t^2 has derivative 2t whose expansion on [0, 1] is
    # a_1 = 1, cosine terms 0, sine terms -sqrt(2) / (pi j)
    grid = TimeGrid(1.0, 1000)
    basis = TrigBasis(1.0, 12)
    coeffs = compute_coefficients(SampledPath(grid, grid.points**2), basis, 12)
    analytic = np.zeros(12)
    analytic[0] = 1.0
    for j in range(1, 6):
        analytic[2 * j] = -np.sqrt(2.0) / (np.pi * j)
    assert np.abs(coeffs.values - analytic).max() <= 5e-3


def test_coefficients_of_flat_path_are_zero():
    grid = TimeGrid(1.0, 100)
    basis = TrigBasis(1.0, 7)
    coeffs = compute_coefficients(SampledPath(grid, np.ones(grid.size)), basis, 7)
    np.testing.assert_array_equal(coeffs.values, 0.0)


def test_coefficients_are_prefix_nested():
    grid = TimeGrid(1.0, 200)
    path = SampledPath(grid, np.sin(grid.points))
    basis = TrigBasis(1.0, 12)
    full = compute_coefficients(path, basis, 12)
    head = compute_coefficients(path, basis, 5)
    np.testing.assert_array_equal(head.values, full.values[:5])


def test_coefficients_nyquist_guard():
    grid = TimeGrid(1.0, 20)
    basis = TrigBasis(1.0, 15)
    with pytest.raises(AliasingError, match="Nyquist"):
        compute_coefficients(SampledPath(grid, grid.points), basis, 10)
    # m_max = 9 keeps the top frequency below n/2 = 10
    compute_coefficients(SampledPath(grid, grid.points), basis, 9)


def test_coefficients_validate_bounds_and_horizon():
    grid = TimeGrid(1.0, 100)
    path = SampledPath(grid, grid.points)
    basis = TrigBasis(1.0, 5)
    with pytest.raises(ValueError):
        compute_coefficients(path, basis, 6)
    with pytest.raises(ValueError):
        compute_coefficients(path, basis, 0)
    with pytest.raises(ValueError):
        compute_coefficients(path, TrigBasis(2.0, 5), 5)


def test_bessel_partial_sums_bounded_by_derivative_norm():
    # partial sums of squared coefficients are nondecreasing and bounded by
    # the squared norm of the derivative (here |2t|^2 integrates to 4/3);
    # the left-sum bias decays like 1/n, so a fine grid keeps it below 1e-6
    grid = TimeGrid(1.0, 2000)
    basis = TrigBasis(1.0, 12)
    coeffs = compute_coefficients(SampledPath(grid, grid.points**2), basis, 12)
    partial = np.cumsum(coeffs.values**2)
    assert np.all(np.diff(partial) >= 0.0)
    assert partial[-1] <= 4.0 / 3.0 + 1e-6


# --- projection estimates --------------------------------------------------------


def test_derivative_estimate_dimension_one_is_constant():
    grid = TimeGrid(4.0, 100)
    basis = TrigBasis(4.0, 3)
    coeffs = compute_coefficients(SampledPath(grid, grid.points), basis, 3)
    est = derivative_estimate(coeffs, 1)
    np.testing.assert_allclose(est.values, coeffs.coefficient(1) / 2.0, atol=1e-12)
    with pytest.raises(ValueError):
        derivative_estimate(coeffs, 0)
    with pytest.raises(ValueError):
        derivative_estimate(coeffs, 4)


def test_nested_projections_share_coefficients():
    grid = TimeGrid(1.0, 300)
    basis = TrigBasis(1.0, 9)
    coeffs = compute_coefficients(SampledPath(grid, grid.points**2), basis, 9)
    small = derivative_estimate(coeffs, 3)
    large = derivative_estimate(coeffs, 9)
    assert small.coeffs is large.coeffs is coeffs
    assert small.dim == 3 and large.dim == 9
    # the difference of the two is exactly the dropped tail terms
    tail = coeffs.values[3:] @ basis.sample(grid, 9)[3:]
    np.testing.assert_allclose(large.values - small.values, tail, atol=1e-12)


def test_projection_error_of_quadratic_is_near_the_truncation_tail():
    # noiseless input: the only errors are the projection tail (analytic)
    # and the left-sum quadrature bias
    grid = TimeGrid(1.0, 150)
    basis = TrigBasis(1.0, 12)
    coeffs = compute_coefficients(SampledPath(grid, grid.points**2), basis, 12)
    est = derivative_estimate(coeffs, 11)
    result = mise(est, lambda t: 2 * t)
    tail = 1.0 / 3.0 - sum(2.0 / (np.pi * j) ** 2 for j in range(1, 6))
    assert result == pytest.approx(0.037514, abs=1e-4)
    assert result <= tail + 10.0 / 150.0


def test_estimate_fn_calls_use_closed_form_for_projections():
    grid = TimeGrid(1.0, 150)
    basis = TrigBasis(1.0, 6)
    coeffs = compute_coefficients(SampledPath(grid, grid.points**2), basis, 6)
    est = derivative_estimate(coeffs, 6)
    t = 0.37123  # not a grid point
    manual = sum(coeffs.coefficient(j) * basis.eval_basis(j, t) for j in range(1, 7))
    assert est(t) == pytest.approx(manual, abs=1e-12)


def test_estimate_fn_validates_values_and_is_frozen():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(ValueError):
        EstimateFn(grid, np.zeros(5))
    est = EstimateFn(grid, np.zeros(grid.size))
    with pytest.raises(ValueError):
        est.values[0] = 1.0


# --- scenario-specific transforms -------------------------------------------------


def test_gbm_drift_shift():
    grid = TimeGrid(1.0, 50)
    flat = EstimateFn(grid, np.zeros(grid.size))
    np.testing.assert_allclose(gbm_drift_estimate(flat, 0.5).values, 0.125)
    sloped = EstimateFn(grid, grid.points - 0.125)
    np.testing.assert_allclose(
        gbm_drift_estimate(sloped, 0.5).values, grid.points, atol=1e-14
    )


def test_ips_backtransform_exact_cases():
    grid = TimeGrid(1.0, 150)
    t = grid.points
    zero = ips_backtransform(EstimateFn(grid, np.zeros(grid.size)))
    np.testing.assert_array_equal(zero.values, 0.0)
    # b(t) = t^2 has b + integral(b) = t^2 (1 + t/3)
    recovered = ips_backtransform(SampledPath(grid, t**2 * (1 + t / 3)))
    assert np.abs(recovered.values - t**2).max() <= 1e-4
    # b(t) = 1 - exp(-t) has b + integral(b) = t
    recovered = ips_backtransform(SampledPath(grid, t))
    assert np.abs(recovered.values - (1 - np.exp(-t))).max() <= 1e-4


def test_ips_backtransform_rejects_bare_arrays():
    with pytest.raises(TypeError):
        ips_backtransform(np.zeros(10))


# --- integrated squared error ------------------------------------------------------


def test_mise_values():
    grid = TimeGrid(1.0, 150)
    t = grid.points
    est = EstimateFn(grid, 2 * t)
    assert mise(est, lambda s: 2 * s) == 0.0
    assert mise(EstimateFn(grid, np.ones(grid.size)), lambda s: 0.0) == pytest.approx(1.0)
    assert mise(EstimateFn(grid, np.zeros(grid.size)), lambda s: 2 * s) == pytest.approx(
        4.0 / 3.0, abs=1e-4
    )


def test_mise_accepts_paths_and_arrays():
    grid = TimeGrid(1.0, 20)
    values = grid.points**2
    as_fn = mise(EstimateFn(grid, values), lambda s: 0.0)
    as_path = mise(SampledPath(grid, values), lambda s: 0.0)
    as_array = mise(values, lambda s: 0.0, grid=grid)
    assert as_fn == as_path == as_array
    with pytest.raises(ValueError):
        mise(values, lambda s: 0.0)


def test_mise_grid_mismatch():
    est = EstimateFn(TimeGrid(1.0, 10), np.zeros(11))
    with pytest.raises(GridMismatchError):
        mise(est, lambda s: 0.0, grid=TimeGrid(1.0, 20))
    with pytest.raises(GridMismatchError):
        mise(est, SampledPath(TimeGrid(1.0, 20), np.zeros(21)))


# --- scikit-learn style wrappers -----------------------------------------------------


def test_mean_drift_estimator_wrapper():
    grid = TimeGrid(1.0, 30)
    ens = ensemble_from(grid, grid.points, 3 * grid.points)
    model = MeanDriftEstimator()
    with pytest.raises(NotFittedError):
        model.predict([0.5])
    model.fit(ens)
    np.testing.assert_allclose(model.predict([0.0, 0.5, 1.0]), [0.0, 1.0, 2.0], atol=1e-12)
    with pytest.raises(ValueError):
        model.predict([1.5])
    assert model.get_params() == {}


def test_projection_estimator_wrapper_matches_functional_route():
    grid = TimeGrid(1.0, 200)
    ens = ensemble_from(grid, grid.points**2, grid.points**2)
    model = ProjectionDerivativeEstimator(dim=5, max_dim=9)
    assert model.get_params() == {"dim": 5, "max_dim": 9}
    model.fit(ens)
    coeffs = compute_coefficients(ens, TrigBasis(1.0, 9), 9)
    expected = derivative_estimate(coeffs, 5)
    np.testing.assert_allclose(model.estimate_.values, expected.values, atol=1e-14)
    t = np.array([0.1, 0.7])
    np.testing.assert_allclose(model.predict(t), expected(t), atol=1e-14)


def test_projection_estimator_validates_dims():
    grid = TimeGrid(1.0, 100)
    ens = ensemble_from(grid, grid.points)
    with pytest.raises(ValueError):
        ProjectionDerivativeEstimator(dim=5, max_dim=3).fit(ens)
