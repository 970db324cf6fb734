import warnings

import numpy as np
import pytest
from scipy import integrate
from scipy.interpolate import BSpline

from rpfclust.errors import (
    DegenerateDFError,
    InvalidSpecError,
    RankDeficiencyError,
    SelectionError,
    UnsupportedPenaltyError,
)
from rpfclust.simulate import ScenarioSpec, gen_scenario
from rpfclust.smoothing import (
    BasisSpec,
    CurveSet,
    NonEquispacedGridWarning,
    TimeGrid,
    bspline_design,
    gcv_score,
    hat_trace,
    penalized_fit,
    roughness_matrix,
    select_smoothing,
    smooth_dataset,
)


@pytest.fixture
def grid50():
    return TimeGrid.linspace(0.0, 3.0, 50)


@pytest.mark.parametrize("n,K", [(50, 10), (101, 101), (30, 4), (200, 37)])
def test_design_partition_of_unity_and_support(n, K):
    grid = TimeGrid.linspace(-1.0, 2.0, n)
    Phi = bspline_design(grid, BasisSpec(K))
    assert Phi.shape == (n, K)
    np.testing.assert_allclose(Phi.sum(axis=1), 1.0, atol=1e-12)
    assert (np.count_nonzero(Phi, axis=1) <= 4).all()


def test_design_reproduces_lines(grid50):
    Phi = bspline_design(grid50, BasisSpec(10))
    y = 2.5 * grid50.points - 1.0
    c, *_ = np.linalg.lstsq(Phi, y, rcond=None)
    assert np.max(np.abs(Phi @ c - y)) <= 1e-10


def test_basis_spec_validation():
    with pytest.raises(InvalidSpecError):
        BasisSpec(3, order=4)
    with pytest.raises(InvalidSpecError):
        BasisSpec(6, lam=-1.0)
    with pytest.raises(InvalidSpecError):
        BasisSpec(6, knots=[0.5])


def test_design_rejects_points_outside_interior_knot_span():
    with pytest.raises(InvalidSpecError):
        bspline_design(TimeGrid.linspace(0.0, 1.0, 20), BasisSpec(6, knots=[-0.5, 0.5]))


def _coef_of(grid, spec, f):
    Phi = bspline_design(grid, spec)
    c, *_ = np.linalg.lstsq(Phi, f(grid.points), rcond=None)
    return c


def test_roughness_null_space(grid50):
    spec = BasisSpec(12)
    R = roughness_matrix(spec, grid50)
    np.testing.assert_allclose(R, R.T, atol=0)
    c_const = _coef_of(grid50, spec, lambda t: np.ones_like(t))
    c_line = _coef_of(grid50, spec, lambda t: 3 * t - 2)
    assert abs(c_const @ R @ c_const) <= 1e-10
    assert abs(c_line @ R @ c_line) <= 1e-10
    eig = np.linalg.eigvalsh(R)
    assert eig.min() > -1e-10 * eig.max()
    assert np.sum(eig > 1e-9 * eig.max()) == spec.K - 2


def test_roughness_psd_random(grid50, rng):
    R = roughness_matrix(BasisSpec(15), grid50)
    for _ in range(50):
        c = rng.normal(size=15)
        assert c @ R @ c >= -1e-10


def test_roughness_matches_adaptive_quadrature():
    grid = TimeGrid.linspace(0.0, 1.0, 20)
    spec = BasisSpec(7)
    R = roughness_matrix(spec, grid)
    t = spec.knot_vector(grid)
    d2 = [BSpline(t, np.eye(7)[k], 3).derivative(2) for k in range(7)]
    breaks = np.unique(t)
    for k, l in [(0, 0), (2, 3), (6, 6), (1, 4)]:
        val = sum(integrate.quad(lambda x: d2[k](x) * d2[l](x), a, b)[0] for a, b in zip(breaks[:-1], breaks[1:]))
        assert R[k, l] == pytest.approx(val, rel=1e-9, abs=1e-9)


def test_roughness_requires_order_3():
    with pytest.raises(UnsupportedPenaltyError):
        roughness_matrix(BasisSpec(5, order=2), TimeGrid.linspace(0, 1, 10))


def test_penalized_fit_interpolates_at_lambda0(rng):
    grid = TimeGrid.linspace(0.0, 1.0, 12)
    spec = BasisSpec(12)
    Phi = bspline_design(grid, spec)
    R = roughness_matrix(spec, grid)
    y = rng.normal(size=12)
    c = penalized_fit(y, Phi, R, 0.0)
    np.testing.assert_allclose(Phi @ c, y, atol=1e-8)


@pytest.mark.parametrize("lam", [0.0, 1e-3, 1.0, 1e3, 1e6])
def test_penalized_fit_keeps_lines(grid50, lam):
    spec = BasisSpec(15)
    Phi, R = bspline_design(grid50, spec), roughness_matrix(spec, grid50)
    y = -0.7 * grid50.points + 4.0
    np.testing.assert_allclose(Phi @ penalized_fit(y, Phi, R, lam), y, atol=1e-8)


def test_penalized_fit_is_minimizer(grid50, rng):
    spec = BasisSpec(15)
    Phi, R = bspline_design(grid50, spec), roughness_matrix(spec, grid50)
    y = np.sin(3 * grid50.points) + rng.normal(scale=0.1, size=50)
    lam = 0.05
    c = penalized_fit(y, Phi, R, lam)

    def obj(v):
        r = y - Phi @ v
        return r @ r + lam * v @ R @ v

    base = obj(c)
    for _ in range(100):
        assert base <= obj(c + rng.normal(scale=1e-3, size=c.size)) + 1e-12


def test_penalized_fit_ols_agreement(grid50, rng):
    spec = BasisSpec(20)
    Phi, R = bspline_design(grid50, spec), roughness_matrix(spec, grid50)
    y = rng.normal(size=50)
    ols = np.linalg.solve(Phi.T @ Phi, Phi.T @ y)
    np.testing.assert_allclose(penalized_fit(y, Phi, R, 0.0), ols, atol=1e-8)


def test_penalized_fit_rank_deficient():
    grid = TimeGrid.linspace(0.0, 1.0, 10)
    spec = BasisSpec(14)
    Phi, R = bspline_design(grid, spec), roughness_matrix(spec, grid)
    with pytest.raises(RankDeficiencyError, match="lambda > 0"):
        penalized_fit(np.zeros(10), Phi, R, 0.0)
    penalized_fit(np.zeros(10), Phi, R, 1e-3)


def test_gcv_interpolation_and_trace(rng):
    grid = TimeGrid.linspace(0.0, 1.0, 15)
    Y = rng.normal(size=(3, 15))
    spec = BasisSpec(15)
    Phi, R = bspline_design(grid, spec), roughness_matrix(spec, grid)
    assert gcv_score(Y, Phi, R, 0.0) == 0.0
    spec = BasisSpec(8)
    Phi, R = bspline_design(grid, spec), roughness_matrix(spec, grid)
    assert hat_trace(Phi, R, 0.0) == pytest.approx(8, abs=1e-9)
    assert gcv_score(CurveSet(Y, grid), Phi, R, 0.0) > 0


def test_gcv_degenerate_df():
    grid = TimeGrid.linspace(0.0, 1.0, 10)
    spec = BasisSpec(14)
    Phi, R = bspline_design(grid, spec), roughness_matrix(spec, grid)
    Y = np.random.default_rng(0).normal(size=(2, 10))
    with pytest.raises(DegenerateDFError):
        gcv_score(Y, Phi, R, 1e-12)


def test_hat_trace_decreases_to_two():
    grid = TimeGrid.linspace(0.0, 1.0, 60)
    spec = BasisSpec(20)
    Phi, R = bspline_design(grid, spec), roughness_matrix(spec, grid)
    lams = 10.0 ** np.arange(-6, 5)
    df = np.array([hat_trace(Phi, R, lam) for lam in lams])
    assert np.all(np.diff(df) < 0)
    assert hat_trace(Phi, R, 1e-14) == pytest.approx(20, abs=1e-4)
    # the limit is the dimension of the penalty null space
    assert 2.0 < df[-1] < 2.01


def test_select_smoothing_contract(rng):
    grid = TimeGrid.linspace(0.0, 1.0, 40)
    Y = np.sin(6 * grid.points) + rng.normal(scale=0.2, size=(5, 40))
    curves = CurveSet(Y, grid)
    K, lam, score = select_smoothing(curves, [10], [0.01])
    assert (K, lam) == (10, 0.01)
    Ks, lams = [8, 12, 16], [1e-4, 1e-2, 1.0]
    K, lam, score = select_smoothing(curves, Ks, lams)
    brute = {}
    for k in Ks:
        spec = BasisSpec(k)
        Phi, R = bspline_design(grid, spec), roughness_matrix(spec, grid)
        for lv in lams:
            brute[(k, lv)] = gcv_score(curves, Phi, R, lv)
    assert (K, lam) == min(brute, key=brute.get)
    assert score == pytest.approx(brute[(K, lam)])
    with pytest.raises(SelectionError):
        select_smoothing(curves, [], [1.0])


def test_select_smoothing_order_invariant(rng):
    grid = TimeGrid.linspace(0.0, 1.0, 30)
    curves = CurveSet(np.cos(4 * grid.points) + rng.normal(scale=0.3, size=(4, 30)), grid)
    a = select_smoothing(curves, [12, 6, 9], [0.1, 10.0, 1e-3])
    b = select_smoothing(curves, [9, 6, 12, 6], [1e-3, 10.0, 0.1])
    assert a == b


def test_select_smoothing_scenario1():
    ds = gen_scenario(ScenarioSpec.default(1, seed=3), replicate=0)
    K, lam, score = select_smoothing(ds.curves, [50, 100, 200], [0.1, 1, 10])
    spec = BasisSpec(K, lam=lam)
    Phi, R = bspline_design(ds.curves.grid, spec), roughness_matrix(spec, ds.curves.grid)
    assert np.isfinite(score)
    assert hat_trace(Phi, R, lam) < ds.curves.n


def test_select_smoothing_all_degenerate():
    grid = TimeGrid.linspace(0.0, 1.0, 6)
    curves = CurveSet(np.random.default_rng(1).normal(size=(2, 6)), grid)
    with pytest.raises(SelectionError):
        select_smoothing(curves, [6, 8], [0.0])


def test_smooth_dataset_rows(rng):
    grid = TimeGrid.linspace(0.0, 2.0, 40)
    y = np.cos(grid.points) + rng.normal(scale=0.05, size=40)
    spec = BasisSpec(10, lam=0.1)
    one = smooth_dataset(CurveSet(y[None, :], grid), spec)
    Phi, R = bspline_design(grid, spec), roughness_matrix(spec, grid)
    assert one.shape == (1, 10)
    np.testing.assert_allclose(one.C[0], penalized_fit(y, Phi, R, 0.1), atol=1e-12)
    dup = smooth_dataset(CurveSet(np.vstack([y, y, 2 * y]), grid), spec)
    np.testing.assert_array_equal(dup.C[0], dup.C[1])


def test_smooth_dataset_scenario3_full_size():
    ds = gen_scenario(ScenarioSpec.default(3, seed=0), replicate=0)
    C = smooth_dataset(ds.curves, BasisSpec(101, lam=1e-4))
    assert C.shape == (101, 101)
    assert np.all(np.isfinite(C.C))


def test_shift_invariance(rng):
    pts = np.linspace(0.0, 5.0, 45)
    Y = np.sin(pts) + rng.normal(scale=0.1, size=(2, 45))
    spec = BasisSpec(12, lam=0.3)
    fitted = []
    for shift in (0.0, 100.0):
        grid = TimeGrid(pts + shift)
        C = smooth_dataset(CurveSet(Y, grid), spec)
        fitted.append(C.C @ bspline_design(grid, spec).T)
    np.testing.assert_allclose(fitted[0], fitted[1], atol=1e-8)


def test_time_grid_validation():
    with pytest.raises(InvalidSpecError):
        TimeGrid([0.0, 0.0, 1.0])
    with pytest.raises(InvalidSpecError):
        TimeGrid([1.0])
    with pytest.raises(InvalidSpecError):
        TimeGrid([0.0, np.nan])
    with pytest.warns(NonEquispacedGridWarning):
        TimeGrid([0.0, 0.1, 0.5, 2.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        TimeGrid.linspace(0, 1, 11)


def test_non_equispaced_grid_still_smooths(rng):
    with pytest.warns(NonEquispacedGridWarning):
        grid = TimeGrid(np.sort(rng.uniform(0, 1, 40)))
    Phi = bspline_design(grid, BasisSpec(9))
    np.testing.assert_allclose(Phi.sum(axis=1), 1.0, atol=1e-12)
