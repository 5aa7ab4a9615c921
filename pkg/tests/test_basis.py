import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cgp.basis import (
    KnotGrid,
    hat_eval,
    hat_matrix,
    int2_hat_eval,
    int2_hat_matrix,
    int_hat_eval,
    int_hat_matrix,
    tensor_eval,
    tensor_matrix,
)


def one_sided_derivative(f, u, side, order, h):
    """Richardson-extrapolated one-sided derivative, exact for cubics on [u, u + 4h]."""
    s = float(side)
    if order == 1:
        def D(step):
            return (f(u + s * step) - f(u)) / (s * step)
        # forward differences of a cubic: D(h) = f' + a h + b h^2
        return (8 * D(h) - 6 * D(2 * h) + D(4 * h)) / 3
    def D2(step):
        return (f(u + 2 * s * step) - 2 * f(u + s * step) + f(u)) / step**2
    return 2 * D2(h) - D2(2 * h)


def test_grid_basics():
    g = KnotGrid(4)
    assert g.size == 5
    assert g.spacing == 0.25
    assert np.allclose(g.knots, [0, 0.25, 0.5, 0.75, 1])
    with pytest.raises(ValueError):
        g.knots[0] = 3.0


@pytest.mark.parametrize("bad", [0, -2, 2.5, True])
def test_grid_rejects_bad_sizes(bad):
    with pytest.raises(ValueError):
        KnotGrid(bad)


def test_hat_examples():
    g = KnotGrid(4)
    assert hat_eval(g, 2, 0.5) == 1.0
    assert hat_eval(g, 2, 0.25) == 0.0
    assert hat_eval(g, 2, 0.375) == pytest.approx(0.5)
    assert int_hat_eval(g, 0, 0.25) == pytest.approx(0.125)
    assert int_hat_eval(g, 2, 1.0) == pytest.approx(0.25)


@pytest.mark.parametrize("N", [4, 50])
def test_partition_of_unity(N):
    x = np.linspace(0, 1, 1000)
    assert np.max(np.abs(hat_matrix(KnotGrid(N), x).sum(axis=1) - 1.0)) <= 1e-12


@pytest.mark.parametrize("N", [4, 50])
def test_hat_kronecker_at_knots(N):
    g = KnotGrid(N)
    assert np.max(np.abs(hat_matrix(g, g.knots) - np.eye(N + 1))) <= 1e-12


@pytest.mark.parametrize("N", [4, 50])
def test_integrated_hat_derivative_kronecker(N):
    g = KnotGrid(N)
    h = g.spacing / 16
    D = np.empty((N + 1, N + 1))
    for i, u in enumerate(g.knots):
        side = 1 if i < N else -1
        for j in range(N + 1):
            D[i, j] = one_sided_derivative(lambda x: int_hat_eval(g, j, x), u, side, 1, h)
    assert np.max(np.abs(D - np.eye(N + 1))) <= 1e-9


@pytest.mark.parametrize("N", [4, 50])
def test_twice_integrated_hat_second_derivative_kronecker(N):
    g = KnotGrid(N)
    h = g.spacing / 16
    D = np.empty((N + 1, N + 1))
    for i, u in enumerate(g.knots):
        side = 1 if i < N else -1
        for j in range(N + 1):
            D[i, j] = one_sided_derivative(lambda x: int2_hat_eval(g, j, x), u, side, 2, h)
    assert np.max(np.abs(D - np.eye(N + 1))) <= 1e-7


@pytest.mark.parametrize("N", [4, 50])
def test_integrated_bases_match_quadrature(N):
    g = KnotGrid(N)
    xs = np.linspace(0, 1, 37)
    Phi = int_hat_matrix(g, xs)
    Phi2 = int2_hat_matrix(g, xs)
    for j in range(0, N + 1, max(1, N // 6)):
        knots = list(g.knots)
        for i, x in enumerate(xs):
            pts = [k for k in knots if 0 < k < x]
            ref1 = integrate.quad(lambda t: hat_eval(g, j, t), 0, x, points=pts or None, epsabs=1e-14,
                                  epsrel=1e-13, limit=200)[0] if x > 0 else 0.0
            assert abs(Phi[i, j] - ref1) <= 1e-10
            # phi2_j(x) = int_0^x (x - t) h_j(t) dt
            ref2 = integrate.quad(lambda t: (x - t) * hat_eval(g, j, t), 0, x, points=pts or None,
                                  epsabs=1e-14, epsrel=1e-13, limit=200)[0] if x > 0 else 0.0
            assert abs(Phi2[i, j] - ref2) <= 1e-10


def test_integrated_bases_start_at_zero():
    g = KnotGrid(7)
    assert np.all(int_hat_matrix(g, [0.0]) == 0)
    assert np.all(int2_hat_matrix(g, [0.0]) == 0)


def test_integrated_bases_monotone_and_convex():
    g = KnotGrid(10)
    x = np.linspace(0, 1, 1000)
    Phi = int_hat_matrix(g, x)
    Phi2 = int2_hat_matrix(g, x)
    assert np.all(np.diff(Phi, axis=0) >= -1e-15)
    assert np.all(np.diff(Phi2, n=2, axis=0) >= -1e-12)


def test_scalar_evaluation_matches_matrix():
    g = KnotGrid(9)
    x = 0.4321
    assert hat_eval(g, 4, x) == hat_matrix(g, [x])[0, 4]
    assert int_hat_eval(g, 4, x) == int_hat_matrix(g, [x])[0, 4]
    assert int2_hat_eval(g, 4, x) == int2_hat_matrix(g, [x])[0, 4]
    assert isinstance(hat_eval(g, 4, x), float)


@pytest.mark.parametrize("fn", [hat_matrix, int_hat_matrix, int2_hat_matrix])
def test_outside_unit_interval_rejected(fn):
    with pytest.raises(ValueError):
        fn(KnotGrid(4), [1.1])
    with pytest.raises(ValueError):
        fn(KnotGrid(4), [-0.01])


def test_bad_index_rejected():
    with pytest.raises(IndexError):
        hat_eval(KnotGrid(4), 5, 0.3)


def test_tensor_basis():
    grids = (KnotGrid(3), KnotGrid(5))
    rng = np.random.default_rng(1)
    X = rng.random((50, 2))
    B = tensor_matrix(grids, X)
    assert B.shape == (50, 24)
    assert np.allclose(B.sum(axis=1), 1.0, atol=1e-12)
    # C order: column i * 6 + j is the product h_i(x1) h_j(x2)
    for i, j in [(0, 0), (2, 4), (3, 5)]:
        assert np.allclose(B[:, i * 6 + j], hat_matrix(grids[0], X[:, 0])[:, i] * hat_matrix(grids[1], X[:, 1])[:, j])
        assert tensor_eval(grids, (i, j), X[7]) == pytest.approx(B[7, i * 6 + j])


def test_tensor_kronecker_at_knots():
    grids = (KnotGrid(7), KnotGrid(7))
    u = grids[0].knots
    K = np.array([[a, b] for a in u for b in u])
    assert np.max(np.abs(tensor_matrix(grids, K) - np.eye(64))) <= 1e-12


@given(N=st.integers(1, 200), x=st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_hats_nonnegative_local_partition(N, x):
    row = hat_matrix(KnotGrid(N), [x])[0]
    assert np.all(row >= 0)
    assert np.count_nonzero(row) <= 2
    assert abs(row.sum() - 1.0) <= 1e-12
    # the hats reproduce linear functions
    assert abs(row @ KnotGrid(N).knots - x) <= 1e-12
