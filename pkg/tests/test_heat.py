import numpy as np
import pytest

from areasearch.errors import NumericDomainError
from areasearch.grid import (
    GridSpec,
    ScalarField,
    field_from_function,
    full_field,
    integrate,
    zeros_field,
)
from areasearch.heat import (
    HedacParams,
    PotentialField,
    direction_field,
    solve_potential,
)


def dense_system(spec, alpha, beta):
    """Independent dense assembly of (beta I - alpha L), mirror-ghost walls.

    Built by plain neighbor enumeration on domain-normalized coordinates; an
    out-of-range neighbor mirrors to the node itself and contributes nothing.
    """
    scale = max(spec.width_m, spec.height_m)
    hx2 = (spec.dx / scale) ** 2
    hy2 = (spec.dy / scale) ** 2
    n = spec.nx * spec.ny
    a = np.zeros((n, n))

    def idx(i, j):
        return j * spec.nx + i

    for j in range(spec.ny):
        for i in range(spec.nx):
            k = idx(i, j)
            a[k, k] += beta
            for di, dj, h2 in ((1, 0, hx2), (-1, 0, hx2),
                               (0, 1, hy2), (0, -1, hy2)):
                ii, jj = i + di, j + dj
                if 0 <= ii < spec.nx and 0 <= jj < spec.ny:
                    a[k, k] += alpha / h2
                    a[k, idx(ii, jj)] -= alpha / h2
    return a


def solve_dense(m, alpha, beta):
    a = dense_system(m.spec, alpha, beta)
    return np.linalg.solve(a, m.values.ravel()).reshape(m.spec.ny, m.spec.nx)


class TestSolvePotential:
    def test_zero_source_zero_solution(self):
        spec = GridSpec(100.0, 100.0, 16, 16)
        u = solve_potential(zeros_field(spec), HedacParams(alpha=0.03, beta=4.0))
        assert not u.field.values.any()
        assert u.residual == 0.0

    def test_uniform_source(self):
        spec = GridSpec(100.0, 100.0, 16, 16)
        params = HedacParams(alpha=0.03, beta=4.0)
        u = solve_potential(full_field(spec, 3.0), params)
        assert np.allclose(u.field.values, 0.75, atol=params.solver_tol)

    def test_matches_dense_oracle(self):
        spec = GridSpec(160.0, 160.0, 16, 16)
        params = HedacParams(alpha=0.05, beta=2.0, solver_tol=1e-10)
        rng = np.random.default_rng(21)
        for _ in range(3):
            m = ScalarField(spec, np.abs(rng.standard_normal((16, 16))))
            u = solve_potential(m, params)
            ref = solve_dense(m, params.alpha, params.beta)
            err = np.abs(u.field.values - ref).max() / np.abs(ref).max()
            assert err < 1e-8

    def test_matches_dense_oracle_rectangular(self):
        spec = GridSpec(200.0, 120.0, 10, 14)
        params = HedacParams(alpha=0.1, beta=3.0, solver_tol=1e-10)
        rng = np.random.default_rng(22)
        m = ScalarField(spec, np.abs(rng.standard_normal((14, 10))))
        u = solve_potential(m, params)
        ref = solve_dense(m, params.alpha, params.beta)
        assert np.abs(u.field.values - ref).max() / np.abs(ref).max() < 1e-8

    def test_conservation_identity(self):
        rng = np.random.default_rng(23)
        for spec in (GridSpec(100.0, 100.0, 16, 16),
                     GridSpec(500.0, 300.0, 40, 25)):
            params = HedacParams(alpha=0.03, beta=2.0)
            for _ in range(5):
                m = ScalarField(spec, np.abs(rng.standard_normal((spec.ny, spec.nx))))
                u = solve_potential(m, params)
                lhs = params.beta * integrate(u.field)
                rhs = integrate(m)
                assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_linearity(self):
        spec = GridSpec(100.0, 100.0, 20, 20)
        params = HedacParams(alpha=0.03, beta=4.0)
        rng = np.random.default_rng(24)
        m = ScalarField(spec, np.abs(rng.standard_normal((20, 20))))
        u1 = solve_potential(m, params).field.values
        scaled = ScalarField(spec, 3.5 * m.values)
        u2 = solve_potential(scaled, params).field.values
        assert np.allclose(u2, 3.5 * u1, rtol=1e-8,
                           atol=params.solver_tol * np.abs(u2).max())

    def test_nonnegative_solution(self):
        spec = GridSpec(100.0, 100.0, 25, 25)
        params = HedacParams(alpha=0.03, beta=2.0)
        rng = np.random.default_rng(25)
        for _ in range(10):
            m = ScalarField(spec, np.abs(rng.standard_normal((25, 25))))
            u = solve_potential(m, params)
            floor = -params.solver_tol * u.field.values.max()
            assert u.field.values.min() >= floor

    def test_warm_start_agrees_with_cold(self):
        spec = GridSpec(100.0, 100.0, 20, 20)
        params = HedacParams(alpha=0.03, beta=4.0)
        rng = np.random.default_rng(26)
        m1 = ScalarField(spec, np.abs(rng.standard_normal((20, 20))))
        m2 = ScalarField(spec, m1.values * 1.05 + 0.01)
        prev = solve_potential(m1, params)
        warm = solve_potential(m2, params, warm_start=prev)
        cold = solve_potential(m2, params)
        diff = np.linalg.norm(warm.field.values - cold.field.values)
        assert diff <= 10 * params.solver_tol * np.linalg.norm(cold.field.values)

    def test_residual_within_tolerance(self):
        spec = GridSpec(300.0, 200.0, 30, 20)
        params = HedacParams(alpha=0.03, beta=2.0)
        rng = np.random.default_rng(27)
        m = ScalarField(spec, np.abs(rng.standard_normal((20, 30))))
        u = solve_potential(m, params)
        assert u.residual <= params.solver_tol

    def test_negative_source_rejected(self):
        spec = GridSpec(100.0, 100.0, 16, 16)
        with pytest.raises(NumericDomainError):
            solve_potential(full_field(spec, -1.0), HedacParams())

    def test_nonfinite_source_rejected(self):
        spec = GridSpec(100.0, 100.0, 16, 16)
        f = full_field(spec, 1.0)
        f.values[0, 0] = np.inf
        with pytest.raises(NumericDomainError):
            solve_potential(f, HedacParams())


class TestHedacParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            HedacParams(alpha=0.0)
        with pytest.raises(ValueError):
            HedacParams(beta=-1.0)
        with pytest.raises(ValueError):
            HedacParams(solver_tol=2.0)
        with pytest.raises(ValueError):
            HedacParams(max_iters=0)


class TestDirectionField:
    def test_constant_all_degenerate(self):
        spec = GridSpec(50.0, 50.0, 10, 10)
        u = PotentialField(full_field(spec, 2.0), 0.0, 0)
        ux, uy = direction_field(u)
        assert not ux.values.any()
        assert not uy.values.any()

    def test_linear_points_along_x(self):
        spec = GridSpec(50.0, 50.0, 10, 10)
        u = PotentialField(field_from_function(spec, lambda X, Y: X), 0.0, 0)
        ux, uy = direction_field(u)
        assert np.allclose(ux.values, 1.0, atol=1e-12)
        assert np.allclose(uy.values, 0.0, atol=1e-12)

    def test_unit_magnitude_where_live(self):
        spec = GridSpec(50.0, 50.0, 16, 16)
        rng = np.random.default_rng(28)
        for _ in range(10):
            u = PotentialField(
                ScalarField(spec, rng.standard_normal((16, 16))), 0.0, 0)
            ux, uy = direction_field(u)
            mag = np.hypot(ux.values, uy.values)
            live = mag > 0
            assert np.allclose(mag[live], 1.0, atol=1e-12)
