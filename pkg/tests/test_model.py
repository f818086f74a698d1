import math

import numpy as np
import pytest

from sktmc import (
    DensityField,
    EstimatorResult,
    GridSpec,
    NegativeInitialData,
    NegativeRate,
    NonPositiveDiffusion,
    NonPositiveWidth,
    SKTParameters,
    field_from_initial,
    gaussian_profile,
    interpolate,
    make_gaussian_test,
    make_initial,
    validate_params,
)
from sktmc.model import interpolate_with_flag, two_bumps_profile


class TestParameters:
    def test_minimal_valid(self):
        validate_params(SKTParameters(d1=1.0, d2=1.0))

    def test_zero_diffusion_rejected(self):
        with pytest.raises(NonPositiveDiffusion):
            validate_params(SKTParameters(d1=0.0, d2=1.0))

    def test_negative_rate_rejected(self):
        with pytest.raises(NegativeRate):
            validate_params(SKTParameters(d1=1.0, d2=1.0, d11=-0.1))

    def test_growth_rates_may_be_negative(self):
        validate_params(SKTParameters(d1=1.0, d2=1.0, a1=-2.0, a2=-0.5))

    def test_swapped_is_involution(self):
        p = SKTParameters(d1=0.25, d2=0.5, d11=0.05, d12=0.1, d21=0.2, d22=0.3,
                          a1=1.0, a2=-1.0, a11=0.1, a12=0.2, a21=0.3, a22=0.4)
        assert p.swapped().swapped() == p
        assert p.swapped().d1 == p.d2
        assert p.swapped().d12 == p.d21

    def test_species_accessors(self):
        p = SKTParameters(d1=0.25, d2=0.5, d11=0.05, d12=0.1, d21=0.2, d22=0.3,
                          a1=1.0, a2=-1.0, a11=0.1, a12=0.2, a21=0.3, a22=0.4)
        assert p.diffusion(1) == (0.25, 0.05, 0.1)
        assert p.diffusion(2) == (0.5, 0.2, 0.3)
        assert p.reaction(2) == (-1.0, 0.3, 0.4)
        with pytest.raises(ValueError):
            p.diffusion(3)


class TestGrid:
    def test_spacing_and_nodes(self):
        g = GridSpec(0.0, 1.0, 11)
        assert g.dx == pytest.approx(0.1)
        nodes = g.nodes()
        assert nodes[0] == 0.0 and nodes[-1] == 1.0 and len(nodes) == 11

    def test_invalid(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, 0.0, 11)
        with pytest.raises(ValueError):
            GridSpec(0.0, 1.0, 2)


class TestFieldFromInitial:
    def test_constant_has_zero_gradient(self):
        g = GridSpec(0.0, 1.0, 11)
        f = field_from_initial(g, lambda x: np.full_like(x, 1.0), lambda x: np.full_like(x, 2.0))
        assert np.all(f.v1 == 0.0)
        assert np.all(f.v2 == 0.0)

    def test_linear_has_unit_gradient(self):
        g = GridSpec(0.0, 1.0, 11)
        f = field_from_initial(g, lambda x: x, lambda x: np.zeros_like(x))
        assert np.allclose(f.v1, 1.0, rtol=0, atol=1e-12)

    def test_gaussian_gradient_matches_analytic(self):
        # oracle: d/dx exp(-x^2) = -2 x exp(-x^2); central differences are O(dx^2)
        g = GridSpec(-8.0, 8.0, 401)
        f = field_from_initial(g, lambda x: np.exp(-x * x), lambda x: np.zeros_like(x))
        x = g.nodes()
        exact = -2.0 * x * np.exp(-x * x)
        assert np.max(np.abs(f.v1[1:-1] - exact[1:-1])) < 2e-3

    def test_negative_initial_rejected(self):
        g = GridSpec(0.0, 1.0, 11)
        with pytest.raises(NegativeInitialData):
            field_from_initial(g, lambda x: x - 0.5, lambda x: np.zeros_like(x))

    def test_samples_reproduced_at_nodes(self):
        g = GridSpec(-3.0, 3.0, 25)
        prof = gaussian_profile(0.3, 0.9, 2.0)
        f = field_from_initial(g, prof, prof)
        for x in g.nodes():
            u1, u2, _, _ = interpolate(f, float(x))
            assert u1 == f.u1[np.argmin(np.abs(g.nodes() - x))]


def _field(u1, u2=None, v1=None, v2=None, xmin=0.0, xmax=1.0):
    u1 = np.asarray(u1, dtype=float)
    n = len(u1)
    g = GridSpec(xmin, xmax, n)
    z = np.zeros(n)
    return DensityField(grid=g, t=0.0, u1=u1,
                        u2=z if u2 is None else u2,
                        v1=z if v1 is None else v1,
                        v2=z if v2 is None else v2)


class TestInterpolate:
    def test_exact_on_nodes(self):
        f = _field([1.0, 5.0, 2.0, 7.0])
        nodes = f.grid.nodes()
        for i, x in enumerate(nodes):
            u1, _, _, _ = interpolate(f, float(x))
            assert u1 == f.u1[i]

    def test_midpoint_average(self):
        f = _field([2.0, 4.0, 6.0])
        u1, _, _, _ = interpolate(f, 0.25)  # midpoint of first cell
        assert u1 == 3.0

    def test_clamped_beyond_right_edge(self):
        f = _field([2.0, 4.0, 6.0])
        values, clamped = interpolate_with_flag(f, f.grid.xmax + 1.0)
        assert values[0] == 6.0
        assert clamped == 1

    def test_clamped_beyond_left_edge(self):
        f = _field([2.0, 4.0, 6.0])
        values, clamped = interpolate_with_flag(f, f.grid.xmin - 0.5)
        assert values[0] == 2.0
        assert clamped == 1

    def test_interior_not_clamped(self):
        f = _field([2.0, 4.0, 6.0])
        _, clamped = interpolate_with_flag(f, 0.37)
        assert clamped == 0

    def test_exact_for_linear_fields(self):
        g = GridSpec(0.0, 1.0, 21)
        x = g.nodes()
        f = DensityField(grid=g, t=0.0, u1=2.0 * x + 1.0, u2=np.zeros(21),
                         v1=np.full(21, 2.0), v2=np.zeros(21))
        for xq in (0.123, 0.5001, 0.987):
            u1, _, _, _ = interpolate(f, xq)
            assert u1 == pytest.approx(2.0 * xq + 1.0, abs=1e-14)

    def test_vector_sample_counts_clamps(self):
        f = _field([2.0, 4.0, 6.0])
        xs = np.array([0.5, -1.0, 2.0, 0.25])
        u1, _, _, _, nclamped = f.sample(xs)
        assert nclamped == 2
        assert u1[0] == 4.0

    def test_field_arrays_read_only(self):
        f = _field([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            f.u1[0] = 9.0


class TestGaussianTestFunction:
    def test_closed_form_at_center(self):
        h = make_gaussian_test(0.0, 1.0)
        assert h.h(0.0) == 1.0
        assert h.grad(0.0) == 0.0
        assert h.lap(0.0) == -1.0

    def test_zero_width_rejected(self):
        with pytest.raises(NonPositiveWidth):
            make_gaussian_test(0.0, 0.0)

    def test_derivatives_match_finite_differences(self):
        # independent oracle: central differences of h itself
        h = make_gaussian_test(0.7, 1.3)
        rng = np.random.default_rng(42)
        xs = rng.uniform(-3.0, 4.5, 100)
        eps = 1e-5
        fd_grad = (h.h(xs + eps) - h.h(xs - eps)) / (2 * eps)
        fd_lap = (h.h(xs + eps) - 2 * h.h(xs) + h.h(xs - eps)) / (eps * eps)
        assert np.allclose(h.grad(xs), fd_grad, rtol=1e-6, atol=1e-8)
        assert np.allclose(h.lap(xs), fd_lap, rtol=1e-6, atol=1e-5)

    def test_gauss_metadata(self):
        h = make_gaussian_test(1.5, 0.8)
        assert h.gauss == (1.5, 0.8)
        assert h.support_radius == pytest.approx(6.4)


class TestEstimatorResult:
    def test_invariants(self):
        r = EstimatorResult(mean=1.0, stderr=0.1, paths=10, clamps=0)
        assert r.stderr >= 0
        with pytest.raises(ValueError):
            EstimatorResult(mean=0.0, stderr=-1.0, paths=10, clamps=0)
        with pytest.raises(ValueError):
            EstimatorResult(mean=0.0, stderr=0.0, paths=0, clamps=0)


class TestInitialRegistry:
    def test_gaussian_mass(self):
        prof = make_initial("gaussian(0.5, 1.2, 2.5)")
        x = np.linspace(-12, 13, 4001)
        assert np.trapezoid(prof(x), x) == pytest.approx(2.5, rel=1e-6)

    def test_constant(self):
        prof = make_initial("constant(0.7)")
        assert np.all(prof(np.linspace(0, 1, 5)) == 0.7)

    def test_two_bumps_splits_mass(self):
        prof = make_initial("two-bumps(-2, 2, 0.5, 3)")
        x = np.linspace(-10, 10, 4001)
        assert np.trapezoid(prof(x), x) == pytest.approx(3.0, rel=1e-6)
        direct = two_bumps_profile(-2, 2, 0.5, 3)
        assert np.allclose(prof(x), direct(x))

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown initial condition"):
            make_initial("wavelet(1,2)")

    def test_wrong_arity(self):
        with pytest.raises(ValueError, match="takes 3 arguments"):
            make_initial("gaussian(1,2)")

    def test_non_numeric(self):
        with pytest.raises(ValueError, match="non-numeric"):
            make_initial("constant(abc)")

    def test_negative_constant_rejected(self):
        with pytest.raises(NegativeInitialData):
            make_initial("constant(-1)")
