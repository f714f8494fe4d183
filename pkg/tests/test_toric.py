import math
from fractions import Fraction

import pytest

from conelab import (DomainError, InternalFault, PreconditionError,
                     ToricConeData, UnsupportedError, cross_section,
                     gorenstein_covector, invariant_A, kahler_class,
                     maximal_triangulation, support_function_check)
from conelab.toric import _smith_normal_form, integer_solve


def a1_cone():
    """Quadric cone C^2 / Z_2: rays (1,0) and (1,2)."""
    return ToricConeData(2, [(1, 0), (1, 2)])


def z3_cone():
    """C^3 / Z_3 with diagonal weights: rays e1, e2 and (-1,-1,3)."""
    return ToricConeData(3, [(1, 0, 0), (0, 1, 0), (-1, -1, 3)])


def default_values(tri, interior=1):
    return {r: (0 if i < tri.n_boundary else interior)
            for i, r in enumerate(tri.rays)}


class TestConeData:
    def test_rejects_non_primitive_ray(self):
        with pytest.raises(DomainError):
            ToricConeData(2, [(2, 0), (1, 2)])

    def test_rejects_duplicate_rays(self):
        with pytest.raises(DomainError):
            ToricConeData(2, [(1, 0), (1, 0)])

    def test_rejects_non_pointed(self):
        with pytest.raises(DomainError):
            ToricConeData(2, [(1, 0), (-1, 0)])


class TestIntegerLinearAlgebra:
    def test_snf_diagonal_divisibility(self):
        A = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
        D, U, V = _smith_normal_form(A)
        for i in range(len(D) - 1):
            if D[i + 1][i + 1] != 0:
                assert D[i + 1][i + 1] % D[i][i] == 0

    def test_integer_solve(self):
        x, reason = integer_solve([[2, 1], [1, 1]], [3, 2])
        assert reason is None
        assert [2 * x[0] + x[1], x[0] + x[1]] == [3, 2]

    def test_integer_solve_infeasible(self):
        x, reason = integer_solve([[2, 0], [0, 2]], [1, 1])
        assert x is None and reason


class TestGorenstein:
    def test_a1(self):
        res = gorenstein_covector(a1_cone())
        assert res.gamma == (1, 0)
        assert res.unique

    def test_z3(self):
        res = gorenstein_covector(z3_cone())
        assert res.gamma == (1, 1, 1)
        assert res.unique

    def test_non_gorenstein(self):
        # rays not on a common lattice hyperplane gamma . u = 1
        res = gorenstein_covector(ToricConeData(2, [(1, 0), (2, 3)]))
        if res.gamma is not None:
            # gamma must evaluate to 1 on every ray; (1,0),(1,3) forbid it
            assert False, "unexpected covector"
        assert res.certificate


class TestCrossSection:
    def test_a1_segment(self):
        cone = a1_cone()
        sec = cross_section(cone, gorenstein_covector(cone).gamma)
        assert len(sec.points2d) == 3
        assert len(sec.interior2d) == 1

    def test_z3_triangle(self):
        cone = z3_cone()
        sec = cross_section(cone, gorenstein_covector(cone).gamma)
        assert len(sec.interior2d) == 1
        assert len(sec.boundary2d) == 3

    def test_high_dimension_unsupported(self):
        cone = ToricConeData(4, [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0),
                                 (-1, -1, -1, 4)])
        res = gorenstein_covector(cone)
        with pytest.raises(UnsupportedError):
            cross_section(cone, res.gamma)


class TestTriangulation:
    @pytest.mark.parametrize("make", [a1_cone, z3_cone])
    def test_maximal_and_basic(self, make):
        cone = make()
        sec = cross_section(cone, gorenstein_covector(cone).gamma)
        tri = maximal_triangulation(sec, cone)
        assert tri.maximal      # every lattice point of the section is a ray
        assert tri.basic        # every simplex has determinant +-1

    def test_a1_structure(self):
        cone = a1_cone()
        tri = maximal_triangulation(
            cross_section(cone, (1, 0)), cone)
        assert (1, 1) in tri.rays
        assert len(tri.simplices) == 2

    def test_z3_structure(self):
        cone = z3_cone()
        tri = maximal_triangulation(
            cross_section(cone, (1, 1, 1)), cone)
        assert (0, 0, 1) in tri.rays
        assert len(tri.simplices) == 3
        assert tri.n_boundary == 3


class TestSupportAndKahler:
    def test_strict_convexity(self):
        cone = z3_cone()
        tri = maximal_triangulation(
            cross_section(cone, (1, 1, 1)), cone)
        chk = support_function_check(tri, default_values(tri))
        assert chk.strictly_convex
        assert chk.compactly_supported

    def test_zero_class_not_kahler(self):
        cone = z3_cone()
        tri = maximal_triangulation(
            cross_section(cone, (1, 1, 1)), cone)
        kc = kahler_class(tri, {r: 0 for r in tri.rays})
        assert not kc.is_kahler

    def test_kahler_positive_interior(self):
        cone = a1_cone()
        tri = maximal_triangulation(cross_section(cone, (1, 0)), cone)
        kc = kahler_class(tri, default_values(tri))
        assert kc.is_kahler

    def test_nonconvex_values_rejected_for_invariant(self):
        cone = a1_cone()
        tri = maximal_triangulation(cross_section(cone, (1, 0)), cone)
        vals = default_values(tri, interior=-1)   # concave support function
        with pytest.raises(PreconditionError):
            invariant_A(tri, vals, omega_link=math.pi)


class TestInvariantA:
    def test_a1_value(self):
        cone = a1_cone()
        tri = maximal_triangulation(cross_section(cone, (1, 0)), cone)
        vals = default_values(tri)
        # excised region between the support graph and the section has
        # lattice volume 1; with omega = 2 pi: A = -(2 pi)^2 * 1 / (1 * 2 pi)
        inv = invariant_A(tri, vals, omega_link=2.0 * math.pi)
        assert inv.value == pytest.approx(-2.0 * math.pi)
        assert inv.excised_volume == pytest.approx(1.0)
        assert inv.divisor_sum == pytest.approx(inv.polytope_volume,
                                                rel=1e-12)

    def test_z3_value(self):
        cone = z3_cone()
        tri = maximal_triangulation(cross_section(cone, (1, 1, 1)), cone)
        vals = default_values(tri)
        omega = 4.0 * math.pi ** 2 / 3.0
        inv = invariant_A(tri, vals, omega_link=omega)
        assert inv.value < 0
        assert inv.excised_volume == pytest.approx(1.5)
        assert inv.divisor_sum == pytest.approx(inv.polytope_volume,
                                                rel=1e-9)
        want = -(2 * math.pi) ** 3 * 1.5 / (2 * omega)
        assert inv.value == pytest.approx(want)

    @pytest.mark.parametrize("t", [2, 3])
    def test_homogeneity(self, t):
        cone = z3_cone()
        tri = maximal_triangulation(cross_section(cone, (1, 1, 1)), cone)
        vals = default_values(tri)
        base = invariant_A(tri, vals, omega_link=1.0).value
        scaled = invariant_A(tri, {k: t * v for k, v in vals.items()},
                             omega_link=1.0).value
        assert scaled == pytest.approx(t ** 3 * base, rel=1e-12)

    def test_methods_agree(self):
        cone = z3_cone()
        tri = maximal_triangulation(cross_section(cone, (1, 1, 1)), cone)
        vals = default_values(tri, interior=Fraction(3, 2))
        a = invariant_A(tri, vals, omega_link=2.0, method="divisor_sum")
        b = invariant_A(tri, vals, omega_link=2.0, method="polytope_volume")
        assert a.value == pytest.approx(b.value, rel=1e-12)
