"""Tests for the Poincare-disk building blocks: Mobius maps, the side-pairing
group, fundamental-domain membership and reduction."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from geodrive import ReductionError, ValidationError
from geodrive.hyperbolic import (
    BolzaGroup,
    FundamentalOctagon,
    MobiusMap,
    bolza_group,
    hyperbolic_distance,
    in_fundamental_domain,
    kinetic_energy,
    metric_factor,
    reduce_to_domain,
)

# points safely inside the disk, away from the boundary
disk_points = st.complex_numbers(max_magnitude=0.8, allow_nan=False,
                                 allow_infinity=False)
momenta = st.complex_numbers(min_magnitude=1e-3, max_magnitude=10.0,
                             allow_nan=False, allow_infinity=False)


class TestMetric:
    def test_factor_at_origin(self):
        assert metric_factor(0j) == 4.0

    def test_factor_blows_up_toward_boundary(self):
        assert metric_factor(0.9) > metric_factor(0.5) > metric_factor(0j)

    def test_factor_rejects_boundary(self):
        with pytest.raises(ValidationError):
            metric_factor(1.0 + 0j)

    def test_distance_radial(self):
        # d(0, r) = 2 atanh r along a diameter
        assert_allclose(hyperbolic_distance(0j, 0.5 + 0j),
                        2 * math.atanh(0.5), rtol=1e-14)

    def test_distance_symmetric(self):
        z1, z2 = 0.3 + 0.2j, -0.1 + 0.6j
        assert_allclose(hyperbolic_distance(z1, z2),
                        hyperbolic_distance(z2, z1), rtol=1e-14)

    def test_distance_rejects_outside(self):
        with pytest.raises(ValidationError):
            hyperbolic_distance(0j, 1.2)

    def test_kinetic_energy_at_origin(self):
        # g^{-1}(0) = 1/4, so E = |p|^2 / 8
        assert_allclose(kinetic_energy(0j, 2.0 + 0j), 0.5, rtol=1e-15)


class TestMobiusMap:
    def test_identity(self):
        m = MobiusMap.identity()
        assert m(0.3 + 0.4j) == 0.3 + 0.4j

    def test_rotation(self):
        m = MobiusMap.rotation(math.pi / 2)
        assert_allclose(complex(m(0.5 + 0j)), 0.5j, atol=1e-15)

    def test_translation_hits_target(self):
        z0 = 0.3 - 0.2j
        assert_allclose(complex(MobiusMap.translation_to(z0)(0j)), z0,
                        atol=1e-15)

    def test_translation_rejects_outside(self):
        with pytest.raises(ValidationError):
            MobiusMap.translation_to(1.5 + 0j)

    def test_su11_check(self):
        with pytest.raises(ValidationError):
            MobiusMap(2.0 + 0j, 0j)

    def test_compose_order(self):
        # compose = apply other first
        r = MobiusMap.rotation(0.7)
        t = MobiusMap.translation_to(0.4 + 0.1j)
        z = 0.2 + 0.3j
        assert_allclose(complex((t @ r)(z)), complex(t(r(z))), atol=1e-14)

    def test_inverse_round_trip(self):
        m = MobiusMap.translation_to(0.5 + 0.2j) @ MobiusMap.rotation(1.1)
        z = -0.3 + 0.4j
        assert_allclose(complex(m.inverse()(m(z))), z, atol=1e-14)

    def test_derivative_matches_finite_difference(self):
        m = MobiusMap.translation_to(0.4 - 0.3j)
        z, h = 0.1 + 0.2j, 1e-7
        fd = (m(z + h) - m(z - h)) / (2 * h)
        assert_allclose(complex(m.derivative(z)), complex(fd), rtol=1e-6)

    @given(z=disk_points, p=momenta)
    @settings(max_examples=50, deadline=None)
    def test_push_forward_preserves_energy(self, z, p):
        m = MobiusMap.translation_to(0.35 + 0.25j) @ MobiusMap.rotation(0.9)
        e_before = kinetic_energy(z, p)
        e_after = kinetic_energy(m(z), m.push_forward(z, p))
        assert_allclose(e_after, e_before, rtol=1e-11, atol=1e-14)

    def test_exact_inverse_under_coarse_ambient_precision(self):
        # structural ops must not round to whoever's working precision is
        # ambient at call time
        group = bolza_group(60)
        g = group.element(2)
        with mp.workdps(5):
            gi = g.inverse()
        with mp.workdps(60):
            ident = g @ gi
            assert abs(ident.a - 1) < mp.mpf(10) ** -55
            assert abs(ident.b) < mp.mpf(10) ** -55


class TestFundamentalOctagon:
    def test_arc_circles_orthogonal_to_boundary(self):
        oct8 = FundamentalOctagon()
        assert_allclose(oct8.c ** 2 - oct8.r ** 2, 1.0, rtol=1e-14)

    def test_vertex_radius(self):
        assert_allclose(FundamentalOctagon().vertex_radius, 2 ** -0.25,
                        rtol=1e-15)

    def test_contains_origin_and_vertex(self):
        oct8 = FundamentalOctagon()
        assert oct8.contains(0j)
        # vertices are on the boundary of the closed domain
        vertex = 2 ** -0.25 * np.exp(1j * math.pi / 8)
        assert oct8.contains(vertex)

    def test_excludes_far_points(self):
        oct8 = FundamentalOctagon()
        assert not oct8.contains(0.95 + 0j)

    def test_min_depth_sign(self):
        oct8 = FundamentalOctagon()
        assert oct8.min_depth(0j) > 0
        assert oct8.min_depth(0.9 + 0j) < 0


class TestBolzaGroup:
    def test_translation_length(self):
        g = BolzaGroup()
        assert_allclose(g.translation_length, 2 * math.acosh(1 + math.sqrt(2)),
                        rtol=1e-15)

    def test_generator_translates_origin_by_length(self):
        g = BolzaGroup()
        img = g.element(1)(0j)
        assert_allclose(hyperbolic_distance(0j, img), g.translation_length,
                        rtol=1e-12)

    def test_inverse_elements(self):
        g = BolzaGroup()
        z = 0.2 + 0.1j
        assert_allclose(complex(g.element(-3)(g.element(3)(z))), z, atol=1e-13)

    def test_word_map_application_order(self):
        g = BolzaGroup()
        z = 0.15 - 0.05j
        via_word = g.word_map([1, -2])(z)
        by_hand = g.element(1)(g.element(-2)(z))
        assert_allclose(complex(via_word), complex(by_hand), atol=1e-13)

    def test_relation_product_is_plus_minus_identity(self):
        rel = BolzaGroup().relation_product()
        assert min(abs(rel.a - 1), abs(rel.a + 1)) < 1e-12
        assert abs(rel.b) < 1e-12

    def test_group_cache(self):
        assert bolza_group(40) is bolza_group(40)
        assert bolza_group(40) is not bolza_group(41)


class TestReduceToDomain:
    def test_inside_point_untouched(self):
        z, p, word = reduce_to_domain(0.1 + 0.1j, 1.0 + 0j)
        assert word == []
        assert z == 0.1 + 0.1j

    def test_round_trip_recovers_point(self):
        # push a domain point out with a known word, reduce it back
        g = bolza_group()
        z0, p0 = 0.25 + 0.1j, 0.8 - 0.3j
        m = g.word_map([2, -4, 1])
        z, p, word = reduce_to_domain(m(z0), m.push_forward(z0, p0))
        assert_allclose(complex(z), z0, atol=1e-10)
        assert_allclose(complex(p), p0, atol=1e-9)
        assert in_fundamental_domain(z)

    def test_preserves_energy(self):
        g = bolza_group()
        z0, p0 = 0.2 - 0.3j, 1.5 + 0.7j
        m = g.word_map([-1, 3])
        z, p, _ = reduce_to_domain(m(z0), m.push_forward(z0, p0))
        assert_allclose(kinetic_energy(z, p), kinetic_energy(z0, p0),
                        rtol=1e-10)

    def test_rejects_points_outside_disk(self):
        with pytest.raises(ValidationError):
            reduce_to_domain(1.0 + 0j)

    def test_word_length_limit(self):
        g = bolza_group()
        far = g.word_map([1, 2, 1, 2])(0j)
        with pytest.raises(ReductionError):
            reduce_to_domain(far, max_word_length=2)
