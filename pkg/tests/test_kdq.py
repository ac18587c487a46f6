import numpy as np
import pytest

from toda_kdq import sphere
from toda_kdq.errors import DivergenceRegionError, PoleError
from toda_kdq.kdq import (
    AlmansiPolynomial,
    KDQPoint,
    PseudoPositiveMeasure,
    aronszajn_r_pow_n,
    cauchy_reproduce,
    component_moment,
    divergent_partial_sums,
    growth_condition_check,
    hua_kernel,
    hua_tail_bound,
    markov_stieltjes,
    multi_nevanlinna_check,
    project_transform,
    singular_roots,
)
from toda_kdq.moment_1d import DiscreteMeasure, stieltjes_transform

E3 = np.array([0.0, 0.0, 1.0])
RAY = np.exp(1j * np.pi / 4)  # arg zeta^2 = pi/2


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_point_pair(rng, n, ratio_lo=2.0, ratio_hi=5.0):
    """x and a kernel-expansion point with |zeta| >= ratio_lo |x|.

    arg(zeta) is kept within +-pi/4 so the principal-branch radicand
    stays off its cut and the literal closed form matches the series.
    """
    x = rng.normal(size=n)
    x *= rng.uniform(0.2, 0.5) / np.linalg.norm(x)
    theta = unit(rng.normal(size=n))
    zeta = np.linalg.norm(x) * rng.uniform(ratio_lo, ratio_hi) * np.exp(
        1j * rng.uniform(-np.pi / 4, np.pi / 4)
    )
    return KDQPoint(zeta, theta), x


def single_component(n, k, ell, atoms, weights):
    return PseudoPositiveMeasure(
        n, {(k, ell): DiscreteMeasure(atoms, weights, half_line=True)}
    )


class TestKDQPoint:
    def test_canonicalization(self):
        th = unit([0.3, -0.4, 0.5])
        p1 = KDQPoint(1.5 + 0.3j, th)
        p2 = KDQPoint(-(1.5 + 0.3j), -th)
        assert p1.zeta == p2.zeta
        assert np.array_equal(p1.theta, p2.theta)

    def test_imaginary_axis_rule(self):
        th = unit([1.0, 1.0])
        p = KDQPoint(-2j, th)
        assert p.zeta == 2j
        assert np.array_equal(p.theta, -th)

    def test_zero_zeta_hemisphere(self):
        th = unit([-1.0, 0.5, 0.2])
        p = KDQPoint(0.0, th)
        assert p.theta[0] > 0.0

    def test_operations_antipodally_invariant(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=3) * 0.3
        th = unit(rng.normal(size=3))
        zeta = 2.0 + 0.7j
        mu = single_component(3, 1, 1, [0.4], [1.0])
        for p in (KDQPoint(zeta, th), KDQPoint(-zeta, -th)):
            assert aronszajn_r_pow_n(p, x) == aronszajn_r_pow_n(KDQPoint(zeta, th), x)
            assert hua_kernel(p, x, 20) == hua_kernel(KDQPoint(zeta, th), x, 20)
            assert markov_stieltjes(mu, p) == markov_stieltjes(mu, KDQPoint(zeta, th))


class TestAronszajn:
    def test_origin(self):
        th = unit([0.6, 0.8])
        for n, theta in ((2, th), (3, E3)):
            p = KDQPoint(1.3 + 0.4j, theta)
            assert aronszajn_r_pow_n(p, np.zeros(n)) == pytest.approx(p.zeta**n)

    def test_aligned_square(self):
        th = unit([0.6, 0.8])
        p = KDQPoint(2.0 + 1.0j, th)
        s = 0.7
        assert aronszajn_r_pow_n(p, s * th) == pytest.approx((p.zeta - s) ** 2)

    def test_singularity(self):
        th = unit([1.0, 0.0])
        with pytest.raises(PoleError):
            aronszajn_r_pow_n(KDQPoint(0.5, th), 0.5 * th)

    def test_roots_have_modulus_x(self):
        rng = np.random.default_rng(1)
        for n in (2, 3):
            x = rng.normal(size=n)
            th = unit(rng.normal(size=n))
            z1, z2 = singular_roots(th, x)
            r = np.linalg.norm(x)
            assert abs(z1) == pytest.approx(r, abs=1e-12)
            assert abs(z2) == pytest.approx(r, abs=1e-12)


class TestSingularRoots:
    def test_origin(self):
        assert singular_roots(E3, np.zeros(3)) == (0.0, 0.0)

    def test_aligned(self):
        th = unit([0.6, 0.8])
        z1, z2 = singular_roots(th, 0.9 * th)
        assert z1 == pytest.approx(0.9) and z2 == pytest.approx(0.9)

    def test_orthogonal(self):
        z1, z2 = singular_roots(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert z1 == pytest.approx(1j) and z2 == pytest.approx(-1j)


class TestHuaKernel:
    def test_origin_value(self):
        p = KDQPoint(1.7 - 0.3j, E3)
        assert hua_kernel(p, np.zeros(3), 10) == pytest.approx(1.0 / p.zeta)

    def test_aligned_n2_geometric(self):
        th = unit([np.cos(0.4), np.sin(0.4)])
        p = KDQPoint(1.9 + 0.2j, th)
        s = 0.5
        val = hua_kernel(p, s * th, 60)
        assert val == pytest.approx(p.zeta / (p.zeta - s) ** 2, abs=1e-12)

    def test_aligned_n3_geometric(self):
        p = KDQPoint(2.1 + 0.1j, E3)
        s = 0.6
        val = hua_kernel(p, s * E3, 60)
        assert val == pytest.approx(p.zeta**2 / (p.zeta - s) ** 3, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_series_vs_closed_form_within_tail(self, n):
        rng = np.random.default_rng(2)
        for _ in range(25):
            p, x = random_point_pair(rng, n)
            series = hua_kernel(p, x, 40)
            closed = p.zeta ** (n - 1) / aronszajn_r_pow_n(p, x)
            bound = hua_tail_bound(n, p.zeta, x, 40)
            assert abs(series - closed) <= bound + 1e-12

    def test_divergence_region(self):
        p = KDQPoint(0.5, E3)
        with pytest.raises(DivergenceRegionError):
            hua_kernel(p, np.array([0.0, 0.0, 0.9]), 10)

    def test_tail_bound_dominates_truncation_jump(self):
        rng = np.random.default_rng(3)
        p, x = random_point_pair(rng, 3)
        coarse = hua_kernel(p, x, 10)
        fine = hua_kernel(p, x, 60)
        assert abs(coarse - fine) <= hua_tail_bound(3, p.zeta, x, 10)


class TestCauchyReproduce:
    def test_constant(self):
        poly = AlmansiPolynomial(3, {(0, 0, 1): 1.0})
        x = np.array([0.2, -0.3, 0.1])
        assert abs(cauchy_reproduce(poly, x) - 1.0) < 1e-10

    def test_radial_square(self):
        poly = AlmansiPolynomial(3, {(1, 0, 1): 1.0})
        x = 0.5 * E3
        assert abs(cauchy_reproduce(poly, x) - 0.25) < 1e-8

    @pytest.mark.parametrize("n", [2, 3])
    def test_linear_harmonics(self, n):
        rng = np.random.default_rng(4)
        for ell in range(1, sphere.dim_harmonics(n, 1) + 1):
            poly = AlmansiPolynomial(n, {(0, 1, ell): 1.0})
            x = rng.normal(size=n)
            x *= 0.4 / np.linalg.norm(x)
            assert abs(cauchy_reproduce(poly, x) - poly.eval(x)) < 1e-8

    def test_mixed_polynomial(self):
        poly = AlmansiPolynomial(2, {(0, 0, 1): 2.0, (1, 0, 1): -1.0, (0, 2, 1): 0.5})
        x = np.array([0.3, 0.2])
        assert abs(cauchy_reproduce(poly, x) - poly.eval(x)) < 1e-8

    def test_outside_ball_rejected(self):
        poly = AlmansiPolynomial(2, {(0, 0, 1): 1.0})
        with pytest.raises(DivergenceRegionError):
            cauchy_reproduce(poly, np.array([1.0, 0.5]))


class TestMarkovStieltjes:
    def test_origin_mass(self):
        mu = single_component(3, 0, 1, [0.0], [1.0])
        p = KDQPoint(2.0 + 0.5j, E3)
        assert markov_stieltjes(mu, p) == pytest.approx(1.0 / p.zeta)

    def test_unit_radius_atom(self):
        mu = single_component(3, 0, 1, [1.0], [1.0])
        p = KDQPoint(2.0 + 0.5j, E3)
        assert markov_stieltjes(mu, p) == pytest.approx(p.zeta / (p.zeta**2 - 1.0))

    def test_degree_one_component(self):
        # k=1 term: Y_{1,ell}(theta) * r/(zeta^2 - r^2) with r = 0.5
        mu = single_component(3, 1, 2, [0.5], [1.0])
        p = KDQPoint(3.0 + 1.0j, E3)
        y_val = sphere.eval_harmonic(3, (1, 2), E3)
        expected = y_val * 0.5 / (p.zeta**2 - 0.25)
        assert markov_stieltjes(mu, p) == pytest.approx(expected)

    def test_support_radius_guard(self):
        mu = single_component(3, 0, 1, [1.5], [1.0])
        with pytest.raises(DivergenceRegionError):
            markov_stieltjes(mu, KDQPoint(1.0 + 0.0j, E3))

    def test_json_roundtrip(self):
        mu = PseudoPositiveMeasure(
            2,
            {
                (0, 1): DiscreteMeasure([0.3], [1.0], half_line=True),
                (2, 2): DiscreteMeasure([0.1, 0.8], [0.5, 0.5], half_line=True),
            },
            k_max=5,
        )
        back = PseudoPositiveMeasure.from_dict(mu.to_dict())
        assert back.n == 2 and back.k_max == 5
        assert set(back.components) == set(mu.components)
        assert np.array_equal(back.components[(2, 2)].atoms, mu.components[(2, 2)].atoms)


class TestGrowthCondition:
    def test_unit_atoms(self):
        comps = {}
        for k in range(3):
            for ell in range(1, sphere.dim_harmonics(3, k) + 1):
                comps[(k, ell)] = DiscreteMeasure([1.0], [1.0], half_line=True)
        rep = growth_condition_check(PseudoPositiveMeasure(3, comps))
        assert rep.ok
        assert rep.C == pytest.approx(1.0, abs=1e-10)
        assert rep.D == pytest.approx(1.0, abs=1e-10)

    def test_empty_measure(self):
        rep = growth_condition_check(PseudoPositiveMeasure(3, {}))
        assert rep.ok and rep.C == 0.0

    def test_geometric_radius(self):
        comps = {(k, 1): DiscreteMeasure([2.0], [1.0], half_line=True) for k in range(6)}
        rep = growth_condition_check(PseudoPositiveMeasure(3, comps))
        assert rep.ok
        assert rep.D == pytest.approx(2.0, rel=1e-9)

    def test_super_geometric_flagged(self):
        # moment m_k = k^k grows faster than any geometric envelope
        comps = {
            (k, 1): DiscreteMeasure([float(max(k, 1))], [1.0], half_line=True)
            for k in range(8)
        }
        rep = growth_condition_check(PseudoPositiveMeasure(3, comps))
        assert not rep.ok


class TestProjection:
    def test_projection_identity(self):
        # sphere-quadrature projection equals the 1-d transform of r^k dmu_{k,l}
        rng = np.random.default_rng(5)
        comps = {}
        for k in range(3):
            for ell in range(1, sphere.dim_harmonics(3, k) + 1):
                atoms = np.sort(rng.uniform(0.1, 0.9, size=2))
                w = rng.uniform(0.2, 1.0, size=2)
                comps[(k, ell)] = DiscreteMeasure(atoms, w, half_line=True)
        mu = PseudoPositiveMeasure(3, comps)
        zeta = 4.0 * RAY
        for idx in ((0, 1), (1, 2), (2, 4)):
            meas = mu.components[idx]
            tilde = DiscreteMeasure(meas.atoms**2, meas.weights * meas.atoms ** idx[0], half_line=True)
            direct = stieltjes_transform(tilde, zeta**2)
            assert abs(project_transform(mu, idx, zeta) - direct) < 1e-10

    def test_insufficient_degree_flagged(self):
        mu = single_component(3, 2, 1, [0.5], [1.0])
        with pytest.raises(ValueError):
            project_transform(mu, (2, 1), 4.0 * RAY, quad_degree=2)


class TestMultiNevanlinna:
    def test_zero_measure(self):
        mu = PseudoPositiveMeasure(3, {})
        res = multi_nevanlinna_check(mu, (0, 1), 1, [4.0 * RAY, 8.0 * RAY])
        assert np.all(res == 0.0)

    def test_single_atom_residual_vanishes(self):
        mu = single_component(3, 0, 1, [1.0], [1.0])
        res = multi_nevanlinna_check(mu, (0, 1), 1, [4.0 * RAY, 8.0 * RAY, 16.0 * RAY])
        assert np.all(np.diff(res) < 0.0)
        # closed form: residual = 1/|zeta^2 - 1|
        for m, r in zip((4.0, 8.0, 16.0), res):
            assert r == pytest.approx(1.0 / abs((m * RAY) ** 2 - 1.0), rel=1e-8)

    def test_decay_order_two(self):
        mu = single_component(3, 0, 1, [0.5], [1.0])
        res = multi_nevanlinna_check(mu, (0, 1), 1, [4.0 * RAY, 8.0 * RAY, 16.0 * RAY])
        ratios = res[:-1] / res[1:]
        assert np.all((ratios > 3.5) & (ratios < 4.5))
        assert res[-1] <= 1e-4


class TestDivergentPartialSums:
    def test_n_zero(self):
        mu = single_component(3, 0, 1, [0.7], [1.0])
        p = KDQPoint(3.0 * RAY, E3)
        f0, g0 = divergent_partial_sums(mu, 0, p)
        assert f0 == 0.0
        assert g0 == pytest.approx(component_moment(mu, (0, 1), 0) * sphere.eval_harmonic(3, (0, 1), E3))

    def test_f_is_geometric_truncation(self):
        mu = single_component(3, 0, 1, [0.5], [1.0])
        p = KDQPoint(4.0 * RAY, E3)
        f2, _ = divergent_partial_sums(mu, 2, p)
        z = p.zeta
        expected = sum(0.5 ** (2 * j) * z ** (-2 * j - 1) for j in range(4))
        assert f2 == pytest.approx(expected)

    def test_combined_summation_check(self):
        rng = np.random.default_rng(6)
        comps = {}
        for k in range(3):
            for ell in range(1, sphere.dim_harmonics(3, k) + 1):
                comps[(k, ell)] = DiscreteMeasure(
                    np.sort(rng.uniform(0.2, 0.9, 2)), rng.uniform(0.2, 1.0, 2), half_line=True
                )
        mu = PseudoPositiveMeasure(3, comps)
        th = unit(rng.normal(size=3))
        prev = np.inf
        for mod in (4.0, 8.0, 16.0):
            p = KDQPoint(mod * RAY, th)
            mh = markov_stieltjes(mu, p)
            f1, g1 = divergent_partial_sums(mu, 1, p)
            gap = abs(p.zeta**5 * (mh - f1) - g1)
            assert gap < prev
            prev = gap
        assert prev < 1e-2


class TestAlmansiPolynomial:
    def test_eval_matches_monomial(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=3)
        poly = AlmansiPolynomial(3, {(2, 1, 2): 1.0})
        r2 = float(x @ x)
        expected = r2**2 * sphere.solid_harmonic(3, (1, 2), x)
        assert poly.eval(x) == pytest.approx(expected)

    def test_kdq_extension_on_real_points(self):
        # at zeta = |x| real and theta = x/|x| the extension equals eval
        rng = np.random.default_rng(8)
        x = rng.normal(size=2)
        poly = AlmansiPolynomial(2, {(1, 1, 1): 0.7, (0, 2, 2): -0.4})
        r = np.linalg.norm(x)
        val = poly.eval_kdq(np.complex128(r), x / r)
        assert complex(val) == pytest.approx(poly.eval(x))

    def test_invalid_index_rejected(self):
        with pytest.raises(ValueError):
            AlmansiPolynomial(2, {(0, 1, 3): 1.0})
