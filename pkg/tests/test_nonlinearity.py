import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dmsolve import nonlinearity as nl
from dmsolve import spectral as sp
from dmsolve.errors import InvalidInputError, UnsupportedError
from dmsolve.oracles import GaussianParams, gaussian_field, gaussian_lgamma_norm
from dmsolve.profiles import DispersionProfile, model_profile, pushforward_measure, uniform01
from dmsolve.verify import fd_gradient_errors

from conftest import smooth_field

KERR_N_SIGMA2 = math.asinh(2.0) / (2.0 * math.sqrt(2.0 * math.pi))
MIXED = nl.Potential([(-1.0, 4.0), (1.0, 8.0)])


class TestPotential:
    def test_kerr(self):
        pot = nl.kerr()
        assert pot(2.0) == 16.0
        assert nl.v_prime(pot, 2.0) == 32.0
        assert pot.is_pure_power and pot.gamma0 == 4.0

    def test_negative_amplitude_rejected(self):
        with pytest.raises(InvalidInputError):
            nl.v(nl.kerr(), -1.0)

    @pytest.mark.parametrize("terms", [[(1.0, 2.0)], [(1.0, 6.0), (1.0, 4.0)], []])
    def test_rejects_bad_terms(self, terms):
        with pytest.raises(InvalidInputError):
            nl.Potential(terms)

    def test_force_matches_derivative(self):
        u = np.array([0.3 + 0.4j, -1.2j, 0.0])
        a = np.abs(u)
        sgn = np.divide(u, a, out=np.zeros_like(u), where=a > 0)
        np.testing.assert_allclose(MIXED.force(u), nl.v_prime(MIXED, a) * sgn, atol=1e-15)

    def test_json_round_trip(self):
        pot = nl.Potential([(1.0, 4.0), (0.5, 6.0)], gamma0=4.0, kappa0=4.0)
        assert nl.potential_from_json(nl.potential_to_json(pot)) == pot
        with pytest.raises(InvalidInputError):
            nl.potential_from_json('{"terms": [{"c": 1}]}')
        with pytest.raises(InvalidInputError):
            nl.potential_from_json("{bad")


class TestAssumptions:
    def test_a2(self):
        assert nl.check_A2(nl.kerr())
        assert nl.check_A2(nl.Potential([(1.0, 4.0), (1.0, 6.0)]), 4.0)
        # V'(a) a - 8 V(a) = 4 a^4 for the mixed potential
        assert nl.check_A2(MIXED, 8.0)
        assert not nl.check_A2(nl.kerr(), 6.0)

    def test_a3(self):
        assert nl.check_A3(nl.kerr()) is not None
        assert nl.check_A3(nl.pure_power(-1.0, 4.0)) is None

    def test_a4(self):
        assert nl.check_A4(nl.kerr(), 1.0)
        assert not nl.check_A4(nl.pure_power(1.0, 8.0), 1.0)  # kappa0 = 8 >= 6
        assert nl.check_A4(nl.pure_power(1.0, 8.0), 0.0)
        assert not nl.check_A4(MIXED, 0.0)

    def test_homogeneity_lower(self):
        assert nl.check_homogeneity_lower(nl.Potential([(1.0, 4.0), (1.0, 6.0)], gamma0=4.0))
        assert not nl.check_homogeneity_lower(nl.kerr(), gamma0=6.0)

    def test_a1(self):
        assert nl.check_A1(MIXED)


class TestEvaluateN:
    def test_kerr_gaussian_value(self, grid):
        mu = uniform01(64)
        g = gaussian_field(GaussianParams(1.0, 2.0), grid)
        closed = nl.evaluate_N_gaussian_closed_form(nl.kerr(), mu, 1.0, 2.0)
        assert closed == pytest.approx(KERR_N_SIGMA2, rel=1e-14)
        assert nl.evaluate_N(g, mu, nl.kerr()) == pytest.approx(KERR_N_SIGMA2, rel=1e-10)

    @pytest.mark.parametrize("gamma", [3.0, 4.0, 6.0, 8.0])
    @pytest.mark.parametrize("s0", [1.0, 2.0 - 1.0j, 4.0 + 3.0j])
    def test_closed_form_matches_grid(self, grid, gamma, s0):
        pot = nl.pure_power(1.3, gamma)
        for mu in (uniform01(64), pushforward_measure(DispersionProfile([(2.0, 1.0), (-1.0, 2.0)]), 64)):
            g = gaussian_field(GaussianParams(0.7, s0), grid)
            closed = nl.evaluate_N_gaussian_closed_form(pot, mu, 0.7, s0)
            assert nl.evaluate_N(g, mu, pot) == pytest.approx(closed, rel=1e-10)

    def test_closed_form_without_pieces(self):
        mu = uniform01(64)
        bare = type(mu)(mu.nodes, mu.weights, mu.support, "explicit")
        a = nl.evaluate_N_gaussian_closed_form(nl.kerr(), bare, 1.0, 2.0)
        assert a == pytest.approx(KERR_N_SIGMA2, rel=1e-12)

    def test_closed_form_narrow_gaussian_matches_quad(self):
        # exact r-integral for a very narrow Gaussian against brute-force quad
        from scipy import integrate
        s0 = 1e-5
        pot = nl.pure_power(1.0, 12.0)
        p = GaussianParams(1.0, s0)
        ref, _ = integrate.quad(lambda r: gaussian_lgamma_norm(p, r, 12.0), 0, 1,
                                points=[1e-6, 1e-5, 1e-4, 1e-3], limit=500, epsrel=1e-12)
        assert nl.evaluate_N_gaussian_closed_form(pot, uniform01(8), 1.0, s0) == \
            pytest.approx(ref, rel=1e-9)

    def test_closed_form_rejects(self):
        with pytest.raises(UnsupportedError):
            nl.evaluate_N_gaussian_closed_form(MIXED, uniform01(8), 1.0, 2.0)
        with pytest.raises(InvalidInputError):
            nl.evaluate_N_gaussian_closed_form(nl.kerr(), uniform01(8), 1.0, -1.0)

    def test_lorentz_integral(self):
        from scipy import integrate
        for p in (0.25, 0.5, 1.0, 2.5):
            for ta, tb in ((-3.0, 5.0), (2.0, 40.0), (-50.0, -1.0)):
                ref, _ = integrate.quad(lambda t: (1 + t * t) ** -p, ta, tb, epsrel=1e-13)
                assert nl._lorentz_power_integral(p, ta, tb) == pytest.approx(ref, rel=1e-11)

    def test_single_atom_is_lp_norm(self, grid):
        f = smooth_field(grid, 3)
        atom = type(uniform01(2))(np.array([0.4]), np.array([1.0]), (0.4, 0.4), "atom")
        u = sp.propagate(f, 0.4)
        assert nl.evaluate_N(f, atom, nl.pure_power(1.0, 6.0)) == \
            pytest.approx(sp.lp_norm(u, 6) ** 6, rel=1e-12)

    @given(k=st.integers(-40, 40), seed=st.integers(0, 50))
    def test_translation_and_boost_invariance(self, k, seed):
        grid = sp.GridSpec(512, 40.0)
        mu = uniform01(16)
        f = smooth_field(grid, seed)
        n0 = nl.evaluate_N(f, mu, MIXED)
        assert nl.evaluate_N(sp.translate(f, k * grid.dx), mu, MIXED) == pytest.approx(n0, rel=1e-9)
        assert nl.evaluate_N(sp.boost(f, k * grid.deta), mu, MIXED) == pytest.approx(n0, rel=1e-9)

    @given(s=st.floats(0.1, 5.0), gamma=st.sampled_from([3.0, 4.0, 5.0, 8.0]))
    def test_pure_power_homogeneity(self, s, gamma):
        grid = sp.GridSpec(512, 40.0)
        f = smooth_field(grid, 11)
        pot = nl.pure_power(1.0, gamma)
        mu = uniform01(16)
        assert nl.evaluate_N(f * s, mu, pot) == pytest.approx(s ** gamma * nl.evaluate_N(f, mu, pot), rel=1e-12)

    def test_phase_invariance(self, grid, mu):
        f = smooth_field(grid, 5)
        assert nl.evaluate_N(f * np.exp(0.7j), mu, MIXED) == pytest.approx(nl.evaluate_N(f, mu, MIXED), rel=1e-13)


class TestGradient:
    def test_kerr_specialization_agrees(self, grid, mu):
        f = smooth_field(grid, 6)
        a = nl.grad_N(f, mu, nl.kerr(2.0)).values
        b = nl.grad_N_kerr(f, mu, 2.0).values
        np.testing.assert_allclose(a, b, atol=1e-12 * np.abs(b).max())

    @pytest.mark.parametrize("pot", [nl.kerr(), MIXED], ids=["kerr", "mixed"])
    def test_finite_differences(self, pot):
        errs = fd_gradient_errors(pot, uniform01(32), pairs=4, seed=21)
        assert errs.max() <= 1e-6

    def test_euler_identity(self, grid, mu):
        # Re<f, grad N(f)> = int V'(|u|)|u| for a pure power = gamma N(f)
        f = smooth_field(grid, 8)
        pot = nl.pure_power(1.0, 6.0)
        lhs = sp.inner(f, nl.grad_N(f, mu, pot)).real
        assert lhs == pytest.approx(6.0 * nl.evaluate_N(f, mu, pot), rel=1e-12)


class TestQuadratureNodes:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("DMS_QUAD_NODES", "17")
        assert nl.default_quad_nodes() == 17
        monkeypatch.setenv("DMS_QUAD_NODES", "x")
        with pytest.raises(InvalidInputError):
            nl.default_quad_nodes()
        monkeypatch.delenv("DMS_QUAD_NODES")
        assert nl.default_quad_nodes() == 64

    def test_adaptive_measure_converges(self, grid):
        f = smooth_field(grid, 9)
        mu, m = nl.adaptive_measure(lambda m: pushforward_measure(model_profile(), m), f,
                                    nl.kerr(), m0=4)
        ref = nl.evaluate_N(f, uniform01(256), nl.kerr())
        assert nl.evaluate_N(f, mu, nl.kerr()) == pytest.approx(ref, rel=1e-9)
        assert m >= 4


class TestSpecExamples:
    def test_values(self):
        assert nl.v(nl.kerr(), 0.0) == 0.0
        assert nl.v(MIXED, 1.0) == 0.0
        assert nl.v(MIXED, 2.0) == 240.0

    @pytest.mark.parametrize("pot,g0,expected", [
        (MIXED, 4.0, True),
        (nl.Potential([(-1.0, 4.0), (-1.0, 6.0)]), 6.0, True),
        (nl.kerr(), 5.0, False),
    ])
    def test_a2_table(self, pot, g0, expected):
        assert nl.check_A2(pot, g0) is expected

    def test_homogeneity_table(self):
        assert nl.check_homogeneity_lower(nl.kerr(), 4.0)
        assert nl.check_homogeneity_lower(MIXED, 4.0, t_samples=[2.0], a_samples=[1.0])
        assert nl.check_homogeneity_lower(MIXED, 4.0, t_samples=[1.0])

    def test_zero_field(self, grid, mu):
        assert nl.evaluate_N(grid.zeros(), mu, MIXED) == 0.0
        assert not np.any(nl.grad_N(grid.zeros(), mu, MIXED).values)

    def test_wide_gaussian_limit(self):
        vals = [nl.evaluate_N_gaussian_closed_form(nl.kerr(), uniform01(8), 1.0, s)
                for s in (1e2, 1e4, 1e6)]
        assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-3
