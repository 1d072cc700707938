import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dmsolve import nonlinearity as nl
from dmsolve import spectral as sp
from dmsolve import thresholds as th
from dmsolve.errors import DegenerateError, InvalidInputError
from dmsolve.optimizer import MinimizeConfig, evaluate_H
from dmsolve.oracles import GaussianParams, gaussian_field
from dmsolve.profiles import uniform01

from conftest import smooth_field

MU = uniform01(64)
# exact a^6 threshold at dav = 1 for the uniform measure on [0, 1]: the
# sharp quintic Gagliardo-Nirenberg constant gives pi / (2 sqrt 2)
SEXTIC_LAM_CR = math.pi / (2 * math.sqrt(2))


class TestRValue:
    def test_gaussian(self, gauss2):
        # ||g'||^2 = 1/2 for the sigma0 = 2 unit Gaussian
        n = math.asinh(2.0) / (2.0 * math.sqrt(2.0 * math.pi))
        assert th.r_value(1.0, gauss2, MU, nl.kerr()) == pytest.approx(2 * n, rel=1e-10)

    @given(l1=st.floats(0.1, 3.0), l2=st.floats(0.1, 3.0), gamma=st.sampled_from([4.0, 6.0, 9.0]))
    def test_scaling_exponent(self, l1, l2, gamma):
        h = smooth_field(sp.GridSpec(512, 40.0), 3)
        pot = nl.pure_power(1.0, gamma)
        ratio = th.r_value(l2, h, MU, pot) / th.r_value(l1, h, MU, pot)
        assert ratio == pytest.approx((l2 / l1) ** ((gamma - 2) / 2), rel=1e-12)

    def test_rejects(self, grid, gauss2):
        with pytest.raises(InvalidInputError):
            th.r_value(1.0, gauss2 * 2.0, MU, nl.kerr())
        with pytest.raises(InvalidInputError):
            th.r_value(0.0, gauss2, MU, nl.kerr())
        const = sp.Field(grid, np.full(grid.n, 1 / math.sqrt(grid.extent), dtype=complex))
        with pytest.raises(DegenerateError):
            th.r_value(1.0, const, MU, nl.kerr())


class TestScans:
    def test_sextic_threshold_matches_sharp_constant(self):
        cfg = MinimizeConfig(lam=1.0, grid=sp.GridSpec(2048, 160.0))
        scan = th.threshold_scan(1.0, nl.pure_power(1.0, 6.0), MU, (0.5, 2.0), config=cfg)
        assert scan.outcome == "bracketed"
        lo, hi = scan.bracket
        assert (hi - lo) <= 1e-2 * hi
        assert lo <= SEXTIC_LAM_CR <= hi
        assert scan.monotone() and scan.consistent()
        assert scan.to_csv().startswith("lambda,energy")

    def test_kerr_has_zero_threshold(self):
        # E ~ -lam^3/6 for small lam; a wide box is needed to resolve it
        cfg = MinimizeConfig(lam=1.0, grid=sp.GridSpec(2048, 160.0), sigma0_init=(1.0, 4.0, 16.0, 64.0))
        scan = th.threshold_scan(1.0, nl.kerr(), MU, (0.1, 1.0), config=cfg)
        assert scan.outcome == "below_lo"
        assert scan.records[0].energy < -1e-4

    def test_no_threshold(self):
        scan = th.threshold_scan(1.0, nl.pure_power(1.0, 6.0), MU, (0.05, 0.2))
        assert scan.outcome == "no_threshold" and math.isinf(scan.lam_cr)

    def test_bad_bracket(self):
        with pytest.raises(InvalidInputError):
            th.threshold_scan(1.0, nl.kerr(), MU, (2.0, 1.0))

    def test_consistency_audit(self):
        recs = [th.ScanRecord(1.0, -1e-3, True, 1, -1.0, "converged"),
                th.ScanRecord(2.0, 0.0, False, 1, 0.0, "dispersed")]
        scan = th.ThresholdScan(1.0, (1.0, 2.0), 1.5, recs, 1e-2, 1e-7)
        assert not scan.consistent() and not scan.monotone()


class TestScalingAndSubadditivity:
    @pytest.mark.parametrize("rho", [1.0, 1.5, 3.0])
    def test_scaling(self, grid, rho):
        f = smooth_field(grid, 4)
        pot = nl.Potential([(1.0, 4.0), (0.5, 6.0)], gamma0=4.0)
        rep = th.scaling_check(f, rho, 4.0, 1.0, MU, pot)
        assert rep["n_lower_holds"] and rep["holds"]

    def test_scaling_rejects_small_rho(self, grid):
        with pytest.raises(InvalidInputError):
            th.scaling_check(smooth_field(grid, 1), 0.5, 4.0, 1.0, MU, nl.kerr())

    def test_factor(self):
        assert th.subadditivity_factor(2.0, 0.9, 4.0) == pytest.approx(1 - 2 * 0.45 ** 2)

    def test_subadditivity_kerr(self):
        rep = th.subadditivity_check(2.0, 1.0, 1.0, 0.9, 4.0, 1.0, MU, nl.kerr())
        assert rep["holds"] and not rep["inconclusive"]
        assert rep["E"] < rep["E1"] + rep["E2"]  # strict binding for Kerr

    def test_subadditivity_rejects(self):
        with pytest.raises(InvalidInputError):
            th.subadditivity_check(2.0, 1.5, 1.0, 0.9, 4.0, 1.0, MU, nl.kerr())


class TestProbe:
    def test_supercritical_crosses(self):
        rep = th.nonexistence_probe(12.0, 1.0, 1.0, 1.0, MU, np.geomspace(1.0, 1e-5, 51))
        assert rep.crosses and rep.unbounded and rep.minimum < -1e3

    def test_dav_zero_slope(self):
        rep = th.nonexistence_probe(8.0, 1.0, 0.0, 1.0, MU, np.geomspace(1e-2, 1e-4, 41))
        assert rep.slope(1e-4, 1e-2) == pytest.approx(-0.5, abs=1e-2)
        assert rep.unbounded

    @pytest.mark.parametrize("gamma,dav", [(4.0, 1.0), (6.0, 1.0), (8.0, 1.0), (6.0, 0.0)])
    def test_bounded_cases(self, gamma, dav):
        rep = th.nonexistence_probe(gamma, 1.0, dav, 1.0, MU)
        assert not rep.unbounded and not rep.crosses

    def test_matches_grid(self, grid):
        pot = nl.pure_power(1.0, 6.0)
        rep = th.nonexistence_probe(6.0, 1.0, 1.0, 1.0, MU, [1.0, 3.0])
        for s0, e in rep.rows():
            g = gaussian_field(GaussianParams(1.0, s0), grid)
            assert e == pytest.approx(evaluate_H(g, 1.0, MU, pot), rel=1e-9)

    def test_rejects(self):
        with pytest.raises(InvalidInputError):
            th.nonexistence_probe(8.0, 1.0, 0.0, 1.0, MU, [1.0, -1.0])
        rep = th.nonexistence_probe(8.0, 1.0, 0.0, 1.0, MU, [1.0, 0.5])
        with pytest.raises(InvalidInputError):
            rep.slope(1e-3, 1e-2)


class TestCsInvariance:
    @pytest.mark.parametrize("delta", [0.5, 2.0])
    def test_gaussian(self, gauss2, delta):
        rep = th.cs_invariance_check(gauss2, 1.0, delta)
        assert rep["rel_err"] <= 1e-6 and not rep["inconclusive"]
        assert rep["norm_ratio"] == pytest.approx(1.0, rel=1e-10)

    def test_random_field(self, grid):
        f = smooth_field(grid, 12)
        rep = th.cs_invariance_check(f, 0.5, 2.0)
        assert rep["rel_err"] <= 1e-6


class TestGAlpha:
    @given(alpha=st.floats(0.01, 1.0), s=st.floats(1e-3, 1e6), t=st.floats(1.01, 10.0))
    def test_decreasing(self, alpha, s, t):
        assert th.g_alpha(alpha, s * t) < th.g_alpha(alpha, s)

    def test_edges(self):
        assert th.g_alpha(0.5, 0.0) == math.inf
        # alpha = 1/2: [(s+1)^(1/2) - 1]^(-1/2)
        assert th.g_alpha(0.5, 3.0) == pytest.approx(1.0)
        with pytest.raises(InvalidInputError):
            th.g_alpha(1.5, 1.0)


class TestSpecExamples:
    def test_r_value_reference(self, gauss2):
        assert th.r_value(1.0, gauss2, MU, nl.kerr()) == pytest.approx(0.575927, abs=1e-5)

    def test_r_value_negative_potential(self, gauss2):
        assert th.r_value(1.0, gauss2, MU, nl.pure_power(-1.0, 4.0)) < 0

    def test_factor_quarter(self):
        assert th.subadditivity_factor(1.0, 0.25, 4.0) == pytest.approx(0.875, rel=1e-15)

    def test_gaussian_scaling_bound(self, gauss2):
        rep = th.scaling_check(gauss2, 2.0, 4.0, 1.0, MU, nl.kerr())
        assert rep["rhs"] == pytest.approx(4 * -0.037964, abs=1e-5)
        assert rep["lhs"] <= -0.151860 and rep["holds"]

    def test_scaling_rho_one_is_equality(self, gauss2):
        rep = th.scaling_check(gauss2, 1.0, 4.0, 1.0, MU, nl.kerr())
        assert rep["margin"] == pytest.approx(0.0, abs=1e-15)

    def test_g_alpha_value(self):
        assert th.g_alpha(1.0, 7.0) == pytest.approx(3 ** -0.5, rel=1e-14)
        assert th.g_alpha(1.0, 1e12) < 1e-3

    def test_borderline_power_large_coefficient(self):
        assert th.nonexistence_probe(10.0, 50.0, 1.0, 1.0, MU).unbounded

    def test_kerr_zero_threshold_small_lambda(self):
        # E ~ -lam^3/6 is only -1.7e-7 at lam = 0.01; the minimizer is ~100 wide
        cfg = MinimizeConfig(lam=1.0, grid=sp.GridSpec(2048, 1280.0),
                             sigma0_init=(1.0, 4.0, 16.0, 64.0))
        scan = th.threshold_scan(1.0, nl.kerr(), MU, (0.01, 1.0), config=cfg)
        assert scan.outcome == "below_lo" and scan.lam_cr <= 0.01
