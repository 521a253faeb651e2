"""Unit tests for quasi-periodic backgrounds: top energy, the projective skew
product, invariant sections, center curves, cylinders, and construction."""

import math

import numpy as np
import pytest

import randschrod as rs
from randschrod import constructor, moebius, quasiperiodic as qp
from randschrod.errors import InvalidInput, SpectralRegimeError


PILOT_BG = qp.QPBackground.cosine(c=0.05)


class TestBackground:
    def test_zero_coupling_is_exact_zero(self):
        bg = qp.QPBackground.cosine(c=0.0)
        assert all(bg.value(n) == 0.0 for n in range(-5, 5))

    def test_pilot_value_at_origin(self):
        assert PILOT_BG.value(0) == pytest.approx(0.05, abs=1e-15)

    def test_values_vary_along_orbit(self):
        assert PILOT_BG.value(1) != PILOT_BG.value(2)

    def test_sup_norm(self):
        assert PILOT_BG.sup_norm() == 1.0
        bg = qp.QPBackground(fourier_cos=(0.5, 1.0), fourier_sin=(0.25,))
        assert bg.sup_norm() == 1.75

    def test_negative_coupling_rejected(self):
        with pytest.raises(InvalidInput):
            qp.QPBackground.cosine(c=-0.1)

    def test_dict_round_trip(self):
        back = qp.QPBackground.from_dict(PILOT_BG.to_dict())
        assert back == PILOT_BG

    def test_qp_value_helper(self):
        assert qp.qp_value(PILOT_BG, 3) == PILOT_BG.value(3)


class TestTopEnergy:
    def test_free_background(self):
        bg = qp.QPBackground.cosine(c=0.0)
        rep = qp.top_energy_report(bg, window_half_length=200)
        assert abs(rep["e_star"] - 2.0) <= 1e-5
        assert rep["raw_tops"][1] >= rep["raw_tops"][0]  # domain monotonicity

    def test_pilot_bracket(self):
        e_star = qp.top_energy(PILOT_BG, window_half_length=200)
        assert 2.0 - 0.05 <= e_star <= 2.0 + 0.05 + 1e-6

    def test_validation(self):
        with pytest.raises(InvalidInput):
            qp.top_energy_report(PILOT_BG, window_half_length=10)


class TestSkewProduct:
    def test_zero_coupling_reduces_to_moebius(self):
        bg = qp.QPBackground.cosine(c=0.0)
        lam = 0.1
        theta, x = qp.skew_step(bg, 2.0 + lam, 0.3, 1.2)
        assert x == moebius.moebius_apply(lam, 1.2)
        assert theta == pytest.approx((0.3 + bg.alpha) % 1.0)

    def test_inverse_round_trip(self):
        E = 2.2
        theta, x = 0.37, 1.15
        t1, x1 = qp.skew_step(PILOT_BG, E, theta, x)
        t2, x2 = qp.skew_inverse(PILOT_BG, E, t1, x1)
        assert t2 == pytest.approx(theta, abs=1e-12)
        assert x2 == pytest.approx(x, rel=1e-12)

    def test_orbit_matches_solution_ratios(self):
        # the skew orbit must reproduce u(n+1)/u(n) for the actual potential
        from randschrod import cocycle, spectrum

        E = 2.3
        n_sites = 30
        V = np.array([PILOT_BG.value(n) for n in range(n_sites)])
        win = spectrum.RealizationWindow.from_word(np.zeros(n_sites), background=V)
        sol = cocycle.propagate(E, win, 1.0, 1.3)
        theta, x = PILOT_BG.theta(0), 1.3  # x_{-1} = u(0)/u(-1)
        for n in range(n_sites):
            theta, x = qp.skew_step(PILOT_BG, E, theta, x)
            expected = sol.value(n + 1) / sol.value(n)
            assert x == pytest.approx(expected, rel=1e-9)


class TestInvariantSections:
    def test_zero_coupling_constant_sections(self):
        bg = qp.QPBackground.cosine(c=0.0)
        E = 2.1
        att, rep = qp.invariant_sections(bg, E)
        x_rep, x_att = rs.fixed_points(E - 2.0)
        assert att.constant and rep.constant
        assert att.values[0] == x_att
        assert rep.values[0] == x_rep

    def test_pilot_sections(self):
        E = qp.top_energy(PILOT_BG) + 0.1 - 1e-3
        att, rep = qp.invariant_sections(PILOT_BG, E)
        assert np.all(att.values > 1.0)
        assert np.all(rep.values < 1.0)
        assert np.all(rep.values > 0.0)
        assert att.invariance_residual(PILOT_BG, E) <= 1e-8
        assert rep.invariance_residual(PILOT_BG, E) <= 1e-8

    def test_energy_below_regime_rejected(self):
        with pytest.raises(SpectralRegimeError):
            qp.invariant_sections(PILOT_BG, 1.95)

    def test_forward_iterates_decrease(self):
        # the graph transform is monotone from a constant upper start
        E = qp.top_energy(PILOT_BG) + 0.1
        G = 256
        thetas = np.arange(G) / G
        w_prev = E - PILOT_BG.c * PILOT_BG.f((thetas - PILOT_BG.alpha) % 1.0)
        vals = np.full(G, E + PILOT_BG.c * PILOT_BG.sup_norm())
        prev_max = vals.max()
        for _ in range(5):
            sec = qp.Section(vals, "attracting")
            vals = w_prev - 1.0 / sec.value((thetas - PILOT_BG.alpha) % 1.0)
            assert vals.max() <= prev_max + 1e-12
            prev_max = vals.max()

    def test_section_gap(self):
        E = qp.top_energy(PILOT_BG) + 0.1 - 1e-3
        att, rep = qp.invariant_sections(PILOT_BG, E)
        gap = qp.section_gap(att, rep)
        assert 0.1 * math.sqrt(0.1) <= gap <= 10.0 * math.sqrt(0.1)

    def test_grid_validation(self):
        with pytest.raises(InvalidInput):
            qp.invariant_sections(PILOT_BG, 2.2, grid=4)


class TestCenterCurve:
    def test_zero_coupling(self):
        bg = qp.QPBackground.cosine(c=0.0)
        info = qp.transit_center_curve(bg, 2.0 + 0.1 - 1e-3, 0.1)
        assert info["curve"] is None
        assert info["drift"] == pytest.approx(-1e-3, abs=1e-15)
        assert info["residual_oscillation"] == 0.0

    def test_pilot_drift_near_minus_a(self):
        a = 1e-3
        E = qp.top_energy(PILOT_BG) + 0.1 - a
        info = qp.transit_center_curve(PILOT_BG, E, 0.1)
        # the oscillation left after the cohomological rounds must be well
        # below the O(a) covering margin the curve is protecting
        assert info["residual_oscillation"] <= 1e-2 * a
        assert info["drift"] == pytest.approx(-a, rel=0.2)

    def test_cohomological_solve_identity(self):
        G = 512
        thetas = np.arange(G) / G
        r = np.cos(2.0 * np.pi * thetas)
        alpha = qp.GOLDEN_MEAN
        D = qp._cohomological_solve(r, alpha)
        curve = qp.TrigCurve(D)
        lhs = curve.value((thetas + alpha) % 1.0) - curve.value(thetas)
        assert np.max(np.abs(lhs - r)) <= 1e-8

    def test_resonant_alpha_rejected(self):
        # a k = 2 mode against alpha = 1/2 puts e^{2 pi i k alpha} - 1 at zero
        G = 64
        r = np.cos(4.0 * np.pi * np.arange(G) / G)
        with pytest.raises(InvalidInput):
            qp._cohomological_solve(r, 0.5)


class TestCylindersAndCovering:
    def test_zero_coupling_bands_are_constant(self):
        bg = qp.QPBackground.cosine(c=0.0)
        lam, a = 0.1, 1e-3
        E = 2.0 + lam - a
        att, rep = qp.invariant_sections(bg, E)
        cyl = qp.Cylinders(bg, E, lam, att, rep, delta=a)
        traps = constructor.ConstructorParams(lam=lam, a=a).trapping_intervals()
        assert cyl.interval_I(7) == traps.interval
        assert cyl.interval_hat(-3) == traps.interval_hat

    def test_zero_coupling_covering(self):
        bg = qp.QPBackground.cosine(c=0.0)
        lam, a = 0.1, 1e-3
        E = 2.0 + lam - a
        att, rep = qp.invariant_sections(bg, E)
        cyl = qp.Cylinders(bg, E, lam, att, rep, delta=a)
        rep_dict = qp.qp_covering_check(bg, lam, E, cyl)
        assert rep_dict["ok"]

    def test_pilot_covering(self):
        lam, a = 0.1, 1e-3
        E = qp.top_energy(PILOT_BG) + lam - a
        att, rep = qp.invariant_sections(PILOT_BG, E)
        cyl = qp.Cylinders(PILOT_BG, E, lam, att, rep, delta=a)
        rep_dict = qp.qp_covering_check(PILOT_BG, lam, E, cyl)
        assert rep_dict["ok"]
        assert all(v >= -1e-9 for v in rep_dict["margins"].values())


class TestQPConstruct:
    def test_zero_coupling_reduces_bitwise(self):
        lam, a = 0.1, 1e-3
        bg = qp.QPBackground.cosine(c=0.0)
        qp_cert = qp.qp_construct(bg, qp.QPConstructParams(lam=lam, a=a))
        base_cert = constructor.construct(constructor.ConstructorParams(lam=lam, a=a))
        assert np.array_equal(qp_cert.realization.word, base_cert.realization.word)
        assert np.array_equal(qp_cert.ratios, base_cert.ratios)
        assert np.array_equal(qp_cert.log_u, base_cert.log_u)
        assert qp_cert.energy == base_cert.energy

    def test_pilot_certificate_verifies(self):
        cert = qp.qp_construct(PILOT_BG, qp.QPConstructParams(lam=0.1, a=1e-3))
        rep = constructor.verify_certificate(cert)
        assert rep["ok"]
        assert cert.background_descriptor["type"] == "quasiperiodic"

    def test_certificate_json_round_trip(self):
        cert = qp.qp_construct(PILOT_BG, qp.QPConstructParams(lam=0.1, a=1e-3))
        back = constructor.GroundStateCertificate.from_json_dict(cert.to_json_dict())
        assert np.array_equal(back.realization.potential, cert.realization.potential)
        assert constructor.verify_certificate(back)["ok"]

    def test_param_validation(self):
        with pytest.raises(InvalidInput):
            qp.QPConstructParams(lam=0.1, a=0.2)
        with pytest.raises(InvalidInput):
            qp.QPConstructParams(lam=0.8, a=0.5)


class TestQPSweep:
    def test_empty_grid(self):
        rep = qp.qp_sweep_interval(PILOT_BG, 0.1, [], base_params={"e_star": 2.0005})
        assert rep["total"] == 0 and rep["verified"] == 0
        assert rep["section_gap_range"] is None

    def test_small_sweep_rows(self):
        rep = qp.qp_sweep_interval(PILOT_BG, 0.1, [1e-3, 2e-3])
        assert rep["total"] == 2
        assert rep["verified"] == 2
        for row in rep["rows"]:
            assert row["ok"]
            assert row["section_residual"] <= 1e-8
        lo, hi = rep["section_gap_range"]
        assert 0.1 * math.sqrt(0.1) <= lo <= hi <= 10.0 * math.sqrt(0.1)

    def test_failures_collected_not_raised(self):
        # a = 0.099 leaves almost no room below lambda: the covering collapses
        rep = qp.qp_sweep_interval(PILOT_BG, 0.1, [1e-3, 0.099])
        assert rep["total"] == 2
        bad = [r for r in rep["rows"] if not r.get("ok")]
        assert len(bad) >= 1
