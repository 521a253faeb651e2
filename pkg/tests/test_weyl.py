"""Unit tests for half-line m-functions: closed form, dual code paths,
negativity/monotonicity theorems, boundary limits, positivity diagnostics."""

import math

import numpy as np
import pytest

from randschrod import cocycle, spectrum, weyl
from randschrod.errors import IllConditionedError, InvalidInput


def free_window(length=2000, anchor=0):
    return weyl.HalfLineWindow(anchor, np.zeros(length))


class TestClosedForm:
    def test_reference_value(self):
        m = weyl.free_m_closed_form(3.0)
        assert m == pytest.approx((-3.0 + math.sqrt(5.0)) / 2.0, abs=1e-14)
        assert m == pytest.approx(-0.381966, abs=1e-6)

    def test_decaying_branch(self):
        for z in (2.5, 5.0, -3.0, 10.0):
            assert abs(weyl.free_m_closed_form(z)) <= 1.0


class TestMFunction:
    def test_free_matches_closed_form_at_three(self):
        hl = free_window(2000)
        assert weyl.m_function(hl, 3.0) == pytest.approx(
            weyl.free_m_closed_form(3.0), abs=1e-6
        )

    def test_dual_paths_agree(self):
        rng = np.random.default_rng(0)
        hl = weyl.HalfLineWindow(1, rng.choice([0.0, 1.0], size=300))
        for z in np.linspace(hl.top + 0.2, hl.top + 3.0, 7):
            a = weyl.m_function(hl, float(z))
            b = weyl.m_function_continued_fraction(hl, float(z))
            assert abs(a - b) <= 1e-9

    def test_resolvent_asymptotics(self):
        hl = free_window(500)
        z = 1000.0
        m = weyl.m_function(hl, z)
        assert m < 0.0
        assert abs(m * z + 1.0) < 0.01  # m(z) ~ -1/z at infinity

    def test_positive_below_spectrum(self):
        hl = free_window(500)
        assert weyl.m_function(hl, -3.0) > 0.0

    def test_near_eigenvalue_rejected(self):
        hl = free_window(200)
        with pytest.raises(IllConditionedError) as exc:
            weyl.m_function(hl, hl.top)
        assert exc.value.distance is not None

    def test_window_needs_three_sites(self):
        with pytest.raises(InvalidInput):
            weyl.HalfLineWindow(0, np.zeros(2))


class TestNegativityMonotonicity:
    def test_free_scan_passes(self):
        hl = free_window(500)
        rep = weyl.negativity_monotonicity_scan(hl, np.linspace(2.1, 5.0, 25))
        assert rep["ok"]
        assert not rep["negativity_violations"]
        assert not rep["monotonicity_violations"]

    def test_bernoulli_scan_passes(self):
        rng = np.random.default_rng(5)
        hl = weyl.HalfLineWindow(0, rng.choice([0.0, 0.5], size=200))
        grid = np.linspace(hl.top + 0.1, hl.top + 2.0, 20)
        assert weyl.negativity_monotonicity_scan(hl, grid)["ok"]

    def test_grid_must_be_above_top(self):
        hl = free_window(100)
        with pytest.raises(InvalidInput):
            weyl.negativity_monotonicity_scan(hl, np.linspace(0.0, 3.0, 10))

    def test_grid_must_increase(self):
        hl = free_window(100)
        with pytest.raises(InvalidInput):
            weyl.negativity_monotonicity_scan(hl, [3.0, 2.5, 4.0])

    def test_grid_touching_eigenvalue_propagates(self):
        hl = free_window(100)
        grid = np.array([hl.top + 5e-9, hl.top + 1.0, hl.top + 2.0])
        with pytest.raises(IllConditionedError):
            weyl.negativity_monotonicity_scan(hl, grid)


class TestSubordinateLimit:
    def test_free_limit_at_band_edge(self):
        hl = free_window(2000)
        rep = weyl.subordinate_limit(hl, 2.0)
        assert rep["monotone_decreasing"]
        assert not rep["solver_bug_signal"]
        assert not rep["diverging"]
        # m(2+) = -1 for the free half line; the epsilon cutoff leaves a
        # sqrt(eps)-sized offset
        assert rep["limit_estimate"] == pytest.approx(-1.0, abs=0.05)

    def test_epsilon_sequence_validation(self):
        hl = free_window(100)
        with pytest.raises(InvalidInput):
            weyl.subordinate_limit(hl, 2.0, eps_sequence=[0.1, 0.2])

    def test_certificate_boundary_limit_matches_ratio(self, pilot_cert):
        # anchored at site 1 with Dirichlet at 0, the decaying solution is the
        # certificate tail and m(E+) -> -u(1)/u(0) = -x_0
        cert = pilot_cert
        pot = cert.realization.potential[cert.n_back + 1:]
        hl = weyl.HalfLineWindow(1, pot)
        # explicit epsilons: the default cutoff heuristic is far too coarse
        # for this short, well-separated window
        rep = weyl.subordinate_limit(
            hl, cert.energy, eps_sequence=[2.0 ** -j for j in range(21)]
        )
        assert not rep["diverging"]
        assert rep["limit_estimate"] == pytest.approx(-cert.ratio(0), abs=1e-4)


class TestPositivityCheck:
    def test_certificate_eigenfunction_positive(self, pilot_cert):
        sol = cocycle.SolutionWindow(
            pilot_cert.realization.n_min + 1,
            pilot_cert.realization.n_max - 1,
            pilot_cert.energy,
            pilot_cert.eigenfunction,
        )
        rep = weyl.positivity_check(sol)
        assert rep["ok"]
        assert rep["min_entry"] > 0.0
        assert not rep["sign_change_indices"]

    def test_free_ground_state_positive(self):
        win = spectrum.RealizationWindow.from_word(np.zeros(30))
        tr = spectrum.truncated_spectrum(
            spectrum.assemble_truncation(win), want_top_vector=True
        )
        sol = cocycle.SolutionWindow(1, 28, tr.top, tr.top_vector)
        assert weyl.positivity_check(sol)["ok"]

    def test_sign_change_detected(self):
        sol = cocycle.SolutionWindow(1, 2, 0.0, np.array([1.0, -0.5, 1.0, 2.0]))
        rep = weyl.positivity_check(sol)
        assert not rep["ok"]
        assert rep["sign_change_indices"]

    def test_zero_solution_rejected(self):
        sol = cocycle.SolutionWindow(1, 2, 0.0, np.zeros(4))
        with pytest.raises(InvalidInput):
            weyl.positivity_check(sol)
