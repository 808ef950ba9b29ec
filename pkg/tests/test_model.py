import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from gapbeam.model import (
    EXCLUDED,
    IRRATIONAL,
    STABILIZING,
    BeamParams,
    ForceLaw,
    MultiplierSpec,
    NoContact,
    NormalCompliance,
    SignoriniPenalty,
    TipParams,
    body_force,
    body_force_derivative,
    body_force_primitive,
    contact_potential,
    contact_stiffness,
    contact_traction,
    default_multiplier,
    is_stabilizing_xi,
    multiplier_q,
    multiplier_q0,
)

NC = NormalCompliance(d1=1.0, d2=1.0, p=2, g_lo=-1.0, g_hi=1.0)
PEN = SignoriniPenalty(eps_pen=0.5, g_lo=-1.0, g_hi=1.0)


class TestContactTraction:
    def test_zero_inside_gap_all_laws(self):
        for law in (NoContact(), NC, PEN):
            for v in (-0.99, -0.3, 0.0, 0.5, 0.99):
                assert contact_traction(v, law) == 0.0

    def test_zero_at_contact_onset(self):
        assert contact_traction(1.0, NC) == 0.0

    def test_quadratic_upper_value(self):
        # -(3-1)^2 with d2=1, p=2
        assert contact_traction(3.0, NC) == -4.0

    def test_penalty_lower_value(self):
        # (1/0.5)*((-1) - (-2))^+ = 2
        assert contact_traction(-2.0, PEN) == 2.0

    def test_monotone_nonincreasing(self):
        for law in (NC, PEN, NormalCompliance(d1=2.0, d2=0.5, p=1, g_lo=-0.2, g_hi=0.4)):
            vs = np.linspace(-3.0, 3.0, 201)
            ts = [contact_traction(v, law) for v in vs]
            assert all(b <= a + 1e-15 for a, b in zip(ts, ts[1:]))


class TestContactPotential:
    def test_zero_on_gap(self):
        for law in (NC, PEN):
            for v in (law.g_lo, -0.5, 0.0, 0.7, law.g_hi):
                assert contact_potential(v, law) == 0.0

    def test_quadratic_upper_value(self):
        assert contact_potential(3.0, NC) == pytest.approx(8.0 / 3.0, rel=1e-15)

    def test_nonnegative_everywhere(self):
        for law in (NC, PEN):
            for v in np.linspace(-4, 4, 101):
                assert contact_potential(v, law) >= 0.0

    @pytest.mark.parametrize("law", [
        NC,
        NormalCompliance(d1=3.0, d2=0.7, p=1, g_lo=-0.5, g_hi=0.25),
        NormalCompliance(d1=1.5, d2=2.0, p=3, g_lo=-1.0, g_hi=0.5),
        PEN,
        SignoriniPenalty(eps_pen=1e-2, g_lo=-0.3, g_hi=0.3),
    ])
    def test_traction_is_negative_gradient(self, law):
        # central differences at 20 points; the two kink points are skipped
        # for p=1 (and the penalty law) where the traction is only C^0
        vs = np.linspace(-2.5, 2.5, 20)
        kinked = isinstance(law, SignoriniPenalty) or law.p == 1
        for v in vs:
            if kinked and (abs(v - law.g_hi) < 0.3 or abs(v - law.g_lo) < 0.3):
                continue
            for h in (1e-3, 1e-4, 1e-5):
                fd = -(contact_potential(v + h, law) - contact_potential(v - h, law)) / (2 * h)
                scale = max(1.0, abs(contact_traction(v, law)))
                assert abs(fd - contact_traction(v, law)) <= 50.0 * scale * h**2

    def test_derivative_at_example_point(self):
        for h in (1e-3, 1e-4, 1e-5, 1e-6):
            fd = -(contact_potential(3 + h, NC) - contact_potential(3 - h, NC)) / (2 * h)
            assert fd == pytest.approx(-4.0, abs=10 * h**2 + 1e-9)

    def test_semismooth_slope_zero_at_kink(self):
        law = NormalCompliance(d1=1.0, d2=1.0, p=1, g_lo=-1.0, g_hi=1.0)
        assert contact_stiffness(1.0, law) == 0.0
        assert contact_stiffness(1.5, law) == -1.0
        assert contact_stiffness(-1.5, law) == -1.0


class TestBodyForce:
    def test_vanishes_at_zero(self):
        assert body_force(0.0, ForceLaw(mu=2.0, alpha=1.5)) == 0.0

    def test_power_law_value(self):
        assert body_force(-1.5, ForceLaw(mu=2.0, alpha=2.0)) == pytest.approx(-6.75)

    def test_cutoff_branch(self):
        law = ForceLaw(mu=1.0, alpha=2.0, cutoff_R=1.0)
        assert body_force(3.0, law) == pytest.approx(3.0)
        assert body_force(-3.0, law) == pytest.approx(-3.0)

    def test_array_evaluation(self):
        law = ForceLaw(mu=1.0, alpha=1.0)
        s = np.array([-2.0, 0.0, 0.5])
        np.testing.assert_allclose(body_force(s, law), [-4.0, 0.0, 0.25])

    @pytest.mark.parametrize("law", [
        ForceLaw(mu=2.0, alpha=1.0, cutoff_R=1.5),
        ForceLaw(mu=0.5, alpha=2.0),
    ])
    def test_primitive_matches_quadrature(self, law):
        for s in (-2.2, -0.7, 0.4, 1.1, 3.0):
            ref, _ = quad(lambda t: body_force(t, law), 0.0, s)
            assert body_force_primitive(s, law) == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_global_lipschitz_with_cutoff(self):
        law = ForceLaw(mu=2.0, alpha=2.0, cutoff_R=1.0)
        bound = law.mu * (law.alpha + 1.0) * law.cutoff_R**law.alpha
        s = np.linspace(-5, 5, 400)
        quot = np.abs(np.diff(body_force(s, law))) / np.diff(s)
        assert quot.max() <= bound + 1e-12

    def test_derivative_matches_difference_quotients(self):
        law = ForceLaw(mu=1.3, alpha=2.0, cutoff_R=1.0)
        for s in (-2.0, -0.5, 0.3, 0.9, 2.5):
            h = 1e-6
            fd = (body_force(s + h, law) - body_force(s - h, law)) / (2 * h)
            assert body_force_derivative(s, law) == pytest.approx(fd, rel=1e-5, abs=1e-8)


class TestMultiplier:
    def test_anchor_values(self):
        spec = MultiplierSpec(n=1, ell=1.0)
        assert multiplier_q(0.0, spec) == (0.0, 1.0)
        q, qx = multiplier_q(1.0, spec)
        assert q == pytest.approx(math.e - 1.0)
        assert qx == pytest.approx(math.e)

    def test_companion_vanishes_at_right_end(self):
        spec = MultiplierSpec(n=3, ell=2.0)
        q0, _ = multiplier_q0(2.0, spec)
        assert q0 == pytest.approx(0.0, abs=1e-15)

    def test_rejects_outside_domain(self):
        spec = MultiplierSpec(n=2, ell=1.0)
        with pytest.raises(ValueError):
            multiplier_q(1.5, spec)
        with pytest.raises(ValueError):
            multiplier_q0(-0.1, spec)

    def test_strictly_increasing_from_zero(self):
        spec = default_multiplier(1.0)
        x = np.linspace(0.0, 1.0, 50)
        q, qx = multiplier_q(x, spec)
        assert q[0] == 0.0
        assert np.all(np.diff(q) > 0.0)
        assert np.all(qx > 0.0)

    def test_slope_dominates_value(self):
        # pointwise q'/q >= n, and in particular >= 1 for the default n
        for ell in (0.5, 1.0, 3.0):
            spec = default_multiplier(ell)
            assert spec.n >= 4.0 / ell
            x = np.linspace(1e-9, ell, 200)
            q, qx = multiplier_q(x, spec)
            ratio = qx / q
            assert ratio.min() >= spec.n
            weak = spec.n / (math.exp(spec.n * ell) - 1.0)
            assert ratio.min() >= weak


class TestXiVerdict:
    def test_excluded_two_thirds(self):
        assert is_stabilizing_xi(Fraction(2, 3)) == EXCLUDED

    def test_stabilizing_half(self):
        assert is_stabilizing_xi(Fraction(1, 2)) == STABILIZING

    def test_reduces_before_deciding(self):
        assert is_stabilizing_xi((4, 6)) == EXCLUDED
        assert is_stabilizing_xi((2, 4)) == STABILIZING

    def test_irrational_input(self):
        assert is_stabilizing_xi(None) == IRRATIONAL

    def test_rejects_bad_fractions(self):
        for bad in (Fraction(0, 1), Fraction(-1, 3), Fraction(5, 4), Fraction(1, 1)):
            with pytest.raises(ValueError):
                is_stabilizing_xi(bad)
        with pytest.raises(ValueError):
            is_stabilizing_xi((1, 0))


class TestValidation:
    def test_beam_positivity(self):
        with pytest.raises(ValueError):
            BeamParams(rho1=0.0, rho2=1, k=1, b=1, ell=1, xi_real=0.5)
        with pytest.raises(ValueError):
            BeamParams(rho1=1, rho2=1, k=1, b=1, ell=1, gamma1=-0.1, xi_real=0.5)

    def test_xi_inside_domain(self):
        with pytest.raises(ValueError):
            BeamParams(rho1=1, rho2=1, k=1, b=1, ell=1, xi_real=1.2)
        with pytest.raises(ValueError):
            BeamParams(rho1=1, rho2=1, k=1, b=1, ell=1, xi_fraction=Fraction(1, 2),
                       xi_real=0.5)

    def test_xi_fraction_times_ell(self):
        beam = BeamParams(rho1=1, rho2=1, k=1, b=1, ell=3.0, xi_fraction=Fraction(2, 3))
        assert beam.xi == pytest.approx(2.0)

    def test_tip_epsilon_required_when_enabled(self):
        with pytest.raises(ValueError):
            TipParams(enabled=True, epsilon=0.0)
        TipParams(enabled=False, epsilon=0.0)

    def test_contact_law_invariants(self):
        with pytest.raises(ValueError):
            NormalCompliance(d1=1, d2=1, p=4, g_lo=-1, g_hi=1)
        with pytest.raises(ValueError):
            NormalCompliance(d1=1, d2=1, p=2, g_lo=0.1, g_hi=1)
        with pytest.raises(ValueError):
            SignoriniPenalty(eps_pen=0.0, g_lo=-1, g_hi=1)

    def test_force_law_invariants(self):
        with pytest.raises(ValueError):
            ForceLaw(mu=-1.0)
        with pytest.raises(ValueError):
            ForceLaw(mu=1.0, cutoff_R=0.0)
