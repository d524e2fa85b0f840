import numpy as np
import pytest

from regcert import (
    Grid,
    HolderSpec,
    NoisyData,
    SampledFunction,
    add_noise,
    differentiate,
    empirical_sup_error,
    error_budget,
    holder_norm,
    integrate_volterra,
    member_candidates,
    membership,
    step_size,
    sup_distance,
    witness_pair,
)
from regcert.errors import (
    EmptyAdmissibleSetError,
    InvalidParameterError,
    ResolutionError,
    StepTooLargeError,
    UnsupportedExponentError,
)
from conftest import scaled_truth


def _scan_minimizer(delta, a, m):
    """Independent oracle: 1-D scan of the budget delta/h + m*h**(a-1)."""
    hs = np.exp(np.linspace(np.log(1e-6), np.log(0.5), 200001))
    vals = delta / hs + m * hs ** (a - 1.0)
    return hs[np.argmin(vals)], vals.min()


class TestStepSize:
    @pytest.mark.parametrize(
        "delta,a,m,expected",
        [(1e-4, 2.0, 1.0, 1e-2), (1e-3, 1.5, 2.0, 1e-2), (1e-4, 2.0, 4.0, 5e-3)],
    )
    def test_closed_form(self, delta, a, m, expected):
        h = step_size(delta, HolderSpec(a, m))
        assert h == pytest.approx(expected, rel=1e-12)
        h_scan, _ = _scan_minimizer(delta, a, m)
        assert h == pytest.approx(h_scan, rel=1e-3)

    def test_rejects_low_exponent(self):
        with pytest.raises(UnsupportedExponentError, match="witness"):
            step_size(1e-3, HolderSpec(1.0, 1.0))

    def test_rejects_bad_delta(self):
        with pytest.raises(InvalidParameterError):
            step_size(0.0, HolderSpec(2.0, 1.0))

    def test_grid_clamp(self):
        g = Grid(11)
        assert step_size(1e-12, HolderSpec(2.0, 1.0), g) == g.dx
        assert step_size(10.0, HolderSpec(2.0, 1.0), g) == 0.5


class TestDifferentiate:
    def test_affine_exact_all_branches(self):
        g = Grid(101)
        data = NoisyData(SampledFunction(g, g.nodes.copy()), 1e-3, "exact-shift")
        out = differentiate(data, HolderSpec(2.0, 1.0))
        np.testing.assert_allclose(out.values, 1.0, rtol=0, atol=1e-12)

    def test_quadratic_stencils(self):
        # f(x) = x^2/2: central is exact (x), forward gives x + h/2,
        # backward gives x - h/2; closed-form stencil arithmetic.
        g = Grid(201)
        spec = HolderSpec(2.0, 1.0)
        delta = 1e-3  # h snaps to 6 cells
        data = NoisyData(SampledFunction(g, g.nodes**2 / 2.0), delta, "exact-shift")
        out = differentiate(data, spec)
        h = error_budget(delta, spec, g).h
        m = round(h / g.dx)
        x = g.nodes
        np.testing.assert_allclose(out.values[m:-m], x[m:-m], atol=1e-12)
        np.testing.assert_allclose(out.values[:m], x[:m] + h / 2.0, atol=1e-12)
        np.testing.assert_allclose(out.values[-m:], x[-m:] - h / 2.0, atol=1e-12)

    def test_alternating_noise_hand_evaluation(self):
        # f_delta = x + delta*(-1)^i with h = dx.  Hand evaluation of the
        # stencils: the central branch sees equal noise at x-h and x+h, so the
        # interior output is exactly 1; the one-sided branches see a full sign
        # flip and give 1 -+ 2*delta/h.
        g = Grid(401)
        delta = g.dx**2  # forces h = c*sqrt(delta) = dx exactly, m = 1
        spec = HolderSpec(2.0, 1.0)
        e = delta * (-1.0) ** np.arange(g.n)
        data = NoisyData(SampledFunction(g, g.nodes + e), delta, "alternating")
        out = differentiate(data, spec)
        np.testing.assert_allclose(out.values[1:-1], 1.0, rtol=0, atol=1e-10)
        assert out.values[0] == pytest.approx(1.0 - 2.0 * delta / g.dx, rel=1e-10)
        assert out.values[-1] == pytest.approx(1.0 + 2.0 * delta / g.dx, rel=1e-10)

    def test_branch_consistency_at_seams(self):
        # Nodes at x = h and x = 1-h belong to the central branch.
        g = Grid(101)
        spec = HolderSpec(2.0, 1.0)
        delta = 2.5e-3  # h = 5 dx
        f = np.sin(3.0 * g.nodes)
        data = NoisyData(SampledFunction(g, f), delta, "exact-shift")
        out = differentiate(data, spec)
        m = round(error_budget(delta, spec, g).h / g.dx)
        h = m * g.dx
        assert out.values[m] == (f[2 * m] - f[0]) / (2 * h)
        assert out.values[g.n - 1 - m] == (f[-1] - f[g.n - 1 - 2 * m]) / (2 * h)
        assert out.values[m - 1] == (f[2 * m - 1] - f[m - 1]) / h
        assert out.values[g.n - m] == (f[g.n - m] - f[g.n - 2 * m]) / h

    def test_step_too_large(self):
        g = Grid(11)
        data = NoisyData(SampledFunction(g, g.nodes.copy()), 0.5, "exact-shift")
        with pytest.raises(StepTooLargeError):
            differentiate(data, HolderSpec(2.0, 1.0))


class TestErrorBudget:
    def test_pinned_values_a2(self):
        b = error_budget(1e-4, HolderSpec(2.0, 1.0))
        assert b.noise_term == pytest.approx(1e-2, rel=1e-12)
        assert b.bias_term == pytest.approx(1e-2, rel=1e-12)
        assert b.total == pytest.approx(2e-2, rel=1e-12)
        assert b.total == pytest.approx(2.0 * np.sqrt(1e-4), rel=1e-12)

    def test_pinned_values_a15(self):
        b = error_budget(1e-3, HolderSpec(1.5, 2.0))
        assert (b.noise_term, b.bias_term, b.total) == pytest.approx((0.1, 0.2, 0.3), rel=1e-12)

    def test_total_is_sum_and_dominates_rate(self):
        g = Grid(257)
        for delta in np.logspace(-6, -2, 9):
            for spec in (HolderSpec(2.0, 1.0), HolderSpec(1.5, 0.03), HolderSpec(1.2, 7.0)):
                b = error_budget(delta, spec, g)
                assert b.total == b.noise_term + b.bias_term
                assert b.total >= b.rate_bound * (1 - 1e-9)
                b_free = error_budget(delta, spec)
                assert b_free.total == pytest.approx(b_free.rate_bound, rel=1e-12)

    def test_total_vs_scan_oracle(self):
        # rate_bound equals the scanned minimum of the budget curve.
        for delta, a, m in [(1e-4, 2.0, 1.0), (1e-3, 1.5, 2.0), (1e-5, 1.8, 0.5)]:
            _, scan_min = _scan_minimizer(delta, a, m)
            b = error_budget(delta, HolderSpec(a, m))
            assert b.rate_bound == pytest.approx(scan_min, rel=1e-6)

    def test_total_vanishes_with_delta(self):
        spec = HolderSpec(2.0, 1.0)
        totals = [error_budget(d, spec).total for d in np.logspace(-2, -12, 11)]
        assert all(t1 > t2 for t1, t2 in zip(totals, totals[1:]))


class TestMembership:
    def test_truth_is_member(self):
        g = Grid(513)
        spec = HolderSpec(2.0, 1.0)
        u = scaled_truth(g, spec, g.nodes**2)
        data = add_noise(integrate_volterra(u), 1e-3, "seeded-uniform", seed=1)
        got = membership(u, data, spec)
        assert got.ok
        assert got.residual <= 1e-3 * (1 + 1e-9)
        assert got.norm <= 1.0 * (1 + 1e-9)

    def test_constant_shift_rejected(self):
        g = Grid(513)
        spec = HolderSpec(2.0, 2.0)
        u = scaled_truth(g, HolderSpec(2.0, 1.0), g.nodes**2)
        delta = 1e-4
        data = add_noise(integrate_volterra(u), delta, "smooth", seed=1)
        shifted = SampledFunction(g, u.values + 3.0 * delta)
        got = membership(shifted, data, spec)
        assert not got.ok
        # residual grows like 3*delta*x, so roughly 3*delta at x = 1
        assert got.residual == pytest.approx(3.0 * delta, rel=0.5)

    def test_witness_members(self):
        g = Grid(1025)
        spec = HolderSpec(2.0, 1.0)
        wp = witness_pair(1e-4, spec, 0.5, g)
        data = NoisyData(wp.f_delta, 1e-4, "exact-shift")
        assert membership(wp.v_plus, data, spec).ok
        assert membership(wp.v_minus, data, spec).ok


class TestWitnessPair:
    def test_construction_contracts(self):
        g = Grid(2049)
        spec = HolderSpec(2.0, 1.0)
        wp = witness_pair(1e-4, spec, 0.5, g)
        assert wp.separation == pytest.approx(2.0 * wp.bump_amplitude, abs=1e-12)
        resid_p = np.max(np.abs(integrate_volterra(wp.v_plus).values - wp.f_delta.values))
        assert resid_p <= 1e-4 * (1 + 1e-9)
        assert holder_norm(wp.v_plus, 2.0) <= 1.0 * (1 + 1e-9)

    def test_a0_no_decay(self):
        # Non-decaying separation across three decades: the class without a
        # derivative bound admits no worst-case regularizer.
        g = Grid(500001)
        spec = HolderSpec(0.0, 3.0)
        s_hi = witness_pair(1e-2, spec, 0.5, g).separation
        s_lo = witness_pair(1e-5, spec, 0.5, g).separation
        assert s_hi / s_lo == pytest.approx(1.0, abs=0.05)

    def test_a2_scaling_law(self):
        g = Grid(2049)
        spec = HolderSpec(2.0, 1.0)
        r = witness_pair(1e-4, spec, 0.5, g).separation / witness_pair(1e-4 / 8, spec, 0.5, g).separation
        assert r == pytest.approx(8.0 ** (2.0 / 3.0), rel=0.05)

    def test_resolution_error(self):
        g = Grid(65)
        with pytest.raises(ResolutionError):
            witness_pair(1e-9, HolderSpec(2.0, 1.0), 0.5, g)

    def test_center_validation(self):
        g = Grid(257)
        with pytest.raises(InvalidParameterError):
            witness_pair(1e-3, HolderSpec(2.0, 1.0), 1.5, g)


class TestEmpiricalSupError:
    def test_restricted_to_truth(self):
        g = Grid(513)
        spec = HolderSpec(2.0, 1.0)
        u = scaled_truth(g, spec, g.nodes**2)
        data = add_noise(integrate_volterra(u), 1e-3, "spike", seed=3)
        got = empirical_sup_error(data, spec, 1, seed=0, candidates=[u])
        assert got == sup_distance(differentiate(data, spec), u)

    def test_witness_injection_lower_bound(self):
        g = Grid(1025)
        spec = HolderSpec(2.0, 1.0)
        wp = witness_pair(1e-4, spec, 0.5, g)
        data = NoisyData(wp.f_delta, 1e-4, "exact-shift")
        got = empirical_sup_error(data, spec, 2, seed=0, candidates=[wp.v_plus, wp.v_minus])
        assert got >= wp.separation / 2.0

    def test_below_certified_budget(self):
        # Data and noise where the budget chain is airtight (spike and smooth
        # keep the one-sided noise amplification within the noise term).
        g = Grid(1025)
        spec = HolderSpec(2.0, 1.0)
        u = scaled_truth(g, spec, np.sin(2 * np.pi * g.nodes))
        f = integrate_volterra(u)
        for delta in (1e-3, 1e-4):
            budget = error_budget(delta, spec, g)
            for model in ("spike", "smooth", "exact-shift"):
                data = add_noise(f, delta, model, seed=11)
                pool = member_candidates(u, data, spec, 12, seed=5)
                got = empirical_sup_error(data, spec, 12, seed=5, candidates=pool)
                assert got <= budget.total

    def test_auto_pool_with_slack(self):
        g = Grid(513)
        spec = HolderSpec(2.0, 5.0)
        u = scaled_truth(g, HolderSpec(2.0, 2.0), g.nodes**2)
        data = add_noise(integrate_volterra(u), 1e-2, "spike", seed=3)
        got = empirical_sup_error(data, spec, 8, seed=0)
        assert got <= error_budget(1e-2, spec, g).total

    def test_empty_admissible_set(self):
        g = Grid(257)
        data = NoisyData(SampledFunction(g, 5.0 * g.nodes), 1e-6, "exact-shift")
        with pytest.raises(EmptyAdmissibleSetError):
            empirical_sup_error(data, HolderSpec(2.0, 0.05), 4, seed=0)

    def test_order_independence(self):
        g = Grid(513)
        spec = HolderSpec(2.0, 1.0)
        u = scaled_truth(g, spec, g.nodes**2)
        data = add_noise(integrate_volterra(u), 1e-3, "smooth", seed=9)
        pool = member_candidates(u, data, spec, 8, seed=2)
        a = empirical_sup_error(data, spec, 8, seed=2, candidates=pool)
        b = empirical_sup_error(data, spec, 8, seed=2, candidates=list(reversed(pool)))
        assert a == b


def test_budget_dominance_guaranteed_models():
    # Known truths inside the ball, every delta in a log sweep, for the noise
    # shapes whose one-sided amplification stays within the noise term.
    g = Grid(2049)
    spec = HolderSpec(2.0, 1.0)
    truths = [
        scaled_truth(g, spec, g.nodes**2),
        scaled_truth(g, spec, np.sin(2 * np.pi * g.nodes)),
    ]
    for u in truths:
        f = integrate_volterra(u)
        for delta in np.logspace(-5, -2, 7):
            budget = error_budget(delta, spec, g)
            for model in ("exact-shift", "spike", "smooth"):
                data = add_noise(f, delta, model, seed=21)
                err = sup_distance(differentiate(data, spec), u)
                assert err <= budget.total * (1 + 1e-6), (model, delta, err, budget.total)
