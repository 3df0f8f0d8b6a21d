import math

import numpy as np
import pytest

from carleman_cone.quad import (
    BumpFunction,
    BumpSum,
    CarlemanReport,
    DegenerateWeightError,
    GridSpec,
    SupportViolationError,
    bump_eval,
    carleman_integrals,
    heat_residual,
    verify_carleman,
)
from carleman_cone.weights import WeightParams, log_weight

PARAMS = WeightParams(m=2.46, alpha=1.999, gamma=0.8092, epsilon=0.60)
BUMP = BumpFunction(amplitude=1.0, center=(4.0, 0.0, 0.5), radii=(0.8, 0.8, 0.3))


class QuadraticProbe:
    """u(x, t) = x1^2: heat residual is exactly 2."""

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        grad = np.zeros(x.size)
        grad[0] = 2.0 * x[0]
        return float(x[0] ** 2), grad, 2.0, 0.0


class BackwardCaloricProbe:
    """u(x, t) = (4 pi (1-t))^(-n/2) exp(-|x|^2 / (4 (1-t))): residual 0."""

    def __init__(self, dim=2):
        self.dim = dim

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        tau = 1.0 - t
        value = (4.0 * math.pi * tau) ** (-self.dim / 2.0) * math.exp(
            -float(np.dot(x, x)) / (4.0 * tau)
        )
        grad = -x / (2.0 * tau) * value
        lap = value * (float(np.dot(x, x)) / (4.0 * tau * tau) - self.dim / (2.0 * tau))
        dt = lap  # d/dt = -d/dtau, and d/dtau equals the Laplacian; sign flips
        return value, grad, lap, -lap


class TestBumpFunction:
    def test_center_value_and_symmetry(self):
        v, g, lap, dt = bump_eval(BUMP, (4.0, 0.0), 0.5)
        assert v == pytest.approx(math.exp(-3.0), rel=1e-14)
        assert np.allclose(g, 0.0)
        assert dt == 0.0

    def test_outside_support_zero(self):
        v, g, lap, dt = bump_eval(BUMP, (6.0, 0.0), 0.5)
        assert v == 0.0 and lap == 0.0 and dt == 0.0
        assert np.all(g == 0.0)
        v, _, _, _ = bump_eval(BUMP, (4.0, 0.0), 0.95)
        assert v == 0.0

    def test_finite_difference_match(self):
        rng = np.random.default_rng(61)
        d1, d2 = 1e-6, 1e-4
        for _ in range(100):
            x = np.array([
                rng.uniform(3.4, 4.6),
                rng.uniform(-0.6, 0.6),
            ])
            t = float(rng.uniform(0.28, 0.72))
            v, g, lap, dt = bump_eval(BUMP, x, t)
            for j in range(2):
                e = np.zeros(2); e[j] = d1
                fd = (bump_eval(BUMP, x + e, t)[0] - bump_eval(BUMP, x - e, t)[0]) / (2 * d1)
                assert abs(fd - g[j]) <= 1e-5
            fdt = (bump_eval(BUMP, x, t + d1)[0] - bump_eval(BUMP, x, t - d1)[0]) / (2 * d1)
            assert abs(fdt - dt) <= 1e-5
            fdl = sum(
                (bump_eval(BUMP, x + d2 * e, t)[0] - 2 * v + bump_eval(BUMP, x - d2 * e, t)[0])
                / d2 ** 2
                for e in np.eye(2)
            )
            assert abs(fdl - lap) <= 1e-5

    def test_validation(self):
        with pytest.raises(ValueError):
            BumpFunction(amplitude=1.0, center=(4.0, 0.5), radii=(0.8, 0.3))  # dim < 2
        with pytest.raises(ValueError):
            BumpFunction(amplitude=1.0, center=(4.0, 0.0, 0.5), radii=(0.8, -0.1, 0.3))


class TestBumpSum:
    def test_sum_of_two(self):
        other = BumpFunction(amplitude=0.5, center=(4.5, 0.2, 0.5), radii=(0.2, 0.2, 0.2))
        combo = BumpSum((BUMP, other))
        x, t = (4.45, 0.15), 0.45
        v, g, lap, dt = combo.evaluate(x, t)
        v1, g1, l1, d1 = BUMP.evaluate(x, t)
        v2, g2, l2, d2 = other.evaluate(x, t)
        assert v == pytest.approx(v1 + v2, rel=1e-14)
        assert np.allclose(g, g1 + g2)
        assert lap == pytest.approx(l1 + l2, rel=1e-12)
        assert dt == pytest.approx(d1 + d2, rel=1e-12)

    def test_hull_support(self):
        other = BumpFunction(amplitude=0.5, center=(5.0, 0.0, 0.4), radii=(0.5, 0.5, 0.2))
        combo = BumpSum((BUMP, other))
        assert combo.support[0] == (3.2, 5.5)
        assert combo.support[2] == (0.2, 0.8)

    def test_at_most_four(self):
        with pytest.raises(ValueError):
            BumpSum((BUMP,) * 5)


class TestHeatResidual:
    def test_outside_support(self):
        assert heat_residual(BUMP, (9.0, 9.0), 0.5) == 0.0

    def test_quadratic_probe(self):
        assert heat_residual(QuadraticProbe(), (3.7, 0.4), 0.3) == 2.0

    def test_backward_caloric_probe(self):
        probe = BackwardCaloricProbe(dim=2)
        rng = np.random.default_rng(67)
        for _ in range(20):
            x = rng.uniform(-2.0, 2.0, size=2)
            t = float(rng.uniform(0.1, 0.9))
            assert abs(heat_residual(probe, x, t)) <= 1e-10
            # cross-check the probe itself against finite differences
            d = 1e-6
            v = probe.evaluate(x, t)[0]
            fdt = (probe.evaluate(x, t + d)[0] - probe.evaluate(x, t - d)[0]) / (2 * d)
            assert fdt == pytest.approx(probe.evaluate(x, t)[3], rel=1e-5, abs=1e-9)


class TestGridSpec:
    def test_counts_validated(self):
        with pytest.raises(ValueError):
            GridSpec(counts=(7, 9, 9), box=BUMP.support)
        with pytest.raises(ValueError):
            GridSpec(counts=(10, 9, 9), box=BUMP.support, rule="simpson")
        GridSpec(counts=(10, 10, 10), box=BUMP.support, rule="midpoint")

    def test_simpson_weights_sum_to_length(self):
        grid = GridSpec.from_support(BUMP, 41)
        for axis in range(3):
            nodes, weights = grid.axis_nodes_weights(axis)
            lo, hi = grid.box[axis]
            assert weights.sum() == pytest.approx(hi - lo, rel=1e-12)
            assert nodes[0] == lo and nodes[-1] == hi

    def test_midpoint_nodes_interior(self):
        grid = GridSpec(counts=(8, 8, 8), box=BUMP.support, rule="midpoint")
        nodes, weights = grid.axis_nodes_weights(0)
        lo, hi = grid.box[0]
        assert lo < nodes[0] and nodes[-1] < hi
        assert weights.sum() == pytest.approx(hi - lo, rel=1e-12)


class TestCarlemanIntegrals:
    def test_zero_amplitude_vacuous(self):
        u = BumpFunction(amplitude=0.0, center=(4.0, 0.0, 0.5), radii=(0.8, 0.8, 0.3))
        rep = carleman_integrals(u, PARAMS, 1.0, 60.0, GridSpec.from_support(u, 21))
        assert rep.lhs == 0.0 and rep.rhs == 0.0
        assert rep.ratio == 0.0
        assert rep.passed

    def test_amplitude_scaling(self):
        grid = GridSpec.from_support(BUMP, 41)
        base = carleman_integrals(BUMP, PARAMS, 1.0, 60.0, grid)
        for lam in (0.5, 2.0, 3.0):
            scaled = BumpFunction(amplitude=lam, center=BUMP.center, radii=BUMP.radii)
            rep = carleman_integrals(scaled, PARAMS, 1.0, 60.0, grid)
            assert rep.lhs == pytest.approx(lam ** 2 * base.lhs, rel=1e-12)
            assert rep.rhs == pytest.approx(lam ** 2 * base.rhs, rel=1e-12)
            assert rep.ratio == pytest.approx(base.ratio, rel=1e-12)

    def test_acceptance_configuration_passes(self):
        grid = GridSpec.from_support(BUMP, 81)
        for a in (0.1, 1.0, 10.0):
            rep = carleman_integrals(BUMP, PARAMS, a, 60.0, grid)
            assert rep.passed
            assert rep.lhs <= rep.rhs
            assert rep.ratio < 1.0

    def test_support_violation(self):
        bad = BumpFunction(amplitude=1.0, center=(1.5, 0.0, 0.5), radii=(0.8, 0.8, 0.3))
        with pytest.raises(SupportViolationError):
            carleman_integrals(bad, PARAMS, 1.0, 60.0, GridSpec.from_support(bad, 21))
        late = BumpFunction(amplitude=1.0, center=(4.0, 0.0, 0.8), radii=(0.8, 0.8, 0.3))
        with pytest.raises(SupportViolationError):
            carleman_integrals(late, PARAMS, 1.0, 60.0, GridSpec.from_support(late, 21))
        # wide cone parameter makes the same box exit the cone
        narrow = WeightParams(m=2.46, alpha=1.999, gamma=0.8092, epsilon=0.98)
        with pytest.raises(SupportViolationError):
            carleman_integrals(BUMP, narrow, 1.0, 60.0, GridSpec.from_support(BUMP, 21))

    def test_strict_resolution_raises_when_concentrated(self):
        grid = GridSpec.from_support(BUMP, 41)
        rep = carleman_integrals(BUMP, PARAMS, 1.0, 60.0, grid)
        assert rep.resolved_fraction < 0.01
        with pytest.raises(DegenerateWeightError):
            carleman_integrals(BUMP, PARAMS, 1.0, 60.0, grid, strict_resolution=True)
        # unit weight resolves everywhere, so strict mode is happy
        rep = carleman_integrals(BUMP, PARAMS, 0.0, 60.0, grid,
                                 strict_resolution=True, unit_weight=True)
        assert rep.resolved_fraction == pytest.approx(1.0)

    def test_log_stability(self):
        # raw exponent is astronomically large; evaluated envelope is <= 1
        grid = GridSpec.from_support(BUMP, 41)
        rep = carleman_integrals(BUMP, PARAMS, 10.0, 60.0, grid)
        assert rep.log_normalizer > 1e6
        assert math.isfinite(rep.lhs) and math.isfinite(rep.rhs)
        assert rep.lhs >= 0.0 and rep.rhs >= 0.0

    def test_grid_weight_agrees_with_scalar_log_weight(self):
        rep = carleman_integrals(BUMP, PARAMS, 2.0, 8.0, GridSpec.from_support(BUMP, 9))
        grid = GridSpec.from_support(BUMP, 9)
        nodes = [grid.axis_nodes_weights(i)[0] for i in range(3)]
        # spot-check the normalizer against scalar evaluation at grid nodes
        best = -math.inf
        for x1 in nodes[0][1:-1]:
            for x2 in nodes[1][1:-1]:
                for t in nodes[2][1:-1]:
                    best = max(best, log_weight((x1, x2), t, 2.0, 8.0, PARAMS))
        assert rep.log_normalizer == pytest.approx(best, rel=1e-12)

    def test_unit_weight_exactness(self):
        # full-path 81-per-axis result vs the separable 161-per-axis
        # reference (tensor Simpson of a product integrand factorizes)
        def simpson_1d(f, lo, hi, n):
            xs = np.linspace(lo, hi, n)
            h = (hi - lo) / (n - 1)
            w = np.full(n, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            return float(np.sum(w * f(xs)) * h / 3.0)

        def b(z):
            inside = np.abs(z) < 1
            w = np.where(inside, 1 - z * z, 1.0)
            return np.where(inside, np.exp(-1.0 / w), 0.0)

        def bp(z):
            inside = np.abs(z) < 1
            w = np.where(inside, 1 - z * z, 1.0)
            return b(z) * (-2.0 * z / (w * w))

        c, s = BUMP.center, BUMP.radii
        n_ref = 161
        val2 = [
            simpson_1d(lambda x, i=i: b((x - c[i]) / s[i]) ** 2, c[i] - s[i], c[i] + s[i], n_ref)
            for i in range(3)
        ]
        grad2 = [
            simpson_1d(
                lambda x, i=i: (bp((x - c[i]) / s[i]) / s[i]) ** 2,
                c[i] - s[i], c[i] + s[i], n_ref,
            )
            for i in range(2)
        ]
        ref_u2 = val2[0] * val2[1] * val2[2]
        ref_lhs = ref_u2
        for j in range(2):
            term = grad2[j] * val2[2]
            term *= val2[1 - j]
            ref_lhs += term

        rep = carleman_integrals(
            BUMP, PARAMS, 0.0, 60.0, GridSpec.from_support(BUMP, 81), unit_weight=True
        )
        assert rep.lhs == pytest.approx(ref_lhs, rel=1e-3)

        # u^2 alone, quadrature rule convergence at 81 vs the 161 reference
        u2_81 = math.prod(
            simpson_1d(lambda x, i=i: b((x - c[i]) / s[i]) ** 2, c[i] - s[i], c[i] + s[i], 81)
            for i in range(3)
        )
        assert u2_81 == pytest.approx(ref_u2, rel=1e-3)

    def test_translation_covariance(self):
        deeper = BumpFunction(amplitude=1.0, center=(6.0, 0.0, 0.5), radii=(0.8, 0.8, 0.3))
        grid = GridSpec.from_support(deeper, 41)
        rep = carleman_integrals(deeper, PARAMS, 1.0, 60.0, grid)
        assert rep.passed

    def test_grid_convergence_in_resolvable_regime(self):
        # With a mild amplification the weight spans the whole support and
        # the ratio converges under refinement.  (At K >= 60 the weight
        # concentrates onto single nodes and no grid refinement converges;
        # that regime is exercised by the strict-resolution test above.)
        r41 = carleman_integrals(BUMP, PARAMS, 0.5, 2.0, GridSpec.from_support(BUMP, 41))
        r81 = carleman_integrals(BUMP, PARAMS, 0.5, 2.0, GridSpec.from_support(BUMP, 81))
        assert r41.resolved_fraction == pytest.approx(1.0)
        drift = abs(r81.ratio - r41.ratio) / max(r81.ratio, r41.ratio)
        assert drift < 0.05


class TestGridFields:
    def test_grid_fields_match_scalar_closed_forms(self):
        # the quadrature consumes closed-form fields on the grid, identical
        # to pointwise bump_eval (no finite differences involved)
        from carleman_cone.quad import _fields_on_grid

        grid = GridSpec.from_support(BUMP, 9)
        axes = [grid.axis_nodes_weights(i)[0] for i in range(3)]
        value, grads, lap, dt = _fields_on_grid(BUMP, axes, 2)
        rng = np.random.default_rng(71)
        for _ in range(40):
            i, j, k = (int(rng.integers(0, 9)) for _ in range(3))
            v, g, l, d = bump_eval(BUMP, (axes[0][i], axes[1][j]), float(axes[2][k]))
            assert value[i, j, k] == pytest.approx(v, rel=1e-12, abs=1e-300)
            assert grads[0][i, j, k] == pytest.approx(g[0], rel=1e-12, abs=1e-300)
            assert grads[1][i, j, k] == pytest.approx(g[1], rel=1e-12, abs=1e-300)
            assert lap[i, j, k] == pytest.approx(l, rel=1e-12, abs=1e-300)
            assert dt[i, j, k] == pytest.approx(d, rel=1e-12, abs=1e-300)


class TestVerifyCarleman:
    def test_all_a_pass_within_cap(self):
        grid = GridSpec.from_support(BUMP, 41)
        reports = verify_carleman(BUMP, PARAMS, [0.1, 1.0, 10.0], 60.0, 240.0, grid)
        assert len(reports) == 3
        for rep in reports:
            assert rep.passed
            assert rep.K <= 240.0

    def test_empty_a_list(self):
        grid = GridSpec.from_support(BUMP, 41)
        assert verify_carleman(BUMP, PARAMS, [], 60.0, 240.0, grid) == []

    def test_k_init_above_cap(self):
        grid = GridSpec.from_support(BUMP, 41)
        with pytest.raises(ValueError):
            verify_carleman(BUMP, PARAMS, [1.0], 480.0, 240.0, grid)

    def test_escalation_doubles_until_pass(self, monkeypatch):
        # the real inequality already passes at K = 60 for every probed
        # configuration, so drive the escalation loop with a stub that
        # fails below K = 240
        import carleman_cone.quad as quad_mod

        calls = []

        def fake_integrals(u, params, a, K, grid, strict_resolution=False):
            calls.append(K)
            return CarlemanReport(
                a=a, K=K, lhs=1.0 if K < 240.0 else 0.5, rhs=0.75, ratio=1.0,
                log_normalizer=0.0, grid=grid, passed=K >= 240.0,
                resolved_fraction=1.0,
            )

        monkeypatch.setattr(quad_mod, "carleman_integrals", fake_integrals)
        grid = GridSpec.from_support(BUMP, 9)
        reports = quad_mod.verify_carleman(BUMP, PARAMS, [1.0], 60.0, 240.0, grid)
        assert calls == [60.0, 120.0, 240.0]
        assert len(reports) == 1 and reports[0].passed and reports[0].K == 240.0

    def test_escalation_reports_failure_at_cap(self, monkeypatch):
        import carleman_cone.quad as quad_mod

        def always_fail(u, params, a, K, grid, strict_resolution=False):
            return CarlemanReport(
                a=a, K=K, lhs=2.0, rhs=1.0, ratio=2.0, log_normalizer=0.0,
                grid=grid, passed=False, resolved_fraction=1.0,
            )

        monkeypatch.setattr(quad_mod, "carleman_integrals", always_fail)
        grid = GridSpec.from_support(BUMP, 9)
        reports = quad_mod.verify_carleman(BUMP, PARAMS, [0.5], 60.0, 240.0, grid)
        assert len(reports) == 1
        assert not reports[0].passed and reports[0].K == 240.0
