import pytest
import sympy as sp

from sktsym import expr as ex
from sktsym import solutions as so
from sktsym.expr import T, X
from sktsym.jet import VectorField


class TestFamilies:
    def test_builtin_ids_and_aliases(self):
        assert "seed-ode" in so.BUILTIN_IDS
        a = so.builtin_family("3-6")
        b = so.builtin_family("family-exp")
        assert a.u_expr == b.u_expr

    def test_unknown_id_raises(self):
        with pytest.raises(so.SolutionError):
            so.builtin_family("no-such-family")

    def test_branch_swap(self):
        up = so.builtin_family("family-trig", branch="upper")
        lo = up.swap_branch()
        assert lo.branch == "lower"
        assert up.u_expr == lo.v_expr and up.v_expr == lo.u_expr

    def test_seed_is_space_independent(self):
        seed = so.builtin_family("seed-ode")
        assert ex.diff(seed.u_expr, X).is_zero
        assert ex.diff(seed.v_expr, X).is_zero


class TestResidual:
    def test_symbolic_zero_for_every_builtin(self):
        for fid in so.BUILTIN_IDS:
            fam = so.builtin_family(fid)
            r1, r2 = so.residual(fam.system(), fam)
            assert r1.is_zero and r2.is_zero, fid

    def test_wrong_system_is_nonzero(self):
        fam = so.builtin_family("family-exp")           # solves the -uv form
        wrong = so.target_system(so.PLUS)               # +uv form
        r1, r2 = so.residual(wrong, fam)
        assert not (r1.is_zero and r2.is_zero)

    def test_numeric_oracle_independent(self):
        fam = so.builtin_family("family-trig")
        binds = {"alpha1": -1.0, "alpha2": -3.0, "p": 0.05,
                 "lambda1": 1.0, "lambda2": 0.3}
        worst, n = so.residual_numeric(fam.system(), fam, binds,
                                       points=10, seed=1)
        assert n == 10 and worst < 1e-10
        bad, _ = so.residual_numeric(so.target_system(so.MINUS), fam, binds,
                                     points=5, seed=1)
        assert bad > 1e-3

    def test_sample_points_deterministic(self):
        fam = so.builtin_family("family-trig")
        binds = {"alpha1": -1.0, "alpha2": -3.0, "p": 0.05,
                 "lambda1": 1.0, "lambda2": 0.3}
        a = so.sample_points(fam, binds, points=5, seed=9)
        b = so.sample_points(fam, binds, points=5, seed=9)
        assert a == b


class TestConstraints:
    def test_holds_with_margin(self):
        c = so.Constraint("nonzero", ex.parse("u - v"))
        assert c.holds({ex.U: 1.0, ex.V: 0.0})
        assert not c.holds({ex.U: 1.0, ex.V: 0.95})

    def test_nonneg_margin(self):
        c = so.Constraint("nonneg", ex.parse("u"))
        assert c.holds({ex.U: 0.5})
        assert not c.holds({ex.U: 0.001})

    def test_render_parse_roundtrip(self):
        c = so.Constraint("nonzero", ex.parse("1 - alpha2*exp(alpha1*t)"))
        assert so.Constraint.parse(c.render()) == c


class TestGroupOrbit:
    def test_identity_at_zero_parameter(self):
        seed = so.builtin_family("seed-ode")
        out = so.group_orbit(seed, 0, 1, 0, generator="X1")
        assert out.u_expr == seed.u_expr and out.v_expr == seed.v_expr

    def test_orbit_solves_the_system(self):
        seed = so.builtin_family("seed-ode")
        out = so.group_orbit(seed, ex.parameter("p"), generator="X1")
        r1, r2 = so.residual(out.system(), out)
        assert r1.is_zero and r2.is_zero

    def test_generator_system_mismatch_rejected(self):
        seed = so.builtin_family("seed-ode")      # lives on the -uv system
        with pytest.raises(so.SolutionError):
            so.group_orbit(seed, 1, generator="X2")


@pytest.fixture(scope="module")
def ansatz():
    op = VectorField.make(
        "0", "1",
        "(lambda1*cos(x)+lambda2*sin(x))/(u-v)",
        "-(lambda1*cos(x)+lambda2*sin(x))/(u-v)")
    return so.reduce_ansatz(so.target_system(so.PLUS), op)


class TestReduction:

    def test_exactly_two_odes(self, ansatz):
        assert len(ansatz.reduced) == 2
        p1, p2 = so.PHI1, so.PHI2
        expected = [ex.normalize(sp.diff(p1, T) + 2 * p2),
                    ex.normalize(p1 * sp.diff(p1, T) + 2 * sp.diff(p2, T))]
        for want in expected:
            assert any((o - want).is_zero or (o + want).is_zero
                       for o in ansatz.reduced)

    def test_only_time_derivatives(self, ansatz):
        for o in ansatz.reduced:
            for d in o.sym.atoms(sp.Derivative):
                assert set(d.variables) == {T}

    def test_branches_satisfy_odes(self, ansatz):
        for name, (f1, f2) in so.reduction_solutions().items():
            assert so.check_reduction(ansatz, f1, f2), name

    def test_perturbed_branch_fails(self, ansatz):
        assert not so.check_reduction(ansatz, -2 / T + 1, -1 / T ** 2)

    def test_wrong_system_rejected(self):
        op = VectorField.make("0", "1", "cos(x)/(u-v)", "-cos(x)/(u-v)")
        with pytest.raises(so.SolutionError):
            so.reduce_ansatz(so.target_system(so.MINUS), op)


class TestFlux:
    def test_full_interval_passes(self):
        trig = so.builtin_family("family-trig").subs(
            {ex.parameter("lambda2"): 0})
        assert so.flux_check(trig, 0, sp.pi).passed

    def test_half_interval_fails(self):
        trig = so.builtin_family("family-trig").subs(
            {ex.parameter("lambda2"): 0})
        assert not so.flux_check(trig, 0, sp.pi / 2).passed


class TestLogisticMap:
    def test_transformed_seed_still_solves(self):
        seed = so.builtin_family("seed-ode")
        fam, logsys = so.to_logistic(seed, "a", "b", "d1", "d2")
        r1, r2 = so.residual(logsys, fam)
        assert r1.is_zero and r2.is_zero


class TestSerialization:
    def test_solution_file_roundtrip(self):
        fam = so.builtin_family("family-trig")
        text = so.render_solution_file(fam)
        back = so.parse_solution_file(text)
        assert back.u_expr == fam.u_expr
        assert back.v_expr == fam.v_expr
        assert back.system_id == fam.system_id
        assert back.constraints == fam.constraints

    def test_verification_csv_header(self):
        out = so.verification_csv([("f", "3-1", 0.0, 20, "pass")])
        assert out.splitlines()[0] == "family,system,max_residual,points,verdict"
