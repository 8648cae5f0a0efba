import pytest
import sympy as sp

from sktsym import expr as ex
from sktsym import invariance as inv
from sktsym.expr import T, U, V, X
from sktsym.jet import VectorField


def cross_system():
    # u_t = [uv]_xx - uv, v_t = [uv]_xx - uv
    return inv.SKTSystem.make(d12="1", d21="1", c1="1", b2="1")


class TestSKTSystem:
    def test_generic_has_twelve_symbolic_parameters(self):
        g = inv.SKTSystem.generic()
        params = g.params()
        assert len(params) == 12
        assert all(not p.sym.is_number for p in params.values())

    def test_swap_uv_on_symmetric_system(self):
        s = cross_system()
        assert s.swap_uv().equals(s)

    def test_subs_parameters(self):
        g = inv.SKTSystem.generic()
        zeroed = g.subs({"d11": 0, "d12": 0, "d21": 0, "d22": 0})
        assert zeroed.params()["d11"].is_zero

    def test_rhs_contains_reaction_terms(self):
        s = cross_system()
        r = ex.normalize(s.rhs_raw(1))
        # the u-equation reaction term is -u*v
        no_diff = r.sym.xreplace({j: 0 for j in ex.ALL_JET_SYMBOLS
                                  if j not in (U, V)})
        assert sp.expand(no_diff + U * V) == 0


class TestManifoldRestrict:
    def test_time_derivatives_eliminated(self):
        s = cross_system()
        ut = ex.jet(1, 1, 0)
        r = inv.manifold_restrict(ex.normalize(ut), s)
        assert r == ex.normalize(s.rhs_raw(1))

    def test_pure_space_jet_untouched(self):
        s = cross_system()
        uxx = ex.jet(1, 0, 2)
        assert inv.manifold_restrict(ex.normalize(uxx), s) == ex.normalize(uxx)


class TestCheckInvariance:
    def test_translations_always_invariant(self):
        s = inv.SKTSystem.generic()
        for f in (VectorField.make("1", "0", "0", "0"),
                  VectorField.make("0", "1", "0", "0")):
            assert inv.check_invariance(s, f).invariant

    def test_nonlinear_operator_invariant(self):
        s = cross_system()
        z = VectorField.make("0", "0", "exp(x)/(u-v)", "-exp(x)/(u-v)")
        v = inv.check_invariance(s, z)
        assert v.invariant

    def test_sign_mutation_breaks_invariance(self):
        # same operator against the +uv variant must fail
        s = inv.SKTSystem.make(d12="1", d21="1", c1="-1", b2="-1")
        z = VectorField.make("0", "0", "exp(x)/(u-v)", "-exp(x)/(u-v)")
        v = inv.check_invariance(s, z)
        assert not v.invariant
        assert v.witnesses

    def test_scaling_needs_right_weights(self):
        s = cross_system()
        good = VectorField.make("t", "0", "-u", "-v")
        bad = VectorField.make("t", "0", "-u", "-2*v")
        assert inv.check_invariance(s, good).invariant
        assert not inv.check_invariance(s, bad).invariant


class TestClosure:
    def test_three_dimensional_algebra_closes(self):
        ops = [VectorField.make("1", "0", "0", "0"),
               VectorField.make("0", "1", "0", "0"),
               VectorField.make("t", "0", "-u", "-v")]
        rep = inv.closure_check(ops)
        assert rep.closes
        assert not rep.failures

    def test_open_set_detected(self):
        # [P_x, x*P_x] = P_x is in span, but [x*P_x, x^2*P_x] = x^2*P_x
        # requires the missing third element
        ops = [VectorField.make("0", "1", "0", "0"),
               VectorField.make("0", "x^2", "0", "0")]
        rep = inv.closure_check(ops)
        assert not rep.closes


class TestPointTransformation:
    def test_identity_preserves_system(self):
        s = cross_system()
        ident = inv.PointTransformation.make()
        out = inv.transform_system(s, ident)
        assert out.system.equals(s)

    def test_u_v_swap_map(self):
        s = inv.SKTSystem.generic()
        swap = inv.PointTransformation.make(u_map="v", v_map="u")
        out = inv.transform_system(s, swap)
        assert out.system.equals(s.swap_uv())
