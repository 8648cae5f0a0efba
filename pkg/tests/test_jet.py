import sympy as sp

from sktsym import expr as ex
from sktsym.expr import T, U, V, X
from sktsym.jet import VectorField, apply_prolonged, prolong2, total_derivative
from sktsym.invariance import commutator


UX = ex.jet(1, 0, 1)
UT = ex.jet(1, 1, 0)
UXX = ex.jet(1, 0, 2)
VX = ex.jet(2, 0, 1)


class TestTotalDerivative:
    def test_base_variable(self):
        assert total_derivative(ex.normalize(U), X) == ex.normalize(UX)

    def test_product_rule(self):
        e = ex.normalize(U * V)
        expect = ex.normalize(UX * V + U * VX)
        assert total_derivative(e, X) == expect

    def test_explicit_x_dependence(self):
        e = ex.normalize(X * U)
        assert total_derivative(e, X) == ex.normalize(U + X * UX)

    def test_time_direction(self):
        assert total_derivative(ex.normalize(U), T) == ex.normalize(UT)


class TestProlongation:
    def test_translation_has_trivial_coefficients(self):
        P = prolong2(VectorField.make("0", "1", "0", "0"))
        assert P.coeff(1, 0, 1).is_zero
        assert P.coeff(1, 0, 2).is_zero
        assert P.coeff(2, 1, 0).is_zero

    def test_vertical_field_coefficients(self):
        # eta1 = u: first/second prolongations are the matching jets
        P = prolong2(VectorField.make("0", "0", "u", "0"))
        assert P.coeff(1, 0, 1) == ex.normalize(UX)
        assert P.coeff(1, 0, 2) == ex.normalize(UXX)
        assert P.coeff(1, 1, 0) == ex.normalize(UT)

    def test_x_scaling_coefficients(self):
        # xi1 = x: u_x coefficient is -u_x, u_xx coefficient is -2 u_xx,
        # and the u_t coefficient vanishes
        P = prolong2(VectorField.make("0", "x", "0", "0"))
        assert P.coeff(1, 0, 1) == ex.normalize(-UX)
        assert P.coeff(1, 0, 2) == ex.normalize(-2 * UXX)
        assert P.coeff(1, 1, 0).is_zero

    def test_apply_prolonged_is_derivation(self):
        P = prolong2(VectorField.make("0", "0", "u", "v"))
        a = ex.normalize(U * UX)
        b = ex.normalize(V ** 2)
        lhs = apply_prolonged(P, a * b)
        rhs = apply_prolonged(P, a) * b + a * apply_prolonged(P, b)
        assert lhs == rhs


class TestCommutator:
    def test_translations_commute(self):
        pt = VectorField.make("1", "0", "0", "0")
        px = VectorField.make("0", "1", "0", "0")
        c = commutator(pt, px)
        assert all(e.is_zero for e in (c.xi0, c.xi1, c.eta1, c.eta2))

    def test_translation_vs_scaling(self):
        px = VectorField.make("0", "1", "0", "0")
        d = VectorField.make("0", "x", "0", "0")
        c = commutator(px, d)
        assert c.xi1 == ex.normalize(1)
        assert c.xi0.is_zero and c.eta1.is_zero and c.eta2.is_zero

    def test_antisymmetry(self):
        a = VectorField.make("t", "x/2", "-u", "-v")
        b = VectorField.make("0", "1", "u", "0")
        ab = commutator(a, b)
        ba = commutator(b, a)
        assert ab.xi0 == -ba.xi0 and ab.xi1 == -ba.xi1
        assert ab.eta1 == -ba.eta1 and ab.eta2 == -ba.eta2
