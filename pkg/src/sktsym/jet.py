"""Vector fields on (t, x, u, v), total derivatives on second-order jet
space, and the second prolongation of a point-symmetry generator."""

from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from . import expr as ex
from .expr import Expression, T, U, V, X, jet


class JetOrderError(ex.ExprError):
    pass


def _as_sym(e):
    return e.sym if isinstance(e, Expression) else sp.sympify(e)


@dataclass(frozen=True)
class VectorField:
    """Infinitesimal operator xi0*dt + xi1*dx + eta1*du + eta2*dv."""

    xi0: Expression
    xi1: Expression
    eta1: Expression
    eta2: Expression
    name: str | None = None

    def __post_init__(self):
        for c in self.coeffs():
            if any(c.has(j) for j in ex.ALL_JET_SYMBOLS if j not in (U, V)):
                raise ex.ExprError(f"vector field coefficient has jet variables: {c}")

    @classmethod
    def make(cls, xi0, xi1, eta1, eta2, name=None):
        return cls(*[c if isinstance(c, Expression) else ex.normalize(c)
                     for c in (xi0, xi1, eta1, eta2)], name=name)

    def coeffs(self):
        return (self.xi0, self.xi1, self.eta1, self.eta2)

    def __add__(self, other):
        return VectorField.make(*[a + b for a, b in zip(self.coeffs(), other.coeffs())])

    def __sub__(self, other):
        return VectorField.make(*[a - b for a, b in zip(self.coeffs(), other.coeffs())])

    def __rmul__(self, scalar):
        return VectorField.make(*[scalar * c for c in self.coeffs()])

    def __neg__(self):
        return (-1) * self

    def is_zero(self):
        return all(c.is_zero for c in self.coeffs())

    def equals(self, other):
        return all((a - b).is_zero for a, b in zip(self.coeffs(), other.coeffs()))

    def apply(self, e):
        """First-order action X(e) on an order-0 expression."""
        s = _as_sym(e)
        out = (self.xi0.sym * sp.diff(s, T) + self.xi1.sym * sp.diff(s, X)
               + self.eta1.sym * sp.diff(s, U) + self.eta2.sym * sp.diff(s, V))
        return ex.normalize(out)

    def render(self):
        lines = [f"{k}={ex.render(c)}" for k, c in
                 zip(("xi0", "xi1", "eta1", "eta2"), self.coeffs())]
        return "\n".join(lines)

    @classmethod
    def parse(cls, text, name=None, extra=None):
        vals = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            key, _, rhs = line.partition("=")
            vals[key.strip()] = ex.parse(rhs, extra=extra)
        return cls.make(vals["xi0"], vals["xi1"], vals["eta1"], vals["eta2"], name=name)

    def __repr__(self):
        label = self.name or "X"
        return (f"VectorField<{label}>(xi0={self.xi0.sym}, xi1={self.xi1.sym}, "
                f"eta1={self.eta1.sym}, eta2={self.eta2.sym})")


def total_derivative(e, wrt, raw=False):
    """Total derivative D_t or D_x through all jet variables of order <= 1
    in the input (so the result stays within the order-2 jet space)."""
    s = _as_sym(e)
    if isinstance(wrt, str):
        wrt = {"t": T, "x": X}[wrt]
    slot = 0 if wrt == T else 1
    for dep in (1, 2):
        for nt in range(3):
            for nx in range(4):
                if nt + nx >= 2 and s.has(jet(dep, nt, nx)):
                    raise JetOrderError(
                        f"input has order-2 jet {jet(dep, nt, nx)}; total derivative "
                        "would leave the supported jet space")
    out = sp.diff(s, wrt)
    for dep in (1, 2):
        for nt in range(2):
            for nx in range(2):
                j = jet(dep, nt, nx)
                if s.has(j):
                    nxt = jet(dep, nt + (slot == 0), nx + (slot == 1))
                    out += nxt * sp.diff(s, j)
    return out if raw else ex.normalize(out)


def _total_raw(s, wrt):
    """Unchecked total derivative on raw sympy (used by prolongation)."""
    slot = 0 if wrt == T else 1
    out = sp.diff(s, wrt)
    for dep in (1, 2):
        for nt in range(_nmax := 3):
            for nx in range(4):
                j = jet(dep, nt, nx)
                if s.has(j):
                    try:
                        nxt = jet(dep, nt + (slot == 0), nx + (slot == 1))
                    except ex.ExprError as exc:
                        raise JetOrderError(str(exc))
                    out += nxt * sp.diff(s, j)
    return out


@dataclass(frozen=True)
class ProlongedField:
    """Second prolongation: base field plus first/second-order coefficients."""

    base: VectorField
    rho1_t: Expression
    rho2_t: Expression
    rho1_x: Expression
    rho2_x: Expression
    sigma1_tt: Expression
    sigma2_tt: Expression
    sigma1_tx: Expression
    sigma2_tx: Expression
    sigma1_xx: Expression
    sigma2_xx: Expression

    def coeff(self, dep, nt, nx):
        table = {
            (1, 1, 0): self.rho1_t, (2, 1, 0): self.rho2_t,
            (1, 0, 1): self.rho1_x, (2, 0, 1): self.rho2_x,
            (1, 2, 0): self.sigma1_tt, (2, 2, 0): self.sigma2_tt,
            (1, 1, 1): self.sigma1_tx, (2, 1, 1): self.sigma2_tx,
            (1, 0, 2): self.sigma1_xx, (2, 0, 2): self.sigma2_xx,
        }
        return table[(dep, nt, nx)]


def prolong2(field):
    """Second prolongation via the standard recursion
    rho^k_mu = D_mu(eta^k) - u^k_t D_mu(xi0) - u^k_x D_mu(xi1),
    sigma^k_{mu,nu} = D_nu(rho^k_mu) - u^k_{t mu} D_nu(xi0) - u^k_{x mu} D_nu(xi1).
    """
    xi0, xi1 = field.xi0.sym, field.xi1.sym
    out = {}
    for dep, eta in ((1, field.eta1.sym), (2, field.eta2.sym)):
        rho = {}
        for mu, var in (("t", T), ("x", X)):
            rho[mu] = (_total_raw(eta, var)
                       - jet(dep, 1, 0) * _total_raw(xi0, var)
                       - jet(dep, 0, 1) * _total_raw(xi1, var))
        sigma = {}
        for mu, nu, var in (("t", "t", T), ("t", "x", X), ("x", "x", X)):
            ut_mu = jet(dep, 1 + (mu == "t"), (mu == "x"))
            ux_mu = jet(dep, (mu == "t"), 1 + (mu == "x"))
            sigma[mu + nu] = (_total_raw(rho[mu], var)
                              - ut_mu * _total_raw(xi0, var)
                              - ux_mu * _total_raw(xi1, var))
        out[dep] = (rho, sigma)
    norm = ex.normalize
    return ProlongedField(
        base=field,
        rho1_t=norm(out[1][0]["t"]), rho2_t=norm(out[2][0]["t"]),
        rho1_x=norm(out[1][0]["x"]), rho2_x=norm(out[2][0]["x"]),
        sigma1_tt=norm(out[1][1]["tt"]), sigma2_tt=norm(out[2][1]["tt"]),
        sigma1_tx=norm(out[1][1]["tx"]), sigma2_tx=norm(out[2][1]["tx"]),
        sigma1_xx=norm(out[1][1]["xx"]), sigma2_xx=norm(out[2][1]["xx"]),
    )


def apply_prolonged(P, e, raw=False):
    """Directional derivative of e along the prolonged field."""
    s = _as_sym(e)
    base = P.base
    out = (base.xi0.sym * sp.diff(s, T) + base.xi1.sym * sp.diff(s, X)
           + base.eta1.sym * sp.diff(s, U) + base.eta2.sym * sp.diff(s, V))
    for dep in (1, 2):
        for nt, nx in ((1, 0), (0, 1), (2, 0), (1, 1), (0, 2)):
            j = jet(dep, nt, nx)
            if s.has(j):
                out += P.coeff(dep, nt, nx).sym * sp.diff(s, j)
    return out if raw else ex.normalize(out)
