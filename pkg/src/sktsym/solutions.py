"""Closed-form solution families of the two cross-diffusion systems
u_t = [uv]_xx -/+ uv, v_t = [uv]_xx -/+ uv: residual verification (symbolic
and numeric), finite group actions on solutions, symmetry reduction, flux
checks and the logistic change of variables."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, replace

import sympy as sp

from . import expr as ex
from .expr import Expression, T, U, V, X, jet
from .invariance import SKTSystem


class SolutionError(ex.ExprError):
    pass


UPPER, LOWER = "upper", "lower"

# system ids for which the two equations coincide under (u, v) -> (v, u)
MINUS, PLUS = "3-1", "3-2"


def target_system(system_id):
    """The concrete system a family solves."""
    if system_id == MINUS:     # u_t = [uv]_xx - uv (both equations)
        return SKTSystem.make(d12=1, d21=1, c1=1, b2=1)
    if system_id == PLUS:      # u_t = [uv]_xx + uv
        return SKTSystem.make(d12=1, d21=1, c1=-1, b2=-1)
    raise SolutionError(f"unknown system id {system_id!r}")


def logistic_system(source_id, a, b, d1, d2):
    """The image of the system `source_id` under the logistic change of
    variables: u*_t = d1 [u*v*]_xx + u*(a b + b1 v*) with b1 = -/+ b d1 (and
    the v*-equation with d2, b2 = -/+ b d2)."""
    sign = -1 if source_id == MINUS else 1
    a, b, d1, d2 = [_as_expr(z) for z in (a, b, d1, d2)]
    return SKTSystem.make(d12=d1, d21=d2, a1=a * b, a2=a * b,
                          c1=-sign * b * d1, b2=-sign * b * d2)


def _as_expr(e):
    if isinstance(e, Expression):
        return e
    if isinstance(e, str):
        return ex.parse(e)
    return ex.normalize(e)


@dataclass(frozen=True)
class Constraint:
    """Domain constraint: `kind` is "nonzero" (|expr| bounded away from 0)
    or "nonneg" (expr bounded away from below 0)."""
    kind: str
    expr: Expression

    def render(self):
        return f"{self.kind} {ex.render(self.expr)}"

    @classmethod
    def parse(cls, text):
        kind, _, rest = text.strip().partition(" ")
        if kind not in ("nonzero", "nonneg"):
            raise SolutionError(f"unknown constraint kind {kind!r}")
        return cls(kind, ex.parse(rest))

    def holds(self, bindings, margin_nonzero=0.1, margin_nonneg=0.01):
        val = ex.eval_numeric(self.expr, bindings)
        if self.kind == "nonzero":
            return abs(val) >= margin_nonzero
        return val >= margin_nonneg


@dataclass(frozen=True)
class SolutionFamily:
    name: str
    system_id: str
    u_expr: Expression
    v_expr: Expression
    branch: str = UPPER
    constraints: tuple = ()

    def __post_init__(self):
        if self.branch not in (UPPER, LOWER):
            raise SolutionError(f"branch must be upper or lower, got {self.branch!r}")
        bad = [j for j in ex.ALL_JET_SYMBOLS
               for e in (self.u_expr, self.v_expr) if e.has(j)]
        if bad:
            raise SolutionError(f"solution expressions contain jet variables: {bad}")

    def swap_branch(self):
        return replace(self, u_expr=self.v_expr, v_expr=self.u_expr,
                       branch=LOWER if self.branch == UPPER else UPPER)

    def subs(self, bindings):
        return replace(
            self,
            u_expr=ex.substitute(self.u_expr, bindings),
            v_expr=ex.substitute(self.v_expr, bindings),
            constraints=tuple(Constraint(c.kind, ex.substitute(c.expr, bindings))
                              for c in self.constraints))

    def free_parameters(self):
        syms = set()
        for e in (self.u_expr, self.v_expr):
            syms |= e.sym.free_symbols
        return tuple(sorted((s for s in syms if s not in (T, X)),
                            key=sp.default_sort_key))

    def system(self):
        return target_system(self.system_id)


# ---------------------------------------------------------------------------
# built-in families

_A1 = ex.parameter("alpha1")
_A2 = ex.parameter("alpha2")
_P = ex.parameter("p")
_L1 = ex.parameter("lambda1")
_L2 = ex.parameter("lambda2")

# test basis for the arbitrary-function slots of the steady-state families
STEADY_TEST_BASIS = ("1", "1+x^2", "2+sin(x)")

BUILTIN_IDS = ("seed-ode", "family-exp", "family-trig",
               "steady-ratio", "steady-upper", "steady-lower",
               "reduced-a", "reduced-b", "reduced-c")

# accepted aliases for the family ids (CLI shorthands)
_ALIASES = {
    "3-5": "seed-ode", "seed-3-5": "seed-ode",
    "3-6": "family-exp", "family-3-6": "family-exp",
    "3-7": "family-trig", "family-3-7": "family-trig",
    "3-13a": "steady-ratio", "steady-3-13a": "steady-ratio",
    "3-13b": "steady-upper", "steady-3-13b": "steady-upper",
    "3-13c": "steady-lower", "steady-3-13c": "steady-lower",
    "3-14a": "reduced-a", "reduced-3-14a": "reduced-a",
    "3-14b": "reduced-b", "reduced-3-14b": "reduced-b",
    "3-14c": "reduced-c", "reduced-3-14c": "reduced-c",
}


def _sqrt_pair(name, system_id, mean, radicand, branch, constraints):
    s = 1 if branch == UPPER else -1
    w = sp.sqrt(radicand.sym)
    u = ex.normalize(mean.sym + s * w / 2)
    v = ex.normalize(mean.sym - s * w / 2)
    cons = tuple(constraints) + (Constraint("nonneg", radicand),)
    return SolutionFamily(name=name, system_id=system_id, u_expr=u, v_expr=v,
                          branch=branch, constraints=cons)


def builtin_family(fid, branch=UPPER, system_id=None, func=None):
    """Return a built-in family by id.

    `func` instantiates the arbitrary-function slot of the steady-state
    families (an expression in x; defaults to the first test-basis entry).
    `system_id` selects the target system for the steady families."""
    fid = _ALIASES.get(fid, fid)
    a1, a2, p, l1, l2 = _A1, _A2, _P, _L1, _L2
    t, x = T, X
    if fid == "seed-ode":
        den = a2 + sp.exp(a1 * t)
        fam = SolutionFamily(
            name=fid, system_id=MINUS,
            u_expr=ex.normalize(a1 * sp.exp(a1 * t) / den),
            v_expr=ex.normalize(-a1 * a2 / den),
            branch=branch,
            constraints=(Constraint("nonzero", ex.normalize(den)),))
        return fam if branch == UPPER else fam.swap_branch()
    if fid == "family-exp":
        den = a2 + sp.exp(a1 * t)
        mean = ex.normalize((a1 * sp.exp(a1 * t) - a1 * a2) / (2 * den))
        rad = ex.normalize(a1 ** 2 + 4 * p * (l1 * sp.exp(x) + l2 * sp.exp(-x)))
        return _sqrt_pair(fid, MINUS, mean, rad, branch,
                          (Constraint("nonzero", ex.normalize(den)),))
    if fid == "family-trig":
        den = 1 - a2 * sp.exp(a1 * t)
        mean = ex.normalize((a1 + a1 * a2 * sp.exp(a1 * t)) / (2 * den))
        rad = ex.normalize(a1 ** 2 + 4 * p * (l1 * sp.cos(x) + l2 * sp.sin(x)))
        return _sqrt_pair(fid, PLUS, mean, rad, branch,
                          (Constraint("nonzero", ex.normalize(den)),))
    if fid in ("steady-ratio", "steady-upper", "steady-lower"):
        sid = system_id or MINUS
        if sid not in (MINUS, PLUS):
            raise SolutionError(f"steady families target {MINUS} or {PLUS}")
        g = _as_expr(func if func is not None else STEADY_TEST_BASIS[0])
        if g.has(T) or any(g.has(j) for j in ex.ALL_JET_SYMBOLS):
            raise SolutionError("function slot must depend on x only")
        if fid == "steady-ratio":
            # u = f/g, v = g with f'' - f = 0 (minus system) or f'' + f = 0
            f = (l1 * sp.exp(x) + l2 * sp.exp(-x) if sid == MINUS
                 else l1 * sp.sin(x) + l2 * sp.cos(x))
            fam = SolutionFamily(
                name=fid, system_id=sid,
                u_expr=ex.normalize(f / g.sym), v_expr=g, branch=branch,
                constraints=(Constraint("nonzero", g),))
        elif fid == "steady-upper":
            fam = SolutionFamily(name=fid, system_id=sid, u_expr=g,
                                 v_expr=ex.normalize(0), branch=branch)
        else:
            fam = SolutionFamily(name=fid, system_id=sid,
                                 u_expr=ex.normalize(0), v_expr=g,
                                 branch=branch)
        return fam
    if fid in ("reduced-a", "reduced-b", "reduced-c"):
        S = l1 * sp.sin(x) - l2 * sp.cos(x)
        if fid == "reduced-a":
            mean, rad, cons = -1 / t, S, (Constraint("nonzero", ex.normalize(t)),)
        elif fid == "reduced-b":
            # tan is represented as sin/cos so the kernel sees only its atoms
            mean = a1 * sp.sin(a1 * t) / sp.cos(a1 * t)
            rad = S - a1 ** 2
            cons = (Constraint("nonzero", ex.normalize(sp.cos(a1 * t))),)
        else:
            den = 1 - a2 * sp.exp(2 * a1 * t)
            mean = a1 * (1 + a2 * sp.exp(2 * a1 * t)) / den
            rad = S + a1 ** 2
            cons = (Constraint("nonzero", ex.normalize(den)),)
        s = 1 if branch == UPPER else -1
        w = sp.sqrt(rad)
        return SolutionFamily(
            name=fid, system_id=PLUS,
            u_expr=ex.normalize(mean + s * w), v_expr=ex.normalize(mean - s * w),
            branch=branch,
            constraints=cons + (Constraint("nonneg", ex.normalize(rad)),))
    raise SolutionError(f"unknown family id {fid!r}")


# ---------------------------------------------------------------------------
# residuals

def _jet_bindings(sol):
    """Raw sympy values for the jet symbols along the family (normalization
    deferred to the final residual, which is much cheaper than normalizing
    each derivative separately)."""
    u, v = sol.u_expr.sym, sol.v_expr.sym
    b = {U: u, V: v}
    for dep, e in ((1, u), (2, v)):
        b[jet(dep, 1, 0)] = sp.diff(e, T)
        b[jet(dep, 0, 1)] = sp.diff(e, X)
        b[jet(dep, 0, 2)] = sp.diff(e, X, 2)
    return b


def residual(sys, sol):
    """Substitute the family into both evolution equations; returns the two
    residual Expressions (zero for an exact solution)."""
    b = _jet_bindings(sol)
    assumptions = sol.u_expr.assumptions | sol.v_expr.assumptions
    out = []
    for k in (1, 2):
        s = sys.S_raw(k).xreplace(b)
        if ex.iszero(s):
            out.append(ex.normalize(0, assumptions))
        else:
            out.append(ex.normalize(s, assumptions))
    return tuple(out)


def sample_points(sol, bindings, points=20, seed=0,
                  t_range=(0.1, 1.0), x_range=(0.1, 3.0)):
    """Quasi-random admissible (t, x) samples: every domain constraint must
    hold with margin and every kernel guard must pass."""
    rng = random.Random(seed)
    out = []
    attempts = 0
    probe = (sol.u_expr + sol.v_expr) * (sol.u_expr - sol.v_expr)
    while len(out) < points and attempts < 200 * points:
        attempts += 1
        pt = dict(bindings)
        pt[T] = rng.uniform(*t_range)
        pt[X] = rng.uniform(*x_range)
        try:
            if not all(c.holds(pt) for c in sol.constraints):
                continue
            ex.eval_numeric(probe, pt, guard=1e-6)
        except ex.ExprError:
            continue
        out.append(pt)
    if len(out) < points:
        raise SolutionError(
            f"could not find {points} admissible sample points "
            f"({len(out)} found)")
    return out


def residual_numeric(sys, sol, bindings, points=20, seed=0, guard=1e-8):
    """Max |residual| of both equations over admissible samples.  The raw,
    unnormalized residual is evaluated in floating point, so this is an
    independent oracle rather than a restatement of the symbolic result."""
    b = _jet_bindings(sol)
    raw = [sys.S_raw(k).xreplace(b) for k in (1, 2)]
    pts = sample_points(sol, bindings, points=points, seed=seed)
    worst = 0.0
    for pt in pts:
        subs = {k if isinstance(k, sp.Basic) else ex.parameter(k): sp.Float(v, 30)
                for k, v in pt.items()}
        for r in raw:
            val = r.xreplace(subs).evalf(30)
            if not val.is_number or val.has(sp.zoo, sp.nan, sp.oo):
                raise SolutionError(f"residual did not evaluate at {pt}")
            worst = max(worst, abs(float(val)))
    return worst, len(pts)


# ---------------------------------------------------------------------------
# finite group action

_GENERATOR_PROFILE = {
    # generator id -> the x-profile entering the radicand shift
    "X1": lambda l1, l2: l1 * sp.exp(X) + l2 * sp.exp(-X),
    "X2": lambda l1, l2: l1 * sp.cos(X) + l2 * sp.sin(X),
}


def group_orbit(sol, p, lam1=None, lam2=None, generator="X1"):
    """Finite action of the one-parameter group generated by
    lam1*Z_a + lam2*Z_b on a solution pair:
        u* = (u+v)/2 + (1/2) sqrt((u-v)^2 + 4 p profile(x)),
        v* = (u+v)/2 - (1/2) sqrt(...)
    (signs per branch).  p = 0 is the identity on both branches."""
    if generator not in _GENERATOR_PROFILE:
        raise SolutionError(f"unknown generator id {generator!r}")
    if (generator == "X1") != (sol.system_id == MINUS):
        raise SolutionError(
            f"generator {generator} does not act on system {sol.system_id}")
    lam1 = ex.normalize(_L1) if lam1 is None else _as_expr(lam1)
    lam2 = ex.normalize(_L2) if lam2 is None else _as_expr(lam2)
    p = _as_expr(p)
    profile = _GENERATOR_PROFILE[generator](lam1.sym, lam2.sym)
    u, v = sol.u_expr.sym, sol.v_expr.sym
    mean = ex.normalize((u + v) / 2)
    rad = ex.normalize((u - v) ** 2 + 4 * p.sym * profile)
    out = _sqrt_pair(f"{sol.name}*{generator}", sol.system_id, mean, rad,
                     sol.branch, sol.constraints)
    if p.is_zero:
        # identity: sqrt((u-v)^2) collapses along the branch sign
        s = 1 if sol.branch == UPPER else -1
        diff = ex.normalize(u - v)
        return replace(out,
                       u_expr=ex.normalize(mean.sym + s * diff.sym / 2),
                       v_expr=ex.normalize(mean.sym - s * diff.sym / 2))
    return out


def sign_definite(sol, bindings, t_range=(0.1, 1.0), x_range=(0.1, 3.0),
                  grid=100):
    """Heuristic sign check of u - v on a rectangle by dense sampling.
    Returns "positive", "negative" or "indefinite"."""
    d = sol.u_expr - sol.v_expr
    seen_pos = seen_neg = False
    for i in range(grid):
        for j in range(grid):
            pt = dict(bindings)
            pt[T] = t_range[0] + (t_range[1] - t_range[0]) * (i + 0.5) / grid
            pt[X] = x_range[0] + (x_range[1] - x_range[0]) * (j + 0.5) / grid
            try:
                val = ex.eval_numeric(d, pt, guard=1e-9)
            except ex.ExprError:
                continue
            seen_pos |= val > 0
            seen_neg |= val < 0
    if seen_pos and not seen_neg:
        return "positive"
    if seen_neg and not seen_pos:
        return "negative"
    return "indefinite"


# ---------------------------------------------------------------------------
# symmetry reduction

@dataclass(frozen=True)
class ReductionAnsatz:
    ansatz_u: Expression       # in t, x, w-slot via sqrt, phi1, phi2
    ansatz_v: Expression
    reduced: tuple             # ODEs in phi1(t), phi2(t), = 0 each
    integrated: tuple          # equivalent integrated form with constant beta
    profile: Expression        # the x-profile of the operator coefficient


PHI1 = sp.Function("phi1")(T)
PHI2 = sp.Function("phi2")(T)


def _operator_profile(Xf):
    """Extract F(x) from an operator xi1 = const, eta1 = F(x)/(u-v),
    eta2 = -eta1; F must lie in span{cos x, sin x}."""
    if not Xf.xi0.is_zero:
        raise SolutionError("operator outside the supported reduction family")
    if (Xf.eta1 + Xf.eta2).sym != 0:
        raise SolutionError("operator outside the supported reduction family")
    c = Xf.xi1.sym
    if c.has(T, X, U, V) or c == 0:
        raise SolutionError("operator outside the supported reduction family")
    F = sp.cancel(sp.expand(Xf.eta1.sym * (U - V) / c))
    if F.has(U, V, T):
        raise SolutionError("operator outside the supported reduction family")
    l1 = sp.expand(F).coeff(sp.cos(X))
    l2 = sp.expand(F).coeff(sp.sin(X))
    if sp.expand(F - l1 * sp.cos(X) - l2 * sp.sin(X)) != 0:
        raise SolutionError("operator outside the supported reduction family")
    return l1, l2


def reduce_ansatz(sys, Xf):
    """Reduce u_t = [uv]_xx + uv under a combined translation/nonlinear
    operator.  The invariant ansatz is
        u, v = (phi1 +/- sqrt(phi1^2 + 4 phi2 + 4 (l1 sin x - l2 cos x))) / 2,
    and the reduction returns the two ODEs {phi1' + 2 phi2, phi1 phi1' + 2 phi2'}
    plus the integrated form {phi2 + phi1'/2, phi1' - phi1^2/2 - beta}."""
    if not sys.equals(target_system(PLUS)):
        raise SolutionError("reduction implemented for u_t = [uv]_xx + uv only")
    l1, l2 = _operator_profile(Xf)
    G = l1 * sp.sin(X) - l2 * sp.cos(X)      # antiderivative of the profile
    Rrad = PHI1 ** 2 + 4 * PHI2 + 4 * G
    w = sp.Dummy("w")

    def d(e, var):
        # total derivative treating w = sqrt(Rrad)
        return sp.diff(e, var) + sp.diff(e, w) * sp.diff(Rrad, var) / (2 * w)

    u = (PHI1 + w) / 2
    v = (PHI1 - w) / 2
    resids = []
    for main, other in ((u, v), (v, u)):
        uv = sp.expand(main * other)
        rhs = d(d(uv, X), X) + uv
        resids.append(sp.expand(d(main, T) - rhs))
    odes = []
    for r in resids:
        n, _ = sp.fraction(sp.together(r))
        poly = sp.Poly(sp.expand(n), w)
        parts = {0: sp.Integer(0), 1: sp.Integer(0)}
        for (k,), coeff in poly.terms():
            parts[k % 2] += coeff * Rrad ** (k // 2)
        for c in parts.values():
            c = sp.expand(sp.cancel(c))
            if c == 0:
                continue
            c = _strip_content(c)
            if not any(sp.cancel(sp.together(c / o)).is_Number for o in odes):
                odes.append(c)
    odes.sort(key=sp.count_ops)
    beta = ex.parameter("beta")
    integrated = (sp.expand(PHI2 + sp.diff(PHI1, T) / 2),
                  sp.expand(sp.diff(PHI1, T) - PHI1 ** 2 / 2 - beta))
    rad_expr = ex.normalize(Rrad)
    return ReductionAnsatz(
        ansatz_u=ex.normalize((PHI1 + sp.sqrt(Rrad)) / 2),
        ansatz_v=ex.normalize((PHI1 - sp.sqrt(Rrad)) / 2),
        reduced=tuple(ex.normalize(o) for o in odes),
        integrated=tuple(ex.normalize(i) for i in integrated),
        profile=ex.normalize(l1 * sp.cos(X) + l2 * sp.sin(X)))


def _strip_content(e):
    """Divide out a numeric content so equivalent ODEs compare equal."""
    e = sp.expand(e)
    args = e.args if e.is_Add else (e,)
    nums = [sp.nsimplify(a.as_coeff_Mul()[0]) for a in args]
    g = sp.gcd(nums) if nums else sp.Integer(1)
    lead = nums[0]
    if lead.could_extract_minus_sign() if hasattr(lead, "could_extract_minus_sign") else lead < 0:
        g = -g
    return sp.expand(e / g) if g not in (0, 1) else e


def reduction_solutions():
    """The three (phi1, phi2) branches solving the reduced ODEs, keyed by the
    family they regenerate."""
    a1, a2 = _A1, _A2
    t = T
    return {
        "reduced-a": (-2 / t, -1 / t ** 2),
        "reduced-b": (2 * a1 * sp.sin(a1 * t) / sp.cos(a1 * t),
                      -a1 ** 2 / sp.cos(a1 * t) ** 2),
        "reduced-c": (2 * a1 * (1 + a2 * sp.exp(2 * a1 * t))
                      / (1 - a2 * sp.exp(2 * a1 * t)),
                      -sp.diff(a1 * (1 + a2 * sp.exp(2 * a1 * t))
                               / (1 - a2 * sp.exp(2 * a1 * t)), t)),
    }


def check_reduction(ansatz, phi1, phi2):
    """True when the concrete profiles phi1(t), phi2(t) satisfy every reduced
    ODE of the ansatz."""
    p1 = _as_expr(phi1).sym
    p2 = _as_expr(phi2).sym
    for o in ansatz.reduced:
        val = o.sym.subs({PHI1: p1, PHI2: p2}).doit()
        if not ex.normalize(val).is_zero:
            return False
    return True


# ---------------------------------------------------------------------------
# flux check

@dataclass(frozen=True)
class FluxReport:
    passed: bool
    endpoint_values: tuple     # ((x0, u_x, v_x), (x1, u_x, v_x)) Expressions

    def __bool__(self):
        return self.passed


def flux_check(sol, x0, x1):
    """Zero-gradient check: u_x and v_x must vanish identically in t at both
    endpoints."""
    ux = ex.diff(sol.u_expr, X)
    vx = ex.diff(sol.v_expr, X)
    rows = []
    ok = True
    for endpoint in (x0, x1):
        e = _as_expr(endpoint)
        vals = tuple(ex.substitute(d, {X: e}) for d in (ux, vx))
        ok = ok and all(v.is_zero for v in vals)
        rows.append((e,) + vals)
    return FluxReport(passed=ok, endpoint_values=tuple(rows))


# ---------------------------------------------------------------------------
# logistic change of variables

def to_logistic(sol, a, b, d1, d2):
    """Map a solution of u_t = [uv]_xx -/+ uv through
    t -> exp(a b t*), x -> sqrt(b) x*, u* = a t u / d2, v* = a t v / d1,
    yielding a solution of the logistic-form system (see logistic_system).
    Valid for t* real (the original t > 0 branch); requires a != 0, b > 0."""
    a_, b_, d1_, d2_ = [_as_expr(z) for z in (a, b, d1, d2)]
    for val, cond in ((a_, lambda s: s == 0), (b_, lambda s: s.is_Number and s <= 0)):
        if cond(val.sym):
            raise SolutionError("logistic map needs a != 0 and b > 0")
    if sol.system_id not in (MINUS, PLUS):
        raise SolutionError("logistic map applies to the two canonical systems")
    tmap = sp.exp(a_.sym * b_.sym * T)
    xmap = sp.sqrt(b_.sym) * X
    pullback = {T: ex.normalize(tmap), X: ex.normalize(xmap)}
    scale_u = a_.sym * tmap / d2_.sym
    scale_v = a_.sym * tmap / d1_.sym
    u_new = ex.normalize(scale_u * ex.substitute(sol.u_expr, pullback).sym)
    v_new = ex.normalize(scale_v * ex.substitute(sol.v_expr, pullback).sym)
    cons = tuple(Constraint(c.kind, ex.substitute(c.expr, pullback))
                 for c in sol.constraints)
    fam = SolutionFamily(name=f"{sol.name}*logistic",
                         system_id=f"logistic{sol.system_id[-2:]}",
                         u_expr=u_new, v_expr=v_new, branch=sol.branch,
                         constraints=cons)
    return fam, logistic_system(sol.system_id, a_, b_, d1_, d2_)


def residual_against(sys, sol):
    """residual() for families whose target system is supplied explicitly
    (the logistic images carry non-catalog ids)."""
    return residual(sys, sol)


# ---------------------------------------------------------------------------
# solution files and reports

def parse_solution_file(text, name="solution"):
    """[solution] block: keys u, v, branch, system, constraints
    (semicolon-separated "kind expr" items)."""
    current = None
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            head = line[1:-1].strip()
            if head != "solution":
                raise SolutionError(f"line {lineno}: unknown block [{head}]")
            current = head
        elif "=" in line and current:
            key, _, val = line.partition("=")
            vals[key.strip()] = val.strip()
        else:
            raise SolutionError(f"line {lineno}: cannot parse {raw!r}")
    if "u" not in vals or "v" not in vals:
        raise SolutionError("solution block needs u= and v=")
    cons = tuple(Constraint.parse(c) for c in vals.get("constraints", "").split(";")
                 if c.strip())
    return SolutionFamily(
        name=vals.get("name", name), system_id=vals.get("system", MINUS),
        u_expr=ex.parse(vals["u"]), v_expr=ex.parse(vals["v"]),
        branch=vals.get("branch", UPPER), constraints=cons)


def render_solution_file(sol):
    lines = ["[solution]",
             f"name = {sol.name}",
             f"system = {sol.system_id}",
             f"branch = {sol.branch}",
             f"u = {ex.render(sol.u_expr)}",
             f"v = {ex.render(sol.v_expr)}"]
    if sol.constraints:
        lines.append("constraints = " + "; ".join(c.render() for c in sol.constraints))
    return "\n".join(lines) + "\n"


def verification_csv(rows):
    """rows: (family, system, max_abs_residual, points, verdict)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["family", "system", "max_residual", "points", "verdict"])
    for row in rows:
        writer.writerow(list(row))
    return buf.getvalue()
