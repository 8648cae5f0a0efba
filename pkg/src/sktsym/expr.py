"""Symbolic kernel: expressions over base/jet variables, parameters and
transcendental atoms (exp, sin, cos, sqrt), with a deterministic canonical
form that makes zero-testing decisive for everything the toolkit needs.

The canonical form is a cancelled rational function whose numerator and
denominator are expanded polynomials over the declared symbols and atoms,
reduced by the atom relations

    sqrt(R)**2 -> R
    sin(A)**2  -> 1 - cos(A)**2
    exp(A)*exp(B) -> exp(A+B),   exp(-A) -> 1/exp(A)

with sqrt/sin factors rationalized out of denominators.  sympy supplies the
polynomial arithmetic underneath; this module owns the atom discipline,
the grammar, and the numeric oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp
from sympy.core.function import AppliedUndef


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message, column):
        super().__init__(f"{message} (column {column})")
        self.column = column


class UnknownIdentifierError(ParseError):
    pass


class UnboundSymbolError(ExprError):
    pass


class GuardViolation(ExprError):
    def __init__(self, message, subexpr):
        super().__init__(f"{message}: {subexpr}")
        self.subexpr = subexpr


class ZeroDenominatorError(ExprError):
    pass


# ---------------------------------------------------------------------------
# symbol registry

T, X = sp.symbols("t x")
BASE_VARS = (T, X)

_JET_MAX_T = 2
_JET_MAX_X = 3  # order-3 x-jets are internal (manifold consequences)


def jet_name(dep, nt, nx):
    head = "u" if dep == 1 else "v"
    if nt == 0 and nx == 0:
        return head
    return head + "_" + "t" * nt + "x" * nx


_JET = {}
for _dep in (1, 2):
    for _nt in range(_JET_MAX_T + 1):
        for _nx in range(_JET_MAX_X + 1):
            _JET[(_dep, _nt, _nx)] = sp.Symbol(jet_name(_dep, _nt, _nx))

U, V = _JET[(1, 0, 0)], _JET[(2, 0, 0)]


def jet(dep, nt, nx):
    """The jet symbol for derivative d^{nt+nx} u^dep / dt^nt dx^nx."""
    try:
        return _JET[(dep, nt, nx)]
    except KeyError:
        raise ExprError(f"jet order out of range: dep={dep} nt={nt} nx={nx}")


# names acceptable in the surface grammar (total order <= 2)
_PUBLIC_JET_NAMES = {
    jet_name(d, nt, nx): _JET[(d, nt, nx)]
    for d in (1, 2)
    for nt in range(3)
    for nx in range(3)
    if nt + nx <= 2
}

ALL_JET_SYMBOLS = tuple(_JET.values())
FIRST_ORDER_JETS = tuple(_JET[(d, nt, nx)] for d in (1, 2)
                         for nt in range(2) for nx in range(2)
                         if 0 < nt + nx <= 1)

_PARAMETER_NAMES = [
    "d1", "d2", "d11", "d12", "d21", "d22",
    "a1", "a2", "b1", "b2", "c1", "c2",
    "a", "b", "c", "p", "beta", "e1", "e2",
    "alpha0", "alpha1", "alpha2", "alpha3", "alpha4", "alpha5",
    "alpha6", "alpha7", "lambda1", "lambda2",
]

_PARAMETERS = {n: sp.Symbol(n) for n in _PARAMETER_NAMES}


def parameter(name):
    """Look up (declaring on first use) a parameter symbol."""
    if name in _PUBLIC_JET_NAMES or name in ("t", "x"):
        raise ExprError(f"{name!r} is reserved")
    return _PARAMETERS.setdefault(name, sp.Symbol(name))


def known_symbols():
    d = {"t": T, "x": X}
    d.update(_PUBLIC_JET_NAMES)
    d.update(_PARAMETERS)
    return d


_FUNCTION_HEADS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "sqrt": sp.sqrt}


# ---------------------------------------------------------------------------
# canonicalization

def _square_split(q):
    """q = s**2 * r with s, r rational, r squarefree, s > 0."""
    q = sp.Rational(q)
    sign = 1 if q >= 0 else -1
    num, den = int(abs(q.p)), int(abs(q.q))
    s_num, r_num = _int_square_split(num)
    s_den, r_den = _int_square_split(den)
    # 1/den = den/den^2 -> move r_den up
    s = sp.Rational(s_num, s_den * r_den)
    r = sign * sp.Rational(r_num * r_den, 1)
    return s, r


def _int_square_split(n):
    if n == 0:
        return 1, 0
    s = 1
    f = sp.factorint(n)
    r = 1
    for prime, e in f.items():
        s *= prime ** (e // 2)
        if e % 2:
            r *= prime
    return s, r


def _canon_sqrt(base, canon):
    """Canonicalize a sqrt radicand: cancel, clear denominator, pull out the
    rational square content.  Returns (coefficient, radicand)."""
    base = canon(base)
    n, d = sp.fraction(sp.cancel(base))
    if d != 1:
        base = sp.expand(n * d)
        pre = sp.Rational(1) / d
    else:
        base = sp.expand(n)
        pre = sp.Integer(1)
    if base.is_Rational:
        content, prim = base, sp.Integer(1)
    else:
        try:
            content, prim = sp.primitive(base)
        except (sp.PolynomialError, sp.polys.polyerrors.ComputationFailed):
            content, prim = sp.Integer(1), base
    s, r = _square_split(content)
    r = sp.Integer(r) if not isinstance(r, sp.Basic) else r
    if r.is_negative:
        r, prim = -r, -prim
    return pre * s, r, sp.expand(prim)


def _atom_key(a):
    return (a.__class__.__name__, sp.srepr(a))


class _AtomTable:
    """Maps transcendental/opaque atoms to generator symbols plus the
    rewrite relations binding them."""

    def __init__(self):
        self.fwd = {}          # atom expr (in generator space) -> Dummy
        self.back = {}         # Dummy -> original atom expr
        self.sqrt_rad = {}     # sqrt Dummy -> radicand (generator space)
        self.sin_pair = {}     # sin Dummy -> cos Dummy
        self._count = 0

    def gen(self, atom_expr, original):
        if atom_expr in self.fwd:
            return self.fwd[atom_expr]
        d = sp.Dummy(f"A{self._count}")
        self._count += 1
        self.fwd[atom_expr] = d
        self.back[d] = original
        return d


def _replace_atoms(e, table, canon):
    """Bottom-up replacement of atoms by generator symbols, canonicalizing
    arguments along the way."""

    def rec(node):
        if node is sp.E:
            # written-out Euler constants must share the exp(1) generator
            return table.gen(sp.exp(sp.Integer(1)), sp.E)
        if node.is_Atom:
            return node
        if isinstance(node, sp.exp):
            # split into integer powers of primitive exponentials so that
            # e.g. exp(2x), exp(x + a t) and exp(-x) share generators
            arg = canon(rec(node.args[0]))
            out = sp.Integer(1)
            for term in sp.Add.make_args(sp.expand(arg)):
                c, m = term.as_coeff_Mul()
                if c.is_Integer:
                    g = table.gen(sp.exp(m), sp.exp(m.xreplace(table.back)))
                    out *= sp.Pow(g, int(c))
                else:
                    if term.could_extract_minus_sign():
                        g = table.gen(sp.exp(-term),
                                      sp.exp((-term).xreplace(table.back)))
                        out *= sp.Pow(g, -1)
                    else:
                        g = table.gen(sp.exp(term),
                                      sp.exp(term.xreplace(table.back)))
                        out *= g
            return out
        if isinstance(node, (sp.sin, sp.cos)):
            arg = canon(rec(node.args[0]))
            sign = 1
            if arg.could_extract_minus_sign():
                arg = -arg
                if isinstance(node, sp.sin):
                    sign = -1
            s_atom, c_atom = sp.sin(arg), sp.cos(arg)
            gs = table.gen(s_atom, s_atom)
            gc = table.gen(c_atom, c_atom)
            table.sin_pair[gs] = gc
            return sign * gs if isinstance(node, sp.sin) else gc
        if node.is_Pow and node.exp.is_Rational and node.exp.q == 2:
            # separate the square-free numeric content from the primitive
            # radicand so sqrt(2)*sqrt(p) and sqrt(2*p) share generators
            coeff, num_sf, rad = _canon_sqrt(rec(node.base), canon)
            k = int(node.exp.p)
            out = coeff ** k
            if num_sf != 1:
                wn = table.gen(sp.sqrt(num_sf), sp.sqrt(num_sf))
                table.sqrt_rad[wn] = num_sf
                out *= wn ** k
            if rad != 1:
                rad_g = _replace_atoms(rad, table, canon)
                atom = sp.sqrt(sp.expand(rad_g.xreplace(table.back)))
                w = table.gen(sp.sqrt(rad_g), atom)
                table.sqrt_rad[w] = rad_g
                out *= w ** k
            return out
        if isinstance(node, (AppliedUndef, sp.Derivative)):
            return table.gen(node, node)
        if node.is_Pow or node.is_Add or node.is_Mul:
            return node.func(*[rec(a) for a in node.args])
        if isinstance(node, sp.Function):
            raise ExprError(f"unsupported function head: {node.func}")
        return node

    return rec(e)


def _reduce_relations(poly_expr, table):
    """Reduce even powers of sqrt/sin generators via their relations."""
    e = sp.expand(poly_expr)
    changed = True
    while changed:
        changed = False
        for w, rad in table.sqrt_rad.items():
            if e.has(w):
                new = _reduce_power(e, w, rad)
                if new is not None:
                    e = new
                    changed = True
        for s, c in table.sin_pair.items():
            if e.has(s):
                new = _reduce_power(e, s, 1 - c ** 2)
                if new is not None:
                    e = new
                    changed = True
    return e


def _reduce_power(e, g, sq):
    """Rewrite g**k -> g**(k%2) * sq**(k//2) throughout; None if no change."""
    pows = [p for p in e.atoms(sp.Pow)
            if p.base == g and p.exp.is_Integer and p.exp >= 2]
    if not pows:
        return None
    subs = {p: g ** (int(p.exp) % 2) * sq ** (int(p.exp) // 2) for p in pows}
    return sp.expand(e.xreplace(subs))


def _canon_core(e, assumptions):
    """The full canonicalization pipeline on a raw sympy expression."""
    if e.is_Number:
        return e

    def canon(sub):
        if sub.is_Number or sub.is_Symbol:
            return sub
        return _canon_core(sub, assumptions)

    e = sp.powsimp(sp.expand(e), combine="exp", deep=True)
    table = _AtomTable()
    e = _replace_atoms(e, table, canon)

    n0, d0 = sp.fraction(sp.together(e))
    g0 = sp.gcd(n0, d0)
    if not g0.is_Number:
        assumptions.add(g0.xreplace(table.back))
    n, d = sp.fraction(sp.cancel(n0 / d0))
    n = _reduce_relations(n, table)
    d = _reduce_relations(d, table)
    if d == 0 or sp.expand(d) == 0:
        raise ZeroDenominatorError("denominator is identically zero")

    # rationalize sqrt/sin generators out of the denominator
    lin_gens = list(table.sqrt_rad) + list(table.sin_pair)
    progress = True
    while progress:
        progress = False
        for g in lin_gens:
            if not d.has(g):
                continue
            dp = sp.Poly(d, g)
            if dp.degree() != 1:
                continue
            d1, d0 = dp.all_coeffs()
            conj = d0 - d1 * g
            assumptions.add(conj.xreplace(table.back))
            n = _reduce_relations(sp.expand(n * conj), table)
            d = _reduce_relations(sp.expand(d * conj), table)
            progress = True

    if n != 0:
        g = sp.gcd(n, d)
        if not g.is_Number:
            assumptions.add(g.xreplace(table.back))
    n, d = sp.fraction(sp.cancel(n / d))
    n, d = sp.expand(n), sp.expand(d)
    result = n / d if d != 1 else n
    return result.xreplace(table.back)


@dataclass(frozen=True)
class Expression:
    """A canonical symbolic expression plus the nonzeroness assumptions
    consumed while producing it."""

    sym: sp.Expr
    assumptions: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.sym, sp.Basic):
            object.__setattr__(self, "sym", sp.sympify(self.sym))

    # -- arithmetic -------------------------------------------------------
    def _bin(self, other, op):
        o = other.sym if isinstance(other, Expression) else sp.sympify(other)
        merged = self.assumptions | (other.assumptions
                                     if isinstance(other, Expression)
                                     else frozenset())
        return normalize(op(self.sym, o), merged)

    def __add__(self, other):
        return self._bin(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._bin(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._bin(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._bin(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._bin(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._bin(other, lambda a, b: b / a)

    def __pow__(self, k):
        return normalize(self.sym ** int(k), self.assumptions)

    def __neg__(self):
        return Expression(-self.sym, self.assumptions)

    def __eq__(self, other):
        if isinstance(other, Expression):
            other = other.sym
        elif not isinstance(other, (sp.Basic, int, Fraction)):
            return NotImplemented
        return sp.expand(self.sym - sp.sympify(other)) == 0 or \
            normalize(self.sym - sp.sympify(other)).sym == 0

    def __hash__(self):
        return hash(self.sym)

    def __repr__(self):
        return f"Expression({self.sym})"

    # -- queries ----------------------------------------------------------
    @property
    def is_zero(self):
        return self.sym == 0

    def free_symbols(self):
        return self.sym.free_symbols

    def has(self, *syms):
        return self.sym.has(*syms)


def normalize(e, assumptions=frozenset()):
    """Canonicalize a sympy expression (or Expression) into an Expression."""
    if isinstance(e, Expression):
        assumptions = frozenset(assumptions) | e.assumptions
        e = e.sym
    e = sp.sympify(e)
    acc = set()
    out = _canon_core(e, acc)
    return Expression(out, frozenset(assumptions) | frozenset(acc))


def iszero(e):
    """Decide whether e vanishes identically on its domain (denominators,
    radicands assumed nonzero) without building the full canonical form:
    atoms are replaced by generators, the expression is brought over a common
    denominator once, and only the numerator is reduced by the generator
    relations.  Much cheaper than normalize() on large radical expressions;
    a False answer is decided by the same relation set, so callers may fall
    back to normalize() for a canonical witness."""
    sym = e.sym if isinstance(e, Expression) else sp.sympify(e)
    if sym == 0:
        return True
    acc = set()

    def canon(sub):
        if sub.is_Number or sub.is_Symbol:
            return sub
        return _canon_core(sub, acc)

    sym = sp.powsimp(sym, combine="exp", deep=True)
    table = _AtomTable()
    sym = _replace_atoms(sym, table, canon)
    n, _ = sp.fraction(sp.together(sym))
    n = _reduce_relations(n, table)
    return sp.expand(sp.cancel(n)) == 0


def is_zero(e):
    if isinstance(e, Expression):
        return e.sym == 0
    return normalize(e).sym == 0


# ---------------------------------------------------------------------------
# parser

class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.i = 0

    def _scan(self):
        text, i, n = self.text, 0, len(self.text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            col = i + 1
            if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                seen_dot = False
                while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                    if text[j] == ".":
                        seen_dot = True
                    j += 1
                self.tokens.append(("num", text[i:j], col))
                i = j
            elif ch.isalpha():
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], col))
                i = j
            elif ch in "+-*/^()":
                self.tokens.append(("op", ch, col))
                i += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", col)
        self.tokens.append(("end", "", n + 1))

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok


def parse_sym(text, extra=None):
    """Parse to a raw sympy expression (grammar of the toolkit)."""
    symbols = known_symbols()
    if extra:
        symbols = {**symbols, **extra}
    tz = _Tokenizer(text)

    def expression():
        node = term()
        while tz.peek()[:2] in (("op", "+"), ("op", "-")):
            _, op, _ = tz.next()
            rhs = term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term():
        node = factor()
        while tz.peek()[:2] in (("op", "*"), ("op", "/")):
            _, op, _ = tz.next()
            rhs = factor()
            node = node * rhs if op == "*" else node / rhs
        return node

    def factor():
        node = base()
        if tz.peek()[:2] == ("op", "^"):
            tz.next()
            kind, val, col = tz.next()
            sign = 1
            if (kind, val) == ("op", "-"):
                sign = -1
                kind, val, col = tz.next()
            if kind != "num" or "." in val:
                raise ParseError("integer exponent expected", col)
            node = node ** (sign * int(val))
        return node

    def base():
        kind, val, col = tz.next()
        if (kind, val) == ("op", "-"):
            return -base()
        if (kind, val) == ("op", "("):
            node = expression()
            expect(")")
            return node
        if kind == "num":
            return sp.Rational(val) if "." in val else sp.Integer(val)
        if kind == "ident":
            if val in _FUNCTION_HEADS:
                expect("(")
                arg = expression()
                expect(")")
                return _FUNCTION_HEADS[val](arg)
            if val in symbols:
                return symbols[val]
            raise UnknownIdentifierError(f"unknown identifier {val!r}", col)
        raise ParseError(f"unexpected token {val!r}", col)

    def expect(op):
        kind, val, col = tz.next()
        if (kind, val) != ("op", op):
            raise ParseError(f"expected {op!r}, got {val!r}", col)

    node = expression()
    kind, val, col = tz.peek()
    if kind != "end":
        raise ParseError(f"trailing input {val!r}", col)
    return node


def parse(text, extra=None):
    """Parse text to a canonical Expression."""
    return normalize(parse_sym(text, extra))


def render(e):
    """Render an expression in the surface grammar; round-trips via parse."""
    sym = e.sym if isinstance(e, Expression) else sp.sympify(e)
    return sp.sstr(sym).replace("**", "^")


# ---------------------------------------------------------------------------
# calculus / substitution / collection

def diff(e, s):
    """Exact partial derivative w.r.t. one symbol; chain rule through atoms."""
    assumptions = frozenset()
    if isinstance(e, Expression):
        assumptions, e = e.assumptions, e.sym
    if isinstance(s, str):
        s = known_symbols().get(s) or parameter(s)
    return normalize(sp.diff(e, s), assumptions)


def substitute(e, bindings):
    """Simultaneous substitution followed by normalization."""
    assumptions = frozenset()
    if isinstance(e, Expression):
        assumptions, e = e.assumptions, e.sym
    sub = {}
    for k, val in bindings.items():
        if isinstance(k, str):
            k = known_symbols()[k]
        if isinstance(val, Expression):
            assumptions = assumptions | val.assumptions
            val = val.sym
        sub[k] = sp.sympify(val)
    for k, val in sub.items():
        if val.has(k) and val != k:
            continue  # self-reference like u -> u + 1 is fine; cycles are not
    return normalize(e.xreplace(sub) if all(s.is_Symbol for s in sub) else e.subs(sub, simultaneous=True),
                     assumptions)


class NotPolynomialError(ExprError):
    pass


def collect_jet(e, monomials=None, gens=None):
    """Split e = sum coeff(m) * m over jet monomials.  Returns a dict keyed
    by sympy monomials (1 for the jet-free residual)."""
    en = e if isinstance(e, Expression) else normalize(e)
    n, d = sp.fraction(sp.together(en.sym))
    if gens is None:
        gens = [g for g in ALL_JET_SYMBOLS
                if (1, 0, 0) != _jet_index(g) != (2, 0, 0) and n.has(g)]
    gens = list(gens)
    if any(d.has(g) for g in gens):
        raise NotPolynomialError(f"denominator involves jet variables: {d}")
    if not gens:
        return {sp.Integer(1): en} if monomials is None else \
            _fill({sp.Integer(1): en}, monomials)
    try:
        poly = sp.Poly(n, *gens)
    except sp.PolynomialError as exc:
        raise NotPolynomialError(str(exc)) from exc
    out = {}
    for powers, coeff in poly.terms():
        mono = sp.Mul(*[g ** k for g, k in zip(gens, powers)])
        out[mono] = normalize(coeff / d, en.assumptions)
    if monomials is not None:
        out = _fill(out, monomials)
    return out


def _fill(found, monomials):
    out = {}
    for m in monomials:
        ms = m.sym if isinstance(m, Expression) else sp.sympify(m)
        out[ms] = found.pop(ms, Expression(sp.Integer(0)))
    leftover = {m: c for m, c in found.items() if not c.is_zero}
    if leftover:
        raise NotPolynomialError(f"unlisted jet monomials present: {sorted(map(str, leftover))}")
    return out


_JET_INDEX = {s: k for k, s in _JET.items()}


def _jet_index(s):
    return _JET_INDEX.get(s)


# ---------------------------------------------------------------------------
# numeric oracle

def eval_numeric(e, bindings, guard=1e-12):
    """Double-precision evaluation with guards on denominators and sqrt
    radicands.  All free symbols must be bound."""
    sym = e.sym if isinstance(e, Expression) else sp.sympify(e)
    env = {}
    for k, val in bindings.items():
        if isinstance(k, str):
            k = known_symbols()[k]
        env[k] = float(val)

    def ev(node):
        if node.is_Number:
            return float(node)
        if node.is_Symbol:
            try:
                return env[node]
            except KeyError:
                raise UnboundSymbolError(f"unbound symbol {node}")
        if node.is_Add:
            return math.fsum(ev(a) for a in node.args)
        if node.is_Mul:
            out = 1.0
            for a in node.args:
                out *= ev(a)
            return out
        if node.is_Pow:
            base = ev(node.base)
            expo = node.exp
            if expo.is_Integer:
                k = int(expo)
                if k < 0 and abs(base) < guard:
                    raise GuardViolation("denominator below guard", node.base)
                return base ** k
            if expo.is_Rational and expo.q == 2:
                if base < guard:
                    raise GuardViolation("sqrt radicand below guard", node.base)
                return base ** float(expo)
            return base ** ev(expo)
        if isinstance(node, sp.exp):
            return math.exp(ev(node.args[0]))
        if isinstance(node, sp.sin):
            return math.sin(ev(node.args[0]))
        if isinstance(node, sp.cos):
            return math.cos(ev(node.args[0]))
        raise UnboundSymbolError(f"cannot evaluate {node}")

    return ev(sym)
