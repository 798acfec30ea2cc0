"""Exact arithmetic in the supported base fields and in multivariate rational
function fields over them.

Supported base fields: QQ, odd prime fields F_p, a formally-real model (QQ
with sign semantics, written R) and a quadratically-closed model (QQ with a
single square class, written C).  Function fields k(x1,...,xn) are fraction
fields of exact multivariate polynomial rings (sympy's sparse polys under the
hood).  On top of plain arithmetic this module provides the four operations
the symbol calculus needs: canonical normalization, square classes, divisor
valuations with unit parts, and specialization to residue fields.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import sympy
from sympy.polys.domains import GF, QQ
from sympy.polys.fields import field as _sympy_field


class FieldError(ValueError):
    pass


class Undecided(Exception):
    """Raised when an operation falls outside the implemented decision rules."""


# ---------------------------------------------------------------------------
# base fields

class BaseField:
    """A supported coefficient field."""

    kind = None          # 'Q' | 'Fp' | 'R' | 'C'
    variables = ()

    def __init__(self, p=None):
        if self.kind == "Fp":
            if p is None or p == 2 or not sympy.isprime(p):
                raise FieldError("prime field needs an odd prime")
            self.p = p

    def __repr__(self):
        return self.name

    @property
    def name(self):
        return {"Q": "Q", "R": "R", "C": "C"}.get(self.kind, f"F{getattr(self, 'p', '?')}")

    def __eq__(self, other):
        return isinstance(other, BaseField) and self.kind == other.kind \
            and getattr(self, "p", None) == getattr(other, "p", None)

    def __hash__(self):
        return hash((self.kind, getattr(self, "p", None)))

    def element(self, value):
        if isinstance(value, FieldElement):
            if value.parent != self:
                raise FieldError(f"element of {value.parent} used in {self}")
            return value
        if self.kind == "Fp":
            if isinstance(value, Fraction):
                num, den = value.numerator, value.denominator
                if den % self.p == 0:
                    raise FieldError("division by zero mod p")
                value = num * pow(den, -1, self.p)
            return FieldElement(self, int(value) % self.p)
        return FieldElement(self, Fraction(value))

    def zero(self):
        return self.element(0)

    def one(self):
        return self.element(1)

    def function_field(self, *variables):
        return FunctionField(self, variables)


class _Q(BaseField):
    kind = "Q"

class _R(BaseField):
    kind = "R"

class _C(BaseField):
    kind = "C"

class PrimeField(BaseField):
    kind = "Fp"


Q = _Q()
RModel = _R()
CModel = _C()


def Fp(p):
    return PrimeField(p)


def base_field(name):
    """Parse a base field name: Q, R, C, F5, F7, ..."""
    name = name.strip()
    if name in ("Q", "QQ"):
        return Q
    if name == "R":
        return RModel
    if name == "C":
        return CModel
    if name.startswith("F"):
        return Fp(int(name[1:]))
    raise FieldError(f"unknown field {name!r}")


# ---------------------------------------------------------------------------
# function fields

class FunctionField:
    """Rational function field base(v1,...,vn) with an ordered variable list."""

    def __init__(self, base, variables):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise FieldError("duplicate variable names")
        if not variables:
            raise FieldError("function field needs at least one variable")
        self.base = base
        self.variables = variables
        domain = GF(base.p) if base.kind == "Fp" else QQ
        out = _sympy_field(",".join(variables), domain, order="grlex")
        self._field = out[0]
        self._gens = out[1:]

    @property
    def kind(self):
        return self.base.kind

    def __repr__(self):
        return self.name

    @property
    def name(self):
        return f"{self.base.name}({','.join(self.variables)})"

    def __eq__(self, other):
        return isinstance(other, FunctionField) and self.base == other.base \
            and self.variables == other.variables

    def __hash__(self):
        return hash((self.base, self.variables))

    def gen(self, name):
        return FieldElement(self, self._gens[self.variables.index(name)])

    def gens(self):
        return tuple(FieldElement(self, g) for g in self._gens)

    def element(self, value):
        if isinstance(value, FieldElement):
            if value.parent == self:
                return value
            if value.parent == self.base or (
                    isinstance(value.parent, BaseField) and value.parent == self.base):
                value = value.val
            elif isinstance(value.parent, FunctionField) \
                    and value.parent.base == self.base \
                    and set(value.parent.variables) <= set(self.variables):
                return self._convert_from(value)
            else:
                raise FieldError(f"element of {value.parent} used in {self}")
        if isinstance(value, Fraction):
            dom = self._field.domain
            if self.base.kind == "Fp":
                num, den = value.numerator, value.denominator
                inv = pow(den, -1, self.base.p)
                return FieldElement(self, self._field.ground_new(dom.convert(num * inv)))
            return FieldElement(self, self._field.ground_new(dom.convert(value)))
        if isinstance(value, int):
            return FieldElement(self, self._field.ground_new(self._field.domain.convert(value)))
        if isinstance(value, str):
            return self.parse(value)
        return FieldElement(self, self._field(value))

    def _convert_from(self, elem):
        mapping = {v: self.gen(v) for v in elem.parent.variables}
        return elem.substitute(mapping, self)

    def zero(self):
        return self.element(0)

    def one(self):
        return self.element(1)

    def parse(self, text):
        from .parsing import parse_field_element
        return parse_field_element(text, self)

    def drop_variable(self, name):
        """The residue field along a coordinate divisor: remove one variable."""
        rest = tuple(v for v in self.variables if v != name)
        if not rest:
            return self.base
        return FunctionField(self.base, rest)


def _sqrt_fraction(q):
    num = sympy.Integer(q.numerator)
    den = sympy.Integer(q.denominator)
    rn, rd = sympy.integer_nthroot(num, 2), sympy.integer_nthroot(den, 2)
    if not (rn[1] and rd[1]):
        raise FieldError(f"{q} is not a rational square")
    return Fraction(int(rn[0]), int(rd[0]))


@lru_cache(maxsize=None)
def _least_nonresidue(p):
    for g in range(2, p):
        if pow(g, (p - 1) // 2, p) == p - 1:
            return g
    raise FieldError(f"no nonresidue mod {p}")


def _mod_sqrt(a, p):
    a %= p
    for x in range(p):
        if x * x % p == a:
            return x
    raise FieldError(f"{a} is not a square mod {p}")


# ---------------------------------------------------------------------------
# field elements

class FieldElement:
    """Immutable exact element of a base or function field.

    val is a Fraction (Q/R/C), an int in [0,p) (F_p), or a sympy FracElement
    (function fields).  Construction always yields the canonical
    representative: fractions are reduced, denominators monic, leading
    coefficients normalized by grlex order.
    """

    __slots__ = ("parent", "val")

    def __init__(self, parent, val):
        if parent.variables and not isinstance(val, (Fraction, int)):
            # sympy normalizes F_p fractions only up to content; make the
            # denominator monic so equality and hashing are canonical
            lc = val.denom.LC
            if lc != val.field.domain.one:
                inv = val.field.domain.revert(lc) if hasattr(val.field.domain, "revert") \
                    else 1 / lc
                val = val.field.raw_new(val.numer.mul_ground(inv),
                                        val.denom.mul_ground(inv))
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "val", val)

    def __setattr__(self, *args):
        raise AttributeError("FieldElement is immutable")

    # -- basics ------------------------------------------------------------

    def is_zero(self):
        if isinstance(self.val, (Fraction, int)):
            return self.val == 0
        return not self.val

    def is_one(self):
        if isinstance(self.val, (Fraction, int)):
            return self.val == 1
        return self.val == self.val.field.one

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            try:
                other = _coerce_scalar(self.parent, other)
            except FieldError:
                return NotImplemented
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.parent == other.parent and self.val == other.val

    def __hash__(self):
        return hash((self.parent, self.val))

    def __repr__(self):
        return format_element(self)

    # -- arithmetic ----------------------------------------------------------

    def _pair(self, other):
        if isinstance(other, (int, Fraction)):
            other = _coerce_scalar(self.parent, other)
        if self.parent != other.parent:
            raise FieldError(f"field mismatch: {self.parent} vs {other.parent}")
        return other

    def __add__(self, other):
        other = self._pair(other)
        if isinstance(self.val, int):
            return FieldElement(self.parent, (self.val + other.val) % self.parent.p)
        return FieldElement(self.parent, self.val + other.val)

    __radd__ = __add__

    def __neg__(self):
        if isinstance(self.val, int):
            return FieldElement(self.parent, (-self.val) % self.parent.p)
        return FieldElement(self.parent, -self.val)

    def __sub__(self, other):
        return self + (-self._pair(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._pair(other)
        if isinstance(self.val, int):
            return FieldElement(self.parent, (self.val * other.val) % self.parent.p)
        return FieldElement(self.parent, self.val * other.val)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._pair(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero field element")
        if isinstance(self.val, int):
            return self * FieldElement(self.parent, pow(other.val, -1, self.parent.p))
        return FieldElement(self.parent, self.val / other.val)

    def __rtruediv__(self, other):
        return _coerce_scalar(self.parent, other) / self

    def __pow__(self, n):
        if n == 0:
            return self.parent.one() if isinstance(self.parent, BaseField) else self.parent.one()
        if n < 0:
            return (self.parent.one() / self) ** (-n)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    # -- structure ----------------------------------------------------------

    def normalize(self):
        """Canonical representative (identity: construction already canonicalizes)."""
        if self.parent.variables and self.val and self.val.denom == 0:
            raise ZeroDivisionError("zero denominator")
        return self

    def sign(self):
        """Sign of a constant, for the formally-real model."""
        c = self.constant_value()
        return (c > 0) - (c < 0)

    def constant_value(self):
        if isinstance(self.val, (Fraction, int)):
            return self.val
        raise FieldError(f"{self} is not constant")

    def is_constant(self):
        if isinstance(self.val, (Fraction, int)):
            return True
        return self.val.numer.is_ground and self.val.denom.is_ground

    def numer_denom(self):
        """(numerator, denominator) as sympy poly elements, for function fields."""
        return self.val.numer, self.val.denom

    def substitute(self, mapping, target):
        """Map variables to elements of the target field; exact rational rewriting."""
        if not isinstance(self.parent, FunctionField):
            return target.element(self.val if isinstance(self.val, Fraction)
                                  else Fraction(self.val))
        expr = self.val.as_expr()
        subs = {sympy.Symbol(v): sympy.sympify(str(e.val)) if isinstance(e.val, (Fraction, int))
                else e.val.as_expr() for v, e in mapping.items()}
        out = sympy.cancel(expr.subs(subs))
        if isinstance(target, FunctionField):
            return target.parse(str(out))
        return target.element(Fraction(str(out)))

    # -- square classes -----------------------------------------------------

    def square_class(self):
        """Canonical square-class representative: e and u^2*e agree for units u."""
        if self.is_zero():
            raise FieldError("square class of zero")
        kind = self.parent.kind
        if not self.parent.variables:
            return _const_square_class(self.parent, self.parent, self.val)
        num, den = self.numer_denom()
        poly = num * den
        content, factors = poly.sqf_list()
        odd = self.parent.one().val
        for f, e in factors:
            if e % 2:
                lc = f.LC
                if lc != f.ring.domain.one:
                    content = content * lc
                    f = f.quo_ground(lc)
                odd = odd * self.parent._field(f)
        if self.parent.base.kind == "Fp":
            cc = int(content) % self.parent.base.p
            const = _fp_square_class_int(cc, self.parent.base.p)
        else:
            const = _rational_square_class(self.parent.base, Fraction(str(content)))
        return self.parent.element(const) * FieldElement(self.parent, odd)

    def is_square(self):
        sc = self.square_class()
        return sc.is_one()

    def sqrt(self):
        """Exact square root; raises if the element is not a perfect square."""
        if self.is_zero():
            return self
        kind = self.parent.kind
        if not self.parent.variables:
            if kind == "Fp":
                return FieldElement(self.parent, _mod_sqrt(self.val, self.parent.p))
            return FieldElement(self.parent, _sqrt_fraction(self.val))
        num, den = self.numer_denom()
        rn = _poly_sqrt(num, self.parent)
        rd = _poly_sqrt(den, self.parent)
        return rn / rd

    # -- valuations -----------------------------------------------------------

    def valuation(self, divisor):
        """Exponent of the divisor's prime in this element (error on zero input)."""
        if self.is_zero():
            raise FieldError("valuation of zero is +infinity, not an integer")
        if not isinstance(self.parent, FunctionField):
            raise FieldError("valuations live on function fields")
        num, den = self.numer_denom()
        return _poly_valuation(num, divisor, self.parent) - \
            _poly_valuation(den, divisor, self.parent)

    def unit_part(self, divisor):
        """u with self = pi^v * u and v(u) = 0."""
        v = self.valuation(divisor)
        return self / divisor.pi ** v

    def specialize(self, divisor):
        """Reduction to the residue field of the divisor (valuation must be >= 0)."""
        if self.is_zero():
            return divisor.residue_field(self.parent).zero() \
                if divisor.mode == "coordinate" else _SymbolicToken(divisor, self)
        if self.valuation(divisor) < 0:
            raise FieldError("cannot specialize an element with a pole")
        if divisor.mode == "coordinate":
            target = divisor.residue_field(self.parent)
            return self.substitute({divisor.variable: target.zero()
                                    if isinstance(target, BaseField) else target.element(0)},
                                   target)
        return _SymbolicToken(divisor, self)


def _coerce_scalar(parent, value):
    if isinstance(parent, FunctionField):
        return parent.element(value)
    return parent.element(value)


def _poly_sqrt(poly, ff):
    ring = poly.ring
    if poly.is_ground:
        c = ff.base
        if c.kind == "Fp":
            r = _mod_sqrt(int(poly.LC), c.p)
            return ff.element(r)
        return ff.element(_sqrt_fraction(Fraction(str(poly.LC))))
    content, factors = poly.sqf_list()
    out = ff.element(1)
    for f, e in factors:
        if e % 2:
            raise FieldError("element is not a perfect square")
        out = out * FieldElement(ff, ff._field(f ** (e // 2)))
    if ff.base.kind == "Fp":
        out = out * ff.element(_mod_sqrt(int(content), ff.base.p))
    else:
        out = out * ff.element(_sqrt_fraction(Fraction(str(content))))
    return out


def _poly_valuation(poly, divisor, ff):
    if divisor.mode == "coordinate":
        idx = ff.variables.index(divisor.variable)
        return min(mon[idx] for mon in poly.monoms())
    pi_num = divisor.pi.numer_denom()[0]
    v = 0
    while True:
        q, r = poly.div(pi_num)
        if r:
            return v
        poly = q
        v += 1
        if not poly:
            raise FieldError("valuation of zero polynomial")


def _rational_square_class(base, q):
    """Square class of a nonzero rational in Q / R-model / C-model."""
    if base.kind == "C":
        return Fraction(1)
    if base.kind == "R":
        return Fraction(1 if q > 0 else -1)
    n = q.numerator * q.denominator
    sign = -1 if n < 0 else 1
    out = sign
    for p, e in sympy.factorint(abs(n)).items():
        if e % 2:
            out *= p
    return Fraction(out)


def _fp_square_class_int(c, p):
    c %= p
    if c == 0:
        raise FieldError("square class of zero")
    if pow(c, (p - 1) // 2, p) == 1:
        return 1
    return _least_nonresidue(p)


def _const_square_class(parent, base, val):
    if base.kind == "Fp":
        return FieldElement(parent, _fp_square_class_int(val, base.p))
    return FieldElement(parent, _rational_square_class(base, val))


# ---------------------------------------------------------------------------
# prime divisors and symbolic residue tokens

class PrimeDivisor:
    """A height-one prime of a function field, given by a generator pi.

    mode 'coordinate': pi is a single variable; the residue field is the
    function field with that variable dropped and specialization substitutes
    zero.  mode 'symbolic': pi is a polynomial asserted irreducible by the
    caller (checked for univariate over Q / F_p); residue-field elements are
    opaque tokens with square-class equality only.
    """

    def __init__(self, pi, mode=None):
        if not isinstance(pi.parent, FunctionField):
            raise FieldError("divisors live on function fields")
        if pi.is_zero() or pi.is_constant():
            raise FieldError("divisor generator must be a non-unit polynomial")
        num, den = pi.numer_denom()
        if not den.is_ground:
            raise FieldError("divisor generator must be polynomial")
        self.pi = pi
        name = _single_variable(pi)
        if mode is None:
            mode = "coordinate" if name else "symbolic"
        if mode == "coordinate" and not name:
            raise FieldError("coordinate mode requires pi to be a single variable")
        self.mode = mode
        self.variable = name
        if mode == "symbolic":
            _check_irreducible_if_univariate(pi)

    def __repr__(self):
        return f"({self.pi})"

    def __eq__(self, other):
        return isinstance(other, PrimeDivisor) and self.pi == other.pi

    def __hash__(self):
        return hash(("divisor", self.pi))

    def residue_field(self, ff):
        if self.mode == "coordinate":
            return ff.drop_variable(self.variable)
        return SymbolicResidueField(ff, self)

    def label(self):
        return str(self.pi)


def _single_variable(pi):
    num, _ = pi.numer_denom()
    monoms = num.monoms()
    if len(monoms) != 1:
        return None
    mon = monoms[0]
    if sum(mon) != 1:
        return None
    if num.LC != num.ring.domain.one:
        return None
    return pi.parent.variables[mon.index(1)]


def _check_irreducible_if_univariate(pi):
    num, _ = pi.numer_denom()
    used = [i for i, v in enumerate(pi.parent.variables)
            if any(m[i] for m in num.monoms())]
    if len(used) != 1:
        return  # multivariate: irreducibility is asserted by the caller
    x = sympy.Symbol(pi.parent.variables[used[0]])
    expr = sympy.Poly(num.as_expr(), x,
                      domain=GF(pi.parent.base.p) if pi.parent.base.kind == "Fp" else QQ)
    if not expr.is_irreducible:
        raise FieldError(f"{pi} is reducible")


class SymbolicResidueField:
    """Residue field of a symbolic prime divisor; elements are opaque tokens."""

    def __init__(self, ambient, divisor):
        self.ambient = ambient
        self.divisor = divisor
        self.kind = "symbolic"
        self.variables = ambient.variables

    @property
    def name(self):
        return f"{self.ambient.name} mod ({self.divisor.pi})"

    def __eq__(self, other):
        return isinstance(other, SymbolicResidueField) and \
            self.ambient == other.ambient and self.divisor == other.divisor

    def __hash__(self):
        return hash((self.ambient, self.divisor))

    def __repr__(self):
        return self.name

    def element(self, value):
        if isinstance(value, _SymbolicToken):
            return value
        return _SymbolicToken(self.divisor, self.ambient.element(value))

    def zero(self):
        return self.element(0)

    def one(self):
        return self.element(1)


class _SymbolicToken:
    """Opaque reduction of a unit across a symbolic divisor.

    Supports only square-class-respecting equality: two tokens agree when
    their representatives have equal ambient square classes after discarding
    powers of the divisor; finer comparisons raise Undecided.
    """

    __slots__ = ("divisor", "rep", "parent")

    def __init__(self, divisor, rep):
        object.__setattr__(self, "divisor", divisor)
        object.__setattr__(self, "rep", rep)
        object.__setattr__(self, "parent",
                           SymbolicResidueField(rep.parent, divisor))

    def __setattr__(self, *a):
        raise AttributeError("token is immutable")

    def is_zero(self):
        return self.rep.is_zero()

    def is_one(self):
        return self.rep.is_one()

    def square_class(self):
        sc = (self.rep.unit_part(self.divisor)).square_class()
        return _SymbolicToken(self.divisor, sc)

    def __neg__(self):
        return _SymbolicToken(self.divisor, -self.rep)

    def __mul__(self, other):
        if isinstance(other, _SymbolicToken):
            other = other.rep
        return _SymbolicToken(self.divisor, self.rep * other)

    def __eq__(self, other):
        if not isinstance(other, _SymbolicToken):
            return NotImplemented
        if self.divisor != other.divisor:
            return False
        if self.rep == other.rep:
            return True
        ratio = self.rep / other.rep
        return ratio.unit_part(self.divisor).square_class().is_one()

    def __hash__(self):
        return hash((self.divisor, "token"))

    def __repr__(self):
        return f"[{self.rep} mod {self.divisor.pi}]"


# ---------------------------------------------------------------------------
# printing

def format_element(e):
    """Human formatting; F_p coefficients print as bare residues."""
    if isinstance(e.val, Fraction):
        return str(e.val)
    if isinstance(e.val, int):
        return str(e.val)
    s = str(e.val)
    return s.replace(" mod " + str(getattr(e.parent.base, "p", "")), "")
