"""Milnor-Witt symbol calculus.

Expressions are integer combinations of words eta^m [a1,...,ak] subject to
the four defining relations of the symbol ring:

    [a][1-a] = 0            (a != 1)
    [ab] = [a] + [b] + eta [a][b]
    eta [a] = [a] eta
    eta (eta[-1] + 2) = 0

Degree-0 and negative-degree expressions evaluate into GW(F) and W(F) via
<a> = 1 + eta[a].  In positive degree no global normal form is claimed;
equality is decided through the two projections of the cartesian square
(Milnor K-theory via eta -> 0, and powers of the fundamental ideal via
[u] -> -<<u>>), which agree on the mod-2 Milnor K-theory leg.

Normalization applies a confluent subset of rewrites: eta-commutation,
killing eta*h, square-class reduction of entries through the derived rule
[u^2] = h[u], dropping adjacent Steinberg pairs, and collecting words.
Symbols under at least one eta factor commute outright (a consequence of
[ab] = [ba]); full epsilon-commutation of positive-degree words is an
opt-in rule that no verification relies on.
"""

from __future__ import annotations

from fractions import Fraction

from .fields import (BaseField, FieldElement, FieldError, FunctionField,
                     Undecided)
from .gw import (GWElement, WittElement, gw_equal, hilbert_symbol, in_I_power,
                 signed_disc, witt_equal, witt_reduce)


class DegreeError(FieldError):
    pass


def _key(e):
    return repr(e)


class MWExpr:
    """Integer combination of words; terms maps (eta, symbols) -> coefficient."""

    __slots__ = ("field", "terms")

    def __init__(self, field, terms=None):
        clean = {}
        for (eta, syms), c in (terms or {}).items():
            if c == 0:
                continue
            syms = tuple(syms)
            for s in syms:
                if s.is_zero():
                    raise FieldError("symbol entry 0 is not allowed")
            clean[(eta, syms)] = clean.get((eta, syms), 0) + c
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "terms",
                           {k: v for k, v in clean.items() if v})

    def __setattr__(self, *a):
        raise AttributeError("MWExpr is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, field):
        return cls(field, {})

    @classmethod
    def one(cls, field):
        return cls(field, {(0, ()): 1})

    @classmethod
    def word(cls, field, eta, syms, coeff=1):
        syms = tuple(field.element(s) if not isinstance(s, FieldElement) else s
                     for s in syms)
        return cls(field, {(int(eta), syms): coeff})

    @classmethod
    def eta(cls, field, power=1):
        return cls(field, {(power, ()): 1})

    @classmethod
    def symbol(cls, field, *entries):
        return cls.word(field, 0, entries)

    @classmethod
    def hyperbolic(cls, field):
        """h = 2 + eta[-1]."""
        m = field.element(-1)
        return cls(field, {(0, ()): 2, (1, (m,)): 1})

    @classmethod
    def unit(cls, field, a):
        """<a> = 1 + eta[a]."""
        a = field.element(a) if not isinstance(a, FieldElement) else a
        return cls(field, {(0, ()): 1, (1, (a,)): 1})

    # -- degrees --------------------------------------------------------------

    def term_degrees(self):
        return {len(syms) - eta for (eta, syms) in self.terms}

    def degree(self):
        """Degree of a homogeneous expression (0 for the zero expression)."""
        degs = self.term_degrees()
        if not degs:
            return 0
        if len(degs) > 1:
            raise DegreeError(f"mixed-degree expression (degrees {sorted(degs)})")
        return degs.pop()

    def is_homogeneous(self):
        return len(self.term_degrees()) <= 1

    def is_zero_expr(self):
        return not self.terms

    # -- arithmetic -------------------------------------------------------------

    def _check(self, other):
        if self.field != other.field:
            raise FieldError("field mismatch in symbol arithmetic")

    def __add__(self, other):
        if isinstance(other, int):
            other = MWExpr.one(self.field) * other
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return MWExpr(self.field, out)

    __radd__ = __add__

    def __neg__(self):
        return MWExpr(self.field, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = MWExpr.one(self.field) * other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return MWExpr(self.field, {k: v * other for k, v in self.terms.items()})
        self._check(other)
        out = {}
        for (e1, s1), c1 in self.terms.items():
            for (e2, s2), c2 in other.terms.items():
                k = (e1 + e2, s1 + s2)
                out[k] = out.get(k, 0) + c1 * c2
        return MWExpr(self.field, out)

    __rmul__ = __mul__

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for (eta, syms), c in sorted(self.terms.items(),
                                     key=lambda kv: (kv[0][0], [_key(s) for s in kv[0][1]])):
            word = []
            if eta == 1:
                word.append("eta")
            elif eta > 1:
                word.append(f"eta^{eta}")
            if syms:
                word.append("[" + ",".join(str(s) for s in syms) + "]")
            body = "*".join(word) if word else "1"
            if c == 1 and word:
                bits.append(body)
            elif c == -1 and word:
                bits.append("-" + body)
            else:
                bits.append(f"{c}*{body}" if word else str(c))
        out = " + ".join(bits)
        return out.replace("+ -", "- ")

    def __eq__(self, other):
        if not isinstance(other, MWExpr):
            return NotImplemented
        return self.field == other.field and self.terms == other.terms

    def __hash__(self):
        return hash((self.field, frozenset(self.terms.items())))

    # -- normalization ------------------------------------------------------

    def normalize(self, epsilon_commute=False):
        return mw_normalize(self, epsilon_commute=epsilon_commute)


def _minus_one_class(field):
    return field.element(-1).square_class()


def mw_normalize(x, epsilon_commute=False):
    """Apply the confluent rewrite subset until a fixed point.

    Rules: entry reduction to square-class representatives via
    [e] = [sq(e)] + h[sqrt(e/sq(e))] (the derived rule [u^2] = h[u] in
    disguise), [1]-entries kill words, eta^2[-1,...] -> -2 eta[...],
    adjacent Steinberg pairs kill words, sorting under eta, collection.
    Idempotent; preserves both evaluations and all three projections.
    """
    field = x.field
    minus = _minus_one_class(field)
    terms = dict(x.terms)
    for _ in range(10000):
        out = {}
        changed = False
        for (eta, syms), c in terms.items():
            pieces = _normalize_word(field, minus, eta, syms, c,
                                     epsilon_commute=epsilon_commute)
            if pieces is None:
                out[(eta, syms)] = out.get((eta, syms), 0) + c
            else:
                changed = True
                for k, v in pieces.items():
                    out[k] = out.get(k, 0) + v
        terms = {k: v for k, v in out.items() if v}
        if not changed:
            return MWExpr(field, terms)
    raise RuntimeError("normalization did not terminate")


def _normalize_word(field, minus, eta, syms, c, epsilon_commute):
    """One rewrite step on a word; None if the word is already normal."""
    # kill words containing the trivial square class once entries are reduced
    for s in syms:
        if s.is_one():
            return {}
    # Steinberg: adjacent [a][1-a] (symbolic tokens have no subtraction)
    for i in range(len(syms) - 1):
        try:
            if (field.element(1) - syms[i]) == syms[i + 1]:
                return {}
        except TypeError:
            break
    # eta^2 [-1] -> -2 eta (entries commute under eta)
    if eta >= 2:
        for i, s in enumerate(syms):
            if s == minus:
                rest = syms[:i] + syms[i + 1:]
                return {(eta - 1, rest): -2 * c}
    # entry square-class reduction
    for i, s in enumerate(syms):
        sq = s.square_class()
        if sq != s:
            expansion = _symbol_expansion(field, minus, s)
            out = {}
            for (de, dsyms), dc in expansion.items():
                key = (eta + de, syms[:i] + dsyms + syms[i + 1:])
                out[key] = out.get(key, 0) + c * dc
            return out
    # canonical sorting (free under eta; epsilon rule otherwise, opt-in)
    if eta >= 1:
        ordered = tuple(sorted(syms, key=_key))
        if ordered != syms:
            return {(eta, ordered): c}
    elif epsilon_commute and len(syms) >= 2:
        for i in range(len(syms) - 1):
            if _key(syms[i]) > _key(syms[i + 1]):
                swapped = syms[:i] + (syms[i + 1], syms[i]) + syms[i + 2:]
                # [a][b] = eps [b][a] with eps = -<-1> = -1 - eta[-1]
                return {(eta, swapped): -c,
                        (eta + 1, swapped[:i] + (minus,) + swapped[i:]): -c}
    return None


def _symbol_expansion(field, minus, e):
    """[e] rewritten with square-class canonical entries: terms of a degree-1 expr.

    Uses [x w^2] = [x] + h[w] (exact: the eta-correction carries eta*h = 0)
    and h[1/b] = -h[b]; entries are driven to integers / polynomials so the
    square-root recursion terminates.
    """
    out = {}
    _expand_symbol(field, minus, e, 1, out, depth=0)
    return out


def _expand_symbol(field, minus, e, coeff, out, depth):
    if depth > 64:
        raise RuntimeError(f"symbol expansion runaway on {e}")
    if e.is_one():
        return
    sq = e.square_class()
    if sq == e:
        key = (0, (e,))
        out[key] = out.get(key, 0) + coeff
        return
    num, den = _entry_parts(field, e)
    if den is not None:
        # [num/den] = [num*den] + h[1/den] = [num*den] - h[den]
        _expand_symbol(field, minus, num * den, coeff, out, depth + 1)
        _expand_h_symbol(field, minus, den, -coeff, out, depth + 1)
        return
    u = (e / sq).sqrt()
    key = (0, (sq,))
    out[key] = out.get(key, 0) + coeff
    _expand_h_symbol(field, minus, u, coeff, out, depth + 1)


def _expand_h_symbol(field, minus, u, coeff, out, depth):
    """h[u] with canonical entries; h[u w^2] = h[u] + 2 h[w]."""
    if depth > 64:
        raise RuntimeError(f"symbol expansion runaway on h[{u}]")
    if u.is_one():
        return
    sq = u.square_class()
    if sq == u:
        out[(0, (u,))] = out.get((0, (u,)), 0) + 2 * coeff
        if not minus.is_one():
            key = (1, tuple(sorted((minus, u), key=_key)))
            out[key] = out.get(key, 0) + coeff
        return
    num, den = _entry_parts(field, u)
    if den is not None:
        _expand_h_symbol(field, minus, num * den, coeff, out, depth + 1)
        _expand_h_symbol(field, minus, den, -2 * coeff, out, depth + 1)
        return
    w = (u / sq).sqrt()
    if w == u:
        w = -w  # avoid the rare sqrt fixed point over F_p
    _expand_h_symbol(field, minus, sq, coeff, out, depth + 1)
    _expand_h_symbol(field, minus, w, 2 * coeff, out, depth + 1)


def _entry_parts(field, e):
    """(numerator, denominator) as field elements when e has a denominator."""
    if isinstance(e.val, Fraction):
        if e.val.denominator != 1:
            return field.element(e.val.numerator), field.element(e.val.denominator)
        return e, None
    if isinstance(e.val, int):
        return e, None
    numer, denom = e.numer_denom()
    if not denom.is_ground or not _ground_is_one(denom):
        num = FieldElement(field, field._field(numer))
        den = FieldElement(field, field._field(denom))
        return num, den
    # polynomial: check for fractional content over Q
    if field.base.kind != "Fp":
        denoms = [Fraction(str(cf)).denominator for cf in numer.coeffs()]
        from math import lcm
        scale = lcm(*denoms) if denoms else 1
        if scale != 1:
            return e * field.element(scale), field.element(scale)
    return e, None


def _ground_is_one(poly):
    return poly == poly.ring.one


# ---------------------------------------------------------------------------
# evaluation isomorphisms

def eval_gw(x):
    """Evaluate a homogeneous degree-0 expression into GW(F); <a> = 1 + eta[a]."""
    if x.degree() != 0 and not x.is_zero_expr():
        raise DegreeError(f"eval_gw needs degree 0, got {x.degree()}")
    out = GWElement.zero(x.field)
    for (eta, syms), c in x.terms.items():
        word = GWElement.one(x.field)
        for s in syms:
            word = word * (GWElement.unit(x.field, s) - GWElement.one(x.field))
        out = out + word * c
    return out


def eval_witt(x):
    """Evaluate a homogeneous negative-degree expression into W(F); eta^n -> 1."""
    d = x.degree()
    if d >= 0 and not x.is_zero_expr():
        raise DegreeError(f"eval_witt needs negative degree, got {d}")
    out = GWElement.zero(x.field)
    for (eta, syms), c in x.terms.items():
        word = GWElement.one(x.field)
        for s in syms:
            word = word * (GWElement.unit(x.field, s) - GWElement.one(x.field))
        out = out + word * c
    return witt_reduce(out)


def witt_image(x):
    """p'-projection: [u] -> -<<u>> = <u> - 1, eta -> 1, landing in W(F)."""
    out = GWElement.zero(x.field)
    for (eta, syms), c in x.terms.items():
        word = GWElement.one(x.field)
        for s in syms:
            word = word * (GWElement.unit(x.field, s) - GWElement.one(x.field))
        out = out + word * c
    return witt_reduce(out)


def milnor_image(x):
    """q'-projection (eta -> 0): the Milnor-K expression of an MW expression."""
    words = {}
    for (eta, syms), c in x.terms.items():
        if eta == 0:
            words[syms] = words.get(syms, 0) + c
    return MilnorExpr(x.field, x.degree() if x.terms else 0, words)


# ---------------------------------------------------------------------------
# Milnor K-theory values (decidable models per field)

class MilnorExpr:
    """A Milnor K-theory class, kept as symbol words plus decision procedures.

    Equality is decided through complete invariants where the group is
    decidable (F_p; R/C models sign-indexed; Q in degree <= 2) and raises
    Undecided elsewhere.
    """

    def __init__(self, field, degree, words):
        self.field = field
        self.n = degree
        self.words = {k: v for k, v in words.items() if v}

    def __repr__(self):
        if not self.words:
            return "0"
        return " + ".join(
            (f"{c}*" if c != 1 else "") + "{" + ",".join(str(s) for s in w) + "}"
            for w, c in sorted(self.words.items(), key=lambda kv: [_key(s) for s in kv[0][0:]]))

    def is_zero(self):
        return milnor_zero(self.field, self.n, self.words)

    def __eq__(self, other):
        if not isinstance(other, MilnorExpr):
            return NotImplemented
        if self.field != other.field or (self.words and other.words and self.n != other.n):
            return False
        diff = dict(self.words)
        for w, c in other.words.items():
            diff[w] = diff.get(w, 0) - c
        return milnor_zero(self.field, self.n or other.n, diff)

    def __hash__(self):
        raise TypeError("MilnorExpr is unhashable (equality is semantic)")

    def mod2_is_zero(self):
        return kmod2_zero(self.field, self.n, self.words)


def _field_kind(field):
    return field.kind


def milnor_zero(field, n, words):
    """Decide vanishing in K^M_n for the supported field models."""
    words = {k: v for k, v in words.items() if v}
    if not words:
        return True
    kind = _field_kind(field)
    if n == 0:
        return sum(words.values()) == 0
    if kind == "C":
        return True              # one square class: the model group is trivial
    if kind == "R":
        return _sign_count(words) % 2 == 0 if n >= 1 else True
    if kind == "Fp":
        if n == 1:
            prod = 1
            p = field.p
            for (s,), c in words.items():
                prod = prod * pow(int(s.val), c % (p - 1), p) % p
            return prod % p == 1
        return True              # K^M_n of a finite field vanishes for n >= 2
    if kind == "Q":
        if n == 1:
            prod = Fraction(1)
            for (s,), c in words.items():
                prod *= Fraction(s.constant_value()) ** c
            return prod == 1
        if n == 2:
            return _k2q_invariants(words) == {}
        raise Undecided(f"K^M_{n}(Q) equality is undecided")
    raise Undecided(f"K^M over {field} is undecided")


def _sign_count(words):
    total = 0
    for syms, c in words.items():
        if all(s.sign() < 0 for s in syms):
            total += c
    return total


def _k2q_invariants(words):
    """Nontrivial invariants of a K_2(Q) element: tame symbols at odd primes,
    the 2-adic Hilbert symbol, and the real symbol.  Complete by Milnor's
    K_2(Q) = mu_2 + sum_p F_p^*."""
    import sympy
    primes = set()
    vals = {}
    for (a, b), c in words.items():
        qa, qb = Fraction(a.constant_value()), Fraction(b.constant_value())
        for q in (qa, qb):
            for p in sympy.factorint(abs(q.numerator * q.denominator)):
                if p != 2:
                    primes.add(p)
    out = {}
    for p in sorted(primes):
        t = 1
        for (a, b), c in words.items():
            t = t * pow(_tame_symbol(Fraction(a.constant_value()),
                                     Fraction(b.constant_value()), p), c % (p - 1), p) % p
        if t % p != 1:
            out[p] = t
    for place in (2, "inf"):
        s = 1
        for (a, b), c in words.items():
            if c % 2:
                s *= hilbert_symbol(Fraction(a.constant_value()),
                                    Fraction(b.constant_value()), place)
        if s == -1:
            out[place] = -1
    return out


def _tame_symbol(a, b, p):
    """(-1)^{v(a)v(b)} a^{v(b)} / b^{v(a)} mod p, in F_p^*."""
    va, ua = _val_unit(a, p)
    vb, ub = _val_unit(b, p)
    sign = -1 if (va * vb) % 2 else 1
    num = pow(ua % p, vb, p) if vb >= 0 else pow(pow(ua, -1, p), -vb, p)
    den = pow(ub % p, va, p) if va >= 0 else pow(pow(ub, -1, p), -va, p)
    return sign * num * pow(den, -1, p) % p


def _val_unit(q, p):
    num, den = q.numerator, q.denominator
    v = 0
    while num % p == 0:
        num //= p; v += 1
    while den % p == 0:
        den //= p; v -= 1
    return v, num * pow(den, -1, p)


def kmod2_zero(field, n, words):
    """Decide vanishing in mod-2 Milnor K-theory k^M_n."""
    words = {k: v % 2 for k, v in words.items()}
    words = {k: v for k, v in words.items() if v}
    if not words:
        return True
    kind = _field_kind(field)
    if n == 0:
        return sum(words.values()) % 2 == 0
    if kind == "C":
        return True
    if kind == "R":
        return _sign_count(words) % 2 == 0
    if kind == "Fp":
        if n == 1:
            prod = field.element(1)
            for (s,), c in words.items():
                if c % 2:
                    prod = prod * s
            return prod.square_class().is_one()
        return True
    if kind == "Q":
        if n == 1:
            prod = field.element(1)
            for (s,), c in words.items():
                if c % 2:
                    prod = prod * s
            return prod.square_class().is_one()
        if n == 2:
            return _k2q_mod2_invariants(words) == {}
        raise Undecided(f"k^M_{n}(Q) equality is undecided")
    raise Undecided(f"k^M over {field} is undecided")


def _k2q_mod2_invariants(words):
    """Hilbert symbols at every relevant place (complete for k_2(Q))."""
    import sympy
    places = {2, "inf"}
    for (a, b), c in words.items():
        for q in (Fraction(a.constant_value()), Fraction(b.constant_value())):
            for p in sympy.factorint(abs(q.numerator * q.denominator)):
                places.add(p)
    out = {}
    for place in sorted(places, key=str):
        s = 1
        for (a, b), c in words.items():
            if c % 2:
                s *= hilbert_symbol(Fraction(a.constant_value()),
                                    Fraction(b.constant_value()), place)
        if s == -1:
            out[place] = -1
    return out


# ---------------------------------------------------------------------------
# the cartesian square

class CartesianImage:
    """The three projections of a homogeneous symbol expression.

    milnor:   q'-image in K^M_n (eta -> 0)
    witt:     p'-image in W(F) with the claimed power marker n ([u] -> -<<u>>)
    mod2:     the common image in k^M_n
    commutes: whether q(p'(x)) = p(q'(x)), decided via the Pfister lift and
              I-power membership (None when outside the decidable range)
    """

    def __init__(self, milnor, witt, power, mod2_words, commutes):
        self.milnor = milnor
        self.witt = witt
        self.power = power
        self.mod2_words = mod2_words
        self.commutes = commutes

    def __repr__(self):
        return (f"CartesianImage(milnor={self.milnor}, witt={self.witt}, "
                f"I^{self.power}, commutes={self.commutes})")


def project(x):
    """Project to (K^M_n, I^n in W, k^M_n) and run the square-commutation check."""
    if not x.is_homogeneous():
        raise DegreeError("projection needs a homogeneous expression")
    n = x.degree()
    milnor = milnor_image(x)
    witt = witt_image(x)
    mod2 = {k: v % 2 for k, v in milnor.words.items() if v % 2}
    commutes = _square_commutes(x, milnor, witt, n)
    return CartesianImage(milnor, witt, n, mod2, commutes)


def _pfister_lift(field, words):
    """Phi: k^M_n -> I^n/I^{n+1}: {a1..an} -> prod(-<<ai>>), as a GW element."""
    out = GWElement.zero(field)
    for syms, c in words.items():
        word = GWElement.one(field)
        for s in syms:
            word = word * (GWElement.unit(field, s) - GWElement.one(field))
        out = out + word * (c % 2)
    return out


def _square_commutes(x, milnor, witt, n):
    """q(p'(x)) = p(q'(x)) iff p'(x) - Phi(q'(x) mod 2) lies in I^(n+1)."""
    field = x.field
    if n + 1 > 3 or field.kind not in ("Q", "R", "C", "Fp"):
        return None
    lift = _pfister_lift(field, milnor.words)
    diff = witt.rep - lift
    if diff.rank % 2:
        return False
    probe = diff - GWElement.hyperbolic(field) * (diff.rank // 2)
    if n + 1 <= 0:
        return True
    return in_I_power(probe, max(n + 1, 0))


# ---------------------------------------------------------------------------
# equality

def specialize_expr(x, point):
    """Exact evaluation of a symbol expression at a rational point.

    point maps variable names to values in the base field; every symbol entry
    must stay nonzero there (FieldError otherwise).  Specialization at such a
    point is a ring map commuting with the evaluations, which makes it a
    sound refutation oracle for identities over function fields.
    """
    field = x.field
    if not isinstance(field, FunctionField):
        return x
    base = field.base
    mapping = {v: base.element(c) for v, c in point.items()}
    terms = {}
    for (eta, syms), c in x.terms.items():
        out = []
        for s in syms:
            val = s.substitute(mapping, base)
            if val.is_zero():
                raise FieldError(f"entry {s} vanishes at {point}")
            out.append(val)
        key = (eta, tuple(out))
        terms[key] = terms.get(key, 0) + c
    return MWExpr(base, terms)


class UndecidedResult:
    """Returned by mw_equal when no complete invariant set applies."""

    def __init__(self, detail, separated=False):
        self.detail = detail
        self.separated = separated

    def __bool__(self):
        raise TypeError("Undecided result used as a boolean; check explicitly")

    def __repr__(self):
        return f"Undecided({self.detail})"


def mw_equal(x, y):
    """Decide x = y in the symbol ring: True, False, or UndecidedResult.

    Degree <= 0: through the GW / W evaluations.  Degree >= 1: through the
    cartesian square, i.e. equality of both projections, on fields where
    K^M_n and I^n are decidable (F_p, R, C for all n; Q for n <= 2).
    """
    if x.field != y.field:
        raise FieldError("field mismatch in mw_equal")
    if not (x.is_homogeneous() and y.is_homogeneous()):
        raise DegreeError("mw_equal needs homogeneous expressions")
    dx, dy = x.degree(), y.degree()
    if x.terms and y.terms and dx != dy:
        raise DegreeError(f"degree mismatch: {dx} vs {dy}")
    n = dx if x.terms else dy
    diff = x - y
    if diff.is_zero_expr():
        return True
    if n == 0:
        return gw_equal(eval_gw(diff), GWElement.zero(x.field))
    if n < 0:
        return eval_witt(diff).is_zero()
    # positive degree: both projections of the difference must vanish
    milnor = milnor_image(diff)
    witt = witt_image(diff)
    witt_zero = witt.is_zero()
    if not witt_zero:
        return False
    try:
        milnor_zero_flag = milnor.is_zero()
    except Undecided as u:
        nrm = mw_normalize(diff)
        if nrm.is_zero_expr():
            return True
        return UndecidedResult(f"Witt projection vanishes; {u}")
    return milnor_zero_flag
