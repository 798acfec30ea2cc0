"""Virtual quadratic-form arithmetic: GW(F) and W(F) with decidable equality.

Elements are formal differences of diagonal forms with square-class entries.
Equality is decided by the complete invariant set of the base field (C-model:
rank; R-model: rank+signature; F_p: rank+discriminant; Q: rank+disc+Hasse at
the relevant primes+signature).  Over function fields only syntactic equality
of canonical forms is available, which is exactly what the residue fixtures
need.  A brute-force Gram-congruence search over small prime fields serves as
the independent oracle for all of this.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy

from .fields import (BaseField, CModel, FieldElement, FieldError, Fp,
                     FunctionField, Q, RModel, _SymbolicToken, Undecided)


class DiagonalForm:
    """Diagonal symmetric bilinear form <a1,...,an>; entry order is not meaning."""

    def __init__(self, field, entries):
        self.field = field
        self.entries = tuple(_entry(field, e) for e in entries)
        if any(e.is_zero() if hasattr(e, "is_zero") else e == 0 for e in self.entries):
            raise FieldError("form entries must be nonzero")

    @property
    def rank(self):
        return len(self.entries)

    def gram(self):
        return [[self.entries[i] if i == j else 0 for j in range(self.rank)]
                for i in range(self.rank)]

    def __repr__(self):
        return "<" + ",".join(str(e) for e in self.entries) + ">"


def _entry(field, e):
    if isinstance(e, _SymbolicToken):
        return e
    if isinstance(e, FieldElement):
        if e.parent != field:
            raise FieldError("entry from the wrong field")
        return e
    return field.element(e)


def _sq(e):
    return e.square_class()


def _neg_class(e):
    return (-e).square_class() if not isinstance(e, _SymbolicToken) else (-e).square_class()


def _entry_key(e):
    return repr(e)


class GWElement:
    """Element of GW(F): positive part minus negative part, in canonical form.

    Canonicalization reduces entries to square classes, cancels entries shared
    by the two parts, and folds hyperbolic pairs <u> + <-u> into <1> + <-1>
    (an isometry over every field), then sorts.
    """

    __slots__ = ("field", "pos", "neg")

    def __init__(self, field, pos=(), neg=()):
        pos = [_sq(_entry(field, e)) for e in pos]
        neg = [_sq(_entry(field, e)) for e in neg]
        pos, neg = _cancel_common(pos, neg)
        pos = _fold_hyperbolics(field, pos)
        neg = _fold_hyperbolics(field, neg)
        pos, neg = _cancel_common(pos, neg)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "pos", tuple(sorted(pos, key=_entry_key)))
        object.__setattr__(self, "neg", tuple(sorted(neg, key=_entry_key)))

    def __setattr__(self, *a):
        raise AttributeError("GWElement is immutable")

    # -- constructors --------------------------------------------------------

    @classmethod
    def form(cls, field, *entries):
        return cls(field, entries, ())

    @classmethod
    def zero(cls, field):
        return cls(field, (), ())

    @classmethod
    def one(cls, field):
        return cls(field, (1,), ())

    @classmethod
    def unit(cls, field, a):
        """The rank-one form <a>."""
        return cls(field, (a,), ())

    @classmethod
    def hyperbolic(cls, field):
        return cls(field, (1, -1), ())

    @classmethod
    def integer(cls, field, n):
        if n >= 0:
            return cls(field, (1,) * n, ())
        return cls(field, (), (1,) * (-n))

    # -- basics ----------------------------------------------------------------

    @property
    def rank(self):
        return len(self.pos) - len(self.neg)

    def is_syntactic_zero(self):
        return not self.pos and not self.neg

    def __repr__(self):
        if self.is_syntactic_zero():
            return "0"
        parts = []
        if self.pos:
            parts.append("<" + ",".join(str(e) for e in self.pos) + ">")
        if self.neg:
            parts.append("- <" + ",".join(str(e) for e in self.neg) + ">")
        return " ".join(parts)

    def __eq__(self, other):
        if not isinstance(other, GWElement):
            return NotImplemented
        return gw_equal(self, other)

    def __hash__(self):
        return hash((self.field, self.pos, self.neg))

    # -- ring structure ---------------------------------------------------------

    def _check(self, other):
        if self.field != other.field:
            raise FieldError("field mismatch in GW arithmetic")

    def __add__(self, other):
        if isinstance(other, int):
            other = GWElement.integer(self.field, other)
        self._check(other)
        return GWElement(self.field, self.pos + other.pos, self.neg + other.neg)

    __radd__ = __add__

    def __neg__(self):
        return GWElement(self.field, self.neg, self.pos)

    def __sub__(self, other):
        if isinstance(other, int):
            other = GWElement.integer(self.field, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            other = GWElement.integer(self.field, other)
        self._check(other)
        pos = [a * b for a in self.pos for b in other.pos] + \
              [a * b for a in self.neg for b in other.neg]
        neg = [a * b for a in self.pos for b in other.neg] + \
              [a * b for a in self.neg for b in other.pos]
        return GWElement(self.field, pos, neg)

    __rmul__ = __mul__

    def scale(self, a):
        """Multiply by the rank-one form <a>."""
        return self * GWElement.unit(self.field, a)


def _cancel_common(pos, neg):
    pos, neg = list(pos), list(neg)
    out_neg = []
    for e in neg:
        try:
            pos.remove(e)
        except ValueError:
            out_neg.append(e)
    return pos, out_neg


def _fold_hyperbolics(field, entries):
    """Rewrite pairs {<u>, <-u>} as {<1>, <-1>} (valid isometry <u,-u> ~ H)."""
    entries = list(entries)
    out = []
    hyper = 0
    while entries:
        e = entries.pop()
        ne = _neg_class(e)
        try:
            entries.remove(ne)
            hyper += 1
        except ValueError:
            out.append(e)
    one = _entry(field, 1).square_class() if not isinstance(field, BaseField) \
        else field.element(1).square_class()
    for _ in range(hyper):
        out.append(one)
        out.append(_neg_class(one))
    return out


# ---------------------------------------------------------------------------
# invariants

def _signature_entry(e):
    return e.sign()


def rank(x):
    return x.rank


def signature(x):
    """Signature at the real place (R-model, or Q through its real embedding)."""
    if x.field.kind not in ("R", "Q"):
        raise FieldError("signature needs an ordered field")
    return sum(_signature_entry(e) for e in x.pos) - \
        sum(_signature_entry(e) for e in x.neg)


def determinant(x):
    """Square class of det(pos)/det(neg)."""
    field = x.field
    out = field.element(1) if isinstance(field, BaseField) else field.element(1)
    for e in x.pos:
        out = out * e
    for e in x.neg:
        out = out * e          # 1/e = e up to squares
    return out.square_class()


def signed_disc(x):
    """disc = (-1)^{r(r-1)/2} * det  (complete pair-invariant with rank over F_p)."""
    r = x.rank
    sign = -1 if (r * (r - 1) // 2) % 2 else 1
    d = determinant(x)
    return (d * x.field.element(sign)).square_class() if sign == -1 else d


def hilbert_symbol(a, b, p):
    """Hilbert symbol (a,b)_p over Q; p an odd prime, 2, or the string 'inf'."""
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise FieldError("Hilbert symbol of zero")
    if p == "inf":
        return -1 if a < 0 and b < 0 else 1
    aval, au = _padic(a, p)
    bval, bu = _padic(b, p)
    if p == 2:
        eps = lambda u: ((u - 1) // 2) % 2
        omega = lambda u: ((u * u - 1) // 8) % 2
        exp = eps(au) * eps(bu) + aval * omega(bu) + bval * omega(au)
        return -1 if exp % 2 else 1
    legendre = lambda u: 1 if pow(u % p, (p - 1) // 2, p) == 1 else -1
    exp = aval * bval * (((p - 1) // 2) % 2)
    sym = (-1) ** exp
    if bval % 2:
        sym *= legendre(au)
    if aval % 2:
        sym *= legendre(bu)
    return sym


def _padic(q, p):
    """(valuation, unit representative) of a rational at p.

    The unit is returned as num*den, which equals num/den up to a square;
    Hilbert symbols only see square classes, so this stays exact in integers.
    """
    num, den = q.numerator, q.denominator
    v = 0
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v, num * den


def hasse_invariant(entries, p):
    """Hasse symbol c(q) = prod_{i<j} (a_i, a_j)_p of a diagonal form over Q."""
    out = 1
    vals = [Fraction(e.constant_value()) for e in entries]
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            out *= hilbert_symbol(vals[i], vals[j], p)
    return out


def relevant_primes(*elements):
    """2 and every odd prime dividing an entry, plus the real place."""
    primes = {2}
    for x in elements:
        for e in list(x.pos) + list(x.neg):
            q = Fraction(e.constant_value())
            n = abs(q.numerator * q.denominator)
            for p in sympy.factorint(n):
                if p != 2:
                    primes.add(p)
    return sorted(primes) + ["inf"]


class InvariantProfile:
    """rank, signed discriminant, signatures, Hasse data of a virtual form."""

    def __init__(self, rank, disc, signatures=(), hasse=None):
        self.rank = rank
        self.disc = disc
        self.signatures = tuple(signatures)
        self.hasse = dict(hasse or {})

    def __repr__(self):
        bits = [f"rank={self.rank}", f"disc={self.disc}"]
        if self.signatures:
            bits.append(f"signature={self.signatures[0]}")
        if self.hasse:
            bits.append("hasse=" + ",".join(f"{p}:{v:+d}" for p, v in self.hasse.items()))
        return "Profile(" + ", ".join(bits) + ")"

    def to_json(self):
        return {"rank": self.rank, "disc": str(self.disc),
                "signatures": list(self.signatures),
                "hasse": {str(p): v for p, v in self.hasse.items()}}


def invariants(x):
    """Exact invariant profile of a GW element."""
    prof = InvariantProfile(x.rank, signed_disc(x))
    if x.field.kind in ("R", "Q"):
        prof.signatures = (signature(x),)
    if x.field.kind == "Q":
        prof.hasse = {p: _virtual_hasse(x, p) for p in relevant_primes(x)}
    return prof


def _virtual_hasse(x, p):
    """c(pos - neg) via the cocycle c(u+v) = c(u)c(v)(det u, det v)_p."""
    cp = hasse_invariant(x.pos, p)
    cn = hasse_invariant(x.neg, p)
    dp = _det_value(x.pos)
    dn = _det_value(x.neg)
    dx = dp / dn
    return cp * cn * hilbert_symbol(dx, dn, p) if x.neg or x.pos else 1


def _det_value(entries):
    out = Fraction(1)
    for e in entries:
        out *= Fraction(e.constant_value())
    return out


# ---------------------------------------------------------------------------
# equality

def gw_equal(a, b):
    """Decide a = b in GW(F) by the field's complete invariant set."""
    if a.field != b.field:
        raise FieldError("field mismatch in gw_equal")
    kind = a.field.kind
    if a.pos == b.pos and a.neg == b.neg:
        return True
    if a.rank != b.rank:
        return False
    if kind == "symbolic":
        return _multiset_equal(a.pos, b.pos) and _multiset_equal(a.neg, b.neg)
    if isinstance(a.field, FunctionField):
        return False           # canonical forms already compared
    # compare the honest forms P = a+ (+) b-  vs  N = b+ (+) a-
    P = list(a.pos) + list(b.neg)
    N = list(b.pos) + list(a.neg)
    if kind == "C":
        return len(P) == len(N)
    if kind == "R":
        return len(P) == len(N) and \
            sum(e.sign() for e in P) == sum(e.sign() for e in N)
    if kind == "Fp":
        if len(P) != len(N):
            return False
        dp = a.field.element(1)
        for e in P:
            dp = dp * e
        dn = a.field.element(1)
        for e in N:
            dn = dn * e
        return (dp / dn).square_class().is_one()
    if kind == "Q":
        if len(P) != len(N):
            return False
        if sum(e.sign() for e in P) != sum(e.sign() for e in N):
            return False
        dP, dN = _det_value(P), _det_value(N)
        if not _is_rational_square(dP / dN):
            return False
        fa = GWElement(a.field, P, ())
        fb = GWElement(a.field, N, ())
        for p in relevant_primes(fa, fb):
            if hasse_invariant(fa.pos, p) != hasse_invariant(fb.pos, p):
                return False
        return True
    raise FieldError(f"equality not supported over {a.field}")


def _multiset_equal(xs, ys):
    """Multiset equality using == (tokens compare by square class)."""
    ys = list(ys)
    if len(xs) != len(ys):
        return False
    for x in xs:
        try:
            ys.remove(x)
        except ValueError:
            return False
    return True


def _is_rational_square(q):
    q = Fraction(q)
    if q <= 0:
        return False
    return sympy.integer_nthroot(q.numerator, 2)[1] and \
        sympy.integer_nthroot(q.denominator, 2)[1]


# ---------------------------------------------------------------------------
# Witt ring

class WittElement:
    """Class of a GW element in W(F) = GW(F)/(h)."""

    __slots__ = ("rep",)

    def __init__(self, rep):
        object.__setattr__(self, "rep", _witt_canonical(rep))

    def __setattr__(self, *a):
        raise AttributeError("WittElement is immutable")

    @property
    def field(self):
        return self.rep.field

    def __repr__(self):
        return f"W[{self.rep}]"

    def __add__(self, other):
        return WittElement(self.rep + other.rep)

    def __neg__(self):
        return WittElement(-self.rep)

    def __sub__(self, other):
        return WittElement(self.rep - other.rep)

    def __mul__(self, other):
        if isinstance(other, int):
            return WittElement(self.rep * other)
        return WittElement(self.rep * other.rep)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, WittElement):
            return NotImplemented
        return witt_equal(self, other)

    def __hash__(self):
        return hash((self.rep.field, self.rep.pos, self.rep.neg))

    def is_zero(self):
        return witt_equal(self, WittElement(GWElement.zero(self.field)))


def _witt_canonical(x):
    """Fold -<u> into <-u> and drop hyperbolic pairs: a pair-cancelled form."""
    entries = list(x.pos) + [_neg_class(e) for e in x.neg]
    out = []
    while entries:
        e = entries.pop()
        ne = _neg_class(e)
        try:
            entries.remove(ne)
        except ValueError:
            out.append(e)
    return GWElement(x.field, out, ())


def witt_reduce(x):
    """Canonical Witt representative of a GW element."""
    return WittElement(x)


def witt_equal(w1, w2):
    """w1 = w2 in W(F): the GW difference is an integer multiple of h."""
    d = w1.rep - w2.rep
    if isinstance(d.field, FunctionField) or d.field.kind == "symbolic":
        return _witt_canonical(d).is_syntactic_zero()
    if d.rank % 2:
        return False
    return gw_equal(d, GWElement.hyperbolic(d.field) * (d.rank // 2))


# ---------------------------------------------------------------------------
# fundamental ideal

def in_I_power(x, n):
    """Membership in I^n, n <= 3, I = ker(rank: GW -> Z)."""
    if n < 0 or n > 3:
        raise FieldError("only I^n with 0 <= n <= 3 is decidable here")
    if n == 0:
        return True
    kind = x.field.kind
    if kind == "C":
        return x.rank == 0 and witt_reduce(x).is_zero()
    if kind == "R":
        return x.rank == 0 and signature(x) % (2 ** n) == 0
    if kind == "Fp":
        if x.rank != 0:
            return False
        if n == 1:
            return True
        return witt_reduce(x).is_zero()      # I^2(F_p) = 0
    if kind == "Q":
        if x.rank != 0:
            return False
        if n == 1:
            return True
        if not determinant(x).is_one():
            return False
        if n == 2:
            return True
        if signature(x) % 8 != 0:
            return False
        return all(_virtual_hasse(x, p) == 1 for p in relevant_primes(x))
    raise FieldError(f"I-power membership undecidable over {x.field}")


# ---------------------------------------------------------------------------
# brute-force isometry oracle

def _all_matrices_batched(p, r, batch_power):
    """Yield batches of all r x r matrices over F_p (int16 arrays)."""
    total_cells = r * r
    lead = total_cells - batch_power
    block = np.stack(np.unravel_index(np.arange(p ** batch_power),
                                      (p,) * batch_power), axis=1).astype(np.int16)
    for head in itertools.product(range(p), repeat=lead):
        heads = np.tile(np.array(head, dtype=np.int16), (block.shape[0], 1))
        yield np.concatenate([heads, block], axis=1).reshape(-1, r, r)


@lru_cache(maxsize=None)
def _invertible_matrices(p, r):
    """All T in GL_r(F_p) as one array (only for p^(r^2) small enough)."""
    if r == 0:
        return np.zeros((1, 0, 0), dtype=np.int16)
    mats = np.stack(np.unravel_index(np.arange(p ** (r * r)), (p,) * (r * r)),
                    axis=1).astype(np.int16).reshape(-1, r, r)
    return np.ascontiguousarray(mats[_dets(mats, r) % p != 0])


def _dets(m, r):
    m = m.astype(np.int32)
    if r == 1:
        return m[:, 0, 0]
    if r == 2:
        return m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    return (m[:, 0, 0] * (m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 1])
            - m[:, 0, 1] * (m[:, 1, 0] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 0])
            + m[:, 0, 2] * (m[:, 1, 0] * m[:, 2, 1] - m[:, 1, 1] * m[:, 2, 0]))


def _congruent_diagonal_batch(mats, diag, p):
    """Diagonal Gram matrices T^t (diag) T reachable within one batch of T."""
    gt = mats * np.asarray(diag, dtype=np.int16)[None, :, None]   # diag @ T
    prod = np.einsum("nji,njl->nil", mats.astype(np.int32),
                     gt.astype(np.int32)) % p
    r = mats.shape[1]
    if r == 1:
        dia = prod[:, :, 0]
    else:
        off = np.ones(prod.shape[0], dtype=bool)
        for i in range(r):
            for j in range(i + 1, r):
                off &= prod[:, i, j] == 0
        prod = prod[off]
        dia = prod[:, np.arange(r), np.arange(r)]
    dia = dia[(dia != 0).all(axis=1)]
    return {tuple(int(x) for x in row) for row in np.unique(dia, axis=0)}


@lru_cache(maxsize=None)
def _congruent_diagonals(p, diag):
    """All diagonal forms congruent to diag over F_p, by full enumeration of GL_r."""
    r = len(diag)
    if p ** (r * r) <= 2_200_000:
        return frozenset(_congruent_diagonal_batch(_invertible_matrices(p, r), diag, p))
    out = set()
    for batch in _all_matrices_batched(p, r, batch_power=7):
        batch = batch[_dets(batch, r) % p != 0]
        if batch.size:
            out |= _congruent_diagonal_batch(batch, diag, p)
    return frozenset(out)


def brute_force_isometry(p, f, g):
    """Exhaustive search for T with T^t Gram(f) T = Gram(g) over F_p.

    p in {3,5,7}, rank <= 3.  This is the oracle gw_equal is checked against:
    every invertible T is enumerated (vectorized, cached per left-hand form).
    """
    if p not in (3, 5, 7):
        raise FieldError("oracle limited to p in {3,5,7}")
    if f.rank != g.rank:
        return False
    r = f.rank
    if r > 3:
        raise FieldError("oracle limited to rank <= 3")
    if r == 0:
        return True
    diag_f = tuple(int(e.val) % p for e in f.entries)
    diag_g = tuple(int(e.val) % p for e in g.entries)
    return diag_g in _congruent_diagonals(p, diag_f)


def classify_forms(p, max_rank=3):
    """Isometry classes of diagonal forms of rank <= max_rank over F_p,
    computed purely by the brute-force oracle."""
    field = Fp(p)
    g = _least_nonresidue_elt(field)
    classes = {0: [DiagonalForm(field, ())]}
    for r in range(1, max_rank + 1):
        reps = []
        for combo in itertools.product([field.element(1), g], repeat=r):
            form = DiagonalForm(field, combo)
            if not any(brute_force_isometry(p, form, other) for other in reps):
                reps.append(form)
        classes[r] = reps
    return classes


def _least_nonresidue_elt(field):
    for c in range(2, field.p):
        e = field.element(c)
        if not e.square_class().is_one():
            return e.square_class()
    raise FieldError("no nonresidue")


# ---------------------------------------------------------------------------
# presentations (feeding the graded-ring engine)

def gw_presentation(field):
    """Finite Z-module presentation of GW(field) with multiplication data.

    Returns a dict with basis labels, relation rows, multiplication table
    (basis x basis -> vector), the unit, h, generators of I, and rank data.
    Only C-model, R-model and F_p are finitely generated.
    """
    kind = field.kind
    if kind == "C":
        return {
            "field": field, "basis": ["<1>"], "rels": [],
            "one": (1,), "h": (2,), "mult": {(0, 0): (1,)},
            "i_gens": [], "ranks": (1,),
        }
    if kind == "R":
        return {
            "field": field, "basis": ["<1>", "<-1>"], "rels": [],
            "one": (1, 0), "h": (1, 1),
            "mult": {(0, 0): (1, 0), (0, 1): (0, 1), (1, 0): (0, 1), (1, 1): (1, 0)},
            "i_gens": [(-1, 1)], "ranks": (1, 1),
        }
    if kind == "Fp":
        p = field.p
        hvec = (2, 0) if p % 4 == 1 else (1, 1)
        return {
            "field": field, "basis": ["<1>", "<g>"], "rels": [(-2, 2)],
            "one": (1, 0), "h": hvec,
            "mult": {(0, 0): (1, 0), (0, 1): (0, 1), (1, 0): (0, 1), (1, 1): (1, 0)},
            "i_gens": [(-1, 1)], "ranks": (1, 1),
        }
    raise FieldError(f"GW({field}) is not finitely generated")


def gw_presentation_from_oracle(p, max_rank=3):
    """Regenerate the F_p presentation from the brute-force classification.

    Verifies that rank + discriminant classify forms up to max_rank, that the
    group completion satisfies 2<g> = 2<1>, and rederives h in basis
    coordinates; any failure raises.  (max_rank 2 suffices for the group
    structure; 3 is the spec'd exhaustive range for p = 3, 5.)
    """
    field = Fp(p)
    classes = classify_forms(p, max_rank)
    for r, reps in classes.items():
        expected = 1 if r == 0 else 2
        if len(reps) != expected:
            raise AssertionError(f"rank {r} over F_{p}: {len(reps)} classes")
        discs = {str(signed_disc(GWElement(field, f.entries, ()))) for f in reps}
        if len(discs) != expected:
            raise AssertionError(f"disc does not separate rank-{r} classes mod {p}")
    one = field.element(1)
    g = _least_nonresidue_elt(field)
    if not brute_force_isometry(p, DiagonalForm(field, (g, g)),
                                DiagonalForm(field, (one, one))):
        raise AssertionError(f"<g,g> != <1,1> over F_{p}: presentation wrong")
    minus = field.element(-1).square_class()
    hvec = (2, 0) if minus.is_one() else (1, 1)
    pres = gw_presentation(field)
    if tuple(pres["h"]) != hvec:
        raise AssertionError("h vector disagrees with oracle")
    return pres


def witt_group_from_oracle(p, max_rank=3):
    """Invariant factors of W(F_p) = GW/(h), regenerated from the oracle."""
    from .snf import FPGroup
    pres = gw_presentation_from_oracle(p, max_rank)
    rows = [list(r) for r in pres["rels"]] + [list(pres["h"])]
    return FPGroup(rows, len(pres["basis"]))


# ---------------------------------------------------------------------------
# assorted classes from the geometry

def nodal_class(field, a, b):
    """<b/a> - 1, the class of a node with Weierstrass data y^2 = x^3+ax+b.

    Invariant under (a,b) -> (u^4 a, u^6 b); annihilated by h.
    """
    a = field.element(a) if not isinstance(a, FieldElement) else a
    b = field.element(b) if not isinstance(b, FieldElement) else b
    if a.is_zero() or b.is_zero():
        raise FieldError("nodal class needs a, b nonzero")
    return GWElement.unit(field, b / a) - GWElement.one(field)
