"""Exact integer linear algebra: Smith normal form and finitely presented
abelian groups.

Everything here works on plain Python integers (no overflow) and small dense
matrices, which is all the graded-ring engine ever produces.  A finitely
presented abelian group is given by relation rows acting on ZZ^n; its
canonical description is the divisibility-sorted list of invariant factors
plus the free rank.
"""

from __future__ import annotations


def _identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def smith_normal_form(rows, ncols):
    """Return (diag, V) for the relation matrix M with the given rows.

    diag holds the diagonal of the Smith form D = U*M*V with d_1 | d_2 | ...,
    entries nonnegative, padded with zeros up to ncols.  V is the unimodular
    column transform; membership of a vector w in the row lattice of M is
    equivalent to d_i | (w*V)_i for every i (with d_i = 0 forcing equality).
    """
    m = len(rows)
    a = [[int(x) for x in r] for r in rows]
    for r in a:
        if len(r) != ncols:
            raise ValueError("ragged relation matrix")
    v = _identity(ncols)
    t = 0
    limit = min(m, ncols)
    while t < limit:
        piv = _min_nonzero(a, t, m, ncols)
        if piv is None:
            break
        pi, pj = piv
        if pi != t:
            a[t], a[pi] = a[pi], a[t]
        if pj != t:
            for r in a:
                r[t], r[pj] = r[pj], r[t]
            for r in v:
                r[t], r[pj] = r[pj], r[t]
        while True:
            if a[t][t] < 0:
                a[t] = [-x for x in a[t]]
            p = a[t][t]
            # clear column t with row operations
            dirty = False
            for i in range(t + 1, m):
                if a[i][t]:
                    q = a[i][t] // p
                    if q:
                        a[i] = [a[i][k] - q * a[t][k] for k in range(ncols)]
                    if a[i][t]:
                        a[t], a[i] = a[i], a[t]
                        dirty = True
                        break
            if dirty:
                continue
            # clear row t with column operations (mirrored into V)
            for j in range(t + 1, ncols):
                if a[t][j]:
                    q = a[t][j] // p
                    if q:
                        for i in range(m):
                            a[i][j] -= q * a[i][t]
                        for i in range(ncols):
                            v[i][j] -= q * v[i][t]
                    if a[t][j]:
                        for i in range(m):
                            a[i][t], a[i][j] = a[i][j], a[i][t]
                        for i in range(ncols):
                            v[i][t], v[i][j] = v[i][j], v[i][t]
                        dirty = True
                        break
            if dirty:
                continue
            # divisibility: pivot must divide the remaining submatrix
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, ncols):
                    if a[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            a[t] = [a[t][k] + a[bad][k] for k in range(ncols)]
        t += 1
    diag = [a[i][i] if i < m else 0 for i in range(ncols)]
    return diag, v


def _min_nonzero(a, t, m, ncols):
    best = None
    for i in range(t, m):
        for j in range(t, ncols):
            x = abs(a[i][j])
            if x and (best is None or x < best[0]):
                best = (x, i, j)
                if x == 1:
                    return i, j
    return None if best is None else (best[1], best[2])


class FPGroup:
    """Finitely presented abelian group ZZ^ncols / <rows>."""

    def __init__(self, rows, ncols):
        self.ncols = ncols
        self.rows = [tuple(r) for r in rows]
        if ncols:
            diag, v = smith_normal_form(self.rows, ncols)
        else:
            diag, v = [], []
        self._diag = diag
        self._v = v
        self.invariant_factors = tuple(d for d in diag if d > 1)
        self.free_rank = sum(1 for d in diag if d == 0)

    def __eq__(self, other):
        return (self.invariant_factors == other.invariant_factors
                and self.free_rank == other.free_rank)

    def __hash__(self):
        return hash((self.invariant_factors, self.free_rank))

    def __repr__(self):
        return f"FPGroup(factors={list(self.invariant_factors)}, free={self.free_rank})"

    def describe(self):
        parts = [f"Z/{d}" for d in self.invariant_factors]
        parts += ["Z"] * self.free_rank
        return " + ".join(parts) if parts else "0"

    def is_trivial(self):
        return not self.invariant_factors and self.free_rank == 0

    def contains(self, vec):
        """Is vec in the relation lattice (i.e. zero in the group)?"""
        if self.ncols == 0:
            return True
        w = _vec_times_mat(list(vec), self._v)
        for i, d in enumerate(self._diag):
            if d == 0:
                if w[i] != 0:
                    return False
            elif w[i] % d != 0:
                return False
        return True

    def coordinates(self, vec):
        """Canonical coordinates of vec in the Smith basis (residues mod d_i)."""
        if self.ncols == 0:
            return ()
        w = _vec_times_mat(list(vec), self._v)
        return tuple(w[i] % d if d > 0 else w[i] for i, d in enumerate(self._diag))


def _vec_times_mat(vec, mat):
    n = len(mat[0]) if mat else 0
    return [sum(vec[i] * mat[i][j] for i in range(len(vec))) for j in range(n)]


def cokernel(rows, ncols):
    """Invariant factors (>1) and free rank of ZZ^ncols / <rows>."""
    g = FPGroup(rows, ncols)
    return list(g.invariant_factors), g.free_rank
