"""Text syntax for field elements, diagonal forms and symbol expressions.

Field elements:   integer literals, variable names, + - * / ^ (or **), parens.
Forms:            <a1,a2,...> - <b1,...>   (either side optional)
Symbol terms:     eta, eta^k, [e1,e2,...], integer coefficients, + - *.
"""

from __future__ import annotations

import re
from fractions import Fraction


class ParseError(ValueError):
    def __init__(self, message, pos=None):
        super().__init__(message + (f" (at position {pos})" if pos is not None else ""))
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|\^|[-+*/()\[\],<>]))")


def _tokenize(text):
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ParseError(f"unexpected character {text[pos]!r}", pos)
            break
        num, name, op = m.groups()
        if num:
            out.append(("int", int(num), pos))
        elif name:
            out.append(("name", name, pos))
        else:
            out.append(("op", "^" if op == "**" else op, pos))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Tokens:
    def __init__(self, text):
        self.items = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.items[self.i]

    def next(self):
        tok = self.items[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val!r}", pos)


def parse_field_element(text, parent):
    """Parse text into an element of a base or function field."""
    toks = _Tokens(text)
    val = _expr(toks, parent)
    kind, v, pos = toks.peek()
    if kind != "end":
        raise ParseError(f"trailing input {v!r}", pos)
    return val


def _expr(toks, parent):
    val = _term(toks, parent)
    while True:
        kind, v, pos = toks.peek()
        if v == "+":
            toks.next()
            val = val + _term(toks, parent)
        elif v == "-":
            toks.next()
            val = val - _term(toks, parent)
        else:
            return val


def _term(toks, parent):
    val = _factor(toks, parent)
    while True:
        kind, v, pos = toks.peek()
        if v == "*":
            toks.next()
            val = val * _factor(toks, parent)
        elif v == "/":
            toks.next()
            val = val / _factor(toks, parent)
        else:
            return val


def _factor(toks, parent):
    kind, v, pos = toks.next()
    if v == "-":
        return -_factor(toks, parent)
    if v == "+":
        return _factor(toks, parent)
    if v == "(":
        val = _expr(toks, parent)
        toks.expect(")")
    elif kind == "int":
        val = parent.element(v)
    elif kind == "name":
        try:
            val = parent.gen(v)
        except (ValueError, AttributeError):
            raise ParseError(f"unknown variable {v!r}", pos)
    else:
        raise ParseError(f"unexpected token {v!r}", pos)
    kind2, v2, _ = toks.peek()
    if v2 == "^":
        toks.next()
        sign = 1
        kind3, v3, pos3 = toks.next()
        if v3 == "-":
            sign = -1
            kind3, v3, pos3 = toks.next()
        if kind3 != "int":
            raise ParseError("exponent must be an integer", pos3)
        val = val ** (sign * v3)
    return val


def parse_form(text, field):
    """Parse `<a1,...> - <b1,...>` into (positive entries, negative entries)."""
    toks = _Tokens(text)
    pos_entries, neg_entries = [], []
    sign = 1
    while True:
        kind, v, p = toks.peek()
        if kind == "end":
            break
        if v == "+":
            toks.next(); sign = 1
            continue
        if v == "-":
            toks.next(); sign = -1
            continue
        if v == "<":
            entries = _angle_list(toks, field)
            (pos_entries if sign == 1 else neg_entries).extend(entries)
            sign = 1
            continue
        raise ParseError(f"unexpected token {v!r} in form", p)
    return pos_entries, neg_entries


def _angle_list(toks, field):
    toks.expect("<")
    entries = []
    while True:
        entries.append(_expr(toks, field))
        kind, v, p = toks.next()
        if v == ">":
            return entries
        if v != ",":
            raise ParseError(f"expected , or > in form, found {v!r}", p)


def parse_mw(text, field):
    """Parse a symbol expression like `2 + eta*[-1] - 3*eta^2*[t, x+1]`."""
    from .mw import MWExpr
    toks = _Tokens(text)
    expr = MWExpr.zero(field)
    sign = 1
    first = True
    while True:
        kind, v, p = toks.peek()
        if kind == "end":
            if first:
                raise ParseError("empty expression", p)
            break
        if v == "+":
            toks.next(); sign = 1
            continue
        if v == "-":
            toks.next(); sign = -sign
            continue
        expr = expr + _mw_term(toks, field) * sign
        sign = 1
        first = False
    return expr


def _mw_term(toks, field):
    from .mw import MWExpr
    coeff = 1
    eta = 0
    syms = []
    saw = False
    while True:
        kind, v, p = toks.peek()
        if kind == "int":
            toks.next()
            coeff *= v
            saw = True
        elif kind == "name" and v == "eta":
            toks.next()
            k2, v2, _ = toks.peek()
            power = 1
            if v2 == "^":
                toks.next()
                k3, v3, p3 = toks.next()
                if k3 != "int":
                    raise ParseError("eta exponent must be an integer", p3)
                power = v3
            eta += power
            saw = True
        elif v == "[":
            toks.next()
            while True:
                syms.append(_expr(toks, field))
                k3, v3, p3 = toks.next()
                if v3 == "]":
                    break
                if v3 != ",":
                    raise ParseError("expected , or ] in symbol", p3)
            saw = True
        elif v == "(":
            toks.next()
            inner = _expr(toks, field)
            toks.expect(")")
            raise ParseError("parenthesised field values are only allowed inside [...]", p)
        else:
            break
        k4, v4, _ = toks.peek()
        if v4 == "*":
            toks.next()
            continue
        break
    if not saw:
        kind, v, p = toks.peek()
        raise ParseError(f"unexpected token {v!r} in symbol term", p)
    return MWExpr.word(field, eta, syms) * coeff
