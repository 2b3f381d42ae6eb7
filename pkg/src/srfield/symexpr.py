"""Exact-coefficient symbolic expressions over a coordinate catalog.

Expressions are trees of rational constants, coordinate atoms, sums, products
and integer powers (negative powers stand in for division).  The canonical
form produced by :func:`normalize` is a single quotient of two expanded,
coefficient-sorted polynomials, gcd-reduced, with a monic denominator; two
expressions are equivalent exactly when their difference normalizes to zero.
External scalar fields are opaque atoms carrying their declared base-variable
dependence; their formal derivatives stay symbolic.

Everything here is immutable and reentrant; there is no interning table or
other shared mutable state.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import chain
from typing import Callable, Mapping, Optional, Sequence

from .errors import (
    EvalDomainError,
    NormalizationError,
    ParseError,
    UsageError,
)
from .multiindex import MultiIndex, unit, zero

# ---------------------------------------------------------------------------
# Symbols

BASE, JET, MOMENTUM, PSCALAR, FIELD, AUX, JET1 = range(7)


class Sym:
    """A single coordinate / unknown, totally ordered and hashable.

    kind selects the family; the remaining fields are used as each family
    needs them (see the constructors below).  Ordering is (kind, name, fiber
    index, graded-lex multi-index, direction, second direction), which puts a
    catalog into the order x^i, u^a_J, p^{I,i}_a, p.
    """

    __slots__ = ("kind", "alpha", "index", "i", "name", "j", "deps", "_k", "_h")

    def __init__(self, kind, alpha=0, index=None, i=0, name="", j=0, deps=()):
        self.kind = kind
        self.alpha = alpha
        self.index = index
        self.i = i
        self.name = name
        self.j = j
        self.deps = tuple(deps)
        ikey = (-1, ()) if index is None else (sum(index), tuple(-c for c in index))
        self._k = (kind, name, alpha, ikey, i, j, self.deps)
        self._h = hash(self._k)

    def __eq__(self, other):
        return isinstance(other, Sym) and self._k == other._k

    def __hash__(self):
        return self._h

    def __lt__(self, other):
        return self._k < other._k

    def __le__(self, other):
        return self._k <= other._k

    def render(self) -> str:
        a = "" if self.alpha in (0, 1) else "@%d" % self.alpha
        if self.kind == BASE:
            return "x[%d]" % self.i
        if self.kind == JET:
            return "u[%s]%s" % (_idx_body(self.index), a)
        if self.kind == MOMENTUM:
            return "p[%s;%d]%s" % (_idx_body(self.index), self.i, a)
        if self.kind == PSCALAR:
            return "p"
        if self.kind == FIELD:
            if self.index is None or sum(self.index) == 0:
                return self.name
            return "%s[%s]" % (self.name, _idx_body(self.index))
        if self.kind == AUX:
            if self.name == "A":
                return "A[%d;%s;%d]" % (self.alpha, _idx_body(self.index), self.j)
            if self.name == "B":
                return "B[%s;%d;%d;%d]" % (_idx_body(self.index), self.i, self.alpha, self.j)
            if self.name == "C":
                return "C[%d]" % self.j
            return "%s[%d]" % (self.name, self.j)
        if self.kind == JET1:
            return "u[%s;%d]%s" % (_idx_body(self.index), self.i, a)
        raise UsageError("unknown symbol kind %r" % (self.kind,))

    def __repr__(self):
        return self.render()


def _idx_body(index) -> str:
    return ",".join(str(c) for c in index)


def base_sym(i: int) -> Sym:
    if i < 1:
        raise UsageError("base direction must be >= 1")
    return Sym(BASE, i=i)


def jet_sym(alpha: int, index: MultiIndex) -> Sym:
    return Sym(JET, alpha=alpha, index=index)


def mom_sym(alpha: int, index: MultiIndex, i: int) -> Sym:
    return Sym(MOMENTUM, alpha=alpha, index=index, i=i)


def p_sym() -> Sym:
    return Sym(PSCALAR)


def field_sym(name: str, index: MultiIndex, deps: Sequence[int]) -> Sym:
    return Sym(FIELD, index=index, name=name, deps=tuple(sorted(deps)))


def aux_a(alpha: int, index: MultiIndex, j: int) -> Sym:
    return Sym(AUX, alpha=alpha, index=index, name="A", j=j)


def aux_b(index: MultiIndex, i: int, alpha: int, j: int) -> Sym:
    return Sym(AUX, alpha=alpha, index=index, i=i, name="B", j=j)


def aux_c(j: int) -> Sym:
    return Sym(AUX, name="C", j=j)


def jet1_sym(alpha: int, index: MultiIndex, i: int) -> Sym:
    return Sym(JET1, alpha=alpha, index=index, i=i)


# ---------------------------------------------------------------------------
# Expression trees


class Expr:
    __slots__ = ("_canon",)

    def __init__(self):
        self._canon = False

    # arithmetic sugar
    def __add__(self, other):
        return eadd(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return eadd(self, eneg(as_expr(other)))

    def __rsub__(self, other):
        return eadd(as_expr(other), eneg(self))

    def __mul__(self, other):
        return emul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ediv(self, other)

    def __rtruediv__(self, other):
        return ediv(as_expr(other), self)

    def __pow__(self, n):
        return epow(self, n)

    def __neg__(self):
        return eneg(self)

    def __str__(self):
        return render(self)

    def __repr__(self):
        return render(self)


class Const(Expr):
    __slots__ = ("q",)

    def __init__(self, q):
        super().__init__()
        self.q = Fraction(q)

    def __eq__(self, other):
        return isinstance(other, Const) and self.q == other.q

    def __hash__(self):
        return hash(("C", self.q))


class Atom(Expr):
    __slots__ = ("sym",)

    def __init__(self, sym: Sym):
        super().__init__()
        self.sym = sym

    def __eq__(self, other):
        return isinstance(other, Atom) and self.sym == other.sym

    def __hash__(self):
        return hash(("X", self.sym))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple(terms)

    def __eq__(self, other):
        return isinstance(other, Add) and self.terms == other.terms

    def __hash__(self):
        return hash(("+",) + self.terms)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        super().__init__()
        self.factors = tuple(factors)

    def __eq__(self, other):
        return isinstance(other, Mul) and self.factors == other.factors

    def __hash__(self):
        return hash(("*",) + self.factors)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base, exp):
        super().__init__()
        self.base = base
        self.exp = int(exp)

    def __eq__(self, other):
        return isinstance(other, Pow) and self.exp == other.exp and self.base == other.base

    def __hash__(self):
        return hash(("^", self.base, self.exp))


ZERO = Const(0)
ONE = Const(1)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(x)
    if isinstance(x, Sym):
        return Atom(x)
    raise UsageError("cannot coerce %r to an expression" % (x,))


def eadd(*xs) -> Expr:
    terms = []
    const = Fraction(0)
    for x in xs:
        x = as_expr(x)
        if isinstance(x, Const):
            const += x.q
        elif isinstance(x, Add):
            for t in x.terms:
                if isinstance(t, Const):
                    const += t.q
                else:
                    terms.append(t)
        else:
            terms.append(x)
    if const:
        terms.append(Const(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(terms)


def emul(*xs) -> Expr:
    factors = []
    const = Fraction(1)
    for x in xs:
        x = as_expr(x)
        if isinstance(x, Const):
            const *= x.q
            if const == 0:
                return ZERO
        elif isinstance(x, Mul):
            for f in x.factors:
                if isinstance(f, Const):
                    const *= f.q
                else:
                    factors.append(f)
            if const == 0:
                return ZERO
        else:
            factors.append(x)
    if not factors:
        return Const(const)
    if const != 1:
        factors.insert(0, Const(const))
    if len(factors) == 1:
        return factors[0]
    return Mul(factors)


def eneg(x) -> Expr:
    return emul(Const(-1), as_expr(x))


def esub(a, b) -> Expr:
    return eadd(a, eneg(b))


def epow(b, n: int) -> Expr:
    b = as_expr(b)
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return b
    if isinstance(b, Const):
        if b.q == 0 and n < 0:
            raise NormalizationError("zero raised to a negative power")
        return Const(b.q ** n)
    if isinstance(b, Pow):
        return epow(b.base, b.exp * n)
    return Pow(b, n)


def ediv(a, b) -> Expr:
    return emul(as_expr(a), epow(as_expr(b), -1))


# ---------------------------------------------------------------------------
# Structural queries


def free_syms(e: Expr, out=None) -> set:
    if out is None:
        out = set()
    if isinstance(e, Atom):
        out.add(e.sym)
    elif isinstance(e, Add):
        for t in e.terms:
            free_syms(t, out)
    elif isinstance(e, Mul):
        for f in e.factors:
            free_syms(f, out)
    elif isinstance(e, Pow):
        free_syms(e.base, out)
    return out


def jet_order(e: Expr) -> int:
    """Highest |J| among jet atoms of e (0 when no jet appears)."""
    return max((sum(s.index) for s in free_syms(e) if s.kind == JET), default=0)


def is_syntactic_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.q == 0


# ---------------------------------------------------------------------------
# Formal partial derivative


def partial(e: Expr, s: Sym) -> Expr:
    """Formal partial derivative treating all other symbols as independent.

    External fields depend on their declared base variables only: the
    derivative of a field atom with respect to x^i is the next formal field
    derivative; with respect to anything else it vanishes.
    """
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Atom):
        a = e.sym
        if a == s:
            return ONE
        if a.kind == FIELD and s.kind == BASE and s.i in a.deps:
            return Atom(field_sym(a.name, a.index.bump(s.i), a.deps))
        return ZERO
    if isinstance(e, Add):
        return eadd(*[partial(t, s) for t in e.terms])
    if isinstance(e, Mul):
        parts = []
        for idx, f in enumerate(e.factors):
            df = partial(f, s)
            if is_syntactic_zero(df):
                continue
            parts.append(emul(*(list(e.factors[:idx]) + [df] + list(e.factors[idx + 1:]))))
        return eadd(*parts)
    if isinstance(e, Pow):
        db = partial(e.base, s)
        if is_syntactic_zero(db):
            return ZERO
        return emul(Const(e.exp), epow(e.base, e.exp - 1), db)
    raise UsageError("cannot differentiate %r" % (e,))


def substitute(e: Expr, mapping: Mapping[Sym, Expr]) -> Expr:
    if not mapping:
        return e
    if isinstance(e, Const):
        return e
    if isinstance(e, Atom):
        rep = mapping.get(e.sym)
        return e if rep is None else as_expr(rep)
    if isinstance(e, Add):
        return eadd(*[substitute(t, mapping) for t in e.terms])
    if isinstance(e, Mul):
        return emul(*[substitute(f, mapping) for f in e.factors])
    if isinstance(e, Pow):
        return epow(substitute(e.base, mapping), e.exp)
    raise UsageError("cannot substitute into %r" % (e,))


def substitute_fields(e: Expr, fields: Mapping[str, Expr]) -> Expr:
    """Replace field atoms by the matching derivative of the bound expression."""
    cache: dict[tuple[str, MultiIndex], Expr] = {}

    def deriv(name: str, index: MultiIndex) -> Expr:
        key = (name, index)
        if key not in cache:
            if sum(index) == 0:
                cache[key] = fields[name]
            else:
                i = next(ix + 1 for ix, c in enumerate(index) if c > 0)
                lower = index.sub_checked(unit(i, len(index)))
                cache[key] = partial(deriv(name, lower), base_sym(i))
        return cache[key]

    mapping = {}
    for s in free_syms(e):
        if s.kind == FIELD and s.name in fields:
            mapping[s] = deriv(s.name, s.index)
    return substitute(e, mapping)


# ---------------------------------------------------------------------------
# Flat polynomial arithmetic (monomial dict -> Fraction)
#
# A monomial is a tuple of (Sym, positive exponent) pairs sorted ascending by
# the symbol order.  Rational functions are (numerator, denominator) pairs of
# such dicts; the denominator of a canonical pair is monic with gcd 1 against
# the numerator.

_P_ONE_KEY: tuple = ()


def _p_one() -> dict:
    return {_P_ONE_KEY: Fraction(1)}


def _p_is_one(p: dict) -> bool:
    return len(p) == 1 and _P_ONE_KEY in p and p[_P_ONE_KEY] == 1


def _p_is_const(p: dict) -> bool:
    return not p or (len(p) == 1 and _P_ONE_KEY in p)


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    out = []
    ia = ib = 0
    while ia < len(a) and ib < len(b):
        sa, ea = a[ia]
        sb, eb = b[ib]
        if sa == sb:
            out.append((sa, ea + eb))
            ia += 1
            ib += 1
        elif sa < sb:
            out.append(a[ia])
            ia += 1
        else:
            out.append(b[ib])
            ib += 1
    out.extend(a[ia:])
    out.extend(b[ib:])
    return tuple(out)


def _p_add_into(acc: dict, p: dict, scale: Fraction = Fraction(1)) -> None:
    for mono, c in p.items():
        new = acc.get(mono, Fraction(0)) + c * scale
        if new:
            acc[mono] = new
        else:
            acc.pop(mono, None)


def _p_mul(a: dict, b: dict) -> dict:
    if not a or not b:
        return {}
    if _p_is_one(a):
        return dict(b)
    if _p_is_one(b):
        return dict(a)
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            key = _mono_mul(ma, mb)
            new = out.get(key, Fraction(0)) + ca * cb
            if new:
                out[key] = new
            else:
                del out[key]
    return out


def _p_pow(a: dict, n: int) -> dict:
    out = _p_one()
    base = a
    while n:
        if n & 1:
            out = _p_mul(out, base)
        n >>= 1
        if n:
            base = _p_mul(base, base)
    return out


def _p_scale(a: dict, c: Fraction) -> dict:
    if c == 1:
        return a
    return {m: v * c for m, v in a.items()}


def _mono_key(mono: tuple) -> tuple:
    return (sum(e for _, e in mono), tuple((s._k, e) for s, e in mono))


def _p_leading(p: dict) -> tuple:
    return max(p, key=_mono_key)


# --- multivariate gcd over Q (vectorized exponent form) ---


def _p_gcd(a: dict, b: dict) -> dict:
    """Monic gcd of two polynomials over Q; constants count as units."""
    if not a:
        return _p_monic(b)
    if not b:
        return _p_monic(a)
    if _p_is_const(a) or _p_is_const(b):
        return _p_one()
    syms = sorted({s for mono in chain(a, b) for s, _ in mono})
    pos = {s: ix for ix, s in enumerate(syms)}
    nv = len(syms)

    def to_vec(p: dict) -> dict:
        out = {}
        for mono, c in p.items():
            v = [0] * nv
            for s, e in mono:
                v[pos[s]] = e
            out[tuple(v)] = c
        return out

    gv = _gcd_vec(to_vec(a), to_vec(b), nv)
    out = {}
    for v, c in gv.items():
        mono = tuple((syms[ix], e) for ix, e in enumerate(v) if e)
        out[mono] = c
    return out


def _v_zero(nv: int) -> tuple:
    return (0,) * nv


def _v_is_const(p: dict) -> bool:
    return not p or all(not any(v) for v in p)


def _v_lead(p: dict) -> tuple:
    return max(p, key=lambda v: (sum(v), v))


def _v_monic(p: dict) -> dict:
    if not p:
        return p
    lc = p[_v_lead(p)]
    if lc == 1:
        return p
    return {v: c / lc for v, c in p.items()}


def _v_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for va, ca in a.items():
        for vb, cb in b.items():
            key = tuple(x + y for x, y in zip(va, vb))
            new = out.get(key, Fraction(0)) + ca * cb
            if new:
                out[key] = new
            else:
                del out[key]
    return out


def _v_add(a: dict, b: dict, scale=Fraction(1)) -> dict:
    out = dict(a)
    for v, c in b.items():
        new = out.get(v, Fraction(0)) + c * scale
        if new:
            out[v] = new
        else:
            out.pop(v, None)
    return out


def _v_divexact(a: dict, b: dict) -> dict:
    """Exact division a / b in vector form; raises if not exact."""
    if not a:
        return {}
    lb = _v_lead(b)
    cb = b[lb]
    q: dict = {}
    r = dict(a)
    while r:
        lr = _v_lead(r)
        dv = tuple(x - y for x, y in zip(lr, lb))
        if any(d < 0 for d in dv):
            raise NormalizationError("inexact polynomial division")
        qc = r[lr] / cb
        q[dv] = q.get(dv, Fraction(0)) + qc
        shifted = {tuple(x + y for x, y in zip(v, dv)): c * qc for v, c in b.items()}
        r = _v_add(r, shifted, Fraction(-1))
    return q


def _gcd_vec(a: dict, b: dict, nv: int) -> dict:
    if not a:
        return _v_monic(b)
    if not b:
        return _v_monic(a)
    if _v_is_const(a) or _v_is_const(b):
        return {_v_zero(nv): Fraction(1)}
    main = max(
        ix
        for ix in range(nv)
        if any(v[ix] for v in a) or any(v[ix] for v in b)
    )

    def to_univ(p: dict) -> dict:
        out: dict = {}
        for v, c in p.items():
            d = v[main]
            vv = v[:main] + (0,) + v[main + 1:]
            out.setdefault(d, {})[vv] = c
        return out

    def content(u: dict) -> dict:
        g: dict = {}
        for coeff in u.values():
            g = _gcd_vec(g, coeff, nv)
            if _v_is_const(g) and g:
                return {_v_zero(nv): Fraction(1)}
        return g if g else {_v_zero(nv): Fraction(1)}

    def divide_univ(u: dict, d: dict) -> dict:
        return {deg: _v_divexact(coeff, d) for deg, coeff in u.items()}

    def prem(f: dict, g: dict) -> dict:
        df, dg = max(f), max(g)
        lg = g[dg]
        r = {d: dict(c) for d, c in f.items()}
        while r and max(r) >= dg:
            dr = max(r)
            lr = r.pop(dr)
            scaled = {d: _v_mul(c, lg) for d, c in r.items()}
            sub = {d + dr - dg: _v_mul(c, lr) for d, c in g.items() if d != dg}
            r = {}
            for d in set(scaled) | set(sub):
                c = _v_add(scaled.get(d, {}), sub.get(d, {}), Fraction(-1))
                if c:
                    r[d] = c
        return r

    fu, gu = to_univ(a), to_univ(b)
    cf, cg = content(fu), content(gu)
    c = _gcd_vec(cf, cg, nv)
    fp = divide_univ(fu, cf)
    gp = divide_univ(gu, cg)
    if max(fp) < max(gp):
        fp, gp = gp, fp
    while gp:
        r = prem(fp, gp)
        if r:
            r = divide_univ(r, content(r))
        fp, gp = gp, r

    flat: dict = {}
    for d, coeff in fp.items():
        for v, cc in coeff.items():
            key = v[:main] + (d,) + v[main + 1:]
            flat[key] = cc
    return _v_monic(_v_mul(flat, c))


def _p_monic(p: dict) -> dict:
    if not p:
        return {}
    lc = p[_p_leading(p)]
    return _p_scale(p, Fraction(1) / lc) if lc != 1 else dict(p)


def _p_divexact(a: dict, b: dict) -> dict:
    if _p_is_one(b):
        return dict(a)
    if not a:
        return {}
    syms = sorted({s for mono in chain(a, b) for s, _ in mono})
    pos = {s: ix for ix, s in enumerate(syms)}
    nv = len(syms)

    def to_vec(p):
        out = {}
        for mono, c in p.items():
            v = [0] * nv
            for s, e in mono:
                v[pos[s]] = e
            out[tuple(v)] = c
        return out

    qv = _v_divexact(to_vec(a), to_vec(b))
    out = {}
    for v, c in qv.items():
        out[tuple((syms[ix], e) for ix, e in enumerate(v) if e)] = c
    return out


def _mono_content(p: dict) -> dict:
    """Largest monomial dividing every term of p (exponent-wise minimum)."""
    mins: dict = None
    for mono in p:
        cur = dict(mono)
        if mins is None:
            mins = cur
        else:
            mins = {s: min(e, cur[s]) for s, e in mins.items() if s in cur}
        if not mins:
            return {}
    return mins or {}


def _rat_reduce(num: dict, den: dict) -> tuple[dict, dict]:
    if not den:
        raise NormalizationError("division by an identically zero expression")
    if not num:
        return {}, _p_one()
    if _p_is_const(den):
        return _p_scale(num, Fraction(1) / den[_P_ONE_KEY]), _p_one()
    # joint monomial content
    cn, cd = _mono_content(num), _mono_content(den)
    common = {s: min(e, cd[s]) for s, e in cn.items() if s in cd}
    if common:
        mono = tuple(sorted(common.items(), key=lambda it: it[0]._k))
        div = {mono: Fraction(1)}
        num = _p_divexact(num, div)
        den = _p_divexact(den, div)
    if _p_is_const(den):
        return _p_scale(num, Fraction(1) / den[_P_ONE_KEY]), _p_one()
    if len(den) > 1:
        g = _p_gcd(num, den)
        if not _p_is_const(g):
            num = _p_divexact(num, g)
            den = _p_divexact(den, g)
    if _p_is_const(den):
        return _p_scale(num, Fraction(1) / den[_P_ONE_KEY]), _p_one()
    lc = den[_p_leading(den)]
    if lc != 1:
        inv = Fraction(1) / lc
        num = _p_scale(num, inv)
        den = _p_scale(den, inv)
    return num, den


def _to_rat(e: Expr) -> tuple[dict, dict]:
    if isinstance(e, Const):
        return ({_P_ONE_KEY: e.q} if e.q else {}), _p_one()
    if isinstance(e, Atom):
        return {((e.sym, 1),): Fraction(1)}, _p_one()
    if isinstance(e, Add):
        num: dict = {}
        den = _p_one()
        for t in e.terms:
            nt, dt = _to_rat(t)
            if dt == den:
                _p_add_into(num, nt)
            elif _p_is_one(dt):
                _p_add_into(num, _p_mul(nt, den))
            elif _p_is_one(den):
                num = _p_add(_p_mul(num, dt), nt)
                den = dt
            else:
                num = _p_add(_p_mul(num, dt), _p_mul(nt, den))
                den = _p_mul(den, dt)
        return num, den
    if isinstance(e, Mul):
        num = _p_one()
        den = _p_one()
        for f in e.factors:
            nf, df = _to_rat(f)
            num = _p_mul(num, nf)
            den = _p_mul(den, df) if not _p_is_one(df) else den
            if not num:
                return {}, _p_one()
        return num, den
    if isinstance(e, Pow):
        nb, db = _to_rat(e.base)
        n = e.exp
        if n < 0:
            if not nb:
                raise NormalizationError("division by an identically zero expression")
            nb, db = db, nb
            n = -n
        return _p_pow(nb, n), _p_pow(db, n)
    raise UsageError("cannot normalize %r" % (e,))


def _p_add(a: dict, b: dict) -> dict:
    out = dict(a)
    _p_add_into(out, b)
    return out


def _poly_to_expr(p: dict) -> Expr:
    if not p:
        return Const(0)
    terms = []
    for mono in sorted(p, key=_mono_key, reverse=True):
        c = p[mono]
        factors: list[Expr] = []
        for s, e in mono:
            factors.append(Atom(s) if e == 1 else Pow(Atom(s), e))
        if not factors:
            terms.append(Const(c))
        elif c == 1:
            terms.append(factors[0] if len(factors) == 1 else Mul(factors))
        else:
            terms.append(Mul([Const(c)] + factors))
    return terms[0] if len(terms) == 1 else Add(terms)


def _rat_to_expr(num: dict, den: dict) -> Expr:
    ne = _poly_to_expr(num)
    if _p_is_one(den):
        return ne
    de = _poly_to_expr(den)
    return Mul([ne, Pow(de, -1)])


def normalize(e: Expr) -> Expr:
    """Canonical quotient form; idempotent, exact, deterministic."""
    if e._canon:
        return e
    num, den = _rat_reduce(*_to_rat(e))
    out = _rat_to_expr(num, den)
    out._canon = True
    return out


def is_zero(e: Expr) -> bool:
    nf = normalize(e)
    return isinstance(nf, Const) and nf.q == 0


def equivalence(a: Expr, b: Expr) -> tuple[bool, str]:
    """Decide a == b, returning (verdict, certificate kind).

    The symbolic route is complete for this algebra; the numeric fallback
    (agreement at >= 20 random rational points, tolerance 1e-9) only runs when
    normalization itself fails, and its weaker certificate is reported.
    """
    try:
        return is_zero(esub(a, b)), "symbolic"
    except NormalizationError:
        return _numeric_probe(esub(a, b)), "numeric"


def equivalent(a: Expr, b: Expr) -> bool:
    return equivalence(a, b)[0]


def _numeric_probe(diff: Expr, trials: int = 20, tol: float = 1e-9) -> bool:
    rng = random.Random("srfield-equivalence-probe")
    syms = sorted(free_syms(diff))
    done = 0
    attempts = 0
    while done < trials:
        attempts += 1
        if attempts > 50 * trials:
            raise EvalDomainError("could not find enough regular sample points")
        point = {s: rng.randint(100, 200) / 100.0 for s in syms}
        try:
            v = evaluate(diff, point)
        except (EvalDomainError, ZeroDivisionError, OverflowError):
            continue
        if abs(v) > tol * (1.0 + abs(v)):
            return False
        done += 1
    return True


# ---------------------------------------------------------------------------
# Numeric evaluation


def evaluate(e: Expr, point: Mapping, fields: Optional[Mapping[str, Expr]] = None) -> float:
    """IEEE double value of e at the given assignment.

    point maps symbols (or their rendered names) to numbers; fields optionally
    binds external field names to expressions in the base variables.
    """
    if fields:
        e = substitute_fields(e, fields)
    values: dict[Sym, float] = {}
    by_name: dict[str, float] = {}
    for key, val in point.items():
        if isinstance(key, Sym):
            values[key] = float(val)
        else:
            by_name[str(key)] = float(val)

    def look(sym: Sym) -> float:
        if sym in values:
            return values[sym]
        name = sym.render()
        if name in by_name:
            return by_name[name]
        raise EvalDomainError("no value assigned to %s" % name)

    def rec(x: Expr) -> float:
        if isinstance(x, Const):
            return float(x.q)
        if isinstance(x, Atom):
            return look(x.sym)
        if isinstance(x, Add):
            return sum(rec(t) for t in x.terms)
        if isinstance(x, Mul):
            out = 1.0
            for f in x.factors:
                out *= rec(f)
            return out
        if isinstance(x, Pow):
            base = rec(x.base)
            if base == 0.0 and x.exp < 0:
                raise EvalDomainError("division by zero in %s" % render(x))
            return base ** x.exp
        raise UsageError("cannot evaluate %r" % (x,))

    return rec(e)


def compile_expr(e: Expr, syms: Sequence[Sym]) -> Callable[[Sequence[float]], float]:
    """Compile e to a fast callable over a positional value vector.

    The expression must be free of field atoms (bind fields first); symbols
    not listed raise at compile time.
    """
    pos = {s: ix for ix, s in enumerate(syms)}

    def emit(x: Expr) -> str:
        if isinstance(x, Const):
            if x.q.denominator == 1:
                return "(%d.0)" % x.q.numerator
            return "(%r)" % float(x.q)
        if isinstance(x, Atom):
            if x.sym not in pos:
                raise UsageError("symbol %s not in compile scope" % x.sym.render())
            return "v[%d]" % pos[x.sym]
        if isinstance(x, Add):
            return "(" + "+".join(emit(t) for t in x.terms) + ")"
        if isinstance(x, Mul):
            return "(" + "*".join(emit(f) for f in x.factors) + ")"
        if isinstance(x, Pow):
            return "(%s**%d)" % (emit(x.base), x.exp)
        raise UsageError("cannot compile %r" % (x,))

    return eval("lambda v: " + emit(e), {"__builtins__": {}})


# ---------------------------------------------------------------------------
# Rendering


def _is_simple(e: Expr) -> bool:
    return isinstance(e, Atom) or (isinstance(e, Const) and e.q >= 0)


def _render_factor(e: Expr) -> str:
    if isinstance(e, (Add,)) or (isinstance(e, Const) and e.q < 0):
        return "(" + render(e) + ")"
    if isinstance(e, Mul):
        return "(" + render(e) + ")"
    return render(e)


def _split_sign(e: Expr) -> tuple[int, Expr]:
    if isinstance(e, Const) and e.q < 0:
        return -1, Const(-e.q)
    if isinstance(e, Mul) and e.factors and isinstance(e.factors[0], Const) and e.factors[0].q < 0:
        first = Const(-e.factors[0].q)
        rest = list(e.factors[1:])
        if first.q == 1 and rest:
            return -1, (rest[0] if len(rest) == 1 else Mul(rest))
        return -1, Mul([first] + rest)
    return 1, e


def render(e: Expr) -> str:
    """Deterministic text form; canonical expressions re-parse to equal values."""
    if isinstance(e, Const):
        return str(e.q)
    if isinstance(e, Atom):
        return e.sym.render()
    if isinstance(e, Add):
        parts = []
        for ix, t in enumerate(e.terms):
            sign, mag = _split_sign(t)
            txt = render(mag) if not isinstance(mag, Add) else "(" + render(mag) + ")"
            if ix == 0:
                parts.append(("-" if sign < 0 else "") + txt)
            else:
                parts.append((" - " if sign < 0 else " + ") + txt)
        return "".join(parts)
    if isinstance(e, Mul):
        num_parts: list[str] = []
        den_parts: list[str] = []
        neg = False
        for f in e.factors:
            if isinstance(f, Const):
                q = f.q
                if q < 0:
                    neg = not neg
                    q = -q
                if q != 1 or len(e.factors) == 1:
                    num_parts.append(str(q))
            elif isinstance(f, Pow) and f.exp < 0:
                inner = epow(f.base, -f.exp)
                den_parts.append(_render_factor(inner) if not isinstance(inner, Pow)
                                 else render(inner) if isinstance(inner.base, Atom)
                                 else "(" + render(inner.base) + ")^" + str(inner.exp))
            else:
                num_parts.append(_render_factor(f))
        num = "*".join(num_parts) if num_parts else "1"
        out = num
        if den_parts:
            den = den_parts[0] if len(den_parts) == 1 else "(" + "*".join(den_parts) + ")"
            out = "%s/%s" % (num, den)
        return ("-" if neg else "") + out
    if isinstance(e, Pow):
        base = e.base
        btxt = render(base) if isinstance(base, (Atom,)) else "(" + render(base) + ")"
        return "%s^%d" % (btxt, e.exp)
    raise UsageError("cannot render %r" % (e,))


# ---------------------------------------------------------------------------
# Parsing

_PUNCT = ("+", "-", "*", "/", "^", "(", ")", "[", "]", ",", "@", ";", "=")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, object, int]] = []
        self._lex()
        self.ix = 0

    def _lex(self):
        t = self.text
        i = 0
        while i < len(t):
            c = t[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit():
                j = i
                while j < len(t) and t[j].isdigit():
                    j += 1
                self.tokens.append(("num", int(t[i:j]), i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < len(t) and (t[j].isalnum() or t[j] == "_"):
                    j += 1
                self.tokens.append(("ident", t[i:j], i))
                i = j
                continue
            if c in _PUNCT:
                self.tokens.append((c, c, i))
                i += 1
                continue
            raise ParseError("unexpected character %r" % c, i)
        self.tokens.append(("end", None, len(t)))

    def peek(self):
        return self.tokens[self.ix]

    def next(self):
        tok = self.tokens[self.ix]
        self.ix += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError("expected %r, found %r" % (kind, tok[1]), tok[2])
        return tok


def _parse_nat_list(lx: _Lexer) -> list[int]:
    out = [lx.expect("num")[1]]
    while lx.peek()[0] == ",":
        lx.next()
        out.append(lx.expect("num")[1])
    return out


def _parse_fiber(lx: _Lexer, n: int) -> int:
    if lx.peek()[0] == "@":
        lx.next()
        tok = lx.expect("num")
        alpha = tok[1]
        if not 1 <= alpha <= n:
            raise ParseError("fiber index %d out of range 1..%d" % (alpha, n), tok[2])
        return alpha
    return 1


def _parse_base(lx: _Lexer, catalog) -> Expr:
    tok = lx.next()
    kind, val, pos = tok
    if kind == "num":
        return Const(val)
    if kind == "(":
        e = _parse_expr(lx, catalog)
        lx.expect(")")
        return e
    if kind == "ident":
        name = val
        if name == "u" and lx.peek()[0] == "[":
            lx.next()
            comps = _parse_nat_list(lx)
            lx.expect("]")
            if len(comps) != catalog.m:
                raise ParseError(
                    "jet multi-index %s has %d slots, catalog needs %d"
                    % (comps, len(comps), catalog.m), pos)
            index = MultiIndex(comps)
            if index.order > catalog.jet_order:
                raise ParseError(
                    "jet order %d exceeds catalog order %d" % (index.order, catalog.jet_order),
                    pos)
            alpha = _parse_fiber(lx, catalog.n)
            return Atom(jet_sym(alpha, index))
        if name == "x" and lx.peek()[0] == "[":
            lx.next()
            tok2 = lx.expect("num")
            lx.expect("]")
            if not 1 <= tok2[1] <= catalog.m:
                raise ParseError("base index %d out of range 1..%d" % (tok2[1], catalog.m),
                                 tok2[2])
            return Atom(base_sym(tok2[1]))
        if name in catalog.fields:
            return Atom(field_sym(name, zero(catalog.m), catalog.fields[name]))
        raise ParseError("unknown coordinate or undeclared field %r" % name, pos)
    raise ParseError("unexpected token %r" % (val,), pos)


def _parse_factor(lx: _Lexer, catalog) -> Expr:
    base = _parse_base(lx, catalog)
    if lx.peek()[0] == "^":
        lx.next()
        sign = 1
        if lx.peek()[0] == "-":
            lx.next()
            sign = -1
        tok = lx.expect("num")
        return epow(base, sign * tok[1])
    return base


def _parse_term(lx: _Lexer, catalog) -> Expr:
    e = _parse_factor(lx, catalog)
    while lx.peek()[0] in ("*", "/"):
        op = lx.next()[0]
        rhs = _parse_factor(lx, catalog)
        e = emul(e, rhs) if op == "*" else ediv(e, rhs)
    return e


def _parse_expr(lx: _Lexer, catalog) -> Expr:
    neg = False
    if lx.peek()[0] == "-":
        lx.next()
        neg = True
    e = _parse_term(lx, catalog)
    if neg:
        e = eneg(e)
    while lx.peek()[0] in ("+", "-"):
        op = lx.next()[0]
        rhs = _parse_term(lx, catalog)
        e = eadd(e, rhs) if op == "+" else esub(e, rhs)
    return e


def parse(text: str, catalog) -> Expr:
    """Parse an expression against a coordinate catalog.

    Grammar: expr := ['-'] term (('+'|'-') term)*; term := factor (('*'|'/')
    factor)*; factor := base ('^' ['-'] nat)?; base := nat | ident |
    'u' '[' nat (',' nat)* ']' ('@' nat)? | 'x' '[' nat ']' | '(' expr ')'.
    Identifiers must be fields declared in the catalog.
    """
    lx = _Lexer(text)
    e = _parse_expr(lx, catalog)
    tok = lx.peek()
    if tok[0] != "end":
        raise ParseError("trailing input %r" % (tok[1],), tok[2])
    return e


def parse_coordinate_name(text: str, catalog) -> Sym:
    """Resolve a rendered coordinate name (x[i], u[J](@a), p[I;i](@a), p, field)."""
    lx = _Lexer(text)
    kind, val, pos = lx.next()
    if kind != "ident":
        raise ParseError("coordinate name expected", pos)
    if val == "p":
        if lx.peek()[0] == "[":
            lx.next()
            comps = _parse_nat_list(lx)
            lx.expect(";")
            i = lx.expect("num")[1]
            lx.expect("]")
            alpha = _parse_fiber(lx, catalog.n)
            sym = mom_sym(alpha, MultiIndex(comps), i)
        else:
            sym = p_sym()
    elif val == "u":
        lx.expect("[")
        comps = _parse_nat_list(lx)
        lx.expect("]")
        alpha = _parse_fiber(lx, catalog.n)
        sym = jet_sym(alpha, MultiIndex(comps))
    elif val == "x":
        lx.expect("[")
        i = lx.expect("num")[1]
        lx.expect("]")
        sym = base_sym(i)
    elif val in catalog.fields:
        sym = field_sym(val, zero(catalog.m), catalog.fields[val])
    else:
        raise ParseError("unknown coordinate %r" % val, pos)
    if lx.peek()[0] != "end":
        raise ParseError("trailing input in coordinate name", lx.peek()[2])
    if not catalog.contains(sym) and sym.kind != FIELD:
        raise ParseError("coordinate %s not in catalog" % sym.render(), 0)
    return sym
