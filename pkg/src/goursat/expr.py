"""Canonical symbolic expressions over Q.

An expression is a reduced fraction num/den of sparse polynomials whose
variables are *atoms*: chart symbols, exp(m), sin(u), cos(u) and ln(u).
Normalization rules:

* exp atoms carry rational (possibly negative) exponents and are units,
  so exp(a + b) = exp(a) * exp(b) and exp(x)*exp(-x) = 1;
* sin(u)^2 is rewritten as 1 - cos(u)^2, so every numerator is at most
  linear in each sine;
* denominators never contain sines (multiplied out with the conjugate);
* num and den are coprime, and den is normalized by its leading term.

With these rules equal canonical forms mean equal functions for the
supported fragment, and the zero test is exact.
"""
from __future__ import annotations

import itertools
import math
import re
import threading
from fractions import Fraction
from typing import Iterable, Mapping

import flint
from gmpy2 import mpq

SYM, EXP, SIN, COS, LN = range(5)
_KIND_NAMES = ("sym", "exp", "sin", "cos", "ln")

_ONE = mpq(1)
_ZERO = mpq(0)


class ExprError(ValueError):
    pass


class SingularPointError(ArithmeticError):
    """Raised by numeric evaluation at a point where a denominator vanishes."""

    def __init__(self, message: str, expression: str = ""):
        super().__init__(message)
        self.expression = expression


def natural_key(name: str) -> tuple:
    parts = re.split(r"(\d+)", name)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts))


# ---------------------------------------------------------------- atoms


class Atom:
    __slots__ = ("kind", "name", "arg", "id", "key", "free", "_dcache")

    def __init__(self, kind, name, arg, ident):
        self.kind = kind
        self.name = name
        self.arg = arg
        self.id = ident
        if kind == SYM:
            self.key = (0, natural_key(name))
            self.free = frozenset((name,))
        else:
            self.key = (1, kind, str(arg))
            self.free = arg.free_symbols
        self._dcache = {}

    def __repr__(self):
        if self.kind == SYM:
            return self.name
        return f"{_KIND_NAMES[self.kind]}({self.arg})"


_atom_lock = threading.Lock()
_atoms: dict = {}
_atom_ids = itertools.count()


def _atom(kind, payload) -> Atom:
    k = (kind, payload)
    a = _atoms.get(k)
    if a is not None:
        return a
    with _atom_lock:
        a = _atoms.get(k)
        if a is None:
            if kind == SYM:
                a = Atom(kind, payload, None, next(_atom_ids))
            else:
                a = Atom(kind, None, payload, next(_atom_ids))
            _atoms[k] = a
    return a


# ---------------------------------------------------------- polynomials
# A polynomial is a dict {monomial: mpq}; a monomial is a tuple of
# (atom, exponent) pairs sorted by atom.id.

_UNIT = ()
_P_ONE = {_UNIT: _ONE}


def _mono_mul(a, b):
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x, y = a[i], b[j]
        ax, ay = x[0], y[0]
        if ax is ay:
            e = x[1] + y[1]
            if e:
                out.append((ax, e))
            i += 1
            j += 1
        elif ax.id < ay.id:
            out.append(x)
            i += 1
        else:
            out.append(y)
            j += 1
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return tuple(out)


def _mono_inv(m):
    return tuple((a, -e) for a, e in m)


def _padd(a, b, scale=_ONE):
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, _ZERO) + c * scale
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pscale(a, c):
    if c == 1:
        return a
    return {m: v * c for m, v in a.items()}


def _pmul_mono(a, mono, c=_ONE):
    return {_mono_mul(m, mono): v * c for m, v in a.items()}


def _has_sin_sq(m):
    for a, e in m:
        if a.kind == SIN and e >= 2:
            return True
    return False


def _trig_reduce(p):
    bad = [m for m in p if _has_sin_sq(m)]
    if not bad:
        return p
    out = {m: c for m, c in p.items() if not _has_sin_sq(m)}
    work = [(m, p[m]) for m in bad]
    while work:
        m, c = work.pop()
        for idx, (a, e) in enumerate(m):
            if a.kind == SIN and e >= 2:
                break
        rest = m[:idx] + (((a, e - 2),) if e > 2 else ()) + m[idx + 1:]
        cos_a = _atom(COS, a.arg)
        for mm, cc in ((rest, c), (_mono_mul(rest, ((cos_a, 2),)), -c)):
            if _has_sin_sq(mm):
                work.append((mm, cc))
            else:
                v = out.get(mm, _ZERO) + cc
                if v:
                    out[mm] = v
                else:
                    out.pop(mm, None)
    return out


def _pmul(a, b):
    if len(a) > len(b):
        a, b = b, a
    if len(a) == 1:
        (m, c), = a.items()
        if not m:
            return _pscale(b, c)
    if len(a) * len(b) > 400:
        out = _flint_mul(a, b)
        return _trig_reduce(out) if _poly_has_sin_sq(out) else out
    out = {}
    get = out.get
    trig = False
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = _mono_mul(ma, mb)
            v = get(m, _ZERO) + ca * cb
            if v:
                out[m] = v
            else:
                del out[m]
    for m in out:
        for at, e in m:
            if at.kind == SIN and e >= 2:
                trig = True
                break
        if trig:
            break
    return _trig_reduce(out) if trig else out


def _poly_has_sin_sq(p):
    return any(_has_sin_sq(m) for m in p)


def _is_const_poly(p):
    return len(p) == 0 or (len(p) == 1 and _UNIT in p)


def _poly_atoms(*polys):
    s = set()
    for p in polys:
        for m in p:
            for a, _ in m:
                s.add(a)
    return s


def _lead_mono(p):
    """Leading monomial in lex order on exponent vectors (atoms by key).

    Exp exponents count negatively so normalized denominators prefer
    non-negative exp powers.
    """
    atoms = sorted(_poly_atoms(p), key=lambda a: a.key)
    best = None
    best_v = None
    for m in p:
        d = dict(m)
        v = tuple(-d.get(a, 0) if a.kind == EXP else d.get(a, 0) for a in atoms)
        if best_v is None or v > best_v:
            best, best_v = m, v
    return best


def _exp_part(m):
    return tuple((a, e) for a, e in m if a.kind == EXP)


# -------------------------------------------------------- flint bridge


def _lcm(a, b):
    return a * b // math.gcd(a, b)


class _FlintFrame:
    """Atoms of some polynomials as flint variables; exp exponents scaled to integers."""

    def __init__(self, *polys):
        self.atoms = sorted(_poly_atoms(*polys), key=lambda a: a.id)
        self.idx = {a: i for i, a in enumerate(self.atoms)}
        n = self.n = len(self.atoms)
        self.scale = [1] * n
        for p in polys:
            for m in p:
                for a, e in m:
                    if a.kind == EXP and not isinstance(e, int):
                        i = self.idx[a]
                        self.scale[i] = _lcm(self.scale[i], int(mpq(e).denominator))
        self.ctx = flint.fmpq_mpoly_ctx.get(tuple(f"v{i}" for i in range(max(n, 1))), "lex")

    def to_flint(self, p):
        """(flint poly, shift): exp atoms may carry negative powers, shifted out."""
        n, idx, scale = self.n, self.idx, self.scale
        shift = [0] * max(n, 1)
        rows = []
        for m, c in p.items():
            v = [0] * max(n, 1)
            for a, e in m:
                i = idx[a]
                v[i] = int(e * scale[i])
            rows.append((v, c))
        for i, a in enumerate(self.atoms):
            if a.kind == EXP:
                shift[i] = min(v[i] for v, _ in rows)
        d = {}
        for v, c in rows:
            key = tuple(v[i] - shift[i] for i in range(len(v)))
            d[key] = flint.fmpq(int(c.numerator), int(c.denominator))
        return self.ctx.from_dict(d), shift

    def back(self, q, shift):
        out = {}
        atoms, scale = self.atoms, self.scale
        for key, c in q.to_dict().items():
            m = []
            for i, k in enumerate(key):
                k = int(k) + shift[i]
                if k:
                    e = mpq(k, scale[i]) if scale[i] != 1 else k
                    if isinstance(e, type(_ONE)) and e.denominator == 1:
                        e = int(e)
                    m.append((atoms[i], e))
            out[tuple(m)] = mpq(int(c.p), int(c.q))
        return out


def _flint_mul(a, b):
    fr = _FlintFrame(a, b)
    fa, sa = fr.to_flint(a)
    fb, sb = fr.to_flint(b)
    return fr.back(fa * fb, [x + y for x, y in zip(sa, sb)])


def _flint_cancel(num, den):
    """Return num/g, den/g with g = gcd(num, den), treating exp atoms as units."""
    fr = _FlintFrame(num, den)
    fn, sn = fr.to_flint(num)
    fd, sd = fr.to_flint(den)
    g = fn.gcd(fd)
    if g.is_one():
        return num, den
    return fr.back(fn / g, sn), fr.back(fd / g, sd)


# --------------------------------------------------------- expressions


def _poly_hash(p):
    return hash(frozenset(p.items()))


class Expression:
    """Immutable canonical rational expression. Build via the module helpers."""

    __slots__ = ("num", "den", "_hash", "_str", "_free")

    def __init__(self, num, den=None):
        self.num = num
        self.den = _P_ONE if den is None else den
        self._hash = None
        self._str = None
        self._free = None

    # -- basic predicates
    def is_zero(self) -> bool:
        return not self.num

    def is_constant(self) -> bool:
        return _is_const_poly(self.num) and _is_const_poly(self.den)

    def is_polynomial(self) -> bool:
        return self.den is _P_ONE or (len(self.den) == 1 and _UNIT in self.den)

    def constant_value(self):
        """Rational value of a constant expression, or None."""
        if not self.is_constant():
            return None
        if not self.num:
            return Fraction(0)
        c = self.num[_UNIT]
        return Fraction(int(c.numerator), int(c.denominator))

    @property
    def free_symbols(self) -> frozenset:
        if self._free is None:
            s = set()
            for p in (self.num, self.den):
                for m in p:
                    for a, _ in m:
                        s |= a.free
            self._free = frozenset(s)
        return self._free

    def n_terms(self) -> int:
        return len(self.num) + (0 if self.is_polynomial() else len(self.den))

    # -- equality and hashing
    def __eq__(self, other):
        if not isinstance(other, Expression):
            try:
                other = as_expr(other)
            except TypeError:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((_poly_hash(self.num), _poly_hash(self.den)))
        return self._hash

    def __bool__(self):
        return bool(self.num)

    # -- arithmetic
    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den is _P_ONE and other.den is _P_ONE:
            return _from_poly(_padd(self.num, other.num))
        if self.den == other.den:
            return _canon(_padd(self.num, other.num), self.den)
        n = _padd(_pmul(self.num, other.den), _pmul(other.num, self.den))
        return _canon(n, _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return Expression({m: -c for m, c in self.num.items()}, self.den)

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not self.num or not other.num:
            return ZERO
        if self.den is _P_ONE and other.den is _P_ONE:
            return _from_poly(_pmul(self.num, other.num))
        return _canon(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not other.num:
            raise ZeroDivisionError("division by the zero expression")
        if not self.num:
            return ZERO
        return _canon(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ExprError("only integer exponents are supported")
        if n < 0:
            return ONE / (self ** (-n))
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- calculus and evaluation
    def diff(self, name: str) -> "Expression":
        return differentiate(self, name)

    def subs(self, mapping: Mapping[str, "Expression"]) -> "Expression":
        return substitute(self, mapping)

    def eval(self, point: Mapping[str, float]) -> float:
        return eval_numeric(self, point)

    def __str__(self):
        if self._str is None:
            self._str = _format(self)
        return self._str

    def __repr__(self):
        return f"Expression({str(self)!r})"


def _from_poly(p):
    return Expression(p, _P_ONE) if p else ZERO


def _coerce(x):
    if isinstance(x, Expression):
        return x
    try:
        return as_expr(x)
    except TypeError:
        return None


def as_expr(x) -> Expression:
    if isinstance(x, Expression):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not an expression")
    if isinstance(x, (int, Fraction)) or type(x) is type(_ONE):
        q = mpq(x) if not isinstance(x, Fraction) else mpq(x.numerator, x.denominator)
        return Expression({_UNIT: q}) if q else ZERO
    raise TypeError(f"cannot convert {type(x).__name__} to Expression")


def const(value) -> Expression:
    return as_expr(value)


def symbol(name: str) -> Expression:
    return Expression({((_atom(SYM, name), 1),): _ONE})


ZERO = Expression({}, _P_ONE)
ONE = Expression({_UNIT: _ONE}, _P_ONE)


def _rationalize_sines(num, den):
    while True:
        sins = [a for a in _poly_atoms(den) if a.kind == SIN]
        if not sins:
            return num, den
        s = min(sins, key=lambda a: a.key)
        conj = {}
        for m, c in den.items():
            if any(a is s for a, _ in m):
                conj[m] = -c
            else:
                conj[m] = c
        num = _pmul(num, conj)
        den = _pmul(den, conj)


def _canon(num, den) -> Expression:
    if not num:
        return ZERO
    if not den:
        raise ZeroDivisionError("zero denominator")
    if len(den) == 1:
        (m, c), = den.items()
        if not m:
            return Expression(_pscale(num, 1 / c) if c != 1 else num, _P_ONE)
    num, den = _rationalize_sines(num, den)
    if len(den) == 1:
        (m, c), = den.items()
        # exp factors are units; move them to the numerator
        ex = _exp_part(m)
        rest = tuple(p for p in m if p[0].kind != EXP)
        num = _pmul_mono(num, _mono_inv(ex), 1 / c) if (ex or c != 1) else num
        if not rest:
            return Expression(num, _P_ONE)
        # cancel the monomial gcd
        common = []
        for a, e in rest:
            k = e
            for mm in num:
                f = 0
                for b, eb in mm:
                    if b is a:
                        f = eb
                        break
                if f < k:
                    k = f
                    if k == 0:
                        break
            if k:
                common.append((a, k))
        if common:
            inv = _mono_inv(tuple(common))
            num = _pmul_mono(num, inv)
            rest = _mono_mul(rest, inv)
        if not rest:
            return Expression(num, _P_ONE)
        return Expression(num, {rest: _ONE})
    num, den = _flint_cancel(num, den)
    lead = _lead_mono(den)
    c = den[lead]
    ex = _exp_part(lead)
    if ex or c != 1:
        inv = _mono_inv(ex)
        num = _pmul_mono(num, inv, 1 / c)
        den = _pmul_mono(den, inv, 1 / c)
    if _is_const_poly(den):
        return Expression(_pscale(num, 1 / den[_UNIT]), _P_ONE)
    return Expression(num, den)


def _lead_coeff(e: Expression):
    return e.num[_lead_mono(e.num)]


# ---------------------------------------------------------- kernels


def exp(w) -> Expression:
    w = as_expr(w)
    if not w.num:
        return ONE
    if w.den is _P_ONE:
        mono = _UNIT
        for m, c in w.num.items():
            base = Expression({m: _ONE}) if m else ONE
            e = int(c) if c.denominator == 1 else c
            mono = _mono_mul(mono, ((_atom(EXP, base), e),))
        return Expression({mono: _ONE})
    c = _lead_coeff(w)
    base = w / as_expr(c)
    e = int(c) if c.denominator == 1 else c
    return Expression({((_atom(EXP, base), e),): _ONE})


def _signed_arg(w):
    c = _lead_coeff(w)
    if c < 0:
        return -w, True
    return w, False


def sin(w) -> Expression:
    w = as_expr(w)
    if not w.num:
        return ZERO
    w, neg = _signed_arg(w)
    e = Expression({((_atom(SIN, w), 1),): _ONE})
    return -e if neg else e


def cos(w) -> Expression:
    w = as_expr(w)
    if not w.num:
        return ONE
    w, _ = _signed_arg(w)
    return Expression({((_atom(COS, w), 1),): _ONE})


def tan(w) -> Expression:
    return sin(w) / cos(w)


def ln(w) -> Expression:
    w = as_expr(w)
    if w == ONE:
        return ZERO
    if not w.num:
        raise ExprError("ln(0) is undefined")
    return Expression({((_atom(LN, w), 1),): _ONE})


KERNELS = {"exp": exp, "sin": sin, "cos": cos, "tan": tan, "ln": ln}


def _atom_expr(a: Atom, e=1) -> Expression:
    return Expression({((a, e),): _ONE})


# ---------------------------------------------------------- calculus


def _atom_diff(a: Atom, name: str) -> Expression:
    d = a._dcache.get(name)
    if d is not None:
        return d
    if a.kind == SYM:
        d = ONE if a.name == name else ZERO
    elif name not in a.free:
        d = ZERO
    else:
        du = differentiate(a.arg, name)
        if a.kind == EXP:
            d = du  # d exp(m)^c = c exp(m)^c dm, handled by caller
        elif a.kind == SIN:
            d = cos(a.arg) * du
        elif a.kind == COS:
            d = -sin(a.arg) * du
        else:
            d = du / a.arg
    a._dcache[name] = d
    return d


def _poly_diff(p, name) -> Expression:
    poly = {}
    extra = []
    for m, c in p.items():
        for i, (a, e) in enumerate(m):
            if name not in a.free:
                continue
            da = _atom_diff(a, name)
            if not da.num:
                continue
            if a.kind == EXP:
                rest = m
            else:
                rest = m[:i] + (((a, e - 1),) if e != 1 else ()) + m[i + 1:]
            coef = c * e
            if da.den is _P_ONE:
                poly = _padd(poly, _pmul(da.num, {rest: coef}))
            else:
                extra.append(Expression({rest: coef}) * da)
    out = _from_poly(_trig_reduce(poly))
    for x in extra:
        out = out + x
    return out


def differentiate(e: Expression, name: str) -> Expression:
    if name not in e.free_symbols:
        return ZERO
    dn = _poly_diff(e.num, name)
    if e.den is _P_ONE or _is_const_poly(e.den):
        return dn
    dd = _poly_diff(e.den, name)
    den = Expression(e.den)
    num = Expression(e.num)
    return (dn * den - num * dd) / (den * den)


def gradient(e: Expression, names: Iterable[str]) -> list:
    return [differentiate(e, n) for n in names]


# ------------------------------------------------------- substitution


def _atom_subs(a: Atom, mapping, cache) -> Expression:
    r = cache.get(a)
    if r is not None:
        return r
    if a.kind == SYM:
        r = as_expr(mapping[a.name]) if a.name in mapping else _atom_expr(a)
    elif not (a.free & mapping.keys()):
        r = _atom_expr(a)
    else:
        arg = substitute(a.arg, mapping)
        r = {EXP: exp, SIN: sin, COS: cos, LN: ln}[a.kind](arg)
    cache[a] = r
    return r


def _poly_subs(p, mapping, cache) -> Expression:
    out = ZERO
    for m, c in p.items():
        t = as_expr(c)
        for a, e in m:
            if a.kind == EXP:
                if a.free & mapping.keys():
                    t = t * exp(substitute(a.arg, mapping) * as_expr(mpq(e)))
                else:
                    t = t * _atom_expr(a, e)
            else:
                t = t * (_atom_subs(a, mapping, cache) ** int(e))
        out = out + t
    return out


def substitute(e: Expression, mapping: Mapping[str, object]) -> Expression:
    if not (e.free_symbols & set(mapping)):
        return e
    cache = {}
    n = _poly_subs(e.num, mapping, cache)
    if e.den is _P_ONE:
        return n
    return n / _poly_subs(e.den, mapping, cache)


# -------------------------------------------------- numeric evaluation


def _atom_value(a: Atom, point, cache):
    v = cache.get(a)
    if v is not None:
        return v
    if a.kind == SYM:
        try:
            v = float(point[a.name])
        except KeyError:
            raise ExprError(f"no value supplied for symbol '{a.name}'") from None
    elif a.kind == EXP:
        v = eval_numeric(a.arg, point, cache)
    else:
        u = eval_numeric(a.arg, point, cache)
        if a.kind == SIN:
            v = math.sin(u)
        elif a.kind == COS:
            v = math.cos(u)
        else:
            if u <= 0:
                raise SingularPointError("ln of non-positive value at sample point", str(a))
            v = math.log(u)
    cache[a] = v
    return v


def _poly_value(p, point, cache):
    total = 0.0
    for m, c in p.items():
        t = float(c)
        for a, e in m:
            if a.kind == EXP:
                t *= math.exp(float(e) * _atom_value(a, point, cache))
            else:
                t *= _atom_value(a, point, cache) ** e
        total += t
    return total


def eval_numeric(e: Expression, point: Mapping[str, float], cache=None) -> float:
    """Evaluate at a point given as {symbol name: number}."""
    if cache is None:
        cache = {}
    try:
        n = _poly_value(e.num, point, cache)
        if e.den is _P_ONE:
            return n
        d = _poly_value(e.den, point, cache)
    except OverflowError:
        raise SingularPointError("overflow during evaluation", str(e)) from None
    scale = max(1.0, sum(abs(float(c)) for c in e.den.values()))
    if abs(d) < 1e-12 * scale:
        raise SingularPointError(f"denominator {_format_poly(e.den)} vanishes", _format_poly(e.den))
    return n / d


# ---------------------------------------------------------- printing


def _fmt_rat(c) -> str:
    return str(c)


def _atom_str(a: Atom, e) -> str:
    if a.kind == EXP:
        arg = a.arg * as_expr(mpq(e))
        return f"exp({arg})"
    base = a.name if a.kind == SYM else f"{_KIND_NAMES[a.kind]}({a.arg})"
    if e == 1:
        return base
    return f"{base}^{e}"


def _mono_print_key(m):
    deg = sum(e for a, e in m if a.kind != EXP)
    pairs = sorted(((a.key, e) for a, e in m), key=lambda t: t[0])
    return (-deg, tuple((k, -e) for k, e in pairs))


def _format_poly(p) -> str:
    if not p:
        return "0"
    terms = sorted(p.items(), key=lambda t: _mono_print_key(t[0]))
    out = []
    for i, (m, c) in enumerate(terms):
        neg = c < 0
        a = -c if neg else c
        factors = [_atom_str(at, e) for at, e in sorted(m, key=lambda t: t[0].key)]
        if not factors:
            body = _fmt_rat(a)
        elif a == 1:
            body = "*".join(factors)
        else:
            body = _fmt_rat(a) + "*" + "*".join(factors)
        if i == 0:
            out.append("-" + body if neg else body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def _single_factor(p) -> bool:
    if len(p) != 1:
        return False
    (m, c), = p.items()
    return c == 1 and len(m) == 1


def _format(e: Expression) -> str:
    n = _format_poly(e.num)
    if e.is_polynomial():
        return n
    d = _format_poly(e.den)
    if len(e.num) > 1:
        n = f"({n})"
    if not _single_factor(e.den):
        d = f"({d})"
    return f"{n}/{d}"
