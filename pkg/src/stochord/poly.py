"""Exact polynomial, rational-function and exponential-rational arithmetic.

Coefficients are :class:`fractions.Fraction` so that cancellation of common
factors and repeated differentiation are exact.  Floating point only enters
when a function is evaluated on an array of ``s`` values, and those
evaluations come with a rounding-error bound.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np

_U = np.finfo(float).eps / 2


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


class Poly:
    """Polynomial in ``s`` with exact rational coefficients (ascending order)."""

    __slots__ = ("c",)

    def __init__(self, coeffs=()):
        c = [_frac(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = tuple(c)

    @classmethod
    def const(cls, a) -> Poly:
        return cls([a])

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    @property
    def lead(self) -> Fraction:
        return self.c[-1] if self.c else Fraction(0)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.c == other.c
        return NotImplemented

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        return f"Poly({[str(x) for x in self.c]})"

    def __add__(self, other: Poly) -> Poly:
        n = max(len(self.c), len(other.c))
        a = self.c + (Fraction(0),) * (n - len(self.c))
        b = other.c + (Fraction(0),) * (n - len(other.c))
        return Poly([x + y for x, y in zip(a, b)])

    def __neg__(self) -> Poly:
        return Poly([-x for x in self.c])

    def __sub__(self, other: Poly) -> Poly:
        return self + (-other)

    def __mul__(self, other) -> Poly:
        if not isinstance(other, Poly):
            k = _frac(other)
            return Poly([k * x for x in self.c])
        if not self.c or not other.c:
            return Poly()
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, x in enumerate(self.c):
            if x == 0:
                continue
            for j, y in enumerate(other.c):
                out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Poly:
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def divmod(self, other: Poly) -> tuple[Poly, Poly]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        q = [Fraction(0)] * max(len(rem) - len(other.c) + 1, 0)
        lead = other.c[-1]
        while len(rem) >= len(other.c) and rem:
            shift = len(rem) - len(other.c)
            k = rem[-1] / lead
            q[shift] = k
            for j, y in enumerate(other.c):
                rem[shift + j] -= k * y
            rem.pop()
            while rem and rem[-1] == 0:
                rem.pop()
        return Poly(q), Poly(rem)

    def monic(self) -> Poly:
        return self * (1 / self.lead) if self.c else self

    def deriv(self) -> Poly:
        return Poly([i * x for i, x in enumerate(self.c)][1:])

    def scale_arg(self, k) -> Poly:
        """Return ``p(k*s)``."""
        k = _frac(k)
        return Poly([x * k**i for i, x in enumerate(self.c)])

    def __call__(self, s):
        s = _frac(s)
        acc = Fraction(0)
        for x in reversed(self.c):
            acc = acc * s + x
        return acc

    def evalf(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Horner evaluation in floating point, with a forward error bound."""
        s = np.asarray(s, dtype=float)
        if not self.c:
            z = np.zeros_like(s)
            return z, z
        cf = [float(x) for x in self.c]
        acc = np.zeros_like(s)
        mag = np.zeros_like(s)
        a = np.abs(s)
        for x in reversed(cf):
            acc = acc * s + x
            mag = mag * a + abs(x)
        err = (2 * len(cf) + 2) * _U * mag
        return acc, err


def poly_gcd(a: Poly, b: Poly) -> Poly:
    while not b.is_zero():
        _, r = a.divmod(b)
        a, b = b, r
    return a.monic() if not a.is_zero() else Poly.const(1)


class RationalFunction:
    """Reduced ratio ``num/den`` of exact polynomials.

    Normalised so that ``den(0) == 1`` when ``den(0) != 0`` (which is the case
    for every Laplace transform ratio we build), otherwise ``den`` is monic.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None, reduce: bool = True):
        den = Poly.const(1) if den is None else den
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            num, den = Poly(), Poly.const(1)
        elif reduce and den.degree > 0 and num.degree > 0:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num = num.divmod(g)[0]
                den = den.divmod(g)[0]
        k = den.c[0] if den.c[0] != 0 else den.lead
        if k != 1:
            num, den = num * (1 / k), den * (1 / k)
        self.num = num
        self.den = den

    @classmethod
    def const(cls, a) -> RationalFunction:
        return cls(Poly.const(a))

    def __eq__(self, other):
        if isinstance(other, RationalFunction):
            return self.num == other.num and self.den == other.den
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RationalFunction({self.num!r} / {self.den!r})"

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.degree <= 0 and self.den.degree == 0

    def __add__(self, other: RationalFunction) -> RationalFunction:
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self):
        return RationalFunction(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> RationalFunction:
        if not isinstance(other, RationalFunction):
            return RationalFunction(self.num * other, self.den, reduce=False)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other: RationalFunction) -> RationalFunction:
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __pow__(self, k: int) -> RationalFunction:
        return RationalFunction(self.num**k, self.den**k, reduce=False)

    def scale_arg(self, k) -> RationalFunction:
        return RationalFunction(self.num.scale_arg(k), self.den.scale_arg(k), reduce=False)

    def deriv(self) -> RationalFunction:
        return RationalFunction(self.num.deriv() * self.den - self.num * self.den.deriv(), self.den * self.den)

    def __call__(self, s):
        return self.num(s) / self.den(s)

    def evalf(self, s):
        p, ep = self.num.evalf(s)
        q, eq = self.den.evalf(s)
        val = p / q
        err = (ep + np.abs(val) * eq) / np.abs(q)
        return val, err


def derivative_numerators(num: Poly, den: Poly, delay: Fraction, n: int) -> list[Poly]:
    """Numerators ``P_k`` with ``d^k/ds^k [e^{-delay s} num/den] = e^{-delay s} P_k / den^{k+1}``.

    Uses the quotient-rule recurrence
    ``P_{k+1} = P_k' den - (k+1) P_k den' - delay P_k den``.
    """
    dq = den.deriv()
    out = [num]
    p = num
    for k in range(n):
        nxt = p.deriv() * den - p * dq * (k + 1)
        if delay != 0:
            nxt = nxt - p * den * delay
        out.append(nxt)
        p = nxt
    return out


class ExpRational:
    """Finite sum ``sum_d exp(-d s) R_d(s)`` with exact rational ``R_d``.

    Atoms at nonzero locations (and shifted distributions) contribute the
    exponential factors; a purely rational transform has the single delay 0.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        clean = {}
        for d, r in dict(terms).items():
            d = _frac(d)
            if not isinstance(r, RationalFunction):
                r = RationalFunction.const(r)
            if d in clean:
                r = clean[d] + r
            if r.is_zero():
                clean.pop(d, None)
            else:
                clean[d] = r
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def rational(cls, r: RationalFunction) -> ExpRational:
        return cls({0: r})

    @classmethod
    def const(cls, a) -> ExpRational:
        return cls({0: RationalFunction.const(a)})

    @property
    def is_single(self) -> bool:
        return len(self.terms) == 1

    @property
    def is_rational(self) -> bool:
        return self.is_single and next(iter(self.terms)) == 0

    def single(self) -> tuple[Fraction, RationalFunction]:
        if not self.is_single:
            raise ValueError("not a single exponential-rational term")
        return next(iter(self.terms.items()))

    def _key(self):
        return tuple((d, r.num.c, r.den.c) for d, r in self.terms.items())

    def __eq__(self, other):
        if isinstance(other, ExpRational):
            return self._key() == other._key()
        return NotImplemented

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return "ExpRational(" + " + ".join(f"e^(-{d}s)*{r!r}" for d, r in self.terms.items()) + ")"

    def __add__(self, other: ExpRational) -> ExpRational:
        out = dict(self.terms)
        for d, r in other.terms.items():
            out[d] = out[d] + r if d in out else r
        return ExpRational(out)

    def __mul__(self, other) -> ExpRational:
        if not isinstance(other, ExpRational):
            k = _frac(other)
            return ExpRational({d: r * k for d, r in self.terms.items()})
        out: dict = {}
        for d1, r1 in self.terms.items():
            for d2, r2 in other.terms.items():
                d = d1 + d2
                r = r1 * r2
                out[d] = out[d] + r if d in out else r
        return ExpRational(out)

    __rmul__ = __mul__

    def scale_arg(self, k) -> ExpRational:
        """Return ``L(k*s)``."""
        k = _frac(k)
        return ExpRational({d * k: r.scale_arg(k) for d, r in self.terms.items()})

    def shift(self, d) -> ExpRational:
        """Multiply by ``exp(-d s)``."""
        d = _frac(d)
        return ExpRational({t + d: r for t, r in self.terms.items()})

    def derivatives(self, n: int) -> list[list[tuple[Fraction, Poly, Poly]]]:
        """Symbolic derivatives of orders ``0..n``.

        Entry ``k`` is a list of ``(delay, P_k, den)`` with the k-th derivative
        equal to ``sum exp(-delay s) P_k(s) / den(s)^{k+1}``.
        """
        per_term = [
            (d, derivative_numerators(r.num, r.den, d, n), r.den) for d, r in self.terms.items()
        ]
        return [[(d, ps[k], q) for d, ps, q in per_term] for k in range(n + 1)]

    def evalf(self, s) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=float)
        val = np.zeros_like(s)
        err = np.zeros_like(s)
        for d, r in self.terms.items():
            v, e = r.evalf(s)
            w = np.exp(-float(d) * s)
            val += w * v
            err += w * (e + 2 * _U * np.abs(v))
        return val, err

    def evalf_derivatives(self, s, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Values and error bounds of derivatives ``0..n``, shape ``(n+1, len(s))``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        vals = np.zeros((n + 1, s.size))
        errs = np.zeros((n + 1, s.size))
        for k, terms in enumerate(self.derivatives(n)):
            for d, p, q in terms:
                pv, pe = p.evalf(s)
                qv, qe = q.evalf(s)
                qk = qv ** (k + 1)
                w = np.exp(-float(d) * s)
                v = w * pv / qk
                rel_q = (k + 1) * qe / np.abs(qv)
                vals[k] += v
                errs[k] += w * pe / np.abs(qk) + np.abs(v) * (rel_q + 4 * _U)
        return vals, errs

    def exact_derivative(self, n: int, s) -> Fraction | float:
        """n-th derivative at ``s``; exact (a Fraction) when every delay is zero."""
        s = _frac(s)
        total = 0.0 if any(d != 0 for d in self.terms) else Fraction(0)
        for d, p, q in self.derivatives(n)[n]:
            v = p(s) / q(s) ** (n + 1)
            if d == 0:
                total = total + v
            else:
                total = total + float(v) * float(np.exp(-float(d) * float(s)))
        return total


def binomial_leibniz(a_vals, b_vals):
    """Derivatives of ``a/b`` from derivatives of ``a`` and ``b`` (rows = order).

    Solves ``sum_k C(n,k) phi^(k) b^(n-k) = a^(n)`` for ``phi^(n)`` order by order.
    """
    n = a_vals.shape[0] - 1
    phi = np.zeros_like(a_vals)
    for m in range(n + 1):
        acc = a_vals[m].copy()
        for k in range(m):
            acc -= comb(m, k) * phi[k] * b_vals[m - k]
        phi[m] = acc / b_vals[0]
    return phi
