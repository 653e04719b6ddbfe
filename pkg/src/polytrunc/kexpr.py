"""Symbolic K-functions: a small closed grammar with machine-checkable
invariance and decay metadata.

Normal form: a sum of terms ``coeff * monomial * prod(atoms)`` where the
atoms are ``exp(-s*|<x,d>|)`` (d a canonical direction, s > 0),
``exp(<x,u>)`` and ``exp(-x^T Q x)`` (Q positive semidefinite).  Terms with
identical structure merge, so alternating sums cancel symbolically.

Invariance along a vector and exponential decay along every direction of a
polyhedral cone are decided exactly: the decay rate of a term is piecewise
linear in the direction, so positivity over a cone reduces to sign-pattern
subcones and their extreme rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Iterable, Sequence

from .errors import KExprSyntaxError, NonSupportedAtom
from .halfspaces import extreme_rays_of_cone
from .linalg import (
    Mat,
    Vec,
    add,
    dot,
    is_positive_semidefinite,
    is_zero,
    mat,
    mat_vec,
    nullspace,
    primitive,
    rank,
    scale,
    vec,
    zero_vec,
)

Monomial = tuple[int, ...]


def _canonical_direction(u: Vec) -> tuple[Vec, Fraction]:
    """Split u = s * d with d primitive and sign-canonical, s > 0."""
    p = primitive(u)
    for x in p:
        if x != 0:
            if x < 0:
                p = tuple(-y for y in p)
            break
    # scale: |<x, u>| = s |<x, p>| with s = |u| / |p| componentwise
    s = None
    for a, b in zip(u, p):
        if b != 0:
            s = abs(a / b)
            break
    return p, s


@dataclass(frozen=True)
class KTerm:
    coeff: Fraction
    monomial: Monomial
    abs_atoms: tuple[tuple[Vec, Fraction], ...]  # (direction, positive scale)
    lin: Vec | None
    quad: Mat | None

    def key(self):
        return (self.monomial, self.abs_atoms, self.lin, self.quad)

    def degree(self) -> int:
        return sum(self.monomial)


def _merge_abs(
    a: tuple[tuple[Vec, Fraction], ...], b: tuple[tuple[Vec, Fraction], ...]
) -> tuple[tuple[Vec, Fraction], ...]:
    acc: dict[Vec, Fraction] = {}
    for d, s in a + b:
        acc[d] = acc.get(d, Fraction(0)) + s
    return tuple(sorted((d, s) for d, s in acc.items() if s != 0))


def _mul_terms(a: KTerm, b: KTerm) -> KTerm:
    mono = tuple(x + y for x, y in zip(a.monomial, b.monomial))
    abs_atoms = _merge_abs(a.abs_atoms, b.abs_atoms)
    lin = None
    if a.lin or b.lin:
        la = a.lin or zero_vec(len(a.monomial))
        lb = b.lin or zero_vec(len(b.monomial))
        s = add(la, lb)
        lin = None if is_zero(s) else s
    quad = None
    if a.quad or b.quad:
        n = len(a.monomial)
        qa = a.quad or mat([[0] * n for _ in range(n)])
        qb = b.quad or mat([[0] * n for _ in range(n)])
        q = tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(qa, qb))
        if any(any(x != 0 for x in row) for row in q):
            quad = q
    return KTerm(a.coeff * b.coeff, mono, abs_atoms, lin, quad)


@dataclass(frozen=True)
class KExpr:
    """Normal-form symbolic expression over Q^dim."""

    dim: int
    terms: tuple[KTerm, ...] = ()

    @staticmethod
    def constant(dim: int, c) -> "KExpr":
        c = Fraction(c)
        if c == 0:
            return KExpr(dim)
        return KExpr(dim, (KTerm(c, tuple([0] * dim), (), None, None),))

    @staticmethod
    def _normalize(dim: int, terms: Iterable[KTerm]) -> "KExpr":
        acc: dict = {}
        for t in terms:
            k = t.key()
            acc[k] = acc.get(k, Fraction(0)) + t.coeff
        out = tuple(
            sorted(
                (KTerm(c, *k) for k, c in acc.items() if c != 0),
                key=lambda t: (t.monomial, t.abs_atoms, t.lin or (), t.quad or ()),
            )
        )
        return KExpr(dim, out)

    def __add__(self, other: "KExpr") -> "KExpr":
        assert self.dim == other.dim
        return KExpr._normalize(self.dim, self.terms + other.terms)

    def __sub__(self, other: "KExpr") -> "KExpr":
        return self + other.scaled(-1)

    def scaled(self, c) -> "KExpr":
        c = Fraction(c)
        if c == 0:
            return KExpr(self.dim)
        return KExpr(
            self.dim,
            tuple(KTerm(t.coeff * c, *t.key()) for t in self.terms),
        )

    def __mul__(self, other: "KExpr") -> "KExpr":
        assert self.dim == other.dim
        terms = [_mul_terms(a, b) for a in self.terms for b in other.terms]
        return KExpr._normalize(self.dim, terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(
            t.degree() == 0 and not t.abs_atoms and t.lin is None and t.quad is None
            for t in self.terms
        )

    def constant_value(self) -> Fraction:
        assert self.is_constant
        return sum((t.coeff for t in self.terms), Fraction(0))

    def evaluate(self, x: Sequence[float]) -> float:
        total = 0.0
        for t in self.terms:
            v = float(t.coeff)
            for xi, e in zip(x, t.monomial):
                if e:
                    v *= float(xi) ** e
            for d, s in t.abs_atoms:
                v *= math.exp(-float(s) * abs(sum(float(a) * float(b) for a, b in zip(x, d))))
            if t.lin is not None:
                v *= math.exp(sum(float(a) * float(b) for a, b in zip(x, t.lin)))
            if t.quad is not None:
                xf = [float(a) for a in x]
                q = sum(
                    xf[i] * float(t.quad[i][j]) * xf[j]
                    for i in range(self.dim)
                    for j in range(self.dim)
                )
                v *= math.exp(-q)
            total += v
        return total

    def evaluate_array(self, pts):
        """Vectorized evaluation on an (N, dim) float array."""
        import numpy as np

        pts = np.asarray(pts, dtype=float)
        total = np.zeros(pts.shape[0])
        for t in self.terms:
            v = np.full(pts.shape[0], float(t.coeff))
            for i, e in enumerate(t.monomial):
                if e:
                    v = v * pts[:, i] ** e
            for d, s in t.abs_atoms:
                proj = pts @ np.array([float(x) for x in d])
                v = v * np.exp(-float(s) * np.abs(proj))
            if t.lin is not None:
                v = v * np.exp(pts @ np.array([float(x) for x in t.lin]))
            if t.quad is not None:
                q = np.array([[float(x) for x in row] for row in t.quad])
                v = v * np.exp(-np.einsum("ni,ij,nj->n", pts, q, pts))
            total = total + v
        return total

    # -- metadata ----------------------------------------------------------

    def dependence_generators(self) -> list[Vec]:
        """Covectors whose common kernel is the invariance subspace."""
        gens: list[Vec] = []
        for t in self.terms:
            for i, e in enumerate(t.monomial):
                if e:
                    gens.append(vec([1 if j == i else 0 for j in range(self.dim)]))
            for d, _ in t.abs_atoms:
                gens.append(d)
            if t.lin is not None:
                gens.append(t.lin)
            if t.quad is not None:
                gens.extend(vec(row) for row in t.quad)
        return gens

    def invariant_along(self, v: Sequence) -> bool:
        """Exactly decide f(x + t v) == f(x) for all x, t."""
        v = vec(v)
        return all(dot(g, v) == 0 for g in self.dependence_generators())

    def decays_along(self, d: Sequence) -> bool:
        """Exponential (or faster) decay of every term along the ray t*d."""
        d = vec(d)
        return all(self._term_decays_along(t, d) for t in self.terms)

    @staticmethod
    def _term_rate(t: KTerm, d: Vec) -> Fraction:
        r = Fraction(0)
        for dirn, s in t.abs_atoms:
            r += s * abs(dot(dirn, d))
        if t.lin is not None:
            r -= dot(t.lin, d)
        return r

    def _term_decays_along(self, t: KTerm, d: Vec) -> bool:
        if t.quad is not None:
            q = dot(d, mat_vec(t.quad, d))
            if q > 0:
                return True
        return self._term_rate(t, d) > 0

    def decays_on_cone(
        self, eq_normals: Sequence[Vec], ineq_normals: Sequence[Vec]
    ) -> bool:
        """Exponential decay along *every* nonzero direction of the closed
        pointed cone {y : E y = 0, C y >= 0}.

        Exact: the rate is piecewise linear, so split by the sign pattern of
        the abs atoms and check strict positivity on extreme rays of each
        nonempty sign subcone (a quadratic factor positive on the direction
        dominates everything).
        """
        n = self.dim
        for t in self.terms:
            eq = [vec(e) for e in eq_normals]
            ineq = [vec(c) for c in ineq_normals]
            if t.quad is not None:
                # on ker Q the quadratic factor is constant; restrict there
                ker = nullspace(t.quad)
                if not ker:
                    continue  # positive definite: decays everywhere
                normals_of_ker = nullspace(mat(ker))
                eq = eq + [vec(m) for m in normals_of_ker]
            dirs = [d for d, _ in t.abs_atoms]
            ok = True
            for signs in iproduct((1, -1), repeat=len(dirs)):
                sub_ineq = list(ineq) + [
                    scale(d, s) for d, s in zip(dirs, signs)
                ]
                rays = extreme_rays_of_cone(eq, sub_ineq, n)
                for r in rays:
                    if self._term_rate(t, r) <= 0:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                return False
        return True

    def restrict(self, basis: Sequence[Vec]) -> "KExpr":
        """Substitute x = sum_i t_i basis_i; result lives in len(basis) vars."""
        basis = [vec(b) for b in basis]
        k = len(basis)
        out_terms: list[KTerm] = []
        for t in self.terms:
            # polynomial part: product over variables of (sum_i basis_i[j] t_i)^e
            poly = KExpr.constant(k, t.coeff)
            for j, e in enumerate(t.monomial):
                for _ in range(e):
                    lin_form = KExpr(
                        k,
                        tuple(
                            KTerm(
                                basis[i][j],
                                tuple(1 if q == i else 0 for q in range(k)),
                                (),
                                None,
                                None,
                            )
                            for i in range(k)
                            if basis[i][j] != 0
                        ),
                    )
                    poly = poly * lin_form
            new_abs: list[tuple[Vec, Fraction]] = []
            for d, s in t.abs_atoms:
                nd = vec([dot(b, d) for b in basis])
                if is_zero(nd):
                    continue  # factor is exp(0) = 1 on the subspace
                cd, cs = _canonical_direction(nd)
                new_abs.append((cd, s * cs))
            new_lin = None
            if t.lin is not None:
                nl = vec([dot(b, t.lin) for b in basis])
                if not is_zero(nl):
                    new_lin = nl
            new_quad = None
            if t.quad is not None:
                rows = []
                for bi in basis:
                    qbi = mat_vec(t.quad, bi)
                    rows.append(vec([dot(bj, qbi) for bj in basis]))
                q = mat(rows)
                if any(any(x != 0 for x in row) for row in q):
                    new_quad = q
            atom_term = KTerm(
                Fraction(1),
                tuple([0] * k),
                _merge_abs(tuple(new_abs), ()),
                new_lin,
                new_quad,
            )
            for pt in poly.terms:
                out_terms.append(_mul_terms(pt, atom_term))
        return KExpr._normalize(k, out_terms)


# ---------------------------------------------------------------------------
# Parser


class _Tok:
    def __init__(self, kind, value, pos):
        self.kind = kind
        self.value = value
        self.pos = pos

    def __repr__(self):
        return f"{self.kind}({self.value})"


def _tokenize(text: str) -> list[_Tok]:
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and (text[j].isdigit() or text[j] in "./"):
                j += 1
            out.append(_Tok("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(_Tok("name", text[i:j], i))
            i = j
            continue
        if ch in "+-*(),[]":
            out.append(_Tok(ch, ch, i))
            i += 1
            continue
        raise KExprSyntaxError(f"unexpected character {ch!r} at position {i}", i)
    out.append(_Tok("end", None, n))
    return out


class _Node:
    pass


class _Num(_Node):
    def __init__(self, v):
        self.v = Fraction(v)


class _Var(_Node):
    def __init__(self, i):
        self.i = i


class _Dot(_Node):
    def __init__(self, coeffs):
        self.coeffs = coeffs


class _Add(_Node):
    def __init__(self, parts):
        self.parts = parts


class _Mul(_Node):
    def __init__(self, parts):
        self.parts = parts


class _NegN(_Node):
    def __init__(self, arg):
        self.arg = arg


class _Exp(_Node):
    def __init__(self, arg):
        self.arg = arg


class _Abs(_Node):
    def __init__(self, arg):
        self.arg = arg


class _Parser:
    def __init__(self, toks, dim):
        self.toks = toks
        self.i = 0
        self.dim = dim

    def peek(self):
        return self.toks[self.i]

    def eat(self, kind=None):
        t = self.toks[self.i]
        if kind and t.kind != kind:
            raise KExprSyntaxError(
                f"expected {kind}, found {t.kind} at position {t.pos}", t.pos
            )
        self.i += 1
        return t

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise KExprSyntaxError(f"trailing input at position {t.pos}", t.pos)
        return node

    def expr(self):
        parts = [self.term()]
        while self.peek().kind in ("+", "-"):
            op = self.eat().kind
            t = self.term()
            parts.append(t if op == "+" else _NegN(t))
        return _Add(parts) if len(parts) > 1 else parts[0]

    def term(self):
        parts = [self.factor()]
        while self.peek().kind == "*":
            self.eat("*")
            parts.append(self.factor())
        return _Mul(parts) if len(parts) > 1 else parts[0]

    def factor(self):
        if self.peek().kind == "-":
            self.eat("-")
            return _NegN(self.factor())
        if self.peek().kind == "+":
            self.eat("+")
            return self.factor()
        return self.atom()

    def atom(self):
        t = self.peek()
        if t.kind == "num":
            self.eat()
            try:
                return _Num(Fraction(t.value))
            except (ValueError, ZeroDivisionError) as exc:
                raise KExprSyntaxError(
                    f"bad numeral {t.value!r} at position {t.pos}", t.pos
                ) from exc
        if t.kind == "(":
            self.eat("(")
            node = self.expr()
            self.eat(")")
            return node
        if t.kind == "name":
            self.eat()
            name = t.value
            if name == "exp":
                self.eat("(")
                arg = self.expr()
                self.eat(")")
                return _Exp(arg)
            if name == "abs":
                self.eat("(")
                arg = self.expr()
                self.eat(")")
                return _Abs(arg)
            if name == "dot":
                self.eat("(")
                xt = self.eat("name")
                if xt.value != "x":
                    raise KExprSyntaxError(
                        f"dot() takes the variable vector 'x' first, found {xt.value!r}",
                        xt.pos,
                    )
                self.eat(",")
                self.eat("[")
                coeffs = [self._signed_number()]
                while self.peek().kind == ",":
                    self.eat(",")
                    coeffs.append(self._signed_number())
                self.eat("]")
                self.eat(")")
                if len(coeffs) != self.dim:
                    raise KExprSyntaxError(
                        f"dot() coefficient list must have length {self.dim}", t.pos
                    )
                return _Dot(vec(coeffs))
            if name.startswith("x") and name[1:].isdigit():
                idx = int(name[1:])
                if not 1 <= idx <= self.dim:
                    raise KExprSyntaxError(
                        f"variable {name} out of range 1..{self.dim}", t.pos
                    )
                return _Var(idx - 1)
            raise KExprSyntaxError(f"unknown name {name!r} at position {t.pos}", t.pos)
        raise KExprSyntaxError(f"unexpected token at position {t.pos}", t.pos)

    def _signed_number(self):
        sign = 1
        while self.peek().kind in ("-", "+"):
            if self.eat().kind == "-":
                sign = -sign
        t = self.eat("num")
        return sign * Fraction(t.value)


# -- normalization of exp arguments ----------------------------------------


def _linear_poly(poly: dict[Monomial, Fraction], dim: int):
    """Split a polynomial dict into (constant, linear vec, quad mat, rest)."""
    const = Fraction(0)
    lin = [Fraction(0)] * dim
    quad = [[Fraction(0)] * dim for _ in range(dim)]
    higher = False
    for mono, c in poly.items():
        deg = sum(mono)
        if deg == 0:
            const += c
        elif deg == 1:
            i = mono.index(1)
            lin[i] += c
        elif deg == 2:
            idx = [i for i, e in enumerate(mono) for _ in range(e)]
            i, j = idx
            if i == j:
                quad[i][i] += c
            else:
                quad[i][j] += c / 2
                quad[j][i] += c / 2
        else:
            higher = True
    return const, vec(lin), mat(quad), higher


class _PolyAbs:
    """Intermediate value for exp arguments: polynomial + abs-combination."""

    def __init__(self, dim, poly=None, absd=None):
        self.dim = dim
        self.poly: dict[Monomial, Fraction] = poly or {}
        self.absd: dict[Vec, Fraction] = absd or {}

    @staticmethod
    def const(dim, c):
        return _PolyAbs(dim, {tuple([0] * dim): Fraction(c)})

    def add(self, other):
        poly = dict(self.poly)
        for k, v in other.poly.items():
            poly[k] = poly.get(k, Fraction(0)) + v
        absd = dict(self.absd)
        for k, v in other.absd.items():
            absd[k] = absd.get(k, Fraction(0)) + v
        return _PolyAbs(self.dim, poly, absd)

    def negate(self):
        return _PolyAbs(
            self.dim,
            {k: -v for k, v in self.poly.items()},
            {k: -v for k, v in self.absd.items()},
        )

    def mul(self, other):
        if self.absd and other.absd:
            raise NonSupportedAtom("products of abs() terms are not supported")
        if self.absd or other.absd:
            withabs, plain = (self, other) if self.absd else (other, self)
            if set(plain.poly) - {tuple([0] * self.dim)}:
                raise NonSupportedAtom(
                    "abs() terms may only be scaled by constants"
                )
            c = plain.poly.get(tuple([0] * self.dim), Fraction(0))
            return _PolyAbs(
                self.dim,
                {k: v * c for k, v in withabs.poly.items()},
                {k: v * c for k, v in withabs.absd.items()},
            )
        poly: dict[Monomial, Fraction] = {}
        for m1, c1 in self.poly.items():
            for m2, c2 in other.poly.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                poly[m] = poly.get(m, Fraction(0)) + c1 * c2
        return _PolyAbs(self.dim, poly)


def _exp_arg_value(node: _Node, dim: int) -> _PolyAbs:
    if isinstance(node, _Num):
        return _PolyAbs.const(dim, node.v)
    if isinstance(node, _Var):
        mono = tuple(1 if j == node.i else 0 for j in range(dim))
        return _PolyAbs(dim, {mono: Fraction(1)})
    if isinstance(node, _Dot):
        out = _PolyAbs(dim)
        for i, c in enumerate(node.coeffs):
            if c == 0:
                continue
            mono = tuple(1 if j == i else 0 for j in range(dim))
            out.poly[mono] = c
        return out
    if isinstance(node, _Add):
        out = _PolyAbs(dim)
        for p in node.parts:
            out = out.add(_exp_arg_value(p, dim))
        return out
    if isinstance(node, _NegN):
        return _exp_arg_value(node.arg, dim).negate()
    if isinstance(node, _Mul):
        out = _PolyAbs.const(dim, 1)
        for p in node.parts:
            out = out.mul(_exp_arg_value(p, dim))
        return out
    if isinstance(node, _Abs):
        inner = _exp_arg_value(node.arg, dim)
        if inner.absd:
            raise NonSupportedAtom("nested abs() is not supported")
        const, lin, quad, higher = _linear_poly(inner.poly, dim)
        if higher or const != 0 or any(any(x != 0 for x in r) for r in quad):
            raise NonSupportedAtom(
                "abs() argument must be a homogeneous linear form"
            )
        if is_zero(lin):
            return _PolyAbs.const(dim, 0)
        d, s = _canonical_direction(lin)
        return _PolyAbs(dim, absd={d: s})
    if isinstance(node, _Exp):
        raise NonSupportedAtom("nested exp() is not supported")
    raise NonSupportedAtom(f"unsupported node {type(node).__name__} inside exp()")


def _normalize(node: _Node, dim: int) -> KExpr:
    if isinstance(node, _Num):
        return KExpr.constant(dim, node.v)
    if isinstance(node, _Var):
        mono = tuple(1 if j == node.i else 0 for j in range(dim))
        return KExpr(dim, (KTerm(Fraction(1), mono, (), None, None),))
    if isinstance(node, _Dot):
        terms = []
        for i, c in enumerate(node.coeffs):
            if c == 0:
                continue
            mono = tuple(1 if j == i else 0 for j in range(dim))
            terms.append(KTerm(c, mono, (), None, None))
        return KExpr._normalize(dim, terms)
    if isinstance(node, _Add):
        out = KExpr(dim)
        for p in node.parts:
            out = out + _normalize(p, dim)
        return out
    if isinstance(node, _NegN):
        return _normalize(node.arg, dim).scaled(-1)
    if isinstance(node, _Mul):
        out = KExpr.constant(dim, 1)
        for p in node.parts:
            out = out * _normalize(p, dim)
        return out
    if isinstance(node, _Abs):
        raise NonSupportedAtom("abs() may only appear inside exp()")
    if isinstance(node, _Exp):
        arg = _exp_arg_value(node.arg, dim)
        const, lin, quad, higher = _linear_poly(arg.poly, dim)
        if higher:
            raise NonSupportedAtom("exp() argument degree exceeds 2")
        if const != 0:
            raise NonSupportedAtom(
                "exp() argument may not carry a constant part"
            )
        abs_atoms = []
        for d, s in arg.absd.items():
            if s > 0:
                raise NonSupportedAtom(
                    "abs() inside exp() must enter with a negative sign"
                )
            if s != 0:
                abs_atoms.append((d, -s))
        negq = tuple(tuple(-x for x in row) for row in quad)
        quad_part = None
        if any(any(x != 0 for x in row) for row in negq):
            if not is_positive_semidefinite(negq):
                raise NonSupportedAtom(
                    "quadratic exp() argument must be negative semidefinite"
                )
            quad_part = negq
        lin_part = None if is_zero(lin) else lin
        term = KTerm(
            Fraction(1),
            tuple([0] * dim),
            tuple(sorted(abs_atoms)),
            lin_part,
            quad_part,
        )
        return KExpr(dim, (term,))
    raise NonSupportedAtom(f"unsupported node {type(node).__name__}")


def parse_kexpr(text: str, dim: int) -> KExpr:
    """Parse the restricted grammar into a normal-form expression."""
    toks = _tokenize(text)
    node = _Parser(toks, dim).parse()
    return _normalize(node, dim)
