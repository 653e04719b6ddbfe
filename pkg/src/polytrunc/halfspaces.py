"""Half-space regions with per-constraint strictness, plus exact feasibility.

A region is an intersection of affine half-spaces ``<c, x> >= r`` (or ``>``
when strict) together with explicit equalities ``<e, x> = f``.  Membership
is decided exactly over the rationals.  Emptiness, relative-interior points
and boundedness are decided by Fourier-Motzkin elimination, which handles
strict constraints soundly (a combined constraint is strict when either
parent is).  Sizes are small throughout, so FM's worst case never bites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .errors import EmptyInput
from .linalg import (
    Mat,
    Vec,
    add,
    dot,
    independent_subset,
    is_zero,
    mat,
    mat_vec,
    nullspace,
    primitive,
    rank,
    scale,
    solve,
    sub,
    transpose,
    vec,
    zero_vec,
)


@dataclass(frozen=True)
class Constraint:
    """<normal, x> >= offset, strict when ``strict`` is set."""

    normal: Vec
    offset: Fraction
    strict: bool = False

    def holds(self, x: Vec) -> bool:
        v = dot(self.normal, x)
        return v > self.offset if self.strict else v >= self.offset

    def normalized(self) -> "Constraint":
        if is_zero(self.normal):
            return self
        p = primitive(self.normal)
        # primitive() keeps direction, so the scale factor is positive
        factor = None
        for a, b in zip(self.normal, p):
            if b != 0:
                factor = a / b
                break
        return Constraint(p, self.offset / factor, self.strict)


@dataclass(frozen=True)
class HalfSpaceRegion:
    """Intersection of half-spaces and equalities in Q^n."""

    dim: int
    constraints: tuple[Constraint, ...] = ()
    equalities: tuple[tuple[Vec, Fraction], ...] = ()

    @staticmethod
    def whole_space(n: int) -> "HalfSpaceRegion":
        return HalfSpaceRegion(n)

    def with_constraint(self, normal, offset, strict=False) -> "HalfSpaceRegion":
        c = Constraint(vec(normal), Fraction(offset), strict)
        return HalfSpaceRegion(self.dim, self.constraints + (c,), self.equalities)

    def with_equality(self, normal, offset) -> "HalfSpaceRegion":
        e = (vec(normal), Fraction(offset))
        return HalfSpaceRegion(self.dim, self.constraints, self.equalities + (e,))

    def contains(self, x: Sequence) -> bool:
        x = vec(x)
        for e, f in self.equalities:
            if dot(e, x) != f:
                return False
        return all(c.holds(x) for c in self.constraints)

    def intersect(self, other: "HalfSpaceRegion") -> "HalfSpaceRegion":
        assert self.dim == other.dim
        return HalfSpaceRegion(
            self.dim,
            self.constraints + other.constraints,
            self.equalities + other.equalities,
        )

    def closure(self) -> "HalfSpaceRegion":
        cs = tuple(Constraint(c.normal, c.offset, False) for c in self.constraints)
        return HalfSpaceRegion(self.dim, cs, self.equalities)

    def translate(self, t: Sequence) -> "HalfSpaceRegion":
        t = vec(t)
        cs = tuple(
            Constraint(c.normal, c.offset + dot(c.normal, t), c.strict)
            for c in self.constraints
        )
        eqs = tuple((e, f + dot(e, t)) for e, f in self.equalities)
        return HalfSpaceRegion(self.dim, cs, eqs)

    def feasible_point(self) -> Vec | None:
        return feasible_point(self)

    def is_empty(self) -> bool:
        return self.feasible_point() is None

    def hyperplanes(self) -> list[tuple[Vec, Fraction]]:
        """Canonicalized supporting hyperplanes (sign-normalized)."""
        out = []
        for c in self.constraints:
            if is_zero(c.normal):
                continue
            out.append(_canonical_hyperplane(c.normal, c.offset))
        for e, f in self.equalities:
            if is_zero(e):
                continue
            out.append(_canonical_hyperplane(e, f))
        return out


def _canonical_hyperplane(normal: Vec, offset: Fraction) -> tuple[Vec, Fraction]:
    p = primitive(normal)
    factor = None
    for a, b in zip(normal, p):
        if b != 0:
            factor = a / b
            break
    off = offset / factor
    for x in p:
        if x != 0:
            if x < 0:
                p = tuple(-y for y in p)
                off = -off
            break
    return p, off


# ---------------------------------------------------------------------------
# Fourier-Motzkin


def _fm_feasible(ineqs: list[tuple[Vec, Fraction, bool]], d: int) -> Vec | None:
    """Find t in Q^d with <c,t> >= r (or >) for every (c, r, strict)."""
    # quick contradiction / redundancy sweep on variable-free rows
    pending = []
    for c, r, s in ineqs:
        if is_zero(c):
            if r > 0 or (s and r == 0):
                return None
            continue
        pending.append((c, r, s))
    if d == 0:
        return ()
    lowers, uppers, others = [], [], []
    for c, r, s in pending:
        a = c[d - 1]
        rest = c[: d - 1]
        if a > 0:
            lowers.append((scale(rest, Fraction(-1) / a), r / a, s))
        elif a < 0:
            uppers.append((scale(rest, Fraction(-1) / a), r / a, s))
        else:
            others.append((rest, r, s))
    # t_{d-1} >= r + <cl, t'> for lowers; t_{d-1} <= r + <cu, t'> for uppers
    combined = list(others)
    seen = set()
    # lower <= upper: (cu - cl) . t' >= rl - ru
    for cl, rl, sl in lowers:
        for cu, ru, su in uppers:
            c = sub(cu, cl)
            r = rl - ru
            s = sl or su
            key = (c, r, s)
            if key in seen:
                continue
            seen.add(key)
            combined.append((c, r, s))
    tail = _fm_feasible(combined, d - 1)
    if tail is None:
        return None
    lo = None  # (value, strict)
    for cl, rl, sl in lowers:
        val = rl + dot(cl, tail)
        if lo is None or val > lo[0] or (val == lo[0] and sl):
            lo = (val, sl)
    hi = None
    for cu, ru, su in uppers:
        val = ru + dot(cu, tail)
        if hi is None or val < hi[0] or (val == hi[0] and su):
            hi = (val, su)
    if lo is None and hi is None:
        t = Fraction(0)
    elif lo is None:
        t = hi[0] - 1
    elif hi is None:
        t = lo[0] + 1
    else:
        if lo[0] > hi[0]:
            return None
        if lo[0] == hi[0]:
            if lo[1] or hi[1]:
                return None
            t = lo[0]
        else:
            t = (lo[0] + hi[0]) / 2
    return tail + (t,)


def _parametrize_equalities(
    region: HalfSpaceRegion,
) -> tuple[Vec, list[Vec]] | None:
    """Solve the equality system: returns (particular, basis) or None."""
    n = region.dim
    if not region.equalities:
        return zero_vec(n), [vec([1 if j == i else 0 for j in range(n)]) for i in range(n)]
    a = mat([e for e, _ in region.equalities])
    b = vec([f for _, f in region.equalities])
    x0 = solve(a, b)
    if x0 is None:
        return None
    basis = nullspace(a)
    return x0, basis


def feasible_point(region: HalfSpaceRegion) -> Vec | None:
    """Exact feasible point of the region, honoring strictness."""
    par = _parametrize_equalities(region)
    if par is None:
        return None
    x0, basis = par
    d = len(basis)
    cols = transpose(mat(basis)) if basis else ()
    ineqs = []
    for c in region.constraints:
        if basis:
            coeff = tuple(dot(c.normal, bv) for bv in basis)
        else:
            coeff = ()
        rhs = c.offset - dot(c.normal, x0)
        ineqs.append((coeff, rhs, c.strict))
    t = _fm_feasible(ineqs, d)
    if t is None:
        return None
    x = x0
    for ti, bv in zip(t, basis):
        x = add(x, scale(bv, ti))
    return x


def implicit_equalities(region: HalfSpaceRegion) -> list[int]:
    """Indices of non-strict constraints that hold with equality everywhere."""
    out = []
    for i, c in enumerate(region.constraints):
        if c.strict:
            continue
        probe = HalfSpaceRegion(
            region.dim,
            region.constraints[:i]
            + (Constraint(c.normal, c.offset, True),)
            + region.constraints[i + 1 :],
            region.equalities,
        )
        if probe.is_empty():
            out.append(i)
    return out


def relative_interior_point(region: HalfSpaceRegion) -> Vec | None:
    """Point in the relative interior of the region (None when empty)."""
    if region.is_empty():
        return None
    implied = set(implicit_equalities(region))
    cs = []
    eqs = list(region.equalities)
    for i, c in enumerate(region.constraints):
        if i in implied:
            eqs.append((c.normal, c.offset))
        else:
            cs.append(Constraint(c.normal, c.offset, True))
    return feasible_point(HalfSpaceRegion(region.dim, tuple(cs), tuple(eqs)))


def affine_dim(region: HalfSpaceRegion) -> int:
    """Dimension of the affine hull of the region (-1 when empty)."""
    if region.is_empty():
        return -1
    implied = implicit_equalities(region)
    eq_normals = [e for e, _ in region.equalities] + [
        region.constraints[i].normal for i in implied
    ]
    if not eq_normals:
        return region.dim
    return region.dim - rank(mat(eq_normals))


def recession_direction(region: HalfSpaceRegion) -> Vec | None:
    """A nonzero direction in the recession cone, or None when bounded.

    The region is assumed nonempty; strictness is irrelevant for recession.
    """
    n = region.dim
    hom_eq = tuple((e, Fraction(0)) for e, _ in region.equalities)
    hom_cs = tuple(
        Constraint(c.normal, Fraction(0), False) for c in region.constraints
    )
    for i in range(n):
        for sgn in (1, -1):
            probe = HalfSpaceRegion(
                n,
                hom_cs
                + (
                    Constraint(
                        vec([sgn if j == i else 0 for j in range(n)]), Fraction(1)
                    ),
                ),
                hom_eq,
            )
            p = probe.feasible_point()
            if p is not None:
                return p
    return None


def is_bounded(region: HalfSpaceRegion) -> bool:
    if region.is_empty():
        return True
    return recession_direction(region) is None


# ---------------------------------------------------------------------------
# V-representation and back


def enumerate_vertices(region: HalfSpaceRegion) -> list[Vec]:
    """Vertices of the closure of the region (active-set enumeration)."""
    n = region.dim
    closed = region.closure()
    planes = [(e, f) for e, f in closed.equalities]
    planes += [(c.normal, c.offset) for c in closed.constraints]
    planes = [p for p in planes if not is_zero(p[0])]
    out: list[Vec] = []
    seen = set()
    k = len(region.equalities)
    for idxs in combinations(range(len(planes)), n):
        a = mat([planes[i][0] for i in idxs])
        if rank(a) < n:
            continue
        b = vec([planes[i][1] for i in idxs])
        x = solve(a, b)
        if x is None or x in seen:
            continue
        if closed.contains(x):
            seen.add(x)
            out.append(x)
    return out


def extreme_rays_of_recession(region: HalfSpaceRegion) -> list[Vec]:
    """Primitive extreme rays of the recession cone of the region."""
    n = region.dim
    eq = [e for e, _ in region.equalities]
    ineq = [c.normal for c in region.constraints if not is_zero(c.normal)]
    return extreme_rays_of_cone(eq, ineq, n)


def extreme_rays_of_cone(
    eq_normals: Sequence[Vec], ineq_normals: Sequence[Vec], n: int
) -> list[Vec]:
    """Extreme rays of {y : E y = 0, C y >= 0}, assumed pointed."""
    eq_normals = [e for e in eq_normals if not is_zero(e)]
    ineq_normals = [c for c in ineq_normals if not is_zero(c)]
    base_rank = rank(mat(eq_normals)) if eq_normals else 0
    out: list[Vec] = []
    seen = set()
    m = len(ineq_normals)
    for size in range(0, m + 1):
        if base_rank + size < n - 1:
            continue
        for idxs in combinations(range(m), size):
            rows = list(eq_normals) + [ineq_normals[i] for i in idxs]
            if not rows:
                if n != 1:
                    continue
                rows_mat: Mat = ()
                ker = [vec([1])]
            else:
                rows_mat = mat(rows)
                if rank(rows_mat) != n - 1:
                    continue
                ker = nullspace(rows_mat)
            if len(ker) != 1:
                continue
            for d in (ker[0], scale(ker[0], -1)):
                if any(dot(c, d) < 0 for c in ineq_normals):
                    continue
                if any(dot(e, d) != 0 for e in eq_normals):
                    continue
                p = primitive(d)
                # extremality: active normals must have rank n-1
                active = list(eq_normals) + [
                    c for c in ineq_normals if dot(c, d) == 0
                ]
                if active and rank(mat(active)) != n - 1:
                    continue
                if not active and n != 1:
                    continue
                if p not in seen:
                    seen.add(p)
                    out.append(p)
    return out


def hrep_from_generators(
    points: Sequence[Vec], rays: Sequence[Vec], n: int
) -> HalfSpaceRegion:
    """Closed polyhedron conv(points) + cone(rays) as a HalfSpaceRegion.

    Brute-force facet enumeration on the homogenization; fine for the small
    generator counts used here.
    """
    if not points:
        raise EmptyInput("need at least one point")
    gens = [vec(p) + (Fraction(1),) for p in points]
    gens += [vec(r) + (Fraction(0),) for r in rays]
    m = n + 1
    # linear span of the homogenized generators
    span_rank = rank(mat(gens))
    eqs: list[tuple[Vec, Fraction]] = []
    if span_rank < m:
        for nrm in nullspace(mat(gens)):
            # <nrm, g> = 0 for all generators: equality nrm[:n] . x = -nrm[n]
            eqs.append((nrm[:n], -nrm[n]))
    cs: list[Constraint] = []
    seen = set()
    for idxs in combinations(range(len(gens)), span_rank - 1):
        rows = [gens[i] for i in idxs]
        rows_all = rows + [e + (-f,) for e, f in eqs]
        if rank(mat(rows_all)) != m - 1:
            continue
        ker = nullspace(mat(rows_all))
        if len(ker) != 1:
            continue
        nrm = ker[0]
        pos = any(dot(nrm, g) > 0 for g in gens)
        neg = any(dot(nrm, g) < 0 for g in gens)
        if pos and neg:
            continue
        if neg:
            nrm = scale(nrm, -1)
        if is_zero(nrm[:n]):
            continue
        c = Constraint(nrm[:n], -nrm[n], False).normalized()
        key = (c.normal, c.offset)
        if key not in seen:
            seen.add(key)
            cs.append(c)
    return HalfSpaceRegion(n, tuple(cs), tuple(eqs))
