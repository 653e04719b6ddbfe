"""Cones, fans, polytopes and their exact-arithmetic operations.

Conventions
-----------
* Ray generators are primitive integer vectors (rational inputs are scaled).
  Support numbers are taken relative to these primitive generators, not
  unit vectors; every statement downstream is invariant under the per-ray
  positive rescaling this amounts to.
* A support vector ``a`` over the rays of a complete simplicial fan
  describes the polytope ``{x : <x, v_rho> <= a_rho for all rays rho}``
  where ``v_rho`` is the primitive generator and ``<.,.>`` the space's
  inner product.  Under this convention the rays of the fan are the
  *outward* facet normals of the polytope, the vertex attached to a
  maximal cone sigma is the one whose facet normals are sigma's rays, and
  ``a_rho`` is the value of the support function at ``v_rho``.
* The outward tangent region at the face attached to sigma is
  ``{x : <x, v_rho> > a_rho for all rays rho of sigma}`` (strict), the
  inward tangent cone uses ``<=`` (non-strict).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import (
    DimensionMismatch,
    EmptyInput,
    FanMismatch,
    IntersectionNotFace,
    NotInPOfSigma,
    NotSimplicial,
    OverlappingCones,
    SingularSystem,
    UnknownCone,
)
from .halfspaces import (
    Constraint,
    HalfSpaceRegion,
    enumerate_vertices,
    extreme_rays_of_cone,
    extreme_rays_of_recession,
    hrep_from_generators,
    relative_interior_point,
)
from .linalg import (
    Mat,
    Vec,
    add,
    dot,
    gram,
    identity,
    integer_kernel_basis,
    inverse,
    is_positive_definite,
    is_zero,
    mat,
    mat_vec,
    nullspace,
    primitive,
    rank,
    scale,
    solve,
    solve_unique,
    sub,
    vec,
    zero_vec,
)

ConeKey = frozenset


@dataclass(frozen=True)
class Space:
    """Ambient rational vector space with a fixed inner product."""

    dim: int
    inner_product: Mat = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dimension must be nonnegative")
        ip = self.inner_product
        if ip is None:
            object.__setattr__(self, "inner_product", identity(self.dim))
            return
        ip = mat(ip)
        if len(ip) != self.dim or any(len(r) != self.dim for r in ip):
            raise DimensionMismatch("inner product matrix has wrong shape")
        for i in range(self.dim):
            for j in range(self.dim):
                if ip[i][j] != ip[j][i]:
                    raise ValueError("inner product must be symmetric")
        if self.dim > 0 and not is_positive_definite(ip):
            raise ValueError("inner product must be positive definite")
        object.__setattr__(self, "inner_product", ip)

    def pair(self, x: Vec, y: Vec) -> Fraction:
        return dot(x, mat_vec(self.inner_product, y))

    def functional(self, y: Vec) -> Vec:
        """The covector x |-> <x, y> as a literal coefficient vector."""
        return mat_vec(self.inner_product, y)

    @property
    def is_standard(self) -> bool:
        return self.inner_product == identity(self.dim)


@dataclass(frozen=True)
class Cone:
    """Rational polyhedral cone given by primitive ray generators.

    ``lineality`` is empty for strongly convex cones; it is only populated
    on duals of lower-dimensional cones.  ``facet_normals`` is the dual
    basis inside the span (simplicial cones only), index-aligned with
    ``rays`` and scaled primitive.
    """

    dim: int
    rays: tuple[Vec, ...]
    facet_normals: tuple[Vec, ...] = ()
    span_dim: int = 0
    simplicial: bool = False
    lineality: tuple[Vec, ...] = ()
    all_space: bool = False

    @property
    def key(self) -> ConeKey:
        return frozenset(self.rays)

    @property
    def is_zero(self) -> bool:
        return not self.rays and not self.all_space and not self.lineality

    def __repr__(self):
        if self.all_space:
            return f"Cone(all of Q^{self.dim})"
        rays = ", ".join(str(tuple(int(x) if x.denominator == 1 else x for x in r)) for r in self.rays)
        return f"Cone[{rays}]"


def cone_from_rays(rays: Iterable[Sequence], sp: Space) -> Cone:
    """Build a strongly convex cone from generators (deduped, primitive)."""
    prim: list[Vec] = []
    seen = set()
    for r in rays:
        r = vec(r)
        if len(r) != sp.dim:
            raise DimensionMismatch("ray has wrong length")
        if is_zero(r):
            continue
        p = primitive(r)
        if p not in seen:
            seen.add(p)
            prim.append(p)
    if not prim:
        return Cone(sp.dim, (), (), 0, True)
    # strongly convex iff some functional is positive on every generator
    probe = HalfSpaceRegion(
        sp.dim,
        tuple(Constraint(r, Fraction(1)) for r in prim),
    )
    if probe.is_empty():
        raise ValueError("cone is not strongly convex")
    span_dim = rank(mat(prim))
    simplicial = span_dim == len(prim)
    normals: tuple[Vec, ...] = ()
    if simplicial:
        normals = tuple(dual_basis_in_span(prim, sp))
    return Cone(sp.dim, tuple(prim), normals, span_dim, simplicial)


def dual_basis_in_span(rays: Sequence[Vec], sp: Space) -> list[Vec]:
    """Vectors b_j in span(rays) with <w_i, b_j> = 0 for i != j, > 0 at i = j.

    Exact duals are scaled to primitive, so the diagonal pairing is some
    positive rational rather than 1.
    """
    g = gram(rays, sp.inner_product)
    ginv = inverse(g)
    out = []
    for j in range(len(rays)):
        coeffs = tuple(ginv[k][j] for k in range(len(rays)))
        b = zero_vec(sp.dim)
        for c, w in zip(coeffs, rays):
            b = add(b, scale(w, c))
        out.append(primitive(b))
    return out


def cone_hrep(c: Cone, sp: Space) -> HalfSpaceRegion:
    """The cone as a half-space region (span equalities + facet inequalities)."""
    if c.all_space:
        return HalfSpaceRegion.whole_space(sp.dim)
    if c.is_zero:
        eqs = tuple((vec(row), Fraction(0)) for row in identity(sp.dim))
        return HalfSpaceRegion(sp.dim, (), eqs)
    region = HalfSpaceRegion.whole_space(sp.dim)
    for m in nullspace(mat(c.rays + c.lineality)):
        region = region.with_equality(m, 0)
    if c.simplicial:
        for b in c.facet_normals:
            region = region.with_constraint(sp.functional(b), 0)
    else:
        for b in _facet_normals_general(c, sp):
            region = region.with_constraint(sp.functional(b), 0)
    return region


def _facet_normals_general(c: Cone, sp: Space) -> list[Vec]:
    """Facet normals (within the span) of a non-simplicial pointed cone."""
    gens = list(c.rays)
    span_basis = gens
    d = rank(mat(gens))
    out = []
    seen = set()
    for idxs in combinations(range(len(gens)), d - 1):
        rows = [gens[i] for i in idxs]
        if rank(mat(rows)) != d - 1:
            continue
        # normal in span: y = sum c_k gens_k with <y, rows_i> = 0
        g = gram(gens, sp.inner_product)
        sys_rows = mat([tuple(sp.pair(r, gk) for gk in gens) for r in rows])
        for coeffs in nullspace(sys_rows):
            y = zero_vec(sp.dim)
            for ck, gk in zip(coeffs, gens):
                y = add(y, scale(gk, ck))
            if is_zero(y):
                continue
            vals = [sp.pair(y, g2) for g2 in gens]
            if all(v >= 0 for v in vals):
                pass
            elif all(v <= 0 for v in vals):
                y = scale(y, -1)
            else:
                continue
            p = primitive(y)
            if p not in seen:
                seen.add(p)
                out.append(p)
    return out


def dual_cone(c: Cone, sp: Space) -> Cone:
    """{y : <y, x> >= 0 for all x in c}.

    Dual of the zero cone is the whole space (flagged); duals of
    lower-dimensional cones carry a lineality part.
    """
    if c.dim != sp.dim:
        raise DimensionMismatch("cone/space dimension mismatch")
    if c.all_space:
        return Cone(sp.dim, (), (), 0, True)
    if c.is_zero:
        return Cone(sp.dim, (), (), sp.dim, False, (), all_space=True)
    ineq = [sp.functional(w) for w in c.rays]
    lin = nullspace(mat(ineq))
    lin = tuple(primitive(v) for v in lin)
    rays = extreme_rays_of_cone([v for v in lin], ineq, sp.dim)
    span_dim = rank(mat(tuple(rays) + lin)) if (rays or lin) else 0
    simplicial = not lin and span_dim == len(rays)
    normals: tuple[Vec, ...] = ()
    if simplicial and rays:
        normals = tuple(dual_basis_in_span(rays, sp))
    return Cone(sp.dim, tuple(sorted(rays)), normals, span_dim, simplicial, lin)


def is_acute(c: Cone, sp: Space) -> bool:
    """True when all pairwise ray inner products are >= 0 (right angles ok)."""
    for i, u in enumerate(c.rays):
        for v in c.rays[i:]:
            if sp.pair(u, v) < 0:
                return False
    return True


@dataclass(frozen=True)
class Fan:
    """Face-closed collection of simplicial cones, with validity flags."""

    space: Space
    cones: tuple[Cone, ...]
    maximal: tuple[ConeKey, ...]
    complete: bool
    simplicial: bool
    acute: bool
    rational: bool
    _index: dict = field(repr=False, hash=False, compare=False, default_factory=dict)

    def __post_init__(self):
        idx = {c.key: c for c in self.cones}
        object.__setattr__(self, "_index", idx)

    def cone(self, key) -> Cone:
        key = _as_key(key)
        if key not in self._index:
            raise UnknownCone(f"no cone with rays {sorted(key)}")
        return self._index[key]

    def __contains__(self, key) -> bool:
        return _as_key(key) in self._index

    @property
    def dim(self) -> int:
        return self.space.dim

    def rays(self) -> list[Vec]:
        """The rays of the fan, canonically ordered."""
        out = sorted({r for c in self.cones for r in c.rays})
        return out

    def cones_of_dim(self, d: int) -> list[Cone]:
        return [c for c in self.cones if c.span_dim == d]

    def faces_of(self, key) -> list[Cone]:
        c = self.cone(key)
        return [self.cone(frozenset(s)) for r in range(len(c.rays) + 1) for s in combinations(c.rays, r)]

    def cofaces_of(self, key) -> list[Cone]:
        key = _as_key(key)
        self.cone(key)
        return [c for c in self.cones if key <= c.key]

    def is_face_pair(self, small, big) -> bool:
        return _as_key(small) <= _as_key(big)


def _as_key(key) -> ConeKey:
    if isinstance(key, Cone):
        return key.key
    if isinstance(key, frozenset):
        return key
    return frozenset(vec(r) for r in key)


def build_fan(maximal_cones: Sequence[Cone | Sequence], sp: Space | None = None) -> Fan:
    """Assemble and validate a fan from its maximal cones.

    Cones may be Cone objects or bare ray lists (then ``sp`` is required).
    Completeness uses the two-sided-ridge criterion, valid for pure
    full-dimensional simplicial collections.
    """
    cones_in: list[Cone] = []
    for c in maximal_cones:
        if isinstance(c, Cone):
            cones_in.append(c)
        else:
            if sp is None:
                raise ValueError("ray lists require an explicit Space")
            cones_in.append(cone_from_rays(c, sp))
    if sp is None:
        if not cones_in:
            raise EmptyInput("no cones")
        sp = Space(cones_in[0].dim)
    if sp.dim == 0 or all(c.is_zero for c in cones_in):
        zero = Cone(sp.dim, (), (), 0, True)
        return Fan(sp, (zero,), (zero.key,), sp.dim == 0, True, True, True)
    for c in cones_in:
        if not c.simplicial:
            raise NotSimplicial(f"{c} is not simplicial")
    # drop cones that are faces of others, dedupe
    maximal: list[Cone] = []
    keys = set()
    for c in cones_in:
        if c.key in keys:
            continue
        if any(c.key < o.key for o in cones_in):
            continue
        keys.add(c.key)
        maximal.append(c)
    # pairwise validation
    for a, b in combinations(maximal, 2):
        _check_intersection(a, b, sp)
    # face closure (subsets of rays, since cones are simplicial)
    all_cones: dict[ConeKey, Cone] = {}
    for c in maximal:
        for r in range(len(c.rays) + 1):
            for s in combinations(c.rays, r):
                k = frozenset(s)
                if k not in all_cones:
                    all_cones[k] = cone_from_rays(s, sp)
    cones = tuple(
        sorted(all_cones.values(), key=lambda c: (c.span_dim, sorted(c.rays)))
    )
    pure_full = all(c.span_dim == sp.dim for c in maximal)
    complete = pure_full and _two_sided_ridges(maximal, sp)
    acute = all(is_acute(c, sp) for c in maximal)
    return Fan(
        sp,
        cones,
        tuple(c.key for c in sorted(maximal, key=lambda c: sorted(c.rays))),
        complete,
        True,
        acute,
        True,
    )


def _check_intersection(a: Cone, b: Cone, sp: Space) -> None:
    common = a.key & b.key
    ra = cone_hrep(a, sp)
    rb = cone_hrep(b, sp)
    inter = ra.intersect(rb)
    eq = [e for e, _ in inter.equalities]
    ineq = [c.normal for c in inter.constraints]
    rays = extreme_rays_of_cone(eq, ineq, sp.dim)
    if frozenset(rays) != common:
        if a.span_dim == b.span_dim == sp.dim:
            # full-dimensional overlap gives the stronger error when the
            # intersection is full-dimensional
            pt = HalfSpaceRegion(
                sp.dim,
                tuple(
                    Constraint(c.normal, c.offset, True) for c in inter.constraints
                ),
                inter.equalities,
            ).feasible_point()
            if pt is not None:
                raise OverlappingCones(
                    f"cones {a} and {b} share interior", witness=pt
                )
        raise IntersectionNotFace(
            f"intersection of {a} and {b} is not their common face",
            witness=(a.rays, b.rays),
        )


def _two_sided_ridges(maximal: Sequence[Cone], sp: Space) -> bool:
    counts: dict[ConeKey, int] = {}
    for c in maximal:
        for s in combinations(c.rays, sp.dim - 1):
            k = frozenset(s)
            counts[k] = counts.get(k, 0) + 1
    return all(v == 2 for v in counts.values())


# ---------------------------------------------------------------------------
# Support vectors and polytopes


@dataclass(frozen=True)
class SupportVector:
    """Assignment of a rational support number to every ray of a fan."""

    fan: Fan
    a: tuple[tuple[Vec, Fraction], ...]

    @staticmethod
    def from_map(fan: Fan, values: Mapping) -> "SupportVector":
        rays = fan.rays()
        norm: dict[Vec, Fraction] = {}
        for k, v in values.items():
            k = primitive(vec(k))
            norm[k] = Fraction(v)
        missing = [r for r in rays if r not in norm]
        extra = [k for k in norm if k not in set(rays)]
        if missing or extra:
            raise FanMismatch(
                f"support numbers must cover exactly the fan rays; "
                f"missing {missing}, extraneous {extra}"
            )
        return SupportVector(fan, tuple((r, norm[r]) for r in rays))

    def value(self, ray) -> Fraction:
        ray = primitive(vec(ray))
        for r, v in self.a:
            if r == ray:
                return v
        raise UnknownCone(f"{ray} is not a ray of the fan")

    def as_dict(self) -> dict[Vec, Fraction]:
        return dict(self.a)

    def scale(self, t) -> "SupportVector":
        t = Fraction(t)
        return SupportVector(self.fan, tuple((r, t * v) for r, v in self.a))

    def __add__(self, other: "SupportVector") -> "SupportVector":
        return minkowski_sum_support(self, other)


def minkowski_sum_support(s1: SupportVector, s2: SupportVector) -> SupportVector:
    """Componentwise addition: the support vector of the Minkowski sum."""
    if s1.fan is not s2.fan and s1.fan != s2.fan:
        raise FanMismatch("support vectors over different fans")
    d2 = s2.as_dict()
    return SupportVector(s1.fan, tuple((r, v + d2[r]) for r, v in s1.a))


@dataclass(frozen=True)
class Polytope:
    """A realized polytope normal to a complete simplicial fan."""

    support: SupportVector
    vertices: tuple[tuple[ConeKey, Vec], ...]

    @property
    def fan(self) -> Fan:
        return self.support.fan

    @property
    def space(self) -> Space:
        return self.fan.space

    def vertex(self, key) -> Vec:
        key = _as_key(key)
        for k, v in self.vertices:
            if k == key:
                return v
        raise UnknownCone("not a maximal cone of the fan")

    def face_vertices(self, key) -> list[Vec]:
        """Vertices of the face attached to the given cone."""
        key = _as_key(key)
        self.fan.cone(key)
        out = []
        for k, v in self.vertices:
            if key <= k:
                out.append(v)
        return out

    def face_dim(self, key) -> int:
        vs = self.face_vertices(key)
        if not vs:
            return -1
        diffs = [sub(v, vs[0]) for v in vs[1:]]
        return rank(mat(diffs)) if diffs else 0

    def all_vertices(self) -> list[Vec]:
        return [v for _, v in self.vertices]

    def hrep(self) -> HalfSpaceRegion:
        region = HalfSpaceRegion.whole_space(self.space.dim)
        sp = self.space
        for r, a in self.support.a:
            region = region.with_constraint(scale(sp.functional(r), -1), -a)
        return region

    def contains(self, x) -> bool:
        return self.hrep().contains(x)

    def edge_vectors_at(self, key) -> list[Vec]:
        """Primitive edge directions of the polytope at a vertex."""
        return edge_vectors_at_vertex(self.fan, key)


def edge_vectors_at_vertex(fan: Fan, key) -> list[Vec]:
    """Edge directions at the vertex of a maximal cone, from fan data only.

    Works for virtual polytopes too: the directions depend only on the fan.
    The i-th edge keeps all facets of the vertex active except the i-th.
    """
    sigma = fan.cone(key)
    if sigma.span_dim != fan.dim:
        raise UnknownCone("edge vectors only defined at maximal cones")
    sp = fan.space
    rays = sorted(sigma.rays)
    rows = mat([sp.functional(r) for r in rays])
    out = []
    for i in range(len(rays)):
        rhs = vec([-1 if j == i else 0 for j in range(len(rays))])
        out.append(primitive(solve_unique(rows, rhs)))
    return out


def realize_polytope(s: SupportVector) -> Polytope:
    """Solve for the vertices; raise NotInPOfSigma when only virtual."""
    fan = s.fan
    sp = fan.space
    if not (fan.complete and fan.simplicial):
        raise SingularSystem("need a complete simplicial fan")
    values = s.as_dict()
    verts: list[tuple[ConeKey, Vec]] = []
    for key in fan.maximal:
        sigma = fan.cone(key)
        rays = sorted(sigma.rays)
        rows = mat([sp.functional(r) for r in rays])
        rhs = vec([values[r] for r in rays])
        try:
            v = solve_unique(rows, rhs)
        except ValueError as exc:
            raise SingularSystem(str(exc)) from exc
        verts.append((key, v))
    # strict feasibility: every vertex strictly inside all other facets
    for key, v in verts:
        sigma_rays = set(fan.cone(key).rays)
        for r, a in s.a:
            if r in sigma_rays:
                continue
            if sp.pair(v, r) >= a:
                raise NotInPOfSigma(
                    f"vertex {v} violates the facet of ray {r}: support vector is virtual"
                )
    seen = {}
    for key, v in verts:
        if v in seen:
            raise NotInPOfSigma(f"vertices of {sorted(key)} and {sorted(seen[v])} coincide")
        seen[v] = key
    return Polytope(s, tuple(verts))


def tangent_cone(p: Polytope, key, direction: str) -> HalfSpaceRegion:
    """Inward ('inward') or outward ('outward') tangent region at a face.

    Outward regions are strict; the zero cone yields the whole space.
    """
    fan = p.fan
    sigma = fan.cone(key)
    sp = p.space
    values = p.support.as_dict()
    region = HalfSpaceRegion.whole_space(sp.dim)
    for r in sorted(sigma.rays):
        a = values[r]
        f = sp.functional(r)
        if direction == "inward":
            region = region.with_constraint(scale(f, -1), -a, strict=False)
        elif direction == "outward":
            region = region.with_constraint(f, a, strict=True)
        else:
            raise ValueError("direction must be 'inward' or 'outward'")
    return region


# ---------------------------------------------------------------------------
# Nearest-face partition


def nearest_face_partition(
    p: HalfSpaceRegion | Cone, sp: Space
) -> list[tuple[HalfSpaceRegion, HalfSpaceRegion]]:
    """Closed regions of points nearest to each face of a polyhedron.

    Returns (face, region) pairs; regions tile the space and distances are
    measured in the space's inner product.  For a cone, the regions are the
    maximal cones of its nearest-face fan.
    """
    if isinstance(p, Cone):
        p = cone_hrep(p, sp)
    if p.is_empty():
        raise EmptyInput("empty polyhedron")
    ginv = inverse(sp.inner_product)
    faces = _enumerate_faces(p)
    out = []
    for tight, face in faces:
        verts = enumerate_vertices(face)
        if not verts:
            # faces of a polyhedron with nonempty relint always have
            # vertices unless the polyhedron has lineality; use any point
            pt = relative_interior_point(face)
            verts = [pt]
        rays = extreme_rays_of_recession(face)
        normal_gens = [
            primitive(mat_vec(ginv, scale(p.constraints[i].normal, -1)))
            for i in tight
        ]
        for e, _ in p.equalities:
            if not is_zero(e):
                d = mat_vec(ginv, e)
                normal_gens.append(primitive(d))
                normal_gens.append(primitive(scale(d, -1)))
        region = hrep_from_generators(verts, list(rays) + normal_gens, sp.dim)
        out.append((face, region))
    return out


def _enumerate_faces(p: HalfSpaceRegion) -> list[tuple[tuple[int, ...], HalfSpaceRegion]]:
    """All nonempty faces as (tight constraint indices, face region)."""
    closed = p.closure()
    m = len(closed.constraints)
    seen: dict[tuple[int, ...], HalfSpaceRegion] = {}
    for r in range(m + 1):
        for subset in combinations(range(m), r):
            cs = []
            eqs = list(closed.equalities)
            for i, c in enumerate(closed.constraints):
                if i in subset:
                    eqs.append((c.normal, c.offset))
                else:
                    cs.append(c)
            face = HalfSpaceRegion(p.dim, tuple(cs), tuple(eqs))
            pt = relative_interior_point(face)
            if pt is None:
                continue
            # canonical tight set: all constraints active on the relint point
            tight = tuple(
                i
                for i, c in enumerate(closed.constraints)
                if dot(c.normal, pt) == c.offset
            )
            if tight not in seen:
                seen[tight] = face
    return sorted(seen.items())


# ---------------------------------------------------------------------------
# Quotient fan


def quotient_fan(f: Fan, key, sp: Space | None = None) -> tuple[Fan, Mat]:
    """Project the star of a cone onto its orthogonal complement.

    Returns the quotient fan (in coordinates of a basis of the complement)
    together with the basis matrix whose columns map quotient coordinates
    back into the ambient space.  The quotient space inherits the Gram
    matrix of the basis so pairings agree with ambient pairings.
    """
    sp = sp or f.space
    tau = f.cone(key)
    if tau.span_dim == 0:
        return f, identity(sp.dim)
    rows = mat([sp.functional(w) for w in tau.rays])
    basis = [vec(b) for b in integer_kernel_basis(rows)]
    k = len(basis)
    cols = tuple(zip(*basis)) if basis else ()
    if k == 0:
        qsp = Space(0)
        zero = Cone(0, (), (), 0, True)
        qfan = Fan(qsp, (zero,), (zero.key,), True, True, True, True)
        return qfan, ()
    g = gram(basis, sp.inner_product)
    qsp = Space(k, g)
    ginv = inverse(g)
    maximal = []
    for mkey in f.maximal:
        sigma = f.cone(mkey)
        if not tau.key <= sigma.key:
            continue
        proj_rays = []
        for w in sigma.rays:
            if w in tau.key:
                continue
            rhs = vec([sp.pair(b, w) for b in basis])
            coords = mat_vec(ginv, rhs)
            if not is_zero(coords):
                proj_rays.append(coords)
        maximal.append(cone_from_rays(proj_rays, qsp))
    qfan = build_fan(maximal, qsp)
    basis_matrix = mat(basis)  # rows are basis vectors
    return qfan, basis_matrix
