"""Convex chains: signed combinations of indicator functions of polyhedra.

Carries the Minkowski convolution (with the reflection that makes the
inverse formula actually invert: the inverse of an indicator is the
alternating face sum of the *reflected* faces), the two conical
decompositions of a polytope, the gamma chain of a cone/polytope pair,
exact integration, and lattice counting.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .arrangement import Cell, collect_hyperplanes, enumerate_cells
from .errors import (
    DivergentChain,
    EmptyInput,
    FanMismatch,
    NonGenericXi,
    NotSimplicial,
    UnboundedTerm,
    UnknownCone,
)
from .geometry import (
    Cone,
    Fan,
    Polytope,
    Space,
    SupportVector,
    _as_key,
    dual_basis_in_span,
    edge_vectors_at_vertex,
    realize_polytope,
    tangent_cone,
)
from .halfspaces import (
    Constraint,
    HalfSpaceRegion,
    enumerate_vertices,
    hrep_from_generators,
    is_bounded,
    relative_interior_point,
)
from .linalg import (
    Mat,
    Vec,
    add,
    det,
    dot,
    is_zero,
    mat,
    neg,
    rank,
    scale,
    solve_unique,
    sub,
    vec,
)


@dataclass(frozen=True)
class ChainTerm:
    coeff: Fraction
    region: HalfSpaceRegion

    def scaled(self, c: Fraction) -> "ChainTerm":
        return ChainTerm(self.coeff * c, self.region)


@dataclass(frozen=True)
class Chain:
    """Finite signed combination of indicators of half-space regions."""

    dim: int
    terms: tuple[ChainTerm, ...] = ()

    @staticmethod
    def zero(dim: int) -> "Chain":
        return Chain(dim)

    @staticmethod
    def indicator(region: HalfSpaceRegion, coeff=1) -> "Chain":
        return Chain(region.dim, (ChainTerm(Fraction(coeff), region),))

    @staticmethod
    def constant(dim: int, value=1) -> "Chain":
        if value == 0:
            return Chain(dim)
        return Chain.indicator(HalfSpaceRegion.whole_space(dim), value)

    def evaluate(self, x: Sequence) -> Fraction:
        x = vec(x)
        total = Fraction(0)
        for t in self.terms:
            if t.region.contains(x):
                total += t.coeff
        return total

    def __add__(self, other: "Chain") -> "Chain":
        assert self.dim == other.dim
        return Chain(self.dim, self.terms + other.terms)

    def __sub__(self, other: "Chain") -> "Chain":
        return self + other.scaled(-1)

    def scaled(self, c) -> "Chain":
        c = Fraction(c)
        if c == 0:
            return Chain(self.dim)
        return Chain(self.dim, tuple(t.scaled(c) for t in self.terms))

    def pointwise_product(self, other: "Chain") -> "Chain":
        """Product of the two functions (term regions intersect pairwise)."""
        assert self.dim == other.dim
        terms = []
        for a in self.terms:
            for b in other.terms:
                terms.append(ChainTerm(a.coeff * b.coeff, a.region.intersect(b.region)))
        return Chain(self.dim, tuple(terms))

    def translate(self, t: Sequence) -> "Chain":
        return Chain(
            self.dim,
            tuple(ChainTerm(c.coeff, c.region.translate(t)) for c in self.terms),
        )

    def is_empty(self) -> bool:
        return not self.terms


# ---------------------------------------------------------------------------
# Polytopes as vertex data (for convolution)


@dataclass(frozen=True)
class VPolytope:
    """Bounded polytope given by its vertices (H-rep derived on demand)."""

    dim: int
    vertices: tuple[Vec, ...]

    @staticmethod
    def from_points(points: Iterable[Sequence]) -> "VPolytope":
        pts = [vec(p) for p in points]
        if not pts:
            raise EmptyInput("no points")
        n = len(pts[0])
        region = hrep_from_generators(pts, [], n)
        verts = enumerate_vertices(region)
        return VPolytope(n, tuple(sorted(verts)))

    @staticmethod
    def from_polytope(p: Polytope) -> "VPolytope":
        return VPolytope.from_points(p.all_vertices())

    def region(self) -> HalfSpaceRegion:
        return hrep_from_generators(list(self.vertices), [], self.dim)

    def indicator(self) -> Chain:
        return Chain.indicator(self.region())

    def face_lattice(self) -> list[tuple[int, tuple[Vec, ...]]]:
        """All faces as (dim, vertex tuple), including the polytope itself."""
        region = self.region()
        faces: dict[tuple[Vec, ...], int] = {}
        m = len(region.constraints)
        for r in range(m + 1):
            for subset in combinations(range(m), r):
                vs = []
                for v in self.vertices:
                    if all(
                        dot(region.constraints[i].normal, v)
                        == region.constraints[i].offset
                        for i in subset
                    ):
                        vs.append(v)
                if not vs:
                    continue
                key = tuple(sorted(vs))
                if key not in faces:
                    diffs = [sub(v, vs[0]) for v in vs[1:]]
                    faces[key] = rank(mat(diffs)) if diffs else 0
        return sorted(((d, k) for k, d in faces.items()), key=lambda x: (x[0], x[1]))

    def minkowski(self, other: "VPolytope") -> "VPolytope":
        sums = [add(u, v) for u in self.vertices for v in other.vertices]
        return VPolytope.from_points(sums)

    def reflect(self) -> "VPolytope":
        return VPolytope.from_points([neg(v) for v in self.vertices])

    @property
    def poly_dim(self) -> int:
        diffs = [sub(v, self.vertices[0]) for v in self.vertices[1:]]
        return rank(mat(diffs)) if diffs else 0


def _as_vpolytope(p) -> VPolytope:
    if isinstance(p, VPolytope):
        return p
    if isinstance(p, Polytope):
        return VPolytope.from_polytope(p)
    raise TypeError(f"cannot interpret {type(p).__name__} as a bounded polytope")


def _term_vpolytope(term: ChainTerm) -> VPolytope:
    region = term.region.closure()
    if not is_bounded(region):
        raise UnboundedTerm("convolution needs bounded terms")
    verts = enumerate_vertices(region)
    if not verts:
        raise EmptyInput("term region is empty")
    return VPolytope(region.dim, tuple(sorted(verts)))


def convolve(c1: Chain, c2: Chain) -> Chain:
    """Bilinear extension of 1_P * 1_Q = 1_{P+Q} over bounded closed terms."""
    terms = []
    left = [( t.coeff, _term_vpolytope(t)) for t in c1.terms]
    right = [(t.coeff, _term_vpolytope(t)) for t in c2.terms]
    for ca, pa in left:
        for cb, pb in right:
            terms.append(ChainTerm(ca * cb, pa.minkowski(pb).region()))
    return Chain(c1.dim, tuple(terms))


def polytope_inverse_chain(p) -> Chain:
    """Convolution inverse of 1_P: alternating sum over reflected faces."""
    vp = _as_vpolytope(p)
    terms = []
    for d, verts in vp.face_lattice():
        refl = [neg(v) for v in verts]
        region = hrep_from_generators(refl, [], vp.dim)
        terms.append(ChainTerm(Fraction((-1) ** d), region))
    return Chain(vp.dim, tuple(terms))


@dataclass(frozen=True)
class VirtualPolytopePair:
    """Formal Minkowski difference minuend - subtrahend."""

    minuend: Polytope
    subtrahend: Polytope

    def __post_init__(self):
        if self.minuend.fan != self.subtrahend.fan:
            raise FanMismatch("virtual pairs need a common fan")

    def equivalent(self, other: "VirtualPolytopePair") -> bool:
        """P1 - P2 == P1' - P2' iff P1 + P2' == P1' + P2 as supports."""
        lhs = self.minuend.support + other.subtrahend.support
        rhs = other.minuend.support + self.subtrahend.support
        return lhs.as_dict() == rhs.as_dict()

    def support(self) -> SupportVector:
        d1 = self.minuend.support.as_dict()
        d2 = self.subtrahend.support.as_dict()
        return SupportVector(
            self.minuend.fan, tuple((r, d1[r] - d2[r]) for r in sorted(d1))
        )


def virtual_characteristic(vp: VirtualPolytopePair) -> Chain:
    """Chain of the virtual polytope: sum over faces Q of the subtrahend of
    (-1)^dim(Q) 1_{minuend - Q}."""
    p1 = _as_vpolytope(vp.minuend)
    p2 = _as_vpolytope(vp.subtrahend)
    terms = []
    for d, verts in p2.face_lattice():
        gens = [add(u, neg(w)) for u in p1.vertices for w in verts]
        region = hrep_from_generators(gens, [], p1.dim)
        terms.append(ChainTerm(Fraction((-1) ** d), region))
    return Chain(p1.dim, tuple(terms))


# ---------------------------------------------------------------------------
# Conical decompositions


def brianchon_gram(p: Polytope, version: str = "inward") -> Chain:
    """Alternating sum of tangent-cone indicators over all faces.

    ``inward`` signs by face dimension; ``outward`` by codimension with the
    strict outward regions.  Both evaluate to the indicator of the polytope.
    """
    fan = p.fan
    n = fan.dim
    terms = []
    for cone in fan.cones:
        face_dim = n - cone.span_dim
        if version == "inward":
            region = tangent_cone(p, cone.key, "inward")
            sign = (-1) ** face_dim
        elif version == "outward":
            region = tangent_cone(p, cone.key, "outward")
            sign = (-1) ** (n - face_dim)
        else:
            raise ValueError("version must be 'inward' or 'outward'")
        terms.append(ChainTerm(Fraction(sign), region))
    return Chain(n, tuple(terms))


def lawrence_varchenko(p, xi: Sequence) -> Chain:
    """Polarized vertex-cone decomposition relative to a generic direction.

    Accepts a realized Polytope, a SupportVector (virtual allowed), or a
    VirtualPolytopePair.  Flipped edges carry strict constraints.
    """
    if isinstance(p, VirtualPolytopePair):
        support = p.support()
    elif isinstance(p, Polytope):
        support = p.support
    elif isinstance(p, SupportVector):
        support = p
    else:
        raise TypeError("need a Polytope, SupportVector or VirtualPolytopePair")
    fan = support.fan
    sp = fan.space
    xi = vec(xi)
    values = support.as_dict()
    terms = []
    for key in fan.maximal:
        sigma = fan.cone(key)
        rays = sorted(sigma.rays)
        rows = mat([sp.functional(r) for r in rays])
        vertex = solve_unique(rows, vec([values[r] for r in rays]))
        edges = edge_vectors_at_vertex(fan, key)
        flipped = []
        polarized = []
        for e in edges:
            pairing = sp.pair(e, xi)
            if pairing == 0:
                raise NonGenericXi(
                    f"xi is orthogonal to an edge direction {e}", witness=e
                )
            if pairing > 0:
                polarized.append(e)
                flipped.append(False)
            else:
                polarized.append(neg(e))
                flipped.append(True)
        n_v = sum(flipped)
        duals = dual_basis_in_span(polarized, sp)
        region = HalfSpaceRegion.whole_space(sp.dim)
        for d, fl in zip(duals, flipped):
            f = sp.functional(d)
            region = region.with_constraint(f, dot(f, vertex), strict=fl)
        terms.append(ChainTerm(Fraction((-1) ** n_v), region))
    return Chain(sp.dim, tuple(terms))


def cone_face_tangent_region(
    cone_rays: Sequence[Vec],
    face_rays: Iterable[Vec],
    sp: Space,
    strict: bool = False,
) -> HalfSpaceRegion:
    """Inward tangent cone of a simplicial cone at one of its faces.

    Cut out by the dual-basis normals of the rays *not* in the face,
    extended constantly along the orthogonal complement of the span.
    """
    cone_rays = sorted(cone_rays)
    face_set = {vec(r) for r in face_rays}
    region = HalfSpaceRegion.whole_space(sp.dim)
    if not cone_rays:
        return region
    duals = dual_basis_in_span(cone_rays, sp)
    for w, b in zip(cone_rays, duals):
        if w in face_set:
            continue
        region = region.with_constraint(sp.functional(b), 0, strict=strict)
    return region


def gamma_chain(p, key) -> Chain:
    """Convex chain of the virtual polytope attached to a cone of the fan.

    Alternating sum over faces tau of the cone of the inward tangent cone
    of the cone at tau intersected with the outward tangent region of the
    polytope at tau; constant along the orthogonal complement of the cone.
    """
    if isinstance(p, Polytope):
        support = p.support
    elif isinstance(p, SupportVector):
        support = p
    else:
        raise TypeError("need a Polytope or SupportVector")
    fan = support.fan
    sp = fan.space
    sigma = fan.cone(key)
    if not sigma.simplicial:
        raise NotSimplicial("gamma chain needs a simplicial cone")
    values = support.as_dict()
    rays = sorted(sigma.rays)
    terms = []
    for r in range(len(rays) + 1):
        for subset in combinations(rays, r):
            tau_rays = list(subset)
            region = cone_face_tangent_region(rays, tau_rays, sp)
            for w in tau_rays:
                region = region.with_constraint(
                    sp.functional(w), values[w], strict=True
                )
            terms.append(ChainTerm(Fraction((-1) ** len(tau_rays)), region))
    return Chain(sp.dim, tuple(terms))


# ---------------------------------------------------------------------------
# Integration / counting / equality


def _volume_of_simplex(verts: Sequence[Vec]) -> Fraction:
    base = verts[0]
    rows = mat([sub(v, base) for v in verts[1:]])
    d = det(rows)
    return abs(d)


def triangulate_polytope(vertices: Sequence[Vec], dim: int) -> list[tuple[Vec, ...]]:
    """Full-dimensional simplices (vertex tuples) triangulating the hull."""
    verts = sorted(set(vertices))
    if len(verts) < dim + 1:
        return []
    if len(verts) == dim + 1:
        return [tuple(verts)]
    region = hrep_from_generators(verts, [], len(verts[0]))
    if len(region.equalities) != len(verts[0]) - dim:
        # degenerate hull, lower-dimensional than advertised
        return []
    apex = verts[0]
    out = []
    for c in region.constraints:
        if dot(c.normal, apex) == c.offset:
            continue
        fverts = [v for v in verts if dot(c.normal, v) == c.offset]
        for facet_simplex in _triangulate_in_affine(fverts):
            out.append((apex,) + facet_simplex)
    return out


def _triangulate_in_affine(verts: Sequence[Vec]) -> list[tuple[Vec, ...]]:
    """Triangulate the hull of points inside their own affine hull."""
    verts = sorted(set(verts))
    base = verts[0]
    diffs = [sub(v, base) for v in verts[1:]]
    d = rank(mat(diffs)) if diffs else 0
    if d == 0:
        return [tuple(verts[:1])]
    # coordinates in a basis of the affine hull
    basis_idx = []
    chosen: list[Vec] = []
    for i, v in enumerate(diffs):
        if rank(mat(chosen + [v])) > len(chosen):
            chosen.append(v)
            basis_idx.append(i)
    rows = mat(chosen)
    coords = []
    for v in verts:
        dv = sub(v, base)
        # solve rows^T c = dv in the least-norm sense: dv is in the span
        sol = _coords_in_span(rows, dv)
        coords.append(sol)
    simplices = triangulate_polytope(coords, d)
    back = {c: v for c, v in zip(coords, verts)}
    return [tuple(back[c] for c in s) for s in simplices]


def _coords_in_span(rows: Mat, v: Vec) -> Vec:
    """Coefficients c with sum c_i rows_i = v (v assumed in the row span)."""
    g = mat([[dot(a, b) for b in rows] for a in rows])
    rhs = vec([dot(a, v) for a in rows])
    return solve_unique(g, rhs)


def volume_of_region(region: HalfSpaceRegion) -> Fraction:
    """Exact Lebesgue volume of a bounded full-dimensional region."""
    verts = enumerate_vertices(region)
    if not verts:
        return Fraction(0)
    n = region.dim
    simplices = triangulate_polytope(verts, n)
    total = Fraction(0)
    for s in simplices:
        total += _volume_of_simplex(s)
    import math

    return total / math.factorial(n)


def integrate_chain(c: Chain, sp: Space | None = None) -> Fraction:
    """Exact integral (standard Lebesgue measure) of a chain.

    Bounded terms integrate directly; unbounded terms are allowed only when
    they cancel, which is detected on the full arrangement.
    """
    n = c.dim
    if n == 0:
        return c.evaluate(())
    simple = True
    for t in c.terms:
        if not is_bounded(t.region.closure()):
            simple = False
            break
    if simple:
        total = Fraction(0)
        for t in c.terms:
            closed = t.region.closure()
            if closed.is_empty():
                continue
            total += t.coeff * volume_of_region(closed)
        return total
    hyps = collect_hyperplanes([t.region for t in c.terms])
    cells = enumerate_cells(hyps, n)
    total = Fraction(0)
    for cell in cells:
        if cell.dim_deficit > 0:
            continue
        value = c.evaluate(cell.point)
        closed = cell.region.closure()
        if not is_bounded(closed):
            if value != 0:
                raise DivergentChain(
                    f"unbounded cell at {cell.point} has value {value}"
                )
            continue
        if value != 0:
            total += value * volume_of_region(closed)
    return total


def _support_bounding_box(c: Chain) -> tuple[list[Fraction], list[Fraction]] | None:
    verts: list[Vec] = []
    for t in c.terms:
        verts.extend(enumerate_vertices(t.region.closure()))
    if not verts:
        return None
    n = c.dim
    lo = [min(v[i] for v in verts) for i in range(n)]
    hi = [max(v[i] for v in verts) for i in range(n)]
    return lo, hi


def lattice_count_chain(c: Chain, shift: Sequence | None = None) -> Fraction:
    """Sum of coefficients over lattice points: sum_m c(shift + m).

    Requires bounded support after cancellation.
    """
    n = c.dim
    if n == 0:
        return c.evaluate(())
    shift = vec(shift) if shift is not None else vec([0] * n)
    unbounded = [t for t in c.terms if not is_bounded(t.region.closure())]
    if unbounded:
        hyps = collect_hyperplanes([t.region for t in c.terms])
        cells = enumerate_cells(hyps, n)
        for cell in cells:
            closed = cell.region.closure()
            if not is_bounded(closed) and c.evaluate(cell.point) != 0:
                raise DivergentChain(
                    f"unbounded support at {cell.point}"
                )
    box = _support_bounding_box(c)
    if box is None:
        return Fraction(0)
    lo, hi = box
    import math

    ranges = []
    for i in range(n):
        a = math.ceil(lo[i] - shift[i])
        b = math.floor(hi[i] - shift[i])
        ranges.append(range(a, b + 1))
    total = Fraction(0)
    from itertools import product

    for m in product(*ranges):
        x = add(shift, vec(m))
        total += c.evaluate(x)
    return total


def chains_equal(
    c1: Chain,
    c2: Chain,
    mode: str = "exact_arrangement",
    samples: int = 10_000,
    seed: int = 20240801,
    box: float = 10.0,
) -> tuple[bool, Vec | None]:
    """Decide chain equality; returns (equal, counterexample_or_None).

    Exact mode evaluates both chains on a witness point of every cell (all
    dimensions) of the joint arrangement.  Sampled mode compares at seeded
    random rational points in a box.
    """
    n = c1.dim
    assert n == c2.dim
    if mode == "exact_arrangement":
        hyps = collect_hyperplanes(
            [t.region for t in c1.terms] + [t.region for t in c2.terms]
        )
        cells = enumerate_cells(hyps, n)
        for cell in cells:
            if c1.evaluate(cell.point) != c2.evaluate(cell.point):
                return False, cell.point
        return True, None
    if mode == "sampled":
        rng = random.Random(seed)
        denom = 997
        spread = int(box * denom)
        for _ in range(samples):
            x = vec([Fraction(rng.randint(-spread, spread), denom) for _ in range(n)])
            if c1.evaluate(x) != c2.evaluate(x):
                return False, x
        return True, None
    raise ValueError("mode must be 'exact_arrangement' or 'sampled'")
