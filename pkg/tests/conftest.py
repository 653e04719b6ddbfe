"""Shared fixtures: standard fans, families, and random generators."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from polytrunc.chains import VPolytope
from polytrunc.geometry import (
    Fan,
    Polytope,
    Space,
    SupportVector,
    build_fan,
    cone_from_rays,
    realize_polytope,
)
from polytrunc.errors import NotInPOfSigma, NotSimplicial
from polytrunc.halfspaces import hrep_from_generators, enumerate_vertices
from polytrunc.linalg import dot, mat, primitive, rank, scale, vec
from polytrunc.truncation import KFamily


@pytest.fixture(scope="session")
def line_fan() -> Fan:
    return build_fan([[[1]], [[-1]]], Space(1))


@pytest.fixture(scope="session")
def orthant_fan_2d() -> Fan:
    return build_fan(
        [[[s1, 0], [0, s2]] for s1 in (1, -1) for s2 in (1, -1)], Space(2)
    )


@pytest.fixture(scope="session")
def orthant_fan_3d() -> Fan:
    return build_fan(
        [
            [[s1, 0, 0], [0, s2, 0], [0, 0, s3]]
            for s1 in (1, -1)
            for s2 in (1, -1)
            for s3 in (1, -1)
        ],
        Space(3),
    )


@pytest.fixture(scope="session")
def hexagonal_fan() -> Fan:
    return build_fan(
        [
            [[1, 0], [1, 1]],
            [[1, 1], [0, 1]],
            [[0, 1], [-1, 0]],
            [[-1, 0], [-1, -1]],
            [[-1, -1], [0, -1]],
            [[0, -1], [1, 0]],
        ],
        Space(2),
    )


@pytest.fixture(scope="session")
def obtuse_fan() -> Fan:
    """Normal fan of a right triangle: not acute."""
    return build_fan(
        [[[-1, 0], [0, -1]], [[0, -1], [1, 1]], [[1, 1], [-1, 0]]], Space(2)
    )


@pytest.fixture(scope="session")
def diamond_fan() -> Fan:
    return build_fan(
        [
            [[1, 1], [1, -1]],
            [[1, -1], [-1, -1]],
            [[-1, -1], [-1, 1]],
            [[-1, 1], [1, 1]],
        ],
        Space(2),
    )


def segment_polytope(line_fan: Fan, a, b) -> Polytope:
    """The segment [a, b]: support numbers are (b) on +1 and (-a) on -1."""
    return realize_polytope(
        SupportVector.from_map(line_fan, {(1,): Fraction(b), (-1,): Fraction(-a)})
    )


def box_polytope(orthant_fan: Fan, lo, hi) -> Polytope:
    values = {}
    n = orthant_fan.dim
    for i in range(n):
        plus = tuple(1 if j == i else 0 for j in range(n))
        minus = tuple(-1 if j == i else 0 for j in range(n))
        values[plus] = Fraction(hi[i])
        values[minus] = -Fraction(lo[i])
    return realize_polytope(SupportVector.from_map(orthant_fan, values))


def intro_family(line_fan: Fan) -> KFamily:
    return KFamily.from_map(
        line_fan, {(): "1 + exp(-abs(dot(x,[1])))"}, default="1"
    )


def rectangle_family(orthant_fan_2d: Fan) -> KFamily:
    fxy = "exp(-abs(dot(x,[1,0]))-abs(dot(x,[0,1])))"
    gx = "exp(-abs(dot(x,[1,0])))"
    hy = "exp(-abs(dot(x,[0,1])))"
    return KFamily.from_map(
        orthant_fan_2d,
        {
            (): f"{fxy} + {gx} + {hy} + 1",
            ((1, 0),): f"{hy} + 1",
            ((-1, 0),): f"{hy} + 1",
            ((0, 1),): f"{gx} + 1",
            ((0, -1),): f"{gx} + 1",
        },
        default="1",
    )


def obtuse_family(obtuse_fan: Fan) -> KFamily:
    """The divergence counterexample family on the right-triangle fan."""
    zz = "exp(-abs(dot(x,[1,-1])))"
    return KFamily.from_map(
        obtuse_fan,
        {
            (): f"exp(-abs(dot(x,[1,0]))) + exp(-abs(dot(x,[0,1]))) + {zz}",
            ((-1, 0),): "1 + exp(-abs(dot(x,[0,1])))",
            ((0, -1),): "1 + exp(-abs(dot(x,[1,0])))",
            ((1, 1),): f"1 + {zz}",
        },
        default="1",
    )


# ---------------------------------------------------------------------------
# Random generators


def random_polygon_points(rng: random.Random, k: int = 7, spread: int = 8):
    pts = set()
    while len(pts) < k:
        pts.add(
            (
                Fraction(rng.randint(-spread * 3, spread * 3), 3),
                Fraction(rng.randint(-spread * 3, spread * 3), 3),
            )
        )
    return [vec(p) for p in pts]


def polytope_from_points(points, sp: Space) -> Polytope:
    """Realized polytope from a vertex hull (builds its outward-normal fan).

    Raises NotSimplicial when a hull vertex is not simple.
    """
    region = hrep_from_generators([vec(p) for p in points], [], sp.dim)
    verts = enumerate_vertices(region)
    facets = [(c.normal, c.offset) for c in region.constraints]
    values = {}
    for n, o in facets:
        outward = primitive(scale(n, -1))
        values[outward] = -o / _scale_factor(n, outward)
    cones = []
    for v in verts:
        incident = [
            primitive(scale(n, -1)) for n, o in facets if dot(n, v) == o
        ]
        if rank(mat(incident)) != sp.dim or len(incident) != sp.dim:
            raise NotSimplicial(f"vertex {v} is not simple")
        cones.append(cone_from_rays(incident, sp))
    fan = build_fan(cones, sp)
    support = SupportVector.from_map(fan, values)
    return realize_polytope(support)


def _scale_factor(n, outward):
    for a, b in zip(scale(n, -1), outward):
        if b != 0:
            return a / b
    raise ValueError


def random_simple_polytope_2d(rng: random.Random) -> Polytope:
    sp = Space(2)
    while True:
        try:
            p = polytope_from_points(random_polygon_points(rng), sp)
        except (NotSimplicial, NotInPOfSigma, ValueError):
            continue
        if len(p.vertices) >= 3:
            return p


def random_simple_polytope_3d(rng: random.Random, k: int = 6) -> Polytope:
    sp = Space(3)
    while True:
        pts = set()
        while len(pts) < k:
            pts.add(
                (
                    Fraction(rng.randint(-12, 12), 2),
                    Fraction(rng.randint(-12, 12), 2),
                    Fraction(rng.randint(-12, 12), 2),
                )
            )
        try:
            p = polytope_from_points([vec(q) for q in pts], sp)
        except (NotSimplicial, NotInPOfSigma, ValueError):
            continue
        if len(p.vertices) >= 4:
            return p


def random_acute_cone(rng: random.Random, dim: int, span_dim: int | None = None):
    """Simplicial cone with pairwise nonnegative ray inner products."""
    sp = Space(dim)
    d = span_dim or dim
    while True:
        rays = []
        for _ in range(d):
            rays.append(vec([rng.randint(0, 4) for _ in range(dim)]))
        if any(all(x == 0 for x in r) for r in rays):
            continue
        if rank(mat(rays)) != d:
            continue
        try:
            cone = cone_from_rays(rays, sp)
        except ValueError:
            continue
        if cone.simplicial and cone.span_dim == d:
            return cone


def random_strongly_convex_cone(rng: random.Random, dim: int):
    """Full-dimensional strongly convex cone, not necessarily acute."""
    sp = Space(dim)
    while True:
        rays = [
            vec([rng.randint(-4, 4) for _ in range(dim)]) for _ in range(dim)
        ]
        if any(all(x == 0 for x in r) for r in rays):
            continue
        if rank(mat(rays)) != dim:
            continue
        try:
            cone = cone_from_rays(rays, sp)
        except ValueError:
            continue
        return cone


def random_feasible_support(fan: Fan, rng: random.Random, base: SupportVector):
    """Random feasible perturbation of a known-feasible support vector."""
    while True:
        values = {
            r: v + Fraction(rng.randint(0, 8), 4) for r, v in base.as_dict().items()
        }
        s = SupportVector.from_map(fan, values)
        try:
            realize_polytope(s)
            return s
        except NotInPOfSigma:
            continue
