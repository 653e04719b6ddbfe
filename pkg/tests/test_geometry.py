import random
from fractions import Fraction
from itertools import combinations

import pytest

from conftest import (
    box_polytope,
    polytope_from_points,
    random_acute_cone,
    random_feasible_support,
    random_simple_polytope_2d,
    random_strongly_convex_cone,
    segment_polytope,
)
from polytrunc.errors import (
    IntersectionNotFace,
    NotInPOfSigma,
    OverlappingCones,
    UnknownCone,
)
from polytrunc.geometry import (
    Cone,
    Space,
    SupportVector,
    build_fan,
    cone_from_rays,
    dual_cone,
    is_acute,
    minkowski_sum_support,
    nearest_face_partition,
    quotient_fan,
    realize_polytope,
    tangent_cone,
)
from polytrunc.halfspaces import HalfSpaceRegion
from polytrunc.linalg import (
    dot,
    mat,
    mat_vec,
    rank,
    solve,
    sub,
    vec,
)


# ---------------------------------------------------------------------------
# dual_cone


def test_dual_cone_orthant_self_dual():
    sp = Space(2)
    c = cone_from_rays([[1, 0], [0, 1]], sp)
    assert dual_cone(c, sp).key == c.key


def test_dual_cone_skew():
    sp = Space(2)
    c = cone_from_rays([[1, 0], [1, 1]], sp)
    d = dual_cone(c, sp)
    assert d.key == frozenset({vec([0, 1]), vec([1, -1])})
    # membership equivalence on random rational points (exact both routes)
    rng = random.Random(3)
    for _ in range(200):
        y = vec([Fraction(rng.randint(-20, 20), 7) for _ in range(2)])
        in_dual = all(dot(y, w) >= 0 for w in c.rays)
        coeffs = solve(tuple(zip(*d.rays)), y)
        in_cone_of_rays = coeffs is not None and all(x >= 0 for x in coeffs)
        assert in_dual == in_cone_of_rays


def test_dual_cone_of_origin_is_all_space():
    sp = Space(2)
    z = cone_from_rays([], sp)
    d = dual_cone(z, sp)
    assert d.all_space
    assert dual_cone(d, sp).is_zero


def test_dual_cone_involution_random():
    rng = random.Random(11)
    for dim in (2, 3, 4):
        for _ in range(6):
            c = random_strongly_convex_cone(rng, dim)
            if c.span_dim != dim:
                continue
            sp = Space(dim)
            dd = dual_cone(dual_cone(c, sp), sp)
            assert dd.key == c.key


def test_dual_cone_respects_inner_product():
    sp = Space(2, [[2, 0], [0, 1]])
    c = cone_from_rays([[1, 0], [0, 1]], sp)
    d = dual_cone(c, sp)
    for y in d.rays:
        for w in c.rays:
            assert sp.pair(y, w) >= 0


# ---------------------------------------------------------------------------
# is_acute


def test_acute_examples():
    sp = Space(2)
    assert is_acute(cone_from_rays([[1, 0], [0, 1]], sp), sp)
    assert not is_acute(cone_from_rays([[1, 0], [-1, 2]], sp), sp)
    sp3 = Space(3)
    assert is_acute(cone_from_rays([[1, 0, 0], [0, 1, 0], [1, 1, 1]], sp3), sp3)


def test_acute_depends_on_inner_product():
    rays = [[1, 0], [-1, 3]]
    std = Space(2)
    skewed = Space(2, [[5, 2], [2, 1]])
    c1 = cone_from_rays(rays, std)
    assert not is_acute(c1, std)
    c2 = cone_from_rays(rays, skewed)
    # <(1,0),(-1,3)> under G: (1,0) G (-1,3)^T = -5 + 6 = 1 >= 0
    assert is_acute(c2, skewed)


def test_acute_inequality_implication():
    # for acute simplicial cones: positive pairing with every facet normal
    # forces positive pairing with every ray
    rng = random.Random(5)
    for dim in (2, 3):
        sp = Space(dim)
        for _ in range(8):
            c = random_acute_cone(rng, dim)
            probe = HalfSpaceRegion.whole_space(dim)
            for b in c.facet_normals:
                probe = probe.with_constraint(sp.functional(b), 0, strict=True)
            for _ in range(40):
                x = probe.feasible_point()
                if x is None:
                    break
                assert all(sp.pair(x, w) > 0 for w in c.rays)
                # vary the sample by tightening a random constraint
                probe = probe.with_constraint(
                    sp.functional(c.facet_normals[rng.randrange(len(c.facet_normals))]),
                    dot(sp.functional(c.facet_normals[0]), x) + 1,
                    strict=True,
                )


# ---------------------------------------------------------------------------
# build_fan


def test_build_fan_line(line_fan):
    assert line_fan.complete and line_fan.simplicial and line_fan.acute
    assert len(line_fan.cones) == 3


def test_build_fan_obtuse(obtuse_fan):
    assert obtuse_fan.complete and obtuse_fan.simplicial
    assert not obtuse_fan.acute


def test_build_orthant_fans():
    for dim in (1, 2, 3):
        sp = Space(dim)
        cones = []
        for signs in _sign_patterns(dim):
            rays = [
                [s if j == i else 0 for j in range(dim)]
                for i, s in enumerate(signs)
            ]
            cones.append(rays)
        fan = build_fan(cones, sp)
        assert fan.complete and fan.simplicial and fan.acute


def _sign_patterns(dim):
    out = [[]]
    for _ in range(dim):
        out = [p + [s] for p in out for s in (1, -1)]
    return out


def test_build_fan_rejects_overlap():
    sp = Space(2)
    with pytest.raises((OverlappingCones, IntersectionNotFace)):
        build_fan([[[1, 0], [0, 1]], [[1, 1], [-1, 1]]], sp)


def test_build_fan_rejects_bad_intersection():
    sp = Space(2)
    # two cones meeting along a ray interior to one of them
    with pytest.raises((IntersectionNotFace, OverlappingCones)):
        build_fan([[[1, 0], [1, 2]], [[1, 1], [0, 1]]], sp)


def test_incomplete_fan_flag():
    sp = Space(2)
    fan = build_fan([[[1, 0], [0, 1]]], sp)
    assert not fan.complete


# ---------------------------------------------------------------------------
# realize_polytope / tangent_cone


def test_realize_segment(line_fan):
    p = segment_polytope(line_fan, -2, 3)
    assert sorted(p.all_vertices()) == [vec([-2]), vec([3])]
    assert p.vertex([[1]]) == vec([3])


def test_realize_rectangle(orthant_fan_2d):
    p = box_polytope(orthant_fan_2d, [-3, "-1/2"], [1, 2])
    assert len(p.vertices) == 4
    assert p.face_dim([[1, 0]]) == 1
    assert p.face_dim([[1, 0], [0, 1]]) == 0
    assert p.face_dim([]) == 2


def test_realize_degenerate_is_virtual(line_fan, orthant_fan_2d):
    with pytest.raises(NotInPOfSigma):
        realize_polytope(SupportVector.from_map(line_fan, {(1,): 0, (-1,): 0}))
    with pytest.raises(NotInPOfSigma):
        realize_polytope(
            SupportVector.from_map(
                orthant_fan_2d, {(1, 0): 0, (-1, 0): 0, (0, 1): 0, (0, -1): 0}
            )
        )


def test_tangent_cone_zero_cone_is_whole_space(line_fan):
    p = segment_polytope(line_fan, -2, 3)
    t = tangent_cone(p, [], "outward")
    assert not t.constraints and t.contains([100])


def test_tangent_cone_outward_segment(line_fan):
    p = segment_polytope(line_fan, -2, 3)
    t = tangent_cone(p, [[1]], "outward")
    assert t.contains([4]) and not t.contains([3]) and not t.contains([0])


def test_tangent_cone_square_vertex(orthant_fan_2d):
    p = box_polytope(orthant_fan_2d, [0, 0], [1, 1])
    t = tangent_cone(p, [[1, 0], [0, 1]], "outward")
    assert t.contains([2, 2])
    assert not t.contains([2, "1/2"]) and not t.contains([1, 1])
    tin = tangent_cone(p, [[1, 0], [0, 1]], "inward")
    assert tin.contains([1, 1]) and tin.contains([0, 0]) and not tin.contains([2, 1])


def test_normal_fan_roundtrip(hexagonal_fan):
    rng = random.Random(23)
    base = SupportVector.from_map(
        hexagonal_fan,
        {(1, 0): 2, (1, 1): 3, (0, 1): 2, (-1, 0): 2, (-1, -1): 3, (0, -1): 2},
    )
    for _ in range(5):
        s = random_feasible_support(hexagonal_fan, rng, base)
        p = realize_polytope(s)
        rebuilt = polytope_from_points(p.all_vertices(), p.space)
        assert rebuilt.fan.rays() == hexagonal_fan.rays()
        assert {k: v for k, v in rebuilt.support.a} == {k: v for k, v in s.a}


# ---------------------------------------------------------------------------
# nearest_face_partition


def _nearest_point_oracle(region, x, sp):
    """Exact nearest point by active-set enumeration (KKT solves)."""
    closed = region.closure()
    m = len(closed.constraints)
    g = sp.inner_product
    best = None
    for r in range(m + 1):
        for subset in combinations(range(m), r):
            eq_rows = [e for e, _ in closed.equalities]
            eq_rhs = [f for _, f in closed.equalities]
            for i in subset:
                eq_rows.append(closed.constraints[i].normal)
                eq_rhs.append(closed.constraints[i].offset)
            n = sp.dim
            k = len(eq_rows)
            big = []
            rhs = []
            for i in range(n):
                row = [2 * g[i][j] for j in range(n)] + [
                    eq_rows[t][i] for t in range(k)
                ]
                big.append(row)
                rhs.append(2 * dot(g[i], x))
            for t in range(k):
                big.append(list(eq_rows[t]) + [Fraction(0)] * k)
                rhs.append(eq_rhs[t])
            sol = solve(mat(big), vec(rhs))
            if sol is None:
                continue
            q = sol[:n]
            if not closed.contains(q):
                continue
            d = sub(vec(x), q)
            dist = dot(d, mat_vec(g, d))
            if best is None or dist < best[0]:
                best = (dist, q)
    return best


@pytest.mark.parametrize(
    "make_region",
    [
        lambda: HalfSpaceRegion.whole_space(2)
        .with_constraint([1, 0], 0)
        .with_constraint([0, 1], 0),
        lambda: HalfSpaceRegion.whole_space(2)
        .with_equality([0, 1], 0)
        .with_constraint([1, 0], 0)
        .with_constraint([-1, 0], -1),
        lambda: HalfSpaceRegion.whole_space(2)
        .with_constraint([1, 0], 0)
        .with_constraint([-1, 0], -2)
        .with_constraint([0, 1], 0)
        .with_constraint([0, -1], -1),
    ],
)
def test_nearest_face_partition_against_projection(make_region):
    sp = Space(2)
    region = make_region()
    parts = nearest_face_partition(region, sp)
    rng = random.Random(7)
    for _ in range(120):
        x = vec([Fraction(rng.randint(-30, 30), 7) for _ in range(2)])
        containing = [i for i, (_, reg) in enumerate(parts) if reg.contains(x)]
        assert containing, f"no closed region contains {x}"
        dist, q = _nearest_point_oracle(region, x, sp)
        for i in containing:
            face, _ = parts[i]
            assert face.closure().contains(q)


def test_nearest_face_quadrant_regions():
    sp = Space(2)
    q = cone_from_rays([[1, 0], [0, 1]], sp)
    parts = nearest_face_partition(q, sp)
    assert len(parts) == 4
    samples = {
        (2, 1): 1,
        (1, -1): 1,
        (-1, 1): 1,
        (-2, -3): 1,
    }
    for pt in samples:
        assert sum(reg.contains(pt) for _, reg in parts) == 1


def test_nearest_face_point_region():
    sp = Space(2)
    pt = (
        HalfSpaceRegion.whole_space(2)
        .with_equality([1, 0], 3)
        .with_equality([0, 1], 4)
    )
    parts = nearest_face_partition(pt, sp)
    assert len(parts) == 1
    assert parts[0][1].contains([100, -50])


def test_nearest_face_segment_three_regions():
    sp = Space(2)
    seg = (
        HalfSpaceRegion.whole_space(2)
        .with_equality([0, 1], 0)
        .with_constraint([1, 0], 0)
        .with_constraint([-1, 0], -1)
    )
    parts = nearest_face_partition(seg, sp)
    assert len(parts) == 3


def test_nearest_face_fan_of_cone_is_w_minus_b():
    # region of a face is generated by the face's rays and the negated
    # normals of the others
    sp = Space(2)
    q = cone_from_rays([[1, 0], [0, 1]], sp)
    parts = nearest_face_partition(q, sp)
    membership = {
        (1, -2): {(1, 0)},  # x-ray region: cone(e1, -e2)
        (-2, 1): {(0, 1)},
        (-1, -1): set(),  # third quadrant: region of the origin
        (1, 1): {(1, 0), (0, 1)},
    }
    for pt, expected_rays in membership.items():
        for face, reg in parts:
            if reg.contains(pt):
                # identify the face by which rays it contains
                rays_in_face = {
                    r
                    for r in [(1, 0), (0, 1)]
                    if face.closure().contains(r)
                }
                assert rays_in_face == expected_rays


# ---------------------------------------------------------------------------
# quotient_fan / minkowski


def test_quotient_fan_zero_cone(orthant_fan_2d):
    qf, basis = quotient_fan(orthant_fan_2d, [])
    assert qf is orthant_fan_2d


def test_quotient_fan_ray(orthant_fan_2d):
    qf, basis = quotient_fan(orthant_fan_2d, [[1, 0]])
    assert qf.dim == 1 and qf.complete
    assert len(qf.maximal) == 2


def test_quotient_fan_maximal(orthant_fan_2d):
    qf, basis = quotient_fan(orthant_fan_2d, [[1, 0], [0, 1]])
    assert qf.dim == 0 and qf.complete


def test_quotient_fan_hexagonal_diagonal(hexagonal_fan):
    qf, basis = quotient_fan(hexagonal_fan, [[1, 1]])
    assert qf.dim == 1 and qf.complete
    # basis must span the orthogonal complement of (1,1)
    for b in basis:
        assert dot(vec(b), vec([1, 1])) == 0


def test_minkowski_sum_support(line_fan):
    s1 = SupportVector.from_map(line_fan, {(1,): 2, (-1,): 1})  # [-1, 2]
    s2 = SupportVector.from_map(line_fan, {(1,): 4, (-1,): -3})  # [3, 4]
    s = minkowski_sum_support(s1, s2)
    p = realize_polytope(s)
    assert sorted(p.all_vertices()) == [vec([2]), vec([6])]
    zero = SupportVector.from_map(line_fan, {(1,): 0, (-1,): 0})
    assert minkowski_sum_support(s1, zero).as_dict() == s1.as_dict()


def test_minkowski_matches_setwise_sum(orthant_fan_2d):
    s1 = SupportVector.from_map(
        orthant_fan_2d, {(1, 0): 1, (-1, 0): 0, (0, 1): 1, (0, -1): 0}
    )
    s = minkowski_sum_support(s1, s1)
    p = realize_polytope(s)
    assert sorted(p.all_vertices()) == [
        vec([0, 0]),
        vec([0, 2]),
        vec([2, 0]),
        vec([2, 2]),
    ]


def test_face_dual_face_dimension_pairing():
    rng = random.Random(31)
    for dim in (2, 3):
        sp = Space(dim)
        for _ in range(5):
            c = random_acute_cone(rng, dim)
            d = dual_cone(c, sp)
            # dual faces of faces: tau = subset of rays; tau* spanned by the
            # dual-basis vectors of the complement
            for r in range(dim + 1):
                for subset in combinations(range(dim), r):
                    rays = sorted(c.rays)
                    tau_rays = [rays[i] for i in subset]
                    star_rays = [
                        b
                        for w, b in zip(rays, _aligned_normals(c))
                        if w not in tau_rays
                    ]
                    dim_tau = rank(mat(tau_rays)) if tau_rays else 0
                    dim_star = rank(mat(star_rays)) if star_rays else 0
                    assert dim_tau + dim_star == dim


def _aligned_normals(c):
    from polytrunc.geometry import dual_basis_in_span

    return dual_basis_in_span(sorted(c.rays), Space(c.dim))
