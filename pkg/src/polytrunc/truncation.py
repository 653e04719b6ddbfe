"""Truncated functions over a fan, their regions, and their integrals.

The truncated function attached to a polytope and a per-cone family is the
alternating sum of K_sigma over the strict outward tangent regions.  Its
integral and lattice sum are computed through the double partition of each
outward region into shifted pieces ``face + S-cone``, on which the
truncated function collapses to a single alternating combination per pair
of cones.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    FanMismatch,
    NoCertificate,
    NotAcute,
    NotAFacePair,
    PartitionViolation,
    UnknownCone,
)
from .geometry import (
    Cone,
    ConeKey,
    Fan,
    Polytope,
    Space,
    SupportVector,
    _as_key,
     quotient_fan,
    tangent_cone,
)
from .halfspaces import (
    Constraint,
    HalfSpaceRegion,
    extreme_rays_of_cone,
    feasible_point,
)
from .kexpr import KExpr
from .linalg import (
    Mat,
    Vec,
    add,
    dot,
    gram,
    is_zero,
    mat,
    nullspace,
    scale,
    sub,
    vec,
    zero_vec,
)
from .quadrature import (
    decompose_region,
    integrate_pieces,
    split_region_by_hyperplanes,
)


@dataclass(frozen=True)
class KFamily:
    """One function per cone of a fan (symbolic, or a raw callable)."""

    fan: Fan
    assignments: tuple[tuple[ConeKey, object], ...]

    @staticmethod
    def from_map(fan: Fan, mapping: Mapping, default=None) -> "KFamily":
        from .kexpr import parse_kexpr

        def coerce(v):
            if isinstance(v, str):
                return parse_kexpr(v, fan.dim)
            if isinstance(v, (int, Fraction)):
                return KExpr.constant(fan.dim, v)
            return v

        assigned: dict[ConeKey, object] = {}
        for k, v in mapping.items():
            key = _as_key(k)
            fan.cone(key)
            assigned[key] = coerce(v)
        for cone in fan.cones:
            if cone.key not in assigned:
                if default is None:
                    raise UnknownCone(
                        f"no K assigned to cone {sorted(cone.key)} and no default"
                    )
                assigned[cone.key] = coerce(default)
        items = tuple(
            (c.key, assigned[c.key])
            for c in sorted(fan.cones, key=lambda c: (c.span_dim, sorted(c.rays)))
        )
        return KFamily(fan, items)

    def k(self, key) -> object:
        key = _as_key(key)
        for k, v in self.assignments:
            if k == key:
                return v
        raise UnknownCone(f"no cone {sorted(key)} in the family")

    @property
    def symbolic(self) -> bool:
        return all(isinstance(v, KExpr) for _, v in self.assignments)


def k_pair(kf: KFamily, key1, key2) -> KExpr:
    """Alternating sum of K over the interval [key2, key1] of fan cones.

    Symbolic cancellation happens in the KExpr normal form.
    """
    fan = kf.fan
    big = fan.cone(key1)
    small = fan.cone(key2)
    if not small.key <= big.key:
        raise NotAFacePair(f"{sorted(small.key)} is not a face of {sorted(big.key)}")
    small_rays = sorted(small.key)
    extra = sorted(big.key - small.key)
    if not kf.symbolic:
        raise TypeError("k_pair needs a fully symbolic family")
    total = KExpr(fan.dim)
    for r in range(len(extra) + 1):
        for s in combinations(extra, r):
            tau = frozenset(small_rays) | frozenset(s)
            kt = kf.k(tau)
            total = total + kt.scaled((-1) ** len(tau))
    return total


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class SRegion:
    """Nearest-face cone of a pair of fan cones, inside the span of the big one."""

    kind: str
    region: HalfSpaceRegion
    sigma1: ConeKey
    sigma2: ConeKey
    span_equalities: tuple[Vec, ...]
    closed_ineq_normals: tuple[Vec, ...]

    def is_empty(self) -> bool:
        return self.region.is_empty()

    def extreme_rays(self) -> list[Vec]:
        return extreme_rays_of_cone(
            list(self.span_equalities), list(self.closed_ineq_normals), self.region.dim
        )


def s_region(fan: Fan, key1, key2, require_acute: bool = True) -> SRegion:
    """The region of Lemma-S12: strict positivity on the normals outside the
    face, non-positivity on the face's normals, strict positivity on all
    edge pairings, inside the span of the big cone."""
    if require_acute and not fan.acute:
        raise NotAcute("the S-region lemma requires an acute fan")
    sp = fan.space
    big = fan.cone(key1)
    small = fan.cone(key2)
    if not small.key <= big.key:
        raise NotAFacePair(f"{sorted(small.key)} is not a face of {sorted(big.key)}")
    rays = sorted(big.rays)
    normals = dict(zip(sorted(big.rays), big.facet_normals)) if big.rays else {}
    # facet_normals are aligned with the cone's stored ray order
    normals = dict(zip(big.rays, big.facet_normals))
    region = HalfSpaceRegion.whole_space(sp.dim)
    span_eqs: list[Vec] = []
    if big.rays:
        for m in nullspace(mat(big.rays)):
            region = region.with_equality(m, 0)
            span_eqs.append(m)
    else:
        for i in range(sp.dim):
            e = vec([1 if j == i else 0 for j in range(sp.dim)])
            region = region.with_equality(e, 0)
            span_eqs.append(e)
    closed_normals: list[Vec] = []
    for w in rays:
        b = normals[w]
        fb = sp.functional(b)
        if w in small.key:
            region = region.with_constraint(scale(fb, -1), 0, strict=False)
            closed_normals.append(scale(fb, -1))
        else:
            region = region.with_constraint(fb, 0, strict=True)
            closed_normals.append(fb)
    for w in rays:
        fw = sp.functional(w)
        region = region.with_constraint(fw, 0, strict=True)
        closed_normals.append(fw)
    return SRegion(
        "S", region, big.key, small.key, tuple(span_eqs), tuple(closed_normals)
    )


@dataclass(frozen=True)
class RRegion:
    """Shifted region: face of the polytope plus the matching S-cone."""

    kind: str
    polytope: Polytope
    s: SRegion
    sigma1: ConeKey
    sigma2: ConeKey

    def contains(self, x: Sequence) -> bool:
        """Exact membership: does some q in the face put x - q in the S-cone?"""
        x = vec(x)
        p = self.polytope
        sp = p.space
        values = p.support.as_dict()
        sigma1 = p.fan.cone(self.sigma1)
        q_region = HalfSpaceRegion.whole_space(sp.dim)
        for r, a in p.support.a:
            f = sp.functional(r)
            if r in sigma1.key:
                q_region = q_region.with_equality(f, a)
            else:
                q_region = q_region.with_constraint(scale(f, -1), -a)
        # x - q in S: rewrite each S constraint/equality in terms of q
        for e in self.s.span_equalities:
            q_region = q_region.with_equality(e, dot(e, x))
        for c in self.s.region.constraints:
            # <x - q, n> >= off  <=>  <-n, q> >= off - <n, x>
            q_region = q_region.with_constraint(
                scale(c.normal, -1), c.offset - dot(c.normal, x), c.strict
            )
        return feasible_point(q_region) is not None

    def closure_hrep(self) -> HalfSpaceRegion:
        from .halfspaces import hrep_from_generators

        verts = self.polytope.face_vertices(self.sigma1)
        rays = self.s.extreme_rays()
        return hrep_from_generators(verts, rays, self.polytope.space.dim)


def r_region(p: Polytope, key1, key2, require_acute: bool = True) -> RRegion:
    s = s_region(p.fan, key1, key2, require_acute=require_acute)
    return RRegion("R", p, s, _as_key(key1), _as_key(key2))


# ---------------------------------------------------------------------------
# Truncated function


@dataclass
class TruncatedFunction:
    """Evaluator plus the signed skeleton (sign, K, outward region)."""

    family: KFamily
    polytope: Polytope
    skeleton: list[tuple[int, object, HalfSpaceRegion]]

    def evaluate(self, x: Sequence) -> float | Fraction:
        exact = all(isinstance(v, (int, Fraction)) for v in x)
        xv = vec(x) if exact else [float(v) for v in x]
        total: float | Fraction = 0
        for sign, k, region in self.skeleton:
            if exact:
                inside = region.contains(xv)
            else:
                inside = _region_contains_float(region, xv)
            if not inside:
                continue
            if isinstance(k, KExpr):
                val = k.evaluate([float(v) for v in x])
            else:
                val = k([float(v) for v in x])
            total = total + sign * val
        return total

    def combination_at(self, x: Sequence) -> KExpr:
        """The symbolic combination of K's active at an exact point."""
        xv = vec(x)
        total = KExpr(self.family.fan.dim)
        for sign, k, region in self.skeleton:
            if region.contains(xv):
                total = total + k.scaled(sign)
        return total


def _region_contains_float(region: HalfSpaceRegion, x: list[float]) -> bool:
    for e, off in region.equalities:
        if abs(sum(float(a) * b for a, b in zip(e, x)) - float(off)) > 1e-12:
            return False
    for c in region.constraints:
        v = sum(float(a) * b for a, b in zip(c.normal, x))
        if c.strict:
            if not v > float(c.offset):
                return False
        else:
            if not v >= float(c.offset) - 1e-12:
                return False
    return True


def k_delta(kf: KFamily, p: Polytope) -> TruncatedFunction:
    """The truncated function: alternating K-sum over outward regions."""
    if kf.fan != p.fan:
        raise FanMismatch("family and polytope live on different fans")
    skeleton = []
    for cone in sorted(kf.fan.cones, key=lambda c: (c.span_dim, sorted(c.rays))):
        region = tangent_cone(p, cone.key, "outward")
        skeleton.append(((-1) ** cone.span_dim, kf.k(cone.key), region))
    return TruncatedFunction(kf, p, skeleton)


# ---------------------------------------------------------------------------
# Double partition verification


def _face_pairs(fan: Fan, key) -> list[tuple[ConeKey, ConeKey]]:
    """(sigma1, sigma2) with sigma <= sigma1 and sigma2 <= sigma."""
    key = _as_key(key)
    sigma = fan.cone(key)
    out = []
    for big in fan.cofaces_of(key):
        for r in range(len(sigma.rays) + 1):
            for s in combinations(sorted(sigma.rays), r):
                out.append((big.key, frozenset(s)))
    return sorted(out, key=lambda t: (sorted(map(sorted, t[0])), sorted(map(sorted, t[1]))))


def _sample_points_in_region(
    region: HalfSpaceRegion,
    n: int,
    samples: int,
    rng: random.Random,
    box: Fraction,
    far_anchors: list[tuple[Vec, Vec]],
) -> list[Vec]:
    pts = []
    denom = 101
    tries = 0
    while len(pts) < samples and tries < samples * 60:
        tries += 1
        x = vec(
            [Fraction(rng.randint(-int(box * denom), int(box * denom)), denom) for _ in range(n)]
        )
        if region.contains(x):
            pts.append(x)
    for base, direction in far_anchors:
        for t in (8, 64, 512):
            x = add(base, scale(direction, t))
            if region.contains(x):
                pts.append(x)
    return pts


def verify_double_partition(
    p: Polytope,
    key,
    samples: int = 1000,
    seed: int = 20240801,
    pair_checks: int = 100,
    raise_on_failure: bool = False,
) -> dict:
    """Sample the outward region of a cone and check each point lies in
    exactly one shifted piece; also check pairwise disjointness by exact
    feasibility on random region pairs."""
    fan = p.fan
    key = _as_key(key)
    rng = random.Random(seed)
    region = tangent_cone(p, key, "outward")
    pairs = _face_pairs(fan, key)
    rregions = [r_region(p, s1, s2, require_acute=False) for s1, s2 in pairs]
    maxcoord = max(
        (abs(x) for _, v in p.vertices for x in v), default=Fraction(1)
    )
    box = 2 * maxcoord + 8
    far_anchors = []
    for big in fan.cofaces_of(key):
        if big.span_dim != fan.dim:
            continue
        direction = zero_vec(fan.dim)
        for w in big.rays:
            direction = add(direction, w)
        far_anchors.append((p.vertex(big.key), direction))
    points = _sample_points_in_region(region, fan.dim, samples, rng, box, far_anchors)
    violations = []
    for x in points:
        containing = [
            (sorted(map(list, rr.sigma1)), sorted(map(list, rr.sigma2)))
            for rr in rregions
            if rr.contains(x)
        ]
        if len(containing) != 1:
            violations.append({"point": x, "regions": containing})
    disjoint_failures = []
    pair_list = list(combinations(range(len(rregions)), 2))
    rng.shuffle(pair_list)
    for i, j in pair_list[:pair_checks]:
        w = _regions_intersect_witness(rregions[i], rregions[j])
        if w is not None:
            disjoint_failures.append(
                {
                    "pair": (i, j),
                    "witness": w,
                }
            )
    ok = not violations and not disjoint_failures
    report = {
        "cone": sorted(map(list, key)),
        "ok": ok,
        "points_checked": len(points),
        "violations": violations,
        "pairs_checked": min(pair_checks, len(pair_list)),
        "disjoint_failures": disjoint_failures,
    }
    if not ok and raise_on_failure:
        witness = None
        if violations:
            witness = violations[0]["point"]
        elif disjoint_failures:
            witness = disjoint_failures[0]["witness"]
        raise PartitionViolation("double partition fails", witness=witness)
    return report


def _regions_intersect_witness(r1: RRegion, r2: RRegion) -> Vec | None:
    """Exact joint feasibility of x in R1 and x in R2 (variables x,q1,q2)."""
    p = r1.polytope
    sp = p.space
    n = sp.dim
    # variables: (x, q1, q2) stacked
    def pad(v: Vec, slot: int) -> Vec:
        parts = [zero_vec(n), zero_vec(n), zero_vec(n)]
        parts[slot] = vec(v)
        return parts[0] + parts[1] + parts[2]

    region = HalfSpaceRegion.whole_space(3 * n)
    values = p.support.as_dict()
    for rr, slot in ((r1, 1), (r2, 2)):
        sigma1 = p.fan.cone(rr.sigma1)
        for r, a in p.support.a:
            f = sp.functional(r)
            if r in sigma1.key:
                region = region.with_equality(pad(f, slot), a)
            else:
                region = region.with_constraint(scale(pad(f, slot), -1), -a)
        for e in rr.s.span_equalities:
            region = region.with_equality(sub(pad(e, 0), pad(e, slot)), 0)
        for c in rr.s.region.constraints:
            region = region.with_constraint(
                sub(pad(c.normal, 0), pad(c.normal, slot)), c.offset, c.strict
            )
    pt = feasible_point(region)
    if pt is None:
        return None
    return pt[:n]


# ---------------------------------------------------------------------------
# Convergence certificate


@dataclass
class ConvergenceCertificate:
    ok: bool
    acute: bool
    invariance_failures: list
    decay_failures: list
    unverified: list
    checked_pairs: int

    def summary(self) -> str:
        if self.ok:
            return f"certificate OK ({self.checked_pairs} pairs checked)"
        parts = []
        if not self.acute:
            parts.append("fan is not acute")
        if self.invariance_failures:
            parts.append(f"invariance fails at {self.invariance_failures[:3]}")
        if self.decay_failures:
            parts.append(f"decay fails for pairs {self.decay_failures[:3]}")
        if self.unverified:
            parts.append(f"unverified cones {self.unverified[:3]}")
        return "; ".join(parts)


def check_convergence_hypotheses(kf: KFamily, p: Polytope | None = None) -> ConvergenceCertificate:
    """Sound sufficient check: acute fan, per-cone invariance, and
    exponential decay of every pair combination on its (closed) S-cone."""
    fan = kf.fan
    acute = fan.acute
    invariance_failures = []
    unverified = []
    for key, k in kf.assignments:
        cone = fan.cone(key)
        if not isinstance(k, KExpr):
            unverified.append(sorted(map(list, key)))
            continue
        for w in cone.rays:
            if not k.invariant_along(w):
                invariance_failures.append((sorted(map(list, key)), list(w)))
    decay_failures = []
    checked = 0
    if kf.symbolic:
        for big in sorted(fan.cones, key=lambda c: (c.span_dim, sorted(c.rays))):
            for r in range(len(big.rays) + 1):
                for s_rays in combinations(sorted(big.rays), r):
                    small = frozenset(s_rays)
                    expr = k_pair(kf, big.key, small)
                    if expr.is_zero:
                        continue
                    sreg = s_region(fan, big.key, small, require_acute=False)
                    if sreg.is_empty():
                        continue
                    checked += 1
                    if not expr.decays_on_cone(
                        list(sreg.span_equalities), list(sreg.closed_ineq_normals)
                    ):
                        decay_failures.append(
                            (sorted(map(list, big.key)), sorted(map(list, small)))
                        )
    ok = acute and not invariance_failures and not decay_failures and not unverified
    return ConvergenceCertificate(
        ok, acute, invariance_failures, decay_failures, unverified, checked
    )


# ---------------------------------------------------------------------------
# Integrals


def _integrate_kexpr_over_region(
    expr: KExpr,
    closure: HalfSpaceRegion,
    tol: float,
    max_order: int,
) -> tuple[float, float]:
    kinks = []
    for t in expr.terms:
        for d, _ in t.abs_atoms:
            if d not in kinks:
                kinks.append(d)
    pieces = []
    for part in split_region_by_hyperplanes(closure, kinks):
        pieces.extend(decompose_region(part))
    return integrate_pieces(pieces, expr.evaluate_array, tol=tol, max_order=max_order)


def j_integral(
    kf: KFamily,
    p: Polytope,
    tol: float = 1e-9,
    certificate: ConvergenceCertificate | None = None,
    allow_uncertified: bool = False,
    max_order: int = 256,
) -> tuple[float, float]:
    """Integral of the truncated function over the whole space.

    Computed pair by pair over the shifted regions; deterministic region
    ordering and float summation via math.fsum.
    """
    fan = kf.fan
    if kf.fan != p.fan:
        raise FanMismatch("family and polytope live on different fans")
    cert = certificate or check_convergence_hypotheses(kf, p)
    if not cert.ok:
        if not allow_uncertified:
            raise NoCertificate(cert.summary())
        if not fan.acute:
            raise NotAcute("the shifted-region decomposition needs an acute fan")
    values = []
    errors = []
    for big in sorted(fan.cones, key=lambda c: (c.span_dim, sorted(c.rays))):
        for r in range(len(big.rays) + 1):
            for s_rays in combinations(sorted(big.rays), r):
                small = frozenset(s_rays)
                expr = k_pair(kf, big.key, small)
                if expr.is_zero:
                    continue
                rr = r_region(p, big.key, small, require_acute=False)
                if rr.s.is_empty():
                    continue
                closure = rr.closure_hrep()
                val, err = _integrate_kexpr_over_region(
                    expr, closure, tol, max_order
                )
                values.append(val)
                errors.append(err)
    return math.fsum(values), math.fsum(errors)


def j_zero(
    kf: KFamily,
    tol: float = 1e-9,
    certificate: ConvergenceCertificate | None = None,
    allow_uncertified: bool = False,
    max_order: int = 256,
) -> tuple[float, float]:
    """Integral of the truncation at the zero polytope: only the pairs with
    full-dimensional big cone contribute, each over its S-cone."""
    fan = kf.fan
    n = fan.dim
    if n == 0:
        k0 = kf.k(frozenset())
        if isinstance(k0, KExpr):
            return k0.evaluate([]), 0.0
        return float(k0([])), 0.0
    cert = certificate or check_convergence_hypotheses(kf)
    if not cert.ok and not allow_uncertified:
        raise NoCertificate(cert.summary())
    values = []
    errors = []
    for big in sorted(fan.cones, key=lambda c: (c.span_dim, sorted(c.rays))):
        if big.span_dim != n:
            continue
        for r in range(len(big.rays) + 1):
            for s_rays in combinations(sorted(big.rays), r):
                small = frozenset(s_rays)
                expr = k_pair(kf, big.key, small)
                if expr.is_zero:
                    continue
                sreg = s_region(fan, big.key, small, require_acute=False)
                if sreg.is_empty():
                    continue
                val, err = _integrate_kexpr_over_region(
                    expr, sreg.region.closure(), tol, max_order
                )
                values.append(val)
                errors.append(err)
    return math.fsum(values), math.fsum(errors)


def induced_family(kf: KFamily, key) -> tuple[KFamily, Mat, float]:
    """Restriction of the family to the orthogonal complement of a cone.

    Returns the family on the quotient fan, the basis matrix (rows span the
    complement), and the intrinsic volume scale sqrt(det Gram) of the basis.
    """
    fan = kf.fan
    key = _as_key(key)
    tau = fan.cone(key)
    qfan, basis = quotient_fan(fan, key)
    if tau.span_dim == 0:
        return kf, basis, 1.0
    sp = fan.space
    if qfan.dim == 0:
        k = kf.k(key)
        mapping = {frozenset(): k.restrict([]) if isinstance(k, KExpr) else k}
        return KFamily.from_map(qfan, mapping), basis, 1.0
    basis_rows = [vec(b) for b in basis]
    g = gram(basis_rows, sp.inner_product)
    scale_factor = math.sqrt(abs(float(_det_of(g))))
    from .linalg import inverse, mat_vec

    ginv = inverse(g)
    mapping = {}
    for qcone in qfan.cones:
        # find the ambient cone projecting onto qcone
        target = None
        for big in fan.cofaces_of(key):
            proj = []
            for w in big.rays:
                if w in tau.key:
                    continue
                rhs = vec([sp.pair(b, w) for b in basis_rows])
                coords = mat_vec(ginv, rhs)
                if not is_zero(coords):
                    from .linalg import primitive

                    proj.append(primitive(coords))
            if frozenset(proj) == qcone.key:
                target = big.key
                break
        if target is None:
            raise UnknownCone(
                f"no ambient cone projects onto {sorted(qcone.key)}"
            )
        k = kf.k(target)
        if isinstance(k, KExpr):
            mapping[qcone.key] = k.restrict(basis_rows)
        else:
            mapping[qcone.key] = _restrict_callable(k, basis_rows)
    return KFamily.from_map(qfan, mapping), basis, scale_factor


def _restrict_callable(k: Callable, basis_rows: list[Vec]) -> Callable:
    bf = [[float(x) for x in b] for b in basis_rows]

    def restricted(t):
        x = [sum(bf[i][j] * float(t[i]) for i in range(len(bf))) for j in range(len(bf[0]))]
        return k(x)

    return restricted


def _det_of(g: Mat) -> Fraction:
    from .linalg import det

    return det(g)


# ---------------------------------------------------------------------------
# Lattice sum


def s_lattice_sum(
    kf: KFamily,
    p: Polytope,
    shift: Sequence | None = None,
    tol: float = 1e-9,
    max_radius: int = 4096,
) -> tuple[float, float]:
    """Sum of the truncated function over shift + Z^n, by expanding shells
    with a geometric tail estimate from the observed shell decay."""
    fan = kf.fan
    n = fan.dim
    tf = k_delta(kf, p)
    shift = vec(shift) if shift is not None else zero_vec(n)
    maxcoord = max(
        (abs(x) for _, v in p.vertices for x in v), default=Fraction(0)
    )
    total = 0.0
    prev_shell = None
    r = 0
    zero_shells = 0
    while r <= max_radius:
        shell_abs = 0.0
        for m in _shell_points(n, r):
            x = add(shift, vec(m))
            val = float(tf.evaluate(x))
            total += val
            shell_abs += abs(val)
        if shell_abs == 0.0:
            zero_shells += 1
            if r > maxcoord and zero_shells >= 2:
                return total, 0.0
        else:
            zero_shells = 0
            if prev_shell and prev_shell > 0 and shell_abs < prev_shell:
                lam = shell_abs / prev_shell
                tail = shell_abs * lam / (1.0 - lam)
                if tail < tol * max(1.0, abs(total)):
                    return total, tail
        prev_shell = shell_abs if shell_abs > 0 else prev_shell
        r += 1
    return total, float("inf")


def _shell_points(n: int, r: int):
    if n == 0:
        if r == 0:
            yield ()
        return
    rng = range(-r, r + 1)
    if r == 0:
        yield (0,) * n
        return
    from itertools import product as iproduct

    for m in iproduct(rng, repeat=n):
        if max(abs(x) for x in m) == r:
            yield m


# ---------------------------------------------------------------------------
# Divergence probe


def absolute_integral_probe(
    kf: KFamily,
    p: Polytope,
    radii: Sequence[int],
    tol: float = 1e-4,
    max_order: int = 64,
) -> list[float]:
    """Integral of |k_Delta| over centered boxes of the given radii.

    Works on any complete simplicial fan (no acuteness needed): the box is
    cut into arrangement cells on which the truncation is a fixed smooth
    combination, and |f| is integrated cell by cell.
    """
    from .arrangement import collect_hyperplanes, enumerate_cells

    fan = kf.fan
    n = fan.dim
    tf = k_delta(kf, p)
    regions = [region for _, _, region in tf.skeleton]
    hyps = collect_hyperplanes(regions)
    kink_seen = {h for h in hyps}
    for _, k, _ in tf.skeleton:
        if isinstance(k, KExpr):
            for t in k.terms:
                for d, _ in t.abs_atoms:
                    h = (d, Fraction(0))
                    if h not in kink_seen:
                        kink_seen.add(h)
                        hyps.append(h)
    out = []
    for radius in radii:
        box = HalfSpaceRegion.whole_space(n)
        for i in range(n):
            e = vec([1 if j == i else 0 for j in range(n)])
            box = box.with_constraint(e, -radius).with_constraint(
                scale(e, -1), -radius
            )
        box_hyps = hyps + [h for h in box.hyperplanes() if h not in hyps]
        cells = enumerate_cells(box_hyps, n, cap=10_000)
        total = []
        for cell in cells:
            if cell.dim_deficit > 0:
                continue
            if not box.contains(cell.point):
                continue
            combo = tf.combination_at(cell.point)
            if combo.is_zero:
                continue
            closure = cell.region.closure()
            pieces = decompose_region(closure)
            val, _ = integrate_pieces(
                pieces,
                lambda pts, c=combo: np.abs(c.evaluate_array(pts)),
                tol=tol,
                max_order=max_order,
            )
            total.append(val)
        out.append(math.fsum(sorted(total)))
    return out
