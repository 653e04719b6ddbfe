"""Incidence algebra of the face poset of a simplicial cone.

Scalars are either rationals or convex chains; chain-valued elements
multiply POINTWISE (product of the piecewise-constant functions), which is
what turns the combinatorial inversion lemma into chain identities.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable

from .chains import Chain, chains_equal, cone_face_tangent_region
from .errors import NotSimplicial, PosetMismatch
from .geometry import Cone, Space, dual_basis_in_span
from .linalg import Vec, vec

FaceKey = frozenset


@dataclass(frozen=True)
class FacePoset:
    """Faces of a simplicial cone ordered by inclusion (a boolean lattice)."""

    cone: Cone
    space: Space

    def __post_init__(self):
        if not self.cone.simplicial:
            raise NotSimplicial("face posets require simplicial cones")

    @property
    def rays(self) -> tuple[Vec, ...]:
        return tuple(sorted(self.cone.rays))

    def elements(self) -> list[FaceKey]:
        rays = self.rays
        out = []
        for r in range(len(rays) + 1):
            for s in combinations(rays, r):
                out.append(frozenset(s))
        return out

    def dim(self, el: FaceKey) -> int:
        return len(el)

    def leq(self, a: FaceKey, b: FaceKey) -> bool:
        return a <= b

    def intervals(self) -> list[tuple[FaceKey, FaceKey]]:
        els = self.elements()
        return [(a, b) for a in els for b in els if a <= b]

    def top(self) -> FaceKey:
        return frozenset(self.rays)

    def bottom(self) -> FaceKey:
        return frozenset()


@dataclass(frozen=True)
class IncidenceElement:
    """Function on the intervals of a face poset, rational- or chain-valued."""

    poset: FacePoset
    values: dict
    ring: str  # 'rational' | 'chain'

    def __call__(self, a, b):
        key = (frozenset(a), frozenset(b))
        if key not in self.values:
            raise PosetMismatch(f"not an interval: {key}")
        return self.values[key]


def element_from_function(
    poset: FacePoset, fn: Callable, ring: str = "rational"
) -> IncidenceElement:
    values = {}
    for a, b in poset.intervals():
        values[(a, b)] = fn(a, b)
    return IncidenceElement(poset, values, ring)


def delta_element(poset: FacePoset, ring: str = "rational") -> IncidenceElement:
    n = poset.space.dim

    def fn(a, b):
        if ring == "rational":
            return Fraction(1) if a == b else Fraction(0)
        return Chain.constant(n, 1) if a == b else Chain.zero(n)

    return element_from_function(poset, fn, ring)


def zeta_element(poset: FacePoset) -> IncidenceElement:
    return element_from_function(poset, lambda a, b: Fraction(1))


def mobius(poset: FacePoset) -> IncidenceElement:
    """mu(a, b) = (-1)^(dim b - dim a) on the face poset."""
    return element_from_function(
        poset, lambda a, b: Fraction((-1) ** (poset.dim(b) - poset.dim(a)))
    )


def incidence_convolve(f: IncidenceElement, g: IncidenceElement) -> IncidenceElement:
    """(F * G)(a, b) = sum over a <= c <= b of F(a, c) G(c, b)."""
    if f.poset != g.poset or f.ring != g.ring:
        raise PosetMismatch("elements live on different posets or rings")
    poset = f.poset
    els = poset.elements()
    values = {}
    for a, b in poset.intervals():
        mids = [c for c in els if a <= c <= b]
        if f.ring == "rational":
            total = Fraction(0)
            for c in mids:
                total += f(a, c) * g(c, b)
        else:
            total = Chain.zero(poset.space.dim)
            for c in mids:
                total = total + f(a, c).pointwise_product(g(c, b))
        values[(a, b)] = total
    return IncidenceElement(poset, values, f.ring)


# ---------------------------------------------------------------------------
# Langlands combinatorial lemma


def _dual_face_rays(poset: FacePoset, el: FaceKey) -> tuple[Vec, ...]:
    """Rays of the dual face: dual-basis vectors of the rays NOT in el."""
    rays = poset.rays
    duals = dual_basis_in_span(list(rays), poset.space)
    return tuple(d for w, d in zip(rays, duals) if w not in el)


def langlands_elements(
    sigma: Cone, sp: Space
) -> tuple[IncidenceElement, IncidenceElement]:
    """The two chain-valued elements whose mutual inversion is the lemma.

    F(a, b) carries the tangent cone of the face b at its subface a;
    G(a, b) carries the tangent cone of the dual face a* at b*.
    """
    if not sigma.simplicial:
        raise NotSimplicial("need a simplicial cone")
    if sigma.span_dim != sp.dim:
        raise NotSimplicial("need a full-dimensional cone for dual faces")
    poset = FacePoset(sigma, sp)
    n = sp.dim

    def f_val(a, b):
        region = cone_face_tangent_region(sorted(b), a, sp)
        return Chain.indicator(region, Fraction((-1) ** poset.dim(a)))

    def g_val(a, b):
        a_star = _dual_face_rays(poset, a)
        b_star = _dual_face_rays(poset, b)
        region = cone_face_tangent_region(sorted(a_star), b_star, sp)
        return Chain.indicator(region, Fraction((-1) ** poset.dim(a)))

    f = element_from_function(poset, f_val, ring="chain")
    g = element_from_function(poset, g_val, ring="chain")
    return f, g


def verify_langlands(
    sigma: Cone,
    sp: Space,
    mode: str = "exact",
    samples: int = 10_000,
    seed: int = 20240801,
) -> dict:
    """Check F * G = G * F = delta on every interval.

    Returns a report dict with per-interval results and an overall flag.
    """
    f, g = langlands_elements(sigma, sp)
    poset = f.poset
    fg = incidence_convolve(f, g)
    gf = incidence_convolve(g, f)
    delta = delta_element(poset, ring="chain")
    eq_mode = "exact_arrangement" if mode == "exact" else "sampled"
    report = {"cone": sigma, "mode": mode, "intervals": [], "ok": True}
    for a, b in poset.intervals():
        for name, elem in (("F*G", fg), ("G*F", gf)):
            ok, witness = chains_equal(
                elem(a, b), delta(a, b), mode=eq_mode, samples=samples, seed=seed
            )
            report["intervals"].append(
                {
                    "interval": (sorted(a), sorted(b)),
                    "side": name,
                    "ok": ok,
                    "witness": witness,
                }
            )
            if not ok:
                report["ok"] = False
    return report
