"""Deterministic quadrature over polyhedral regions.

Every integration domain is decomposed exactly into *generalized
simplices* ``conv(v_0..v_p) + cone(r_1..r_q)`` with ``p + q = n`` via a
pulling triangulation of the homogenization cone.  On each piece the map
from the unit cube is affine in the Duffy/simplex parameters and uses the
compactifying substitution ``t = s / (1 - s)`` on the ray parameters, so a
tensor Gauss-Legendre rule with order doubling converges geometrically for
the smooth exponential integrands produced upstream.  Integrands with
absolute-value kinks must be split along their kink hyperplanes first
(``split_region_by_hyperplanes``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureStall
from .halfspaces import (
    HalfSpaceRegion,
    enumerate_vertices,
    extreme_rays_of_recession,
    relative_interior_point,
)
from .linalg import Mat, Vec, det, is_zero, mat, nullspace, rank, sub, vec


@lru_cache(maxsize=None)
def _gl_nodes(order: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return tuple((x + 1.0) / 2.0), tuple(w / 2.0)


@dataclass(frozen=True)
class GenSimplex:
    """conv(base + edges) + cone(rays); |det| of the joint matrix cached."""

    base: Vec
    edges: tuple[Vec, ...]  # p vectors v_i - v_0
    rays: tuple[Vec, ...]  # q ray generators
    scale: Fraction  # |det [edges rays]|

    @property
    def p(self) -> int:
        return len(self.edges)

    @property
    def q(self) -> int:
        return len(self.rays)


def triangulate_cone_gens(gens: list[Vec], d: int) -> list[list[Vec]]:
    """Split a pointed cone (extreme ray generators, dim d in its span)
    into simplicial subcones by a pulling triangulation."""
    gens = list(gens)
    if len(gens) < d:
        return []
    if len(gens) == d:
        return [gens]
    apex = gens[0]
    out = []
    for idxs in combinations(range(len(gens)), d - 1):
        rows = [gens[i] for i in idxs]
        if rank(mat(rows)) != d - 1:
            continue
        # facet test within the span of gens: normal orthogonal to rows,
        # inside span(gens), with all generators on one side
        normal = _facet_normal(rows, gens)
        if normal is None:
            continue
        vals = [sum(a * b for a, b in zip(normal, g)) for g in gens]
        if all(v >= 0 for v in vals):
            pass
        elif all(v <= 0 for v in vals):
            vals = [-v for v in vals]
        else:
            continue
        if vals[0] == 0:
            continue  # facet contains the apex: not visible
        facet_gens = [g for g, v in zip(gens, vals) if v == 0]
        if rank(mat(facet_gens)) != d - 1:
            continue
        for sub_facet in triangulate_cone_gens(facet_gens, d - 1):
            out.append([apex] + sub_facet)
    # dedupe
    seen = set()
    uniq = []
    for s in out:
        key = frozenset(s)
        if key not in seen:
            seen.add(key)
            uniq.append(s)
    return uniq


def _facet_normal(rows: list[Vec], gens: list[Vec]) -> Vec | None:
    """A vector orthogonal to rows, lying in span(gens), unique up to sign."""
    span_comp = nullspace(mat(gens))  # normals of span(gens)
    sys_rows = list(rows) + [vec(m) for m in span_comp]
    ker = nullspace(mat(sys_rows))
    if len(ker) != 1:
        return None
    return ker[0]


def decompose_region(region: HalfSpaceRegion) -> list[GenSimplex]:
    """Exact decomposition of a full-dimensional pointed polyhedron."""
    n = region.dim
    closed = region.closure()
    verts = enumerate_vertices(closed)
    if not verts:
        return []
    rays = extreme_rays_of_recession(closed)
    gens = [v + (Fraction(1),) for v in verts] + [r + (Fraction(0),) for r in rays]
    pieces = triangulate_cone_gens(gens, n + 1)
    out = []
    for piece in pieces:
        prs = [g[:n] for g in piece if g[n] == 0]
        # rescale in case the homogenizing coordinate is not 1
        pts = [tuple(x / g[n] for x in g[:n]) for g in piece if g[n] != 0]
        if not pts:
            continue
        base = pts[0]
        edges = tuple(sub(p, base) for p in pts[1:])
        rays_t = tuple(prs)
        m = mat(list(edges) + list(rays_t))
        if len(m) != n:
            continue
        s = abs(det(m))
        if s == 0:
            continue
        out.append(GenSimplex(base, edges, rays_t, s))
    return out


def split_region_by_hyperplanes(
    region: HalfSpaceRegion, normals: Sequence[Vec]
) -> list[HalfSpaceRegion]:
    """Cut a region by homogeneous hyperplanes <d, x> = 0, keeping the
    full-dimensional closed pieces."""
    pieces = [region.closure()]
    for d in normals:
        if is_zero(vec(d)):
            continue
        nxt = []
        for p in pieces:
            for signed in (vec(d), vec(tuple(-x for x in d))):
                cand = p.with_constraint(signed, 0)
                strict = HalfSpaceRegion(
                    cand.dim,
                    tuple(
                        type(c)(c.normal, c.offset, True) for c in cand.constraints
                    ),
                    cand.equalities,
                )
                if strict.feasible_point() is not None:
                    nxt.append(cand)
        pieces = nxt
    return pieces


def _piece_grid(piece: GenSimplex, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor grid (points, weights) for one generalized simplex."""
    n = piece.p + piece.q
    nodes, weights = _gl_nodes(order)
    nodes = np.asarray(nodes)
    weights = np.asarray(weights)
    if n == 0:
        return np.array([list(map(float, piece.base))]), np.array([1.0])
    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    wgrids = np.meshgrid(*([weights] * n), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=-1)  # (N, n)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    # simplex part via Duffy: t_i = u_i * (1 - sum_{j<i} t_j)
    p, q = piece.p, piece.q
    t = np.zeros((u.shape[0], p))
    remaining = np.ones(u.shape[0])
    jac = np.ones(u.shape[0])
    for i in range(p):
        t[:, i] = u[:, i] * remaining
        jac *= remaining
        remaining = remaining - t[:, i]
    # ray part: r_j = s/(1-s), jacobian 1/(1-s)^2
    r = np.zeros((u.shape[0], q))
    for j in range(q):
        s = u[:, p + j]
        r[:, j] = s / (1.0 - s)
        jac /= (1.0 - s) ** 2
    base = np.array([float(x) for x in piece.base])
    emat = np.array([[float(x) for x in e] for e in piece.edges])  # (p, dim)
    rmat = np.array([[float(x) for x in e] for e in piece.rays])  # (q, dim)
    pts = np.broadcast_to(base, (u.shape[0], base.shape[0])).copy()
    if p:
        pts += t @ emat
    if q:
        pts += r @ rmat
    return pts, w * jac * float(piece.scale)


def integrate_pieces(
    pieces: Sequence[GenSimplex],
    f: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-10,
    max_order: int = 128,
    min_order: int = 4,
) -> tuple[float, float]:
    """Adaptive tensor Gauss-Legendre with order doubling.

    Returns (value, error_estimate); raises QuadratureStall when the
    relative tolerance is not reached at the maximum order.
    """
    if not pieces:
        return 0.0, 0.0
    ordered = sorted(pieces, key=lambda z: (z.base, z.edges, z.rays))
    order = min_order
    prev = None
    last_err = float("inf")
    while order <= max_order:
        total = 0.0
        for piece in ordered:
            pts, w = _piece_grid(piece, order)
            vals = f(pts)
            total += float(np.dot(w, vals))
        if prev is not None:
            last_err = abs(total - prev)
            if last_err <= tol * max(1.0, abs(total)):
                return total, last_err
        prev = total
        order *= 2
    raise QuadratureStall(
        f"order {max_order} reached without meeting tol {tol}",
        best=prev,
        error=last_err,
    )
