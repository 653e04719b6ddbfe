"""Polynomiality of the truncated integral in the support numbers.

The structural identity behind it: the integral equals the sum over fan
cones of (quotient integral at the zero polytope) x (signed volume of the
cone's virtual polytope), with measures factored through exact lattice
bases of the span and its orthogonal complement.  Fitting utilities
certify polynomiality numerically on support-number grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable, Mapping, Sequence

import numpy as np

from .chains import Chain, ChainTerm, gamma_chain, integrate_chain
from .errors import (
    CosetEnumerationTooLarge,
    IllConditioned,
    InsufficientSamples,
)
from .geometry import Fan, Polytope, SupportVector, _as_key, realize_polytope
from .halfspaces import Constraint, HalfSpaceRegion
from .kexpr import KExpr
from .linalg import (
    Mat,
    Vec,
    det,
    dot,
    integer_kernel_basis,
    mat,
    nullspace,
    smith_normal_form,
    vec,
)
from .truncation import (
    KFamily,
    check_convergence_hypotheses,
    induced_family,
    j_integral,
    j_zero,
    k_delta,
    s_lattice_sum,
)


def lattice_basis_of_span(rays: Sequence[Vec], n: int) -> list[Vec]:
    """Basis of span(rays) intersected with Z^n (saturated)."""
    rays = [vec(r) for r in rays]
    if not rays:
        return []
    comp = nullspace(mat(rays))
    if not comp:
        return [vec([1 if j == i else 0 for j in range(n)]) for i in range(n)]
    return [vec(b) for b in integer_kernel_basis(mat(comp))]


def restrict_chain(chain: Chain, basis: Sequence[Vec]) -> Chain:
    """Pull a chain back along t |-> sum t_i basis_i."""
    basis = [vec(b) for b in basis]
    k = len(basis)
    terms = []
    for t in chain.terms:
        cs = []
        eqs = []
        ok = True
        for c in t.region.constraints:
            nn = vec([dot(c.normal, b) for b in basis])
            cs.append(Constraint(nn, c.offset, c.strict))
        for e, f in t.region.equalities:
            ne = vec([dot(e, b) for b in basis])
            eqs.append((ne, f))
        terms.append(ChainTerm(t.coeff, HalfSpaceRegion(k, tuple(cs), tuple(eqs))))
    return Chain(k, tuple(terms))


def vol_gamma(p, key) -> Fraction:
    """Exact signed volume of the cone's virtual polytope, measured in the
    lattice coordinates of the cone's span (dimension = dim of the cone)."""
    if isinstance(p, Polytope):
        support = p.support
    else:
        support = p
    fan = support.fan
    key = _as_key(key)
    tau = fan.cone(key)
    if tau.span_dim == 0:
        return Fraction(1)
    chain = gamma_chain(p, key)
    basis = lattice_basis_of_span(list(tau.rays), fan.dim)[: tau.span_dim]
    restricted = restrict_chain(chain, basis)
    return integrate_chain(restricted)


def span_complement_det(fan: Fan, key) -> Fraction:
    """|det| of the stacked lattice bases of span(tau) and its complement.

    This converts the product of the two coordinate measures into the
    ambient Lebesgue measure.
    """
    key = _as_key(key)
    tau = fan.cone(key)
    n = fan.dim
    sp = fan.space
    u1 = lattice_basis_of_span(list(tau.rays), n) if tau.rays else []
    rows = mat([sp.functional(w) for w in tau.rays]) if tau.rays else None
    u2 = [vec(b) for b in integer_kernel_basis(rows)] if rows is not None else [
        vec([1 if j == i else 0 for j in range(n)]) for i in range(n)
    ]
    stacked = mat(list(u1) + list(u2))
    return abs(det(stacked))


@dataclass
class IdentityReport:
    lhs: float
    rhs: float
    discrepancy: float
    terms: list
    ok: bool


def polynomiality_identity_check(
    kf: KFamily,
    p: Polytope,
    tol: float = 1e-7,
    allow_uncertified: bool = False,
    max_order: int = 256,
) -> IdentityReport:
    """Compare the direct integral with its cone-by-cone factorization.

    Right side: sum over cones tau of
        (zero-polytope integral of the induced family on the quotient fan)
      x (signed lattice-coordinate volume of the virtual polytope of tau)
      x (measure conversion determinant).
    """
    fan = kf.fan
    cert = check_convergence_hypotheses(kf, p)
    lhs, lhs_err = j_integral(
        kf, p, tol=tol, certificate=cert, allow_uncertified=allow_uncertified,
        max_order=max_order,
    )
    rhs_terms = []
    for tau in sorted(fan.cones, key=lambda c: (c.span_dim, sorted(c.rays))):
        qkf, _, _ = induced_family(kf, tau.key)
        jz, jz_err = j_zero(
            qkf, tol=tol, allow_uncertified=allow_uncertified, max_order=max_order
        )
        vg = vol_gamma(p, tau.key)
        conv = span_complement_det(fan, tau.key)
        contribution = jz * float(vg) * float(conv)
        rhs_terms.append(
            {
                "cone": sorted(map(list, tau.key)),
                "quotient_zero_integral": jz,
                "vol_gamma": vg,
                "measure_det": conv,
                "value": contribution,
            }
        )
    rhs = math.fsum(t["value"] for t in rhs_terms)
    disc = abs(lhs - rhs) / max(1.0, abs(lhs))
    return IdentityReport(lhs, rhs, disc, rhs_terms, disc < 10 * tol)


# ---------------------------------------------------------------------------
# Polynomial fitting


@dataclass(frozen=True)
class SupportPolynomial:
    """Polynomial in the support numbers, one variable per fan ray."""

    rays: tuple[Vec, ...]
    coefficients: tuple[tuple[tuple[int, ...], float], ...]
    degree: int

    def evaluate(self, s: SupportVector | Mapping) -> float:
        values = s.as_dict() if isinstance(s, SupportVector) else dict(s)
        x = [float(values[r]) for r in self.rays]
        total = 0.0
        for mono, c in self.coefficients:
            v = c
            for xi, e in zip(x, mono):
                if e:
                    v *= xi**e
            total += v
        return total

    def coefficient(self, mono: Sequence[int]) -> float:
        mono = tuple(mono)
        for m, c in self.coefficients:
            if m == mono:
                return c
        return 0.0

    def top_degree_coefficients(self) -> dict:
        return {
            m: c
            for m, c in self.coefficients
            if sum(m) == self.degree and abs(c) > 0
        }


@dataclass
class FitReport:
    n_samples: int
    n_holdout: int
    n_monomials: int
    degree: int
    max_residual: float
    holdout_residual: float
    condition: float
    grid_description: str = ""


def _monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    def rec(prefix, remaining, budget):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for e in range(budget + 1):
            rec(prefix + [e], remaining - 1, budget - e)
    rec([], nvars, degree)
    return sorted(out, key=lambda m: (sum(m), m))


def fit_polynomial(
    evaluator: Callable[[SupportVector], float],
    fan: Fan,
    degree_bound: int | None = None,
    grid: Sequence[SupportVector] | None = None,
    holdout: Sequence[SupportVector] | None = None,
    condition_limit: float = 1e12,
    grid_description: str = "",
) -> tuple[FitReport, SupportPolynomial]:
    """Least squares fit of an evaluator on support-number grids.

    The holdout residual is computed on samples never used in the fit.
    """
    degree = fan.dim if degree_bound is None else degree_bound
    rays = tuple(fan.rays())
    if grid is None:
        raise InsufficientSamples("an explicit grid of support vectors is required")
    monos = _monomials(len(rays), degree)
    if len(grid) < len(monos):
        raise InsufficientSamples(
            f"{len(grid)} samples for {len(monos)} monomials"
        )
    def row(s: SupportVector):
        values = s.as_dict()
        x = [float(values[r]) for r in rays]
        out = []
        for m in monos:
            v = 1.0
            for xi, e in zip(x, m):
                if e:
                    v *= xi**e
            out.append(v)
        return out

    a = np.array([row(s) for s in grid])
    y = np.array([float(evaluator(s)) for s in grid])
    scales = np.maximum(np.abs(a).max(axis=0), 1e-30)
    a_scaled = a / scales
    coeffs_scaled, _, rank_, svals = np.linalg.lstsq(a_scaled, y, rcond=None)
    cond = float(svals[0] / svals[-1]) if svals[-1] > 0 else float("inf")
    if rank_ < len(monos) or cond > condition_limit:
        raise IllConditioned(
            f"design matrix rank {rank_}/{len(monos)}, condition {cond:.3g}",
            diagnostics={"rank": int(rank_), "condition": cond},
        )
    coeffs = coeffs_scaled / scales
    fit_residual = float(np.max(np.abs(a @ coeffs - y))) if len(y) else 0.0
    poly = SupportPolynomial(
        rays,
        tuple((m, float(c)) for m, c in zip(monos, coeffs)),
        degree,
    )
    holdout = list(holdout or [])
    hold_res = 0.0
    for s in holdout:
        hold_res = max(hold_res, abs(poly.evaluate(s) - float(evaluator(s))))
    report = FitReport(
        len(grid),
        len(holdout),
        len(monos),
        degree,
        fit_residual,
        hold_res,
        cond,
        grid_description,
    )
    return report, poly


def tensor_support_grid(
    fan: Fan, ranges: Mapping, feasible_only: bool = True
) -> list[SupportVector]:
    """Cartesian product of per-ray value lists, optionally only feasible."""
    rays = fan.rays()
    norm = {}
    for k, v in ranges.items():
        from .linalg import primitive

        norm[primitive(vec(k))] = [Fraction(x) for x in v]
    lists = [norm[r] for r in rays]
    out = []
    for combo in iproduct(*lists):
        s = SupportVector(fan, tuple(zip(rays, combo)))
        if feasible_only:
            try:
                realize_polytope(s)
            except Exception:
                continue
        out.append(s)
    return out


# ---------------------------------------------------------------------------
# Discrete identity probe


def coset_data(fan: Fan, key) -> dict:
    """Sublattice data of span(tau) and its complement inside Z^n.

    Returns bases of the two sublattices, the index of their sum, and a
    full system of coset representatives.
    """
    key = _as_key(key)
    tau = fan.cone(key)
    n = fan.dim
    sp = fan.space
    m1 = lattice_basis_of_span(list(tau.rays), n) if tau.rays else []
    if tau.rays:
        rows = mat([sp.functional(w) for w in tau.rays])
        m2 = [vec(b) for b in integer_kernel_basis(rows)]
    else:
        m2 = [vec([1 if j == i else 0 for j in range(n)]) for i in range(n)]
    stacked = [list(map(int, b)) for b in list(m1) + list(m2)]
    divisors, rank_ = smith_normal_form(stacked)
    if rank_ < n:
        raise CosetEnumerationTooLarge("sublattice sum is not full rank")
    index = 1
    for d in divisors:
        index *= d
    if index > 64:
        raise CosetEnumerationTooLarge(f"index {index} too large to enumerate")
    # enumerate representatives by brute force over a small box
    reps: list[Vec] = []
    seen_residues = set()
    basis_mat = mat([vec(b) for b in list(m1) + list(m2)])

    def residue(v: Vec):
        # canonical residue: reduce v modulo the sublattice via exact solve
        from .linalg import solve_unique

        coords = solve_unique(
            tuple(zip(*basis_mat)), v
        )  # solve B^T c = v: v = sum c_i b_i
        frac = tuple(c - Fraction(math.floor(c)) for c in coords)
        return frac

    radius = 0
    while len(reps) < index and radius <= index:
        for m in iproduct(range(-radius, radius + 1), repeat=n):
            if max((abs(x) for x in m), default=0) != radius:
                continue
            v = vec(m)
            r = residue(v)
            if r not in seen_residues:
                seen_residues.add(r)
                reps.append(v)
        radius += 1
    return {
        "span_basis": m1,
        "complement_basis": m2,
        "index": index,
        "representatives": reps[:index],
    }


def discrete_identity_probe(
    kf: KFamily,
    p: Polytope,
    key=None,
    tol: float = 1e-8,
    box_margin: int = 6,
) -> dict:
    """Regroup the lattice sum by cosets of span/complement sublattices.

    For each cone (or every cone of the fan), the points of a centered box
    are enumerated as representative + span-lattice + complement-lattice
    combinations; the decomposition must cover each point exactly once and
    reproduce the direct box sum.
    """
    from .linalg import inverse

    fan = kf.fan
    n = fan.dim
    keys = [_as_key(key)] if key is not None else [c.key for c in fan.cones]
    tf = k_delta(kf, p)
    maxcoord = max(abs(x) for _, v in p.vertices for x in v)
    radius = int(maxcoord) + box_margin
    direct = 0.0
    for m in iproduct(range(-radius, radius + 1), repeat=n):
        direct += float(tf.evaluate(vec(m)))
    results = []
    all_ok = True
    box_count = (2 * radius + 1) ** n
    for k in keys:
        data = coset_data(fan, k)
        m1, m2, reps = (
            data["span_basis"],
            data["complement_basis"],
            data["representatives"],
        )
        basis = list(m1) + list(m2)
        binv = inverse(tuple(zip(*[vec(b) for b in basis])))
        rep_norm = max((max(abs(x) for x in r) for r in reps), default=0)
        reach = max(
            sum(abs(x) for x in row) * (radius + rep_norm) for row in binv
        )
        bound = int(reach) + 1
        total = 0.0
        seen = set()
        collision = None
        for rep in reps:
            for coeffs in iproduct(range(-bound, bound + 1), repeat=n):
                x = list(rep)
                for c, b in zip(coeffs, basis):
                    if c:
                        for i in range(n):
                            x[i] += c * b[i]
                if any(abs(v) > radius for v in x):
                    continue
                tx = tuple(x)
                if tx in seen:
                    collision = tx
                    continue
                seen.add(tx)
                total += float(tf.evaluate(vec(tx)))
        covered = len(seen) == box_count
        agree = abs(total - direct) <= tol * max(1.0, abs(direct))
        ok = covered and agree and collision is None
        all_ok = all_ok and ok
        results.append(
            {
                "cone": sorted(map(list, _as_key(k))),
                "index": data["index"],
                "n_representatives": len(reps),
                "regrouped": total,
                "covered": covered,
                "collision": collision,
                "ok": ok,
            }
        )
    return {"direct": direct, "radius": radius, "per_cone": results, "ok": all_ok}
