"""Exact rational linear algebra over tuples of Fractions.

Vectors are tuples of Fraction, matrices are tuples of row tuples.  Every
routine here is exact; nothing ever touches floats.  Sizes stay tiny
(ambient dimension <= 4 plus a handful of constraints), so plain Gaussian
elimination with full pivoting is entirely adequate.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]


def vec(xs: Iterable) -> Vec:
    return tuple(Fraction(x) for x in xs)


def mat(rows: Iterable[Iterable]) -> Mat:
    return tuple(vec(r) for r in rows)


def zero_vec(n: int) -> Vec:
    return tuple([Fraction(0)] * n)


def unit_vec(n: int, i: int) -> Vec:
    return tuple(Fraction(1) if j == i else Fraction(0) for j in range(n))


def identity(n: int) -> Mat:
    return tuple(unit_vec(n, i) for i in range(n))


def add(u: Vec, v: Vec) -> Vec:
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Vec, v: Vec) -> Vec:
    return tuple(a - b for a, b in zip(u, v))


def neg(u: Vec) -> Vec:
    return tuple(-a for a in u)


def scale(u: Vec, c) -> Vec:
    c = Fraction(c)
    return tuple(c * a for a in u)


def dot(u: Vec, v: Vec) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def is_zero(u: Vec) -> bool:
    return all(a == 0 for a in u)


def mat_vec(m: Mat, v: Vec) -> Vec:
    return tuple(dot(row, v) for row in m)


def mat_mul(a: Mat, b: Mat) -> Mat:
    bt = transpose(b)
    return tuple(tuple(dot(ra, cb) for cb in bt) for ra in a)


def transpose(m: Mat) -> Mat:
    if not m:
        return ()
    return tuple(tuple(row[j] for row in m) for j in range(len(m[0])))


def primitive(u: Sequence[Fraction]) -> Vec:
    """Scale a nonzero rational vector to integer entries with gcd 1.

    The direction (sign) is preserved.
    """
    u = vec(u)
    if is_zero(u):
        raise ValueError("primitive() of zero vector")
    denom = 1
    for a in u:
        denom = denom * a.denominator // gcd(denom, a.denominator)
    ints = [int(a * denom) for a in u]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    return tuple(Fraction(x // g) for x in ints)


def rref(m: Mat) -> tuple[Mat, list[int]]:
    """Reduced row echelon form.  Returns (R, pivot_columns)."""
    rows = [list(r) for r in m]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = Fraction(1) / rows[r][c]
        rows[r] = [a * inv for a in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return tuple(tuple(row) for row in rows), pivots


def rank(m: Mat) -> int:
    if not m:
        return 0
    return len(rref(m)[1])


def det(m: Mat) -> Fraction:
    n = len(m)
    rows = [list(r) for r in m]
    result = Fraction(1)
    for c in range(n):
        piv = None
        for i in range(c, n):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            return Fraction(0)
        if piv != c:
            rows[c], rows[piv] = rows[piv], rows[c]
            result = -result
        result *= rows[c][c]
        inv = Fraction(1) / rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] * inv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    return result


def solve(a: Mat, b: Vec) -> Vec | None:
    """Solve a x = b.  Returns one solution or None if inconsistent.

    For underdetermined systems the free variables are set to 0.
    """
    if not a:
        return () if is_zero(b) else None
    ncols = len(a[0])
    aug = tuple(tuple(row) + (bi,) for row, bi in zip(a, b))
    red, pivots = rref(aug)
    for row in red:
        if all(x == 0 for x in row[:-1]) and row[-1] != 0:
            return None
    x = [Fraction(0)] * ncols
    for i, c in enumerate(pivots):
        if c == ncols:
            return None
        x[c] = red[i][-1]
    return tuple(x)


def solve_unique(a: Mat, b: Vec) -> Vec:
    """Solve a nonsingular square system exactly."""
    n = len(a)
    if n != len(a[0]):
        raise ValueError("solve_unique needs a square matrix")
    if det(a) == 0:
        raise ValueError("singular system")
    sol = solve(a, b)
    assert sol is not None
    return sol


def inverse(m: Mat) -> Mat:
    n = len(m)
    aug = tuple(tuple(row) + unit_vec(n, i) for i, row in enumerate(m))
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        raise ValueError("matrix not invertible")
    return tuple(tuple(row[n:]) for row in red)


def nullspace(m: Mat) -> list[Vec]:
    """Basis of the right kernel of m."""
    if not m:
        return []
    ncols = len(m[0])
    red, pivots = rref(m)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -red[i][f]
        basis.append(tuple(v))
    return basis


def row_space_basis(m: Mat) -> list[Vec]:
    red, pivots = rref(m)
    return [red[i] for i in range(len(pivots))]


def independent_subset(vectors: Sequence[Vec]) -> list[int]:
    """Indices of a maximal linearly independent subset, greedily."""
    chosen: list[int] = []
    current: list[Vec] = []
    for i, v in enumerate(vectors):
        if is_zero(v):
            continue
        if rank(tuple(current + [v])) > len(current):
            current.append(v)
            chosen.append(i)
    return chosen


def gram(vectors: Sequence[Vec], ip: Mat | None = None) -> Mat:
    """Gram matrix <v_i, v_j> under the given inner product (default dot)."""
    if ip is None:
        return tuple(tuple(dot(u, v) for v in vectors) for u in vectors)
    gv = [mat_vec(ip, v) for v in vectors]
    return tuple(tuple(dot(u, gvj) for gvj in gv) for u in vectors)


def is_positive_definite(m: Mat) -> bool:
    """Exact Sylvester criterion: all leading principal minors positive."""
    n = len(m)
    for k in range(1, n + 1):
        sub_m = tuple(tuple(m[i][j] for j in range(k)) for i in range(k))
        if det(sub_m) <= 0:
            return False
    return True


def is_positive_semidefinite(m: Mat) -> bool:
    """Exact PSD test via LDL^T with diagonal pivoting."""
    n = len(m)
    a = [list(row) for row in m]
    perm = list(range(n))
    for k in range(n):
        # pick the largest remaining diagonal entry as pivot
        piv = max(range(k, n), key=lambda i: a[i][i])
        if a[piv][piv] < 0:
            return False
        if a[piv][piv] == 0:
            # remaining diagonal all zero: rows must be zero too
            for i in range(k, n):
                for j in range(k, n):
                    if a[i][j] != 0:
                        return False
            return True
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            for row in a:
                row[k], row[piv] = row[piv], row[k]
            perm[k], perm[piv] = perm[piv], perm[k]
        d = a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / d
            for j in range(k, n):
                a[i][j] -= f * a[k][j]
            a[i][k] = Fraction(0)
        for j in range(k + 1, n):
            a[k][j] = Fraction(0)
    return True


def integer_row_hnf(m: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of an integer matrix (nonzero rows)."""
    rows = [list(map(int, r)) for r in m if any(r)]
    if not rows:
        return []
    ncols = len(rows[0])
    out: list[list[int]] = []
    col = 0
    while rows and col < ncols:
        cand = [r for r in rows if r[col] != 0]
        if not cand:
            col += 1
            continue
        while True:
            cand.sort(key=lambda r: abs(r[col]))
            pivot = cand[0]
            done = True
            for r in cand[1:]:
                q = r[col] // pivot[col]
                for j in range(ncols):
                    r[j] -= q * pivot[j]
                if r[col] != 0:
                    done = False
            cand = [pivot] + [r for r in cand[1:] if r[col] != 0]
            if done and len(cand) == 1:
                break
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        out.append(pivot)
        rows = [r for r in rows if r is not pivot and any(r)]
        for r in rows:
            if r[col] != 0:
                q = r[col] // pivot[col]
                for j in range(ncols):
                    r[j] -= q * pivot[j]
        rows = [r for r in rows if any(r)]
        col += 1
    return out


def smith_normal_form(m: Sequence[Sequence[int]]) -> tuple[list[int], int]:
    """Elementary divisors of an integer matrix.

    Returns (divisors, rank).  Small matrices only.
    """
    a = [list(map(int, r)) for r in m]
    if not a or not a[0]:
        return [], 0
    nr, nc = len(a), len(a[0])
    divisors: list[int] = []
    top = 0
    while top < min(nr, nc):
        # find smallest nonzero entry in the submatrix
        best = None
        for i in range(top, nr):
            for j in range(top, nc):
                if a[i][j] != 0 and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        bi, bj = best
        a[top], a[bi] = a[bi], a[top]
        for row in a:
            row[top], row[bj] = row[bj], row[top]
        p = a[top][top]
        dirty = False
        for i in range(top + 1, nr):
            if a[i][top] % p != 0:
                dirty = True
            q = a[i][top] // p
            for j in range(top, nc):
                a[i][j] -= q * a[top][j]
        for j in range(top + 1, nc):
            if a[top][j] % p != 0:
                dirty = True
            q = a[top][j] // p
            for i in range(top, nr):
                a[i][j] -= q * a[i][top]
        if dirty or any(a[i][top] for i in range(top + 1, nr)) or any(
            a[top][j] for j in range(top + 1, nc)
        ):
            continue
        # ensure divisibility of the rest by p
        viol = None
        for i in range(top + 1, nr):
            for j in range(top + 1, nc):
                if a[i][j] % p != 0:
                    viol = i
                    break
            if viol is not None:
                break
        if viol is not None:
            for j in range(top, nc):
                a[top][j] += a[viol][j]
            continue
        divisors.append(abs(p))
        top += 1
    return divisors, top


def integer_kernel_basis(m: Mat) -> list[tuple[int, ...]]:
    """Basis of the saturated integer kernel {v in Z^n : m v = 0}.

    Column-HNF with unimodular tracking: columns of U matching zero columns
    of the reduced matrix form a basis, automatically saturated.
    """
    if not m or not m[0]:
        return []
    n = len(m[0])
    int_rows: list[list[int]] = []
    for r in m:
        denom = 1
        for a in r:
            denom = denom * a.denominator // gcd(denom, a.denominator)
        int_rows.append([int(a * denom) for a in r])
    a = [row[:] for row in int_rows]
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def col_addmul(j: int, k: int, q: int) -> None:
        for row in a:
            row[j] -= q * row[k]
        for row in u:
            row[j] -= q * row[k]

    def col_swap(j: int, k: int) -> None:
        for row in a:
            row[j], row[k] = row[k], row[j]
        for row in u:
            row[j], row[k] = row[k], row[j]

    lead = 0
    for i in range(len(a)):
        if lead >= n:
            break
        while True:
            nz = [j for j in range(lead, n) if a[i][j] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda j: abs(a[i][j]))
            if piv != lead:
                col_swap(piv, lead)
            done = True
            for j in range(lead + 1, n):
                if a[i][j] != 0:
                    q = a[i][j] // a[i][lead]
                    col_addmul(j, lead, q)
                    if a[i][j] != 0:
                        done = False
            if done:
                lead += 1
                break
    kernel = []
    for j in range(n):
        if all(row[j] == 0 for row in a):
            col = [u[i][j] for i in range(n)]
            if any(col):
                kernel.append(tuple(col))
    return kernel
