"""Exact cell enumeration for hyperplane arrangements.

Cells of every dimension are produced by incremental splitting: each new
hyperplane splits the existing relatively-open cells into the three parts
it cuts out (below / on / above), with a relative-interior witness point
found by exact Fourier-Motzkin feasibility.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

from .errors import ArrangementTooLarge
from .halfspaces import Constraint, HalfSpaceRegion, feasible_point
from .linalg import Vec, dot

DEFAULT_MAX_HYPERPLANES = 40


def max_hyperplanes_cap() -> int:
    env = os.environ.get("POLYTRUNC_MAX_ARRANGEMENT")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_MAX_HYPERPLANES


@dataclass(frozen=True)
class Cell:
    """Relatively open cell: sign per hyperplane, plus a witness point."""

    signs: tuple[int, ...]
    point: Vec
    region: HalfSpaceRegion

    @property
    def dim_deficit(self) -> int:
        return sum(1 for s in self.signs if s == 0)


def enumerate_cells(
    hyperplanes: list[tuple[Vec, Fraction]], n: int, cap: int | None = None
) -> list[Cell]:
    """All relatively open cells of the arrangement, each with a witness.

    ``hyperplanes`` should be canonicalized and deduplicated beforehand.
    """
    cap = cap if cap is not None else max_hyperplanes_cap()
    if len(hyperplanes) > cap and n > 3:
        raise ArrangementTooLarge(
            f"{len(hyperplanes)} hyperplanes in dimension {n} exceeds the cap {cap}"
        )
    if len(hyperplanes) > 3 * cap:
        raise ArrangementTooLarge(
            f"{len(hyperplanes)} hyperplanes exceeds the hard cap {3 * cap}"
        )
    base = HalfSpaceRegion.whole_space(n)
    cells = [Cell((), tuple([Fraction(0)] * n), base)]
    for normal, offset in hyperplanes:
        next_cells: list[Cell] = []
        for cell in cells:
            val = dot(normal, cell.point)
            cur = 1 if val > offset else (-1 if val < offset else 0)
            for sign in (-1, 0, 1):
                if sign == 0:
                    region = cell.region.with_equality(normal, offset)
                elif sign == 1:
                    region = cell.region.with_constraint(normal, offset, strict=True)
                else:
                    region = cell.region.with_constraint(
                        tuple(-x for x in normal), -offset, strict=True
                    )
                if sign == cur:
                    pt = cell.point
                else:
                    pt = feasible_point(region)
                    if pt is None:
                        continue
                next_cells.append(Cell(cell.signs + (sign,), pt, region))
        cells = next_cells
    return cells


def collect_hyperplanes(regions) -> list[tuple[Vec, Fraction]]:
    """Canonical deduplicated hyperplanes supporting the given regions."""
    seen = set()
    out = []
    for region in regions:
        for h in region.hyperplanes():
            if h not in seen:
                seen.add(h)
                out.append(h)
    return out
