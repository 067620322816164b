"""Deterministic random generators for property sweeps.

Random maps are products of monotone integer reparametrizations of the two
axes (optionally composed with a lattice isometry), so they are injective
by construction; their exact two-sided distortion is then measured, not
assumed.  Random curves are arbitrary closed polylines: the near-curve
counting bound needs no simplicity.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .maps import CandidateMap
from .patch import Point


def random_monotone(rng: random.Random, n: int, max_step: int = 2) -> list[int]:
    out = [0]
    for _ in range(n - 1):
        out.append(out[-1] + rng.randint(1, max_step))
    return out


def random_bilip_map(rng: random.Random, width: int, height: int) -> CandidateMap:
    """Injective map on a width x height window with a random sparse domain.

    The domain keeps every even column (plus the whole last column when its
    x is odd, so the half-step extension stays defined) and each remaining
    point with probability 1/2.
    """
    gx = random_monotone(rng, width)
    hy = random_monotone(rng, height)
    flip = rng.choice([False, True])
    swap = rng.choice([False, True])

    def image(x: int, y: int) -> Point:
        u, v = gx[x], hy[y]
        if flip:
            u = -u
        if swap:
            u, v = v, u
        return (u, v)

    imgs: dict[Point, Point] = {}
    for x in range(width):
        for y in range(height):
            must = x % 2 == 0 or (x == width - 1)
            if must or rng.random() < 0.5:
                imgs[(x, y)] = image(x, y)
    return CandidateMap((0, 0, width - 1, height - 1), imgs)


def random_closed_polyline(rng: random.Random, rectilinear: bool) -> list[tuple[Fraction, Fraction]]:
    """Closed polyline with half-integer vertices; may self-intersect."""
    if rectilinear:
        x, y = 0, 0
        pts = [(Fraction(0), Fraction(0))]
        horizontal = True
        for _ in range(rng.randint(3, 9)):
            step = rng.choice([-3, -2, -1, 1, 2, 3])
            if horizontal:
                x += step
            else:
                y += step
            horizontal = not horizontal
            pts.append((Fraction(x), Fraction(y)))
        # close with at most two axis segments
        if x != 0:
            pts.append((Fraction(0), Fraction(y)))
        return pts
    k = rng.randint(3, 10)
    return [
        (Fraction(rng.randint(0, 30), 2), Fraction(rng.randint(0, 30), 2))
        for _ in range(k)
    ]
