"""Probe-grid analysis of candidate lattice maps.

The window is a long rectangle [0, 2MN] x [0, M] split into 2N abutting
M x M squares, each sampled on a (P+1) x (P+1) probe grid (P divides M).
The predicates implemented here drive the rigidity argument: a map with no
stretched probe step has a square whose increments all project well onto
the baseline vector; on such a square the coarse derivative deviates
little from the average; and a corner-density gap between two consecutive
squares then forces a stretched step to exist after all.  Every pass/fail
comparison is exact (squared norms, cross-multiplied rationals).

Also here: image boundary curves with short-loop deletion, the exact count
of lattice points near a curve, a brute-force minimum-distortion oracle,
and a bounded-radius matching heuristic producing candidate maps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .maps import CandidateMap, DistortionReport, ExtendedMap, all_pairs, distortion, hat_extend
from .patch import Point

RatPoint = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class GridSpec:
    """Probe layout: rectangle [0, 2MN] x [0, M], probe pitch M/P."""

    M: int
    N: int
    P: int

    def __post_init__(self):
        if self.M < 1 or self.N < 1 or self.P < 1:
            raise ValueError("M, N, P must be positive")
        if self.M % self.P:
            raise ValueError("P must divide M")

    @property
    def window(self) -> tuple[int, int, int, int]:
        return (0, 0, 2 * self.M * self.N, self.M)

    @property
    def pitch(self) -> int:
        return self.M // self.P

    def probe(self, k: int, i: int, j: int) -> Point:
        """x^k_{i,j} = ((k-1)M + i M/P, j M/P); i may run to P+1 by convention."""
        if not 1 <= k <= 2 * self.N:
            raise ValueError(f"square index {k} outside 1..{2 * self.N}")
        return ((k - 1) * self.M + i * self.pitch, j * self.pitch)

    def in_window(self, p: Point) -> bool:
        x0, y0, x1, y1 = self.window
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1


def probe_points(grid: GridSpec, k: int) -> list[Point]:
    """All probe points of square k, plus the conventional i = P+1 column.

    The extra column reaches one pitch into square k+1; it is used as the
    target of the last horizontal increment but is not part of the square.
    """
    return [
        grid.probe(k, i, j)
        for j in range(grid.P + 1)
        for i in range(grid.P + 2)
    ]


def identity_on(grid: GridSpec) -> CandidateMap:
    x0, y0, x1, y1 = grid.window
    return CandidateMap(
        grid.window,
        {(x, y): (x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)},
    )


# ----------------------------------------------------------------------
# no-stretch hypothesis
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class StretchViolation:
    k: int
    i: int
    j: int
    point: Point
    target: Point
    kind: Literal["direct", "shifted"]
    step_sq: Fraction  # squared expansion of the step
    bound_sq: Fraction


def _baseline(f: CandidateMap, grid: GridSpec) -> Point:
    v = f.baseline_vector()
    if v == (0, 0):
        raise ValueError("degenerate baseline vector: f(2MN,0) = f(0,0)")
    return v


def _step_pairs(f: CandidateMap, grid: GridSpec):
    """Yield (k, i, j, x, target, kind, den) for every evaluable probe step.

    ``den`` is the step length M/P for direct targets and 1 + M/P for
    targets shifted one cell right (used when the direct target misses the
    domain; the shifted one then has even x and is present whenever it
    stays inside the window).
    """
    pitch = grid.pitch
    for k in range(1, 2 * grid.N + 1):
        for j in range(grid.P + 1):
            for i in range(grid.P + 1):
                x = grid.probe(k, i, j)
                if x not in f.images:
                    continue
                t = grid.probe(k, i + 1, j)
                if not grid.in_window(t):
                    continue
                if t in f.images:
                    yield k, i, j, x, t, "direct", pitch
                else:
                    ts = (t[0] + 1, t[1])
                    if grid.in_window(ts) and ts in f.images:
                        yield k, i, j, x, ts, "shifted", 1 + pitch


def check_no_stretch(f: CandidateMap, grid: GridSpec, lam: Fraction) -> list[StretchViolation]:
    """Probe steps whose expansion exceeds (1 + lam) ||v|| / 2MN, exactly.

    Empty result = the no-stretch hypothesis holds for every evaluable
    probe step (direct or shifted right by one).
    """
    v = _baseline(f, grid)
    vsq = v[0] ** 2 + v[1] ** 2
    two_mn = 2 * grid.M * grid.N
    lam = Fraction(lam)
    bound_factor = (1 + lam) ** 2 * vsq  # times (den / 2MN)^2 per step
    out = []
    for k, i, j, x, t, kind, den in _step_pairs(f, grid):
        fu, fv = f.images[x]
        gu, gv = f.images[t]
        dsq = (fu - gu) ** 2 + (fv - gv) ** 2
        step_sq = Fraction(dsq, den**2)
        bound_sq = bound_factor / two_mn**2
        if step_sq > bound_sq:
            out.append(StretchViolation(k, i, j, x, t, kind, step_sq, bound_sq))
    return out


# ----------------------------------------------------------------------
# regular squares and the coarse derivative
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class RegularSquareResult:
    k_star: int | None
    minima: dict[int, Fraction]  # square -> min projected increment / M
    threshold: Fraction  # (1 - tau) ||v||^2 / 2MN
    v: Point


def _ext(f) -> ExtendedMap:
    return f if isinstance(f, ExtendedMap) else hat_extend(f)


def _ext_baseline(fh: ExtendedMap) -> Point:
    x0, y0, x1, _ = fh.window
    au, av = fh.twice((x0, y0))
    bu, bv = fh.twice((x1, y0))
    if (au, av) == (bu, bv):
        raise ValueError("degenerate baseline vector")
    if (bu - au) % 2 or (bv - av) % 2:
        raise ValueError("baseline endpoints must be lattice points")
    return ((bu - au) // 2, (bv - av) // 2)


def find_regular_square(f, grid: GridSpec, tau: Fraction) -> RegularSquareResult:
    """First square whose probe increments all project onto the baseline at
    least (1 - tau) of the average; scans k = 1 .. 2N-1.

    Existence is guaranteed under the no-stretch hypothesis once M, N clear
    the constant floors; absent that, the result simply reports k_star None.
    """
    fh = _ext(f)
    v = _ext_baseline(fh)
    vsq = v[0] ** 2 + v[1] ** 2
    tau = Fraction(tau)
    threshold = (1 - tau) * Fraction(vsq, 2 * grid.M * grid.N)
    minima: dict[int, Fraction] = {}
    k_star = None
    for k in range(1, 2 * grid.N):
        mn = None
        for j in range(grid.P + 1):
            for i in range(grid.P + 1):
                x = grid.probe(k, i, j)
                xp = (x[0] + grid.M, x[1])
                du = fh.twice(xp)[0] - fh.twice(x)[0]
                dv = fh.twice(xp)[1] - fh.twice(x)[1]
                proj = Fraction(du * v[0] + dv * v[1], 2 * grid.M)
                mn = proj if mn is None else min(mn, proj)
        minima[k] = mn
        if k_star is None and mn >= threshold:
            k_star = k
    return RegularSquareResult(k_star, minima, threshold, v)


@dataclass(frozen=True)
class DeviationReport:
    max_sq: Fraction
    argmax: tuple[int, int]

    @property
    def max(self) -> float:
        return float(self.max_sq) ** 0.5


def coarse_derivative_deviation(f, grid: GridSpec, k_star: int) -> DeviationReport:
    """Max over the square's probes of || (f^(x+Me1) - f^(x))/M - v/2MN ||.

    Exact in squared form: with doubled extension values D2, the deviation
    equals (N*D2 - v) / 2MN componentwise.
    """
    if not 1 <= k_star <= 2 * grid.N - 1:
        raise ValueError("k_star must leave room for the next square")
    fh = _ext(f)
    v = _ext_baseline(fh)
    best = None
    arg = (0, 0)
    for j in range(grid.P + 1):
        for i in range(grid.P + 1):
            x = grid.probe(k_star, i, j)
            xp = (x[0] + grid.M, x[1])
            du2 = fh.twice(xp)[0] - fh.twice(x)[0]
            dv2 = fh.twice(xp)[1] - fh.twice(x)[1]
            nu = grid.N * du2 - v[0]
            nv = grid.N * dv2 - v[1]
            val = Fraction(nu**2 + nv**2, (2 * grid.M * grid.N) ** 2)
            if best is None or val > best:
                best, arg = val, (i, j)
    return DeviationReport(best, arg)


# ----------------------------------------------------------------------
# corner counts and the expanding-pair search
# ----------------------------------------------------------------------

def corner_count(f: CandidateMap, grid: GridSpec, k: int) -> int:
    """|domain points in the M x M lower-left corner of square k|."""
    if not 1 <= k <= 2 * grid.N:
        raise ValueError("square index out of range")
    x0 = (k - 1) * grid.M
    return sum(
        1
        for (x, y) in f.images
        if x0 <= x < x0 + grid.M and 0 <= y < grid.M
    )


class SquareDensityError(ValueError):
    """The claimed corner-density gap does not hold for any square pair."""


@dataclass(frozen=True)
class ExpandingSearchResult:
    witness: Point | None
    kind: Literal["direct", "shifted", None]
    squares: tuple[int, int] | None
    note: str


def expanding_pair_search(
    f: CandidateMap,
    grid: GridSpec,
    lam: Fraction,
    d: Fraction,
    d_prime: Fraction,
    k: int | None = None,
    verify_densities: bool = True,
) -> ExpandingSearchResult:
    """First probe step with expansion >= (1 + lam) ||v|| / 2MN.

    Requires (and by default verifies) a pair of consecutive squares whose
    corner counts straddle [d' M^2, d M^2].  A None witness falsifies the
    surrounding argument: some asserted hypothesis cannot hold for this f.
    """
    lam, d, dp = Fraction(lam), Fraction(d), Fraction(d_prime)
    v = _baseline(f, grid)
    vsq = v[0] ** 2 + v[1] ** 2
    msq = grid.M**2
    pair = None
    if verify_densities:
        counts = {kk: corner_count(f, grid, kk) for kk in range(1, 2 * grid.N + 1)}
        lo_k = k if k is not None else 1
        hi_k = k if k is not None else 2 * grid.N - 1
        for kk in range(lo_k, hi_k + 1):
            a, b = counts[kk], counts[kk + 1]
            if (a >= d * msq and b <= dp * msq) or (b >= d * msq and a <= dp * msq):
                pair = (kk, kk + 1)
                break
        if pair is None:
            shown = ", ".join(f"S_{kk}: {counts[kk]}" for kk in sorted(counts))
            raise SquareDensityError(
                f"no consecutive squares with corner counts >= {d}*M^2 and <= {dp}*M^2 ({shown})"
            )
    elif k is not None:
        pair = (k, k + 1)
    two_mn = 2 * grid.M * grid.N
    bound_factor = (1 + lam) ** 2 * vsq
    for kk, i, j, x, t, kind, den in _step_pairs(f, grid):
        fu, fv = f.images[x]
        gu, gv = f.images[t]
        dsq = (fu - gu) ** 2 + (fv - gv) ** 2
        if Fraction(dsq, den**2) >= bound_factor / two_mn**2:
            return ExpandingSearchResult(x, kind, pair, "witness found")
    return ExpandingSearchResult(
        None,
        None,
        pair,
        "no stretched step: the asserted hypotheses are mutually inconsistent for this map",
    )


# ----------------------------------------------------------------------
# boundary curves
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Curve:
    """Closed polyline with exact rational vertices."""

    vertices: tuple[RatPoint, ...]
    seg_len_sq: tuple[Fraction, ...]
    deleted_loops: tuple[float, ...]

    @property
    def length(self) -> float:
        return sum(math.sqrt(float(s)) for s in self.seg_len_sq)

    def segments(self):
        n = len(self.vertices)
        for t in range(n):
            yield self.vertices[t], self.vertices[(t + 1) % n]


def _cross(o: RatPoint, a: RatPoint, b: RatPoint) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_segment(p: RatPoint, a: RatPoint, b: RatPoint) -> bool:
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def _seg_intersection(a, b, c, d) -> RatPoint | None:
    """Exact intersection point of segments ab and cd, or None.

    Proper crossings return the interior point; touches return the touch
    point.  Collinear overlaps return an overlapping endpoint.
    """
    d1 = _cross(c, d, a)
    d2 = _cross(c, d, b)
    d3 = _cross(a, b, c)
    d4 = _cross(a, b, d)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        t = d1 / (d1 - d2)
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    if d1 == 0 and _on_segment(a, c, d):
        return a
    if d2 == 0 and _on_segment(b, c, d):
        return b
    if d3 == 0 and _on_segment(c, a, b):
        return c
    if d4 == 0 and _on_segment(d, a, b):
        return d
    return None


def _poly_len(vs: Sequence[RatPoint], closed: bool = True) -> float:
    n = len(vs)
    rng = range(n) if closed else range(n - 1)
    return sum(
        math.sqrt(float((vs[(t + 1) % n][0] - vs[t][0]) ** 2 + (vs[(t + 1) % n][1] - vs[t][1]) ** 2))
        for t in rng
    )


def _first_self_intersection(vs: Sequence[RatPoint]):
    n = len(vs)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent segments share a vertex
            x = _seg_intersection(vs[i], vs[(i + 1) % n], vs[j], vs[(j + 1) % n])
            if x is not None:
                return i, j, x
    return None


def boundary_probe_cycle(grid: GridSpec, k: int) -> list[Point]:
    """Perimeter probes of square k in counterclockwise order."""
    p = grid.P
    cyc = [(i, 0) for i in range(p + 1)]
    cyc += [(p, j) for j in range(1, p + 1)]
    cyc += [(i, p) for i in range(p - 1, -1, -1)]
    cyc += [(0, j) for j in range(p - 1, 0, -1)]
    return [grid.probe(k, i, j) for (i, j) in cyc]


def boundary_curve(f, grid: GridSpec, k: int, L: Fraction | None = None) -> Curve:
    """Image of the square's boundary probes, made simple by deleting loops.

    Self-crossings are resolved by deleting the loop of smaller length,
    iterating to simplicity.  With an L supplied, each deleted loop must
    respect the length cap 2 (6L)^3 M / P, and (when P >= 4 (6L)^4) the
    final curve must clear the positivity floor 4 (sqrt(2)-1) (6L)^3.
    """
    fh = _ext(f)
    vs: list[RatPoint] = []
    for pt in boundary_probe_cycle(grid, k):
        u, v = fh.twice(pt)
        q = (Fraction(u, 2), Fraction(v, 2))
        if not vs or vs[-1] != q:
            vs.append(q)
    while len(vs) > 1 and vs[0] == vs[-1]:
        vs.pop()
    deleted: list[float] = []
    guard = (len(vs) + 4) ** 2
    while True:
        hit = _first_self_intersection(vs)
        if hit is None:
            break
        if guard == 0:
            raise RuntimeError("loop deletion failed to converge")
        guard -= 1
        i, j, x = hit
        loop_a = [x] + list(vs[i + 1 : j + 1])
        loop_b = [x] + list(vs[j + 1 :]) + list(vs[: i + 1])
        len_a = _poly_len(loop_a)
        len_b = _poly_len(loop_b)
        keep, drop_len = (loop_b, len_a) if len_a <= len_b else (loop_a, len_b)
        deleted.append(drop_len)
        vs = [p for t, p in enumerate(keep) if t == 0 or p != keep[t - 1]]
        while len(vs) > 1 and vs[0] == vs[-1]:
            vs.pop()
        if len(vs) < 3:
            raise ValueError("curve degenerated while deleting loops")
    seg_sq = tuple(
        Fraction(
            (vs[(t + 1) % len(vs)][0] - vs[t][0]) ** 2
            + (vs[(t + 1) % len(vs)][1] - vs[t][1]) ** 2
        )
        for t in range(len(vs))
    )
    curve = Curve(tuple(vs), seg_sq, tuple(deleted))
    if L is not None:
        lhat = 6 * Fraction(L)
        cap = 2 * float(lhat) ** 3 * grid.M / grid.P
        for ln in deleted:
            if ln > cap * (1 + 1e-9):
                raise ValueError(f"deleted loop of length {ln:.3f} exceeds the cap {cap:.3f}")
        if grid.P >= 4 * lhat**4:
            floor = 4 * (math.sqrt(2) - 1) * float(lhat) ** 3
            if curve.length < floor:
                raise ValueError("degenerate curve: below the positivity floor")
    return curve


def curve_from_points(points: Sequence[RatPoint | Point]) -> Curve:
    """Closed curve through the given vertices (consecutive duplicates dropped)."""
    vs = []
    for p in points:
        q = (Fraction(p[0]), Fraction(p[1]))
        if not vs or vs[-1] != q:
            vs.append(q)
    while len(vs) > 1 and vs[0] == vs[-1]:
        vs.pop()
    if len(vs) < 2:
        raise ValueError("need at least two distinct vertices")
    seg_sq = tuple(
        Fraction(
            (vs[(t + 1) % len(vs)][0] - vs[t][0]) ** 2
            + (vs[(t + 1) % len(vs)][1] - vs[t][1]) ** 2
        )
        for t in range(len(vs))
    )
    return Curve(tuple(vs), seg_sq, ())


# ----------------------------------------------------------------------
# lattice points near a curve
# ----------------------------------------------------------------------

def count_lattice_near_curve(curve: Curve, T) -> int:
    """|{x in Z^2 : dist(x, curve) <= T}|, exact.

    Preconditions follow the counting bound's range: length >= 4 and
    1 <= T <= length / 4 (the count is then at most 25 T length).
    """
    T = Fraction(T)
    length = curve.length
    if length < 4 - 1e-12 or not 1 <= T or float(T) > length / 4 + 1e-12:
        raise ValueError(
            f"need curve length >= 4 and 1 <= T <= length/4 (length {length:.4f}, T {float(T)})"
        )
    dens = [v.denominator for p in curve.vertices for v in p] + [T.denominator]
    scale = int(np.lcm.reduce(np.array(dens, dtype=object)))
    verts = [(int(p[0] * scale), int(p[1] * scale)) for p in curve.vertices]
    t_scaled = T * scale
    tsq = int(t_scaled * t_scaled) if (t_scaled * t_scaled).denominator == 1 else None
    xs = [p[0] for p in curve.vertices]
    ys = [p[1] for p in curve.vertices]
    gx0, gx1 = math.ceil(min(xs) - T), math.floor(max(xs) + T)
    gy0, gy1 = math.ceil(min(ys) - T), math.floor(max(ys) + T)
    px, py = np.meshgrid(
        np.arange(gx0, gx1 + 1, dtype=np.int64), np.arange(gy0, gy1 + 1, dtype=np.int64)
    )
    px = px.ravel() * scale
    py = py.ravel() * scale
    maxmag = max(
        max(abs(v[0]) for v in verts + [(px.min(), 0), (px.max(), 0)]),
        max(abs(v[1]) for v in verts + [(py.min(), 0), (py.max(), 0)]),
        int(t_scaled) + 1,
    )
    if tsq is not None and maxmag <= 20000:
        mask = np.zeros(px.shape, dtype=bool)
        n = len(verts)
        for t in range(n):
            ax, ay = verts[t]
            bx, by = verts[(t + 1) % n]
            mask |= _near_segment_mask(px, py, ax, ay, bx, by, tsq)
        return int(mask.sum())
    # exact fallback on rationals (small inputs only)
    cnt = 0
    tsq_f = T * T
    vs = curve.vertices
    for x in range(gx0, gx1 + 1):
        for y in range(gy0, gy1 + 1):
            p = (Fraction(x), Fraction(y))
            if any(_pt_seg_dist_sq_le(p, vs[t], vs[(t + 1) % len(vs)], tsq_f) for t in range(len(vs))):
                cnt += 1
    return cnt


def _near_segment_mask(px, py, ax, ay, bx, by, tsq) -> np.ndarray:
    wx = px - ax
    wy = py - ay
    dx, dy = bx - ax, by - ay
    dd = dx * dx + dy * dy
    ww = wx * wx + wy * wy
    if dd == 0:
        return ww <= tsq
    wd = wx * dx + wy * dy
    before = wd <= 0
    after = wd >= dd
    ub = px - bx
    vb = py - by
    endb = ub * ub + vb * vb <= tsq
    mid = ww * dd - wd * wd <= tsq * dd
    return np.where(before, ww <= tsq, np.where(after, endb, mid))


def _pt_seg_dist_sq_le(p: RatPoint, a: RatPoint, b: RatPoint, tsq: Fraction) -> bool:
    wx, wy = p[0] - a[0], p[1] - a[1]
    dx, dy = b[0] - a[0], b[1] - a[1]
    dd = dx * dx + dy * dy
    if dd == 0:
        return wx * wx + wy * wy <= tsq
    wd = wx * dx + wy * dy
    if wd <= 0:
        return wx * wx + wy * wy <= tsq
    if wd >= dd:
        ux, uy = p[0] - b[0], p[1] - b[1]
        return ux * ux + uy * uy <= tsq
    return (wx * wx + wy * wy) * dd - wd * wd <= tsq * dd


# ----------------------------------------------------------------------
# brute-force minimum distortion
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    bilip_sq: Fraction
    images: tuple[Point, ...]  # aligned with the input point order


def brute_force_min_bilip(points: Sequence[Point], box: tuple[int, int, int, int]) -> BruteForceResult:
    """Exact minimum two-sided distortion over all injections into the box.

    Backtracks over assignments in lexicographic target order with
    branch-and-bound on the running constant, so the returned witness is
    the lexicographically first optimum.  At most 8 points.
    """
    pts = list(points)
    if len(pts) > 8:
        raise ValueError("oracle capped at 8 points")
    if len(set(pts)) != len(pts):
        raise ValueError("points must be distinct")
    x0, y0, x1, y1 = box
    targets = [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]
    if len(targets) < len(pts):
        raise ValueError("box too small")
    n = len(pts)
    src_sq = [
        [
            (pts[a][0] - pts[b][0]) ** 2 + (pts[a][1] - pts[b][1]) ** 2
            for b in range(n)
        ]
        for a in range(n)
    ]
    best_num, best_den = None, None  # best bilip_sq = num/den
    best_imgs: tuple[Point, ...] | None = None
    cur_imgs: list[Point] = []

    def ratio_le(an, ad, bn, bd) -> bool:
        return an * bd <= bn * ad

    def dfs(t: int, cur_n: int, cur_d: int):
        nonlocal best_num, best_den, best_imgs
        if best_num is not None and not ratio_le(cur_n, cur_d, best_num, best_den):
            return
        if best_num is not None and cur_n * best_den == best_num * cur_d:
            return  # ties keep the earlier (lexicographically first) witness
        if t == n:
            best_num, best_den, best_imgs = cur_n, cur_d, tuple(cur_imgs)
            return
        used = set(cur_imgs)
        for tgt in targets:
            if tgt in used:
                continue
            nn, dd = cur_n, cur_d
            ok = True
            for b in range(t):
                isq = (tgt[0] - cur_imgs[b][0]) ** 2 + (tgt[1] - cur_imgs[b][1]) ** 2
                if isq == 0:
                    ok = False
                    break
                s = src_sq[t][b]
                # expansion^2 = isq/s ; contraction^2 = s/isq
                if not ratio_le(isq, s, nn, dd):
                    nn, dd = isq, s
                if not ratio_le(s, isq, nn, dd):
                    nn, dd = s, isq
            if not ok:
                continue
            if best_num is not None and not ratio_le(nn, dd, best_num, best_den):
                continue
            cur_imgs.append(tgt)
            dfs(t + 1, nn, dd)
            cur_imgs.pop()

    dfs(0, 1, 1)
    if best_imgs is None:
        raise RuntimeError("no injective assignment found")
    return BruteForceResult(Fraction(best_num, best_den), best_imgs)


# ----------------------------------------------------------------------
# bounded-radius matching heuristic
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HeuristicResult:
    map: CandidateMap
    report: DistortionReport
    radius_sq: int


def heuristic_grid_map(
    window_pts: Sequence[Point],
    radius_budget: int,
    window: tuple[int, int, int, int] | None = None,
    pair_cap: int = 4000,
    target_box: tuple[int, int, int, int] | None = None,
) -> HeuristicResult:
    """Injective map onto lattice targets minimizing the largest displacement.

    Binary-searches the bottleneck radius over the realizable squared
    distances and certifies feasibility with an augmenting-path matching.
    Without a ``target_box`` every lattice point within the budget is an
    eligible target, so sparse windows relax to (near-)identity placements;
    with one, the points must pack into the box, which is how the
    compression cost of a density deficit is measured.  The distortion
    report is exact over all pairs when there are few, else over adjacent
    pairs plus a deterministic sample.
    """
    pts = sorted(set(window_pts))
    if not pts:
        raise ValueError("empty window")
    if window is None:
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        window = (min(xs), min(ys), max(xs), max(ys))
    r = int(radius_budget)
    if target_box is not None:
        bx0, by0, bx1, by1 = target_box
        targets = sorted(
            (x, y) for x in range(bx0, bx1 + 1) for y in range(by0, by1 + 1)
        )
        if len(targets) < len(pts):
            raise ValueError("target box too small")
    else:
        targets = sorted(
            {
                (x + dx, y + dy)
                for (x, y) in pts
                for dx in range(-r, r + 1)
                for dy in range(-r, r + 1)
                if dx * dx + dy * dy <= r * r
            }
        )
    dist_sq = [
        [(p[0] - t[0]) ** 2 + (p[1] - t[1]) ** 2 for t in targets] for p in pts
    ]
    cands = sorted(
        {d for row in dist_sq for d in row if d <= r * r}
    )
    lo, hi = 0, len(cands) - 1
    if not cands or _match(pts, targets, dist_sq, cands[-1]) is None:
        raise ValueError("no injective placement within the radius budget")
    while lo < hi:
        mid = (lo + hi) // 2
        if _match(pts, targets, dist_sq, cands[mid]) is not None:
            hi = mid
        else:
            lo = mid + 1
    rsq = cands[lo]
    assign = _match(pts, targets, dist_sq, rsq)
    imgs = {p: targets[assign[a]] for a, p in enumerate(pts)}
    cmap = CandidateMap(window, imgs)
    adj = [
        (p, q)
        for p, q in itertools.combinations(pts, 2)
        if (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 <= 2
    ]
    pairs = all_pairs(pts)
    if len(pairs) > pair_cap:
        stride = len(pairs) // pair_cap + 1
        pairs = pairs[::stride] + adj
    report = distortion(cmap, pairs)
    return HeuristicResult(cmap, report, rsq)


def _match(pts, targets, dist_sq, rsq) -> list[int] | None:
    """Kuhn's augmenting-path matching under a squared-radius cap."""
    nbrs = [
        [t for t in range(len(targets)) if dist_sq[a][t] <= rsq]
        for a in range(len(pts))
    ]
    owner = [-1] * len(targets)
    assign = [-1] * len(pts)

    def augment(a: int, seen: set[int]) -> bool:
        for t in nbrs[a]:
            if t in seen:
                continue
            seen.add(t)
            if owner[t] == -1 or augment(owner[t], seen):
                owner[t] = a
                assign[a] = t
                return True
        return False

    for a in range(len(pts)):
        if not augment(a, set()):
            return None
    return assign
