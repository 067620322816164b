"""Implicit substitution hierarchies over lattice patches.

A hierarchy holds concrete patches at level 1 and, at each higher level,
one arrangement grid per patch mapping grid cells to patch ids of the
level below.  Patches are only materialized on demand (against a memory
cap); occurrence counting works on the implicit structure:

* block-aligned counts come from exact integer transition-matrix products;
* sliding counts recurse through the hierarchy, materializing only thin
  bands around internal block boundaries (memoized by the ordered tuple of
  adjacent child ids), so exact counts stay feasible at depths whose full
  patches would not fit in memory.

Arrangements come in two flavours: dense integer grids, and a compact
closed form for the bottom-alternation construction whose grids are far
too large to store explicitly in rigorous parameter regimes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .patch import Patch, PatchFormatError, Point, parse_patch_lines, dumps_patch

BLOCK_ALIGNED = "block_aligned"
SLIDING = "sliding"

DEFAULT_CELL_CAP = int(os.environ.get("DELONE_CELL_CAP", 2**28))


class CapacityError(RuntimeError):
    """Materialization would exceed the configured cell cap."""


class SpecError(ValueError):
    """Structurally invalid hierarchy description."""


# ----------------------------------------------------------------------
# arrangements
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DenseArrangement:
    """Explicit grid of child ids; row 0 is the bottom row."""

    grid: np.ndarray

    def __post_init__(self):
        g = np.ascontiguousarray(np.asarray(self.grid))
        if g.ndim != 2 or g.size == 0:
            raise SpecError("arrangement grid must be a nonempty matrix")
        g.flags.writeable = False
        object.__setattr__(self, "grid", g)

    @property
    def rows(self) -> int:
        return int(self.grid.shape[0])

    @property
    def cols(self) -> int:
        return int(self.grid.shape[1])

    def id_at(self, col: int, row: int) -> int:
        return int(self.grid[row, col])

    def id_bounds(self) -> tuple[int, int]:
        return int(self.grid.min()), int(self.grid.max())

    def counts(self, k_prev: int) -> list[int]:
        out = np.bincount(self.grid.ravel(), minlength=k_prev + 1)
        return [int(c) for c in out[1 : k_prev + 1]]

    def to_grid(self) -> np.ndarray:
        return self.grid

    def hpair_counts(self) -> dict[tuple[int, int], int]:
        a = self.grid[:, :-1].ravel()
        b = self.grid[:, 1:].ravel()
        return _pair_tally(a, b)

    def vpair_counts(self) -> dict[tuple[int, int], int]:
        a = self.grid[:-1, :].ravel()
        b = self.grid[1:, :].ravel()
        return _pair_tally(a, b)

    def quad_counts(self) -> dict[tuple[int, int, int, int], int]:
        bl = self.grid[:-1, :-1].ravel()
        br = self.grid[:-1, 1:].ravel()
        tl = self.grid[1:, :-1].ravel()
        tr = self.grid[1:, 1:].ravel()
        stacked = np.stack([bl, br, tl, tr], axis=1)
        uniq, cnt = np.unique(stacked, axis=0, return_counts=True)
        return {tuple(int(v) for v in row): int(c) for row, c in zip(uniq, cnt)}


def _pair_tally(a: np.ndarray, b: np.ndarray) -> dict[tuple[int, int], int]:
    stacked = np.stack([a, b], axis=1)
    uniq, cnt = np.unique(stacked, axis=0, return_counts=True)
    return {(int(x), int(y)): int(c) for (x, y), c in zip(uniq, cnt)}


@dataclass(frozen=True)
class AltBottomArrangement:
    """Closed form of the alternating-bottom-row arrangement.

    The grid is square with side ``super_cells * blocks``.  The bottom
    ``super_cells`` rows split into ``blocks`` column groups of width
    ``super_cells``; group b holds ``alt_id`` when b is odd, ``main_id``
    when b is even (so both extreme groups hold ``main_id``).  Everything
    above the bottom band holds ``main_id``.  ``blocks`` must be odd.
    """

    super_cells: int
    blocks: int
    main_id: int
    alt_id: int

    def __post_init__(self):
        if self.super_cells < 1 or self.blocks < 3 or self.blocks % 2 == 0:
            raise SpecError("need super_cells >= 1 and an odd blocks >= 3")
        if self.main_id == self.alt_id:
            raise SpecError("main and alternate ids must differ")

    @property
    def rows(self) -> int:
        return self.super_cells * self.blocks

    @property
    def cols(self) -> int:
        return self.super_cells * self.blocks

    def id_at(self, col: int, row: int) -> int:
        if row >= self.super_cells:
            return self.main_id
        return self.alt_id if (col // self.super_cells) % 2 else self.main_id

    def id_bounds(self) -> tuple[int, int]:
        return min(self.main_id, self.alt_id), max(self.main_id, self.alt_id)

    def counts(self, k_prev: int) -> list[int]:
        out = [0] * k_prev
        s, b = self.super_cells, self.blocks
        total = (s * b) ** 2
        alt = s * s * (b // 2)
        out[self.alt_id - 1] += alt
        out[self.main_id - 1] += total - alt
        return out

    def to_grid(self) -> np.ndarray:
        s, b = self.super_cells, self.blocks
        n = s * b
        if n * n > DEFAULT_CELL_CAP:
            raise CapacityError(f"dense arrangement would need {n * n} cells")
        grid = np.full((n, n), self.main_id, dtype=np.int32)
        for blk in range(1, b, 2):
            grid[:s, blk * s : (blk + 1) * s] = self.alt_id
        return grid

    def hpair_counts(self) -> dict[tuple[int, int], int]:
        s, b = self.super_cells, self.blocks
        n = s * b
        m, a = self.main_id, self.alt_id
        out: dict[tuple[int, int], int] = {}
        # rows above the bottom band
        _add(out, (m, m), (n - s) * (n - 1))
        # bottom band: inside each group, then across group boundaries
        if s > 1:
            _add(out, (m, m), s * (s - 1) * (b - (b // 2)))
            _add(out, (a, a), s * (s - 1) * (b // 2))
        _add(out, (m, a), s * ((b - 1) // 2 + (1 if b % 2 == 0 else 0)))
        _add(out, (a, m), s * ((b - 1) // 2))
        # blocks is odd: boundaries alternate m|a, a|m, ... starting and ending m|a
        return {k: v for k, v in out.items() if v}

    def vpair_counts(self) -> dict[tuple[int, int], int]:
        s, b = self.super_cells, self.blocks
        n = s * b
        m, a = self.main_id, self.alt_id
        out: dict[tuple[int, int], int] = {}
        _add(out, (m, m), (n - s - 1) * n if n - s >= 1 else 0)  # above band
        if s > 1:
            _add(out, (m, m), (s - 1) * s * (b - (b // 2)))
            _add(out, (a, a), (s - 1) * s * (b // 2))
        # seam between the band's top row and the filler above it
        _add(out, (m, m), s * (b - (b // 2)))
        _add(out, (a, m), s * (b // 2))
        return {k: v for k, v in out.items() if v}

    def quad_counts(self) -> dict[tuple[int, int, int, int], int]:
        s, b = self.super_cells, self.blocks
        n = s * b
        m, a = self.main_id, self.alt_id
        out: dict[tuple[int, int, int, int], int] = {}
        _add(out, (m, m, m, m), (n - s - 1) * (n - 1) if n - s >= 1 else 0)
        # junction rows inside the bottom band
        if s > 1:
            _add(out, (m, m, m, m), (s - 1) * (s - 1) * (b - (b // 2)))
            _add(out, (a, a, a, a), (s - 1) * (s - 1) * (b // 2))
            _add(out, (m, a, m, a), (s - 1) * ((b - 1) // 2 + (b % 2 == 0)))
            _add(out, (a, m, a, m), (s - 1) * ((b - 1) // 2))
        # junction row at the band's top edge
        if s > 1:
            _add(out, (m, m, m, m), (s - 1) * (b - (b // 2)))
            _add(out, (a, a, m, m), (s - 1) * (b // 2))
        else:
            _add(out, (m, m, m, m), 0)
        _add(out, (m, a, m, m), (b - 1) // 2 + (b % 2 == 0))
        _add(out, (a, m, m, m), (b - 1) // 2)
        return {k: v for k, v in out.items() if v}


def _add(d: dict, key, val: int) -> None:
    if val:
        d[key] = d.get(key, 0) + val


Arrangement = DenseArrangement | AltBottomArrangement


# ----------------------------------------------------------------------
# hierarchy spec
# ----------------------------------------------------------------------

@dataclass
class Level:
    """One hierarchy level above the base: one arrangement per patch id."""

    arrangements: list[Arrangement]
    anchor: tuple[int, int] = (0, 0)  # (col, row) cell carrying the previous frame
    n_is_one: bool = False
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.arrangements:
            raise SpecError("level must hold at least one arrangement")
        dims = {(a.rows, a.cols) for a in self.arrangements}
        if len(dims) != 1:
            raise SpecError("arrangements of one level must share dimensions")
        rows, cols = next(iter(dims))
        if rows != cols:
            raise SpecError("frames must be square")
        ac, ar = self.anchor
        if not (0 <= ac < cols and 0 <= ar < rows):
            raise SpecError("anchor cell outside the arrangement grid")

    @property
    def branching(self) -> int:
        return self.arrangements[0].rows


@dataclass
class HierarchySpec:
    """Base patches plus one :class:`Level` per higher hierarchy level."""

    base: list[Patch]
    levels: list[Level] = field(default_factory=list)
    kind: str = "custom"
    anchored: bool = False
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.base:
            raise SpecError("need at least one base patch")
        sides = {(p.width, p.height) for p in self.base}
        if len(sides) != 1 or self.base[0].width != self.base[0].height:
            raise SpecError("base patches must be squares of equal side")

    # -- shape accessors -------------------------------------------------

    @property
    def num_levels(self) -> int:
        return 1 + len(self.levels)

    def k(self, level: int) -> int:
        self._check_level(level)
        return len(self.base) if level == 1 else len(self.levels[level - 2].arrangements)

    def side(self, level: int) -> int:
        self._check_level(level)
        s = self.base[0].width
        for lv in self.levels[: level - 1]:
            s *= lv.branching
        return s

    def cell_count(self, level: int) -> int:
        return self.side(level) ** 2

    def origin(self, level: int) -> Point:
        """Absolute position of the level's bottom-left cell (frames nest)."""
        self._check_level(level)
        ox, oy = self.base[0].origin
        side = self.base[0].width
        for lv in self.levels[: level - 1]:
            ac, ar = lv.anchor
            ox -= ac * side
            oy -= ar * side
            side *= lv.branching
        return (ox, oy)

    def _check_level(self, level: int) -> None:
        if not (1 <= level <= self.num_levels):
            raise SpecError(f"level {level} outside 1..{self.num_levels}")

    # -- exact counting --------------------------------------------------

    def step_count_matrix(self, level: int) -> list[list[int]]:
        """Counts of level-(L-1) ids inside level-L arrangements.

        Entry [i][j] counts child patch i+1 in arrangement j+1.
        """
        self._check_level(level)
        if level == 1:
            raise SpecError("level 1 has no arrangement")
        lv = self.levels[level - 2]
        kp = self.k(level - 1)
        cols = [arr.counts(kp) for arr in lv.arrangements]
        return [[cols[j][i] for j in range(len(cols))] for i in range(kp)]

    def count_matrix(self, m: int, n: int) -> list[list[int]]:
        """Block counts of level-m patches inside level-n patches (k_m x k_n)."""
        self._check_level(m)
        self._check_level(n)
        if m > n:
            raise SpecError("need m <= n")
        mat = [[1 if i == j else 0 for j in range(self.k(m))] for i in range(self.k(m))]
        for t in range(m + 1, n + 1):
            mat = _imat_mul(mat, self.step_count_matrix(t))
        return mat

    def popcounts(self, level: int) -> list[int]:
        pops = [p.popcount() for p in self.base]
        for t in range(2, level + 1):
            step = self.step_count_matrix(t)
            pops = [
                sum(step[i][j] * pops[i] for i in range(len(pops)))
                for j in range(len(step[0]))
            ]
        return pops

    def density(self, level: int, pid: int) -> Fraction:
        """Occupied fraction of the (implicit) level patch, exact."""
        return Fraction(self.popcounts(level)[pid - 1], self.cell_count(level))


def _imat_mul(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    rows, inner, cols = len(a), len(b), len(b[0])
    if len(a[0]) != inner:
        raise SpecError("matrix shape mismatch")
    return [
        [sum(a[i][t] * b[t][j] for t in range(inner)) for j in range(cols)]
        for i in range(rows)
    ]


@dataclass(frozen=True)
class Frame:
    """Support square of one hierarchy level."""

    level: int
    side: int
    origin: Point

    def offsets(self, spec: HierarchySpec) -> Iterator[Point]:
        """Origins of the level's cells inside level+1 (the tiling translates)."""
        lv = spec.levels[self.level - 1]
        ox, oy = spec.origin(self.level + 1)
        for row in range(lv.branching):
            for col in range(lv.branching):
                yield (ox + col * self.side, oy + row * self.side)


def frame(spec: HierarchySpec, level: int) -> Frame:
    return Frame(level, spec.side(level), spec.origin(level))


# ----------------------------------------------------------------------
# materialization
# ----------------------------------------------------------------------

def materialize(
    spec: HierarchySpec,
    level: int,
    pid: int,
    cap: int | None = None,
    _memo: dict | None = None,
) -> Patch:
    """Bit-exact expansion of the arrangement recursion into a patch."""
    cap = DEFAULT_CELL_CAP if cap is None else cap
    spec._check_level(level)
    if not (1 <= pid <= spec.k(level)):
        raise SpecError(f"patch id {pid} outside 1..{spec.k(level)}")
    need = spec.cell_count(level)
    if need > cap:
        raise CapacityError(
            f"materializing level {level} patch {pid} requires {need} cells (cap {cap})"
        )
    memo: dict = {} if _memo is None else _memo
    arr = _materialize_cells(spec, level, pid, memo)
    return Patch(arr, spec.origin(level))


def _materialize_cells(spec, level, pid, memo) -> np.ndarray:
    key = (level, pid)
    if key in memo:
        return memo[key]
    if level == 1:
        out = spec.base[pid - 1].cells
    else:
        lv = spec.levels[level - 2]
        children = [
            _materialize_cells(spec, level - 1, i, memo)
            for i in range(1, spec.k(level - 1) + 1)
        ]
        stack = np.stack(children)
        grid = lv.arrangements[pid - 1].to_grid()
        tiles = stack[grid - 1]  # (rows, cols, s, s)
        rows, cols, s, _ = tiles.shape
        out = np.ascontiguousarray(
            tiles.transpose(0, 2, 1, 3).reshape(rows * s, cols * s)
        )
    memo[key] = out
    return out


def materialize_region(
    spec: HierarchySpec, level: int, pid: int, x0: int, y0: int, w: int, h: int
) -> np.ndarray:
    """Extract cells [x0, x0+w) x [y0, y0+h) of a level patch without full expansion."""
    side = spec.side(level)
    if x0 < 0 or y0 < 0 or x0 + w > side or y0 + h > side or w <= 0 or h <= 0:
        raise SpecError("region exceeds the patch support")
    if level == 1:
        return spec.base[pid - 1].cells[y0 : y0 + h, x0 : x0 + w]
    lv = spec.levels[level - 2]
    arr = lv.arrangements[pid - 1]
    s = spec.side(level - 1)
    out = np.zeros((h, w), dtype=np.uint8)
    for crow in range(y0 // s, (y0 + h - 1) // s + 1):
        for ccol in range(x0 // s, (x0 + w - 1) // s + 1):
            cid = arr.id_at(ccol, crow)
            cx0, cy0 = ccol * s, crow * s
            ix0, iy0 = max(x0, cx0), max(y0, cy0)
            ix1, iy1 = min(x0 + w, cx0 + s), min(y0 + h, cy0 + s)
            block = materialize_region(
                spec, level - 1, cid, ix0 - cx0, iy0 - cy0, ix1 - ix0, iy1 - iy0
            )
            out[iy0 - y0 : iy1 - y0, ix0 - x0 : ix1 - x0] = block
    return out


# ----------------------------------------------------------------------
# exact scans (shared by the sliding recursion and by export tooling)
# ----------------------------------------------------------------------

def scan_count(
    grid: np.ndarray,
    needle: Patch,
    x_lo: int = 0,
    x_hi: int | None = None,
    y_lo: int = 0,
    y_hi: int | None = None,
) -> int:
    """Exact-match placements of ``needle`` in ``grid`` with origins in ranges.

    A placement matches when occupied AND unoccupied cells agree.  Ranges
    are inclusive bounds on the placement origin (bottom-left cell).
    """
    H, W = grid.shape
    w, h = needle.width, needle.height
    if w > W or h > H:
        return 0
    x_hi = W - w if x_hi is None else min(x_hi, W - w)
    y_hi = H - h if y_hi is None else min(y_hi, H - h)
    if x_lo > x_hi or y_lo > y_hi:
        return 0
    sub = grid[y_lo : y_hi + h, x_lo : x_hi + w]
    return _scan_full(np.ascontiguousarray(sub), needle)


def _scan_full(grid: np.ndarray, needle: Patch) -> int:
    H, W = grid.shape
    w, h = needle.width, needle.height
    outh, outw = H - h + 1, W - w + 1
    g = grid.astype(np.int64)
    # windowed totals via an integral image
    integ = np.zeros((H + 1, W + 1), dtype=np.int64)
    integ[1:, 1:] = g.cumsum(axis=0).cumsum(axis=1)
    totals = (
        integ[h : h + outh, w : w + outw]
        - integ[0:outh, w : w + outw]
        - integ[h : h + outh, 0:outw]
        + integ[0:outh, 0:outw]
    )
    ones = needle.popcount()
    hits = np.zeros((outh, outw), dtype=np.int64)
    ys, xs = np.nonzero(needle.cells)
    for dy, dx in zip(ys, xs):
        hits += g[dy : dy + outh, dx : dx + outw]
    return int(((hits == ones) & (totals == ones)).sum())


def aligned_block_counts(grid: np.ndarray, spec: HierarchySpec, m: int) -> list[int]:
    """Counts of each level-m patch at level-m-aligned positions of ``grid``."""
    s = spec.side(m)
    H, W = grid.shape
    if H % s or W % s:
        raise SpecError("grid is not block aligned at that level")
    tiles = grid.reshape(H // s, s, W // s, s).transpose(0, 2, 1, 3)
    out = []
    for i in range(1, spec.k(m) + 1):
        ref = _materialize_cells(spec, m, i, {})
        out.append(int(np.all(tiles == ref, axis=(2, 3)).sum()))
    return out


# ----------------------------------------------------------------------
# occurrence counting
# ----------------------------------------------------------------------

def count_occurrences(
    spec: HierarchySpec,
    needle: Patch,
    level: int,
    pid: int,
    mode: str = SLIDING,
    cap: int | None = None,
) -> int:
    """Exact number of occurrences of ``needle`` in an (implicit) level patch.

    ``block_aligned`` counts needle-sized blocks of the hierarchy grid (the
    needle must match a whole level); ``sliding`` counts every translate
    fully inside the support, straddles included.
    """
    spec._check_level(level)
    side = spec.side(level)
    if needle.width > side or needle.height > side:
        raise SpecError(
            f"needle {needle.width}x{needle.height} larger than level-{level} side {side}"
        )
    if mode == BLOCK_ALIGNED:
        return _count_block_aligned(spec, needle, level, pid)
    if mode == SLIDING:
        memo: dict = {}
        return _count_sliding(spec, needle, level, pid, memo, DEFAULT_CELL_CAP if cap is None else cap)
    raise ValueError(f"unknown mode {mode!r}")


def _level_with_side(spec: HierarchySpec, side: int) -> int | None:
    for t in range(1, spec.num_levels + 1):
        if spec.side(t) == side:
            return t
    return None


def _count_block_aligned(spec, needle, level, pid) -> int:
    if needle.width != needle.height:
        raise SpecError("block-aligned needles must be square")
    m = _level_with_side(spec, needle.width)
    if m is None:
        raise SpecError(f"no hierarchy level has side {needle.width}")
    matching = [
        i
        for i in range(1, spec.k(m) + 1)
        if np.array_equal(_materialize_cells(spec, m, i, {}), needle.cells)
    ]
    if not matching:
        return 0
    mat = spec.count_matrix(m, level)
    return sum(mat[i - 1][pid - 1] for i in matching)


def _count_sliding(spec, needle, level, pid, memo, cap) -> int:
    key = ("n", level, pid)
    if key in memo:
        return memo[key]
    w, h = needle.width, needle.height
    side = spec.side(level)
    if w > side or h > side:
        return 0
    if level == 1:
        res = scan_count(spec.base[pid - 1].cells, needle)
        memo[key] = res
        return res
    s = spec.side(level - 1)
    if w > s or h > s:
        # needle wider than the children: fall back to a direct scan
        res = scan_count(_materialize_cells_capped(spec, level, pid, cap), needle)
        memo[key] = res
        return res
    lv = spec.levels[level - 2]
    arr = lv.arrangements[pid - 1]
    step = arr.counts(spec.k(level - 1))
    total = sum(
        step[i - 1] * _count_sliding(spec, needle, level - 1, i, memo, cap)
        for i in range(1, spec.k(level - 1) + 1)
    )
    if w >= 2:
        for (a, b), npairs in arr.hpair_counts().items():
            total += npairs * _vband_count(spec, needle, level - 1, a, b, memo)
    if h >= 2:
        for (a, b), npairs in arr.vpair_counts().items():
            total += npairs * _hband_count(spec, needle, level - 1, a, b, memo)
    if w >= 2 and h >= 2:
        for quad, nq in arr.quad_counts().items():
            total += nq * _corner_count(spec, needle, level - 1, quad, memo)
    memo[key] = total
    return total


def _materialize_cells_capped(spec, level, pid, cap) -> np.ndarray:
    need = spec.cell_count(level)
    if need > cap:
        raise CapacityError(
            f"direct scan of level {level} patch {pid} requires {need} cells (cap {cap})"
        )
    return _materialize_cells(spec, level, pid, {})


def _vband_count(spec, needle, t, a, b, memo) -> int:
    """Placements crossing the vertical seam between children a|b at level t."""
    key = ("V", t, a, b)
    if key in memo:
        return memo[key]
    w, h = needle.width, needle.height
    s = spec.side(t)
    left = materialize_region(spec, t, a, s - (w - 1), 0, w - 1, s)
    right = materialize_region(spec, t, b, 0, 0, w - 1, s)
    band = np.hstack([left, right])
    res = scan_count(band, needle, x_lo=0, x_hi=w - 2, y_lo=0, y_hi=s - h)
    memo[key] = res
    return res


def _hband_count(spec, needle, t, a, b, memo) -> int:
    """Placements crossing the horizontal seam between child a below child b."""
    key = ("H", t, a, b)
    if key in memo:
        return memo[key]
    w, h = needle.width, needle.height
    s = spec.side(t)
    bottom = materialize_region(spec, t, a, 0, s - (h - 1), s, h - 1)
    top = materialize_region(spec, t, b, 0, 0, s, h - 1)
    band = np.vstack([bottom, top])
    res = scan_count(band, needle, x_lo=0, x_hi=s - w, y_lo=0, y_hi=h - 2)
    memo[key] = res
    return res


def _corner_count(spec, needle, t, quad, memo) -> int:
    """Placements crossing both seams at a 2x2 child junction (bl, br, tl, tr)."""
    key = ("C", t) + tuple(quad)
    if key in memo:
        return memo[key]
    w, h = needle.width, needle.height
    s = spec.side(t)
    bl, br, tl, tr = quad
    blk = np.vstack(
        [
            np.hstack(
                [
                    materialize_region(spec, t, bl, s - (w - 1), s - (h - 1), w - 1, h - 1),
                    materialize_region(spec, t, br, 0, s - (h - 1), w - 1, h - 1),
                ]
            ),
            np.hstack(
                [
                    materialize_region(spec, t, tl, s - (w - 1), 0, w - 1, h - 1),
                    materialize_region(spec, t, tr, 0, 0, w - 1, h - 1),
                ]
            ),
        ]
    )
    res = scan_count(blk, needle, x_lo=0, x_hi=w - 2, y_lo=0, y_hi=h - 2)
    memo[key] = res
    return res


def block_frequency_matrix(spec: HierarchySpec, m: int, n: int) -> list[list[Fraction]]:
    """Block densities of level-m patches inside level-n patches (columns sum to 1)."""
    if m >= n:
        raise SpecError("need m < n")
    counts = spec.count_matrix(m, n)
    per_patch = (spec.side(n) // spec.side(m)) ** 2
    return [[Fraction(c, per_patch) for c in row] for row in counts]


# ----------------------------------------------------------------------
# scheme validation
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CheckRow:
    name: str
    ok: bool
    witness: str = ""


@dataclass(frozen=True)
class SchemeReport:
    rows: tuple[CheckRow, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def failed(self) -> list[CheckRow]:
        return [r for r in self.rows if not r.ok]


def validate_scheme(spec: HierarchySpec) -> SchemeReport:
    """Structural validation of the nesting/tiling properties of a hierarchy.

    Checks, per level: the frames nest and contain the origin; sides grow;
    every arrangement is a square grid over valid child ids; every child id
    is used in every arrangement; and, for anchored specs, patch 1 restricted
    to the anchor cell is patch 1 of the level below.
    """
    rows: list[CheckRow] = []

    def check(name: str, ok: bool, witness: str = ""):
        rows.append(CheckRow(name, ok, "" if ok else witness))

    # contains_origin / nesting
    ok, wit = True, ""
    prev = None
    for t in range(1, spec.num_levels + 1):
        ox, oy = spec.origin(t)
        side = spec.side(t)
        if not (ox <= 0 <= ox + side - 1 and oy <= 0 <= oy + side - 1):
            ok, wit = False, f"level {t} frame [{ox},{ox+side-1}]^2 misses the origin"
            break
        if prev is not None:
            pox, poy, pside = prev
            if not (ox <= pox and oy <= poy and ox + side >= pox + pside and oy + side >= poy + pside):
                ok, wit = False, f"level {t} frame does not contain level {t-1}"
                break
        prev = (ox, oy, side)
    check("contains_origin", ok, wit)

    ok, wit = True, ""
    for t, lv in enumerate(spec.levels, start=2):
        if lv.branching < 2:
            ok, wit = False, f"level {t} branching {lv.branching} < 2"
            break
    check("sides_grow", ok, wit)

    ok, wit = True, ""
    for t, lv in enumerate(spec.levels, start=2):
        dims = {(a.rows, a.cols) for a in lv.arrangements}
        if len(dims) != 1 or lv.branching != lv.arrangements[0].cols:
            ok, wit = False, f"level {t} arrangements disagree on dimensions"
            break
    check("exact_tiling", ok, wit)

    ok, wit = True, ""
    for t, lv in enumerate(spec.levels, start=2):
        kp = spec.k(t - 1)
        for j, arr in enumerate(lv.arrangements, start=1):
            lo, hi = arr.id_bounds()
            if lo < 1 or hi > kp:
                ok, wit = False, f"level {t} patch {j} references id outside 1..{kp}"
                break
        if not ok:
            break
    check("children_valid", ok, wit)

    ok, wit = True, ""
    for t, lv in enumerate(spec.levels, start=2):
        kp = spec.k(t - 1)
        for j, arr in enumerate(lv.arrangements, start=1):
            counts = arr.counts(kp)
            for i, c in enumerate(counts, start=1):
                if c == 0:
                    ok, wit = False, f"level {t} patch {j} never uses child {i}"
                    break
            if not ok:
                break
        if not ok:
            break
    check("all_children_used", ok, wit)

    if spec.anchored:
        ok, wit = True, ""
        for t, lv in enumerate(spec.levels, start=2):
            ac, ar = lv.anchor
            got = lv.arrangements[0].id_at(ac, ar)
            if got != 1:
                ok, wit = False, f"level {t} anchor cell {lv.anchor} holds id {got}, not 1"
                break
        check("anchor_chain", ok, wit)

    return SchemeReport(tuple(rows))


# ----------------------------------------------------------------------
# repetitivity estimation
# ----------------------------------------------------------------------

def estimate_repetitivity(patch: Patch, r: int) -> int | None:
    """Smallest window side R so that every R x R sub-window of ``patch``
    contains every r x r pattern occurring anywhere in the patch.

    Pattern equality is exact bitset equality (occupied and empty cells).
    Returns None ("window too small") when no R <= side - r works.
    """
    side = patch.side
    if r < 1:
        raise ValueError("pattern side must be positive")
    if side < 3 * r:
        raise ValueError(f"patch side {side} below 3r = {3 * r}")
    if r > 8:
        raise ValueError("pattern side above 8 is not supported")
    labels = _pattern_labels(patch.cells, r)
    nlab = int(labels.max()) + 1
    lo, hi = r, side - r
    if not _window_check(labels, nlab, side, r, hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if _window_check(labels, nlab, side, r, mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _pattern_labels(cells: np.ndarray, r: int) -> np.ndarray:
    H, W = cells.shape
    outh, outw = H - r + 1, W - r + 1
    ids = np.zeros((outh, outw), dtype=np.int64)
    g = cells.astype(np.int64)
    shift = 0
    for dy in range(r):
        for dx in range(r):
            ids |= g[dy : dy + outh, dx : dx + outw] << shift
            shift += 1
    uniq, inv = np.unique(ids, return_inverse=True)
    return inv.reshape(ids.shape)


def _window_check(labels: np.ndarray, nlab: int, side: int, r: int, R: int) -> bool:
    """True iff every R x R window of the original patch holds every label."""
    K = R - r + 1  # span of pattern origins inside one window
    H, W = labels.shape
    outh, outw = side - R + 1, side - R + 1
    for lab in range(nlab):
        ind = (labels == lab).astype(np.int64)
        integ = np.zeros((H + 1, W + 1), dtype=np.int64)
        integ[1:, 1:] = ind.cumsum(axis=0).cumsum(axis=1)
        sums = (
            integ[K : K + outh, K : K + outw]
            - integ[0:outh, K : K + outw]
            - integ[K : K + outh, 0:outw]
            + integ[0:outh, 0:outw]
        )
        if not (sums > 0).all():
            return False
    return True


# ----------------------------------------------------------------------
# descriptor file (.dhs)
# ----------------------------------------------------------------------

def dumps_spec(spec: HierarchySpec) -> str:
    out = ["DHS 1", f"kind {spec.kind}", f"anchored {int(spec.anchored)}"]
    for k in sorted(spec.meta):
        out.append(f"meta {k} {spec.meta[k]}")
    out.append(f"level 1 patches {len(spec.base)}")
    for p in spec.base:
        out.append(dumps_patch(p).rstrip("\n"))
    for t, lv in enumerate(spec.levels, start=2):
        out.append(f"level {t} patches {len(lv.arrangements)}")
        out.append(f"anchor {lv.anchor[0]} {lv.anchor[1]}")
        if lv.n_is_one:
            out.append("n1")
        for k in sorted(lv.meta):
            out.append(f"meta {k} {lv.meta[k]}")
        for arr in lv.arrangements:
            if isinstance(arr, AltBottomArrangement):
                out.append(
                    f"arrangement {arr.rows} {arr.cols} altbottom "
                    f"{arr.super_cells} {arr.blocks} {arr.main_id} {arr.alt_id}"
                )
            else:
                out.append(f"arrangement {arr.rows} {arr.cols}")
                for row in arr.grid[::-1]:
                    out.append(" ".join(str(int(v)) for v in row))
    return "\n".join(out) + "\n"


def loads_spec(text: str) -> HierarchySpec:
    lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split() != ["DHS", "1"]:
        raise PatchFormatError("missing DHS 1 header")
    i = 1
    kind, anchored = "custom", False
    meta: dict[str, str] = {}
    while i < len(lines) and not lines[i].startswith("level "):
        parts = lines[i].split(None, 2)
        if parts[0] == "kind":
            kind = parts[1]
        elif parts[0] == "anchored":
            anchored = bool(int(parts[1]))
        elif parts[0] == "meta":
            meta[parts[1]] = parts[2] if len(parts) > 2 else ""
        else:
            raise PatchFormatError(f"unexpected line {lines[i]!r}")
        i += 1

    base: list[Patch] = []
    levels: list[Level] = []
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "level" or head[2] != "patches":
            raise PatchFormatError(f"expected level header, got {lines[i]!r}")
        lvl_no, kk = int(head[1]), int(head[3])
        i += 1
        if lvl_no == 1:
            for _ in range(kk):
                p, i = parse_patch_lines(lines, i)
                base.append(p)
            continue
        anchor, n1, lmeta = (0, 0), False, {}
        arrs: list[Arrangement] = []
        while i < len(lines) and not lines[i].startswith("level "):
            parts = lines[i].split()
            if parts[0] == "anchor":
                anchor = (int(parts[1]), int(parts[2]))
                i += 1
            elif parts[0] == "n1":
                n1 = True
                i += 1
            elif parts[0] == "meta":
                p3 = lines[i].split(None, 2)
                lmeta[p3[1]] = p3[2] if len(p3) > 2 else ""
                i += 1
            elif parts[0] == "arrangement":
                rows, cols = int(parts[1]), int(parts[2])
                if len(parts) > 3 and parts[3] == "altbottom":
                    s, b, main, alt = (int(v) for v in parts[4:8])
                    arr = AltBottomArrangement(s, b, main, alt)
                    if arr.rows != rows or arr.cols != cols:
                        raise PatchFormatError("altbottom dimensions disagree")
                    arrs.append(arr)
                    i += 1
                else:
                    body = lines[i + 1 : i + 1 + rows]
                    if len(body) != rows:
                        raise PatchFormatError("truncated arrangement body")
                    grid = np.array(
                        [[int(v) for v in ln.split()] for ln in body], dtype=np.int64
                    )[::-1]
                    if grid.shape != (rows, cols):
                        raise PatchFormatError("arrangement body shape mismatch")
                    arrs.append(DenseArrangement(grid))
                    i += 1 + rows
            else:
                raise PatchFormatError(f"unexpected line {lines[i]!r}")
        if len(arrs) != kk:
            raise PatchFormatError(f"level {lvl_no}: expected {kk} arrangements")
        levels.append(Level(arrs, anchor, n1, lmeta))
    return HierarchySpec(base, levels, kind, anchored, meta)


def write_spec(path, spec: HierarchySpec) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_spec(spec))


def read_spec(path) -> HierarchySpec:
    with open(path) as fh:
        return loads_spec(fh.read())
