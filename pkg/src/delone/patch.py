"""Finite lattice patches: occupancy grids over rectangular supports of Z^2.

A patch stores which cells of a width x height rectangle are occupied,
bottom-up and row-major (``cells[y, x]`` with y = 0 the bottom row), plus
the absolute lattice position of its bottom-left cell.  All pass/fail
arithmetic on patches (densities, counts) is exact: counts are integers
and densities are ``fractions.Fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

Point = tuple[int, int]


class PatchFormatError(ValueError):
    """Raised on malformed patch/points/map files."""


@dataclass(frozen=True, eq=False)
class Patch:
    """Occupancy bitset on a rectangular support.

    ``cells`` is a uint8 array of shape (height, width); row 0 is the
    BOTTOM row of the support.  ``origin`` is the absolute lattice
    coordinate of cell (0, 0).  When ``full_boundary`` is set, every cell
    on the outermost rows/columns must be occupied.
    """

    cells: np.ndarray
    origin: Point = (0, 0)
    full_boundary: bool = False

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.cells, dtype=np.uint8))
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("patch support must be a nonempty rectangle")
        if arr.max(initial=0) > 1:
            raise ValueError("occupancy values must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "cells", arr)
        if self.full_boundary and not self.boundary_full():
            raise ValueError("full_boundary flag set but a boundary cell is empty")

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def side(self) -> int:
        if self.width != self.height:
            raise ValueError("patch is not square")
        return self.width

    def get(self, x: int, y: int) -> bool:
        """Occupancy at local coordinates (x, y), y measured from the bottom."""
        return bool(self.cells[y, x])

    def popcount(self) -> int:
        return int(self.cells.sum())

    def density(self) -> Fraction:
        return Fraction(self.popcount(), self.width * self.height)

    def boundary_full(self) -> bool:
        c = self.cells
        return bool(c[0].all() and c[-1].all() and c[:, 0].all() and c[:, -1].all())

    # -- content comparison (ignores origin and flags) --------------------

    def same_content(self, other: "Patch") -> bool:
        return self.cells.shape == other.cells.shape and bool(
            np.array_equal(self.cells, other.cells)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Patch):
            return NotImplemented
        return self.same_content(other) and self.origin == other.origin

    def __hash__(self):
        return hash((self.cells.shape, self.cells.tobytes(), self.origin))

    # -- derived patches ---------------------------------------------------

    def subpatch(self, x0: int, y0: int, w: int, h: int) -> "Patch":
        """Restriction to local cells [x0, x0+w) x [y0, y0+h)."""
        if x0 < 0 or y0 < 0 or x0 + w > self.width or y0 + h > self.height:
            raise ValueError("subpatch exceeds support")
        ox, oy = self.origin
        return Patch(self.cells[y0 : y0 + h, x0 : x0 + w], (ox + x0, oy + y0))

    def translated(self, dx: int, dy: int) -> "Patch":
        ox, oy = self.origin
        return Patch(self.cells, (ox + dx, oy + dy), self.full_boundary)

    def closed(self) -> "Patch":
        """Add a fully occupied top row and right column.

        Converts a half-open corner patch back into the closed square whose
        boundary rows/columns are entirely occupied (the matching convention
        identifies the shared edges of adjacent closed squares).
        """
        h, w = self.cells.shape
        out = np.zeros((h + 1, w + 1), dtype=np.uint8)
        out[:h, :w] = self.cells
        out[h, :] = 1
        out[:, w] = 1
        if not (self.cells[0].all() and self.cells[:, 0].all()):
            raise ValueError("closure defined only for patches with full bottom/left edges")
        return Patch(out, self.origin, full_boundary=True)

    def corner(self) -> "Patch":
        """Drop the top row and right column (the lower-left corner)."""
        if self.width < 2 or self.height < 2:
            raise ValueError("patch too small to take a corner")
        return Patch(self.cells[:-1, :-1], self.origin)

    def points(self) -> Iterator[Point]:
        """Absolute coordinates of occupied cells, bottom-up then left-right."""
        ox, oy = self.origin
        ys, xs = np.nonzero(self.cells)
        order = np.lexsort((xs, ys))
        for i in order:
            yield (ox + int(xs[i]), oy + int(ys[i]))

    def __str__(self) -> str:
        rows = ["".join("1" if v else "0" for v in row) for row in self.cells[::-1]]
        return "\n".join(rows)


def from_rows(rows: Iterable[str], origin: Point = (0, 0), full_boundary: bool = False) -> Patch:
    """Build a patch from strings of 0/1, FIRST string = TOP row."""
    mat = [[int(ch) for ch in row] for row in rows]
    if len({len(r) for r in mat}) != 1:
        raise PatchFormatError("ragged rows")
    return Patch(np.array(mat[::-1], dtype=np.uint8), origin, full_boundary)


def full_patch(width: int, height: int, origin: Point = (0, 0)) -> Patch:
    return Patch(np.ones((height, width), dtype=np.uint8), origin, full_boundary=True)


def has_even_column_property(patch: Patch) -> bool:
    """True iff every cell in a column of even absolute x is occupied.

    Absolute parity uses the patch origin, so a patch "centered at the
    origin" is checked against its real lattice position.
    """
    if patch.popcount() == 0:
        raise ValueError("patch is empty")
    ox = patch.origin[0]
    even_cols = [x for x in range(patch.width) if (ox + x) % 2 == 0]
    if not even_cols:
        return True
    return bool(patch.cells[:, even_cols].all())


def corner_density(patch: Patch, corner_side: int) -> Fraction:
    """Occupied fraction of the M x M block at the patch's lower-left.

    Counts cells with both local coordinates in [0, M-1], divided by M^2.
    """
    m = corner_side
    if m < 1 or m > min(patch.width, patch.height):
        raise ValueError("corner exceeds support")
    return Fraction(int(patch.cells[:m, :m].sum()), m * m)


# ----------------------------------------------------------------------
# text formats
# ----------------------------------------------------------------------

def dumps_patch(patch: Patch) -> str:
    """Serialize to the .dpf text format (header line, then rows top-down)."""
    flag = " full_boundary" if patch.full_boundary else ""
    head = f"PATCH {patch.width} {patch.height} {patch.origin[0]} {patch.origin[1]}{flag}"
    return head + "\n" + str(patch) + "\n"


def _parse_patch_header(line: str):
    parts = line.split()
    if not parts or parts[0] != "PATCH":
        raise PatchFormatError(f"expected PATCH header, got: {line!r}")
    if len(parts) not in (5, 6):
        raise PatchFormatError(f"bad PATCH header: {line!r}")
    w, h, ox, oy = (int(p) for p in parts[1:5])
    flag = len(parts) == 6
    if flag and parts[5] != "full_boundary":
        raise PatchFormatError(f"unknown flag {parts[5]!r}")
    return w, h, ox, oy, flag


def parse_patch_lines(lines: list[str], start: int = 0) -> tuple[Patch, int]:
    """Parse one PATCH block from ``lines[start:]``; returns (patch, next index)."""
    w, h, ox, oy, flag = _parse_patch_header(lines[start])
    rows = lines[start + 1 : start + 1 + h]
    if len(rows) != h:
        raise PatchFormatError("truncated patch body")
    for r in rows:
        if len(r.strip()) != w or set(r.strip()) - {"0", "1"}:
            raise PatchFormatError(f"bad patch row: {r!r}")
    patch = from_rows((r.strip() for r in rows), (ox, oy), flag)
    return patch, start + 1 + h


def loads_patch(text: str) -> Patch:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    patch, _ = parse_patch_lines(lines)
    return patch


def write_patch(path, patch: Patch) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_patch(patch))


def read_patch(path) -> Patch:
    with open(path) as fh:
        return loads_patch(fh.read())


def write_points(path, points: Iterable[Point], comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for x, y in points:
            fh.write(f"{x} {y}\n")


def read_points(path) -> list[Point]:
    pts = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            xs = ln.split()
            if len(xs) != 2:
                raise PatchFormatError(f"bad points line: {ln!r}")
            pts.append((int(xs[0]), int(xs[1])))
    return pts


def dumps_pbm(patch: Patch) -> str:
    """Plain PBM ("P1"): 1 = occupied, top row first."""
    rows = [" ".join(str(int(v)) for v in row) for row in patch.cells[::-1]]
    return f"P1\n{patch.width} {patch.height}\n" + "\n".join(rows) + "\n"


def loads_pbm(text: str) -> Patch:
    toks = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0]
        toks.extend(ln.split())
    if not toks or toks[0] != "P1":
        raise PatchFormatError("not a plain PBM file")
    w, h = int(toks[1]), int(toks[2])
    bits = [int(t) for t in toks[3:]]
    if len(bits) != w * h:
        raise PatchFormatError("PBM size mismatch")
    arr = np.array(bits, dtype=np.uint8).reshape(h, w)
    return Patch(arr[::-1])
