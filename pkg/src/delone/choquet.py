"""Realizing a finite-dimensional simplex of invariant measures.

The ingredients: a scale sequence p_n (squares q_n = p_n^2), a sequence
r_n controlling a forced bottom stripe, and integer transition matrices
A_n whose columns prescribe exactly how many blocks of each level-n patch
a level-(n+1) patch contains.  Patches at consecutive levels are built so
that: the upper-right block of every patch is patch 1 (and patch 1 is used
nowhere else, which keeps the block decomposition unambiguous); the bottom
stripe of r_n block-rows alternates two designated patches; and the free
blocks are filled to meet the matrix counts, with a small designated-cell
device that keeps the outputs pairwise distinct.

Invariant measures then correspond to vectors mu_n with mu_n = A_n mu_{n+1}
exactly; back-propagating different terminal vertices gives finite-depth
shadows of the simplex's extreme points.  Full identification of the
inverse limit is not machine-checkable and is reported as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .hierarchy import (
    DEFAULT_CELL_CAP,
    CapacityError,
    CheckRow,
    DenseArrangement,
    HierarchySpec,
    Level,
    SchemeReport,
)
from .patch import Patch

IntMatrix = list[list[int]]  # rows x cols, entry [i][j]


class SimplexBuildError(ValueError):
    """Infeasible sizes or matrices for the level builder."""


# ----------------------------------------------------------------------
# size sequences
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SizeSequences:
    p: tuple[int, ...]
    q: tuple[int, ...]
    r: tuple[int, ...]
    l: tuple[int, ...]
    headroom_ok: tuple[bool, ...]  # the expansion-headroom check per step


def p_sequence(dim: int | None, n_max: int, k: int | None = None) -> SizeSequences:
    """Canonical scale sequences: p_1 = max(4, d) (4 when the simplex is
    infinite-dimensional), p_{n+1} = 2 n! p_n^2, r_n = n!.

    Verifies r_n p_n < p_{n+1} (hard error) and records per-step whether the
    expansion-headroom inequality
    p_{n+1} > ((k-1) p_n^2/(k-2)) (r_n/p_n + 1) holds for the given patch
    count k (default 3; the first step fails it for k = 3, which the level
    builder sidesteps by direct feasibility checks).
    """
    if n_max < 1:
        raise ValueError("n_max must be positive")
    kk = 3 if k is None else k
    p1 = 4 if dim is None else max(4, dim)
    p = [p1]
    r = []
    for n in range(1, n_max):
        r_n = math.factorial(n)
        p_next = 2 * r_n * p[-1] ** 2
        if not r_n * p[-1] < p_next:
            raise ArithmeticError("stripe ratio rule violated")
        r.append(r_n)
        p.append(p_next)
    if n_max >= 1:
        r.append(math.factorial(n_max))
    q = [v * v for v in p]
    l = [p[i + 1] // (2 * p[i]) - 1 for i in range(len(p) - 1)]
    head = tuple(
        _headroom_ok(p[i], p[i + 1], r[i], kk) for i in range(len(p) - 1)
    )
    return SizeSequences(tuple(p), tuple(q), tuple(r[: len(p)]), tuple(l), head)


def _headroom_ok(p_n: int, p_next: int, r_n: int, k: int) -> bool:
    if k < 3:
        return False
    return p_next > Fraction((k - 1) * p_n**2, k - 2) * (Fraction(r_n, p_n) + 1)


def toy_p_sequence(dim: int | None, n_max: int, ratio_cap: int = 128,
                   k: int | None = None) -> SizeSequences:
    """Canonical sequences with each growth ratio capped (kept even).

    Grids stay small enough to build at any depth; the entry floors that
    need the full growth are reported, not required, in toy mode.
    """
    if ratio_cap < 4 or ratio_cap % 2:
        raise ValueError("ratio cap must be an even integer >= 4")
    kk = 3 if k is None else k
    p1 = 4 if dim is None else max(4, dim)
    p = [p1]
    r = []
    for n in range(1, n_max):
        r_n = math.factorial(n)
        p_next = min(2 * r_n * p[-1] ** 2, p[-1] * ratio_cap)
        if r_n * p[-1] >= p_next:
            raise SimplexBuildError(
                f"ratio cap {ratio_cap} too small for the stripe rule at step {n}"
            )
        r.append(r_n)
        p.append(p_next)
    r.append(math.factorial(n_max))
    q = [v * v for v in p]
    l = [p[i + 1] // (2 * p[i]) - 1 for i in range(len(p) - 1)]
    head = tuple(_headroom_ok(p[i], p[i + 1], r[i], kk) for i in range(len(p) - 1))
    return SizeSequences(tuple(p), tuple(q), tuple(r[: len(p)]), tuple(l), head)


# ----------------------------------------------------------------------
# matrices
# ----------------------------------------------------------------------

@dataclass
class ChoquetSeq:
    """Scale/stripe sequences plus the transition matrices built over them."""

    dim: int | None
    p: tuple[int, ...]
    q: tuple[int, ...]
    r: tuple[int, ...]
    l: tuple[int, ...]
    k: tuple[int, ...]
    A: list[IntMatrix]
    mode: str = "rigorous"

    @property
    def depth(self) -> int:
        return len(self.p)

    def product(self, n: int) -> IntMatrix:
        """A_1 ... A_n (identity for n = 0)."""
        k1 = self.k[0]
        out = [[1 if i == j else 0 for j in range(k1)] for i in range(k1)]
        for t in range(n):
            out = _imul(out, self.A[t])
        return out


def _imul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    return [
        [sum(a[i][t] * b[t][j] for t in range(len(b))) for j in range(len(b[0]))]
        for i in range(len(a))
    ]


def make_finite_dim_matrices(
    num_extreme_points: int, sizes: SizeSequences, mode: str = "rigorous"
) -> list[IntMatrix]:
    """Integer transition matrices realizing a simplex with the given number
    of extreme points over the given sizes.

    Constant patch count k = e + 1; row 1 is all ones, the first two columns
    are equal, and column j (j >= 2) is dominated by row j, so the
    column-normalized products converge to e distinct limit columns.  In
    ``rigorous`` mode every entry below row 1 is at least max(k, r_n p_{n+1})
    (the scale floor); ``toy`` mode only guarantees stripe-and-device
    headroom.  Raises when the size ratios leave no room.
    """
    e = num_extreme_points
    if e < 2:
        raise ValueError("need at least two extreme points")
    k = e + 1
    out: list[IntMatrix] = []
    for n in range(len(sizes.p) - 1):
        ratio = sizes.q[n + 1] // sizes.q[n]
        if sizes.q[n + 1] % sizes.q[n]:
            raise SimplexBuildError("q values must divide")
        stripe = sizes.r[n] * sizes.p[n + 1] // sizes.p[n]
        if mode == "rigorous":
            floor = max(k, sizes.r[n] * sizes.p[n + 1])
        else:
            floor = max(k, stripe + k + 1)
        dominant = ratio - 1 - (k - 2) * floor
        if dominant < max(floor, stripe + k + 1):
            raise SimplexBuildError(
                f"step {n + 1}: ratio {ratio} cannot fit {k - 1} rows with floor "
                f"{floor} (need ratio >= {1 + (k - 1) * floor})"
            )
        mat = [[0] * k for _ in range(k)]
        for j in range(k):
            mat[0][j] = 1
            dom_row = 1 if j <= 1 else j  # columns 1 and 2 share row 2
            for i in range(1, k):
                mat[i][j] = dominant if i == dom_row else floor
        out.append(mat)
    return out


def validate_choquet_seq(seq: ChoquetSeq) -> SchemeReport:
    """Structural validation of the sequences and matrices.

    Rows: start_scale (p_1 = max(4, d), or 4 for infinite dimension),
    min_patches (k_n >= 3), unit_first_row, column_sums (= q_{n+1}/q_n),
    entry_floor_patches (min over rows >= 2 is >= k_{n+1}),
    entry_floor_scale (same min >= r_n sqrt(q_{n+1})), stripe_ratio
    (r_n p_n < p_{n+1}), expansion_headroom, and the not-machine-checkable
    inverse-limit identification (recorded as a note).  In toy mode the two
    entry floors are reported but do not fail the report.
    """
    rows: list[CheckRow] = []
    toy = seq.mode == "toy"

    def row(name: str, ok: bool, witness: str = ""):
        rows.append(CheckRow(name, ok, "" if ok else witness))

    p1_expect = 4 if seq.dim is None else max(4, seq.dim)
    row("start_scale", seq.p[0] == p1_expect, f"p_1 = {seq.p[0]}, expected {p1_expect}")
    bad = [n for n, kk in enumerate(seq.k) if kk < 3]
    row("min_patches", not bad, f"k too small at level {bad[:1]}")

    ok, wit = True, ""
    for n, mat in enumerate(seq.A):
        for j in range(seq.k[n + 1]):
            if mat[0][j] != 1:
                ok, wit = False, f"A_{n+1}(1,{j+1}) = {mat[0][j]}"
                break
        if not ok:
            break
    row("unit_first_row", ok, wit)

    ok, wit = True, ""
    for n, mat in enumerate(seq.A):
        want = seq.q[n + 1] // seq.q[n]
        for j in range(seq.k[n + 1]):
            got = sum(mat[i][j] for i in range(seq.k[n]))
            if got != want:
                ok, wit = False, f"A_{n+1} column {j+1} sums to {got}, want {want}"
                break
        if not ok:
            break
    row("column_sums", ok, wit)

    def min_lower(mat: IntMatrix, kn: int) -> int:
        return min(mat[i][j] for i in range(1, kn) for j in range(len(mat[0])))

    ok, wit = True, ""
    for n, mat in enumerate(seq.A):
        lo = min_lower(mat, seq.k[n])
        if lo < seq.k[n + 1]:
            ok, wit = False, f"A_{n+1} min lower entry {lo} < k = {seq.k[n+1]}"
            break
    rows.append(CheckRow("entry_floor_patches", ok or toy,
                         (wit + " (toy: reported only)") if not ok else ""))

    ok, wit = True, ""
    for n, mat in enumerate(seq.A):
        lo = min_lower(mat, seq.k[n])
        want = seq.r[n] * seq.p[n + 1]  # r_n sqrt(q_{n+1}) exactly
        if lo < want:
            ok, wit = False, f"A_{n+1} min lower entry {lo} < r*p = {want}"
            break
    rows.append(CheckRow("entry_floor_scale", ok or toy,
                         (wit + " (toy: reported only)") if not ok else ""))

    bad = [n + 1 for n in range(len(seq.p) - 1) if seq.r[n] * seq.p[n] >= seq.p[n + 1]]
    row("stripe_ratio", not bad, f"r_n p_n >= p_n+1 at step {bad[:1]}")

    bad = [
        n + 1
        for n in range(len(seq.p) - 1)
        if not _headroom_ok(seq.p[n], seq.p[n + 1], seq.r[n], seq.k[n])
    ]
    rows.append(
        CheckRow(
            "expansion_headroom",
            not bad or toy,
            (f"headroom inequality fails at step {bad[:1]}" + (" (toy: reported only)" if toy else ""))
            if bad
            else "",
        )
    )
    rows.append(
        CheckRow(
            "inverse_limit",
            True,
            "not machine-checkable; see measure-vector diagnostics",
        )
    )
    return SchemeReport(tuple(rows))


def make_choquet_seq(
    num_extreme_points: int,
    depth: int,
    mode: str = "rigorous",
    ratio_cap: int = 128,
) -> ChoquetSeq:
    """Sizes plus matrices ready for building, ``depth`` levels deep.

    Rigorous mode walks the canonical sequences and passes to the greedy
    feasible subsequence (consecutive canonical steps never leave room for
    the scale floor); toy mode caps growth ratios instead.
    """
    e = num_extreme_points
    k = e + 1
    dim = e - 1
    if mode == "rigorous":
        sizes = p_sequence(dim, max(depth * 3, depth + 2), k=k)
        idx = _feasible_subsequence(sizes, k, depth)
        sub = SizeSequences(
            tuple(sizes.p[i] for i in idx),
            tuple(sizes.q[i] for i in idx),
            tuple(sizes.r[i] for i in idx),
            tuple(sizes.p[idx[t + 1]] // (2 * sizes.p[idx[t]]) - 1 for t in range(len(idx) - 1)),
            tuple(
                _headroom_ok(sizes.p[idx[t]], sizes.p[idx[t + 1]], sizes.r[idx[t]], k)
                for t in range(len(idx) - 1)
            ),
        )
    elif mode == "toy":
        sub = toy_p_sequence(dim, depth, ratio_cap=ratio_cap, k=k)
    else:
        raise ValueError("mode must be 'rigorous' or 'toy'")
    mats = make_finite_dim_matrices(e, sub, mode=mode)
    return ChoquetSeq(
        dim=dim,
        p=sub.p,
        q=sub.q,
        r=sub.r,
        l=sub.l,
        k=tuple([k] * len(sub.p)),
        A=mats,
        mode=mode,
    )


def _feasible_subsequence(sizes: SizeSequences, k: int, depth: int) -> list[int]:
    idx = [0]
    while len(idx) < depth:
        i = idx[-1]
        j = i + 1
        while True:
            if j >= len(sizes.p):
                raise SimplexBuildError(
                    "canonical sequence too short for a feasible subsequence; "
                    "increase its length"
                )
            ratio = sizes.q[j] // sizes.q[i]
            floor = max(k, sizes.r[i] * sizes.p[j])
            stripe = sizes.r[i] * sizes.p[j] // sizes.p[i]
            if (
                sizes.q[j] % sizes.q[i] == 0
                and (sizes.p[j] // sizes.p[i]) % 2 == 0
                and ratio - 1 - (k - 2) * floor >= max(floor, stripe + k + 1)
            ):
                idx.append(j)
                break
            j += 1
    return idx


# ----------------------------------------------------------------------
# separation and cardinalities
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationWitness:
    i0: int  # 1-based row
    columns: dict[int, tuple[int, int]]  # level -> (j_dense, j_sparse), 1-based
    dbar: Fraction
    dbar_prime: Fraction


def find_separating_coordinates(seq: ChoquetSeq, depth: int | None = None) -> SeparationWitness:
    """Search the normalized column products for a separating row.

    Picks the row with the largest column spread at the deepest level, then
    records, per level, the columns (>= 2, the first two columns being
    equal) attaining the extreme normalized values.  Raises when every row
    has zero spread (the simplex may be a singleton).
    """
    depth = seq.depth if depth is None else depth
    if depth < 2:
        raise ValueError("need at least 2 levels")
    prods = [seq.product(n) for n in range(depth)]  # prods[n] = A_1..A_n
    deep = prods[depth - 1]
    k1 = seq.k[0]
    best_i0, best_spread = None, Fraction(0)
    for i in range(k1):
        vals = [Fraction(deep[i][j], seq.q[depth - 1]) for j in range(len(deep[0]))]
        spread = max(vals) - min(vals)
        if spread > best_spread:
            best_i0, best_spread = i, spread
    if best_i0 is None:
        raise SimplexBuildError("no separation found at this depth")
    cols: dict[int, tuple[int, int]] = {}
    dbar, dbarp = None, None
    for t in range(2, depth + 1):
        mat = prods[t - 1]
        vals = [Fraction(mat[best_i0][j], seq.q[t - 1]) for j in range(len(mat[0]))]
        lower = list(range(1, len(vals)))  # column indices >= 2 (0-based >= 1)
        jd = max(lower, key=lambda j: (vals[j], -j))
        js = min(lower, key=lambda j: (vals[j], j))
        cols[t] = (jd + 1, js + 1)
        dbar = vals[jd] if dbar is None else min(dbar, vals[jd])
        dbarp = vals[js] if dbarp is None else max(dbarp, vals[js])
    if not dbar > dbarp:
        raise SimplexBuildError("no separation found at this depth")
    return SeparationWitness(best_i0 + 1, cols, dbar, dbarp)


def patch_cardinality(seq: ChoquetSeq, i0: int, n: int, k: int) -> int:
    """Exact point count of the level-n patch k from the block counts.

    count = A_1..A_{n-1}(i0, k) (p1^2/2 - p1/2 - 2)
            + (p_n^2/p_1^2)(p1^2/2 + p1/2 + 1).
    """
    if n < 1:
        raise ValueError("n must be positive")
    p1 = seq.p[0]
    prod = seq.product(n - 1)
    a = prod[i0 - 1][k - 1]
    c_minus = p1 * p1 // 2 - p1 // 2 - 2
    c_plus = p1 * p1 // 2 + p1 // 2 + 1
    blocks = seq.q[n - 1] // seq.q[0]
    return a * c_minus + blocks * c_plus


def density_bounds(seq: ChoquetSeq, witness: SeparationWitness) -> tuple[Fraction, Fraction]:
    """The exact pair d > d' bracketing the designated patch densities."""
    p1 = seq.p[0]
    c_minus = Fraction(p1 * p1, 2) - Fraction(p1, 2) - 2
    c_plus = Fraction(p1 * p1, 2) + Fraction(p1, 2) + 1
    d = witness.dbar * c_minus + c_plus / (p1 * p1)
    dp = witness.dbar_prime * c_minus + c_plus / (p1 * p1)
    return d, dp


# ----------------------------------------------------------------------
# patch construction
# ----------------------------------------------------------------------

def initial_simplex_patches(p1: int, k1: int, i0: int) -> list[Patch]:
    """The k1 starting patches on a p1 x p1 support.

    Patch i0 is full minus its top-right cell; every other patch k keeps
    the even columns, the bottom row, and the marker cell (1, k).  All are
    pairwise distinct and keep even columns full.
    """
    if p1 < 4 or p1 % 2:
        raise ValueError("p1 must be an even integer >= 4")
    if k1 < 3:
        raise ValueError("k1 must be at least 3")
    if not 1 <= i0 <= k1:
        raise ValueError("i0 out of range")
    if any(k >= p1 for k in range(1, k1 + 1) if k != i0):
        raise SimplexBuildError("k1 too large for p1: marker cells would leave the support")
    out: list[Patch] = []
    for k in range(1, k1 + 1):
        cells = np.zeros((p1, p1), dtype=np.uint8)
        if k == i0:
            cells[:, :] = 1
            cells[p1 - 1, p1 - 1] = 0
        else:
            cells[:, 0::2] = 1
            cells[0, :] = 1
            cells[k, 1] = 1
        out.append(Patch(cells, (0, 0)))
    return out


StripeRule = Literal["literal", "scaled"]


def stripe_choice(s: int, p_n: int, p_next: int, r_n: int, rule: StripeRule) -> bool:
    """True when signed block column s takes the dense stripe patch.

    ``literal`` applies floor(s p_{n+1} / r_n) even as displayed;
    ``scaled`` applies floor(s p_n r_n / p_{n+1}) even, which splits the
    stripe into r_n runs of equal width (half dense, half sparse when r_n
    is even).
    """
    if rule == "literal":
        val = Fraction(s * p_next, r_n)
    elif rule == "scaled":
        val = Fraction(s * p_n * r_n, p_next)
    else:
        raise ValueError(f"unknown stripe rule {rule!r}")
    return math.floor(val) % 2 == 0


def build_simplex_level(
    seq: ChoquetSeq,
    n: int,
    j_dense: int,
    j_sparse: int,
    rule: StripeRule = "literal",
) -> Level:
    """Arrangements of level n+1 from the counts A_n (n is 1-based).

    Per output column k: the top-right cell holds patch 1 (its only use,
    since A_n(1, k) = 1); the bottom r_n block-rows follow the stripe rule
    over (j_dense, j_sparse); the first k_n free cells in row-major order
    hold the distinctness device (the bits of k-1 choose dense/sparse); the
    remaining free cells are filled greedily, smallest id first, to meet
    the counts exactly.
    """
    if not 1 <= n <= len(seq.A):
        raise ValueError("no matrix for that step")
    if j_dense == j_sparse or min(j_dense, j_sparse) < 2:
        raise SimplexBuildError("stripe patches must be distinct ids >= 2")
    mat = seq.A[n - 1]
    k_n, k_next = seq.k[n - 1], seq.k[n]
    if max(j_dense, j_sparse) > k_n:
        raise SimplexBuildError("stripe patch id out of range")
    if k_next > 2**k_n:
        raise SimplexBuildError("cannot differentiate that many outputs")
    l_n = seq.l[n - 1]
    side = 2 * (l_n + 1)  # blocks per side
    if side * side > DEFAULT_CELL_CAP:
        raise CapacityError(
            f"step {n} arrangement needs {side * side} grid cells (cap {DEFAULT_CELL_CAP}); "
            "the scales are rigorous-regime, keep them symbolic"
        )
    r_n = seq.r[n - 1]
    if r_n >= side:
        raise SimplexBuildError("stripe taller than the frame")
    stripe_ids = np.array(
        [
            j_dense if stripe_choice(c - (l_n + 1), seq.p[n - 1], seq.p[n], r_n, rule) else j_sparse
            for c in range(side)
        ],
        dtype=np.int64,
    )
    arrs: list[DenseArrangement] = []
    for k in range(1, k_next + 1):
        grid = np.zeros((side, side), dtype=np.int64)
        used = [0] * (k_n + 1)
        grid[side - 1, side - 1] = 1
        used[1] += 1
        grid[:r_n, :] = stripe_ids
        used[j_dense] += r_n * int((stripe_ids == j_dense).sum())
        used[j_sparse] += r_n * int((stripe_ids == j_sparse).sum())
        flat_free = np.flatnonzero(grid.ravel() == 0)  # row-major from the bottom
        device, rest = flat_free[:k_n], flat_free[k_n:]
        for b, pos in enumerate(device):
            pid = j_dense if (k - 1) >> b & 1 else j_sparse
            grid.ravel()[pos] = pid
            used[pid] += 1
        need = [0] * (k_n + 1)
        for i in range(1, k_n + 1):
            need[i] = mat[i - 1][k - 1] - used[i]
            if need[i] < 0:
                raise SimplexBuildError(
                    f"output {k}: A_{n}({i},{k}) = {mat[i-1][k-1]} cannot cover the "
                    f"{used[i]} forced blocks of patch {i}"
                )
        if sum(need) != len(rest):
            raise SimplexBuildError(
                f"output {k}: counts sum to {sum(need) + sum(used)} but the frame "
                f"holds {side * side} blocks"
            )
        fill = np.repeat(np.arange(1, k_n + 1, dtype=np.int64), need[1:])
        grid.ravel()[rest] = fill
        arrs.append(DenseArrangement(grid))
    return Level(
        arrs,
        anchor=(l_n + 1, l_n + 1),
        meta={
            "kind": "simplex",
            "j_dense": str(j_dense),
            "j_sparse": str(j_sparse),
            "r": str(r_n),
            "rule": rule,
        },
    )


# ----------------------------------------------------------------------
# user-supplied matrices
# ----------------------------------------------------------------------

def read_matrices_file(path) -> ChoquetSeq:
    """Explicit transition matrices, row-per-line.

    Format: a ``p`` line with the scale sequence, an ``r`` line with the
    stripe counts (one per step), then one ``matrix <rows> <cols>`` block
    per step.  Matrix n must be k_n x k_{n+1}; validation is reported by
    :func:`validate_choquet_seq`, not silently assumed.
    """
    lines = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if ln:
                lines.append(ln)
    p: list[int] | None = None
    r: list[int] | None = None
    mats: list[IntMatrix] = []
    dim: int | None = None
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if parts[0] == "p":
            p = [int(t) for t in parts[1:]]
            i += 1
        elif parts[0] == "r":
            r = [int(t) for t in parts[1:]]
            i += 1
        elif parts[0] == "dim":
            dim = int(parts[1])
            i += 1
        elif parts[0] == "matrix":
            rows, cols = int(parts[1]), int(parts[2])
            body = lines[i + 1 : i + 1 + rows]
            if len(body) != rows:
                raise SimplexBuildError("truncated matrix block")
            mat = [[int(t) for t in ln.split()] for ln in body]
            if any(len(row) != cols for row in mat):
                raise SimplexBuildError("matrix row width mismatch")
            if any(v < 1 for row in mat for v in row):
                raise SimplexBuildError("matrix entries must be positive integers")
            mats.append(mat)
            i += 1 + rows
        else:
            raise SimplexBuildError(f"unexpected line {lines[i]!r}")
    if p is None or not mats:
        raise SimplexBuildError("need a p line and at least one matrix block")
    if len(p) != len(mats) + 1:
        raise SimplexBuildError("need exactly one matrix per consecutive scale pair")
    if r is None:
        r = [math.factorial(n) for n in range(1, len(p) + 1)]
    if len(r) < len(p) - 1:
        raise SimplexBuildError("need one stripe count per step")
    for i_, (a, b) in enumerate(zip(p, p[1:])):
        if b % a or (b // a) % 2:
            raise SimplexBuildError(f"scale step {i_ + 1}: ratio must be even")
    k = [len(mats[0])] + [len(m[0]) for m in mats]
    for n, m in enumerate(mats):
        if len(m) != k[n]:
            raise SimplexBuildError(f"matrix {n + 1} row count disagrees with matrix {n}")
    q = [v * v for v in p]
    l = [p[i_ + 1] // (2 * p[i_]) - 1 for i_ in range(len(p) - 1)]
    return ChoquetSeq(dim, tuple(p), tuple(q), tuple(r[: len(p)]), tuple(l),
                      tuple(k), mats, mode="toy")


def read_simplex_spec(path) -> "int | ChoquetSeq":
    """`extreme_points <e>` or `matrices <path>` (relative to the spec file)."""
    import os

    with open(path) as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            key, val = ln.split(None, 1)
            if key == "extreme_points":
                return int(val)
            if key == "matrices":
                mp = val if os.path.isabs(val) else os.path.join(os.path.dirname(path), val)
                return read_matrices_file(mp)
            raise SimplexBuildError(f"unexpected line {ln!r}")
    raise SimplexBuildError("empty simplex spec file")


@dataclass
class ChoquetBuild:
    spec: HierarchySpec
    seq: ChoquetSeq
    witness: SeparationWitness


def build_choquet_spec(
    num_extreme_points: int,
    depth: int,
    mode: str = "toy",
    rule: StripeRule = "literal",
    ratio_cap: int = 128,
    seq: ChoquetSeq | None = None,
) -> ChoquetBuild:
    """Matrices, separation witness, and the patch hierarchy, depth levels deep."""
    if depth < 2:
        raise ValueError("depth must be at least 2")
    seq = make_choquet_seq(num_extreme_points, depth, mode, ratio_cap) if seq is None else seq
    if depth > seq.depth:
        raise ValueError(f"sequence holds {seq.depth} levels, requested {depth}")
    witness = find_separating_coordinates(seq, depth)
    i0 = witness.i0
    base = initial_simplex_patches(seq.p[0], seq.k[0], i0)
    levels = []
    for n in range(1, depth):
        if n == 1:
            jd = i0 if i0 >= 2 else 2
            js = next(j for j in range(2, seq.k[0] + 1) if j != jd)
        else:
            jd, js = witness.columns[n]
        levels.append(build_simplex_level(seq, n, jd, js, rule))
    spec = HierarchySpec(base, levels, kind="choquet", anchored=False)
    return ChoquetBuild(spec, seq, witness)


# ----------------------------------------------------------------------
# measure vectors
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureVector:
    level: int
    values: tuple[Fraction, ...]


def measure_vectors(
    seq: ChoquetSeq,
    depth: int,
    terminal: int | Literal["barycenter"],
) -> list[MeasureVector]:
    """Back-propagate a terminal measure vector through the matrices.

    ``terminal`` is a 1-based vertex index (mu = e_j / q_depth) or
    "barycenter".  The recursion mu_n = A_n mu_{n+1} holds with residual
    exactly zero by construction; each mu_n lies in the simplex spanned by
    e_i / q_n.
    """
    if not 1 <= depth <= seq.depth:
        raise ValueError("depth out of range")
    kd, qd = seq.k[depth - 1], seq.q[depth - 1]
    if terminal == "barycenter":
        mu = [Fraction(1, kd * qd)] * kd
    else:
        if not 1 <= terminal <= kd:
            raise ValueError("terminal vertex outside the simplex")
        mu = [Fraction(1, qd) if j == terminal - 1 else Fraction(0) for j in range(kd)]
    out = [MeasureVector(depth, tuple(mu))]
    for n in range(depth - 1, 0, -1):
        mat = seq.A[n - 1]
        mu = [
            sum((Fraction(mat[i][j]) * mu[j] for j in range(len(mu))), Fraction(0))
            for i in range(seq.k[n - 1])
        ]
        if any(v < 0 for v in mu) or sum(mu) != Fraction(1, seq.q[n - 1]):
            raise AssertionError("measure recursion left the simplex")
        out.append(MeasureVector(n, tuple(mu)))
    out.reverse()
    return out


def measure_residual(seq: ChoquetSeq, vectors: list[MeasureVector]) -> Fraction:
    """Max norm of mu_n - A_n mu_{n+1} over the chain (exactly zero)."""
    worst = Fraction(0)
    by_level = {v.level: v for v in vectors}
    for n in range(min(by_level), max(by_level)):
        mat = seq.A[n - 1]
        lhs = by_level[n].values
        rhs = [
            sum((Fraction(mat[i][j]) * by_level[n + 1].values[j] for j in range(len(by_level[n + 1].values))), Fraction(0))
            for i in range(len(lhs))
        ]
        worst = max(worst, max(abs(a - b) for a, b in zip(lhs, rhs)))
    return worst
