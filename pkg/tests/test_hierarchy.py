import numpy as np
import pytest

from delone import hierarchy as H
from delone import nonrect
from delone.hierarchy import (
    BLOCK_ALIGNED,
    SLIDING,
    AltBottomArrangement,
    CapacityError,
    DenseArrangement,
    HierarchySpec,
    Level,
)
from delone.patch import Patch, from_rows


def toy_spec(ell=1, m=1, p_star=1, n_blocks=1):
    q1, q2 = nonrect.starting_patches()
    return nonrect.build_new_patches(
        q1, q2, nonrect.BuildParams(m=m, P_star=p_star, N=n_blocks, ell=ell)
    )


# ----------------------------------------------------------------------
# arrangements: closed forms against dense recomputation
# ----------------------------------------------------------------------

@pytest.mark.parametrize("s,b", [(1, 3), (2, 3), (1, 5), (3, 5), (2, 7)])
def test_altbottom_matches_dense(s, b):
    alt = AltBottomArrangement(s, b, main_id=1, alt_id=2)
    dense = DenseArrangement(alt.to_grid())
    assert alt.counts(2) == dense.counts(2)
    assert alt.hpair_counts() == dense.hpair_counts()
    assert alt.vpair_counts() == dense.vpair_counts()
    assert alt.quad_counts() == dense.quad_counts()
    for row in range(alt.rows):
        for col in range(alt.cols):
            assert alt.id_at(col, row) == dense.id_at(col, row)


def test_altbottom_validation():
    with pytest.raises(H.SpecError):
        AltBottomArrangement(1, 4, 1, 2)  # even block count
    with pytest.raises(H.SpecError):
        AltBottomArrangement(1, 3, 1, 1)  # ids equal


# ----------------------------------------------------------------------
# materialization
# ----------------------------------------------------------------------

def test_materialize_level1_is_base():
    spec = toy_spec()
    assert H.materialize(spec, 1, 1).same_content(spec.base[0])
    assert H.materialize(spec, 1, 2).same_content(spec.base[1])


def test_one_step_side_and_point_count():
    spec = toy_spec()
    p = H.materialize(spec, 2, 1)
    assert p.width == p.height == 12  # 2 * m * P* * M * (2N+1)
    # 8 sparse corners (10 points) + 1 dense corner (16 points)
    assert p.popcount() == 8 * 10 + 1 * 16
    assert spec.count_matrix(1, 2) == [[8, 1], [1, 8]]


def test_materialize_cap_error_names_cells():
    spec = toy_spec(ell=6)
    with pytest.raises(CapacityError, match="8503056 cells"):
        H.materialize(spec, 7, 1, cap=10**6)


def test_materialize_region_matches_slices():
    spec = toy_spec(ell=2)
    full = H.materialize(spec, 3, 1).cells
    rng = np.random.default_rng(0)
    for _ in range(25):
        w = int(rng.integers(1, 30))
        h = int(rng.integers(1, 30))
        x = int(rng.integers(0, full.shape[1] - w + 1))
        y = int(rng.integers(0, full.shape[0] - h + 1))
        region = H.materialize_region(spec, 3, 1, x, y, w, h)
        assert np.array_equal(region, full[y : y + h, x : x + w])


# ----------------------------------------------------------------------
# occurrence counting
# ----------------------------------------------------------------------

def _naive_sliding(grid: np.ndarray, needle: Patch) -> int:
    gh, gw = grid.shape
    h, w = needle.cells.shape
    cnt = 0
    for y in range(gh - h + 1):
        for x in range(gw - w + 1):
            if np.array_equal(grid[y : y + h, x : x + w], needle.cells):
                cnt += 1
    return cnt


def test_scan_count_matches_naive_loops():
    rng = np.random.default_rng(3)
    for _ in range(10):
        grid = rng.integers(0, 2, size=(14, 17)).astype(np.uint8)
        needle = Patch(rng.integers(0, 2, size=(3, 2)).astype(np.uint8))
        assert H.scan_count(grid, needle) == _naive_sliding(grid, needle)


def test_sliding_counts_equal_scans_on_toys(nonrect3):
    spec = nonrect3.spec
    needles = [spec.base[0], spec.base[1], Patch(spec.base[0].cells[:3, :3])]
    for level in range(1, spec.num_levels + 1):
        for pid in (1, 2):
            grid = H.materialize(spec, level, pid).cells
            for needle in needles:
                want = H.scan_count(grid, needle)
                got = H.count_occurrences(spec, needle, level, pid, SLIDING)
                assert got == want, (level, pid, needle.cells.shape)


def test_block_counts_equal_aligned_scans(nonrect3):
    spec = nonrect3.spec
    for level in range(2, spec.num_levels + 1):
        for pid in (1, 2):
            grid = H.materialize(spec, level, pid).cells
            for m in range(1, level):
                if spec.side(level) // spec.side(m) > 64:
                    continue
                want = H.aligned_block_counts(grid, spec, m)
                got = [
                    H.count_occurrences(
                        spec, H.materialize(spec, m, i), level, pid, BLOCK_ALIGNED
                    )
                    for i in (1, 2)
                ]
                assert got == want


def test_whole_patch_slides_once():
    spec = toy_spec()
    top = H.materialize(spec, 2, 1)
    assert H.count_occurrences(spec, top, 2, 1, SLIDING) == 1


def test_block_count_of_unknown_needle_is_zero():
    spec = toy_spec()
    stranger = from_rows(["1111", "1111", "1111", "1010"])
    assert H.count_occurrences(spec, stranger, 2, 1, BLOCK_ALIGNED) == 0


def test_needle_larger_than_target_rejected():
    spec = toy_spec()
    big = Patch(np.ones((13, 13), dtype=np.uint8))
    with pytest.raises(H.SpecError, match="larger"):
        H.count_occurrences(spec, big, 2, 1, SLIDING)


def test_wide_needle_uses_direct_scan():
    spec = toy_spec(ell=2)  # sides 4, 12, 36
    needle = Patch(H.materialize(spec, 2, 2).cells[:6, :9])  # wider than side 4
    grid = H.materialize(spec, 3, 1).cells
    assert H.count_occurrences(spec, needle, 3, 1, SLIDING) == H.scan_count(grid, needle)


def test_frequency_matrix_composition(ue3):
    spec = ue3.spec
    a = H.block_frequency_matrix(spec, 1, 3)
    b = H.block_frequency_matrix(spec, 3, 5)
    c = H.block_frequency_matrix(spec, 1, 5)
    prod = [
        [sum(a[i][t] * b[t][j] for t in range(2)) for j in range(2)]
        for i in range(2)
    ]
    assert prod == c
    for j in range(2):
        assert sum(c[i][j] for i in range(2)) == 1


# ----------------------------------------------------------------------
# scheme validation
# ----------------------------------------------------------------------

def test_validate_passes_on_toy(nonrect3):
    rep = H.validate_scheme(nonrect3.spec)
    assert rep.ok, rep.failed()


def test_validate_flags_missing_child():
    base = [from_rows(["11", "11"]), from_rows(["11", "10"])]
    only_ones = DenseArrangement(np.ones((2, 2), dtype=np.int64))
    both = DenseArrangement(np.array([[1, 2], [1, 1]]))
    spec = HierarchySpec(base, [Level([only_ones, both])])
    rep = H.validate_scheme(spec)
    bad = {r.name: r for r in rep.failed()}
    assert "all_children_used" in bad
    assert "patch 1 never uses child 2" in bad["all_children_used"].witness


def test_validate_flags_anchor_mismatch():
    base = [from_rows(["11", "11"]), from_rows(["11", "10"])]
    arr1 = DenseArrangement(np.array([[2, 1], [1, 1]]))  # bottom-left holds id 2
    spec = HierarchySpec(base, [Level([arr1, arr1], anchor=(0, 0))], anchored=True)
    rep = H.validate_scheme(spec)
    bad = {r.name for r in rep.failed()}
    assert "anchor_chain" in bad


def test_validate_flags_bad_child_id():
    base = [from_rows(["11", "11"])]
    arr = DenseArrangement(np.array([[1, 2], [1, 1]]))  # id 2 does not exist
    spec = HierarchySpec(base, [Level([arr])])
    bad = {r.name for r in H.validate_scheme(spec).failed()}
    assert "children_valid" in bad


# ----------------------------------------------------------------------
# repetitivity
# ----------------------------------------------------------------------

def _repetitivity_oracle(cells: np.ndarray, r: int):
    """Exhaustive double scan: smallest R (up to side - r) such that every
    R x R window holds every r x r pattern of the patch."""
    side = cells.shape[0]
    win = np.lib.stride_tricks.sliding_window_view(cells, (r, r))
    flat = win.reshape(win.shape[0], win.shape[1], r * r)
    codes = np.zeros(win.shape[:2], dtype=np.int64)
    for t in range(r * r):
        codes = codes * 2 + flat[:, :, t]
    all_codes = set(np.unique(codes))
    for R in range(r, side - r + 1):
        K = R - r + 1
        good = True
        for wy in range(side - R + 1):
            for wx in range(side - R + 1):
                seen = set(np.unique(codes[wy : wy + K, wx : wx + K]))
                if seen != all_codes:
                    good = False
                    break
            if not good:
                break
        if good:
            return R
    return None


def test_repetitivity_full_patch():
    p = Patch(np.ones((9, 9), dtype=np.uint8))
    assert H.estimate_repetitivity(p, 1) == 1


def test_repetitivity_even_column_stripes():
    cells = np.zeros((8, 8), dtype=np.uint8)
    cells[:, 0::2] = 1
    assert H.estimate_repetitivity(Patch(cells), 1) == 2


def test_repetitivity_matches_oracle_on_toy(nonrect3):
    spec = nonrect3.spec
    window = H.materialize(spec, 3, 1)  # 36 x 36
    for r in (1, 2):
        got = H.estimate_repetitivity(window, r)
        want = _repetitivity_oracle(window.cells, r)
        assert got == want and got is not None


def test_repetitivity_monotone_in_r(ue3):
    window = Patch(H.materialize(ue3.spec, 4, 1).cells[:48, :48])
    vals = [H.estimate_repetitivity(window, r) for r in (1, 2, 4)]
    assert all(v is not None for v in vals)
    assert vals[0] <= vals[1] <= vals[2]


def test_repetitivity_window_too_small_marker():
    cells = np.zeros((12, 12), dtype=np.uint8)
    cells[0, 0] = 1  # a pattern that lives only in one corner
    assert H.estimate_repetitivity(Patch(cells), 1) is None


def test_repetitivity_preconditions():
    p = Patch(np.ones((5, 5), dtype=np.uint8))
    with pytest.raises(ValueError, match="3r"):
        H.estimate_repetitivity(p, 2)


# ----------------------------------------------------------------------
# descriptor round trips and frames
# ----------------------------------------------------------------------

def test_dhs_round_trip_dense_and_compact(tmp_path, ue3):
    spec = ue3.spec
    path = tmp_path / "ue.dhs"
    H.write_spec(path, spec)
    back = H.read_spec(path)
    assert back.kind == spec.kind and back.anchored == spec.anchored
    assert back.num_levels == spec.num_levels
    for t in range(1, spec.num_levels + 1):
        assert back.side(t) == spec.side(t)
        assert back.popcounts(t) == spec.popcounts(t)
    for lv, lv2 in zip(spec.levels, back.levels):
        assert lv.anchor == lv2.anchor and lv.meta == lv2.meta
    m1 = H.materialize(spec, 4, 2)
    m2 = H.materialize(back, 4, 2)
    assert m1 == m2


def test_frame_offsets_tile_the_next_level():
    spec = toy_spec()
    fr = H.frame(spec, 1)
    offs = list(fr.offsets(spec))
    assert len(offs) == 9
    assert set(offs) == {(4 * a, 4 * b) for a in range(3) for b in range(3)}


def test_origin_follows_anchor(ue3):
    spec = ue3.spec
    # mix levels recenter; alternation levels keep the corner
    assert spec.origin(1) == (0, 0)
    assert spec.origin(2) == (0, 0)
    assert spec.origin(3) == (-12, -12)


def test_base_patch_bitsets():
    spec = toy_spec()
    sparse_corner = from_rows(["1010", "1010", "1010", "1111"])
    assert H.materialize(spec, 1, 1).same_content(sparse_corner)
    assert H.materialize(spec, 1, 2).same_content(Patch(np.ones((4, 4), dtype=np.uint8)))


def test_sliding_counts_with_rectangular_needles(ue3):
    spec = ue3.spec
    rng = np.random.default_rng(8)
    grids = {pid: H.materialize(spec, 4, pid).cells for pid in (1, 2)}
    for _ in range(6):
        w = int(rng.integers(1, 6))
        h = int(rng.integers(1, 6))
        x = int(rng.integers(0, 12 - w + 1))
        y = int(rng.integers(0, 12 - h + 1))
        needle = Patch(H.materialize(spec, 2, 1).cells[y : y + h, x : x + w])
        for pid in (1, 2):
            want = H.scan_count(grids[pid], needle)
            got = H.count_occurrences(spec, needle, 4, pid, SLIDING)
            assert got == want, (w, h, x, y, pid)


def test_block_count_at_own_level():
    spec = toy_spec()
    top1 = H.materialize(spec, 2, 1)
    assert H.count_occurrences(spec, top1, 2, 1, BLOCK_ALIGNED) == 1
    assert H.count_occurrences(spec, top1, 2, 2, BLOCK_ALIGNED) == 0


def test_occupied_count_identity(ue3):
    # occupied cells of any level equal the block-count-weighted base sizes
    spec = ue3.spec
    for level in range(1, 6):
        counts = spec.count_matrix(1, level)
        for pid in (1, 2):
            want = sum(
                counts[i][pid - 1] * spec.base[i].popcount() for i in range(2)
            )
            assert spec.popcounts(level)[pid - 1] == want
        assert spec.cell_count(level) == spec.side(level) ** 2
    m = H.materialize(spec, 5, 2)
    assert m.popcount() == spec.popcounts(5)[1]


def test_rigorous_descriptor_round_trip():
    from delone import nonrect

    build = nonrect.build_delone_spec(
        nonrect.counting_schedule(1), 1, mode="rigorous", max_levels=3
    )
    text = H.dumps_spec(build.spec)
    back = H.loads_spec(text)
    assert back.num_levels == build.spec.num_levels
    for t in range(1, back.num_levels + 1):
        assert back.side(t) == build.spec.side(t)
        assert back.popcounts(t) == build.spec.popcounts(t)
    assert H.dumps_spec(back) == text


def test_sliding_needle_wider_than_grandchildren(ue3):
    # a 6x6 needle fits level-3 children but not level-1 blocks, so the
    # recursion bottoms out in a direct scan two levels down
    spec = ue3.spec
    needle = Patch(H.materialize(spec, 3, 1).cells[5:11, 7:13])
    grid = H.materialize(spec, 4, 1).cells
    assert H.count_occurrences(spec, needle, 4, 1, SLIDING) == H.scan_count(grid, needle)
