from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from delone import patch
from delone.nonrect import starting_patches


def test_starting_corner_densities():
    sparse, dense = starting_patches()
    assert patch.corner_density(dense, 4) == F(16, 16)
    assert patch.corner_density(sparse, 4) == F(10, 16)


def test_corner_density_full_patch_is_one():
    p = patch.full_patch(7, 7)
    for m in (1, 3, 7):
        assert patch.corner_density(p, m) == 1


def test_corner_density_rejects_oversized_corner():
    p = patch.full_patch(3, 3)
    with pytest.raises(ValueError, match="corner exceeds support"):
        patch.corner_density(p, 4)


def test_even_column_property_examples():
    sparse, dense = starting_patches()
    assert patch.has_even_column_property(dense)
    assert patch.has_even_column_property(sparse)
    cells = np.ones((3, 3), dtype=np.uint8)
    cells[0, 0] = 0
    assert not patch.has_even_column_property(patch.Patch(cells))


def test_even_column_property_uses_absolute_origin():
    # occupied columns at local x = 1 only; absolute parity decides
    cells = np.zeros((2, 2), dtype=np.uint8)
    cells[:, 1] = 1
    assert patch.has_even_column_property(patch.Patch(cells, origin=(1, 0)))
    assert not patch.has_even_column_property(patch.Patch(cells, origin=(0, 0)))


def test_from_rows_top_down():
    p = patch.from_rows(["10", "01"])
    assert p.get(0, 1) and p.get(1, 0)
    assert not p.get(0, 0) and not p.get(1, 1)


def test_full_boundary_flag_validated():
    with pytest.raises(ValueError, match="boundary"):
        patch.from_rows(["10", "11"], full_boundary=True)


def test_closed_and_corner_are_inverse():
    sparse, _ = starting_patches()
    corner = sparse.corner()
    assert corner.width == 4 and corner.popcount() == 10
    assert corner.closed().same_content(sparse)


@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 255))
def test_corner_density_of_block_grid_is_weighted_average(rows, cols, seedbits):
    # tiling equal-size blocks: density of the union = average of block densities
    rng = np.random.default_rng(seedbits)
    blocks = [
        [rng.integers(0, 2, size=(3, 3)).astype(np.uint8) for _ in range(cols)]
        for _ in range(rows)
    ]
    grid = np.block(blocks[::-1])  # np.block stacks top-down
    whole = patch.Patch(grid)
    total = sum(int(b.sum()) for row in blocks for b in row)
    assert whole.density() == F(total, 9 * rows * cols)
    avg = sum(F(int(b.sum()), 9) for row in blocks for b in row) / (rows * cols)
    assert whole.density() == avg


def test_dpf_round_trip(tmp_path):
    sparse, _ = starting_patches()
    path = tmp_path / "q.dpf"
    patch.write_patch(path, sparse)
    back = patch.read_patch(path)
    assert back == sparse and back.full_boundary


def test_dpf_body_orientation():
    p = patch.loads_patch("PATCH 2 2 0 0\n10\n01\n")
    assert p.get(0, 1) and p.get(1, 0)


def test_points_round_trip(tmp_path):
    sparse, _ = starting_patches()
    path = tmp_path / "pts.txt"
    pts = list(sparse.points())
    patch.write_points(path, pts, comment="demo")
    assert patch.read_points(path) == pts
    assert len(pts) == sparse.popcount()


def test_pbm_round_trip():
    sparse, _ = starting_patches()
    text = patch.dumps_pbm(sparse)
    assert text.startswith("P1\n5 5\n")
    assert patch.loads_pbm(text).same_content(sparse)
    assert sum(int(c) for c in text.split("\n", 2)[2].split()) == 19


def test_subpatch_and_translation():
    sparse, _ = starting_patches()
    sub = sparse.subpatch(0, 0, 2, 2)
    assert sub.popcount() == 3  # bottom row pair plus (0,1)
    moved = sparse.translated(4, 6)
    assert moved.origin == (4, 6)
    assert moved.same_content(sparse)
