import pytest

from delone import nonrect, ue, choquet, hierarchy


@pytest.fixture(scope="session")
def nonrect3():
    return nonrect.build_delone_spec(nonrect.counting_schedule(3), 3, mode="toy")


@pytest.fixture(scope="session")
def ue3():
    return ue.build_ue_spec(None, 3, mode="toy")


@pytest.fixture(scope="session")
def ue3_top(ue3):
    spec = ue3.spec
    return hierarchy.materialize(spec, spec.num_levels, 1)


@pytest.fixture(scope="session")
def choq_small():
    # sides 4, 32, 256
    return choquet.build_choquet_spec(2, 3, mode="toy", ratio_cap=8)


@pytest.fixture(scope="session")
def choq_big():
    # sides 4, 32, 4096 (top level is 2^24 cells)
    return choquet.build_choquet_spec(2, 3, mode="toy", ratio_cap=128)
