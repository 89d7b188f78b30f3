import numpy as np
import pytest

from oracles import bfs_components, euler_by_cell_sets, random_mask
from topoaug.errors import DataError
from topoaug.topology import (
    CONN_6_26,
    CONN_26_6,
    ConnectivityPair,
    TopologySignature,
    background_signature,
    betti_numbers,
    connected_components,
    correct_to_ball,
    dilate_preserving,
    euler_characteristic,
    find_critical_configurations,
    is_simple,
    is_locally_simple,
    is_well_composed,
    make_well_composed,
    topological_erosion,
)
from topoaug.volume import BinaryMask


def mask_of(arr) -> BinaryMask:
    return BinaryMask(np.asarray(arr, dtype=bool))


def solid(dims):
    return mask_of(np.ones(dims, dtype=bool))


def square_ring():
    arr = np.ones((3, 3, 1), dtype=bool)
    arr[1, 1, 0] = False
    return mask_of(arr)


def chebyshev_torus():
    arr = np.zeros((13, 13, 5), dtype=bool)
    for x in range(13):
        for y in range(13):
            if 2 <= max(abs(x - 6), abs(y - 6)) <= 4:
                arr[x, y, 1:4] = True
    return mask_of(arr)


class TestConnectivityPair:
    def test_only_dual_pairs_exist(self):
        ConnectivityPair(26, 6)
        ConnectivityPair(6, 26)
        with pytest.raises(DataError):
            ConnectivityPair(26, 26)
        with pytest.raises(DataError):
            ConnectivityPair(18, 6)


class TestSignature:
    def test_euler_identity_enforced(self):
        TopologySignature.of(1, 1, 0)
        with pytest.raises(Exception):
            TopologySignature(1, 1, 0, 5)


class TestConnectedComponents:
    def test_empty(self):
        _, n = connected_components(mask_of(np.zeros((3, 3, 3), dtype=bool)))
        assert n == 0

    def test_corner_pair_conn_dependence(self):
        arr = np.zeros((2, 2, 2), dtype=bool)
        arr[0, 0, 0] = arr[1, 1, 1] = True
        _, n26 = connected_components(mask_of(arr), CONN_26_6)
        _, n6 = connected_components(mask_of(arr), CONN_6_26)
        assert (n26, n6) == (1, 2)

    def test_random_masks_match_flood_fill(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            arr = random_mask(rng)
            for conn in (CONN_26_6, CONN_6_26):
                _, n = connected_components(mask_of(arr), conn)
                assert n == bfs_components(arr, conn.foreground)

    def test_ids_dense(self):
        rng = np.random.default_rng(7)
        arr = random_mask(rng)
        labels, n = connected_components(mask_of(arr))
        present = set(np.unique(labels).tolist()) - {0}
        assert present == set(range(1, n + 1))


class TestEuler:
    def test_single_voxel(self):
        arr = np.zeros((3, 3, 3), dtype=bool)
        arr[1, 1, 1] = True
        assert euler_characteristic(mask_of(arr)) == 1

    def test_cube_shell(self):
        arr = np.ones((3, 3, 3), dtype=bool)
        arr[1, 1, 1] = False
        assert euler_characteristic(mask_of(arr)) == 2

    def test_square_ring(self):
        assert euler_characteristic(square_ring()) == 0

    def test_matches_cell_set_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(15):
            arr = random_mask(rng, max_dim=8)
            assert euler_characteristic(mask_of(arr)) == euler_by_cell_sets(arr)


class TestBetti:
    def test_solid_cube(self):
        assert betti_numbers(solid((5, 5, 5))).as_tuple() == (1, 0, 0)

    def test_square_ring(self):
        sig = betti_numbers(square_ring())
        assert sig.as_tuple() == (1, 1, 0)
        assert sig.euler == 0

    def test_hollow_shell(self):
        arr = np.ones((5, 5, 5), dtype=bool)
        arr[1:4, 1:4, 1:4] = False
        sig = betti_numbers(mask_of(arr))
        assert sig.as_tuple() == (1, 0, 1)
        assert sig.euler == 2

    def test_euler_identity_on_random_masks(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            arr = random_mask(rng)
            for conn in (CONN_26_6, CONN_6_26):
                sig = betti_numbers(mask_of(arr), conn)
                assert sig.euler == sig.b0 - sig.b1 + sig.b2

    def test_pair_agreement_on_well_composed(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            wc = make_well_composed(mask_of(random_mask(rng, max_dim=10)))
            a = betti_numbers(wc, CONN_26_6)
            b = betti_numbers(wc, CONN_6_26)
            assert a == b
            assert a.euler == euler_characteristic(wc)


class TestIsSimple:
    def test_isolated_voxel_not_simple(self):
        arr = np.zeros((3, 3, 3), dtype=bool)
        arr[1, 1, 1] = True
        assert not is_simple(mask_of(arr), (1, 1, 1))

    def test_arc_end_simple_mid_not(self):
        arr = np.zeros((5, 3, 3), dtype=bool)
        arr[1:4, 1, 1] = True
        m = mask_of(arr)
        assert is_simple(m, (1, 1, 1))
        assert not is_simple(m, (2, 1, 1))

    def test_out_of_bounds(self):
        with pytest.raises(DataError):
            is_simple(solid((2, 2, 2)), (5, 0, 0))

    def test_agrees_with_flip_oracle(self):
        rng = np.random.default_rng(101)
        checked = 0
        for _ in range(60):
            arr = random_mask(rng, max_dim=10)
            m = mask_of(arr)
            for conn in (CONN_26_6, CONN_6_26):
                before_fg = betti_numbers(m, conn)
                before_bg = background_signature(m, conn)
                for _ in range(6):
                    v = tuple(int(rng.integers(0, d)) for d in arr.shape)
                    flipped = arr.copy()
                    flipped[v] = ~flipped[v]
                    fm = mask_of(flipped)
                    oracle = (
                        betti_numbers(fm, conn) == before_fg
                        and background_signature(fm, conn) == before_bg
                    )
                    assert is_simple(m, v, conn) == oracle
                    checked += 1
        assert checked == 60 * 2 * 6

    def test_locally_simple_implies_simple(self):
        rng = np.random.default_rng(55)
        for _ in range(40):
            arr = random_mask(rng, max_dim=8)
            m = mask_of(arr)
            v = tuple(int(rng.integers(0, d)) for d in arr.shape)
            if is_locally_simple(m, v):
                assert is_simple(m, v)


class TestWellComposed:
    def test_solid_cube(self):
        assert is_well_composed(solid((4, 4, 4)))

    def test_edge_pair_square_violation(self):
        arr = np.zeros((2, 2, 1), dtype=bool)
        arr[0, 0, 0] = arr[1, 1, 0] = True
        configs = find_critical_configurations(mask_of(arr))
        assert len(configs) == 1
        assert configs[0].kind == "square"

    def test_corner_pair_block_violation(self):
        arr = np.zeros((2, 2, 2), dtype=bool)
        arr[0, 0, 0] = arr[1, 1, 1] = True
        kinds = {c.kind for c in find_critical_configurations(mask_of(arr))}
        assert "block" in kinds

    def test_six_voxel_dual_block_violation(self):
        # all block corners except an antipodal pair: the complement's
        # corner-pair configuration; topology depends on the pair without it
        arr = np.ones((2, 2, 2), dtype=bool)
        arr[0, 0, 0] = arr[1, 1, 1] = False
        m = mask_of(np.pad(arr, 1))
        assert betti_numbers(m, CONN_26_6) != betti_numbers(m, CONN_6_26)
        assert not is_well_composed(m)


class TestMakeWellComposed:
    def test_fixpoint_identity(self):
        m = solid((4, 4, 4))
        out = make_well_composed(m)
        assert np.array_equal(out.bits, m.bits)

    def test_diagonal_pair_becomes_L(self):
        arr = np.zeros((2, 2, 1), dtype=bool)
        arr[0, 0, 0] = arr[1, 1, 0] = True
        out = make_well_composed(mask_of(arr))
        assert out.popcount == 3
        assert is_well_composed(out)
        # either candidate resolves the square; the fixed tie-break adds the
        # lexicographically smallest
        for cand in ((0, 1, 0), (1, 0, 0)):
            fixed = arr.copy()
            fixed[cand] = True
            assert is_well_composed(mask_of(fixed))
        assert out.bits[0, 1, 0]

    def test_random_masks_repaired_and_contained(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            arr = random_mask(rng, max_dim=12)
            m = mask_of(arr)
            out = make_well_composed(m)
            assert is_well_composed(out)
            assert np.all(out.bits[m.bits])  # never removes
            again = make_well_composed(out)
            assert np.array_equal(again.bits, out.bits)  # idempotent


class TestErosion:
    def test_single_voxel_fixpoint(self):
        arr = np.zeros((3, 3, 3), dtype=bool)
        arr[1, 1, 1] = True
        out = topological_erosion(mask_of(arr))
        assert out.popcount == 1

    def test_cube_to_single_voxel(self):
        src = solid((5, 5, 5))
        out = topological_erosion(src)
        assert out.popcount == 1
        assert betti_numbers(out).as_tuple() == (1, 0, 0)
        assert np.all(src.bits[out.bits])  # never adds

    def test_torus_to_one_voxel_wide_loop(self):
        src = chebyshev_torus()
        assert is_well_composed(src)
        out = topological_erosion(src)
        assert betti_numbers(out).as_tuple() == (1, 1, 0)
        assert is_well_composed(out)
        # erosion fixpoint and one-voxel width: every remaining voxel sees
        # background through at least one face
        pad = np.pad(out.bits, 1)
        for x, y, z in zip(*np.nonzero(out.bits)):
            nb6 = [
                pad[x + 2, y + 1, z + 1], pad[x, y + 1, z + 1],
                pad[x + 1, y + 2, z + 1], pad[x + 1, y, z + 1],
                pad[x + 1, y + 1, z + 2], pad[x + 1, y + 1, z],
            ]
            assert not all(nb6)
        again = topological_erosion(out)
        assert np.array_equal(again.bits, out.bits)  # idempotent

    def test_signature_preserved_on_random_wc_masks(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            wc = make_well_composed(mask_of(random_mask(rng, max_dim=10)))
            out = topological_erosion(wc)
            assert betti_numbers(wc) == betti_numbers(out)
            assert np.all(wc.bits[out.bits])


class TestDilatePreserving:
    def test_topology_kept(self):
        src = chebyshev_torus()
        fat = dilate_preserving(src, passes=2)
        assert betti_numbers(fat) == betti_numbers(src)
        assert np.all(fat.bits[src.bits])


class TestCorrectToBall:
    def test_solid_cube_unchanged(self):
        src = solid((5, 5, 5))
        out = correct_to_ball(src)
        assert np.array_equal(out.bits, src.bits)

    def test_hollow_shell_becomes_ball(self):
        arr = np.ones((7, 7, 7), dtype=bool)
        arr[2:5, 2:5, 2:5] = False
        out = correct_to_ball(mask_of(arr))
        assert betti_numbers(out).as_tuple() == (1, 0, 0)

    def test_two_blobs_single_component(self):
        arr = np.zeros((9, 5, 5), dtype=bool)
        arr[0:3, 1:4, 1:4] = True
        arr[6:9, 1:4, 1:4] = True
        out = correct_to_ball(mask_of(arr))
        assert betti_numbers(out).as_tuple() == (1, 0, 0)
        assert np.all(arr[out.bits])  # output within the input mask

    def test_torus_cut(self):
        src = chebyshev_torus()
        out = correct_to_ball(src)
        assert betti_numbers(out).as_tuple() == (1, 0, 0)

    def test_empty_mask_rejected(self):
        with pytest.raises(DataError):
            correct_to_ball(mask_of(np.zeros((3, 3, 3), dtype=bool)))
