import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topoaug.errors import DataError, GridMismatchError, SchemaError
from topoaug.volume import (
    BinaryMask,
    LabelSchema,
    LabelVolume,
    ScalarVolume,
    compose_labels,
    extract_mask,
)

SCHEMA = LabelSchema(background_label=0, myocardium_label=1, bloodpool_sublabels=(2, 3))


def test_extract_empty_selection():
    vol = LabelVolume(np.zeros((4, 4, 4), dtype=np.uint8))
    mask = extract_mask(vol, {1}, SCHEMA)
    assert mask.popcount == 0


def test_extract_single_voxel():
    data = np.zeros((3, 3, 3), dtype=np.uint8)
    data[1, 2, 0] = 2
    mask = extract_mask(LabelVolume(data), {2}, SCHEMA)
    assert mask.popcount == 1
    assert mask.bits[1, 2, 0]


def test_extract_bloodpool_counts_match_linear_scan():
    rng = np.random.default_rng(5)
    data = rng.integers(0, 4, size=(9, 7, 6)).astype(np.uint8)
    vol = LabelVolume(data)
    mask = extract_mask(vol, SCHEMA.bloodpool_sublabels, SCHEMA)
    # independent linear scan
    count = 0
    for v in data.ravel():
        if v in (2, 3):
            count += 1
    assert mask.popcount == count


def test_extract_unknown_label_rejected():
    vol = LabelVolume(np.zeros((2, 2, 2), dtype=np.uint8))
    with pytest.raises(SchemaError):
        extract_mask(vol, {7}, SCHEMA)


def test_compose_single_full_mask():
    full = BinaryMask(np.ones((3, 3, 3), dtype=bool))
    out = compose_labels([(full, 1)])
    assert np.all(out.data == 1)


def test_compose_disjoint_masks_keep_counts():
    a = np.zeros((4, 4, 4), dtype=bool)
    b = np.zeros((4, 4, 4), dtype=bool)
    a[:2] = True
    b[3:] = True
    out = compose_labels([(BinaryMask(a), 2), (BinaryMask(b), 3)])
    assert int((out.data == 2).sum()) == int(a.sum())
    assert int((out.data == 3).sum()) == int(b.sum())


def test_compose_overlap_later_wins_against_reference_loop():
    rng = np.random.default_rng(11)
    a = rng.random((5, 4, 3)) < 0.5
    b = rng.random((5, 4, 3)) < 0.5
    out = compose_labels([(BinaryMask(a), 2), (BinaryMask(b), 3)], background_label=0)
    for x in range(5):
        for y in range(4):
            for z in range(3):
                if b[x, y, z]:
                    expect = 3
                elif a[x, y, z]:
                    expect = 2
                else:
                    expect = 0
                assert out.data[x, y, z] == expect


def test_compose_dims_mismatch():
    a = BinaryMask(np.zeros((3, 3, 3), dtype=bool))
    b = BinaryMask(np.zeros((3, 3, 4), dtype=bool))
    with pytest.raises(GridMismatchError):
        compose_labels([(a, 1), (b, 2)])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_extract_compose_roundtrip(seed):
    rng = np.random.default_rng(seed)
    data = rng.integers(0, 4, size=(6, 5, 4)).astype(np.uint8)
    vol = LabelVolume(data)
    parts = [
        (extract_mask(vol, {lab}, SCHEMA), lab)
        for lab in (1, 2, 3)
    ]
    rebuilt = compose_labels(parts, background_label=0)
    assert np.array_equal(rebuilt.data, vol.data)


def test_volumes_are_immutable():
    data = np.zeros((2, 2, 2), dtype=np.uint8)
    vol = LabelVolume(data)
    with pytest.raises(ValueError):
        vol.data[0, 0, 0] = 1
    data[0, 0, 0] = 7  # caller's array stays independent
    assert vol.data[0, 0, 0] == 0


def test_scalar_volume_rejects_nan_and_bad_probability():
    bad = np.zeros((2, 2, 2))
    bad[0, 0, 0] = np.nan
    with pytest.raises(DataError):
        ScalarVolume(bad)
    with pytest.raises(DataError):
        ScalarVolume(np.full((2, 2, 2), 1.5), is_probability=True)


def test_schema_validation():
    with pytest.raises(SchemaError):
        LabelSchema(background_label=0, myocardium_label=0, bloodpool_sublabels=(1,))
    with pytest.raises(SchemaError):
        LabelSchema(background_label=0, myocardium_label=1, bloodpool_sublabels=())
    s = LabelSchema.from_dict(SCHEMA.to_dict())
    assert s == SCHEMA


def test_spacing_must_be_positive():
    with pytest.raises(DataError):
        LabelVolume(np.zeros((2, 2, 2), dtype=np.uint8), spacing=(1.0, 0.0, 1.0))
