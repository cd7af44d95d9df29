import numpy as np
import pytest

from smsdrift.frames import (BinningError, FrameStack, LocalizationTable, bin_localizations,
                             raw_to_bin, superimpose)


def test_single_record():
    st = bin_localizations(LocalizationTable([0.5], [0.5], [1], 1), 1, 2)
    assert st.data.shape == (1, 2, 2)
    assert st.data[0, 1, 1] == 1 and st.data.sum() == 1
    np.testing.assert_array_equal(st.counts, [1])


def test_empty_table():
    st = bin_localizations(LocalizationTable.empty(4), 4, 8)
    assert not np.any(st.data)
    np.testing.assert_array_equal(st.counts, [0, 0, 0, 0])


def test_twenty_raw_frames_per_histogram():
    b = raw_to_bin(np.arange(1, 40001), 40000, 2000)
    np.testing.assert_array_equal(np.bincount(b), np.full(2000, 20))
    assert b[0] == 0 and b[19] == 0 and b[20] == 1 and b[-1] == 1999


def test_binning_errors():
    tab = LocalizationTable([0.1], [0.1], [1], 10)
    with pytest.raises(BinningError):
        bin_localizations(tab, 20, 8)
    with pytest.raises(BinningError):
        bin_localizations(tab, 3, 8)


def test_rejected_records_are_counted(caplog):
    tab = LocalizationTable([0.1, 1.0, -0.2, 0.3], [0.1, 0.5, 0.5, 0.999], [1, 1, 2, 2], 2)
    st = bin_localizations(tab, 2, 4)
    assert st.n_rejected == 2
    assert st.data.sum() == 2
    np.testing.assert_array_equal(st.counts, [1, 1])


def _random_table(rng, n=500, n_frames=40):
    return LocalizationTable(rng.random(n), rng.random(n), rng.integers(1, n_frames + 1, n), n_frames)


def test_mass_conservation_and_counts(rng):
    tab = _random_table(rng)
    st = bin_localizations(tab, 8, 16)
    assert superimpose(st).sum() == len(tab)
    np.testing.assert_array_equal(st.data.sum(axis=(1, 2)), st.counts)


def test_permutation_invariance(rng):
    tab = _random_table(rng)
    p = rng.permutation(len(tab))
    tab2 = LocalizationTable(tab.x1[p], tab.x2[p], tab.frame[p], tab.n_frames)
    a, b = bin_localizations(tab, 10, 16), bin_localizations(tab2, 10, 16)
    np.testing.assert_array_equal(a.data, b.data)


def test_identity_grouping(rng):
    tab = _random_table(rng, n_frames=12)
    st = bin_localizations(tab, 12, 8)
    np.testing.assert_array_equal(st.counts, np.bincount(tab.frame - 1, minlength=12))


def test_superimpose_examples():
    F = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(superimpose(FrameStack(np.stack([F, F]), [1, 1])), 2 * F)
    assert not np.any(superimpose(FrameStack(np.zeros((3, 4, 4)), [0, 0, 0])))
    data = np.zeros((3, 4, 4))
    data[0, 0, 1] = data[1, 2, 2] = data[2, 3, 0] = 1
    img = superimpose(FrameStack(data, [1, 1, 1]))
    assert img[0, 1] == img[2, 2] == img[3, 0] == 1 and img.sum() == 3


def test_frame_stack_validation():
    with pytest.raises(ValueError):
        FrameStack(np.zeros((2, 3, 4)), [0, 0])
    with pytest.raises(ValueError):
        FrameStack(np.zeros((2, 3, 3)), [0])
