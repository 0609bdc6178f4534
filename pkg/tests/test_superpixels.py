import numpy as np
import pytest

from fishnav.errors import InvalidInputError
from fishnav.superpixels import region_adjacency, superpixel_segment


def test_uniform_image_keeps_grid():
    img = np.full((120, 160, 3), 128, dtype=np.uint8)
    spx = superpixel_segment(img, target_regions=100, seed=0)
    assert 85 <= spx.n_regions <= 115
    assert spx.counts.max() < 2.5 * spx.counts.mean()


def test_two_tone_regions_do_not_straddle():
    img = np.zeros((120, 160, 3), dtype=np.uint8)
    img[:, :77] = (200, 40, 40)
    img[:, 77:] = (40, 60, 200)
    spx = superpixel_segment(img, target_regions=100, seed=0)
    left = np.zeros(img.shape[:2], dtype=bool)
    left[:, :77] = True
    for rid in range(spx.n_regions):
        sel = spx.labels == rid
        assert min((sel & left).sum(), (sel & ~left).sum()) <= 1


def test_labels_are_dense_and_connected():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 255, size=(60, 80, 3)).astype(np.uint8)
    spx = superpixel_segment(img, target_regions=50, seed=1)
    assert set(np.unique(spx.labels)) == set(range(spx.n_regions))
    from skimage.measure import label
    for rid in range(spx.n_regions):
        assert label(spx.labels == rid, connectivity=1).max() == 1
    assert spx.counts.sum() == img.shape[0] * img.shape[1]


def test_deterministic():
    img = np.random.default_rng(2).integers(0, 255, size=(60, 80, 3)).astype(np.uint8)
    a = superpixel_segment(img, 40, seed=5)
    b = superpixel_segment(img, 40, seed=5)
    assert np.array_equal(a.labels, b.labels)


def test_adjacency_is_symmetric():
    lab = np.array([[0, 0, 1], [2, 2, 1], [2, 3, 3]])
    adj = region_adjacency(lab, 4)
    assert list(adj[0]) == [1, 2] and list(adj[3]) == [1, 2]
    for i, nbs in enumerate(adj):
        for j in nbs:
            assert i in adj[j]


def test_tiny_image_rejected():
    with pytest.raises(InvalidInputError):
        superpixel_segment(np.zeros((1, 5, 3), dtype=np.uint8), 2)
