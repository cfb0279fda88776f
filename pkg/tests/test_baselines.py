import numpy as np
import pytest

from adaradar.baselines import (CfarConfig, CfarFrame, cfar_decode, cfar_detect, cfar_encode, iv_decode,
                                iv_encode, iv_value_bpp, ring_mean)
from adaradar.codec import decode_frame, encode_frame, kept_count
from adaradar.errors import ShapeError
from adaradar.metrics import snr_db
from adaradar.tensor import SceneSpec, Target, generate_scene

from conftest import random_tensor, sparse_scene


def test_iv_lossless_at_full_budget(rng):
    x = random_tensor(rng, (2, 16, 16))
    np.testing.assert_array_equal(iv_decode(iv_encode(x, 8, 64)).data, x.data)


def test_iv_bit_rate():
    f = iv_encode(random_tensor(np.random.default_rng(0), (2, 8, 8)), 8, kept_count(8, 12))
    assert f.K == 5 and round(iv_value_bpp(12), 2) == 2.67
    assert f.value_bpp == 32 * 5 / 64


def test_iv_keeps_largest(rng):
    x = random_tensor(rng, (2, 8, 8))
    y = iv_decode(iv_encode(x, 8, 3)).data
    kept = np.abs(x.data.reshape(2, -1))
    for c in range(2):
        nz = np.flatnonzero(y[c])
        assert len(nz) == 3
        assert kept[c, nz].min() >= np.sort(kept[c])[-3]


def test_iv_budget_bounds(rng):
    with pytest.raises(ValueError):
        iv_encode(random_tensor(rng, (2, 8, 8)), 8, 0)


@pytest.mark.parametrize("seed", range(5))
def test_spectral_beats_index_value_with_clutter(seed):
    x, _ = sparse_scene(seed, clutter=3.0)
    r = 16.0
    spectral = snr_db(x, decode_frame(encode_frame(x, r, 16, 64)))
    iv = snr_db(x, iv_decode(iv_encode(x, 64, kept_count(64, r))))
    assert spectral > iv


def test_cfar_constant_map():
    assert not cfar_detect(np.full((32, 32), 5.0), CfarConfig(thd=1.01)).any()


def test_cfar_single_impulse():
    p = np.ones((40, 40))
    p[17, 23] = 1e6
    m = cfar_detect(p, CfarConfig(9, 3, 10 ** 0.5))
    assert m.sum() == 1 and m[17, 23]


def test_cfar_ring_mean_by_brute_force(rng):
    p = rng.random((25, 25))
    rm = ring_mean(p, 4, 1)
    for i, j in [(0, 0), (12, 12), (24, 3), (5, 20)]:
        cells = [p[a, b] for a in range(25) for b in range(25)
                 if max(abs(a - i), abs(b - j)) <= 4 and max(abs(a - i), abs(b - j)) > 1]
        assert rm[i, j] == pytest.approx(np.mean(cells))


def test_cfar_threshold_monotone():
    x, _ = sparse_scene(7)
    counts = [cfar_detect(x.power(), CfarConfig(thd=t)).sum() for t in (10 ** 0.05, 10 ** 0.2, 10 ** 0.5)]
    assert counts[0] >= counts[1] >= counts[2]


def test_cfar_window_larger_than_map():
    with pytest.raises(ShapeError):
        cfar_detect(np.ones((10, 10)), CfarConfig(9, 3))


def test_cfar_config_validation():
    with pytest.raises(ValueError):
        CfarConfig(window=3, guard=3)


def test_cfar_no_detections_is_empty():
    x, _ = generate_scene(SceneSpec((), 0.0, (2, 32, 32)))
    f = cfar_encode(x)
    assert f.values.size == 0 and f.value_bpp == 0.0
    assert not cfar_decode(f).data.any()


def test_cfar_all_flagged_rate():
    f = CfarFrame(np.ones((4, 4), bool), np.zeros((2, 16), np.float32), 2)
    assert f.value_bpp == 32.0 and f.compression_ratio == 1.0


def test_cfar_round_trip_keeps_flagged_cells():
    x, _ = generate_scene(SceneSpec((Target(20, 20, 100.0),), 1.0, (2, 48, 48), seed=3))
    f = cfar_encode(x)
    y = cfar_decode(f)
    np.testing.assert_array_equal(y.data[:, f.mask], x.data[:, f.mask])
    assert not y.data[:, ~f.mask].any()


def test_index_value_wins_on_bare_point_targets():
    # compact targets on white noise are sparse in space, not in frequency
    x, _ = sparse_scene(0)
    r = 16.0
    spectral = snr_db(x, decode_frame(encode_frame(x, r, 16, 64)))
    assert snr_db(x, iv_decode(iv_encode(x, 64, kept_count(64, r)))) > spectral


def test_spectral_beats_cfar_at_matched_budget():
    x, _ = sparse_scene(5, clutter=3.0)
    f = cfar_encode(x, CfarConfig(thd=10 ** 0.5))
    r = 1.0 / f.flagged_fraction
    spectral = snr_db(x, decode_frame(encode_frame(x, min(r, 4096), 16, 64)))
    assert spectral > snr_db(x, cfar_decode(f))
