import math

import numpy as np
import pytest

import fusskit


def unit(n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    return x / np.linalg.norm(x)


def test_loss_hand_values():
    y = unit(1000, 0)
    assert fusskit.loss_snr(y, y, tau=1e-3) == pytest.approx(-30.0, abs=1e-9)
    assert fusskit.loss_inactive(y, np.zeros_like(y), tau=1e-3) == pytest.approx(-30.0, abs=1e-9)


def test_si_snr_cap_and_scale_invariance():
    rng = np.random.default_rng(1)
    y = 0.1 * rng.standard_normal(160000)
    assert fusskit.si_snr_stabilized(y, y).value_db == pytest.approx(80.0, abs=0.01)
    e = y + 0.3 * rng.standard_normal(y.size)
    a = fusskit.si_snr_scaled(y, e).value_db
    b = fusskit.si_snr_scaled(y, 7.0 * e).value_db
    assert a == pytest.approx(b, abs=1e-9)


def test_mixture_consistency_sums_to_mixture():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(256)
    sources = [rng.standard_normal(256) for _ in range(3)]
    out = fusskit.mixture_consistency(sources, x)
    np.testing.assert_allclose(sum(out), x, atol=1e-12)


def test_pit_loss_finds_identity_for_matching_estimates():
    rng = np.random.default_rng(3)
    refs = [rng.standard_normal(512) for _ in range(2)]
    mixture = refs[0] + refs[1]
    ests = [refs[1], np.zeros(512), refs[0], np.zeros(512)]
    result = fusskit.pit_loss(refs, ests, mixture)
    assert result["best_permutation"][0] == 1
    assert result["best_permutation"][2] == 0
    assert result["num_active"] == 2


def test_room_and_rir():
    room = fusskit.sample_room(7, 4)
    assert 3.0 <= room.width <= 7.0
    assert len(room.source_positions) == 4
    rir = fusskit.image_method_rir(room, 0, rir_length=0.3)
    assert rir.shape == (4800,)
    d = math.dist(room.mic_position, room.source_positions[0])
    assert abs(int(np.argmax(np.abs(rir))) - d / 343.0 * 16000) <= 17


def test_overlap_and_errors(tmp_path):
    t = np.arange(16000) / 16000.0
    a = np.sin(2 * np.pi * 440 * t)
    b = np.sin(2 * np.pi * 660 * t)
    stats = fusskit.overlap_stats([a, b])
    assert stats["percent"][2] == pytest.approx(100.0)
    fusskit.write_wav(tmp_path / "a.wav", a, 16000)
    back, sr = fusskit.read_wav(tmp_path / "a.wav")
    assert sr == 16000 and np.max(np.abs(back - a)) < 1e-6
    with pytest.raises(fusskit.FussError):
        fusskit.read_wav(tmp_path / "missing.wav")
