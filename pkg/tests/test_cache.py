import numpy as np
import pytest

from greenlab.cache import (
    CacheMismatch,
    ball_cache_key,
    ball_cached,
    green_cached,
    load_ball,
    load_green,
    save_ball,
    save_green,
)
from greenlab.green import green_truncated
from greenlab.walks import build_ball, lazy_srw, srw
from greenlab.words import free_group

F2 = free_group(2)


def test_ball_roundtrip(tmp_path):
    bt = build_ball(F2, srw(F2), 5)
    path = tmp_path / "ball.npz"
    save_ball(bt, path)
    bt2 = load_ball(path, F2, srw(F2), 5)
    assert bt2.n == bt.n
    assert np.array_equal(bt2.offsets, bt.offsets)
    assert bt2.word(17) == bt.word(17)
    # the reloaded table must solve identically
    u1 = green_truncated(bt, 0.9).u
    u2 = green_truncated(bt2, 0.9).u
    assert np.array_equal(u1, u2)


def test_ball_mismatch_detected(tmp_path):
    bt = build_ball(F2, srw(F2), 5)
    path = tmp_path / "ball.npz"
    save_ball(bt, path)
    with pytest.raises(CacheMismatch):
        load_ball(path, F2, srw(F2), 6)          # wrong radius
    with pytest.raises(CacheMismatch):
        load_ball(path, F2, lazy_srw(F2, 0.5), 5)  # wrong walk


def test_green_roundtrip(tmp_path):
    bt = build_ball(F2, srw(F2), 5)
    solve = green_truncated(bt, 0.8)
    path = tmp_path / "green.npz"
    save_green(solve, path)
    re = load_green(path, bt, 0.8)
    assert np.array_equal(re.u, solve.u)
    assert re.residual == solve.residual
    with pytest.raises(CacheMismatch):
        load_green(path, bt, 0.9)


def test_cached_wrappers(tmp_path):
    bt1 = ball_cached(F2, srw(F2), 4, root=tmp_path)
    key = ball_cache_key(F2, srw(F2), 4)
    assert (tmp_path / key).exists()
    bt2 = ball_cached(F2, srw(F2), 4, root=tmp_path)   # hits the cache
    assert bt2.n == bt1.n
    g1 = green_cached(bt1, 0.7, root=tmp_path)
    g2 = green_cached(bt1, 0.7, root=tmp_path)
    assert np.array_equal(g1.u, g2.u)


def test_env_root(tmp_path, monkeypatch):
    monkeypatch.setenv("GREENLAB_CACHE", str(tmp_path))
    ball_cached(F2, srw(F2), 3)
    assert any(tmp_path.iterdir())
