import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcselnet import optics
from vcselnet.config import DESK, PAPER_TABLE1
from vcselnet.scenario import (
    ReceiverConfig,
    Room,
    Scenario,
    User,
    Vcsel,
    build_vcsel_array,
    classify_users,
    preset_mode_orientations,
    sample_users,
)

TEMPLATE = Vcsel(id=0, position=(0, 0, 3.0), optical_power=0.1, beam_waist=5e-6)


def test_room_validation():
    with pytest.raises(ValueError):
        Room(width=0)
    with pytest.raises(ValueError):
        Room(height=1.0, receiver_plane_height=1.0)


def test_vcsel_validation():
    for kw in ({"optical_power": 0}, {"beam_waist": -1}, {"bandwidth": 0}):
        with pytest.raises(ValueError):
            Vcsel(id=1, position=(0, 0, 3), **{"optical_power": 1, "beam_waist": 5e-6, **kw})


def test_single_vcsel_at_ceiling_centre():
    (v,) = build_vcsel_array(Room(), 1, 1, TEMPLATE)
    assert v.position == (2.5, 2.5, 3.0)
    assert v.id == 1


def test_table1_grid_spacing():
    vs = build_vcsel_array(Room(), 4, 6, TEMPLATE)
    pos = np.array([v.position for v in vs])
    assert len(vs) == 24
    assert [v.id for v in vs] == list(range(1, 25))
    xs, ys = np.unique(pos[:, 0]), np.unique(pos[:, 1])
    assert np.diff(xs).min() == pytest.approx(5 / 6)
    assert np.diff(ys).min() == pytest.approx(5 / 4)
    assert np.all(pos[:, 2] == 3.0)


def test_grid_rejects_empty():
    with pytest.raises(ValueError):
        build_vcsel_array(Room(), 0, 3, TEMPLATE)


@pytest.mark.parametrize("rows,cols", [(2, 2), (4, 6), (3, 3)])
def test_grid_mirror_symmetry(rows, cols):
    room = Room()
    pos = np.array([v.position for v in build_vcsel_array(room, rows, cols, TEMPLATE)])
    mirrored = pos.copy()
    mirrored[:, 0] = room.width - mirrored[:, 0]
    key = lambda a: sorted(map(tuple, np.round(a, 12)))
    assert key(mirrored) == key(pos)


def test_compact_pitch_grid():
    vs = build_vcsel_array(Room(), 2, 2, TEMPLATE, pitch=0.1)
    pos = np.array([v.position for v in vs])
    assert np.allclose(pos[:, :2].mean(axis=0), [2.5, 2.5])
    assert np.allclose(np.unique(pos[:, 0]), [2.45, 2.55])


def test_sample_users_deterministic():
    rx = ReceiverConfig(num_photodiodes=4)
    a = sample_users(Room(), 20, 7, rx)
    b = sample_users(Room(), 20, 7, rx)
    assert [u.position for u in a] == [u.position for u in b]


def test_sample_users_mean_near_centre():
    room = Room()
    users = sample_users(room, 1000, 3, ReceiverConfig(num_photodiodes=4))
    pos = np.array([u.position for u in users])
    assert np.all(np.abs(pos[:, :2].mean(axis=0) - 2.5) <= 0.05 * 2.5)
    assert np.all((pos[:, 0] >= 0) & (pos[:, 0] <= 5) & (pos[:, 1] >= 0) & (pos[:, 1] <= 5))
    assert np.all(pos[:, 2] == room.receiver_plane_height)


def test_sample_users_rejects_zero():
    with pytest.raises(ValueError):
        sample_users(Room(), 0, 1, ReceiverConfig(num_photodiodes=4))


def test_orientations_examples():
    up = preset_mode_orientations(1, 0.0)
    assert np.allclose(up, [[0, 0, 1]])
    four = preset_mode_orientations(4, 30.0)
    az = np.degrees(np.arctan2(four[:, 1], four[:, 0])) % 360
    assert np.allclose(az, [0, 90, 180, 270])
    assert np.allclose(np.degrees(np.arccos(four[:, 2])), 30)


@given(st.integers(1, 40), st.floats(0, 89.9), st.floats(-180, 180))
def test_orientations_unit_norm(M, tilt, offset):
    v = preset_mode_orientations(M, tilt, offset)
    assert np.all(np.abs(np.linalg.norm(v, axis=1) - 1) < 1e-12)


def test_receiver_validation():
    with pytest.raises(ValueError):
        ReceiverConfig(num_photodiodes=2, orientations=[[0, 0, 1], [0, 0, 1]])
    with pytest.raises(ValueError):
        ReceiverConfig(num_photodiodes=2, fov_half_angle=0)
    rx = ReceiverConfig(num_photodiodes=3, total_area=15e-6)
    assert rx.photodiode_area == pytest.approx(5e-6)
    rx = ReceiverConfig(num_photodiodes=3, total_area=15e-6, area_is_per_photodiode=True)
    assert rx.photodiode_area == 15e-6


def test_scenario_requires_m_at_least_l():
    room = Room()
    vs = tuple(build_vcsel_array(room, 2, 2, TEMPLATE))
    users = tuple(sample_users(room, 2, 0, ReceiverConfig(num_photodiodes=3)))
    with pytest.raises(ValueError):
        Scenario(room, vs, users)


def test_with_classes():
    sc = DESK.scenario(seed=0)
    tagged = sc.with_classes({1, 3})
    assert [u.connectivity_class.value for u in tagged.users[:3]] == ["full", "partial", "full"]


def test_classify_limits():
    snr = np.array([[3.0, -1.0], [10.0, 12.0], [-np.inf, 5.0]])
    f, p = classify_users(snr, -np.inf)
    assert list(f) == [0, 1, 2] and len(p) == 0
    f, p = classify_users(snr, np.inf)
    assert len(f) == 0 and list(p) == [0, 1, 2]
    f, p = classify_users(snr, 0.0)
    assert list(f) == [1] and list(p) == [0, 2]


@settings(max_examples=50)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2), st.integers(0, 2**31))
def test_classify_partition_and_monotonicity(thresholds, seed):
    snr = np.random.default_rng(seed).normal(5, 10, size=(12, 4))
    lo, hi = sorted(thresholds)
    f_lo, p_lo = classify_users(snr, lo)
    f_hi, p_hi = classify_users(snr, hi)
    for f, p in ((f_lo, p_lo), (f_hi, p_hi)):
        assert len(f) + len(p) == 12
        assert not set(f) & set(p)
    assert set(f_hi) <= set(f_lo)


def test_centre_user_is_full_under_symmetric_array():
    cfg = DESK
    room = cfg.room()
    user = User(id=1, position=tuple(room.center), receiver=cfg.receiver())
    sc = Scenario(room, tuple(cfg.vcsels()), (user,))
    snr_db = 10 * np.log10(optics.link_snr(optics.channel_matrices(sc), cfg.noise(), sc.powers))
    assert np.ptp(snr_db) < 1e-6  # all four links look the same from the centre
    f, _ = classify_users(snr_db, snr_db.min() - 1.0)
    assert list(f) == [0]


def test_table1_preset_shape():
    sc = PAPER_TABLE1.scenario()
    assert sc.num_vcsels == 24 and sc.num_users == 20
    assert sc.users[0].receiver.num_photodiodes == 24
