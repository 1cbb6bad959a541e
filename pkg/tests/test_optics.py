import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from vcselnet import optics
from vcselnet.config import DESK, PAPER_TABLE1
from vcselnet.optics import ApertureMode, NoiseModel
from vcselnet.scenario import ReceiverConfig, Room, Scenario, User, Vcsel


def test_rayleigh_range_hand_value():
    zr = optics.rayleigh_range(5e-6, 830e-9)
    assert abs(zr - math.pi * (5e-6) ** 2 / 830e-9) <= 1e-9 * zr
    assert zr == pytest.approx(9.46263e-5, rel=1e-6)


def test_rayleigh_range_scaling_and_errors():
    assert optics.rayleigh_range(10e-6, 830e-9) == pytest.approx(4 * optics.rayleigh_range(5e-6, 830e-9))
    with pytest.raises(ValueError):
        optics.rayleigh_range(0.0, 830e-9)
    with pytest.raises(ValueError):
        optics.rayleigh_range(5e-6, -1.0)


def test_beam_radius():
    zr = optics.rayleigh_range(5e-6, 830e-9)
    assert optics.beam_radius(5e-6, 0.0, zr) == 5e-6
    assert optics.beam_radius(5e-6, zr, zr) == pytest.approx(5e-6 * math.sqrt(2))
    assert optics.beam_radius(5e-6, 2.0, zr) == pytest.approx(0.1057, abs=5e-5)
    with pytest.raises(ValueError):
        optics.beam_radius(5e-6, -1.0, zr)


def test_intensity_profile():
    peak = optics.beam_intensity(1.0, 0.1, 0.0)
    assert peak == pytest.approx(2 / (math.pi * 0.01))
    assert optics.beam_intensity(1.0, 0.1, 0.1) == pytest.approx(peak * math.exp(-2))


@pytest.mark.parametrize("radius", [1e-3, 0.0568, 0.1057, 0.5])
def test_intensity_integrates_to_power(radius):
    assert oracles.gaussian_plane_power(0.1, radius) == pytest.approx(0.1, rel=1e-6)


def test_aperture_power_values():
    p = optics.aperture_power(1.0, 0.1057, 15e-6, ApertureMode.PHYSICAL)
    assert p == pytest.approx(8.55e-4, rel=2e-3)
    a = math.sqrt(15e-6 / math.pi)
    assert p == pytest.approx(oracles.disc_power(1.0, 0.1057, a), rel=1e-9)
    lit = optics.aperture_power(1.0, 0.1057, 15e-6, "literal")
    assert lit == pytest.approx(1 - math.exp(-2 * (15e-6 / (2 * math.pi * 0.1057)) ** 2))


@pytest.mark.parametrize("mode", list(ApertureMode))
def test_aperture_limits(mode):
    assert optics.aperture_power(2.0, 0.1, 1e6, mode) == pytest.approx(2.0)
    assert optics.aperture_power(2.0, 1e9, 1e-6, mode) < 1e-12
    with pytest.raises(ValueError):
        optics.aperture_power(1.0, 0.1, 0.0, mode)


@given(
    st.floats(1e-3, 1.0),
    st.floats(1e-3, 1.0),
    st.floats(1e-8, 1e-6),
    st.sampled_from(list(ApertureMode)),
)
def test_aperture_monotone(w1, w2, area, mode):
    lo, hi = sorted((w1, w2))
    if hi > lo * (1 + 1e-6):
        assert optics.aperture_power(1.0, lo, area, mode) > optics.aperture_power(1.0, hi, area, mode)
        assert optics.aperture_power(1.0, lo, area, mode) < optics.aperture_power(1.0, lo, area * 1.01, mode)


def _one_user(pos, normal=(0, 0, 1), fov=45.0, area=15e-6, vpos=(2.5, 2.5, 3.0)):
    room = Room()
    v = Vcsel(id=1, position=vpos, optical_power=0.1, beam_waist=5e-6)
    rx = ReceiverConfig(num_photodiodes=1, total_area=area, fov_half_angle=fov, orientations=[normal])
    return Scenario(room, (v,), (User(1, pos, rx),))


def test_gain_under_vcsel_matches_aperture_power():
    sc = _one_user((2.5, 2.5, 0.85))
    g = optics.los_gain(sc, 0, 0, 0)
    zr = optics.rayleigh_range(5e-6, 830e-9)
    w = optics.beam_radius(5e-6, 2.15, zr)
    assert g == pytest.approx(optics.aperture_power(1.0, w, 15e-6), rel=1e-2)


def test_gain_outside_fov_is_zero():
    sc = _one_user((0.5, 2.5, 0.85), fov=10.0)
    assert optics.los_gain(sc, 0, 0, 0) == 0.0


def test_gain_gaussian_ratio():
    d = 3.0 - 0.85
    w = optics.beam_radius(5e-6, d, optics.rayleigh_range(5e-6, 830e-9))
    r = 0.05
    # tilt the face toward the source so the cosine factor is identical
    g = []
    for off in (r, 2 * r):
        n = np.array([off, 0.0, d]) / math.hypot(off, d)
        g.append(optics.los_gain(_one_user((2.5 - off, 2.5, 0.85), tuple(n)), 0, 0, 0))
    assert g[1] / g[0] == pytest.approx(math.exp(-2 * (2 * r) ** 2 / w**2) / math.exp(-2 * r**2 / w**2))


def test_channel_matrix_range_and_shape():
    for cfg in (DESK, PAPER_TABLE1):
        sc = cfg.scenario(seed=4)
        H = optics.channel_matrices(sc)
        assert H.shape == (sc.num_users, sc.users[0].receiver.num_photodiodes, sc.num_vcsels)
        assert np.all((H >= 0) & (H <= 1))


def test_full_users_have_full_rank_channels(desk_links):
    conds = [np.linalg.cond(H[k]) for _, H, link in desk_links for k in link.full]
    assert len(conds) > 50
    assert max(conds) < 1e8


def test_noise_variance_terms():
    nm = NoiseModel(bandwidth=5e9, responsivity=0.5, thermal_psd=1e-22, rin=1e-15)
    g = np.array([1e-3, 2e-4, 2e-4])
    p = np.array([0.1, 0.1, 0.1])
    floor = nm.floor(g @ p)
    silent = optics.noise_variance(g, 0, nm, np.array([0.1, 0.0, 0.0]))
    assert silent == pytest.approx(nm.floor(g[0] * 0.1))
    c2 = (2e-4 * 0.5 * 0.1) ** 2
    assert optics.noise_variance(g, 0, nm, p) == pytest.approx(floor + 2 * c2 * 1e-15 * 5e9)
    no_rin = NoiseModel(bandwidth=5e9, responsivity=0.5, thermal_psd=1e-22, rin=0.0)
    assert optics.noise_variance(g, 0, no_rin, p) == pytest.approx(no_rin.floor(g @ p))
    q = 1.602176634e-19
    assert floor == pytest.approx(2 * q * 0.5 * (g @ p) * 5e9 + 1e-22 * 5e9)


def test_sir():
    p = np.ones(3)
    a = optics.sir([0.5, 0.0, 0.5], 0, p)
    assert list(a) == [0.0, 0.0, 1.0]
    with pytest.raises(ValueError):
        optics.sir([0.0, 1.0, 1.0], 0, p)


def test_dump_channel_csv(tmp_path):
    H = np.arange(6, dtype=float).reshape(2, 3)
    path = tmp_path / "h.csv"
    optics.dump_channel_csv(H, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "mode,vcsel_1,vcsel_2,vcsel_3"
    assert np.allclose([float(x) for x in lines[2].split(",")[1:]], H[1])
