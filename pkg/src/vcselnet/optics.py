"""Gaussian-beam propagation, LoS channel gains and the receiver noise model."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .scenario import Scenario

ELECTRON_CHARGE = 1.602176634e-19


class ApertureMode(enum.Enum):
    LITERAL = "literal"
    PHYSICAL = "physical"


def rayleigh_range(waist, wavelength, refractive_index=1.0):
    """Rayleigh range ``pi * W0**2 * n / lambda`` in metres."""
    waist = np.asarray(waist, dtype=float)
    if np.any(waist <= 0) or wavelength <= 0 or refractive_index <= 0:
        raise ValueError("waist, wavelength and refractive index must be positive")
    out = np.pi * waist**2 * refractive_index / wavelength
    return float(out) if out.ndim == 0 else out


def beam_radius(waist, distance, rayleigh):
    """Beam radius ``W_d`` after propagating ``distance`` from the waist."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance < 0):
        raise ValueError("distance must be non-negative")
    out = waist * np.sqrt(1.0 + (distance / rayleigh) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def beam_intensity(power, radius, r):
    """Transverse intensity (W/m^2) at radial offset ``r`` for beam radius ``radius``."""
    if np.any(np.asarray(radius) <= 0):
        raise ValueError("beam radius must be positive")
    r = np.asarray(r, dtype=float)
    out = 2.0 * power / (np.pi * radius**2) * np.exp(-2.0 * r**2 / radius**2)
    return float(out) if out.ndim == 0 else out


def aperture_power(power, radius, area, mode=ApertureMode.PHYSICAL):
    """Power collected by an on-axis photodiode of area ``area``.

    ``LITERAL`` evaluates ``P[1 - exp(-2 (A/(2 pi W))^2)]`` verbatim,
    which mixes an area with a length. ``PHYSICAL`` integrates the Gaussian
    over a disc of equal area, radius ``sqrt(A/pi)``.
    """
    mode = ApertureMode(mode)
    if area <= 0 or radius <= 0:
        raise ValueError("area and beam radius must be positive")
    if mode is ApertureMode.LITERAL:
        x = area / (2.0 * np.pi * radius)
    else:
        x = np.sqrt(area / np.pi) / radius
    return float(power * -np.expm1(-2.0 * x**2))


def channel_matrices(scenario: Scenario) -> np.ndarray:
    """LoS gains for every user, photodiode and VCSEL.

    Returns
    -------
    ndarray, shape (K, M, L)
        ``H[k, m, l]`` is received optical power on face ``m`` of user ``k``
        per watt emitted by VCSEL ``l``: beam intensity at the face times the
        face area times the cosine of incidence, zero outside the FoV.
    """
    users = scenario.users
    if not users:
        return np.zeros((0, 0, scenario.num_vcsels))
    rx = users[0].receiver
    if any(u.receiver is not rx and u.receiver != rx for u in users):
        return np.concatenate(
            [channel_matrices(Scenario(scenario.room, scenario.vcsels, (u,))) for u in users]
        )
    waist = np.array([v.beam_waist for v in scenario.vcsels])
    rayleigh = np.array([rayleigh_range(v.beam_waist, v.wavelength) for v in scenario.vcsels])
    return _kernels.los_gains(
        np.ascontiguousarray(scenario.user_positions),
        np.ascontiguousarray(rx.face_offsets),
        np.ascontiguousarray(rx.orientations),
        np.ascontiguousarray(scenario.vcsel_positions),
        waist,
        rayleigh,
        float(rx.photodiode_area),
        float(np.cos(np.radians(rx.fov_half_angle))),
    )


def los_gain(scenario: Scenario, vcsel_index: int, user_index: int, photodiode: int) -> float:
    """Single entry of :func:`channel_matrices` (0-based indices)."""
    sub = Scenario(scenario.room, scenario.vcsels, (scenario.users[user_index],))
    return float(channel_matrices(sub)[0, photodiode, vcsel_index])


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise: shot + thermal floor plus laser RIN from interferers.

    ``thermal_psd`` in A^2/Hz, ``rin`` linear in 1/Hz.
    """

    bandwidth: float = 5e9
    responsivity: float = 0.53
    thermal_psd: float = 1e-22
    rin: float = 10 ** (-155 / 10)

    def __post_init__(self):
        if min(self.bandwidth, self.responsivity, self.thermal_psd, self.rin) < 0:
            raise ValueError("noise parameters must be non-negative")

    def floor(self, received_power):
        """Shot plus thermal variance (A^2) for a given incident optical power."""
        return (
            2.0 * ELECTRON_CHARGE * self.responsivity * np.asarray(received_power) * self.bandwidth
            + self.thermal_psd * self.bandwidth
        )


def noise_variance(gains, serving, noise: NoiseModel, powers) -> float:
    """Electrical noise variance on one photodiode.

    Parameters
    ----------
    gains : array_like, shape (L,)
        Gains from every VCSEL to the photodiode in use.
    serving : int or sequence of int
        VCSEL(s) whose signal is wanted; all others add RIN.
    powers : array_like, shape (L,)
        Transmit optical powers; zero for inactive lasers.
    """
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    interferer = np.ones(len(gains), dtype=bool)
    interferer[np.atleast_1d(serving)] = False
    floor = noise.floor(np.dot(gains, powers))
    rin = noise.rin * np.sum((gains[interferer] * noise.responsivity * powers[interferer]) ** 2)
    return float(floor + rin * noise.bandwidth)


def sir(gains, serving: int, powers) -> np.ndarray:
    """Interference-to-signal power ratio of each other VCSEL relative to ``serving``.

    Returns a length-L array with 0 at the serving index.
    """
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    sig = (gains[serving] * powers[serving]) ** 2
    if sig <= 0:
        raise ValueError("serving link has zero gain; user unreachable on this VCSEL")
    out = (gains * powers) ** 2 / sig
    out[serving] = 0.0
    return out


def link_snr(H: np.ndarray, noise: NoiseModel, powers) -> np.ndarray:
    """Interference-free SNR of each (user, VCSEL) link on its best photodiode.

    Shape (K, L), linear. Used to decide connectivity classes.
    """
    powers = np.asarray(powers, dtype=float)
    best = H.max(axis=1)
    best_m = H.argmax(axis=1)
    K, M, L = H.shape
    incident = np.einsum("kml,l->km", H, powers)
    floor = noise.floor(np.take_along_axis(incident, best_m, axis=1))
    return (noise.responsivity * best * powers[None, :]) ** 2 / floor


def dump_channel_csv(H_k: np.ndarray, path) -> None:
    """Write one user's (M, L) gain matrix; row = photodiode, column = VCSEL."""
    H_k = np.atleast_2d(H_k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode"] + [f"vcsel_{l + 1}" for l in range(H_k.shape[1])])
        for m, row in enumerate(H_k):
            w.writerow([m + 1] + [repr(float(x)) for x in row])
